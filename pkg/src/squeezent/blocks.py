"""Block-diagonal representation of permutation- and z-rotation-invariant qubit states.

An N-qubit density matrix that commutes with every particle permutation and
with all rotations about the z axis is fixed by one nonnegative coefficient
per collective-spin cell (J, Jz).  Each coefficient is the weight carried by
every one of the mu_J degenerate copies of the spin-J multiplet, so the trace
condition reads  sum_J mu_J sum_Jz alpha[J, Jz] = 1.

Sectors are keyed by the integer 2J (half-integer spin for odd N stays
exact); within a sector coefficients are stored with Jz ascending.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError

# Trace must hold to TRACE_TOL; inputs off by up to RENORM_TOL are rescaled.
TRACE_TOL = 1e-12
RENORM_TOL = 1e-9
# Coefficients below FLUSH_TOL are flushed to zero (denormal drag), and
# sigma-support smaller than SUPPORT_TOL is ignored in mixing-parameter ratios.
FLUSH_TOL = 1e-300
SUPPORT_TOL = 1e-15
_NEG_CLAMP = 1e-12


def sector_two_j_values(n: int) -> list[int]:
    """All 2J values occurring for n qubits (same parity as n, 0 <= 2J <= n)."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    return list(range(n % 2, n + 1, 2))


def _check_sector(n: int, two_j: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    if not 0 <= two_j <= n or (n - two_j) % 2 != 0:
        raise ValueError(f"invalid sector 2J={two_j} for n={n} qubits")


def multiplicity(n: int, two_j: int) -> int:
    """Number of spin-J multiplet copies: C(n, n/2-J) - C(n, n/2-J-1)."""
    _check_sector(n, two_j)
    k = (n - two_j) // 2
    return math.comb(n, k) - (math.comb(n, k - 1) if k >= 1 else 0)


def _multiplicity_f(n: int, two_j: int) -> float:
    try:
        return float(multiplicity(n, two_j))
    except OverflowError as exc:
        raise CapabilityError(
            f"multiplicities for n={n} do not fit double precision; "
            "use the log-space thermal routines instead"
        ) from exc


def two_jz_values(two_j: int) -> np.ndarray:
    """Jz values of a spin-J multiplet (ascending), in units of hbar."""
    return np.arange(-two_j, two_j + 1, 2) / 2.0


@dataclass(frozen=True)
class SectorIndex:
    """A (2J, n) pair labelling one collective-spin sector."""

    two_j: int
    n: int

    def __post_init__(self) -> None:
        _check_sector(self.n, self.two_j)

    @property
    def j(self) -> float:
        return self.two_j / 2.0

    @property
    def multiplicity(self) -> int:
        return multiplicity(self.n, self.two_j)


@dataclass
class BlockDiagonalState:
    """Coefficient table alpha[2J] -> array over Jz (ascending), trace one.

    Values are treated as immutable after construction; operations return
    new instances.
    """

    n: int
    alpha: dict[int, np.ndarray]

    def __post_init__(self) -> None:
        expected = sector_two_j_values(self.n)
        if sorted(self.alpha) != expected:
            raise ValueError(
                f"sector table must cover exactly 2J in {expected}, "
                f"got {sorted(self.alpha)}"
            )
        cleaned: dict[int, np.ndarray] = {}
        for two_j in expected:
            a = np.array(self.alpha[two_j], dtype=float)
            if a.shape != (two_j + 1,):
                raise ValueError(
                    f"sector 2J={two_j} needs {two_j + 1} coefficients, "
                    f"got shape {a.shape}"
                )
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite coefficient in sector 2J={two_j}")
            if a.min(initial=0.0) < -_NEG_CLAMP:
                raise ValueError(
                    f"negative coefficient {a.min()} in sector 2J={two_j}"
                )
            np.clip(a, 0.0, None, out=a)
            a[a < FLUSH_TOL] = 0.0
            cleaned[two_j] = a
        tr = sum(
            _multiplicity_f(self.n, two_j) * a.sum() for two_j, a in cleaned.items()
        )
        err = abs(tr - 1.0)
        if err > RENORM_TOL:
            raise ValueError(f"trace {tr} is not one (error {err:.3e})")
        if err > TRACE_TOL:
            for a in cleaned.values():
                a /= tr
        self.alpha = cleaned

    def trace(self) -> float:
        return sum(
            _multiplicity_f(self.n, two_j) * a.sum()
            for two_j, a in self.alpha.items()
        )

    def cell(self, two_j: int, two_jz: int) -> float:
        """Coefficient of the (J, Jz) cell, addressed by 2J and 2Jz."""
        _check_sector(self.n, two_j)
        if abs(two_jz) > two_j or (two_j - two_jz) % 2 != 0:
            raise ValueError(f"invalid 2Jz={two_jz} for 2J={two_j}")
        return float(self.alpha[two_j][(two_jz + two_j) // 2])

    def copy(self) -> "BlockDiagonalState":
        return BlockDiagonalState(
            self.n, {k: v.copy() for k, v in self.alpha.items()}
        )

    # -- JSON wire format ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "N": self.n,
            "sectors": [
                {"twoJ": two_j, "alpha": [float(x) for x in self.alpha[two_j]]}
                for two_j in sector_two_j_values(self.n)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, payload: dict) -> "BlockDiagonalState":
        alpha = {
            int(sec["twoJ"]): np.array(sec["alpha"], dtype=float)
            for sec in payload["sectors"]
        }
        return cls(int(payload["N"]), alpha)

    @classmethod
    def from_json(cls, text: str) -> "BlockDiagonalState":
        return cls.from_json_dict(json.loads(text))


@dataclass
class MomentSummary:
    """First and symmetrized second moments of the collective spin.

    mean    -- (<Jx>, <Jy>, <Jz>)
    second  -- 3x3 symmetric matrix of (1/2)<Jk Jl + Jl Jk>
    """

    mean: np.ndarray
    second: np.ndarray
    n: int

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float).reshape(3)
        self.second = np.asarray(self.second, dtype=float).reshape(3, 3)

    @property
    def total_spin_moment(self) -> float:
        """<Jx^2 + Jy^2 + Jz^2>."""
        return float(np.trace(self.second))


def moments_from_blocks(state: BlockDiagonalState) -> MomentSummary:
    """Collective-spin moments of a block-diagonal state.

    z-rotation symmetry forces <Jx> = <Jy> = 0 and kills every off-diagonal
    second moment; the planar second moments follow from the total-spin
    value <J^2> = sum mu alpha J(J+1).
    """
    jz_mean = 0.0
    jz_sq = 0.0
    j_sq = 0.0
    for two_j, a in state.alpha.items():
        mu = _multiplicity_f(state.n, two_j)
        w = mu * a
        jz = two_jz_values(two_j)
        jz_mean += float(w @ jz)
        jz_sq += float(w @ (jz * jz))
        j_sq += float(w.sum()) * (two_j * (two_j + 2)) / 4.0
    planar = 0.5 * (j_sq - jz_sq)
    return MomentSummary(
        mean=np.array([0.0, 0.0, jz_mean]),
        second=np.diag([planar, planar, jz_sq]),
        n=state.n,
    )


def mix(
    states: list[BlockDiagonalState], weights: np.ndarray
) -> BlockDiagonalState:
    """Convex combination of equal-size block states."""
    if not states:
        raise ValueError("need at least one state to mix")
    n = states[0].n
    if any(s.n != n for s in states):
        raise ValueError("cannot mix states of different particle number")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(states),):
        raise ValueError("one weight per state required")
    if w.min(initial=0.0) < -_NEG_CLAMP:
        raise ValueError(f"negative mixing weight {w.min()}")
    if abs(w.sum() - 1.0) > TRACE_TOL:
        raise ValueError(f"weights sum to {w.sum()}, not one")
    alpha = {
        two_j: sum(
            wi * s.alpha[two_j] for wi, s in zip(w, states)
        )
        for two_j in sector_two_j_values(n)
    }
    return BlockDiagonalState(n, alpha)


def two_norm_distance(a: BlockDiagonalState, b: BlockDiagonalState) -> float:
    """Squared Frobenius distance tr (a - b)^2, computed blockwise."""
    if a.n != b.n:
        raise ValueError("states live on different particle numbers")
    total = 0.0
    for two_j in sector_two_j_values(a.n):
        d = a.alpha[two_j] - b.alpha[two_j]
        total += _multiplicity_f(a.n, two_j) * float(d @ d)
    return total


def bsa_mixing_parameter(
    rho: BlockDiagonalState, sigma: BlockDiagonalState
) -> float:
    """Smallest t with rho - (1-t) sigma >= 0, for block-diagonal inputs.

    Both operators are diagonal in the same basis, so the optimum is exact:
    1 - t is the smallest cellwise ratio rho/sigma over the support of sigma
    (cells with sigma below SUPPORT_TOL are treated as unsupported).
    """
    if rho.n != sigma.n:
        raise ValueError("states live on different particle numbers")
    smallest = np.inf
    for two_j in sector_two_j_values(rho.n):
        s = sigma.alpha[two_j]
        mask = s > SUPPORT_TOL
        if mask.any():
            r = rho.alpha[two_j][mask] / s[mask]
            smallest = min(smallest, float(r.min()))
    if not np.isfinite(smallest):
        raise ValueError("sigma has no support")
    return min(1.0, max(0.0, 1.0 - smallest))


# -- common reference states ------------------------------------------------


def maximally_mixed(n: int) -> BlockDiagonalState:
    """Identity/2^n as a block state (alpha = 2^-n in every cell)."""
    if n > 1020:
        raise CapabilityError(f"2^-n underflows double precision for n={n}")
    val = 2.0 ** (-n)
    return BlockDiagonalState(
        n,
        {two_j: np.full(two_j + 1, val) for two_j in sector_two_j_values(n)},
    )


def sector_cell_state(n: int, two_j: int, two_jz: int) -> BlockDiagonalState:
    """Uniform state on one (J, Jz) cell: alpha = 1/mu_J on that cell.

    For mu_J = 1 this is the pure Dicke-type state |J, Jz>.
    """
    _check_sector(n, two_j)
    if abs(two_jz) > two_j or (two_j - two_jz) % 2 != 0:
        raise ValueError(f"invalid 2Jz={two_jz} for 2J={two_j}")
    alpha = {
        tj: np.zeros(tj + 1) for tj in sector_two_j_values(n)
    }
    alpha[two_j][(two_jz + two_j) // 2] = 1.0 / _multiplicity_f(n, two_j)
    return BlockDiagonalState(n, alpha)


def singlet_state(n: int) -> BlockDiagonalState:
    """Uniform mixture over the J = 0 multiplets (even n only)."""
    if n % 2:
        raise ValueError(f"no J=0 sector for odd n={n}")
    return sector_cell_state(n, 0, 0)
