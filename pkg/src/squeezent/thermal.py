"""Fully-connected XXZ model: sector energies, partition function, Gibbs states.

H = (g/N)(Jx^2 + Jy^2) + (g_z/N) Jz^2 + h Jz commutes with J^2 and Jz, so a
thermal state is block-diagonal with cell energies

    E(J, Jz) = g J(J+1)/N - (g - g_z) Jz^2/N + h Jz

obtained from Jx^2 + Jy^2 = J^2 - Jz^2.  Everything here works on flattened
per-cell arrays; log-space weights keep the N ~ 10^3 sweeps stable where the
per-multiplet coefficients themselves would underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .blocks import (
    BlockDiagonalState,
    MomentSummary,
    multiplicity,
    sector_two_j_values,
)
from .errors import CapabilityError
from .schur import N_MAX_DENSE

# T = 0 keeps every cell whose energy sits within this distance of the minimum.
GROUND_DEGENERACY_TOL = 1e-12

# Largest N for which per-multiplet Gibbs coefficients are materialized; the
# multiplicities stop fitting in doubles shortly above this.
N_MAX_BLOCK_STATE = 1000


@dataclass(frozen=True)
class XXZParams:
    """Couplings (g, g_z), field h, and particle number of the model."""

    g: float
    g_z: float
    h: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least two particles, got n={self.n}")


@dataclass
class ThermalPoint:
    """A Gibbs state together with its temperature and log partition function."""

    params: XXZParams
    temperature: float
    log_z: float
    state: BlockDiagonalState


@dataclass(frozen=True)
class _CellTable:
    """Flattened (J, Jz) cell data for one particle number."""

    n: int
    two_j: np.ndarray
    two_jz: np.ndarray
    j_sq: np.ndarray  # J(J+1)
    jz: np.ndarray
    log_mu: np.ndarray
    sector_slices: tuple[tuple[int, int, int], ...]  # (two_j, start, stop)


@lru_cache(maxsize=32)
def _cell_table(n: int) -> _CellTable:
    two_j_list = []
    two_jz_list = []
    log_mu_list = []
    slices = []
    start = 0
    for two_j in sector_two_j_values(n):
        count = two_j + 1
        two_j_list.append(np.full(count, two_j))
        two_jz_list.append(np.arange(-two_j, two_j + 1, 2))
        log_mu_list.append(np.full(count, math.log(multiplicity(n, two_j))))
        slices.append((two_j, start, start + count))
        start += count
    two_j = np.concatenate(two_j_list)
    two_jz = np.concatenate(two_jz_list)
    return _CellTable(
        n=n,
        two_j=two_j,
        two_jz=two_jz,
        j_sq=two_j * (two_j + 2) / 4.0,
        jz=two_jz / 2.0,
        log_mu=np.concatenate(log_mu_list),
        sector_slices=tuple(slices),
    )


def sector_energy(params: XXZParams, two_j: int, two_jz: int) -> float:
    """Energy of every state in the (J, Jz) cell."""
    if not 0 <= two_j <= params.n or (params.n - two_j) % 2:
        raise ValueError(f"invalid sector 2J={two_j} for n={params.n}")
    if abs(two_jz) > two_j or (two_j - two_jz) % 2:
        raise ValueError(f"invalid 2Jz={two_jz} for 2J={two_j}")
    j_sq = two_j * (two_j + 2) / 4.0
    jz = two_jz / 2.0
    return (
        params.g * j_sq / params.n
        - (params.g - params.g_z) * jz * jz / params.n
        + params.h * jz
    )


def _cell_energies(params: XXZParams) -> tuple[_CellTable, np.ndarray]:
    table = _cell_table(params.n)
    energies = (
        params.g * table.j_sq / params.n
        - (params.g - params.g_z) * table.jz**2 / params.n
        + params.h * table.jz
    )
    return table, energies


def partition_function(params: XXZParams, temperature: float) -> float:
    """log Z = log sum_cells mu exp(-E/T), evaluated with the max-shift."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    table, energies = _cell_energies(params)
    return float(logsumexp(table.log_mu - energies / temperature))


def _cell_log_weights(
    params: XXZParams, temperature: float
) -> tuple[_CellTable, np.ndarray, float]:
    """Log of the total probability mu * alpha carried by each cell."""
    table, energies = _cell_energies(params)
    if temperature == 0.0:
        e_min = energies.min()
        mask = energies - e_min <= GROUND_DEGENERACY_TOL
        log_mu = np.where(mask, table.log_mu, -np.inf)
        log_norm = float(logsumexp(log_mu[mask]))
        return table, log_mu - log_norm, log_norm
    scaled = table.log_mu - energies / temperature
    log_z = float(logsumexp(scaled))
    return table, scaled - log_z, log_z


def thermal_moments(
    params: XXZParams, temperature: float
) -> tuple[float, MomentSummary]:
    """(log Z, collective moments) of the Gibbs state, stable for large N.

    Works directly with cell probabilities, so it stays valid for particle
    numbers where per-multiplet coefficients underflow.  At T = 0 the ground
    manifold is mixed uniformly and the returned scalar is the log of the
    ground degeneracy (the T->0 limit of log Z + E_min/T).
    """
    if temperature < 0:
        raise ValueError(f"temperature must be nonnegative, got {temperature}")
    table, log_w, log_z = _cell_log_weights(params, temperature)
    w = np.exp(log_w)
    jz_mean = 0.0 if params.h == 0.0 else float(w @ table.jz)
    jz_sq = float(w @ table.jz**2)
    j_sq = float(w @ table.j_sq)
    planar = 0.5 * (j_sq - jz_sq)
    moments = MomentSummary(
        mean=np.array([0.0, 0.0, jz_mean]),
        second=np.diag([planar, planar, jz_sq]),
        n=params.n,
    )
    return log_z, moments


def gibbs_blocks(params: XXZParams, temperature: float) -> ThermalPoint:
    """Gibbs state as an explicit block-coefficient table.

    T = 0 is the exact limit: uniform weight over all cells within
    GROUND_DEGENERACY_TOL of the minimum energy, each multiplet weighted
    1 / (sum of degenerate multiplicities).
    """
    if temperature < 0:
        raise ValueError(f"temperature must be nonnegative, got {temperature}")
    if params.n > N_MAX_BLOCK_STATE:
        raise CapabilityError(
            f"block coefficients underflow for n={params.n}; "
            "use thermal_moments for sweeps at this size"
        )
    table, log_w, log_z = _cell_log_weights(params, temperature)
    log_alpha = log_w - table.log_mu
    alpha_flat = np.exp(log_alpha)
    alpha = {}
    for two_j, start, stop in table.sector_slices:
        alpha[two_j] = alpha_flat[start:stop]
    state = BlockDiagonalState(params.n, alpha)
    return ThermalPoint(
        params=params, temperature=temperature, log_z=log_z, state=state
    )


def thermal_energy(params: XXZParams, temperature: float) -> float:
    """<H> at temperature T, from the cell probabilities directly."""
    table, log_w, _ = _cell_log_weights(params, temperature)
    w = np.exp(log_w)
    energies = (
        params.g * table.j_sq / params.n
        - (params.g - params.g_z) * table.jz**2 / params.n
        + params.h * table.jz
    )
    return float(w @ energies)


# -- dense reference ---------------------------------------------------------


def collective_operators(n: int, n_max: int = N_MAX_DENSE) -> tuple[np.ndarray, ...]:
    """Dense collective (Jx, Jy, Jz) built from single-qubit spin halves."""
    if n > n_max:
        raise CapabilityError(f"dense operators for n={n} exceed n_max={n_max}")
    dim = 2**n
    jx = np.zeros((dim, dim), dtype=complex)
    jy = np.zeros((dim, dim), dtype=complex)
    jz = np.zeros((dim, dim), dtype=complex)
    sx = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
    sy = np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex)
    sz = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)
    for site in range(n):
        left = np.eye(2**site)
        right = np.eye(2 ** (n - site - 1))
        jx += np.kron(np.kron(left, sx), right)
        jy += np.kron(np.kron(left, sy), right)
        jz += np.kron(np.kron(left, sz), right)
    return jx, jy, jz


def dense_hamiltonian(params: XXZParams, n_max: int = N_MAX_DENSE) -> np.ndarray:
    """Full 2^n Hamiltonian matrix (real symmetric)."""
    jx, jy, jz = collective_operators(params.n, n_max=n_max)
    h = (
        (params.g / params.n) * (jx @ jx + jy @ jy)
        + (params.g_z / params.n) * (jz @ jz)
        + params.h * jz
    )
    assert np.abs(h.imag).max() < 1e-12
    return np.real(h)


# -- closed-form large-N bounds ----------------------------------------------


def asymptotic_xxx_bound(g: float, temperature: float) -> float:
    """Large-N entanglement bound for the isotropic model; zero at T = g."""
    if temperature <= 0 or g <= 0:
        raise ValueError("needs g > 0 and T > 0")
    return max(0.0, 1.0 - 6.0 * temperature / (4.0 * temperature + 2.0 * g))


def asymptotic_xx_bound(temperature: float) -> float:
    """Large-N bound for g=1, g_z=0, h=0; zero at T = 1/2."""
    if temperature <= 0:
        raise ValueError("needs T > 0")
    return max(0.0, 1.0 - 4.0 * temperature / (2.0 * temperature + 1.0))
