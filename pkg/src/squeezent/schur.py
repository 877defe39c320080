"""Representation-theoretic kernels: Jz-product coefficients, Wigner rotations,
and the explicit (J, Jz) eigenbasis with sector projectors for small N.

The dense basis is what lets us move between the 2^N-dimensional picture and
the block coefficients: symmetrizing product states, materializing block
states as full matrices, and validating everything against brute force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .blocks import (
    BlockDiagonalState,
    multiplicity,
    sector_two_j_values,
)
from .errors import CapabilityError

# Dense 2^N paths are capped here by default; override per call if you have
# the memory for more.
N_MAX_DENSE = 10

# Eigenvalues within this distance of J(J+1) are assigned to sector J when
# building the basis.
_CLUSTER_TOL = 1e-8

_CACHE_MAGIC = "squeezent-schur-v1"


@lru_cache(maxsize=256)
def _jy_eigensystem(two_j: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of J_y in the spin-J multiplet (basis Jz ascending).

    No factorial ratios appear, so this stays accurate up to 2J of several
    hundred.  Cached per 2J; theta enters later as a cheap phase twist.
    """
    dim = two_j + 1
    m = np.arange(-two_j, two_j + 1, 2) / 2.0
    j = two_j / 2.0
    # <m+1| J_+ |m> = sqrt(J(J+1) - m(m+1))
    raise_elem = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jy = np.zeros((dim, dim), dtype=complex)
    jy[np.arange(1, dim), np.arange(dim - 1)] = raise_elem / 2j
    jy[np.arange(dim - 1), np.arange(1, dim)] = -raise_elem / 2j
    evals, evecs = np.linalg.eigh(jy)
    return evals, evecs


def _wigner_ascending(two_j: int, theta: float) -> np.ndarray:
    """Matrix of exp(-i theta J_y) with rows/columns ordered by Jz ascending."""
    if theta == 0.0:
        return np.eye(two_j + 1)
    evals, evecs = _jy_eigensystem(two_j)
    phases = np.exp(-1j * theta * evals)
    return np.real((evecs * phases) @ evecs.conj().T)


def _twirl_weights(two_j: int, theta: float) -> np.ndarray:
    """Elementwise square of the rotation matrix (ascending Jz order).

    Columns sum to one, which is what preserves the trace under twirling.
    """
    d = _wigner_ascending(two_j, theta)
    return d * d


def _twirl_weights_column(two_j: int, theta: float, idx: int) -> np.ndarray:
    """Single column of the squared rotation matrix, without the full matmul."""
    if theta == 0.0:
        col = np.zeros(two_j + 1)
        col[idx] = 1.0
        return col
    evals, evecs = _jy_eigensystem(two_j)
    col = evecs @ (np.exp(-1j * theta * evals) * evecs[idx].conj())
    col = np.real(col)
    return col * col


@dataclass
class WignerD:
    """Real rotation matrix exp(-i theta J_y) restricted to one spin-J block.

    Rows and columns are labelled by m = +J ... -J (descending), the common
    tabulation order; d[0, 1] is the (m=+J, m'=+J-1) entry.
    """

    two_j: int
    theta: float
    d: np.ndarray

    def __post_init__(self) -> None:
        self.d = np.asarray(self.d, dtype=float)
        dim = self.two_j + 1
        if self.d.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix")


def wigner_d(two_j: int, theta: float) -> WignerD:
    """Wigner small-d matrix for a rotation by theta about J_y."""
    if two_j < 0:
        raise ValueError(f"negative 2J={two_j}")
    d_asc = _wigner_ascending(two_j, theta)
    return WignerD(two_j=two_j, theta=theta, d=d_asc[::-1, ::-1])


def jz_product_state_blocks(n: int, k: int) -> BlockDiagonalState:
    """Twirl of a product state with k up-spins along z.

    The permutation + z-rotation average of |up^k down^(n-k)> carries weight
    1/C(n, k) in every cell (J, Jz = k - n/2) with J >= |k - n/2|; the
    telescoping identity sum_{J >= |Mz|} mu_J = C(n, k) normalizes it.
    """
    if not 0 <= k <= n:
        raise ValueError(f"up-spin count k={k} outside 0..{n}")
    two_mz = 2 * k - n
    coeff = 1.0 / math.comb(n, k)
    alpha = {two_j: np.zeros(two_j + 1) for two_j in sector_two_j_values(n)}
    for two_j in sector_two_j_values(n):
        if two_j >= abs(two_mz):
            alpha[two_j][(two_mz + two_j) // 2] = coeff
    return BlockDiagonalState(n, alpha)


def rotate_and_twirl(state: BlockDiagonalState, theta: float) -> BlockDiagonalState:
    """Rotate about J_y by theta, then project back onto the z-diagonal cells.

    alpha'[J, m] = sum_m' d^J_{m m'}(theta)^2 alpha[J, m'];  the squared
    rotation matrix has unit column sums, so the trace is preserved exactly.
    """
    alpha = {}
    for two_j, a in state.alpha.items():
        if a.any():
            alpha[two_j] = _twirl_weights(two_j, theta) @ a
        else:
            alpha[two_j] = a.copy()
    return BlockDiagonalState(state.n, alpha)


def rotated_jz_product_blocks(n: int, k: int, theta: float) -> BlockDiagonalState:
    """rotate_and_twirl(jz_product_state_blocks(n, k), theta), computed fast.

    The input has a single occupied Jz column per sector, so only one column
    of each squared rotation matrix is needed.
    """
    if not 0 <= k <= n:
        raise ValueError(f"up-spin count k={k} outside 0..{n}")
    two_mz = 2 * k - n
    coeff = 1.0 / math.comb(n, k)
    alpha = {}
    for two_j in sector_two_j_values(n):
        if two_j >= abs(two_mz):
            idx = (two_mz + two_j) // 2
            alpha[two_j] = coeff * _twirl_weights_column(two_j, theta, idx)
        else:
            alpha[two_j] = np.zeros(two_j + 1)
    return BlockDiagonalState(n, alpha)


# -- dense (J, Jz) eigenbasis ------------------------------------------------


def _weight_subspace_j2(n: int, k: int) -> tuple[list[int], np.ndarray]:
    """Bitmasks of weight k and the matrix of J^2 restricted to their span.

    Uses J^2 = 3n/4 - n(n-1)/4 + sum_{a<b} SWAP_ab: swapping an unequal bit
    pair connects two strings of the same weight, equal pairs sit on the
    diagonal.
    """
    masks = [sum(1 << p for p in combo) for combo in combinations(range(n), k)]
    index = {m: i for i, m in enumerate(masks)}
    dim = len(masks)
    diag_const = 0.75 * n - 0.25 * n * (n - 1)
    eq_pairs = math.comb(k, 2) + math.comb(n - k, 2)
    j2 = np.zeros((dim, dim))
    np.fill_diagonal(j2, diag_const + eq_pairs)
    for i, m in enumerate(masks):
        ups = [p for p in range(n) if m >> p & 1]
        downs = [p for p in range(n) if not m >> p & 1]
        for u in ups:
            for d in downs:
                swapped = m ^ (1 << u) ^ (1 << d)
                j2[index[swapped], i] += 1.0
    return masks, j2


@dataclass
class SchurBasis:
    """Orthonormal simultaneous eigenbasis of J^2 and J_z for n qubits.

    vectors[(2J, 2Jz)] stacks the mu_J basis columns of that cell in the
    computational basis (2^n rows).
    """

    n: int
    vectors: dict[tuple[int, int], np.ndarray]

    def projector(self, two_j: int, two_jz: int) -> np.ndarray:
        v = self.vectors[(two_j, two_jz)]
        return v @ v.T

    def cells(self) -> list[tuple[int, int]]:
        return sorted(self.vectors)

    def rank(self, two_j: int, two_jz: int) -> int:
        return self.vectors[(two_j, two_jz)].shape[1]

    def completeness_defect(self) -> float:
        """Max deviation of sum of projectors from the identity."""
        dim = 2**self.n
        total = np.zeros((dim, dim))
        for v in self.vectors.values():
            total += v @ v.T
        return float(np.abs(total - np.eye(dim)).max())


def build_schur_basis(n: int, n_max: int = N_MAX_DENSE) -> SchurBasis:
    """Construct the basis by diagonalizing J^2 inside each fixed-weight subspace."""
    if n > n_max:
        raise CapabilityError(f"dense basis for n={n} exceeds the n_max={n_max} cap")
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    vectors: dict[tuple[int, int], np.ndarray] = {}
    for k in range(n + 1):
        # k counts set bits; bit 1 is a down spin in the kron ordering
        masks, j2 = _weight_subspace_j2(n, k)
        evals, evecs = np.linalg.eigh(j2)
        two_jz = n - 2 * k
        cols: dict[int, list[np.ndarray]] = {}
        for lam, vec in zip(evals, evecs.T):
            two_j = round(math.sqrt(4.0 * lam + 1.0)) - 1
            if abs(lam - two_j * (two_j + 2) / 4.0) > _CLUSTER_TOL:
                raise RuntimeError(
                    f"J^2 eigenvalue {lam} does not sit near any J(J+1)"
                )
            cols.setdefault(two_j, []).append(vec)
        for two_j, vs in cols.items():
            full = np.zeros((2**n, len(vs)))
            for col, v in enumerate(vs):
                full[masks, col] = v
            vectors[(two_j, two_jz)] = full
    basis = SchurBasis(n=n, vectors=vectors)
    for (two_j, _), v in basis.vectors.items():
        if v.shape[1] != multiplicity(n, two_j):
            raise RuntimeError(
                f"sector (2J={two_j}) came out with rank {v.shape[1]}, "
                f"expected {multiplicity(n, two_j)}"
            )
    return basis


def symmetrize_product_state(
    bloch: np.ndarray | list, basis: SchurBasis
) -> BlockDiagonalState:
    """Permutation + z-rotation twirl of a pure product state.

    Each qubit is given as a unit Bloch vector.  The cell weight is
    <Psi| P_{J,Jz} |Psi>, and the per-multiplet coefficient divides out mu_J.
    """
    vecs = np.asarray(bloch, dtype=float)
    if vecs.shape != (basis.n, 3):
        raise ValueError(f"need {basis.n} Bloch vectors, got shape {vecs.shape}")
    norms = np.linalg.norm(vecs, axis=1)
    if np.abs(norms - 1.0).max() > 1e-10:
        raise ValueError("Bloch vectors must have unit length")
    psi = product_state_vector(vecs)
    alpha = {two_j: np.zeros(two_j + 1) for two_j in sector_two_j_values(basis.n)}
    for (two_j, two_jz), v in basis.vectors.items():
        overlaps = v.T @ psi
        weight = float(np.real(overlaps.conj() @ overlaps))
        alpha[two_j][(two_jz + two_j) // 2] = weight / multiplicity(basis.n, two_j)
    return BlockDiagonalState(basis.n, alpha)


def bloch_to_spinor(vec: np.ndarray) -> np.ndarray:
    """Unit Bloch vector -> spin-1/2 state (|up>, |down>) amplitudes."""
    bx, by, bz = vec
    theta = math.acos(max(-1.0, min(1.0, bz)))
    phi = math.atan2(by, bx)
    return np.array(
        [math.cos(theta / 2.0), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2.0)],
        dtype=complex,
    )


def spinor_to_bloch(psi: np.ndarray) -> np.ndarray:
    """Spin-1/2 amplitudes -> Bloch vector of the projector."""
    a, b = psi
    return np.array(
        [
            2.0 * (a.conjugate() * b).real,
            2.0 * (a.conjugate() * b).imag,
            abs(a) ** 2 - abs(b) ** 2,
        ]
    )


def product_state_vector(bloch: np.ndarray) -> np.ndarray:
    """Full 2^n amplitude vector of a product of Bloch-vector qubits."""
    psi = np.array([1.0 + 0.0j])
    for vec in bloch:
        psi = np.kron(psi, bloch_to_spinor(vec))
    return psi


def blocks_to_dense(state: BlockDiagonalState, basis: SchurBasis) -> np.ndarray:
    """Materialize a block state as the full 2^n x 2^n matrix."""
    if state.n != basis.n:
        raise ValueError("basis built for a different particle number")
    dim = 2**state.n
    out = np.zeros((dim, dim))
    for (two_j, two_jz), v in basis.vectors.items():
        a = state.cell(two_j, two_jz)
        if a:
            out += a * (v @ v.T)
    return out


def dense_block_coefficients(
    mat: np.ndarray, basis: SchurBasis
) -> BlockDiagonalState:
    """Project a dense (invariant) density matrix onto block coefficients."""
    alpha = {two_j: np.zeros(two_j + 1) for two_j in sector_two_j_values(basis.n)}
    for (two_j, two_jz), v in basis.vectors.items():
        weight = float(np.real(np.einsum("ia,ij,ja->", v, mat, v)))
        alpha[two_j][(two_jz + two_j) // 2] = weight / multiplicity(basis.n, two_j)
    return BlockDiagonalState(basis.n, alpha)


# -- on-disk cache -----------------------------------------------------------


def save_schur_basis(basis: SchurBasis, path) -> None:
    """Write the basis to a versioned .npz file."""
    payload = {
        "magic": np.array(_CACHE_MAGIC),
        "n": np.array(basis.n),
    }
    for (two_j, two_jz), v in basis.vectors.items():
        payload[f"cell_{two_j}_{two_jz}"] = v
    np.savez_compressed(path, **payload)


def load_schur_basis(path) -> SchurBasis:
    """Load a cached basis; completeness is re-validated before use."""
    with np.load(path) as data:
        if "magic" not in data or str(data["magic"]) != _CACHE_MAGIC:
            raise ValueError(f"not a schur-basis cache: {path}")
        n = int(data["n"])
        vectors = {}
        for key in data.files:
            if key.startswith("cell_"):
                _, two_j, two_jz = key.split("_")
                vectors[(int(two_j), int(two_jz))] = data[key]
    basis = SchurBasis(n=n, vectors=vectors)
    defect = basis.completeness_defect()
    if defect > 1e-10:
        raise ValueError(
            f"cached basis fails completeness (defect {defect:.3e}); "
            "rebuild the cache"
        )
    return basis


@lru_cache(maxsize=8)
def cached_schur_basis(n: int, n_max: int = N_MAX_DENSE) -> SchurBasis:
    """Process-local memoized basis (building one is the expensive part)."""
    return build_schur_basis(n, n_max=n_max)
