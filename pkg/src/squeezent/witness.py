"""Spin-squeezing inequalities and the certified entanglement lower bound.

The complete polytope of separable first/second collective-spin moments is
carved out by four inequality families.  Their violation is summarized by a
single squeezing parameter built from the covariance matrix Gamma and its
shifted companion X; dividing by the most negative value any state can reach
turns the violation into a lower bound on the best-separable-approximation
weight, normalized to [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .blocks import MomentSummary

# Eigenvalues of X below this (times N^2) count as non-positive.  Conservative:
# dropping a barely-positive eigenvalue can only weaken the reported bound.
EPS_ZERO = 1e-10


def gamma_matrix(m: MomentSummary) -> np.ndarray:
    """Covariance matrix of the collective spin components."""
    return m.second - np.outer(m.mean, m.mean)


def x_matrix(m: MomentSummary) -> np.ndarray:
    """Shifted covariance whose eigenvalue signs pick the optimal inequality.

    X = Gamma + second/(N-1) - N^2 / (4(N-1)) * Id
    """
    n = m.n
    if n < 2:
        raise ValueError("needs at least two particles")
    return (
        gamma_matrix(m)
        + m.second / (n - 1)
        - (n * n / (4.0 * (n - 1))) * np.eye(3)
    )


def normalization_constant(n: int, k: int) -> float:
    """Most negative value of the k-positive-eigenvalue squeezing parameter.

    B_0 = N/2 and B_1 = N(N-2)/4(N-1) are reached by the many-body singlet,
    B_2 = N^2/4(N-1) by the half-excited symmetric Dicke state.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError(f"k must be 0..3, got {k}")
    return (
        n / 2.0
        - k * n * n / (4.0 * (n - 1))
        + k * (k - 1) * n * (n + 2) / (8.0 * (n - 1))
    )


@dataclass
class FacetValues:
    """Left-hand sides of the four inequality families, evaluated in the
    principal-axis frame of X.

    variance_sum -- sum_k (Delta J_k)^2 - N/2
    planar[m]    -- (DJ_k)^2+(DJ_l)^2 - <J_m^2>/(N-1) - N(N-2)/4(N-1)
    single_axis[k] -- (DJ_k)^2 - (<J_l^2>+<J_m^2>)/(N-1) + N/2(N-1)
    spin_bound   -- N(N+2)/4 - sum_k <J_k^2>
    """

    variance_sum: float
    planar: np.ndarray
    single_axis: np.ndarray
    spin_bound: float

    def all_values(self) -> np.ndarray:
        return np.concatenate(
            [[self.variance_sum], self.planar, self.single_axis, [self.spin_bound]]
        )

    def to_json_dict(self) -> dict:
        return {
            "variance_sum": self.variance_sum,
            "planar": [float(x) for x in self.planar],
            "single_axis": [float(x) for x in self.single_axis],
            "spin_bound": self.spin_bound,
        }


@dataclass
class SSIResult:
    """Outcome of the squeezing-inequality evaluation for one set of moments."""

    k: int
    xi: float
    b_k: float
    lower_bound: float
    x_eigenvalues: np.ndarray  # descending
    facet_values: FacetValues
    n: int

    def to_json_dict(self) -> dict:
        return {
            "K": self.k,
            "xi": self.xi,
            "B_K": self.b_k,
            "lower_bound": self.lower_bound,
            "x_eigenvalues": [float(x) for x in self.x_eigenvalues],
            "facet_values": self.facet_values.to_json_dict(),
            "N": self.n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    def csv_row(self, temperature: float) -> str:
        return f"{temperature!r},{self.xi!r},{self.k},{self.lower_bound!r}"


def _principal_frame(m: MomentSummary) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues of X (ascending) plus variances / second moments along its axes."""
    x = x_matrix(m)
    evals, evecs = np.linalg.eigh(x)
    second = np.einsum("ik,ij,jl->kl", evecs, m.second, evecs)
    mean = evecs.T @ m.mean
    second_diag = np.diag(second).copy()
    variances = second_diag - mean**2
    return evals, variances, second_diag


def evaluate_inequality_set(m: MomentSummary) -> FacetValues:
    """All facet values in the principal frame of X."""
    n = m.n
    _, var, sec = _principal_frame(m)
    total_var = float(var.sum())
    total_sec = float(sec.sum())
    planar = np.empty(3)
    single = np.empty(3)
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        planar[axis] = (
            var[others].sum()
            - sec[axis] / (n - 1)
            - n * (n - 2) / (4.0 * (n - 1))
        )
        single[axis] = (
            var[axis] - sec[others].sum() / (n - 1) + n / (2.0 * (n - 1))
        )
    return FacetValues(
        variance_sum=total_var - n / 2.0,
        planar=planar,
        single_axis=single,
        spin_bound=n * (n + 2) / 4.0 - total_sec,
    )


def ssi_parameter(m: MomentSummary) -> SSIResult:
    """Squeezing parameter, optimal inequality index, and the certified bound.

    For each subset size K the tightest choice subtracts the K largest
    eigenvalues of X:  xi_K = tr Gamma - sum_K lambda - N/2 is nonnegative
    on every separable state, and -xi_K / B_K lower-bounds the entangled
    weight of any separable decomposition.  The reported K maximizes the
    normalized violation (the distance to the optimal polytope facet); note
    that with the K-dependent normalization this optimal subset may include
    a non-positive eigenvalue.  K = 3 corresponds to the total-spin
    inequality, which every state satisfies, and unviolated moments fall
    back to counting eigenvalues above the zero threshold.
    """
    n = m.n
    evals, _, _ = _principal_frame(m)
    descending = evals[::-1]
    tr_gamma = float(np.trace(gamma_matrix(m)))
    best_k = None
    best_bound = 0.0
    best_xi = 0.0
    for k in (0, 1, 2):
        b_k = normalization_constant(n, k)
        if b_k <= 0.0:
            continue  # N = 2 has no capacity in the single-axis pair family
        xi_k = tr_gamma - float(descending[:k].sum()) - n / 2.0
        bound_k = -xi_k / b_k
        if bound_k > best_bound:
            best_k, best_bound, best_xi = k, bound_k, xi_k
    if best_k is None:
        # inside the polytope: report the eigenvalue-sign diagnostic
        eps = EPS_ZERO * n * n
        k = int((evals > eps).sum())
        xi = tr_gamma - float(evals[evals > eps].sum()) - n / 2.0
        b_k = normalization_constant(n, k)
        bound = 0.0
    else:
        k, xi, bound = best_k, best_xi, best_bound
        b_k = normalization_constant(n, k)
    return SSIResult(
        k=k,
        xi=xi,
        b_k=b_k,
        lower_bound=bound,
        x_eigenvalues=descending.copy(),
        facet_values=evaluate_inequality_set(m),
        n=n,
    )
