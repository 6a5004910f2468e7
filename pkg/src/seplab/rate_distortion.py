"""Rate-distortion function for finite sources under additive distortion.

The solver parameterizes the curve by the Lagrange slope beta >= 0 and, for
each slope, alternates between the optimal test channel given an output
marginal and the induced output marginal (the classical double-minimization of
I + beta * E[d]).  Convergence is certified by the variational sandwich

    upper(r) = -sum_x p(x) log2 sum_y r(y) 2^(-beta d(x,y))
    lower(r) = upper(r) - log2 max_y sum_x p(x) 2^(-beta d(x,y)) / A_x(r)

whose gap shrinks to zero at the optimum.  An outer bisection on beta lands
the achieved expected distortion on the requested level.  Boundary levels are
handled exactly: at or above the best constant reproduction the rate is zero,
and at the smallest achievable distortion the iteration runs on the support of
row-minimal letters (the infinite-slope limit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distortion import DistortionSpec, d_max
from .probability import Distribution, mi_bits

__all__ = ["RateDistortionResult", "blahut_arimoto", "rd_curve"]

GAP_TOL = 1e-9
MAX_ITERATIONS = 10**5
TARGET_TOL = 1e-8
PRUNE_BELOW = 1e-300


@dataclass(frozen=True)
class RateDistortionResult:
    target_distortion: float
    rate: float
    achieved_distortion: float
    test_channel: tuple  # rows over the source alphabet, columns reproduction
    output_marginal: tuple
    iterations: int
    gap: float
    slope: float  # beta; math.inf on the minimal-distortion boundary


def _solve_at_slope(p: np.ndarray, weights: np.ndarray, dmat: np.ndarray):
    """Inner alternating minimization for fixed per-entry weights 2^(-beta d).

    Returns (test channel, output marginal, distortion, iterations, gap).
    """
    n_out = weights.shape[1]
    r = np.full(n_out, 1.0 / n_out)
    iterations = 0
    gap = math.inf
    support = p > 0
    while iterations < MAX_ITERATIONS:
        iterations += 1
        a_x = weights @ r  # A_x = sum_y r_y w_xy
        if np.any(a_x[support] <= 0):
            raise RuntimeError("weight matrix leaves a source letter uncovered")
        ratios = np.where(support[:, None], weights / np.where(a_x[:, None] > 0, a_x[:, None], 1.0), 0.0)
        a_y = p @ ratios  # sum_x p_x w_xy / A_x
        positive = a_y > 0
        gap = math.log2(float(np.max(a_y[positive]))) if np.any(positive) else 0.0
        r = r * a_y
        r[r < PRUNE_BELOW] = 0.0
        total = r.sum()
        if total <= 0:
            raise RuntimeError("output marginal vanished")
        r /= total
        if gap <= GAP_TOL:
            break
    a_x = weights @ r
    q = np.zeros_like(weights)
    q[support] = (weights[support] * r[None, :]) / a_x[support, None]
    dist = float(np.einsum("i,ij,ij->", p, q, dmat))
    return q, r, dist, iterations, gap


def _result_from_channel(p, q, dmat, target, iterations, gap, slope):
    out_marginal = p @ q
    rate = max(0.0, mi_bits(p, _padded_rows(q, p)))
    dist = float(np.einsum("i,ij,ij->", p, q, dmat))
    return rate, dist, out_marginal, iterations, gap, slope


def _padded_rows(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    # rows for zero-mass inputs are irrelevant; make them valid pmfs
    rows = q.copy()
    for i in range(rows.shape[0]):
        total = rows[i].sum()
        if total <= 0:
            rows[i, 0] = 1.0
        else:
            rows[i] /= total
    return rows


def blahut_arimoto(
    p_x: Distribution,
    spec: DistortionSpec,
    target: float,
    *,
    gap_tol: float = GAP_TOL,
    target_tol: float = TARGET_TOL,
) -> RateDistortionResult:
    """Point on the rate-distortion curve at expected-distortion ``target``.

    Raises ``ValueError`` for negative or unreachable targets (below the
    smallest achievable expected distortion).
    """
    if spec.kind != "additive":
        raise ValueError("the solver requires an additive distortion spec")
    if p_x.alphabet != spec.x_alphabet:
        raise ValueError("source alphabet must match the distortion measure")
    target = float(target)
    if target < 0:
        raise ValueError("distortion level must be non-negative")

    p = p_x.as_floats()
    dmat = spec.matrix_floats()
    row_min = dmat.min(axis=1)
    d_floor = float(np.dot(p, row_min))
    d_ceiling = float(d_max(spec, p_x))

    if target < d_floor - 1e-12:
        raise ValueError(
            f"distortion {target} is unreachable; the minimum is {d_floor}"
        )

    if target >= d_ceiling:
        j = int(np.argmin(p @ dmat))
        q = np.zeros_like(dmat)
        q[:, j] = 1.0
        out = np.zeros(dmat.shape[1])
        out[j] = 1.0
        dist = float(np.dot(p, dmat[:, j]))
        return RateDistortionResult(
            target, 0.0, dist, tuple(map(tuple, q)), tuple(out), 0, 0.0, 0.0
        )

    if target <= d_floor + 1e-15:
        # infinite-slope limit: restrict to row-minimal reproduction letters
        weights = (dmat <= row_min[:, None] + 0.0).astype(float)
        q, r, dist, iterations, gap = _solve_at_slope(p, weights, dmat)
        rate = max(0.0, mi_bits(p, _padded_rows(q, p)))
        return RateDistortionResult(
            target, rate, dist, tuple(map(tuple, q)), tuple(r), iterations, gap, math.inf
        )

    def dist_at(beta: float):
        weights = np.exp2(-beta * dmat)
        return _solve_at_slope(p, weights, dmat)

    p_positive = p[p > 0]
    beta_hi = float(dmat.max() / p_positive.min())
    beta_hi = max(beta_hi, 1.0)
    solution_hi = dist_at(beta_hi)
    guard = 0
    while solution_hi[2] > target:
        beta_hi *= 2.0
        guard += 1
        if guard > 200:
            raise RuntimeError("failed to bracket the distortion level")
        solution_hi = dist_at(beta_hi)

    beta_lo = 0.0
    best = solution_hi
    best_beta = beta_hi
    total_iterations = solution_hi[3]
    for _ in range(200):
        if abs(best[2] - target) <= target_tol:
            break
        beta_mid = 0.5 * (beta_lo + beta_hi)
        solution = dist_at(beta_mid)
        total_iterations += solution[3]
        if abs(solution[2] - target) < abs(best[2] - target):
            best, best_beta = solution, beta_mid
        if solution[2] > target:
            beta_lo = beta_mid
        else:
            beta_hi = beta_mid
        if beta_hi - beta_lo < 1e-14 * max(1.0, beta_hi):
            break

    q, r, dist, _, gap = best
    rate = max(0.0, mi_bits(p, _padded_rows(q, p)))
    return RateDistortionResult(
        target,
        rate,
        dist,
        tuple(map(tuple, q)),
        tuple(r),
        total_iterations,
        gap,
        best_beta,
    )


def rd_curve(
    p_x: Distribution, spec: DistortionSpec, levels
) -> list[RateDistortionResult]:
    """Solve the curve on a grid of distortion levels."""
    return [blahut_arimoto(p_x, spec, d) for d in levels]
