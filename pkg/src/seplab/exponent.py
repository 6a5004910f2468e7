"""Exponential bound on the false-candidate event in random coding.

The probability that some non-transmitted codeword is jointly typical with
the received block is at most

    (n + 1)^(|X| |Y|) * 2^floor(n R) * 2^(-n E),

where E is the smallest divergence D(q_ZY || p_X x q_Y) over joint laws whose
Z-marginal lies within the letterwise typicality box around the source law
and whose expected per-letter distortion is at most the decoding level.  The
minimization is a convex program (relative entropy of the joint against an
affine function of its own column marginal) and is solved as such; the
multiplicative-update scheme one might try instead has no interior fixed
point here because the objective is linear along the q_Y direction.

``kl_chain_report`` certifies, exactly in rational arithmetic, the identity
that splits the same divergence into a marginal-mismatch term plus a
dependence term:

    D(q_ZY || p_X x q_Y) = D(q_Z || p_X) + I(Z; Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import cvxpy as cp
import numpy as np

from .distortion import DistortionSpec
from .probability import (
    Distribution,
    ExactLogValue,
    JointDistribution,
    as_fraction,
    kl_divergence,
    kl_divergence_exact,
)

__all__ = [
    "ExponentReport",
    "error_exponent_bound",
    "KlChainReport",
    "kl_chain_report",
]

SOLVER_TOL = 1e-9


@dataclass(frozen=True)
class ExponentReport:
    n: int
    rate_floor: int
    exponent: float  # math.inf when the constraint set is empty
    log2_bound: float  # -inf means the bound is exactly zero
    bound: float
    feasible: bool
    optimizer: np.ndarray | None  # minimizing joint law, rows indexed by Z
    solver_status: str


def _typicality_box(p_x: Distribution, eps) -> list[tuple[Fraction, Fraction]]:
    e = as_fraction(eps) if not isinstance(eps, float) else Fraction(str(eps))
    box = []
    for m in p_x.masses:
        q = as_fraction(m)
        box.append((max(Fraction(0), q - e), min(Fraction(1), q + e)))
    return box


def _min_distortion_over_box(box, dmat: np.ndarray) -> float:
    """Exact minimum of E[d] over Z-laws in the box, with the conditional
    rows free; greedy mass assignment in increasing row-minimum order."""
    row_min = dmat.min(axis=1)
    lo_total = sum(lo for lo, _ in box)
    hi_total = sum(hi for _, hi in box)
    if lo_total > 1 or hi_total < 1:
        return math.inf
    masses = [lo for lo, _ in box]
    slack = Fraction(1) - lo_total
    order = sorted(range(len(box)), key=lambda i: row_min[i])
    for i in order:
        if slack == 0:
            break
        room = box[i][1] - masses[i]
        add = min(room, slack)
        masses[i] += add
        slack -= add
    return float(sum(float(m) * row_min[i] for i, m in enumerate(masses)))


def error_exponent_bound(
    p_x: Distribution,
    spec: DistortionSpec,
    eps,
    level,
    rate,
    n: int,
) -> ExponentReport:
    """Solve for the exponent and assemble the counting bound at blocklength n."""
    if spec.x_alphabet != p_x.alphabet:
        raise ValueError("source alphabet must match the distortion spec")
    if spec.kind != "additive":
        raise ValueError("the exponent is defined for additive specs")
    x_size = len(spec.x_alphabet)
    y_size = len(spec.y_alphabet)
    dmat = spec.matrix_floats()
    box = _typicality_box(p_x, eps)
    level_f = float(as_fraction(level) if not isinstance(level, float) else Fraction(str(level)))
    r_floor = math.floor(n * (as_fraction(rate) if not isinstance(rate, float) else Fraction(str(rate))))

    if _min_distortion_over_box(box, dmat) > level_f + 1e-15:
        return ExponentReport(n, r_floor, math.inf, -math.inf, 0.0, False, None, "infeasible")

    p = p_x.as_floats()
    q = cp.Variable((x_size, y_size), nonneg=True)
    q_y = cp.sum(q, axis=0)
    q_z = cp.sum(q, axis=1)
    reference = cp.reshape(p, (x_size, 1), order="C") @ cp.reshape(q_y, (1, y_size), order="C")
    objective = cp.sum(cp.rel_entr(q, reference)) / math.log(2)
    constraints = [cp.sum(q) == 1, cp.sum(cp.multiply(q, dmat)) <= level_f]
    for i, (lo, hi) in enumerate(box):
        constraints.append(q_z[i] >= float(lo))
        constraints.append(q_z[i] <= float(hi))
    problem = cp.Problem(cp.Minimize(objective), constraints)
    problem.solve(solver=cp.CLARABEL)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"exponent solve failed with status {problem.status}")
    exponent = max(float(problem.value), 0.0)
    log2_bound = x_size * y_size * math.log2(n + 1) + r_floor - n * exponent
    try:
        bound = 2.0**log2_bound
    except OverflowError:
        bound = math.inf
    return ExponentReport(n, r_floor, exponent, log2_bound, bound, True, np.asarray(q.value), problem.status)


# ---------------------------------------------------------------------------
# chain identity for the divergence being minimized
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KlChainReport:
    total: float
    marginal_term: float
    dependence_term: float
    identity_holds: bool
    mode: str
    exact: tuple | None  # (total, marginal, dependence) as ExactLogValue


def kl_chain_report(joint: JointDistribution, reference_row: Distribution) -> KlChainReport:
    """Split D(joint || reference x column-marginal) into its two parts.

    Rational inputs are certified by exact arithmetic over log2 of primes;
    float inputs are checked to 1e-10.  Infinite cases (support violations)
    are handled: both sides are then infinite together.
    """
    if joint.row_alphabet != reference_row.alphabet:
        raise ValueError("reference must live on the joint's row alphabet")
    q_z = joint.marginal_row()
    q_y = joint.marginal_col()
    flat = joint.flatten()
    against_reference = JointDistribution.product(reference_row, q_y).flatten()
    against_product = JointDistribution.product(q_z, q_y).flatten()

    if joint.mode == "rational" and reference_row.is_rational():
        total_e = kl_divergence_exact(flat, against_reference)
        marg_e = kl_divergence_exact(q_z, reference_row)
        dep_e = kl_divergence_exact(flat, against_product)
        holds = total_e == (marg_e + dep_e)
        return KlChainReport(
            total_e.to_float(),
            marg_e.to_float(),
            dep_e.to_float(),
            holds,
            "rational",
            (total_e, marg_e, dep_e),
        )

    total = kl_divergence(flat.to_float_mode(), against_reference.to_float_mode())
    marg = kl_divergence(q_z.to_float_mode(), reference_row.to_float_mode())
    dep = kl_divergence(flat.to_float_mode(), against_product.to_float_mode())
    if math.isinf(total) or math.isinf(marg):
        holds = math.isinf(total) and math.isinf(marg)
    else:
        holds = abs(total - (marg + dep)) <= 1e-10
    return KlChainReport(total, marg, dep, holds, "float", None)
