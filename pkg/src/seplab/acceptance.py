"""Reference verification suite: twelve numbered end-to-end checks.

Each check is a plain function returning a CriterionResult with a pass flag,
a detail string, and its wall-clock time.  Tolerances, trial counts, seeds
and runtime caps are fixed inside each check so that a pass means the same
thing on every machine.  ``run_all`` executes the checks in order under an
optional global budget; ``inject_fault`` flips check 12 into a deliberate
negative control (the mismatched codebook law is asserted as if it were
matched) so that failure reporting paths can be exercised end to end.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .capacity import compound_capacity, verify_single_letterization
from .channels import Dmc, bsc, half_lying_channel
from .coding import measure_impostor_rate, simulate_reliable_comm
from .covering_packing import (
    DualityMismatch,
    mc_packing_covering,
    min_excess_over_types,
    verify_duality,
)
from .distortion import check_permutation_invariance, hamming, sorted_hamming
from .exponent import error_exponent_bound, kl_chain_report
from .multiuser import UnicastDemand, UnicastSystem, layered_replacement, xor_interference_medium
from .probability import Distribution, JointDistribution, entropy_bits
from .rate_distortion import blahut_arimoto
from .seeding import derive_rng
from .typeclasses import achievable_types

__all__ = ["CriterionResult", "AcceptanceReport", "run_all", "CRITERIA", "NAMES"]

NAMES = {
    1: "rate-curve-closed-form",
    2: "duality-exact-sweep",
    3: "representative-invariance",
    4: "counting-bound-dominates",
    5: "divergence-chain-identity",
    6: "compound-capacity-values",
    7: "single-letter-chain",
    8: "end-to-end-black-box",
    9: "half-lying-baseline",
    10: "packing-covering-cross-check",
    11: "min-excess-reference",
    12: "marginal-preservation",
}


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: str
    elapsed_seconds: float
    runtime_cap_seconds: float | None = None

    @property
    def within_cap(self) -> bool:
        return (
            self.runtime_cap_seconds is None
            or self.elapsed_seconds <= self.runtime_cap_seconds
        )

    @property
    def ok(self) -> bool:
        return self.passed and self.within_cap

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        note = "" if self.within_cap else (
            f" [exceeded {self.runtime_cap_seconds:.0f} s cap]"
        )
        return (
            f"{verdict} criterion {self.number:2d} {self.name}"
            f" ({self.elapsed_seconds:.2f} s){note}: {self.details}"
        )


def _finish(number, passed, details, t0, cap=None) -> CriterionResult:
    return CriterionResult(
        number, NAMES[number], passed, details, time.monotonic() - t0, cap
    )


# --------------------------------------------------------------------------
# 1: rate curve against the binary closed form


def criterion_1() -> CriterionResult:
    t0 = time.monotonic()
    p = Distribution.uniform((0, 1))
    spec = hamming((0, 1))
    worst = 0.0
    for k in range(1, 10):
        level = k * 0.05
        result = blahut_arimoto(p, spec, level)
        closed = 1.0 - entropy_bits([level, 1.0 - level])
        worst = max(worst, abs(result.rate - closed))
    passed = worst <= 1e-6
    return _finish(1, passed, f"max |rate - closed form| = {worst:.3e} over 9 levels", t0, cap=5.0)


# --------------------------------------------------------------------------
# 2 and 3: exact duality sweep, then representative invariance on the same grid

_SWEEP_SOURCES = (
    ((Fraction(1, 2), Fraction(1, 2)), 2),
    ((Fraction(1, 3), Fraction(2, 3)), 3),
)


def _certified_sorted_spec(n: int):
    spec = sorted_hamming((0, 1))
    report = check_permutation_invariance(
        spec, n, mode="trials", trials=500, rng=derive_rng(202, "certify-sorted", n)
    )
    if not report.passed:
        raise AssertionError(f"invariance certificate failed at n={n}: {report}")
    return spec


def _duality_sweep(representatives: int) -> int:
    cases = 0
    for masses, step in _SWEEP_SOURCES:
        p = Distribution.rational((0, 1), masses)
        for n in range(step, 13, step):
            specs = (hamming((0, 1)), _certified_sorted_spec(n))
            for q in achievable_types(n, (0, 1)):
                for j in range(n + 1):
                    level = Fraction(j, n)
                    for spec in specs:
                        verify_duality(
                            n, p, q, spec, level, representatives=representatives
                        )
                        cases += 1
    return cases


def criterion_2() -> CriterionResult:
    t0 = time.monotonic()
    try:
        cases = _duality_sweep(representatives=0)
    except DualityMismatch as exc:
        return _finish(2, False, f"mismatch: {exc}", t0, cap=60.0)
    return _finish(2, True, f"{cases} cases equal exactly (zero tolerance)", t0, cap=60.0)


def criterion_3() -> CriterionResult:
    t0 = time.monotonic()
    try:
        cases = _duality_sweep(representatives=5)
    except DualityMismatch as exc:
        return _finish(3, False, f"representative changed a value: {exc}", t0)
    return _finish(3, True, f"5 fresh representatives per side on {cases} cases, all exact", t0)


# --------------------------------------------------------------------------
# 4: counting bound dominates the measured false-candidate rate


def criterion_4() -> CriterionResult:
    t0 = time.monotonic()
    p = Distribution.uniform((0, 1))
    spec = hamming((0, 1))
    eps = Fraction(1, 4)
    level = Fraction(1, 4)
    kernel = bsc(Fraction(1, 20))
    rows = []
    passed = True
    for n, rate in itertools.product((8, 16, 32), (Fraction(1, 10), Fraction(3, 10))):
        est = measure_impostor_rate(
            kernel, p, eps, spec, level, rate, n, trials=10**4, seed=404
        )
        bound = error_exponent_bound(p, spec, eps, level, rate, n).bound
        ok = bound >= est.estimate - 3.0 * est.sigma
        passed = passed and ok
        rows.append(f"n={n} R={rate}: bound {bound:.3g} vs {est.estimate:.4f}±{est.sigma:.4f}")
    return _finish(4, passed, "; ".join(rows), t0, cap=120.0)


# --------------------------------------------------------------------------
# 5: divergence chain identity on random rational joints


def criterion_5() -> CriterionResult:
    t0 = time.monotonic()
    rng = derive_rng(505, "chain-identity")
    for i in range(1000):
        rows = int(rng.integers(2, 5))
        cols = int(rng.integers(2, 5))
        raw = [[int(rng.integers(1, 30)) for _ in range(cols)] for _ in range(rows)]
        total = sum(sum(r) for r in raw)
        joint = JointDistribution.rational(
            tuple(range(rows)),
            tuple(range(cols)),
            [[Fraction(v, total) for v in r] for r in raw],
        )
        ref_raw = [int(rng.integers(1, 20)) for _ in range(rows)]
        ref = Distribution.rational(
            tuple(range(rows)), [Fraction(v, sum(ref_raw)) for v in ref_raw]
        )
        report = kl_chain_report(joint, ref)
        if not (report.identity_holds and report.mode == "rational"):
            return _finish(5, False, f"identity failed on instance {i}", t0)
    return _finish(5, True, "identity exact on 1000 random rational joints", t0)


# --------------------------------------------------------------------------
# 6: compound and singleton capacity reference values


def criterion_6() -> CriterionResult:
    t0 = time.monotonic()
    pair = compound_capacity([bsc(0.1), bsc(0.2)], restarts=5).capacity
    single = compound_capacity([bsc(0.1)], restarts=3).capacity
    err_pair = abs(pair - 0.278072)
    err_single = abs(single - 0.531004)
    passed = err_pair <= 1e-4 and err_single <= 1e-4
    return _finish(
        6,
        passed,
        f"pair {pair:.6f} (dev {err_pair:.2e}), singleton {single:.6f} (dev {err_single:.2e})",
        t0,
        cap=30.0,
    )


# --------------------------------------------------------------------------
# 7: single-letter chain on random coded instances


def criterion_7() -> CriterionResult:
    t0 = time.monotonic()
    worst_slack = float("inf")
    for instance in range(1000):
        rng = derive_rng(707, "single-letter", instance)
        n = int(rng.integers(1, 4))
        kernel = Dmc((0, 1), (0, 1), rng.dirichlet(np.ones(2), size=2))
        blocks = list(itertools.product((0, 1), repeat=n))
        enc = {b: tuple(int(v) for v in rng.integers(0, 2, size=n)) for b in blocks}
        dec = {b: tuple(int(v) for v in rng.integers(0, 2, size=n)) for b in blocks}
        p = Distribution.from_floats((0, 1), rng.dirichlet(np.ones(2)))
        report = verify_single_letterization(enc.__getitem__, dec.__getitem__, kernel, p, n)
        worst_slack = min(worst_slack, report.slack)
        if not report.chain_ok:
            return _finish(
                7, False, f"instance {instance}: slack {report.slack:.3e}", t0, cap=60.0
            )
    return _finish(
        7, True, f"1000 instances, worst chain slack {worst_slack:.3e} >= -1e-9", t0, cap=60.0
    )


# --------------------------------------------------------------------------
# 8: noisy kernel as a lossy-description black box, error shrinking in n


def criterion_8() -> CriterionResult:
    t0 = time.monotonic()
    profile = simulate_reliable_comm(
        bsc(Fraction(1, 20)),
        Distribution.uniform((0, 1)),
        Fraction(1, 10),
        hamming((0, 1)),
        Fraction(7, 100),
        Fraction(2, 5),
        [128, 512],
        trials=500,
        seed=808,
    )
    short = profile.worst_case(128)
    long = profile.worst_case(512)
    passed = long <= 0.05 and long <= short
    return _finish(
        8, passed, f"error(128) = {short:.4f}, error(512) = {long:.4f} (<= 0.05)", t0, cap=600.0
    )


# --------------------------------------------------------------------------
# 9: half-lying kernel, identity baseline and coding failure


def criterion_9() -> CriterionResult:
    t0 = time.monotonic()
    n, trials = 20, 10**5
    rng = derive_rng(909, "half-lying-identity")
    x = rng.integers(0, 2, size=(trials, n))
    y = half_lying_channel().sample_indices(x, rng)
    mean_mismatch = float((x != y).mean())
    baseline_ok = abs(mean_mismatch - 0.25) <= 0.01

    profile = simulate_reliable_comm(
        half_lying_channel(),
        Distribution.uniform((0, 1)),
        Fraction(1, 4),
        hamming((0, 1)),
        Fraction(1, 4),
        Fraction(1, 2),
        20,
        trials=10**4,
        seed=910,
    )
    err = profile.worst_case(20)
    coding_ok = err >= 0.45
    return _finish(
        9,
        baseline_ok and coding_ok,
        f"identity mismatch {mean_mismatch:.4f} (target 0.25±0.01); coding error {err:.4f} (>= 0.45)",
        t0,
    )


# --------------------------------------------------------------------------
# 10: exact product factors against simulation


def criterion_10() -> CriterionResult:
    t0 = time.monotonic()
    p = Distribution.uniform((0, 1))
    q = Distribution.uniform((0, 1))
    spec = hamming((0, 1))
    rows = []
    passed = True
    for n, rate in itertools.product((4, 8), (Fraction(1, 4), Fraction(1, 2))):
        check = mc_packing_covering(
            n, p, q, spec, Fraction(1, 4), rate, trials=10**4, seed=1010
        )
        ok = check.no_impostor_within_3_sigma and check.cover_error_within_3_sigma
        passed = passed and ok
        rows.append(
            f"n={n} R={rate}: packing {check.empirical_no_impostor:.4f}/{check.exact_no_impostor:.4f},"
            f" covering {check.empirical_cover_error:.4f}/{check.exact_cover_error:.4f}"
        )
    return _finish(10, passed, "; ".join(rows), t0)


# --------------------------------------------------------------------------
# 11: frozen minimum-excess reference point


def criterion_11() -> CriterionResult:
    t0 = time.monotonic()
    report = min_excess_over_types(
        4, Distribution.uniform((0, 1)), hamming((0, 1)), Fraction(1, 4)
    )
    value_ok = report.value == Fraction(1, 2)
    minim_ok = report.minimizer.masses == (Fraction(1, 4), Fraction(3, 4))
    return _finish(
        11,
        value_ok and minim_ok,
        f"min excess {report.value} at type {report.minimizer.masses}",
        t0,
    )


# --------------------------------------------------------------------------
# 12: layered replacement preserves other pairs' observations exactly


def criterion_12(inject_fault: bool = False) -> CriterionResult:
    t0 = time.monotonic()
    medium = xor_interference_medium(Fraction(1, 10))
    uniform = Distribution.uniform((0, 1))
    spec = hamming((0, 1))
    demands = (
        UnicastDemand(0, 1, uniform, spec, Fraction(1, 4)),
        UnicastDemand(1, 0, uniform, spec, Fraction(1, 4)),
    )
    system = UnicastSystem.fresh(medium, demands, 2)
    skew = Distribution.rational((0, 1), (Fraction(1, 4), Fraction(3, 4)))

    matched_law = skew if inject_fault else None
    _, matched = layered_replacement(system, (0, 1), matched_law)
    _, control = layered_replacement(system, (0, 1), skew)
    preserved = matched.total_variation <= Fraction(1, 10**12)
    control_moves = control.total_variation > Fraction(1, 1000)
    return _finish(
        12,
        preserved and control_moves,
        f"matched TV = {matched.total_variation}, mismatched control TV = "
        f"{float(control.total_variation):.4f}",
        t0,
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
}


@dataclass(frozen=True)
class AcceptanceReport:
    results: tuple
    skipped: tuple  # criterion numbers not run because the budget ran out
    budget_exceeded: bool
    elapsed_seconds: float

    @property
    def all_ok(self) -> bool:
        return not self.budget_exceeded and all(r.ok for r in self.results)

    def first_failure(self) -> CriterionResult | None:
        return next((r for r in self.results if not r.ok), None)

    def lines(self) -> list[str]:
        out = [r.line() for r in self.results]
        out.extend(f"SKIP criterion {k:2d} {NAMES[k]}: budget exhausted" for k in self.skipped)
        return out


def run_all(
    budget_seconds: float | None = None,
    inject_fault: bool = False,
    numbers=None,
    progress=None,
) -> AcceptanceReport:
    """Run the selected checks (default: all twelve) in numeric order.

    The budget is wall-clock over the whole run and is checked before each
    check starts; once exhausted, the remaining checks are reported as
    skipped rather than silently dropped.
    """
    chosen = sorted(set(numbers)) if numbers else sorted(CRITERIA)
    for k in chosen:
        if k not in CRITERIA:
            raise ValueError(f"unknown criterion number {k}")
    start = time.monotonic()
    results = []
    skipped = []
    exceeded = False
    for k in chosen:
        if budget_seconds is not None and time.monotonic() - start >= budget_seconds:
            exceeded = True
            skipped.append(k)
            continue
        func = CRITERIA[k]
        result = func(inject_fault) if k == 12 and inject_fault else func()
        results.append(result)
        if progress is not None:
            progress(result)
    return AcceptanceReport(
        tuple(results), tuple(skipped), exceeded, time.monotonic() - start
    )
