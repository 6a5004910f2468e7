"""Command-line runner.

Every subcommand reads one JSON config (see config.py for the shape), runs,
and writes reports into --out.  Reports are deterministic: identical
(config, seed, version) triples produce byte-identical files.

Exit codes:
  0  success
  2  config unreadable or schema violation (message names the field)
  3  an asserted verification failed (message names the failing check)
  4  wall-clock budget exceeded (a partial report is still written)
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .acceptance import NAMES as CRITERION_NAMES
from .acceptance import run_all
from .capacity import compound_capacity
from .coding import simulate_reliable_comm
from .config import (
    ConfigError,
    build_channel,
    build_channel_set,
    build_demand,
    build_distortion,
    build_medium,
    build_source,
    load_config,
)
from .covering_packing import (
    DualityMismatch,
    min_excess_over_types,
    threshold_trace,
    verify_duality,
)
from .exponent import error_exponent_bound
from .multiuser import (
    UnicastSystem,
    end_to_end_separation,
    joint_signal_law,
    layered_replacement,
    simulate_unicast,
)
from .probability import as_fraction
from .rate_distortion import blahut_arimoto
from .reports import exact_value, float_value, mc_value, write_csv, write_report
from .typeclasses import achievable_types

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_ASSERTION = 3
EXIT_BUDGET = 4


class BudgetExceeded(Exception):
    """Raised between work items once the wall-clock budget is spent."""


class Budget:
    def __init__(self, seconds: float | None):
        self.seconds = seconds
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def check(self) -> None:
        if self.seconds is not None and self.elapsed() >= self.seconds:
            raise BudgetExceeded


class CheckFailure(Exception):
    """An asserted verification failed; the message names the check."""


def _fr(value) -> Fraction:
    return as_fraction(value)


def _mass_strings(dist) -> list:
    if dist.mode == "rational":
        return [f"{m.numerator}/{m.denominator}" for m in dist.masses]
    return [float(m) for m in dist.masses]


# --------------------------------------------------------------------------
# subcommand runners: each returns (payload, csv_paths) and may raise
# BudgetExceeded (partial payload is recovered by the caller) or CheckFailure


def _run_rd(cfg, out: Path, budget: Budget, payload: dict) -> None:
    source = build_source(cfg["source"])
    spec = build_distortion(cfg["distortion"], source.alphabet)
    rows = []
    points = []
    for raw_level in cfg["levels"]:
        budget.check()
        level = _fr(raw_level)
        try:
            res = blahut_arimoto(source, spec, float(level))
        except ValueError as exc:
            raise ConfigError(f"levels: {exc}") from exc
        rows.append(
            [
                str(level),
                res.rate,
                res.achieved_distortion,
                res.slope,
                res.gap,
                res.iterations,
            ]
        )
        points.append(
            {
                "level": str(level),
                "rate": float_value(res.rate),
                "achieved_distortion": float_value(res.achieved_distortion),
                "iterations": res.iterations,
            }
        )
    payload["results"]["points"] = points
    payload["files"] = {
        "curve_csv": write_csv(
            out / "rd_curve.csv",
            ["level", "rate", "achieved_distortion", "slope", "gap", "iterations"],
            rows,
        ).name
    }


def _run_capacity(cfg, out: Path, budget: Budget, payload: dict) -> None:
    budget.check()
    channels = build_channel_set(cfg["channels"])
    result = compound_capacity(
        channels,
        restarts=cfg.get("restarts", 20),
        iterations=cfg.get("iterations", 10**4),
        seed=cfg["seed"],
    )
    payload["results"] = {
        "capacity_bits": float_value(result.capacity),
        "maximizing_input_law": {
            "alphabet": list(result.input_law.alphabet),
            "masses": _mass_strings(result.input_law),
        },
        "per_kernel_information": [float_value(v) for v in result.per_kernel_mi],
        "worst_kernel": result.worst_kernel,
    }


def _run_simulate(cfg, out: Path, budget: Budget, payload: dict) -> None:
    channels = build_channel_set(cfg["channels"])
    source = build_source(cfg["source"])
    spec = build_distortion(cfg["distortion"], source.alphabet)
    eps = _fr(cfg["typicality"])
    level = _fr(cfg["level"])
    rate = _fr(cfg["rate"])
    rows = []
    entries = []
    for n in cfg["blocklengths"]:
        budget.check()
        try:
            profile = simulate_reliable_comm(
                channels, source, eps, spec, level, rate, n,
                trials=cfg["trials"], seed=cfg["seed"],
            )
        except ValueError as exc:
            raise ConfigError(f"blocklengths: {exc}") from exc
        for e in profile.entries:
            rows.append(
                [e.kernel_index, e.n, e.trials, e.failures, e.estimate, e.sigma,
                 e.none_count, e.ambiguous_count, e.wrong_count]
            )
            entries.append(
                {
                    "kernel": e.kernel_index,
                    "blocklength": e.n,
                    "error": mc_value(e.estimate, e.sigma, e.trials),
                    "failure_reasons": {
                        "no_candidate": e.none_count,
                        "ambiguous": e.ambiguous_count,
                        "wrong_unique": e.wrong_count,
                    },
                }
            )
    payload["results"]["entries"] = entries
    payload["files"] = {
        "errors_csv": write_csv(
            out / "simulate_errors.csv",
            ["kernel", "blocklength", "trials", "failures", "error", "sigma",
             "no_candidate", "ambiguous", "wrong_unique"],
            rows,
        ).name
    }


def _run_exponent(cfg, out: Path, budget: Budget, payload: dict) -> None:
    source = build_source(cfg["source"])
    spec = build_distortion(cfg["distortion"], source.alphabet)
    eps = _fr(cfg["typicality"])
    level = _fr(cfg["level"])
    rate = _fr(cfg["rate"])
    per_n = []
    for n in cfg["blocklengths"]:
        budget.check()
        rep = error_exponent_bound(source, spec, eps, level, rate, n)
        per_n.append(
            {
                "blocklength": n,
                "rate_floor_bits": rep.rate_floor,
                "exponent_bits": float_value(rep.exponent),
                "log2_bound": float_value(rep.log2_bound),
                "bound": float_value(rep.bound),
                "feasible": rep.feasible,
            }
        )
    payload["results"]["per_blocklength"] = per_n


def _run_duality(cfg, out: Path, budget: Budget, payload: dict) -> None:
    source = build_source(cfg["source"])
    spec = build_distortion(cfg["distortion"], source.alphabet)
    reps = cfg.get("representatives", 5)
    rows = []
    cases = 0
    for n in cfg["blocklengths"]:
        if cfg["levels"] == "grid":
            levels = [Fraction(j, n) for j in range(n + 1)]
        else:
            levels = [_fr(v) for v in cfg["levels"]]
        for q in achievable_types(n, spec.y_alphabet):
            for level in levels:
                budget.check()
                try:
                    sample = verify_duality(
                        n, source, q, spec, level, representatives=reps
                    )
                except DualityMismatch as exc:
                    raise CheckFailure(
                        f"covering-packing duality: sides differ, {exc}"
                    ) from exc
                except ValueError as exc:
                    raise ConfigError(f"duality case n={n}: {exc}") from exc
                cases += 1
                rows.append(
                    [n, str(level), "|".join(_mass_strings(q)),
                     str(sample.channel_side), str(sample.source_side),
                     sample.representative_checks]
                )
    payload["results"] = {
        "cases": cases,
        "all_equal": True,
        "provenance": "exact",
        "representatives_per_side": reps,
    }
    payload["files"] = {
        "cases_csv": write_csv(
            out / "duality_cases.csv",
            ["blocklength", "level", "reproduction_type", "channel_side",
             "source_side", "representative_checks"],
            rows,
        ).name
    }


def _run_threshold(cfg, out: Path, budget: Budget, payload: dict) -> None:
    source = build_source(cfg["source"])
    spec = build_distortion(cfg["distortion"], source.alphabet)
    level = _fr(cfg["level"])
    rate = _fr(cfg["rate"])
    rows = []
    traces = []
    for n in cfg["blocklengths"]:
        budget.check()
        try:
            tr = threshold_trace(source, spec, level, rate, [n])
        except ValueError as exc:
            raise ConfigError(f"blocklengths: {exc}") from exc
        traces.append(tr)
        rows.append(
            [
                n,
                str(tr.min_excess[0]),
                tr.message_counts[0],
                tr.channel_factor[0],
                "" if tr.channel_factor_exact[0] is None else str(tr.channel_factor_exact[0]),
                tr.source_factor[0],
                "" if tr.source_factor_exact[0] is None else str(tr.source_factor_exact[0]),
            ]
        )
    ch = [t.channel_factor[0] for t in traces]
    src = [t.source_factor[0] for t in traces]
    payload["results"] = {
        "packing_factor_monotone_up": all(a <= b + 1e-15 for a, b in zip(ch, ch[1:])),
        "covering_factor_monotone_down": all(a >= b - 1e-15 for a, b in zip(src, src[1:])),
        "rows": len(rows),
    }
    payload["files"] = {
        "trace_csv": write_csv(
            out / "threshold_trace.csv",
            ["blocklength", "min_excess", "message_count", "packing_factor",
             "packing_factor_exact", "covering_factor", "covering_factor_exact"],
            rows,
        ).name
    }


def _run_multiuser(cfg, out: Path, budget: Budget, payload: dict) -> None:
    media = [build_medium(m) for m in cfg["media"]]
    demands = [build_demand(d) for d in cfg["demands"]]
    n = cfg["blocklength"]
    mode = cfg.get("mode", "simulate")
    budget.check()
    if mode == "replacement":
        if "pair" not in cfg:
            raise ConfigError("pair: required for replacement mode")
        if len(media) != 1:
            raise ConfigError("media: replacement mode takes exactly one medium")
        pair = tuple(cfg["pair"])
        law = build_source(cfg["codebook_law"]) if "codebook_law" in cfg else None
        try:
            system = UnicastSystem.fresh(media[0], demands, n)
            joint_signal_law(system)  # enforce exact-enumeration limits early
            _, report = layered_replacement(system, pair, law)
        except ValueError as exc:
            raise ConfigError(f"replacement: {exc}") from exc
        tv = report.total_variation
        payload["results"] = {
            "pair": list(report.pair),
            "codebook_law_matched": report.matched,
            "total_variation": exact_value(tv),
            "states_compared": report.states_compared,
        }
        if report.matched and tv > Fraction(1, 10**12):
            raise CheckFailure(
                f"marginal-preservation: matched codebook law moved other-pair "
                f"observations by TV {tv}"
            )
        return
    if mode == "end_to_end":
        if "trials" not in cfg:
            raise ConfigError("trials: required for end_to_end mode")
        if "source_rates" not in cfg:
            raise ConfigError("source_rates: required for end_to_end mode")
        if len(cfg["source_rates"]) != len(demands):
            raise ConfigError("source_rates: one rate per demand")
        src_rates = {d.pair: _fr(r) for d, r in zip(demands, cfg["source_rates"])}
        ch_rates = None
        if "channel_rates" in cfg:
            if len(cfg["channel_rates"]) != len(demands):
                raise ConfigError("channel_rates: one rate per demand")
            ch_rates = {d.pair: _fr(r) for d, r in zip(demands, cfg["channel_rates"])}
        try:
            profile = end_to_end_separation(
                media, demands, src_rates, n, cfg["trials"], cfg["seed"],
                channel_rates=ch_rates,
            )
        except ValueError as exc:
            raise ConfigError(f"end_to_end: {exc}") from exc
    else:
        if "trials" not in cfg:
            raise ConfigError("trials: required for simulate mode")
        try:
            profile = simulate_unicast(media, demands, n, cfg["trials"], cfg["seed"])
        except ValueError as exc:
            raise ConfigError(f"multiuser: {exc}") from exc
    payload["results"]["pairs"] = [
        {
            "medium": e.medium_index,
            "pair": list(e.pair),
            "excess_rate": mc_value(e.estimate, e.sigma, e.trials),
            "degenerate": e.degenerate,
            "erasures": e.erasures,
        }
        for e in profile.entries
    ]


def _run_verify_all(cfg, out: Path, budget: Budget, payload: dict) -> None:
    numbers = cfg.get("criteria")
    inject = cfg.get("inject_fault", False)
    report = run_all(
        budget_seconds=budget.seconds,
        inject_fault=inject,
        numbers=numbers,
        progress=lambda r: print(r.line(), flush=True),
    )
    payload["results"] = {
        "checks": [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "within_runtime_cap": r.within_cap,
                "elapsed_seconds": round(r.elapsed_seconds, 3),
                "details": r.details,
            }
            for r in report.results
        ],
        "skipped": [
            {"number": k, "name": CRITERION_NAMES[k]} for k in report.skipped
        ],
        "all_ok": report.all_ok,
    }
    if report.budget_exceeded:
        raise BudgetExceeded
    failure = report.first_failure()
    if failure is not None:
        raise CheckFailure(f"{failure.name} (criterion {failure.number}): {failure.details}")


_RUNNERS = {
    "rd": _run_rd,
    "capacity": _run_capacity,
    "simulate": _run_simulate,
    "exponent": _run_exponent,
    "duality": _run_duality,
    "threshold": _run_threshold,
    "multiuser": _run_multiuser,
    "verify-all": _run_verify_all,
}

_DEFAULT_VERIFY_CONFIG = {"subcommand": "verify-all"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seplab",
        description="Exact and simulated checks for layered coding over noisy media.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "rd": "trace the optimal rate/fidelity trade-off curve",
        "capacity": "worst-case information rate of a kernel family",
        "simulate": "random-coding message error rates",
        "exponent": "convex-program error exponent and counting bound",
        "duality": "exact covering/packing duality sweep (asserted)",
        "threshold": "packing and covering product factors along blocklengths",
        "multiuser": "shared-medium simulation, replacement, or end-to-end chains",
        "verify-all": "run the twelve-point verification suite",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument(
            "--config", type=Path, required=(name != "verify-all"),
            help="path to the JSON run description",
        )
        sp.add_argument("--out", type=Path, default=Path("."), help="report directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument(
            "--threads", type=int, default=1,
            help="advisory worker count (results never depend on it)",
        )
        sp.add_argument(
            "--budget", type=float, default=None,
            help="wall-clock limit in seconds; exceeding it exits 4",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config)
            if cfg["subcommand"] != args.subcommand:
                raise ConfigError(
                    f"subcommand: config says {cfg['subcommand']!r}, "
                    f"command line says {args.subcommand!r}"
                )
        else:
            cfg = dict(_DEFAULT_VERIFY_CONFIG)
        if args.seed is not None:
            if "seed" in cfg or args.subcommand in ("capacity", "simulate", "multiuser"):
                cfg["seed"] = args.seed
            else:
                raise ConfigError("seed: this subcommand is deterministic")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    budget = Budget(args.budget)
    payload = {
        "subcommand": args.subcommand,
        "version": __version__,
        "config": cfg,
        "threads_requested": args.threads,
        "results": {},
    }
    report_path = out / f"{args.subcommand.replace('-', '_')}_report.json"

    code = EXIT_OK
    try:
        budget.check()
        _RUNNERS[args.subcommand](cfg, out, budget, payload)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BudgetExceeded:
        payload["budget_exceeded"] = True
        code = EXIT_BUDGET
        print(
            f"budget of {args.budget} s exceeded; partial report written",
            file=sys.stderr,
        )
    except CheckFailure as exc:
        payload["failed_check"] = str(exc)
        code = EXIT_ASSERTION
        print(f"verification failed: {exc}", file=sys.stderr)
    write_report(report_path, payload)
    print(f"report: {report_path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
