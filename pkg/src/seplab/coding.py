"""Random-coding simulation with joint-typicality decoding.

A codebook of exactly 2^floor(n R) codewords is drawn i.i.d. from the source
law (or uniformly from a type class).  The decoder searches for the unique
codeword that is epsilon-typical and within per-letter distortion D of the
received block; zero or multiple candidates are decoding failures ("none" /
"ambiguous(count)").

Two simulation regimes share one sampling law.  The *explicit* regime
materializes the codebook (small message counts).  The *implicit* regime never
materializes it: non-transmitted codewords are i.i.d. and independent of the
received block, so the count of false candidates is Binomial(M-1, p_jt(y))
where p_jt(y) is the exact probability that one fresh codeword is jointly
typical with y.  That probability depends on y only through its type and is
computed by exact convolution, which makes message counts like 2^204
simulable without approximation.  Monte Carlo streams are derived from
(master seed, kernel index, batch index, trial index); codebooks are fresh
per batch of trials and shared across the compound set within a batch.

Rates are interpreted with decimal semantics: floor(n * R) is computed on the
exact rational value of the decimal literal (so n=30, R=0.1 gives 3, immune
to binary-float artifacts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distortion import DistortionSpec
from .probability import Distribution, as_fraction
from .seeding import derive_rng
from .typeclasses import TypeClassHandle, typicality_count_bounds

__all__ = [
    "Codebook",
    "DecodeResult",
    "ErrorEstimate",
    "ErrorProfile",
    "ImpostorRateEstimate",
    "message_count",
    "generate_iid_codebook",
    "generate_type_class_codebook",
    "typicality_decode",
    "simulate_reliable_comm",
    "measure_impostor_rate",
    "joint_typicality_prob",
]

CODEBOOK_CELL_BUDGET = 2**24
EXPLICIT_MESSAGE_LIMIT = 4096
DP_STATE_BUDGET = 5 * 10**6


def rate_floor(n: int, rate) -> int:
    """floor(n * rate) on the exact rational value of the rate."""
    r = as_fraction(rate)
    if r < 0:
        raise ValueError("rate must be non-negative")
    return math.floor(n * r)


def message_count(n: int, rate) -> int:
    """Codebook size 2^floor(n * rate) as an exact integer."""
    return 2 ** rate_floor(n, rate)


# ---------------------------------------------------------------------------
# codebooks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Codebook:
    alphabet: tuple
    n: int
    rate: object  # the rate as given (Fraction or decimal literal)
    mode: str  # "iid" | "type-class" | "explicit"
    array: np.ndarray  # (message_count, n) alphabet indices

    def __post_init__(self):
        if self.array.ndim != 2 or self.array.shape[1] != self.n:
            raise ValueError("codeword array must be (message_count, n)")

    @property
    def size(self) -> int:
        return int(self.array.shape[0])

    def word(self, index: int) -> tuple:
        return tuple(self.alphabet[j] for j in self.array[index])

    @property
    def words(self) -> tuple:
        return tuple(self.word(i) for i in range(self.size))


def _check_budget(m: int, n: int) -> None:
    if m * n > CODEBOOK_CELL_BUDGET:
        raise ValueError(
            f"explicit codebook with {m} x {n} cells exceeds the budget "
            f"{CODEBOOK_CELL_BUDGET}; use the implicit simulation path"
        )


def generate_iid_codebook(
    p_x: Distribution, n: int, rate, rng: np.random.Generator
) -> Codebook:
    """2^floor(nR) codewords drawn i.i.d. from the source law."""
    m = message_count(n, rate)
    _check_budget(m, n)
    arr = rng.choice(len(p_x.alphabet), size=(m, n), p=p_x.as_floats())
    return Codebook(p_x.alphabet, n, as_fraction(rate), "iid", arr.astype(np.int64))


def generate_type_class_codebook(
    handle: TypeClassHandle, rate, rng: np.random.Generator
) -> Codebook:
    """2^floor(nR) codewords drawn uniformly from a type class."""
    m = message_count(handle.n, rate)
    _check_budget(m, handle.n)
    rank = {s: i for i, s in enumerate(handle.alphabet)}
    base = np.array([rank[s] for s in handle.canonical()], dtype=np.int64)
    rows = np.empty((m, handle.n), dtype=np.int64)
    for i in range(m):
        rows[i] = base[rng.permutation(handle.n)]
    return Codebook(handle.alphabet, handle.n, as_fraction(rate), "type-class", rows)


def explicit_codebook(words: Sequence[Sequence], alphabet: Sequence) -> Codebook:
    symbols = tuple(alphabet)
    rank = {s: i for i, s in enumerate(symbols)}
    rows = np.array([[rank[s] for s in w] for w in words], dtype=np.int64)
    return Codebook(symbols, rows.shape[1], Fraction(0), "explicit", rows)


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecodeResult:
    index: int | None
    candidate_count: int

    @property
    def reason(self) -> str:
        if self.index is not None:
            return "ok"
        if self.candidate_count == 0:
            return "none"
        return f"ambiguous({self.candidate_count})"


class _DecodeContext:
    """Precomputed integer machinery shared by decoding and simulation."""

    def __init__(self, p_x: Distribution, eps, spec: DistortionSpec, level, n: int):
        if spec.kind != "additive":
            raise ValueError("typicality decoding requires an additive spec")
        if spec.x_alphabet != p_x.alphabet:
            raise ValueError("source alphabet must match the distortion spec")
        self.n = n
        self.p_x = p_x
        self.x_size = len(spec.x_alphabet)
        self.y_size = len(spec.y_alphabet)
        self.bounds = typicality_count_bounds(n, p_x, eps)
        fracs = spec.matrix_fractions()
        denom = math.lcm(*(v.denominator for row in fracs for v in row))
        self.dmat_int = np.array(
            [[int(v * denom) for v in row] for row in fracs], dtype=np.int64
        )
        # threshold: total scaled distortion <= n * level * denom, exactly
        tau = as_fraction(level) * n * denom
        self.thr_num = tau.numerator
        self.thr_den = tau.denominator

    def typical_mask(self, words: np.ndarray) -> np.ndarray:
        mask = np.ones(words.shape[0], dtype=bool)
        for letter, (lo, hi) in enumerate(self.bounds):
            counts = (words == letter).sum(axis=1)
            mask &= (counts >= lo) & (counts <= hi)
        return mask

    def distortions(self, words: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.dmat_int[words, y[None, :]].sum(axis=1)

    def within_level(self, scaled: np.ndarray) -> np.ndarray:
        return scaled * self.thr_den <= self.thr_num

    def is_typical(self, word: np.ndarray) -> bool:
        return bool(self.typical_mask(word[None, :])[0])


def typicality_decode(
    y: Sequence,
    codebook: Codebook,
    p_x: Distribution,
    eps,
    spec: DistortionSpec,
    level,
) -> DecodeResult:
    """Unique jointly typical codeword, or a failure with its reason."""
    ctx = _DecodeContext(p_x, eps, spec, level, codebook.n)
    y_rank = {s: i for i, s in enumerate(spec.y_alphabet)}
    y_idx = np.array([y_rank[s] for s in y], dtype=np.int64)
    candidates = ctx.typical_mask(codebook.array) & ctx.within_level(
        ctx.distortions(codebook.array, y_idx)
    )
    count = int(candidates.sum())
    if count == 1:
        return DecodeResult(int(np.nonzero(candidates)[0][0]), 1)
    return DecodeResult(None, count)


# ---------------------------------------------------------------------------
# joint-typicality probability of a fresh codeword (exact)
# ---------------------------------------------------------------------------


def _binomial_pmf(m: int, p: float) -> np.ndarray:
    if m == 0:
        return np.ones(1)
    if p == 0.0:
        out = np.zeros(m + 1)
        out[0] = 1.0
        return out
    if p == 1.0:
        out = np.zeros(m + 1)
        out[m] = 1.0
        return out
    k = np.arange(m + 1, dtype=float)
    logc = (
        math.lgamma(m + 1)
        - np.array([math.lgamma(v + 1) + math.lgamma(m - v + 1) for v in range(m + 1)])
    )
    return np.exp(logc + k * math.log(p) + (m - k) * math.log1p(-p))


def joint_typicality_prob(
    y_counts: Sequence[int],
    p_x: Distribution,
    eps,
    spec: DistortionSpec,
    level,
) -> float:
    """P(fresh i.i.d. codeword is epsilon-typical and within level of y).

    ``y_counts`` are the letter counts of the received block over the
    measure's reproduction alphabet; the probability depends on y only
    through them.
    """
    n = int(sum(y_counts))
    ctx = _DecodeContext(p_x, eps, spec, level, n)
    if ctx.x_size == 2 and ctx.y_size == 2:
        return _jt_prob_binary(tuple(int(c) for c in y_counts), ctx)
    return _jt_prob_general(tuple(int(c) for c in y_counts), ctx)


def _jt_prob_binary(y_counts: tuple, ctx: _DecodeContext) -> float:
    m0, m1 = y_counts
    p1 = float(ctx.p_x.masses[1])
    pmf0 = _binomial_pmf(m0, p1)  # ones drawn in positions where y = 0
    pmf1 = _binomial_pmf(m1, p1)
    a0 = np.arange(m0 + 1, dtype=np.int64)
    a1 = np.arange(m1 + 1, dtype=np.int64)
    d = ctx.dmat_int
    dist = (
        (a0 * d[1, 0] + (m0 - a0) * d[0, 0])[:, None]
        + (a1 * d[1, 1] + (m1 - a1) * d[0, 1])[None, :]
    )
    ones = a0[:, None] + a1[None, :]
    lo0, hi0 = ctx.bounds[0]
    lo1, hi1 = ctx.bounds[1]
    n = m0 + m1
    zeros = n - ones
    mask = (
        (ones >= lo1)
        & (ones <= hi1)
        & (zeros >= lo0)
        & (zeros <= hi0)
        & (dist * ctx.thr_den <= ctx.thr_num)
    )
    return float((pmf0[:, None] * pmf1[None, :])[mask].sum())


def _jt_prob_general(y_counts: tuple, ctx: _DecodeContext) -> float:
    p = [float(m) for m in ctx.p_x.masses]
    states: dict[tuple, float] = {(tuple([0] * ctx.x_size), 0): 1.0}
    for letter_y, group in enumerate(y_counts):
        for _ in range(int(group)):
            new: dict[tuple, float] = {}
            for (counts, s), pr in states.items():
                for x in range(ctx.x_size):
                    if p[x] == 0.0:
                        continue
                    c2 = list(counts)
                    c2[x] += 1
                    key = (tuple(c2), s + int(ctx.dmat_int[x, letter_y]))
                    new[key] = new.get(key, 0.0) + pr * p[x]
            states = new
            if len(states) > DP_STATE_BUDGET:
                raise ValueError("joint-typicality convolution exceeded its budget")
    total = 0.0
    for (counts, s), pr in states.items():
        if s * ctx.thr_den > ctx.thr_num:
            continue
        if all(lo <= c <= hi for c, (lo, hi) in zip(counts, ctx.bounds)):
            total += pr
    return total


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorEstimate:
    kernel_index: int
    n: int
    trials: int
    failures: int
    estimate: float
    sigma: float
    none_count: int | None = None
    ambiguous_count: int | None = None
    wrong_count: int | None = None

    @staticmethod
    def from_counts(kernel_index, n, trials, failures, **detail) -> "ErrorEstimate":
        p = failures / trials
        return ErrorEstimate(
            kernel_index,
            n,
            trials,
            failures,
            p,
            math.sqrt(p * (1 - p) / trials),
            **detail,
        )


@dataclass(frozen=True)
class ErrorProfile:
    entries: tuple

    def worst_case(self, n: int | None = None) -> float:
        pool = [e for e in self.entries if n is None or e.n == n]
        if not pool:
            raise ValueError("no entries at that blocklength")
        return max(e.estimate for e in pool)

    def at(self, kernel_index: int, n: int) -> ErrorEstimate:
        for e in self.entries:
            if e.kernel_index == kernel_index and e.n == n:
                return e
        raise KeyError((kernel_index, n))


def _as_kernel_list(channel) -> list:
    if hasattr(channel, "kernels"):
        return list(channel.kernels)
    if isinstance(channel, (list, tuple)):
        return list(channel)
    return [channel]


def _sample_output_indices(kernel, x_idx: np.ndarray, rng, in_alpha, out_alpha):
    if hasattr(kernel, "sample_indices"):
        return kernel.sample_indices(x_idx[None, :], rng)[0]
    block = tuple(in_alpha[i] for i in x_idx)
    out = kernel.sample(block, rng)
    rank = {s: i for i, s in enumerate(out_alpha)}
    return np.array([rank[s] for s in out], dtype=np.int64)


def simulate_reliable_comm(
    channel,
    p_x: Distribution,
    eps,
    spec: DistortionSpec,
    level,
    rate,
    blocklengths,
    trials: int,
    seed: int,
    *,
    batch_size: int = 100,
    explicit_limit: int = EXPLICIT_MESSAGE_LIMIT,
) -> ErrorProfile:
    """Empirical message-error rates for layered random coding.

    ``channel`` may be a single kernel, a list, or a CompoundChannel; errors
    are reported per kernel (the worst case is the compound figure).  Message
    counts above ``explicit_limit`` switch to the implicit regime.
    """
    kernels = _as_kernel_list(channel)
    ns = [blocklengths] if isinstance(blocklengths, int) else list(blocklengths)
    entries = []
    for n in ns:
        m = message_count(n, rate)
        ctx = _DecodeContext(p_x, eps, spec, level, n)
        for k_idx, kernel in enumerate(kernels):
            _validate_alphabets(kernel, p_x, spec)
            if m <= explicit_limit:
                counts = _explicit_runs(kernel, k_idx, p_x, ctx, m, n, trials, seed, batch_size)
            else:
                counts = _implicit_runs(kernel, k_idx, p_x, ctx, m, n, trials, seed, batch_size)
            entries.append(ErrorEstimate.from_counts(k_idx, n, trials, **counts))
    return ErrorProfile(tuple(entries))


def _validate_alphabets(kernel, p_x, spec):
    if tuple(kernel.input_alphabet) != tuple(p_x.alphabet):
        raise ValueError("kernel input alphabet must match the source alphabet")
    if tuple(kernel.output_alphabet) != tuple(spec.y_alphabet):
        raise ValueError("kernel output alphabet must match the distortion measure")


def _explicit_runs(kernel, k_idx, p_x, ctx, m, n, trials, seed, batch_size):
    _check_budget(m, n)
    p = p_x.as_floats()
    failures = none_count = ambiguous_count = wrong_count = 0
    done = 0
    batch = 0
    in_alpha = tuple(kernel.input_alphabet)
    out_alpha = tuple(kernel.output_alphabet)
    while done < trials:
        take = min(batch_size, trials - done)
        cb_rng = derive_rng(seed, "codebook", batch)
        words = cb_rng.choice(len(p), size=(m, n), p=p).astype(np.int64)
        typical = ctx.typical_mask(words)
        for t in range(take):
            rng = derive_rng(seed, "trial", k_idx, batch, t)
            msg = int(rng.integers(m))
            y = _sample_output_indices(kernel, words[msg], rng, in_alpha, out_alpha)
            cand = typical & ctx.within_level(ctx.distortions(words, y))
            total = int(cand.sum())
            if total == 1 and bool(cand[msg]):
                pass
            else:
                failures += 1
                if total == 0:
                    none_count += 1
                elif total > 1:
                    ambiguous_count += 1
                else:
                    wrong_count += 1
        done += take
        batch += 1
    return dict(
        failures=failures,
        none_count=none_count,
        ambiguous_count=ambiguous_count,
        wrong_count=wrong_count,
    )


def _implicit_runs(kernel, k_idx, p_x, ctx, m, n, trials, seed, batch_size):
    p = p_x.as_floats()
    failures = 0
    done = 0
    batch = 0
    in_alpha = tuple(kernel.input_alphabet)
    out_alpha = tuple(kernel.output_alphabet)
    jt_cache: dict[tuple, float] = {}
    log_others = float(m - 1)
    while done < trials:
        take = min(batch_size, trials - done)
        for t in range(take):
            rng = derive_rng(seed, "trial", k_idx, batch, t)
            x = rng.choice(len(p), size=n, p=p).astype(np.int64)
            y = _sample_output_indices(kernel, x, rng, in_alpha, out_alpha)
            sent_ok = ctx.is_typical(x) and bool(
                ctx.within_level(ctx.distortions(x[None, :], y))[0]
            )
            if not sent_ok:
                failures += 1
                continue
            y_counts = tuple(int((y == v).sum()) for v in range(ctx.y_size))
            p_jt = jt_cache.get(y_counts)
            if p_jt is None:
                if ctx.x_size == 2 and ctx.y_size == 2:
                    p_jt = _jt_prob_binary(y_counts, ctx)
                else:
                    p_jt = _jt_prob_general(y_counts, ctx)
                jt_cache[y_counts] = p_jt
            if p_jt >= 1.0:
                p_clean = 0.0
            elif p_jt <= 0.0:
                p_clean = 1.0
            else:
                p_clean = math.exp(log_others * math.log1p(-p_jt))
            if rng.random() >= p_clean:
                failures += 1
        done += take
        batch += 1
    return dict(failures=failures)


# ---------------------------------------------------------------------------
# direct measurement of the false-candidate event
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImpostorRateEstimate:
    estimate: float
    sigma: float
    trials: int
    n: int
    message_count: int


def measure_impostor_rate(
    kernel,
    p_x: Distribution,
    eps,
    spec: DistortionSpec,
    level,
    rate,
    n: int,
    trials: int,
    seed: int,
    *,
    batch_size: int = 100,
) -> ImpostorRateEstimate:
    """Empirical probability that some non-transmitted codeword is jointly
    typical with the received block (fresh codebooks per batch)."""
    _validate_alphabets(kernel, p_x, spec)
    m = message_count(n, rate)
    others = m - 1
    ctx = _DecodeContext(p_x, eps, spec, level, n)
    p = p_x.as_floats()
    in_alpha = tuple(kernel.input_alphabet)
    out_alpha = tuple(kernel.output_alphabet)
    hits = 0
    done = 0
    batch = 0
    while done < trials:
        take = min(batch_size, trials - done)
        if others > 0:
            cb_rng = derive_rng(seed, "impostor-codebook", batch)
            _check_budget(others, n)
            words = cb_rng.choice(len(p), size=(others, n), p=p).astype(np.int64)
            typical = ctx.typical_mask(words)
        for t in range(take):
            rng = derive_rng(seed, "trial", 0, batch, t)
            x = rng.choice(len(p), size=n, p=p).astype(np.int64)
            y = _sample_output_indices(kernel, x, rng, in_alpha, out_alpha)
            if others > 0:
                cand = typical & ctx.within_level(ctx.distortions(words, y))
                if bool(cand.any()):
                    hits += 1
        done += take
        batch += 1
    estimate = hits / trials
    sigma = math.sqrt(estimate * (1 - estimate) / trials)
    return ImpostorRateEstimate(estimate, sigma, trials, n, m)
