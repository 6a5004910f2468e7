"""End-to-end source coding followed by channel coding.

The chain is: source block -> nearest-codeword source encoder -> index ->
transport (noiseless, or a random channel code with maximum-likelihood
decoding) -> index -> source decoder -> reproduction block.  The measured
quantity is the probability that per-letter distortion exceeds the level.
Transport failures (erasures and wrong indices) are part of the chain: an
erasure deterministically maps to the source decoder's output for index 0.

Source codebooks above the explicit budget switch to an implicit regime:
with i.i.d. codewords, the event "no codeword within the level of x" has
probability (1 - p_cov(x))^M exactly, where p_cov depends on x only through
its type and is computed by the same exact convolution as the decoder's
false-candidate probability (with the letter roles transposed).  The implicit
regime never materializes a reproduction, so it requires the noiseless
transport; any noisy transport demands an explicit codebook.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coding import (
    EXPLICIT_MESSAGE_LIMIT,
    _check_budget,
    _jt_prob_binary,
    _jt_prob_general,
    _DecodeContext,
    message_count,
)
from .distortion import DistortionSpec
from .probability import Distribution
from .seeding import derive_rng

__all__ = [
    "NoiselessTransport",
    "RandomCodeTransport",
    "ExcessEstimate",
    "ExcessProfile",
    "separation_pipeline",
]


class NoiselessTransport:
    """Carries any index unchanged."""

    def prepare(self, message_limit: int, batch_rng) -> None:
        pass

    def carry(self, index: int, rng) -> int | None:
        return index


class RandomCodeTransport:
    """Random channel code with ML decoding; likelihood ties are erasures."""

    def __init__(self, kernel, n: int, rate):
        self.kernel = kernel
        self.n = n
        self.size = message_count(n, rate)
        _check_budget(self.size, n)
        self._in_size = len(kernel.input_alphabet)
        rows = np.array(
            [[float(v) for v in row] for row in _kernel_rows(kernel)], dtype=float
        )
        with np.errstate(divide="ignore"):
            self._loglik = np.log(rows)
        self._codebook: np.ndarray | None = None

    def prepare(self, message_limit: int, batch_rng) -> None:
        if message_limit > self.size:
            raise ValueError(
                f"transport carries {self.size} messages but the source code "
                f"needs {message_limit}"
            )
        self._codebook = batch_rng.integers(
            self._in_size, size=(self.size, self.n)
        ).astype(np.int64)

    def carry(self, index: int, rng) -> int | None:
        cb = self._codebook
        y = _sample_indices(self.kernel, cb[index], rng)
        scores = self._loglik[cb, y[None, :]].sum(axis=1)
        best = scores.max()
        winners = np.nonzero(scores >= best - 1e-12)[0]
        if winners.size != 1:
            return None
        return int(winners[0])


def _kernel_rows(kernel):
    if hasattr(kernel, "rows_exact") and kernel.rows_exact is not None:
        return kernel.rows_exact
    return kernel.rows


def _sample_indices(kernel, x_idx: np.ndarray, rng) -> np.ndarray:
    if hasattr(kernel, "sample_indices"):
        return kernel.sample_indices(x_idx[None, :], rng)[0]
    in_alpha = tuple(kernel.input_alphabet)
    out = kernel.sample(tuple(in_alpha[i] for i in x_idx), rng)
    rank = {s: i for i, s in enumerate(kernel.output_alphabet)}
    return np.array([rank[s] for s in out], dtype=np.int64)


@dataclass(frozen=True)
class ExcessEstimate:
    kernel_index: int
    n: int
    trials: int
    excess_count: int
    estimate: float
    sigma: float
    erasures: int
    index_errors: int  # erasures plus silently wrong indices


@dataclass(frozen=True)
class ExcessProfile:
    entries: tuple

    def worst_case(self, n: int | None = None) -> float:
        pool = [e for e in self.entries if n is None or e.n == n]
        if not pool:
            raise ValueError("no entries at that blocklength")
        return max(e.estimate for e in pool)

    def at(self, kernel_index: int, n: int) -> ExcessEstimate:
        for e in self.entries:
            if e.kernel_index == kernel_index and e.n == n:
                return e
        raise KeyError((kernel_index, n))


def _transposed(spec: DistortionSpec) -> DistortionSpec:
    fracs = spec.matrix_fractions()
    cols = len(spec.y_alphabet)
    flipped = tuple(
        tuple(fracs[i][j] for i in range(len(spec.x_alphabet))) for j in range(cols)
    )
    return DistortionSpec(
        spec.y_alphabet, spec.x_alphabet, "additive",
        name=spec.name + "-transposed", matrix=flipped,
    )


class _CoveringContext:
    """Distortion thresholds and the cover probability of one random word."""

    def __init__(self, p_x, spec, level, rep_law, n):
        # decode context with the roles swapped: random letter over the
        # reproduction alphabet, fixed block over the source alphabet
        self.ctx = _DecodeContext(rep_law, 1, _transposed(spec), level, n)
        # forward-orientation thresholds for measuring reproductions
        self.fwd = _DecodeContext(p_x, 1, spec, level, n)
        self.cache: dict[tuple, float] = {}

    def cover_prob(self, x_counts: tuple) -> float:
        got = self.cache.get(x_counts)
        if got is None:
            if self.ctx.x_size == 2 and self.ctx.y_size == 2:
                got = _jt_prob_binary(x_counts, self.ctx)
            else:
                got = _jt_prob_general(x_counts, self.ctx)
            self.cache[x_counts] = got
        return got


def separation_pipeline(
    p_x: Distribution,
    spec: DistortionSpec,
    level,
    *,
    source_rate=None,
    identity_source: bool = False,
    channel=None,
    channel_rate=None,
    rep_law: Distribution | None = None,
    blocklengths,
    trials: int,
    seed: int,
    batch_size: int = 100,
    explicit_limit: int = EXPLICIT_MESSAGE_LIMIT,
) -> ExcessProfile:
    """Empirical excess-distortion probabilities for the full chain.

    Exactly one of ``identity_source`` / ``source_rate`` selects the source
    code.  ``channel=None`` is the noiseless transport; otherwise a random
    channel code at ``channel_rate`` rides each kernel (compound sets give
    one entry per kernel).
    """
    if identity_source == (source_rate is not None):
        raise ValueError("choose exactly one of identity_source or source_rate")
    if spec.kind != "additive":
        raise ValueError("the pipeline requires an additive spec")
    if rep_law is None:
        rep_law = Distribution.uniform(spec.y_alphabet)
    if tuple(rep_law.alphabet) != tuple(spec.y_alphabet):
        raise ValueError("reproduction law must live on the measure's reproduction alphabet")
    kernels = [None] if channel is None else _kernel_list(channel)
    if channel is not None and channel_rate is None:
        raise ValueError("channel_rate is required with a channel")
    ns = [blocklengths] if isinstance(blocklengths, int) else list(blocklengths)
    entries = []
    for n in ns:
        for k_idx, kernel in enumerate(kernels):
            entries.append(
                _run_one(
                    p_x, spec, level, source_rate, identity_source, kernel, k_idx,
                    channel_rate, rep_law, n, trials, seed, batch_size, explicit_limit,
                )
            )
    return ExcessProfile(tuple(entries))


def _kernel_list(channel):
    if hasattr(channel, "kernels"):
        return list(channel.kernels)
    if isinstance(channel, (list, tuple)):
        return list(channel)
    return [channel]


def _run_one(
    p_x, spec, level, source_rate, identity_source, kernel, k_idx,
    channel_rate, rep_law, n, trials, seed, batch_size, explicit_limit,
):
    cover = _CoveringContext(p_x, spec, level, rep_law, n)
    p = p_x.as_floats()
    x_size = len(p_x.alphabet)
    if identity_source:
        if tuple(spec.x_alphabet) != tuple(spec.y_alphabet):
            raise ValueError("identity source code needs matching alphabets")
        m_source = x_size**n
    else:
        m_source = message_count(n, source_rate)
    implicit = (not identity_source) and m_source > explicit_limit
    if kernel is None:
        transport = NoiselessTransport()
    else:
        transport = RandomCodeTransport(kernel, n, channel_rate)
        if implicit:
            raise ValueError(
                "source codebooks beyond the explicit budget require the "
                "noiseless transport"
            )
        if identity_source and m_source > transport.size:
            raise ValueError(
                "identity source code does not fit through this transport"
            )

    excess = erasures = index_errors = 0
    done = 0
    batch = 0
    rep_p = rep_law.as_floats()
    while done < trials:
        take = min(batch_size, trials - done)
        if not identity_source and not implicit:
            cb_rng = derive_rng(seed, "source-codebook", batch)
            _check_budget(m_source, n)
            source_words = cb_rng.choice(
                len(rep_p), size=(m_source, n), p=rep_p
            ).astype(np.int64)
        if kernel is not None:
            transport.prepare(m_source, derive_rng(seed, "channel-codebook", batch))
        for t in range(take):
            rng = derive_rng(seed, "trial", k_idx, batch, t)
            x = rng.choice(x_size, size=n, p=p).astype(np.int64)
            if implicit:
                x_counts = tuple(int((x == v).sum()) for v in range(x_size))
                p_cov = cover.cover_prob(x_counts)
                if p_cov <= 0.0:
                    fail = 1.0
                elif p_cov >= 1.0:
                    fail = 0.0
                else:
                    fail = math.exp(float(m_source) * math.log1p(-p_cov))
                if rng.random() < fail:
                    excess += 1
                continue
            if identity_source:
                sent = 0
                for v in x:
                    sent = sent * x_size + int(v)
            else:
                dists = cover.fwd.dmat_int[x[None, :], source_words].sum(axis=1)
                sent = int(dists.argmin())
            got = transport.carry(sent, rng)
            if got is None:
                erasures += 1
                index_errors += 1
                got = 0
            elif got != sent:
                index_errors += 1
            if identity_source:
                rep = _digits(got, x_size, n)
            else:
                rep = source_words[got]
            total = int(cover.fwd.dmat_int[x, rep].sum())
            if total * cover.fwd.thr_den > cover.fwd.thr_num:
                excess += 1
        done += take
        batch += 1
    est = excess / trials
    sigma = math.sqrt(est * (1 - est) / trials)
    return ExcessEstimate(k_idx, n, trials, excess, est, sigma, erasures, index_errors)


def _digits(index: int, base: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        out[pos] = index % base
        index //= base
    return out
