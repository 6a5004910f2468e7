"""Multi-user media, unicast demands, and layered source replacement.

A medium couples N users memorylessly: one joint per-letter kernel maps the
tuple of user inputs to a law over the tuple of user outputs.  Unicast
demands name ordered (sender, receiver) pairs, each with its own source law,
distortion spec and target level; sources are independent across pairs by
construction (every pair draws from its own derived stream).

``layered_replacement`` is the distributional heart: replacing one pair's
raw source input with a codeword drawn from an i.i.d. codebook leaves every
signal observed by the other pairs unchanged in law, because the selected
codeword's marginal law is the i.i.d. product of the codebook letter law
(the selecting index comes from source coding and is independent of the
codebook).  The check computes total variation exactly over the enumerated
block space, so a mismatched codebook law is detected with certainty, not
statistically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distortion import DistortionSpec, block_distortion
from .pipeline import separation_pipeline
from .probability import Distribution, as_fraction
from .seeding import derive_rng

__all__ = [
    "MemorylessMedium",
    "IndependentLinksMedium",
    "independent_links_medium",
    "xor_interference_medium",
    "UnicastDemand",
    "PairExcess",
    "MultiuserProfile",
    "simulate_unicast",
    "UnicastSystem",
    "ReplacementReport",
    "layered_replacement",
    "joint_signal_law",
    "end_to_end_separation",
]

EXACT_BLOCK_LIMIT = 4096


class MemorylessMedium:
    """N-user medium acting independently per letter position."""

    def __init__(self, input_alphabets, output_alphabets, letter_law, name="medium"):
        self.input_alphabets = tuple(tuple(a) for a in input_alphabets)
        self.output_alphabets = tuple(tuple(a) for a in output_alphabets)
        self.letter_law = dict(letter_law)
        self.name = name
        joint_inputs = list(itertools.product(*self.input_alphabets))
        joint_outputs = list(itertools.product(*self.output_alphabets))
        for key in joint_inputs:
            if key not in self.letter_law:
                raise ValueError(f"letter law missing joint input {key!r}")
            law = self.letter_law[key]
            if tuple(law.alphabet) != tuple(joint_outputs):
                raise ValueError("letter law rows must share one joint output alphabet")
        self._joint_inputs = joint_inputs
        self._joint_outputs = joint_outputs
        self._cum = np.cumsum(
            np.array([self.letter_law[k].as_floats() for k in joint_inputs]), axis=1
        )
        self._out_matrix = np.array(
            [
                [self.output_alphabets[u].index(sym) for u, sym in enumerate(joint)]
                for joint in joint_outputs
            ],
            dtype=np.int64,
        )

    @property
    def user_count(self) -> int:
        return len(self.input_alphabets)

    def is_rational(self) -> bool:
        return all(law.is_rational() for law in self.letter_law.values())

    def letter_distribution(self, joint_input: tuple) -> Distribution:
        return self.letter_law[tuple(joint_input)]

    def sample_indices(self, input_blocks, rng) -> list[np.ndarray]:
        """Per-user output index arrays for per-user input index arrays."""
        n = len(input_blocks[0])
        # itertools.product order is mixed-radix with user 0 most significant
        rows = np.zeros(n, dtype=np.int64)
        for u, block in enumerate(input_blocks):
            rows = rows * len(self.input_alphabets[u]) + np.asarray(block, dtype=np.int64)
        u_draws = rng.random(n)
        out_joint = (u_draws[:, None] < self._cum[rows]).argmax(axis=1)
        gathered = self._out_matrix[out_joint]
        return [gathered[:, u].copy() for u in range(self.user_count)]

    def output_block_law(self, input_blocks) -> dict:
        """Exact law over joint output blocks for fixed per-user input blocks.

        Keys are tuples (one block tuple per user); values are Fractions.
        """
        n = len(input_blocks[0])
        law: dict[tuple, Fraction] = {tuple(() for _ in range(self.user_count)): Fraction(1)}
        for pos in range(n):
            key = tuple(input_blocks[u][pos] for u in range(self.user_count))
            letter = self.letter_law[key]
            new: dict[tuple, Fraction] = {}
            for prefix, pr in law.items():
                for joint_out, mass in zip(letter.alphabet, letter.masses):
                    m = as_fraction(mass)
                    if m == 0:
                        continue
                    ext = tuple(
                        prefix[u] + (joint_out[u],) for u in range(self.user_count)
                    )
                    new[ext] = new.get(ext, Fraction(0)) + pr * m
            law = new
        return law


class IndependentLinksMedium(MemorylessMedium):
    """Each ordered pair has a private kernel; no cross-pair coupling."""

    def __init__(self, link_kernels: dict, name="independent-links"):
        self.link_kernels = dict(link_kernels)
        users = sorted({u for pair in self.link_kernels for u in pair})
        if users != list(range(len(users))):
            raise ValueError("users must be 0..N-1")
        receivers = [pair[1] for pair in self.link_kernels]
        if len(set(receivers)) != len(receivers):
            raise ValueError("each user may receive on at most one link")
        senders = {pair[0]: pair for pair in self.link_kernels}
        if len(senders) != len(self.link_kernels):
            raise ValueError("each user may send on at most one link")
        in_alphas = []
        out_alphas = []
        incoming = {pair[1]: kernel for pair, kernel in self.link_kernels.items()}
        outgoing = {pair[0]: kernel for pair, kernel in self.link_kernels.items()}
        for u in users:
            in_alphas.append(
                tuple(outgoing[u].input_alphabet) if u in outgoing else ("*",)
            )
            out_alphas.append(
                tuple(incoming[u].output_alphabet) if u in incoming else ("*",)
            )
        law = {}
        for joint_in in itertools.product(*in_alphas):
            cells: dict[tuple, Fraction] = {}
            outs = []
            for u in users:
                if u in incoming:
                    kernel = incoming[u]
                    sender = next(p[0] for p in self.link_kernels if p[1] == u)
                    row_idx = kernel.input_alphabet.index(joint_in[sender])
                    rows = kernel.rows_exact if getattr(kernel, "rows_exact", None) is not None else kernel.rows
                    outs.append(
                        [(sym, as_fraction(v)) for sym, v in zip(kernel.output_alphabet, rows[row_idx])]
                    )
                else:
                    outs.append([("*", Fraction(1))])
            masses = {}
            for combo in itertools.product(*outs):
                key = tuple(sym for sym, _ in combo)
                pr = Fraction(1)
                for _, v in combo:
                    pr *= v
                masses[key] = pr
            alphabet = list(itertools.product(*out_alphas))
            law[joint_in] = Distribution.rational(
                alphabet, [masses.get(a, Fraction(0)) for a in alphabet]
            )
        super().__init__(in_alphas, out_alphas, law, name=name)


def independent_links_medium(link_kernels: dict) -> IndependentLinksMedium:
    """Medium from a dict {(sender, receiver): kernel}; kernels must be exact."""
    for kernel in link_kernels.values():
        if getattr(kernel, "rows_exact", None) is None:
            raise ValueError("independent links need exact (rational) kernels")
    return IndependentLinksMedium(link_kernels)


def xor_interference_medium(flip_probability) -> MemorylessMedium:
    """Two users; user 1 hears user 0 cleanly through a flip channel, while
    user 0 hears the XOR of both inputs through an independent flip channel."""
    p = as_fraction(flip_probability)
    if not (0 <= p <= 1):
        raise ValueError("flip probability must lie in [0, 1]")
    outs = list(itertools.product((0, 1), (0, 1)))
    law = {}
    for x0, x1 in itertools.product((0, 1), (0, 1)):
        mix = x0 ^ x1
        masses = []
        for o0, o1 in outs:
            m0 = (1 - p) if o0 == mix else p
            m1 = (1 - p) if o1 == x0 else p
            masses.append(m0 * m1)
        law[(x0, x1)] = Distribution.rational(outs, masses)
    return MemorylessMedium(((0, 1), (0, 1)), ((0, 1), (0, 1)), law, name="xor-interference")


# ---------------------------------------------------------------------------
# demands and direct simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnicastDemand:
    sender: int
    receiver: int
    source: Distribution
    spec: DistortionSpec
    level: object

    @property
    def pair(self) -> tuple:
        return (self.sender, self.receiver)


@dataclass(frozen=True)
class PairExcess:
    medium_index: int
    pair: tuple
    n: int
    trials: int
    excess_count: int
    estimate: float
    sigma: float
    degenerate: bool = False
    erasures: int = 0


@dataclass(frozen=True)
class MultiuserProfile:
    entries: tuple
    all_pairs_excess: tuple  # per medium: trials where every pair exceeded
    trials: int

    def at(self, medium_index: int, pair: tuple) -> PairExcess:
        for e in self.entries:
            if e.medium_index == medium_index and e.pair == tuple(pair):
                return e
        raise KeyError((medium_index, pair))

    def worst_case(self, pair: tuple) -> float:
        pool = [e.estimate for e in self.entries if e.pair == tuple(pair)]
        if not pool:
            raise ValueError("unknown pair")
        return max(pool)


def _media_list(media) -> list:
    if isinstance(media, MemorylessMedium):
        return [media]
    return list(media)


def _check_demands(medium: MemorylessMedium, demands) -> None:
    senders = [d.sender for d in demands]
    if len(set(senders)) != len(senders):
        raise ValueError("identity modems allow one outgoing demand per user")
    for d in demands:
        if not (0 <= d.sender < medium.user_count and 0 <= d.receiver < medium.user_count):
            raise ValueError(f"demand {d.pair} names an unknown user")
        if tuple(d.source.alphabet) != medium.input_alphabets[d.sender]:
            raise ValueError(f"source alphabet of pair {d.pair} must match the medium input")
        if tuple(d.spec.x_alphabet) != tuple(d.source.alphabet):
            raise ValueError(f"distortion spec of pair {d.pair} must match its source")
        if tuple(d.spec.y_alphabet) != medium.output_alphabets[d.receiver]:
            raise ValueError(
                f"distortion spec of pair {d.pair} must match the receiver's output alphabet"
            )


def simulate_unicast(
    media, demands, n: int, trials: int, seed: int
) -> MultiuserProfile:
    """Per-pair excess-distortion frequencies with identity modems.

    Every sender inputs its source block directly; every receiver reproduces
    by reading its observed block.  Negative target levels are degenerate
    (excess is certain) and flagged as such.
    """
    demands = tuple(demands)
    media = _media_list(media)
    entries = []
    joint_counts = []
    for med_idx, medium in enumerate(media):
        _check_demands(medium, demands)
        counts = {d.pair: 0 for d in demands}
        joint = 0
        thresholds = {d.pair: n * as_fraction(d.level) for d in demands}
        for t in range(trials):
            blocks = {}
            for p_idx, d in enumerate(demands):
                rng = derive_rng(seed, "source", med_idx, p_idx, t)
                idx = rng.choice(
                    len(d.source.alphabet), size=n, p=d.source.as_floats()
                )
                blocks[d.sender] = idx.astype(np.int64)
            inputs = []
            for u in range(medium.user_count):
                if u in blocks:
                    inputs.append(blocks[u])
                else:
                    inputs.append(np.zeros(n, dtype=np.int64))
            med_rng = derive_rng(seed, "medium", med_idx, t)
            outputs = medium.sample_indices(inputs, med_rng)
            exceeded_all = len(demands) > 0
            for d in demands:
                x = tuple(d.source.alphabet[i] for i in blocks[d.sender])
                y = tuple(
                    medium.output_alphabets[d.receiver][i] for i in outputs[d.receiver]
                )
                total = as_fraction(block_distortion(d.spec, x, y))
                if total > thresholds[d.pair]:
                    counts[d.pair] += 1
                else:
                    exceeded_all = False
            if exceeded_all:
                joint += 1
        for d in demands:
            c = counts[d.pair]
            est = c / trials
            entries.append(
                PairExcess(
                    med_idx, d.pair, n, trials, c, est,
                    math.sqrt(est * (1 - est) / trials),
                    degenerate=as_fraction(d.level) < 0,
                )
            )
        joint_counts.append(joint)
    return MultiuserProfile(tuple(entries), tuple(joint_counts), trials)


# ---------------------------------------------------------------------------
# layered replacement with exact distribution comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnicastSystem:
    medium: MemorylessMedium
    demands: tuple
    n: int
    input_laws: tuple  # per-user per-letter input law (iid across positions)

    @classmethod
    def fresh(cls, medium, demands, n: int) -> "UnicastSystem":
        demands = tuple(demands)
        _check_demands(medium, demands)
        laws = []
        by_sender = {d.sender: d for d in demands}
        for u in range(medium.user_count):
            if u in by_sender:
                laws.append(by_sender[u].source)
            else:
                laws.append(Distribution.point_mass(medium.input_alphabets[u], medium.input_alphabets[u][0]))
        return cls(medium, demands, n, tuple(laws))


@dataclass(frozen=True)
class ReplacementReport:
    pair: tuple
    codebook_law: Distribution
    matched: bool
    total_variation: Fraction
    states_compared: int


def joint_signal_law(system: UnicastSystem) -> dict:
    """Exact joint law over (all input blocks, all output blocks)."""
    medium = system.medium
    if not medium.is_rational():
        raise ValueError("exact mode requires a rational medium")
    for law in system.input_laws:
        if not law.is_rational():
            raise ValueError("exact mode requires rational input laws")
    n = system.n
    spaces = [
        list(itertools.product(alpha, repeat=n)) for alpha in medium.input_alphabets
    ]
    total_states = 1
    for s in spaces:
        total_states *= len(s)
    if total_states > EXACT_BLOCK_LIMIT:
        raise ValueError("joint block space too large for exact mode")
    out: dict[tuple, Fraction] = {}
    for combo in itertools.product(*spaces):
        pr = Fraction(1)
        for u, block in enumerate(combo):
            law = system.input_laws[u]
            for sym in block:
                pr *= as_fraction(law.mass(sym))
        if pr == 0:
            continue
        for joint_out, mass in medium.output_block_law(combo).items():
            key = (combo, joint_out)
            out[key] = out.get(key, Fraction(0)) + pr * mass
    return out


def _observable_law(system: UnicastSystem, replaced_pair: tuple) -> dict:
    """Law of the signals other pairs can see: every input block except the
    replaced sender's, and every output block except the replaced receiver's."""
    sender, receiver = replaced_pair
    full = joint_signal_law(system)
    proj: dict[tuple, Fraction] = {}
    for (inputs, outputs), pr in full.items():
        key = (
            tuple(b for u, b in enumerate(inputs) if u != sender),
            tuple(b for u, b in enumerate(outputs) if u != receiver),
        )
        proj[key] = proj.get(key, Fraction(0)) + pr
    return proj


def layered_replacement(
    system: UnicastSystem, pair: tuple, codebook_law: Distribution | None = None
) -> tuple[UnicastSystem, ReplacementReport]:
    """Swap one pair's raw source input for an i.i.d.-codebook encoder input.

    The selected codeword's block law is the i.i.d. product of the codebook
    letter law, so passing the pair's own source law (the default) must leave
    other pairs' observations unchanged; the report carries the exact total
    variation.  A deliberately mismatched law is the negative control.
    """
    pair = tuple(pair)
    demand = next((d for d in system.demands if d.pair == pair), None)
    if demand is None:
        raise ValueError(f"pair {pair} is not among the demands")
    if codebook_law is None:
        codebook_law = demand.source
    if tuple(codebook_law.alphabet) != tuple(system.medium.input_alphabets[demand.sender]):
        raise ValueError("codebook law must live on the sender's input alphabet")
    before = _observable_law(system, pair)
    new_laws = list(system.input_laws)
    new_laws[demand.sender] = codebook_law
    new_system = UnicastSystem(system.medium, system.demands, system.n, tuple(new_laws))
    after = _observable_law(new_system, pair)
    keys = set(before) | set(after)
    tv = sum(
        abs(before.get(k, Fraction(0)) - after.get(k, Fraction(0))) for k in keys
    ) / 2
    matched = codebook_law.masses == demand.source.masses
    report = ReplacementReport(pair, codebook_law, matched, tv, len(keys))
    return new_system, report


# ---------------------------------------------------------------------------
# full separation chains per pair
# ---------------------------------------------------------------------------


def _is_identity_kernel(kernel) -> bool:
    rows = getattr(kernel, "rows_exact", None)
    if rows is None:
        return False
    if tuple(kernel.input_alphabet) != tuple(kernel.output_alphabet):
        return False
    size = len(kernel.input_alphabet)
    return all(
        rows[i][j] == (1 if i == j else 0) for i in range(size) for j in range(size)
    )


def end_to_end_separation(
    media,
    demands,
    source_rates: dict,
    n: int,
    trials: int,
    seed: int,
    *,
    channel_rates: dict | None = None,
    rep_laws: dict | None = None,
) -> MultiuserProfile:
    """Per-pair separation chains over independent links.

    Each pair runs covering source coding at its configured rate, then
    carries the index over its private link (noiseless links carry it
    directly; noisy links use a random channel code at ``channel_rates``).
    Pairs use independent derived seeds, so entries are independent across
    pairs.  Interference media have no per-pair link and are rejected; their
    distributional guarantee is covered by :func:`layered_replacement`.
    """
    demands = tuple(demands)
    media = _media_list(media)
    entries = []
    for med_idx, medium in enumerate(media):
        if demands and not isinstance(medium, IndependentLinksMedium):
            raise ValueError("end-to-end chains require an independent-links medium")
        for p_idx, d in enumerate(demands):
            kernel = medium.link_kernels.get(d.pair)
            if kernel is None:
                raise ValueError(f"medium has no link for pair {d.pair}")
            pair_seed = int(
                derive_rng(seed, "pair-master", med_idx, p_idx).integers(2**31)
            )
            chan = None if _is_identity_kernel(kernel) else kernel
            kwargs = dict(
                p_x=d.source,
                spec=d.spec,
                level=d.level,
                source_rate=source_rates[d.pair],
                blocklengths=n,
                trials=trials,
                seed=pair_seed,
            )
            if chan is not None:
                if channel_rates is None or d.pair not in channel_rates:
                    raise ValueError(f"channel rate required for noisy link {d.pair}")
                kwargs.update(channel=chan, channel_rate=channel_rates[d.pair])
            if rep_laws and d.pair in rep_laws:
                kwargs.update(rep_law=rep_laws[d.pair])
            profile = separation_pipeline(**kwargs)
            e = profile.at(0, n)
            entries.append(
                PairExcess(
                    med_idx, d.pair, n, trials, e.excess_count, e.estimate,
                    e.sigma, erasures=e.erasures,
                )
            )
    return MultiuserProfile(tuple(entries), tuple(0 for _ in media), trials)
