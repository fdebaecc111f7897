"""Eavesdropper bit-channel analysis for erasure observations.

For a generator G and an erasure pattern E, input bit u_i is recoverable
from the unerased codeword positions (given the conditioning set of
already-known bits) exactly when the corresponding coordinate of the
unknown subvector is determined by the linear system; each bit-channel
is itself an erasure channel, so its quality is summarized by the
probability that recovery fails.

Two estimators are provided: Monte-Carlo over sampled erasure patterns
(counter-based Philox RNG, chunked pattern generation, word-packed
elimination kernels) and exhaustive enumeration of all 2^n patterns for
small n.  Per-bit average total variation distance is (1 - p_i)/2, and
the Bhattacharyya parameter of an erasure bit-channel equals its
erasure probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

import numpy as np

from . import _accel, gf2
from ._config import resolve_enum_cap
from .codes import CodeSpec, build_generator
from .gf2 import BitMatrix

__all__ = [
    "RNG_NAME",
    "Conditioning",
    "ErasureTrialPlan",
    "BitChannelEstimate",
    "sample_erasure_pattern",
    "bit_determined",
    "mc_erasure_probs",
    "exact_erasure_probs",
    "polar_bec_recursion",
    "write_bitchannel_csv",
]

RNG_NAME = "numpy.random.Philox (counter-based), numpy Generator.random"

# trials per pattern-generation block; fixed so the sampled stream never
# depends on thread count or memory pressure
_GEN_CHUNK = 8192

DEFAULT_ENUM_CAP = 16

# enumeration kernels pack each row into a single word
_HARD_ENUM_LIMIT = 63


@dataclass(frozen=True)
class Conditioning:
    """Which input bits are treated as known when decoding bit i.

    all-past: bits 1..i-1 are known (the standard bit-channel).
    message-past: only the earlier bits of the message set A are known;
    estimates are produced for the indices in A.
    """

    kind: str
    message_set: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind not in ("all-past", "message-past"):
            raise ValueError(f"unknown conditioning {self.kind!r}")
        if self.kind == "message-past":
            if not self.message_set:
                raise ValueError("message-past conditioning needs a nonempty message set")
            object.__setattr__(self, "message_set", tuple(sorted(set(self.message_set))))
        elif self.message_set is not None:
            raise ValueError("all-past conditioning takes no message set")

    @classmethod
    def all_past(cls) -> "Conditioning":
        return cls("all-past")

    @classmethod
    def message_past(cls, message_set) -> "Conditioning":
        return cls("message-past", tuple(message_set))

    def describe(self) -> str:
        if self.kind == "all-past":
            return "all-past"
        return "message-past(A=[%s])" % ",".join(str(i + 1) for i in self.message_set)


@dataclass(frozen=True)
class ErasureTrialPlan:
    p: float
    trials: int
    seed: int
    conditioning: Conditioning = field(default_factory=Conditioning.all_past)

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"erasure probability must be in [0, 1): {self.p}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1: {self.trials}")


@dataclass(frozen=True)
class BitChannelEstimate:
    """Erasure probability of one bit-channel plus derived quantities."""

    index: int
    erasure_prob: float
    std_err: float
    tvd: float
    bhattacharyya: float

    def __post_init__(self):
        if not 0.0 <= self.erasure_prob <= 1.0:
            raise ValueError(f"erasure_prob out of range: {self.erasure_prob}")
        if self.tvd != (1.0 - self.erasure_prob) / 2.0:
            raise ValueError("tvd must equal (1 - erasure_prob)/2")
        if self.bhattacharyya != self.erasure_prob:
            raise ValueError("bhattacharyya of an erasure bit-channel equals erasure_prob")

    @classmethod
    def make(cls, index: int, erasure_prob: float, std_err: float) -> "BitChannelEstimate":
        prob = float(erasure_prob)
        return cls(
            index=int(index),
            erasure_prob=prob,
            std_err=float(std_err),
            tvd=(1.0 - prob) / 2.0,
            bhattacharyya=prob,
        )


def sample_erasure_pattern(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """One erasure pattern: position j erased when its uniform draw is < p."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"erasure probability must be in [0, 1): {p}")
    return np.nonzero(rng.random(n) < p)[0]


def bit_determined(generator: BitMatrix, erased, known, target: int) -> bool:
    """Reference solvability test for one pattern (entry-wise, not packed).

    Restrict the generator to the unknown input rows ([0:n] minus known)
    and the unerased columns, then ask whether the target coordinate of
    the unknown vector is pinned down by the observations.
    """
    n = generator.rows
    known = set(int(i) for i in known)
    if target in known:
        raise ValueError(f"target {target} is already known")
    if not 0 <= target < n:
        raise IndexError(f"target {target} out of range")
    erased = set(int(i) for i in erased)
    unknown_rows = [i for i in range(n) if i not in known]
    cols = [j for j in range(n) if j not in erased]
    sub = generator.submatrix(unknown_rows, cols)
    return gf2.coordinate_determined(sub, unknown_rows.index(target))


def _pool_and_targets(n: int, conditioning: Conditioning):
    """Row sets for the incremental solver: never-queried pool + query order.

    Query order is descending so that when a target is tested the basis
    holds exactly the rows of the bits that are unknown for it.
    """
    if conditioning.kind == "all-past":
        pool = np.empty(0, dtype=np.int64)
        targets = np.arange(n - 1, -1, -1, dtype=np.int64)
    else:
        a = [i for i in conditioning.message_set if i >= n]
        if a:
            raise IndexError(f"message set indices {a} out of range for n={n}")
        in_a = set(conditioning.message_set)
        pool = np.array([i for i in range(n) if i not in in_a], dtype=np.int64)
        targets = np.array(sorted(in_a, reverse=True), dtype=np.int64)
    return pool, targets


def _as_generator(spec_or_generator: Union[CodeSpec, BitMatrix]) -> BitMatrix:
    if isinstance(spec_or_generator, CodeSpec):
        return build_generator(spec_or_generator)
    return spec_or_generator


def mc_erasure_probs(
    spec_or_generator: Union[CodeSpec, BitMatrix], plan: ErasureTrialPlan
) -> list[BitChannelEstimate]:
    """Monte-Carlo bit-channel erasure probabilities.

    One erasure pattern per trial, shared by all targets (common random
    numbers).  Patterns are drawn in fixed-size blocks from a Philox
    stream, so results depend only on (seed, trials); the elimination
    kernel writes integer per-trial outcomes, so thread count never
    changes the output.
    """
    generator = _as_generator(spec_or_generator)
    n = generator.rows
    if generator.cols != n:
        raise gf2.ShapeError(f"generator must be square, got {generator.shape}")
    pool, targets = _pool_and_targets(n, plan.conditioning)
    nwords = generator.words.shape[1]
    rng = np.random.Generator(np.random.Philox(plan.seed))
    masks = np.empty((plan.trials, nwords), dtype=np.uint64)
    for lo in range(0, plan.trials, _GEN_CHUNK):
        hi = min(lo + _GEN_CHUNK, plan.trials)
        erased = rng.random((hi - lo, n)) < plan.p
        masks[lo:hi] = gf2._pack((~erased).astype(np.uint8))
    out = np.zeros((plan.trials, len(targets)), dtype=np.uint8)
    _accel.solve_trials(generator.words, masks, pool, targets, out)
    determined = out.sum(axis=0, dtype=np.int64)
    estimates = []
    for q, idx in enumerate(targets):
        p_hat = 1.0 - determined[q] / plan.trials
        se = math.sqrt(p_hat * (1.0 - p_hat) / plan.trials)
        estimates.append(BitChannelEstimate.make(int(idx), p_hat, se))
    estimates.sort(key=lambda est: est.index)
    return estimates


def exact_erasure_probs(
    generator: BitMatrix,
    p: float,
    conditioning: Optional[Conditioning] = None,
    cap: Optional[int] = None,
) -> list[BitChannelEstimate]:
    """Exact erasure probabilities by enumerating all 2^n erasure patterns."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"erasure probability must be in [0, 1): {p}")
    conditioning = conditioning or Conditioning.all_past()
    n = generator.rows
    if generator.cols != n:
        raise gf2.ShapeError(f"generator must be square, got {generator.shape}")
    limit = resolve_enum_cap(DEFAULT_ENUM_CAP, cap)
    if n > limit:
        raise ValueError(f"n={n} exceeds enumeration cap {limit} (2^n patterns)")
    if n > _HARD_ENUM_LIMIT:
        raise ValueError(f"enumeration supports n <= {_HARD_ENUM_LIMIT}")
    pool, targets = _pool_and_targets(n, conditioning)
    weights = np.array([p**e * (1.0 - p) ** (n - e) for e in range(n + 1)])
    probs = _accel.exact_undetermined(generator.words, n, pool, targets, weights)
    estimates = [
        BitChannelEstimate.make(int(idx), float(probs[q]), 0.0)
        for q, idx in enumerate(targets)
    ]
    estimates.sort(key=lambda est: est.index)
    return estimates


def polar_bec_recursion(p: float, s: int) -> list[float]:
    """Erasure probabilities of the 2^s bit-channels of the all-G2 transform.

    Independent closed form, valid only without a precoder: each stage
    maps q to the pair (1 - (1-q)^2, q^2) in the order matching
    exact_erasure_probs indexing.
    """
    if s < 0:
        raise ValueError("stages must be >= 0")
    probs = [float(p)]
    for _ in range(s):
        nxt = []
        for q in probs:
            nxt.append(2.0 * q - q * q)
            nxt.append(q * q)
        probs = nxt
    return probs


def write_bitchannel_csv(
    fh: IO[str],
    estimates: Sequence[BitChannelEstimate],
    metadata: dict,
    sort_by_tvd: bool = False,
) -> None:
    """CSV with 1-based indices and '#' metadata lines; byte-reproducible."""
    for key, value in metadata.items():
        fh.write(f"# {key}: {value}\n")
    fh.write("index,erasure_prob,std_err,tvd\n")
    rows = list(estimates)
    if sort_by_tvd:
        rows.sort(key=lambda est: (est.tvd, est.index))
    for est in rows:
        fh.write(f"{est.index + 1},{est.erasure_prob!r},{est.std_err!r},{est.tvd!r}\n")
