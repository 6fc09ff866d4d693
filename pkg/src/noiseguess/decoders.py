"""Noise-guessing decoders.

Deterministic guessing queries noise sequences in a fixed order: types sorted
by descending metric (ties broken lexicographically on the flattened count
matrix), members inside each type in the canonical enumeration order.  With
the matched metric this is guessing decoding with the true channel law; with
the maximising or weighting metric it needs no channel parameters at all.

Randomised guessing draws noise sequences from a proposal law instead,
collects candidate codewords up to a list size, and declares the one whose
noise has the highest weighting (KT) mass.

Every decoder stops after ``cap`` membership tests and reports abandonment,
which callers count as a block error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .channel import ModelStructure, UnifilarModel, _as_structure, make_memoryless, state_path
from .codes import ExplicitCodebook, LinearCode, pack_bits, unpack_bits
from .ftypes import CountMatrix, count_stats, iter_type_class, iter_types
from .metrics import (
    MatchedMetric,
    MaximisingMetric,
    WeightingMetric,
    kt_log_prob,
)

TRAINING_PATTERN = (0, 1, 0, 1, 0, 1, 0, 1)


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one decode: message (None on abandonment), membership-test
    count, and the log-metric of the winning noise sequence."""

    message: int | None
    queries: int
    metric_of_winner: float | None = None

    @property
    def abandoned(self) -> bool:
        return self.message is None


def query_cap(n: int, effective_rate: float, alphabet_size: int) -> int:
    """Hard query budget 2^{n (log|A| - R)}, rounded up."""
    gap = n * (math.log2(alphabet_size) - effective_rate)
    if gap <= 0:
        raise ValueError("effective rate must be below log2 of the alphabet size")
    value = 2.0 ** gap
    return math.ceil(value - 1e-9 * max(value, 1.0))


class GuessPlan:
    """Deterministic guess order for one (metric, block length) pair.

    The packed guess buffer is materialised on demand and kept; the type
    census used to produce it lives only inside the materialising call, so a
    cached plan costs little more than its buffer.
    """

    def __init__(self, metric, n: int):
        self.metric = metric
        self.n = n
        self.structure: ModelStructure = metric.structure
        self._packed = np.empty(0, dtype=np.uint64)
        self._exhausted = False

    # -- census and generic iteration ---------------------------------------

    def census(self) -> list[tuple[CountMatrix, float]]:
        """Types with their log-metrics, in guess order.  Built fresh per call."""
        entries = [
            (c, self.metric.log_metric(c)) for c in iter_types(self.structure, self.n)
        ]
        entries.sort(key=lambda item: (-item[1], item[0].flat()))
        return entries

    def iter_guesses(self) -> Iterator[np.ndarray]:
        """All noise sequences in guess order (lazily, covering the space)."""
        for c, _ in self.census():
            yield from iter_type_class(c, self.structure)

    # -- packed fast path ----------------------------------------------------

    def packed_prefix(self, k: int) -> np.ndarray:
        """First ``k`` guesses as packed uint64 (fewer if the space is smaller).

        Extending an existing buffer replays the deterministic order and
        skips the part already held.
        """
        if len(self._packed) < k and not self._exhausted:
            if self.structure.alphabet_size != 2 or self.n > 63:
                raise ValueError("packed guesses need a binary alphabet and n <= 63")
            pow2 = np.array(
                [1 << (self.n - 1 - j) for j in range(self.n)], dtype=np.int64
            )
            skip = len(self._packed)
            fresh: list[int] = []
            seen = 0
            for z in self.iter_guesses():
                if seen >= skip:
                    fresh.append(int(z @ pow2))
                    if skip + len(fresh) >= k:
                        break
                seen += 1
            else:
                self._exhausted = True
            if fresh:
                self._packed = np.concatenate(
                    [self._packed, np.array(fresh, dtype=np.uint64)]
                )
        return self._packed[: min(k, len(self._packed))]


_PLAN_CACHE: dict = {}


def plan_for(metric, n: int) -> GuessPlan:
    key = (metric.cache_key(), n)
    plan = _PLAN_CACHE.get(key)
    if plan is None:
        plan = GuessPlan(metric, n)
        _PLAN_CACHE[key] = plan
    return plan


def clear_plan_cache() -> None:
    _PLAN_CACHE.clear()


# ---------------------------------------------------------------------------
# Deterministic guessing


def _subtract_mod(y: np.ndarray, z: np.ndarray, q: int) -> np.ndarray:
    return (y - z) % q


def decode_deterministic(y, code, metric, cap: int, plan: GuessPlan | None = None) -> DecodeOutcome:
    """Query y - z for guesses z in metric order until a codeword appears.

    With the matched metric this realises guessing decoding with the true
    channel statistics; abandonment is reported after ``cap`` queries.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    y = np.asarray(y, dtype=np.int64)
    if plan is None:
        plan = plan_for(metric, len(y))
    if isinstance(code, LinearCode) and plan.structure.alphabet_size == 2 and len(y) <= 63:
        return _decode_deterministic_packed(pack_bits(y), code, plan, cap)

    q = plan.structure.alphabet_size
    queries = 0
    for z in plan.iter_guesses():
        queries += 1
        word = _subtract_mod(y, z, q)
        if code.contains_word(word):
            return DecodeOutcome(
                message=code.message_from_word(word),
                queries=queries,
                metric_of_winner=plan.metric.log_metric(
                    count_stats(plan.structure, z)
                ),
            )
        if queries >= cap:
            break
    return DecodeOutcome(message=None, queries=queries)


def _decode_deterministic_packed(
    y_packed: int, code: LinearCode, plan: GuessPlan, cap: int
) -> DecodeOutcome:
    checked = 0
    for stage in (min(512, cap), cap):
        if stage <= checked:
            continue
        buf = plan.packed_prefix(stage)
        if len(buf) <= checked:
            break  # guess space exhausted
        words = np.uint64(y_packed) ^ buf[checked:]
        hits = np.flatnonzero(code.contains_batch(words))
        if len(hits):
            first = int(hits[0])
            word = int(words[first])
            z = unpack_bits(y_packed ^ word, plan.n)
            return DecodeOutcome(
                message=code.message_from_packed(word),
                queries=checked + first + 1,
                metric_of_winner=plan.metric.log_metric(
                    count_stats(plan.structure, z)
                ),
            )
        checked = len(buf)
        if len(buf) < stage:
            break  # guess space exhausted
    return DecodeOutcome(message=None, queries=checked)


# ---------------------------------------------------------------------------
# Randomised guessing


def decode_randomised(
    y,
    code,
    sampler,
    list_size: int,
    cap: int,
    rng: np.random.Generator,
    chunk: int = 256,
) -> DecodeOutcome:
    """Draw noise guesses from ``sampler``; keep up to ``list_size`` distinct
    candidate codewords; declare the one whose noise has the largest KT mass.

    Queries are counted per draw, including repeated sequences.  Abandonment
    means the cap expired with no candidate at all.
    """
    if list_size < 1 or cap < 1:
        raise ValueError("list_size and cap must be >= 1")
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    structure = getattr(sampler, "structure", None)
    if list_size > 1 and structure is None:
        raise ValueError("list selection needs the sampler's model structure")
    packed_ok = (
        isinstance(code, LinearCode)
        and n <= 63
        and (structure is None or structure.alphabet_size == 2)
    )
    draw_packed = getattr(sampler, "draw_packed_batch", None) if packed_ok else None
    y_packed = pack_bits(y) if packed_ok else None
    pow2 = (
        np.array([1 << (n - 1 - j) for j in range(n)], dtype=np.int64)
        if packed_ok
        else None
    )

    def noise_of(i, draws, packed):
        if draws is not None:
            return draws[i]
        return unpack_bits(int(packed[i]), n)

    candidates: dict = {}
    queries = 0
    while queries < cap and len(candidates) < list_size:
        size = min(chunk, cap - queries)
        draws = packed = None
        if draw_packed is not None:
            packed = draw_packed(rng, size)
        else:
            draws = np.asarray(sampler.draw_batch(rng, size), dtype=np.int64)
        if packed_ok:
            if packed is None:
                packed = (draws @ pow2).astype(np.uint64)
            words = np.uint64(y_packed) ^ packed
            hits = np.flatnonzero(code.contains_batch(words))
        else:
            q = getattr(code, "alphabet_size", 2)
            hits = np.array(
                [
                    i
                    for i in range(size)
                    if code.contains_word(_subtract_mod(y, draws[i], q))
                ],
                dtype=np.int64,
            )
        stop_at = size
        for i in map(int, hits):
            if packed_ok:
                word_key = int(words[i])
                message = code.message_from_packed(word_key)
            else:
                word = _subtract_mod(y, draws[i], getattr(code, "alphabet_size", 2))
                word_key = tuple(int(b) for b in word)
                message = code.message_from_word(word)
            if word_key not in candidates:
                metric = (
                    kt_log_prob(count_stats(structure, noise_of(i, draws, packed)))
                    if structure is not None
                    else None
                )
                candidates[word_key] = (metric, message)
                if len(candidates) >= list_size:
                    stop_at = i + 1
                    break
        queries += stop_at
        chunk = min(chunk * 4, 4096)

    if not candidates:
        return DecodeOutcome(message=None, queries=queries)
    if len(candidates) == 1 or structure is None:
        metric, message = next(iter(candidates.values()))
        return DecodeOutcome(message=message, queries=queries, metric_of_winner=metric)
    # ties between distinct candidates resolve to the first collected
    best = max(candidates.values(), key=lambda item: item[0])
    return DecodeOutcome(message=best[1], queries=queries, metric_of_winner=best[0])


# ---------------------------------------------------------------------------
# Baselines


def estimate_markov_parameters(structure_or_model, noise_symbols) -> UnifilarModel:
    """Add-1/2 smoothed conditional estimates from an observed noise stream."""
    st = _as_structure(structure_or_model)
    c = count_stats(st, noise_symbols)
    q = st.alphabet_size
    theta = tuple(
        tuple((c.counts[s][z] + 0.5) / (c.state_totals[s] + q / 2.0) for z in range(q))
        for s in range(st.num_states)
    )
    return UnifilarModel(structure=st, theta=theta)


def _structure_with_initial_state(st: ModelStructure, s0: int) -> ModelStructure:
    return ModelStructure(
        alphabet_size=st.alphabet_size,
        num_states=st.num_states,
        next_state=st.next_state,
        initial_state=s0,
    )


_PUNCTURED_CACHE: dict = {}


def punctured_for_training(base_code: LinearCode, training_len: int = 8) -> LinearCode:
    """Puncture the last ``training_len`` coordinates of the frame code."""
    from .codes import puncture

    key = (id(base_code), training_len)
    code = _PUNCTURED_CACHE.get(key)
    if code is None:
        positions = tuple(range(base_code.n - training_len + 1, base_code.n + 1))
        code = puncture(base_code, positions)
        _PUNCTURED_CACHE[key] = code
    return code


def decode_training(
    y_full,
    base_code: LinearCode,
    cap: int,
    structure: ModelStructure | None = None,
    pattern=TRAINING_PATTERN,
) -> DecodeOutcome:
    """Training-based baseline: estimate the channel from a known prefix, then
    run matched deterministic guessing on the punctured coded segment.

    The frame is [training pattern | coded bits].  The state reached at the
    end of the training noise is known to the receiver and becomes the
    initial state of the estimated model.
    """
    y_full = np.asarray(y_full, dtype=np.int64)
    if len(y_full) != base_code.n:
        raise ValueError("frame length must match the base code")
    return decode_training_packed(
        pack_bits(y_full), base_code, cap, structure=structure, pattern=pattern
    )


def decode_training_packed(
    y_packed: int,
    base_code: LinearCode,
    cap: int,
    structure: ModelStructure | None = None,
    pattern=TRAINING_PATTERN,
) -> DecodeOutcome:
    t = len(pattern)
    n_coded = base_code.n - t
    if n_coded < 1:
        raise ValueError("frame shorter than the training prefix")
    if structure is None:
        from .channel import make_markov_order1

        structure = make_markov_order1(0.5, 0.5).structure
    if structure.alphabet_size != 2:
        raise ValueError("training decoding is implemented for binary alphabets")
    training_symbols = unpack_bits(y_packed >> n_coded, t)
    training_noise = (training_symbols - np.asarray(pattern, dtype=np.int64)) % 2

    est = estimate_markov_parameters(structure, training_noise)
    s_after = int(state_path(structure, training_noise)[-1])
    est_structure = _structure_with_initial_state(structure, s_after)
    est = UnifilarModel(structure=est_structure, theta=est.theta)

    punctured = punctured_for_training(base_code, t)
    plan = plan_for(MatchedMetric(est), n_coded)
    coded_packed = y_packed & ((1 << n_coded) - 1)
    return _decode_deterministic_packed(coded_packed, punctured, plan, cap)


def decode_memoryless_mismatched(y, code, stationary, cap: int) -> DecodeOutcome:
    """Mismatched baseline: matched guessing for a memoryless model whose
    symbol law is the stationary distribution of the true noise process."""
    model = make_memoryless(stationary)
    return decode_deterministic(y, code, MatchedMetric(model), cap)


def encode_training_frame(base_code: LinearCode, message: int, pattern=TRAINING_PATTERN) -> int:
    """Packed 63-bit frame: training pattern first, then the punctured codeword."""
    punctured = punctured_for_training(base_code, len(pattern))
    coded = punctured.encode_packed(message)
    return (pack_bits(pattern) << punctured.n) | coded
