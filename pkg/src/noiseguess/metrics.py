"""Decoding metrics over noise sequences, and samplers for randomised guessing.

All three metrics are functions of a sequence only through its transition
counts, which is what makes type-wise guess generation possible:

* matched     -- exact log-probability under a known model;
* maximising  -- ``-n * H(empirical law)``; equals the log of the maximised
  likelihood over the parameter family.  The normalising constant over all
  sequences is deliberately dropped: only the induced ordering matters for
  guessing, so the value is NOT a log-probability;
* weighting   -- the Krichevsky-Trofimov mixture (symmetric Dirichlet(1/2)
  prior per state), an honest log-probability with an exact sequential form.

The KT closed form is evaluated with log-gamma, accumulated states-outer,
symbols-inner so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ModelStructure, UnifilarModel, _as_structure
from .ftypes import CountMatrix, count_stats, empirical_entropy, log2_type_prob

_LOG2E = math.log2(math.e)


def _lgamma2(x: float) -> float:
    """log2 of the gamma function."""
    return math.lgamma(x) * _LOG2E


def matched_log_metric(model: UnifilarModel, c: CountMatrix) -> float:
    """log2-probability shared by every member of the class under the model."""
    return log2_type_prob(c, model)


def maximising_log_metric(c: CountMatrix) -> float:
    """``-n * H`` in bits; ranking by it equals ranking by ascending entropy."""
    return -c.n * empirical_entropy(c)


def kt_log_prob(c: CountMatrix) -> float:
    """log2 of the KT mixture probability of any member of the class."""
    q = c.alphabet_size
    half_q = q / 2.0
    total = c.num_states * _lgamma2(half_q) - q * c.num_states * _lgamma2(0.5)
    for row, row_sum in zip(c.counts, c.state_totals):
        for a in row:
            total += _lgamma2(a + 0.5)
        total -= _lgamma2(row_sum + half_q)
    return total


def kt_conditional(prefix_counts: CountMatrix, symbol: int, state: int) -> float:
    """Next-symbol probability given prefix counts: (a(z,s)+1/2)/(a_s(s)+|A|/2)."""
    a = prefix_counts.counts[state][symbol]
    total = prefix_counts.state_totals[state]
    return (a + 0.5) / (total + prefix_counts.alphabet_size / 2.0)


def kt_log_prob_sequential(model_or_structure, symbols) -> float:
    """log2 KT probability as the telescoped product of sequential conditionals.

    Independent route to ``kt_log_prob`` (closed form); the two must agree.
    """
    st = _as_structure(model_or_structure)
    q = st.alphabet_size
    counts = [[0] * q for _ in range(st.num_states)]
    totals = [0] * st.num_states
    s = st.initial_state
    out = 0.0
    for zi in np.asarray(symbols, dtype=np.int64):
        out += math.log2((counts[s][zi] + 0.5) / (totals[s] + q / 2.0))
        counts[s][zi] += 1
        totals[s] += 1
        s = st.next_state[s][zi]
    return out


# ---------------------------------------------------------------------------
# Metric strategy objects (used to build deterministic guess plans)


@dataclass(frozen=True)
class MatchedMetric:
    """Rank noise sequences by their exact probability under a known model."""

    model: UnifilarModel

    @property
    def structure(self) -> ModelStructure:
        return self.model.structure

    def log_metric(self, c: CountMatrix) -> float:
        return matched_log_metric(self.model, c)

    def cache_key(self):
        return ("matched", self.structure, self.model.theta)


@dataclass(frozen=True)
class MaximisingMetric:
    """Rank by maximised likelihood, i.e. ascending empirical entropy."""

    structure: ModelStructure

    def log_metric(self, c: CountMatrix) -> float:
        return maximising_log_metric(c)

    def cache_key(self):
        return ("maximising", self.structure)


@dataclass(frozen=True)
class WeightingMetric:
    """Rank by the KT mixture probability."""

    structure: ModelStructure

    def log_metric(self, c: CountMatrix) -> float:
        return kt_log_prob(c)

    def cache_key(self):
        return ("weighting", self.structure)


# ---------------------------------------------------------------------------
# Samplers for randomised guessing


def sample_kt_sequential(model_or_structure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a sequence from the KT mixture one symbol at a time."""
    st = _as_structure(model_or_structure)
    if n < 1:
        raise ValueError("n must be >= 1")
    q = st.alphabet_size
    counts = [[0] * q for _ in range(st.num_states)]
    totals = [0] * st.num_states
    s = st.initial_state
    out = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    for i in range(n):
        denom = totals[s] + q / 2.0
        acc = 0.0
        z = q - 1
        for cand in range(q):
            acc += (counts[s][cand] + 0.5) / denom
            if u[i] < acc:
                z = cand
                break
        out[i] = z
        counts[s][z] += 1
        totals[s] += 1
        s = st.next_state[s][z]
    return out


def sample_kt_mixture(model_or_structure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw theta rows from Dirichlet(1/2,...,1/2), then forward-sample.

    The marginal law of the output equals the KT mixture.
    """
    st = _as_structure(model_or_structure)
    if n < 1:
        raise ValueError("n must be >= 1")
    q = st.alphabet_size
    theta = rng.dirichlet([0.5] * q, size=st.num_states)
    cum = np.cumsum(theta, axis=1)
    u = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    s = st.initial_state
    for i in range(n):
        z = int(np.searchsorted(cum[s], u[i], side="right"))
        z = min(z, q - 1)
        out[i] = z
        s = st.next_state[s][z]
    return out


def sample_from_type_metric(
    type_census: Sequence[tuple[CountMatrix, float]],
    model_or_structure,
    rng: np.random.Generator,
) -> np.ndarray:
    """Two-step draw: a type with probability proportional to
    ``class_size * 2**per_sequence_log_mass``, then a uniform member of it.

    ``type_census`` pairs each count matrix with its per-sequence log2 mass.
    """
    from .ftypes import type_class_size, unrank

    st = _as_structure(model_or_structure)
    if not type_census:
        raise ValueError("type census is empty")
    sizes = [type_class_size(c, st) for c, _ in type_census]
    log_masses = np.array(
        [math.log2(size) + lm if size > 0 else -math.inf
         for size, (_, lm) in zip(sizes, type_census)]
    )
    finite = log_masses[np.isfinite(log_masses)]
    if len(finite) == 0:
        raise ValueError("type census has no mass")
    shift = finite.max()
    weights = np.exp2(log_masses - shift, where=np.isfinite(log_masses),
                      out=np.zeros_like(log_masses))
    weights /= weights.sum()
    idx = int(rng.choice(len(type_census), p=weights))
    member = int(rng.integers(1, sizes[idx] + 1))
    return unrank(type_census[idx][0], st, member)


class KTSequentialSampler:
    """Batchable KT sequential sampler; the binary case is vectorised."""

    def __init__(self, model_or_structure, n: int):
        self.structure = _as_structure(model_or_structure)
        self.n = n

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return sample_kt_sequential(self.structure, self.n, rng)

    def draw_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, n) array of independent draws."""
        st = self.structure
        if st.alphabet_size == 2:
            return self._draw_batch_binary(rng, size)
        return np.stack([self.draw(rng) for _ in range(size)])

    def _draw_batch_binary(self, rng: np.random.Generator, size: int) -> np.ndarray:
        st = self.structure
        num_states = st.num_states
        table = st.next_state_array
        ones = np.zeros((size, num_states), dtype=np.int64)
        totals = np.zeros((size, num_states), dtype=np.int64)
        state = np.full(size, st.initial_state, dtype=np.int64)
        u = rng.random((size, self.n))
        out = np.empty((size, self.n), dtype=np.int64)
        lanes = np.arange(size)
        for i in range(self.n):
            c1 = ones[lanes, state]
            ct = totals[lanes, state]
            p1 = (c1 + 0.5) / (ct + 1.0)
            z = (u[:, i] < p1).astype(np.int64)
            out[:, i] = z
            ones[lanes, state] += z
            totals[lanes, state] += 1
            state = table[state, z]
        return out


class KTMixtureSampler:
    """Dirichlet(1/2) parameter draw followed by forward sampling.

    Binary order-1 batches draw each lane's conditionals by the arcsine
    inverse CDF (Beta(1/2,1/2) = sin^2(pi u / 2)) and walk every lane in
    lockstep, accumulating the packed word as they go.
    """

    def __init__(self, model_or_structure, n: int):
        self.structure = _as_structure(model_or_structure)
        self.n = n
        st = self.structure
        self._fast = (
            st.alphabet_size == 2
            and st.num_states == 2
            and st.next_state == ((0, 1), (0, 1))
            and n <= 63
        )

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return sample_kt_mixture(self.structure, self.n, rng)

    def draw_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self._fast:
            packed = self.draw_packed_batch(rng, size)
            shifts = np.array(
                [self.n - 1 - j for j in range(self.n)], dtype=np.uint64
            )
            return ((packed[:, None] >> shifts[None, :]) & np.uint64(1)).astype(
                np.int64
            )
        return np.stack([self.draw(rng) for _ in range(size)])

    def draw_packed_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size,) packed uint64 draws, one independent parameter per lane."""
        if not self._fast:
            raise ValueError("packed draws need the binary order-1 structure")
        from ._kernels import mixture_walk

        theta = np.sin(0.5 * np.pi * rng.random((2, size))) ** 2
        t0 = theta[0].astype(np.float32)
        t1 = theta[1].astype(np.float32)
        u = rng.random((size, self.n), dtype=np.float32)
        return mixture_walk(u, t0, t1, bool(self.structure.initial_state))


class TypeMetricSampler:
    """Strategy that draws a type from precomputed masses, then a uniform member.

    This is the only sampling route available for the maximising metric, whose
    lack of sequential structure rules out symbol-by-symbol draws.
    """

    def __init__(self, type_census, model_or_structure):
        self.structure = _as_structure(model_or_structure)
        self.census = list(type_census)
        if not self.census:
            raise ValueError("type census is empty")
        ns = {c.n for c, _ in self.census}
        if len(ns) != 1:
            raise ValueError("census mixes block lengths")
        self.n = ns.pop()
        from .ftypes import type_class_size

        self.sizes = [type_class_size(c, self.structure) for c, _ in self.census]
        log_masses = np.array(
            [math.log2(size) + lm if size > 0 else -math.inf
             for size, (_, lm) in zip(self.sizes, self.census)]
        )
        shift = log_masses[np.isfinite(log_masses)].max()
        weights = np.exp2(log_masses - shift, where=np.isfinite(log_masses),
                          out=np.zeros_like(log_masses))
        self.weights = weights / weights.sum()

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        from .ftypes import unrank

        idx = int(rng.choice(len(self.census), p=self.weights))
        member = int(rng.integers(1, self.sizes[idx] + 1))
        return unrank(self.census[idx][0], self.structure, member)

    def draw_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.stack([self.draw(rng) for _ in range(size)])


class CategoricalSampler:
    """Explicit law over sequences; for small-alphabet toy experiments."""

    def __init__(self, sequences, probabilities, structure: ModelStructure | None = None):
        self.sequences = [np.asarray(zs, dtype=np.int64) for zs in sequences]
        p = np.asarray(probabilities, dtype=np.float64)
        if len(p) != len(self.sequences):
            raise ValueError("one probability per sequence required")
        if abs(p.sum() - 1.0) > 1e-9 or (p < 0).any():
            raise ValueError("probabilities must form a distribution")
        self.probabilities = p
        self.structure = structure
        ns = {len(zs) for zs in self.sequences}
        if len(ns) != 1:
            raise ValueError("sequences must share one length")
        self.n = ns.pop()

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        idx = int(rng.choice(len(self.sequences), p=self.probabilities))
        return self.sequences[idx]

    def draw_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.sequences), p=self.probabilities, size=size)
        return np.stack([self.sequences[i] for i in idx])


def kt_metric_of(model_or_structure, symbols) -> float:
    """KT log2 mass of a concrete sequence (via its counts)."""
    st = _as_structure(model_or_structure)
    return kt_log_prob(count_stats(st, symbols))
