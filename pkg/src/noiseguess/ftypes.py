"""Method of types for finite-state (unifilar) sequences.

Two sequences share a type when they have identical transition counts
``a(z, s)`` (symbol ``z`` emitted from state ``s``) from the same initial
state.  A count matrix is realisable when some walk produces it, which is an
Eulerian-path condition on the induced transition multigraph: per-state flow
conservation up to the start/end correction, plus reachability of every used
state from the start.

Type-class sizes and prefix counts are exact arbitrary-precision integers,
computed by a memoised walk-count recursion over residual count matrices.
Exactness matters: at block length 63 the sizes exceed 2^50 and they feed the
rank/unrank bijection, where off-by-one is fatal.

The canonical order inside a type class is the one induced by generating the
walk one transition at a time, trying candidate successors in ascending state
order (ties, which arise only in the single-state case, broken by ascending
symbol).  ``unrank``/``rank`` and ``iter_type_class`` all follow it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import log2
from typing import Iterator

import numpy as np

from .channel import NEG_INF, ModelStructure, UnifilarModel, _as_structure, state_path


@dataclass(frozen=True)
class CountMatrix:
    """Transition counts of one type: ``counts[s][z]`` = #{i : z_i = z, s_{i-1} = s}."""

    counts: tuple[tuple[int, ...], ...]
    n: int
    start_state: int
    end_state: int

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    @cached_property
    def state_totals(self) -> tuple[int, ...]:
        """Per-state outflow a_s(s) = sum_z a(z, s)."""
        return tuple(sum(row) for row in self.counts)

    @property
    def num_states(self) -> int:
        return len(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts[0])

    def flat(self) -> tuple[int, ...]:
        return tuple(c for row in self.counts for c in row)


@dataclass(frozen=True)
class EmpiricalLaw:
    """Joint and conditional empirical distributions of a count matrix.

    Conditional rows of states never left are all-zero by convention.
    """

    joint: np.ndarray
    conditional: np.ndarray

    @classmethod
    def from_counts(cls, c: CountMatrix) -> "EmpiricalLaw":
        a = c.array.astype(np.float64)
        joint = a / max(c.n, 1)
        conditional = np.zeros_like(a)
        for s, total in enumerate(c.state_totals):
            if total > 0:
                conditional[s] = a[s] / total
        return cls(joint=joint, conditional=conditional)


def count_stats(model_or_structure, symbols) -> CountMatrix:
    """Count matrix of a sequence under a model structure."""
    st = _as_structure(model_or_structure)
    z = np.asarray(symbols, dtype=np.int64)
    counts = [[0] * st.alphabet_size for _ in range(st.num_states)]
    s = st.initial_state
    table = st.next_state
    for zi in z:
        counts[s][zi] += 1
        s = table[s][zi]
    return CountMatrix(
        counts=tuple(tuple(row) for row in counts),
        n=len(z),
        start_state=st.initial_state,
        end_state=s,
    )


def empirical_entropy(c: CountMatrix) -> float:
    """Empirical conditional entropy in bits per symbol; 0*log(1/0) is 0."""
    if c.n < 1:
        raise ValueError("empirical entropy needs n >= 1")
    total = 0.0
    for row, row_sum in zip(c.counts, c.state_totals):
        if row_sum == 0:
            continue
        for a in row:
            if a > 0:
                total += a * log2(row_sum / a)
    return total / c.n


def empirical_divergence(c: CountMatrix, model: UnifilarModel) -> float:
    """Empirical divergence from the model conditionals, bits per symbol.

    Returns ``inf`` when the type puts mass on a zero-probability transition.
    """
    if c.n < 1:
        raise ValueError("empirical divergence needs n >= 1")
    theta = model.theta_array
    total = 0.0
    for s, (row, row_sum) in enumerate(zip(c.counts, c.state_totals)):
        if row_sum == 0:
            continue
        for z, a in enumerate(row):
            if a == 0:
                continue
            p = theta[s, z]
            if p <= 0.0:
                return float("inf")
            total += a * log2(a / (row_sum * p))
    return total / c.n


def log2_type_prob(c: CountMatrix, model: UnifilarModel) -> float:
    """log2-probability of any single member of the class under the model."""
    logs = model.log2_theta
    total = 0.0
    for s, row in enumerate(c.counts):
        for z, a in enumerate(row):
            if a == 0:
                continue
            term = logs[s, z]
            if term == NEG_INF:
                return NEG_INF
            total += a * term
    return total


# ---------------------------------------------------------------------------
# Realisability and exact walk counting


def _flows(counts, structure: ModelStructure):
    """(outflow, inflow) per state for a residual count matrix."""
    num_states = structure.num_states
    out = [0] * num_states
    inn = [0] * num_states
    table = structure.next_state
    for s in range(num_states):
        row = counts[s]
        for z, a in enumerate(row):
            if a:
                out[s] += a
                inn[table[s][z]] += a
    return out, inn


def _implied_end_state(counts, structure: ModelStructure, start: int) -> int | None:
    """End state forced by flow conservation, or None if none is consistent."""
    out, inn = _flows(counts, structure)
    if sum(out) == 0:
        return start
    end = None
    for s in range(structure.num_states):
        d = inn[s] - out[s]
        if d == 0:
            continue
        if d == 1 and end is None and s != start:
            end = s
        elif d == -1 and s == start:
            continue
        else:
            return None
    if end is None:
        # balanced everywhere: closed walk back to the start
        return start
    if inn[start] - out[start] != -1:
        return None
    return end


def _reachable_covers(counts, structure: ModelStructure, start: int) -> bool:
    """True if every state with outgoing residual count is reachable from start."""
    num_states = structure.num_states
    table = structure.next_state
    out_deg = [sum(row) for row in counts]
    if sum(out_deg) == 0:
        return True
    if out_deg[start] == 0:
        return False
    seen = [False] * num_states
    seen[start] = True
    stack = [start]
    while stack:
        s = stack.pop()
        for z, a in enumerate(counts[s]):
            if a:
                t = table[s][z]
                if not seen[t]:
                    seen[t] = True
                    stack.append(t)
    return all(seen[s] or out_deg[s] == 0 for s in range(num_states))


def _residual_realisable(counts, structure: ModelStructure, current: int) -> bool:
    """Can a walk starting at ``current`` consume exactly these residual counts?"""
    if _implied_end_state(counts, structure, current) is None:
        return False
    return _reachable_covers(counts, structure, current)


def is_realisable(c: CountMatrix, structure: ModelStructure) -> bool:
    """True when some sequence from the structure's initial state has these counts."""
    if c.start_state != structure.initial_state:
        return False
    if sum(c.state_totals) != c.n:
        return False
    end = _implied_end_state(c.counts, structure, c.start_state)
    if end is None or end != c.end_state:
        return False
    return _reachable_covers(c.counts, structure, c.start_state)


def _candidate_moves(structure: ModelStructure, state: int):
    """Successor candidates from a state as (symbol, next_state), in canonical
    order: ascending next state, then ascending symbol."""
    moves = [(t, z) for z, t in enumerate(structure.next_state[state])]
    moves.sort()
    return tuple((z, t) for t, z in moves)


class _WalkCounter:
    """Memoised exact count of walks consuming a residual count matrix.

    The cache is keyed by (flattened residual counts, current state) and is
    meant to live for one type at a time; callers discard it afterwards.
    """

    def __init__(self, structure: ModelStructure):
        self.structure = structure
        self.moves = tuple(
            _candidate_moves(structure, s) for s in range(structure.num_states)
        )
        self.cache: dict[tuple, int] = {}

    def count(self, counts_list, current: int) -> int:
        key = (tuple(tuple(row) for row in counts_list), current)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if not _residual_realisable(counts_list, self.structure, current):
            self.cache[key] = 0
            return 0
        if sum(sum(row) for row in counts_list) == 0:
            self.cache[key] = 1
            return 1
        total = 0
        row = counts_list[current]
        for z, t in self.moves[current]:
            if row[z] > 0:
                row[z] -= 1
                total += self.count(counts_list, t)
                row[z] += 1
        self.cache[key] = total
        return total


def type_class_size(c: CountMatrix, model_or_structure) -> int:
    """Exact number of sequences in the type class (arbitrary precision)."""
    st = _as_structure(model_or_structure)
    if not is_realisable(c, st):
        raise ValueError("count matrix is not realisable for this structure")
    counter = _WalkCounter(st)
    return counter.count([list(row) for row in c.counts], c.start_state)


def prefix_count(c: CountMatrix, model_or_structure, prefix_symbols) -> int:
    """Number of type-class members beginning with the given symbol prefix.

    Returns 0 when the prefix is inconsistent with the class.
    """
    st = _as_structure(model_or_structure)
    if not is_realisable(c, st):
        raise ValueError("count matrix is not realisable for this structure")
    residual = [list(row) for row in c.counts]
    s = c.start_state
    for zi in np.asarray(prefix_symbols, dtype=np.int64):
        if residual[s][zi] <= 0:
            return 0
        residual[s][zi] -= 1
        s = st.next_state[s][zi]
    counter = _WalkCounter(st)
    return counter.count(residual, s)


def unrank(c: CountMatrix, model_or_structure, index: int) -> np.ndarray:
    """The ``index``-th member (1-based) of the class in canonical order."""
    st = _as_structure(model_or_structure)
    counter = _WalkCounter(st)
    residual = [list(row) for row in c.counts]
    total = counter.count(residual, c.start_state)
    if not (1 <= index <= total):
        raise ValueError("index out of range (class has %d members)" % total)
    out = np.empty(c.n, dtype=np.int64)
    s = c.start_state
    i = index
    for k in range(c.n):
        for z, t in counter.moves[s]:
            if residual[s][z] <= 0:
                continue
            residual[s][z] -= 1
            extensions = counter.count(residual, t)
            if extensions >= i:
                out[k] = z
                s = t
                break
            i -= extensions
            residual[s][z] += 1
        else:
            raise AssertionError("walk count bookkeeping failed")
    return out


def rank(c: CountMatrix, model_or_structure, symbols) -> int:
    """1-based position of a class member in canonical order."""
    st = _as_structure(model_or_structure)
    z = np.asarray(symbols, dtype=np.int64)
    if count_stats(st, z) != c:
        raise ValueError("sequence does not belong to this type class")
    counter = _WalkCounter(st)
    residual = [list(row) for row in c.counts]
    s = c.start_state
    position = 1
    for zi in z:
        for cand_z, t in counter.moves[s]:
            if cand_z == zi:
                break
            if residual[s][cand_z] > 0:
                residual[s][cand_z] -= 1
                position += counter.count(residual, t)
                residual[s][cand_z] += 1
        residual[s][zi] -= 1
        s = st.next_state[s][zi]
    return position


def iter_type_class(c: CountMatrix, model_or_structure) -> Iterator[np.ndarray]:
    """Yield all members of a type class in canonical order.

    Equivalent to ``unrank(c, st, i)`` for i = 1..size but far cheaper: a
    depth-first walk that prunes unrealisable residuals with an O(|S||A|)
    feasibility test instead of exact big-integer counts.
    """
    st = _as_structure(model_or_structure)
    if not is_realisable(c, st):
        raise ValueError("count matrix is not realisable for this structure")
    n = c.n
    if n == 0:
        yield np.empty(0, dtype=np.int64)
        return
    moves = tuple(_candidate_moves(st, s) for s in range(st.num_states))
    residual = [list(row) for row in c.counts]
    prefix = np.empty(n, dtype=np.int64)
    states = [c.start_state] + [0] * n
    choice = [0] * n  # per-depth index into the candidate move list
    depth = 0
    while depth >= 0:
        if depth == n:
            yield prefix.copy()
            depth -= 1
            # undo the final move before trying siblings
            z = prefix[depth]
            residual[states[depth]][z] += 1
            choice[depth] += 1
            continue
        s = states[depth]
        advanced = False
        while choice[depth] < len(moves[s]):
            z, t = moves[s][choice[depth]]
            if residual[s][z] > 0:
                residual[s][z] -= 1
                if _residual_realisable(residual, st, t):
                    prefix[depth] = z
                    states[depth + 1] = t
                    depth += 1
                    if depth < n:
                        choice[depth] = 0
                    advanced = True
                    break
                residual[s][z] += 1
            choice[depth] += 1
        if advanced:
            continue
        # exhausted candidates at this depth: backtrack
        depth -= 1
        if depth >= 0:
            z = prefix[depth]
            residual[states[depth]][z] += 1
            choice[depth] += 1


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def iter_types(model_or_structure, n: int) -> Iterator[CountMatrix]:
    """Yield every realisable count matrix of total ``n``, each exactly once."""
    st = _as_structure(model_or_structure)
    if n < 1:
        raise ValueError("n must be >= 1")
    num_states, q = st.num_states, st.alphabet_size
    start = st.initial_state
    for flat in _compositions(n, num_states * q):
        counts = tuple(
            tuple(flat[s * q : (s + 1) * q]) for s in range(num_states)
        )
        end = _implied_end_state(counts, st, start)
        if end is None:
            continue
        if not _reachable_covers(counts, st, start):
            continue
        yield CountMatrix(counts=counts, n=n, start_state=start, end_state=end)
