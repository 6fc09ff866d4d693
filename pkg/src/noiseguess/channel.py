"""Finite-state (unifilar) additive noise processes.

A unifilar noise model is a finite-state process over a discrete alphabet in
which the next state is a deterministic function ``f(z, s)`` of the emitted
symbol and the current state.  Given the initial state, the state path is
recoverable from the symbol sequence.  Memoryless processes are the
single-state special case.

All probabilities are handled in base-2 log domain; impossible events are
represented by an explicit ``-inf`` so that support tests stay exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

NEG_INF = float("-inf")

# Single-parameter stochastic matrices used in the binary order-1 experiments,
# keyed by regime label.  Row s is (P(0|s), P(1|s)).
MARKOV1_REGIMES = ("a", "b", "c", "d")


@dataclass(frozen=True)
class ModelStructure:
    """Parameter-free part of a unifilar model: alphabet, states, next-state
    table and initial state.

    ``next_state[s][z]`` gives the successor state when symbol ``z`` is
    emitted from state ``s``.  For more than one state the map ``z -> f(z, s)``
    must be injective for every ``s``, so the state path determines the symbol
    path and vice versa.  The single-state (memoryless) case is exempt: the
    state path carries no information there.
    """

    alphabet_size: int
    num_states: int
    next_state: tuple[tuple[int, ...], ...]
    initial_state: int

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if self.num_states < 1:
            raise ValueError("num_states must be >= 1")
        if not (0 <= self.initial_state < self.num_states):
            raise ValueError("initial_state out of range")
        if len(self.next_state) != self.num_states:
            raise ValueError("next_state must have one row per state")
        for s, row in enumerate(self.next_state):
            if len(row) != self.alphabet_size:
                raise ValueError("next_state row %d has wrong length" % s)
            if any(not (0 <= t < self.num_states) for t in row):
                raise ValueError("next_state entries must be valid states")
            if self.num_states > 1 and len(set(row)) != self.alphabet_size:
                raise ValueError(
                    "next_state must be injective in the symbol for state %d" % s
                )

    @cached_property
    def next_state_array(self) -> np.ndarray:
        return np.asarray(self.next_state, dtype=np.int64)

    def successor(self, state: int, symbol: int) -> int:
        return self.next_state[state][symbol]

    def symbol_for_transition(self, state: int, target: int) -> int | None:
        """Symbol that moves ``state`` to ``target``, or None if impossible.

        Only meaningful for multi-state structures (injectivity).
        """
        for z, t in enumerate(self.next_state[state]):
            if t == target:
                return z
        return None


@dataclass(frozen=True)
class UnifilarModel:
    """A unifilar noise process: structure plus row-stochastic conditionals.

    ``theta[s][z]`` is the probability of emitting symbol ``z`` from state
    ``s``.  Rows must sum to 1 within 1e-12 and entries lie in [0, 1].
    """

    structure: ModelStructure
    theta: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        st = self.structure
        if len(self.theta) != st.num_states:
            raise ValueError("theta must have one row per state")
        for s, row in enumerate(self.theta):
            if len(row) != st.alphabet_size:
                raise ValueError("theta row %d has wrong length" % s)
            if any(p < 0.0 or p > 1.0 for p in row):
                raise ValueError("theta entries must lie in [0, 1]")
            if abs(math.fsum(row) - 1.0) > 1e-12:
                raise ValueError("theta row %d does not sum to 1" % s)

    @property
    def alphabet_size(self) -> int:
        return self.structure.alphabet_size

    @property
    def num_states(self) -> int:
        return self.structure.num_states

    @property
    def next_state(self) -> tuple[tuple[int, ...], ...]:
        return self.structure.next_state

    @property
    def initial_state(self) -> int:
        return self.structure.initial_state

    @cached_property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=np.float64)

    @cached_property
    def log2_theta(self) -> np.ndarray:
        """Elementwise log2 of the conditionals with -inf on zero entries."""
        th = self.theta_array
        out = np.full_like(th, NEG_INF)
        np.log2(th, out=out, where=th > 0.0)
        return out


def _as_structure(model_or_structure) -> ModelStructure:
    if isinstance(model_or_structure, UnifilarModel):
        return model_or_structure.structure
    return model_or_structure


def make_memoryless(probabilities) -> UnifilarModel:
    """Single-state unifilar model with the given symbol law."""
    probs = tuple(float(p) for p in probabilities)
    structure = ModelStructure(
        alphabet_size=len(probs),
        num_states=1,
        next_state=(tuple(0 for _ in probs),),
        initial_state=0,
    )
    return UnifilarModel(structure=structure, theta=(probs,))


def make_markov_order1(theta0: float, theta1: float) -> UnifilarModel:
    """Binary order-1 Markov noise model.

    ``theta_s`` is the probability of emitting a 1 from state ``s``; the state
    is the previously emitted symbol (``f(z, s) = z``) and the initial state
    is 0.
    """
    for name, value in (("theta0", theta0), ("theta1", theta1)):
        if not (0.0 <= value <= 1.0):
            raise ValueError("%s must lie in [0, 1]" % name)
    structure = ModelStructure(
        alphabet_size=2,
        num_states=2,
        next_state=((0, 1), (0, 1)),
        initial_state=0,
    )
    theta = ((1.0 - theta0, theta0), (1.0 - theta1, theta1))
    return UnifilarModel(structure=structure, theta=theta)


def markov1_regime(regime: str, p: float) -> UnifilarModel:
    """Binary order-1 model for one of the four single-parameter regimes.

    Rows of the stochastic matrix (P(0|s), P(1|s)):
      a: (p, 1-p), (1-p, p)     b: (1-p, p), (p, 1-p)
      c: (p, 1-p), (p, 1-p)     d: (1-p, p), (1-p, p)

    Regimes c and d have equal rows and are therefore memoryless in effect;
    a and b have uniform stationary state law whatever ``p``.
    """
    if regime == "a":
        return make_markov_order1(1.0 - p, p)
    if regime == "b":
        return make_markov_order1(p, 1.0 - p)
    if regime == "c":
        return make_markov_order1(1.0 - p, 1.0 - p)
    if regime == "d":
        return make_markov_order1(p, p)
    raise ValueError("regime must be one of %r" % (MARKOV1_REGIMES,))


def state_path(model_or_structure, symbols) -> np.ndarray:
    """State sequence s_0..s_n induced by a symbol sequence.

    Length is ``len(symbols) + 1`` and the first entry is the initial state.
    """
    st = _as_structure(model_or_structure)
    z = np.asarray(symbols, dtype=np.int64)
    path = np.empty(len(z) + 1, dtype=np.int64)
    path[0] = st.initial_state
    table = st.next_state
    s = st.initial_state
    for i, zi in enumerate(z):
        s = table[s][zi]
        path[i + 1] = s
    return path


def symbols_from_state_path(model_or_structure, path) -> np.ndarray:
    """Invert ``state_path`` for multi-state structures.

    Raises if the path is not realisable under the next-state table.
    """
    st = _as_structure(model_or_structure)
    if st.num_states == 1:
        raise ValueError("single-state structures do not determine symbols")
    path = np.asarray(path, dtype=np.int64)
    if len(path) == 0 or path[0] != st.initial_state:
        raise ValueError("path must start at the initial state")
    out = np.empty(len(path) - 1, dtype=np.int64)
    for i in range(len(path) - 1):
        z = st.symbol_for_transition(int(path[i]), int(path[i + 1]))
        if z is None:
            raise ValueError("path has an impossible transition at step %d" % i)
        out[i] = z
    return out


def noise_prob(model: UnifilarModel, symbols) -> float:
    """log2-probability of a noise sequence under the model (Markov product).

    Returns ``-inf`` when any transition has zero probability.
    """
    z = np.asarray(symbols, dtype=np.int64)
    if len(z) == 0:
        return 0.0
    if z.min() < 0 or z.max() >= model.alphabet_size:
        raise ValueError("symbols out of alphabet range")
    logs = model.log2_theta
    table = model.structure.next_state
    s = model.initial_state
    total = 0.0
    for zi in z:
        term = logs[s, zi]
        if term == NEG_INF:
            return NEG_INF
        total += term
        s = table[s][zi]
    return total


def sample_noise(model: UnifilarModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a length-``n`` noise sequence by forward sampling."""
    if n < 1:
        raise ValueError("n must be >= 1")
    theta = model.theta_array
    # cumulative rows let each step consume a single uniform
    cum = np.cumsum(theta, axis=1)
    table = model.structure.next_state
    u = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    s = model.initial_state
    for i in range(n):
        z = int(np.searchsorted(cum[s], u[i], side="right"))
        z = min(z, model.alphabet_size - 1)  # guard fp roundoff at the top edge
        out[i] = z
        s = table[s][z]
    return out


def model_to_dict(model: UnifilarModel) -> dict:
    return {
        "alphabet": model.alphabet_size,
        "states": model.num_states,
        "next_state": [list(row) for row in model.next_state],
        "theta": [list(row) for row in model.theta],
        "initial_state": model.initial_state,
    }


def model_from_dict(spec: dict) -> UnifilarModel:
    """Build a model from its JSON form.

    Two forms are accepted: the explicit one with ``alphabet``, ``states``,
    ``next_state``, ``theta`` and ``initial_state``; and the shorthand
    ``{"family": "markov1", "regime": "a|b|c|d", "p": 0.2}``.
    """
    if spec.get("family") == "markov1":
        return markov1_regime(spec["regime"], float(spec["p"]))
    structure = ModelStructure(
        alphabet_size=int(spec["alphabet"]),
        num_states=int(spec["states"]),
        next_state=tuple(tuple(int(t) for t in row) for row in spec["next_state"]),
        initial_state=int(spec["initial_state"]),
    )
    theta = tuple(tuple(float(p) for p in row) for row in spec["theta"])
    return UnifilarModel(structure=structure, theta=theta)


def load_model(path: str) -> UnifilarModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
