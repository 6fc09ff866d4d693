"""Closed-form information rates and the non-asymptotic bound expressions.

Everything here is a pure function of a model, a block length and a code
rate: stationary laws, entropy/divergence/Renyi rates, the per-n vanishing
terms, the redundancy and complexity bounds of both guessing strategies, and
the auxiliary statistics of the random-codebook analysis (minimum of uniform
ranks, number of distinct codewords).

The lower type-class-size correction delta(n) carries no explicit constant
in the underlying theory; the default used here is
``|A| |S| (|S|+1) log2(n+1) / n`` and every consumer accepts an override.
Reported bounds are therefore labelled with the delta choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .channel import UnifilarModel

_LOG2E = math.log2(math.e)


# ---------------------------------------------------------------------------
# Stationary laws and rates


def state_transition_matrix(model: UnifilarModel) -> np.ndarray:
    """Induced chain over states: T[s, s'] = sum of theta[s, z] with f(z,s)=s'."""
    S = model.num_states
    T = np.zeros((S, S))
    for s in range(S):
        for z in range(model.alphabet_size):
            T[s, model.next_state[s][z]] += model.theta[s][z]
    return T


def _is_irreducible(T: np.ndarray) -> bool:
    S = T.shape[0]
    if S == 1:
        return True
    adj = T > 0.0
    for mat in (adj, adj.T):
        seen = np.zeros(S, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            s = stack.pop()
            for t in np.flatnonzero(mat[s]):
                if not seen[t]:
                    seen[t] = True
                    stack.append(int(t))
        if not seen.all():
            return False
    return True


def stationary_distribution(model: UnifilarModel) -> np.ndarray:
    """Unique stationary law of the induced state chain; needs irreducibility."""
    T = state_transition_matrix(model)
    if not _is_irreducible(T):
        raise ValueError("induced state chain is reducible")
    S = T.shape[0]
    if S == 1:
        return np.array([1.0])
    A = (T.T - np.eye(S)).copy()
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_symbol_law(model: UnifilarModel) -> np.ndarray:
    """Stationary distribution of the emitted symbols."""
    pi = stationary_distribution(model)
    return pi @ model.theta_array


def entropy_rate(model: UnifilarModel) -> float:
    """Conditional entropy rate in bits per symbol."""
    pi = stationary_distribution(model)
    theta = model.theta_array
    total = 0.0
    for s in range(model.num_states):
        for z in range(model.alphabet_size):
            p = theta[s, z]
            if p > 0.0:
                total -= pi[s] * p * math.log2(p)
    return total


def divergence_rate(model_p: UnifilarModel, model_q: UnifilarModel) -> float:
    """Divergence rate D(P || Q) in bits per symbol; inf if Q fails to
    dominate P on the stationary support.  Both models must share structure."""
    if model_p.structure != model_q.structure:
        raise ValueError("divergence rate needs a common structure")
    pi = stationary_distribution(model_p)
    tp, tq = model_p.theta_array, model_q.theta_array
    total = 0.0
    for s in range(model_p.num_states):
        if pi[s] == 0.0:
            continue
        for z in range(model_p.alphabet_size):
            p, q = tp[s, z], tq[s, z]
            if p == 0.0:
                continue
            if q == 0.0:
                return float("inf")
            total += pi[s] * p * math.log2(p / q)
    return total


def renyi_rate(
    model: UnifilarModel,
    alpha: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> float:
    """Renyi entropy rate of order ``alpha`` in (0, 1), bits per symbol.

    Computed as ``log2(spectral radius) / (1 - alpha)`` of the nonnegative
    matrix B[s, s'] = sum of theta[s, z]^alpha over symbols driving s to s',
    by power iteration from the uniform vector.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly between 0 and 1")
    T = state_transition_matrix(model)
    if not _is_irreducible(T):
        raise ValueError("induced state chain is reducible")
    S = model.num_states
    B = np.zeros((S, S))
    for s in range(S):
        for z in range(model.alphabet_size):
            B[s, model.next_state[s][z]] += model.theta[s][z] ** alpha
    x = np.full(S, 1.0 / S)
    lam = None
    for _ in range(max_iter):
        y = B @ x
        norm = y.sum()
        if norm <= 0.0:
            raise ValueError("spectral iteration collapsed; model degenerate")
        y /= norm
        if lam is not None and abs(norm - lam) <= tol * max(norm, 1.0):
            return math.log2(norm) / (1.0 - alpha)
        lam = norm
        x = y
    raise RuntimeError("power iteration did not converge")


def renyi_half_rate(model: UnifilarModel) -> float:
    return renyi_rate(model, alpha=0.5)


def renyi_half_grid_search(model: UnifilarModel, grid_size: int = 50) -> float:
    """Independent check of the order-1/2 rate for binary order-1 models:
    maximise H(Q) - D(Q || P) over a uniform grid of chains Q.

    Uses closed-form two-state stationary laws rather than the spectral
    route, so the two computations share no code path.
    """
    if model.alphabet_size != 2 or model.num_states != 2:
        raise ValueError("grid-search oracle covers binary order-1 models only")
    if tuple(model.next_state) != ((0, 1), (0, 1)):
        raise ValueError("grid-search oracle expects the order-1 next-state table")
    p0 = model.theta[0][1]
    p1 = model.theta[1][1]
    if min(p0, p1) <= 0.0 or max(p0, p1) >= 1.0:
        raise ValueError("oracle needs strictly positive conditionals")
    centers = (np.arange(grid_size) + 0.5) / grid_size
    q0, q1 = np.meshgrid(centers, centers, indexing="ij")
    pi0 = (1.0 - q1) / (1.0 - q1 + q0)
    pi1 = 1.0 - pi0

    def h(q):
        return -(q * np.log2(q) + (1.0 - q) * np.log2(1.0 - q))

    def d(q, p):
        return q * np.log2(q / p) + (1.0 - q) * np.log2((1.0 - q) / (1.0 - p))

    objective = pi0 * (h(q0) - d(q0, p0)) + pi1 * (h(q1) - d(q1, p1))
    return float(objective.max())


# ---------------------------------------------------------------------------
# Vanishing terms and bounds


class VanishingTerms(NamedTuple):
    zeta: float
    epsilon: float
    sigma: float
    lambda1: float | None
    lambda2: float | None


def zeta_term(n: int, alphabet_size: int, num_states: int) -> float:
    """Type-count exponent: |A| |S| log2(n+1) / n."""
    return alphabet_size * num_states * math.log2(n + 1) / n


def epsilon_term(n: int, alphabet_size: int, num_states: int) -> float:
    """Weighting-vs-type gap: |S|(|A|-1)/2 * log2(n)/n + 2|S|/n."""
    return (
        num_states * (alphabet_size - 1) / 2.0 * math.log2(n) / n
        + 2.0 * num_states / n
    )


def sigma_term(n: int, model: UnifilarModel, alpha: float = 0.5) -> float:
    """Stationarisation correction for the variational bound at order alpha."""
    q, S = model.alphabet_size, model.num_states
    positive = [p for row in model.theta for p in row if p > 0.0]
    p_star = min(positive)
    return (S / (n * (1.0 - alpha))) * (
        q * _LOG2E + math.log2(q) - alpha * q * math.log2(p_star)
    )


def lambda1_term(n: int, alphabet_size: int, rate: float) -> float | None:
    """Rare-collision exponent of the randomised bound; None below n0."""
    arg = 1.0 / n - 2.0 ** (n * rate - 1.0 - n * math.log2(alphabet_size))
    if arg <= 0.0:
        return None
    return (2.0 / n) * math.log2(3.0 / arg)


def lambda2_term(n: int) -> float | None:
    """Cap-inflation term log2(n/(n-1)) / n; undefined at n = 1."""
    if n < 2:
        return None
    return math.log2(n / (n - 1.0)) / n


def smallest_n0(alphabet_size: int, rate: float, n_max: int = 1 << 20) -> int:
    """Smallest n at which lambda1 is defined.  This witnesses the existence
    of a finite threshold; no claim is made that it matches any other n0."""
    for n in range(2, n_max + 1):
        if lambda1_term(n, alphabet_size, rate) is not None:
            return n
    raise ValueError("no valid n0 below %d" % n_max)


def vanishing_terms(n: int, model: UnifilarModel, rate: float | None = None) -> VanishingTerms:
    q, S = model.alphabet_size, model.num_states
    return VanishingTerms(
        zeta=zeta_term(n, q, S),
        epsilon=epsilon_term(n, q, S),
        sigma=sigma_term(n, model),
        lambda1=None if rate is None else lambda1_term(n, q, rate),
        lambda2=lambda2_term(n),
    )


def delta_default(n: int, alphabet_size: int, num_states: int) -> float:
    """Documented default for the lower type-class correction (no canonical
    constant exists); overridable wherever it is consumed."""
    return alphabet_size * num_states * (num_states + 1) * math.log2(n + 1) / n


class RedundancyBounds(NamedTuple):
    dg_max: float
    dg_wt: float
    rg_max: float
    rg_wt: float


def redundancy_bounds(
    n: int,
    model: UnifilarModel,
    delta: Callable[[int], float] | float | None = None,
) -> RedundancyBounds:
    """Upper bounds on the error-exponent redundancy of the four universal
    decoders (deterministic/randomised x maximising/weighting)."""
    q, S = model.alphabet_size, model.num_states
    if delta is None:
        d = delta_default(n, q, S)
    elif callable(delta):
        d = delta(n)
    else:
        d = float(delta)
    z = zeta_term(n, q, S)
    e = epsilon_term(n, q, S)
    return RedundancyBounds(
        dg_max=1.0 / n + z + d,
        dg_wt=1.0 / n + e + d,
        rg_max=2.0 / n + z + d,
        rg_wt=2.0 / n + e + d,
    )


class ComplexityBounds(NamedTuple):
    dg_max: float
    dg_wt: float
    rg_max: float | None
    rg_wt: float | None


def complexity_bounds(n: int, model: UnifilarModel, rate: float) -> ComplexityBounds:
    """Upper bounds on (1/n) log2 of the expected number of queries.

    The randomised entries are None below the threshold where the collision
    term is defined.
    """
    q, S = model.alphabet_size, model.num_states
    h_half = renyi_half_rate(model)
    z = zeta_term(n, q, S)
    e = epsilon_term(n, q, S)
    s = sigma_term(n, model)
    cap_branch = math.log2(q) - rate
    dg_max = min(h_half + 2 * z + s, cap_branch + 1.0 / n)
    dg_wt = min(h_half + z + e + s, cap_branch + 1.0 / n)
    l1 = lambda1_term(n, q, rate)
    l2 = lambda2_term(n)
    if l1 is None or l2 is None:
        rg_max = rg_wt = None
    else:
        collision = max(l1, cap_branch + l2)
        rg_max = min(h_half + 2 * z + s, collision + z + 1.0 / n)
        rg_wt = min(h_half + z + e + s, collision + e + 1.0 / n)
    return ComplexityBounds(dg_max=dg_max, dg_wt=dg_wt, rg_max=rg_max, rg_wt=rg_wt)


def complexity_asymptote(model: UnifilarModel, rate: float) -> float:
    """Common limit of all four complexity exponents."""
    return min(renyi_half_rate(model), math.log2(model.alphabet_size) - rate)


# ---------------------------------------------------------------------------
# Random-codebook auxiliaries


def expected_min_uniform_bounds(n: int, rate: float, alphabet_size: int) -> tuple[float, float]:
    """Sandwich for E[min of M-1 uniform ranks], M = 2^{nR}:
    2^{n(log|A| - R)} <= E < 2^{n(log|A| - R + 1/n)}."""
    if 2.0 ** (n * rate) < 2.0:
        raise ValueError("need M >= 2 codewords")
    lower = 2.0 ** (n * (math.log2(alphabet_size) - rate))
    return lower, 2.0 * lower


def expected_min_uniform_exact(space: int, m: int) -> Fraction:
    """E[min of m-1 iid uniforms on {1..space}] = sum_k (k/space)^(m-1)."""
    if m < 2:
        raise ValueError("need at least two codewords")
    return Fraction(
        sum(pow(k, m - 1) for k in range(1, space + 1)), pow(space, m - 1)
    )


def distinct_codeword_stats(n: int, m: int, alphabet_size: int) -> tuple[float, float]:
    """Mean and variance of the number of distinct words among m uniform drawn
    codewords over an alphabet-size^n space."""
    space = float(alphabet_size) ** n
    miss = (1.0 - 1.0 / space) ** m
    mean = space * (1.0 - miss)
    var = (space / (2.0 * space - 1.0)) * (1.0 - miss) * (space * (1.0 - miss) - 1.0)
    return mean, var


def distinct_codeword_stats_exact(n: int, m: int, alphabet_size: int) -> tuple[Fraction, Fraction]:
    """Exact rational version of ``distinct_codeword_stats`` for small inputs."""
    space = Fraction(alphabet_size) ** n
    miss = (1 - Fraction(1, int(space))) ** m
    mean = space * (1 - miss)
    var = (space / (2 * space - 1)) * (1 - miss) * (space * (1 - miss) - 1)
    return mean, var


def distinct_codeword_tail_bound(n: int, m: int, alphabet_size: int, k_star: int) -> float:
    """Chebyshev-style bound on P(K_M <= k*) for 1 <= k* < E[K_M]."""
    mean, _ = distinct_codeword_stats(n, m, alphabet_size)
    if not (1 <= k_star < mean):
        raise ValueError("k_star must satisfy 1 <= k_star < E[K_M]")
    space = float(alphabet_size) ** n
    return (1.0 / space) * (3.0 * m / (mean - k_star)) ** 2


# ---------------------------------------------------------------------------
# Reporting


@dataclass(frozen=True)
class BoundReport:
    n: int
    alphabet_size: int
    num_states: int
    rate: float
    h_half: float
    zeta: float
    epsilon: float
    sigma: float
    delta: float
    lambda1: float | None
    lambda2: float | None
    redundancy: RedundancyBounds
    complexity: ComplexityBounds
    asymptote: float


def build_bound_report(
    model: UnifilarModel,
    n: int,
    rate: float,
    delta: Callable[[int], float] | float | None = None,
) -> BoundReport:
    q, S = model.alphabet_size, model.num_states
    if delta is None:
        d = delta_default(n, q, S)
    elif callable(delta):
        d = delta(n)
    else:
        d = float(delta)
    terms = vanishing_terms(n, model, rate)
    return BoundReport(
        n=n,
        alphabet_size=q,
        num_states=S,
        rate=rate,
        h_half=renyi_half_rate(model),
        zeta=terms.zeta,
        epsilon=terms.epsilon,
        sigma=terms.sigma,
        delta=d,
        lambda1=terms.lambda1,
        lambda2=terms.lambda2,
        redundancy=redundancy_bounds(n, model, d),
        complexity=complexity_bounds(n, model, rate),
        asymptote=complexity_asymptote(model, rate),
    )
