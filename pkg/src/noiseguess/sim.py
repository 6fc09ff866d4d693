"""Monte-Carlo harness: sweep the channel parameter across the four binary
order-1 regimes, run the decoders, and tabulate block error rates and query
counts.

Reproducibility contract: every trial draws from its own random stream,
derived from (master_seed, regime, p, decoder, trial_index) through
``numpy``'s SeedSequence.  Results are therefore independent of execution
order, and a rerun with the same master seed emits a byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .analysis import stationary_symbol_law
from .channel import UnifilarModel, make_markov_order1, markov1_regime
from .codes import LinearCode, make_modified_bch
from .decoders import (
    MatchedMetric,
    WeightingMetric,
    decode_randomised,
    decode_training_packed,
    encode_training_frame,
    plan_for,
    query_cap,
)
from .decoders import _decode_deterministic_packed  # packed hot path
from .metrics import KTMixtureSampler
from .channel import make_memoryless

DECODER_NAMES = ("dg-kt", "rg-kt", "dg-matched", "training", "memoryless")
REGIMES = ("a", "b", "c", "d")
DEFAULT_P_GRID = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1)

CSV_COLUMNS = (
    "regime",
    "p",
    "decoder",
    "trials",
    "bler",
    "bler_lo",
    "bler_hi",
    "mean_queries",
    "q_lo",
    "q_hi",
    "abandon_rate",
)


class SimInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """One sweep: regimes x p_grid x decoders at a fixed trial budget."""

    regimes: tuple[str, ...] = REGIMES
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    decoders: tuple[str, ...] = DECODER_NAMES
    trials: int = 10_000
    list_size: int = 20
    master_seed: int = 0
    code: str = "bch63-51-pruned"
    cap: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.list_size < 1:
            raise ValueError("list size must be >= 1")
        for r in self.regimes:
            if r not in REGIMES:
                raise ValueError("unknown regime %r" % r)
        for d in self.decoders:
            if d not in DECODER_NAMES:
                raise ValueError("unknown decoder %r" % d)
        for p in self.p_grid:
            if not (0.0 <= p <= 1.0):
                raise ValueError("p values must lie in [0, 1]")

    @classmethod
    def from_dict(cls, spec: dict) -> "SimConfig":
        spec = dict(spec)
        if "regime" in spec and "regimes" not in spec:
            spec["regimes"] = spec.pop("regime")
        regimes = spec.get("regimes", REGIMES)
        if isinstance(regimes, str):
            regimes = (regimes,)
        return cls(
            regimes=tuple(regimes),
            p_grid=tuple(float(p) for p in spec.get("p_grid", DEFAULT_P_GRID)),
            decoders=tuple(spec.get("decoders", DECODER_NAMES)),
            trials=int(spec.get("trials", 10_000)),
            list_size=int(spec.get("L", spec.get("list_size", 20))),
            master_seed=int(spec.get("master_seed", 0)),
            code=str(spec.get("code", "bch63-51-pruned")),
            cap=None if spec.get("cap") is None else int(spec["cap"]),
        )

    @classmethod
    def from_json(cls, path: str) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SimPoint:
    regime: str
    p: float
    decoder: str
    trials: int
    bler: float
    bler_lo: float
    bler_hi: float
    mean_queries: float
    q_lo: float
    q_hi: float
    abandon_rate: float


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def _code_for(name: str) -> LinearCode:
    if name == "bch63-51-pruned":
        return make_modified_bch()
    raise ValueError("unknown code %r" % name)


_CODE_CACHE: dict[str, LinearCode] = {}


def _cached_code(name: str) -> LinearCode:
    code = _CODE_CACHE.get(name)
    if code is None:
        code = _code_for(name)
        _CODE_CACHE[name] = code
    return code


def _trial_seed(config: SimConfig, regime: str, p: float, decoder: str, trial: int):
    p_bits = struct.unpack("<Q", struct.pack("<d", p))[0]
    return np.random.SeedSequence(
        entropy=(
            config.master_seed,
            REGIMES.index(regime),
            p_bits,
            DECODER_NAMES.index(decoder),
            trial,
        )
    )


def _sample_noise_packed(model: UnifilarModel, n: int, rng: np.random.Generator) -> int:
    """Packed binary forward sample; same uniform-to-symbol convention as
    ``channel.sample_noise``."""
    p_zero = [row[0] for row in model.theta]
    table = model.structure.next_state
    u = rng.random(n)
    s = model.structure.initial_state
    acc = 0
    for i in range(n):
        z = 0 if u[i] < p_zero[s] else 1
        acc = (acc << 1) | z
        s = table[s][z]
    return acc


def run_point(config: SimConfig, regime: str, p: float, decoder: str) -> SimPoint:
    """Simulate one (regime, p, decoder) grid point."""
    code = _cached_code(config.code)
    n = code.n
    cap = config.cap if config.cap is not None else query_cap(n, code.k / n, 2)
    model = markov1_regime(regime, p)
    family = make_markov_order1(0.5, 0.5).structure  # known family, unknown theta

    plan = None
    sampler = None
    if decoder == "dg-kt":
        plan = plan_for(WeightingMetric(family), n)
    elif decoder == "dg-matched":
        plan = plan_for(MatchedMetric(model), n)
    elif decoder == "memoryless":
        pi = stationary_symbol_law(model)
        plan = plan_for(MatchedMetric(make_memoryless(pi)), n)
    elif decoder == "rg-kt":
        # parameter-then-forward sampling: exact weighting-law draws with
        # per-draw cost linear in n
        sampler = KTMixtureSampler(family, n)
    elif decoder != "training":
        raise ValueError("unknown decoder %r" % decoder)

    errors = 0
    abandons = 0
    total_queries = 0.0
    total_queries_sq = 0.0
    for trial in range(config.trials):
        rng = np.random.Generator(
            np.random.SFC64(_trial_seed(config, regime, p, decoder, trial))
        )
        message = int(rng.integers(0, 1 << code.k))
        z_packed = _sample_noise_packed(model, n, rng)
        if decoder == "training":
            x_packed = encode_training_frame(code, message)
        else:
            x_packed = code.encode_packed(message)
        y_packed = x_packed ^ z_packed

        if decoder == "training":
            outcome = decode_training_packed(y_packed, code, cap)
        elif decoder == "rg-kt":
            outcome = decode_randomised(
                _unpack_cached(y_packed, n),
                code,
                sampler,
                config.list_size,
                cap,
                rng,
            )
        else:
            outcome = _decode_deterministic_packed(y_packed, code, plan, cap)

        if outcome.message != message:
            errors += 1
        if outcome.abandoned:
            abandons += 1
        total_queries += outcome.queries
        total_queries_sq += outcome.queries * outcome.queries

    trials = config.trials
    bler = errors / trials
    lo, hi = wilson_interval(errors, trials)
    mean_q = total_queries / trials
    var_q = max(0.0, total_queries_sq / trials - mean_q * mean_q)
    half = 1.959964 * math.sqrt(var_q / trials)
    point = SimPoint(
        regime=regime,
        p=p,
        decoder=decoder,
        trials=trials,
        bler=bler,
        bler_lo=lo,
        bler_hi=hi,
        mean_queries=mean_q,
        q_lo=max(0.0, mean_q - half),
        q_hi=mean_q + half,
        abandon_rate=abandons / trials,
    )
    _check_point(point, cap)
    return point


def _unpack_cached(packed: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    for j in range(n):
        out[j] = (packed >> (n - 1 - j)) & 1
    return out


def _check_point(point: SimPoint, cap: int) -> None:
    if not (0.0 <= point.bler <= 1.0):
        raise SimInvariantError("block error rate outside [0, 1]")
    if not (1.0 <= point.mean_queries <= cap + 1e-9):
        raise SimInvariantError("mean queries outside [1, cap]")
    if not (0.0 <= point.abandon_rate <= 1.0):
        raise SimInvariantError("abandon rate outside [0, 1]")


def run_sweep(config: SimConfig, progress=None) -> list[SimPoint]:
    """Cartesian product of regimes x p_grid x decoders, deterministically."""
    points = []
    for regime in config.regimes:
        for p in config.p_grid:
            for decoder in config.decoders:
                point = run_point(config, regime, p, decoder)
                points.append(point)
                if progress is not None:
                    progress(point)
    return points


def points_to_csv(points, stream=None) -> str:
    own = stream is None
    if own:
        stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pt in points:
        writer.writerow(
            [
                pt.regime,
                _fmt(pt.p),
                pt.decoder,
                pt.trials,
                _fmt(pt.bler),
                _fmt(pt.bler_lo),
                _fmt(pt.bler_hi),
                _fmt(pt.mean_queries),
                _fmt(pt.q_lo),
                _fmt(pt.q_hi),
                _fmt(pt.abandon_rate),
            ]
        )
    return stream.getvalue() if own else ""


def _fmt(x: float) -> str:
    return format(x, ".12g")


def write_csv(points, path: str) -> None:
    with open(path, "w", newline="") as fh:
        points_to_csv(points, fh)


def read_csv(path: str) -> list[SimPoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SimPoint(
                regime=row["regime"],
                p=float(row["p"]),
                decoder=row["decoder"],
                trials=int(row["trials"]),
                bler=float(row["bler"]),
                bler_lo=float(row["bler_lo"]),
                bler_hi=float(row["bler_hi"]),
                mean_queries=float(row["mean_queries"]),
                q_lo=float(row["q_lo"]),
                q_hi=float(row["q_hi"]),
                abandon_rate=float(row["abandon_rate"]),
            )
            for row in reader
        ]


def plotdata_rows(points) -> list[dict]:
    """Long format for plotting: one row per (figure, point)."""
    rows = []
    for pt in points:
        rows.append(
            {
                "figure": "bler",
                "regime": pt.regime,
                "p": pt.p,
                "decoder": pt.decoder,
                "value": pt.bler,
                "lo": pt.bler_lo,
                "hi": pt.bler_hi,
            }
        )
        rows.append(
            {
                "figure": "queries",
                "regime": pt.regime,
                "p": pt.p,
                "decoder": pt.decoder,
                "value": pt.mean_queries,
                "lo": pt.q_lo,
                "hi": pt.q_hi,
            }
        )
    return rows


def write_plotdata_csv(points, path: str) -> None:
    rows = plotdata_rows(points)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=("figure", "regime", "p", "decoder", "value", "lo", "hi"),
            lineterminator="\n",
        )
        writer.writeheader()
        for row in rows:
            row = dict(row)
            row["p"] = _fmt(row["p"])
            row["value"] = _fmt(row["value"])
            row["lo"] = _fmt(row["lo"])
            row["hi"] = _fmt(row["hi"])
            writer.writerow(row)
