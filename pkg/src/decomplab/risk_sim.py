"""Event-driven simulation of the coupled risk model.

Paths are generated per company from counter-based Philox streams keyed by
``(master seed, stream, replica, company)``, so any replica can be rebuilt
in isolation and results do not depend on how replicas are scheduled.
Inter-arrival gaps and jump sizes come from separate substreams and are
consumed sequentially; a longer horizon therefore extends a path without
changing its prefix.

Capitals are replayed with the refill rule: when a jump leaves ``y_i < 0``
the state restarts at ``y_i = 0`` and ``y_j + r_i y_i``, and ruin is declared
if the latter is negative.  ``U`` is the least ``x1`` for which replay from
``(x1, 0)`` survives to the horizon; survival is monotone in ``x1`` because
every step of the replay is monotone in both coordinates.
"""

from __future__ import annotations

import enum
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import AcceptanceTooLowError, BracketFailure, ModelError
from .model import ExtendedRate, RiskModel, mean_drift, validate_risk
from .stats import EmpiricalSample

log = logging.getLogger(__name__)

BLOCK = 64
TIE_SHIFT = 1e-12
MAX_BRACKET_DOUBLINGS = 10
MAX_FAILURE_FRACTION = 1e-3
MIN_ACCEPTANCE = 0.01
CHUNK = 1000

# replay cause codes
SURVIVED, CAUSE_1, CAUSE_2, CAUSE_INF = 0, 1, 2, 3


class RuinCause(enum.Enum):
    COMPANY1_DEFICIT_UNPAYABLE = "company1_deficit_unpayable"
    COMPANY2_DEFICIT_UNPAYABLE = "company2_deficit_unpayable"
    INFINITE_RATE_DEFICIT = "infinite_rate_deficit"


_CAUSES = {
    CAUSE_1: RuinCause.COMPANY1_DEFICIT_UNPAYABLE,
    CAUSE_2: RuinCause.COMPANY2_DEFICIT_UNPAYABLE,
    CAUSE_INF: RuinCause.INFINITE_RATE_DEFICIT,
}


# --------------------------------------------------------------------------
# Paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathPair:
    """Jump epochs and sizes of both drivers on ``(0, horizon]``."""

    horizon: float
    times1: np.ndarray
    sizes1: np.ndarray
    times2: np.ndarray
    sizes2: np.ndarray
    seed: int = 0
    stream: int = 0
    replica: int = 0
    ties: int = 0

    def __post_init__(self):
        for name in ("times1", "sizes1", "times2", "sizes2"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.times1.size != self.sizes1.size or self.times2.size != self.sizes2.size:
            raise ValueError("times and sizes must have equal length per company")


def rate_stream(*rates, label: str = "risk") -> int:
    """Stable stream id for a tuple of rates, so different rate pairs get independent paths."""
    key = "|".join([label] + [str(ExtendedRate.of(r)) for r in rates])
    return zlib.crc32(key.encode())


def _generator(seed: int, stream: int, replica: int, company: int, purpose: int) -> np.random.Generator:
    """Philox keyed by ``(seed, stream, replica, company, purpose)``.

    Key word 0 is the 64-bit master seed; word 1 packs the 32-bit stream,
    a 24-bit replica index, the company and the purpose bit (0 gaps,
    1 sizes).  Distinct keys give independent counter-based streams.
    """
    if not 0 <= replica < 2**24:
        raise ValueError("replica index must be < 2**24")
    word = ((stream & 0xFFFFFFFF) << 32) | (replica << 8) | (company << 1) | purpose
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _company_events(spec, T: float, seed: int, stream: int, replica: int, company: int):
    if spec.rate == 0:
        return np.empty(0), np.empty(0)
    gen = _generator(seed, stream, replica, company, 0)
    mean = spec.rate * T
    block = BLOCK * int(math.ceil((mean + 6.0 * math.sqrt(mean) + 1.0) / BLOCK))
    gaps = gen.standard_exponential(block)
    times = np.cumsum(gaps / spec.rate)
    while times[-1] <= T:
        # variates are drawn sequentially, so extending keeps the prefix; the
        # cumulative sum is recomputed in one pass for identical rounding
        gaps = np.concatenate([gaps, gen.standard_exponential(block)])
        times = np.cumsum(gaps / spec.rate)
    k = int(np.searchsorted(times, T, side="right"))
    sizes = spec.jumps.draw(_generator(seed, stream, replica, company, 1), k)
    return times[:k], sizes


@numba.njit(cache=True)
def _tie_mask(t1, t2):
    mask = np.zeros(t2.size, dtype=np.bool_)
    i = 0
    for k in range(t2.size):
        while i < t1.size and t1[i] < t2[k]:
            i += 1
        if i < t1.size and t1[i] == t2[k]:
            mask[k] = True
    return mask


def sample_paths(model, T: float, seed: int = 0, stream: int = 0, replica: int = 0) -> PathPair:
    """Draw both drivers' jumps on ``(0, T]`` for one replica.

    ``model`` is any object with ``spec1`` and ``spec2``.  The output is a
    pure function of ``(seed, stream, replica)`` and the specs, and paths
    for a longer horizon extend those for a shorter one.
    """
    if not T > 0:
        raise ValueError(f"horizon must be > 0, got {T}")
    t1, j1 = _company_events(model.spec1, T, seed, stream, replica, 1)
    t2, j2 = _company_events(model.spec2, T, seed, stream, replica, 2)
    ties = 0
    if t1.size and t2.size:
        clash = _tie_mask(t1, t2)
        ties = int(clash.sum())
        if ties:
            log.info("replica %d: %d simultaneous jumps shifted by %g", replica, ties, TIE_SHIFT)
            t2 = np.where(clash, t2 + TIE_SHIFT, t2)
    return PathPair(T, t1, j1, t2, j2, seed=seed, stream=stream, replica=replica, ties=ties)


# --------------------------------------------------------------------------
# Replay kernels
# --------------------------------------------------------------------------


@numba.njit(cache=True)
def _replay(t1, j1, t2, j2, c1, c2, x1, x2, r1, r2, T):
    """Returns (cause, time, y1, y2); ``cause == 0`` means survival to ``T``.

    ``r = inf`` is passed as ``np.inf``.
    """
    i = 0
    k = 0
    n1 = t1.size
    n2 = t2.size
    y1 = x1
    y2 = x2
    now = 0.0
    while i < n1 or k < n2:
        if k >= n2 or (i < n1 and t1[i] < t2[k]):
            t = t1[i]
            y1 += c1 * (t - now)
            y2 += c2 * (t - now)
            now = t
            y1 -= j1[i]
            i += 1
            if y1 < 0.0:
                if r1 == np.inf:
                    return CAUSE_INF, now, y1, y2
                y2 += r1 * y1
                y1 = 0.0
                if y2 < 0.0:
                    return CAUSE_1, now, y1, y2
        else:
            t = t2[k]
            y1 += c1 * (t - now)
            y2 += c2 * (t - now)
            now = t
            y2 -= j2[k]
            k += 1
            if y2 < 0.0:
                if r2 == np.inf:
                    return CAUSE_INF, now, y1, y2
                y1 += r2 * y2
                y2 = 0.0
                if y1 < 0.0:
                    return CAUSE_2, now, y1, y2
    y1 += c1 * (T - now)
    y2 += c2 * (T - now)
    return SURVIVED, T, y1, y2


@numba.njit(cache=True)
def _survives(t1, j1, t2, j2, c1, c2, x1, r1, r2, T):
    return _replay(t1, j1, t2, j2, c1, c2, x1, 0.0, r1, r2, T)[0] == SURVIVED


@numba.njit(cache=True)
def _extract(t1, j1, t2, j2, c1, c2, r1, r2, T, eps, x_max):
    """Returns (U, status, bracket) with status 0 ok, 1 bracket failure, 2 monotonicity anomaly."""
    if _survives(t1, j1, t2, j2, c1, c2, 0.0, r1, r2, T):
        return 0.0, 0, x_max
    hi = x_max
    grown = 0
    while not _survives(t1, j1, t2, j2, c1, c2, hi, r1, r2, T):
        if grown >= MAX_BRACKET_DOUBLINGS:
            return np.nan, 1, hi
        hi *= 2.0
        grown += 1
    lo = 0.0
    while hi - lo > eps:
        mid = 0.5 * (lo + hi)
        if _survives(t1, j1, t2, j2, c1, c2, mid, r1, r2, T):
            hi = mid
        else:
            lo = mid
    # a survival below a known ruin would contradict monotonicity
    probe = 0.5 * lo
    if lo > 0.0 and _survives(t1, j1, t2, j2, c1, c2, probe, r1, r2, T):
        x = hi
        best = hi
        while x >= 0.0:
            if _survives(t1, j1, t2, j2, c1, c2, x, r1, r2, T):
                best = x
            x -= eps
        return best, 2, hi
    return hi, 0, hi


@numba.njit(cache=True)
def _extract_batch(o1, t1, j1, o2, t2, j2, c1, c2, r1, r2, T, eps, x_max, out, status):
    for n in range(out.size):
        a, b = o1[n], o1[n + 1]
        c, d = o2[n], o2[n + 1]
        u, st, _ = _extract(t1[a:b], j1[a:b], t2[c:d], j2[c:d], c1, c2, r1, r2, T, eps, x_max)
        out[n] = u
        status[n] = st


@numba.njit(cache=True)
def _never_negative(t, j, c):
    level = 0.0
    now = 0.0
    for i in range(t.size):
        level += c * (t[i] - now) - j[i]
        now = t[i]
        if level < 0.0:
            return False
    return True


def _rate_float(r) -> float:
    r = ExtendedRate.of(r)
    return math.inf if r.is_infinite else r.value


# --------------------------------------------------------------------------
# Public replay and extraction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayOutcome:
    survived: bool
    time: float
    cause: RuinCause | None
    capitals: tuple

    @property
    def ruined(self) -> bool:
        return not self.survived


def replay_risk(paths: PathPair, x1: float, x2: float, r1, r2, c1: float, c2: float) -> ReplayOutcome:
    """Replay capitals from ``(x1, x2)`` under the refill rule.

    ``c1, c2`` are the premium rates of the drivers that produced ``paths``.
    """
    if x1 < 0 or x2 < 0:
        raise ValueError("initial capitals must be >= 0")
    cause, t, y1, y2 = _replay(
        paths.times1, paths.sizes1, paths.times2, paths.sizes2,
        float(c1), float(c2), float(x1), float(x2), _rate_float(r1), _rate_float(r2), paths.horizon,
    )
    if cause == SURVIVED:
        return ReplayOutcome(True, paths.horizon, None, (y1, y2))
    return ReplayOutcome(False, t, _CAUSES[int(cause)], (y1, y2))


def extract_U(paths: PathPair, r1, r2, c1: float, c2: float, eps_x: float, x_max: float) -> float:
    """Least initial capital of company 1 (to ``eps_x``) that survives with company 2 at 0.

    Raises:
        BracketFailure: no survival even at ``x_max * 2**10``.
    """
    u, status, bracket = _extract(
        paths.times1, paths.sizes1, paths.times2, paths.sizes2,
        float(c1), float(c2), _rate_float(r1), _rate_float(r2), paths.horizon, float(eps_x), float(x_max),
    )
    if status == 1:
        raise BracketFailure(f"no survival with x1 up to {bracket:.6g}")
    if status == 2:
        log.warning("replica %d: survival not monotone in x1; grid scan used", paths.replica)
    return float(u)


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------


def default_horizon(model: RiskModel) -> float:
    """``200 / min`` of the positive drift cushions that govern escape to infinity.

    The cushions are the positive drifts ``mu_i`` and, for a company with
    nonpositive drift, the partner's drift after paying its deficits.
    """
    m1, m2 = mean_drift(model.spec1), mean_drift(model.spec2)
    cushions = [m for m in (m1, m2) if m > 0]
    if m1 <= 0 and not model.r1.is_infinite:
        cushions.append(m2 + model.r1.value * m1)
    if m2 <= 0 and not model.r2.is_infinite:
        cushions.append(m1 + model.r2.value * m2)
    cushions = [c for c in cushions if c > 0]
    if not cushions:
        raise ModelError("no positive drift cushion; model is unstable")
    return 200.0 / min(cushions)


def default_eps(model: RiskModel) -> float:
    return 1e-4 * model.spec1.jumps.mean


def default_x_max(model: RiskModel) -> float:
    return 50.0 * model.spec1.jumps.mean


@dataclass(frozen=True)
class USample:
    """Replica-ordered draws of ``U_T``; ``NaN`` marks a bracket failure."""

    values: np.ndarray
    r1: ExtendedRate
    r2: ExtendedRate
    T: float
    N: int
    seed: int
    stream: int
    eps_x: float
    x_max: float
    failures: int = 0
    anomalies: int = 0
    attempts: int = 0
    acceptance_rate: float = 1.0
    replicas: np.ndarray | None = field(default=None, compare=False)

    def empirical(self) -> EmpiricalSample:
        v = self.values[np.isfinite(self.values)]
        return EmpiricalSample(v, self.metadata())

    def metadata(self) -> dict:
        return {
            "r1": self.r1.to_json(), "r2": self.r2.to_json(), "T": self.T, "N": self.N,
            "seed": self.seed, "stream": self.stream, "eps_x": self.eps_x, "x_max": self.x_max,
            "failures": self.failures, "anomalies": self.anomalies,
            "attempts": self.attempts, "acceptance_rate": self.acceptance_rate,
        }


def _pack(paths_list):
    o1 = np.zeros(len(paths_list) + 1, dtype=np.int64)
    o2 = np.zeros(len(paths_list) + 1, dtype=np.int64)
    o1[1:] = np.cumsum([p.times1.size for p in paths_list])
    o2[1:] = np.cumsum([p.times2.size for p in paths_list])
    cat = lambda xs: np.concatenate(xs) if xs else np.empty(0)
    return (
        o1, cat([p.times1 for p in paths_list]), cat([p.sizes1 for p in paths_list]),
        o2, cat([p.times2 for p in paths_list]), cat([p.sizes2 for p in paths_list]),
    )


@dataclass(frozen=True)
class _Task:
    spec1: object
    spec2: object
    r1: float
    r2: float
    T: float
    seed: int
    stream: int
    start: int
    stop: int
    eps: float
    x_max: float
    condition: tuple | None = None


def _run_chunk(task: _Task):
    """Simulate replicas ``start..stop-1``; returns (values, status, accepted mask)."""
    model = _Specs(task.spec1, task.spec2)
    paths = [sample_paths(model, task.T, task.seed, task.stream, i) for i in range(task.start, task.stop)]
    c1, c2 = task.spec1.drift, task.spec2.drift
    accepted = np.ones(len(paths), dtype=bool)
    if task.condition is not None:
        kind = task.condition[0]
        if kind == "second_path_nonnegative":
            accepted = np.array([_never_negative(p.times2, p.sizes2, c2) for p in paths], dtype=bool)
        else:
            a, b = task.condition[1], task.condition[2]
            accepted = np.array(
                [_survives(p.times1, p.sizes1, p.times2, p.sizes2, c1, c2, 0.0, a, b, task.T) for p in paths],
                dtype=bool,
            )
    kept = [p for p, ok in zip(paths, accepted) if ok]
    out = np.empty(len(kept))
    status = np.empty(len(kept), dtype=np.int64)
    if kept:
        _extract_batch(*_pack(kept), c1, c2, task.r1, task.r2, task.T, task.eps, task.x_max, out, status)
    return out, status, accepted


@dataclass(frozen=True)
class _Specs:
    spec1: object
    spec2: object


def _map(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_chunk(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_chunk, tasks))


def _resolve(model, T, eps_x, x_max, stream):
    T = default_horizon(model) if T is None else float(T)
    eps_x = default_eps(model) if eps_x is None else float(eps_x)
    x_max = default_x_max(model) if x_max is None else float(x_max)
    stream = rate_stream(model.r1, model.r2) if stream is None else int(stream)
    return T, eps_x, x_max, stream


def _count(status):
    failures = int(np.sum(status == 1))
    anomalies = int(np.sum(status == 2))
    if anomalies:
        log.warning("%d replicas showed non-monotone survival in x1", anomalies)
    return failures, anomalies


def sample_U(
    model: RiskModel,
    N: int,
    T: float | None = None,
    seed: int = 0,
    stream: int | None = None,
    eps_x: float | None = None,
    x_max: float | None = None,
    jobs: int = 1,
) -> USample:
    """``N`` independent replicas of ``U_T`` at the model's rates.

    ``stream`` defaults to a hash of the rates; pass the same stream for
    several rate pairs to evaluate them on identical paths.

    Raises:
        BracketFailure: more than 0.1% of replicas never survived.
    """
    validate_risk(model)
    T, eps_x, x_max, stream = _resolve(model, T, eps_x, x_max, stream)
    r1, r2 = _rate_float(model.r1), _rate_float(model.r2)
    tasks = [
        _Task(model.spec1, model.spec2, r1, r2, T, seed, stream, a, min(a + CHUNK, N), eps_x, x_max)
        for a in range(0, N, CHUNK)
    ]
    parts = _map(tasks, jobs)
    values = np.concatenate([p[0] for p in parts]) if parts else np.empty(0)
    status = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    failures, anomalies = _count(status)
    if failures > MAX_FAILURE_FRACTION * N:
        raise BracketFailure(f"{failures} of {N} replicas found no surviving capital")
    return USample(
        values, model.r1, model.r2, T, N, seed, stream, eps_x, x_max,
        failures=failures, anomalies=anomalies, attempts=N, replicas=np.arange(N),
    )


@dataclass(frozen=True)
class SecondPathNonnegative:
    """Raw path of company 2 started at 0 never goes below 0 on ``[0, T]``."""

    def key(self) -> tuple:
        return ("second_path_nonnegative",)


@dataclass(frozen=True)
class UZeroAtRates:
    """Replay from ``(0, 0)`` at rates ``(r1, r2)`` survives, i.e. ``U_{r1,r2} = 0``."""

    r1: ExtendedRate
    r2: ExtendedRate

    def __post_init__(self):
        object.__setattr__(self, "r1", ExtendedRate.of(self.r1))
        object.__setattr__(self, "r2", ExtendedRate.of(self.r2))

    def key(self) -> tuple:
        return ("U_zero_at_rates", _rate_float(self.r1), _rate_float(self.r2))


def sample_U_conditional(
    model: RiskModel,
    condition,
    N: int,
    T: float | None = None,
    seed: int = 0,
    stream: int | None = None,
    eps_x: float | None = None,
    x_max: float | None = None,
    jobs: int = 1,
) -> USample:
    """Rejection sampler: ``U_T`` at the model's rates over paths meeting ``condition``.

    Replicas are attempted in index order in fixed chunks and the first
    ``N`` accepted ones are kept, so the result does not depend on ``jobs``.

    Raises:
        AcceptanceTooLowError: acceptance rate below 1%.
    """
    validate_risk(model)
    T, eps_x, x_max, stream = _resolve(model, T, eps_x, x_max, stream)
    if stream == rate_stream(model.r1, model.r2):
        stream = zlib.crc32(repr((stream, condition.key())).encode())
    r1, r2 = _rate_float(model.r1), _rate_float(model.r2)
    kept_vals, kept_status, kept_idx = [], [], []
    attempts = 0
    accepted_total = 0
    wave = max(jobs, 1)
    while accepted_total < N:
        tasks = [
            _Task(model.spec1, model.spec2, r1, r2, T, seed, stream, a, a + CHUNK, eps_x, x_max, condition.key())
            for a in range(attempts, attempts + wave * CHUNK, CHUNK)
        ]
        for task, (vals, status, acc) in zip(tasks, _map(tasks, jobs)):
            idx = np.arange(task.start, task.stop)[acc]
            kept_vals.append(vals)
            kept_status.append(status)
            kept_idx.append(idx)
            accepted_total += int(acc.sum())
            attempts = task.stop
            # checked per chunk so the outcome does not depend on the wave size
            if accepted_total < MIN_ACCEPTANCE * attempts and attempts >= 10 * CHUNK:
                raise AcceptanceTooLowError(
                    f"acceptance {accepted_total}/{attempts} below {MIN_ACCEPTANCE:.0%}"
                )
            if accepted_total >= N:
                break
    values = np.concatenate(kept_vals)[:N]
    status = np.concatenate(kept_status)[:N]
    idx = np.concatenate(kept_idx)[:N]
    used = int(idx[-1]) + 1
    rate = N / used
    if rate < MIN_ACCEPTANCE:
        raise AcceptanceTooLowError(f"acceptance {N}/{used} below {MIN_ACCEPTANCE:.0%}")
    failures, anomalies = _count(status)
    if failures > MAX_FAILURE_FRACTION * N:
        raise BracketFailure(f"{failures} of {N} accepted replicas found no surviving capital")
    return USample(
        values, model.r1, model.r2, T, N, seed, stream, eps_x, x_max,
        failures=failures, anomalies=anomalies, attempts=used, acceptance_rate=rate, replicas=idx,
    )
