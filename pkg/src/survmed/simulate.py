"""Synthetic mediation datasets with Weibull-baseline Cox survival times.

The generating model: standard-normal exposure X; mediators
M_j = a_j X + eps_j with independent normal noise; hazard
lambda(t) = shape * t^(shape-1) * exp(eta) * exp(r X + sum_j b_j M_j),
inverted in closed form.  Censoring is an independent exponential time
whose mean is calibrated by bisection to hit a target censor rate.

Scenario families S1, S2 (single mediator) and M1..M5 (five mediators)
are exact parameter grids addressable by their string ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import MediationDataset, SurvivalOutcomes
from .rng import substream

FAMILIES = ("S1", "S2", "M1", "M2", "M3", "M4", "M5")

#: Substream tag reserved for calibration pilots (never collides with a
#: replicate index).
PILOT_TAG = 0x7F000001

_CENSOR_TOL = 0.005  # calibration stop: within half a percentage point
_LOG_SCALE_LO, _LOG_SCALE_HI = -20.0, 20.0
_MAX_BISECT = 60


class CalibrationError(Exception):
    """Bisection could not bracket or reach the target censor rate."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario: true coefficients, baseline, censoring target."""

    n: int
    p: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    r: float
    weibull_shape: float = 2.0
    weibull_eta: float = -5.0
    target_censor_rate: float = 0.0
    mediator_noise_sd: float = 1.0
    replications: int = 1000
    seed: int = 0
    scenario_id: str = ""

    def __post_init__(self):
        if self.weibull_shape <= 0:
            raise ValueError("weibull_shape must be positive")
        if self.n < 50:
            raise ValueError("n must be at least 50")
        if not 1 <= self.p <= 10:
            raise ValueError("p must be in 1..10")
        if not 0.0 <= self.target_censor_rate <= 0.99:
            raise ValueError("target_censor_rate must be in [0, 0.99]")
        if len(self.a) != self.p or len(self.b) != self.p:
            raise ValueError("a and b must have length p")


def inverse_weibull_time(u: np.ndarray, shape: float, log_rate: np.ndarray) -> np.ndarray:
    """Event time with survival exp(-t^shape * exp(log_rate)) at uniform u."""
    return (-np.log(u) * np.exp(-np.asarray(log_rate))) ** (1.0 / shape)


def _draw_structural(cfg: ScenarioConfig, rng: np.random.Generator, n: int):
    """X, M, and uncensored event times T for n subjects (fixed draw order)."""
    x = rng.standard_normal(n)
    eps = rng.standard_normal((n, cfg.p)) * cfg.mediator_noise_sd
    m = x[:, None] * np.asarray(cfg.a) + eps
    linpred = cfg.r * x + m @ np.asarray(cfg.b)
    u = np.clip(rng.random(n), 1e-300, None)
    t = inverse_weibull_time(u, cfg.weibull_shape, cfg.weibull_eta + linpred)
    return x, m, t


def apply_censoring(
    times: np.ndarray, censor_scale: float, rng: np.random.Generator
) -> SurvivalOutcomes:
    """Exit = min(T, C), event = (T <= C), C exponential with mean censor_scale.

    ``math.inf`` is the no-censoring sentinel.  Entry times are all 0.
    """
    times = np.asarray(times, dtype=np.float64)
    if math.isinf(censor_scale):
        exit_ = times
        event = np.ones(times.shape, dtype=bool)
    else:
        c = rng.exponential(scale=censor_scale, size=times.shape)
        exit_ = np.minimum(times, c)
        event = times <= c
    return SurvivalOutcomes(np.zeros_like(times), exit_, event)


def calibrate_censoring(cfg: ScenarioConfig, pilot_size: int = 100_000) -> float:
    """Mean of the exponential censoring time hitting the target censor rate.

    Draws a pilot sample of event times from the true model (substream
    (cfg.seed, PILOT_TAG)), then bisects on the log scale until the pilot
    censor proportion E[1 - exp(-T/scale)] is within half a percentage
    point of the target.  Returns ``math.inf`` for a zero target.
    """
    target = cfg.target_censor_rate
    if target <= 0.0:
        return math.inf

    _, _, t = _draw_structural(cfg, substream(cfg.seed, PILOT_TAG), pilot_size)

    def pilot_rate(log_scale: float) -> float:
        return float(np.mean(-np.expm1(-t / math.exp(log_scale))))

    lo, hi = _LOG_SCALE_LO, _LOG_SCALE_HI
    f_lo, f_hi = pilot_rate(lo) - target, pilot_rate(hi) - target
    if f_lo < 0.0 or f_hi > 0.0:
        raise CalibrationError(
            f"target censor rate {target} not bracketed on scale range "
            f"[e^{_LOG_SCALE_LO}, e^{_LOG_SCALE_HI}]"
        )
    mid = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        f_mid = pilot_rate(mid) - target
        if abs(f_mid) <= _CENSOR_TOL:
            return math.exp(mid)
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"no scale within {_CENSOR_TOL} of target {target} after {_MAX_BISECT} bisections")


def gen_dataset(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    censor_scale: float | None = None,
) -> MediationDataset:
    """One synthetic dataset from the scenario's true model.

    Draw order (fixed for reproducibility): X, mediator noise, the uniform
    for the event time, then censoring times.  Pass a precalibrated
    ``censor_scale`` to avoid recalibrating per replicate; with None it is
    derived from the config (deterministically, from cfg.seed).
    """
    if censor_scale is None:
        censor_scale = calibrate_censoring(cfg)
    x, m, t = _draw_structural(cfg, rng, cfg.n)
    outcomes = apply_censoring(t, censor_scale, rng)
    return MediationDataset(outcomes, x, m, ("x",), tuple(f"m{j + 1}" for j in range(cfg.p)))


def _single(censor: float, **kw) -> ScenarioConfig:
    return ScenarioConfig(
        n=kw.pop("n", 2000),
        p=1,
        a=(0.5,),
        b=(-1.5,),
        r=2.0,
        target_censor_rate=censor,
        **kw,
    )


def _multi(censor: float, p: int = 5, a: float = 1.0, b: float = 0.5, r: float = 2.5, **kw) -> ScenarioConfig:
    return ScenarioConfig(
        n=kw.pop("n", 2000),
        p=p,
        a=(a,) * p,
        b=(b,) * p,
        r=r,
        target_censor_rate=censor,
        **kw,
    )


def make_scenarios(
    family: str,
    q: int | None = None,
    seed: int | None = None,
    n: int | None = None,
) -> list[ScenarioConfig]:
    """The exact configuration grid for a scenario family.

    S1: single mediator, censor rate sweep. S2: single mediator, sample-size
    sweep at 25% censoring. M1: five mediators, censor sweep. M2/M3/M4:
    mediator-slope / mediator-effect / direct-effect sweeps at 85%
    censoring. M5: mediator count 1..5 at 85% censoring.  ``q``, ``seed``,
    and ``n`` override the defaults (Q=1000, seed=0, family n).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    configs: list[ScenarioConfig]
    if family == "S1":
        grid = (0.05, 0.15, 0.20, 0.25, 0.35, 0.65, 0.85, 0.90, 0.95)
        configs = [_single(c) for c in grid]
        labels = [f"S1_censor={c:g}" for c in grid]
    elif family == "S2":
        grid = (200, 500, 1000, 2000, 5000)
        configs = [_single(0.25, n=nn) for nn in grid]
        labels = [f"S2_n={nn}" for nn in grid]
    elif family == "M1":
        grid = (0.05, 0.25, 0.65, 0.85, 0.95)
        configs = [_multi(c) for c in grid]
        labels = [f"M1_censor={c:g}" for c in grid]
    elif family == "M2":
        grid = (0.05, 0.25, 0.5, 1.0, 3.0, 5.0)
        configs = [_multi(0.85, a=a) for a in grid]
        labels = [f"M2_a={a:g}" for a in grid]
    elif family == "M3":
        grid = (0.01, 0.25, 0.5, 1.0, 2.0, 3.0)
        configs = [_multi(0.85, b=b) for b in grid]
        labels = [f"M3_b={b:g}" for b in grid]
    elif family == "M4":
        grid = (0.05, 0.5, 1.0, 2.0, 5.0, 10.0)
        configs = [_multi(0.85, r=r) for r in grid]
        labels = [f"M4_r={r:g}" for r in grid]
    else:  # M5
        grid = (1, 2, 3, 4, 5)
        configs = [_multi(0.85, p=p) for p in grid]
        labels = [f"M5_p={p}" for p in grid]

    out = []
    for cfg, label in zip(configs, labels):
        overrides: dict = {"scenario_id": label}
        if q is not None:
            overrides["replications"] = q
        if seed is not None:
            overrides["seed"] = seed
        if n is not None and family != "S2":
            overrides["n"] = n
        out.append(replace(cfg, **overrides))
    return out
