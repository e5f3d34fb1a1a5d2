"""Mediation effect sizes for survival outcomes.

Orchestrates the three Cox fits (exposure only, mediators only, joint) and
the per-mediator least-squares regressions, then combines them into the
R^2-based mediated-variance measure, its shared-over-simple (SOS)
normalization, and the classical product / difference proportions.
Confidence intervals come from a nonparametric pairs bootstrap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cox import CoxError, CoxFit, FitOptions, SingularError, TieMethod, fit_cox
from .data import CovariateMatrix, MediationDataset
from .r2 import MEASURES, R2Set, compute_all
from .rng import substream

MODEL_TOTAL = "T~X"
MODEL_MEDIATORS = "T~M"
MODEL_JOINT = "T~X+M"


class MediationError(Exception):
    """Base class for mediation-pipeline failures."""


class MediationFitError(MediationError):
    """One of the three Cox models failed; carries which one."""

    def __init__(self, model: str, reason: Exception | str):
        super().__init__(f"model {model} failed: {reason}")
        self.model = model
        self.reason = reason


class UnreliableCIError(MediationError):
    """Too many bootstrap replicates failed for a trustworthy interval."""


@dataclass(frozen=True)
class MediatorRegression:
    """OLS of each mediator on (1, X): slopes, intercepts, residual spread."""

    slopes: np.ndarray  # (p, q_x)
    intercepts: np.ndarray  # (p,)
    residual_sd: np.ndarray  # (p,)


@dataclass(frozen=True)
class MeasureMediation:
    """One measure's R^2 decomposition for the three models."""

    r2_tx: float
    r2_tm: float
    r2_tmx: float
    r2_med: float
    sos: float  # nan when undefined
    sos_defined: bool
    negative: bool  # r2_med < 0 (reported as-is, never clamped)


@dataclass(frozen=True)
class MediationReport:
    """Per-measure mediation effect sizes plus the fitted coefficients.

    ``product_proportion`` and ``difference_proportion`` are present only
    for a single exposure column (the formulas assume scalar total and
    direct effects).  ``cis`` maps quantity names (see
    :func:`scalar_quantities`) to (lower, upper) percentile bounds.
    """

    measures: dict[str, MeasureMediation]
    total_coef: np.ndarray  # c, (q_x,)
    direct_coef: np.ndarray  # r, (q_x,)
    joint_mediator_coefs: np.ndarray  # b_j, (p,)
    mediator_only_coefs: np.ndarray  # d_j, (p,)
    mediator_slopes: np.ndarray  # a, (p, q_x)
    product_proportion: float | None
    difference_proportion: float | None
    n: int
    n_events: int
    cis: dict[str, tuple[float, float]] | None = None
    ci_level: float | None = None


def _design_blocks(ds: MediationDataset):
    z_x = CovariateMatrix(ds.exposure, ds.exposure_names)
    z_m = CovariateMatrix(ds.mediators, ds.mediator_names)
    z_xm = CovariateMatrix(
        np.hstack([ds.exposure, ds.mediators]), ds.exposure_names + ds.mediator_names
    )
    return z_x, z_m, z_xm


def fit_three_models(
    ds: MediationDataset,
    ties: TieMethod = TieMethod.EFRON,
    options: FitOptions | None = None,
) -> tuple[CoxFit, CoxFit, CoxFit]:
    """The exposure-only, mediators-only, and joint fits on identical rows.

    All three share one tie method and option set so their likelihood-ratio
    statistics are comparable.  Raises :class:`MediationFitError` naming the
    failing model; a fit that merely fails to converge counts as a failure
    here because downstream measures require converged maxima.
    """
    blocks = zip((MODEL_TOTAL, MODEL_MEDIATORS, MODEL_JOINT), _design_blocks(ds))
    fits = []
    for label, design in blocks:
        try:
            fit = fit_cox(ds.outcomes, design, ties=ties, options=options)
        except CoxError as exc:
            raise MediationFitError(label, exc) from exc
        if not fit.converged:
            raise MediationFitError(label, f"not converged after {fit.iterations} iterations")
        fits.append(fit)
    return tuple(fits)


def fit_mediator_regressions(ds: MediationDataset) -> MediatorRegression:
    """Closed-form least squares of each mediator column on (1, X)."""
    n, q_x = ds.n, ds.n_exposures
    if n <= q_x + 1:
        raise ValueError(f"n={n} too small to regress on {q_x} exposures")
    design = np.hstack([np.ones((n, 1)), ds.exposure])
    theta, _, rank, _ = np.linalg.lstsq(design, ds.mediators, rcond=None)
    if rank < q_x + 1:
        raise SingularError("rank-deficient exposure design in mediator regression")
    resid = ds.mediators - design @ theta
    dof = n - (q_x + 1)
    residual_sd = np.sqrt((resid**2).sum(axis=0) / dof)
    return MediatorRegression(
        slopes=theta[1:].T.copy(),
        intercepts=theta[0].copy(),
        residual_sd=residual_sd,
    )


def product_measure(regression: MediatorRegression, b: np.ndarray, c: float) -> float:
    """Product-form proportion mediated, exp(sum_j a_j b_j) / exp(c).

    Defined for a single exposure column only (scalar total effect c).
    """
    if regression.slopes.shape[1] != 1:
        raise ValueError("product measure requires a single exposure column")
    a = regression.slopes[:, 0]
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{a.shape[0]} mediator slopes but {b.shape[0]} coefficients")
    return float(np.exp(np.dot(a, b) - float(c)))


def difference_measure(r: float) -> float:
    """Difference-form proportion mediated, exp(c - r)/exp(c) = exp(-r)."""
    return float(np.exp(-np.asarray(r, dtype=np.float64)))


def _combine(sets: dict[str, R2Set]) -> dict[str, MeasureMediation]:
    tx, tm, tmx = sets["tx"].by_measure(), sets["tm"].by_measure(), sets["tmx"].by_measure()
    out = {}
    for m in MEASURES:
        r2_med = tm[m] + tx[m] - tmx[m]
        defined = tx[m] > 0.0
        out[m] = MeasureMediation(
            r2_tx=tx[m],
            r2_tm=tm[m],
            r2_tmx=tmx[m],
            r2_med=r2_med,
            sos=r2_med / tx[m] if defined else float("nan"),
            sos_defined=defined,
            negative=r2_med < 0.0,
        )
    return out


def r2_mediation(
    ds: MediationDataset,
    ties: TieMethod = TieMethod.EFRON,
    options: FitOptions | None = None,
) -> MediationReport:
    """Full pipeline: three Cox fits, mediator regressions, all effect sizes.

    For every measure, r2_med = R^2(T,M) + R^2(T,X) - R^2(T,XM) and
    SOS = r2_med / R^2(T,X).  Negative r2_med is reported with its flag,
    never clamped.  Product/difference proportions are filled only when the
    dataset has a single exposure column.
    """
    fit_x, fit_m, fit_xm = fit_three_models(ds, ties=ties, options=options)
    z_x, z_m, z_xm = _design_blocks(ds)
    regression = fit_mediator_regressions(ds)

    measures = _combine(
        {
            "tx": compute_all(fit_x, z_x),
            "tm": compute_all(fit_m, z_m),
            "tmx": compute_all(fit_xm, z_xm),
        }
    )

    q_x = ds.n_exposures
    product = difference = None
    if q_x == 1:
        b = fit_xm.beta[q_x:]
        product = product_measure(regression, b, float(fit_x.beta[0]))
        difference = difference_measure(float(fit_xm.beta[0]))

    return MediationReport(
        measures=measures,
        total_coef=fit_x.beta,
        direct_coef=fit_xm.beta[:q_x],
        joint_mediator_coefs=fit_xm.beta[q_x:],
        mediator_only_coefs=fit_m.beta,
        mediator_slopes=regression.slopes,
        product_proportion=product,
        difference_proportion=difference,
        n=ds.n,
        n_events=ds.outcomes.n_events,
    )


def scalar_quantities(report: MediationReport) -> dict[str, float]:
    """Flat name -> value view of a report (harness and bootstrap currency).

    Names: sos_m, r2med_m, r2tx_m, r2tm_m, r2tmx_m for each measure letter
    m, plus product_proportion / difference_proportion when defined.
    """
    out: dict[str, float] = {}
    for m in MEASURES:
        mm = report.measures[m]
        out[f"sos_{m}"] = mm.sos
        out[f"r2med_{m}"] = mm.r2_med
    for m in MEASURES:
        mm = report.measures[m]
        out[f"r2tx_{m}"] = mm.r2_tx
        out[f"r2tm_{m}"] = mm.r2_tm
        out[f"r2tmx_{m}"] = mm.r2_tmx
    if report.product_proportion is not None:
        out["product_proportion"] = report.product_proportion
    if report.difference_proportion is not None:
        out["difference_proportion"] = report.difference_proportion
    return out


def bootstrap_ci(
    ds: MediationDataset,
    n_boot: int = 500,
    level: float = 0.95,
    seed: int = 0,
    quantities: Sequence[str] | None = None,
    ties: TieMethod = TieMethod.EFRON,
    options: FitOptions | None = None,
    max_failure_fraction: float = 0.2,
) -> dict[str, tuple[float, float]]:
    """Percentile intervals from a nonparametric pairs bootstrap.

    Resamples subjects (rows) with replacement, reruns the full pipeline
    per replicate, and takes percentile bounds at ``level``.  Replicates
    whose fits fail are dropped and counted; more than
    ``max_failure_fraction`` failures raises :class:`UnreliableCIError`.
    Replicate b draws from substream (seed, b), so results are
    deterministic and independent of evaluation order.
    """
    if n_boot < 100:
        raise ValueError("n_boot must be at least 100")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")

    n = ds.n
    samples: list[dict[str, float]] = []
    failures = 0
    for b in range(n_boot):
        idx = substream(seed, b).integers(0, n, size=n)
        try:
            rep = r2_mediation(ds.take_rows(idx), ties=ties, options=options)
        except (CoxError, MediationError):
            failures += 1
            continue
        samples.append(scalar_quantities(rep))

    if failures > max_failure_fraction * n_boot:
        raise UnreliableCIError(
            f"{failures}/{n_boot} bootstrap replicates failed (> {max_failure_fraction:.0%})"
        )

    names = list(samples[0]) if quantities is None else list(quantities)
    alpha = (1.0 - level) / 2.0
    out = {}
    for name in names:
        vals = np.array([s[name] for s in samples])
        lo, hi = np.percentile(vals, [100.0 * alpha, 100.0 * (1.0 - alpha)])
        out[name] = (float(lo), float(hi))
    return out


def attach_cis(
    report: MediationReport, cis: dict[str, tuple[float, float]], level: float
) -> MediationReport:
    return replace(report, cis=cis, ci_level=level)
