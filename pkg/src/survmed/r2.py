"""Five pseudo-R-squared measures for a fitted Cox model.

Each is a pure function of fitted quantities: two likelihood-ratio forms
normalized by sample size (Nagelkerke 1991) or event count (O'Quigley,
Xu & Stare 2005), a rank-based transform of the latter (Royston 2006), an
explained-risk form built from the average relative risk (Heller 2012),
and a linear-predictor-variance form approximating explained randomness
in a Weibull model (Kent & O'Quigley 1988).

Measures are keyed throughout the package by the letters n, k, r, b, w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cox import CoxFit, NoEventsError
from .data import CovariateMatrix

MEASURES = ("n", "k", "r", "b", "w")

#: Constant in the explained-risk denominator, exactly as conventionally
#: printed.  (It is the Euler-Mascheroni constant; some sources annotate it
#: as pi^2/6 - 1 = 0.6449, which does not match. We keep the printed value
#: and leave it overridable.)
RB_CONSTANT = 0.5772

_PI2_6 = math.pi**2 / 6.0
_CHI2_SLACK = 1e-8


def _clean_chi2(chi2: float) -> float:
    if chi2 < -_CHI2_SLACK:
        raise ValueError(f"negative likelihood-ratio statistic: {chi2}")
    return max(chi2, 0.0)


def r2_n(chi2: float, n: int) -> float:
    """Likelihood-ratio R^2 normalized by sample size: 1 - exp(-chi2/n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 1.0 - math.exp(-_clean_chi2(chi2) / n)


def r2_k(chi2: float, e: int) -> float:
    """Likelihood-ratio R^2 normalized by the event count: 1 - exp(-chi2/e)."""
    if e < 1:
        raise NoEventsError("event count must be at least 1")
    return 1.0 - math.exp(-_clean_chi2(chi2) / e)


def r2_r(r2_k_value: float) -> float:
    """Rank-based transform of :func:`r2_k`.

    With A = rk/(1-rk) this is A/(pi^2/6 + A), identically
    rk/(rk + (pi^2/6)(1-rk)); strictly increasing on [0, 1).
    """
    if not 0.0 <= r2_k_value < 1.0:
        raise ValueError(f"r2_k value must be in [0, 1): {r2_k_value}")
    a = r2_k_value / (1.0 - r2_k_value)
    return a / (_PI2_6 + a)


def r2_b(
    beta: np.ndarray,
    covariates,
    constant: float = RB_CONSTANT,
    center: bool = True,
) -> float:
    """Explained-risk R^2: B/(constant + B) with B = log mean_i exp(beta'z_i).

    The log-mean-exp is computed with max-subtraction.  With ``center``
    (the package convention) the linear predictor is mean-centered first,
    which the partial likelihood cannot distinguish and which guarantees
    B >= 0 by Jensen's inequality, keeping the measure in [0, 1).
    """
    z = covariates.values if isinstance(covariates, CovariateMatrix) else np.asarray(covariates)
    lp = z @ np.asarray(beta, dtype=np.float64)
    if lp.ndim != 1 or lp.size < 1:
        raise ValueError("need at least one linear-predictor value")
    if center:
        lp = lp - lp.mean()
    m = float(lp.max())
    b = m + math.log(np.mean(np.exp(lp - m)))
    if abs(constant + b) < 1e-12:
        raise ValueError(f"degenerate explained-risk denominator: constant + B = {constant + b}")
    return b / (constant + b)


def r2_w(beta: np.ndarray, covariates) -> float:
    """Linear-predictor-variance R^2: v/(1 + v), v the sample variance of Z beta."""
    z = covariates.values if isinstance(covariates, CovariateMatrix) else np.asarray(covariates)
    lp = z @ np.asarray(beta, dtype=np.float64)
    if lp.size < 2:
        raise ValueError("need at least two observations for a sample variance")
    v = float(np.var(lp, ddof=1))
    return v / (1.0 + v)


@dataclass(frozen=True)
class R2Set:
    """The five measures for one fitted model, with provenance counts.

    ``b_negative`` flags a negative explained-risk numerator (only possible
    when centering is disabled).
    """

    r2_n: float
    r2_k: float
    r2_r: float
    r2_b: float
    r2_w: float
    n: int
    n_events: int
    b_negative: bool = False

    def by_measure(self) -> dict[str, float]:
        return {
            "n": self.r2_n,
            "k": self.r2_k,
            "r": self.r2_r,
            "b": self.r2_b,
            "w": self.r2_w,
        }


def compute_all(
    fit: CoxFit,
    covariates,
    rb_constant: float = RB_CONSTANT,
    center: bool = True,
) -> R2Set:
    """All five measures from one fit and the design it was fitted on."""
    if not fit.converged:
        raise ValueError("fit did not converge; refusing to compute R^2 measures")
    chi2 = _clean_chi2(fit.chi2)
    vk = r2_k(chi2, fit.n_events)
    vb = r2_b(fit.beta, covariates, constant=rb_constant, center=center)
    return R2Set(
        r2_n=r2_n(chi2, fit.n),
        r2_k=vk,
        r2_r=r2_r(vk),
        r2_b=vb,
        r2_w=r2_w(fit.beta, covariates),
        n=fit.n,
        n_events=fit.n_events,
        b_negative=vb < 0.0,
    )
