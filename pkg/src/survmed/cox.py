"""Cox proportional-hazards estimation by Newton-Raphson partial likelihood.

Supports delayed entry (left truncation) and the Efron or Breslow tie
conventions.  A subject is at risk at event time t iff ``entry < t <= exit``.
The evaluator is fully vectorized: risk-set sums are cumulative sums over
exit- and entry-sorted orders, cut at the unique event times, so one
(loglik, score, Hessian) evaluation costs O(n q^2) after an O(n log n)
one-time preparation.

References: Breslow (1974), Efron (1977), Therneau & Grambsch (2000,
ch. 3) for the tie corrections and delayed-entry risk sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .data import CovariateMatrix, SurvivalOutcomes, SurvivalRecord


class CoxError(Exception):
    """Base class for fitting failures."""


class NoEventsError(CoxError):
    """Every subject is censored; the partial likelihood is empty."""


class SingularError(CoxError):
    """Hessian not invertible (constant or collinear covariates)."""


class MonotoneLikelihoodError(CoxError):
    """A coefficient is diverging; the data separate (common under very
    rare events)."""


class TieMethod(Enum):
    EFRON = "efron"
    BRESLOW = "breslow"


@dataclass(frozen=True)
class FitOptions:
    """Newton-Raphson controls.

    Convergence: gradient max-norm < ``grad_tol``, or relative loglik
    change < ``loglik_rtol`` with the gradient already below
    ``converged_grad_norm`` (the latter guard keeps the first-order
    condition honest when the relative-change test fires early on large
    samples).
    """

    max_iter: int = 50
    loglik_rtol: float = 1e-9
    grad_tol: float = 1e-8
    converged_grad_norm: float = 1e-6
    step_tol: float = 1e-4
    max_step_halvings: int = 10
    beta_bound: float = 50.0


@dataclass(frozen=True)
class CoxFit:
    """A maximized (or flagged) partial-likelihood fit.

    ``chi2`` is the likelihood-ratio statistic 2(loglik - null_loglik);
    ``covariance`` is the inverse negative Hessian at ``beta``.
    """

    beta: np.ndarray
    loglik: float
    null_loglik: float
    chi2: float
    linear_predictor: np.ndarray
    covariance: np.ndarray
    n: int
    n_events: int
    iterations: int
    converged: bool


def _as_outcomes(outcomes) -> SurvivalOutcomes:
    if isinstance(outcomes, SurvivalOutcomes):
        return outcomes
    return SurvivalOutcomes.from_records(list(outcomes))


def _as_matrix(covariates) -> np.ndarray:
    if isinstance(covariates, CovariateMatrix):
        return covariates.values
    z = np.asarray(covariates, dtype=np.float64)
    return z[:, None] if z.ndim == 1 else z


class _CoxProblem:
    """Preprocessed risk-set geometry, independent of beta."""

    def __init__(self, outcomes: SurvivalOutcomes, z: np.ndarray):
        n = len(outcomes)
        if z.shape[0] != n:
            raise ValueError(f"{n} outcomes but {z.shape[0]} covariate rows")
        self.z = z
        self.n = n
        entry, exit_, event = outcomes.entry, outcomes.exit, outcomes.event

        ev = np.flatnonzero(event)
        if ev.size == 0:
            raise NoEventsError("no observed events")
        self.ev_rows = ev[np.argsort(exit_[ev], kind="stable")]
        self.n_events = int(ev.size)

        ut, d = np.unique(exit_[self.ev_rows], return_counts=True)
        self.starts = np.concatenate([[0], np.cumsum(d)[:-1]])
        self.rep = np.repeat(np.arange(ut.size), d)
        self.frac = (np.arange(self.n_events) - self.starts[self.rep]) / d[self.rep]

        exit_sorted = np.sort(exit_)
        self.cnt_exit = n - np.searchsorted(exit_sorted, ut, side="left")
        self.ord_exit = np.argsort(exit_, kind="stable")[::-1]

        self.has_entry = bool(entry.max() > 0.0)
        if self.has_entry:
            entry_sorted = np.sort(entry)
            self.cnt_entry = n - np.searchsorted(entry_sorted, ut, side="left")
            self.ord_entry = np.argsort(entry, kind="stable")[::-1]
        else:
            self.cnt_entry = None
            self.ord_entry = None

        self.zz = z[:, :, None] * z[:, None, :]
        self.sum_z_events = z[self.ev_rows].sum(axis=0)

    def _risk_sums(self, values: np.ndarray) -> np.ndarray:
        """Sum of `values` over each risk set, one row per unique event time."""
        pad = np.zeros((1,) + values.shape[1:])
        acc = np.concatenate([pad, np.cumsum(values[self.ord_exit], axis=0)])
        sums = acc[self.cnt_exit]
        if self.has_entry:
            acc_e = np.concatenate([pad, np.cumsum(values[self.ord_entry], axis=0)])
            sums = sums - acc_e[self.cnt_entry]
        return sums

    def evaluate(self, beta: np.ndarray, ties: TieMethod, derivs: bool = True):
        """Partial loglik (exact), and optionally its gradient and Hessian."""
        eta = self.z @ beta
        shift = float(eta.max())
        w = np.exp(eta - shift)
        efron = ties is TieMethod.EFRON

        s0 = self._risk_sums(w)[self.rep]
        if efron:
            w_ev = w[self.ev_rows]
            sd0 = np.add.reduceat(w_ev, self.starts)[self.rep]
            phi = s0 - self.frac * sd0
        else:
            phi = s0
        loglik = float((eta[self.ev_rows] - shift).sum() - np.log(phi).sum())
        if not derivs:
            return loglik

        wz = w[:, None] * self.z
        s1 = self._risk_sums(wz)[self.rep]
        wzz = w[:, None, None] * self.zz
        s2 = self._risk_sums(wzz)[self.rep]
        if efron:
            sd1 = np.add.reduceat(wz[self.ev_rows], self.starts, axis=0)[self.rep]
            sd2 = np.add.reduceat(wzz[self.ev_rows], self.starts, axis=0)[self.rep]
            u = s1 - self.frac[:, None] * sd1
            v = s2 - self.frac[:, None, None] * sd2
        else:
            u, v = s1, s2
        a = u / phi[:, None]
        grad = self.sum_z_events - a.sum(axis=0)
        hess = -((v / phi[:, None, None]).sum(axis=0) - a.T @ a)
        hess = 0.5 * (hess + hess.T)
        return loglik, grad, hess


def _check_columns(z: np.ndarray) -> None:
    flat = np.ptp(z, axis=0) == 0.0
    if np.any(flat):
        cols = np.flatnonzero(flat)
        raise SingularError(f"constant covariate column(s) {cols.tolist()}: no information")


def partial_loglik(
    beta: np.ndarray,
    outcomes: SurvivalOutcomes | Sequence[SurvivalRecord],
    covariates,
    ties: TieMethod = TieMethod.EFRON,
) -> float:
    """Exact partial log-likelihood at ``beta`` under the chosen tie method."""
    prob = _CoxProblem(_as_outcomes(outcomes), _as_matrix(covariates))
    return prob.evaluate(np.asarray(beta, dtype=np.float64), ties, derivs=False)


def score_and_hessian(
    beta: np.ndarray,
    outcomes: SurvivalOutcomes | Sequence[SurvivalRecord],
    covariates,
    ties: TieMethod = TieMethod.EFRON,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient and Hessian of the partial log-likelihood."""
    prob = _CoxProblem(_as_outcomes(outcomes), _as_matrix(covariates))
    _, grad, hess = prob.evaluate(np.asarray(beta, dtype=np.float64), ties)
    return grad, hess


def fit_cox(
    outcomes: SurvivalOutcomes | Sequence[SurvivalRecord],
    covariates,
    ties: TieMethod = TieMethod.EFRON,
    options: FitOptions | None = None,
) -> CoxFit:
    """Maximize the partial likelihood by Newton-Raphson with step-halving.

    Starts at beta = 0.  Raises :class:`NoEventsError`,
    :class:`SingularError`, or :class:`MonotoneLikelihoodError` (any
    |beta_j| exceeding ``options.beta_bound``, the separation guard).  A fit
    that runs out of iterations is returned with ``converged=False`` rather
    than raised, so callers can decide.
    """
    opts = options or FitOptions()
    out = _as_outcomes(outcomes)
    z = _as_matrix(covariates)
    _check_columns(z)
    if z.shape[0] < z.shape[1] + 1:
        raise ValueError(f"n={z.shape[0]} rows cannot identify {z.shape[1]} coefficients")
    prob = _CoxProblem(out, z)

    beta = np.zeros(z.shape[1])
    loglik, grad, hess = prob.evaluate(beta, ties)
    null_loglik = loglik
    iterations = 0
    converged = False
    last_gain = np.inf
    step_small = False

    # Converged = first-order condition met AND the Newton increment is
    # negligible.  The increment condition is what separates a true
    # optimum from a monotone (separated) likelihood, where the gradient
    # decays exponentially while the increment stays O(1): there, iteration
    # continues until a coefficient crosses beta_bound and is reported.
    for it in range(1, opts.max_iter + 1):
        try:
            step = np.linalg.solve(hess, -grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            # A Hessian that was invertible at beta = 0 but degenerated along
            # a runaway path means the likelihood went flat at the boundary
            # (separation), not that the covariates are collinear.
            if iterations >= 1 and np.max(np.abs(beta)) > opts.beta_bound / 5.0:
                raise MonotoneLikelihoodError(
                    f"information matrix collapsed at |beta| = {np.max(np.abs(beta)):.1f}; "
                    "likely separation / monotone likelihood"
                ) from None
            raise SingularError("Hessian not invertible; covariates may be collinear") from None
        step_small = bool(np.max(np.abs(step)) < opts.step_tol)
        grad_norm = np.max(np.abs(grad))
        stalled = last_gain < opts.loglik_rtol * (abs(loglik) + 1.0)
        if step_small and (
            grad_norm < opts.grad_tol
            or (stalled and grad_norm < opts.converged_grad_norm)
        ):
            converged = True
            break

        # Accept a step unless it degrades the loglik beyond rounding fuzz;
        # near the optimum the polishing step changes it by exactly 0.
        fuzz = 1e-12 * (abs(loglik) + 1.0)
        candidate = None
        for _ in range(opts.max_step_halvings + 1):
            trial = beta + step
            trial_ll = prob.evaluate(trial, ties, derivs=False)
            if np.isfinite(trial_ll) and trial_ll > loglik - fuzz:
                candidate = trial
                break
            step = 0.5 * step
        if candidate is None:
            break  # cannot improve further; settled at numerical precision

        beta = candidate
        iterations = it
        if np.any(np.abs(beta) > opts.beta_bound):
            j = int(np.argmax(np.abs(beta)))
            raise MonotoneLikelihoodError(
                f"coefficient {j} diverged past |{opts.beta_bound}|; "
                "likely separation / monotone likelihood"
            )
        prev_ll = loglik
        loglik, grad, hess = prob.evaluate(beta, ties)
        last_gain = loglik - prev_ll

    if not converged and step_small and np.max(np.abs(grad)) < opts.converged_grad_norm:
        converged = True

    try:
        covariance = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        raise SingularError("Hessian not invertible at the optimum") from None
    covariance = 0.5 * (covariance + covariance.T)

    return CoxFit(
        beta=beta,
        loglik=loglik,
        null_loglik=null_loglik,
        chi2=2.0 * (loglik - null_loglik),
        linear_predictor=z @ beta,
        covariance=covariance,
        n=prob.n,
        n_events=prob.n_events,
        iterations=iterations,
        converged=converged,
    )


def null_cox_fit(
    outcomes: SurvivalOutcomes | Sequence[SurvivalRecord],
    covariates,
    ties: TieMethod = TieMethod.EFRON,
) -> CoxFit:
    """The model with every coefficient pinned at 0 (chi2 exactly zero)."""
    out = _as_outcomes(outcomes)
    z = _as_matrix(covariates)
    prob = _CoxProblem(out, z)
    beta = np.zeros(z.shape[1])
    loglik, _, hess = prob.evaluate(beta, ties)
    try:
        covariance = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        raise SingularError("Hessian not invertible at beta = 0") from None
    return CoxFit(
        beta=beta,
        loglik=loglik,
        null_loglik=loglik,
        chi2=0.0,
        linear_predictor=z @ beta,
        covariance=0.5 * (covariance + covariance.T),
        n=prob.n,
        n_events=prob.n_events,
        iterations=0,
        converged=True,
    )
