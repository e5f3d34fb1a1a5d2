"""Shared test utilities: brute-force oracles and dataset generators.

The oracle partial likelihood below is deliberately naive (explicit
risk-set loops over subjects) so it shares nothing with the package's
vectorized evaluator.
"""

from __future__ import annotations

import math

import numpy as np

from survmed import CovariateMatrix, MediationDataset, SurvivalOutcomes


def direct_partial_loglik(beta, entry, exit_, event, z, ties="breslow") -> float:
    """Risk-set-by-risk-set partial log-likelihood, straight from the definition."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    n = len(exit_)
    eta = z @ beta
    total = 0.0
    for t in sorted(set(exit_[i] for i in range(n) if event[i])):
        dead = [i for i in range(n) if event[i] and exit_[i] == t]
        at_risk = [j for j in range(n) if entry[j] < t <= exit_[j]]
        risk_sum = sum(math.exp(eta[j]) for j in at_risk)
        dead_sum = sum(math.exp(eta[i]) for i in dead)
        d = len(dead)
        total += sum(eta[i] for i in dead)
        if ties == "breslow":
            total -= d * math.log(risk_sum)
        else:  # efron
            for l in range(d):
                total -= math.log(risk_sum - (l / d) * dead_sum)
    return total


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-7) -> float:
    """Argmax of a unimodal function on [lo, hi] by golden-section search."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def random_survival_data(rng, n, q=1, censor_frac=0.3, tie_round=None, with_entry=False):
    """A small random survival dataset with controllable censoring and ties."""
    z = rng.standard_normal((n, q))
    beta = rng.uniform(-1.0, 1.0, size=q)
    entry = rng.uniform(0.0, 0.3, size=n) if with_entry else np.zeros(n)
    t = entry + rng.exponential(scale=np.exp(-(z @ beta)), size=n)
    if censor_frac > 0:
        c = entry + rng.exponential(scale=np.quantile(t - entry, 1.0 - censor_frac) * 2, size=n)
    else:
        c = np.full(n, np.inf)
    exit_ = np.minimum(t, c)
    event = t <= c
    if tie_round is not None:
        exit_ = np.round(exit_, tie_round)
        exit_ = np.maximum(exit_, entry + 10.0 ** (-tie_round))
    if not event.any():
        event[int(np.argmin(exit_))] = True
    return SurvivalOutcomes(entry, exit_, event), z


def random_mediation_dataset(rng, n=300, p=2, a=0.6, b=0.5, r=0.8, censor_scale=2.0):
    """Mediation dataset from the structural model with exponential censoring."""
    x = rng.standard_normal(n)
    m = a * x[:, None] + rng.standard_normal((n, p))
    t = rng.exponential(scale=np.exp(-(r * x + m @ (b * np.ones(p)))), size=n)
    c = rng.exponential(scale=censor_scale, size=n)
    out = SurvivalOutcomes(np.zeros(n), np.minimum(t, c), t <= c)
    return MediationDataset(out, x, m)


def make_fhs_like_dataset(rng, n=1500, target_events=210):
    """Synthetic dataset shaped like an age-scale cohort analysis:
    three binary-ish exposures, six correlated mediators, delayed entry,
    and heavy (~86%) censoring."""
    gender = (rng.random(n) < 0.5).astype(float)
    smoking = (rng.random(n) < 0.3).astype(float)
    drinking = (rng.random(n) < 0.4).astype(float)
    x = np.column_stack([gender, smoking, drinking])

    latent = rng.standard_normal(n)
    loadings = np.array([0.5, 0.4, -0.45, 0.35, 0.5, 0.45])
    effects = np.array(
        [
            [0.30, 0.35, 0.10],
            [0.25, 0.20, 0.15],
            [-0.40, -0.30, 0.20],
            [0.30, 0.25, 0.05],
            [0.35, 0.30, 0.10],
            [0.30, 0.40, 0.25],
        ]
    )
    m = x @ effects.T + latent[:, None] * loadings + rng.standard_normal((n, 6)) * 0.8

    entry = rng.uniform(40.0, 60.0, size=n)
    lp = x @ np.array([0.8, 0.7, 0.5]) + m @ np.array([0.25, 0.2, -0.3, 0.2, 0.25, 0.2])
    follow = rng.exponential(scale=40.0 * np.exp(-lp * 0.5), size=n)
    # independent censoring follow-up, scale bisected on this sample to hit
    # the target event count
    cens_unit = rng.exponential(size=n)
    lo, hi = 1e-6, 1e6
    for _ in range(80):
        scale = math.sqrt(lo * hi)
        if int((follow <= scale * cens_unit).sum()) < target_events:
            lo = scale
        else:
            hi = scale
    cens = scale * cens_unit
    exit_ = entry + np.minimum(follow, cens)
    event = follow <= cens
    out = SurvivalOutcomes(entry, exit_, event)
    return MediationDataset(
        out,
        x,
        m,
        ("gender", "smoking", "drinking"),
        ("BMI", "Fgluc", "HDL", "LDL", "TC", "TG"),
    )


def covariates(z, prefix="z"):
    z = np.asarray(z)
    if z.ndim == 1:
        z = z[:, None]
    return CovariateMatrix(z, [f"{prefix}{j}" for j in range(z.shape[1])])
