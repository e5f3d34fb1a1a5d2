"""Replicated-scenario runner, result aggregation, and the CSV analysis pipeline.

Simulation output is long-format CSV, one file per (family, quantity
group), all sharing the header
``scenario_id,axis_name,axis_value,quantity,mean,mc_sd,n_replicates,n_failures``.
Real-data analysis emits ``table1.csv`` (per-mediator single-mediator SOS),
``table2.csv`` (joint-model decomposition per measure), and ``report.json``.
Output bytes are a pure function of (family, Q, seed): replicate b of a
scenario draws from substream (seed, b) and aggregation runs in index
order, for any parallelism degree.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cox import CoxError, FitOptions, TieMethod
from .data import ColumnMapping, MediationDataset, read_csv, validate_dataset
from .mediation import (
    MediationError,
    MediationReport,
    attach_cis,
    bootstrap_ci,
    r2_mediation,
    scalar_quantities,
)
from .r2 import MEASURES
from .rng import substream
from .simulate import ScenarioConfig, calibrate_censoring, gen_dataset, make_scenarios

SUMMARY_HEADER = (
    "scenario_id",
    "axis_name",
    "axis_value",
    "quantity",
    "mean",
    "mc_sd",
    "n_replicates",
    "n_failures",
)

QUANTITY_GROUPS: dict[str, tuple[str, ...]] = {
    "sos": tuple(f"sos_{m}" for m in MEASURES),
    "r2med": tuple(f"r2med_{m}" for m in MEASURES),
    "r2raw": tuple(f"r2{part}_{m}" for part in ("tx", "tm", "tmx") for m in MEASURES),
    "proportions": ("product_proportion", "difference_proportion"),
    "censoring": ("censor_rate",),
}

AXIS_FIELDS = {
    "S1": ("censor_rate", lambda c: c.target_censor_rate),
    "S2": ("n", lambda c: c.n),
    "M1": ("censor_rate", lambda c: c.target_censor_rate),
    "M2": ("a", lambda c: c.a[0]),
    "M3": ("b", lambda c: c.b[0]),
    "M4": ("r", lambda c: c.r),
    "M5": ("p", lambda c: c.p),
}


class ScenarioUnusableError(Exception):
    """More than half of a scenario's replicates failed to fit."""


@dataclass(frozen=True)
class ReplicationSummary:
    """Aggregated quantities for one scenario (one axis point)."""

    scenario_id: str
    axis_name: str
    axis_value: float
    means: dict[str, float]
    mc_sds: dict[str, float]
    n_replicates: int
    n_failures: int


def _replicate(cfg: ScenarioConfig, censor_scale: float, seed: int, index: int, ties_value: str):
    """One replicate's quantities, or None when the fits fail."""
    ds = gen_dataset(cfg, substream(seed, index), censor_scale)
    try:
        report = r2_mediation(ds, ties=TieMethod(ties_value))
    except (CoxError, MediationError):
        return index, None
    vals = scalar_quantities(report)
    vals["censor_rate"] = ds.outcomes.censor_rate
    return index, vals


def run_replications(
    cfg: ScenarioConfig,
    q: int | None = None,
    seed: int | None = None,
    parallelism: int = 1,
    ties: TieMethod = TieMethod.EFRON,
    axis_name: str = "",
    axis_value: float = float("nan"),
) -> ReplicationSummary:
    """Run Q replicates of one scenario and aggregate means and MC spread.

    Replicates whose fits fail (e.g. separation at extreme censoring) are
    excluded from the means but counted.  The summary depends only on
    (cfg, Q, seed), never on parallelism or completion order.
    """
    q = cfg.replications if q is None else q
    seed = cfg.seed if seed is None else seed
    censor_scale = calibrate_censoring(cfg)

    args = [(cfg, censor_scale, seed, i, ties.value) for i in range(q)]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            raw = list(pool.map(_replicate, *zip(*args), chunksize=max(1, q // (4 * parallelism))))
    else:
        raw = [_replicate(*a) for a in args]
    raw.sort(key=lambda pair: pair[0])
    samples = [vals for _, vals in raw if vals is not None]
    failures = q - len(samples)

    if failures > q / 2:
        raise ScenarioUnusableError(
            f"{cfg.scenario_id or 'scenario'}: {failures}/{q} replicates failed"
        )

    names = list(samples[0])
    means = {k: float(np.mean([s[k] for s in samples])) for k in names}
    sds = {
        k: 0.0 if len(samples) < 2 else float(np.std([s[k] for s in samples], ddof=1))
        for k in names
    }
    return ReplicationSummary(
        scenario_id=cfg.scenario_id,
        axis_name=axis_name,
        axis_value=axis_value,
        means=means,
        mc_sds=sds,
        n_replicates=len(samples),
        n_failures=failures,
    )


def run_family(
    family: str,
    q: int | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    parallelism: int = 1,
    ties: TieMethod = TieMethod.EFRON,
    n: int | None = None,
) -> list[ReplicationSummary]:
    """One summary per axis point of a family; optionally emit the CSVs."""
    axis_name, axis_of = AXIS_FIELDS[family]
    summaries = []
    for cfg in make_scenarios(family, q=q, seed=seed, n=n):
        summaries.append(
            run_replications(
                cfg,
                parallelism=parallelism,
                ties=ties,
                axis_name=axis_name,
                axis_value=float(axis_of(cfg)),
            )
        )
    if out_dir is not None:
        write_family_csvs(family, summaries, out_dir)
    return summaries


def write_family_csvs(family: str, summaries: list[ReplicationSummary], out_dir: str | Path):
    """One long-format CSV per quantity group, stable row order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for group, quantities in QUANTITY_GROUPS.items():
        present = [qn for qn in quantities if all(qn in s.means for s in summaries)]
        if not present:
            continue
        with open(out / f"{family}_{group}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_HEADER)
            for s in summaries:
                for qn in present:
                    writer.writerow(
                        [
                            s.scenario_id,
                            s.axis_name,
                            repr(float(s.axis_value)),
                            qn,
                            repr(s.means[qn]),
                            repr(s.mc_sds[qn]),
                            s.n_replicates,
                            s.n_failures,
                        ]
                    )


def read_summary_csv(path: str | Path) -> list[dict[str, str]]:
    """Rows of a harness summary CSV (used by tests and by re-consumers)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class AnalysisResult:
    """Everything `analyze` produces before serialization."""

    joint: MediationReport
    singles: dict[str, MediationReport]  # mediator name -> single-mediator report
    n: int
    n_events: int
    censor_rate: float
    dropped_rows: int


def run_analysis(
    csv_path: str | Path,
    mapping: ColumnMapping,
    out_dir: str | Path | None = None,
    n_boot: int = 0,
    level: float = 0.95,
    random_control: bool = False,
    seed: int = 0,
    ties: TieMethod = TieMethod.EFRON,
    options: FitOptions | None = None,
) -> AnalysisResult:
    """The real-data pipeline: single-mediator table, joint table, report.

    Evaluates each mediator one-by-one in a single-mediator model (SOS per
    measure), then the joint multiple-mediator model.  With
    ``random_control`` an independent standard-normal mediator (substream
    (seed, 1)) is appended to the single-mediator table as a null
    reference.  ``n_boot > 0`` adds percentile bootstrap intervals for the
    joint model's quantities.
    """
    loaded = read_csv(csv_path, mapping)
    ds = loaded.dataset
    validation = validate_dataset(ds)

    joint = r2_mediation(ds, ties=ties, options=options)
    if n_boot > 0:
        cis = bootstrap_ci(ds, n_boot=n_boot, level=level, seed=seed, ties=ties, options=options)
        joint = attach_cis(joint, cis, level)

    singles: dict[str, MediationReport] = {}
    for name in ds.mediator_names:
        singles[name] = r2_mediation(ds.select_mediators([name]), ties=ties, options=options)
    if random_control:
        control = ds.append_mediator("Random", substream(seed, 1).standard_normal(ds.n))
        singles["Random"] = r2_mediation(
            control.select_mediators(["Random"]), ties=ties, options=options
        )

    result = AnalysisResult(
        joint=joint,
        singles=singles,
        n=validation.n,
        n_events=validation.n_events,
        censor_rate=validation.censor_rate,
        dropped_rows=loaded.dropped_rows,
    )
    if out_dir is not None:
        write_analysis_outputs(result, out_dir)
    return result


def write_analysis_outputs(result: AnalysisResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "table1.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mediator", *(f"sos_{m}" for m in MEASURES)])
        for name, report in result.singles.items():
            writer.writerow([name, *(repr(report.measures[m].sos) for m in MEASURES)])

    with open(out / "table2.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["measure", "r2_tx", "r2_tm", "r2_txm", "r2_med", "sos"])
        for m in MEASURES:
            mm = result.joint.measures[m]
            writer.writerow(
                [m, repr(mm.r2_tx), repr(mm.r2_tm), repr(mm.r2_tmx), repr(mm.r2_med), repr(mm.sos)]
            )

    with open(out / "report.json", "w") as fh:
        json.dump(_report_json(result), fh, indent=2)
        fh.write("\n")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return None if math.isnan(v) else v
    return value


def _measures_json(report: MediationReport) -> dict:
    return {
        m: {
            "r2_tx": _jsonable(mm.r2_tx),
            "r2_tm": _jsonable(mm.r2_tm),
            "r2_tmx": _jsonable(mm.r2_tmx),
            "r2_med": _jsonable(mm.r2_med),
            "sos": _jsonable(mm.sos),
            "sos_defined": mm.sos_defined,
            "negative": mm.negative,
        }
        for m, mm in report.measures.items()
    }


def _report_json(result: AnalysisResult) -> dict:
    joint = result.joint
    doc = {
        "dataset": {
            "n": result.n,
            "n_events": result.n_events,
            "censor_rate": result.censor_rate,
            "dropped_rows": result.dropped_rows,
        },
        "joint": {
            "measures": _measures_json(joint),
            "coefficients": {
                "total": _jsonable(joint.total_coef),
                "direct": _jsonable(joint.direct_coef),
                "joint_mediator": _jsonable(joint.joint_mediator_coefs),
                "mediator_only": _jsonable(joint.mediator_only_coefs),
                "mediator_slopes": [[float(v) for v in row] for row in joint.mediator_slopes],
            },
            "product_proportion": _jsonable(joint.product_proportion),
            "difference_proportion": _jsonable(joint.difference_proportion),
        },
        "single_mediator": {
            name: _measures_json(rep) for name, rep in result.singles.items()
        },
    }
    if joint.cis is not None:
        doc["joint"]["bootstrap_ci"] = {
            "level": joint.ci_level,
            "intervals": {k: [lo, hi] for k, (lo, hi) in joint.cis.items()},
        }
    return doc
