"""Domain types, validation, and CSV ingestion for survival mediation data.

A mediation dataset aligns three pieces per subject: right-censored (and
optionally left-truncated) follow-up, one or more exposure columns, and a
matrix of candidate mediators.  All containers are immutable after
construction and safe to share across parallel workers; value-level rules
are checked by :func:`validate_dataset`, not by the constructors, so that
invalid data can be represented and reported rather than crashing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

MAX_MEDIATORS = 10

_NA_TOKENS = frozenset({"", "na", "nan", "null", "."})
_TRUE_TOKENS = frozenset({"1", "true"})
_FALSE_TOKENS = frozenset({"0", "false"})


class DataError(Exception):
    """Base class for ingestion and validation failures."""


class MissingColumnError(DataError):
    """A mapped column is absent from the CSV header."""


class CellParseError(DataError):
    """A non-missing cell could not be parsed; carries row and column."""

    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")
        self.row = row
        self.column = column
        self.value = value


class EmptyDatasetError(DataError):
    """No usable rows remained after complete-case filtering."""


class ValidationFailedError(DataError):
    """An ingested dataset violated a structural invariant."""

    def __init__(self, result: "ValidationResult"):
        head = "; ".join(str(v) for v in result.violations[:5])
        more = "" if len(result.violations) <= 5 else f" (+{len(result.violations) - 5} more)"
        super().__init__(f"dataset failed validation: {head}{more}")
        self.result = result


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject's follow-up: optional delayed entry, exit time, event flag.

    ``event`` is True when the event was observed at ``exit`` and False when
    follow-up was right-censored there.
    """

    entry: float
    exit: float
    event: bool


class SurvivalOutcomes:
    """Array-backed, immutable collection of :class:`SurvivalRecord` values."""

    __slots__ = ("entry", "exit", "event")

    def __init__(self, entry: np.ndarray, exit: np.ndarray, event: np.ndarray):
        entry = np.atleast_1d(np.asarray(entry, dtype=np.float64))
        exit_ = np.atleast_1d(np.asarray(exit, dtype=np.float64))
        event = np.atleast_1d(np.asarray(event, dtype=bool))
        if not (entry.shape == exit_.shape == event.shape) or entry.ndim != 1:
            raise ValueError("entry, exit, and event must be equal-length vectors")
        self.entry = _frozen(entry)
        self.exit = _frozen(exit_)
        self.event = _frozen(event)

    @classmethod
    def from_records(cls, records: Sequence[SurvivalRecord]) -> "SurvivalOutcomes":
        return cls(
            np.array([r.entry for r in records], dtype=np.float64),
            np.array([r.exit for r in records], dtype=np.float64),
            np.array([r.event for r in records], dtype=bool),
        )

    def __len__(self) -> int:
        return self.entry.shape[0]

    def __getitem__(self, i: int) -> SurvivalRecord:
        return SurvivalRecord(float(self.entry[i]), float(self.exit[i]), bool(self.event[i]))

    def __iter__(self) -> Iterator[SurvivalRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    @property
    def censor_rate(self) -> float:
        return 1.0 - self.n_events / len(self)

    def take(self, idx: np.ndarray) -> "SurvivalOutcomes":
        return SurvivalOutcomes(self.entry[idx], self.exit[idx], self.event[idx])


class CovariateMatrix:
    """An n-by-q design block with column labels."""

    __slots__ = ("values", "names")

    def __init__(self, values: np.ndarray, names: Sequence[str]):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("covariate values must be a 2-D matrix")
        names = tuple(str(c) for c in names)
        if len(names) != values.shape[1]:
            raise ValueError(f"{values.shape[1]} columns but {len(names)} names")
        self.values = _frozen(values)
        self.names = names

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]


class MediationDataset:
    """Aligned exposure block, mediator matrix, and survival outcomes."""

    __slots__ = ("outcomes", "exposure", "mediators", "exposure_names", "mediator_names")

    def __init__(
        self,
        outcomes: SurvivalOutcomes | Sequence[SurvivalRecord],
        exposure: np.ndarray,
        mediators: np.ndarray,
        exposure_names: Sequence[str] = (),
        mediator_names: Sequence[str] = (),
    ):
        if not isinstance(outcomes, SurvivalOutcomes):
            outcomes = SurvivalOutcomes.from_records(outcomes)
        exposure = np.asarray(exposure, dtype=np.float64)
        if exposure.ndim == 1:
            exposure = exposure[:, None]
        mediators = np.asarray(mediators, dtype=np.float64)
        if mediators.ndim == 1:
            mediators = mediators[:, None]
        n = len(outcomes)
        if exposure.shape[0] != n or mediators.shape[0] != n:
            raise ValueError(
                f"row mismatch: {n} outcomes, {exposure.shape[0]} exposure rows, "
                f"{mediators.shape[0]} mediator rows"
            )
        if not exposure_names:
            exposure_names = tuple(f"x{j + 1}" for j in range(exposure.shape[1]))
        if not mediator_names:
            mediator_names = tuple(f"m{j + 1}" for j in range(mediators.shape[1]))
        if len(exposure_names) != exposure.shape[1]:
            raise ValueError("exposure_names length mismatch")
        if len(mediator_names) != mediators.shape[1]:
            raise ValueError("mediator_names length mismatch")
        self.outcomes = outcomes
        self.exposure = _frozen(exposure)
        self.mediators = _frozen(mediators)
        self.exposure_names = tuple(exposure_names)
        self.mediator_names = tuple(mediator_names)

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def n_exposures(self) -> int:
        return self.exposure.shape[1]

    @property
    def n_mediators(self) -> int:
        return self.mediators.shape[1]

    def take_rows(self, idx: np.ndarray) -> "MediationDataset":
        """Row subset/resample (duplicates allowed), e.g. for the bootstrap."""
        idx = np.asarray(idx)
        return MediationDataset(
            self.outcomes.take(idx),
            self.exposure[idx],
            self.mediators[idx],
            self.exposure_names,
            self.mediator_names,
        )

    def select_mediators(self, which: Sequence[int] | Sequence[str]) -> "MediationDataset":
        """Dataset restricted to the given mediator columns (by index or name)."""
        cols = [self.mediator_names.index(w) if isinstance(w, str) else int(w) for w in which]
        return MediationDataset(
            self.outcomes,
            self.exposure,
            self.mediators[:, cols],
            self.exposure_names,
            tuple(self.mediator_names[c] for c in cols),
        )

    def append_mediator(self, name: str, values: np.ndarray) -> "MediationDataset":
        values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
        return MediationDataset(
            self.outcomes,
            self.exposure,
            np.hstack([self.mediators, values]),
            self.exposure_names,
            self.mediator_names + (str(name),),
        )


@dataclass(frozen=True)
class Violation:
    """One broken rule; ``row`` is None for dataset-level rules."""

    row: int | None
    rule: str

    def __str__(self) -> str:
        where = "dataset" if self.row is None else f"row {self.row}"
        return f"{where}: {self.rule}"


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[Violation, ...]
    n: int
    n_events: int
    censor_rate: float


def validate_dataset(ds: MediationDataset) -> ValidationResult:
    """Check every value-level invariant; violations are data, not failures.

    Row-level rules: ``entry >= 0``, ``exit > entry``, finite exposure and
    mediator values.  Dataset-level rules: ``p >= 1``, ``p <= 10``, and
    ``n >= q + 1`` where q counts the joint-model coefficients.
    """
    out = ds.outcomes
    violations: list[Violation] = []

    for i in np.flatnonzero(out.entry < 0):
        violations.append(Violation(int(i), "entry >= 0"))
    for i in np.flatnonzero(~(out.exit > out.entry)):
        violations.append(Violation(int(i), "exit > entry"))
    for i in np.flatnonzero(~np.isfinite(out.entry) | ~np.isfinite(out.exit)):
        violations.append(Violation(int(i), "finite times"))
    for i in np.flatnonzero(~np.all(np.isfinite(ds.exposure), axis=1)):
        violations.append(Violation(int(i), "finite exposure"))
    for i in np.flatnonzero(~np.all(np.isfinite(ds.mediators), axis=1)):
        violations.append(Violation(int(i), "finite mediator"))

    p = ds.n_mediators
    if p < 1:
        violations.append(Violation(None, "p >= 1"))
    if p > MAX_MEDIATORS:
        violations.append(Violation(None, "p <= 10"))
    q = ds.n_exposures + p
    if ds.n < q + 1:
        violations.append(Violation(None, "n >= q + 1"))

    violations.sort(key=lambda v: (-1 if v.row is None else v.row, v.rule))
    return ValidationResult(
        ok=not violations,
        violations=tuple(violations),
        n=ds.n,
        n_events=out.n_events,
        censor_rate=out.censor_rate,
    )


@dataclass(frozen=True)
class ColumnMapping:
    """Names the CSV columns holding each dataset role.

    ``entry`` may be None, in which case all entry times are 0 (no left
    truncation).
    """

    time: str
    event: str
    exposures: tuple[str, ...]
    mediators: tuple[str, ...]
    entry: str | None = None

    def mapped_columns(self) -> tuple[str, ...]:
        cols = [self.time, self.event]
        if self.entry is not None:
            cols.append(self.entry)
        cols.extend(self.exposures)
        cols.extend(self.mediators)
        return tuple(cols)


@dataclass(frozen=True)
class CsvLoadResult:
    dataset: MediationDataset
    dropped_rows: int


def _parse_event(token: str, row: int, column: str) -> bool:
    low = token.strip().lower()
    if low in _TRUE_TOKENS:
        return True
    if low in _FALSE_TOKENS:
        return False
    raise CellParseError(row, column, token)


def _parse_number(token: str, row: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise CellParseError(row, column, token) from None


def read_csv(path, mapping: ColumnMapping) -> CsvLoadResult:
    """Load a comma-separated file into a validated :class:`MediationDataset`.

    Rows with any missing mapped field are dropped and counted
    (complete-case analysis).  Event cells must be one of {0, 1, true,
    false}; numeric cells use a decimal point.  The parsed dataset must pass
    :func:`validate_dataset`, otherwise :class:`ValidationFailedError` is
    raised.
    """
    if len(mapping.mediators) > MAX_MEDIATORS:
        raise DataError(f"{len(mapping.mediators)} mediators mapped; at most {MAX_MEDIATORS} supported")
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in mapping.mapped_columns():
            if col not in header:
                raise MissingColumnError(f"column {col!r} not in header {header}")

        entries, times, events = [], [], []
        expo_rows, medi_rows = [], []
        dropped = 0
        for row_idx, row in enumerate(reader, start=1):
            cells = {c: (row.get(c) or "") for c in mapping.mapped_columns()}
            if any(v.strip().lower() in _NA_TOKENS for v in cells.values()):
                dropped += 1
                continue
            times.append(_parse_number(cells[mapping.time], row_idx, mapping.time))
            events.append(_parse_event(cells[mapping.event], row_idx, mapping.event))
            if mapping.entry is None:
                entries.append(0.0)
            else:
                entries.append(_parse_number(cells[mapping.entry], row_idx, mapping.entry))
            expo_rows.append([_parse_number(cells[c], row_idx, c) for c in mapping.exposures])
            medi_rows.append([_parse_number(cells[c], row_idx, c) for c in mapping.mediators])

    if not times:
        raise EmptyDatasetError(f"no usable rows in {path}")

    ds = MediationDataset(
        SurvivalOutcomes(np.array(entries), np.array(times), np.array(events)),
        np.array(expo_rows),
        np.array(medi_rows),
        mapping.exposures,
        mapping.mediators,
    )
    result = validate_dataset(ds)
    if not result.ok:
        raise ValidationFailedError(result)
    return CsvLoadResult(dataset=ds, dropped_rows=dropped)


def write_csv(ds: MediationDataset, path) -> None:
    """Write a dataset in the canonical column layout read_csv understands."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entry", "time", "event", *ds.exposure_names, *ds.mediator_names])
        out = ds.outcomes
        for i in range(ds.n):
            writer.writerow(
                [
                    repr(float(out.entry[i])),
                    repr(float(out.exit[i])),
                    int(out.event[i]),
                    *(repr(float(v)) for v in ds.exposure[i]),
                    *(repr(float(v)) for v in ds.mediators[i]),
                ]
            )


def canonical_mapping(ds: MediationDataset) -> ColumnMapping:
    """Mapping matching :func:`write_csv` output for the given dataset."""
    return ColumnMapping(
        time="time",
        event="event",
        entry="entry",
        exposures=ds.exposure_names,
        mediators=ds.mediator_names,
    )
