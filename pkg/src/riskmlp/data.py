"""Dataset I/O and the seeded synthetic generator.

Samples carry a firm id (1-10), a period index (1-4), 17 feature scores
on [0, 1], and a success/failure label. The synthetic generator
reproduces the reference per-firm, per-period success/failure tallies
cell for cell (220 projects, 164 successes / 56 failures) and draws
features from class-conditional clipped normals so the task is learnable
but not trivially separable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .rais import DEFAULT_RETAINED_SCHEMA, RaisSchema
from .rng import SplitMix64

SUCCESS = "success"
FAILURE = "failure"

N_FIRMS = 10
N_PERIODS = 4
PERIOD_LABELS = {1: "2000-2002", 2: "2003-2006", 3: "2006-2009", 4: "2010-2013"}

# (successes, failures) per firm (rows 1..10) and period (cols 1..4).
# Column sums: (21,16) (38,14) (47,16) (58,10); totals 164 S / 56 F over 220.
REFERENCE_TALLIES: dict[tuple[int, int], tuple[int, int]] = {
    (1, 1): (2, 1), (1, 2): (3, 2), (1, 3): (5, 2), (1, 4): (5, 1),
    (2, 1): (1, 1), (2, 2): (4, 2), (2, 3): (5, 1), (2, 4): (8, 2),
    (3, 1): (1, 3), (3, 2): (4, 1), (3, 3): (5, 2), (3, 4): (5, 2),
    (4, 1): (1, 2), (4, 2): (3, 1), (4, 3): (2, 2), (4, 4): (5, 1),
    (5, 1): (4, 2), (5, 2): (6, 3), (5, 3): (7, 2), (5, 4): (7, 1),
    (6, 1): (2, 1), (6, 2): (4, 1), (6, 3): (4, 2), (6, 4): (5, 1),
    (7, 1): (0, 3), (7, 2): (2, 1), (7, 3): (3, 1), (7, 4): (4, 0),
    (8, 1): (3, 1), (8, 2): (4, 1), (8, 3): (5, 2), (8, 4): (7, 1),
    (9, 1): (3, 0), (9, 2): (5, 0), (9, 3): (7, 1), (9, 4): (7, 0),
    (10, 1): (4, 2), (10, 2): (3, 2), (10, 3): (4, 1), (10, 4): (5, 1),
}

DEFAULT_SUCCESS_MEAN = 0.65
DEFAULT_FAILURE_MEAN = 0.40
DEFAULT_FEATURE_SD = 0.15


class SchemaError(ValueError):
    """CSV header does not match the expected schema."""


class RowParseError(ValueError):
    """A CSV data row is malformed or out of range."""


@dataclass
class Sample:
    firm_id: int
    period: int
    features: np.ndarray
    label: str

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if not 1 <= self.firm_id <= N_FIRMS:
            raise ValueError(f"firm id {self.firm_id} outside 1..{N_FIRMS}")
        if not 1 <= self.period <= N_PERIODS:
            raise ValueError(f"period {self.period} outside 1..{N_PERIODS}")
        if self.label not in (SUCCESS, FAILURE):
            raise ValueError(f"label {self.label!r}")
        if np.any(self.features < 0.0) or np.any(self.features > 1.0):
            raise ValueError("features must lie in [0, 1]")


@dataclass
class Dataset:
    schema: RaisSchema = field(default_factory=lambda: DEFAULT_RETAINED_SCHEMA)
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        for s in self.samples:
            if len(s.features) != len(self.schema):
                raise ValueError(
                    f"sample has {len(s.features)} features, schema expects "
                    f"{len(self.schema)}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def label_counts(self) -> tuple[int, int]:
        n_success = sum(1 for s in self.samples if s.label == SUCCESS)
        return n_success, len(self.samples) - n_success

    def period_tallies(self) -> dict[int, tuple[int, int]]:
        """(successes, failures) per period, over all firms."""
        out = {p: [0, 0] for p in range(1, N_PERIODS + 1)}
        for s in self.samples:
            out[s.period][0 if s.label == SUCCESS else 1] += 1
        return {p: (sf[0], sf[1]) for p, sf in out.items()}


def synth_generate(
    seed: int,
    success_mean: float = DEFAULT_SUCCESS_MEAN,
    failure_mean: float = DEFAULT_FAILURE_MEAN,
    sd: float = DEFAULT_FEATURE_SD,
    schema: RaisSchema = DEFAULT_RETAINED_SCHEMA,
) -> Dataset:
    """Generate the 220-sample synthetic dataset for a seed.

    Per-cell (firm, period, label) counts match REFERENCE_TALLIES for
    every seed; only the feature draws depend on the seed. Features are
    normal draws clipped to [0, 1], success samples centered higher than
    failures.
    """
    rng = SplitMix64(seed)
    n_feat = len(schema)
    samples = []
    for firm in range(1, N_FIRMS + 1):
        for period in range(1, N_PERIODS + 1):
            n_s, n_f = REFERENCE_TALLIES[(firm, period)]
            for label, count, mean in (
                (SUCCESS, n_s, success_mean),
                (FAILURE, n_f, failure_mean),
            ):
                for _ in range(count):
                    feats = np.array(
                        [
                            min(max(mean + sd * rng.gauss(), 0.0), 1.0)
                            for _ in range(n_feat)
                        ]
                    )
                    samples.append(
                        Sample(firm_id=firm, period=period, features=feats, label=label)
                    )
    return Dataset(schema=schema, samples=samples)


def _expected_header(schema: RaisSchema) -> list[str]:
    return ["firm", "period"] + schema.codes + ["label"]


def save_csv(dataset: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(dataset.schema))
        for s in dataset.samples:
            writer.writerow(
                [s.firm_id, s.period]
                + [repr(float(v)) for v in s.features]
                + ["S" if s.label == SUCCESS else "F"]
            )


def load_csv(path: str, schema: RaisSchema = DEFAULT_RETAINED_SCHEMA) -> Dataset:
    """Load a dataset CSV; save/load round-trips value-exactly."""
    expected = _expected_header(schema)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for i, (got, want) in enumerate(zip(header, expected)):
            if got.strip() != want:
                raise SchemaError(
                    f"{path}: header column {i + 1} is {got!r}, expected {want!r}"
                )
        if len(header) != len(expected):
            missing = expected[len(header):]
            extra = header[len(expected):]
            what = f"missing {missing[0]!r}" if missing else f"unexpected {extra[0]!r}"
            raise SchemaError(f"{path}: header column count mismatch, {what}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise RowParseError(
                    f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}"
                )
            try:
                firm = int(row[0])
                period = int(row[1])
                feats = np.array([float(v) for v in row[2:-1]])
            except ValueError as exc:
                raise RowParseError(f"{path}:{lineno}: {exc}") from None
            raw_label = row[-1].strip().upper()
            if raw_label not in ("S", "F"):
                raise RowParseError(
                    f"{path}:{lineno}: label must be S or F, got {row[-1]!r}"
                )
            try:
                samples.append(
                    Sample(
                        firm_id=firm,
                        period=period,
                        features=feats,
                        label=SUCCESS if raw_label == "S" else FAILURE,
                    )
                )
            except ValueError as exc:
                raise RowParseError(f"{path}:{lineno}: {exc}") from None
    return Dataset(schema=schema, samples=samples)
