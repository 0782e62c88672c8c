"""Dataset container, CSV round-trip, and the corrupted-data generator.

Synthetic data mixes three row kinds: informative rows (Gaussian design,
linear signal plus Gaussian noise), hard outliers that mimic hardware
corruption (all-ones design, huge constant response), and heavy-tail
rows whose noise follows a Student t with 2 degrees of freedom.  Row
positions are shuffled by the seeded generator so corruption is spread
over the index range the block system will slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_ROWS = 8

INFORMATIVE = "inf"
HARD_OUTLIER = "hard"
HEAVY_OUTLIER = "heavy"
_PROVENANCE_VALUES = (INFORMATIVE, HARD_OUTLIER, HEAVY_OUTLIER)

HARD_OUTLIER_RESPONSE = 10_000.0


class DatasetError(ValueError):
    """Base class for dataset construction and I/O errors."""


class InvalidSpecError(DatasetError):
    """Synthetic-data spec violates its invariants."""


class CsvFormatError(DatasetError):
    """Malformed CSV; carries the offending row (1-based, header = 1)."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class Dataset:
    """Design matrix x (n rows, d columns), responses y, and optional
    per-row provenance labels ('inf', 'hard' or 'heavy')."""

    x: np.ndarray
    y: np.ndarray
    provenance: np.ndarray | None = None

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 1:
            raise DatasetError(f"expected 2-d x and 1-d y, got x.ndim={x.ndim}, y.ndim={y.ndim}")
        if x.shape[0] != y.shape[0]:
            raise DatasetError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if x.shape[0] < MIN_ROWS:
            raise DatasetError(f"need at least {MIN_ROWS} rows, got {x.shape[0]}")
        prov = self.provenance
        if prov is not None:
            prov = np.asarray(prov)
            if prov.shape != (x.shape[0],):
                raise DatasetError(
                    f"provenance has shape {prov.shape}, expected ({x.shape[0]},)"
                )
            bad = set(np.unique(prov)) - set(_PROVENANCE_VALUES)
            if bad:
                raise DatasetError(f"unknown provenance labels {sorted(bad)}")
            prov.setflags(write=False)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "provenance", prov)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    n_outliers is split evenly between hard and heavy-tail rows, so it
    must be even.  beta_values selects the ground-truth coefficients on
    the support: 'ones' (default, keeps oracle risks exact) or
    'gaussian' (seeded standard normal draws).
    """

    n: int
    d: int
    sparsity: int
    n_outliers: int
    seed: int
    noise_sd: float = 1.0
    beta_values: str = "ones"

    def __post_init__(self) -> None:
        if self.n < MIN_ROWS:
            raise InvalidSpecError(f"n must be >= {MIN_ROWS}, got {self.n}")
        if self.d < 1:
            raise InvalidSpecError(f"d must be >= 1, got {self.d}")
        if not 0 <= self.sparsity <= self.d:
            raise InvalidSpecError(f"sparsity {self.sparsity} outside [0, d={self.d}]")
        if self.n_outliers % 2 != 0:
            raise InvalidSpecError(
                f"n_outliers must be even (equal split of the two kinds), got {self.n_outliers}"
            )
        if not 0 <= self.n_outliers < self.n:
            raise InvalidSpecError(f"n_outliers {self.n_outliers} outside [0, n={self.n})")
        if self.noise_sd < 0:
            raise InvalidSpecError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.beta_values not in ("ones", "gaussian"):
            raise InvalidSpecError(f"beta_values must be 'ones' or 'gaussian', got {self.beta_values!r}")


def _student_t2(rng: np.random.Generator, size: int) -> np.ndarray:
    # t with 2 dof as normal / sqrt(chi2_2 / 2), built from plain normals
    z = rng.standard_normal(size)
    chi2 = rng.standard_normal(size) ** 2 + rng.standard_normal(size) ** 2
    return z / np.sqrt(chi2 / 2.0)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Draw one dataset from the spec; returns (dataset, true coefficients).

    All randomness comes from numpy's default PCG64 generator seeded with
    spec.seed, so identical specs produce bit-identical datasets.
    """
    rng = np.random.default_rng(spec.seed)
    beta0 = np.zeros(spec.d)
    if spec.beta_values == "ones":
        beta0[: spec.sparsity] = 1.0
    else:
        beta0[: spec.sparsity] = rng.standard_normal(spec.sparsity)

    n_half = spec.n_outliers // 2
    n_inf = spec.n - spec.n_outliers

    x = np.empty((spec.n, spec.d))
    y = np.empty(spec.n)
    prov = np.empty(spec.n, dtype="U5")

    x[:n_inf] = rng.standard_normal((n_inf, spec.d))
    y[:n_inf] = x[:n_inf] @ beta0 + spec.noise_sd * rng.standard_normal(n_inf)
    prov[:n_inf] = INFORMATIVE

    hard = slice(n_inf, n_inf + n_half)
    x[hard] = 1.0
    y[hard] = HARD_OUTLIER_RESPONSE
    prov[hard] = HARD_OUTLIER

    heavy = slice(n_inf + n_half, spec.n)
    x[heavy] = rng.standard_normal((n_half, spec.d))
    y[heavy] = x[heavy] @ beta0 + _student_t2(rng, n_half)
    prov[heavy] = HEAVY_OUTLIER

    order = rng.permutation(spec.n)
    return Dataset(x=x[order], y=y[order], provenance=prov[order]), beta0


def _format(value: float) -> str:
    # 17 significant digits round-trip float64 exactly
    return format(value, ".17g")


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset with header y,x1,...,xd[,provenance], LF endings."""
    cols = ["y"] + [f"x{j}" for j in range(1, dataset.d + 1)]
    if dataset.provenance is not None:
        cols.append("provenance")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(dataset.n):
            fields = [_format(dataset.y[i])]
            fields.extend(_format(v) for v in dataset.x[i])
            if dataset.provenance is not None:
                fields.append(str(dataset.provenance[i]))
            fh.write(",".join(fields) + "\n")


def load_csv(path) -> Dataset:
    """Read a dataset written by save_csv (or matching its schema)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise CsvFormatError("empty file, expected a header line", row=1)
        names = header.rstrip("\r\n").split(",")
        has_prov = names and names[-1] == "provenance"
        feature_names = names[1:-1] if has_prov else names[1:]
        if not names or names[0] != "y" or not feature_names:
            raise CsvFormatError(
                f"header must be y,x1,...,xd[,provenance], got {header.rstrip()!r}", row=1
            )
        for j, name in enumerate(feature_names, start=1):
            if name != f"x{j}":
                raise CsvFormatError(f"feature column {j} named {name!r}, expected 'x{j}'", row=1)
        d = len(feature_names)
        width = len(names)

        ys: list[float] = []
        xs: list[list[float]] = []
        prov: list[str] = []
        for row_no, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != width:
                raise CsvFormatError(
                    f"expected {width} fields, got {len(fields)}", row=row_no
                )
            try:
                ys.append(float(fields[0]))
                xs.append([float(v) for v in fields[1 : d + 1]])
            except ValueError:
                for col, cell in enumerate(fields[: d + 1], start=1):
                    try:
                        float(cell)
                    except ValueError:
                        raise CsvFormatError(
                            f"non-numeric cell {cell!r} in column {col} ({names[col - 1]})",
                            row=row_no,
                        ) from None
                raise CsvFormatError("non-numeric cell", row=row_no) from None
            if has_prov:
                label = fields[-1]
                if label not in _PROVENANCE_VALUES:
                    raise CsvFormatError(
                        f"provenance must be one of {_PROVENANCE_VALUES}, got {label!r}",
                        row=row_no,
                    )
                prov.append(label)

    if len(ys) < MIN_ROWS:
        raise CsvFormatError(f"dataset has {len(ys)} rows, need at least {MIN_ROWS}")
    return Dataset(
        x=np.array(xs, dtype=np.float64),
        y=np.array(ys, dtype=np.float64),
        provenance=np.array(prov, dtype="U5") if has_prov else None,
    )
