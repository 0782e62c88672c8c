"""Line-oriented run configuration: [section] headers and key = value
pairs, one per line, with # comments.

The grammar is a strict subset of the common INI syntax: no multi-line
values, no duplicate sections or keys, keys are lowercase identifiers.
Every value is revalidated against the constraints of the module it
feeds, and every complaint names the config line it came from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .dataset import SyntheticSpec
from .ensemble import EnsembleConfig
from .experiment import ExperimentConfig
from .learners import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, Erm, Lasso, Learner

DEFAULT_LOG_LAMBDA_MIN = -1.0
DEFAULT_LOG_LAMBDA_MAX = 2.0
DEFAULT_LAMBDA_COUNT = 7


class ConfigFileError(ValueError):
    """Malformed or invalid configuration; carries the source line."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


_SECTIONS = {
    "synthetic": {"n", "d", "sparsity", "n_outliers", "noise_sd", "beta_values"},
    "ensemble": {
        "lambdas",
        "log_lambda_min",
        "log_lambda_max",
        "lambda_count",
        "erm_prefix_dims",
        "v_count",
        "k_min",
        "k_max",
        "tol",
        "max_sweeps",
        "on_fit_error",
    },
    "experiment": {"outlier_grid", "repetitions"},
    "run": {"seed", "output_dir", "threads"},
}


@dataclass
class RunConfig:
    """Parsed configuration, values still addressable by source line."""

    path: str
    entries: dict[str, dict[str, tuple[str, int]]]

    def _get(self, section: str, key: str) -> tuple[str, int] | None:
        return self.entries.get(section, {}).get(key)

    def _require(self, section: str, key: str) -> tuple[str, int]:
        got = self._get(section, key)
        if got is None:
            raise ConfigFileError(f"missing required key '{key}' in [{section}]", self.path)
        return got

    def _int(self, section: str, key: str, default: int | None = None) -> int | None:
        got = self._get(section, key)
        if got is None:
            return default
        text, line = got
        try:
            return int(text)
        except ValueError:
            raise ConfigFileError(f"'{key}' must be an integer, got {text!r}", self.path, line) from None

    def _float(self, section: str, key: str, default: float | None = None) -> float | None:
        got = self._get(section, key)
        if got is None:
            return default
        text, line = got
        try:
            value = float(text)
        except ValueError:
            raise ConfigFileError(f"'{key}' must be a number, got {text!r}", self.path, line) from None
        if not math.isfinite(value):
            raise ConfigFileError(f"'{key}' must be finite, got {text!r}", self.path, line)
        return value

    def _str(self, section: str, key: str, default: str | None = None) -> str | None:
        got = self._get(section, key)
        return default if got is None else got[0]

    def _int_list(self, section: str, key: str) -> tuple[tuple[int, ...], int] | None:
        got = self._get(section, key)
        if got is None:
            return None
        text, line = got
        try:
            return tuple(int(v.strip()) for v in text.split(",") if v.strip()), line
        except ValueError:
            raise ConfigFileError(f"'{key}' must be comma-separated integers, got {text!r}", self.path, line) from None

    def _wrap(self, section: str, key: str, exc: Exception) -> ConfigFileError:
        got = self._get(section, key)
        return ConfigFileError(str(exc), self.path, got[1] if got else None)

    def synthetic_spec(self, seed: int, n_outliers: int | None = None) -> SyntheticSpec:
        for key in ("n", "d", "sparsity"):
            self._require("synthetic", key)
        if n_outliers is None:
            n_outliers = self._int("synthetic", "n_outliers", 0)
        try:
            return SyntheticSpec(
                n=self._int("synthetic", "n"),
                d=self._int("synthetic", "d"),
                sparsity=self._int("synthetic", "sparsity"),
                n_outliers=n_outliers,
                seed=seed,
                noise_sd=self._float("synthetic", "noise_sd", 1.0),
                beta_values=self._str("synthetic", "beta_values", "ones"),
            )
        except ValueError as exc:
            raise ConfigFileError(f"invalid [synthetic] section: {exc}", self.path) from exc

    def lambda_grid(self) -> tuple[float, ...]:
        got = self._get("ensemble", "lambdas")
        if got is not None:
            text, line = got
            try:
                lams = tuple(float(v.strip()) for v in text.split(",") if v.strip())
            except ValueError:
                raise ConfigFileError(
                    f"'lambdas' must be comma-separated numbers, got {text!r}", self.path, line
                ) from None
            if not lams:
                raise ConfigFileError("'lambdas' is empty", self.path, line)
            return lams
        lo = self._float("ensemble", "log_lambda_min", DEFAULT_LOG_LAMBDA_MIN)
        hi = self._float("ensemble", "log_lambda_max", DEFAULT_LOG_LAMBDA_MAX)
        count = self._int("ensemble", "lambda_count", DEFAULT_LAMBDA_COUNT)
        if count < 1:
            raise self._wrap("ensemble", "lambda_count", ValueError(f"lambda_count must be >= 1, got {count}"))
        if count == 1:
            return (math.exp(lo),)
        step = (hi - lo) / (count - 1)
        return tuple(math.exp(lo + i * step) for i in range(count))

    def learners(self) -> tuple[Learner, ...]:
        tol = self._float("ensemble", "tol", DEFAULT_TOL)
        max_sweeps = self._int("ensemble", "max_sweeps", DEFAULT_MAX_SWEEPS)
        try:
            grid: list[Learner] = [
                Lasso(lam=lam, tol=tol, max_sweeps=max_sweeps) for lam in self.lambda_grid()
            ]
        except ValueError as exc:
            if isinstance(exc, ConfigFileError):
                raise
            raise ConfigFileError(f"invalid learner settings: {exc}", self.path) from exc
        prefix = self._int_list("ensemble", "erm_prefix_dims")
        if prefix is not None:
            dims, line = prefix
            for dim in dims:
                if dim < 1:
                    raise ConfigFileError(f"erm prefix dimension must be >= 1, got {dim}", self.path, line)
                grid.append(Erm(subspace=tuple(range(dim))))
        return tuple(grid)

    def ensemble_config(self) -> EnsembleConfig:
        self._require("ensemble", "v_count")
        try:
            return EnsembleConfig(
                learners=self.learners(),
                v_count=self._int("ensemble", "v_count"),
                k_min=self._int("ensemble", "k_min", 3),
                k_max=self._int("ensemble", "k_max", 4),
                on_fit_error=self._str("ensemble", "on_fit_error", "abort"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigFileError):
                raise
            raise ConfigFileError(f"invalid [ensemble] section: {exc}", self.path) from exc

    def experiment_config(
        self,
        seed: int,
        output_dir: str | Path,
        threads: int = 1,
    ) -> ExperimentConfig:
        grid = self._int_list("experiment", "outlier_grid")
        if grid is None:
            raise ConfigFileError("missing required key 'outlier_grid' in [experiment]", self.path)
        reps = self._int("experiment", "repetitions", 100)
        try:
            return ExperimentConfig(
                synthetic=self.synthetic_spec(seed=seed, n_outliers=0),
                ensemble=self.ensemble_config(),
                outlier_grid=grid[0],
                repetitions=reps,
                output_dir=output_dir,
                master_seed=seed,
                threads=threads,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigFileError):
                raise
            raise ConfigFileError(f"invalid [experiment] section: {exc}", self.path) from exc

    def seed(self) -> int | None:
        return self._int("run", "seed", None)

    def output_dir(self) -> str | None:
        return self._str("run", "output_dir", None)

    def threads(self) -> int:
        value = self._int("run", "threads", 1)
        if value < 1:
            raise self._wrap("run", "threads", ValueError(f"threads must be >= 1, got {value}"))
        return value


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    """Parse config text; complaints carry 1-based line numbers."""
    entries: dict[str, dict[str, tuple[str, int]]] = {}
    section: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigFileError(
                    f"unknown section [{name}]; expected one of {sorted(_SECTIONS)}",
                    path,
                    line_no,
                )
            if name in entries:
                raise ConfigFileError(f"duplicate section [{name}]", path, line_no)
            entries[name] = {}
            section = name
            continue
        if "=" not in line:
            raise ConfigFileError(
                f"expected 'key = value' or '[section]', got {raw.strip()!r}", path, line_no
            )
        if section is None:
            raise ConfigFileError("key outside any [section]", path, line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SECTIONS[section]:
            raise ConfigFileError(
                f"unknown key '{key}' in [{section}]; expected one of {sorted(_SECTIONS[section])}",
                path,
                line_no,
            )
        if key in entries[section]:
            raise ConfigFileError(f"duplicate key '{key}' in [{section}]", path, line_no)
        if not value:
            raise ConfigFileError(f"empty value for '{key}'", path, line_no)
        entries[section][key] = (value, line_no)
    return RunConfig(path=path, entries=entries)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigFileError(f"cannot read config: {exc}", path) from exc
    return parse_config(text, path=str(path))
