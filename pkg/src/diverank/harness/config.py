"""Experiment configuration: plain ``key = value`` files with ``#`` comments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError
from ..factorizer import MFConfig
from ..reranker import IA_FEATURES, IA_SUBPROFILES, MMR, NONE

# algorithm name -> diversity kind
ALGORITHMS = {"MF": NONE, "MMR": MMR, "xQuAD": IA_FEATURES, "SPAD": IA_SUBPROFILES}
BASELINE = "MF"

DEFAULT_LAMBDAS = tuple(round(0.1 * k, 1) for k in range(11))
DEFAULT_CUTOFFS = (5, 10, 20, 30)


@dataclass(frozen=True)
class ExperimentConfig:
    ratings: Path | None = None
    items: Path | None = None
    out: Path = Path("results")
    seed: int = 0
    mf: MFConfig = MFConfig()
    holdout_fraction: float = 0.2
    relevance_threshold: int = 4
    candidates: int = 100
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS
    tradeoff_n: int = 10
    algorithms: tuple[str, ...] = ("MF", "MMR", "xQuAD", "SPAD")
    alpha: float = 0.5
    knn_k: int = 10
    coverage_k: int = 10
    normalize_scores: bool = False
    chart_lambda: float = 0.5
    chart_lambdas: Mapping[str, float] = field(default_factory=dict)
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if not self.lambdas or not self.cutoffs:
            raise ConfigError("lambdas and cutoffs must be non-empty")
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambdas):
            raise ConfigError("every lambda must lie in [0, 1]")
        if len(set(self.lambdas)) != len(self.lambdas) or len(set(self.cutoffs)) != len(self.cutoffs):
            raise ConfigError("lambda and cutoff grids must not repeat values")
        if any(n < 1 for n in self.cutoffs):
            raise ConfigError("cutoffs must be positive")
        if self.tradeoff_n not in self.cutoffs:
            raise ConfigError(f"tradeoff_n={self.tradeoff_n} is not in the cutoff grid")
        if not self.algorithms:
            raise ConfigError("algorithm roster is empty")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithm(s) {unknown}; choose from {sorted(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithm roster repeats a name")
        for a in self.chart_lambdas:
            if a not in ALGORITHMS:
                raise ConfigError(f"chart_lambda override for unknown algorithm {a!r}")
        for lam in [self.chart_lambda, *self.chart_lambdas.values()]:
            if lam not in self.lambdas:
                raise ConfigError(f"chart lambda {lam} is not in the lambda grid")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must be in (0, 1)")
        if self.relevance_threshold not in range(1, 6):
            raise ConfigError("relevance_threshold must be in 1..5")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")
        for name in ("candidates", "knn_k", "coverage_k", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        try:
            self.mf.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def lambda_for(self, algorithm: str) -> float:
        """Lambda used for ``algorithm`` in the per-N charts."""
        return self.chart_lambdas.get(algorithm, self.chart_lambda)

    @property
    def max_n(self) -> int:
        return max(self.cutoffs)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _names(v: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# config key -> (ExperimentConfig field or "mf.<field>", parser)
KEYS: dict[str, tuple[str, Any]] = {
    "ratings": ("ratings", Path),
    "items": ("items", Path),
    "out": ("out", Path),
    "seed": ("seed", int),
    "mf.factors": ("mf.d", int),
    "mf.learning_rate": ("mf.learning_rate", float),
    "mf.regularization": ("mf.regularization", float),
    "mf.epochs": ("mf.epochs", int),
    "holdout_fraction": ("holdout_fraction", float),
    "relevance_threshold": ("relevance_threshold", int),
    "candidates": ("candidates", int),
    "lambdas": ("lambdas", _floats),
    "cutoffs": ("cutoffs", _ints),
    "tradeoff_n": ("tradeoff_n", int),
    "algorithms": ("algorithms", _names),
    "alpha": ("alpha", float),
    "knn_k": ("knn_k", int),
    "coverage_k": ("coverage_k", int),
    "normalize_scores": ("normalize_scores", _bool),
    "chart_lambda": ("chart_lambda", float),
    "workers": ("workers", int),
}


def parse_config(text: str, base_dir: Path | None = None) -> dict[str, Any]:
    """Parse ``key = value`` lines into a field -> value mapping.

    Relative paths are resolved against ``base_dir``. Per-algorithm chart
    lambdas use ``chart_lambda.<Algorithm> = value``.
    """
    values: dict[str, Any] = {}
    chart_lambdas: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("chart_lambda."):
                chart_lambdas[key.split(".", 1)[1]] = float(value)
                continue
            if key not in KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            name, conv = KEYS[key]
            parsed = conv(value)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        if isinstance(parsed, Path) and base_dir is not None and not parsed.is_absolute():
            parsed = base_dir / parsed
        values[name] = parsed
    if chart_lambdas:
        values["chart_lambdas"] = chart_lambdas
    return values


def build_config(values: Mapping[str, Any]) -> ExperimentConfig:
    mf_fields = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("mf.")}
    top = {k: v for k, v in values.items() if not k.startswith("mf.")}
    if "seed" in top and "seed" not in mf_fields:
        mf_fields["seed"] = top["seed"]
    cfg = ExperimentConfig(**top)
    if mf_fields:
        cfg = dataclasses.replace(cfg, mf=dataclasses.replace(cfg.mf, **mf_fields))
    return cfg.validate()


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Read a config file (optional) and apply non-None keyword overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values = parse_config(text, base_dir=path.parent)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return build_config(values)
