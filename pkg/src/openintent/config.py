"""Run configuration: schema, defaults, validation, file loading.

The config is a JSON object with sections paths / detector / metric /
cluster / taxonomy / eval plus a top-level seed. Every field has a default;
unknown keys are rejected so typos fail loudly instead of silently running
with defaults.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .detector import MODES
from .errors import ConfigError
from .serialize import load_json


@dataclass
class PathsConfig:
    embeddings: str = ""
    utterances: str = ""
    constraints: str | None = None
    out_dir: str = "out"


@dataclass
class DetectorConfig:
    mode: str = "m_unseen"
    k: float = 3.0
    lr: float = 0.05
    epochs: int = 8
    batch_size: int = 64


@dataclass
class MetricConfig:
    h: int = 256
    e: int = 128
    m1: float = 0.05
    m2: float = 0.05
    m3: float = 0.05
    alpha: float = 1.0
    beta: float = 1.0
    lr: float = 1e-3
    epochs: int = 15
    batch_quadruplets: int = 64
    quads_per_anchor: int = 4


@dataclass
class ClusterConfig:
    f1_variant: str = "pairwise"


@dataclass
class TaxonomyConfig:
    include_seen: bool = False
    with_centroids: bool = False


@dataclass
class EvalConfig:
    nmi_mean: str = "arithmetic"


@dataclass
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    taxonomy: TaxonomyConfig = field(default_factory=TaxonomyConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def out_path(self, name: str) -> Path:
        return Path(self.paths.out_dir) / name


_SECTIONS = {
    "paths": PathsConfig,
    "detector": DetectorConfig,
    "metric": MetricConfig,
    "cluster": ClusterConfig,
    "taxonomy": TaxonomyConfig,
    "eval": EvalConfig,
}


def _build_section(cls, obj: dict, where: str):
    known = {f.name: f.type for f in fields(cls)}
    unknown = sorted(set(obj) - set(known))
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]!r}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ConfigError(f"bad {where} section: {exc}") from None


def config_from_dict(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(obj) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = obj.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        kwargs[name] = _build_section(cls, section, name)
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    cfg = RunConfig(seed=seed, **kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    det = cfg.detector
    if det.mode not in MODES:
        raise ConfigError(
            f"detector.mode must be one of {sorted(MODES)}, got {det.mode!r}"
        )
    if det.k < 0:
        raise ConfigError("detector.k must be >= 0")
    if det.epochs < 0 or det.batch_size < 1 or det.lr <= 0:
        raise ConfigError("bad detector training settings")
    met = cfg.metric
    if met.h < 1 or met.e < 1:
        raise ConfigError("metric.h and metric.e must be >= 1")
    if min(met.m1, met.m2, met.m3) < 0 or met.alpha < 0 or met.beta < 0:
        raise ConfigError("metric margins and weights must be >= 0")
    if met.epochs < 0 or met.batch_quadruplets < 1 or met.quads_per_anchor < 1:
        raise ConfigError("bad metric training settings")
    if met.lr <= 0:
        raise ConfigError("metric.lr must be > 0")
    if cfg.cluster.f1_variant not in ("pairwise", "bcubed"):
        raise ConfigError("cluster.f1_variant must be 'pairwise' or 'bcubed'")
    if cfg.eval.nmi_mean not in ("arithmetic", "geometric"):
        raise ConfigError("eval.nmi_mean must be 'arithmetic' or 'geometric'")


def load_config(path: str | Path, *, seed: int | None = None,
                constraints: str | None = None,
                out_dir: str | None = None) -> RunConfig:
    """Load and validate a config file, applying CLI overrides.

    The input files named by the config must exist at load time.
    """
    raw = load_json(path)
    cfg = config_from_dict(raw)
    if seed is not None:
        cfg.seed = seed
    # paths inside the config resolve against the config's directory;
    # command-line overrides resolve against the caller's cwd
    base = Path(path).parent
    cons_base = base
    out_base = base
    if constraints is not None:
        cfg.paths.constraints = constraints
        cons_base = Path.cwd()
    if out_dir is not None:
        cfg.paths.out_dir = out_dir
        out_base = Path.cwd()
    cfg.paths.embeddings = str(_resolve(base, cfg.paths.embeddings, "paths.embeddings"))
    cfg.paths.utterances = str(_resolve(base, cfg.paths.utterances, "paths.utterances"))
    if cfg.paths.constraints:
        cfg.paths.constraints = str(
            _resolve(cons_base, cfg.paths.constraints, "paths.constraints")
        )
    out = Path(cfg.paths.out_dir)
    if not out.is_absolute():
        out = out_base / out
    cfg.paths.out_dir = str(out)
    return cfg


def _resolve(base: Path, value: str, name: str) -> Path:
    if not value:
        raise ConfigError(f"{name} is required")
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigError(f"{name}: file not found: {p}")
    return p
