"""Run configuration.

One JSON file drives every stage. Unknown keys are rejected at every level
and all values are validated before any work starts. The config hash (SHA-256
of the canonical JSON of the fully resolved config) and the seed are stamped
into every artifact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BiasProbeError, ConfigError
from .forest import ForestParams
from .shape import FIVE_LEVEL_DELTAS
from .traits import ALL_TRAITS, TraitDimension

EXPERIMENTS = ("a", "b", "c", "d")


@dataclass(frozen=True)
class WorldSection:
    D: int = 50
    n_random: int = 300
    n_bases: int = 75
    deltas: tuple[float, ...] = FIVE_LEVEL_DELTAS
    traits: tuple[str, ...] = tuple(t.value for t in ALL_TRAITS)
    eta: float = 0.8
    leakage: float = 0.6
    n_raters_random: int = 75
    n_raters_calibration: int = 15
    noise_sd: float | None = None
    target_alpha: float = 0.84
    embed_dim: int = 128


@dataclass(frozen=True)
class DataSection:
    """Optional file inputs; when ``random_embeddings`` is set, experiments run
    on ingested data instead of the synthetic world."""

    random_scores: str | None = None
    random_embeddings: str | None = None
    distinct_scores: str | None = None
    distinct_embeddings: str | None = None
    races: str | None = None
    politician_embeddings: str | None = None


@dataclass(frozen=True)
class ForestSection:
    n_trees: int = 100
    min_split: int = 2
    max_depth: int | None = None
    mtry: int | None = None
    bootstrap: bool = True


@dataclass(frozen=True)
class ExperimentSection:
    folds: int = 10
    run: tuple[str, ...] = EXPERIMENTS
    traits: tuple[str, ...] | None = None  # None: every world trait


@dataclass(frozen=True)
class ElectionSection:
    eta: float = 0.0
    leakage: float = 1.0
    n_gubernatorial: int = 123
    n_senate: int = 148
    gap_min: float = 0.5
    gap_max: float = 3.5
    spread_per_sd: float = 0.15
    spread_noise: float = 0.03
    n_raters: int = 15
    scrambled_control: bool = True


@dataclass(frozen=True)
class ExplainSection:
    image_size: int = 64
    segments: int = 300
    compactness: float = 10.0
    iters: int = 10
    n_samples: int = 5000
    kernel_width: float = 0.25
    ridge: float = 1.0
    top_k: int = 10
    patch_grid: int = 16
    cohort_train: int = 200
    cohort_explain: int = 10
    images: tuple[str, ...] = ()
    scorer_command: tuple[str, ...] = ()
    scorer_pool: int = 1


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = 1
    out: str = "out"
    world: WorldSection = field(default_factory=WorldSection)
    data: DataSection = field(default_factory=DataSection)
    forest: ForestSection = field(default_factory=ForestSection)
    experiments: ExperimentSection = field(default_factory=ExperimentSection)
    election: ElectionSection = field(default_factory=ElectionSection)
    explain: ExplainSection = field(default_factory=ExplainSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Hash of everything that affects results (``out`` and ``threads`` excluded)."""
        d = self.to_dict()
        d.pop("out")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def forest_params(self, stream_seed: int | None = None) -> ForestParams:
        f = self.forest
        return ForestParams(f.n_trees, f.min_split, f.max_depth, f.mtry, f.bootstrap,
                            self.seed if stream_seed is None else stream_seed)

    def trait_list(self) -> tuple[TraitDimension, ...]:
        if self.experiments.traits is None:
            return self.world_traits()
        return tuple(TraitDimension.parse(t) for t in self.experiments.traits)

    def world_traits(self) -> tuple[TraitDimension, ...]:
        return tuple(TraitDimension.parse(t) for t in self.world.traits)


# -- parsing -----------------------------------------------------------------

def _coerce(value, tp, where: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return _build(tp, value, where)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], where)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return tuple(_coerce(v, args[0], f"{where}[{i}]") for i, v in enumerate(value))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    raise ConfigError(f"{where}: unsupported type {tp}")


def _build(cls, raw: dict, where: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], f"{where}.{k}" if where else k) for k, v in raw.items()}
    return cls(**kwargs)


def from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _build(RunConfig, raw, "")
    validate(cfg)
    return cfg


def load(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    return from_dict(raw)


def validate(cfg: RunConfig) -> None:
    """Check the whole config graph, raising :class:`ConfigError` on the first problem."""
    from .experiments.world import WorldConfig

    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    try:
        wt = cfg.world_traits()
        et = cfg.trait_list()
    except BiasProbeError as exc:
        raise ConfigError(str(exc)) from None
    if not wt or len(set(wt)) != len(wt):
        raise ConfigError("world.traits must be non-empty and without duplicates")
    missing = [t.value for t in et if t not in wt]
    if missing:
        raise ConfigError(f"experiments.traits not generated by world.traits: {missing}")
    if not cfg.world.deltas:
        raise ConfigError("world.deltas must be non-empty")
    w = cfg.world
    WorldConfig(cfg.seed, w.D, w.n_random, w.n_bases, w.deltas, wt, w.eta, w.leakage,
                w.n_raters_random, w.n_raters_calibration, w.noise_sd, w.target_alpha, w.embed_dim)
    WorldConfig(cfg.seed, w.D, w.n_random, w.n_bases, w.deltas, wt, cfg.election.eta,
                cfg.election.leakage, w.n_raters_random, w.n_raters_calibration, w.noise_sd,
                w.target_alpha, w.embed_dim)
    if w.noise_sd is not None and w.noise_sd < 0:
        raise ConfigError("world.noise_sd must be >= 0")
    if w.embed_dim < w.D:
        raise ConfigError("world.embed_dim must be >= world.D")
    cfg.forest_params()
    ex = cfg.experiments
    if ex.folds < 2:
        raise ConfigError("experiments.folds must be >= 2")
    bad = [e for e in ex.run if e not in EXPERIMENTS]
    if bad:
        raise ConfigError(f"experiments.run: unknown experiment(s) {bad}")
    el = cfg.election
    if el.n_gubernatorial < 0 or el.n_senate < 0 or el.n_gubernatorial + el.n_senate < 1:
        raise ConfigError("election needs at least one race")
    if not 0 <= el.gap_min <= el.gap_max:
        raise ConfigError("election gap range must satisfy 0 <= gap_min <= gap_max")
    if el.n_raters < 1:
        raise ConfigError("election.n_raters must be >= 1")
    xp = cfg.explain
    if xp.image_size < 2 or xp.segments < 1 or xp.segments > xp.image_size ** 2:
        raise ConfigError("explain.segments must lie in [1, image_size^2]")
    if xp.n_samples < xp.segments:
        raise ConfigError("explain.n_samples must be >= explain.segments")
    if xp.kernel_width <= 0 or xp.ridge < 0 or xp.top_k < 1 or xp.iters < 1:
        raise ConfigError("explain.kernel_width > 0, ridge >= 0, top_k >= 1 and iters >= 1 are required")
    if xp.patch_grid < 1 or xp.patch_grid > xp.image_size:
        raise ConfigError("explain.patch_grid must lie in [1, image_size]")
    if xp.cohort_train < 2 or xp.cohort_explain < 1 or xp.scorer_pool < 1:
        raise ConfigError("explain cohort sizes and scorer_pool must be positive")
    d = cfg.data
    pairs = [(d.random_scores, d.random_embeddings), (d.distinct_scores, d.distinct_embeddings),
             (d.races, d.politician_embeddings)]
    for a, b in pairs:
        if (a is None) != (b is None):
            raise ConfigError("data: scores/races and embeddings paths must be given together")
    if d.random_embeddings is None and d.distinct_embeddings is not None:
        raise ConfigError("data: distinct faces given without random faces")
    for p in [p for pair in pairs for p in pair if p] + list(xp.images):
        if not Path(p).is_file():
            raise ConfigError(f"referenced input file {p} does not exist")
