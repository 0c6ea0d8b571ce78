"""Experiment configuration as a flat INI file.

Every field has a default, so an empty file is a valid config (the default
is the 10-fold comparison on the synthetic review corpus). Seed fields left
blank follow the master seed ``[run] seed``. :func:`materialize` fills them
in, and :func:`dump_config` writes the fully materialized file that
``report.json`` echoes.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .featuremap import Family, FeatureMapSpec, Topology
from .featselect import LassoConfig
from .kernel import EstimationMode
from .sim import MAX_QUBITS
from .svm import ClassicalKernelKind, SvmTrainConfig
from .textpipe import CleanOptions, default_stopwords
from .trees import ForestConfig, TreeConfig

QUANTUM_MODELS = tuple(f"{f.value}_{t.value}" for f in Family for t in Topology)
CLASSICAL_MODELS = ("rbf_svm", "linear_svm", "decision_tree")
SCALINGS = ("auto", "l2", "minmax_pi", "none")


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSection:
    source: str = "synthetic_text"
    n_samples: int = 150
    pos_fraction: float = 0.6
    n_features: int = 5
    seed: int | None = None
    iris_classes: tuple[str, ...] = ("setosa", "versicolor")


@dataclass
class PreprocessSection:
    strip_markup: bool = True
    lowercase: bool = True
    strip_punctuation: bool = True
    remove_stopwords: bool = True
    max_vocab: int | None = None
    scaling: str = "auto"


@dataclass
class SelectionSection:
    enabled: bool = True
    k: int = 5
    k_min: int = 5
    k_max: int = 13
    lasso_lambda: float = 1.0
    lasso_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0)
    lasso_max_iter: int = 10000
    lasso_tol: float = 1e-10
    rfe_step: int = 1
    rfe_keep: int | None = None
    forest_trees: int = 50
    forest_max_depth: int = 5
    forest_seed: int | None = None


@dataclass
class ModelsSection:
    roster: tuple[str, ...] = QUANTUM_MODELS + ("rbf_svm", "decision_tree")
    reps: int = 2
    rx_angle: float = 1.5707963267948966
    angle_scale: float = 1.0
    heisenberg_init: str = "neel"
    rbf_gamma: str = "scale"
    tree_max_depth: int = 5
    tree_min_samples_split: int = 2
    tree_seed: int | None = None


@dataclass
class SvmSection:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 200


@dataclass
class KernelSection:
    mode: str = "exact"
    shots: int = 8192
    seed: int | None = None


@dataclass
class EvaluationSection:
    protocol: str = "cv"
    cv_k: int = 10
    holdout_fraction: float = 0.25
    seed: int | None = None


@dataclass
class RunSection:
    seed: int = 0
    out: str = "runs/default"


@dataclass
class ExperimentConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    preprocess: PreprocessSection = field(default_factory=PreprocessSection)
    selection: SelectionSection = field(default_factory=SelectionSection)
    models: ModelsSection = field(default_factory=ModelsSection)
    svm: SvmSection = field(default_factory=SvmSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    run: RunSection = field(default_factory=RunSection)

    # typed views used by the experiment runner

    @property
    def clean_options(self) -> CleanOptions:
        p = self.preprocess
        return CleanOptions(p.strip_markup, p.lowercase, p.strip_punctuation, p.remove_stopwords,
                            default_stopwords())

    def feature_map(self, model: str) -> FeatureMapSpec:
        family, topology = model.split("_")
        m = self.models
        return FeatureMapSpec(Family(family), Topology(topology), m.reps, m.rx_angle, m.angle_scale,
                              m.heisenberg_init)

    @property
    def svm_config(self) -> SvmTrainConfig:
        return SvmTrainConfig(self.svm.C, self.svm.tol, self.svm.max_passes)

    @property
    def estimation(self) -> EstimationMode:
        return EstimationMode(self.kernel.mode, self.kernel.shots, self.kernel.seed)

    @property
    def rbf_kind(self) -> ClassicalKernelKind:
        g = self.models.rbf_gamma
        return ClassicalKernelKind("rbf", g if g == "scale" else float(g))

    @property
    def tree_config(self) -> TreeConfig:
        m = self.models
        return TreeConfig(m.tree_max_depth, m.tree_min_samples_split, m.tree_seed)

    @property
    def lasso_config(self) -> LassoConfig:
        s = self.selection
        return LassoConfig(s.lasso_lambda, s.lasso_max_iter, s.lasso_tol)

    @property
    def forest_config(self) -> ForestConfig:
        s = self.selection
        return ForestConfig(n_trees=s.forest_trees, tree=TreeConfig(max_depth=s.forest_max_depth, seed=s.forest_seed))


_SECTIONS = [f.name for f in dataclasses.fields(ExperimentConfig)]


def _parse_value(text: str, type_str: str, where: str):
    t = text.strip()
    optional = type_str.endswith("| None")
    base = type_str.replace("| None", "").strip()
    if optional and t.lower() in ("", "none"):
        return None
    try:
        if base == "int":
            return int(t)
        if base == "float":
            return float(t)
        if base == "bool":
            if t.lower() in ("true", "yes", "on", "1"):
                return True
            if t.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(t)
        if base == "str":
            return t
        if base == "tuple[str, ...]":
            return tuple(p.strip() for p in t.split(",") if p.strip())
        if base == "tuple[float, ...]":
            return tuple(float(p) for p in t.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as {type_str}") from None
    raise ConfigError(f"{where}: unsupported field type {type_str}")


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = ExperimentConfig()
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"{source}: unknown section [{name}]")
        section = getattr(cfg, name)
        types = {f.name: f.type for f in dataclasses.fields(section)}
        for key, raw in cp.items(name):
            if key not in types:
                raise ConfigError(f"{source}: unknown key {key!r} in [{name}]")
            setattr(section, key, _parse_value(raw, types[key], f"{source} [{name}] {key}"))
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config(text, str(p))


def materialize(cfg: ExperimentConfig) -> ExperimentConfig:
    """Copy with every master-seed-following field set to a number."""
    out = dataclasses.replace(cfg, **{n: dataclasses.replace(getattr(cfg, n)) for n in _SECTIONS})
    master = out.run.seed
    for section, key in (("dataset", "seed"), ("selection", "forest_seed"), ("models", "tree_seed"),
                         ("kernel", "seed"), ("evaluation", "seed")):
        sec = getattr(out, section)
        if getattr(sec, key) is None:
            setattr(sec, key, master)
    validate(out)
    return out


def with_master_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Change the master seed; seed fields that follow it move along."""
    out = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, seed=int(seed)))
    return out


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    for sec in d.values():
        for k, v in sec.items():
            if isinstance(v, tuple):
                sec[k] = list(v)
    return d


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        for f in dataclasses.fields(getattr(cfg, name)):
            lines.append(f"{f.name} = {_format_value(getattr(getattr(cfg, name), f.name))}")
        lines.append("")
    return "\n".join(lines)


def validate(cfg: ExperimentConfig) -> None:
    d, p, s, m, k, e = cfg.dataset, cfg.preprocess, cfg.selection, cfg.models, cfg.kernel, cfg.evaluation
    if not m.roster:
        raise ConfigError("[models] roster must name at least one model")
    for name in m.roster:
        if name not in QUANTUM_MODELS + CLASSICAL_MODELS:
            raise ConfigError(f"[models] unknown model {name!r}; choose from {QUANTUM_MODELS + CLASSICAL_MODELS}")
    if len(set(m.roster)) != len(m.roster):
        raise ConfigError("[models] roster lists a model twice")
    if p.scaling not in SCALINGS:
        raise ConfigError(f"[preprocess] scaling must be one of {SCALINGS}")
    for key in ("k", "k_min", "k_max"):
        v = getattr(s, key)
        if not 1 <= v <= MAX_QUBITS:
            raise ConfigError(f"[selection] {key}={v} must lie in [1, {MAX_QUBITS}]")
    if s.k_min > s.k_max:
        raise ConfigError("[selection] k_min exceeds k_max")
    if k.mode not in ("exact", "sampled"):
        raise ConfigError("[kernel] mode must be exact or sampled")
    if k.shots < 1:
        raise ConfigError("[kernel] shots must be positive")
    if e.protocol not in ("cv", "holdout"):
        raise ConfigError("[evaluation] protocol must be cv or holdout")
    if e.cv_k < 2:
        raise ConfigError("[evaluation] cv_k must be at least 2")
    if not 0 < e.holdout_fraction < 1:
        raise ConfigError("[evaluation] holdout_fraction must be in (0, 1)")
    if m.heisenberg_init not in ("neel", "zero"):
        raise ConfigError("[models] heisenberg_init must be neel or zero")
    if d.n_samples < 2:
        raise ConfigError("[dataset] n_samples must be at least 2")
    if m.rbf_gamma != "scale":
        try:
            float(m.rbf_gamma)
        except ValueError:
            raise ConfigError("[models] rbf_gamma must be 'scale' or a number") from None
