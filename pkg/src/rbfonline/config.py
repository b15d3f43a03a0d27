"""Experiment configuration and its plain-text ``key = value`` format.

Keys are dotted paths (``ewrls.tau``); a ``[section]`` header prefixes the
keys that follow it. ``#`` starts a comment. Every key has a default, so an
empty file is a valid config. Lists are comma separated; ``horizons`` also
accepts ranges such as ``1-30``.

=========================  ===============================================
key                        meaning (default)
=========================  ===============================================
data.path                  price CSV; empty means use the synthetic panel
data.returns               ``log`` or ``simple`` (log)
data.targets               instruments to forecast (all)
synth.kind                 ``jump_diffusion``, ``ar1`` or ``flip``
synth.n                    price rows (1297)
synth.instruments          instrument count (10)
synth.seed                 generator seed (7)
synth.drift / vol          per-period drift (0) and volatility (0.01)
synth.jump_intensity       jump probability per step (0)
synth.jump_scale           jump standard deviation (0.05)
synth.ar_coef              AR(1) coefficient for ``ar1`` (0.6)
synth.flip_fraction        flip position for ``flip`` as a fraction of rows (0.75)
split.train_fraction       (0.5)
split.rounding             ``floor`` or ``ceil`` (floor)
horizons                   forecast horizons in days (1-30)
models                     subset of rw, ridge, ewrls, rbfnet (all)
rw_mode                    ``last_value`` or ``zero`` (last_value)
seed                       seed for clustering (0)
threads                    worker threads across cells (1)
featsel.max_features       (5)
featsel.min_r2_gain        (0.005)
featsel.vif_threshold      (5.0)
featsel.include_own        offer the target's own return as a feature (true)
rbfnet.k                   hidden units; 0 = max(2, round(sqrt(n_train/2))) (0)
rbfnet.decay               prototype decay (0.99)
rbfnet.shrinkage           covariance shrinkage (0.1)
rbfnet.eps                 covariance floor (1e-6)
rbfnet.min_cluster_size    fewer members use the global diagonal covariance (10)
rbfnet.online_prototypes   update prototypes during test (true)
rbfnet.max_iter / tol      k-means limits (300, 1e-8)
ewrls.tau                  forgetting factor (0.99)
ewrls.delta                initial regulariser (1.0)
ridge.lambda               ridge penalty (1.0)
=========================  ===============================================
"""
import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError

MODEL_IDS = ("rw", "ridge", "ewrls", "rbfnet")


@dataclass
class DataConfig:
    path: str = ""
    returns: str = "log"
    targets: list = field(default_factory=list)


@dataclass
class SynthConfig:
    kind: str = "jump_diffusion"
    n: int = 1297
    instruments: int = 10
    seed: int = 7
    drift: float = 0.0
    vol: float = 0.01
    jump_intensity: float = 0.0
    jump_scale: float = 0.05
    ar_coef: float = 0.6
    flip_fraction: float = 0.75


@dataclass
class SplitConfig:
    train_fraction: float = 0.5
    rounding: str = "floor"


@dataclass
class FeatselConfig:
    max_features: int = 5
    min_r2_gain: float = 0.005
    vif_threshold: float = 5.0
    include_own: bool = True


@dataclass
class RbfSection:
    k: int = 0
    decay: float = 0.99
    shrinkage: float = 0.1
    eps: float = 1e-6
    min_cluster_size: int = 10
    online_prototypes: bool = True
    max_iter: int = 300
    tol: float = 1e-8


@dataclass
class EwrlsSection:
    tau: float = 0.99
    delta: float = 1.0


@dataclass
class RidgeSection:
    lam: float = 1.0


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    horizons: list = field(default_factory=lambda: list(range(1, 31)))
    models: list = field(default_factory=lambda: list(MODEL_IDS))
    rw_mode: str = "last_value"
    seed: int = 0
    threads: int = 1
    featsel: FeatselConfig = field(default_factory=FeatselConfig)
    rbfnet: RbfSection = field(default_factory=RbfSection)
    ewrls: EwrlsSection = field(default_factory=EwrlsSection)
    ridge: RidgeSection = field(default_factory=RidgeSection)

    def validate(self):
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise ConfigError("horizons must be a non-empty list of integers >= 1")
        unknown = [m for m in self.models if m not in MODEL_IDS]
        if unknown or not self.models:
            raise ConfigError(f"models must be a non-empty subset of {MODEL_IDS}, got {self.models}")
        if self.rw_mode not in ("last_value", "zero"):
            raise ConfigError(f"rw_mode must be 'last_value' or 'zero', got {self.rw_mode!r}")
        if self.data.returns not in ("log", "simple"):
            raise ConfigError(f"data.returns must be 'log' or 'simple', got {self.data.returns!r}")
        if self.synth.kind not in ("jump_diffusion", "ar1", "flip"):
            raise ConfigError(f"synth.kind unknown: {self.synth.kind!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0.0 < self.split.train_fraction < 1.0:
            raise ConfigError("split.train_fraction must lie in (0, 1)")
        if self.split.rounding not in ("floor", "ceil"):
            raise ConfigError("split.rounding must be 'floor' or 'ceil'")
        if not 0.8 < self.ewrls.tau <= 1.0:
            raise ConfigError("ewrls.tau must lie in (0.8, 1]")
        if not self.ewrls.delta > 0:
            raise ConfigError("ewrls.delta must be > 0")
        if self.ridge.lam < 0:
            raise ConfigError("ridge.lambda must be >= 0")
        return self


# file key -> attribute name, where they differ
_ALIASES = {"ridge.lambda": "ridge.lam"}
_REVERSE = {v: k for k, v in _ALIASES.items()}


def _parse_int_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _parse_value(current, text, key):
    text = text.strip()
    try:
        if isinstance(current, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, list):
            if key == "horizons":
                return _parse_int_list(text)
            return [p.strip() for p in text.split(",") if p.strip()]
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(current).__name__}") from None


def set_key(cfg, key, text, where=""):
    """Assign ``text`` (parsed to the field's type) to dotted ``key`` of ``cfg``."""
    path = _ALIASES.get(key, key).split(".")
    obj = cfg
    for part in path[:-1]:
        if not dataclasses.is_dataclass(obj) or not hasattr(obj, part):
            raise ConfigError(f"{where}unknown config key {key!r}")
        obj = getattr(obj, part)
    leaf = path[-1]
    if not dataclasses.is_dataclass(obj) or leaf not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"{where}unknown config key {key!r}")
    if dataclasses.is_dataclass(getattr(obj, leaf)):
        raise ConfigError(f"{where}{key!r} is a section, not a key")
    try:
        setattr(obj, leaf, _parse_value(getattr(obj, leaf), text, key))
    except ConfigError as exc:
        raise ConfigError(f"{where}{exc}") from None


def parse_config(text, source="<config>"):
    cfg = ExperimentConfig()
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if section:
            key = f"{section}.{key}"
        set_key(cfg, key, value, where)
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def apply_overrides(cfg, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        set_key(cfg, key.strip(), value, "--set: ")
    return cfg


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg):
    """Render ``cfg`` in the same format :func:`parse_config` reads."""
    lines = []

    def walk(obj, prefix):
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            key = f"{prefix}{f.name}"
            if dataclasses.is_dataclass(v):
                walk(v, key + ".")
            else:
                lines.append(f"{_REVERSE.get(key, key)} = {_format_value(v)}")

    walk(cfg, "")
    return "\n".join(lines) + "\n"
