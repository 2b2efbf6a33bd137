"""``key = value`` run configuration shared by every CLI command."""
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .baselines import DaeConfig, PcaConfig, ThaConfig
from .bigan import ENCODER_UPDATES, Z_DISTRIBUTIONS, ModelShape, TrainConfig
from .index import TEST_FUNCTIONS
from .synth import ANOMALY_KINDS, AnomalySpec

SEED_ENV = "GRIDRISK_SEED"


class ConfigError(ValueError):
    pass


def _sizes(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(float(tok) if any(c in tok for c in ".eE") else int(tok))
    if not out:
        raise ValueError("empty size list")
    return tuple(out)


def _size(text):
    (v,) = _sizes(text)
    return v


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _anomaly(text):
    parts = text.split()
    if len(parts) != 5:
        raise ValueError("anomaly needs: <channels;...> <start_tick> <end_tick> <kind> <magnitude>")
    chans = tuple(int(c) for c in parts[0].split(";") if c)
    return AnomalySpec(chans, int(parts[1]), int(parts[2]), parts[3], float(parts[4]))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, AnomalySpec):
        chans = ";".join(str(c) for c in value.channels)
        return f"{chans} {value.start_tick} {value.end_tick} {value.kind} {value.magnitude!r}"
    return str(value)


def _opt(default, parse, **kw):
    return field(default=default, metadata={"parse": parse, **kw})


@dataclass(frozen=True)
class RunConfig:
    # windowing
    N_w: int = _opt(10, int)
    N_s: int = _opt(10, int)
    feeder_id: str = _opt("feeder", str)
    tick_seconds: float = _opt(900.0, float)
    # BiGAN; widths below 1 (written with a decimal point) are fractions of the input width
    hidden_D: tuple = _opt((768, 320, 256), _sizes)
    hidden_E: tuple = _opt((768, 320, 256), _sizes)
    hidden_G: tuple = _opt((256, 320, 768), _sizes)
    latent_dim: object = _opt(64, _size)
    m: int = _opt(1, int)
    n: int = _opt(10, int)
    eta: float = _opt(0.0002, float)
    beta: float = _opt(0.2, float)
    dropout_prob: float = _opt(0.1, float)
    epsilon: float = _opt(1e-4, float)
    max_iters: int = _opt(100000, int)
    z_dist: str = _opt("uniform", str)
    seed: int = _opt(None, int)
    test_function: str = _opt("entropy", str)
    encoder_update: str = _opt("objective", str)
    # baselines
    tha_lower: float = _opt(0.93, float)
    tha_upper: float = _opt(1.07, float)
    tha_threshold: float = _opt(0.001, float)
    pca_contribution: float = _opt(0.95, float)
    dae_encoder: tuple = _opt((0.6, 0.3), _sizes)
    dae_decoder: tuple = _opt((0.3, 0.6), _sizes)
    dae_feature: float = _opt(0.1, float)
    dae_eta: float = _opt(0.001, float)
    dae_min_error: float = _opt(1e-5, float)
    dae_max_iters: int = _opt(100000, int)
    # evaluation
    slack_windows: int = _opt(1, int)
    # synthetic data
    P: int = _opt(118, int)
    T: int = _opt(500, int)
    baseline: float = _opt(1.0, float)
    noise_sigma: float = _opt(0.005, float)
    coupling: float = _opt(0.5, float)
    anomalies: tuple = _opt((), _anomaly, key="anomaly", repeat=True)

    def __post_init__(self):
        try:
            self.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def validate(self):
        if self.N_w < 1 or self.N_s < 1:
            raise ValueError("N_w and N_s must be positive")
        if self.z_dist not in Z_DISTRIBUTIONS:
            raise ValueError(f"z_dist must be one of {Z_DISTRIBUTIONS}")
        if self.encoder_update not in ENCODER_UPDATES:
            raise ValueError(f"encoder_update must be one of {ENCODER_UPDATES}")
        if self.test_function not in TEST_FUNCTIONS:
            raise ValueError(f"test_function must be one of {sorted(TEST_FUNCTIONS)}")
        for name in ("hidden_D", "hidden_E", "hidden_G"):
            for v in getattr(self, name):
                if v <= 0 or (isinstance(v, float) and v >= 1.0):
                    raise ValueError(f"{name}: widths must be positive integers or fractions in (0, 1)")
        lat = self.latent_dim
        if lat <= 0 or (isinstance(lat, float) and lat >= 1.0):
            raise ValueError("latent_dim must be a positive integer or a fraction in (0, 1)")
        if self.slack_windows < 0:
            raise ValueError("slack_windows must be non-negative")
        if self.P < 1 or self.T < 1 or self.noise_sigma < 0 or not 0 <= self.coupling <= 1:
            raise ValueError("synthetic data settings out of range")
        for a in self.anomalies:
            if a.kind not in ANOMALY_KINDS:
                raise ValueError(f"anomaly kind must be one of {ANOMALY_KINDS}")
        # delegate the rest to the component constructors
        self.train_config(0)
        self.tha_config()
        self.pca_config()
        self.dae_config()

    # ------------------------------------------------------------------

    def resolved_seed(self, override=None):
        """``--seed`` beats the config file, which beats ``$GRIDRISK_SEED``; default 0."""
        if override is not None:
            return int(override)
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV, "").strip()
        if env:
            try:
                return int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
        return 0

    def model_shape(self, input_width):
        def resolve(v):
            return max(1, int(math.floor(v * input_width))) if isinstance(v, float) else int(v)

        return ModelShape(
            tuple(resolve(v) for v in self.hidden_D),
            tuple(resolve(v) for v in self.hidden_E),
            tuple(resolve(v) for v in self.hidden_G),
            resolve(self.latent_dim),
        )

    def train_config(self, seed):
        return TrainConfig(
            m=self.m, n=self.n, lr=self.eta, beta=self.beta, dropout_prob=self.dropout_prob,
            epsilon=self.epsilon, max_iters=self.max_iters, z_dist=self.z_dist, seed=seed,
            encoder_update=self.encoder_update,
        )

    def tha_config(self):
        return ThaConfig(self.tha_lower, self.tha_upper, self.tha_threshold)

    def pca_config(self):
        return PcaConfig(self.pca_contribution)

    def dae_config(self):
        return DaeConfig(
            tuple(float(v) for v in self.dae_encoder), tuple(float(v) for v in self.dae_decoder),
            self.dae_feature, self.dae_eta, self.dae_min_error, self.dae_max_iters,
        )

    # ------------------------------------------------------------------

    @classmethod
    def from_text(cls, text, source="<config>"):
        by_key = {f.metadata.get("key", f.name): f for f in fields(cls)}
        values, repeated = {}, {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            f = by_key.get(key)
            if f is None:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            try:
                parsed = f.metadata["parse"](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
            if f.metadata.get("repeat"):
                repeated.setdefault(f.name, []).append(parsed)
            else:
                if f.name in values:
                    raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
                values[f.name] = parsed
        for name, items in repeated.items():
            values[name] = tuple(items)
        return cls(**values)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text, str(path))

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            key = f.metadata.get("key", f.name)
            if f.metadata.get("repeat"):
                lines.extend(f"{key} = {_fmt(v)}" for v in value)
            else:
                lines.append(f"{key} = {_fmt(value)}")
        return "\n".join(lines) + "\n"

    def with_seed(self, seed):
        return replace(self, seed=int(seed))
