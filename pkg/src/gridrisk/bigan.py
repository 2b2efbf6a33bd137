"""Bidirectional GAN (generator, encoder, discriminator) trained on a single segment.

Each data segment gets its own freshly initialized model. Training proceeds
one sample at a time and stops when the value function averaged over the
last ``n`` iterations sits within ``epsilon`` of its fixed point ``-log 4``.
"""
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ingest import NormalizedVector
from .neural import DenseNetwork, Trainer

LOG4 = math.log(4.0)
PROB_CLAMP = 1e-7

Z_DISTRIBUTIONS = ("uniform", "gaussian", "exponential")
ENCODER_UPDATES = ("objective", "alg1-literal")


class TrainingDivergedError(RuntimeError):
    def __init__(self, iteration, what="value function"):
        super().__init__(f"training diverged at iteration {iteration}: non-finite {what}")
        self.iteration = iteration


@dataclass(frozen=True)
class ModelShape:
    """Hidden widths of each network (input and output widths are implied)."""

    hidden_D: tuple = (768, 320, 256)
    hidden_E: tuple = (768, 320, 256)
    hidden_G: tuple = (256, 320, 768)
    latent_dim: int = 64


@dataclass(frozen=True)
class TrainConfig:
    m: int = 1
    n: int = 10
    lr: float = 0.0002
    beta: float = 0.2
    dropout_prob: float = 0.1
    epsilon: float = 1e-4
    max_iters: int = 100000
    z_dist: str = "uniform"
    seed: int = 0
    encoder_update: str = "objective"

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < self.n:
            raise ValueError("max_iters must be at least n")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.beta < 0:
            raise ValueError("leak slope must be non-negative")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must lie in [0, 1)")
        if self.z_dist not in Z_DISTRIBUTIONS:
            raise ValueError(f"z_dist must be one of {Z_DISTRIBUTIONS}")
        if self.encoder_update not in ENCODER_UPDATES:
            raise ValueError(f"encoder_update must be one of {ENCODER_UPDATES}")


@dataclass
class TrainOutcome:
    features: list
    value_history: list = field(default_factory=list)
    converged: bool = False
    iterations_run: int = 0
    model: object = field(default=None, repr=False)


@dataclass
class BiganModel:
    G: DenseNetwork
    E: DenseNetwork
    D: DenseNetwork
    latent_dim: int

    def __post_init__(self):
        if self.E.output_dim != self.latent_dim or self.G.input_dim != self.latent_dim:
            raise ValueError("encoder output and generator input must both equal latent_dim")
        if self.G.output_dim != self.E.input_dim:
            raise ValueError("generator output must match encoder input")
        if self.D.input_dim != self.input_dim + self.latent_dim or self.D.output_dim != 1:
            raise ValueError("discriminator must map (data, latent) pairs to one probability")
        if self.D.layers[-1].activation != "sigmoid":
            raise ValueError("discriminator output must be a sigmoid")

    @property
    def input_dim(self):
        return self.E.input_dim


def build_model(input_dim, hidden_D, hidden_E, hidden_G, latent_dim, beta, dropout_prob, rng):
    """LReLU hidden layers; sigmoid on D and G outputs, tanh on E output."""
    for name, hidden in (("D", hidden_D), ("E", hidden_E), ("G", hidden_G)):
        if len(hidden) == 0:
            raise ValueError(f"hidden sizes for {name} must be non-empty")
        if any(int(h) < 1 for h in hidden):
            raise ValueError(f"hidden sizes for {name} must be positive, got {list(hidden)}")
    if input_dim < 1 or latent_dim < 1:
        raise ValueError("input_dim and latent_dim must be positive")
    G = DenseNetwork.build(
        [latent_dim, *hidden_G, input_dim], "lrelu", "sigmoid", rng, beta, dropout_prob
    )
    E = DenseNetwork.build(
        [input_dim, *hidden_E, latent_dim], "lrelu", "tanh", rng, beta, dropout_prob
    )
    D = DenseNetwork.build(
        [input_dim + latent_dim, *hidden_D, 1], "lrelu", "sigmoid", rng, beta, dropout_prob
    )
    return BiganModel(G, E, D, latent_dim)


def sample_z(dist, dim, rng):
    if dist == "uniform":
        return rng.random(dim)
    if dist == "gaussian":
        return rng.standard_normal(dim)
    if dist == "exponential":
        return rng.standard_exponential(dim)
    raise ValueError(f"unknown z distribution {dist!r}")


def _as_values(x):
    return x.values if isinstance(x, NormalizedVector) else np.asarray(x, dtype=np.float64)


def _clamp(p):
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def value_function(model, x, z):
    """Single-sample ``log D(x, E(x)) + log(1 - D(G(z), z))`` with dropout off."""
    x = _as_values(x)
    z = np.asarray(z, dtype=np.float64)
    p_real = model.D.predict(np.concatenate((x, model.E.predict(x))))[0]
    p_fake = model.D.predict(np.concatenate((model.G.predict(z), z)))[0]
    return math.log(_clamp(p_real)) + math.log(1.0 - _clamp(p_fake))


def extract_features(model, x):
    return model.E.predict(_as_values(x))


def segment_rngs(seed, segment_index=0):
    """Independent (init, z-sampling, dropout) generators for one segment."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(segment_index),))
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def _sum_grads(a, b):
    return [ga + gb for ga, gb in zip(a, b)]


def _all_finite(grads):
    return all(np.all(np.isfinite(g)) for g in grads)


def train_segment(x, config, shape, segment_index=0, model=None):
    """Train a fresh BiGAN on one normalized segment and return its last ``n`` features."""
    xv = _as_values(x)
    init_rng, z_rng, drop_rng = segment_rngs(config.seed, segment_index)
    if model is None:
        model = build_model(
            xv.shape[0], shape.hidden_D, shape.hidden_E, shape.hidden_G,
            shape.latent_dim, config.beta, config.dropout_prob, init_rng,
        )
    if model.input_dim != xv.shape[0]:
        raise ValueError(f"segment length {xv.shape[0]} does not match model input {model.input_dim}")
    G, E, D = model.G, model.E, model.D
    opt_G, opt_E, opt_D = (Trainer(net, config.lr) for net in (G, E, D))
    dim, lat = model.input_dim, model.latent_dim
    literal = config.encoder_update == "alg1-literal"

    values = []
    features = deque(maxlen=config.n)
    window = deque(maxlen=config.n)
    converged = False
    i = 0
    for i in range(1, config.max_iters + 1):
        # discriminator (and, literally read, encoder) ascent on V
        for _ in range(config.m):
            z = sample_z(config.z_dist, lat, z_rng)
            e_out, e_cache = E.forward(xv, True, drop_rng)
            p_r, dr_cache = D.forward(np.concatenate((xv, e_out)), True, drop_rng)
            g_out, _ = G.forward(z, True, drop_rng)
            p_f, df_cache = D.forward(np.concatenate((g_out, z)), True, drop_rng)
            # L = -log p_r - log(1 - p_f)
            grads_r, gin_r = D.backward(dr_cache, np.array([-1.0 / _clamp(p_r[0])]), input_grad=literal)
            grads_f, _ = D.backward(df_cache, np.array([1.0 / (1.0 - _clamp(p_f[0]))]), input_grad=False)
            grads_D = _sum_grads(grads_r, grads_f)
            if literal:
                grads_E, _ = E.backward(e_cache, gin_r[dim:], input_grad=False)
            if not _all_finite(grads_D):
                raise TrainingDivergedError(i, "discriminator gradient")
            opt_D.step(grads_D)
            if literal:
                opt_E.step(grads_E)

        # generator: non-saturating loss -log D(G(z), z)
        z = sample_z(config.z_dist, lat, z_rng)
        g_out, g_cache = G.forward(z, True, drop_rng)
        p_f, df_cache = D.forward(np.concatenate((g_out, z)), True, drop_rng)
        _, gin = D.backward(df_cache, np.array([-1.0 / _clamp(p_f[0])]), param_grads=False)
        grads_G, _ = G.backward(g_cache, gin[:dim], input_grad=False)

        # encoder minimizes V, i.e. descends log D(x, E(x))
        if not literal:
            e_out, e_cache = E.forward(xv, True, drop_rng)
            p_r, dr_cache = D.forward(np.concatenate((xv, e_out)), True, drop_rng)
            _, gin = D.backward(dr_cache, np.array([1.0 / _clamp(p_r[0])]), param_grads=False)
            grads_E, _ = E.backward(e_cache, gin[dim:], input_grad=False)
            if not _all_finite(grads_E):
                raise TrainingDivergedError(i, "encoder gradient")
            opt_E.step(grads_E)
        if not _all_finite(grads_G):
            raise TrainingDivergedError(i, "generator gradient")
        opt_G.step(grads_G)

        v = value_function(model, xv, sample_z(config.z_dist, lat, z_rng))
        feat = E.predict(xv)
        if not math.isfinite(v) or not np.all(np.isfinite(feat)):
            raise TrainingDivergedError(i)
        values.append(v)
        window.append(v)
        features.append(feat)
        if i >= config.n:
            v_avg = sum(window) / config.n
            if abs(v_avg + LOG4) < config.epsilon:
                converged = True
                break
    return TrainOutcome(list(features), values, converged, i, model)
