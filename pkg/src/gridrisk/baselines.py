"""Comparison detectors: voltage-limit threshold, PCA eigen-spectrum, deep autoencoder."""
import math
from dataclasses import dataclass

import numpy as np

from .bigan import TrainingDivergedError
from .ingest import NormalizedVector
from .neural import DenseNetwork, Trainer


class DegenerateWindowError(ValueError):
    """A window with no variance has no eigen-spectrum to normalize."""


@dataclass(frozen=True)
class ThaConfig:
    lower_limit: float = 0.93
    upper_limit: float = 1.07
    threshold: float = 0.001

    def __post_init__(self):
        if not self.lower_limit < self.upper_limit:
            raise ValueError("lower_limit must be below upper_limit")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class PcaConfig:
    contribution: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.contribution <= 1.0:
            raise ValueError("contribution must lie in (0, 1]")


@dataclass(frozen=True)
class DaeConfig:
    encoder_fractions: tuple = (0.6, 0.3)
    decoder_fractions: tuple = (0.3, 0.6)
    feature_fraction: float = 0.1
    lr: float = 0.001
    min_error: float = 1e-5
    max_iters: int = 100000

    def __post_init__(self):
        for f in (*self.encoder_fractions, *self.decoder_fractions, self.feature_fraction):
            if not 0.0 < f < 1.0:
                raise ValueError("layer fractions must lie in (0, 1)")
        if self.max_iters < 1 or self.min_error <= 0 or self.lr <= 0:
            raise ValueError("max_iters, min_error and lr must be positive")


def tha_index(window, config=ThaConfig()):
    """Fraction of ticks where any channel leaves [lower, upper]; alarm when it exceeds the threshold."""
    window = np.atleast_2d(np.asarray(window, dtype=np.float64))
    if window.shape[1] == 0:
        raise ValueError("window has no ticks")
    abnormal = np.any((window < config.lower_limit) | (window > config.upper_limit), axis=0)
    p_a = float(abnormal.sum()) / window.shape[1]
    return p_a, p_a > config.threshold


def _covariance_spectrum(window):
    centered = window - window.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (window.shape[1] - 1)
    eig = np.linalg.eigvalsh(cov)[::-1]
    return np.clip(eig, 0.0, None)


def pca_features(window, config=PcaConfig()):
    """Leading covariance eigenvalues (enough to reach ``contribution``), normalized to sum 1."""
    window = np.atleast_2d(np.asarray(window, dtype=np.float64))
    if window.shape[1] < 2:
        raise ValueError("PCA needs at least two ticks per window")
    eig = _covariance_spectrum(window)
    total = eig.sum()
    if not total > 0.0:
        raise DegenerateWindowError("window has zero variance in every channel")
    share = np.cumsum(eig) / total
    # a hair of slack so a share that should be exactly the target is not lost to rounding
    k = int(np.searchsorted(share, config.contribution - 1e-12) + 1)
    k = min(k, eig.size)
    top = eig[:k]
    return top / top.sum()


def _layer_width(fraction, width):
    return max(1, int(math.floor(fraction * width)))


def build_autoencoder(width, config, rng):
    enc = [_layer_width(f, width) for f in config.encoder_fractions]
    dec = [_layer_width(f, width) for f in config.decoder_fractions]
    code = _layer_width(config.feature_fraction, width)
    encoder = DenseNetwork.build([width, *enc, code], "sigmoid", "sigmoid", rng)
    decoder = DenseNetwork.build([code, *dec, width], "sigmoid", "sigmoid", rng)
    return encoder, decoder


def dae_features(x, config=DaeConfig(), rng=None, return_error=False):
    """Fit an autoencoder to one normalized vector and return its bottleneck activations."""
    xv = x.values if isinstance(x, NormalizedVector) else np.asarray(x, dtype=np.float64)
    if xv.shape[0] < 10:
        raise ValueError("autoencoder baseline needs an input width of at least 10")
    if rng is None:
        rng = np.random.default_rng(0)
    encoder, decoder = build_autoencoder(xv.shape[0], config, rng)
    opt_enc, opt_dec = Trainer(encoder, config.lr), Trainer(decoder, config.lr)
    mse = math.inf
    for it in range(1, config.max_iters + 1):
        code, enc_cache = encoder.forward(xv, True)
        recon, dec_cache = decoder.forward(code, True)
        err = recon - xv
        mse = float(err @ err) / xv.shape[0]
        if not math.isfinite(mse):
            raise TrainingDivergedError(it, "reconstruction error")
        if mse < config.min_error:
            break
        grads_dec, g_code = decoder.backward(dec_cache, 2.0 * err / xv.shape[0])
        grads_enc, _ = encoder.backward(enc_cache, g_code, input_grad=False)
        opt_dec.step(grads_dec)
        opt_enc.step(grads_enc)
    features = encoder.predict(xv)
    return (features, mse) if return_error else features
