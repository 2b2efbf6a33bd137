import math

import numpy as np
import pytest

from gridrisk.bigan import (
    LOG4, BiganModel, ModelShape, TrainConfig, build_model, extract_features, sample_z,
    segment_rngs, train_segment, value_function,
)
from gridrisk.neural import DenseNetwork, Layer

TINY = ModelShape((6,), (6,), (6,), 2)


def _tiny_model(rng, input_dim=8, latent=2, hidden=(4,)):
    return build_model(input_dim, hidden, hidden, hidden, latent, 0.2, 0.0, rng)


def _silence(net):
    net.layers[-1].W[:] = 0.0
    net.layers[-1].b[:] = 0.0


def test_118_channel_shapes(rng):
    m = build_model(1180, (768, 320, 256), (768, 320, 256), (256, 320, 768), 64, 0.2, 0.1, rng)
    assert m.E.sizes == [1180, 768, 320, 256, 64]
    assert m.G.sizes == [64, 256, 320, 768, 1180]
    assert m.D.sizes == [1244, 768, 320, 256, 1]
    assert [layer.activation for layer in m.D.layers] == ["lrelu"] * 3 + ["sigmoid"]
    assert m.E.layers[-1].activation == "tanh" and m.G.layers[-1].activation == "sigmoid"


def test_45_channel_daily_shapes():
    rng = np.random.default_rng(0)
    h = (1660, 960, 320)
    m = build_model(4320, h, h, h[::-1], 64, 0.2, 0.2, rng)
    assert m.E.sizes == [4320, 1660, 960, 320, 64]
    assert m.D.input_dim == 4384


def test_discriminator_sees_concatenation(rng):
    assert _tiny_model(rng).D.input_dim == 10


def test_model_validation(rng):
    m = _tiny_model(rng)
    with pytest.raises(ValueError):
        BiganModel(m.G, m.E, m.D, 3)
    with pytest.raises(ValueError):
        build_model(8, (), (4,), (4,), 2, 0.2, 0.0, rng)


def test_sample_z_distributions():
    rng = np.random.default_rng(0)
    u = sample_z("uniform", 10_000, rng)
    assert np.all((u >= 0) & (u < 1)) and abs(u.mean() - 0.5) < 0.02
    g = sample_z("gaussian", 10_000, rng)
    assert abs(g.var(ddof=1) - 1.0) < 0.05
    e = sample_z("exponential", 10_000, rng)
    assert np.all(e >= 0) and abs(e.mean() - 1.0) < 0.05
    a = sample_z("gaussian", 5, np.random.default_rng(4))
    b = sample_z("gaussian", 5, np.random.default_rng(4))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        sample_z("cauchy", 3, rng)


def test_value_at_saddle(rng):
    m = _tiny_model(rng)
    _silence(m.D)
    v = value_function(m, rng.random(8), rng.random(2))
    assert abs(v + LOG4) < 1e-9


def test_value_perfect_discriminator_limit(rng):
    m = _tiny_model(rng)
    x = rng.random(8)
    # a discriminator that outputs ~1 on the real pair and ~0 on the fake pair
    real = np.concatenate((x, m.E.predict(x)))
    z = rng.random(2)
    fake = np.concatenate((m.G.predict(z), z))
    w = (real - fake) * 1e4
    m.D.layers[:] = [Layer(w[None, :], np.array([-w @ (real + fake) / 2]), "sigmoid")]
    v = value_function(m, x, z)
    assert -1e-6 < v <= 0.0
    assert v == pytest.approx(math.log(1 - 1e-7) * 2, abs=1e-9)


def test_value_matches_straight_line_recomputation(rng):
    m = _tiny_model(rng)
    x, z = rng.random(8), rng.random(2)

    def run(net, v):
        for layer in net.layers:
            a = layer.W @ v + layer.b
            if layer.activation == "lrelu":
                v = np.maximum(a, 0) - layer.beta * np.minimum(a, 0)
            elif layer.activation == "tanh":
                v = np.tanh(a)
            else:
                v = 1 / (1 + np.exp(-a))
        return v

    p_r = run(m.D, np.concatenate((x, run(m.E, x))))[0]
    p_f = run(m.D, np.concatenate((run(m.G, z), z)))[0]
    assert value_function(m, x, z) == pytest.approx(math.log(p_r) + math.log(1 - p_f), abs=1e-10)


def test_features_zero_encoder(rng):
    m = _tiny_model(rng)
    for layer in m.E.layers:
        layer.W[:] = 0.0
    assert not np.any(extract_features(m, rng.random(8)))


def test_features_in_tanh_range(rng):
    m = build_model(30, (20,), (20,), (20,), 5, 0.2, 0.0, rng)
    for layer in m.E.layers:
        layer.W *= 50
    f = extract_features(m, rng.random(30))
    assert np.all(np.abs(f) <= 1)


def test_features_hand_computed_encoder(rng):
    m = _tiny_model(rng, input_dim=3, latent=2, hidden=(2,))
    W1 = np.array([[0.5, -1.0, 0.25], [1.5, 0.5, -0.5]])
    W2 = np.array([[1.0, -2.0], [0.3, 0.7]])
    m.E.layers[0].W[:], m.E.layers[1].W[:] = W1, W2
    x = np.array([0.2, 0.9, 0.4])
    a = W1 @ x
    h = np.maximum(a, 0) - 0.2 * np.minimum(a, 0)
    np.testing.assert_allclose(extract_features(m, x), np.tanh(W2 @ h), rtol=0, atol=1e-12)


def test_tiny_segment_converges():
    x = np.random.default_rng(100).random(8)
    out = train_segment(x, TrainConfig(n=10, epsilon=0.05, seed=0), TINY)
    assert out.converged
    avg = sum(out.value_history[-10:]) / 10
    assert abs(avg + LOG4) < 0.05


def test_huge_epsilon_stops_after_n():
    out = train_segment(np.linspace(0, 1, 8), TrainConfig(n=4, epsilon=10.0, max_iters=4), TINY)
    assert out.converged and out.iterations_run == 4 and len(out.features) == 4


def test_iteration_cap():
    out = train_segment(np.linspace(0, 1, 8), TrainConfig(n=4, epsilon=1e-12, max_iters=9), TINY)
    assert not out.converged
    assert out.iterations_run == 9 and len(out.value_history) == 9 and len(out.features) == 4
    assert all(math.isfinite(v) for v in out.value_history)


@pytest.mark.parametrize("update", ["objective", "alg1-literal"])
@pytest.mark.parametrize("dist", ["uniform", "gaussian", "exponential"])
def test_training_is_bit_reproducible(update, dist):
    cfg = TrainConfig(n=5, epsilon=1e-12, max_iters=25, seed=3, z_dist=dist, encoder_update=update)
    x = np.random.default_rng(1).random(8)
    a = train_segment(x, cfg, TINY, segment_index=7)
    b = train_segment(x, cfg, TINY, segment_index=7)
    assert a.value_history == b.value_history
    assert all(np.array_equal(f, g) for f, g in zip(a.features, b.features))
    c = train_segment(x, cfg, TINY, segment_index=8)
    assert c.value_history != a.value_history


def test_final_snapshot_is_infer_mode():
    cfg = TrainConfig(n=3, epsilon=1e-12, max_iters=12, dropout_prob=0.3, seed=2)
    x = np.random.default_rng(2).random(8)
    out = train_segment(x, cfg, TINY)
    assert np.array_equal(extract_features(out.model, x), out.features[-1])


def test_segment_rngs_are_independent_streams():
    a = [r.random() for r in segment_rngs(5, 0)]
    b = [r.random() for r in segment_rngs(5, 1)]
    assert len(set(a)) == 3 and a != b
    assert a == [r.random() for r in segment_rngs(5, 0)]


def test_input_width_mismatch(rng):
    m = _tiny_model(rng)
    with pytest.raises(ValueError):
        train_segment(np.ones(9), TrainConfig(n=2, max_iters=2), TINY, model=m)


@pytest.mark.parametrize("bad", [
    dict(m=0), dict(n=0), dict(epsilon=0.0), dict(n=10, max_iters=5), dict(lr=0.0),
    dict(dropout_prob=1.0), dict(z_dist="beta"), dict(encoder_update="other"), dict(beta=-0.1),
])
def test_train_config_validation(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad)
