"""Unit tests for the network core: forward, losses, gradients, Adam."""

import numpy as np
import pytest

from fedstar import (
    ArchSpec,
    Dataset,
    LossSpec,
    ModelParams,
    ParameterError,
    ShapeError,
    adam_step,
    backward,
    cross_entropy,
    evaluate,
    forward,
    fresh_adam_state,
    init_params,
    load_params,
    make_blobs,
    save_params,
    softmax_temperature,
    supervised_update,
)
from fedstar.nn import loss_value, max_param_diff, params_equal
from fedstar.selftrain import SelfTrainConfig


def toy_arch():
    return ArchSpec(4, (5,), 3)


def rand_batch(rng, n, dim):
    return rng.standard_normal((n, dim))


# ---------------------------------------------------------------- init

def test_init_deterministic():
    arch = toy_arch()
    a = init_params(arch, seed=7)
    b = init_params(arch, seed=7)
    assert params_equal(a, b)
    c = init_params(arch, seed=8)
    assert not params_equal(a, c)


def test_init_biases_zero():
    params = init_params(ArchSpec(6, (9, 4), 5), seed=123)
    for _, b in params.layers:
        assert np.all(b == 0.0)


def test_init_shape_chaining():
    params = init_params(ArchSpec(4, (8,), 3), seed=1)
    shapes = [(w.shape, b.shape) for w, b in params.layers]
    assert shapes == [((8, 4), (8,)), ((3, 8), (3,))]


def test_init_bound_respected():
    arch = ArchSpec(10, (20,), 4)
    params = init_params(arch, seed=3)
    w0 = params.layers[0][0]
    bound = np.sqrt(6.0 / (10 + 20))
    assert np.abs(w0).max() <= bound


def test_arch_validation():
    with pytest.raises(ParameterError):
        ArchSpec(0, (4,), 3)
    with pytest.raises(ParameterError):
        ArchSpec(4, (0,), 3)
    with pytest.raises(ParameterError):
        ArchSpec(4, (4,), 1)


# ---------------------------------------------------------------- forward

def test_forward_zero_params_zero_logits():
    arch = toy_arch()
    params = ModelParams(
        [(np.zeros((5, 4)), np.zeros(5)), (np.zeros((3, 5)), np.zeros(3))],
        arch,
    )
    out = forward(params, np.random.default_rng(0).standard_normal((6, 4)))
    assert np.all(out == 0.0)


def test_forward_batch_row_independence():
    rng = np.random.default_rng(5)
    params = init_params(toy_arch(), seed=2)
    batch = rand_batch(rng, 4, 4)
    full = forward(params, batch)
    single = forward(params, batch[2:3])
    assert np.array_equal(full[2], single[0])


def test_forward_permutation_equivariance():
    rng = np.random.default_rng(6)
    params = init_params(toy_arch(), seed=2)
    batch = rand_batch(rng, 8, 4)
    perm = rng.permutation(8)
    assert np.array_equal(forward(params, batch[perm]), forward(params, batch)[perm])


def test_forward_matches_straight_line_oracle():
    # independent re-evaluation of the same matrix chain with np.dot
    rng = np.random.default_rng(7)
    params = init_params(ArchSpec(6, (7, 5), 4), seed=11)
    batch = rand_batch(rng, 9, 6)
    expected = np.zeros((9, 4))
    for r in range(9):
        h = batch[r]
        for i, (w, b) in enumerate(params.layers):
            h = w.dot(h) + b
            if i < len(params.layers) - 1:
                h = np.maximum(h, 0.0)
        expected[r] = h
    assert np.allclose(forward(params, batch), expected, atol=1e-12)


def test_forward_shape_error():
    params = init_params(toy_arch(), seed=0)
    with pytest.raises(ShapeError):
        forward(params, np.zeros((3, 5)))


# ---------------------------------------------------------------- softmax

def test_softmax_uniform():
    probs = softmax_temperature(np.zeros(3), 4.0)
    assert np.allclose(probs, 1.0 / 3.0, atol=1e-12)


def test_softmax_hand_value():
    # direct evaluation: e^{z_i}/sum e^{z_j} for z = [2, 1, 0]
    z = np.array([2.0, 1.0, 0.0])
    e = np.exp(z)
    expected = e / e.sum()
    got = softmax_temperature(z, 1.0)
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(got, [0.6652, 0.2447, 0.0900], atol=5e-5)


def test_softmax_temperature_flattens():
    z = np.array([2.0, 1.0, 0.0])
    sharp = softmax_temperature(z, 1.0)
    soft = softmax_temperature(z, 4.0)
    assert soft.max() < sharp.max()
    assert np.argmax(soft) == np.argmax(sharp)


def test_softmax_sums_to_one_large_logits():
    rng = np.random.default_rng(8)
    for _ in range(200):
        z = rng.uniform(-100, 100, size=rng.integers(2, 12))
        t = float(rng.uniform(0.1, 10.0))
        probs = softmax_temperature(z, t)
        assert abs(probs.sum() - 1.0) <= 1e-9


def test_softmax_stays_in_open_interval_for_moderate_logits():
    # beyond ~36 nats of scaled margin the max prob rounds to exactly 1.0
    # in float64, so openness is only representable at moderate scale
    rng = np.random.default_rng(9)
    for _ in range(200):
        z = rng.uniform(-15, 15, size=rng.integers(2, 12))
        t = float(rng.uniform(1.0, 10.0))
        probs = softmax_temperature(z, t)
        assert np.all(probs > 0.0) and np.all(probs < 1.0)


def test_softmax_rejects_bad_temperature():
    with pytest.raises(ParameterError):
        softmax_temperature(np.zeros(3), 0.0)
    with pytest.raises(ParameterError):
        softmax_temperature(np.zeros(3), -1.0)


# ---------------------------------------------------------------- cross entropy

def test_cross_entropy_one_hot_correct():
    probs = np.eye(4)[[0, 2, 3]]
    assert cross_entropy(probs, np.array([0, 2, 3])) == 0.0


def test_cross_entropy_uniform():
    probs = np.full((5, 10), 0.1)
    assert abs(cross_entropy(probs, np.zeros(5, dtype=int)) - np.log(10)) < 1e-12


def test_cross_entropy_half():
    assert abs(cross_entropy(np.array([[0.5, 0.5]]), np.array([0])) - np.log(2)) < 1e-12


def test_cross_entropy_empty_batch_errors():
    with pytest.raises(ParameterError):
        cross_entropy(np.zeros((0, 3)), np.zeros(0, dtype=int))


def test_cross_entropy_floors_zero_probability():
    probs = np.array([[1.0, 0.0]])
    loss = cross_entropy(probs, np.array([1]))
    assert np.isfinite(loss)
    assert loss == pytest.approx(-np.log(1e-12))


# ---------------------------------------------------------------- backward

def _fd_gradient(params, spec, h=1e-5):
    """Central finite differences on the combined loss, coordinatewise."""
    grads = []
    for li, (w, b) in enumerate(params.layers):
        gw = np.zeros_like(w)
        gb = np.zeros_like(b)
        for arr, garr in ((w, gw), (b, gb)):
            for pos in np.ndindex(arr.shape):
                orig = arr[pos]
                arr[pos] = orig + h
                lp = loss_value(params, spec)
                arr[pos] = orig - h
                lm = loss_value(params, spec)
                arr[pos] = orig
                garr[pos] = (lp - lm) / (2 * h)
        grads.append((gw, gb))
    return grads


def _max_rel_err(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(1e-3, np.abs(n))
            worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(42)
    for trial in range(10):
        params = init_params(toy_arch(), seed=trial)
        x = rand_batch(rng, 5, 4)
        y = rng.integers(0, 3, 5)
        px = rand_batch(rng, 3, 4)
        py = rng.integers(0, 3, 3)
        spec = LossSpec(x, y, beta=0.5, pseudo_x=px, pseudo_y=py)
        grad = backward(params, spec)
        fd = _fd_gradient(params, spec)
        assert _max_rel_err(grad.layers, fd) <= 1e-4


def test_backward_beta_zero_equals_supervised_gradient():
    rng = np.random.default_rng(1)
    params = init_params(toy_arch(), seed=9)
    x = rand_batch(rng, 6, 4)
    y = rng.integers(0, 3, 6)
    px = rand_batch(rng, 4, 4)
    py = rng.integers(0, 3, 4)
    g_sup = backward(params, LossSpec(x, y))
    g_beta0 = backward(params, LossSpec(x, y, beta=0.0, pseudo_x=px, pseudo_y=py))
    g_empty = backward(
        params,
        LossSpec(x, y, beta=0.7, pseudo_x=np.zeros((0, 4)), pseudo_y=np.zeros(0, int)),
    )
    for (a, ab), (b, bb), (c, cb) in zip(g_sup.layers, g_beta0.layers, g_empty.layers):
        assert np.array_equal(a, b) and np.array_equal(ab, bb)
        assert np.array_equal(a, c) and np.array_equal(ab, cb)


def test_backward_duplicate_batch_invariance():
    rng = np.random.default_rng(2)
    params = init_params(toy_arch(), seed=3)
    x = rand_batch(rng, 4, 4)
    y = rng.integers(0, 3, 4)
    g1 = backward(params, LossSpec(x, y))
    g2 = backward(params, LossSpec(np.vstack([x, x]), np.concatenate([y, y])))
    for (a, ab), (b, bb) in zip(g1.layers, g2.layers):
        assert np.allclose(a, b, atol=1e-14)
        assert np.allclose(ab, bb, atol=1e-14)


# ---------------------------------------------------------------- adam

def _scalar_adam(thetas, grads_seq, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Independent per-coordinate Adam oracle replaying a gradient sequence."""
    theta = np.array(thetas, dtype=float)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t, g in enumerate(grads_seq, start=1):
        g = np.asarray(g, dtype=float)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return theta


def test_adam_zero_gradient_is_identity():
    params = init_params(toy_arch(), seed=5)
    zero = backward(params, LossSpec(np.zeros((2, 4)), np.zeros(2, int)))
    zero.layers = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zero.layers]
    for lr in (1e-3, 0.1):
        state = fresh_adam_state(params, learning_rate=lr)
        p = params
        for _ in range(3):
            p, state = adam_step(p, zero, state)
        assert params_equal(p, params)
        assert state.step == 3


def test_adam_single_step_matches_scalar_oracle():
    params = init_params(toy_arch(), seed=6)
    rng = np.random.default_rng(10)
    grad_layers = [
        (rng.standard_normal(w.shape), rng.standard_normal(b.shape))
        for w, b in params.layers
    ]
    from fedstar import Gradient

    state = fresh_adam_state(params)
    new_params, new_state = adam_step(params, Gradient(grad_layers), state)
    for (w0, b0), (gw, gb), (w1, b1) in zip(
        params.layers, grad_layers, new_params.layers
    ):
        assert np.allclose(w1, _scalar_adam(w0, [gw]), atol=1e-15)
        assert np.allclose(b1, _scalar_adam(b0, [gb]), atol=1e-15)
    assert new_state.step == 1


def test_adam_two_steps_replay_oracle():
    params = init_params(toy_arch(), seed=8)
    rng = np.random.default_rng(11)
    from fedstar import Gradient

    seq = [
        [
            (rng.standard_normal(w.shape), rng.standard_normal(b.shape))
            for w, b in params.layers
        ]
        for _ in range(2)
    ]
    state = fresh_adam_state(params)
    p = params
    for g in seq:
        p, state = adam_step(p, Gradient(g), state)
    for li, (w0, b0) in enumerate(params.layers):
        gw_seq = [g[li][0] for g in seq]
        gb_seq = [g[li][1] for g in seq]
        assert np.allclose(p.layers[li][0], _scalar_adam(w0, gw_seq), atol=1e-14)
        assert np.allclose(p.layers[li][1], _scalar_adam(b0, gb_seq), atol=1e-14)


def test_adam_weight_decay_only_touches_weights():
    params = init_params(toy_arch(), seed=10)
    from fedstar import Gradient

    zero = Gradient(
        [(np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers]
    )
    state = fresh_adam_state(params, weight_decay=0.1)
    p, _ = adam_step(params, zero, state)
    assert not np.array_equal(p.layers[0][0], params.layers[0][0])
    for (_, b_new), (_, b_old) in zip(p.layers, params.layers):
        assert np.array_equal(b_new, b_old)


# ---------------------------------------------------------------- evaluate

def test_evaluate_fitted_separable_set():
    ds = make_blobs(120, 3, 4, spread=0.05, seed=21)
    params = init_params(ArchSpec(4, (16,), 3), seed=4)
    cfg = SelfTrainConfig(batch_size=16, local_epochs=40)
    params = supervised_update(params, ds, cfg, seed=2)
    assert evaluate(params, ds) == 1.0


def test_evaluate_constant_model_balanced():
    ds = make_blobs(100, 4, 3, spread=1.0, seed=22)
    arch = ArchSpec(3, (), 4)
    params = ModelParams([(np.zeros((4, 3)), np.zeros(4))], arch)
    # constant zero logits: argmax ties resolve to class 0
    assert evaluate(params, ds) == 0.25


def test_evaluate_deterministic_and_empty_errors():
    ds = make_blobs(60, 3, 4, spread=0.5, seed=23)
    params = init_params(ArchSpec(4, (8,), 3), seed=1)
    assert evaluate(params, ds) == evaluate(params, ds)
    empty = Dataset(np.zeros((0, 4)), np.zeros(0, dtype=np.int64), 3)
    with pytest.raises(ParameterError):
        evaluate(params, empty)


# ---------------------------------------------------------------- params io

def test_params_roundtrip_bitwise(tmp_path):
    params = init_params(ArchSpec(7, (11, 6), 4), seed=99)
    path = tmp_path / "params.txt"
    save_params(path, params)
    loaded = load_params(path)
    assert params_equal(params, loaded)
    assert loaded.arch == params.arch


def test_params_validation_catches_shape_mismatch():
    arch = toy_arch()
    with pytest.raises(ShapeError):
        ModelParams([(np.zeros((5, 4)), np.zeros(5))], arch)
    with pytest.raises(ParameterError):
        ModelParams(
            [
                (np.full((5, 4), np.nan), np.zeros(5)),
                (np.zeros((3, 5)), np.zeros(3)),
            ],
            arch,
        )


def test_max_param_diff():
    a = init_params(toy_arch(), seed=1)
    b = a.copy()
    assert max_param_diff(a, b) == 0.0
