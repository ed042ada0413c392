import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relunet import network as nn
from relunet.cpwl import PiecewiseLinear, to_shallow_net
from relunet.errors import DimensionError
from relunet.step import build_step_network, make_partition


def relu_net():
    return nn.ReluNetwork((nn.AffineLayer([[1.0]], [0.0]), nn.AffineLayer([[1.0]], [0.0])))


def random_net(rng, widths, integer=False):
    layers = []
    for a, b in zip(widths, widths[1:]):
        if integer:
            w = rng.integers(-3, 4, size=(b, a)).astype(float)
            c = rng.integers(-3, 4, size=b).astype(float)
        else:
            w = rng.normal(size=(b, a))
            c = rng.normal(size=b)
        layers.append(nn.AffineLayer(w, c))
    return nn.ReluNetwork(tuple(layers))


def naive_eval(net, x):
    h = [float(v) for v in x]
    for idx, layer in enumerate(net.layers):
        w, b = layer.weights, layer.bias
        out = []
        for r in range(w.shape[0]):
            acc = 0.0
            for c in range(w.shape[1]):
                if w[r, c] != 0.0:
                    acc += w[r, c] * h[c]
            out.append(acc + b[r])
        h = out if idx == len(net.layers) - 1 else [max(0.0, v) for v in out]
    return np.array(h)


def test_evaluate_examples():
    assert nn.evaluate(nn.affine_net([[1.0]], [0.0]), [3.5]).tolist() == [3.5]
    assert nn.evaluate(relu_net(), [-2.0]).tolist() == [0.0]
    hat = to_shallow_net(PiecewiseLinear([0.0, 0.5, 1.0], [0.0, 1.0, 0.0]))
    assert nn.evaluate(hat, [0.25])[0] == pytest.approx(0.5, abs=1e-15)


def test_evaluate_batch_and_dimension_errors():
    net = random_net(np.random.default_rng(0), [3, 4, 2])
    x = np.random.default_rng(1).normal(size=(5, 3))
    batch = nn.evaluate(net, x)
    assert batch.shape == (5, 2)
    for row, out in zip(x, batch):
        assert np.array_equal(nn.evaluate(net, row), out)
    with pytest.raises(DimensionError):
        nn.evaluate(net, np.zeros(2))
    with pytest.raises(DimensionError):
        nn.evaluate(net, np.zeros((4, 4)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.lists(st.integers(1, 5), min_size=2, max_size=5))
def test_kernel_matches_naive_loop_bitwise(seed, widths):
    rng = np.random.default_rng(seed)
    net = random_net(rng, widths)
    x = rng.normal(size=widths[0])
    assert np.array_equal(nn.evaluate(net, x), naive_eval(net, x))


def test_compose_examples():
    net = nn.compose_serial(nn.affine_net([[2.0]]), nn.affine_net([[1.0]], [1.0]))
    assert net.depth == 0
    assert nn.evaluate(net, [3.0]).tolist() == [7.0]
    rng = np.random.default_rng(2)
    a, b = random_net(rng, [1, 3, 3, 1]), random_net(rng, [1, 2, 2, 2, 1])
    assert (a.depth, b.depth) == (2, 3)
    assert nn.compose_serial(a, b).depth == 5


def test_compose_step_net_with_scaling():
    part = make_partition(2, 1, 1)
    step = build_step_network(2, 1, 1)
    scaled = nn.compose_serial(step, nn.affine_net([[1.0 / part.K]]))
    for k in range(part.K):
        lo, hi = part.plateau(k)
        x = np.array([[(lo + hi) / 2]])
        first = nn.evaluate(step, x)[0, 0]
        assert nn.evaluate(scaled, x)[0, 0] == pytest.approx(first / part.K, abs=1e-12)
        assert first == pytest.approx(k, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_compose_is_exact_on_integer_weights(seed):
    rng = np.random.default_rng(seed)
    a = random_net(rng, [2, 3, 2], integer=True)
    b = random_net(rng, [2, 3, 1], integer=True)
    x = rng.integers(-4, 5, size=2).astype(float)
    both = nn.compose_serial(a, b)
    assert both.depth == a.depth + b.depth
    assert np.array_equal(nn.evaluate(both, x), nn.evaluate(b, nn.evaluate(a, x)))


def test_stack_examples():
    two = nn.stack_parallel([nn.identity_net(1), nn.identity_net(1)])
    assert nn.evaluate(two, [2.0]).tolist() == [2.0, 2.0]
    step = build_step_network(2, 1, 1)
    pair = nn.stack_parallel([step, step], shared_input=False)
    assert np.allclose(nn.evaluate(pair, [0.5, 0.0]), [2.0, 0.0], atol=1e-9)
    rng = np.random.default_rng(3)
    a, b = random_net(rng, [1, 2, 2, 2, 1]), random_net(rng, [1] + [2] * 5 + [1])
    assert nn.stack_parallel([a, b]).depth == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(1, 4))
def test_stack_preserves_components(seed, da, db):
    rng = np.random.default_rng(seed)
    a = random_net(rng, [2] + [3] * da + [1])
    b = random_net(rng, [2] + [2] * db + [2])
    x = rng.normal(size=2)
    both = nn.evaluate(nn.stack_parallel([a, b]), x)
    assert np.allclose(both, np.concatenate([nn.evaluate(a, x), nn.evaluate(b, x)]),
                       rtol=1e-12, atol=1e-12)


def test_passthrough_examples():
    carry = nn.carry_net(1, 3, bound=1.0)
    assert carry.depth == 3
    assert nn.evaluate(carry, [0.7]).tolist() == [0.7]
    assert nn.evaluate(carry, [-1.0]).tolist() == [-1.0]
    assert nn.evaluate(carry, [2.0]).tolist() == [2.0]


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e6, 1e6), st.integers(1, 6))
def test_unbounded_carry_is_exact(v, depth):
    assert nn.evaluate(nn.carry_net(1, depth), [v])[0] == v


def test_widen_with_passthrough():
    rng = np.random.default_rng(4)
    net = random_net(rng, [1, 3, 3, 1])
    wide = nn.widen_with_passthrough(net, 2, bound=2.0)
    x = np.array([0.3, 1.5, -2.0])
    out = nn.evaluate(wide, x)
    assert out[0] == nn.evaluate(net, x[:1])[0]
    assert out[1:].tolist() == [1.5, -2.0]


def test_stats_examples():
    rng = np.random.default_rng(5)
    net = random_net(rng, [1, 5, 5, 1])
    s = nn.stats(net)
    assert (s.param_count, s.width, s.depth) == (46, 5, 2)
    assert nn.stats(nn.affine_net([[1.0, 2.0]])).depth == 0
    shallow = to_shallow_net(PiecewiseLinear([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 0.0, 1.0]))
    assert list(shallow.width_vec) == [5]


def test_breakpoints_1d_finds_hinges():
    f = PiecewiseLinear([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
    bps = nn.breakpoints_1d(to_shallow_net(f), -1.0, 2.0)
    assert all(np.isclose(bps, t).any() for t in (0.0, 0.5, 1.0))


def test_layers_are_read_only():
    layer = nn.AffineLayer([[1.0]], [0.0])
    with pytest.raises(ValueError):
        layer.weights[0, 0] = 2.0
    with pytest.raises(ValueError):
        nn.AffineLayer([[np.nan]], [0.0])


def test_compose_on_many_points():
    rng = np.random.default_rng(6)
    for _ in range(5):
        a = random_net(rng, [3, 4, 4, 2], integer=True)
        b = random_net(rng, [2, 5, 1], integer=True)
        x = rng.integers(-5, 6, size=(1000, 3)).astype(float)
        both = nn.compose_serial(a, b)
        assert np.array_equal(nn.evaluate(both, x), nn.evaluate(b, nn.evaluate(a, x)))
        fa, fb = random_net(rng, [3, 4, 2]), random_net(rng, [2, 3, 1])
        xf = rng.normal(size=(1000, 3))
        ref = nn.evaluate(fb, nn.evaluate(fa, xf))
        assert np.allclose(nn.evaluate(nn.compose_serial(fa, fb), xf), ref, rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=6))
def test_param_count_recount(widths):
    net = random_net(np.random.default_rng(0), widths)
    assert nn.stats(net).param_count == sum(o * (i + 1) for i, o in zip(widths, widths[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.lists(st.integers(1, 5), min_size=1, max_size=4),
       st.integers(1, 4))
def test_stack_width(seed, hidden, out_b):
    rng = np.random.default_rng(seed)
    a = random_net(rng, [2] + hidden + [1])
    b = random_net(rng, [2] + hidden[::-1] + [out_b])
    assert nn.stack_parallel([a, b]).width <= a.width + b.width
    c = random_net(rng, [2, 3, 3, 3, 3, out_b])
    padded = max(b.width, 2 * out_b) if b.depth < c.depth else b.width
    assert nn.stack_parallel([b, c]).width <= padded + c.width
