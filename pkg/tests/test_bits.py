import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relunet import network as nn
from relunet.bits import (bin_value, bits_width_bounds, bits_width_depth_bounds,
                          build_bit_extraction_multi, build_bits_width, build_bits_width_depth,
                          build_point_fitter, build_point_fitter_2d, increment_tables,
                          min_net, point_fitter_bounds, quantize)
from relunet.errors import ConstructionError, PrecisionError
from relunet.step import ilog3

import oracles


def test_bin_value_examples():
    assert bin_value([1, 0, 1]) == 0.625
    assert bin_value([]) == 0.0
    assert bin_value([1] * 50) == 1 - 2.0 ** -50


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=52))
def test_bin_value_is_exact(bits):
    exact = sum(b * 2 ** (52 - j - 1) for j, b in enumerate(bits))
    assert bin_value(bits) * 2 ** 52 == exact


def test_bit_identity():
    for n in range(1, 8):
        for bits in itertools.product([0, 1], repeat=n):
            theta = bin_value(bits)
            for j in range(1, n + 1):
                got = np.floor(2 ** j * theta) - 2 * np.floor(2 ** (j - 1) * theta)
                assert got == bits[j - 1]


@pytest.mark.parametrize("bits, i, want", [((1, 0, 1), 2, 1), ((1, 1, 1), 3, 3), ((0, 1, 1), 0, 0)])
def test_bits_width_examples(bits, i, want):
    net = build_bits_width(3)
    assert nn.evaluate(net, [bin_value(bits), i])[0] == want == oracles.prefix_sum(bits, i)


def test_bits_width_shape():
    for n in range(1, 5):
        net = build_bits_width(n)
        width, depth = bits_width_bounds(n)
        assert net.width <= width and net.depth <= depth


@pytest.mark.parametrize("n, L, bits, k, want", [
    (2, 2, (1, 0, 1, 1), 3, 2),
    (1, 3, (0, 1, 0), 2, 1),
    (2, 2, (1, 1, 1, 1), 4, 4),
])
def test_bits_width_depth_examples(n, L, bits, k, want):
    net = build_bits_width_depth(n, L)
    assert nn.evaluate(net, [bin_value(bits), k])[0] == want


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_bits_width_depth_random(n, L, seed):
    net = build_bits_width_depth(n, L)
    width, depth = bits_width_depth_bounds(n, L)
    assert net.width <= width and net.depth <= depth
    bits = np.random.default_rng(seed).integers(0, 2, L * n)
    x = np.array([[bin_value(bits), k] for k in range(L * n + 1)])
    want = [oracles.prefix_sum(list(bits), k) for k in range(L * n + 1)]
    assert nn.evaluate(net, x)[:, 0].tolist() == want


def test_bits_width_depth_precision_guard():
    with pytest.raises(PrecisionError):
        build_bits_width_depth(2, 40)


def test_min_net():
    net = min_net()
    for a, b in [(0.0, 3.0), (5.0, 2.0), (-1.0, 4.0), (7.0, 7.0)]:
        assert nn.evaluate(net, [a, b])[0] == min(a, b)


def test_multi_examples():
    net = build_bit_extraction_multi(1, 1, [[1]])
    assert nn.evaluate(net, [0.0, 0.0])[0] == 1.0
    table = np.array([[1, 0], [0, 0], [1, 1], [0, 1]])
    n = ilog3(4)
    assert n == 1
    net = build_bit_extraction_multi(2, 1, table[:, :1])
    for m in range(4):
        assert nn.evaluate(net, [m, 0])[0] == table[m, 0]


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 10 ** 6))
def test_multi_random_tables(N, L, seed):
    n = ilog3(N + 2)
    table = np.random.default_rng(seed).integers(0, 2, (N * N * L, L * n))
    net = build_bit_extraction_multi(N, L, table)
    x = np.array([[m, k] for m in range(table.shape[0]) for k in range(L * n)], dtype=float)
    want = np.cumsum(table, axis=1).ravel()
    assert np.array_equal(nn.evaluate(net, x)[:, 0], want)


def test_quantize_examples():
    assert quantize(0.7, 0.1) == 7
    assert quantize([0.0, 0.4, 0.8, 0.6], 0.5).tolist() == [0, 0, 1, 1]
    assert float(quantize(0.7, 0.1)) * 0.1 == pytest.approx(oracles.quantized(0.7, 0.1), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.sampled_from([0.5, 0.1, 0.25, 0.3, 1 / 3, 2.0]))
def test_quantize_matches_fraction_oracle(y, eps):
    assert quantize(y, eps) * eps == pytest.approx(oracles.quantized(y, eps), abs=1e-9)


def test_increment_tables():
    up, down = increment_tables([[0, 1, 1, 0], [2, 2, 3, 4]])
    assert up.tolist() == [[0, 1, 0, 0], [0, 0, 1, 1]]
    assert down.tolist() == [[0, 0, 0, 1], [0, 0, 0, 0]]
    with pytest.raises(ConstructionError):
        increment_tables([[0, 2]])


def test_point_fitter_2d_example():
    net = build_point_fitter_2d(2, 1, np.array([[0.0], [0.4], [0.8], [0.6]]), 0.5)
    got = [nn.evaluate(net, [m, 0])[0] for m in range(4)]
    assert got == [0.0, 0.0, 0.5, 0.5]
    assert 0.0 <= nn.evaluate(net, [-5.0, -5.0])[0] <= 0.8


def test_point_fitter_examples():
    net = build_point_fitter(2, 1, [0.0, 0.4, 0.8, 0.6], 0.5)
    assert nn.evaluate(net, [2.0])[0] == 0.5
    zero = build_point_fitter(2, 1, np.zeros(4), 0.5)
    x = np.random.default_rng(0).uniform(-3, 7, (200, 1))
    assert np.all(nn.evaluate(zero, x) == 0.0)
    single = build_point_fitter(1, 1, [0.7], 0.1)
    assert nn.evaluate(single, [0.0])[0] == pytest.approx(0.7, abs=1e-9)


def test_point_fitter_constant():
    c, eps = 1.3, 0.25
    net = build_point_fitter(2, 2, np.full(10, c), eps)
    got = nn.evaluate(net, np.arange(10.0)[:, None])[:, 0]
    assert np.allclose(got, np.floor(c / eps) * eps, atol=1e-12)


def test_point_fitter_rejects_large_gaps_and_capacity():
    with pytest.raises(ConstructionError):
        build_point_fitter(2, 1, [0.0, 1.0], 0.5)
    with pytest.raises(ConstructionError):
        build_point_fitter(1, 1, [0.0, 0.1], 0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 10 ** 6))
def test_point_fitter_random(N, L, seed):
    rng = np.random.default_rng(seed)
    eps = 0.25
    J = N * N * L * L * ilog3(N + 2)
    y = np.abs(np.cumsum(rng.uniform(-eps, eps, J)))
    y = np.minimum(y, y[0] + np.abs(np.arange(J)) * eps)
    if np.abs(np.diff(y)).max(initial=0) > eps:
        return
    net = build_point_fitter(N, L, y, eps)
    width, depth = point_fitter_bounds(N, L)
    assert net.width <= width and net.depth <= depth
    got = nn.evaluate(net, np.arange(J, dtype=float)[:, None])[:, 0]
    want = [oracles.quantized(v, eps) for v in y]
    assert np.allclose(got, want, atol=1e-9)
    out = nn.evaluate(net, rng.uniform(-2, J + 2, (200, 1)))
    assert out.min() >= 0 and out.max() <= y.max()
