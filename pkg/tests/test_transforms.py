import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgrefactor.grid import build_hierarchy, uniform_hierarchy
from hgrefactor.transforms import (
    apply_coefficients,
    compute_coefficients,
    interpolate_to_fine,
    node_classes,
)
from oracles import brute_force_coefficients, random_coords


def test_interpolate_uniform_midpoints():
    h = uniform_hierarchy([5])
    np.testing.assert_array_equal(interpolate_to_fine([6, 0, 2], h, 2), [6, 3, 0, 1, 2])


def test_interpolate_nonuniform_weights():
    h = build_hierarchy([[0, 1, 3]])
    out = interpolate_to_fine([0.0, 3.0], h, 1)
    assert out[1] == pytest.approx(1.0, abs=1e-15)


def test_interpolate_reproduces_constants(rng):
    h = build_hierarchy([random_coords(rng, 9), random_coords(rng, 17)])
    out = interpolate_to_fine(np.full(h.level_shape(1), 2.5), h, 2)
    np.testing.assert_allclose(out, 2.5, rtol=1e-15)


def test_interpolate_shape_mismatch():
    h = uniform_hierarchy([5, 5])
    with pytest.raises(ValueError):
        interpolate_to_fine(np.zeros((3, 2)), h, 2)
    with pytest.raises(ValueError):
        interpolate_to_fine(np.zeros((2, 2)), h, 0)


def test_quadratic_coefficients():
    h = uniform_hierarchy([5])
    x = np.arange(5.0)
    np.testing.assert_array_equal(compute_coefficients(x ** 2 - 5 * x + 6, h, 2), [0, -1, 0, -1, 0])


def test_affine_has_zero_coefficients(rng):
    coords = [random_coords(rng, 9), random_coords(rng, 9), random_coords(rng, 5)]
    h = build_hierarchy(coords)
    X = np.meshgrid(*coords, indexing="ij")
    u = 1.5 + 2 * X[0] - 0.5 * X[1] + 3 * X[2]
    c = compute_coefficients(u, h, 2)
    assert np.abs(c).max() <= 1e-12 * np.abs(u).max()


def test_2d_bump_coefficients():
    h = uniform_hierarchy([3, 3])
    u = np.outer([0, 1, 0], [0, 1, 0]).astype(float)
    c = compute_coefficients(u, h, 1)
    assert c[1, 1] == 1
    assert c[0, 1] == c[1, 0] == c[2, 1] == c[1, 2] == 0
    assert c[0, 0] == c[0, 2] == c[2, 0] == c[2, 2] == 0


def test_apply_coefficients_examples():
    h = uniform_hierarchy([5])
    np.testing.assert_array_equal(apply_coefficients([6, 0, 2], [0, -1, 0, -1, 0], h, 2), [6, 2, 0, 0, 2])
    np.testing.assert_array_equal(apply_coefficients([6, 0, 2], np.zeros(5), h, 2),
                                  interpolate_to_fine([6, 0, 2], h, 2))


@pytest.mark.parametrize("shape", [(17,), (9, 5), (5, 9, 5)])
def test_matches_brute_force_interpolant(rng, shape):
    coords = [random_coords(rng, n) for n in shape]
    h = build_hierarchy(coords)
    u = rng.standard_normal(shape)
    l = h.levels
    np.testing.assert_allclose(compute_coefficients(u, h, l),
                               brute_force_coefficients(coords, u), atol=1e-12)


@pytest.mark.parametrize("ndim", [1, 2, 3])
def test_neighbour_count_by_parity(rng, ndim):
    """A node odd along m axes depends on exactly 2**m coarse nodes."""
    h = build_hierarchy([random_coords(rng, 5) for _ in range(ndim)])
    cshape = h.level_shape(1)
    cols = []
    for idx in itertools.product(*[range(n) for n in cshape]):
        e = np.zeros(cshape)
        e[idx] = 1.0
        cols.append(interpolate_to_fine(e, h, 2).reshape(-1))
    P = np.array(cols).T
    for flat, idx in enumerate(itertools.product(*[range(n) for n in h.level_shape(2)])):
        m = sum(i % 2 for i in idx)
        assert np.count_nonzero(P[flat]) == 2 ** m
        assert P[flat].sum() == pytest.approx(1.0, abs=1e-14)


def test_node_classes_partition():
    h = uniform_hierarchy([9, 17])
    cls = node_classes(h)
    for l in range(h.levels + 1):
        assert np.count_nonzero(cls == l) == h.class_size(l)
    assert cls[0, 0] == 0 and cls[1, 1] == h.levels


@st.composite
def level_case(draw):
    ndim = draw(st.integers(1, 3))
    sizes = [draw(st.sampled_from([3, 5, 9])) for _ in range(ndim)]
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return sizes, seed


@settings(max_examples=40, deadline=None)
@given(level_case())
def test_inverse_pair_and_linearity(case):
    sizes, seed = case
    rng = np.random.default_rng(seed)
    h = build_hierarchy([random_coords(rng, n) for n in sizes])
    l = h.levels
    u = rng.standard_normal(sizes)
    v = rng.standard_normal(sizes)
    sel = tuple(slice(None, None, 2) for _ in sizes)
    c = compute_coefficients(u, h, l)
    assert np.all(c[sel] == 0)
    back = apply_coefficients(u[sel], c, h, l)
    np.testing.assert_allclose(back, u, rtol=0, atol=1e-12 * np.abs(u).max())
    a, b = 1.7, -0.3
    lhs = compute_coefficients(a * u + b * v, h, l)
    rhs = a * c + b * compute_coefficients(v, h, l)
    scale = abs(a) * np.abs(u).max() + abs(b) * np.abs(v).max()
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 * scale)


def test_strided_views_accepted():
    h = uniform_hierarchy([9])
    data = np.arange(9.0) ** 2
    view = data[::2]
    c = compute_coefficients(view, build_hierarchy([np.arange(0, 9, 2.0)]), 2)
    assert c.shape == (5,)
    np.testing.assert_array_equal(data, np.arange(9.0) ** 2)
