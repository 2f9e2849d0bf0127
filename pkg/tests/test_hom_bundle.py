import math

import numpy as np
import pytest

from sobolev_lab.errors import AntipodalError, ContractError, DomainError
from sobolev_lab.hom_bundle import (HomElement, frobenius_inner, frobenius_norm, operator_norm,
                                    reduce_frobenius_by_postcomposition, transport_hom)
from sobolev_lab.manifolds import Euclidean, IntervalDomain, Sphere

R2 = Euclidean(2)


def flat(matrix):
    return HomElement.at(R2, R2, [0.0, 0.0], [0.0, 0.0], matrix)


def test_norm_examples():
    assert frobenius_norm(flat(np.eye(2))) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert frobenius_norm(flat(np.zeros((2, 2)))) == 0.0
    assert frobenius_norm(flat(np.diag([3.0, 4.0]))) == pytest.approx(5.0, abs=1e-15)
    assert operator_norm(flat(np.diag([3.0, 4.0]))) == pytest.approx(4.0, abs=1e-14)
    assert operator_norm(flat(np.zeros((2, 2)))) == 0.0
    rank1 = np.outer([1.0, 2.0], [3.0, -1.0])
    assert operator_norm(flat(rank1)) == pytest.approx(frobenius_norm(flat(rank1)), rel=1e-14)


def test_norm_sandwich_on_random_matrices():
    rng = np.random.default_rng(0)
    for shape in ((3, 2), (2, 3), (4, 4)):
        for _ in range(200):
            a = rng.standard_normal(shape)
            fro = np.linalg.norm(a)
            op = np.linalg.norm(a, ord=2)
            assert op <= fro + 1e-12
            assert fro <= math.sqrt(min(shape)) * op + 1e-12


def test_frobenius_is_frame_independent():
    s2 = Sphere(2)
    rng = np.random.default_rng(1)
    x = np.array([0.5])
    y = s2.random_point(rng)
    dom = IntervalDomain(0.0, 1.0)
    h = HomElement.at(dom, s2, x, y, rng.standard_normal((2, 1)))
    q = np.linalg.qr(rng.standard_normal((2, 2)))[0]
    rotated = h.reframe(frame_y=h.frame_y @ q)
    assert frobenius_norm(rotated) == pytest.approx(frobenius_norm(h), abs=1e-12)
    np.testing.assert_allclose(rotated.ambient(), h.ambient(), atol=1e-14)


def test_frame_validation():
    with pytest.raises(DomainError):
        HomElement.at(R2, R2, [0, 0], [0, 0], np.eye(2), frame_x=np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        HomElement.at(R2, R2, [0, 0], [0, 0], np.eye(3))


def test_from_ambient_roundtrip():
    s2 = Sphere(2)
    rng = np.random.default_rng(2)
    x, y = s2.random_point(rng), s2.random_point(rng)
    h = HomElement.at(s2, s2, x, y, rng.standard_normal((2, 2)))
    again = HomElement.from_ambient(s2, s2, x, y, h.ambient())
    np.testing.assert_allclose(again.ambient(), h.ambient(), atol=1e-14)


def test_inner_product_requires_same_base():
    a = flat(np.eye(2))
    b = HomElement.at(R2, R2, [1.0, 0.0], [0.0, 0.0], np.eye(2))
    assert frobenius_inner(a, a) == pytest.approx(2.0)
    with pytest.raises(ContractError):
        frobenius_inner(a, b)


def test_reduction_examples():
    red = reduce_frobenius_by_postcomposition(np.zeros((3, 2)), k=2)
    assert red.value == 0.0
    rng = np.random.default_rng(3)
    for shape in ((3, 2), (4, 3), (2, 5)):
        xi = rng.standard_normal(shape)
        red = reduce_frobenius_by_postcomposition(xi, k=min(shape))
        assert red.value == pytest.approx(np.linalg.norm(xi), rel=1e-12)
        assert np.linalg.norm(red.rho, ord=2) <= 1 + 1e-12
        assert red.sampled_max <= red.value + 1e-12


def test_reduction_sampled_gap_is_small_for_3x2():
    rng = np.random.default_rng(4)
    xi = rng.standard_normal((3, 2))
    red = reduce_frobenius_by_postcomposition(xi, k=3, samples=200)
    assert 0 <= red.sample_gap < 0.05 * red.value


def test_reduction_rejects_small_k():
    with pytest.raises(ContractError):
        reduce_frobenius_by_postcomposition(np.ones((3, 2)), k=1)


def test_reduction_is_deterministic():
    xi = np.arange(6.0).reshape(3, 2)
    a = reduce_frobenius_by_postcomposition(xi, k=3, seed=9)
    b = reduce_frobenius_by_postcomposition(xi, k=3, seed=9)
    assert a.sampled_max == b.sampled_max


def test_transport_same_base_and_flat():
    h = flat(np.array([[1.0, 2.0], [3.0, 4.0]]))
    moved = transport_hom(h, [2.0, 1.0], [-1.0, 5.0])
    np.testing.assert_array_equal(moved.matrix, h.matrix)
    np.testing.assert_allclose(moved.ambient(), h.ambient(), atol=1e-15)
    s2 = Sphere(2)
    e = HomElement.at(s2, s2, [1.0, 0, 0], [0, 0, 1.0], [[1.0, 2.0], [0.5, -1.0]])
    same = transport_hom(e, e.base_x, e.base_y)
    np.testing.assert_allclose(same.ambient(), e.ambient(), atol=1e-14)


def test_transport_preserves_norms_on_sphere():
    s2 = Sphere(2)
    rng = np.random.default_rng(5)
    for _ in range(100):
        x, y, x2, y2 = (s2.random_point(rng) for _ in range(4))
        h = HomElement.at(s2, s2, x, y, rng.standard_normal((2, 2)))
        moved = transport_hom(h, x2, y2)
        assert frobenius_norm(moved) == pytest.approx(frobenius_norm(h), abs=1e-12)
        assert operator_norm(moved.reframe()) == pytest.approx(operator_norm(h), abs=1e-12)


def test_transport_ambient_matches_composition():
    # P_N o xi o P_M^{-1} in ambient form
    s2 = Sphere(2)
    rng = np.random.default_rng(6)
    x, y, x2, y2 = (s2.random_point(rng) for _ in range(4))
    h = HomElement.at(s2, s2, x, y, rng.standard_normal((2, 2)))
    moved = transport_hom(h, x2, y2)
    v2 = s2.random_tangent(rng, x2)
    expected = s2.transport(y, y2, h.ambient() @ s2.transport(x2, x, v2))
    np.testing.assert_allclose(moved.ambient() @ v2, expected, atol=1e-12)


def test_transport_antipodal_raises():
    s2 = Sphere(2)
    h = HomElement.at(s2, s2, [0, 0, 1.0], [0, 0, 1.0], np.eye(2))
    with pytest.raises(AntipodalError):
        transport_hom(h, [0, 0, 1.0], [0, 0, -1.0])
