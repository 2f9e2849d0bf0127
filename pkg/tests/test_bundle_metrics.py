import math

import numpy as np
import pytest
from scipy.integrate import quad

from sobolev_lab.bundle_metrics import (CHEEGER_GROMOLL, DEGENERATE, SASAKI, BundlePath, BundleTangent,
                                        check_cg_le_sasaki, check_strong_concordance,
                                        cheeger_gromoll_upper_bound, eval_lambda_metric,
                                        fiber_competitor_lengths, lambda_ladder_report, lambda_quadratic,
                                        metric_differential_of_norm, path_length, sasaki_competitor_polyline,
                                        sasaki_distance_flat, sasaki_distance_upper_bound)
from sobolev_lab.errors import ContractError, DegenerateMetricError
from sobolev_lab.hom_bundle import HomElement
from sobolev_lab.manifolds import Euclidean, IntervalDomain, Sphere

R1 = Euclidean(1)
R2 = Euclidean(2)


def test_metric_examples():
    e = HomElement.at(R2, R2, [0, 0], [0, 0], np.eye(2))
    horiz = BundleTangent(e, ([3.0, 0.0], [0.0, 4.0]), np.zeros((2, 2)))
    for lam in (0.0, 0.5, 1.0):
        assert eval_lambda_metric(lam, horiz) == pytest.approx(25.0, abs=1e-15)
    lift = BundleTangent.vertical_lift(e)
    for lam in (0.3, 0.5, 1.0):
        assert eval_lambda_metric(lam, lift) == pytest.approx(2.0, abs=1e-14)


def test_sasaki_adds_horizontal_and_frobenius_parts():
    e = HomElement.at(R2, R2, [0, 0], [0, 0], np.zeros((2, 2)))
    nu = BundleTangent(e, ([1.0, 1.0], [1.0, 0.0]), np.array([[1.0, 2.0], [0.0, 2.0]]))
    assert eval_lambda_metric(SASAKI, nu) == pytest.approx(12.0)


def test_degenerate_metric():
    zero = HomElement.at(R2, R2, [0, 0], [0, 0])
    nu = BundleTangent.vertical_lift(zero, np.eye(2))
    with pytest.raises(DegenerateMetricError):
        eval_lambda_metric(DEGENERATE, nu)
    assert eval_lambda_metric(DEGENERATE, nu.horizontal_projection()) == 0.0
    # at lambda = 0 a vertical move orthogonal to the footpoint has zero length
    e = HomElement.at(R2, R2, [0, 0], [0, 0], np.diag([1.0, 0.0]))
    assert eval_lambda_metric(DEGENERATE, BundleTangent.vertical_lift(e, np.diag([0.0, 1.0]))) == 0.0


def test_lambda_out_of_range():
    with pytest.raises(ContractError):
        lambda_quadratic(1.5, 1.0, 1.0, 0.0, 1.0)


def test_homogeneity_and_differential():
    rng = np.random.default_rng(0)
    s2 = Sphere(2)
    for _ in range(50):
        e = HomElement.at(R2, s2, rng.standard_normal(2), s2.random_point(rng), rng.standard_normal((2, 2)))
        nu = BundleTangent(e, (rng.standard_normal(2), s2.random_tangent(rng, e.base_y)),
                           rng.standard_normal((2, 2)))
        t = rng.uniform(-3, 3)
        for lam in (0.0, 0.5, 1.0):
            assert eval_lambda_metric(lam, nu.scaled(t)) == pytest.approx(t * t * eval_lambda_metric(lam, nu),
                                                                          rel=1e-12)
        ee = float(np.sum(e.matrix ** 2))
        assert metric_differential_of_norm(nu) ** 2 <= 4 * ee * eval_lambda_metric(CHEEGER_GROMOLL, nu) + 1e-9


def _cg_flip_integrand(tau, a2):
    s = (1 - 2 * tau) ** 2
    return math.sqrt((4 * a2 + 4 * s * a2 * a2) / (1 + s * a2))


@pytest.mark.parametrize("a", [0.1, 1.0, 3.0])
def test_cg_straight_fiber_segment_against_quad(a):
    # 1x1 fiber, straight line from a to -a over a fixed base point
    oracle = quad(_cg_flip_integrand, 0.0, 1.0, args=(a * a,), epsabs=1e-13)[0]
    straight, rotation = fiber_competitor_lengths(CHEEGER_GROMOLL, 0.0, [[a]], [[-a]])
    assert float(straight) == pytest.approx(oracle, rel=1e-10)
    assert math.isinf(float(rotation))
    tau = np.linspace(0.0, 1.0, 4001)
    path = BundlePath(R1, R1, np.zeros((tau.size, 1)), np.zeros((tau.size, 1)),
                      (a * (1 - 2 * tau))[:, None, None])
    assert path_length(CHEEGER_GROMOLL, path) == pytest.approx(oracle, rel=1e-6)


def test_rotation_competitor_matches_path_length():
    # rotate a unit 2x1 fiber element by pi/2 while the base moves 0.5
    f1 = np.array([[1.0], [0.0]])
    f2 = np.array([[0.0], [2.0]])
    _, rotation = fiber_competitor_lengths(CHEEGER_GROMOLL, 0.5, f1, f2)
    tau = np.linspace(0.0, 1.0, 8001)
    r = 1 + tau
    lin = np.stack([r * np.cos(tau * np.pi / 2), r * np.sin(tau * np.pi / 2)], axis=-1)[..., None]
    dom = Euclidean(1)
    path = BundlePath(dom, R2, 0.5 * tau[:, None], np.zeros((tau.size, 2)), lin)
    assert path_length(CHEEGER_GROMOLL, path) == pytest.approx(float(rotation), rel=1e-6)


def test_path_length_examples():
    n = 33
    e = np.ones((n, 1, 1))
    still = BundlePath(R1, R1, np.zeros((n, 1)), np.zeros((n, 1)), e)
    assert path_length(SASAKI, still) == 0.0
    tau = np.linspace(0, 1, n)
    moving = BundlePath(R1, R2, 2.5 * tau[:, None], np.zeros((n, 2)), np.ones((n, 2, 1)))
    for lam in (0.0, 0.5, 1.0):
        assert path_length(lam, moving) == pytest.approx(2.5, abs=1e-14)


def test_path_length_at_least_base_length():
    s2 = Sphere(2)
    rng = np.random.default_rng(7)
    tau = np.linspace(0, 1, 65)
    y0 = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 1.2, 0.4])
    ys = s2.exp(np.broadcast_to(y0, (65, 3)), tau[:, None] * v)
    lin = rng.standard_normal((65, 3, 1))
    path = BundlePath.from_elements(HomElement.from_ambient(R1, s2, [0.0], y, l) for y, l in zip(ys, lin))
    base = float(np.linalg.norm(v))
    for lam in (0.0, 0.5, 1.0):
        assert path_length(lam, path) >= base - 1e-12


def test_flat_sasaki_345():
    e1 = HomElement.at(R1, R1, [0.0], [0.0], [[0.0]])
    e2 = HomElement.at(R1, R1, [3.0], [0.0], [[4.0]])
    assert sasaki_distance_flat(e1, e2) == pytest.approx(5.0, abs=1e-15)
    assert sasaki_distance_upper_bound(e1, e2) == sasaki_distance_flat(e1, e2)
    assert cheeger_gromoll_upper_bound(e1, e2) <= 5.0 + 1e-12


def test_flat_sasaki_rejects_curved():
    s2 = Sphere(2)
    e = HomElement.at(R1, s2, [0.0], [1.0, 0, 0])
    with pytest.raises(ContractError):
        sasaki_distance_flat(e, e)


def test_polyline_competitor():
    s2 = Sphere(2)
    dom = IntervalDomain(0.0, 1.0)
    y1 = np.array([1.0, 0.0, 0.0])
    y2 = np.array([0.0, 1.0, 0.0])
    e1 = HomElement.at(dom, s2, [0.5], y1, [[0.3], [1.0]])
    e2 = HomElement.at(dom, s2, [0.5], y2, [[-0.2], [0.4]])
    t = np.linspace(0, np.pi / 2, 9)
    direct = np.stack([np.cos(t), np.sin(t), 0 * t], axis=-1)
    assert sasaki_competitor_polyline(e1, e2, direct) == pytest.approx(sasaki_distance_upper_bound(e1, e2),
                                                                      rel=1e-12)
    # the long way round the equator: length 3 pi / 2
    t = np.linspace(0, -3 * np.pi / 2, 13)
    around = np.stack([np.cos(t), np.sin(t), 0 * t], axis=-1)
    long = sasaki_competitor_polyline(e1, e2, around)
    assert long >= 1.5 * np.pi
    with pytest.raises(ContractError):
        sasaki_competitor_polyline(e1, e2, direct[::-1])


def test_concordance_clauses():
    for lam in (0.0, 0.25, 0.5, 1.0):
        report = check_strong_concordance(lam, samples=5000, seed=3)
        assert report.passed(1e-12), report


def test_cg_below_sasaki():
    assert check_cg_le_sasaki(samples=5000, seed=4) <= 1e-12


def test_ladder_report_keys():
    report = lambda_ladder_report(samples=2000, seed=5)
    assert report["samples"] > 0
    assert report["max_gcg_minus_gs"] <= 1e-9
