"""
The lambda-family of metrics on T*M (x) TN with its tensor-product connection.

For a bundle tangent ``nu`` with horizontal part ``h``, connection part ``k``
and footpoint ``e``::

    G^lam(nu) = |h|^2 + (lam <k, k> + (1 - lam) <k, e>^2) / (lam + (1 - lam) <e, e>)

with ``<.,.>`` the Frobenius inner product. ``lam = 1`` is the Sasaki metric,
``lam = 1/2`` the Cheeger-Gromoll metric and ``lam = 0`` the degenerate limit.

Bundle geodesics are never solved. Distances come out as exact values in the
flat case, or as lengths of explicit competitor paths, which are upper bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateMetricError
from .hom_bundle import DEFAULT_SEED, HomElement, transport_ambient
from .manifolds import Euclidean, ManifoldModel, Sphere

SASAKI = 1.0
CHEEGER_GROMOLL = 0.5
DEGENERATE = 0.0

# Gauss-Legendre nodes on [0, 1] for closed-form competitor speeds
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ContractError(f"lambda must lie in [0, 1], got {lam}")


def lambda_quadratic(lam, hh, kk, ke, ee):
    """Vectorized G^lam from the four scalar invariants.

    ``hh = |h|^2``, ``kk = <k, k>``, ``ke = <k, e>``, ``ee = <e, e>``.
    """
    _check_lambda(lam)
    hh, kk, ke, ee = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (hh, kk, ke, ee)))
    num = lam * kk + (1.0 - lam) * ke * ke
    den = lam + (1.0 - lam) * ee
    if lam == 0.0:
        bad = (den == 0.0) & (kk > 0.0)
        if np.any(bad):
            raise DegenerateMetricError("degenerate metric is undefined for vertical motion at the zero section")
        safe = np.where(den == 0.0, 1.0, den)
        return hh + np.where(den == 0.0, 0.0, num / safe)
    return hh + num / den


@dataclass(frozen=True)
class BundleTangent:
    """Tangent vector to T*M (x) TN at ``base_element``.

    ``horizontal`` is a pair of ambient tangent vectors at the base points of M
    and N; ``vertical`` is the connection part as a matrix in the frames of
    ``base_element``.
    """

    base_element: HomElement
    horizontal: tuple
    vertical: np.ndarray

    def __post_init__(self):
        e = self.base_element
        hx, hy = (np.asarray(v, dtype=float) for v in self.horizontal)
        e.domain.check_tangent(e.base_x, hx)
        e.target.check_tangent(e.base_y, hy)
        if np.shape(self.vertical) != e.matrix.shape:
            raise ContractError("vertical part must have the shape of the base matrix")

    @classmethod
    def vertical_lift(cls, e: HomElement, direction=None) -> "BundleTangent":
        """V_e(direction); the direction defaults to ``e`` itself."""
        d = e.matrix if direction is None else np.asarray(direction, dtype=float)
        zx = np.zeros(e.domain.ambient_dim)
        zy = np.zeros(e.target.ambient_dim)
        return cls(e, (zx, zy), d.copy())

    def horizontal_projection(self) -> "BundleTangent":
        return BundleTangent(self.base_element, self.horizontal, np.zeros_like(self.vertical))

    def scaled(self, t: float) -> "BundleTangent":
        hx, hy = self.horizontal
        return BundleTangent(self.base_element, (t * np.asarray(hx), t * np.asarray(hy)), t * self.vertical)

    def invariants(self):
        hx, hy = (np.asarray(v, dtype=float) for v in self.horizontal)
        e = self.base_element.matrix
        k = np.asarray(self.vertical, dtype=float)
        return (float(hx @ hx + hy @ hy), float(np.sum(k * k)),
                float(np.sum(k * e)), float(np.sum(e * e)))


def eval_lambda_metric(lam: float, nu: BundleTangent) -> float:
    return float(lambda_quadratic(lam, *nu.invariants()))


def metric_differential_of_norm(nu: BundleTangent) -> float:
    """D g_E(nu) = 2 <K(nu), pi(nu)> for a metric connection."""
    _, _, ke, _ = nu.invariants()
    return 2.0 * ke


# -- paths -----------------------------------------------------------------

@dataclass(frozen=True)
class BundlePath:
    """Samples of a path in T*M (x) TN at uniform parameters on [0, 1].

    Arrays have a leading sample axis; any further leading axes are batch axes
    so that many paths can be measured at once. ``linear`` holds ambient maps.
    """

    domain: ManifoldModel
    target: ManifoldModel
    xs: np.ndarray
    ys: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        if self.xs.shape[0] < 2:
            raise ContractError("a bundle path needs at least two samples")
        if not (self.xs.shape[0] == self.ys.shape[0] == self.linear.shape[0]):
            raise ContractError("inconsistent sample counts")

    @classmethod
    def from_elements(cls, elements):
        elements = list(elements)
        if len(elements) < 2:
            raise ContractError("a bundle path needs at least two samples")
        e0 = elements[0]
        return cls(e0.domain, e0.target,
                   np.stack([e.base_x for e in elements]),
                   np.stack([e.base_y for e in elements]),
                   np.stack([e.ambient() for e in elements]))

    def __len__(self):
        return self.xs.shape[0]

    def element(self, i) -> HomElement:
        return HomElement.from_ambient(self.domain, self.target, self.xs[i], self.ys[i], self.linear[i])


def _segment_speed_sq(lam, domain, target, x0, y0, l0, x1, y1, l1, dtau):
    """G^lam of each segment's difference-quotient velocity, footpoint at the midpoint.

    The end value is transported back to the start; the fiber footpoint is the
    mean of the two, so the radial part <k, e> is exactly (|l1|^2 - |l0|^2) / (2 dtau).
    """
    hx = domain.log(x0, x1) / dtau
    hy = target.log(y0, y1) / dtau
    back = transport_ambient(domain, target, x1, y1, x0, y0, l1)
    k = (back - l0) / dtau
    e = 0.5 * (back + l0)
    hh = np.sum(hx * hx, axis=-1) + np.sum(hy * hy, axis=-1)
    kk = np.sum(k * k, axis=(-2, -1))
    ke = np.sum(k * e, axis=(-2, -1))
    ee = np.sum(e * e, axis=(-2, -1))
    return lambda_quadratic(lam, hh, kk, ke, ee)


def path_length(lam: float, path: BundlePath):
    """Length of a sampled path under G^lam.

    Each segment contributes the speed of its difference quotient evaluated at
    the segment midpoint (vertical parts compared after transport back to the
    start), a midpoint rule that is second-order accurate on smooth paths.
    Returns a float, or an array over the batch axes.
    """
    _check_lambda(lam)
    n = len(path)
    dtau = 1.0 / (n - 1)
    xs, ys, ls = path.xs, path.ys, path.linear
    speed_sq = _segment_speed_sq(lam, path.domain, path.target,
                                 xs[:-1], ys[:-1], ls[:-1], xs[1:], ys[1:], ls[1:], dtau)
    total = np.sum(dtau * np.sqrt(speed_sq), axis=0)
    return float(total) if np.ndim(total) == 0 else total


# -- Sasaki distance ------------------------------------------------------

def _require_same_bundle(e1, e2):
    if e1.domain != e2.domain or e1.target != e2.target:
        raise ContractError("elements live in different bundles")


def sasaki_distance_flat(e1: HomElement, e2: HomElement) -> float:
    """Exact Sasaki distance when both M and N are flat."""
    _require_same_bundle(e1, e2)
    if not (e1.domain.is_flat and e1.target.is_flat):
        raise ContractError("sasaki_distance_flat needs flat M and N")
    return float(np.sqrt(_sasaki_competitor_sq(e1.domain, e1.target,
                                               e1.base_x, e1.base_y, e1.ambient(),
                                               e2.base_x, e2.base_y, e2.ambient())))


def sasaki_distance_upper_bound(e1: HomElement, e2: HomElement) -> float:
    """Sasaki competitor along the minimizing base geodesic.

    Evaluates ``|e1 - P(e2)|^2 + length(gamma)^2`` with ``gamma`` the minimizing
    geodesic of M x N and ``P`` transport back along it. This is never below
    the Sasaki distance and equals it when M and N are flat.
    """
    _require_same_bundle(e1, e2)
    return float(np.sqrt(_sasaki_competitor_sq(e1.domain, e1.target,
                                               e1.base_x, e1.base_y, e1.ambient(),
                                               e2.base_x, e2.base_y, e2.ambient())))


def _sasaki_competitor_sq(domain, target, x1, y1, l1, x2, y2, l2):
    back = transport_ambient(domain, target, x2, y2, x1, y1, l2)
    diff = l1 - back
    return (domain.dist(x1, x2) ** 2 + target.dist(y1, y2) ** 2
            + np.sum(diff * diff, axis=(-2, -1)))


def transport_along_polyline(manifold: ManifoldModel, points, v):
    """Transport ``v`` along the geodesic polygon through ``points``.

    ``points`` has shape ``(K, ..., ambient)``; ``v`` is tangent at
    ``points[0]`` (extra trailing vectors may be stacked before the last axis
    as ``(..., j, ambient)``). Returns the transported vectors and the polygon
    length. The polygon is itself an admissible piecewise-geodesic path, so both
    outputs are exact for it.
    """
    points = np.asarray(points, dtype=float)
    length = 0.0
    v = np.asarray(v, dtype=float)
    for a, b in zip(points[:-1], points[1:]):
        if v.shape == a.shape:
            v = manifold.transport(a, b, v)
        else:
            v = v @ np.swapaxes(manifold.transport_matrix(a, b), -1, -2)
        length = length + manifold.dist(a, b)
    return v, length


def sasaki_competitor_polyline(e1: HomElement, e2: HomElement, target_points) -> float:
    """Sasaki competitor along a chosen geodesic polygon in N (base of M fixed).

    ``target_points`` runs from ``e1.base_y`` to ``e2.base_y``. The value is
    ``sqrt(|e1 - P(e2)|^2 + L^2)`` with ``P`` transport back along the polygon.
    """
    _require_same_bundle(e1, e2)
    if not np.allclose(e1.base_x, e2.base_x):
        raise ContractError("polyline competitor keeps the domain point fixed")
    pts = np.asarray(target_points, dtype=float)
    if not (np.allclose(pts[0], e1.base_y) and np.allclose(pts[-1], e2.base_y)):
        raise ContractError("polygon must join the two target base points")
    cols = e2.ambient().T  # columns of the ambient map, as row vectors
    back, length = transport_along_polyline(e1.target, pts[::-1], cols)
    diff = e1.ambient() - back.T
    return float(np.sqrt(np.sum(diff * diff) + length ** 2))


# -- Cheeger-Gromoll and general lambda competitors -----------------------

def fiber_competitor_lengths(lam, base_length, f1, f2, rotate=True):
    """G^lam length of explicit competitor paths between two fiber elements.

    The base moves along a constant-speed curve of length ``base_length`` while
    the fiber element, written in the parallel frame of that curve, goes from
    ``f1`` to ``f2`` (arrays ``(..., n, m)``) either

    * along the straight segment, or
    * by interpolating the norm linearly and rotating the direction along the
      great circle of the Frobenius sphere (``rotate=True``; needs a fiber of
      dimension >= 2 when the directions are opposite).

    Because the connection is metric, ``|K|``, ``<K, e>`` and ``|e|`` along such a
    path only depend on the interpolation in the fiber. The length integral
    uses 64-point Gauss-Legendre quadrature. Returns ``(straight, rotation)``;
    ``rotation`` is ``inf`` where it is not realizable.
    """
    _check_lambda(lam)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    d2 = np.asarray(base_length, dtype=float) ** 2
    tau = _GL_NODES.reshape((-1,) + (1,) * (f1.ndim - 2))

    delta = f2 - f1
    dd = np.sum(delta * delta, axis=(-2, -1))
    d1 = np.sum(delta * f1, axis=(-2, -1))
    n1 = np.sum(f1 * f1, axis=(-2, -1))
    ee = n1 + 2 * tau * d1 + tau * tau * dd
    ke = d1 + tau * dd
    g = lambda_quadratic(lam, d2, dd, ke, ee)
    straight = np.tensordot(_GL_WEIGHTS, np.sqrt(g), axes=1)
    if not rotate:
        return straight, np.full_like(straight, np.inf)

    r1 = np.sqrt(n1)
    r2 = np.sqrt(np.sum(f2 * f2, axis=(-2, -1)))
    both = (r1 > 0) & (r2 > 0)
    cosang = np.sum(f1 * f2, axis=(-2, -1)) / np.where(both, r1 * r2, 1.0)
    angle = np.where(both, np.arccos(np.clip(cosang, -1.0, 1.0)), 0.0)
    fiber_dim = f1.shape[-1] * f1.shape[-2]
    realizable = np.ones_like(angle, dtype=bool) if fiber_dim >= 2 else (angle < np.pi - 1e-12)
    rdot = r2 - r1
    r = r1 + tau * rdot
    g = lambda_quadratic(lam, d2, rdot * rdot + r * r * angle * angle, r * rdot, r * r)
    rotation = np.tensordot(_GL_WEIGHTS, np.sqrt(g), axes=1)
    rotation = np.where(realizable, rotation, np.inf)
    return straight, rotation


def cheeger_gromoll_upper_bound(e1: HomElement, e2: HomElement) -> float:
    """Cheeger-Gromoll length of the better of the straight and rotation competitors."""
    _require_same_bundle(e1, e2)
    value = _lambda_upper_bound(CHEEGER_GROMOLL, e1.domain, e1.target,
                                e1.base_x, e1.base_y, e1.ambient(),
                                e2.base_x, e2.base_y, e2.ambient())
    return float(value)


def _lambda_upper_bound(lam, domain, target, x1, y1, l1, x2, y2, l2):
    base = np.sqrt(domain.dist(x1, x2) ** 2 + target.dist(y1, y2) ** 2)
    back = transport_ambient(domain, target, x2, y2, x1, y1, l2)
    straight, rotation = fiber_competitor_lengths(lam, base, l1, back)
    return np.minimum(straight, rotation)


# -- property checks -----------------------------------------------------

@dataclass(frozen=True)
class ConcordanceReport:
    lam: float
    samples: int
    seed: int
    projection_violation: float
    differential_violation: float
    vertical_lift_error: float

    @property
    def max_violation(self) -> float:
        return max(self.projection_violation, self.differential_violation, self.vertical_lift_error)

    def passed(self, tol=1e-12) -> bool:
        return self.max_violation < tol


def sample_bundle_invariants(samples: int, seed: int = DEFAULT_SEED, domain=None, target=None):
    """Random bundle tangents on T*M (x) TN, reduced to ``(hh, kk, ke, ee)``.

    Base points, horizontal vectors and frame matrices are drawn directly;
    frames are orthonormal so the Frobenius products of frame matrices are the
    bundle inner products. A quarter of the samples use a vertical part
    parallel to the footpoint and a tenth are purely horizontal so that the
    equality cases are exercised.
    """
    domain = domain or Euclidean(2)
    target = target or Sphere(2)
    rng = np.random.default_rng(seed)
    m, n = domain.intrinsic_dim, target.intrinsic_dim
    x = domain.random_point(rng, samples)
    y = target.random_point(rng, samples)
    hx = domain.random_tangent(rng, x, scale=rng.uniform(0, 3, (samples, 1)))
    hy = target.random_tangent(rng, y, scale=rng.uniform(0, 3, (samples, 1)))
    e = rng.standard_normal((samples, n, m)) * rng.uniform(0, 3, (samples, 1, 1))
    k = rng.standard_normal((samples, n, m)) * rng.uniform(0, 3, (samples, 1, 1))
    par = rng.uniform(size=samples) < 0.25
    k[par] = e[par] * rng.uniform(-2, 2, (int(par.sum()), 1, 1))
    flat = rng.uniform(size=samples) < 0.1
    k[flat] = 0.0
    hh = np.sum(hx * hx, axis=-1) + np.sum(hy * hy, axis=-1)
    return (hh, np.sum(k * k, axis=(1, 2)), np.sum(k * e, axis=(1, 2)), np.sum(e * e, axis=(1, 2)))


def check_strong_concordance(lam: float, samples: int = 10_000, seed: int = DEFAULT_SEED) -> ConcordanceReport:
    """Max violation of the three strong-concordance clauses for G^lam.

    (a) G(horizontal projection) <= G(nu); (b) (2<k, e>)^2 <= 4 |e|^2 G(nu);
    (c) G(V_e(e)) = |e|^2. Violations are measured relative to the size of the
    compared quantities (floored at one), so rounding in the equality cases
    does not register as a violation of magnitude |e|^4 * eps.
    """
    _check_lambda(lam)
    hh, kk, ke, ee = sample_bundle_invariants(samples, seed)
    if lam == 0.0:
        # clause inputs must avoid the undefined zero-footpoint vertical case
        kk = np.where(ee == 0.0, 0.0, kk)
    g = lambda_quadratic(lam, hh, kk, ke, ee)
    g_proj = lambda_quadratic(lam, hh, 0.0, 0.0, ee)
    proj = float(np.max(_relative_excess(g_proj, g)))
    diff = float(np.max(_relative_excess((2.0 * ke) ** 2, 4.0 * ee * g)))
    lift = lambda_quadratic(lam, 0.0, ee, ee, ee)
    lift_err = float(np.max(np.abs(lift - ee) / np.maximum(ee, 1.0)))
    return ConcordanceReport(lam, samples, seed, max(proj, 0.0), max(diff, 0.0), lift_err)


def check_cg_le_sasaki(samples: int = 10_000, seed: int = DEFAULT_SEED) -> float:
    """Max of G^CG(nu) - G^S(nu) over random tangents, relative to max(1, G^S)."""
    inv = sample_bundle_invariants(samples, seed)
    return float(np.max(_relative_excess(lambda_quadratic(CHEEGER_GROMOLL, *inv),
                                         lambda_quadratic(SASAKI, *inv))))


def _relative_excess(lhs, rhs):
    # (lhs - rhs) on the scale of the operands, floored at 1
    return (lhs - rhs) / np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)


def lambda_ladder_report(samples: int = 10_000, seed: int = DEFAULT_SEED):
    """Reported (not asserted) ordering G^0 <= G^(1/2) <= G^1 on samples with |e| >= 1."""
    hh, kk, ke, ee = sample_bundle_invariants(samples, seed)
    keep = ee >= 1.0
    inv = (hh[keep], kk[keep], ke[keep], ee[keep])
    g0 = lambda_quadratic(DEGENERATE, *inv)
    g_half = lambda_quadratic(CHEEGER_GROMOLL, *inv)
    g1 = lambda_quadratic(SASAKI, *inv)
    return {"samples": int(keep.sum()),
            "max_g0_minus_gcg": float(np.max(g0 - g_half)),
            "max_gcg_minus_gs": float(np.max(g_half - g1))}

