"""
Explicit counterexample families comparing the Sobolev distances.

Each family produces one :class:`FamilyResult` per scale parameter. Grid
values come from :func:`sobolev_distance` on maps sampled with their analytic
derivatives; closed-form integrals are evaluated independently with composite
Gauss-Legendre quadrature so the two can be compared.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bundle_metrics import BundlePath, CHEEGER_GROMOLL, path_length, transport_along_polyline
from .errors import ContractError
from .manifolds import Circle, DiskDomain, Euclidean, IntervalDomain, Sphere
from .sobolev_maps import (DistanceResult, SampledMap, check_exponent, integrate,
                           pointwise_distance, sobolev_distance, sobolev_energy, weak_derivative)

BUMP_AMPLITUDE = 4.0
EXCURSION_AMPLITUDE = 0.49 * math.pi
DEFAULT_LAMBDAS = (1.0, 0.3, 0.1, 0.03, 0.01)
DISK_LAMBDAS = (0.2, 0.1, 0.05)
DEFAULT_ELLS = (4, 16, 64, 256)

CSV_COLUMNS = ("family", "p", "parameter", "delta_sasaki", "sasaki_is_bound", "delta_cg",
               "cg_is_bound", "delta_iota", "delta_chiron", "closed_form_bound")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def composite_gauss_legendre(f, a, b, panels=256):
    """Integral of a vectorized ``f`` over [a, b] with 24-point rules on equal panels."""
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return float(np.sum(half * _GL_W * f(mid + half * _GL_X)))


@dataclass(frozen=True)
class FamilyResult:
    family: str
    p: float
    parameter: float
    sasaki: DistanceResult
    cheeger_gromoll: DistanceResult
    iota: DistanceResult
    chiron: DistanceResult
    closed_form_bound: float
    extras: dict = field(default_factory=dict, compare=False)

    def row(self) -> list:
        f = _fmt
        return [self.family, f(self.p), f(self.parameter),
                f(self.sasaki.value), _flag(self.sasaki.is_bound),
                f(self.cheeger_gromoll.value), _flag(self.cheeger_gromoll.is_bound),
                f(self.iota.value), f(self.chiron.value), f(self.closed_form_bound)]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _flag(b) -> str:
    return "true" if b else "false"


def write_family_csv(results, target=None, delimiter=","):
    """Write results with the fixed column schema; returns the text when ``target`` is None."""
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        writer.writerow(r.row())
    text = buf.getvalue()
    if target is None:
        return text
    with open(target, "w", newline="") as fh:
        fh.write(text)
    return text


def _check_lambdas(lambdas):
    lambdas = [float(x) for x in lambdas]
    if not lambdas or any(not math.isfinite(x) or x <= 0 for x in lambdas):
        raise ContractError("lambdas must be positive and finite")
    return lambdas


def _all_distances(u, v, p):
    return {kind: sobolev_distance(u, v, kind, p)
            for kind in ("sasaki", "cheeger_gromoll", "iota", "chiron")}


def _result(family, p, parameter, dists, bound, extras, sasaki=None):
    return FamilyResult(family, p, parameter, sasaki or dists["sasaki"], dists["cheeger_gromoll"],
                        dists["iota"], dists["chiron"], bound, extras)


# -- family 1: Cheeger-Gromoll against Sasaki, flat target -----------------

def bump(s, amplitude=BUMP_AMPLITUDE):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, amplitude * (1 - s * s) ** 2, 0.0)


def bump_derivative(s, amplitude=BUMP_AMPLITUDE):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, -4.0 * amplitude * s * (1 - s * s), 0.0)


def _bump_maps(lam, n, nodes, amplitude, sign):
    domain = IntervalDomain(-lam, lam)

    def values(t):
        out = np.zeros(t.shape[:-1] + (n,))
        out[..., 0] = sign * bump(t[..., 0] / lam, amplitude)
        return out

    def derivative(t):
        out = np.zeros(t.shape[:-1] + (n, 1))
        out[..., 0, 0] = sign * bump_derivative(t[..., 0] / lam, amplitude) / lam
        return out

    return SampledMap.sample(domain, Euclidean(n), values, nodes, derivative)


def _rotation_path_lengths(u: SampledMap, steps: int, chunk: int = 2048):
    """G^CG length per node of the path (y, L) -> (-y, -L) rotating L through e_2."""
    du = weak_derivative(u)
    y = du.base_y
    col = du.ambient()[..., 0]  # u' as an ambient vector, along e_1
    tau = np.linspace(0.0, 1.0, steps + 1)[:, None, None]
    e1 = np.zeros(y.shape[-1]); e1[0] = 1.0
    e2 = np.zeros(y.shape[-1]); e2[1] = 1.0
    out = np.empty(len(du))
    for lo in range(0, len(du), chunk):
        sl = slice(lo, lo + chunk)
        r = col[sl, 0][None, :, None]
        xs = np.broadcast_to(du.base_x[sl], (steps + 1,) + du.base_x[sl].shape)
        ys = (1 - 2 * tau) * y[sl]
        linear = (r * (np.cos(np.pi * tau) * e1 + np.sin(np.pi * tau) * e2))[..., None]
        out[sl] = path_length(CHEEGER_GROMOLL, BundlePath(u.domain, u.target, xs, ys, linear))
    return out


def family_cg_vs_sasaki(p=2.0, n=2, lambdas=DEFAULT_LAMBDAS, nodes=8192,
                        amplitude=BUMP_AMPLITUDE, path_steps=512):
    """u_lam(t) = u(t/lam) and v_lam = -u_lam in R^n with the quartic bump u = A(1-t^2)^2 e_1.

    The Cheeger-Gromoll distance stays below sqrt(4|u|_inf^2 + pi^2) (2 lam)^(1/p)
    while the exact Sasaki distance does not go to zero. Extras hold the
    Sasaki closed form, the pointwise-bound integral and the G^CG length of the
    fiber-rotation path measured by :func:`path_length`.
    """
    p = check_exponent(p)
    if n < 2:
        raise ContractError("the fiber rotation needs n >= 2")
    results = []
    for lam in _check_lambdas(lambdas):
        u = _bump_maps(lam, n, nodes, amplitude, 1.0)
        v = _bump_maps(lam, n, nodes, amplitude, -1.0)
        dists = _all_distances(u, v, p)

        a, b = lam ** (2 / p), lam ** (-2 * (1 - 1 / p))
        closed = 2 * composite_gauss_legendre(
            lambda s: (a * bump(s, amplitude) ** 2 + b * bump_derivative(s, amplitude) ** 2) ** (p / 2),
            -1.0, 1.0) ** (1 / p)

        def cg_integrand(s):
            r2 = (bump_derivative(s, amplitude) / lam) ** 2
            return (4 * bump(s, amplitude) ** 2 + np.pi ** 2 * r2 / (1 + r2)) ** (p / 2)

        cg_bound_integral = (lam * composite_gauss_legendre(cg_integrand, -1.0, 1.0)) ** (1 / p)
        rotation = _rotation_path_lengths(u, path_steps)
        cg_path = integrate(u, rotation ** p) ** (1 / p)
        bound = math.sqrt(4 * amplitude ** 2 + math.pi ** 2) * (2 * lam) ** (1 / p)
        extras = {"sasaki_closed_form": closed, "cg_integrand_bound": cg_bound_integral,
                  "cg_rotation_path": cg_path}
        results.append(_result("cg-sasaki", p, lam, dists, bound, extras))
    return results


# -- family 2: Sasaki against the embedding distance, sphere target --------

def excursion(s, amplitude=EXCURSION_AMPLITUDE):
    """Colatitude profile A (1 - s^4)^2: C^1, flat-topped, zero outside (-1, 1)."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, amplitude * (1 - s ** 4) ** 2, 0.0)


def excursion_derivative(s, amplitude=EXCURSION_AMPLITUDE):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, -8.0 * amplitude * s ** 3 * (1 - s ** 4), 0.0)


def _half_turn(n):
    """Rotation of S^n by pi in the (x_0, x_1) plane; fixes the last axis."""
    rho = np.eye(n + 1)
    rho[0, 0] = rho[1, 1] = -1.0
    return rho


def _sphere_point(n, colat, longitude):
    colat, longitude = np.broadcast_arrays(np.asarray(colat, float), np.asarray(longitude, float))
    out = np.zeros(colat.shape + (n + 1,))
    out[..., 0] = np.sin(colat) * np.cos(longitude)
    out[..., 1] = np.sin(colat) * np.sin(longitude)
    out[..., -1] = np.cos(colat)
    return out


def _excursion_maps(lam, n, nodes, amplitude, rho):
    domain = IntervalDomain(-lam, lam)

    def values(t):
        return _sphere_point(n, excursion(t[..., 0] / lam, amplitude), 0.0) @ rho.T

    def derivative(t):
        s = t[..., 0] / lam
        a = excursion(s, amplitude)
        da = excursion_derivative(s, amplitude) / lam
        col = np.zeros(s.shape + (n + 1,))
        col[..., 0] = da * np.cos(a)
        col[..., -1] = -da * np.sin(a)
        return (col @ rho.T)[..., None]

    return SampledMap.sample(domain, Sphere(n), values, nodes, derivative)


def latitude_polygon_competitor(n, colat, dcol, latitudes=33, arc_vertices=64):
    """Sasaki competitor between ``(u, e)`` and ``(rho u, D rho e)`` for the half turn rho.

    ``u`` sits at colatitude ``colat`` on the meridian of longitude 0 and ``e``
    is ``dcol`` times the unit colatitude vector (arrays over nodes). For each
    trial colatitude ``c`` the base runs down the meridian to ``c``, along a
    geodesic polygon inscribed in the latitude circle to longitude pi, and back
    up to ``rho u``. The polygon's exact holonomy and length give
    ``sqrt(L^2 + |P e - D rho e|^2)``; the minimum over ``c`` is returned. At
    ``c = pi/2`` the holonomy matches exactly and the length is ``2 pi - 2 colat``.
    """
    colat = np.asarray(colat, float)
    dcol = np.asarray(dcol, float)
    cs = np.linspace(0.0, 0.5 * np.pi, latitudes)[:, None]
    longs = np.pi * np.arange(arc_vertices + 1) / arc_vertices
    pts = [_sphere_point(n, colat[None, :] + 0 * cs, 0.0)]
    for lon in longs:
        pts.append(_sphere_point(n, cs + 0 * colat[None, :], lon))
    pts.append(_sphere_point(n, colat[None, :] + 0 * cs, np.pi))
    pts = np.stack(pts)
    frame_start = _sphere_point(n, colat + 0.5 * np.pi, 0.0)
    e = dcol[:, None] * frame_start
    moved, length = transport_along_polyline(Sphere(n), pts, np.broadcast_to(e, pts.shape[1:]))
    goal = (dcol[:, None] * _sphere_point(n, colat + 0.5 * np.pi, np.pi))[None]
    resid = moved - goal
    d = np.sqrt(length ** 2 + np.sum(resid * resid, axis=-1))
    return np.min(d, axis=0)


def family_sasaki_vs_embedding(p=2.0, n=2, lambdas=(1.0, 0.1, 0.01), nodes=4097,
                               amplitude=EXCURSION_AMPLITUDE, latitudes=33):
    """u_lam(t) = u(t/lam) on S^n and v_lam = rho o u_lam with rho a half turn fixing the pole.

    ``u`` runs out along a meridian to colatitude ``a(s) = A (1 - s^4)^2`` and
    back. The Sasaki value is the pointwise minimum of the minimizing-geodesic
    competitor and :func:`latitude_polygon_competitor`, hence an upper bound.
    ``closed_form_bound`` is 2 pi lam^(1/p); the extras also carry the bound
    2 pi (2 lam)^(1/p) that follows from the uniform pointwise estimate over a
    support of length 2 lam.
    """
    p = check_exponent(p)
    if n < 2:
        raise ContractError("matching the holonomy needs n >= 2")
    if not 0 < amplitude < 0.5 * math.pi:
        raise ContractError("amplitude must lie in (0, pi/2) to keep u and rho u non-antipodal")
    rho = _half_turn(n)
    results = []
    for lam in _check_lambdas(lambdas):
        u = _excursion_maps(lam, n, nodes, amplitude, np.eye(n + 1))
        v = _excursion_maps(lam, n, nodes, amplitude, rho)
        dists = _all_distances(u, v, p)

        s = u.grid.points()[..., 0].ravel() / lam
        polygon = latitude_polygon_competitor(n, excursion(s, amplitude),
                                              excursion_derivative(s, amplitude) / lam, latitudes)
        geodesic, _ = pointwise_distance(weak_derivative(u), weak_derivative(v), "sasaki")
        pointwise = np.minimum(polygon, geodesic)
        sasaki = DistanceResult(integrate(u, pointwise ** p) ** (1 / p), "sasaki", p, True)

        def iota_integrand(s):
            a = excursion(s, amplitude)
            da = excursion_derivative(s, amplitude)
            return (4 * np.sin(a) ** 2 + 4 * da ** 2 * np.cos(a) ** 2 / lam ** 2) ** (p / 2)

        iota_closed = (lam * composite_gauss_legendre(iota_integrand, -1.0, 1.0)) ** (1 / p)
        extras = {"iota_closed_form": iota_closed,
                  "ratio_sasaki_iota": sasaki.value / dists["iota"].value,
                  "support_bound": 2 * math.pi * (2 * lam) ** (1 / p),
                  "max_pointwise_sasaki": float(np.max(pointwise))}
        results.append(_result("sasaki-embedding", p, lam, dists,
                               2 * math.pi * lam ** (1 / p), extras, sasaki=sasaki))
    return results


# -- family 3: circle-valued maps on the disk ----------------------------

def disk_profile(d, lam, p, dim=2):
    """The three-branch angle profile phi_lam(d) and its radial derivative."""
    d = np.asarray(d, dtype=float)
    kappa = math.pi / (2 * lam ** (1 + dim / p))
    inner = d < lam
    middle = (d >= lam) & (d < 2 * lam)
    phi = np.where(inner, lam * np.sin((d - lam) * kappa),
                   np.where(middle, (d - lam) * math.pi / (2 * lam), 0.5 * math.pi))
    dphi = np.where(inner, lam * kappa * np.cos((d - lam) * kappa),
                    np.where(middle, math.pi / (2 * lam), 0.0))
    return phi, dphi


def mean_abs_cos_power(p):
    """Mean of |cos|^p over a period."""
    return math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))


def disk_sasaki_limit(p, dim=2):
    """lambda -> 0 limit of 2 (int |D phi_lam|^p)^(1/p) over the inner core d < lam (dim 2)."""
    if dim != 2:
        raise ContractError("the limit constant is implemented for the 2-disk")
    return 2 * (math.pi * (math.pi / 2) ** p * mean_abs_cos_power(p)) ** (1 / p)


def _disk_maps(lam, p, nodes, radius, angular, sign):
    domain = DiskDomain(radius)

    def values(x):
        phi, _ = disk_profile(np.linalg.norm(x, axis=-1), lam, p)
        return np.stack([sign * np.cos(phi), np.sin(phi)], axis=-1)

    def derivative(x):
        phi, dphi = disk_profile(np.linalg.norm(x, axis=-1), lam, p)
        radial = np.stack([-sign * dphi * np.sin(phi), dphi * np.cos(phi)], axis=-1)
        return np.stack([radial, np.zeros_like(radial)], axis=-1)

    return SampledMap.sample(domain, Circle(), values, (nodes, angular), derivative)


def family_s1_disk(p=1.0, lambdas=DISK_LAMBDAS, nodes=32769, radius=1.0, angular_nodes=4):
    """u_lam = (cos phi_lam, sin phi_lam) and v_lam = (-cos phi_lam, sin phi_lam) on a disk.

    The maps are radial, so a few angular nodes integrate the angle exactly.
    ``delta_sasaki`` is the exact flat-target value (geodesic base distance on
    the circle); the extras hold the chord form
    2 (int (cos^2 phi + |D phi|^2)^(p/2))^(1/p), the inner-core and annulus
    contributions and the lambda -> 0 limit, which is ``closed_form_bound``.
    """
    p = check_exponent(p)
    if not 1 <= p < 2:
        raise ContractError("this family needs p in [1, dim M) = [1, 2)")
    lambdas = _check_lambdas(lambdas)
    if radius <= 2 * max(lambdas):
        raise ContractError("disk radius must exceed 2 max(lambda)")
    limit = disk_sasaki_limit(p)
    results = []
    for lam in lambdas:
        u = _disk_maps(lam, p, nodes, radius, angular_nodes, 1.0)
        v = _disk_maps(lam, p, nodes, radius, angular_nodes, -1.0)
        dists = _all_distances(u, v, p)
        r = np.linalg.norm(u.grid.points(), axis=-1)
        phi, dphi = disk_profile(r, lam, p)
        chord = (np.cos(phi) ** 2 + dphi ** 2) ** (p / 2)
        extras = {"sasaki_chord_form": 2 * integrate(u, chord) ** (1 / p),
                  "core_part": 2 * integrate(u, np.where(r < lam, chord, 0.0)) ** (1 / p),
                  "annulus_part": 2 * integrate(u, np.where(r >= lam, chord, 0.0)) ** (1 / p),
                  "sasaki_limit": limit}
        results.append(_result("s1-disk", p, lam, dists, limit, extras))
    return results


# -- Chiron non-completeness -------------------------------------------

def sawtooth(t, ell):
    """dist(t, Z/ell) and its derivative (+-1; +1 at the kinks)."""
    x = np.asarray(t, dtype=float) * ell
    offset = x - np.round(x)
    return np.abs(offset) / ell, np.where(offset < 0, -1.0, 1.0)


def _chiron_map(ell, nodes):
    domain = IntervalDomain(0.0, 1.0)

    def values(t):
        s, _ = sawtooth(t[..., 0], ell)
        return np.stack([np.cos(s), np.sin(s)], axis=-1)

    def derivative(t):
        _, ds = sawtooth(t[..., 0], ell)
        return ds[..., None, None]

    return SampledMap.sample(domain, Circle(), values, nodes, derivative)


@dataclass(frozen=True)
class ChironReport:
    p: float
    ells: tuple
    arc_length: float
    cauchy: np.ndarray
    derivative_terms: np.ndarray
    energies: np.ndarray
    limit_energy: float
    rows: list

    def cauchy_csv(self, delimiter=",") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["ell", "energy"] + [f"delta_chiron_ell_{e}" for e in self.ells])
        for i, ell in enumerate(self.ells):
            writer.writerow([str(ell), _fmt(self.energies[i])] + [_fmt(x) for x in self.cauchy[i]])
        return buf.getvalue()


def chiron_cauchy_not_convergent(p=1.0, ells=DEFAULT_ELLS, nodes=8192, arc_length=1.0):
    """u_ell(t) = gamma(dist(t, Z/ell)) on (0, 1) with gamma a unit-speed arc of the circle.

    The family is Cauchy for the Chiron distance, its derivative moduli are
    identically one, and it converges uniformly to the constant gamma(0),
    whose energy is zero. Rows compare each u_ell with that limit;
    ``closed_form_bound`` is |dist(., Z/ell)|_p + 1, a Minkowski bound on the
    Chiron distance to the limit.
    """
    p = check_exponent(p)
    ells = tuple(int(e) for e in ells)
    if not ells or min(ells) < 1 or list(ells) != sorted(set(ells)):
        raise ContractError("ells must be positive and strictly increasing")
    if not 0 < arc_length <= math.pi:
        raise ContractError("arc length must lie in (0, pi]")
    if 1.0 / (2 * ells[0]) > arc_length:
        raise ContractError("the arc is too short for the coarsest sawtooth")
    maps = [_chiron_map(ell, nodes) for ell in ells]
    k = len(ells)
    cauchy = np.zeros((k, k))
    deriv = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            cauchy[i, j] = cauchy[j, i] = sobolev_distance(maps[i], maps[j], "chiron", p).value
            gap = np.abs(weak_derivative(maps[i]).norms() - weak_derivative(maps[j]).norms())
            deriv[i, j] = deriv[j, i] = integrate(maps[i], gap ** p) ** (1 / p)
    energies = np.array([sobolev_energy(m, p) for m in maps])
    limit = maps[0].with_values(np.broadcast_to(np.array([1.0, 0.0]), maps[0].values.shape).copy(),
                                np.zeros_like(maps[0].derivative))
    rows = []
    for ell, m in zip(ells, maps):
        dists = _all_distances(m, limit, p)
        saw_norm = (1.0 / (2 * ell)) / (p + 1) ** (1 / p)
        rows.append(_result("chiron", p, ell, dists, saw_norm + 1.0, {"energy": sobolev_energy(m, p)}))
    return ChironReport(p, ells, float(arc_length), cauchy, deriv, energies,
                        sobolev_energy(limit, p), rows)
