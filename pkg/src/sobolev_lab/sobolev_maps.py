"""
Sampled maps between Riemannian manifolds and their Sobolev distances.

A :class:`SampledMap` tabulates ``u: M -> N`` on a uniform chart grid of an
interval, rectangle or disk (polar chart). Derivatives are central finite
differences projected onto the tangent space of N, or an analytic field
supplied by the caller. All integrals use the trapezoidal rule with the
Riemannian volume element of the chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bundle_metrics import CHEEGER_GROMOLL, _lambda_upper_bound, _sasaki_competitor_sq
from .errors import ContractError, ResolutionError
from .hom_bundle import HomElement
from .manifolds import Euclidean, Kind, ManifoldModel

P_MIN, P_MAX = 1.0, 16.0
DISTANCE_KINDS = ("sasaki", "cheeger_gromoll", "iota", "chiron", "dot")
# neighbouring samples further apart than this cannot resolve the map
RESOLUTION_ANGLE = math.pi / 2


def check_exponent(p: float) -> float:
    p = float(p)
    if not (P_MIN <= p <= P_MAX):
        raise ContractError(f"p must lie in [{P_MIN:g}, {P_MAX:g}], got {p}")
    return p


def _trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on a domain chart.

    Intervals and rectangles use Cartesian coordinates. Disks use the polar
    chart ``(r, theta)`` with ``r`` in ``[0, R]`` (endpoints included) and
    ``theta`` periodic; the domain frame at a node is ``(e_r, e_theta)``.
    """

    domain: ManifoldModel
    shape: tuple
    axes: tuple
    spacing: tuple

    @classmethod
    def uniform(cls, domain: ManifoldModel, nodes) -> "Grid":
        counts = (nodes,) if np.isscalar(nodes) else tuple(nodes)
        counts = tuple(int(c) for c in counts)
        if domain.kind is Kind.INTERVAL:
            if len(counts) != 1:
                raise ContractError("interval grids take one node count")
        elif domain.kind is Kind.RECTANGLE:
            if len(counts) == 1:
                counts = counts * domain.intrinsic_dim
            if len(counts) != domain.intrinsic_dim:
                raise ContractError("rectangle grids take one node count per axis")
        elif domain.kind is Kind.DISK:
            if len(counts) == 1:
                counts = (counts[0], 8)
            if len(counts) != 2:
                raise ContractError("disk grids take (radial, angular) node counts")
        else:
            raise ContractError(f"{domain} is not a grid domain")
        if min(counts) < 3:
            raise ContractError("grids need at least 3 nodes per axis")

        if domain.kind is Kind.DISK:
            nr, nt = counts
            r = np.linspace(0.0, domain.radius, nr)
            t = 2.0 * np.pi * np.arange(nt) / nt
            axes = (r, t)
            spacing = (domain.radius / (nr - 1), 2.0 * np.pi / nt)
        else:
            axes = tuple(np.linspace(a, b, n) for (a, b), n in zip(domain.bounds, counts))
            spacing = tuple((b - a) / (n - 1) for (a, b), n in zip(domain.bounds, counts))
        return cls(domain, counts, axes, spacing)

    @property
    def polar(self) -> bool:
        return self.domain.kind is Kind.DISK

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def chart_coordinates(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def points(self) -> np.ndarray:
        """Ambient coordinates of the nodes, shape ``shape + (m,)``."""
        c = self.chart_coordinates()
        if self.polar:
            r, t = c[..., 0], c[..., 1]
            return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
        return c

    def frames(self) -> np.ndarray:
        m = self.domain.intrinsic_dim
        if not self.polar:
            return np.broadcast_to(np.eye(m), self.shape + (m, m)).copy()
        t = self.chart_coordinates()[..., 1]
        er = np.stack([np.cos(t), np.sin(t)], axis=-1)
        et = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        return np.stack([er, et], axis=-1)

    def weights(self) -> np.ndarray:
        """Trapezoidal weights including the volume element (``r`` on disks)."""
        if self.polar:
            wr = _trapezoid_weights(self.shape[0], self.spacing[0]) * self.axes[0]
            wt = np.full(self.shape[1], self.spacing[1])
            return np.outer(wr, wt)
        w = np.ones(())
        for n, h in zip(self.shape, self.spacing):
            w = np.multiply.outer(w, _trapezoid_weights(n, h))
        return w

    def same_as(self, other: "Grid") -> bool:
        return (self.domain == other.domain and self.shape == other.shape
                and np.allclose(self.spacing, other.spacing))


@dataclass(frozen=True, eq=False)
class SampledMap:
    """A map ``u: M -> N`` tabulated on a grid.

    ``derivative`` optionally holds the exact derivative as matrices in the
    grid's domain frames and the canonical target frames, shape
    ``grid.shape + (n, m)``. ``kink_mask`` marks nodes where the map is only
    one-sided differentiable; finite differences there use the backward value.
    """

    grid: Grid
    target: ManifoldModel
    values: np.ndarray
    derivative: Optional[np.ndarray] = None
    kink_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        expected = self.grid.shape + (self.target.ambient_dim,)
        if self.values.shape != expected:
            raise ContractError(f"values must have shape {expected}, got {self.values.shape}")
        if not np.all(self.target.contains(self.values, tol=1e-12)):
            raise ContractError(f"sampled values are not on {self.target}")
        if self.derivative is not None:
            shape = self.grid.shape + (self.target.intrinsic_dim, self.grid.domain.intrinsic_dim)
            if self.derivative.shape != shape:
                raise ContractError(f"derivative must have shape {shape}")

    @property
    def domain(self) -> ManifoldModel:
        return self.grid.domain

    @classmethod
    def sample(cls, domain, target, func, nodes, derivative=None, kinks=None) -> "SampledMap":
        """Tabulate ``func(points)`` on a uniform grid.

        ``func`` receives ambient node coordinates of shape ``grid.shape + (m,)``.
        ``derivative(points)``, if given, returns the exact derivative either as
        frame matrices ``(..., n, m)`` or as ambient columns ``(..., ambient_N, m)``
        with respect to the grid's domain frames. ``kinks(points)`` returns a
        boolean mask of nodes at a kink.
        """
        grid = Grid.uniform(domain, nodes)
        pts = grid.points()
        values = np.asarray(func(pts), dtype=float)
        if target.is_sphere_like:
            values = values / np.linalg.norm(values, axis=-1, keepdims=True)
        deriv = None
        if derivative is not None:
            deriv = _to_frame_matrices(target, values, np.asarray(derivative(pts), dtype=float))
        mask = None if kinks is None else np.asarray(kinks(pts), dtype=bool)
        return cls(grid, target, values, deriv, mask)

    def with_values(self, values, derivative=None) -> "SampledMap":
        return SampledMap(self.grid, self.target, values, derivative, self.kink_mask)


def _to_frame_matrices(target, values, d):
    n, amb = target.intrinsic_dim, target.ambient_dim
    if d.shape[-2] == n:
        return d
    if d.shape[-2] != amb:
        raise ContractError("derivative has neither frame nor ambient row count")
    cols = target.project_to_tangent(values[..., None, :], np.swapaxes(d, -1, -2))
    frames = target.tangent_frame(values)
    return np.swapaxes(frames, -1, -2) @ np.swapaxes(cols, -1, -2)


@dataclass(frozen=True, eq=False)
class DerivativeField:
    """Derivative of a sampled map, one :class:`HomElement` per node (flattened)."""

    domain: ManifoldModel
    target: ManifoldModel
    base_x: np.ndarray
    base_y: np.ndarray
    matrix: np.ndarray
    frame_x: np.ndarray
    frame_y: np.ndarray

    def __len__(self):
        return self.base_x.shape[0]

    def __getitem__(self, i) -> HomElement:
        return HomElement(self.domain, self.target, self.base_x[i], self.base_y[i],
                          self.matrix[i], self.frame_x[i], self.frame_y[i])

    def embedded_columns(self) -> np.ndarray:
        """D(iota o u) in ambient target coordinates, columns along the domain frame."""
        return self.frame_y @ self.matrix

    def ambient(self) -> np.ndarray:
        return self.embedded_columns() @ np.swapaxes(self.frame_x, -1, -2)

    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.matrix * self.matrix, axis=(-2, -1)))


def _check_resolution(u: SampledMap):
    if not u.target.is_sphere_like:
        return
    vals = u.values
    for axis in range(len(u.grid.shape)):
        periodic = u.grid.polar and axis == 1
        a = vals
        b = np.roll(vals, -1, axis=axis) if periodic else np.delete(vals, 0, axis=axis)
        if not periodic:
            a = np.delete(vals, -1, axis=axis)
        gap = u.target.dist(a, b)
        if u.grid.polar and axis == 1:
            gap = np.where(u.grid.axes[0][:, None] == 0.0, 0.0, gap)
        if np.any(gap > RESOLUTION_ANGLE):
            idx = np.unravel_index(int(np.argmax(gap)), gap.shape)
            raise ResolutionError(
                f"neighbouring samples {np.max(gap):.3f} rad apart along axis {axis} "
                f"at node {tuple(int(i) for i in idx)}; refine the grid", node_index=idx)


def _finite_difference_columns(u: SampledMap) -> np.ndarray:
    vals = u.values
    grid = u.grid
    cols = []
    for axis, h in enumerate(grid.spacing):
        if grid.polar and axis == 1:
            d = (np.roll(vals, -1, axis=1) - np.roll(vals, 1, axis=1)) / (2.0 * h)
            r = grid.axes[0][:, None, None]
            d = np.where(r > 0, d / np.where(r > 0, r, 1.0), 0.0)
            nt = grid.shape[1]
            if nt % 4 == 0:
                # centre node: the theta column is the radial derivative along theta + pi/2
                radial_center = (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2.0 * grid.spacing[0])
                d[0] = np.roll(radial_center, -nt // 4, axis=0)
        else:
            d = np.gradient(vals, h, axis=axis, edge_order=2)
            if u.kink_mask is not None:
                back = (vals - np.roll(vals, 1, axis=axis)) / h
                fwd = (np.roll(vals, -1, axis=axis) - vals) / h
                first = np.zeros(grid.shape, dtype=bool)
                first[(slice(None),) * axis + (0,)] = True
                one_sided = np.where(first[..., None], fwd, back)
                d = np.where(u.kink_mask[..., None], one_sided, d)
        cols.append(d)
    cols = np.stack(cols, axis=-1)  # shape + (amb_N, m)
    return u.target.project_to_tangent(u.values[..., None, :], np.swapaxes(cols, -1, -2)).swapaxes(-1, -2)


def weak_derivative(u: SampledMap) -> DerivativeField:
    """Derivative field of a sampled map.

    The analytic derivative is used verbatim when present. Otherwise column
    ``i`` at a node is the tangent projection of the second-order difference
    quotient along chart axis ``i`` (central inside, one-sided at the edges).
    """
    grid = u.grid
    n_nodes = grid.size
    frames_y = u.target.tangent_frame(u.values)
    if u.derivative is not None:
        matrix = u.derivative
    else:
        _check_resolution(u)
        cols = _finite_difference_columns(u)
        matrix = np.swapaxes(frames_y, -1, -2) @ cols
    m, n = grid.domain.intrinsic_dim, u.target.intrinsic_dim
    return DerivativeField(
        grid.domain, u.target,
        grid.points().reshape(n_nodes, grid.domain.ambient_dim),
        u.values.reshape(n_nodes, u.target.ambient_dim),
        matrix.reshape(n_nodes, n, m),
        grid.frames().reshape(n_nodes, grid.domain.ambient_dim, m),
        frames_y.reshape(n_nodes, u.target.ambient_dim, n),
    )


def integrate(u_or_grid, integrand) -> float:
    grid = u_or_grid.grid if isinstance(u_or_grid, SampledMap) else u_or_grid
    return float(np.sum(grid.weights().ravel() * np.ravel(integrand)))


def sobolev_energy(u: SampledMap, p: float) -> float:
    """Integral of |Du|^p (not its p-th root)."""
    p = check_exponent(p)
    return integrate(u, weak_derivative(u).norms() ** p)


def _require_compatible(u: SampledMap, v: SampledMap):
    if not u.grid.same_as(v.grid):
        raise ContractError("maps are sampled on different grids")
    if u.target != v.target:
        raise ContractError("maps have different targets")


def measure_distance(u: SampledMap, v: SampledMap) -> float:
    """Integral of d/(1 + d) with d the geodesic distance of N: metrizes convergence in measure."""
    _require_compatible(u, v)
    d = u.target.dist(u.values, v.values)
    return integrate(u, d / (1.0 + d))


@dataclass(frozen=True)
class DistanceResult:
    value: float
    kind: str
    p: float
    is_bound: bool

    def __float__(self):
        return self.value

    @property
    def label(self) -> str:
        return "UPPER-BOUND" if self.is_bound else "EXACT"


def pointwise_distance(du: DerivativeField, dv: DerivativeField, kind: str):
    """Node-wise bundle distance between two derivative fields.

    Returns ``(values, is_bound)``. ``sasaki`` is exact on flat targets (the
    minimizing-geodesic competitor is optimal there) and an upper bound on
    spheres; ``cheeger_gromoll`` is always a competitor upper bound.
    """
    target = du.target
    if kind == "sasaki":
        sq = _sasaki_competitor_sq(du.domain, target, du.base_x, du.base_y, du.ambient(),
                                   dv.base_x, dv.base_y, dv.ambient())
        return np.sqrt(sq), not target.is_flat
    if kind == "cheeger_gromoll":
        return _lambda_upper_bound(CHEEGER_GROMOLL, du.domain, target, du.base_x, du.base_y,
                                   du.ambient(), dv.base_x, dv.base_y, dv.ambient()), True
    base = du.base_y - dv.base_y
    base_sq = np.sum(base * base, axis=-1)
    if kind in ("iota", "dot"):
        diff = du.embedded_columns() - dv.embedded_columns()
        return np.sqrt(base_sq + np.sum(diff * diff, axis=(-2, -1))), False
    if kind == "chiron":
        return np.sqrt(base_sq + (du.norms() - dv.norms()) ** 2), False
    raise ContractError(f"unknown distance kind {kind!r}; expected one of {DISTANCE_KINDS}")


def sobolev_distance(u: SampledMap, v: SampledMap, kind: str, p: float) -> DistanceResult:
    """Distance between two sampled maps.

    ``sasaki`` / ``cheeger_gromoll`` / ``iota`` / ``chiron`` integrate the
    pointwise distance to the power ``p``; ``dot`` is the convergence-in-measure
    distance of the derivative fields (under the embedded pointwise distance)
    plus the L^p distance of the derivative moduli.
    """
    p = check_exponent(p)
    _require_compatible(u, v)
    if kind not in DISTANCE_KINDS:
        raise ContractError(f"unknown distance kind {kind!r}; expected one of {DISTANCE_KINDS}")
    du, dv = weak_derivative(u), weak_derivative(v)
    d, bound = pointwise_distance(du, dv, kind)
    if kind == "dot":
        moduli = np.abs(du.norms() - dv.norms()) ** p
        value = integrate(u, d / (1.0 + d)) + integrate(u, moduli) ** (1.0 / p)
    else:
        value = integrate(u, d ** p) ** (1.0 / p)
    return DistanceResult(value, kind, p, bound)


# -- Lipschitz test maps ----------------------------------------------------

@dataclass(frozen=True)
class LipschitzMap:
    """A map ``f: N -> codomain`` with a known Lipschitz constant for d_N."""

    name: str
    codomain: ManifoldModel
    lipschitz: float
    func: Callable[[np.ndarray], np.ndarray]
    isometric: bool = False

    def compose(self, u: SampledMap) -> SampledMap:
        vals = np.asarray(self.func(u.values), dtype=float)
        return SampledMap(u.grid, self.codomain, vals, None, u.kink_mask)


def _random_rotation(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def builtin_lipschitz_maps(target: ManifoldModel, seed: int = 0, avoid=None):
    """The built-in family of test maps on ``target``.

    Coordinate projections, the isometric embedding, a random linear map
    (Lipschitz constant its operator norm, since chords are shorter than
    arcs), a random isometry, a distance-to-point function and a constant.
    ``avoid`` (sample values) steers the distance-to-point centre away from the
    sampled image and its antipode, where the distance is not smooth.
    """
    rng = np.random.default_rng(seed)
    d = target.ambient_dim
    maps = [LipschitzMap("embedding", Euclidean(d), 1.0, lambda y: y, isometric=True)]
    for i in range(d):
        maps.append(LipschitzMap(f"coordinate_{i}", Euclidean(1), 1.0, lambda y, i=i: y[..., i:i + 1]))
    a = rng.standard_normal((3, d))
    maps.append(LipschitzMap("linear", Euclidean(3), float(np.linalg.norm(a, ord=2)), lambda y: y @ a.T))
    q = _random_rotation(rng, d)
    maps.append(LipschitzMap("rotation", target, 1.0, lambda y: y @ q.T, isometric=True))

    candidates = target.random_point(rng, 16)
    centre = candidates[0]
    if avoid is not None:
        pts = np.asarray(avoid).reshape(-1, d)
        best = -np.inf
        for c in candidates:
            dist = target.dist(pts, c)
            margin = np.min(np.minimum(dist, math.pi - dist)) if target.is_sphere_like else np.min(dist)
            if margin > best:
                best, centre = margin, c
    maps.append(LipschitzMap("distance_to_point", Euclidean(1), 1.0,
                             lambda y: target.dist(y, centre)[..., None]))
    maps.append(LipschitzMap("constant", Euclidean(1), 0.0, lambda y: np.ones(y.shape[:-1] + (1,))))
    return maps


def check_lipschitz_chain_rule(u: SampledMap, f: LipschitzMap) -> float:
    """max over nodes of |D(f o u)| - Lip(f) |Du|; at most discretization error."""
    du = weak_derivative(u)
    dfu = weak_derivative(f.compose(u))
    return float(np.max(dfu.norms() - f.lipschitz * du.norms()))


def isometry_defect(u: SampledMap, f: LipschitzMap) -> float:
    """max over nodes of | |D(f o u)| - |Du| | for an isometric ``f``."""
    if not f.isometric:
        raise ContractError(f"{f.name} is not isometric")
    return float(np.max(np.abs(weak_derivative(f.compose(u)).norms() - weak_derivative(u).norms())))


@dataclass(frozen=True)
class Sqrt2Report:
    p: float
    chiron: float
    iota: float
    sasaki: DistanceResult
    cheeger_gromoll: DistanceResult

    @property
    def asserted_gap(self) -> float:
        """chiron - sqrt(2) * min over the exactly computed distances (iota, flat sasaki)."""
        exact = [self.iota] + ([self.sasaki.value] if not self.sasaki.is_bound else [])
        return self.chiron - math.sqrt(2.0) * min(exact)

    @property
    def reported_gap(self) -> float:
        """Same with the competitor bounds included; informative only."""
        return self.chiron - math.sqrt(2.0) * min(self.iota, self.sasaki.value, self.cheeger_gromoll.value)


def check_sqrt2_comparison(u: SampledMap, v: SampledMap, p: float) -> Sqrt2Report:
    return Sqrt2Report(
        float(p),
        sobolev_distance(u, v, "chiron", p).value,
        sobolev_distance(u, v, "iota", p).value,
        sobolev_distance(u, v, "sasaki", p),
        sobolev_distance(u, v, "cheeger_gromoll", p),
    )


# -- serialization --------------------------------------------------------

def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_sampled_map(u: SampledMap, path) -> None:
    """CSV: a ``# domain=... target=... nodes=... h=...`` line, then one row per node."""
    grid = u.grid
    header = "# domain={} target={} nodes={} h={}".format(
        grid.domain, u.target,
        ",".join(str(n) for n in grid.shape),
        ",".join(_fmt(h) for h in grid.spacing))
    pts = grid.points().reshape(grid.size, -1)
    vals = u.values.reshape(grid.size, -1)
    lines = [header]
    for i in range(grid.size):
        lines.append(",".join([str(i)] + [_fmt(c) for c in pts[i]] + [_fmt(c) for c in vals[i]]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _split_header(line: str) -> dict:
    fields = {}
    for part in line.lstrip("#").split():
        key, _, value = part.partition("=")
        fields[key] = value
    return fields


def read_sampled_map(path) -> SampledMap:
    from .manifolds import parse_manifold

    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ContractError("missing '# domain=...' header line")
        fields = _split_header(header)
        try:
            domain = parse_manifold(fields["domain"])
            target = parse_manifold(fields["target"])
            nodes = tuple(int(n) for n in fields["nodes"].split(","))
            spacing = tuple(float(h) for h in fields["h"].split(","))
        except KeyError as exc:
            raise ContractError(f"header is missing {exc.args[0]!r}") from None
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = Grid.uniform(domain, nodes)
    if not np.allclose(grid.spacing, spacing, rtol=1e-12, atol=0):
        raise ContractError("header spacing does not match the node counts")
    m, d = domain.ambient_dim, target.ambient_dim
    if rows.shape != (grid.size, 1 + m + d):
        raise ContractError(f"expected {grid.size} rows of {1 + m + d} columns")
    order = np.argsort(rows[:, 0], kind="stable")
    rows = rows[order]
    if not np.allclose(rows[:, 1:1 + m], grid.points().reshape(grid.size, m), atol=1e-12):
        raise ContractError("node coordinates do not match a uniform grid")
    values = rows[:, 1 + m:].reshape(grid.shape + (d,))
    return SampledMap(grid, target, values)
