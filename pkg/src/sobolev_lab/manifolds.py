"""
Concrete Riemannian manifolds used as domains and targets.

Points and tangent vectors are stored in ambient (embedded) coordinates and
every operation broadcasts over leading axes, so ``x`` may have shape
``(..., ambient_dim)``.

Supported kinds:

- ``euclidean``  R^n
- ``sphere``     S^n in R^(n+1), n >= 2
- ``circle``     S^1 in R^2 (intrinsically flat)
- ``interval``   [a, b] in R
- ``rectangle``  product of closed intervals
- ``disk``       closed Euclidean disk of given radius centred at the origin
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AntipodalError, ContractError, DomainError

MEMBERSHIP_TOL = 1e-12
TANGENT_TOL = 1e-9
# 1 + <x, y> below this means antipodal (angle within ~1.4e-6 of pi)
ANTIPODAL_TOL = 1e-12


class Kind(str, Enum):
    EUCLIDEAN = "euclidean"
    SPHERE = "sphere"
    CIRCLE = "circle"
    INTERVAL = "interval"
    RECTANGLE = "rectangle"
    DISK = "disk"


_DOMAIN_KINDS = (Kind.INTERVAL, Kind.RECTANGLE, Kind.DISK)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _norm(a):
    return np.sqrt(_dot(a, a))


@dataclass(frozen=True)
class ManifoldModel:
    """A Riemannian manifold from the fixed menu of kinds.

    Use the factory functions (:func:`Euclidean`, :func:`Sphere`, ...) rather
    than instantiating this class directly.
    """

    kind: Kind
    intrinsic_dim: int
    ambient_dim: int
    bounds: tuple = ()
    radius: float = math.inf

    def __post_init__(self):
        if self.intrinsic_dim < 1:
            raise ContractError("intrinsic dimension must be >= 1")
        curved = self.kind in (Kind.SPHERE, Kind.CIRCLE)
        expected = self.intrinsic_dim + 1 if curved else self.intrinsic_dim
        if self.ambient_dim != expected:
            raise ContractError(
                f"{self.kind.value}: ambient_dim must be {expected}, got {self.ambient_dim}")

    def __str__(self):
        if self.kind is Kind.EUCLIDEAN:
            return f"euclidean({self.intrinsic_dim})"
        if self.kind is Kind.SPHERE:
            return f"sphere({self.intrinsic_dim})"
        if self.kind is Kind.CIRCLE:
            return "circle"
        if self.kind is Kind.DISK:
            return f"disk({self.radius!r})"
        flat = ",".join(repr(float(v)) for pair in self.bounds for v in pair)
        return f"{self.kind.value}({flat})"

    # -- classification -------------------------------------------------

    @property
    def is_sphere_like(self) -> bool:
        return self.kind in (Kind.SPHERE, Kind.CIRCLE)

    @property
    def is_flat(self) -> bool:
        """True when the Levi-Civita connection has trivial holonomy."""
        return self.kind is not Kind.SPHERE

    @property
    def is_domain(self) -> bool:
        return self.kind in _DOMAIN_KINDS

    @property
    def injectivity_radius(self) -> float:
        return math.pi if self.is_sphere_like else math.inf

    # -- membership -----------------------------------------------------

    def contains(self, x, tol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_dim:
            return np.zeros(x.shape[:-1], dtype=bool)
        if self.is_sphere_like:
            return np.abs(_norm(x) - 1.0) <= tol
        if self.kind is Kind.EUCLIDEAN:
            return np.all(np.isfinite(x), axis=-1)
        if self.kind is Kind.DISK:
            return _norm(x) <= self.radius + tol
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_dim:
            raise DomainError(f"{self}: expected ambient dimension {self.ambient_dim}, got {x.shape[-1]}")
        # sphere points coming from arithmetic drift by a few ulps
        tol = 1e-9 if self.is_sphere_like else MEMBERSHIP_TOL
        if not np.all(self.contains(x, tol)):
            raise DomainError(f"point not on {self}")
        return x

    def check_tangent(self, x, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.ambient_dim:
            raise DomainError(f"{self}: tangent vector has wrong dimension {v.shape[-1]}")
        if self.is_sphere_like:
            radial = np.abs(_dot(x, v))
            if np.any(radial > TANGENT_TOL * (1.0 + _norm(v))):
                raise DomainError(f"vector is not tangent to {self} (|<x, v>| = {np.max(radial):.3e})")
        return v

    # -- geometry -------------------------------------------------------

    def project_to_tangent(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.is_sphere_like:
            return w - _dot(w, x)[..., None] * x
        return np.broadcast_to(w, np.broadcast_shapes(x.shape, w.shape)).copy()

    def exp(self, x, v):
        x = self.check_point(x)
        v = self.check_tangent(x, v)
        if not self.is_sphere_like:
            y = x + v
            if self.is_domain and not np.all(self.contains(y)):
                raise DomainError(f"exp leaves {self}")
            return y
        theta = _norm(v)[..., None]
        # sin(t)/t is well conditioned through np.sinc
        y = np.cos(theta) * x + np.sinc(theta / np.pi) * v
        return y / _norm(y)[..., None]

    def log(self, x, y):
        x = self.check_point(x)
        y = self.check_point(y)
        if not self.is_sphere_like:
            return np.broadcast_to(y - x, np.broadcast_shapes(x.shape, y.shape)).copy()
        c = _dot(x, y)
        if np.any(1.0 + c < ANTIPODAL_TOL):
            raise AntipodalError("log is undefined for antipodal points")
        w = y - c[..., None] * x
        s = _norm(w)
        theta = np.arctan2(s, c)
        scale = np.where(s > 0, theta / np.where(s > 0, s, 1.0), 1.0)
        return scale[..., None] * w

    def dist(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not self.is_sphere_like:
            return _norm(y - x)
        # atan2 of |x - y| and |x + y| is accurate at both ends of [0, pi]
        return 2.0 * np.arctan2(_norm(x - y), _norm(x + y))

    def transport(self, x, y, v):
        """Parallel transport of ``v`` from ``x`` to ``y`` along the minimizing geodesic."""
        x = self.check_point(x)
        y = self.check_point(y)
        v = self.check_tangent(x, v)
        if self.kind is Kind.CIRCLE:
            # path independent on S^1: unit tangent goes to unit tangent
            return _dot(v, _rot90(x))[..., None] * _rot90(y)
        if not self.is_sphere_like:
            return np.broadcast_to(v, np.broadcast_shapes(x.shape, y.shape, v.shape)).copy()
        c = _dot(x, y)
        if np.any(1.0 + c < ANTIPODAL_TOL):
            raise AntipodalError("parallel transport between antipodal points is not unique")
        return v - (_dot(y, v) / (1.0 + c))[..., None] * (x + y)

    def transport_matrix(self, x, y):
        """Ambient matrix ``T`` with ``T @ w = transport(x, y, project(x, w))``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = self.ambient_dim
        eye = np.eye(d)
        if self.kind is Kind.CIRCLE:
            return _rot90(y)[..., :, None] * _rot90(x)[..., None, :]
        if not self.is_sphere_like:
            shape = np.broadcast_shapes(x.shape, y.shape)[:-1]
            return np.broadcast_to(eye, shape + (d, d)).copy()
        c = _dot(x, y)
        if np.any(1.0 + c < ANTIPODAL_TOL):
            raise AntipodalError("parallel transport between antipodal points is not unique")
        proj = eye - x[..., :, None] * x[..., None, :]
        move = eye - (x + y)[..., :, None] * y[..., None, :] / (1.0 + c)[..., None, None]
        return move @ proj

    def tangent_frame(self, x):
        """Deterministic orthonormal frame of T_x, shape ``(..., ambient_dim, intrinsic_dim)``.

        Sphere frames: Gram-Schmidt of the coordinate axes against ``x``, skipping
        the axis most aligned with ``x`` (the fallback that keeps the remaining
        axes transverse). Circle frames: the positive unit tangent.
        """
        x = np.asarray(x, dtype=float)
        if self.kind is Kind.CIRCLE:
            return _rot90(x)[..., :, None]
        if not self.is_sphere_like:
            shape = x.shape[:-1] + (self.ambient_dim, self.intrinsic_dim)
            return np.broadcast_to(np.eye(self.ambient_dim), shape).copy()
        d = self.ambient_dim
        order = np.argsort(np.abs(x), axis=-1, kind="stable")[..., : d - 1]
        axes = np.eye(d)[order]  # (..., n, d)
        cols = []
        for i in range(d - 1):
            w = axes[..., i, :] - _dot(axes[..., i, :], x)[..., None] * x
            for prev in cols:
                w = w - _dot(w, prev)[..., None] * prev
            cols.append(w / _norm(w)[..., None])
        return np.stack(cols, axis=-1)

    # -- sampling -------------------------------------------------------

    def random_point(self, rng, size=()):
        size = tuple(np.atleast_1d(size)) if size != () else ()
        if self.is_sphere_like:
            x = rng.standard_normal(size + (self.ambient_dim,))
            return x / _norm(x)[..., None]
        if self.kind is Kind.EUCLIDEAN:
            return rng.standard_normal(size + (self.ambient_dim,))
        if self.kind is Kind.DISK:
            r = self.radius * np.sqrt(rng.uniform(size=size))
            t = rng.uniform(0.0, 2.0 * np.pi, size=size)
            return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return lo + (hi - lo) * rng.uniform(size=size + (self.ambient_dim,))

    def random_tangent(self, rng, x, scale=1.0):
        w = scale * rng.standard_normal(np.shape(x))
        return self.project_to_tangent(x, w)


def _rot90(x):
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


# -- factories -------------------------------------------------------------

def Euclidean(n: int) -> ManifoldModel:
    return ManifoldModel(Kind.EUCLIDEAN, n, n)


def Sphere(n: int) -> ManifoldModel:
    if n == 1:
        return Circle()
    return ManifoldModel(Kind.SPHERE, n, n + 1)


def Circle() -> ManifoldModel:
    return ManifoldModel(Kind.CIRCLE, 1, 2)


def IntervalDomain(a: float, b: float) -> ManifoldModel:
    if not b > a:
        raise ContractError("interval needs a < b")
    return ManifoldModel(Kind.INTERVAL, 1, 1, bounds=((float(a), float(b)),))


def RectangleDomain(*bounds) -> ManifoldModel:
    """Rectangle from per-axis ``(low, high)`` pairs, e.g. ``RectangleDomain((0, 1), (0, 2))``."""
    if len(bounds) < 2:
        raise ContractError("rectangle needs at least two axes")
    pairs = tuple((float(a), float(b)) for a, b in bounds)
    if any(not b > a for a, b in pairs):
        raise ContractError("rectangle needs low < high on every axis")
    return ManifoldModel(Kind.RECTANGLE, len(pairs), len(pairs), bounds=pairs)


def DiskDomain(radius: float = 1.0) -> ManifoldModel:
    if not radius > 0:
        raise ContractError("disk radius must be positive")
    return ManifoldModel(Kind.DISK, 2, 2, radius=float(radius))


def parse_manifold(text: str) -> ManifoldModel:
    """Inverse of ``str(ManifoldModel)``."""
    text = text.strip()
    name, _, rest = text.partition("(")
    args = [float(a) for a in rest.rstrip(")").split(",") if a.strip()] if rest else []
    if name == "euclidean":
        return Euclidean(int(args[0]))
    if name == "sphere":
        return Sphere(int(args[0]))
    if name == "circle":
        return Circle()
    if name == "interval":
        return IntervalDomain(*args)
    if name == "rectangle":
        return RectangleDomain(*zip(args[::2], args[1::2]))
    if name == "disk":
        return DiskDomain(args[0])
    raise ContractError(f"unknown manifold {text!r}")


# -- functional interface --------------------------------------------------

def exp_map(m: ManifoldModel, x, v):
    return m.exp(x, v)


def log_map(m: ManifoldModel, x, y):
    return m.log(x, y)


def geodesic_distance(m: ManifoldModel, x, y):
    return m.dist(x, y)


def parallel_transport(m: ManifoldModel, x, y, v):
    return m.transport(x, y, v)


def project_to_tangent(m: ManifoldModel, x, w):
    return m.project_to_tangent(x, w)
