"""
Elements of the morphism bundle T*M (x) TN.

A :class:`HomElement` is a linear map ``xi: T_x M -> T_y N`` stored as a
matrix in orthonormal frames at ``x`` and ``y``. Internally most computations
go through the frame-free *ambient* representation
``L = frame_y @ matrix @ frame_x.T``, which annihilates normal directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError
from .manifolds import ManifoldModel

FRAME_TOL = 1e-10
DEFAULT_SEED = 20240607


@dataclass(frozen=True)
class HomElement:
    domain: ManifoldModel
    target: ManifoldModel
    base_x: np.ndarray
    base_y: np.ndarray
    matrix: np.ndarray
    frame_x: np.ndarray = field(repr=False)
    frame_y: np.ndarray = field(repr=False)

    def __post_init__(self):
        m, n = self.domain.intrinsic_dim, self.target.intrinsic_dim
        if self.matrix.shape != (n, m):
            raise ContractError(f"matrix must have shape {(n, m)}, got {self.matrix.shape}")
        for man, base, frame in ((self.domain, self.base_x, self.frame_x),
                                 (self.target, self.base_y, self.frame_y)):
            man.check_point(base)
            if frame.shape != (man.ambient_dim, man.intrinsic_dim):
                raise ContractError("frame has the wrong shape")
            gram = frame.T @ frame
            if np.max(np.abs(gram - np.eye(man.intrinsic_dim))) > FRAME_TOL:
                raise DomainError("frame is not orthonormal")
            if man.is_sphere_like and np.max(np.abs(base @ frame)) > FRAME_TOL:
                raise DomainError("frame vectors are not tangent at the base point")

    @classmethod
    def at(cls, domain, target, x, y, matrix=None, frame_x=None, frame_y=None):
        """Element at ``(x, y)``; frames default to the canonical ones, matrix to zero."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if frame_x is None:
            frame_x = domain.tangent_frame(x)
        if frame_y is None:
            frame_y = target.tangent_frame(y)
        if matrix is None:
            matrix = np.zeros((target.intrinsic_dim, domain.intrinsic_dim))
        return cls(domain, target, x, y, np.array(matrix, dtype=float),
                   np.asarray(frame_x, dtype=float), np.asarray(frame_y, dtype=float))

    @classmethod
    def from_ambient(cls, domain, target, x, y, linear):
        """Element whose ambient map is ``linear`` restricted to the tangent spaces."""
        fx = domain.tangent_frame(np.asarray(x, dtype=float))
        fy = target.tangent_frame(np.asarray(y, dtype=float))
        return cls.at(domain, target, x, y, fy.T @ np.asarray(linear, dtype=float) @ fx, fx, fy)

    def ambient(self) -> np.ndarray:
        return self.frame_y @ self.matrix @ self.frame_x.T

    def reframe(self, frame_x=None, frame_y=None) -> "HomElement":
        """Same linear map expressed in other orthonormal frames (canonical by default)."""
        if frame_x is None:
            frame_x = self.domain.tangent_frame(self.base_x)
        if frame_y is None:
            frame_y = self.target.tangent_frame(self.base_y)
        matrix = frame_y.T @ self.ambient() @ frame_x
        return HomElement(self.domain, self.target, self.base_x, self.base_y, matrix, frame_x, frame_y)

    def with_matrix(self, matrix) -> "HomElement":
        return HomElement(self.domain, self.target, self.base_x, self.base_y,
                          np.array(matrix, dtype=float), self.frame_x, self.frame_y)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)


def frobenius_norm(h: HomElement) -> float:
    """sqrt of sum_i |xi(e_i)|^2 over the orthonormal frame of T_x M."""
    cols = h.frame_y @ h.matrix
    return float(np.sqrt(np.sum(cols * cols)))


def operator_norm(h: HomElement) -> float:
    return float(np.linalg.norm(h.matrix, ord=2)) if h.matrix.size else 0.0


def frobenius_inner(a: HomElement, b: HomElement) -> float:
    if not (np.allclose(a.base_x, b.base_x) and np.allclose(a.base_y, b.base_y)):
        raise ContractError("inner product needs elements over the same base pair")
    return float(np.sum(a.ambient() * b.ambient()))


@dataclass(frozen=True)
class FrobeniusReduction:
    """Supremum of |rho o xi| over nonexpansive rho: R^n -> R^k."""

    value: float
    rho: np.ndarray
    sampled_max: float
    samples: int
    seed: int

    @property
    def sample_gap(self) -> float:
        return self.value - self.sampled_max


def reduce_frobenius_by_postcomposition(h, k: int, samples: int = 200, seed: int = DEFAULT_SEED):
    """Frobenius norm recovered as a supremum over nonexpansive post-compositions.

    ``h`` is a :class:`HomElement` or a plain ``(n, m)`` matrix. The supremum is
    attained by a map that is an isometry on the image of ``xi``: take an
    orthonormal basis of the column space (left singular vectors) and send it
    to the first coordinate axes of R^k. ``samples`` random maps of operator
    norm at most one are evaluated as a check on the inequality direction.
    """
    xi = h.matrix if isinstance(h, HomElement) else np.asarray(h, dtype=float)
    n, m = xi.shape
    if k < min(m, n):
        raise ContractError(f"k = {k} must be at least min(m, n) = {min(m, n)}")
    u, s, _ = np.linalg.svd(xi, full_matrices=False)
    tol = max(xi.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    rho = np.zeros((k, n))
    rho[:rank] = u[:, :rank].T
    value = float(np.linalg.norm(rho @ xi))

    rng = np.random.default_rng(seed)
    r = rng.standard_normal((samples, k, n))
    r /= np.maximum(np.linalg.norm(r, ord=2, axis=(1, 2)), 1.0)[:, None, None]
    best = float(np.max(np.linalg.norm(r @ xi, axis=(1, 2)), initial=0.0))
    return FrobeniusReduction(value, rho, best, samples, seed)


def transport_hom(h: HomElement, x2, y2) -> HomElement:
    """Transport ``h`` to ``(x2, y2)`` along the minimizing geodesics of M and N.

    The returned element carries the transported frames, so its matrix equals
    the original one; call :meth:`HomElement.reframe` to compare it with other
    elements in canonical frames.
    """
    x2 = h.domain.check_point(np.asarray(x2, dtype=float))
    y2 = h.target.check_point(np.asarray(y2, dtype=float))
    fx = h.domain.transport(h.base_x, x2, h.frame_x.T).T
    fy = h.target.transport(h.base_y, y2, h.frame_y.T).T
    # remove rounding drift so the frame checks stay tight
    fx, _ = _orthonormalize(fx)
    fy, _ = _orthonormalize(fy)
    return HomElement(h.domain, h.target, x2, y2, h.matrix.copy(), fx, fy)


def transport_ambient(domain, target, x1, y1, x2, y2, linear):
    """Ambient map of ``linear`` (based at ``(x1, y1)``) transported to ``(x2, y2)``.

    Broadcasts over leading axes of all arguments.
    """
    tn = target.transport_matrix(y1, y2)
    tm = domain.transport_matrix(x2, x1)
    return tn @ linear @ tm


def _orthonormalize(frame):
    q, r = np.linalg.qr(frame)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, r
