"""Sobolev distances between manifold-valued maps, built on the lambda-family of bundle metrics."""

from .errors import (AntipodalError, ContractError, DegenerateMetricError, DomainError,
                     ResolutionError, SobolevLabError)
from .hom_bundle import HomElement
from .manifolds import (Circle, DiskDomain, Euclidean, IntervalDomain, ManifoldModel,
                        RectangleDomain, Sphere, parse_manifold)
from .sobolev_maps import SampledMap, sobolev_distance, sobolev_energy, weak_derivative

__version__ = "0.1.0"
