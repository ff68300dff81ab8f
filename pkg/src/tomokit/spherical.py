"""Unit-sphere means in R^3 and the odd-radius series inversion.

The mean-value data ``g(x)`` of a field supported in a ball of radius R is
itself supported in radius R + 1.  Inversion sums sphere means of ``g`` at
odd radii 1, 3, 5, ... around each point and applies ``-2 * Laplacian``;
radii beyond ``R + |x| + 1`` see only zeros of ``g``, so the series is
finite and the truncation is exact, not approximate.
"""
from __future__ import annotations

import math

import numpy as np

from . import tgm
from .errors import CoverageError, GeometryError
from .grid import (
    GridGeometry,
    ScalarField,
    fibonacci_sphere,
    interpolate,
)
from dataclasses import dataclass

__all__ = [
    "SphereMeanField",
    "sphere_mean_at",
    "sphere_mean_forward",
    "john_invert",
    "laplacian_fd",
    "write_sphere_means",
    "read_sphere_means",
]


@dataclass(frozen=True)
class SphereMeanField:
    """Averages over unit spheres, indexed by the center position."""

    field: ScalarField
    source_support_radius: float

    def __post_init__(self):
        if self.field.dim != 3:
            raise GeometryError("sphere means are defined over 3-D centers")

    @property
    def geometry(self) -> GridGeometry:
        return self.field.geometry


def sphere_mean_at(
    f: ScalarField,
    centers: np.ndarray,
    radius: float = 1.0,
    n_sphere: int = 500,
) -> np.ndarray:
    """Mean of ``f`` over spheres of the given radius around each center.

    Equal-weight quadrature on a quasi-uniform point set; evaluation of
    ``f`` is multilinear with zero extension.
    """
    if f.dim != 3:
        raise GeometryError("sphere means need a 3-D field")
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    sphere = fibonacci_sphere(n_sphere)
    acc = np.zeros(pts.shape[0])
    for xi in sphere:
        acc += interpolate(f, pts + radius * xi)
    out = acc / n_sphere
    if np.asarray(centers).ndim == 1:
        return out[0]
    return out


def sphere_mean_forward(
    f: ScalarField,
    centers_geometry: GridGeometry,
    n_sphere: int = 500,
) -> SphereMeanField:
    """Unit-sphere mean of ``f`` on a grid of centers.

    The centers grid must reach ``support_radius + 1`` so the data support
    is not cut off.
    """
    radius = f.effective_support_radius()
    need = radius + 1.0
    half_extent = min(
        max(abs(centers_geometry.origin[i]),
            abs(centers_geometry.origin[i] + centers_geometry.spacing[i] * (centers_geometry.shape[i] - 1)))
        for i in range(3)
    )
    if half_extent < need - 1e-9:
        raise CoverageError(
            f"centers grid half-extent {half_extent:g} misses the data support {need:g}"
        )
    pts = centers_geometry.mesh().reshape(-1, 3)
    vals = sphere_mean_at(f, pts, 1.0, n_sphere).reshape(centers_geometry.shape)
    out = ScalarField(centers_geometry, vals, 0.0)
    return SphereMeanField(out, radius)


def laplacian_fd(f: ScalarField) -> ScalarField:
    """7-point finite-difference Laplacian with zero extension."""
    vals = np.asarray(f.values)
    out = np.zeros_like(vals)
    for ax in range(f.dim):
        h2 = f.spacing[ax] ** 2
        plus = np.roll(vals, -1, axis=ax)
        minus = np.roll(vals, 1, axis=ax)
        # zero extension instead of periodic wrap
        sl_hi = [slice(None)] * f.dim
        sl_hi[ax] = -1
        plus[tuple(sl_hi)] = 0.0
        sl_lo = [slice(None)] * f.dim
        sl_lo[ax] = 0
        minus[tuple(sl_lo)] = 0.0
        out += (plus - 2.0 * vals + minus) / h2
    return f.with_values(out, support_radius=0.0)


def john_invert(
    g: SphereMeanField,
    support_radius: float,
    output_geometry: GridGeometry | None = None,
    n_sphere: int = 500,
    laplacian: str = "fd7",
) -> ScalarField:
    """Recover the source from its unit-sphere means.

    Evaluates ``-2 Laplacian sum_k (2k+1) <g>(x, 2k+1)`` where ``<g>(x, t)``
    is the mean of the data over the sphere of radius t around x.  The sum
    stops at ``K = ceil((R + |x|_max + 1) / 2)``: larger odd radii place the
    sphere outside the data support and contribute zeros.
    """
    if g.source_support_radius > 0 and support_radius < g.source_support_radius - 1e-9:
        raise CoverageError(
            "declared support radius is smaller than the one recorded with the data"
        )
    if output_geometry is None:
        n = max(int(math.ceil(support_radius / max(g.geometry.spacing))) * 2 + 9, 16)
        output_geometry = GridGeometry.centered(support_radius * 1.25, n, 3)
    pts = output_geometry.mesh().reshape(-1, 3)
    x_max = output_geometry.bounding_radius()
    k_max = int(math.ceil((support_radius + x_max + 1.0) / 2.0))
    total = np.zeros(pts.shape[0])
    for k in range(k_max + 1):
        radius = 2 * k + 1
        total += radius * sphere_mean_at(g.field, pts, float(radius), n_sphere)
    series = ScalarField(output_geometry, total.reshape(output_geometry.shape), 0.0)
    if laplacian == "fd7":
        lap = laplacian_fd(series)
    elif laplacian == "spectral":
        from .invert import fractional_laplacian

        lap = fractional_laplacian(series, 1.0)
        lap = lap.with_values(-np.asarray(lap.values), support_radius=0.0)
    else:
        raise GeometryError(f"unknown laplacian scheme {laplacian!r}")
    return lap.with_values(-2.0 * np.asarray(lap.values), support_radius=0.0)


def write_sphere_means(path, g: SphereMeanField, extra: dict | None = None) -> None:
    meta = {"source_support_radius": g.source_support_radius}
    meta.update(extra or {})
    tgm.write_tgm(
        path, "sphere-means", 3, g.field.shape, g.field.origin, g.field.spacing,
        g.field.values, meta,
    )


def read_sphere_means(path) -> SphereMeanField:
    header, payload = tgm.read_tgm(path)
    if header["kind"] != "sphere-means":
        raise tgm.FormatError(f"expected sphere-means, found {header['kind']!r}")
    geom = GridGeometry(tuple(header["origin"]), tuple(header["spacing"]), payload.shape)
    sr = float(header["extra"]["source_support_radius"])
    return SphereMeanField(ScalarField(geom, payload, 0.0), sr)
