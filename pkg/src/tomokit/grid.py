"""Uniformly sampled scalar fields: quadrature, interpolation, spectral
transforms, direction sets, and phantom generation.

Conventions used throughout the package:

* fields are compactly supported; evaluation outside the grid bounding box
  (or outside ``support_radius``) returns 0,
* ``integrate`` is the tensor-product trapezoidal rule,
* the spectral transforms approximate the continuum pair
  ``F(k) = int f(x) exp(-i k.x) dx`` and
  ``f(x) = int F(k) exp(+i k.x) dk / (2 pi)^n``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import GeometryError

__all__ = [
    "GridGeometry",
    "ScalarField",
    "Direction",
    "Spectrum",
    "sample",
    "integrate",
    "interpolate",
    "dft_forward",
    "dft_inverse",
    "phantom",
    "phantom_disks2d",
    "phantom_gaussian_mix",
    "phantom_ball3d",
    "certify_support",
    "circle_directions",
    "fibonacci_sphere",
    "unit_vector",
    "DEFAULT_DISKS",
]

_UNIT_NORM_TOL = 1e-12


def _as_float_tuple(x, n: int, name: str) -> tuple[float, ...]:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size != n:
        raise GeometryError(f"{name} must have {n} entries, got {arr.size}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class GridGeometry:
    """Uniform rectilinear grid: point i sits at ``origin + i * spacing``."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        n = len(self.shape)
        object.__setattr__(self, "origin", _as_float_tuple(self.origin, n, "origin"))
        object.__setattr__(self, "spacing", _as_float_tuple(self.spacing, n, "spacing"))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if n not in (1, 2, 3):
            raise GeometryError(f"dimension must be 1, 2 or 3, got {n}")
        if any(s < 2 for s in self.shape):
            raise GeometryError(f"every axis needs >= 2 samples, got shape {self.shape}")
        if any(h <= 0 for h in self.spacing):
            raise GeometryError(f"spacing must be strictly positive, got {self.spacing}")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @classmethod
    def from_bounds(cls, lo, hi, shape) -> "GridGeometry":
        """Grid whose first/last samples sit exactly on ``lo`` / ``hi``."""
        shape = tuple(int(s) for s in np.atleast_1d(shape))
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        if not (len(shape) == lo.size == hi.size):
            raise GeometryError("lo, hi and shape must agree in length")
        if np.any(hi <= lo):
            raise GeometryError("upper bounds must exceed lower bounds")
        spacing = (hi - lo) / (np.asarray(shape) - 1)
        return cls(tuple(lo), tuple(spacing), shape)

    @classmethod
    def centered(cls, half_width: float, n_points: int, dim: int) -> "GridGeometry":
        """Symmetric cube ``[-half_width, half_width]^dim``."""
        return cls.from_bounds([-half_width] * dim, [half_width] * dim, [n_points] * dim)

    def axes(self) -> list[np.ndarray]:
        return [
            self.origin[i] + self.spacing[i] * np.arange(self.shape[i])
            for i in range(self.dim)
        ]

    def mesh(self) -> np.ndarray:
        """Sample coordinates, shape ``(*shape, dim)``."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    def bounding_radius(self) -> float:
        """Largest |x| over the grid corners."""
        corners = itertools.product(
            *[(self.origin[i], self.origin[i] + self.spacing[i] * (self.shape[i] - 1))
              for i in range(self.dim)]
        )
        return max(math.sqrt(sum(c * c for c in corner)) for corner in corners)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


@dataclass(frozen=True)
class ScalarField:
    """Sampled real or complex function with grid geometry.

    ``support_radius > 0`` certifies that every sample with |x| beyond that
    radius is exactly zero; 0 means the support is unknown (the grid
    bounding box is then the only certification).
    """

    geometry: GridGeometry
    values: np.ndarray
    support_radius: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind == "c":
            vals = vals.astype(np.complex128, copy=False)
        else:
            vals = vals.astype(np.float64, copy=False)
        if vals.shape != self.geometry.shape:
            raise GeometryError(
                f"values shape {vals.shape} does not match grid shape {self.geometry.shape}"
            )
        if self.support_radius < 0:
            raise GeometryError("support_radius must be >= 0")
        if self.support_radius > 0:
            r2 = (self.geometry.mesh() ** 2).sum(axis=-1)
            outside = r2 > self.support_radius**2 * (1 + 1e-12)
            if np.any(vals[outside] != 0):
                raise GeometryError(
                    "support_radius certification violated: nonzero sample outside radius"
                )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support_radius", float(self.support_radius))

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def origin(self) -> tuple[float, ...]:
        return self.geometry.origin

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.geometry.spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return self.geometry.shape

    def effective_support_radius(self) -> float:
        """Certified support radius, falling back to the grid bounding radius."""
        r_grid = self.geometry.bounding_radius()
        if self.support_radius > 0:
            return min(self.support_radius, r_grid)
        return r_grid

    def with_values(self, values, support_radius: float | None = None) -> "ScalarField":
        sr = self.support_radius if support_radius is None else support_radius
        return ScalarField(self.geometry, values, sr)

    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"


@dataclass(frozen=True)
class Direction:
    """Unit vector on the sphere."""

    components: tuple[float, ...]

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float).reshape(-1)
        norm = float(np.linalg.norm(comp))
        if abs(norm - 1.0) > _UNIT_NORM_TOL:
            raise GeometryError(f"direction norm deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "components", tuple(float(c) for c in comp))

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        return cls((math.cos(theta), math.sin(theta)))

    def array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)


def unit_vector(v) -> np.ndarray:
    """Normalize ``v`` to unit length, rejecting the zero vector."""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if isinstance(v, Direction):
        return v.array()
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise GeometryError("zero vector has no direction")
    return arr / norm


@dataclass(frozen=True)
class Spectrum:
    """Samples of the continuum transform on the dual grid of a field.

    Stores the source-grid geometry; the dual axes are uniform with
    ``k_spacing[j] = 2*pi / (shape[j] * spacing[j])`` and run from
    ``-floor(N/2) * k_spacing`` upward (ascending order).
    """

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.geometry.shape:
            raise GeometryError("spectrum values shape does not match geometry")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def k_spacing(self) -> tuple[float, ...]:
        return tuple(
            2.0 * math.pi / (n * h)
            for n, h in zip(self.geometry.shape, self.geometry.spacing)
        )

    def k_axes(self) -> list[np.ndarray]:
        axes = []
        for n, h in zip(self.geometry.shape, self.geometry.spacing):
            axes.append(2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(n, d=h)))
        return axes

    def k_origin(self) -> tuple[float, ...]:
        return tuple(float(ax[0]) for ax in self.k_axes())

    def interpolate(self, k_points) -> np.ndarray:
        """Multilinear interpolation of the spectrum at arbitrary k."""
        return _multilinear(
            self.values,
            np.asarray(self.k_origin()),
            np.asarray(self.k_spacing),
            k_points,
        )


# ---------------------------------------------------------------------------
# sampling and quadrature
# ---------------------------------------------------------------------------


def sample(fn: Callable, geometry: GridGeometry, support_radius: float = 0.0) -> ScalarField:
    """Evaluate ``fn`` on the grid.

    ``fn`` may be vectorized over a point array of shape ``(..., dim)``;
    scalar functions of a single point are applied in a fallback loop.
    Non-finite values are rejected with the offending index.
    """
    pts = geometry.mesh()
    try:
        vals = np.asarray(fn(pts))
        if vals.shape != geometry.shape:
            raise TypeError
    except Exception:
        flat = pts.reshape(-1, geometry.dim)
        out = np.empty(flat.shape[0], dtype=complex)
        for i, p in enumerate(flat):
            out[i] = fn(p)
        if np.allclose(out.imag, 0.0):
            out = out.real
        vals = out.reshape(geometry.shape)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise GeometryError(f"non-finite sample at grid index {tuple(int(i) for i in bad)}")
    return ScalarField(geometry, vals, support_radius)


def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def quadrature_weights(geometry: GridGeometry) -> np.ndarray:
    """Tensor-product trapezoidal weights including the cell volume."""
    w = _trapezoid_weights(geometry.shape[0])
    for ax in range(1, geometry.dim):
        w = np.multiply.outer(w, _trapezoid_weights(geometry.shape[ax]))
    return w * geometry.cell_volume()


def integrate(f: ScalarField):
    """Trapezoidal quadrature of the field over its full grid."""
    total = (f.values * quadrature_weights(f.geometry)).sum()
    if f.is_complex():
        return complex(total)
    return float(total)


def l2_norm(f: ScalarField) -> float:
    v = np.abs(f.values) ** 2
    return math.sqrt(float((v * quadrature_weights(f.geometry)).sum()))


def relative_l2(approx: ScalarField, truth: ScalarField) -> float:
    """``||approx - truth||_2 / ||truth||_2`` on the shared grid."""
    if approx.geometry != truth.geometry:
        raise GeometryError("relative_l2 requires matching grids")
    diff = truth.with_values(np.asarray(approx.values) - np.asarray(truth.values), 0.0)
    denom = l2_norm(truth)
    if denom == 0.0:
        return l2_norm(diff)
    return l2_norm(diff) / denom


# ---------------------------------------------------------------------------
# multilinear interpolation
# ---------------------------------------------------------------------------


def _multilinear(values: np.ndarray, origin: np.ndarray, spacing: np.ndarray, points):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    lead_shape = pts.shape[:-1]
    ndim = values.ndim
    if pts.shape[-1] != ndim:
        raise GeometryError(f"points must have {ndim} coordinates")
    flat = pts.reshape(-1, ndim)

    t = (flat - origin) / spacing
    shape = np.asarray(values.shape)
    inside = np.all((t >= 0.0) & (t <= shape - 1), axis=1)

    i0 = np.clip(np.floor(t).astype(np.intp), 0, shape - 2)
    w = np.clip(t - i0, 0.0, 1.0)

    acc = np.zeros(flat.shape[0], dtype=values.dtype)
    vflat = values.reshape(-1)
    strides = np.ones(ndim, dtype=np.intp)
    for ax in range(ndim - 2, -1, -1):
        strides[ax] = strides[ax + 1] * shape[ax + 1]

    base = i0 @ strides
    for corner in itertools.product((0, 1), repeat=ndim):
        offset = int(np.dot(corner, strides))
        weight = np.ones(flat.shape[0])
        for ax, bit in enumerate(corner):
            weight *= w[:, ax] if bit else (1.0 - w[:, ax])
        acc += vflat[base + offset] * weight

    if values.dtype.kind != "c":
        acc = acc.real if acc.dtype.kind == "c" else acc
    acc = np.where(inside, acc, 0.0)
    out = acc.reshape(lead_shape)
    if single:
        return out[()] if out.ndim == 0 else out
    return out


def interpolate(f: ScalarField, points):
    """Multilinear interpolation; points outside the bounding box give 0."""
    return _multilinear(
        f.values, np.asarray(f.origin), np.asarray(f.spacing), points
    )


def interp_uniform(y: np.ndarray, x0: float, dx: float, xq: np.ndarray) -> np.ndarray:
    """1-D linear interpolation on a uniform grid with zero extension."""
    t = (np.asarray(xq, dtype=float) - x0) / dx
    n = y.shape[-1]
    inside = (t >= 0.0) & (t <= n - 1)
    i0 = np.clip(np.floor(t).astype(np.intp), 0, n - 2)
    w = np.clip(t - i0, 0.0, 1.0)
    vals = y[..., i0] * (1.0 - w) + y[..., i0 + 1] * w
    return np.where(inside, vals, 0.0)


# ---------------------------------------------------------------------------
# spectral transforms
# ---------------------------------------------------------------------------


def dft_forward(f: ScalarField) -> Spectrum:
    """Continuum-scaled forward transform on the dual grid.

    Implemented as an FFT times ``prod(spacing)`` with phase factors for the
    grid origin, so ``values[m] ~ int f(x) exp(-i k_m . x) dx``.
    """
    vals = np.fft.fftn(np.asarray(f.values))
    for ax in range(f.dim):
        k = 2.0 * math.pi * np.fft.fftfreq(f.shape[ax], d=f.spacing[ax])
        phase = np.exp(-1j * k * f.origin[ax])
        shape = [1] * f.dim
        shape[ax] = -1
        vals = vals * phase.reshape(shape)
    vals *= f.geometry.cell_volume()
    return Spectrum(f.geometry, np.fft.fftshift(vals))


def dft_inverse(F: Spectrum) -> ScalarField:
    """Exact inverse of :func:`dft_forward` on the same geometry."""
    geom = F.geometry
    vals = np.fft.ifftshift(np.asarray(F.values))
    for ax in range(geom.dim):
        k = 2.0 * math.pi * np.fft.fftfreq(geom.shape[ax], d=geom.spacing[ax])
        phase = np.exp(1j * k * geom.origin[ax])
        shape = [1] * geom.dim
        shape[ax] = -1
        vals = vals * phase.reshape(shape)
    out = np.fft.ifftn(vals) / geom.cell_volume()
    return ScalarField(geom, out, 0.0)


def spectrum_at(f: ScalarField, k_points) -> np.ndarray:
    """Continuum transform of ``f`` evaluated at arbitrary wavevectors.

    Direct separable Riemann evaluation (no grid interpolation), so the
    only error is the quadrature of the underlying samples.  Cost is
    ``O(n_points * prod(shape) / N_last)`` — intended for check-style use.
    """
    pts = np.atleast_2d(np.asarray(k_points, dtype=float))
    axes = f.geometry.axes()
    out = np.empty(pts.shape[0], dtype=np.complex128)
    for i, k in enumerate(pts):
        acc = np.asarray(f.values, dtype=np.complex128)
        for ax in range(f.dim - 1, -1, -1):
            phase = np.exp(-1j * k[ax] * axes[ax]) * f.spacing[ax]
            acc = acc @ phase if ax == f.dim - 1 else np.tensordot(acc, phase, axes=([ax], [0]))
        out[i] = acc
    if np.asarray(k_points).ndim == 1:
        return out[0]
    return out


def spectral_upsample(f: ScalarField, factor: int) -> ScalarField:
    """Trigonometric refinement of a sampled field by an integer factor.

    Zero-pads the discrete spectrum, which is exact for band-limited data;
    original samples are reproduced on the refined grid.
    """
    if factor < 1:
        raise GeometryError("upsample factor must be >= 1")
    if factor == 1:
        return f
    vals = np.asarray(f.values)
    spectrum = np.fft.fftshift(np.fft.fftn(vals))
    big_shape = tuple(factor * s for s in f.shape)
    big = np.zeros(big_shape, dtype=np.complex128)
    # align the k = 0 bins: fftshift puts k = 0 at index n // 2
    slices = tuple(
        slice(b // 2 - s // 2, b // 2 - s // 2 + s) for b, s in zip(big_shape, f.shape)
    )
    big[slices] = spectrum
    out = np.fft.ifftn(np.fft.ifftshift(big)) * factor**f.dim
    if not f.is_complex():
        out = out.real
    geom = GridGeometry(
        f.origin, tuple(h / factor for h in f.spacing), big_shape
    )
    return ScalarField(geom, out, 0.0)


def next_fast_len(n: int) -> int:
    """Smallest 5-smooth integer >= n (friendly FFT length)."""
    if n <= 2:
        return max(n, 1)
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


# ---------------------------------------------------------------------------
# direction sets
# ---------------------------------------------------------------------------


def circle_directions(count: int, full: bool = False) -> np.ndarray:
    """Uniform directions on the circle.

    By default covers the half circle ``theta in [0, pi)``; with
    ``full=True`` covers ``[0, 2 pi)``.  Either convention integrates even
    functions with the same equal weights ``|S^1| / count``.
    """
    if count < 1:
        raise GeometryError("need at least one direction")
    span = 2.0 * math.pi if full else math.pi
    theta = span * np.arange(count) / count
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


def angles_of(directions: np.ndarray) -> np.ndarray:
    d = np.asarray(directions, dtype=float)
    return np.arctan2(d[:, 1], d[:, 0])


def fibonacci_sphere(count: int, hemisphere: bool = False) -> np.ndarray:
    """Quasi-uniform points on S^2 (golden-angle spiral), equal weights.

    ``hemisphere=True`` restricts to z > 0, which is enough for even
    integrands such as line or plane data.
    """
    if count < 1:
        raise GeometryError("need at least one direction")
    i = np.arange(count) + 0.5
    if hemisphere:
        z = i / count
    else:
        z = 1.0 - 2.0 * i / count
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def orthonormal_frame(direction) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic pair (e1, e2) completing a 3-D unit vector to a frame."""
    u = unit_vector(direction)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(u)))] = 1.0
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# phantoms
# ---------------------------------------------------------------------------

#: disk layout loosely shaped like a head section: one matrix disk plus
#: interior features, all weights positive so the field stays nonnegative.
DEFAULT_DISKS: tuple[tuple[tuple[float, float], float, float], ...] = (
    ((0.0, 0.0), 0.92, 1.0),
    ((0.0, 0.35), 0.31, 0.6),
    ((-0.35, -0.25), 0.22, 0.8),
    ((0.36, -0.3), 0.15, 0.5),
    ((0.0, -0.55), 0.08, 1.2),
)


def _normalized(field: ScalarField) -> ScalarField:
    total = integrate(field)
    if total == 0:
        raise GeometryError("cannot normalize a zero field")
    return field.with_values(np.asarray(field.values) / total)


def phantom_disks2d(
    geometry: GridGeometry,
    disks: Sequence[tuple[tuple[float, float], float, float]] = DEFAULT_DISKS,
    normalize: bool = False,
) -> ScalarField:
    """Sum of weighted indicator disks; weights must be nonnegative."""
    if geometry.dim != 2:
        raise GeometryError("disks2d phantom is two-dimensional")
    pts = geometry.mesh()
    vals = np.zeros(geometry.shape)
    radius = 0.0
    for center, r, weight in disks:
        if weight < 0:
            raise GeometryError("negative disk weight rejected")
        if r <= 0:
            raise GeometryError("disk radius must be positive")
        c = np.asarray(center, dtype=float)
        vals += weight * ((((pts - c) ** 2).sum(axis=-1)) <= r * r)
        radius = max(radius, float(np.linalg.norm(c)) + r)
    out = ScalarField(geometry, vals, min(radius, geometry.bounding_radius()) if disks else 0.0)
    return _normalized(out) if normalize else out


def phantom_gaussian_mix(
    geometry: GridGeometry,
    components: Sequence[tuple[Sequence[float], float, float]],
    normalize: bool = False,
    tail_sigmas: float = 8.5,
) -> ScalarField:
    """Mixture of isotropic Gaussians, each ``weight * N(center, sigma^2 I)``.

    Samples are truncated to zero beyond ``tail_sigmas`` standard deviations
    so the compact-support certification holds exactly.
    """
    pts = geometry.mesh()
    vals = np.zeros(geometry.shape)
    radius = 0.0
    dim = geometry.dim
    for center, sigma, weight in components:
        if weight < 0:
            raise GeometryError("negative mixture weight rejected")
        if sigma <= 0:
            raise GeometryError("sigma must be positive")
        c = np.asarray(center, dtype=float)
        r2 = ((pts - c) ** 2).sum(axis=-1)
        comp = np.exp(-0.5 * r2 / sigma**2) / ((2.0 * math.pi) ** (dim / 2) * sigma**dim)
        comp[r2 > (tail_sigmas * sigma) ** 2] = 0.0
        vals += weight * comp
        radius = max(radius, float(np.linalg.norm(c)) + tail_sigmas * sigma)
    field = ScalarField(
        geometry, vals, min(radius, geometry.bounding_radius()) if len(components) else 0.0
    )
    return _normalized(field) if normalize else field


def phantom_ball3d(
    geometry: GridGeometry,
    center=(0.0, 0.0, 0.0),
    radius: float = 1.0,
    weight: float = 1.0,
    normalize: bool = False,
) -> ScalarField:
    """Weighted indicator of a ball in R^3."""
    if geometry.dim != 3:
        raise GeometryError("ball3d phantom is three-dimensional")
    if weight < 0:
        raise GeometryError("negative weight rejected")
    if radius <= 0:
        raise GeometryError("radius must be positive")
    pts = geometry.mesh()
    c = np.asarray(center, dtype=float)
    vals = weight * ((((pts - c) ** 2).sum(axis=-1)) <= radius * radius)
    out = ScalarField(
        geometry,
        vals.astype(float),
        min(float(np.linalg.norm(c)) + radius, geometry.bounding_radius()),
    )
    return _normalized(out) if normalize else out


def phantom(kind: str, geometry: GridGeometry, **params) -> ScalarField:
    """Dispatch on phantom ``kind`` in {disks2d, gaussian_mix, ball3d}."""
    builders = {
        "disks2d": phantom_disks2d,
        "gaussian_mix": phantom_gaussian_mix,
        "ball3d": phantom_ball3d,
    }
    if kind not in builders:
        raise GeometryError(f"unknown phantom kind {kind!r}")
    return builders[kind](geometry, **params)


def certify_support(f: ScalarField, threshold_rel: float = 1e-12) -> ScalarField:
    """Zero samples below ``threshold_rel * max|f|`` outside the smallest
    enclosing ball and record that radius as the certified support."""
    vals = np.asarray(f.values).copy()
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0.0:
        return f.with_values(vals, support_radius=min(1e-300, f.geometry.bounding_radius()))
    r = np.sqrt((f.geometry.mesh() ** 2).sum(axis=-1))
    significant = np.abs(vals) > threshold_rel * scale
    radius = float(r[significant].max())
    vals[r > radius * (1 + 1e-12)] = 0.0
    return f.with_values(vals, support_radius=radius)
