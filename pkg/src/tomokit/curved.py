"""Tomography along diffeomorphism-deformed line families in the plane.

A diffeomorphism ``x = phi(q)`` sends the straight-line family
``X = mu . x`` to curves ``X = mu . phi(q)``.  Tomograms of a density on
q-space along those curves equal straight-line tomograms of the pushed
forward density ``ft(x) = f(phi^-1(x)) / J(phi^-1(x))``, which is how both
directions are realized here: forward by pushforward + line transform,
inverse by line inversion + pullback with the Jacobian weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tgm
from .errors import GeometryError, SupportError
from .grid import GridGeometry, ScalarField, interpolate
from .m2 import M2Tomogram, m2_forward, m2_invert
from .radon import Sinogram

__all__ = [
    "PlaneDiffeomorphism",
    "builtin_map",
    "TomogramFamily",
    "pushforward",
    "pushforward_geometry",
    "curved_forward",
    "curved_invert",
    "singular_mask",
    "write_family",
    "read_family",
]


@dataclass(frozen=True)
class PlaneDiffeomorphism:
    """Plane diffeomorphism with its Jacobian determinant and singular set.

    ``forward`` and ``inverse`` map point arrays of shape (..., 2);
    ``jacobian`` returns |det d(phi)/dq| > 0 away from the singular set;
    ``singular_distance`` gives the distance of q to the excluded points.
    """

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    singular_distance: Callable[[np.ndarray], np.ndarray]


def _conformal_forward(q: np.ndarray) -> np.ndarray:
    r2 = (q**2).sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r2 > 0, q / r2, np.inf)


def _hyperbolic_forward(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[..., 0] = np.where(q[..., 0] != 0, 1.0 / q[..., 0], np.inf)
    return out


_BUILTINS = {
    "conformal_inversion": PlaneDiffeomorphism(
        name="conformal_inversion",
        forward=_conformal_forward,
        inverse=_conformal_forward,
        jacobian=lambda q: ((q**2).sum(axis=-1)) ** -2.0,
        singular_distance=lambda q: np.sqrt((q**2).sum(axis=-1)),
    ),
    "hyperbolic": PlaneDiffeomorphism(
        name="hyperbolic",
        forward=_hyperbolic_forward,
        inverse=_hyperbolic_forward,
        jacobian=lambda q: np.asarray(q)[..., 0] ** -2.0,
        singular_distance=lambda q: np.abs(np.asarray(q)[..., 0]),
    ),
}


def builtin_map(name: str) -> PlaneDiffeomorphism:
    """Builtin families: ``conformal_inversion`` (circles through the
    origin) and ``hyperbolic`` (equilateral hyperbolas, one fixed
    asymptote)."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise GeometryError(f"unknown builtin map {name!r}") from None


@dataclass(frozen=True)
class TomogramFamily:
    """Tomogram rows over a parameter family: ``data[i]`` is the density of
    the observable indexed by ``params[i]`` sampled on ``offsets``."""

    params: np.ndarray        # (m, k)
    offsets: np.ndarray
    data: np.ndarray          # (m, len(offsets))
    family: str = "curved"

    def __post_init__(self):
        for name in ("params", "offsets", "data"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.data.shape != (self.params.shape[0], self.offsets.size):
            raise GeometryError("data shape must be (params, offsets)")


def _support_points(f: ScalarField) -> np.ndarray:
    mask = np.asarray(f.values) != 0
    if not mask.any():
        return np.zeros((1, f.dim))
    return f.geometry.mesh()[mask]


def _check_singular_margin(f: ScalarField, mapping: PlaneDiffeomorphism, margin_cells: int) -> None:
    pts = _support_points(f)
    margin = margin_cells * max(f.spacing)
    dist = mapping.singular_distance(pts)
    if float(np.min(dist)) < margin:
        raise SupportError(
            f"support comes within {float(np.min(dist)):.3g} of the singular set "
            f"of {mapping.name!r} (margin {margin:.3g})"
        )


def pushforward_geometry(
    f: ScalarField,
    mapping: PlaneDiffeomorphism,
    n_points: int | None = None,
    pad_fraction: float = 0.1,
) -> GridGeometry:
    """x-space grid enclosing the image of the support, padded 10%.

    ``n_points`` sets the sample count of the longest axis; the other axis
    is scaled to keep the spacing (nearly) isotropic.
    """
    img = mapping.forward(_support_points(f))
    lo = img.min(axis=0)
    hi = img.max(axis=0)
    pad = pad_fraction * (hi - lo)
    lo, hi = lo - pad, hi + pad
    if n_points is None:
        n_points = max(f.shape)
    extent = hi - lo
    h = float(extent.max()) / (n_points - 1)
    shape = tuple(max(int(round(e / h)) + 1, 2) for e in extent)
    return GridGeometry.from_bounds(lo, hi, shape)


def pushforward(
    f: ScalarField,
    mapping: PlaneDiffeomorphism,
    x_geometry: GridGeometry | None = None,
    margin_cells: int = 3,
    supersample: int = 3,
) -> ScalarField:
    """Density seen in x-space: ``ft(x) = f(phi^-1(x)) / J(phi^-1(x))``.

    Conserves mass by the change of variables.  The support must keep
    ``margin_cells`` grid cells away from the singular set.  With
    ``supersample > 1`` each sample is the mean over a sub-cell stencil,
    which averages out the cell-scale noise of interpolating the source
    on the warped grid; ``supersample=1`` gives plain pointwise sampling.
    """
    if f.dim != 2:
        raise GeometryError("curved families are planar")
    _check_singular_margin(f, mapping, margin_cells)
    if x_geometry is None:
        x_geometry = pushforward_geometry(f, mapping)
    x_pts = x_geometry.mesh()
    if supersample <= 1:
        shifts = [np.zeros(2)]
    else:
        offs = (np.arange(supersample) - (supersample - 1) / 2.0) / supersample
        shifts = [
            np.array([du * x_geometry.spacing[0], dv * x_geometry.spacing[1]])
            for du in offs
            for dv in offs
        ]
    out = np.zeros(x_geometry.shape)
    for shift in shifts:
        with np.errstate(divide="ignore", invalid="ignore"):
            q = mapping.inverse(x_pts + shift)
            finite = np.all(np.isfinite(q), axis=-1)
            q = np.where(finite[..., None], q, 0.0)
            vals = interpolate(f, q)
            jac = mapping.jacobian(q)
            out += np.where(finite & np.isfinite(jac) & (jac > 0), vals / jac, 0.0)
    return ScalarField(x_geometry, out / len(shifts), 0.0)


def curved_forward(
    f: ScalarField,
    mapping: PlaneDiffeomorphism,
    params,
    offsets,
    x_geometry: GridGeometry | None = None,
    margin_cells: int = 3,
) -> TomogramFamily:
    """Tomograms of ``f`` along the deformed family ``X = mu . phi(q)``.

    Computed through the pushforward density and the straight-line
    transform in x-space; ``params`` holds the (mu, nu) covectors.
    """
    ft = pushforward(f, mapping, x_geometry, margin_cells)
    ft = _certify(ft)
    t = m2_forward(ft, params, offsets)
    return TomogramFamily(np.atleast_2d(np.asarray(params, float)), t.offsets, t.data, mapping.name)


def _certify(field: ScalarField) -> ScalarField:
    from .grid import certify_support

    return certify_support(field)


def _family_to_m2(t: TomogramFamily) -> M2Tomogram | Sinogram:
    params = np.asarray(t.params)
    norms = np.linalg.norm(params, axis=1)
    if np.allclose(norms, 1.0, rtol=0.0, atol=1e-9):
        return Sinogram(2, params, t.offsets, t.data, float(np.max(np.abs(t.offsets))))
    raise GeometryError(
        "inversion needs unit-covector tomogram rows; rescale the family first"
    )


def singular_mask(
    geometry: GridGeometry, mapping: PlaneDiffeomorphism, margin_cells: int = 3
) -> np.ndarray:
    """True where evaluation is blocked by the singular-set margin."""
    dist = mapping.singular_distance(geometry.mesh())
    return dist < margin_cells * max(geometry.spacing)


def curved_invert(
    t: TomogramFamily,
    mapping: PlaneDiffeomorphism,
    target_geometry: GridGeometry,
    x_geometry: GridGeometry | None = None,
    margin_cells: int = 3,
) -> ScalarField:
    """Recover the q-space density from curved tomograms.

    The straight-line data is inverted in x-space, then pulled back with
    the Jacobian weight: ``f(q) = ft(phi(q)) J(q)``.  Points inside the
    singular margin are returned as 0 (see :func:`singular_mask`).
    """
    if target_geometry.dim != 2:
        raise GeometryError("target geometry must be planar")
    if x_geometry is None:
        # the offsets with nonzero rows bound the x-space support radius
        hot = np.any(np.abs(t.data) > 1e-12 * np.max(np.abs(t.data)), axis=0)
        if not hot.any():
            raise GeometryError("all tomogram rows vanish; nothing to invert")
        radius = 1.1 * float(np.max(np.abs(t.offsets[hot])))
        x_geometry = GridGeometry.centered(radius, max(target_geometry.shape), 2)
    ft = m2_invert(_family_to_m2(t), x_geometry)
    q_pts = target_geometry.mesh()
    mask = singular_mask(target_geometry, mapping, margin_cells)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = mapping.forward(q_pts)
        finite = np.all(np.isfinite(x), axis=-1) & ~mask
        x = np.where(finite[..., None], x, 0.0)
        vals = interpolate(ft, x) * mapping.jacobian(q_pts)
        vals = np.where(finite & np.isfinite(vals), vals, 0.0)
    return ScalarField(target_geometry, vals, 0.0)


def write_family(path, t: TomogramFamily, mapping_name: str, extra: dict | None = None) -> None:
    meta = {
        "map": mapping_name,
        "params": np.asarray(t.params).tolist(),
        "offsets": {
            "start": float(t.offsets[0]),
            "step": float(t.offsets[1] - t.offsets[0]),
            "count": int(t.offsets.size),
        },
    }
    meta.update(extra or {})
    tgm.write_tgm(
        path, "curved-tomogram", 2, t.data.shape,
        (0.0, meta["offsets"]["start"]), (1.0, meta["offsets"]["step"]), t.data, meta,
    )


def read_family(path) -> tuple[TomogramFamily, str]:
    header, payload = tgm.read_tgm(path)
    if header["kind"] != "curved-tomogram":
        raise tgm.FormatError(f"expected curved-tomogram, found {header['kind']!r}")
    ex = header["extra"]
    off = ex["offsets"]
    offsets = off["start"] + off["step"] * np.arange(off["count"])
    return TomogramFamily(np.asarray(ex["params"]), offsets, payload), ex["map"]
