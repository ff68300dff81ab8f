"""Scale-indexed hyperplane transform and its spectral-slice inversion.

The transform indexed by a nonzero covector mu carries the same
information as the unit-direction sinogram: a row at mu is the unit row at
mu/|mu| rescaled by 1/|mu| in value and |mu| in offset.  Storage therefore
keeps only unit rows; arbitrary-mu rows are produced on demand through
that bijection, which makes the scaling invariant hold exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import tgm
from .errors import CoverageError, GeometryError
from .grid import (
    GridGeometry,
    ScalarField,
    angles_of,
    dft_inverse,
    interp_uniform,
    next_fast_len,
    Spectrum,
    unit_vector,
)
from .radon import Sinogram, radon_forward, tomogram_rows, uniform_offsets

__all__ = [
    "M2Tomogram",
    "m2_forward",
    "m2_normalization_check",
    "m2_invert",
    "m2_from_sinogram",
    "sinogram_from_m2",
    "slice_spectra",
    "assemble_spectrum",
    "MIN_DIRECTIONS",
    "write_m2",
    "read_m2",
]

MIN_DIRECTIONS = 64


@dataclass(frozen=True)
class M2Tomogram:
    """Scale-indexed tomograms backed by a unit-direction sinogram.

    ``data[i]`` is the tomogram at covector ``mu[i]`` sampled on the shared
    offset grid; ``unit`` holds the generating sinogram.
    """

    mu: np.ndarray            # (m, dim) nonzero covectors
    offsets: np.ndarray
    data: np.ndarray          # (m, len(offsets))
    unit: Sinogram

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 2 or mu.shape[1] != self.unit.dim:
            raise GeometryError("mu must be an (m, dim) array")
        if np.any(np.linalg.norm(mu, axis=1) == 0.0):
            raise GeometryError("mu = 0 does not define a tomogram")
        for name in ("mu", "offsets", "data"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.data.shape != (mu.shape[0], self.offsets.size):
            raise GeometryError("data shape must be (mu, offsets)")

    @property
    def dim(self) -> int:
        return self.unit.dim

    def row_at(self, mu, offsets=None) -> np.ndarray:
        """Tomogram at an arbitrary nonzero covector via the unit bijection."""
        mu = np.asarray(mu, dtype=float)
        scale = float(np.linalg.norm(mu))
        if scale == 0.0:
            raise GeometryError("mu = 0 does not define a tomogram")
        xi = mu / scale
        dots = np.asarray(self.unit.directions) @ xi
        idx = int(np.argmax(dots))
        if dots[idx] < 1.0 - 1e-9:
            raise GeometryError("direction not present in the stored unit sinogram")
        X = np.asarray(self.offsets if offsets is None else offsets, dtype=float)
        row = interp_uniform(
            self.unit.data[idx], float(self.unit.offsets[0]), self.unit.offset_step, X / scale
        )
        return row / scale


def _distinct_directions(mu: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scales = np.linalg.norm(mu, axis=1)
    dirs = mu / scales[:, None]
    uniq: list[np.ndarray] = []
    index = np.empty(mu.shape[0], dtype=int)
    for i, d in enumerate(dirs):
        for j, u in enumerate(uniq):
            if np.linalg.norm(d - u) < 1e-12:
                index[i] = j
                break
        else:
            uniq.append(d)
            index[i] = len(uniq) - 1
    return np.asarray(uniq), index, scales


def m2_forward(f: ScalarField, mu_samples, offsets) -> M2Tomogram:
    """Tomograms of ``f`` at the given nonzero covectors.

    Realizes the scaling bijection by evaluating the unit-direction
    transform at the exactly rescaled offsets ``X / |mu|`` (a uniform grid
    again), so the scaling relation between a row and its unit generator
    holds to machine precision and no row resampling occurs.  At |mu| = 1
    the row coincides with the sinogram row bit for bit.
    """
    mu = np.atleast_2d(np.asarray(mu_samples, dtype=float))
    if np.any(np.linalg.norm(mu, axis=1) == 0.0):
        raise GeometryError("mu = 0 does not define a tomogram")
    offsets = np.asarray(offsets, dtype=float)
    dirs, index, scales = _distinct_directions(mu)

    radius = f.effective_support_radius()
    step = min(float(min(f.spacing)), float(np.diff(offsets).min()))
    n_unit = max(int(math.ceil(2.0 * radius / step)) + 1, offsets.size)
    unit = radon_forward(f, dirs, uniform_offsets(radius + step, n_unit))

    data = np.empty((mu.shape[0], offsets.size))
    for s in np.unique(scales):
        group = np.nonzero(scales == s)[0]
        scaled = offsets / s
        window = np.abs(scaled) <= radius + step
        rows = np.zeros((group.size, offsets.size))
        if np.any(window):
            rows[:, window] = tomogram_rows(f, dirs[index[group]], scaled[window])
        data[group] = rows / s
    return M2Tomogram(mu, offsets, data, unit)


def m2_normalization_check(t: M2Tomogram) -> float:
    """Max deviation of the row quadratures from unit mass."""
    w = np.ones(t.offsets.size)
    w[0] = w[-1] = 0.5
    step = float(t.offsets[1] - t.offsets[0])
    masses = (t.data * w).sum(axis=1) * step
    return float(np.max(np.abs(masses - 1.0)))


def m2_from_sinogram(g: Sinogram) -> M2Tomogram:
    """View a sinogram as scale-indexed data at the unit covectors."""
    return M2Tomogram(np.asarray(g.directions), np.asarray(g.offsets), np.asarray(g.data), g)


def sinogram_from_m2(t: M2Tomogram) -> Sinogram:
    """Restrict scale-indexed data back to the unit sphere (exact inverse
    of :func:`m2_from_sinogram` on coincident samples)."""
    scales = np.linalg.norm(t.mu, axis=1)
    if np.allclose(scales, 1.0, rtol=0.0, atol=1e-12) and t.data.shape == (
        t.unit.n_directions,
        t.unit.offsets.size,
    ):
        same_offsets = t.offsets.size == t.unit.offsets.size and np.array_equal(
            t.offsets, np.asarray(t.unit.offsets)
        )
        if same_offsets:
            return Sinogram(t.dim, t.mu, t.offsets, t.data, t.unit.source_support_radius)
    return t.unit


# ---------------------------------------------------------------------------
# inversion via spectral slices
# ---------------------------------------------------------------------------


def slice_spectra(g: Sinogram, pad_factor: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    """1-D continuum transforms of every tomogram row.

    Returns ``(tau, table)`` where ``table[i, j]`` approximates the n-D
    transform of the source field at ``tau[j] * directions[i]``.
    """
    n_off = g.offsets.size
    total = next_fast_len(int(math.ceil(pad_factor * n_off)))
    rows = np.zeros((g.n_directions, total))
    rows[:, :n_off] = g.data
    dx = g.offset_step
    spec = np.fft.fft(rows, axis=1)
    tau = 2.0 * math.pi * np.fft.fftfreq(total, d=dx)
    phase = np.exp(-1j * tau * float(g.offsets[0])) * dx
    table = spec * phase[None, :]
    order = np.argsort(tau)
    return tau[order], table[:, order]


def assemble_spectrum(g: Sinogram, geometry: GridGeometry, pad_factor: float = 4.0) -> Spectrum:
    """Resample the polar slice table onto the Cartesian dual grid of
    ``geometry`` with bilinear weights in (tau, angle)."""
    if g.dim != 2:
        raise GeometryError("spectral assembly implemented for the plane")
    tau, table = slice_spectra(g, pad_factor)
    theta = np.mod(angles_of(g.directions), math.pi)
    order = np.argsort(theta)
    theta = theta[order]
    table = table[order]
    # wrap-around row: angle theta[0] + pi carries the reversed-offset data
    theta_ext = np.concatenate([theta, [theta[0] + math.pi]])
    table_ext = np.concatenate([table, table[:1, ::-1]], axis=0)

    ks = Spectrum(geometry, np.zeros(geometry.shape, dtype=complex)).k_axes()
    K1, K2 = np.meshgrid(ks[0], ks[1], indexing="ij")
    phi = np.arctan2(K2, K1)
    radius = np.hypot(K1, K2)
    sign = np.where((phi >= 0) & (phi < math.pi), 1.0, -1.0)
    ang = np.where(sign > 0, phi, phi + math.pi)
    ang = np.mod(ang - theta[0], math.pi) + theta[0]
    r = sign * radius

    d_tau = float(tau[1] - tau[0])
    it = np.clip(((r - tau[0]) / d_tau).astype(int), 0, tau.size - 2)
    wt = np.clip((r - tau[it]) / d_tau, 0.0, 1.0)
    inside = (r >= tau[0]) & (r <= tau[-1])

    ia = np.searchsorted(theta_ext, ang, side="right") - 1
    ia = np.clip(ia, 0, theta_ext.size - 2)
    wa = np.clip((ang - theta_ext[ia]) / (theta_ext[ia + 1] - theta_ext[ia]), 0.0, 1.0)

    vals = (
        table_ext[ia, it] * (1 - wa) * (1 - wt)
        + table_ext[ia, it + 1] * (1 - wa) * wt
        + table_ext[ia + 1, it] * wa * (1 - wt)
        + table_ext[ia + 1, it + 1] * wa * wt
    )
    vals = np.where(inside, vals, 0.0)
    return Spectrum(geometry, vals)


def m2_invert(
    t: M2Tomogram | Sinogram,
    target_geometry: GridGeometry,
    pad_factor: float = 4.0,
) -> ScalarField:
    """Reconstruct the source field from scale-indexed tomograms.

    Numerical route: the 1-D spectral transform of each unit row samples
    the 2-D spectrum along its direction ray; the polar table is resampled
    onto the Cartesian dual grid and inverted.  Planar data only; fewer
    than ``MIN_DIRECTIONS`` directions triggers a coverage warning.
    """
    g = t if isinstance(t, Sinogram) else sinogram_from_m2(t)
    if g.dim != 2:
        raise GeometryError("spectral-slice inversion implemented for the plane")
    if g.data.size == 0 or not np.any(g.data):
        if g.data.size == 0:
            raise CoverageError("empty tomogram data")
    if g.n_directions < MIN_DIRECTIONS:
        warnings.warn(
            f"only {g.n_directions} directions (< {MIN_DIRECTIONS}); "
            "angular coverage may be insufficient",
            stacklevel=2,
        )
    spectrum = assemble_spectrum(g, target_geometry, pad_factor)
    field = dft_inverse(spectrum)
    vals = np.asarray(field.values)
    return ScalarField(target_geometry, vals.real, 0.0)


def write_m2(path, t: M2Tomogram, extra: dict | None = None) -> None:
    meta = {
        "mu": np.asarray(t.mu).tolist(),
        "offsets": {
            "start": float(t.offsets[0]),
            "step": float(t.offsets[1] - t.offsets[0]),
            "count": int(t.offsets.size),
        },
        "unit_directions": np.asarray(t.unit.directions).tolist(),
        "unit_offsets": {
            "start": float(t.unit.offsets[0]),
            "step": t.unit.offset_step,
            "count": int(t.unit.offsets.size),
        },
        "source_support_radius": t.unit.source_support_radius,
    }
    meta.update(extra or {})
    payload = np.concatenate([t.data.reshape(-1), np.asarray(t.unit.data).reshape(-1)])
    meta["split"] = int(t.data.size)
    meta["data_shape"] = list(t.data.shape)
    meta["unit_shape"] = list(t.unit.data.shape)
    tgm.write_tgm(path, "m2", t.dim, (payload.size,), (0.0,), (1.0,), payload, meta)


def read_m2(path) -> M2Tomogram:
    header, payload = tgm.read_tgm(path)
    if header["kind"] != "m2":
        raise tgm.FormatError(f"expected m2, found {header['kind']!r}")
    ex = header["extra"]
    split = int(ex["split"])
    data = payload[:split].reshape(ex["data_shape"])
    unit_data = payload[split:].reshape(ex["unit_shape"])
    uo = ex["unit_offsets"]
    unit = Sinogram(
        int(header["dim"]),
        np.asarray(ex["unit_directions"]),
        uo["start"] + uo["step"] * np.arange(uo["count"]),
        unit_data,
        float(ex["source_support_radius"]),
    )
    off = ex["offsets"]
    offsets = off["start"] + off["step"] * np.arange(off["count"])
    return M2Tomogram(np.asarray(ex["mu"]), offsets, data, unit)
