"""Phase-space formulation of one-dimensional quantum states: operator
kernels, quasi-distribution transform, quadrature tomograms, and state
reconstruction from tomograms.

Grid conventions.  States live on a uniform position grid (N points, step
h).  The natural phase-space grid pairs that axis with N momenta spanning
``(-pi hbar / 2h, pi hbar / 2h]``; symbol tables use the half-step
position axis (2N - 1 points) and the full momentum band ``+-pi hbar / h``
(2N points).  On those grids the transform pairs below are exact discrete
Fourier sums, so round-trip and marginal identities hold to roundoff for
states supported in the central half of the grid and band-limited to half
the position Nyquist band.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as _dc_field

import numpy as np

from . import tgm
from .errors import CoverageError, GeometryError, InvariantError, NyquistError
from .grid import GridGeometry, ScalarField, certify_support
from .m2 import m2_forward, m2_invert
from .radon import Sinogram, uniform_offsets

__all__ = [
    "XGrid",
    "DensityMatrix",
    "WignerField",
    "QuadratureTomogramSet",
    "oscillator_state",
    "pure_state",
    "mix",
    "wigner",
    "phase_space_geometry",
    "symbol_geometry",
    "weyl_quantize",
    "dequantize",
    "trace_pairing",
    "operator_expectation",
    "quadrature_tomograms",
    "reconstruct_density",
    "fidelity",
    "uncertainty_product",
    "write_density_matrix",
    "read_density_matrix",
    "write_tomograms",
    "read_tomograms",
]


@dataclass(frozen=True)
class XGrid:
    """Uniform 1-D position grid."""

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if self.n < 2 or self.dx <= 0:
            raise GeometryError("position grid needs n >= 2 and dx > 0")

    @classmethod
    def centered(cls, half_width: float, n: int) -> "XGrid":
        return cls(-half_width, 2.0 * half_width / (n - 1), n)

    def axis(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)


@dataclass(frozen=True)
class DensityMatrix:
    """Discretized state kernel rho(x, y) on a uniform position grid.

    Hermiticity and unit trace are enforced at construction; positive
    semidefiniteness is checked and recorded in ``min_eigenvalue`` but not
    enforced unless ``strict`` clipping is requested by the producer.
    """

    grid: XGrid
    kernel: np.ndarray
    hbar: float = 1.0
    trace_correction: float = 0.0

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.complex128)
        if k.shape != (self.grid.n, self.grid.n):
            raise GeometryError("kernel must be square on the position grid")
        if self.hbar <= 0:
            raise GeometryError("hbar must be positive")
        herm = float(np.max(np.abs(k - k.conj().T)))
        scale = float(np.max(np.abs(k))) or 1.0
        if herm > 1e-10 * scale:
            raise InvariantError(f"kernel is not Hermitian (defect {herm:.3e})")
        tr = float(np.real(np.trace(k)) * self.grid.dx)
        if abs(tr - 1.0) > 1e-6:
            raise InvariantError(f"kernel trace {tr:.8f} deviates from 1 beyond 1e-6")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.kernel))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.kernel * self.grid.dx).min())

    def is_positive(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue() >= -tol


@dataclass(frozen=True)
class WignerField:
    """Real phase-space quasi-density of a state; may take negative values
    but integrates to one and has the position/momentum marginals."""

    field: ScalarField
    hbar: float

    def mass(self) -> float:
        from .grid import integrate

        return float(np.real(integrate(self.field)))

    def marginal_q(self) -> np.ndarray:
        w = np.ones(self.field.shape[1])
        w[0] = w[-1] = 0.5
        return (np.asarray(self.field.values) * w).sum(axis=1) * self.field.spacing[1]

    def marginal_p(self) -> np.ndarray:
        w = np.ones(self.field.shape[0])
        w[0] = w[-1] = 0.5
        return (np.asarray(self.field.values) * w[:, None]).sum(axis=0) * self.field.spacing[0]


@dataclass(frozen=True)
class QuadratureTomogramSet:
    """Probability densities of the observables mu q + nu p, one row per
    (mu, nu) parameter, on a shared offset grid."""

    params: np.ndarray      # (m, 2) nonzero covectors
    offsets: np.ndarray
    data: np.ndarray        # (m, len(offsets))
    hbar: float
    clip_violation: float = 0.0   # most negative pre-clip row value

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        if params.ndim != 2 or params.shape[1] != 2:
            raise GeometryError("params must be (m, 2) covectors")
        if np.any(np.linalg.norm(params, axis=1) == 0.0):
            raise GeometryError("(mu, nu) = 0 is not a quadrature")
        for name in ("params", "offsets", "data"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.data.shape != (params.shape[0], self.offsets.size):
            raise GeometryError("data shape must be (params, offsets)")

    def masses(self) -> np.ndarray:
        w = np.ones(self.offsets.size)
        w[0] = w[-1] = 0.5
        return (self.data * w).sum(axis=1) * float(self.offsets[1] - self.offsets[0])


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def oscillator_state(k: int, grid: XGrid, hbar: float = 1.0) -> np.ndarray:
    """k-th harmonic-oscillator eigenfunction sampled on the grid."""
    if k < 0:
        raise GeometryError("state index must be >= 0")
    x = grid.axis() / math.sqrt(hbar)
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    herm = np.polynomial.hermite.hermval(x, coeffs)
    norm = (math.pi * hbar) ** -0.25 / math.sqrt(2.0**k * math.factorial(k))
    return norm * herm * np.exp(-0.5 * x * x)


def pure_state(psi, grid: XGrid, hbar: float = 1.0, strict: bool = False) -> DensityMatrix:
    """Rank-one state ``rho(x, y) = psi(x) conj(psi(y))``.

    ``psi`` must be normalized to 1e-8 under the grid quadrature; larger
    deviations are renormalized with a warning, or rejected in strict mode.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (grid.n,):
        raise GeometryError("psi must be sampled on the position grid")
    w = np.ones(grid.n)
    w[0] = w[-1] = 0.5
    norm2 = float((np.abs(psi) ** 2 * w).sum() * grid.dx)
    if abs(norm2 - 1.0) > 1e-8:
        if strict:
            raise InvariantError(f"|psi|^2 integrates to {norm2:.10f}, not 1")
        warnings.warn(f"renormalizing psi (norm^2 = {norm2:.6f})", stacklevel=2)
        psi = psi / math.sqrt(norm2)
    kernel = np.outer(psi, psi.conj())
    # trapezoid and plain-sum traces differ at the grid edge; states must
    # vanish there, renormalize the residual so the trace gate is exact
    tr = float(np.real(np.trace(kernel)) * grid.dx)
    return DensityMatrix(grid, kernel / tr, hbar)


def mix(states: list[DensityMatrix], weights) -> DensityMatrix:
    """Convex combination of density matrices on a shared grid."""
    weights = np.asarray(weights, dtype=float)
    if len(states) != weights.size or len(states) == 0:
        raise GeometryError("need matching nonempty states and weights")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise GeometryError("weights must be a probability vector")
    grid0 = states[0].grid
    hbar = states[0].hbar
    if any(s.grid != grid0 or s.hbar != hbar for s in states):
        raise GeometryError("states must share grid and hbar")
    kernel = sum(w * np.asarray(s.kernel) for w, s in zip(weights, states))
    return DensityMatrix(grid0, kernel, hbar)


# ---------------------------------------------------------------------------
# phase-space transforms
# ---------------------------------------------------------------------------


def phase_space_geometry(grid: XGrid, hbar: float = 1.0, n_p: int | None = None) -> GridGeometry:
    """Natural (q, p) grid: positions as sampled, momenta on the exact dual
    band ``+-pi hbar / (2 dx)``."""
    n_p = grid.n if n_p is None else n_p
    dp = 2.0 * math.pi * hbar / (n_p * 2.0 * grid.dx)
    p0 = -dp * (n_p // 2)
    return GridGeometry((grid.x0, p0), (grid.dx, dp), (grid.n, n_p))


def symbol_geometry(grid: XGrid, hbar: float = 1.0) -> GridGeometry:
    """Grid for operator symbols: half-step positions (2N - 1 points) and
    the full momentum band ``+-pi hbar / dx`` (2N points)."""
    n = grid.n
    d_eta = math.pi * hbar / (n * grid.dx)
    eta0 = -d_eta * n
    return GridGeometry((grid.x0, eta0), (grid.dx / 2.0, d_eta), (2 * n - 1, 2 * n))


def _moment_estimates(rho: DensityMatrix) -> tuple[float, float, float, float]:
    x = rho.grid.axis()
    h = rho.grid.dx
    diag = np.clip(rho.diagonal(), 0.0, None)
    mass = diag.sum() * h
    mq = float((diag * x).sum() * h / mass)
    vq = float((diag * (x - mq) ** 2).sum() * h / mass)
    k = np.asarray(rho.kernel)
    g = np.gradient(k, h, axis=0)
    mp = float(np.real(-1j * rho.hbar * np.trace(g) * h))
    gxy = np.gradient(g, h, axis=1)
    vp2 = float(np.real(rho.hbar**2 * np.trace(gxy) * h))
    vp = max(vp2 - mp * mp, 1e-30)
    return mq, math.sqrt(max(vq, 1e-30)), mp, math.sqrt(vp)


def _nyquist_check(rho: DensityMatrix, geometry: GridGeometry, sigmas: float = 4.0) -> None:
    mq, sq, mp, sp = _moment_estimates(rho)
    q_lo, p_lo = geometry.origin
    q_hi = q_lo + geometry.spacing[0] * (geometry.shape[0] - 1)
    p_hi = p_lo + geometry.spacing[1] * (geometry.shape[1] - 1)
    if mq - sigmas * sq < q_lo or mq + sigmas * sq > q_hi:
        raise NyquistError(
            f"position window [{q_lo:g}, {q_hi:g}] misses the state spread "
            f"{mq:.3g} +- {sigmas:g} x {sq:.3g}"
        )
    if mp - sigmas * sp < p_lo or mp + sigmas * sp > p_hi:
        raise NyquistError(
            f"momentum window [{p_lo:g}, {p_hi:g}] misses the state spread "
            f"{mp:.3g} +- {sigmas:g} x {sp:.3g}; refine the position grid"
        )


def _halfgrid_slices(kernel: np.ndarray, n: int) -> np.ndarray:
    """Anti-diagonal slices for every half-step midpoint.

    Row l (midpoint ``x0 + l dx / 2``) holds ``kernel[(l+d)/2, (l-d)/2]``
    over the difference index d of parity l, resampled on the slice grid
    ``y = 2 dx e`` with ``e`` in ``[-n//2, n//2)``.
    """
    slices = np.zeros((2 * n - 1, n), dtype=np.complex128)
    e = np.arange(-(n // 2), n - (n // 2))
    for l in range(2 * n - 1):
        d = 2 * e + (l % 2)
        a = (l + d) // 2
        b = (l - d) // 2
        valid = (a >= 0) & (a < n) & (b >= 0) & (b < n)
        slices[l, valid] = kernel[a[valid], b[valid]]
    return slices


def _wigner_values(
    kernel: np.ndarray,
    grid: XGrid,
    hbar: float,
    p_axis: np.ndarray,
    half_grid: bool,
) -> np.ndarray:
    """Slice-and-transform core shared by the quasi-density and symbol maps."""
    n = grid.n
    dy = 2.0 * grid.dx
    e = np.arange(-(n // 2), n - (n // 2))
    slices = _halfgrid_slices(kernel, n)
    if not half_grid:
        slices = slices[::2]
    phase = np.exp(-1j * np.outer(e * dy, p_axis) / hbar)
    vals = (slices @ phase) * (dy / (2.0 * math.pi * hbar))
    if half_grid:
        # odd midpoint rows sit on y = (2e+1) dx: shift by one half step
        vals[1::2] *= np.exp(-1j * grid.dx * p_axis / hbar)[None, :]
    return vals


def wigner(
    rho: DensityMatrix,
    geometry: GridGeometry | None = None,
    check_nyquist: bool = True,
) -> WignerField:
    """Phase-space quasi-density of a state.

    On the natural geometry the anti-diagonal slices are exact kernel
    gathers and the momentum transform is an exact discrete pair; on a
    caller-supplied geometry the slices are built by bilinear kernel
    interpolation.  The imaginary residue must stay below 1e-8.
    """
    natural = geometry is None
    if natural:
        geometry = phase_space_geometry(rho.grid, rho.hbar)
    if check_nyquist:
        _nyquist_check(rho, geometry)
    p_axis = geometry.axes()[1]
    if natural:
        vals = _wigner_values(np.asarray(rho.kernel), rho.grid, rho.hbar, p_axis, half_grid=False)
    else:
        vals = _wigner_general(rho, geometry)
    scale = float(np.max(np.abs(vals))) or 1.0
    residue = float(np.max(np.abs(vals.imag)))
    if residue > 1e-8 * scale:
        raise InvariantError(f"imaginary residue {residue:.3e} exceeds 1e-8")
    out = ScalarField(geometry, vals.real, 0.0)
    return WignerField(certify_support(out), rho.hbar)


def _wigner_general(rho: DensityMatrix, geometry: GridGeometry) -> np.ndarray:
    from .grid import _multilinear

    q_axis, p_axis = geometry.axes()
    x = rho.grid.axis()
    span = float(x[-1] - x[0])
    n_y = 2 * rho.grid.n
    y = np.linspace(-span, span, n_y)
    dy = y[1] - y[0]
    origin = np.array([x[0], x[0]])
    spacing = np.array([rho.grid.dx, rho.grid.dx])
    pts = np.empty((q_axis.size, n_y, 2))
    pts[..., 0] = q_axis[:, None] + 0.5 * y[None, :]
    pts[..., 1] = q_axis[:, None] - 0.5 * y[None, :]
    slices = _multilinear(np.asarray(rho.kernel), origin, spacing, pts.reshape(-1, 2))
    slices = slices.reshape(q_axis.size, n_y)
    phase = np.exp(-1j * np.outer(y, p_axis) / rho.hbar)
    return slices @ phase * (dy / (2.0 * math.pi * rho.hbar))


# ---------------------------------------------------------------------------
# symbols and kernels
# ---------------------------------------------------------------------------


def _symbol_table(sigma: ScalarField, grid: XGrid, hbar: float) -> np.ndarray:
    """``T[l, m] = (1/2 pi hbar) int sigma(u_l, eta) exp(i eta v_m / hbar)``
    over the symbol's momentum axis, for half-step midpoints u_l and
    differences ``v_m = (m - (N-1)) dx``."""
    if sigma.dim != 2:
        raise GeometryError("symbols live on a (q, p) grid")
    q_axis, eta = sigma.geometry.axes()[0], sigma.geometry.axes()[1]
    n = grid.n
    u = grid.x0 + (grid.dx / 2.0) * np.arange(2 * n - 1)
    v = grid.dx * (np.arange(2 * n - 1) - (n - 1))
    d_eta = sigma.spacing[1]
    phase = np.exp(1j * np.outer(eta, v) / hbar) * (d_eta / (2.0 * math.pi * hbar))
    rows = np.asarray(sigma.values) @ phase          # (n_q, n_v)
    # evaluate at the midpoints: exact when they sit on the symbol q-axis
    t = (u - q_axis[0]) / sigma.spacing[0]
    i0 = np.clip(np.floor(t + 1e-9).astype(int), 0, q_axis.size - 2)
    w = np.clip(t - i0, 0.0, 1.0)
    w[np.abs(w) < 1e-9] = 0.0
    inside = (t >= -1e-9) & (t <= q_axis.size - 1 + 1e-9)
    table = rows[i0] * (1 - w)[:, None] + rows[i0 + 1] * w[:, None]
    table[~inside] = 0.0
    return table


def weyl_quantize(sigma: ScalarField, grid: XGrid, hbar: float = 1.0) -> np.ndarray:
    """Operator kernel of a phase-space symbol on the position grid.

    ``K(x_i, x_j)`` is the partial transform of the symbol in its momentum
    argument, evaluated at midpoint ``(x_i + x_j)/2`` and difference
    ``x_i - x_j``.  The symbol should be band-limited on its grid;
    midpoints off the symbol's position axis are linearly interpolated.
    """
    table = _symbol_table(sigma, grid, hbar)
    n = grid.n
    i = np.arange(n)
    return table[i[:, None] + i[None, :], i[:, None] - i[None, :] + (n - 1)]


def dequantize(kernel: np.ndarray, grid: XGrid, hbar: float = 1.0) -> ScalarField:
    """Symbol of an operator kernel: ``2 pi hbar`` times its phase-space
    transform, returned on the natural symbol geometry."""
    kernel = np.asarray(kernel, dtype=np.complex128)
    if kernel.shape != (grid.n, grid.n):
        raise GeometryError("kernel must be square on the position grid")
    geom = symbol_geometry(grid, hbar)
    p_axis = geom.axes()[1]
    vals = _wigner_values(kernel, grid, hbar, p_axis, half_grid=True)
    vals = vals * (2.0 * math.pi * hbar)
    if float(np.max(np.abs(vals.imag))) <= 1e-10 * (float(np.max(np.abs(vals))) or 1.0):
        vals = vals.real
    return ScalarField(geom, vals, 0.0)


def trace_pairing(
    sigma: ScalarField,
    tau: ScalarField,
    grid: XGrid,
    hbar: float = 1.0,
) -> tuple[float, float, float]:
    """Both sides of the product-trace identity.

    Left: double quadrature of the two operator kernels; right: phase-space
    quadrature of the symbol product over ``2 pi hbar``.  Returns
    ``(lhs, rhs, relative deviation)``.
    """
    k_sigma = weyl_quantize(sigma, grid, hbar)
    k_tau = weyl_quantize(tau, grid, hbar)
    lhs = float(np.real((k_sigma * k_tau.T).sum()) * grid.dx**2)
    if sigma.geometry != tau.geometry:
        raise GeometryError("symbols must share a grid")
    from .grid import integrate, quadrature_weights

    prod = np.asarray(sigma.values) * np.asarray(tau.values)
    rhs = float(np.real((prod * quadrature_weights(sigma.geometry)).sum())) / (
        2.0 * math.pi * hbar
    )
    denom = max(abs(lhs), abs(rhs))
    dev = abs(lhs - rhs) / denom if denom > 0 else 0.0
    return lhs, rhs, dev


def operator_expectation(kernel: np.ndarray, rho: DensityMatrix) -> float:
    """``Tr(S rho)`` by double quadrature of the kernels."""
    k = np.asarray(kernel)
    return float(np.real((k * np.asarray(rho.kernel).T).sum()) * rho.grid.dx**2)


# ---------------------------------------------------------------------------
# tomograms and reconstruction
# ---------------------------------------------------------------------------


def _as_params(params) -> np.ndarray:
    arr = np.asarray(params, dtype=float)
    if arr.ndim == 1:
        return np.stack([np.cos(arr), np.sin(arr)], axis=1)
    return arr


def _spectral_rows(field: ScalarField, params: np.ndarray, offsets: np.ndarray, upsample: int = 32) -> np.ndarray:
    """Tomogram rows of a band-limited field on a shared offset grid.

    Uses the shear projector per direction (spectrally exact), refines the
    resulting row by trigonometric upsampling, and resamples linearly onto
    the requested offsets; scaled covectors go through the homogeneity
    relation so the shared grid stays valid for every |mu|.
    """
    from .grid import interp_uniform
    from .radon import spectral_tomogram

    rows = np.empty((params.shape[0], offsets.size))
    for i, mu in enumerate(params):
        s = float(np.linalg.norm(mu))
        xs, row = spectral_tomogram(field, mu / s)
        dx = float(xs[1] - xs[0])
        fine_n = upsample * row.size
        fine = np.fft.irfft(np.fft.rfft(row), n=fine_n) * upsample
        rows[i] = interp_uniform(fine, float(xs[0]), dx / upsample, offsets / s) / s
    return rows


def quadrature_tomograms(
    rho: DensityMatrix,
    params,
    offsets=None,
    geometry: GridGeometry | None = None,
) -> QuadratureTomogramSet:
    """Distributions of the observables ``mu q + nu p`` in the state.

    Tomogram rows of the phase-space quasi-density, computed with the
    spectrally exact shear projector (the quasi-density of a grid-resolved
    state is band-limited); genuine quadrature distributions are
    nonnegative even where the quasi-density is not, so small negative
    excursions are clipped at -1e-9 and the worst pre-clip value is
    reported on the result.
    """
    params = _as_params(params)
    w = wigner(rho, geometry)
    if offsets is None:
        radius = w.field.effective_support_radius()
        scale = float(np.max(np.linalg.norm(params, axis=1)))
        offsets = uniform_offsets(scale * radius * 1.05, 2 * max(w.field.shape) + 1)
    offsets = np.asarray(offsets, dtype=float)
    data = _spectral_rows(w.field, params, offsets)
    worst = float(np.min(data))
    if worst < -1e-9:
        warnings.warn(f"tomogram negativity {worst:.3e} clipped", stacklevel=2)
    data = np.clip(data, 0.0, None)
    return QuadratureTomogramSet(params, offsets, data, rho.hbar, clip_violation=min(worst, 0.0))


def _tomograms_as_sinogram(t: QuadratureTomogramSet) -> Sinogram:
    params = np.asarray(t.params)
    norms = np.linalg.norm(params, axis=1)
    if not np.allclose(norms, 1.0, rtol=0.0, atol=1e-9):
        raise GeometryError("reconstruction expects unit (mu, nu) rows")
    radius = float(np.max(np.abs(t.offsets)))
    return Sinogram(2, params, t.offsets, t.data, radius)


def reconstruct_density(
    t: QuadratureTomogramSet,
    grid: XGrid,
    hbar: float | None = None,
    min_angles: int = 64,
    strict_positivity: bool = False,
) -> DensityMatrix:
    """Recover the state kernel from quadrature tomograms.

    The tomogram rows determine the phase-space quasi-density through the
    spectral-slice inversion; its partial transform in the momentum
    argument at difference ``x - y`` gives the kernel.  Hermiticity is
    enforced by averaging, the trace is renormalized (correction above 5%
    aborts: the data is inconsistent), and the smallest eigenvalue is
    reported via the result; ``strict_positivity`` clips negative
    eigenvalues and renormalizes.
    """
    hbar = t.hbar if hbar is None else hbar
    masses = t.masses()
    if np.any(np.abs(masses - 1.0) > 0.1):
        raise InvariantError(
            f"tomogram rows are not normalized densities (worst mass {masses[np.argmax(np.abs(masses-1))]:.4f})"
        )
    if t.params.shape[0] < min_angles:
        raise CoverageError(
            f"{t.params.shape[0]} quadrature directions < required {min_angles}"
        )
    geom = symbol_geometry(grid, hbar)
    w_rec = m2_invert(_tomograms_as_sinogram(t), geom)

    eta = geom.axes()[1]
    d_eta = geom.spacing[1]
    n = grid.n
    v = grid.dx * (np.arange(2 * n - 1) - (n - 1))
    phase = np.exp(1j * np.outer(eta, v) / hbar) * d_eta
    table = np.asarray(w_rec.values) @ phase      # (2n-1 midpoints, 2n-1 diffs)
    i = np.arange(n)
    kernel = table[i[:, None] + i[None, :], i[:, None] - i[None, :] + (n - 1)]

    kernel = 0.5 * (kernel + kernel.conj().T)
    tr = float(np.real(np.trace(kernel)) * grid.dx)
    correction = abs(tr - 1.0)
    if correction > 0.05:
        raise InvariantError(
            f"trace correction {correction:.3f} exceeds 5%; tomograms inconsistent"
        )
    kernel = kernel / tr
    if strict_positivity:
        vals, vecs = np.linalg.eigh(kernel * grid.dx)
        vals = np.clip(vals, 0.0, None)
        vals /= vals.sum()
        kernel = (vecs * vals) @ vecs.conj().T / grid.dx
    return DensityMatrix(grid, kernel, hbar, trace_correction=correction)


def fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """State fidelity of two discretized kernels (eigenvalue route;
    slightly negative numerical eigenvalues are clipped)."""
    if rho1.grid != rho2.grid:
        raise GeometryError("states must share the position grid")
    a = np.asarray(rho1.kernel) * rho1.grid.dx
    b = np.asarray(rho2.kernel) * rho2.grid.dx
    va, ua = np.linalg.eigh(a)
    va = np.clip(va, 0.0, None)
    sqrt_a = (ua * np.sqrt(va)) @ ua.conj().T
    m = sqrt_a @ b @ sqrt_a
    ev = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    return float(np.sqrt(ev).sum() ** 2)


def uncertainty_product(rho: DensityMatrix) -> float:
    """``Var(q) Var(p)`` from the phase-space marginals."""
    w = wigner(rho)
    q_axis, p_axis = w.field.geometry.axes()
    mq = w.marginal_q()
    mp = w.marginal_p()
    mq_mass = mq.sum() * w.field.spacing[0]
    mp_mass = mp.sum() * w.field.spacing[1]
    qm = (mq * q_axis).sum() * w.field.spacing[0] / mq_mass
    pm = (mp * p_axis).sum() * w.field.spacing[1] / mp_mass
    vq = (mq * (q_axis - qm) ** 2).sum() * w.field.spacing[0] / mq_mass
    vp = (mp * (p_axis - pm) ** 2).sum() * w.field.spacing[1] / mp_mass
    return float(vq * vp)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def write_density_matrix(path, rho: DensityMatrix, extra: dict | None = None) -> None:
    meta = {"hbar": rho.hbar, "x0": rho.grid.x0, "dx": rho.grid.dx, "n": rho.grid.n}
    meta.update(extra or {})
    tgm.write_tgm(
        path, "density-matrix", 1, rho.kernel.shape,
        (rho.grid.x0, rho.grid.x0), (rho.grid.dx, rho.grid.dx), rho.kernel, meta,
    )


def read_density_matrix(path) -> DensityMatrix:
    header, payload = tgm.read_tgm(path)
    if header["kind"] != "density-matrix":
        raise tgm.FormatError(f"expected density-matrix, found {header['kind']!r}")
    ex = header["extra"]
    grid = XGrid(float(ex["x0"]), float(ex["dx"]), int(ex["n"]))
    return DensityMatrix(grid, payload, float(ex["hbar"]))


def write_tomograms(path, t: QuadratureTomogramSet, extra: dict | None = None) -> None:
    meta = {
        "hbar": t.hbar,
        "params": np.asarray(t.params).tolist(),
        "offsets": {
            "start": float(t.offsets[0]),
            "step": float(t.offsets[1] - t.offsets[0]),
            "count": int(t.offsets.size),
        },
        "clip_violation": t.clip_violation,
    }
    meta.update(extra or {})
    tgm.write_tgm(
        path, "quadrature-tomograms", 2, t.data.shape,
        (0.0, meta["offsets"]["start"]), (1.0, meta["offsets"]["step"]), t.data, meta,
    )


def read_tomograms(path) -> QuadratureTomogramSet:
    header, payload = tgm.read_tgm(path)
    if header["kind"] != "quadrature-tomograms":
        raise tgm.FormatError(f"expected quadrature-tomograms, found {header['kind']!r}")
    ex = header["extra"]
    off = ex["offsets"]
    offsets = off["start"] + off["step"] * np.arange(off["count"])
    return QuadratureTomogramSet(
        np.asarray(ex["params"]), offsets, payload, float(ex["hbar"]),
        clip_violation=float(ex.get("clip_violation", 0.0)),
    )
