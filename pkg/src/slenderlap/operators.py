r"""Discrete layer operators on the tube surface.

Every operator is a DiscreteOperator with a dense matrix acting on flattened
(n_s, n_theta) samples, assembled from one of two backends:

  direct:  punctured trapezoid of the exact curved kernel times the surface
           Jacobian.  Low order, trivially correct; the oracle.

  split:   the curved operator as straight-spectral part plus curvature
           remainders.  For the single layer, with psi = phi J_eps / eps:

             S[phi] = Sbar_spec[P0 psi] - Tail[P0 psi] + C_rem[P0 psi]
                      + S_mean[psi_bar]

           where Sbar_spec applies m_S(k, l) in Fourier space (exact on grid
           modes), Tail is the |s-hat| > 1/2 straight-kernel image sum
           (2 M images, M = 20; the neglected far field is annihilated to
           O(M^-2) by zero-s-mean densities), C_rem is the punctured
           trapezoid of (G - G-bar) eps over one period, and S_mean routes
           the s-mean through the curved kernel.  The double layer uses m_D
           spectrally on psi plus the (K_D - K_D-bar) J quadrature and the
           D tail.

The remainder pieces of the curved-minus-straight operators are also exposed
individually (R_S0..R_S3, R_D0..R_D2) with plain eps weight, matching the
operator identity R_S = S - Sbar piece by piece:

    R_S0 = -(straight tail),            zero-s-mean densities only
    R_S1 = (1/4pi) (1/|R| - 1/|R_t|) eps
    R_S2 = (1/4pi) (1/|R_t| - 1/|R-bar|) eps
    R_S3 = -(1/4pi) (1/|R|) eps^2 khat(source)
    R_D0 = -(straight D tail)
    R_D1 = (K_D - K_D-bar) eps
    R_D2 = -K_D eps^2 khat(source)

so that S = Sbar + sum R_Sj on zero-s-mean densities and D = Dbar + sum R_Dj.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SurfaceGrid
from .kernels import FOURPI, PairGeometry
from .spectral import FourierSymbol, GridFunction, symbol_dense_matrix

TAIL_IMAGES = 20
# dense matrices capped at DENSE_NODE_CAP^2 entries; split assembly holds a
# few of them alive at once and has to fit in a small-memory environment
DENSE_NODE_CAP = 4096


class AssemblyError(RuntimeError):
    pass


class ZeroMeanViolation(ValueError):
    """Operator defined only on zero-s-mean densities got mean-carrying data."""


@dataclass
class DiscreteOperator:
    """Dense linear map on surface GridFunctions with a uniform interface."""

    name: str
    backend: str
    grid: SurfaceGrid
    matrix: np.ndarray
    requires_zero_s_mean: bool = False
    parts: dict = field(default_factory=dict)

    def apply(self, f):
        vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
        if self.requires_zero_s_mean:
            mean = np.mean(vals, axis=0)
            scale = np.max(np.abs(vals)) or 1.0
            if np.max(np.abs(mean)) > 1e-10 * scale:
                raise ZeroMeanViolation(
                    f"{self.name} is defined on zero-s-mean densities only")
        out = self.matrix @ vals.reshape(-1)
        return GridFunction(out.reshape(vals.shape))

    def materialize(self):
        return self.matrix

    def __add__(self, other):
        if self.grid is not other.grid:
            raise ValueError("operator grids differ")
        return DiscreteOperator(
            name=f"{self.name}+{other.name}", backend=self.backend,
            grid=self.grid, matrix=self.matrix + other.matrix,
            requires_zero_s_mean=self.requires_zero_s_mean
            or other.requires_zero_s_mean)


def _check_dense_cap(grid):
    if grid.n_nodes > DENSE_NODE_CAP:
        raise AssemblyError(
            f"dense assembly capped at {DENSE_NODE_CAP} nodes, "
            f"got {grid.n_nodes}")


def _circulant_from_template(t):
    """Dense matrix of a discrete convolution with template t(ds, dt)."""
    n_s, n_t = t.shape
    ids = (np.arange(n_s)[:, None] - np.arange(n_s)[None, :]) % n_s
    idt = (np.arange(n_t)[:, None] - np.arange(n_t)[None, :]) % n_t
    return t[ids[:, None, :, None], idt[None, :, None, :]].reshape(
        n_s * n_t, n_s * n_t)


def projector_s_mean(grid):
    """Dense P_mean: replace f(s, theta) by its s-average (theta profile)."""
    block = np.full((grid.n_s, grid.n_s), 1.0 / grid.n_s)
    return np.kron(block, np.eye(grid.n_theta))


def projector_zero_s_mean(grid):
    return np.eye(grid.n_nodes) - projector_s_mean(grid)


def _right_mul_smean(mat, n_s, n_t):
    """mat @ P_mean without the N^3 matmul (column s-averaging)."""
    avg = mat.reshape(-1, n_s, n_t).mean(axis=1)
    return np.repeat(avg[:, None, :], n_s, axis=1).reshape(mat.shape)


def _right_mul_p0(mat, n_s, n_t):
    return mat - _right_mul_smean(mat, n_s, n_t)


# kernel matrices -------------------------------------------------------------

def _dense_from_pairs(grid, entry_fn, weight=None, need=("R",)):
    """Assemble sum_a ker[i,a] * weight[a] * node_weight, punctured diagonal."""
    _check_dense_cap(grid)
    pg = PairGeometry(grid)
    n = grid.n_nodes
    out = np.empty((n, n))
    w_src = np.full(n, grid.node_weight) if weight is None \
        else weight.reshape(-1) * grid.node_weight
    for lo, hi in pg.chunks():
        f = pg.fields(lo, hi, need=need)
        ker = entry_fn(f, pg, lo, hi)
        ker[f["diag"]] = 0.0
        out[lo:hi] = ker * w_src[None, :]
    return out


def dense_single_layer_direct(grid, weight="jacobian"):
    """Punctured trapezoid of G times J (or times eps for weight='eps')."""
    w = grid.jacobian if weight == "jacobian" else np.full(
        (grid.n_s, grid.n_theta), grid.epsilon)

    def entry(f, pg, lo, hi):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(f["diag"], 0.0, 1.0 / (FOURPI * f["absR"]))

    return _dense_from_pairs(grid, entry, weight=w, need=("R",))


def dense_double_layer_direct(grid, weight="jacobian"):
    w = grid.jacobian if weight == "jacobian" else np.full(
        (grid.n_s, grid.n_theta), grid.epsilon)

    def entry(f, pg, lo, hi):
        rn = np.einsum("ijk,jk->ij", f["R"], pg.NRM)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(f["diag"], 0.0, rn / (FOURPI * f["absR"] ** 3))

    return _dense_from_pairs(grid, entry, weight=w, need=("R",))


def dense_straight_central(grid, kind):
    """Punctured trapezoid of the straight kernel over one s-period, weight eps."""
    _check_dense_cap(grid)
    ds, dt = grid.offset_templates()
    SH, TH = np.meshgrid(ds, dt, indexing="ij")
    c2 = (2.0 * grid.epsilon * np.sin(0.5 * TH)) ** 2
    r = np.sqrt(SH ** 2 + c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "S":
            t = 1.0 / (FOURPI * r)
        else:
            t = (-2.0 * grid.epsilon * np.sin(0.5 * TH) ** 2) / (FOURPI * r ** 3)
    t[0, 0] = 0.0
    return _circulant_from_template(t * grid.epsilon * grid.node_weight)


def dense_tail(grid, kind, n_images=TAIL_IMAGES):
    """Straight-kernel image sum over 1/2 < |s-hat| <= M + 1/2, weight eps."""
    _check_dense_cap(grid)
    ds, dt = grid.offset_templates()
    SH, TH = np.meshgrid(ds, dt, indexing="ij")
    c2 = (2.0 * grid.epsilon * np.sin(0.5 * TH)) ** 2
    t = np.zeros_like(SH)
    for m in range(1, n_images + 1):
        for sgn in (1.0, -1.0):
            r = np.sqrt((SH + sgn * m) ** 2 + c2)
            if kind == "S":
                t += 1.0 / (FOURPI * r)
            else:
                t += (-2.0 * grid.epsilon * np.sin(0.5 * TH) ** 2) / (FOURPI * r ** 3)
    return _circulant_from_template(t * grid.epsilon * grid.node_weight)


def dense_spectral(grid, symbol_name):
    tab = FourierSymbol(symbol_name, grid.epsilon).table(grid.n_s, grid.n_theta)
    return symbol_dense_matrix(tab)


def dense_RS_kernel(grid, which):
    """Single-layer remainder pieces R_S1, R_S2, R_S3 (weight eps)."""
    if which == 1:
        def entry(f, pg, lo, hi):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(f["diag"], 0.0,
                                (1.0 / f["absR"] - 1.0 / f["absRt"]) / FOURPI)
        need = ("R", "Rt")
    elif which == 2:
        def entry(f, pg, lo, hi):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(f["diag"], 0.0,
                                (1.0 / f["absRt"] - 1.0 / f["absRbar"]) / FOURPI)
        need = ("R", "Rt", "absRbar")
    elif which == 3:
        def entry(f, pg, lo, hi):
            with np.errstate(divide="ignore", invalid="ignore"):
                ker = np.where(f["diag"], 0.0, 1.0 / (FOURPI * f["absR"]))
            return -ker * (grid.epsilon * pg.KH)[None, :]
        need = ("R",)
    else:
        raise ValueError(which)
    eps_w = np.full((grid.n_s, grid.n_theta), grid.epsilon)
    return _dense_from_pairs(grid, entry, weight=eps_w, need=need)


def dense_RD_kernel(grid, which):
    """Double-layer remainder pieces R_D1 (weight eps), R_D2."""
    if which == 1:
        def entry(f, pg, lo, hi):
            rn = np.einsum("ijk,jk->ij", f["R"], pg.NRM)
            kd_bar = (-2.0 * grid.epsilon * np.sin(0.5 * f["that"]) ** 2
                      / (FOURPI * np.where(f["diag"], np.inf, f["absRbar"]) ** 3))
            with np.errstate(divide="ignore", invalid="ignore"):
                kd = np.where(f["diag"], 0.0, rn / (FOURPI * f["absR"] ** 3))
            return kd - kd_bar
        need = ("R", "absRbar")
    elif which == 2:
        def entry(f, pg, lo, hi):
            rn = np.einsum("ijk,jk->ij", f["R"], pg.NRM)
            with np.errstate(divide="ignore", invalid="ignore"):
                kd = np.where(f["diag"], 0.0, rn / (FOURPI * f["absR"] ** 3))
            return -kd * (grid.epsilon * pg.KH)[None, :]
        need = ("R",)
    else:
        raise ValueError(which)
    eps_w = np.full((grid.n_s, grid.n_theta), grid.epsilon)
    return _dense_from_pairs(grid, entry, weight=eps_w, need=need)


def dense_centerline_correction(grid):
    """Kernel 1/|x - X(s')| (no 1/4pi) times J, full trapezoid, no puncture."""
    _check_dense_cap(grid)
    n = grid.n_nodes
    P = grid.flat_positions()
    Xc = np.repeat(grid.X, grid.n_theta, axis=0)
    out = np.empty((n, n))
    for lo in range(0, n, 256):
        hi = min(lo + 256, n)
        d = P[lo:hi, None, :] - Xc[None, :, :]
        out[lo:hi] = 1.0 / np.sqrt(np.sum(d * d, axis=2))
    return out * (grid.flat_jacobian() * grid.node_weight)[None, :]


# assembled operators ---------------------------------------------------------

def assemble_S(grid, backend="direct"):
    """Single layer S[phi] = int G phi dS as a DiscreteOperator."""
    if backend == "direct":
        return DiscreteOperator("S", backend, grid,
                                dense_single_layer_direct(grid))
    if backend != "split":
        raise ValueError(f"unknown backend '{backend}'")
    n_s, n_t = grid.n_s, grid.n_theta
    d_psi = grid.flat_jacobian() / grid.epsilon
    spec_part = dense_spectral(grid, "m_S")
    mat = spec_part.copy()
    mat -= dense_tail(grid, "S")
    mat += dense_RS_kernel(grid, 1)
    mat += dense_RS_kernel(grid, 2)
    mat -= _right_mul_smean(mat, n_s, n_t)
    mat += _right_mul_smean(dense_single_layer_direct(grid, weight="eps"),
                            n_s, n_t)
    mat *= d_psi[None, :]
    return DiscreteOperator("S", backend, grid, mat,
                            parts={"spectral": spec_part})


def assemble_D(grid, backend="direct"):
    """Double layer D[psi] = int K_D psi dS as a DiscreteOperator."""
    if backend == "direct":
        return DiscreteOperator("D", backend, grid,
                                dense_double_layer_direct(grid))
    if backend != "split":
        raise ValueError(f"unknown backend '{backend}'")
    d_psi = grid.flat_jacobian() / grid.epsilon
    spec_part = dense_spectral(grid, "m_D")
    mat = spec_part.copy()
    mat -= dense_tail(grid, "D")
    mat *= d_psi[None, :]
    # (K_D - K_D-bar) J quadrature
    kd_diff = dense_RD_kernel(grid, 1)
    kd_diff *= d_psi[None, :]
    mat += kd_diff
    del kd_diff
    return DiscreteOperator("D", backend, grid, mat,
                            parts={"spectral": spec_part})


def assemble_RS_pieces(grid):
    """(R_S0, R_S1, R_S2, R_S3) with R_S0 the zero-mean-only straight tail."""
    r0 = DiscreteOperator("R_S0", "split", grid, -dense_tail(grid, "S"),
                          requires_zero_s_mean=True)
    r1 = DiscreteOperator("R_S1", "split", grid, dense_RS_kernel(grid, 1))
    r2 = DiscreteOperator("R_S2", "split", grid, dense_RS_kernel(grid, 2))
    r3 = DiscreteOperator("R_S3", "split", grid, dense_RS_kernel(grid, 3))
    return r0, r1, r2, r3


def assemble_RD_pieces(grid):
    """(R_D0, R_D1, R_D2): D - Dbar piece by piece (weight eps)."""
    r0 = DiscreteOperator("R_D0", "split", grid, -dense_tail(grid, "D"))
    r1 = DiscreteOperator("R_D1", "split", grid, dense_RD_kernel(grid, 1))
    r2 = DiscreteOperator("R_D2", "split", grid, dense_RD_kernel(grid, 2))
    return r0, r1, r2


def assemble_Dprime(grid, backend="direct"):
    """Modified double layer: D plus the centerline-distance correction.

    The correction kernel 1/|x - X(s')| is bounded by 1/eps on the surface
    and removes the constant null space of 1/2 I + D.
    """
    d_op = assemble_D(grid, backend)
    corr = dense_centerline_correction(grid)
    return DiscreteOperator("Dprime", backend, grid, d_op.matrix + corr,
                            parts={"D": d_op.matrix, "correction": corr})


def theta_integral(grid, surface_values, weight="eps"):
    """int_0^{2pi} f(s, theta) w dtheta per s-node (w = eps or J)."""
    vals = surface_values.values if isinstance(surface_values, GridFunction) \
        else np.asarray(surface_values)
    dtheta = 2.0 * math.pi / grid.n_theta
    if weight == "eps":
        return GridFunction(np.sum(vals, axis=1) * grid.epsilon * dtheta)
    return GridFunction(np.sum(vals * grid.jacobian, axis=1) * dtheta)


def extend_theta_profile(grid, profile):
    """Extend h(theta) to the surface grid (constant in s)."""
    h = np.asarray(profile, float)
    return GridFunction(np.tile(h, (grid.n_s, 1)))


def extend_s_profile(grid, profile):
    """Extend v(s) to the surface grid (constant in theta)."""
    v = profile.values if isinstance(profile, GridFunction) else np.asarray(profile)
    return GridFunction(np.tile(v[:, None], (1, grid.n_theta)))


def apply_m_S_inv_P0(grid, s_values):
    """m_S^{-1}(k) after removing the k = 0 mode, on the s-circle."""
    vals = s_values.values if isinstance(s_values, GridFunction) \
        else np.asarray(s_values)
    tab = FourierSymbol("m_S_inv", grid.epsilon).table(grid.n_s)
    vhat = np.fft.fft(vals)
    vhat[0] = 0.0
    return GridFunction(np.real(np.fft.ifft(tab * vhat)))


def mean_in_s_split(grid, h_profile, alpha=0.25, gamma=0.5):
    """Split Sbar^{-1} int_0^{2pi} S[h(theta)] eps dtheta at |k| = 1/(2 pi eps).

    Returns (H_eps, H_plus) as s-circle GridFunctions: the high-pass part
    plus the curvature term, and the low-pass part.  The sharp Fourier
    cutoff at 1/(2 pi eps) stands in for the dyadic projection at the same
    frequency.  The k = 0 mode carries no information here (Sbar^{-1} is
    undefined there) and is projected out.
    """
    ext = extend_theta_profile(grid, h_profile)
    g_eps = dense_single_layer_direct(grid, weight="eps")
    a1 = GridFunction((g_eps @ ext.values.reshape(-1)).reshape(ext.values.shape))
    h1 = theta_integral(grid, a1, weight="eps")
    rs3 = dense_RS_kernel(grid, 3)
    a2 = GridFunction((rs3 @ ext.values.reshape(-1)).reshape(ext.values.shape))
    h2 = theta_integral(grid, a2, weight="eps")

    k = np.fft.fftfreq(grid.n_s, d=1.0 / grid.n_s)
    kc = 1.0 / (2.0 * math.pi * grid.epsilon)
    h1_hat = np.fft.fft(h1.values)
    h2_hat = np.fft.fft(h2.values)
    high = (np.abs(k) >= kc) & (k != 0)
    low = (np.abs(k) < kc) & (k != 0)
    tab = FourierSymbol("m_S_inv", grid.epsilon).table(grid.n_s)
    h_eps = np.real(np.fft.ifft(tab * (h1_hat * high + h2_hat * (k != 0))))
    h_plus = np.real(np.fft.ifft(tab * (h1_hat * low)))
    return GridFunction(h_eps), GridFunction(h_plus)
