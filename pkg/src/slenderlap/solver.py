r"""Slender-body DtN and NtD solves, exterior Dirichlet, Green's identity.

The discrete slender-body system on the tube surface couples the layer
operators with the theta-independence constraint:

    (1/2 I - D_h) E v = S_h w          (Green identity on the surface)
    Q w = f,   (Q w)(s_i) = sum_j w(s_i, theta_j) J(s_i, theta_j) (2 pi/n_th)

DtN direction (v given): dense LU solve of the first-kind system for w,
then f = Q w.  NtD direction (f given): one square augmented solve in
(w, v).  First-kind conditioning of S_h is monitored through a LAPACK
1-norm condition estimate and reported, never silently ignored.

The exterior Dirichlet problem is solved through the modified double layer:
(1/2 I + D'_h) phi = v, then u(y) = D'[phi](y) off the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, get_lapack_funcs

from .grid import SurfaceGrid
from .kernels import FOURPI
from .operators import (DiscreteOperator, assemble_D, assemble_Dprime,
                        assemble_S, extend_s_profile, theta_integral)
from .spectral import FourierSymbol, GridFunction

COND_LIMIT = 1e12


class SolveError(RuntimeError):
    pass


@dataclass
class SlenderSolveResult:
    v: GridFunction            # theta-independent Dirichlet data, s-circle
    w: GridFunction            # full Neumann density on the surface
    f: GridFunction            # theta-integrated Neumann data, s-circle
    residuals: dict
    conditioning: dict


def _cond_estimate(mat, lu=None):
    """1-norm condition estimate via LAPACK gecon (cheap after LU)."""
    anorm = np.linalg.norm(mat, 1)
    if lu is None:
        lu = lu_factor(mat)
    gecon = get_lapack_funcs("gecon", (mat,))
    rcond, _ = gecon(lu[0], anorm, norm="1")
    if rcond == 0.0:
        return math.inf
    return 1.0 / rcond


def constraint_matrix(grid):
    """Q: surface values -> theta-integrated Neumann data per s-node."""
    n_s, n_t = grid.n_s, grid.n_theta
    q = np.zeros((n_s, n_s * n_t))
    dtheta = 2.0 * math.pi / n_t
    for i in range(n_s):
        q[i, i * n_t:(i + 1) * n_t] = grid.jacobian[i] * dtheta
    return q


def extension_matrix(grid):
    """E: s-circle values -> theta-independent surface values."""
    e = np.zeros((grid.n_nodes, grid.n_s))
    for i in range(grid.n_s):
        e[i * grid.n_theta:(i + 1) * grid.n_theta, i] = 1.0
    return e


class SlenderBodySolver:
    """Caches the assembled operators and factorizations for one grid."""

    def __init__(self, grid: SurfaceGrid, backend="direct", operators=None):
        self.grid = grid
        self.backend = backend
        if operators is not None:
            self.S_op, self.D_op = operators
        else:
            self.S_op = assemble_S(grid, backend)
            self.D_op = assemble_D(grid, backend)
        self.E = extension_matrix(grid)
        self.Q = constraint_matrix(grid)
        self._lu_S = None
        self._lu_aug = None
        self._cond_S = None

    @property
    def lu_S(self):
        if self._lu_S is None:
            self._lu_S = lu_factor(self.S_op.matrix)
        return self._lu_S

    @property
    def cond_S(self):
        if self._cond_S is None:
            self._cond_S = _cond_estimate(self.S_op.matrix, self.lu_S)
        return self._cond_S

    def _check_cond(self):
        if self.cond_S > COND_LIMIT:
            raise SolveError(
                f"first-kind system too ill-conditioned: cond ~ {self.cond_S:.3e} "
                f"(n_s={self.grid.n_s}, n_theta={self.grid.n_theta}, "
                f"eps={self.grid.epsilon})")

    def dtn(self, v):
        """v(s) -> (w, f): solve S w = (1/2 I - D) E v, then f = Q w."""
        vv = v.values if isinstance(v, GridFunction) else np.asarray(v, float)
        self._check_cond()
        ev = self.E @ vv
        rhs = 0.5 * ev - self.D_op.matrix @ ev
        w = lu_solve(self.lu_S, rhs)
        f = self.Q @ w
        resid = float(np.max(np.abs(self.S_op.matrix @ w - rhs)))
        shape = (self.grid.n_s, self.grid.n_theta)
        return SlenderSolveResult(
            v=GridFunction(vv), w=GridFunction(w.reshape(shape)),
            f=GridFunction(f),
            residuals={"first_kind_inf": resid},
            conditioning={"cond_S": self.cond_S})

    def ntd(self, f):
        """f(s) -> (w, v): square augmented solve in (w, v)."""
        ff = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
        n = self.grid.n_nodes
        n_s = self.grid.n_s
        if self._lu_aug is None:
            a = np.zeros((n + n_s, n + n_s))
            a[:n, :n] = self.S_op.matrix
            a[:n, n:] = -(0.5 * self.E - self.D_op.matrix @ self.E)
            a[n:, :n] = self.Q
            self._aug = a
            self._lu_aug = lu_factor(a)
            self._cond_aug = _cond_estimate(a, self._lu_aug)
        if self._cond_aug > COND_LIMIT:
            raise SolveError(
                f"augmented NtD system too ill-conditioned: {self._cond_aug:.3e}")
        rhs = np.concatenate([np.zeros(n), ff])
        sol = lu_solve(self._lu_aug, rhs)
        w, v = sol[:n], sol[n:]
        shape = (self.grid.n_s, self.grid.n_theta)
        res1 = float(np.max(np.abs(
            self.S_op.matrix @ w - (0.5 * self.E - self.D_op.matrix @ self.E) @ v)))
        res2 = float(np.max(np.abs(self.Q @ w - ff)))
        return SlenderSolveResult(
            v=GridFunction(v), w=GridFunction(w.reshape(shape)),
            f=GridFunction(ff),
            residuals={"first_kind_inf": res1, "constraint_inf": res2},
            conditioning={"cond_S": self.cond_S, "cond_aug": self._cond_aug})

    def straight_dtn(self, v):
        """L-bar_eps^{-1} v by the Fourier multiplier (zero mode annihilated)."""
        vv = v.values if isinstance(v, GridFunction) else np.asarray(v, float)
        tab = FourierSymbol("m_eps_inv", self.grid.epsilon).table(self.grid.n_s)
        return GridFunction(np.real(np.fft.ifft(tab * np.fft.fft(vv))))

    def straight_ntd(self, f):
        ff = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
        tab = FourierSymbol("m_eps", self.grid.epsilon).table(self.grid.n_s)
        return GridFunction(np.real(np.fft.ifft(tab * np.fft.fft(ff))))

    def neumann_series_ntd(self, f, max_iter=40, tol=1e-12):
        """NtD by the straight-map iteration v <- Lbar[f] - Lbar P0 R_d[v].

        R_d v = L^{-1} v - Lbar^{-1} v uses the cached LU, so each sweep
        costs one dense solve.  Returns (v, history of increments).
        """
        ff = f.values if isinstance(f, GridFunction) else np.asarray(f, float)
        if abs(np.mean(ff)) > 1e-10 * (np.max(np.abs(ff)) or 1.0):
            raise SolveError("Neumann-series NtD needs zero-mean f")
        v = self.straight_ntd(GridFunction(ff)).values
        base = v.copy()
        history = []
        for _ in range(max_iter):
            rd = self.dtn(GridFunction(v)).f.values \
                - self.straight_dtn(GridFunction(v)).values
            rd = rd - np.mean(rd)
            v_new = base - self.straight_ntd(GridFunction(rd)).values
            inc = float(np.max(np.abs(v_new - v)))
            history.append(inc)
            v = v_new
            if inc < tol * max(1.0, float(np.max(np.abs(v)))):
                break
        return GridFunction(v), history


def solve_dtn(grid, v, backend="direct", operators=None):
    return SlenderBodySolver(grid, backend, operators).dtn(v)


def solve_ntd(grid, f, backend="direct", operators=None):
    return SlenderBodySolver(grid, backend, operators).ntd(f)


# exterior Dirichlet through the modified double layer -------------------------

def _offsurface_eval(grid, points, density, kind):
    """Evaluate layer potentials at strictly exterior points (no puncture)."""
    pts = np.atleast_2d(np.asarray(points, float))
    src = grid.flat_positions()
    nrm = grid.flat_normals()
    jw = grid.flat_jacobian() * grid.node_weight
    dens = density.values.reshape(-1) if isinstance(density, GridFunction) \
        else np.asarray(density).reshape(-1)
    out = np.empty(pts.shape[0])
    xc = np.repeat(grid.X, grid.n_theta, axis=0)
    for i, y in enumerate(pts):
        d = y[None, :] - src
        r = np.linalg.norm(d, axis=1)
        if kind == "S":
            ker = 1.0 / (FOURPI * r)
        elif kind == "D":
            ker = np.einsum("ij,ij->i", d, nrm) / (FOURPI * r ** 3)
        elif kind == "Dprime":
            rc = np.linalg.norm(y[None, :] - xc, axis=1)
            ker = np.einsum("ij,ij->i", d, nrm) / (FOURPI * r ** 3) + 1.0 / rc
        else:
            raise ValueError(kind)
        out[i] = np.sum(ker * dens * jw)
    return out


def _distance_to_centerline(grid, points):
    pts = np.atleast_2d(np.asarray(points, float))
    d = pts[:, None, :] - grid.X[None, :, :]
    return np.min(np.linalg.norm(d, axis=2), axis=1)


def solve_exterior_dirichlet(grid, v_surface, eval_points, backend="direct"):
    """Exterior Dirichlet solve via (1/2 I + D') phi = v; evaluate off-surface.

    eval_points must be strictly exterior with distance to the centerline
    greater than 2 eps + eps (surface clearance > 2 eps) for quadrature
    accuracy; closer points are an error.
    """
    pts = np.atleast_2d(np.asarray(eval_points, float))
    dist = _distance_to_centerline(grid, pts)
    if np.any(dist <= grid.epsilon):
        raise SolveError("evaluation point not strictly exterior")
    if np.any(dist < 3.0 * grid.epsilon):  # clearance to the surface > 2 eps
        raise SolveError("evaluation point closer than 2 eps to the surface")
    dp = assemble_Dprime(grid, backend)
    a = 0.5 * np.eye(grid.n_nodes) + dp.matrix
    lu = lu_factor(a)
    cond = _cond_estimate(a, lu)
    if cond > COND_LIMIT:
        raise SolveError(f"second-kind system ill-conditioned: {cond:.3e}")
    vv = v_surface.values.reshape(-1) if isinstance(v_surface, GridFunction) \
        else np.asarray(v_surface).reshape(-1)
    phi = lu_solve(lu, vv)
    u = _offsurface_eval(grid, pts, phi, "Dprime")
    return u, {"cond_Dprime": cond,
               "phi": GridFunction(phi.reshape(grid.n_s, grid.n_theta))}


def green_representation_eval(grid, eval_points, v_surface, w_surface):
    """u(y) = S[w](y) + D[v](y) at exterior points (Green's formula)."""
    return (_offsurface_eval(grid, eval_points, w_surface, "S")
            + _offsurface_eval(grid, eval_points, v_surface, "D"))


# Green's identity harness ----------------------------------------------------

def point_charge_data(grid, charges):
    """Exact (v, w) on the surface for u = sum q G(., X(s_c)).

    charges: list of (q, s_position); the sources sit on the centerline,
    strictly inside the tube.
    """
    P = grid.flat_positions()
    NRM = grid.flat_normals()
    v = np.zeros(grid.n_nodes)
    w = np.zeros(grid.n_nodes)
    for q, s_c in charges:
        y = grid.spec.centerline.position(np.array([s_c]))[0]
        d = P - y[None, :]
        r = np.linalg.norm(d, axis=1)
        v += q / (FOURPI * r)
        # w = -du/dn, n outward from the tube; grad G = -(x-y)/(4 pi r^3)
        w += q * np.einsum("ij,ij->i", d, NRM) / (FOURPI * r ** 3)
    shape = (grid.n_s, grid.n_theta)
    return GridFunction(v.reshape(shape)), GridFunction(w.reshape(shape))


def exact_point_charge_potential(grid, points, charges):
    pts = np.atleast_2d(np.asarray(points, float))
    u = np.zeros(pts.shape[0])
    for q, s_c in charges:
        y = grid.spec.centerline.position(np.array([s_c]))[0]
        u += q / (FOURPI * np.linalg.norm(pts - y[None, :], axis=1))
    return u


def greens_identity_residual(grid, charges, backend="direct", operators=None):
    """sup |(1/2 I - D_h) v - S_h w| for exact point-charge data."""
    v, w = point_charge_data(grid, charges)
    if operators is not None:
        s_op, d_op = operators
    else:
        s_op = assemble_S(grid, backend)
        d_op = assemble_D(grid, backend)
    lhs = 0.5 * v.values.reshape(-1) - d_op.matrix @ v.values.reshape(-1)
    rhs = s_op.matrix @ w.values.reshape(-1)
    scale = float(np.max(np.abs(lhs))) or 1.0
    return float(np.max(np.abs(lhs - rhs))), scale


def greens_ladder(spec, charges, n_s_list, n_theta, backend="direct"):
    """Residual across an n_s ladder plus the least-squares convergence order."""
    from .grid import make_grid
    resids = []
    for n_s in n_s_list:
        g = make_grid(spec, n_s, n_theta)
        r, _ = greens_identity_residual(g, charges, backend)
        resids.append(r)
    hs = np.log(1.0 / np.asarray(n_s_list, float))
    order = float(np.polyfit(hs, np.log(resids), 1)[0])
    return resids, order
