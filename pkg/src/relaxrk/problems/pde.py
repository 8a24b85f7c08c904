"""Semidiscretized PDE problems: DGSEM linear advection and Fourier BBM.

Both semidiscretizations conserve their discrete entropy exactly (up to
roundoff), which makes them meaningful targets for relaxation:

* Linear advection uses a discontinuous Galerkin spectral element method on
  Gauss-Lobatto-Legendre nodes with a central interface flux; the
  summation-by-parts structure of the collocation operator makes the
  quadrature energy an exact invariant of the semidiscrete flow.
* BBM uses dense Fourier collocation operators.  The split form
  (D(u^2) + u Du)/3 conserves the quadratic invariant
  J2 = 1/2 int(u^2 + (du/dx)^2); the unsplit conservative form D(u^2/2 + u)
  conserves the cubic invariant J3 = int((u+1)^3).  Both conserve the mean.

Operators are realized as dense matrices (desk-scale grids, bit-reproducible
without a transform dependency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from . import Problem

__all__ = [
    "DgsemGrid",
    "FourierGrid",
    "gauss_lobatto",
    "lagrange_diff_matrix",
    "fourier_diff_matrix",
    "linear_advection_dg",
    "bbm_fourier",
    "bbm_soliton_parameters",
]


def bbm_soliton_parameters(wave_speed: float = 1.2) -> tuple[float, float]:
    """Amplitude and inverse width of the travelling BBM soliton:
    A = 3 (c - 1), K = sqrt(1 - 1/c) / 2."""
    return 3.0 * (wave_speed - 1.0), 0.5 * math.sqrt(1.0 - 1.0 / wave_speed)


def gauss_lobatto(n_pts: int):
    """Gauss-Lobatto-Legendre nodes and quadrature weights on [-1, 1].

    Interior nodes are the roots of P'_N (N = n_pts - 1); the weight at node
    x is 2 / (N (N+1) P_N(x)^2).  Exact for polynomials up to degree 2N-1.
    """
    if n_pts < 2:
        raise ValueError("need at least two nodes")
    deg = n_pts - 1
    coeffs = np.zeros(deg + 1)
    coeffs[deg] = 1.0
    interior = legendre.legroots(legendre.legder(coeffs))
    nodes = np.concatenate(([-1.0], np.sort(interior.real), [1.0]))
    pn = legendre.legval(nodes, coeffs)
    weights = 2.0 / (deg * (deg + 1) * pn**2)
    return nodes, weights


def lagrange_diff_matrix(x: np.ndarray) -> np.ndarray:
    """Nodal polynomial differentiation matrix via barycentric weights."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    lam = np.empty(n)
    for i in range(n):
        lam[i] = 1.0 / np.prod(x[i] - np.delete(x, i))
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (lam[j] / lam[i]) / (x[i] - x[j])
        D[i, i] = -np.sum(D[i])
    return D


@dataclass(frozen=True)
class DgsemGrid:
    """Per-element GLL collocation data plus global node/quadrature arrays."""

    n_elements: int
    degree: int
    length: float
    nodes: np.ndarray  # reference element, [-1, 1]
    weights: np.ndarray
    diff: np.ndarray
    h: float
    x: np.ndarray  # global node coordinates, shape (n_elements*(degree+1),)
    quad_weights: np.ndarray  # global quadrature weights (sum = length)

    @classmethod
    def create(cls, n_elements: int = 8, degree: int = 5, length: float = 2.0):
        nodes, weights = gauss_lobatto(degree + 1)
        diff = lagrange_diff_matrix(nodes)
        h = length / n_elements
        offsets = np.arange(n_elements) * h
        x = (offsets[:, None] + (nodes[None, :] + 1.0) * (h / 2.0)).reshape(-1)
        qw = np.tile(weights * h / 2.0, n_elements)
        for arr in (nodes, weights, diff, x, qw):
            arr.setflags(write=False)
        return cls(n_elements, degree, length, nodes, weights, diff, h, x, qw)


def linear_advection_dg(n_elements: int = 8, degree: int = 5, length: float = 2.0) -> Problem:
    """DGSEM semidiscretization of u_t + u_x = 0 with periodic boundary,
    central interface flux and initial data exp(sin(2 pi x / L)).

    The entropy is the GLL quadrature of u^2/2, conserved exactly by the
    central-flux semidiscretization.  Errors are measured against the exact
    PDE solution sampled at the nodes, so a spatial error floor is expected.
    """
    grid = DgsemGrid.create(n_elements, degree, length)
    K, Np = grid.n_elements, grid.degree + 1
    DT = grid.diff.T.copy()
    w0, wN = grid.weights[0], grid.weights[-1]
    two_over_h = 2.0 / grid.h
    qw = grid.quad_weights
    x = grid.x
    tau = 2.0 * math.pi / length

    def rhs(t, u):
        U = u.reshape(K, Np)
        du = -two_over_h * (U @ DT)
        u_left = U[:, 0]
        u_right = U[:, -1]
        fstar_right = 0.5 * (u_right + np.roll(u_left, -1))
        fstar_left = np.roll(fstar_right, 1)
        du[:, -1] -= two_over_h * (fstar_right - u_right) / wN
        du[:, 0] += two_over_h * (fstar_left - u_left) / w0
        return du.reshape(-1)

    def exact(t):
        return np.exp(np.sin(tau * (x - t)))

    return Problem(
        name="advection_dg",
        dim=K * Np,
        rhs=rhs,
        eta=lambda u: float(0.5 * np.sum(qw * u * u)),
        eta_grad=lambda u: qw * u,
        u0=exact(0.0),
        exact=exact,
        norm_weights=qw,
    )


def fourier_diff_matrix(n_modes: int, length: float) -> np.ndarray:
    """Dense periodic first-derivative collocation matrix (even n).

    Standard cotangent form on the uniform grid (Trefethen, "Spectral
    Methods in MATLAB", ch. 3), scaled from period 2 pi to ``length``.
    """
    if n_modes % 2 or n_modes < 4:
        raise ValueError("n_modes must be even and at least 4")
    idx = np.arange(n_modes)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** diff / np.tan(diff * math.pi / n_modes)
    np.fill_diagonal(D, 0.0)
    return (2.0 * math.pi / length) * D


@dataclass(frozen=True)
class FourierGrid:
    """Dense Fourier collocation operators on a periodic interval."""

    n_modes: int
    x_min: float
    x_max: float
    x: np.ndarray
    dx: float
    D1: np.ndarray
    helmholtz_inv: np.ndarray  # (I - D1^2)^{-1}

    @classmethod
    def create(cls, n_modes: int = 64, x_min: float = 0.0, x_max: float = 2.0):
        length = x_max - x_min
        x = x_min + length * np.arange(n_modes) / n_modes
        D1 = fourier_diff_matrix(n_modes, length)
        helmholtz = np.eye(n_modes) - D1 @ D1
        hinv = np.linalg.solve(helmholtz, np.eye(n_modes))
        hinv = 0.5 * (hinv + hinv.T)  # the operator is SPD; symmetrizing cuts noise
        for arr in (x, D1, hinv):
            arr.setflags(write=False)
        return cls(n_modes, x_min, x_max, x, length / n_modes, D1, hinv)


def bbm_fourier(
    invariant: str = "quadratic",
    n_modes: int = 64,
    x_min: float = 0.0,
    x_max: float = 2.0,
    wave_speed: float = 1.2,
) -> Problem:
    """Fourier collocation semidiscretization of the BBM equation

        (I - d_xx) u_t + d_x(u^2/2) + d_x u = 0,   periodic,

    with the travelling soliton A / cosh(K (x - c t))^2 as reference, where
    A = 3 (c - 1) and K = sqrt(1 - 1/c) / 2.

    ``invariant`` selects which functional the split form conserves and
    which entropy the problem reports: "quadratic" (J2) or "cubic" (J3).
    The linear invariant (the mean) is conserved by both forms.
    """
    if n_modes < 16:
        raise ValueError("n_modes must be at least 16")
    grid = FourierGrid.create(n_modes, x_min, x_max)
    D1, Hinv, dx, x = grid.D1, grid.helmholtz_inv, grid.dx, grid.x
    B = np.eye(n_modes) - D1 @ D1
    B.setflags(write=False)
    length = x_max - x_min
    c = wave_speed
    amplitude, width = bbm_soliton_parameters(c)

    if invariant == "quadratic":

        def rhs(t, u):
            return -(Hinv @ ((D1 @ (u * u) + u * (D1 @ u)) / 3.0 + D1 @ u))

        def eta(u):
            return float(0.5 * dx * (u @ (B @ u)))

        def eta_grad(u):
            return dx * (B @ u)

    elif invariant == "cubic":

        def rhs(t, u):
            return -(Hinv @ (D1 @ (0.5 * u * u + u)))

        def eta(u):
            v = u + 1.0
            return float(dx * np.sum(v * v * v))

        def eta_grad(u):
            return 3.0 * dx * (u + 1.0) ** 2

    else:
        raise ValueError("invariant must be 'quadratic' or 'cubic'")

    def exact(t):
        # wrap the travelling coordinate into [-L/2, L/2) around the peak
        d = np.mod(x - c * t - x_min + 0.5 * length, length) - 0.5 * length
        return amplitude / np.cosh(width * d) ** 2

    return Problem(
        name=f"bbm_{invariant}",
        dim=n_modes,
        rhs=rhs,
        eta=eta,
        eta_grad=eta_grad,
        u0=exact(0.0),
        exact=exact,
        norm_weights=np.full(n_modes, dx),
    )
