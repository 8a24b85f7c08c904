"""Scalar relaxation solve for entropy-conserving time steps.

Given the previous state ``u_old`` and a candidate update ``u_new``, the
relaxation parameter ``gamma`` rescales the update direction so the entropy
functional is conserved exactly:

    eta(u_old + gamma*(u_new - u_old)) = eta(u_old).

``gamma = 0`` is always a trivial root, so the residual is deflated by
``gamma`` and the search brackets the nontrivial root near 1, expanding the
bracket geometrically away from 0 when the initial interval shows no sign
change.  The root itself is polished with Brent's method (bisection plus
inverse quadratic interpolation), which matches the bracketing/superlinear
behaviour of the Alefeld-Potra-Shi solver used elsewhere in the relaxation
literature; only the achieved residual enters any conservation statement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["RelaxationConfig", "BracketFailure", "solve_gamma", "brent"]

#: Converged roots below this are treated as the spurious deflated root.
GAMMA_SPURIOUS = 0.1

#: Lower clamp for bracket expansion; keeps the deflated residual well
#: conditioned away from gamma = 0.
_BRACKET_LO_FLOOR = 1e-3


class BracketFailure(RuntimeError):
    """No sign change found for the relaxation residual.

    Signals the caller to fall back (the stepper continues with gamma = 1
    and records the event).
    """


@dataclass
class RelaxationConfig:
    """Search interval and tolerances for the gamma solve."""

    bracket_lo: float = 0.5
    bracket_hi: float = 1.5
    gamma_tol: float = 1e-14
    residual_tol: float = 1e-13
    max_expand: int = 8

    def __post_init__(self):
        if not (self.bracket_lo < 1.0 < self.bracket_hi):
            raise ValueError("bracket must contain gamma = 1")
        if self.gamma_tol <= 0:
            raise ValueError("gamma_tol must be positive")


def brent(f: Callable[[float], float], a: float, b: float, fa: float, fb: float, xtol: float, max_iter: int = 100) -> float:
    """Brent's method on an interval with a known sign change.

    Classic algorithm after Brent (1973), "Algorithms for Minimization
    Without Derivatives", ch. 4: interval bisection combined with secant and
    inverse quadratic interpolation steps.
    """
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    c, fc = a, fa
    d = e = b - a
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * eps * abs(b) + xtol
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b
        if abs(e) < tol or abs(fa) <= abs(fb):
            # bisection
            d = e = m
        else:
            s = fb / fa
            if a == c:
                # secant
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                # inverse quadratic interpolation
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol else (tol if m > 0 else -tol)
        fb = f(b)
    return b


def solve_gamma(
    u_old: np.ndarray,
    u_new: np.ndarray,
    eta: Callable[[np.ndarray], float],
    cfg: RelaxationConfig | None = None,
) -> tuple[float, float]:
    """Solve the scalar relaxation equation for gamma.

    Returns ``(gamma, residual)`` where ``residual`` is the achieved value of
    ``|eta(u_old + gamma*du) - eta(u_old)|``.  Raises :class:`BracketFailure`
    when no sign change of the deflated residual is found after
    ``max_expand`` doublings of the bracket around 1, or when the converged
    root is spuriously close to 0.
    """
    if cfg is None:
        cfg = RelaxationConfig()
    u_old = np.asarray(u_old, dtype=float)
    du = np.asarray(u_new, dtype=float) - u_old
    eta0 = eta(u_old)

    def residual(g: float) -> float:
        return eta(u_old + g * du) - eta0

    def deflated(g: float) -> float:
        return residual(g) / g

    tol_eff = cfg.residual_tol * max(1.0, abs(eta0))
    r1 = residual(1.0)
    if abs(r1) <= tol_eff:
        # the unrelaxed update already conserves to within tolerance (exactly
        # level entropy, or an update too small for the residual to rise
        # above roundoff); gamma = 1 is then the preferred root
        return 1.0, abs(r1)

    lo, hi = cfg.bracket_lo, cfg.bracket_hi
    flo, fhi = deflated(lo), deflated(hi)
    expansions = 0
    while not (np.isfinite(flo) and np.isfinite(fhi) and flo * fhi <= 0.0):
        if expansions >= cfg.max_expand:
            raise BracketFailure(
                f"no sign change in [{lo:.3g}, {hi:.3g}] after {expansions} expansions"
            )
        lo = max(1.0 - 2.0 * (1.0 - lo), _BRACKET_LO_FLOOR)
        hi = 1.0 + 2.0 * (hi - 1.0)
        flo, fhi = deflated(lo), deflated(hi)
        expansions += 1

    gamma = brent(deflated, lo, hi, flo, fhi, cfg.gamma_tol)
    if gamma < GAMMA_SPURIOUS:
        raise BracketFailure(f"converged root gamma={gamma:.3g} rejected as spurious")
    achieved = abs(residual(gamma))
    if achieved > tol_eff:
        raise BracketFailure(
            f"residual {achieved:.3g} exceeds tolerance at gamma={gamma:.6g}"
        )
    return float(gamma), achieved
