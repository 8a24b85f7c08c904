"""Embedded explicit Runge-Kutta Butcher tableaux.

Coefficients are entered as exact rationals and converted to binary floating
point once, at construction time, so order-condition residuals sit at machine
epsilon instead of reflecting decimal transcription drift.

The embedded weight vector ``b_hat`` carries ``s + 1`` entries: the first
``s`` multiply the stage derivatives ``k^1 .. k^s`` and the last one
multiplies the derivative evaluated at the step's end state ``f(u^{n+1})``
(the first-same-as-last value).  For non-FSAL tableaux that extra slot is
zero.  Keeping the FSAL weight separate lets callers substitute a different
derivative into that slot without re-deriving the tableau.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = ["Tableau", "bs3", "dp5", "rk4", "verify_order_conditions"]

#: Absolute tolerance for order-condition residuals of shipped tableaux.
ORDER_CONDITION_TOL = 1e-13


@dataclass(frozen=True)
class Tableau:
    """Butcher tableau of an explicit Runge-Kutta method, embedded or not.

    Attributes
    ----------
    name : str
        Identifier used by the CLI and in run records.
    s : int
        Number of stages of the main method.
    a : (s, s) ndarray
        Strictly lower-triangular stage coefficients.
    b : (s,) ndarray
        Main quadrature weights.
    b_hat : (s + 1,) ndarray or None
        Embedded weights; the last entry multiplies ``f(u^{n+1})``.
        ``None`` when the method ships no error estimator.
    c : (s,) ndarray
        Abscissae, equal to the row sums of ``a``.
    p : int
        Order of the main method.
    p_hat : int
        Order of the embedded method (0 when absent).
    fsal : bool
        True when the last stage equals the step's end state, so its
        derivative can seed the first stage of the next step.
    """

    name: str
    s: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int
    p_hat: int = 0
    b_hat: np.ndarray | None = None
    fsal: bool = False

    def __post_init__(self):
        for arr in (self.a, self.b, self.c, self.b_hat):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def has_embedded(self) -> bool:
        return self.b_hat is not None


def _farray(entries) -> np.ndarray:
    return np.array([float(Fraction(*e) if isinstance(e, tuple) else Fraction(e)) for e in entries])


def _fmatrix(rows, s) -> np.ndarray:
    a = np.zeros((s, s))
    for i, row in enumerate(rows):
        a[i + 1, : len(row)] = _farray(row)
    return a


def _row_sums(rows, s) -> np.ndarray:
    # exact rational row sums, converted to float once
    c = np.zeros(s)
    for i, row in enumerate(rows):
        c[i + 1] = float(sum(Fraction(*e) if isinstance(e, tuple) else Fraction(e) for e in row))
    return c


def bs3() -> Tableau:
    """Bogacki-Shampine 3(2) pair, four stages, FSAL.

    References
    ----------
    Bogacki, P. & Shampine, L. F. (1989). "A 3(2) pair of Runge-Kutta
    formulas". Applied Mathematics Letters, 2(4), 321-325.
    """
    rows = [
        [(1, 2)],
        [0, (3, 4)],
        [(2, 9), (1, 3), (4, 9)],
    ]
    return Tableau(
        name="bs3",
        s=4,
        a=_fmatrix(rows, 4),
        b=_farray([(2, 9), (1, 3), (4, 9), 0]),
        b_hat=_farray([(7, 24), (1, 4), (1, 3), 0, (1, 8)]),
        c=_row_sums(rows, 4),
        p=3,
        p_hat=2,
        fsal=True,
    )


def dp5() -> Tableau:
    """Dormand-Prince 5(4) pair, seven stages, FSAL.

    References
    ----------
    Dormand, J. R. & Prince, P. J. (1980). "A family of embedded
    Runge-Kutta formulae". Journal of Computational and Applied
    Mathematics, 6(1), 19-26.
    """
    rows = [
        [(1, 5)],
        [(3, 40), (9, 40)],
        [(44, 45), (-56, 15), (32, 9)],
        [(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
        [(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656)],
        [(35, 384), 0, (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
    ]
    return Tableau(
        name="dp5",
        s=7,
        a=_fmatrix(rows, 7),
        b=_farray([(35, 384), 0, (500, 1113), (125, 192), (-2187, 6784), (11, 84), 0]),
        b_hat=_farray(
            [
                (5179, 57600),
                0,
                (7571, 16695),
                (393, 640),
                (-92097, 339200),
                (187, 2100),
                0,
                (1, 40),
            ]
        ),
        c=_row_sums(rows, 7),
        p=5,
        p_hat=4,
        fsal=True,
    )


def rk4() -> Tableau:
    """Classical fourth-order Runge-Kutta method (fixed-step use only).

    No embedded weights; not FSAL.

    References
    ----------
    Kutta, W. (1901). "Beitrag zur naeherungsweisen Integration totaler
    Differentialgleichungen". Zeitschrift fuer Mathematik und Physik, 46.
    """
    rows = [
        [(1, 2)],
        [0, (1, 2)],
        [0, 0, 1],
    ]
    return Tableau(
        name="rk4",
        s=4,
        a=_fmatrix(rows, 4),
        b=_farray([(1, 6), (1, 3), (1, 3), (1, 6)]),
        c=_row_sums(rows, 4),
        p=4,
    )


# Rooted-tree order conditions, (lhs, 1/gamma) through order 5.  Each lhs maps
# (A, b, c) to the elementary weight of one tree.
_CONDITIONS = {
    1: [(lambda A, b, c: b.sum(), 1.0)],
    2: [(lambda A, b, c: b @ c, 1 / 2)],
    3: [
        (lambda A, b, c: b @ c**2, 1 / 3),
        (lambda A, b, c: b @ (A @ c), 1 / 6),
    ],
    4: [
        (lambda A, b, c: b @ c**3, 1 / 4),
        (lambda A, b, c: b @ (c * (A @ c)), 1 / 8),
        (lambda A, b, c: b @ (A @ c**2), 1 / 12),
        (lambda A, b, c: b @ (A @ (A @ c)), 1 / 24),
    ],
    5: [
        (lambda A, b, c: b @ c**4, 1 / 5),
        (lambda A, b, c: b @ (c**2 * (A @ c)), 1 / 10),
        (lambda A, b, c: b @ (c * (A @ c**2)), 1 / 15),
        (lambda A, b, c: b @ (c * (A @ (A @ c))), 1 / 30),
        (lambda A, b, c: b @ (A @ c) ** 2, 1 / 20),
        (lambda A, b, c: b @ (A @ c**3), 1 / 20),
        (lambda A, b, c: b @ (A @ (c * (A @ c))), 1 / 40),
        (lambda A, b, c: b @ (A @ (A @ c**2)), 1 / 60),
        (lambda A, b, c: b @ (A @ (A @ (A @ c))), 1 / 120),
    ],
}


def order_condition_residuals(t: Tableau, order: int, embedded: bool = False) -> list[float]:
    """Residuals of all rooted-tree order conditions up to ``order``.

    With ``embedded=True`` the conditions are evaluated for the embedded
    weights on the tableau extended by the FSAL stage (row ``b``, abscissa 1).
    """
    if order > 5:
        raise ValueError("order conditions are tabulated only through order 5")
    if order < 1:
        raise ValueError("order must be at least 1")
    if embedded:
        if t.b_hat is None:
            raise ValueError(f"tableau {t.name!r} has no embedded weights")
        A = np.zeros((t.s + 1, t.s + 1))
        A[: t.s, : t.s] = t.a
        A[t.s, : t.s] = t.b
        b = t.b_hat
        c = np.concatenate((t.c, [1.0]))
    else:
        A, b, c = t.a, t.b, t.c
    residuals = []
    for q in range(1, order + 1):
        for lhs, rhs in _CONDITIONS[q]:
            residuals.append(float(lhs(A, b, c) - rhs))
    return residuals


def verify_order_conditions(t: Tableau, order: int, embedded: bool = False) -> bool:
    """True iff every rooted-tree order condition up to ``order`` holds.

    Conditions are checked to absolute tolerance 1e-13; only orders up to 5
    are tabulated and larger requests raise ``ValueError``.
    """
    res = order_condition_residuals(t, order, embedded=embedded)
    return max(abs(r) for r in res) <= ORDER_CONDITION_TOL
