"""Rational maps on the Riemann sphere.

``INFINITY`` is a dedicated sentinel; it is never encoded as a large float.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateMap
from .polycore import X, Polynomial, gcd_approx, poly_divmod, roots

__all__ = [
    "INFINITY",
    "RationalMap",
    "FixedPointRecord",
    "Pole",
    "PartialFractionDecomp",
    "normalize",
    "eval_sphere",
    "derivative",
    "derivative_at",
    "wronskian",
    "fixed_points",
    "partial_fractions_of_displacement",
    "classify_multiplier",
]

DEFAULT_GCD_TOL = 1e-10
TRIM_RTOL = 1e-12


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


@dataclass(frozen=True)
class RationalMap:
    """``N = num / den`` with ``den`` monic.

    The constructor trusts that ``num`` and ``den`` are coprime; use
    :func:`normalize` for raw pairs. ``cancelled_degree`` records the degree of
    the common factor removed by normalization.
    """

    num: Polynomial
    den: Polynomial
    cancelled_degree: int = 0

    def __post_init__(self):
        if self.den.is_zero:
            raise DegenerateMap("denominator is the zero polynomial")
        lead = self.den.leading
        if lead != 1:
            object.__setattr__(self, "num", self.num / lead)
            object.__setattr__(self, "den", self.den / lead)

    @classmethod
    def from_coeffs(cls, num, den, tol: float = DEFAULT_GCD_TOL) -> RationalMap:
        return normalize(Polynomial(num), Polynomial(den), tol)

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree, 0)

    @property
    def fixes_infinity(self) -> bool:
        return self.num.degree > self.den.degree

    def __call__(self, z):
        """Evaluate on finite inputs (scalar or array); poles give complex inf/nan."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.num(z) / self.den(z)

    def to_json(self):
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, data, tol: float = DEFAULT_GCD_TOL) -> RationalMap:
        return normalize(Polynomial.from_json(data["num"]), Polynomial.from_json(data["den"]), tol)


def normalize(num: Polynomial, den: Polynomial, tol: float = DEFAULT_GCD_TOL) -> RationalMap:
    """Coprime representative of ``num / den`` with monic denominator."""
    if den.is_zero:
        raise DegenerateMap("denominator is the zero polynomial")
    cancelled = 0
    if not num.is_zero:
        g = gcd_approx(num, den, tol)
        if g.degree >= 1:
            num = poly_divmod(num, g)[0]
            den = poly_divmod(den, g)[0]
            cancelled = g.degree
    else:
        den = Polynomial([1.0])
    N = RationalMap(num, den, cancelled)
    if N.num.degree <= 0 and N.den.degree <= 0:
        raise DegenerateMap("rational map is constant (degree 0)")
    return N


def eval_sphere(N: RationalMap, z):
    """Value of ``N`` at a point of the sphere (complex or ``INFINITY``)."""
    if z is INFINITY:
        da, db = N.num.degree, N.den.degree
        if da > db:
            return INFINITY
        if da == db:
            return N.num.leading / N.den.leading
        return 0j
    z = complex(z)
    b = N.den(z)
    a = N.num(z)
    if b == 0:
        return INFINITY if a != 0 else complex("nan")
    w = a / b
    if not np.isfinite(w):
        return INFINITY
    return w


def wronskian(N: RationalMap) -> Polynomial:
    """``num' * den - num * den'``: numerator of N' before any cancellation."""
    A, B = N.num, N.den
    W = A.derivative() * B - A * B.derivative()
    scale = max(A.norm() * B.norm(), 1e-300)
    return W.trim(TRIM_RTOL, scale)[0]


def derivative(N: RationalMap, tol: float = DEFAULT_GCD_TOL) -> RationalMap:
    """N' as a normalized rational map (quotient rule)."""
    W = wronskian(N)
    if W.is_zero:
        return RationalMap(Polynomial(), Polynomial([1.0]))
    return _normalize_allow_constant(W, N.den * N.den, tol)


def _normalize_allow_constant(num, den, tol):
    try:
        return normalize(num, den, tol)
    except DegenerateMap:
        return RationalMap(Polynomial([num.leading / den.leading]), Polynomial([1.0]))


def derivative_at(N: RationalMap, z):
    """N'(z) evaluated directly from the quotient rule (no normalization)."""
    A, B = N.num, N.den
    b = B(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (A.derivative()(z) * b - A(z) * B.derivative()(z)) / (b * b)


def classify_multiplier(lam: complex, tol: float = 1e-9, max_denominator: int = 64) -> str:
    r = abs(lam)
    if r <= tol:
        return "superattracting"
    if r < 1 - tol:
        return "attracting"
    if r > 1 + tol:
        return "repelling"
    theta = np.angle(lam) / (2 * np.pi)
    frac = Fraction(theta).limit_denominator(max_denominator)
    if abs(float(frac) - theta) <= tol:
        return "rationally_indifferent"
    return "irrationally_indifferent"


@dataclass(frozen=True)
class FixedPointRecord:
    location: object  # complex or INFINITY
    multiplier: complex | None
    fixed_multiplicity: int
    classification: str

    @property
    def is_infinity(self) -> bool:
        return self.location is INFINITY

    def to_json(self):
        loc = "infinity" if self.is_infinity else [self.location.real, self.location.imag]
        lam = None if self.multiplier is None else [self.multiplier.real, self.multiplier.imag]
        return {"location": loc, "multiplier": lam, "fixed_multiplicity": self.fixed_multiplicity,
                "classification": self.classification}


def displacement_denominator(N: RationalMap):
    """``z*den - num`` with numerically vanished top coefficients trimmed.

    Returns ``(T, dropped)``; ``T`` is the zero polynomial iff N is the identity.
    """
    zB = X * N.den
    T = zB - N.num
    scale = max(zB.norm(), N.num.norm())
    return T.trim(TRIM_RTOL, scale)


def fixed_points(N: RationalMap, tol: float = 1e-9) -> list:
    """Finite fixed points (roots of z*den - num) with multipliers, plus infinity if fixed."""
    T, _ = displacement_denominator(N)
    if T.is_zero:
        raise DegenerateMap("the identity map has every point fixed")
    out = []
    if T.degree >= 1:
        for z, m in roots(T):
            if m >= 2:
                out.append(FixedPointRecord(z, 1 + 0j, m, "rationally_indifferent"))
            else:
                lam = complex(derivative_at(N, z))
                out.append(FixedPointRecord(z, lam, 1, classify_multiplier(lam, tol)))
    if N.fixes_infinity:
        mult = N.degree + 1 - T.degree
        if N.num.degree - N.den.degree >= 2:
            lam = 0j
        else:
            lam = complex(N.den.leading / N.num.leading)
        if mult >= 2:
            out.append(FixedPointRecord(INFINITY, 1 + 0j, mult, "rationally_indifferent"))
        else:
            out.append(FixedPointRecord(INFINITY, lam, mult, classify_multiplier(lam, tol)))
    return out


@dataclass(frozen=True)
class Pole:
    """A pole of 1/(z - N(z)) with its principal part.

    ``principal_part[j]`` multiplies ``(z - location)**-(j+1)``.
    """

    location: complex
    principal_part: tuple

    @property
    def order(self) -> int:
        return len(self.principal_part)

    @property
    def residue(self) -> complex:
        return self.principal_part[0]


@dataclass(frozen=True)
class PartialFractionDecomp:
    polynomial_part: Polynomial
    poles: tuple
    trimmed: int = 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.polynomial_part(z) + np.zeros_like(z)
        for pole in self.poles:
            h = z - pole.location
            for j, c in enumerate(pole.principal_part):
                out = out + c / h ** (j + 1)
        return out


def _series_divide(num: np.ndarray, den: np.ndarray, order: int) -> np.ndarray:
    """First ``order`` Taylor coefficients of num/den (den[0] != 0)."""
    out = np.zeros(order, dtype=complex)
    for i in range(order):
        acc = num[i] if i < len(num) else 0
        for j in range(1, min(i, len(den) - 1) + 1):
            acc -= den[j] * out[i - j]
        out[i] = acc / den[0]
    return out


def partial_fractions_of_displacement(N: RationalMap) -> PartialFractionDecomp:
    """Decompose ``1/(z - N(z)) = den / (z*den - num)`` into polynomial part plus principal parts."""
    T, trimmed = displacement_denominator(N)
    if T.is_zero:
        raise DegenerateMap("z - N(z) vanishes identically (N is the identity)")
    B = N.den
    s, _ = poly_divmod(B, T)
    poles = []
    if T.degree >= 1:
        dT = T.derivative()
        for z0, m in roots(T):
            if m == 1:
                poles.append(Pole(z0, (complex(B(z0) / dT(z0)),)))
                continue
            # T = (z - z0)^m U; expand B/U about z0 to order m-1
            U = T
            for _ in range(m):
                U = poly_divmod(U, Polynomial([-z0, 1.0]))[0]
            c = _series_divide(B.taylor(z0), U.taylor(z0), m)
            poles.append(Pole(z0, tuple(complex(v) for v in c[::-1])))
    return PartialFractionDecomp(s, tuple(poles), trimmed)
