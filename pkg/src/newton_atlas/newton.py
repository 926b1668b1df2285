"""Recognising, building and classifying rational Newton maps of ``p * exp(q)``.

A rational map N is a Newton map exactly when every pole of ``1/(z - N(z))``
is simple with a positive integer residue ``m_i``; then
``p = prod (z - z_i)**m_i`` and ``q`` is the antiderivative of the polynomial
part, normalized to ``q(0) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMap, NewtonAtlasError, NotParabolic, ValidationFailed
from .polycore import X, Polynomial, antiderivative
from .ratmap import (
    RationalMap,
    derivative_at,
    partial_fractions_of_displacement,
)

__all__ = [
    "NewtonCertificate",
    "InfinityClassification",
    "Reason",
    "NotNewtonMap",
    "MultiplierReport",
    "construct",
    "raw_newton_pair",
    "detect",
    "is_newton_map",
    "validate_multipliers",
    "classify_infinity",
    "petal_directions",
]

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class NewtonCertificate:
    """Root data of ``p`` plus ``q``: witnesses ``N = z - p / (p' + p q')``."""

    roots: tuple  # ((z_i, m_i), ...)
    q: Polynomial
    residues: tuple = ()  # raw residues when produced by detect
    near_misses: tuple = ()

    @property
    def k(self) -> int:
        return len(self.roots)

    @property
    def n(self) -> int:
        return max(self.q.degree, 0)

    @property
    def degree(self) -> int:
        return self.k + self.n

    @property
    def m_total(self) -> int:
        return sum(m for _, m in self.roots)

    @property
    def locations(self) -> np.ndarray:
        return np.array([z for z, _ in self.roots], dtype=complex)

    @property
    def multiplicities(self) -> list:
        return [m for _, m in self.roots]

    @property
    def p(self) -> Polynomial:
        return Polynomial.from_roots(self.roots)

    def to_json(self):
        return {
            "roots": [{"z": [z.real, z.imag], "m": int(m)} for z, m in self.roots],
            "q": self.q.to_json(),
            "k": self.k,
            "n": self.n,
            "degree": self.degree,
        }

    @classmethod
    def from_json(cls, data) -> NewtonCertificate:
        roots = tuple((complex(*r["z"]), int(r["m"])) for r in data["roots"])
        return cls(roots, Polynomial.from_json(data["q"]))


@dataclass(frozen=True)
class Reason:
    kind: str  # InfinityNotFixed | HigherOrderPole | NonIntegerResidue | NonPositiveResidue
    location: complex | None = None
    value: complex | None = None
    order: int | None = None

    def to_json(self):
        out = {"kind": self.kind}
        if self.location is not None:
            out["z"] = [self.location.real, self.location.imag]
        if self.value is not None:
            out["value"] = [self.value.real, self.value.imag]
        if self.order is not None:
            out["order"] = self.order
        return out


class NotNewtonMap(NewtonAtlasError):
    """Raised by :func:`detect`; ``reasons`` lists every violated condition."""

    def __init__(self, reasons, near_misses=()):
        self.reasons = list(reasons)
        self.near_misses = list(near_misses)
        super().__init__("not a Newton map: " + ", ".join(r.kind for r in self.reasons))

    @property
    def reason(self) -> Reason:
        return self.reasons[0]

    def to_json(self):
        return {
            "newton": False,
            "reasons": [r.to_json() for r in self.reasons],
            "near_misses": [r.to_json() for r in self.near_misses],
        }


def _clean_q(q: Polynomial) -> Polynomial:
    if q.is_zero:
        return q
    return q - q.coeffs[0]


def raw_newton_pair(p_roots, q: Polynomial):
    """``(z (p' + p q') - p,  p' + p q')`` without cancelling common factors."""
    p = Polynomial.from_roots(p_roots)
    den = p.derivative() + p * q.derivative()
    return X * den - p, den


def construct(p_roots, q: Polynomial | None = None):
    """Newton map of ``p * exp(q)`` for ``p = prod (z - z_i)**m_i``.

    The map is assembled from the reduced form ``1/(z - N) = sum m_i/(z - z_i) + q'``,
    so no numerical cancellation is needed; the common factor
    ``prod (z - z_i)**(m_i - 1)`` of the raw quotient is recorded as
    ``cancelled_degree``.
    """
    q = _clean_q(Polynomial() if q is None else Polynomial(q))
    p_roots = tuple((complex(z), int(m)) for z, m in p_roots)
    if any(m < 1 for _, m in p_roots):
        raise ValueError("root multiplicities must be positive integers")
    locs = [z for z, _ in p_roots]
    if len(set(locs)) != len(locs):
        raise ValueError("roots must be distinct; merge repeated roots into one multiplicity")
    cert = NewtonCertificate(p_roots, q)
    if cert.degree < 2:
        if cert.k == 1 and cert.m_total == 1 and cert.n == 0:
            raise DegenerateMap("p of degree 1 with constant q: the Newton map is constant")
        raise DegenerateMap(f"Newton map would have degree {cert.degree} < 2")
    P0 = Polynomial.from_roots(locs)
    D = q.derivative() * P0
    for i, (_, m) in enumerate(p_roots):
        D = D + m * Polynomial.from_roots(locs[:i] + locs[i + 1 :])
    cancelled = sum(m - 1 for _, m in p_roots)
    N = RationalMap(X * D - P0, D, cancelled)
    return N, cert


def detect(N: RationalMap, tol: float = DEFAULT_TOL) -> NewtonCertificate:
    """Certificate that N is a Newton map, or :class:`NotNewtonMap` with every reason found."""
    if N.degree < 2:
        raise DegenerateMap(f"detection needs degree >= 2, got {N.degree}")
    if not N.fixes_infinity:
        raise NotNewtonMap([Reason("InfinityNotFixed")])
    pf = partial_fractions_of_displacement(N)
    reasons, near, roots, residues = [], [], [], []
    for pole in pf.poles:
        z = pole.location
        if pole.order >= 2:
            reasons.append(Reason("HigherOrderPole", z, pole.principal_part[-1], pole.order))
            continue
        r = pole.residue
        m = round(r.real)
        dev = max(abs(r.real - m), abs(r.imag))
        residues.append(r)
        if dev > tol:
            if dev <= 10 * tol:
                near.append(Reason("NearMiss", z, r))
            reasons.append(Reason("NonIntegerResidue", z, r))
        elif m <= 0:
            reasons.append(Reason("NonPositiveResidue", z, r))
        else:
            roots.append((z, int(m)))
    if reasons:
        raise NotNewtonMap(reasons, near)
    q = antiderivative(pf.polynomial_part)
    cert = NewtonCertificate(tuple(roots), q, tuple(residues), tuple(near))
    if cert.degree != N.degree:
        raise NotNewtonMap([Reason("DegreeMismatch", value=complex(cert.degree))], near)
    return cert


def is_newton_map(N: RationalMap, tol: float = DEFAULT_TOL) -> bool:
    try:
        detect(N, tol)
    except NotNewtonMap:
        return False
    return True


@dataclass(frozen=True)
class MultiplierReport:
    entries: tuple  # dicts: z, m, multiplier, expected, deviation, residue_from_multiplier
    worst_deviation: float
    tol: float

    def to_json(self):
        return {
            "tol": self.tol,
            "worst_deviation": self.worst_deviation,
            "fixed_points": [
                {
                    "z": [e["z"].real, e["z"].imag],
                    "m": e["m"],
                    "multiplier": [e["multiplier"].real, e["multiplier"].imag],
                    "expected": e["expected"],
                    "deviation": e["deviation"],
                }
                for e in self.entries
            ],
        }


def validate_multipliers(N: RationalMap, cert: NewtonCertificate, tol: float = DEFAULT_TOL) -> MultiplierReport:
    """Check ``N'(z_i) = (m_i - 1)/m_i`` at every finite fixed point of the certificate."""
    entries = []
    worst = 0.0
    for z, m in cert.roots:
        lam = complex(derivative_at(N, z))
        expected = (m - 1) / m
        dev = abs(lam - expected)
        with np.errstate(divide="ignore", invalid="ignore"):
            res = 1 / (1 - lam) if lam != 1 else complex("inf")
        entries.append({"z": z, "m": m, "multiplier": lam, "expected": expected,
                        "deviation": dev, "residue_from_multiplier": res})
        worst = max(worst, dev)
        if not dev <= tol:
            raise ValidationFailed(
                f"multiplier {lam:.6g} at {z:.6g} differs from (m-1)/m = {expected:.6g}",
                location=z, multiplier=lam, expected=expected)
    return MultiplierReport(tuple(entries), worst, tol)


@dataclass(frozen=True)
class InfinityClassification:
    kind: str  # "repelling" | "parabolic"
    multiplier: float | None = None
    parabolic_multiplicity: int | None = None
    petal_count: int | None = None

    def to_json(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


def classify_infinity(cert: NewtonCertificate) -> InfinityClassification:
    if cert.n == 0:
        m = cert.m_total
        if m < 2:
            raise DegenerateMap("p of degree 1 with constant q has a constant Newton map")
        return InfinityClassification("repelling", multiplier=m / (m - 1))
    return InfinityClassification("parabolic", multiplier=1.0,
                                  parabolic_multiplicity=cert.n + 1, petal_count=cert.n)


def petal_directions(cert: NewtonCertificate) -> list:
    """Attracting directions at infinity: unit ``v`` with ``v**n = -t / q_n``, t > 0.

    Far out, ``N(z) ~ z - 1/(n q_n z**(n-1))`` so ``q(N(z)) ~ q(z) - 1``: orbits
    drift toward ``-q = +inf``, i.e. along directions where ``q_n v**n < 0``.
    Sorted by argument in (-pi, pi].
    """
    n = cert.n
    if n < 1:
        raise NotParabolic("infinity is repelling (q is constant); there are no petals")
    base = np.angle(-1.0 / cert.q.leading)
    angles = [(base + 2 * np.pi * j) / n for j in range(n)]
    angles = [float(np.angle(np.exp(1j * a))) for a in angles]
    angles.sort()
    return [complex(np.exp(1j * a)) for a in angles]
