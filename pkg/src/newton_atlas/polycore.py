"""Dense complex polynomials: arithmetic, Horner evaluation, approximate GCD and roots.

Coefficients are stored in ascending order, ``coeffs[i]`` multiplies ``z**i``.
The zero polynomial has an empty coefficient vector and degree ``ZERO_DEGREE``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from .errors import DivisionByZeroPolynomial, RootFindingError, ZeroPolynomial

__all__ = [
    "ZERO_DEGREE",
    "Polynomial",
    "RootSet",
    "evaluate",
    "derivative",
    "antiderivative",
    "poly_divmod",
    "gcd_approx",
    "roots",
]

ZERO_DEGREE = -1
EPS = np.finfo(float).eps


class Polynomial:
    """Immutable dense polynomial with complex coefficients."""

    __slots__ = ("_c",)
    __array_ufunc__ = None  # numpy scalars defer to our reflected operators

    def __init__(self, coeffs=()):
        if isinstance(coeffs, Polynomial):
            c = coeffs._c
        else:
            c = np.array(coeffs, dtype=complex).ravel()
            nz = np.flatnonzero(c)
            c = c[: nz[-1] + 1].copy() if nz.size else c[:0].copy()
            c.flags.writeable = False
        self._c = c

    @classmethod
    def constant(cls, value) -> Polynomial:
        return cls([value])

    @classmethod
    def from_roots(cls, roots, leading=1.0) -> Polynomial:
        """Build ``leading * prod (z - r)**m`` from ``(r, m)`` pairs or bare roots."""
        out = np.array([leading], dtype=complex)
        for item in roots:
            r, m = item if isinstance(item, tuple) else (item, 1)
            for _ in range(int(m)):
                out = np.convolve(out, [-r, 1.0])
        return cls(out)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1 if len(self._c) else ZERO_DEGREE

    @property
    def is_zero(self) -> bool:
        return len(self._c) == 0

    @property
    def leading(self) -> complex:
        return complex(self._c[-1]) if len(self._c) else 0j

    def norm(self) -> float:
        return float(np.linalg.norm(self._c))

    def __call__(self, z):
        return evaluate(self, z)

    def __len__(self):
        return len(self._c)

    def __iter__(self):
        return iter(self._c)

    def __getitem__(self, i):
        return self._c[i] if 0 <= i < len(self._c) else 0j

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, Number):
            return Polynomial([other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self._c), len(other._c))
        out = np.zeros(n, dtype=complex)
        out[: len(self._c)] += self._c
        out[: len(other._c)] += other._c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return Polynomial(self._c * other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Polynomial()
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Polynomial(self._c / other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Polynomial([1.0])
        for _ in range(k):
            out = out * self
        return out

    def __divmod__(self, other):
        return poly_divmod(self, other)

    def __floordiv__(self, other):
        return poly_divmod(self, other)[0]

    def __mod__(self, other):
        return poly_divmod(self, other)[1]

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return len(self._c) == len(other._c) and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        other = self._coerce(other)
        n = max(len(self._c), len(other._c))
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: len(self._c)] = self._c
        b[: len(other._c)] = other._c
        return bool(np.allclose(a, b, atol=atol, rtol=rtol))

    def monic(self) -> Polynomial:
        if self.is_zero:
            raise ZeroPolynomial("the zero polynomial has no monic form")
        return Polynomial(self._c / self._c[-1])

    def derivative(self) -> Polynomial:
        return derivative(self)

    def antiderivative(self) -> Polynomial:
        return antiderivative(self)

    def trim(self, rtol: float, scale: float | None = None):
        """Drop leading coefficients with modulus <= rtol * scale.

        Returns ``(polynomial, dropped)`` so callers can record what was removed.
        """
        scale = self.norm() if scale is None else scale
        c = self._c
        n = len(c)
        while n and abs(c[n - 1]) <= rtol * scale:
            n -= 1
        return Polynomial(c[:n]), len(c) - n

    def taylor(self, z0) -> np.ndarray:
        """Coefficients of ``P(z0 + h)`` in powers of ``h``."""
        c = self._c.astype(complex)
        n = len(c)
        out = c.copy()
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                out[j] += z0 * out[j + 1]
        return out

    def to_json(self):
        return [[float(c.real), float(c.imag)] for c in self._c]

    @classmethod
    def from_json(cls, data) -> Polynomial:
        coeffs = []
        for item in data:
            if isinstance(item, Number):
                coeffs.append(complex(item))
            else:
                re, im = item
                coeffs.append(complex(float(re), float(im)))
        return cls(coeffs)

    def __repr__(self):
        terms = ", ".join(_fmt(c) for c in self._c)
        return f"Polynomial([{terms}])"


def _fmt(c: complex) -> str:
    if c.imag == 0:
        return repr(float(c.real))
    return repr(complex(c))


X = Polynomial([0.0, 1.0])


def evaluate(P: Polynomial, z):
    """Horner evaluation; accepts scalars or numpy arrays."""
    c = P.coeffs
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for a in c[::-1]:
        out = out * z + a
    return complex(out) if scalar else out


def derivative(P: Polynomial) -> Polynomial:
    c = P.coeffs
    if len(c) <= 1:
        return Polynomial()
    return Polynomial(c[1:] * np.arange(1, len(c)))


def antiderivative(P: Polynomial) -> Polynomial:
    """Antiderivative normalized to vanish at 0."""
    c = P.coeffs
    if not len(c):
        return Polynomial()
    return Polynomial(np.concatenate([[0.0], c / np.arange(1, len(c) + 1)]))


def poly_divmod(A: Polynomial, B: Polynomial):
    """Long division: ``A = quotient * B + remainder`` with ``deg remainder < deg B``."""
    if B.is_zero:
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    db = B.degree
    if A.degree < db:
        return Polynomial(), A
    b = B.coeffs
    r = A.coeffs.astype(complex)
    q = np.zeros(A.degree - db + 1, dtype=complex)
    lead = b[-1]
    for i in range(A.degree - db, -1, -1):
        qi = r[i + db] / lead
        q[i] = qi
        r[i : i + db + 1] -= qi * b
        r[i + db] = 0.0
    return Polynomial(q), Polynomial(r[:db])


def _conv_matrix(c: np.ndarray, ncols: int) -> np.ndarray:
    m = np.zeros((len(c) + ncols - 1, ncols), dtype=complex)
    for j in range(ncols):
        m[j : j + len(c), j] = c
    return m


def gcd_approx(A: Polynomial, B: Polynomial, tol: float = 1e-10) -> Polynomial:
    """Monic approximate GCD via rank deficiency of Sylvester subresultant matrices.

    The largest ``k`` for which the k-th Sylvester matrix of the unit-normalized
    inputs has smallest singular value below ``tol`` gives the GCD degree; the
    factor itself is then the least-squares solution of ``A = u*g, B = v*g``.
    A degree-0 result means the inputs are coprime at this tolerance.
    """
    if A.is_zero and B.is_zero:
        raise ZeroPolynomial("gcd of two zero polynomials")
    if A.is_zero:
        return B.monic()
    if B.is_zero:
        return A.monic()
    m, n = A.degree, B.degree
    if m == 0 or n == 0:
        return Polynomial([1.0])
    a = A.coeffs / A.norm()
    b = B.coeffs / B.norm()
    for k in range(min(m, n), 0, -1):
        S = np.hstack([_conv_matrix(a, n - k + 1), _conv_matrix(b, m - k + 1)])
        _, sv, vh = np.linalg.svd(S)
        if sv[-1] > tol * np.sqrt(m + n):
            continue
        null = vh[-1].conj()
        v, u = null[: n - k + 1], null[n - k + 1 :]
        ca, cb = -u, v
        M = np.vstack([_conv_matrix(ca, k + 1), _conv_matrix(cb, k + 1)])
        rhs = np.concatenate([a, b])
        g, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        resid = np.linalg.norm(M @ g - rhs)
        if resid <= 10 * tol * np.sqrt(m + n) and abs(g[-1]) > 0:
            return Polynomial(g / g[-1])
    return Polynomial([1.0])


@dataclass(frozen=True)
class RootSet:
    """Distinct roots with multiplicities, plus a record of how they were obtained."""

    entries: tuple
    residual_bound: float
    merge_radius: float
    merges: tuple = field(default=())
    method: str = "aberth"

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def locations(self) -> np.ndarray:
        return np.array([r for r, _ in self.entries], dtype=complex)

    @property
    def multiplicities(self) -> list:
        return [m for _, m in self.entries]

    @property
    def total_multiplicity(self) -> int:
        return sum(self.multiplicities)


def _horner_abs(absc: np.ndarray, z: np.ndarray) -> np.ndarray:
    az = np.abs(z)
    out = np.zeros(az.shape)
    for a in absc[::-1]:
        out = out * az + a
    return out


def _aberth(a: np.ndarray, max_iter: int):
    """Simultaneous Aberth-Ehrlich iteration on monic ascending coefficients ``a``."""
    n = len(a) - 1
    da = a[1:] * np.arange(1, n + 1)
    absa = np.abs(a)
    center = -a[n - 1] / n
    # Fujiwara-type bound on |root - center| keeps the starting circle enclosing all roots
    shifted = Polynomial(a).taylor(center)
    bound = 2 * max(abs(shifted[n - j]) ** (1.0 / j) for j in range(1, n + 1))
    radius = max(bound, 1e-3 * (1 + abs(center)))
    z = center + radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(~done)
        if not idx.size:
            return z, True
        zi = z[idx]
        p = evaluate(Polynomial(a), zi)
        small = np.abs(p) <= 4 * n * EPS * _horner_abs(absa, zi)
        done[idx[small]] = True
        idx = idx[~small]
        if not idx.size:
            return z, True
        zi, p = z[idx], p[~small]
        dp = evaluate(Polynomial(da), zi)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = zi[:, None] - z[None, :]
            diff[np.arange(len(idx)), idx] = np.inf
            s = np.sum(1.0 / diff, axis=1)
            w = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(w)
        if bad.any():
            w[bad] = 1e-3 * radius * np.exp(1j * (idx[bad] + 1.0))
        z[idx] = zi - w
        tiny = np.abs(w) <= EPS * np.maximum(np.abs(z[idx]), 1e-300)
        done[idx[tiny]] = True
    return z, False


def _polish(P: Polynomial, dP: Polynomial, r: complex, steps: int = 2) -> complex:
    best, best_res = r, abs(P(r))
    for _ in range(steps):
        d = dP(best)
        if d == 0:
            break
        cand = best - P(best) / d
        res = abs(P(cand))
        if not res < best_res:
            break
        best, best_res = cand, res
    return best


def _single_linkage(z: np.ndarray, radius) -> list:
    """Groups of indices whose members chain together within ``radius`` (scalar or per-point)."""
    n = len(z)
    radius = np.broadcast_to(np.asarray(radius, float), (n,))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= max(radius[i], radius[j]):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def roots(P: Polynomial, merge_radius: float | None = None, cluster_rtol: float = 1e-4,
          max_iter: int = 500) -> RootSet:
    """All roots of ``P`` with multiplicities.

    Aberth-Ehrlich iteration with a companion-matrix fallback, Newton polish of
    simple roots, then cluster merging. Approximations closer than
    ``merge_radius`` always merge; wider clusters (up to ``cluster_rtol``
    relative) merge only when ``P`` vanishes at their centroid to rounding level,
    which is what an m-fold root smeared to radius ~eps**(1/m) looks like.
    """
    if P.is_zero:
        raise ZeroPolynomial("roots of the zero polynomial are undefined")
    n = P.degree
    if n == 0:
        raise ZeroPolynomial("a nonzero constant polynomial has no roots")
    a = P.coeffs / P.leading
    z, ok = _aberth(a, max_iter)
    method = "aberth"
    if not ok or not np.all(np.isfinite(z)):
        z = np.roots(a[::-1]).astype(complex)
        method = "companion"
        if not np.all(np.isfinite(z)):
            raise RootFindingError(f"root finder failed on degree {n} polynomial")
    mon = Polynomial(a)
    dmon = mon.derivative()
    scale = max(1.0, float(np.max(np.abs(z))))
    if merge_radius is None:
        merge_radius = max(1e-8, 1e3 * EPS * scale)
    absa = np.abs(a)

    entries, merges = [], []
    for group in _single_linkage(z, cluster_rtol * (1 + np.abs(z))):
        pts = z[group]
        c = pts.mean()
        m = len(group)
        if m > 1 and abs(mon(c)) <= 100 * n * EPS * _horner_abs(absa, np.array([c]))[0]:
            spread = float(np.max(np.abs(pts - c)))
            higher = mon
            for _ in range(m - 1):
                higher = higher.derivative()
            c = _polish(higher, higher.derivative(), c)
            entries.append((complex(c), m))
            merges.append({"center": complex(c), "multiplicity": m, "spread": spread})
            continue
        for sub in _single_linkage(pts, merge_radius):
            sp = pts[sub]
            if len(sub) == 1:
                entries.append((complex(_polish(mon, dmon, sp[0])), 1))
            else:
                cc = sp.mean()
                entries.append((complex(cc), len(sub)))
                merges.append({"center": complex(cc), "multiplicity": len(sub),
                               "spread": float(np.max(np.abs(sp - cc)))})
    entries.sort(key=lambda e: (e[0].real, e[0].imag))
    resid = max(abs(P(r)) for r, _ in entries)
    return RootSet(tuple(entries), float(resid), float(merge_radius), tuple(merges), method)
