"""Orbits, basins, immediate basins, the access census and dynamical access traces.

Basin labels are small integers: ``0 .. k-1`` for the roots of ``p``,
``k .. k+n-1`` for the petals of the parabolic point at infinity and
``UNDECIDED`` (-1) for everything else (Julia set proxy, poles, slow orbits).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    CriticalPointUnresolved,
    NotParabolic,
    RootOutsideRegion,
    SeedNotInParabolicBasin,
    SegmentLeavesBasin,
)
from .newton import NewtonCertificate, petal_directions
from .polycore import RootSet, roots
from .ratmap import RationalMap, wronskian

__all__ = [
    "UNDECIDED",
    "IterationParams",
    "EscapeCriterion",
    "Verdict",
    "Orbit",
    "Region",
    "BasinRaster",
    "ImmediateBasin",
    "BasinCensus",
    "AccessCensus",
    "AccessTrace",
    "classify_points",
    "classify_point",
    "critical_points",
    "critical_multiplicity_at_infinity",
    "raster_basins",
    "label_components",
    "immediate_basins",
    "access_census",
    "trace_dynamical_access",
    "forward_invariance_defect",
]

UNDECIDED = -1
_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True)
class IterationParams:
    """Orbit classification settings.

    ``escape_radius`` and ``fatou_margin`` default to values derived from the
    certificate (see :class:`EscapeCriterion`).
    """

    max_iter: int = 10_000
    r_conv_rel: float = 1e-8
    monotone_steps: int = 8
    escape_radius: float | None = None
    fatou_margin: float | None = None
    threads: int = 1

    def to_json(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class EscapeCriterion:
    """Test for convergence to the parabolic point at infinity.

    In the coordinate ``u = -q(z)`` the map acts as ``u -> u + 1 + O(1/u)`` far
    out, so orbits inside the cone ``Re u > C, |Im u| < Re u`` with ``|z| > R``
    keep escaping. ``C`` absorbs the O(1/u) term: with ``beta = m/n + (n-1)/(2n)``
    the drift is ``-beta/u``. An orbit is flagged once it is in the cone and its
    modulus has grown ``K`` steps in a row.
    """

    radius: float
    margin: float
    monotone_steps: int
    directions: tuple
    q_coeffs: np.ndarray

    @classmethod
    def from_certificate(cls, cert: NewtonCertificate, params: IterationParams) -> EscapeCriterion | None:
        if cert.n < 1:
            return None
        n = cert.n
        qc = cert.q.coeffs
        qn = qc[-1]
        rq = max([abs(qc[j] / qn) ** (1.0 / (n - j)) for j in range(1, n)], default=0.0)
        rmax = max([abs(z) for z, _ in cert.roots], default=0.0)
        m = cert.m_total
        rm = (m / abs(n * qn)) ** (1.0 / n)
        radius = params.escape_radius or 4.0 * (1.0 + rmax + rq + rm)
        beta = m / n + (n - 1) / (2 * n)
        margin = params.fatou_margin or 2.0 + 2.0 * beta
        return cls(radius, margin, params.monotone_steps, tuple(petal_directions(cert)), qc.copy())

    def fatou(self, z):
        out = np.zeros_like(z)
        for a in self.q_coeffs[::-1]:
            out = out * z + a
        return -out

    def petal_index(self, z) -> np.ndarray:
        dirs = np.array(self.directions)
        ang = np.abs(np.angle(z[:, None] / dirs[None, :]))
        return np.argmin(ang, axis=1)


@dataclass(frozen=True)
class Verdict:
    kind: str  # "root" | "infinity" | "undecided"
    index: int | None = None

    @classmethod
    def from_label(cls, label: int, k: int) -> Verdict:
        if label == UNDECIDED:
            return cls("undecided")
        if label < k:
            return cls("root", int(label))
        return cls("infinity", int(label - k))

    def label(self, k: int) -> int:
        if self.kind == "root":
            return self.index
        if self.kind == "infinity":
            return k + self.index
        return UNDECIDED

    def __str__(self):
        if self.kind == "root":
            return f"ConvergedToRoot({self.index})"
        if self.kind == "infinity":
            return f"ConvergedToInfinity({self.index})"
        return "Undecided"


@dataclass(frozen=True)
class Orbit:
    points: np.ndarray
    verdict: Verdict
    iterations_used: int


def _eval_map(num: np.ndarray, den: np.ndarray, z: np.ndarray) -> np.ndarray:
    a = np.zeros_like(z)
    for c in num[::-1]:
        a = a * z + c
    b = np.zeros_like(z)
    for c in den[::-1]:
        b = b * z + c
    return a / b


def _classify_chunk(N: RationalMap, cert: NewtonCertificate, z0: np.ndarray,
                    params: IterationParams, esc: EscapeCriterion | None):
    num, den = N.num.coeffs, N.den.coeffs
    rts = cert.locations
    k = len(rts)
    rconv = params.r_conv_rel * (1.0 + np.abs(rts))
    npts = len(z0)
    labels = np.full(npts, UNDECIDED, dtype=np.int64)
    iters = np.full(npts, params.max_iter, dtype=np.int64)
    idx = np.arange(npts)
    z = z0.astype(complex).copy()
    absz = np.abs(z)
    inc = np.zeros(npts, dtype=np.int64)
    with np.errstate(all="ignore"):
        for it in range(1, params.max_iter + 1):
            if not idx.size:
                break
            zn = _eval_map(num, den, z)
            lab = np.full(idx.size, UNDECIDED, dtype=np.int64)
            for i in range(k):
                dn = np.abs(zn - rts[i])
                hit = (dn <= rconv[i]) & (dn <= np.abs(z - rts[i])) & (lab == UNDECIDED)
                lab[hit] = i
            finite = np.isfinite(zn)
            if esc is not None:
                an = np.abs(zn)
                inc = np.where(an > absz, inc + 1, 0)
                absz = an
                u = esc.fatou(zn)
                out = (finite & (an > esc.radius) & (inc >= esc.monotone_steps)
                       & (u.real > esc.margin) & (np.abs(u.imag) < u.real) & (lab == UNDECIDED))
                if out.any():
                    lab[out] = k + esc.petal_index(zn[out])
            done = (lab != UNDECIDED) | ~finite
            if done.any():
                labels[idx[done]] = lab[done]
                iters[idx[done]] = it
                keep = ~done
                idx, z, inc = idx[keep], zn[keep], inc[keep]
                absz = absz[keep] if esc is not None else absz
            else:
                z = zn
    return labels, iters


def classify_points(N: RationalMap, cert: NewtonCertificate, z0, params: IterationParams | None = None):
    """Vectorized classification. Returns ``(labels, iterations)`` shaped like ``z0``."""
    params = params or IterationParams()
    z0 = np.asarray(z0, dtype=complex)
    flat = z0.ravel()
    esc = EscapeCriterion.from_certificate(cert, params)
    threads = max(1, int(params.threads))
    if threads == 1 or flat.size < 2 * threads:
        labels, iters = _classify_chunk(N, cert, flat, params, esc)
    else:
        chunks = np.array_split(flat, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _classify_chunk(N, cert, c, params, esc), chunks))
        labels = np.concatenate([p[0] for p in parts])
        iters = np.concatenate([p[1] for p in parts])
    return labels.reshape(z0.shape), iters.reshape(z0.shape)


def classify_point(N: RationalMap, cert: NewtonCertificate, z0, params: IterationParams | None = None) -> Orbit:
    """Orbit of ``z0`` up to the step where its fate was decided."""
    params = params or IterationParams()
    labels, iters = classify_points(N, cert, np.array([complex(z0)]), params)
    n_used = int(iters[0])
    pts = [complex(z0)]
    z = complex(z0)
    with np.errstate(all="ignore"):
        for _ in range(n_used):
            z = complex(_eval_map(N.num.coeffs, N.den.coeffs, np.array([z]))[0])
            pts.append(z)
            if not np.isfinite(z):
                break
    return Orbit(np.array(pts), Verdict.from_label(int(labels[0]), cert.k), n_used)


def critical_points(N: RationalMap) -> RootSet:
    """Finite critical points with multiplicity: zeros of ``num' den - num den'``.

    Multiple poles are included (a pole of order j is critical of multiplicity j-1).
    The critical multiplicity at infinity is reported by
    :func:`critical_multiplicity_at_infinity`.
    """
    W = wronskian(N)
    if W.degree < 1:
        return RootSet((), 0.0, 0.0)
    return roots(W)


def critical_multiplicity_at_infinity(N: RationalMap) -> int:
    return 2 * N.degree - 2 - max(wronskian(N).degree, 0)


@dataclass(frozen=True)
class Region:
    center: complex
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("region width and height must be positive")

    @property
    def radius(self) -> float:
        return 0.5 * min(self.width, self.height)

    def pixel_centers(self, resolution: int) -> np.ndarray:
        """Grid of pixel centers; row 0 is the top edge, column 0 the left edge."""
        j = np.arange(resolution)
        x = self.center.real - self.width / 2 + (j + 0.5) * self.width / resolution
        y = self.center.imag + self.height / 2 - (j + 0.5) * self.height / resolution
        return x[None, :] + 1j * y[:, None]

    def to_pixel(self, z, resolution: int):
        """Fractional (row, col) of ``z``; pixel centers sit at integers."""
        z = np.asarray(z, dtype=complex)
        col = (z.real - (self.center.real - self.width / 2)) * resolution / self.width - 0.5
        row = ((self.center.imag + self.height / 2) - z.imag) * resolution / self.height - 0.5
        return row, col

    def pixel_of(self, z, resolution: int):
        """Integer (row, col) of the pixel containing ``z``, or None if outside."""
        row, col = self.to_pixel(z, resolution)
        r, c = int(np.floor(row + 0.5)), int(np.floor(col + 0.5))
        if 0 <= r < resolution and 0 <= c < resolution:
            return r, c
        return None

    def contains(self, z) -> bool:
        return (abs(z.real - self.center.real) <= self.width / 2
                and abs(z.imag - self.center.imag) <= self.height / 2)

    def to_json(self):
        return {"center": [self.center.real, self.center.imag], "width": self.width, "height": self.height}


@dataclass(frozen=True)
class ImmediateBasin:
    component: int
    kind: str  # "root" | "petal"
    index: int
    anchor: complex  # root location or petal direction

    def to_json(self):
        return {"component": self.component, "kind": self.kind, "index": self.index,
                "anchor": [self.anchor.real, self.anchor.imag]}


@dataclass(frozen=True)
class BasinRaster:
    region: Region
    resolution: int
    labels: np.ndarray  # int16, (resolution, resolution)
    iterations: np.ndarray  # int32
    components: np.ndarray  # int32, -1 for undecided pixels
    n_roots: int
    n_petals: int
    immediate: tuple = field(default=())

    @property
    def immediate_flags(self) -> set:
        return {b.component for b in self.immediate}

    def verdict_at(self, row: int, col: int) -> Verdict:
        return Verdict.from_label(int(self.labels[row, col]), self.n_roots)


def label_components(labels: np.ndarray) -> np.ndarray:
    """4-connected components per basin label; ids are global and assigned label by label."""
    comps = np.full(labels.shape, -1, dtype=np.int32)
    next_id = 0
    for value in np.unique(labels):
        if value == UNDECIDED:
            continue
        lab, count = ndimage.label(labels == value, structure=_FOUR_CONNECTED)
        mask = lab > 0
        comps[mask] = lab[mask] - 1 + next_id
        next_id += count
    return comps


def raster_basins(N: RationalMap, cert: NewtonCertificate, region: Region, resolution: int,
                  params: IterationParams | None = None) -> BasinRaster:
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    params = params or IterationParams()
    grid = region.pixel_centers(resolution)
    labels, iters = classify_points(N, cert, grid, params)
    labels = labels.astype(np.int16)
    return BasinRaster(region, resolution, labels, iters.astype(np.int32),
                       label_components(labels), cert.k, cert.n)


def immediate_basins(raster: BasinRaster, cert: NewtonCertificate) -> list:
    """Components containing each root, and the far-field component along each petal.

    A petal's immediate basin is sampled at modulus 0.9 x region radius along its
    attracting direction; if that pixel is not in the petal's basin, the ray is
    scanned inward from the edge for the outermost pixel that is.
    """
    region, res = raster.region, raster.resolution
    found = []
    for i, (z, _) in enumerate(cert.roots):
        pix = region.pixel_of(z, res) if region.contains(z) else None
        if pix is None:
            raise RootOutsideRegion(f"root {z} lies outside the raster region")
        if raster.labels[pix] != i:
            raise RootOutsideRegion(f"pixel containing root {z} is not labelled with its basin")
        found.append(ImmediateBasin(int(raster.components[pix]), "root", i, complex(z)))
    if cert.n >= 1:
        for j, v in enumerate(petal_directions(cert)):
            label = cert.k + j
            pix = None
            first = region.center + 0.9 * region.radius * v
            cand = region.pixel_of(first, res)
            if cand is not None and raster.labels[cand] == label:
                pix = cand
            else:
                for s in np.linspace(1.0, 0.0, 4 * res):
                    cand = region.pixel_of(region.center + s * region.radius * v, res)
                    if cand is not None and raster.labels[cand] == label:
                        pix = cand
                        break
            if pix is None:
                raise RootOutsideRegion(f"no pixel of petal {j} basin along direction {v}")
            found.append(ImmediateBasin(int(raster.components[pix]), "petal", j, complex(v)))
    return found


@dataclass(frozen=True)
class BasinCensus:
    basin: ImmediateBasin
    critical_points: tuple  # ((z, multiplicity), ...)
    k: int
    restriction_degree: int
    access_count: int
    dynamical_access: bool | None
    measured_restriction_degree: int | None

    def to_json(self):
        out = self.basin.to_json()
        out.update({
            "critical_points": [{"z": [z.real, z.imag], "multiplicity": m} for z, m in self.critical_points],
            "k": self.k,
            "restriction_degree": self.restriction_degree,
            "access_count": self.access_count,
            "dynamical_access": self.dynamical_access,
            "measured_restriction_degree": self.measured_restriction_degree,
        })
        return out


@dataclass(frozen=True)
class AccessCensus:
    basins: tuple
    julia: tuple  # critical points whose orbit is undecided (Julia set, poles)
    elsewhere: tuple  # critical points in non-immediate components
    infinity_critical_multiplicity: int

    @property
    def consistent(self) -> bool:
        return all(b.k >= 1 and b.restriction_degree == b.k + 1 and b.access_count == b.k
                   for b in self.basins)

    def for_component(self, component: int) -> BasinCensus:
        for b in self.basins:
            if b.basin.component == component:
                return b
        raise KeyError(component)

    def to_json(self):
        pts = lambda seq: [{"z": [z.real, z.imag], "multiplicity": m} for z, m in seq]
        return {
            "basins": [b.to_json() for b in self.basins],
            "julia_critical_points": pts(self.julia),
            "other_critical_points": pts(self.elsewhere),
            "infinity_critical_multiplicity": self.infinity_critical_multiplicity,
            "consistent": self.consistent,
        }


def _component_of(raster: BasinRaster, z: complex, label: int, margin: int = 2):
    """Component id holding ``z``, None if outside, or raise when it sits on a boundary."""
    pix = raster.region.pixel_of(z, raster.resolution) if raster.region.contains(z) else None
    if pix is None:
        return None
    r, c = pix
    if raster.labels[r, c] != label:
        raise CriticalPointUnresolved(
            f"point {z:.6g} lies in a pixel of another basin; raise the resolution", z)
    win_l = raster.labels[max(r - margin, 0): r + margin + 1, max(c - margin, 0): c + margin + 1]
    win_c = raster.components[max(r - margin, 0): r + margin + 1, max(c - margin, 0): c + margin + 1]
    ids = np.unique(win_c[win_l == label])
    if len(ids) != 1:
        raise CriticalPointUnresolved(
            f"point {z:.6g} is within {margin} pixels of a component boundary; raise the resolution", z)
    return int(ids[0])


def _measure_restriction_degree(N: RationalMap, raster: BasinRaster, basin: ImmediateBasin, label: int):
    """Count preimages inside the component of a probe point of the component.

    Probes are tried in order (next to the fixed point, then the most interior
    pixel); the first probe whose preimages can all be located decides.
    """
    comp = basin.component
    mask = raster.components == comp
    grid = raster.region.pixel_centers(raster.resolution)
    probes = []
    if basin.kind == "root":
        r0, c0 = raster.region.pixel_of(basin.anchor, raster.resolution)
        for dr, dc in ((0, 3), (3, 0), (0, -3), (-3, 0)):
            r, c = r0 + dr, c0 + dc
            if 0 <= r < raster.resolution and 0 <= c < raster.resolution and mask[r, c]:
                probes.append(complex(grid[r, c]))
    dist = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]
    r, c = np.unravel_index(int(np.argmax(dist)), dist.shape)
    probes.append(complex(grid[r, c]))
    for w in probes:
        count = _count_preimages(N, raster, comp, label, w)
        if count is not None:
            return count
    return None


def _count_preimages(N, raster, comp, label, w):
    P = N.num - w * N.den
    if P.degree < 1:
        return None
    count = 0
    for z, m in roots(P):
        pix = raster.region.pixel_of(z, raster.resolution) if raster.region.contains(z) else None
        if pix is None:
            return None
        if raster.labels[pix] != label:
            continue
        try:
            cid = _component_of(raster, z, label)
        except CriticalPointUnresolved:
            return None
        if cid == comp:
            count += m
    return count


def _is_pole(N: RationalMap, z: complex, rtol: float = 1e-8) -> bool:
    scale = sum(abs(c) * max(1.0, abs(z)) ** i for i, c in enumerate(N.den.coeffs))
    return abs(N.den(z)) <= rtol * scale


def access_census(raster: BasinRaster, immediate, crit: RootSet, N: RationalMap,
                  cert: NewtonCertificate, params: IterationParams | None = None) -> AccessCensus:
    """Critical points per immediate basin; ``k`` of them give degree ``k+1`` and ``k`` accesses."""
    params = params or IterationParams()
    counts = {b.component: [] for b in immediate}
    julia, elsewhere = [], []
    locs = np.array([z for z, _ in crit], dtype=complex)
    labels, _ = classify_points(N, cert, locs, params) if len(locs) else (np.array([]), None)
    for (z, m), label in zip(crit, labels):
        label = int(label)
        if label == UNDECIDED or _is_pole(N, z):
            julia.append((z, m))
            continue
        comp = _component_of(raster, z, label)
        if comp is None:
            raise CriticalPointUnresolved(
                f"critical point {z:.6g} converges but lies outside the raster; enlarge the region", z)
        if comp in counts:
            counts[comp].append((z, m))
        else:
            elsewhere.append((z, m))
    entries = []
    for b in immediate:
        pts = tuple(counts[b.component])
        k = sum(m for _, m in pts)
        label = b.index if b.kind == "root" else cert.k + b.index
        entries.append(BasinCensus(
            basin=b,
            critical_points=pts,
            k=k,
            restriction_degree=k + 1,
            access_count=k,
            dynamical_access=True if b.kind == "petal" else None,
            measured_restriction_degree=_measure_restriction_degree(N, raster, b, label),
        ))
    return AccessCensus(tuple(entries), tuple(julia), tuple(elsewhere),
                        critical_multiplicity_at_infinity(N))


@dataclass(frozen=True)
class AccessTrace:
    """Forward images of a segment from ``z0`` to ``N(z0)``, concatenated.

    ``generations[g]`` is the slice of ``polyline`` holding ``N^g(segment)``;
    ``tail`` samples the continued orbit of the last point, from which
    ``landing_direction`` is read off.
    """

    polyline: np.ndarray
    generations: tuple  # ((start, stop), ...)
    landing_direction: complex
    petal: int
    step: float
    tail: np.ndarray
    escape_generation: int | None

    def generation(self, g: int) -> np.ndarray:
        a, b = self.generations[g]
        return self.polyline[a:b]

    def to_json(self):
        pair = lambda z: [z.real, z.imag]
        return {
            "petal": self.petal,
            "landing_direction": pair(self.landing_direction),
            "step": self.step,
            "escape_generation": self.escape_generation,
            "generations": [list(g) for g in self.generations],
            "polyline": [pair(z) for z in self.polyline],
            "tail": [pair(z) for z in self.tail],
        }


def _iterate(N: RationalMap, z: np.ndarray, times: int) -> np.ndarray:
    with np.errstate(all="ignore"):
        for _ in range(times):
            z = _eval_map(N.num.coeffs, N.den.coeffs, z)
    return z


def _scalar_map(N: RationalMap):
    num = [complex(c) for c in N.num.coeffs[::-1]]
    den = [complex(c) for c in N.den.coeffs[::-1]]

    def f(z):
        a = 0j
        for c in num:
            a = a * z + c
        b = 0j
        for c in den:
            b = b * z + c
        return a / b

    return f


def _landing_tail(N: RationalMap, z: complex, age: int, angle_tol: float, max_iter: int):
    """Continue the orbit of ``z`` (already ``age`` steps old) until its direction settles.

    Directions are compared at total ages ``2*age, 4*age, ...``; parabolic
    orbits approach their limit direction like ``log(j)/j``, so a change below
    ``angle_tol`` over a doubling bounds the remaining drift by a few times that.
    """
    f = _scalar_map(N)
    tail = [z]
    prev_dir = z / abs(z)
    total = max(age, 1)
    target = 2 * total
    steps = 0
    while steps < max_iter:
        z = f(z)
        steps += 1
        total += 1
        if total == target:
            tail.append(z)
            d = z / abs(z)
            if abs(np.angle(d / prev_dir)) < angle_tol:
                break
            prev_dir = d
            target *= 2
    if tail[-1] != z:
        tail.append(z)
    return np.array(tail), z / abs(z)


def trace_dynamical_access(N: RationalMap, cert: NewtonCertificate, z0, petal: int | None = None,
                           params: IterationParams | None = None, samples: int = 16,
                           generations: int = 64, angle_tol: float = 1e-3,
                           tail_max_iter: int = 1_000_000) -> AccessTrace:
    """Trace the curve ``union_g N^g(eta)`` for the segment ``eta = [z0, N(z0)]``."""
    if cert.n < 1:
        raise NotParabolic("infinity is not parabolic; there is no dynamical access")
    params = params or IterationParams()
    z0 = complex(z0)
    seed = classify_point(N, cert, z0, params)
    if seed.verdict.kind != "infinity" or (petal is not None and seed.verdict.index != petal):
        raise SeedNotInParabolicBasin(f"seed {z0} has verdict {seed.verdict}")
    petal = seed.verdict.index
    z1 = complex(N(z0))
    eta = lambda t: z0 + np.asarray(t) * (z1 - z0)
    check = eta(np.linspace(0.0, 1.0, 4 * samples + 1))
    labels, _ = classify_points(N, cert, check, params)
    if np.any(labels != cert.k + petal):
        bad = check[np.flatnonzero(labels != cert.k + petal)[0]]
        raise SegmentLeavesBasin(f"segment point {bad} is not in the basin of petal {petal}")
    step = abs(z1 - z0) / samples

    t = np.linspace(0.0, 1.0, samples + 1)
    pts = eta(t)
    gens = [pts]
    for g in range(1, generations + 1):
        pts = _iterate(N, pts, 1)
        for _ in range(30):
            gaps = np.abs(np.diff(pts))
            wide = np.flatnonzero(gaps > step)
            if not wide.size or len(t) > 20_000:
                break
            t_mid = 0.5 * (t[wide] + t[wide + 1])
            new = _iterate(N, eta(t_mid), g)
            t = np.insert(t, wide + 1, t_mid)
            pts = np.insert(pts, wide + 1, new)
        gens.append(pts)
    bounds, start = [], 0
    for gpts in gens:
        bounds.append((start, start + len(gpts)))
        start += len(gpts)
    polyline = np.concatenate(gens)
    tail, direction = _landing_tail(N, complex(gens[-1][-1]), generations, angle_tol, tail_max_iter)

    mins = np.array([np.min(np.abs(gp)) for gp in gens])
    escape = None
    for g in range(len(mins) - 1, 0, -1):
        if mins[g] <= mins[g - 1]:
            escape = g if g < len(mins) - 1 else None
            break
    else:
        escape = 0
    return AccessTrace(polyline, tuple(bounds), complex(direction), petal, float(step), tail, escape)


def _point_polyline_distance(p: np.ndarray, line: np.ndarray) -> np.ndarray:
    if len(line) == 1:
        return np.abs(p - line[0])
    a, b = line[:-1], line[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    denom[denom == 0] = 1.0
    t = np.clip(((p[:, None] - a[None, :]) * np.conj(ab)[None, :]).real / denom[None, :], 0.0, 1.0)
    proj = a[None, :] + t * ab[None, :]
    return np.min(np.abs(p[:, None] - proj), axis=1)


def forward_invariance_defect(N: RationalMap, trace: AccessTrace) -> float:
    """Largest Hausdorff distance between ``N(generation g)`` and generation ``g+1``.

    ``N(generation g)`` is sampled at the vertices and segment midpoints of
    generation g, so the check also covers the curve between samples.
    """
    worst = 0.0
    for g in range(len(trace.generations) - 1):
        cur = trace.generation(g)
        nxt = trace.generation(g + 1)
        dense = np.empty(2 * len(cur) - 1, dtype=complex)
        dense[0::2] = cur
        dense[1::2] = 0.5 * (cur[:-1] + cur[1:])
        img = _iterate(N, dense, 1)
        d1 = _point_polyline_distance(img, nxt).max()
        d2 = _point_polyline_distance(nxt, img).max()
        worst = max(worst, float(d1), float(d2))
    return worst
