"""Acceptance criteria 1-9. Run ``pytest tests/test_acceptance.py -v``; the
terminal summary prints one PASS/FAIL line per criterion."""
import json
import os
import time

import numpy as np
import pytest
import sympy as sp
from scipy import ndimage

from newton_atlas import Polynomial, construct, detect
from newton_atlas.basinfile import encode_raster, read_raster, write_raster
from newton_atlas.cli import main as cli_main
from newton_atlas.dynamics import (
    IterationParams,
    Region,
    access_census,
    classify_points,
    critical_points,
    forward_invariance_defect,
    immediate_basins,
    raster_basins,
    trace_dynamical_access,
)
from newton_atlas.newton import NotNewtonMap, classify_infinity, petal_directions, raw_newton_pair
from newton_atlas.polycore import X
from newton_atlas.ratmap import RationalMap, derivative_at, fixed_points, normalize
from newton_atlas.render import colorize, encode_ppm, read_ppm, write_image

from conftest import (
    QUARTIC_REGION,
    QUARTIC_C,
    cubic,
    parabolic_quadratic,
    quadratic,
    quartic,
    random_certificate,
)

z = sp.symbols("z")
RESOLUTION = 512


@pytest.fixture(scope="module")
def round_trip_cases():
    rng = np.random.default_rng(1)
    cases = [random_certificate(rng) for _ in range(200)]
    t0 = time.perf_counter()
    out = []
    for roots_, q in cases:
        N, cert = construct(roots_, q)
        out.append((N, cert, detect(N)))
    return out, time.perf_counter() - t0


@pytest.mark.criterion(1, "detect(construct(.)) round trip on 200 random certificates")
def test_criterion_1_round_trip(round_trip_cases, detail):
    cases, elapsed = round_trip_cases
    worst_root = worst_q = 0.0
    for _, cert, got in cases:
        assert got.k == cert.k
        for zz, m in cert.roots:
            dist = [abs(w - zz) for w, _ in got.roots]
            j = int(np.argmin(dist))
            assert got.roots[j][1] == m
            worst_root = max(worst_root, dist[j])
        n = max(len(got.q.coeffs), len(cert.q.coeffs))
        a = np.pad(got.q.coeffs, (0, n - len(got.q.coeffs)))
        b = np.pad(cert.q.coeffs, (0, n - len(cert.q.coeffs)))
        worst_q = max(worst_q, float(np.max(np.abs(a - b), initial=0.0)))
    detail(f"max root err {worst_root:.1e}, max q err {worst_q:.1e}, {elapsed:.2f} s")
    assert worst_root < 1e-7 and worst_q < 1e-7
    assert elapsed < 10


def _sympy_reasons(num, den):
    """Expected rejection kinds from an exact partial-fraction oracle."""
    zN = sp.cancel(z - num / den)
    disp = sp.cancel(1 / zN)
    n_, d_ = sp.fraction(sp.together(disp))
    kinds = set()
    for root, mult in sp.roots(sp.Poly(d_, z)).items():
        if mult >= 2:
            kinds.add("HigherOrderPole")
            continue
        res = complex(sp.N(sp.residue(disp, z, root)))
        m = round(res.real)
        if max(abs(res.real - m), abs(res.imag)) > 1e-6:
            kinds.add("NonIntegerResidue")
        elif m <= 0:
            kinds.add("NonPositiveResidue")
    return kinds


def _perturbed_map(rng):
    """Map with 1/(z - N) = sum r_i/(z - z_i) + s where one r_i is off an integer by 0.3."""
    k, n = 1, 0
    while k + n < 2:
        k = int(rng.integers(1, 4))
        n = int(rng.integers(0, 6 - k))
    pts = []
    while len(pts) < k:
        w = complex(*rng.uniform(-1, 1, 2))
        if all(abs(w - u) > 0.1 for u in pts):
            pts.append(w)
    res = [float(m) for m in rng.integers(1, 4, size=k)]
    bad = int(rng.integers(k))
    res[bad] += 0.3 * rng.choice([-1, 1])
    # s = q' has degree n - 1
    s = Polynomial([complex(*rng.uniform(-1, 1, 2)) for _ in range(n - 1)] + [1.0]) if n else Polynomial()
    P0 = Polynomial.from_roots(pts)
    D = s * P0
    for i in range(k):
        D = D + res[i] * Polynomial.from_roots(pts[:i] + pts[i + 1:])
    return RationalMap(X * D - P0, D), pts[bad], res[bad]


@pytest.mark.criterion(2, "structured rejection of z^2, z^2+c and 50 perturbed maps")
def test_criterion_2_rejection(detail):
    t0 = time.perf_counter()
    checked = 0
    for c in (0, sp.Rational(1, 100), sp.Rational(1, 1000), sp.Rational(1, 10**8), sp.I / 50):
        expected = _sympy_reasons(z**2 + c, sp.Integer(1))
        N = RationalMap(Polynomial([complex(c), 0, 1]), Polynomial([1]))
        with pytest.raises(NotNewtonMap) as exc:
            detect(N)
        assert {r.kind for r in exc.value.reasons} == expected
        checked += 1
    assert _sympy_reasons(z**2, sp.Integer(1)) == {"NonPositiveResidue"}

    rng = np.random.default_rng(2)
    for _ in range(50):
        N, where, value = _perturbed_map(rng)
        assert N.fixes_infinity and N.degree <= 5
        with pytest.raises(NotNewtonMap) as exc:
            detect(N)
        reasons = exc.value.reasons
        assert [r.kind for r in reasons] == ["NonIntegerResidue"]
        assert abs(reasons[0].location - where) < 1e-7
        assert abs(reasons[0].value - value) < 1e-7
        checked += 1
    elapsed = time.perf_counter() - t0
    detail(f"{checked} maps rejected with the expected reason, {elapsed:.2f} s")
    assert elapsed < 5


@pytest.mark.criterion(3, "multiplier law N'(z_i) = (m_i-1)/m_i and residue = 1/(1-N'(z_i))")
def test_criterion_3_multipliers(round_trip_cases, detail):
    cases, _ = round_trip_cases
    worst_lam = worst_res = 0.0
    for N, _, got in cases:
        assert len(got.residues) == got.k
        for (zz, m), res in zip(got.roots, got.residues):
            lam = complex(derivative_at(N, zz))
            worst_lam = max(worst_lam, abs(lam - (m - 1) / m))
            worst_res = max(worst_res, abs(res - 1 / (1 - lam)))
    detail(f"max |N'-(m-1)/m| {worst_lam:.1e}, max residue gap {worst_res:.1e}")
    assert worst_lam < 1e-6 and worst_res < 1e-8


@pytest.mark.criterion(4, "degree law d = k + deg q with cancelled factor degree sum(m_i - 1)")
def test_criterion_4_degree_law(round_trip_cases, detail):
    cases, _ = round_trip_cases
    with_cancel = 0
    for N, cert, got in cases:
        assert N.degree == cert.k + cert.n == got.degree
        # independent check: cancel the raw quotient numerically
        num, den = raw_newton_pair(cert.roots, cert.q)
        reduced = normalize(num, den)
        assert reduced.degree == cert.k + cert.n
        assert reduced.cancelled_degree == sum(m - 1 for _, m in cert.roots)
        with_cancel += any(m >= 2 for _, m in cert.roots)
    detail(f"{len(cases)} maps, {with_cancel} with a cancelled factor")
    assert with_cancel > 50


def _far_field_directions(N, seeds, steps):
    """Brute-force escape direction of each seed, plus its final iterate.

    Lower-order terms of q shift the orbit by a constant, so arg z_j converges
    like j**(-1/n); chords between late iterates cancel the shift. The chord
    angle still lags by ~ Im(u0)/j, removed by Richardson extrapolation over
    the chords [J, 2J] and [2J, 4J].
    """
    zz = np.asarray(seeds, dtype=complex)
    marks = {}
    with np.errstate(all="ignore"):
        for j in range(1, 4 * steps + 1):
            zz = N(zz)
            if j in (steps, 2 * steps, 4 * steps):
                marks[j] = zz
    a = marks[2 * steps] - marks[steps]
    b = marks[4 * steps] - marks[2 * steps]
    # extrapolated angle: 2*arg(b) - arg(a), taken relative to b to avoid wrap-around
    direction = b / np.abs(b) * np.exp(1j * np.angle(b / a))
    return zz, direction


@pytest.mark.criterion(5, "infinity is repelling m/(m-1) or parabolic n+1 with measured escape directions")
def test_criterion_5_infinity(detail):
    rng = np.random.default_rng(5)
    worst_mult = 0.0
    repelling = 0
    while repelling < 30:
        roots_, _ = random_certificate(rng, n_max=0)
        m = sum(mm for _, mm in roots_)
        if m < 2:
            continue
        N, cert = construct(roots_)
        inf = classify_infinity(cert)
        rec = [r for r in fixed_points(N) if r.is_infinity][0]
        assert inf.kind == "repelling"
        worst_mult = max(worst_mult, abs(inf.multiplier - m / (m - 1)), abs(rec.multiplier - m / (m - 1)))
        repelling += 1
    assert worst_mult < 1e-10

    worst_angle = 0.0
    seeds_done = 0
    parabolic = 0
    while seeds_done < 50:
        roots_, q = random_certificate(rng, n_max=3)
        if q.degree < 1 or abs(q.leading) < 0.5:
            continue
        N, cert = construct(roots_, q)
        n = cert.n
        inf = classify_infinity(cert)
        rec = [r for r in fixed_points(N) if r.is_infinity][0]
        assert (inf.kind, inf.parabolic_multiplicity, inf.petal_count) == ("parabolic", n + 1, n)
        assert rec.fixed_multiplicity == n + 1
        dirs = petal_directions(cert)
        assert len(dirs) == n
        parabolic += 1
        # far field: beyond the roots, the lower terms of q, and the radius where
        # the m/z pull of p still beats q'
        qc = cert.q.coeffs
        rq = max([abs(qc[j] / qc[-1]) ** (1 / (n - j)) for j in range(1, n)], default=0.0)
        rm = (cert.m_total / (n * abs(qc[-1]))) ** (1 / n)
        radius = 2 * (2 + max(abs(cert.locations)) + rq + rm)
        seeds = []
        for v in dirs:
            for _ in range(5 if n < 3 else 2):
                seeds.append(radius * v * np.exp(1j * rng.uniform(-1, 1) * np.pi / (8 * n)))
        ends, chords = _far_field_directions(N, seeds, 10_000)
        for s, last, e in zip(seeds, ends, chords):
            assert np.isfinite(last) and abs(last) > abs(s)
            ang = min(abs(np.angle(e / v)) for v in dirs)
            nearest = dirs[int(np.argmin([abs(np.angle(s / v)) for v in dirs]))]
            assert abs(np.angle(e / nearest)) == ang
            worst_angle = max(worst_angle, ang)
        seeds_done += len(seeds)
    detail(f"{repelling} repelling cases err {worst_mult:.1e}; {parabolic} parabolic maps, "
           f"{seeds_done} seeds, max angle {worst_angle:.1e} rad")
    assert worst_angle < 1e-2


def _critical_oracle(num_expr, den_expr):
    """Critical points from sympy: roots of the numerator of dN/dz with multiplicity."""
    dN = sp.cancel(sp.diff(num_expr / den_expr, z))
    n_, _ = sp.fraction(sp.together(dN))
    poly = sp.Poly(n_, z)
    out = []
    for r, m in sp.roots(poly, multiple=False).items() if poly.degree() <= 4 else []:
        out.append((complex(sp.N(r)), m))
    if not out:
        for r in sp.Poly(n_, z).nroots(n=30):
            out.append((complex(r), 1))
    # double poles of N are critical too
    _, dd = sp.fraction(sp.together(num_expr / den_expr))
    for r, m in sp.roots(sp.Poly(dd, z)).items():
        if m >= 2:
            out.append((complex(sp.N(r)), m - 1))
    return out


def _brute_label(N, cert, c, steps=20000):
    """Iterate a critical point: root index, k + petal index, or -1."""
    zz = complex(c)
    locs = cert.locations
    dirs = petal_directions(cert) if cert.n else []
    with np.errstate(all="ignore"):
        for _ in range(steps):
            if not np.isfinite(zz):
                return -1
            d = np.abs(locs - zz)
            if d.min() < 1e-9:
                return int(np.argmin(d))
            zz = complex(N(zz))
    if cert.n and abs(zz) > 50:
        return cert.k + int(np.argmin([abs(np.angle(zz / v)) for v in dirs]))
    return -1


CENSUS_MAPS = {
    "z^2-1": (quadratic, Region(0j, 4, 4), (z**2 + 1, 2 * z)),
    "z^3-1": (cubic, Region(0j, 4, 4), (2 * z**3 + 1, 3 * z**2)),
    "z^2/(1+z)": (parabolic_quadratic, Region(0j, 8, 8), (z**2, 1 + z)),
    "quartic": (quartic, QUARTIC_REGION, None),
}


def _quartic_expr():
    c = sp.Integer(2) + sp.I
    p = z**2 - 1
    q = c * z**2 / 2
    return sp.cancel(z - p / (sp.diff(p, z) + p * sp.diff(q, z)))


@pytest.mark.criterion(6, "census access_count = k, restriction_degree = k+1 at 512^2")
def test_criterion_6_census(detail):
    notes = []
    for name, (make, region, exprs) in CENSUS_MAPS.items():
        t0 = time.perf_counter()
        N, cert = make()
        raster = raster_basins(N, cert, region, RESOLUTION)
        imm = immediate_basins(raster, cert)
        census = access_census(raster, imm, critical_points(N), N, cert)
        elapsed = time.perf_counter() - t0
        assert elapsed < 60

        if exprs is None:
            num_e, den_e = sp.fraction(sp.together(_quartic_expr()))
        else:
            num_e, den_e = exprs
        oracle = _critical_oracle(sp.expand(num_e), sp.expand(den_e))
        expected = {b.component: 0 for b in imm}
        for c, m in oracle:
            label = _brute_label(N, cert, c)
            if label < 0:
                continue
            pix = region.pixel_of(c, RESOLUTION)
            assert pix is not None
            comp = int(raster.components[pix])
            if comp in expected:
                expected[comp] += m
        for b in census.basins:
            assert b.k == expected[b.basin.component] >= 1
            assert b.access_count == b.k
            assert b.restriction_degree == b.k + 1
            assert b.measured_restriction_degree == b.k + 1
        ks = [b.k for b in census.basins]
        notes.append(f"{name} k={ks} {elapsed:.1f}s")
        if name == "quartic":
            assert len(imm) == 4
            assert sorted(ks) == [1, 1, 2, 2]
            petal_ks = [b.k for b in census.basins if b.basin.kind == "petal"]
            assert petal_ks == [2, 2]
    detail("; ".join(notes))


def _deep_seeds(raster, component, count, rng):
    mask = raster.components == component
    depth = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]
    rows, cols = np.nonzero(depth >= max(4, 0.5 * depth.max()))
    pick = rng.choice(len(rows), size=count, replace=False)
    grid = raster.region.pixel_centers(raster.resolution)
    return [complex(grid[rows[i], cols[i]]) for i in pick]


@pytest.mark.criterion(7, "dynamical access traces are forward invariant and land along the petal")
def test_criterion_7_traces(detail):
    rng = np.random.default_rng(7)
    worst_defect = worst_angle = worst_spread = 0.0
    traced = 0
    for make, region in ((parabolic_quadratic, Region(0j, 8, 8)), (quartic, QUARTIC_REGION)):
        N, cert = make()
        raster = raster_basins(N, cert, region, 256)
        dirs = petal_directions(cert)
        for b in immediate_basins(raster, cert):
            if b.kind != "petal":
                continue
            landings = []
            for seed in _deep_seeds(raster, b.component, 5, rng):
                tr = trace_dynamical_access(N, cert, seed, petal=b.index)
                ratio = forward_invariance_defect(N, tr) / tr.step
                worst_defect = max(worst_defect, ratio)
                assert ratio < 2
                ang = abs(np.angle(tr.landing_direction / dirs[b.index]))
                worst_angle = max(worst_angle, ang)
                assert ang < 1e-2
                landings.append(tr.landing_direction)
                traced += 1
            spread = max(abs(np.angle(a / landings[0])) for a in landings)
            worst_spread = max(worst_spread, spread)
            assert spread < 1e-2
    detail(f"{traced} traces, max defect/step {worst_defect:.3f}, max landing err {worst_angle:.1e} rad, "
           f"max seed spread {worst_spread:.1e} rad")


@pytest.mark.criterion(8, "no false parabolic escapes among 10^4 flagged seeds iterated twice as long")
def test_criterion_8_escape_soundness(detail):
    rng = np.random.default_rng(8)
    maps = [(parabolic_quadratic, 6.0), (quartic, 6.0),
            (lambda: construct([(0.5, 1), (-0.3j, 2)], Polynomial([0, 0.3, 0, 1 / 3])), 4.0)]
    flagged = violations = 0
    per_map = 10_000 // len(maps) + 1
    for make, half in maps:
        N, cert = make()
        got = 0
        while got < per_map:
            pts = rng.uniform(-half, half, 4000) + 1j * rng.uniform(-half, half, 4000)
            labels, iters = classify_points(N, cert, pts)
            sel = labels >= cert.k
            pts, iters = pts[sel][: per_map - got], iters[sel][: per_map - got]
            got += len(pts)
            # reproduce the orbit up to the flag, then iterate as long again
            zz = pts.copy()
            mod_prev = np.abs(zz)
            bad = np.zeros(len(zz), bool)
            with np.errstate(all="ignore"):
                for j in range(1, 2 * int(iters.max()) + 1):
                    zz = N(zz)
                    mod = np.abs(zz)
                    watch = (j > iters) & (j <= 2 * iters)
                    bad |= watch & ~(mod > mod_prev)
                    mod_prev = mod
            violations += int(bad.sum())
        flagged += got
    detail(f"{flagged} flagged seeds over {len(maps)} maps, {violations} violations")
    assert flagged >= 10_000
    assert violations == 0


@pytest.mark.criterion(9, "PPM and raster round trips are exact; reruns are byte-identical")
def test_criterion_9_render_io(tmp_path, detail):
    N, cert = quartic()
    raster = raster_basins(N, cert, QUARTIC_REGION, 128)
    img = colorize(raster)
    write_image(img, tmp_path / "a.ppm")
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), img)
    assert (tmp_path / "a.ppm").read_bytes() == encode_ppm(read_ppm(tmp_path / "a.ppm"))

    write_raster(raster, tmp_path / "a.nbas")
    back = read_raster(tmp_path / "a.nbas", cert.k, cert.n)
    assert back.region == raster.region and back.resolution == raster.resolution
    for name in ("labels", "components", "iterations"):
        assert np.array_equal(getattr(back, name), getattr(raster, name))
    assert encode_raster(back) == encode_raster(raster)

    again = raster_basins(N, cert, QUARTIC_REGION, 128, IterationParams(threads=4))
    assert encode_raster(again) == encode_raster(raster)

    spec = {"newton": {"roots": [{"z": [1, 0], "m": 1}, {"z": [-1, 0], "m": 1}],
                       "q": [[0, 0], [0, 0], [QUARTIC_C.real / 2, QUARTIC_C.imag / 2]]},
            "region": {"center": [0, 0], "width": 8, "height": 8}, "resolution": 128}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    runs = []
    for name in ("r1", "r2"):
        code = cli_main(["basins", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / name)])
        assert code == 0
        runs.append({f: (tmp_path / name / f).read_bytes() for f in sorted(os.listdir(tmp_path / name))})
    assert runs[0] == runs[1]
    detail(f"files compared: {', '.join(runs[0])}")
