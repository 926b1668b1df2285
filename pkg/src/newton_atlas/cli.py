"""Command-line front end: ``newton-atlas {detect,analyze,basins,trace-access}``.

Exit codes: 0 success, 1 domain error, 2 malformed input, 3 not a Newton map,
4 census refused, 5 bad seed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from ._io import atomic_write_text
from .basinfile import write_raster
from .dynamics import (
    IterationParams,
    Region,
    access_census,
    critical_multiplicity_at_infinity,
    critical_points,
    forward_invariance_defect,
    immediate_basins,
    raster_basins,
    trace_dynamical_access,
)
from .errors import (
    CriticalPointUnresolved,
    NewtonAtlasError,
    RootOutsideRegion,
    SeedNotInParabolicBasin,
    SegmentLeavesBasin,
)
from .newton import (
    DEFAULT_TOL,
    NotNewtonMap,
    classify_infinity,
    construct,
    detect,
    petal_directions,
    validate_multipliers,
)
from .polycore import Polynomial
from .ratmap import RationalMap, fixed_points
from .render import colorize, default_scheme, overlay, write_image

EXIT_OK, EXIT_DOMAIN, EXIT_MALFORMED, EXIT_NOT_NEWTON, EXIT_CENSUS, EXIT_SEED = range(6)
DEFAULT_RESOLUTION = 512
THREADS_ENV = "NEWTON_ATLAS_THREADS"
_PARAM_KEYS = {"max_iter": int, "r_conv_rel": float, "monotone_steps": int,
               "escape_radius": float, "fatou_margin": float}


class MalformedSpec(ValueError):
    pass


@dataclass(frozen=True)
class MapSpec:
    kind: str  # "rational" | "newton"
    num: Polynomial | None = None
    den: Polynomial | None = None
    roots: tuple = ()
    q: Polynomial | None = None
    region: Region | None = None
    resolution: int | None = None
    params: dict | None = None


def _finite(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise MalformedSpec(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def _pair(v, where) -> complex:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise MalformedSpec(f"{where}: expected [re, im]")
    return complex(_finite(v[0], where), _finite(v[1], where))


def _poly(v, where) -> Polynomial:
    if not isinstance(v, list) or not v:
        raise MalformedSpec(f"{where}: expected a non-empty list of [re, im] coefficients")
    return Polynomial([_pair(c, f"{where}[{i}]") for i, c in enumerate(v)])


def parse_spec(data) -> MapSpec:
    """Validate a decoded JSON map spec."""
    if not isinstance(data, dict):
        raise MalformedSpec("spec must be a JSON object")
    kinds = [k for k in ("rational", "newton") if k in data]
    if len(kinds) != 1:
        raise MalformedSpec('spec needs exactly one of "rational" or "newton"')
    kind = kinds[0]
    body = data[kind]
    if not isinstance(body, dict):
        raise MalformedSpec(f'"{kind}" must be an object')
    fields = {}
    if kind == "rational":
        for key in ("num", "den"):
            if key not in body:
                raise MalformedSpec(f'"rational" is missing "{key}"')
            fields[key] = _poly(body[key], f"rational.{key}")
        if fields["den"].is_zero:
            raise MalformedSpec("rational.den is the zero polynomial")
    else:
        if not isinstance(body.get("roots"), list) or not body["roots"]:
            raise MalformedSpec('"newton" needs a non-empty "roots" list')
        roots = []
        for i, r in enumerate(body["roots"]):
            if not isinstance(r, dict) or "z" not in r:
                raise MalformedSpec(f"newton.roots[{i}]: expected {{\"z\": [re, im], \"m\": int}}")
            m = r.get("m", 1)
            if isinstance(m, bool) or not isinstance(m, int) or m < 1:
                raise MalformedSpec(f"newton.roots[{i}].m must be a positive integer")
            roots.append((_pair(r["z"], f"newton.roots[{i}].z"), m))
        fields["roots"] = tuple(roots)
        fields["q"] = _poly(body["q"], "newton.q") if "q" in body else Polynomial()
    region = None
    if "region" in data:
        reg = data["region"]
        if not isinstance(reg, dict) or not {"center", "width", "height"} <= reg.keys():
            raise MalformedSpec('"region" needs "center", "width" and "height"')
        w, h = _finite(reg["width"], "region.width"), _finite(reg["height"], "region.height")
        if w <= 0 or h <= 0:
            raise MalformedSpec("region width and height must be positive")
        region = Region(_pair(reg["center"], "region.center"), w, h)
    resolution = None
    if "resolution" in data:
        resolution = _resolution(data["resolution"])
    params = {}
    for key, value in (data.get("params") or {}).items():
        if key not in _PARAM_KEYS:
            raise MalformedSpec(f"unknown param {key!r}")
        params[key] = _PARAM_KEYS[key](_finite(value, f"params.{key}"))
    return MapSpec(kind, region=region, resolution=resolution, params=params, **fields)


def _resolution(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise MalformedSpec(f"resolution must be a positive integer, got {v!r}")
    return v


def load_spec(path) -> MapSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MalformedSpec(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedSpec(f"spec {path} is not valid JSON: {exc}") from exc
    return parse_spec(data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def dumps(doc) -> str:
    # json writes floats with repr, the shortest string that round-trips exactly
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _build_map(spec: MapSpec):
    """``(N, certificate)``; the certificate is None for rational specs."""
    if spec.kind == "newton":
        return construct(spec.roots, spec.q)
    return RationalMap.from_coeffs(spec.num, spec.den), None


def _params(spec: MapSpec, args) -> IterationParams:
    params = IterationParams(**(spec.params or {}))
    if getattr(args, "max_iter", None) is not None:
        params = replace(params, max_iter=args.max_iter)
    threads = args.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise MalformedSpec(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads is not None:
        if threads < 1:
            raise MalformedSpec("thread count must be positive")
        params = replace(params, threads=threads)
    return params


def _tol(args) -> float:
    tol = DEFAULT_TOL if args.tol is None else args.tol
    if not (tol > 0 and math.isfinite(tol)):
        raise MalformedSpec("--tol must be a positive number")
    return tol


def _certificate(N, cert, tol):
    return cert if cert is not None else detect(N, tol)


def _defaults(params: IterationParams, tol: float, **extra):
    out = {"tol": tol, "params": params.to_json()}
    out.update(extra)
    return out


def _emit(doc, args, name):
    text = dumps(doc)
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        atomic_write_text(os.path.join(args.out, name), text)


def cmd_detect(spec: MapSpec, args) -> int:
    tol = _tol(args)
    N, cert = _build_map(spec)
    try:
        cert = detect(N, tol)
    except NotNewtonMap as exc:
        doc = exc.to_json()
        doc["defaults"] = {"tol": tol}
        _emit(doc, args, "detect.json")
        return EXIT_NOT_NEWTON
    doc = {"newton": True, "certificate": cert.to_json(),
           "near_misses": [r.to_json() for r in cert.near_misses],
           "map": N.to_json(), "defaults": {"tol": tol}}
    _emit(doc, args, "detect.json")
    return EXIT_OK


def cmd_analyze(spec: MapSpec, args) -> int:
    tol = _tol(args)
    N, cert = _build_map(spec)
    crit = critical_points(N)
    doc = {
        "map": N.to_json(),
        "degree": N.degree,
        "fixed_points": [f.to_json() for f in fixed_points(N)],
        "critical_points": [{"z": z, "multiplicity": m} for z, m in crit],
        "infinity_critical_multiplicity": critical_multiplicity_at_infinity(N),
    }
    code = EXIT_OK
    try:
        cert = _certificate(N, cert, tol)
    except NotNewtonMap as exc:
        doc["newton"] = exc.to_json()
        code = EXIT_NOT_NEWTON
    else:
        doc["newton"] = {"newton": True, "certificate": cert.to_json()}
        doc["multipliers"] = validate_multipliers(N, cert, tol).to_json()
        doc["infinity"] = classify_infinity(cert).to_json()
        doc["petal_directions"] = petal_directions(cert) if cert.n >= 1 else []
    doc["defaults"] = {"tol": tol}
    _emit(doc, args, "analyze.json")
    return code


def default_region(cert, crit) -> Region:
    spread = max([1.0] + [abs(z) for z, _ in cert.roots] + [abs(z) for z, _ in crit])
    return Region(0j, 4.0 * spread, 4.0 * spread)


def _raster_setup(spec, args):
    tol = _tol(args)
    params = _params(spec, args)
    N, cert = _build_map(spec)
    cert = _certificate(N, cert, tol)
    crit = critical_points(N)
    region = spec.region or default_region(cert, crit)
    if args.resolution is not None:
        resolution = _resolution(args.resolution)
    else:
        resolution = spec.resolution or DEFAULT_RESOLUTION
    return tol, params, N, cert, crit, region, resolution


def cmd_basins(spec: MapSpec, args) -> int:
    if not args.out:
        raise MalformedSpec("basins needs --out <dir>")
    tol, params, N, cert, crit, region, resolution = _raster_setup(spec, args)
    raster = raster_basins(N, cert, region, resolution, params)
    immediate = immediate_basins(raster, cert)
    raster = replace(raster, immediate=tuple(immediate))
    census = access_census(raster, immediate, crit, N, cert, params)
    os.makedirs(args.out, exist_ok=True)
    write_raster(raster, os.path.join(args.out, "basins.nbas"))
    image = colorize(raster, default_scheme(cert.k, cert.n))
    image = overlay(image, region, points=[z for z, _ in crit], color=(0, 0, 0),
                    radius=max(1, resolution // 256))
    write_image(image, os.path.join(args.out, "basins.ppm"))
    doc = {
        "certificate": cert.to_json(),
        "region": region.to_json(),
        "resolution": resolution,
        "n_roots": cert.k,
        "n_petals": cert.n,
        "immediate_basins": [b.to_json() for b in immediate],
        "census": census.to_json(),
        "defaults": _defaults(params, tol),
    }
    _emit(doc, args, "census.json")
    return EXIT_OK


def parse_seed(text: str) -> complex:
    try:
        z = complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise MalformedSpec(f"cannot parse seed {text!r}; use forms like -10, 0.2+2j") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise MalformedSpec("seed must be finite")
    return z


def cmd_trace_access(spec: MapSpec, args) -> int:
    if args.seed is None:
        raise MalformedSpec("trace-access needs --seed")
    z0 = parse_seed(args.seed)
    tol, params, N, cert, crit, region, resolution = _raster_setup(spec, args)
    trace = trace_dynamical_access(N, cert, z0, params=params)
    defect = forward_invariance_defect(N, trace)
    doc = {
        "seed": z0,
        "certificate": cert.to_json(),
        "forward_invariance_defect": defect,
        "trace": trace.to_json(),
        "defaults": _defaults(params, tol, samples=16, generations=64, angle_tol=1e-3),
    }
    text = dumps(doc)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        atomic_write_text(os.path.join(args.out, "trace.json"), text)
        raster = raster_basins(N, cert, region, resolution, params)
        image = overlay(colorize(raster), region, polyline=trace.polyline, color=(0, 0, 0))
        image = overlay(image, region, points=[z0], color=(200, 0, 0), radius=max(1, resolution // 256))
        write_image(image, os.path.join(args.out, "trace.ppm"))
    summary = {k: v for k, v in doc.items() if k != "trace"}
    summary["landing_direction"] = trace.landing_direction
    summary["petal"] = trace.petal
    summary["vertices"] = len(trace.polyline)
    sys.stdout.write(dumps(summary))
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "analyze": cmd_analyze,
    "basins": cmd_basins,
    "trace-access": cmd_trace_access,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newton-atlas",
                                     description="Newton maps of p*exp(q): detection, basins and accesses to infinity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, help="JSON map spec")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol", type=float, help=f"residue tolerance (default {DEFAULT_TOL})")
        if name in ("basins", "trace-access"):
            p.add_argument("--resolution", type=int, help=f"raster side (default {DEFAULT_RESOLUTION})")
            p.add_argument("--max-iter", type=int, dest="max_iter")
            p.add_argument("--threads", type=int, help=f"worker threads (fallback ${THREADS_ENV})")
        if name == "trace-access":
            p.add_argument("--seed", help="seed point, e.g. -10 or 0.2+2j")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_MALFORMED if exc.code else EXIT_OK
    for attr in ("resolution", "max_iter", "threads", "seed"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        spec = load_spec(args.spec)
        return COMMANDS[args.command](spec, args)
    except MalformedSpec as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (CriticalPointUnresolved, RootOutsideRegion) as exc:
        print(f"error: census refused: {exc}", file=sys.stderr)
        print("hint: raise --resolution or enlarge the region", file=sys.stderr)
        return EXIT_CENSUS
    except (SeedNotInParabolicBasin, SegmentLeavesBasin) as exc:
        print(f"error: bad seed: {exc}", file=sys.stderr)
        return EXIT_SEED
    except NotNewtonMap as exc:
        sys.stdout.write(dumps(exc.to_json()))
        return EXIT_NOT_NEWTON
    except (NewtonAtlasError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
