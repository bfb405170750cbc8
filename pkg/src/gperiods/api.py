"""Operations behind the CLI and the HTTP service.

Every function takes plain arguments and returns a JSON-serializable dict.
CSV-producing operations return {"format": "csv", "text": ...}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction

from .errors import UsageError

PREC_ENV = "GPERIOD_PREC"
DEFAULT_PREC = 256
DEFAULT_ORDER = 50


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = DEFAULT_PREC
    series_order: int = DEFAULT_ORDER
    family_file: str = "default"
    output_format: str = "json"

    def __post_init__(self):
        if self.precision_bits < 64:
            raise UsageError("precision must be at least 64 bits")
        if self.series_order < 8:
            raise UsageError("series order must be at least 8")
        if self.output_format not in ("json", "csv"):
            raise UsageError(f"unknown output format {self.output_format!r}")


def default_precision() -> int:
    raw = os.environ.get(PREC_ENV)
    if raw is None or raw == "":
        return DEFAULT_PREC
    try:
        bits = int(raw)
    except ValueError as exc:
        raise UsageError(f"{PREC_ENV}={raw!r} is not an integer") from exc
    if bits < 64:
        raise UsageError(f"{PREC_ENV} must be at least 64")
    return bits


def _prec(prec):
    return default_precision() if prec is None else int(prec)


def _family(ref):
    from .family import FamilySpec, load_family

    if isinstance(ref, dict):
        return FamilySpec.from_json(ref)
    return load_family(ref or "default")


def parse_value(text):
    """A rational or quadratic number from text such as '1/3', '1/2 + sqrt(-7)/7' or '1/3 + 4i/9'."""
    from .relations import parse_point

    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return parse_point(str(text))
    except (ValueError, TypeError, SyntaxError) as exc:
        raise UsageError(f"cannot parse {text!r} as a point of degree <= 2") from exc
    except Exception as exc:  # sympy raises several parse error types
        raise UsageError(f"cannot parse {text!r}: {exc}") from exc


def _ball(z, digits=30):
    from .periods import ball_json

    return ball_json(z, digits)


def _check_coord(spec, k):
    if not 1 <= k <= spec.n:
        raise UsageError(f"coordinate {k} out of range 1..{spec.n}")


# ---------------------------------------------------------------------------
# series and heights


def series(family="default", coord=1, order=DEFAULT_ORDER) -> dict:
    from .family import classify_coordinates
    from .picard_fuchs import gauss_manin, normalized_solution

    spec = _family(family)
    _check_coord(spec, coord)
    if order < 0:
        raise UsageError("order must be nonnegative")
    Y = normalized_solution(gauss_manin(spec, coord), order)
    cls = classify_coordinates(spec)[coord - 1]
    return {
        "family": spec.name,
        "coordinate": coord,
        "map": spec.coords[coord - 1].text,
        "kind": cls.kind.value,
        "order": order,
        "residue": [[str(v) for v in row] for row in Y.residue],
        "coefficients": {f"y{i}{j}": [str(c) for c in Y.entry(i, j).coefficients] for i in (1, 2) for j in (1, 2)},
    }


def heights(family="default", order=DEFAULT_ORDER) -> dict:
    from .gfunctions import coefficient_height_table, height_table_csv
    from .relations import relation_variables

    spec = _family(family)
    vs = relation_variables(spec, order + 1)
    rows = coefficient_height_table([vs[key] for key in sorted(vs)])
    return {"format": "csv", "text": height_table_csv(rows)}


def radii(family="default", order=200, places=("archimedean", 2, 3, 5, 7)) -> dict:
    from .gfunctions import radius
    from .relations import relation_variables

    spec = _family(family)
    vs = relation_variables(spec, order + 1)
    out = []
    for key in sorted(vs):
        s = vs[key]
        if s.is_zero():
            continue
        for place in places:
            r = radius(s, place if place == "archimedean" else int(place))
            out.append(r.as_dict())
    return {"family": spec.name, "order": order, "radii": out}


# ---------------------------------------------------------------------------
# trivial relations


def trivial_check(family="default", order=DEFAULT_ORDER, numeric_at=None, basis_scale=None, prec=None) -> dict:
    from .family import CoordKind, classify_coordinates
    from .periods import legendre_periods
    from .picard_fuchs import gauss_manin, normalized_solution
    from .relations import trivial_relation_numeric_check, trivial_relation_series_check

    spec = _family(family)
    bits = _prec(prec)
    B = None
    if basis_scale is not None:
        B = ((Fraction(basis_scale), Fraction(0)), (Fraction(0), Fraction(1)))
    exact = []
    for k, c in enumerate(classify_coordinates(spec), start=1):
        if c.kind == CoordKind.SINGULAR:
            continue
        Y = normalized_solution(gauss_manin(spec, k), order - 1)
        exact.append(trivial_relation_series_check(Y, order, B).as_dict())
    report = {"family": spec.name, "order": order, "exact": exact, "summary": "PASS exact"}
    lam = parse_value(numeric_at) if numeric_at is not None else Fraction(1, 3)
    r = trivial_relation_numeric_check(legendre_periods(lam, bits), bits)
    report["numeric"] = {"lambda": str(lam), "precision": bits, "residual": _ball(r)}
    report["summary"] = "PASS exact, PASS numeric"
    return report


# ---------------------------------------------------------------------------
# relations


def fibers(family="default", max_abs=1.0) -> dict:
    from .relations import locate_cm_fibers

    spec = _family(family)
    return {"family": spec.name, "fibers": [f.as_dict() for f in locate_cm_fibers(spec, max_abs=max_abs)]}


def relation(family="default", point=None, prec=None, order=DEFAULT_ORDER, report=False) -> dict:
    from .errors import NonCMFiber, NotGAOAdmissible, NotImplementedCase
    from .family import CoordKind, classify_coordinates, is_gao_admissible
    from .heights_siegel import galois_orbit_bound_report
    from .relations import build_relation, locate_cm_fibers

    spec = _family(family)
    bits = 512 if prec is None and os.environ.get(PREC_ENV) is None else _prec(prec)
    classes = classify_coordinates(spec)
    ok, reason = is_gao_admissible(classes)
    if not ok:
        raise NotGAOAdmissible(reason)
    if not any(c.kind == CoordKind.SMOOTH_CM for c in classes):
        raise NotImplementedCase("relations are only built when some coordinate is CM at x = 0")
    if point is None:
        located = locate_cm_fibers(spec)
        if not located:
            raise NonCMFiber("no all-CM fiber of degree <= 2 found in the unit disc")
        s = located[0].point
    else:
        s = parse_value(point)
    cert = build_relation(spec, s, bits, order)
    out = cert.as_dict()
    if report:
        out["orbit_report"] = galois_orbit_bound_report(spec, s, [cert]).as_dict()
    return out


# ---------------------------------------------------------------------------
# periods


def periods(lam=None, family=None, coord=None, x0=None, order=200, prec=None, cm=None, monodromy=False) -> dict:
    from .periods import connection_constants, legendre_periods
    from .periods import monodromy as run_monodromy
    from .picard_fuchs import gauss_manin, normalized_solution

    bits = _prec(prec)
    if family is None:
        if lam is None:
            raise UsageError("give --lam, or --family with --coord")
        P = legendre_periods(parse_value(lam), bits)
        return {"lambda": str(lam), "precision": bits, **P.as_dict(), "det": _ball(P.det())}
    spec = _family(family)
    k = coord or 1
    _check_coord(spec, k)
    if monodromy:
        return run_monodromy(spec, k, prec=bits).as_dict()
    g = spec.coords[k - 1]
    x = parse_value(x0) if x0 is not None else Fraction(1, 64)
    Y = normalized_solution(gauss_manin(spec, k), order)
    P = legendre_periods(g(x), bits)
    if cm is None:
        from .family import CoordKind, classify_lambda

        c0 = classify_lambda(g.value_at_zero())
        cm = c0.cm_discriminant if c0.kind == CoordKind.SMOOTH_CM else None
    cc = connection_constants(Y, x, P, prec=bits, cm=cm)
    return {"family": spec.name, "coordinate": k, "x0": str(x), "precision": bits, **cc.as_dict()}


# ---------------------------------------------------------------------------
# class numbers and tables


def cm(class_number=None, scan=None, heegner=None, fundamental_only=False) -> dict:
    from . import cm as cmmod

    given = [v is not None for v in (class_number, scan, heegner)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --class-number, --scan, --heegner")
    if class_number is not None:
        o = cmmod.class_number(int(class_number))
        return {"D": o.D, "h": o.h, "fundamental": o.fundamental, "forms": [list(f) for f in o.forms]}
    if heegner is not None:
        return {"max_abs_D": int(heegner), "discriminants": cmmod.heegner_scan(int(heegner))}
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["D", "fundamental?", "h", "min_a"])
    for o in cmmod.cm_scan(int(scan), fundamental_only):
        w.writerow([o.D, int(o.fundamental), o.h, o.min_a])
    return {"format": "csv", "text": buf.getvalue()}


def siegel(max_abs_D=200, eps=None, summary=False) -> dict:
    from .heights_siegel import DEFAULT_EPSILONS, siegel_table

    epsilons = DEFAULT_EPSILONS if not eps else tuple(Fraction(str(e)) for e in eps)
    try:
        table = siegel_table(int(max_abs_D), epsilons)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if summary:
        return {"max_abs_D": table.max_abs_D, "summary": table.summary_dict(), "h1_fundamental": table.h1_fundamental()}
    return {"format": "csv", "text": table.to_csv()}


OPERATIONS = {
    "series": series,
    "heights": heights,
    "radii": radii,
    "trivial-check": trivial_check,
    "fibers": fibers,
    "relation": relation,
    "periods": periods,
    "cm": cm,
    "siegel": siegel,
}


def dumps(result: dict) -> str:
    if result.get("format") == "csv":
        return result["text"]
    return json.dumps(result, indent=2, sort_keys=True) + "\n"
