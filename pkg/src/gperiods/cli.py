"""Command-line client.

Runs operations in-process by default; with ``--server URL`` the same request
is sent to a running ``gperiods.service`` instance.

Exit codes: 0 success, 1 usage error, 2 certificate failure, 3 unimplemented case.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import api
from .errors import GPeriodError, UsageError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gperiods", description="G-function periods of pulled-back Legendre families")
    p.add_argument("--server", help="send the request to a running service at this URL")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("series", help="exact coefficients of a normalized solution")
    s.add_argument("--family", default="default", help="bundled family name or JSON file")
    s.add_argument("--coord", type=int, default=1)
    s.add_argument("--order", type=int, default=api.DEFAULT_ORDER)
    s.add_argument("--heights", action="store_true", help="emit the coefficient height table as CSV")

    s = sub.add_parser("trivial-check", help="exact and numeric determinant relations")
    s.add_argument("--family", default="default")
    s.add_argument("--order", type=int, default=api.DEFAULT_ORDER)
    s.add_argument("--numeric-at", dest="numeric_at", help="lambda for the numeric check (default 1/3)")
    s.add_argument("--basis-scale", dest="basis_scale", help="rescale the first basis form (test fixture)")
    s.add_argument("--prec", type=int)

    s = sub.add_parser("relation", help="certified relation at an all-CM fiber")
    s.add_argument("--family", default="default")
    s.add_argument("--point", help="x(s); default is the first located fiber")
    s.add_argument("--prec", type=int)
    s.add_argument("--order", type=int, default=api.DEFAULT_ORDER)
    s.add_argument("--report", action="store_true", help="add the degree/discriminant report")
    s.add_argument("--list", action="store_true", help="only list located all-CM fibers")

    s = sub.add_parser("periods", help="Legendre period matrices, connection constants, monodromy")
    s.add_argument("--lam")
    s.add_argument("--family")
    s.add_argument("--coord", type=int)
    s.add_argument("--x0")
    s.add_argument("--order", type=int, default=200)
    s.add_argument("--prec", type=int)
    s.add_argument("--cm", type=int, help="CM discriminant at x = 0 (default: detected)")
    s.add_argument("--monodromy", action="store_true")

    s = sub.add_parser("cm", help="class numbers and discriminant scans")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--class-number", dest="class_number", type=int)
    g.add_argument("--scan", type=int)
    g.add_argument("--heegner", type=int)
    s.add_argument("--fundamental", action="store_true", help="restrict --scan to fundamental discriminants")

    s = sub.add_parser("siegel", help="class-number ratio table")
    s.add_argument("--max", dest="max_abs_D", type=int, default=200)
    s.add_argument("--eps", action="append", help="repeatable; default sweep 0.05, 0.1, 0.25, 0.45")
    s.add_argument("--summary", action="store_true")

    s = sub.add_parser("radii", help="archimedean and p-adic radius estimates")
    s.add_argument("--family", default="default")
    s.add_argument("--order", type=int, default=200)
    s.add_argument("--place", action="append", help="archimedean or a prime; repeatable")
    return p


def to_request(args: argparse.Namespace) -> tuple[str, dict]:
    """Map parsed arguments onto an operation name and its keyword arguments."""
    c = args.command
    if c == "series":
        if args.heights:
            return "heights", {"family": args.family, "order": args.order}
        return "series", {"family": args.family, "coord": args.coord, "order": args.order}
    if c == "trivial-check":
        return c, {"family": args.family, "order": args.order, "numeric_at": args.numeric_at,
                   "basis_scale": args.basis_scale, "prec": args.prec}
    if c == "relation":
        if args.list:
            return "fibers", {"family": args.family}
        return c, {"family": args.family, "point": args.point, "prec": args.prec, "order": args.order,
                   "report": args.report}
    if c == "periods":
        return c, {"lam": args.lam, "family": args.family, "coord": args.coord, "x0": args.x0,
                   "order": args.order, "prec": args.prec, "cm": args.cm, "monodromy": args.monodromy}
    if c == "cm":
        return c, {"class_number": args.class_number, "scan": args.scan, "heegner": args.heegner,
                   "fundamental_only": args.fundamental}
    if c == "siegel":
        return c, {"max_abs_D": args.max_abs_D, "eps": args.eps, "summary": args.summary}
    if c == "radii":
        places = args.place or ["archimedean", "2", "3", "5", "7"]
        return c, {"family": args.family, "order": args.order, "places": places}
    raise UsageError(f"unknown command {c!r}")


def _remote(url: str, name: str, payload: dict) -> dict:
    import httpx

    r = httpx.post(f"{url.rstrip('/')}/{name}", json=payload, timeout=None)
    if r.headers.get("content-type", "").startswith("text/csv"):
        return {"format": "csv", "text": r.text}
    body = r.json()
    if r.status_code >= 400:
        if isinstance(body, dict) and "error" in body:
            exc = GPeriodError(body["message"])
            exc.code, exc.exit_code = body["error"], body["exit_code"]
            raise exc
        raise UsageError(json.dumps(body))
    return body


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        name, payload = to_request(args)
        if name == "radii":
            payload["places"] = [p if p == "archimedean" else int(p) for p in payload["places"]]
        if args.server:
            result = _remote(args.server, name, payload)
        else:
            result = api.OPERATIONS[name](**payload)
    except GPeriodError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1
    sys.stdout.write(api.dumps(result))
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
