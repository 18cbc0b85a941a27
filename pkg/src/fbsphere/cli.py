"""Command-line front end.

Subcommands: ``coeffs`` (spherical-harmonic coefficient tables), ``pdf``
(density grids), ``sfc`` (correlation curves), ``geometry`` (element
position listings), ``validate`` (the oracle-backed validation suite).
All outputs are CSV/JSON for external plotting; identical invocations
produce byte-identical files.

Exit codes: 0 success, 1 validation failure, 2 input parse error,
3 constraint violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import fb5, sfc, sht, validate
from .errors import ConstraintError, DomainError, InputError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_CONSTRAINT = 3


def _load_model(args) -> fb5.MixtureModel:
    if args.model is not None:
        try:
            with open(args.model) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read model file: {exc}") from exc
        return fb5.mixture_from_json(text)
    if args.kappa is None:
        raise InputError("provide either --model or --kappa/--beta")
    beta = args.beta if args.beta is not None else 0.0
    return fb5.MixtureModel.single(fb5.FB5Params.standard(args.kappa, beta))


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write(path, writer) -> None:
    fh, close = _open_out(path)
    try:
        writer(fh)
    finally:
        if close:
            fh.close()


def _table_for(model: fb5.MixtureModel, L: int) -> sht.WignerPi2Table:
    n = max(fb5.truncation_n(p.kappa) for _, p in model.components)
    return sht.wigner_pi2_table(max(L, n))


def cmd_coeffs(args) -> int:
    model = _load_model(args)
    table = _table_for(model, args.L)
    coeffs = fb5.mixture_coeffs(model, args.L, table)
    _write(args.out, lambda fh: sht.write_coeffs_csv(coeffs, fh))
    return EXIT_OK


def cmd_pdf(args) -> int:
    model = _load_model(args)
    if args.ntheta < 2 or args.nphi < 2:
        raise InputError("grid sizes must be >= 2")
    thetas = np.linspace(0.0, math.pi, args.ntheta)
    phis = 2.0 * math.pi * np.arange(args.nphi) / args.nphi
    tg, pg = np.meshgrid(thetas, phis, indexing="ij")
    st = np.sin(tg)
    xyz = np.column_stack([(st * np.cos(pg)).ravel(), (st * np.sin(pg)).ravel(),
                           np.cos(tg).ravel()])
    vals = fb5.mixture_pdf_xyz(model, xyz).reshape(tg.shape)

    def writer(fh):
        fh.write("theta,phi,value\n")
        for i in range(args.ntheta):
            for j in range(args.nphi):
                fh.write(f"{thetas[i]:.17g},{phis[j]:.17g},{vals[i, j]:.17g}\n")

    _write(args.out, writer)
    return EXIT_OK


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        p, q = (int(s) for s in text.split(","))
    except ValueError as exc:
        raise InputError(f"--pair expects 'p,q' integers, got {text!r}") from exc
    return p, q


def cmd_sfc(args) -> int:
    model = _load_model(args)
    pair = _parse_pair(args.pair)
    grid = np.linspace(args.rmin, args.rmax, args.steps)
    custom = None
    family = args.geometry
    if family not in ("uca", "rda"):
        try:
            custom = np.loadtxt(family, delimiter=",", ndmin=2)
        except OSError as exc:
            raise InputError(f"--geometry must be uca, rda, or a readable positions CSV: {exc}") from exc
        if custom.shape[1] != 3:
            raise InputError("custom geometry file needs three columns x,y,z")
        family = "custom"
    n_el = args.elements if family == "uca" else (20 if family == "rda" else len(custom))
    if not (1 <= pair[0] <= n_el and 1 <= pair[1] <= n_el):
        raise ConstraintError(f"pair {pair} outside 1..{n_el}")
    curve = sfc.sfc_curve(model, family, pair, args.wavelength, grid,
                          elements=args.elements, tol=args.tol,
                          custom_positions=custom)
    _write(args.out, curve.write_csv)
    return EXIT_OK


def cmd_geometry(args) -> int:
    if args.geometry == "uca":
        geom = sfc.uca_positions(args.elements, args.radius)
    elif args.geometry == "rda":
        geom = sfc.rda_positions(args.radius)
    else:
        raise InputError("geometry listing supports uca and rda")

    def writer(fh):
        fh.write("p,x,y,z\n")
        for i, z in enumerate(geom.positions, start=1):
            fh.write(f"{i},{z[0]:.17g},{z[1]:.17g},{z[2]:.17g}\n")

    _write(args.out, writer)
    return EXIT_OK


def cmd_validate(args) -> int:
    names = [args.check] if args.check else None
    reports = validate.run_checks(names, kappa=args.kappa, beta=args.beta, tol=args.tol)
    _write(args.out, lambda fh: fh.write(json.dumps(reports, indent=2) + "\n"))
    ok = all(r["pass"] for r in reports)
    if not ok and args.out not in (None, "-"):
        failing = [r["test"] for r in reports if not r["pass"]]
        print(f"validation failed: {', '.join(failing)}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fbsphere",
        description="Spherical-harmonic expansions of Fisher-Bingham mixtures "
                    "and spatial fading correlation for antenna arrays.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_model_opts(p):
        p.add_argument("--model", help="mixture JSON document path")
        p.add_argument("--kappa", type=float, help="standard-frame concentration shortcut")
        p.add_argument("--beta", type=float, help="standard-frame ovalness shortcut")

    p = sub.add_parser("coeffs", help="write a coefficient table CSV")
    add_model_opts(p)
    p.add_argument("--L", type=int, required=True, help="band-limit")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(fn=cmd_coeffs)

    p = sub.add_parser("pdf", help="write a density grid CSV")
    add_model_opts(p)
    p.add_argument("--ntheta", type=int, default=181)
    p.add_argument("--nphi", type=int, default=360)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(fn=cmd_pdf)

    p = sub.add_parser("sfc", help="write a correlation-vs-radius curve CSV")
    add_model_opts(p)
    p.add_argument("--geometry", default="uca", help="uca | rda | positions CSV path")
    p.add_argument("--elements", type=int, default=16, help="UCA element count")
    p.add_argument("--pair", default="2,3", help="element indices 'p,q' (1-based)")
    p.add_argument("--rmin", type=float, default=0.01)
    p.add_argument("--rmax", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--lambda", dest="wavelength", type=float, default=1.0,
                   help="carrier wavelength in meters")
    p.add_argument("--tol", type=float, default=1e-11, help="series tail tolerance")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(fn=cmd_sfc)

    p = sub.add_parser("geometry", help="write element positions CSV")
    p.add_argument("--geometry", default="uca", help="uca | rda")
    p.add_argument("--elements", type=int, default=16)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(fn=cmd_geometry)

    p = sub.add_parser("validate", help="run the oracle-backed validation suite")
    p.add_argument("--check", choices=sorted(validate.CHECKS), help="run a single check")
    p.add_argument("--kappa", type=float, help="spatial-error parameter override")
    p.add_argument("--beta", type=float, help="spatial-error parameter override")
    p.add_argument("--tol", type=float, help="spatial-error tolerance override")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConstraintError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
