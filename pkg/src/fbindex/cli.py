"""Command-line front end: spectra, index certificates, convergence tables.

Commands: ``spectrum``, ``index``, ``converge``, ``geometry-check``.
Outputs are machine-first JSON (schema 1) or a lossy CSV projection;
reports are deterministic for identical configuration (no timestamps
unless ``--stamp``).  Exit codes: 0 ok, 2 configuration error, 3 solver
failure, 4 strict-mode borderline abort.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib.metadata import PackageNotFoundError, version as pkg_version
from pathlib import Path
from typing import Optional

import numpy as np

from . import assembly, catenoid, engine, geometry, mode1d
from .certify import (
    BorderlineError,
    IndexCertificate,
    certify_1d,
    certify_2d,
    certify_closed_form,
)
from .geometry import DEFAULT_TOLERANCES, ToleranceProfile, ValidationError

SCHEMA = 1
_METHODS = ("closed_form", "mode_1d", "full_2d", "all")


def _version_string() -> str:
    try:
        return f"fbindex {pkg_version('fbindex')}"
    except PackageNotFoundError:  # pragma: no cover
        return "fbindex dev"


@dataclass(frozen=True)
class RunConfig:
    surface: str = "catenoid"
    method: str = "closed_form"
    resolution: tuple = (128, 128)
    n_max: int = 8
    alpha: float = 1.0
    out: Optional[str] = None
    format: str = "json"
    strict: bool = False
    stamp: bool = False
    tol: ToleranceProfile = DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValidationError(f"unknown method: {self.method!r}")
        if self.method == "closed_form" and self.surface != "catenoid":
            raise ValidationError(
                "closed_form is only available for the catenoid surface"
            )
        if self.format not in ("json", "csv"):
            raise ValidationError(f"unknown output format: {self.format!r}")


def _chart_for(surface: str):
    if surface in ("catenoid", "disk"):
        return geometry.chart_from_descriptor({"kind": surface})
    path = Path(surface)
    if not path.exists():
        raise ValidationError(f"unknown surface or missing descriptor file: {surface!r}")
    return geometry.chart_from_descriptor(json.loads(path.read_text()))


def _parse_resolution(text: str) -> tuple:
    try:
        a, _, b = text.partition("x")
        return (int(a), int(b or a))
    except ValueError as exc:
        raise ValidationError(f"resolution must look like 128x128, got {text!r}") from exc


def _load_profile(path: Optional[str]) -> dict:
    """TOML configuration: run settings at top level, [tolerances] table."""
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"tolerance profile not found: {path}")
    return tomllib.loads(p.read_text())


def _build_config(args) -> RunConfig:
    file_cfg = _load_profile(getattr(args, "tol_profile", None))
    tol_over = file_cfg.pop("tolerances", {})
    bad = set(tol_over) - set(ToleranceProfile.__dataclass_fields__)
    if bad:
        raise ValidationError(f"unknown tolerance keys: {sorted(bad)}")
    tol = replace(DEFAULT_TOLERANCES, **tol_over) if tol_over else DEFAULT_TOLERANCES

    cfg = {}
    for key in ("surface", "method", "n_max", "alpha", "out", "format", "strict", "stamp"):
        if key in file_cfg:
            cfg[key] = file_cfg[key]
        cli_val = getattr(args, key, None)
        if cli_val is not None and cli_val is not False:
            cfg[key] = cli_val
    if "resolution" in file_cfg:
        cfg["resolution"] = _parse_resolution(str(file_cfg["resolution"]))
    if getattr(args, "resolution", None):
        cfg["resolution"] = _parse_resolution(args.resolution)
    if "method" not in cfg:
        cfg["method"] = ("closed_form"
                         if cfg.get("surface", "catenoid") == "catenoid"
                         else "full_2d")
    return RunConfig(tol=tol, **cfg)


def _emit(doc: dict, csv_text: str, config: RunConfig) -> None:
    doc = {"schema": SCHEMA, "version": _version_string(),
           "tolerances": config.tol.to_dict(), **doc}
    if config.stamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = csv_text if config.format == "csv" else json.dumps(doc, indent=2, sort_keys=True)
    if config.out:
        Path(config.out).write_text(text)
    else:
        print(text)


# ---------------------------------------------------------------- commands

def _spectrum_closed_form(config: RunConfig):
    pairs = catenoid.closed_form_spectrum(config.n_max)
    doc = {"surface": config.surface, "method": "closed_form",
           "entries": [p.as_record() for p in pairs]}
    return doc, catenoid.spectrum_to_csv(pairs)


def _spectrum_mode_1d(config: RunConfig):
    rep = mode1d.assemble_full_spectrum(config.n_max, tol=config.tol)
    doc = {"surface": config.surface, "method": "mode_1d",
           "report": rep.to_json_dict()}
    return doc, rep.to_csv()


def _spectrum_full_2d(config: RunConfig):
    chart = _chart_for(config.surface)
    op = assembly.assemble(chart, assembly.CoefficientField(alpha=config.alpha),
                           config.resolution, config.tol)
    nt = config.tol.null_tol_at(max(config.resolution))
    ct = config.tol.cluster_tol_2d_at(max(config.resolution))
    dtn = engine.build_dtn(op, nt)
    rep = engine.dtn_spectrum(dtn, k=4 * (config.n_max + 1), cluster_tol=ct)
    doc = {"surface": config.surface, "method": "full_2d",
           "resolution": list(config.resolution), "report": rep.to_json_dict()}
    return doc, rep.to_csv()


def cmd_spectrum(config: RunConfig) -> int:
    if config.method == "mode_1d" and config.surface != "catenoid":
        raise ValidationError("mode_1d is only available for the catenoid surface")
    runner = {"closed_form": _spectrum_closed_form,
              "mode_1d": _spectrum_mode_1d,
              "full_2d": _spectrum_full_2d}
    if config.method == "all":
        docs = []
        for m in ("closed_form", "mode_1d", "full_2d"):
            doc, csv_text = runner[m](config)
            docs.append(doc)
        _emit({"surface": config.surface, "method": "all", "runs": docs},
              csv_text, config)
        return 0
    doc, csv_text = runner[config.method](config)
    _emit(doc, csv_text, config)
    return 0


def _index_one(config: RunConfig, method: str) -> IndexCertificate:
    if method == "closed_form":
        return certify_closed_form(config.alpha, config.tol,
                                   config.n_max, strict=config.strict)
    if method == "mode_1d":
        return certify_1d(config.tol, config.alpha, config.n_max,
                          strict=config.strict)
    chart = _chart_for(config.surface)
    return certify_2d(chart, config.resolution, config.tol,
                      config.alpha, strict=config.strict)


def _cert_csv(certs: list) -> str:
    lines = ["method,fixed_negative,fixed_null,dtn_below,dtn_at,index,nullity"]
    for c in certs:
        lines.append(f"{c.method},{c.fixed_negative},{c.fixed_null},"
                     f"{c.dtn_below_alpha},{c.dtn_at_alpha},{c.index},{c.nullity}")
    return "\n".join(lines) + "\n"


def cmd_index(config: RunConfig) -> int:
    if config.method == "all":
        if config.surface != "catenoid":
            raise ValidationError("method=all compares all three pipelines; "
                                  "only the catenoid supports them all")
        methods = ("closed_form", "mode_1d", "full_2d")
        with ThreadPoolExecutor(max_workers=3) as pool:
            certs = list(pool.map(lambda m: _index_one(config, m), methods))
        verdict = ("consistent"
                   if len({c.counts for c in certs}) == 1 else "inconsistent")
        doc = {"surface": config.surface, "method": "all",
               "certificates": [c.to_json_dict() for c in certs],
               "verdict": verdict}
        _emit(doc, _cert_csv(certs), config)
        return 0
    cert = _index_one(config, config.method)
    doc = {"surface": config.surface, "certificate": cert.to_json_dict()}
    _emit(doc, _cert_csv([cert]), config)
    return 0


def cmd_converge(config: RunConfig, resolutions: list[int]) -> int:
    if config.method not in ("mode_1d", "full_2d"):
        raise ValidationError("converge requires method mode_1d or full_2d")
    exact = {(p.n, p.parity): p.delta
             for p in catenoid.closed_form_spectrum(min(config.n_max, 4))}
    rows = []
    for res in resolutions:
        errs = {}
        if config.method == "mode_1d":
            for n in range(min(config.n_max, 4) + 1):
                for br in mode1d.steklov_spectrum_1d_banded(n, elements=res,
                                                            tol=config.tol):
                    if not br.deflated:
                        key = (br.n, br.parity)
                        errs[key] = abs(br.delta - exact[key]) / abs(exact[key])
        else:
            chart = _chart_for("catenoid")
            op = assembly.assemble(chart, assembly.CoefficientField(),
                                   (res, res), config.tol)
            nt = config.tol.null_tol_at(res)
            dtn = engine.build_dtn(op, nt)
            rep = engine.dtn_spectrum(dtn, k=4 * (min(config.n_max, 4) + 1))
            seen = {}
            for v, lab in zip(rep.eigenvalues, rep.labels):
                seen.setdefault(lab, []).append(v)
            for key, vals in seen.items():
                if key in exact:
                    errs[key] = abs(float(np.mean(vals)) - exact[key]) / abs(exact[key])
        rows.append((res, errs))

    keys = sorted(set.intersection(*(set(e) for _, e in rows)))
    header = ["resolution"] + [f"err_n{n}_{p}" for n, p in keys] + (
        ["order"] if len(rows) > 1 else [])
    lines = [",".join(header)]
    table = []
    prev = None
    for res, errs in rows:
        cells = [str(res)] + [f"{errs[k]:.6e}" for k in keys]
        entry = {"resolution": res,
                 "errors": {f"n{n}_{p}": errs[(n, p)] for n, p in keys}}
        if len(rows) > 1 and prev is not None:
            worst = max(errs[k] for k in keys)
            worst_prev = max(prev[k] for k in keys)
            order = float(np.log2(worst_prev / worst))
            cells.append(f"{order:.2f}")
            entry["order"] = order
        prev = errs
        lines.append(",".join(cells))
        table.append(entry)
    _emit({"surface": "catenoid", "method": config.method, "table": table},
          "\n".join(lines) + "\n", config)
    return 0


def cmd_geometry_check(config: RunConfig) -> int:
    chart = _chart_for(config.surface)
    fb = geometry.free_boundary_residual(chart)
    checks = {"free_boundary_residual": fb}
    if chart.name == "catenoid":
        for a, name in zip(np.eye(3), ("e1", "e2", "e3")):
            checks[f"jacobi_residual_nu_{name}"] = geometry.jacobi_field_residual(
                chart, "nu_a", grid=config.resolution, vector=a)
        checks["jacobi_residual_zeta"] = geometry.jacobi_field_residual(
            chart, "zeta", grid=config.resolution)
    csv_text = "check,value\n" + "\n".join(
        f"{k},{v:.6e}" for k, v in checks.items()) + "\n"
    _emit({"surface": config.surface, "checks": checks}, csv_text, config)
    return 0


# ---------------------------------------------------------------- plumbing

def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbindex",
        description="Morse index and spectra of free boundary minimal surfaces",
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--surface", default=None,
                       help="catenoid, disk, or a JSON chart descriptor file")
        p.add_argument("--method", default=None, choices=_METHODS)
        p.add_argument("--resolution", default=None, metavar="NxM")
        p.add_argument("--n-max", dest="n_max", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--tol-profile", dest="tol_profile", default=None,
                       metavar="FILE", help="TOML file with settings and [tolerances]")
        p.add_argument("--out", default=None, metavar="FILE")
        p.add_argument("--format", default=None, choices=("json", "csv"))
        p.add_argument("--strict", action="store_true", default=False)
        p.add_argument("--stamp", action="store_true", default=False)

    common(sub.add_parser("spectrum", help="eigenvalue report"))
    common(sub.add_parser("index", help="index/nullity certificate"))
    conv = sub.add_parser("converge", help="refinement error table")
    common(conv)
    conv.add_argument("--resolutions", default="32,64,128,256",
                      help="comma-separated refinement levels")
    common(sub.add_parser("geometry-check",
                          help="free boundary and known-field residuals"))
    return parser


def main(argv=None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        config = _build_config(args)
        if args.command == "spectrum":
            return cmd_spectrum(config)
        if args.command == "index":
            return cmd_index(config)
        if args.command == "converge":
            levels = [int(x) for x in args.resolutions.split(",") if x]
            return cmd_converge(config, levels)
        if args.command == "geometry-check":
            return cmd_geometry_check(config)
        raise ValidationError(f"unknown command {args.command!r}")  # pragma: no cover
    except BorderlineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, geometry.SingularChartError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver and I/O failures
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
