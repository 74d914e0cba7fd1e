"""Command line entry point: run scenario configs, list built-ins, and two
small calculators for distances and Cartan projections."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from hglab import __version__
from hglab.errors import ConfigInvalid, HGLabError, ScenarioFailed


class Horizons(BaseModel):
    model_config = ConfigDict(extra="forbid")
    N: Optional[int] = Field(default=None, ge=1)
    L_max: Optional[int] = Field(default=None, ge=1)
    T_max: Optional[float] = Field(default=None, gt=0)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str
    seed: int
    diagnostics: Optional[list[str]] = None
    horizons: Horizons = Horizons()
    tolerances: dict[str, float] = {}
    params: dict = {}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    output_dir: str = "hglab_out"
    scenarios: list[ScenarioConfig]


def load_config(path) -> tuple[RunConfig, str]:
    """Parse and validate a run config; returns it with the sha256 of the raw bytes."""
    raw = Path(path).read_bytes()
    try:
        cfg = RunConfig.model_validate_json(raw)
    except ValidationError as exc:
        raise ConfigInvalid(str(exc)) from None
    from hglab.scenarios import SCENARIOS

    for sc in cfg.scenarios:
        if sc.id not in SCENARIOS:
            raise ConfigInvalid(f"unknown scenario {sc.id!r}")
    return cfg, hashlib.sha256(raw).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path: Path, rows: list) -> None:
    cols = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def run_scenario(sc: ScenarioConfig, out_dir: str) -> dict:
    """Run one scenario config and write its outputs; returns the manifest entry."""
    from hglab.scenarios import get_scenario

    t0 = time.perf_counter()
    cls = get_scenario(sc.id)
    try:
        scen = cls(sc.params, sc.seed, sc.horizons.model_dump(), sc.tolerances)
        res = scen.run(sc.diagnostics)
    except ConfigInvalid:
        raise
    except HGLabError as exc:
        raise ScenarioFailed(f"{sc.id}: {type(exc).__name__}: {exc}") from exc
    base = Path(out_dir) / sc.id
    outputs = {}
    for diag, out in res.outputs.items():
        paths = []
        if out.tables or out.reports:
            base.mkdir(parents=True, exist_ok=True)
        for name, rows in sorted(out.tables.items()):
            p = base / f"{diag}__{name}.csv"
            write_csv(p, rows)
            paths.append(str(p))
        for name, rep in sorted(out.reports.items()):
            p = base / f"{diag}__{name}.json"
            write_json(p, rep)
            paths.append(str(p))
        outputs[diag] = paths
    checks = [{"name": c.name, "passed": bool(c.passed), "value": c.value, "detail": c.detail}
              for c in res.checks]
    return {"id": sc.id, "seed": sc.seed, "outputs": outputs, "checks": checks,
            "wall_clock_s": time.perf_counter() - t0}


def _run_one(args):
    return run_scenario(*args)


def run(config_path, parallel: bool = False, out_dir: Optional[str] = None) -> dict:
    cfg, digest = load_config(config_path)
    out = out_dir or cfg.output_dir
    t0 = time.perf_counter()
    jobs = [(sc, out) for sc in cfg.scenarios]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), 8)) as ex:
            entries = list(ex.map(_run_one, jobs))
    else:
        entries = [_run_one(j) for j in jobs]
    manifest = {"config_sha256": digest, "version": __version__, "output_dir": out,
                "scenarios": entries, "wall_clock_s": time.perf_counter() - t0}
    Path(out).mkdir(parents=True, exist_ok=True)
    write_json(Path(out) / "manifest.json", manifest)
    return manifest


def print_summary(manifest: dict, stream=sys.stdout) -> None:
    print(f"{'scenario':<16}{'check':<36}{'result':<8}value", file=stream)
    for e in manifest["scenarios"]:
        if not e["checks"]:
            print(f"{e['id']:<16}{'(no checks)':<36}", file=stream)
        for c in e["checks"]:
            v = c["value"]
            vs = "%.6g" % v if isinstance(v, float) else str(v)
            print(f"{e['id']:<16}{c['name']:<36}{'PASS' if c['passed'] else 'FAIL':<8}{vs}", file=stream)
    print(f"manifest: {Path(manifest['output_dir']) / 'manifest.json'}", file=stream)


def _parse_point(text: str) -> np.ndarray:
    text = text.strip()
    try:
        v = json.loads(text) if text.startswith("[") else [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ConfigInvalid(f"cannot parse point {text!r}") from exc
    return np.asarray(v, dtype=float)


def cmd_dist(domain_path, x, y) -> float:
    from hglab.domains import domain_from_json
    from hglab.hilbert import hilbert_distance

    dom = domain_from_json(json.loads(Path(domain_path).read_text()))
    return hilbert_distance(dom, _parse_point(x), _parse_point(y))


def cmd_cartan(path) -> dict:
    """Cartan projection of a matrix file, or of {"product": [...], "power": n}."""
    from hglab.projlin import cartan, cartan_of_product

    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        if "product" not in obj:
            raise ConfigInvalid("cartan input must be a matrix or an object with a 'product' list")
        factors = [np.asarray(m, float) for m in obj["product"]] * int(obj.get("power", 1))
        mu = cartan_of_product(factors)
    else:
        mu = cartan(np.asarray(obj, float))
    d = mu.d
    return {"mu": [float(v) for v in mu.mu],
            "gaps": {f"{i}_{i + 1}": mu.gap(i, i + 1) for i in range(1, d)},
            "mu_1_d": mu.gap(1, d)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hglab", description=__doc__)
    p.add_argument("--version", action="version", version=f"hglab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenarios of a config file")
    r.add_argument("config")
    r.add_argument("--parallel", action="store_true", help="run scenarios in separate processes")
    r.add_argument("--assert", dest="assert_mode", action="store_true",
                   help="exit with status 2 when any check fails")
    r.add_argument("--out", default=None, help="override output_dir from the config")
    sub.add_parser("list", help="list built-in scenarios")
    d = sub.add_parser("dist", help="Hilbert distance between two points of a domain")
    d.add_argument("domain")
    d.add_argument("x", help="homogeneous coordinates, comma separated or a JSON list")
    d.add_argument("y")
    c = sub.add_parser("cartan", help="Cartan projection of a matrix or a product")
    c.add_argument("matrix")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            from hglab.scenarios import SCENARIOS

            for name, cls in SCENARIOS.items():
                print(f"{name:<16}{cls.description}  [diagnostics: {', '.join(cls.diagnostic_names())}]")
            return 0
        if args.command == "dist":
            print("%.17g" % cmd_dist(args.domain, args.x, args.y))
            return 0
        if args.command == "cartan":
            print(json.dumps(cmd_cartan(args.matrix), indent=2))
            return 0
        manifest = run(args.config, args.parallel, args.out)
        print_summary(manifest)
        failed = any(not c["passed"] for e in manifest["scenarios"] for c in e["checks"])
        return 2 if (args.assert_mode and failed) else 0
    except (HGLabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
