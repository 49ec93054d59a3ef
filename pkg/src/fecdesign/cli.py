"""Command-line surface for the design/verification pipeline.

Subcommands: exit-gen (chart estimation and caching), design (ensemble
optimization / Pareto sweep), construct (matrix realizations), simulate
(BER harness), report (merged summary).  Exit status: 0 success, 1 the
design problem is infeasible (a legitimate result), 2 usage/config errors.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import Infeasible
from .channel import SnrPoint, qfunc, shannon_gap, shannon_limit_snr
from .codegen import (QcProtograph, SparseParityCheck, build_qc,
                      expand_protograph, girth, info_set, sample_random)
from .decoder import DecodeConfig, qc_layers, simulate_ber
from .ensemble import InnerEnsemble, StaircaseSpec, load_staircase_table
from .exitchart import estimate_elementary_charts, default_grid
from .optimizer import ChartProvider, DesignSpace, optimize_concat, pareto_sweep

VERSION = "0.1.0"


@dataclass
class RunManifest:
    """Provenance record every command writes next to its outputs."""

    command: str
    config_path: str
    master_seed: int
    out_dir: str
    version: str
    input_hashes: dict

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def write(self):
        os.makedirs(self.out_dir, exist_ok=True)
        payload = asdict(self)
        payload["digest"] = self.digest()
        with open(os.path.join(self.out_dir, "manifest.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
        return payload["digest"]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _manifest(args, extra_inputs=()) -> RunManifest:
    hashes = {args.config: _sha256(args.config)}
    for p in extra_inputs:
        hashes[p] = _sha256(p)
    return RunManifest(command=args.cmd, config_path=args.config,
                       master_seed=args.seed, out_dir=args.out,
                       version=VERSION, input_hashes=hashes)


def _space_from(cfg: dict) -> DesignSpace:
    keys = ("d_v_max", "nu_max", "q_points", "q_nu", "l0_step",
            "chart_grid_points", "chart_samples", "nu_values", "l0_values")
    kw = {k: cfg[k] for k in keys if k in cfg}
    if "dc_bar_candidates" in cfg:
        kw["dc_bar_candidates"] = tuple(cfg["dc_bar_candidates"])
    for k in ("nu_values", "l0_values"):
        if k in kw:
            kw[k] = tuple(kw[k])
    return DesignSpace(**kw)


def _ensemble_from(cfg: dict) -> InnerEnsemble:
    if "ensemble_file" in cfg:
        with open(cfg["ensemble_file"]) as fh:
            return InnerEnsemble.from_json(fh.read())
    return InnerEnsemble.from_node(np.asarray(cfg["L"], dtype=float),
                                   float(cfg["dc_bar"]))


def _snr_list(cfg: dict) -> list:
    if "snr_db" in cfg:
        v = cfg["snr_db"]
        return [float(x) for x in (v if isinstance(v, list) else [v])]
    if "gaps_db" in cfg:
        limit = shannon_limit_snr(float(cfg["r_cat"]))
        return [limit + float(g) for g in cfg["gaps_db"]]
    raise ValueError("config needs 'snr_db' or 'gaps_db'")


def cmd_exit_gen(args) -> int:
    cfg = _load_config(args.config)
    space = _space_from(cfg)
    if "chart_samples" not in cfg:
        space.chart_samples = 10**6
    provider = ChartProvider(space, seed=args.seed, cache_dir=args.out)
    manifest = _manifest(args)
    digest = manifest.write()
    for db in _snr_list(cfg):
        snr = SnrPoint.from_db(db)
        for dc_bar in cfg["dc_bar_candidates"]:
            for nu in cfg.get("nu_values", [cfg.get("nu")]):
                provider(snr, float(dc_bar), float(nu))
    print(f"charts cached in {args.out} (manifest {digest})")
    return 0


_DESIGN_COLUMNS = ["snr_db", "gap_db", "outer_name", "dc_bar", "nu", "l0",
                   "lambda", "I", "eta_i", "eta", "feasible"]


def _write_design_rows(rows, out_dir, digest):
    jpath = os.path.join(out_dir, "designs.json")
    cpath = os.path.join(out_dir, "designs.csv")
    with open(jpath, "w") as fh:
        json.dump({"manifest": digest, "designs": rows}, fh, indent=2)
    with open(cpath, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_DESIGN_COLUMNS + [f"# manifest {digest}"])
        for row in rows:
            writer.writerow([row.get(c) if c != "lambda"
                             else " ".join(repr(x) for x in row["lambda"])
                             for c in _DESIGN_COLUMNS])
    return jpath, cpath


def cmd_design(args) -> int:
    cfg = _load_config(args.config)
    r_cat = float(cfg["r_cat"])
    table = load_staircase_table(cfg.get("outer_table"))
    if not table:
        raise ValueError("empty outer-code table")
    space = _space_from(cfg)
    provider = ChartProvider(space, seed=args.seed,
                             cache_dir=cfg.get("chart_cache", args.out))
    manifest = _manifest(args)
    digest = manifest.write()
    snrs = _snr_list(cfg | {"r_cat": r_cat})
    if cfg.get("pareto", False):
        frontier = pareto_sweep(r_cat, snrs, table, space, provider)
        rows = [p.design.to_row(r_cat) for p in frontier]
    else:
        rows = []
        for db in snrs:
            point = optimize_concat(r_cat, SnrPoint.from_db(db), table,
                                    space, provider)
            rows.append(point.to_row(r_cat))
    jpath, cpath = _write_design_rows(rows, args.out, digest)
    print(f"wrote {jpath} and {cpath}")
    return 0


def cmd_construct(args) -> int:
    cfg = _load_config(args.config)
    ens = _ensemble_from(cfg)
    manifest = _manifest(args, extra_inputs=(
        [cfg["ensemble_file"]] if "ensemble_file" in cfg else []))
    digest = manifest.write()
    kind = cfg.get("kind", "random")
    report = {"manifest": digest, "kind": kind}
    if kind == "qc":
        proto = build_qc(ens, int(cfg["target_n"]),
                         float(cfg.get("length_tolerance", 0.01)),
                         int(cfg.get("girth_target", 8)), seed=args.seed)
        ppath = os.path.join(args.out, "protograph.txt")
        proto.save(ppath)
        matrix = expand_protograph(proto)
        checked = girth(matrix, starts=[c * proto.z for c in range(proto.n_cols)],
                        depth_limit=4)
        report.update({"z": proto.z, "girth": proto.girth,
                       "girth_checked_window8": None if np.isinf(checked)
                       else int(checked),
                       "n": matrix.n_cols, "protograph": ppath})
    elif kind == "random":
        matrix = sample_random(ens, int(cfg["n_c"]), seed=args.seed)
        report.update({"n": matrix.n_cols})
    else:
        raise ValueError(f"unknown construction kind {kind!r}")
    matrix.info_cols = info_set(matrix)
    mpath = os.path.join(args.out, "matrix.txt")
    matrix.save(mpath)
    report["matrix"] = mpath
    report["info_set_size"] = int(len(matrix.info_cols))
    with open(os.path.join(args.out, "construct.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"wrote {mpath}")
    return 0


def _decode_config(cfg: dict, matrix) -> DecodeConfig:
    layers = None
    if cfg.get("schedule") == "layered" and "z" in cfg:
        layers = qc_layers(matrix.n_rows // int(cfg["z"]), int(cfg["z"]))
    return DecodeConfig(algorithm=cfg.get("algorithm", "sum-product"),
                        schedule=cfg.get("schedule", "flooding"),
                        max_iters=int(cfg.get("max_iters", 9)),
                        offset=float(cfg.get("offset", 0.5)),
                        layers=layers)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    matrix = SparseParityCheck.load(cfg["matrix"])
    manifest = _manifest(args, extra_inputs=[cfg["matrix"]])
    digest = manifest.write()
    dconf = _decode_config(cfg, matrix)
    stop = cfg.get("stop", {})
    rows = []
    for db in _snr_list(cfg):
        rep = simulate_ber(matrix, SnrPoint.from_db(db), dconf, seed=args.seed,
                           min_errors=int(stop.get("min_errors", 100)),
                           min_frames=int(stop.get("min_frames", 50)),
                           max_frames=int(stop.get("max_frames", 5000)),
                           workers=args.workers)
        rows.append([db, rep.frames, rep.bits, rep.errors, rep.ber, rep.ci95,
                     dconf.algorithm, dconf.schedule, dconf.max_iters])
    path = os.path.join(args.out, "ber.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "frames", "bits", "errors", "ber", "ci95",
                         "algorithm", "schedule", "iters",
                         f"# manifest {digest}"])
        writer.writerows(rows)
    print(f"wrote {path}")
    return 0


def _uncoded_snr_at(ber: float) -> float:
    """Es/N0 at which raw channel BER equals the given value."""
    from scipy.optimize import brentq
    return brentq(lambda db: SnrPoint.from_db(db).p0 - ber, -5.0, 40.0)


def cmd_report(args) -> int:
    cfg = _load_config(args.config)
    manifest = _manifest(args)
    digest = manifest.write()
    runs = cfg.get("runs", [])
    ref_snr = _uncoded_snr_at(1e-15)
    rows = []
    for path in runs:
        with open(path) as fh:
            run = json.load(fh)
        for d in run.get("designs", [run]):
            snr_db = d.get("snr_db")
            r_cat = cfg.get("r_cat")
            gap = d.get("gap_db")
            if gap is None and r_cat is not None and snr_db is not None:
                gap = shannon_gap(float(r_cat), float(snr_db))
            rows.append({
                "source": path,
                "snr_db": snr_db,
                "gap_db": gap,
                "eta_i": d.get("eta_i"),
                "eta": d.get("eta"),
                "I": d.get("I", d.get("iters")),
                "ncg_db": (ref_snr - snr_db) if snr_db is not None else None,
                "feasible": d.get("feasible", True),
            })
    path = os.path.join(args.out, "summary.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        fh.write(f"# NCG = Es/N0 at uncoded BER 1e-15 ({ref_snr:.4f} dB) minus "
                 f"the system's required Es/N0; manifest {digest}\n")
        cols = ["source", "snr_db", "gap_db", "eta_i", "eta", "I", "ncg_db",
                "feasible"]
        writer.writerow(cols)
        for r in rows:
            writer.writerow([r[c] for c in cols])
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


_COMMANDS = {
    "exit-gen": cmd_exit_gen,
    "design": cmd_design,
    "construct": cmd_construct,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fecdesign",
                                description=__doc__.splitlines()[0])
    p.add_argument("cmd", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.cmd](args)
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
