"""Command-line entry point.

::

    specdet synth   [--config FILE] [--seed N] --out DIR
    specdet detect  --input CUBE --target CSV --algorithm {cem,mf,acem} [--subset 1,3] --out DIR
    specdet verify  --input CUBE --target CSV [--which both] --out DIR
    specdet compare --input CUBE --target CSV [--truth CSV] --out DIR

Exit status: 0 success/certified, 1 theorem violation, 2 usage or config
error, 3 numerical failure (singular statistics), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from specdet import __version__, envi, synth
from specdet.detectors import (
    BandSubset,
    TargetSignature,
    apply_detector,
    cem_subset_weights,
    detector_weights,
)
from specdet.errors import ConfigError, SpecDetError
from specdet.stats import accumulate_stats
from specdet.verify import (
    MAX_ENUMERATION_BANDS,
    THEOREM2_R2_TOL,
    THEOREM2_WEIGHT_TOL,
    bands_independent,
    check_theorem1,
    check_theorem2,
    pearson_r2,
    roc_auc,
)

log = logging.getLogger("specdet")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4


# -- file helpers ----------------------------------------------------------------

def write_atomic(path: Path, data: bytes | str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_numbers(path: str | Path) -> np.ndarray:
    """All numbers in a comma/whitespace separated text file ('#' comments)."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(t for t in line.replace(",", " ").split() if t)
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def read_target(path: str | Path) -> TargetSignature:
    return TargetSignature(read_numbers(path), name=Path(path).stem)


def read_mask(path: str | Path, rows: int, cols: int) -> np.ndarray:
    values = read_numbers(path)
    if values.size != rows * cols:
        raise ConfigError(f"truth mask has {values.size} entries, cube has {rows * cols} pixels")
    return values.reshape(rows, cols) != 0


def format_mask(mask: np.ndarray) -> str:
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in mask)


def format_vector(values) -> str:
    return "".join(f"{float(v)!r}\n" for v in values)


def format_kv(pairs: dict, prefix: str = "") -> str:
    out = []
    for key, value in pairs.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.append(format_kv(value, prefix=f"{name}."))
        elif isinstance(value, (list, tuple)):
            out.append(f"{name} = " + ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in value) + "\n")
        elif isinstance(value, float):
            out.append(f"{name} = {float(value)!r}\n")
        else:
            out.append(f"{name} = {value}\n")
    return "".join(out)


def format_text(pairs: dict, indent: int = 0) -> str:
    out = []
    pad = " " * indent
    for key, value in pairs.items():
        if isinstance(value, dict):
            out.append(f"{pad}{key}:\n" + format_text(value, indent + 2))
        elif isinstance(value, float):
            out.append(f"{pad}{key:<26} {value:.6g}\n")
        else:
            out.append(f"{pad}{key:<26} {value}\n")
    return "".join(out)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, args: argparse.Namespace, inputs: list[Path], started: float, **extra) -> None:
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "wall_clock_s": round(time.time() - started, 6),
    }
    manifest.update(extra)
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cube_inputs(path: str) -> list[Path]:
    return [envi.header_path(path), envi.payload_path(path)]


# -- commands --------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = synth.load_scene_config(args.config) if args.config else synth.SceneConfig()
    if args.seed is not None:
        cfg = synth.with_seed(cfg, args.seed)
    cube, truth, target = synth.generate_scene(cfg)
    out = Path(args.out)
    header, payload = envi.write_cube(cube, data_type=5, interleave="bsq")
    write_atomic(out / "cube.img", payload)
    write_atomic(out / "cube.hdr", header)
    write_atomic(out / "truth.csv", format_mask(truth))
    write_atomic(out / "target.csv", ",".join(repr(float(v)) for v in target.values) + "\n")
    write_atomic(out / "scene.cfg", synth.format_scene_config(cfg))
    args.seed = cfg.seed
    inputs = [Path(args.config)] if args.config else []
    write_manifest(out, args, inputs, started, config=synth.format_scene_config(cfg))
    log.info("wrote %dx%dx%d cube to %s", cube.rows, cube.cols, cube.bands, out)
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    started = time.time()
    cube = envi.load_cube(args.input)
    target = read_target(args.target)
    stats = accumulate_stats(cube)
    t0 = time.perf_counter()
    if args.subset:
        if args.algorithm != "cem":
            raise ConfigError("--subset is only defined for the cem detector")
        weights = cem_subset_weights(stats, target, BandSubset.parse(args.subset), ridge=args.ridge)
    else:
        weights = detector_weights(args.algorithm, stats, target, ridge=args.ridge)
    dmap = apply_detector(cube, weights, stats)
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    for suffix, content in envi.write_detection_map(dmap, args.format).items():
        write_atomic(out / f"map{suffix}", content)
    write_atomic(out / "weights.csv", format_vector(weights.weights))
    summary = {
        "algorithm": weights.kind,
        "bands": cube.bands,
        "pixels": cube.n_pixels,
        "normalizer": weights.normalizer,
        "mean_square_output": float(np.mean(dmap.scores ** 2)),
        "ridge": args.ridge,
        "seconds": elapsed,
    }
    if weights.kind == "cem":
        summary["output_energy"] = weights.normalizer
    if weights.subset is not None:
        summary["subset"] = str(weights.subset)
    write_atomic(out / "summary.txt", format_kv(summary))
    _emit(summary, args.machine_readable)
    write_manifest(out, args, _cube_inputs(args.input) + [Path(args.target)], started)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    started = time.time()
    cube = envi.load_cube(args.input)
    target = read_target(args.target)
    stats = accumulate_stats(cube)
    report: dict = {}
    status = EXIT_OK

    if args.ridge:
        log.warning("--ridge is set: theorem checks are skipped on regularized statistics")
        report["skipped"] = "ridge regularization enabled"
    else:
        independent = bands_independent(cube)
        report["bands_independent"] = independent
        if not independent:
            log.warning("bands are linearly dependent; strict band monotonicity does not apply")

        if args.which in ("theorem1", "both"):
            if cube.bands <= MAX_ENUMERATION_BANDS:
                subsets = "all-proper"
            else:
                subsets = [
                    BandSubset(tuple(b for b in range(1, cube.bands + 1) if b != k))
                    for k in range(1, cube.bands + 1)
                ]
            t1 = check_theorem1(stats, target, subsets)
            section = t1.to_dict()
            applicable = independent and not t1.dependent_bands
            section["applicable"] = applicable
            report["theorem1"] = section
            if applicable and not t1.certified:
                status = EXIT_VIOLATION

        if args.which in ("theorem2", "both"):
            tol_w = args.tolerance if args.tolerance is not None else THEOREM2_WEIGHT_TOL
            tol_r = args.tolerance if args.tolerance is not None else THEOREM2_R2_TOL
            t2 = check_theorem2(cube, target, weight_tol=tol_w, r2_tol=tol_r, stats=stats)
            report["theorem2"] = t2.to_dict()
            if not t2.certified:
                status = EXIT_VIOLATION

    report["exit_status"] = status
    out = Path(args.out)
    text = format_kv(report) if args.machine_readable else format_text(report)
    write_atomic(out / "report.txt", text)
    sys.stdout.write(text)
    write_manifest(out, args, _cube_inputs(args.input) + [Path(args.target)], started)
    return status


PAIRS = (("cem", "mf"), ("cem", "acem"), ("mf", "acem"))


def cmd_compare(args: argparse.Namespace) -> int:
    started = time.time()
    cube = envi.load_cube(args.input)
    target = read_target(args.target)
    stats = accumulate_stats(cube)
    maps = {
        kind: apply_detector(cube, detector_weights(kind, stats, target, ridge=args.ridge), stats)
        for kind in ("cem", "mf", "acem")
    }
    out = Path(args.out)
    r2 = {}
    for a, b in PAIRS:
        ya, yb = maps[a].scores.reshape(-1), maps[b].scores.reshape(-1)
        rows = "".join(f"{x!r},{y!r}\n" for x, y in zip(ya.tolist(), yb.tolist()))
        write_atomic(out / f"scatter_{a}_{b}.csv", f"{a},{b}\n" + rows)
        r2[f"{a}_vs_{b}"] = pearson_r2(ya, yb)
    write_atomic(out / "r2.csv", "pair,r2\n" + "".join(f"{k},{float(v)!r}\n" for k, v in r2.items()))
    summary: dict = {"r2": r2}
    inputs = _cube_inputs(args.input) + [Path(args.target)]
    if args.truth:
        truth = read_mask(args.truth, cube.rows, cube.cols)
        auc = {k: roc_auc(m, truth) for k, m in maps.items()}
        write_atomic(out / "auc.csv", "detector,auc\n" + "".join(f"{k},{float(v)!r}\n" for k, v in auc.items()))
        summary["auc"] = auc
        inputs.append(Path(args.truth))
    _emit(summary, args.machine_readable)
    write_manifest(out, args, inputs, started)
    return EXIT_OK


def _emit(summary: dict, machine: bool) -> None:
    sys.stdout.write(format_kv(summary) if machine else format_text(summary))


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specdet", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, cube=True):
        if cube:
            p.add_argument("--input", required=True, help="ENVI cube (.hdr or data file)")
            p.add_argument("--target", required=True, help="target signature, one number per band")
            p.add_argument("--ridge", type=float, default=0.0,
                           help="diagonal load as a fraction of trace(R)/L (default off)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--machine-readable", action="store_true", help="key = value output")

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--config", help="scene config file (key = value)")
    p.add_argument("--seed", type=int, help="override the config seed")
    common(p, cube=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="run one detector")
    p.add_argument("--algorithm", choices=("cem", "mf", "acem"), required=True)
    p.add_argument("--subset", help="comma list of 1-based bands (cem only)")
    p.add_argument("--format", choices=("envi", "csv", "pgm16"), default="envi")
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify", help="certify band monotonicity and MF/ACEM equivalence")
    p.add_argument("--which", choices=("theorem1", "theorem2", "both"), default="both")
    p.add_argument("--tolerance", type=float,
                   help="theorem2 tolerance for both weight deviation and 1 - R^2")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="pairwise correlation and AUC of all detectors")
    p.add_argument("--truth", help="truth mask csv (rows x cols of 0/1)")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except SpecDetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
