"""Command-line driver for reproducible generate / reconstruct / evaluate runs.

Scenes and results are versioned JSON documents; point clouds are written as
ascii PLY or CSV next to the result file.  Data goes to stdout when ``--out``
is omitted, diagnostics always go to stderr.  Exit codes: 2 invalid flags or
malformed input, 3 generation failure, 4 solver failure, 5 method/data
incompatibility.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .eval import evaluate
from .geometry import CameraIntrinsics, normalize, observations_from_normalized
from .graph import SimplicialGraph, build_graph
from .reconstruct import Reconstruction, ReconstructionConfig, reconstruct
from .synth import GeneratorConfig, generate_equiareal, generate_isometric, lemma1_sample, template_grid

logger = logging.getLogger("eqnrsfm.cli")

SCENE_VERSION = 1
RESULT_VERSION = 1

EXIT_BAD_INPUT = 2
EXIT_GENERATION = 3
EXIT_SOLVER = 4
EXIT_INCOMPATIBLE = 5

METHOD_FLAGS = {
    "snr-dsl": "SNR_DSL",
    "snr-pp": "SNR_PP",
    "qnr-dsl": "QNR_DSL",
    "qnr-pp": "QNR_PP",
    "hnr-dsl": "HNR_DSL",
    "hnr-pp": "HNR_PP",
    "hnr-pp-accel": "HNR_PP_ACCEL",
}


class InputError(Exception):
    """Malformed scene/result file or inconsistent flag combination."""


def _dump_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        logger.info("wrote %s", out)


def _load_json(path: str, kind: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {kind} file {path}: {exc}") from exc
    if not isinstance(data, dict) or "version" not in data:
        raise InputError(f"{kind} file {path} has no version field")
    if data["version"] != SCENE_VERSION:
        raise InputError(f"unsupported {kind} file version {data['version']!r}")
    return data


def _load_observations(scene: dict):
    try:
        coords = np.asarray(scene["correspondences"], dtype=float)
        visibility = scene.get("visibility")
        vis = None if visibility is None else np.asarray(visibility, dtype=bool)
        if scene.get("coordinates", "normalized") == "pixel":
            intr = CameraIntrinsics(**scene["intrinsics"])
            return normalize(coords, intr, vis)
        return observations_from_normalized(coords, vis)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed scene data: {exc}") from exc


def _graph_payload(graph: SimplicialGraph) -> dict:
    return {
        "e2": [list(edge) for edge in graph.e2],
        "e3": [list(tri) for tri in graph.e3],
    }


def _graph_from_payload(payload: dict, m: int) -> SimplicialGraph:
    e2 = tuple(tuple(edge) for edge in payload["e2"])
    e3 = tuple(tuple(tri) for tri in payload["e3"])
    graph = SimplicialGraph(m, e2, e3)
    graph.validate()
    return graph


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    if args.mode == "iso" and args.chi_e:
        logger.error("--chi-e is only meaningful with --mode equi")
        return EXIT_BAD_INPUT
    try:
        config = GeneratorConfig(
            m_a=args.ma,
            m_b=args.mb,
            n=args.frames,
            x_sigma=args.noise,
            chi_e=args.chi_e,
            seed=args.seed,
            noise_model=args.noise_model,
        )
    except ValueError as exc:
        logger.error("invalid generator flags: %s", exc)
        return EXIT_BAD_INPUT
    graph = build_graph(template_grid(config), k=min(4, config.m - 1))
    generator = generate_isometric if args.mode == "iso" else generate_equiareal
    try:
        scene = generator(config, graph)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        logger.error("scene generation failed: %s", exc)
        return EXIT_GENERATION
    obs = scene.observations
    payload = {
        "version": SCENE_VERSION,
        "kind": "scene",
        "mode": args.mode,
        "n": config.n,
        "m": config.m,
        "coordinates": "normalized",
        "intrinsics": asdict(config.camera),
        "correspondences": obs.points[..., :2].tolist(),
        "visibility": obs.visibility.tolist(),
        "gt_clouds": scene.gt_clouds.tolist(),
        "gt_geodesics": scene.gt_geodesics.tolist(),
        "gt_areas": scene.gt_areas.tolist(),
        "graph": _graph_payload(graph),
        "provenance": {
            "seed": config.seed,
            "config": asdict(config),
            "edge_deviation": scene.edge_deviation,
            "area_residuals": None
            if scene.area_residuals is None
            else scene.area_residuals.tolist(),
        },
    }
    _dump_json(payload, args.out)
    logger.info("generated %s scene: m=%d n=%d", args.mode, config.m, config.n)
    return 0


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def _write_cloud(path: Path, cloud: np.ndarray, fmt: str) -> None:
    if fmt == "ply":
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {len(cloud)}",
            "property float x",
            "property float y",
            "property float z",
            "end_header",
        ]
        lines += [f"{float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in cloud]
    else:
        lines = ["x,y,z"] + [f"{float(x)!r},{float(y)!r},{float(z)!r}" for x, y, z in cloud]
    path.write_text("\n".join(lines) + "\n")


def _serializable_diagnostics(diag: dict) -> dict:
    out = {}
    for key, value in diag.items():
        if key == "spectra":
            out[key] = [np.asarray(s).tolist() for s in value]
        elif isinstance(value, dict):
            out[key] = {k: float(v) for k, v in value.items()}
        elif isinstance(value, (list, tuple)):
            out[key] = [float(v) for v in value]
        elif isinstance(value, (int, np.integer)):
            out[key] = int(value)
        elif isinstance(value, (float, np.floating)):
            out[key] = float(value)
        else:
            out[key] = value
    return out


def cmd_reconstruct(args: argparse.Namespace) -> int:
    try:
        scene = _load_json(args.infile, "scene")
        obs = _load_observations(scene)
    except InputError as exc:
        logger.error("%s", exc)
        return EXIT_BAD_INPUT
    config = ReconstructionConfig(
        method=METHOD_FLAGS[args.method],
        lambda_I=args.lambda_i,
        lambda_E=args.lambda_e,
        knn=args.knn,
        completion=args.complete_missing,
    )
    if args.tol is not None:
        config.tol = args.tol
    try:
        config.validate()
    except ValueError as exc:
        logger.error("invalid reconstruction flags: %s", exc)
        return EXIT_BAD_INPUT
    graph = build_graph(obs.reference_points(), config.knn)
    try:
        rec = reconstruct(obs, config)
    except ValueError as exc:
        logger.error("method/data incompatibility: %s", exc)
        return EXIT_INCOMPATIBLE
    except RuntimeError as exc:
        logger.error("solver failure: %s", exc)
        return EXIT_SOLVER
    logger.info(
        "solved %s: status=%s objective=%.6g iterations=%d",
        args.method,
        rec.diagnostics["status"],
        rec.diagnostics["objective"],
        rec.diagnostics["iterations"],
    )
    cloud_files = []
    if args.out is not None:
        out = Path(args.out)
        ext = args.cloud_format
        for i, cloud in enumerate(rec.clouds):
            cloud_path = out.with_name(f"{out.stem}_cloud_{i:03d}.{ext}")
            _write_cloud(cloud_path, cloud, ext)
            cloud_files.append(cloud_path.name)
    payload = {
        "version": RESULT_VERSION,
        "kind": "result",
        "method": args.method,
        "config": {
            "lambda_i": config.lambda_I,
            "lambda_e": config.lambda_E,
            "knn": config.knn,
            "complete_missing": config.completion,
            "tol": config.tol,
        },
        "n": obs.n,
        "m": obs.m,
        "clouds": np.asarray(rec.clouds).tolist(),
        "cloud_files": cloud_files,
        "cloud_format": args.cloud_format,
        "graph": _graph_payload(graph),
        "geodesics": [
            {"edge": list(edge), "value": value}
            for edge, value in sorted(rec.geodesics.items())
        ],
        "areas": [
            {"triangle": list(tri), "value": value}
            for tri, value in sorted(rec.areas.items())
        ],
        "diagnostics": _serializable_diagnostics(rec.diagnostics),
    }
    _dump_json(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        result = _load_json(args.recon, "result")
        scene = _load_json(args.gt, "scene")
        if scene.get("gt_clouds") is None:
            raise InputError(f"scene file {args.gt} carries no ground-truth clouds")
        est = np.asarray(result["clouds"], dtype=float)
        gt = np.asarray(scene["gt_clouds"], dtype=float)
        if est.shape != gt.shape:
            raise InputError(
                f"dimension mismatch: reconstruction {est.shape} vs ground truth {gt.shape}"
            )
        visibility = scene.get("visibility")
        vis = None if visibility is None else np.asarray(visibility, dtype=bool)
        recon = graph = None
        if result.get("graph") and result.get("geodesics") is not None:
            graph = _graph_from_payload(result["graph"], est.shape[1])
            recon = Reconstruction(
                clouds=est,
                geodesics={tuple(g["edge"]): g["value"] for g in result["geodesics"]},
                areas={tuple(a["triangle"]): a["value"] for a in result.get("areas", [])},
                diagnostics={},
            )
        report = evaluate(est, gt, visibility=vis, recon=recon, graph=graph)
    except (InputError, KeyError, TypeError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_BAD_INPUT
    payload = {
        "version": RESULT_VERSION,
        "kind": "metrics",
        "scale": report.scale,
        "rms": report.rms,
        "med": report.med,
        "per_frame": list(report.per_frame),
        "gE": report.gE,
        "aE": report.aE,
    }
    _dump_json(payload, args.out)
    csv_path = args.csv
    if csv_path is None and args.out is not None:
        out = Path(args.out)
        csv_path = str(out.with_name(f"{out.stem}_per_frame.csv"))
    if csv_path is not None:
        rows = ["frame,rms"] + [f"{i},{v!r}" for i, v in enumerate(report.per_frame)]
        Path(csv_path).write_text("\n".join(rows) + "\n")
        logger.info("wrote %s", csv_path)
    logger.info("scale=%.6g rms=%.6g med=%.6g", report.scale, report.rms, report.med)
    return 0


# ---------------------------------------------------------------------------
# lemma1
# ---------------------------------------------------------------------------


def cmd_lemma1(args: argparse.Namespace) -> int:
    try:
        fractions = lemma1_sample(
            args.samples,
            h1_max=args.h1_max,
            h2_max=args.h2_max,
            edge_scale=args.edge_scale,
            seed=args.seed,
        )
    except ValueError as exc:
        logger.error("invalid sampling ranges: %s", exc)
        return EXIT_BAD_INPUT
    payload = {
        "version": RESULT_VERSION,
        "kind": "lemma1",
        "samples": args.samples,
        "h1_max": args.h1_max,
        "h2_max": args.h2_max,
        "edge_scale": args.edge_scale,
        "seed": args.seed,
        "ansatz1_fraction": fractions.ansatz1,
        "ansatz2_fraction": fractions.ansatz2,
    }
    _dump_json(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqnrsfm",
        description="Synthetic-scene generation, convex NRSfM reconstruction, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic scene file")
    gen.add_argument("--mode", choices=("iso", "equi"), required=True)
    gen.add_argument("--ma", type=int, required=True, help="grid points along the first axis")
    gen.add_argument("--mb", type=int, required=True, help="grid points along the second axis")
    gen.add_argument("--frames", type=int, required=True, help="number of images n")
    gen.add_argument("--noise", type=float, default=0.0, help="pixel noise scale x_sigma")
    gen.add_argument("--noise-model", choices=("uniform", "gaussian"), default="uniform")
    gen.add_argument("--chi-e", type=float, default=0.0, help="equiareal perturbation strength")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None, help="scene JSON path (stdout when omitted)")
    gen.set_defaults(func=cmd_generate)

    rec = sub.add_parser("reconstruct", help="solve one program on a scene file")
    rec.add_argument("--method", choices=sorted(METHOD_FLAGS), required=True)
    rec.add_argument("--lambda-i", type=float, default=100.0)
    rec.add_argument("--lambda-e", type=float, default=10.0)
    rec.add_argument("--knn", type=int, default=4)
    rec.add_argument(
        "--complete-missing",
        type=int,
        default=0,
        metavar="S",
        help="pseudo-neighbors per hidden point (0 disables completion)",
    )
    rec.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    rec.add_argument("--in", dest="infile", required=True, help="scene JSON path")
    rec.add_argument("--out", default=None, help="result JSON path (stdout when omitted)")
    rec.add_argument("--cloud-format", choices=("ply", "csv"), default="ply")
    rec.set_defaults(func=cmd_reconstruct)

    ev = sub.add_parser("evaluate", help="compare a result file against ground truth")
    ev.add_argument("--recon", required=True, help="result JSON path")
    ev.add_argument("--gt", required=True, help="scene JSON path with gt_clouds")
    ev.add_argument("--out", default=None, help="metrics JSON path (stdout when omitted)")
    ev.add_argument("--csv", default=None, help="per-frame RMS CSV path")
    ev.set_defaults(func=cmd_evaluate)

    lem = sub.add_parser("lemma1", help="sample area-compensation discriminant fractions")
    lem.add_argument("--samples", type=int, default=100000)
    lem.add_argument("--h1-max", type=float, default=0.1)
    lem.add_argument("--h2-max", type=float, default=0.1)
    lem.add_argument("--edge-scale", type=float, default=0.6)
    lem.add_argument("--seed", type=int, default=0)
    lem.add_argument("--out", default=None, help="JSON path (stdout when omitted)")
    lem.set_defaults(func=cmd_lemma1)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    # bind a handler to the current sys.stderr on every invocation so that
    # embedding callers (and capture fixtures) see the diagnostics
    logger.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
