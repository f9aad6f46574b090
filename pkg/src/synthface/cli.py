"""Command-line front-end for the synthesis / reconstruction pipeline.

Subcommands: model-gen, datagen, train, reconstruct, eval, defaults.
Every seeded command is bytewise reproducible; all subcommands exit 0 on
success and nonzero with a one-line diagnostic on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import defaults
from .datagen import (generate_dataset, load_coeff_vector, load_dataset,
                      save_coeff_vector)
from .evaluate import (format_report, landmark_fit, load_landmarks,
                       error_heatmap, optimal_similarity_align, pointwise_error)
from .image_io import read_pgm, write_pgm, write_ppm
from .mesh_io import load_pose, save_off
from .model import (GeometryCoefficients, build_procedural_model,
                    synthesize_geometry)
from .model_io import load_model, save_model
from .reconstruct import (IEFConfig, ief_reconstruct, load_predictor,
                          save_predictor, train_linear_predictor)


def _cmd_model_gen(args) -> int:
    model = build_procedural_model(args.seed, args.n_id, args.n_exp,
                                   args.n_tex, args.grid)
    save_model(model, args.out)
    print(f"wrote {args.out}: N={model.n_vertices} M={model.triangles.shape[0]} "
          f"n_id={model.n_id} n_exp={model.n_exp} n_tex={model.n_tex}")
    return 0


def _cmd_datagen(args) -> int:
    model = load_model(args.model)
    manifest = generate_dataset(args.seed, model, args.count, args.out,
                                width=args.width, height=args.height,
                                workers=args.workers)
    print(f"wrote {manifest.count} samples to {args.out} "
          f"(manifest: {os.path.join(args.out, 'manifest.txt')})")
    return 0


def _cmd_train(args) -> int:
    model = load_model(args.model)
    samples = load_dataset(args.dataset, model)
    h, w = samples[0].face_image.shape
    config = IEFConfig(iterations=args.iterations, width=w, height=h,
                       feature_downsample=args.downsample)
    predictor = train_linear_predictor(samples, model, config,
                                       ridge_lambda=args.ridge)
    save_predictor(args.out, predictor)
    print(f"wrote {args.out}: feature_dim={predictor.feature_dim} "
          f"n_coeffs={predictor.n_coeffs} ridge={args.ridge}")
    return 0


def _cmd_reconstruct(args) -> int:
    model = load_model(args.model)
    predictor = load_predictor(args.predictor)
    image = read_pgm(args.image)
    pose = load_pose(args.pose_file)
    h, w = image.shape
    config = IEFConfig(iterations=args.iterations, width=w, height=h,
                       feature_downsample=args.downsample)
    n_coeffs = model.n_id + model.n_exp
    expected_in = config.feature_dim + n_coeffs
    if predictor.weight.shape != (n_coeffs, expected_in):
        raise ValueError(
            f"predictor dims {predictor.weight.shape} do not match model/config: "
            f"expected ({n_coeffs}, {expected_in})")
    result = ief_reconstruct(image, pose, predictor, model, config)
    os.makedirs(args.out, exist_ok=True)
    save_coeff_vector(os.path.join(args.out, "coefficients.bin"),
                      result.iterates[-1])
    save_off(os.path.join(args.out, "mesh.off"), result.final_mesh)
    shading = np.where(result.final_shading.mask, result.final_shading.image, 0.0)
    write_pgm(os.path.join(args.out, "shading.pgm"), shading)
    print(f"wrote coefficients.bin, mesh.off, shading.pgm to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    pose = load_pose(args.pose_file)
    landmarks = load_landmarks(args.landmarks_file)
    gt = GeometryCoefficients.from_vector(load_coeff_vector(args.gt_coeffs),
                                          model.n_id)
    ief = GeometryCoefficients.from_vector(load_coeff_vector(args.ief_coeffs),
                                           model.n_id)
    baseline = landmark_fit(landmarks, pose, model, args.width, args.height,
                            lambda_reg=args.ridge)

    gt_mesh = synthesize_geometry(model, gt)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for label, coeffs in (("ief", ief), ("landmark", baseline)):
        mesh = synthesize_geometry(model, coeffs)
        _, aligned = optimal_similarity_align(mesh, gt_mesh)
        report = pointwise_error(aligned, gt_mesh)
        rows.append((label, report))
        with open(os.path.join(args.out, f"report_{label}.txt"), "w") as f:
            f.write(format_report(report, label))
        heat = error_heatmap(mesh, report, pose, args.width, args.height)
        write_ppm(os.path.join(args.out, f"heatmap_{label}.ppm"), heat)

    table_path = os.path.join(args.out, "comparison.txt")
    with open(table_path, "w") as f:
        f.write(f"{'method':<12} {'mean':>12} {'median':>12} {'rms':>12}\n")
        for label, report in rows:
            f.write(f"{label:<12} {report.mean:>12.6g} "
                    f"{report.median:>12.6g} {report.rms:>12.6g}\n")
    with open(table_path) as f:
        print(f.read(), end="")
    print(f"wrote reports and heatmaps to {args.out}")
    return 0


def _cmd_defaults(args) -> int:
    print(json.dumps(defaults.default_config(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthface",
        description="Synthetic face data generation, iterative reconstruction "
                    "and evaluation on a linear morphable model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model-gen", help="build a procedural morphable model")
    p.add_argument("--seed", type=int, default=0, help="builder seed (default 0)")
    p.add_argument("--n-id", type=int, default=defaults.N_ID, dest="n_id",
                   help=f"identity basis size (default {defaults.N_ID})")
    p.add_argument("--n-exp", type=int, default=defaults.N_EXP, dest="n_exp",
                   help=f"expression basis size (default {defaults.N_EXP})")
    p.add_argument("--n-tex", type=int, default=defaults.N_TEX, dest="n_tex",
                   help=f"texture basis size (default {defaults.N_TEX})")
    p.add_argument("--grid", type=int, default=defaults.GRID_RESOLUTION,
                   help=f"grid resolution (default {defaults.GRID_RESOLUTION})")
    p.add_argument("--out", required=True, help="output MFM1 model file")
    p.set_defaults(func=_cmd_model_gen)

    p = sub.add_parser("datagen", help="generate a training dataset")
    p.add_argument("--model", required=True, help="MFM1 model file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--count", type=int, required=True, help="number of samples")
    p.add_argument("--width", type=int, default=defaults.IMAGE_WIDTH,
                   help=f"image width (default {defaults.IMAGE_WIDTH})")
    p.add_argument("--height", type=int, default=defaults.IMAGE_HEIGHT,
                   help=f"image height (default {defaults.IMAGE_HEIGHT})")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers; output bytes are identical for any "
                        "worker count (default 1)")
    p.set_defaults(func=_cmd_datagen)

    p = sub.add_parser("train", help="train the linear predictor on a dataset")
    p.add_argument("--model", required=True, help="MFM1 model file")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output PRD1 predictor file")
    p.add_argument("--ridge", type=float, default=defaults.RIDGE_LAMBDA,
                   help=f"ridge strength (default {defaults.RIDGE_LAMBDA})")
    p.add_argument("--iterations", type=int, default=defaults.IEF_ITERATIONS,
                   help=f"loop iterations (default {defaults.IEF_ITERATIONS})")
    p.add_argument("--downsample", type=int, default=defaults.FEATURE_DOWNSAMPLE,
                   help=f"feature pooling factor (default {defaults.FEATURE_DOWNSAMPLE})")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("reconstruct",
                       help="iterative reconstruction of one image")
    p.add_argument("--model", required=True, help="MFM1 model file")
    p.add_argument("--predictor", required=True, help="PRD1 predictor file")
    p.add_argument("--image", required=True, help="input face image (PGM)")
    p.add_argument("--pose-file", required=True, dest="pose_file",
                   help="pose parameter text file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--iterations", type=int, default=defaults.IEF_ITERATIONS,
                   help=f"loop iterations (default {defaults.IEF_ITERATIONS})")
    p.add_argument("--downsample", type=int, default=defaults.FEATURE_DOWNSAMPLE,
                   help=f"feature pooling factor (default {defaults.FEATURE_DOWNSAMPLE})")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("eval",
                       help="compare a reconstruction against ground truth "
                            "and a landmark baseline")
    p.add_argument("--model", required=True, help="MFM1 model file")
    p.add_argument("--gt-coeffs", required=True, dest="gt_coeffs",
                   help="ground-truth coefficient file")
    p.add_argument("--ief-coeffs", required=True, dest="ief_coeffs",
                   help="reconstructed coefficient file")
    p.add_argument("--landmarks-file", required=True, dest="landmarks_file",
                   help="landmark annotation file (index x y per line)")
    p.add_argument("--pose-file", required=True, dest="pose_file",
                   help="pose parameter text file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=defaults.IMAGE_WIDTH,
                   help=f"image width (default {defaults.IMAGE_WIDTH})")
    p.add_argument("--height", type=int, default=defaults.IMAGE_HEIGHT,
                   help=f"image height (default {defaults.IMAGE_HEIGHT})")
    p.add_argument("--ridge", type=float, default=defaults.LAMBDA_LANDMARK,
                   help=f"landmark fit regularizer (default {defaults.LAMBDA_LANDMARK})")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("defaults",
                       help="print the default configuration as JSON")
    p.set_defaults(func=_cmd_defaults)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
