"""Command-line front end.

    avqoe matrix -o conditions.csv
    avqoe profiles --format json
    avqoe synth --seed 7 --out-dir data/
    avqoe evaluate --data-dir data/ --model both --seed 7 --out-dir results/
    avqoe importance --data-dir data/ --out-dir results/

Exit codes: 0 success, 2 input or validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import traceback
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .dataset import load_dataset
from .domain import (
    builtin_source_profiles,
    conditions_to_csv,
    effective_bandwidth,
    generate_condition_matrix,
)
from .errors import AvqoeError
from .evaluation import CvConfig, ModelSpec, compare_models
from .models import ForestConfig, MlpConfig, save_model, train_forest
from .report import (
    atomic_write_text,
    build_manifest,
    comparison_to_dict,
    dump_json,
    importance_csv,
    scatter_csv,
    summary_csv,
)
from .synth import OracleConfig, write_synthetic_corpus

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    common.add_argument("--out-dir", type=Path, default=None, help="directory for output files")
    common.add_argument(
        "--format", choices=("json", "csv"), default="csv", help="stdout format (default csv)"
    )
    return common


def _add_inputs(p):
    p.add_argument("--data-dir", type=Path, help="directory holding conditions/metadata/ratings.csv")
    p.add_argument("--conditions", type=Path)
    p.add_argument("--metadata", type=Path)
    p.add_argument("--ratings", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avqoe", description="Parametric audiovisual quality (MOS) estimation toolkit."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("matrix", parents=[common], help="write the 144-condition test matrix")
    p.add_argument("-o", "--output", type=Path, help="CSV path (default: <out-dir>/conditions.csv)")

    p = sub.add_parser("profiles", parents=[common], help="list the built-in source profiles")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic rating corpus")
    p.add_argument("--noise", type=float, default=0.35, help="rating noise sd in MOS units")
    p.add_argument("--subjects", type=int, default=24)
    p.add_argument(
        "--metadata-noise", type=float, default=0.0, help="scale of header measurement noise"
    )

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate forest and/or MLP")
    _add_inputs(p)
    p.add_argument("--model", choices=("forest", "mlp", "both"), default="both")
    p.add_argument("--k", type=int, default=10, help="folds per repetition")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--stratify", action="store_true", help="stratify folds by MOS quintile")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--hidden", type=int, default=None, help="hidden units (default: #features)")
    p.add_argument("--clamp", action="store_true", help="clip scatter predictions to [1, 5]")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = sub.add_parser("importance", parents=[common], help="forest importances on all rows")
    _add_inputs(p)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--save-model", action="store_true", help="also write forest.json")
    p.add_argument("--no-figures", action="store_true")
    return parser


def _out_dir(args) -> Path:
    out = args.out_dir or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_paths(args):
    base = args.data_dir
    paths = {}
    for role in ("conditions", "metadata", "ratings"):
        given = getattr(args, role)
        if given is None and base is not None:
            given = base / f"{role}.csv"
        if given is None:
            raise AvqoeError(f"no {role} file given (use --{role} or --data-dir)")
        paths[role] = given
    return paths


def _load(args):
    paths = _input_paths(args)
    return load_dataset(paths["conditions"], paths["metadata"], paths["ratings"])


def _write_manifest(path, command, config, seed, inputs, outputs):
    atomic_write_text(path, dump_json(build_manifest(command, config, seed, inputs, outputs)))


def cmd_matrix(args) -> int:
    matrix = generate_condition_matrix()
    text = conditions_to_csv(matrix)
    output = args.output or (args.out_dir / "conditions.csv" if args.out_dir else None)
    if output is None:
        if args.format == "json":
            sys.stdout.write(dump_json([_condition_dict(c) for c in matrix]))
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(output, text)
    manifest = output.with_name(output.stem + ".manifest.json")
    _write_manifest(manifest, "matrix", {"n_conditions": len(matrix)}, args.seed, {}, [output])
    print(f"wrote {len(matrix)} conditions to {output}", file=sys.stderr)
    return EXIT_OK


def _condition_dict(c):
    return {
        "condition_id": c.condition_id,
        "resolution": c.resolution.value,
        "bitrate_class": c.bitrate_class.value,
        "bandwidth_class": c.bandwidth_class.value,
        "plr_percent": c.plr,
        "jitter_ms": c.jitter_ms,
    }


def cmd_profiles(args) -> int:
    rows = []
    for p in builtin_source_profiles():
        d = asdict(p)
        d["resolution"] = p.resolution.value
        d["bitrate_class"] = p.bitrate_class.value
        d["file_name"] = p.file_name
        d["high_bandwidth_kbps"] = effective_bandwidth(p, "High")
        d["low_bandwidth_kbps"] = effective_bandwidth(p, "Low")
        rows.append(d)
    if args.format == "json":
        text = dump_json(rows)
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if args.output:
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    config = OracleConfig(
        subject_count=args.subjects, rating_noise_sd=args.noise, seed=args.seed
    )
    out = _out_dir(args)
    matrix = generate_condition_matrix()
    paths = write_synthetic_corpus(
        out, matrix, builtin_source_profiles(), config, metadata_noise=args.metadata_noise
    )
    _write_manifest(
        out / "manifest.json",
        "synth",
        {**asdict(config), "metadata_noise": args.metadata_noise},
        args.seed,
        {},
        paths.values(),
    )
    n = len(matrix) * config.subject_count
    print(f"wrote {n} ratings for {len(matrix)} conditions to {out}", file=sys.stderr)
    return EXIT_OK


def _specs(args):
    specs = []
    if args.model in ("forest", "both"):
        specs.append(
            ModelSpec(
                "forest",
                ForestConfig(
                    n_trees=args.trees,
                    max_depth=args.max_depth,
                    features_per_split=args.features_per_split,
                    seed=args.seed,
                ),
            )
        )
    if args.model in ("mlp", "both"):
        specs.append(
            ModelSpec(
                "mlp",
                MlpConfig(
                    hidden_units=args.hidden,
                    learning_rate=args.lr,
                    iterations=args.iterations,
                    seed=args.seed,
                ),
            )
        )
    return specs


def cmd_evaluate(args) -> int:
    dataset = _load(args)
    cv = CvConfig(k=args.k, repetitions=args.repetitions, seed=args.seed, stratify=args.stratify)
    specs = _specs(args)
    comparison = compare_models(dataset, specs, cv)
    out = _out_dir(args)
    doc = comparison_to_dict(comparison, dataset)
    outputs = [
        atomic_write_text(out / "report.json", dump_json(doc)),
        atomic_write_text(out / "scatter.csv", scatter_csv(comparison.reports, args.clamp)),
    ]
    forest = next((r for r in comparison.reports if r.feature_importances), None)
    if forest is not None:
        outputs.append(
            atomic_write_text(out / "importance.csv", importance_csv(forest.feature_importances))
        )
    if not args.no_figures:
        from .plotting import plot_importances, plot_scatter

        for r in comparison.reports:
            pairs = [(a, p) for _, a, p, _ in r.pairs]
            label = "Random forest" if r.kind == "forest" else "Multi-layer perceptron"
            outputs.append(
                plot_scatter(pairs, out / f"scatter_{r.model}.png", label, clamp=args.clamp)
            )
        if forest is not None:
            outputs.append(plot_importances(forest.feature_importances, out / "importance.png"))
    _write_manifest(
        out / "manifest.json",
        "evaluate",
        {"cv": asdict(cv), "models": {s.name: asdict(s.config) for s in specs},
         "clamp": args.clamp},
        args.seed,
        dataset.provenance,
        outputs,
    )
    # stdout is rendered from the same document that went to report.json
    if args.format == "json":
        sys.stdout.write(dump_json({"ranking_by_rmse": doc["ranking_by_rmse"],
                                    "summary": doc["summary"]}))
    else:
        sys.stdout.write(summary_csv(doc["summary"]))
    return EXIT_OK


def cmd_importance(args) -> int:
    dataset = _load(args)
    config = ForestConfig(n_trees=args.trees, seed=args.seed)
    model = train_forest(dataset, config)
    imp = dict(zip(dataset.feature_names, model.feature_importances().tolist()))
    out = _out_dir(args)
    text = importance_csv(imp)
    outputs = [atomic_write_text(out / "importance.csv", text)]
    if args.save_model:
        outputs.append(save_model(model, out / "forest.json"))
    if not args.no_figures:
        from .plotting import plot_importances

        outputs.append(plot_importances(imp, out / "importance.png"))
    _write_manifest(
        out / "manifest.json", "importance", asdict(config), args.seed, dataset.provenance, outputs
    )
    if args.format == "json":
        sys.stdout.write(dump_json(imp))
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "matrix": cmd_matrix,
    "profiles": cmd_profiles,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (AvqoeError, OSError) as exc:
        print(f"avqoe {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"avqoe {args.command}: invalid value: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
