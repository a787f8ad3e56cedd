"""Command-line pipeline: synth, train, evaluate, length-eval, optimize,
predict, serve. Every output embeds the seed and a config hash so reruns
are byte-reproducible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .cohort import (
    OutcomeLabel,
    dermbio_like_spec,
    load_cohort,
    save_cohort,
    spec_from_dict,
    spec_to_dict,
    synthesize_cohort,
)
from .errors import DrugsurvError, LengthMismatch
from .evaluate import (
    auc_table_csv,
    bland_altman_svg,
    cross_validate,
    cross_validate_length,
    roc_curves,
    roc_svg,
)
from .learn import (
    CLASS_NAMES,
    FORMAT_VERSION,
    ModelConfig,
    config_hash,
    fit_model,
    load_model,
    predict,
    save_model,
)
from .prescribe import optimize_profile
from .preprocess import derive_schema, encode

CLASSIFIER_KINDS = ("glm", "logreg", "tree", "forest", "gbt")


def _stamp(seed: int, chash: str) -> str:
    return f"seed={seed} config_hash={chash} format_version={FORMAT_VERSION}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _csv_with_stamp(body: str, seed: int, chash: str) -> str:
    return f"# {_stamp(seed, chash)}\n" + body


def _svg_with_stamp(body: str, seed: int, chash: str) -> str:
    lines = body.split("\n", 1)
    return lines[0] + f"\n<!-- {_stamp(seed, chash)} -->\n" + lines[1]


def _hash_dict(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _model_config(args: argparse.Namespace, kind: str) -> ModelConfig:
    return ModelConfig(
        kind=kind,
        ridge_lambda=args.ridge_lambda,
        irls_max_iterations=args.max_iterations,
        irls_tolerance=args.tolerance,
        tree_max_depth=args.tree_depth,
        tree_min_leaf=args.min_leaf,
        tree_min_gain=args.min_gain,
        forest_n_trees=args.trees,
        forest_feature_count=args.feature_count,
        forest_bootstrap=not args.no_bootstrap,
        gbt_rounds=args.rounds,
        gbt_shrinkage=args.shrinkage,
        gbt_depth=args.gbt_depth,
        seed=args.seed,
    )


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ridge-lambda", type=float, default=1e-4)
    parser.add_argument("--max-iterations", type=int, default=100)
    parser.add_argument("--tolerance", type=float, default=1e-8)
    parser.add_argument("--tree-depth", type=int, default=5)
    parser.add_argument("--min-leaf", type=int, default=10)
    parser.add_argument("--min-gain", type=float, default=1e-7)
    parser.add_argument("--trees", type=int, default=200)
    parser.add_argument("--feature-count", type=int, default=None)
    parser.add_argument("--no-bootstrap", action="store_true")
    parser.add_argument("--rounds", type=int, default=200)
    parser.add_argument("--shrinkage", type=float, default=0.1)
    parser.add_argument("--gbt-depth", type=int, default=3)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
        if args.n is not None:
            data["n"] = args.n
        if args.seed is not None:
            data["seed"] = args.seed
        spec = spec_from_dict(data)
    else:
        spec = dermbio_like_spec(n=args.n if args.n is not None else 681,
                                 seed=args.seed if args.seed is not None else 42)
    records = synthesize_cohort(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_cohort(records, out)
    meta = {"seed": spec.seed, "n": spec.n,
            "spec_hash": _hash_dict(spec_to_dict(spec)),
            "format_version": FORMAT_VERSION}
    _write(out.with_suffix(out.suffix + ".meta.json"),
           json.dumps(meta, indent=2) + "\n")
    print(f"wrote {out} ({len(records)} records)")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    records = load_cohort(args.cohort)
    config = _model_config(args, args.model)
    schema = derive_schema(records, args.mode)
    matrix = encode(records, schema)
    artifact = fit_model(matrix, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(artifact, out)
    print(f"wrote {out} (kind={artifact.kind}, fingerprint={artifact.schema_fingerprint})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = load_cohort(args.cohort)
    config = _model_config(args, args.model)
    report = cross_validate(records, config, mode=args.mode, k=args.k, seed=args.seed)
    chash = config_hash(config)
    out_dir = Path(args.out_dir)
    _write(out_dir / "cv_report.csv",
           _csv_with_stamp(report.to_csv(), args.seed, chash))
    _write(out_dir / "confusion.csv",
           _csv_with_stamp(report.confusion.to_csv(), args.seed, chash))
    curves = roc_curves(report.pooled_labels, report.pooled_probabilities)
    _write(out_dir / "auc.csv", _csv_with_stamp(auc_table_csv(curves), args.seed, chash))
    _write(out_dir / "roc.svg", _svg_with_stamp(roc_svg(curves), args.seed, chash))
    print(f"{config.kind}: mean accuracy {report.mean_accuracy:.4f} "
          f"(sd {report.sd_accuracy:.4f}, micro {report.micro_accuracy:.4f}), "
          f"{report.seconds:.3f}s")
    return 0


def cmd_length_eval(args: argparse.Namespace) -> int:
    records = load_cohort(args.cohort)
    config = _model_config(args, "length_glm")
    report, seconds = cross_validate_length(
        records, config, mode=args.mode, k=args.k, seed=args.seed)
    chash = config_hash(config)
    out_dir = Path(args.out_dir)
    _write(out_dir / "agreement.csv",
           _csv_with_stamp(report.to_csv(), args.seed, chash))
    _write(out_dir / "bland_altman.svg",
           _svg_with_stamp(bland_altman_svg(report), args.seed, chash))
    r_text = "undefined" if report.pearson_r is None else f"{report.pearson_r:.4f}"
    print(f"length_glm: MAE {report.mae:.4f} months, r {r_text}, {seconds:.3f}s")
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    artifact = load_model(args.model)
    result = optimize_profile(
        artifact,
        target_class=args.target,
        min_probability=args.min_probability,
        points=args.points)
    payload = {"format_version": FORMAT_VERSION, **result.to_json_dict()}
    _write(Path(args.out), json.dumps(payload, indent=2) + "\n")
    status = "reachable" if result.target_reachable else "unreachable"
    print(f"wrote {args.out} (target {status}, "
          f"{len(result.constraints)} constraints)")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    artifact = load_model(args.model)
    records = load_cohort(args.cohort, require_outcome=False)
    if len(records) != 1:
        raise LengthMismatch(f"predict expects exactly one data row, got {len(records)}")
    prediction = predict(artifact, encode(records, artifact.schema))
    payload = {
        "format_version": FORMAT_VERSION,
        "probabilities": {name: float(p)
                          for name, p in zip(CLASS_NAMES, prediction.probabilities[0])},
        "predicted_class": prediction.labels[0],
    }
    if args.length_model:
        length_artifact = load_model(args.length_model)
        months = predict(length_artifact, encode(records, length_artifact.schema))
        payload["predicted_length_months"] = float(months[0])
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import run_service

    run_service(args.model, args.length_model, host=args.host, port=args.port,
                static_dir=args.static)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drugsurv",
        description="Biologic-therapy discontinuation modeling pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort CSV")
    p.add_argument("--spec", help="cohort spec JSON (full fields or preset)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit one model and save it as JSON")
    p.add_argument("--cohort", required=True)
    p.add_argument("--model", required=True, choices=CLASSIFIER_KINDS + ("length_glm",))
    p.add_argument("--mode", choices=("baseline", "retrospective"), default="baseline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="k-fold CV: report CSVs and ROC SVG")
    p.add_argument("--cohort", required=True)
    p.add_argument("--model", required=True, choices=CLASSIFIER_KINDS)
    p.add_argument("--mode", choices=("baseline", "retrospective"),
                   default="retrospective")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("length-eval", help="k-fold CV of the length regressor")
    p.add_argument("--cohort", required=True)
    p.add_argument("--mode", choices=("baseline", "retrospective"), default="baseline")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_length_eval)

    p = sub.add_parser("optimize", help="search inputs for a target outcome")
    p.add_argument("--model", required=True)
    p.add_argument("--target", default=OutcomeLabel.CONTINUE.value,
                   choices=[label.value for label in OutcomeLabel])
    p.add_argument("--min-probability", type=float, default=0.9)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("predict", help="probabilities for one CSV row")
    p.add_argument("--model", required=True)
    p.add_argument("--length-model", default=None)
    p.add_argument("--cohort", required=True, help="CSV with exactly one data row")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP prediction service")
    p.add_argument("--model", required=True)
    p.add_argument("--length-model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None, help="directory of UI assets to serve")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DrugsurvError as err:
        message = " ".join(str(err).split())
        print(f"error: {err.error_name}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
