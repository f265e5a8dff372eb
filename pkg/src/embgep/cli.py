"""Command-line surface: stats, split, fit, predict, compare, sensitivity, sweep.

Every command writes its artifacts plus a ``manifest.json`` listing input and
output digests into ``--out``.  With identical seed, config and inputs every
artifact is byte-identical across reruns (the manifest's timestamp field is
the one documented exception).

Exit codes: 0 success, 1 internal error, 2 input/validation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import data, displacement, evolution, karva, kernels, metrics

SYNTH_DEFAULT_N = 85


# ---------------------------------------------------------------------------
# small IO helpers


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(outdir: Path, command: str, args: argparse.Namespace,
                    inputs: list[Path], outputs: list[Path],
                    config_snapshot: dict | None = None) -> None:
    options = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "func"
    }
    manifest = {
        "command": command,
        "options": options,
        "seed": getattr(args, "seed", None),
        "config": config_snapshot,
        "inputs": {str(p): f"sha256:{_sha256(p)}" for p in inputs},
        "outputs": {p.name: f"sha256:{_sha256(p)}" for p in sorted(outputs)},
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    _write_json(outdir / "manifest.json", manifest)


def _load_records(args, outdir: Path, rng_pool: list) -> tuple[list[data.CaseHistory], list[Path], list[Path]]:
    """Records from --input, or a synthetic database written to the out dir.

    Always consumes one reserved stream from ``rng_pool`` so later pops see
    the same streams whichever data source was chosen.
    """
    synth_rng = rng_pool.pop(0)
    if args.input is not None:
        path = Path(args.input)
        return data.load(path), [path], []
    n = args.synth or SYNTH_DEFAULT_N
    records = data.synthesize(data.EMBANKMENT_SUMMARY, n, synth_rng)
    synth_path = outdir / "synthetic_input.csv"
    data.save(records, synth_path)
    return records, [], [synth_path]


def _spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(ss) for ss in np.random.SeedSequence(seed).spawn(count)]


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_nonempty(records) -> None:
    if not records:
        raise data.DatasetError("empty dataset")


def _load_config(args) -> evolution.GepConfig:
    if getattr(args, "config", None):
        config = evolution.read_config_file(args.config)
    else:
        config = evolution.GepConfig()
    config = dataclasses.replace(config, rng_seed=args.seed, num_inputs=3)
    if getattr(args, "max_generations", None) is not None:
        config = dataclasses.replace(config, max_generations=args.max_generations)
    return config


# ---------------------------------------------------------------------------
# commands


def cmd_stats(args) -> int:
    outdir = _outdir(args)
    rngs = _spawn_rngs(args.seed, 1)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)

    summary = data.summarize(records)
    _write_csv(
        outdir / "summary.csv",
        ("parameter", "min", "max", "mean", "sd"),
        [(name, s.minimum, s.maximum, s.mean, s.sd) for name, s in summary.items()],
    )

    mat = data._matrix(records)
    columns = {name: mat[:, j] for j, name in enumerate(data.PARAMETERS)}
    names, corr = metrics.correlation_matrix(columns)
    rows = []
    for i, name in enumerate(names):
        rows.append([name] + [corr[i, j] for j in range(i + 1)] + [None] * (len(names) - i - 1))
    _write_csv(outdir / "correlations.csv", ("parameter",) + names, rows)

    outputs += [outdir / "summary.csv", outdir / "correlations.csv"]
    _write_manifest(outdir, "stats", args, inputs, outputs)
    return 0


def cmd_split(args) -> int:
    outdir = _outdir(args)
    rngs = _spawn_rngs(args.seed, 2)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)

    split = data.split_matched(records, args.fraction, args.trials, rngs.pop(0))
    train, test = data.split_records(records, split)
    data.save(train, outdir / "train.csv")
    data.save(test, outdir / "test.csv")
    _write_json(
        outdir / "split.json",
        {
            "fraction": args.fraction,
            "trials": args.trials,
            "score": split.score,
            "n_train": len(train),
            "n_test": len(test),
            "train_ids": list(split.train_ids),
            "test_ids": list(split.test_ids),
        },
    )
    outputs += [outdir / "train.csv", outdir / "test.csv", outdir / "split.json"]
    _write_manifest(outdir, "split", args, inputs, outputs)
    return 0


def _stage_metrics(stage: str, records, chrom) -> dict:
    X, y = data.regression_arrays(records)
    preds = kernels.evaluate_chromosome_batch(chrom, X)
    finite = np.isfinite(preds)
    used = int(finite.sum())
    if used < 2:
        raise data.DatasetError(f"{stage}: model non-finite on too many rows to score")
    report = metrics.metrics_report(metrics.PredictionSet(y[finite], preds[finite]))
    return {
        "stage": stage,
        "n": len(records),
        "n_used": used,
        "space": "ln_D_m",
        "r_squared": report.r_squared,
        "mae_paper": report.mae_paper,
        "mae_conventional": report.mae_conventional,
        "rmse": report.rmse,
        "scatter_index": report.scatter_index,
        "bias": report.bias,
    }


def cmd_fit(args) -> int:
    outdir = _outdir(args)
    rngs = _spawn_rngs(args.seed, 3)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)
    if args.config:
        inputs.append(Path(args.config))
    config = _load_config(args)

    split = data.split_matched(records, 0.75, args.trials, rngs.pop(0))
    train, test = data.split_records(records, split)
    X, y = data.regression_arrays(train)
    result = evolution.run(config, X, y, rngs.pop(0))

    karva.write_kexpr(result.best, outdir / "best.kexpr")
    _write_csv(
        outdir / "history.csv",
        ("generation", "best_fitness", "mean_fitness"),
        [
            (gen + 1, best, mean)
            for gen, (best, mean) in enumerate(
                zip(result.report.per_generation_best, result.mean_history)
            )
        ],
    )

    stage_rows = [
        _stage_metrics("Training", train, result.best),
        _stage_metrics("Validation", test, result.best),
        _stage_metrics("All data", records, result.best),
    ]
    header = ("stage", "n", "n_used", "space", "r_squared", "mae_paper",
              "mae_conventional", "rmse", "scatter_index", "bias")
    _write_csv(outdir / "metrics.csv", header, [[row[k] for k in header] for row in stage_rows])

    X_all, y_all = data.regression_arrays(records)
    preds_all = kernels.evaluate_chromosome_batch(result.best, X_all)
    finite = np.isfinite(preds_all)
    residual_info = None
    if int(finite.sum()) >= 2:
        summary = metrics.residual_summary(metrics.PredictionSet(y_all[finite], preds_all[finite]))
        _write_csv(
            outdir / "residual_histogram.csv",
            ("bin_low", "bin_high", "count"),
            [
                (summary.bin_edges[i], summary.bin_edges[i + 1], int(summary.counts[i]))
                for i in range(len(summary.counts))
            ],
        )
        residual_info = {
            "mean_abs": summary.mean_abs,
            "sd": summary.sd,
            "marker_low": summary.marker_low,
            "marker_high": summary.marker_high,
        }
    _write_json(
        outdir / "metrics.json",
        {
            "stages": stage_rows,
            "split": {"train_ids": list(split.train_ids), "test_ids": list(split.test_ids),
                      "score": split.score},
            "best_fitness": result.report.fitness,
            "best_rmse": result.report.rmse,
            "generations_run": len(result.report.per_generation_best),
            "residuals_ln_space": residual_info,
        },
    )
    outputs += [outdir / "best.kexpr", outdir / "history.csv",
                outdir / "metrics.csv", outdir / "metrics.json"]
    if residual_info is not None:
        outputs.append(outdir / "residual_histogram.csv")
    _write_manifest(outdir, "fit", args, inputs, outputs, dataclasses.asdict(config))
    return 0


def _predict_row(model_id: str, record: data.CaseHistory, pole_eps: float, ambraseys_cm: bool):
    inp = record.as_model_input()
    verdict = displacement.check_applicability(model_id, inp)
    try:
        pred = displacement.predict(model_id, inp, pole_eps, ambraseys_cm)
        return pred, verdict, "ok"
    except displacement.PoleError:
        return None, verdict, "pole"
    except displacement.MissingInputError:
        return None, verdict, "missing_input"
    except displacement.ModelDomainError:
        return None, verdict, "domain_error"


def cmd_predict(args) -> int:
    outdir = _outdir(args)
    if args.model not in displacement.MODEL_IDS:
        raise ValueError(
            f"unknown model id {args.model!r}; known: {', '.join(displacement.MODEL_IDS)}"
        )
    rngs = _spawn_rngs(args.seed, 1)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)

    rows = []
    for record in records:
        pred, verdict, status = _predict_row(args.model, record, args.pole_eps, args.ambraseys_cm)
        if pred is None:
            rows.append((record.id, args.model, None, None, None, verdict.ok, status))
        else:
            rows.append(
                (record.id, args.model, pred.value, pred.scale, pred.d_meters,
                 pred.in_range, status)
            )
    _write_csv(
        outdir / "predictions.csv",
        ("id", "model", "value", "scale", "D_m", "in_range", "status"),
        rows,
    )
    outputs.append(outdir / "predictions.csv")
    _write_manifest(outdir, "predict", args, inputs, outputs)
    return 0


def cmd_compare(args) -> int:
    outdir = _outdir(args)
    rngs = _spawn_rngs(args.seed, 1)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)

    errors_by_model: dict[str, np.ndarray] = {}
    for model_id in displacement.MODEL_IDS:
        rows = []
        ok_errors = []
        for record in records:
            inp = record.as_model_input()
            if not displacement.check_applicability(model_id, inp).ok:
                continue  # comparison is restricted to each model's applied range
            pred, _, status = _predict_row(model_id, record, args.pole_eps, args.ambraseys_cm)
            if status != "ok":
                rows.append((record.id, record.d, None, None, status))
                continue
            if record.d == 0.0:
                rows.append((record.id, record.d, pred.d_meters, None, "zero_measured"))
                continue
            err = metrics.relative_error(record.d, pred.d_meters)
            ok_errors.append(err)
            rows.append((record.id, record.d, pred.d_meters, err, "ok"))
        path = outdir / f"relative_error_{model_id}.csv"
        _write_csv(
            path,
            ("id", "D_measured_m", "D_predicted_m", "relative_error_pct", "status"),
            rows,
        )
        outputs.append(path)
        if ok_errors:
            errors_by_model[model_id] = np.asarray(ok_errors)

    if errors_by_model:
        pooled = np.concatenate(list(errors_by_model.values()))
        grid = np.linspace(float(pooled.min()), float(pooled.max()), 101)
        fractions = {
            model_id: metrics.cumulative_frequency(errs, grid)
            for model_id, errs in errors_by_model.items()
        }
        cum_rows = []
        for i, threshold in enumerate(grid):
            row = [threshold]
            for model_id in displacement.MODEL_IDS:
                row.append(fractions[model_id][i] if model_id in fractions else None)
            cum_rows.append(row)
    else:
        cum_rows = []
    _write_csv(
        outdir / "cumulative_frequency.csv",
        ("threshold_pct",) + displacement.MODEL_IDS,
        cum_rows,
    )
    outputs.append(outdir / "cumulative_frequency.csv")
    _write_manifest(outdir, "compare", args, inputs, outputs)
    return 0


def cmd_sensitivity(args) -> int:
    outdir = _outdir(args)
    grid = np.linspace(args.start, args.stop, args.steps)
    if args.family:
        levels = [float(v) for v in args.levels.split(",")] if args.levels else []
        if not levels:
            raise ValueError("family mode needs --levels, e.g. --levels 0.2,0.5,1.0")
        rows = []
        for level in levels:
            points = displacement.sensitivity_profile(
                "Mw", grid, {args.family: level}, args.pole_eps
            )
            for p in points:
                rows.append((args.family, level, p.value, p.ln_d, "pole" if p.pole else "ok"))
        header = ("family_parameter", "level", "Mw", "ln_D_m", "status")
    else:
        points = displacement.sensitivity_profile(args.param, grid, None, args.pole_eps)
        rows = [(args.param, p.value, p.ln_d, "pole" if p.pole else "ok") for p in points]
        header = ("parameter", "value", "ln_D_m", "status")
    _write_csv(outdir / "sensitivity.csv", header, rows)
    _write_manifest(outdir, "sensitivity", args, [], [outdir / "sensitivity.csv"])
    return 0


def _parse_grid(text: str) -> list[int]:
    text = text.strip()
    if ":" in text:
        lo, _, hi = text.partition(":")
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ValueError(f"bad grid {text!r}: end before start")
        return list(range(lo_i, hi_i + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def cmd_sweep(args) -> int:
    outdir = _outdir(args)
    rngs = _spawn_rngs(args.seed, 1)
    records, inputs, outputs = _load_records(args, outdir, rngs)
    _require_nonempty(records)
    if args.config:
        inputs.append(Path(args.config))
    config = _load_config(args)
    X, y = data.regression_arrays(records)

    gene_grid = _parse_grid(args.genes)
    head_grid = _parse_grid(args.heads)
    cells = evolution.sweep(X, y, config, gene_grid, head_grid)
    _write_csv(
        outdir / "sweep.csv",
        ("genes", "head", "fitness"),
        [(c.num_genes, c.head_size, c.fitness) for c in cells],
    )
    best = max(cells, key=lambda c: c.fitness)
    _write_json(
        outdir / "sweep_argmax.json",
        {"genes": best.num_genes, "head": best.head_size, "fitness": best.fitness},
    )
    outputs += [outdir / "sweep.csv", outdir / "sweep_argmax.json"]
    _write_manifest(outdir, "sweep", args, inputs, outputs, dataclasses.asdict(config))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser, with_data: bool = True) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
    sub.add_argument("--out", default=".", help="output directory (default .)")
    if with_data:
        group = sub.add_mutually_exclusive_group(required=True)
        group.add_argument("--input", help="case-history CSV")
        group.add_argument(
            "--synth",
            type=int,
            nargs="?",
            const=SYNTH_DEFAULT_N,
            help=f"generate a synthetic database of N records (default {SYNTH_DEFAULT_N})",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embgep",
        description="GEP engine and displacement models for earth embankments under earthquakes",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("stats", help="summary statistics and correlation table")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("split", help="statistically matched train/test split")
    _add_common(p)
    p.add_argument("--fraction", type=float, default=0.75)
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_split)

    p = subs.add_parser("fit", help="train a GEP model on ln D targets")
    _add_common(p)
    p.add_argument("--config", help="evolution parameter file")
    p.add_argument("--trials", type=int, default=1000, help="matched-split trials")
    p.add_argument("--max-generations", type=int, default=None,
                   help="override the config's generation budget")
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("predict", help="run one registered relationship over a dataset")
    _add_common(p)
    p.add_argument("--model", required=True, help=f"one of: {', '.join(displacement.MODEL_IDS)}")
    p.add_argument("--pole-eps", type=float, default=displacement.DEFAULT_POLE_EPS)
    p.add_argument("--ambraseys-cm", action="store_true",
                   help="treat the Ambraseys-Menu value as log10 of centimeters")
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("compare", help="relative errors per relationship, applied ranges only")
    _add_common(p)
    p.add_argument("--pole-eps", type=float, default=displacement.DEFAULT_POLE_EPS)
    p.add_argument("--ambraseys-cm", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("sensitivity", help="ln D curves from the gep relationship")
    _add_common(p, with_data=False)
    p.add_argument("--param", choices=displacement.SENSITIVITY_PARAMS, default="Mw")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--family", choices=("ay_ratio", "period_ratio"),
                   help="vary Mw at fixed levels of this parameter")
    p.add_argument("--levels", help="comma-separated family levels")
    p.add_argument("--pole-eps", type=float, default=displacement.DEFAULT_POLE_EPS)
    p.set_defaults(func=cmd_sensitivity)

    p = subs.add_parser("sweep", help="fitness surface over gene count and head size")
    _add_common(p)
    p.add_argument("--genes", default="1:6", help="grid, e.g. 1:6 or 1,2,4")
    p.add_argument("--heads", default="4:12", help="grid, e.g. 4:12 or 5,7,9")
    p.add_argument("--config", help="evolution parameter file")
    p.add_argument("--max-generations", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
