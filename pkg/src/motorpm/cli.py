"""Command line entry point.

    motorpm generate  --n 1050 --seed 42 --out motors.csv
    motorpm benchmark motors.csv --seed 42 --test-fraction 0.2 --format text
    motorpm train     motors.csv --model CAT --out cat.mpm
    motorpm diagnose  cat.mpm --row "44,280,280,280,1.4,1.4,1.4,Normal"
    motorpm metrics   predictions.csv

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from motorpm import metrics as M
from motorpm.data import (
    ConditionLabel,
    MotorReading,
    OpenCircuit,
    ParseError,
    Sound,
    parse_csv,
    parse_row,
    serialize_csv,
)
from motorpm.harness import (
    DEFAULT_CONFIGS,
    ArchiveError,
    ModelError,
    diagnose,
    format_confusion,
    format_metric_block,
    load_archive,
    model_from_archive,
    parse_config,
    pct,
    render_report,
    run_benchmark,
    save_model,
    train_model,
)
from motorpm.synth import GeneratorConfig, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_dataset(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh)


def _load_configs(path: str | None):
    if not path:
        return DEFAULT_CONFIGS
    try:
        return parse_config(Path(path).read_text(encoding="utf-8"))
    except (ValueError, KeyError) as e:
        raise UsageError(f"config {path}: {e}") from e


def cmd_generate(a):
    mix = tuple(float(v) for v in a.mix.split(","))
    try:
        cfg = GeneratorConfig(n=a.n, seed=a.seed, class_mix=mix, label_noise=a.noise)
    except ValueError as e:
        raise UsageError(str(e)) from e
    _emit(serialize_csv(generate(cfg)), a.out)


def cmd_benchmark(a):
    data = _read_dataset(a.data)
    configs = _load_configs(a.config)
    report = run_benchmark(data, a.seed, a.test_fraction, configs)
    _emit(render_report(report, a.format), a.out)


def cmd_train(a):
    data = _read_dataset(a.data)
    configs = _load_configs(a.config)
    try:
        model = train_model(a.model, data, configs)
    except KeyError as e:
        raise UsageError(str(e)) from e
    save_model(model, a.out)
    print(f"saved {model.name} to {a.out}", file=sys.stderr)


def _reading_from_flags(a) -> MotorReading:
    if a.row:
        return parse_row(a.row)
    if a.tep is None or a.ci is None or a.cr is None:
        raise UsageError("diagnose needs --row or all of --tep, --ci, --cr")
    cr = tuple(OpenCircuit.OF if v.lower() == "of" else float(v) for v in a.cr)
    return MotorReading(a.tep, tuple(a.ci), cr, Sound.parse(a.sound))


def cmd_diagnose(a):
    model = model_from_archive(load_archive(a.archive))
    reading = _reading_from_flags(a)
    res = diagnose(model, reading)
    if a.format == "json":
        _emit(json.dumps(res, indent=2, sort_keys=True) + "\n", a.out)
    else:
        probs = " ".join(f"{k}={v:.4f}" for k, v in res["probabilities"].items())
        _emit(f"{res['label']} ({res['condition']})  {probs}\n", a.out)


def _read_predictions(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip().lower() for h in rows[0]] != ["actual", "predicted"]:
        raise ParseError(0, "*", "prediction CSV header must be actual,predicted")
    actual, predicted = [], []
    for i, r in enumerate(rows[1:], start=1):
        if not r:
            continue
        if len(r) != 2:
            raise ParseError(i, "*", f"expected 2 columns, got {len(r)}")
        for col, val, dest in (("actual", r[0], actual), ("predicted", r[1], predicted)):
            try:
                dest.append(ConditionLabel.parse(val))
            except ValueError as e:
                raise ParseError(i, col, str(e)) from None
    return actual, predicted


def cmd_metrics(a):
    actual, predicted = _read_predictions(a.predictions)
    cm = M.confusion_matrix(actual, predicted)
    rep = M.metric_report(cm)
    if a.format == "json":
        doc = {"confusion_matrix": cm.tolist(), "metrics": rep.as_dict(),
               "metrics_pct": {k: float(pct(v)) for k, v in rep.as_dict().items()}}
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", a.out)
    else:
        _emit(format_confusion(cm) + "\n" + format_metric_block(rep), a.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="motorpm", description="Electric-motor condition classification")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic labeled dataset as CSV")
    g.add_argument("--n", type=int, default=1050)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--mix", default="0.36,0.34,0.30", help="class mix H,B,PM")
    g.add_argument("--noise", type=float, default=0.0, help="label noise fraction")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("benchmark", help="train and evaluate all eleven models")
    b.add_argument("data")
    b.add_argument("--seed", type=int, default=42, help="split seed")
    b.add_argument("--test-fraction", type=float, default=0.2)
    b.add_argument("--config")
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.add_argument("--out")
    b.set_defaults(func=cmd_benchmark)

    t = sub.add_parser("train", help="fit one model on a CSV and save an archive")
    t.add_argument("data")
    t.add_argument("--model", required=True)
    t.add_argument("--config")
    t.add_argument("--seed", type=int, default=42, help="unused; models carry their own seeds")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("diagnose", help="classify one reading with a saved model")
    d.add_argument("archive")
    d.add_argument("--row", help="CSV row TEP,CI-T1,CI-T2,CI-T3,CR1,CR2,CR3,SOUND[,Label]")
    d.add_argument("--tep", type=float)
    d.add_argument("--ci", type=float, nargs=3)
    d.add_argument("--cr", nargs=3, help="ohms or 'of'")
    d.add_argument("--sound", default="Normal")
    d.add_argument("--format", choices=("text", "json"), default="text")
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)

    m = sub.add_parser("metrics", help="confusion matrix and macro metrics from predictions")
    m.add_argument("predictions", help="CSV with header actual,predicted")
    m.add_argument("--format", choices=("text", "json"), default="text")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ArchiveError, ModelError) as e:
        print(f"model error: {e}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
