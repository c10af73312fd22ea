"""Command-line front end: ``emulate``, ``fit``, ``sweep``, ``plot``.

Exit codes: 0 success, 1 validation/identification failure (including usage
errors), 2 I/O failure.  Outputs of a command are staged in memory and only
written (temp file + rename) once the whole command has succeeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .emulator import EmulationScenario, generate
from .errors import IdentificationError, ValidationError
from .estimation import ModelOrder
from .metrics import confidence_band
from .order_search import SweepConfig, evaluate_order, format_table, sweep
from .preprocess import PreprocessConfig, run_chain
from .timeseries import CsvConfig, format_float, load_csv

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Outputs:
    """Files staged for an all-or-nothing write."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[Path, str] = {}

    def path(self, name) -> Path:
        p = Path(name)
        return p if p.is_absolute() or p.parent != Path(".") else self.out_dir / p

    def add(self, name, text: str) -> Path:
        p = self.path(name)
        self.files[p] = text
        return p

    def add_json(self, name, obj) -> Path:
        return self.add(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def add_manifest(self, name, build) -> Path:
        """Stage ``build()``'s JSON under ``name``; the manifest lists itself among the outputs."""
        p = self.add(name, "")
        self.files[p] = json.dumps(build(), indent=2, sort_keys=True) + "\n"
        return p

    def commit(self):
        staged = []
        try:
            for p, text in self.files.items():
                p.parent.mkdir(parents=True, exist_ok=True)
                tmp = p.with_name(p.name + ".tmp")
                with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
                staged.append((tmp, p))
        except OSError:
            for tmp, _ in staged:
                tmp.unlink(missing_ok=True)
            raise
        for tmp, p in staged:
            os.replace(tmp, p)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from None


def _csv_text(header, columns) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _manifest(command, inputs, config, seed, outputs: Outputs, started) -> dict:
    names = sorted(str(p) for p in outputs.files)
    return {
        "command": command,
        "tool_version": __version__,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "config": config,
        "seed": seed,
        "outputs": names,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }


def _log(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_emulate(args) -> int:
    started = time.perf_counter()
    raw = _read_json(args.scenario)
    if not isinstance(raw, dict):
        raise ValidationError("scenario JSON must be an object")
    if args.seed is not None:
        raw = dict(raw, seed=args.seed)
    scenario = EmulationScenario.from_dict(raw)
    pair = generate(scenario)
    out = Outputs(Path(args.out_dir))
    csv_path = out.add(args.out, _csv_text(["time", "u", "y"], [pair.time, pair.u.samples, pair.y.samples]))
    out.add_manifest(csv_path.with_suffix(".manifest.json"), lambda: _manifest(
        "emulate", {"scenario": args.scenario}, scenario.to_dict(), scenario.seed, out, started))
    out.commit()
    _log(args, f"wrote {len(pair)} samples to {csv_path}")
    return EXIT_OK


PREPROCESS_FLAGS = ("median_window", "rms_window", "detrend", "demean", "split_fraction")


def _load_preprocess(args):
    """JSON file (if any) overlaid with the individual flags that were given."""
    base = {} if args.preprocess is None else _read_json(args.preprocess)
    if not isinstance(base, dict):
        raise ValidationError("preprocess JSON must be an object")
    base = PreprocessConfig.from_dict(base).to_dict()
    base.update({k: getattr(args, k) for k in PREPROCESS_FLAGS if getattr(args, k) is not None})
    return PreprocessConfig.from_dict(base)


def _load_data(args):
    return load_csv(args.data, CsvConfig(ts=args.ts))


def cmd_fit(args) -> int:
    started = time.perf_counter()
    order = ModelOrder(args.order[0], args.order[1])
    pre = _load_preprocess(args)
    seed = 0 if args.seed is None else args.seed
    train, test = run_chain(_load_data(args), pre)
    report = evaluate_order(train, test, order)
    if not report.ok:
        hint = " (input insufficiently exciting)" if report.error.startswith("RankDeficient") else ""
        raise IdentificationError(f"fit of order {order} failed: {report.error}{hint}")

    model = report.arx
    k0 = model.lag_span
    y_init = test.y.samples[:k0]
    simulated = report.simulated(test)
    band = confidence_band(model, test.u, y_init, level=args.level, draws=args.draws, seed=seed)

    out = Outputs(Path(args.out_dir))
    out.add_json(args.model_out, model.to_dict())
    out.add_json(args.tf_out, report.continuous.to_dict())
    out.add_json(args.report_out, report.to_dict())
    out.add(args.fit_csv, _csv_text(
        ["time", "measured", "simulated", "ci_lower", "ci_upper"],
        [test.time, test.y.samples, simulated.samples, band.lower.samples, band.upper.samples]))
    config = {"preprocess": pre.to_dict(), "order": [order.n, order.m], "level": args.level,
              "draws": args.draws, "ts": args.ts}
    out.add_manifest("fit.manifest.json", lambda: _manifest(
        "fit", {"data": args.data, "preprocess": args.preprocess}, config, seed, out, started))
    out.commit()
    _log(args, f"{order}: {report.continuous}  test fit {report.test_fit.fit_percent:.2f}%")
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    pre = _load_preprocess(args)
    cfg = SweepConfig() if args.sweep is None else SweepConfig.from_dict(_read_json(args.sweep))
    train, test = run_chain(_load_data(args), pre)
    reports = sweep(train, test, cfg)

    out = Outputs(Path(args.out_dir))
    for r in reports:
        out.add_json(f"report_n{r.order.n}_m{r.order.m}.json", r.to_dict())
    rows = []
    for rank, r in enumerate(reports, start=1):
        row = {"rank": rank, "model_order": {"n": r.order.n, "m": r.order.m}, "error": r.error}
        if r.ok:
            row.update(model_coefficients=r.continuous.to_dict(), fit_to_training_data=r.train_fit.fit_percent,
                       fit_to_test_data=r.test_fit.fit_percent, fpe=r.fpe.fpe)
        rows.append(row)
    out.add_json("summary.json", {"selection": cfg.selection, "rows": rows})
    out.add("summary.txt", format_table(reports))
    config = {"preprocess": pre.to_dict(), "sweep": cfg.to_dict(), "ts": args.ts}
    out.add_manifest("sweep.manifest.json", lambda: _manifest(
        "sweep", {"data": args.data, "preprocess": args.preprocess, "sweep": args.sweep},
        config, args.seed, out, started))
    out.commit()
    _log(args, format_table(reports))
    return EXIT_OK


def _read_fit_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 3:
        raise ValidationError(f"{path}: fit CSV needs a header and at least 2 rows")
    header = rows[0]
    need = ["time", "measured", "simulated", "ci_lower", "ci_upper"]
    missing = [c for c in need if c not in header]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")
    try:
        data = np.array([[float(r[header.index(c)]) for c in need] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return dict(zip(need, data.T))


def _ticks(lo, hi, count=5):
    return np.linspace(lo, hi, count)


def render_svg(cols: dict, width=800, height=420) -> str:
    """Measured vs simulated output with a dotted confidence band."""
    t = cols["time"]
    series = [("ci_lower", "#888888", "4,3"), ("ci_upper", "#888888", "4,3"),
              ("measured", "#1f77b4", None), ("simulated", "#d62728", None)]
    ys = np.concatenate([cols[k] for k, _, _ in series])
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    t_lo, t_hi = float(t.min()), float(t.max())
    left, right, top, bottom = 80, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - t_lo) / (t_hi - t_lo) * pw

    def py(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>',
    ]
    for v in _ticks(t_lo, t_hi):
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{v:.4g}</text>')
    for v in _ticks(y_lo, y_hi):
        y = py(v)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">Time (s)</text>')
    out.append(f'<text transform="translate(16,{top + ph / 2}) rotate(-90)" text-anchor="middle">'
               f'Current deviation (A)</text>')
    for key, colour, dash in series:
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t, cols[key]))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2"{extra} points="{pts}"/>')
    legend = [("measured", "#1f77b4", None), ("simulated", "#d62728", None), ("95% band", "#888888", "4,3")]
    for i, (name, colour, dash) in enumerate(legend):
        x = left + 10 + 120 * i
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{x}" y1="{top - 12}" x2="{x + 24}" y2="{top - 12}" stroke="{colour}"{extra}/>')
        out.append(f'<text x="{x + 30}" y="{top - 8}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args) -> int:
    started = time.perf_counter()
    cols = _read_fit_csv(args.fit_csv)
    out = Outputs(Path(args.out_dir))
    svg = out.add(args.out, render_svg(cols))
    out.add_manifest(svg.with_name(svg.name + ".manifest.json"), lambda: _manifest(
        "plot", {"fit_csv": args.fit_csv}, {}, args.seed, out, started))
    out.commit()
    _log(args, f"wrote {out.path(args.out)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, suppress):
        # subcommands repeat the flags with suppressed defaults so they do not
        # clobber values given before the subcommand name
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--seed", type=int, default=d(None), help="override / set the random seed")
        parser.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress messages")
        parser.add_argument("--out-dir", default=d("."), help="directory for relative output paths")
        return parser

    common = global_flags(_Parser(add_help=False), suppress=True)
    p = global_flags(_Parser(prog="gridsysid", description=__doc__.splitlines()[0]), suppress=False)
    p.add_argument("--version", action="version", version=f"gridsysid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("emulate", parents=[common], help="generate a synthetic experiment CSV")
    e.add_argument("scenario", help="scenario JSON")
    e.add_argument("--out", default="data.csv", help="output CSV (default data.csv)")
    e.set_defaults(func=cmd_emulate)

    def data_args(sp):
        sp.add_argument("data", help="CSV with time,u,y columns")
        sp.add_argument("--preprocess", default=None, help="PreprocessConfig JSON")
        sp.add_argument("--ts", type=float, default=None, help="sampling period if the CSV has no time column")
        g = sp.add_argument_group("preprocessing (overrides --preprocess)")
        g.add_argument("--median-window", type=int, default=None)
        g.add_argument("--rms-window", type=int, default=None)
        g.add_argument("--detrend", action=argparse.BooleanOptionalAction, default=None)
        g.add_argument("--demean", action=argparse.BooleanOptionalAction, default=None)
        g.add_argument("--split-fraction", type=float, default=None)

    f = sub.add_parser("fit", parents=[common], help="fit one model order and validate it")
    data_args(f)
    f.add_argument("--order", nargs=2, type=int, required=True, metavar=("N", "M"),
                   help="poles and zeros of the continuous model")
    f.add_argument("--model-out", default="model.json")
    f.add_argument("--tf-out", default="tf.json")
    f.add_argument("--report-out", default="report.json")
    f.add_argument("--fit-csv", default="fit.csv")
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--draws", type=int, default=500)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", parents=[common], help="fit and rank a grid of orders")
    data_args(s)
    s.add_argument("--sweep", default=None, help="SweepConfig JSON")
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", parents=[common], help="SVG of measured vs simulated output")
    pl.add_argument("fit_csv")
    pl.add_argument("--out", default="fit.svg")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except OSError as exc:
        print(f"gridsysid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IdentificationError, ValueError) as exc:
        print(f"gridsysid: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
