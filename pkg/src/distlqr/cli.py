"""Command line interface.

    distlqr <analyze|pdf|logconcavity|sample|decay> [--config FILE] [--preset NAME]
            [--out DIR] [--seed U64] [--threads K]

Every output file starts with an effective-config header block so results
carry the exact parameters that produced them. Exit codes: 0 success,
2 config/schema error, 3 numerical error, 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import PRESETS, RunConfig, resolve_config
from .errors import ConfigError, DistLQRError, NumericalError, SeriesUnavailable

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("distlqr")


def fmt6(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(fmt6(v) for v in value)
    return f"{float(value):.6g}"


def header_lines(cfg: RunConfig, command: str, meta: dict | None = None) -> list[str]:
    lines = [f"# distlqr {command}", f"# effective_config: {cfg.effective_json()}"]
    for key, val in (meta or {}).items():
        lines.append(f"# {key}: {json.dumps(val)}")
    return lines


def render_csv(columns: list[str], rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt6(row[c]) if c in row else "" for c in columns])
    return buf.getvalue()


def dump_json(cfg: RunConfig, command: str, payload: dict) -> str:
    doc = {"command": command, "effective_config": cfg.effective, **payload}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


ANALYZE_COLUMNS = ["N", "phi_max", "eig_min", "eig_max", "lb_norm_p", "ub_norm_p",
                   "assumption_holds", "positive_definite", "lambda_bar", "lb_pmin"]


def cmd_analyze(cfg: RunConfig, args) -> int:
    rows = experiments.analyze(cfg)
    columns = ANALYZE_COLUMNS + (["deltas"] if "deltas" in rows[0] else [])
    text = render_csv(columns, rows, header_lines(cfg, "analyze"))
    sys.stdout.write(text)
    _write(args.out, "analyze.csv", text)
    _write(args.out, "analyze.json", dump_json(cfg, "analyze", {"rows": rows}))
    return EXIT_OK


def cmd_pdf(cfg: RunConfig, args) -> int:
    if not cfg.noise.is_gaussian:
        raise SeriesUnavailable(f"series unavailable for {cfg.noise.kind!r} noise, use cmd_sample")
    for N in cfg.horizons:
        res = experiments.pdf_grid(cfg, N, threads=args.threads)
        for note in res.warnings:
            log.warning(note)
        meta = dict(res.meta)
        if res.warnings:
            meta["warnings"] = res.warnings
        rows = [{"g": g, "pdf_ruben": a, "pdf_mc_histogram": b}
                for g, a, b in zip(res.grid, res.pdf_ruben, res.pdf_mc)]
        text = render_csv(["g", "pdf_ruben", "pdf_mc_histogram"], rows, header_lines(cfg, "pdf", meta))
        if args.out is None:
            sys.stdout.write(text)
        _write(args.out, f"pdf_N{N}.csv", text)
        _write(args.out, f"pdf_N{N}.json", dump_json(cfg, "pdf", {
            "meta": meta, "g": res.grid,
            "pdf_ruben": res.pdf_ruben if np.isfinite(res.pdf_ruben).all() else None, "pdf_mc_histogram": res.pdf_mc}))
    return EXIT_OK


def cmd_logconcavity(cfg: RunConfig, args) -> int:
    summaries = []
    curve_rows = []
    for N in cfg.horizons:
        for rep in experiments.logconcavity(cfg, N, threads=args.threads):
            summaries.append(rep.summary())
            for g, d2, thr in zip(rep.grid[1:-1], rep.second_diff, rep.tolerance):
                if np.isfinite(d2):
                    curve_rows.append({"N": N, "family": rep.meta["family_index"], "noise_kind": rep.noise_kind,
                                       "estimator": rep.estimator, "g": g, "d2_log_cdf": d2, "tolerance": thr})
    for s in summaries:
        status = "PASS" if s["pass"] else "FAIL"
        sys.stdout.write(f"{status} N={s['N']} noise={s['noise_kind']} estimator={s['estimator']} "
                         f"max_d2={s['max_second_diff']:.6g} violations={s['violations']}\n")
    _write(args.out, "logconcavity.json", dump_json(cfg, "logconcavity", {"reports": summaries}))
    text = io.StringIO()
    text.write("\n".join(header_lines(cfg, "logconcavity")) + "\n")
    w = csv.writer(text, lineterminator="\n")
    cols = ["N", "family", "noise_kind", "estimator", "g", "d2_log_cdf", "tolerance"]
    w.writerow(cols)
    for r in curve_rows:
        w.writerow([r[c] if isinstance(r[c], str) else fmt6(r[c]) for c in cols])
    _write(args.out, "logconcavity_curves.csv", text.getvalue())
    return EXIT_OK


def cmd_sample(cfg: RunConfig, args) -> int:
    from .chisq import sample_return
    from .model import solve_lyapunov

    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    for N in cfg.horizons:
        samples = sample_return(cfg.system, cl, cfg.noise, N, cfg.mc_samples, cfg.seed,
                                path=cfg.mc_path, threads=args.threads)
        meta = {"N": N, "seed": cfg.seed, "M": cfg.mc_samples, "path": cfg.mc_path}
        if args.format == "npy":
            if args.out is None:
                raise ConfigError("--format npy requires --out")
            args.out.mkdir(parents=True, exist_ok=True)
            np.save(args.out / f"samples_N{N}.npy", samples)
            _write(args.out, f"samples_N{N}.json", dump_json(cfg, "sample", {"meta": meta}))
        else:
            lines = header_lines(cfg, "sample", meta) + ["g"] + [repr(float(v)) for v in samples]
            text = "\n".join(lines) + "\n"
            if args.out is None:
                sys.stdout.write(text)
            _write(args.out, f"samples_N{N}.csv", text)
    return EXIT_OK


def cmd_decay(cfg: RunConfig, args) -> int:
    rows = experiments.decay(cfg, threads=args.threads)
    meta = {"seed": cfg.seed, "M": cfg.mc_samples, "reference_horizon": cfg.reference_horizon}
    text = render_csv(["N", "ks", "ks_scaled"], rows, header_lines(cfg, "decay", meta))
    sys.stdout.write(text)
    _write(args.out, "decay.csv", text)
    _write(args.out, "decay.json", dump_json(cfg, "decay", {"meta": meta, "rows": rows}))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "pdf": cmd_pdf,
    "logconcavity": cmd_logconcavity,
    "sample": cmd_sample,
    "decay": cmd_decay,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distlqr", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON run config (merged over --preset)")
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="overrides mc.seed")
    parser.add_argument("--threads", type=int, default=1, help="sampling worker threads")
    parser.add_argument("--format", choices=["csv", "npy"], default="csv", help="sample dump format")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _fail(EXIT_CONFIG, ConfigError("--threads must be at least 1"))
    overrides = {"mc": {"seed": args.seed}} if args.seed is not None else None
    try:
        cfg = resolve_config(args.config, args.preset, overrides)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (NumericalError, SeriesUnavailable) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except DistLQRError as exc:
        return _fail(EXIT_OTHER, exc)


if __name__ == "__main__":
    sys.exit(main())
