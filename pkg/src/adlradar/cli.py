"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig, default_config_path, load_config
from .errors import AdlError, ConfigError, IoError
from .formats import (load_baseband, load_md, load_rangemap, matrix_csv, save_baseband, save_md,
                      save_rangemap, segments_csv)
from .pipeline import (RunResult, build_corpus, decide, evaluate, noise_seed, run_pipeline,
                       split_samples, stage_rangemap, stage_segment, stage_simulate,
                       stage_spectrogram, train_models)
from .report import dumps, load_models, render_run, write_run
from .sigsim import scenario_truth


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config or default_config_path())
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = cfg.with_seed(args.seed)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg


def _out_dir(args, cfg: PipelineConfig) -> Path:
    out = Path(args.out or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    rows = []
    for sc in cfg.scenarios:
        bb = stage_simulate(sc, cfg)
        name = f"{sc.name}.rdcb"
        save_baseband(out / name, bb)
        truth = scenario_truth(sc, bb.config)
        rows.append({
            "file": name,
            "class_sequence": " ".join(a.label for a in sc.class_sequence),
            "breakpoints": " ".join(f"{b.time_s:.6f}:{b.kind}" for b in truth.breakpoints),
            "seed": noise_seed(sc, cfg.seed),
        })
    try:
        with open(out / "manifest.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, ["file", "class_sequence", "breakpoints", "seed"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from None
    print(f"wrote {len(rows)} recording(s) to {out}")
    return 0


def cmd_rangemap(args) -> int:
    cfg = _config(args)
    bb = load_baseband(args.input, cfg.radar.radar)
    rm = stage_rangemap(bb)
    out = Path(args.out or Path(args.input).with_suffix(".rdm1"))
    save_rangemap(out, rm)
    if args.csv:
        _write_text(out.with_suffix(".csv"), matrix_csv(rm.data))
    print(f"range map {rm.shape[0]}x{rm.shape[1]} -> {out}")
    return 0


def _load_rm(path, cfg: PipelineConfig):
    r = cfg.radar.radar
    return load_rangemap(path, r.range_resolution, r.pri_s)


def cmd_spectrogram(args) -> int:
    cfg = _config(args)
    rm = _load_rm(args.input, cfg)
    md = stage_spectrogram(rm, cfg)
    out = Path(args.out or Path(args.input).with_suffix(".rmd1"))
    save_md(out, md)
    print(f"spectrogram {md.data.shape[0]}x{md.data.shape[1]} -> {out}")
    return 0


def cmd_segment(args) -> int:
    cfg = _config(args)
    seg = stage_segment(_load_rm(args.rangemap, cfg), load_md(args.md), cfg)
    out = Path(args.out or Path(args.rangemap).with_suffix(".segments.csv"))
    _write_text(out, segments_csv(seg))
    print(f"{len(seg.breakpoints)} breakpoint(s), {len(seg.events)} event(s) -> {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    samples = build_corpus(cfg, args.jobs)
    train, test = split_samples(samples, cfg)
    models = train_models(train, cfg)
    report = {"tool": "adlradar", "version": __version__,
              "seed": cfg.seed, "config": cfg.source, "config_sha256": cfg.sha256}
    if test:
        ev = evaluate(train, test, cfg, models)
        report["tables"] = {k: v.to_dict() for k, v in ev.tables.items()}
        report["fall_miss"] = ev.fall_miss
        report["modality_accuracy"] = ev.accuracy
    write_run(RunResult(report, {}, models, None, {}), out)
    print(f"trained on {len(train)} windows; models in {out}")
    return 0


def cmd_classify(args) -> int:
    cfg = _config(args)
    models = load_models(args.models)
    rm = _load_rm(args.rangemap, cfg)
    md = load_md(args.md)
    seg = stage_segment(rm, md, cfg)
    tl = decide(seg, rm, md, models, cfg)
    out = Path(args.out or Path(args.rangemap).with_suffix(".timeline.json"))
    _write_text(out, dumps(tl.to_json()))
    print(" -> ".join(s.value for s in tl.compressed_states()))
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    result = run_pipeline(cfg, args.jobs)
    write_run(result, out)
    fm = result.report.get("fall_miss")
    if fm:
        print(f"fall miss: restricted {fm['restricted']}, all-class {fm['all_class']}")
    for sc in result.report.get("scenarios", []):
        print(f"{sc['name']}: {' -> '.join(sc['states'])}")
    print(f"report written to {out / 'report.json'}")
    return 0


def cmd_report(args) -> int:
    run_dir = args.run_dir or args.out
    if run_dir is None:
        raise ConfigError("report needs a run directory")
    print(render_run(run_dir), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (default: packaged default)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for the corpus")
    common.add_argument("--out", help="output file or directory")

    p = argparse.ArgumentParser(prog="adlradar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="synthesise the configured scenarios") \
        .set_defaults(func=cmd_simulate)
    s = sub.add_parser("rangemap", parents=[common], help="baseband (RDCB) to range map (RDM1)")
    s.add_argument("input")
    s.add_argument("--csv", action="store_true", help="also write a CSV of the magnitudes")
    s.set_defaults(func=cmd_rangemap)
    s = sub.add_parser("spectrogram", parents=[common], help="range map to micro-Doppler (RMD1)")
    s.add_argument("input")
    s.set_defaults(func=cmd_spectrogram)
    s = sub.add_parser("segment", parents=[common], help="breakpoints and burst events (CSV)")
    s.add_argument("rangemap")
    s.add_argument("md")
    s.set_defaults(func=cmd_segment)
    sub.add_parser("train", parents=[common], help="build the corpus and train both models") \
        .set_defaults(func=cmd_train)
    s = sub.add_parser("classify", parents=[common], help="state timeline of one recording")
    s.add_argument("models", help="directory written by 'train' or 'pipeline'")
    s.add_argument("rangemap")
    s.add_argument("md")
    s.set_defaults(func=cmd_classify)
    sub.add_parser("pipeline", parents=[common], help="everything, end to end") \
        .set_defaults(func=cmd_pipeline)
    s = sub.add_parser("report", parents=[common], help="render a run directory's report")
    s.add_argument("run_dir", nargs="?")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # an unexpected failure is a bug, not bad input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
