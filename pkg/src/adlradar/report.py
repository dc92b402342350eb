"""Writing run directories and rendering their reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema

from .classify import confusion_from_dict
from .errors import IoError
from .features import FeatureExtractor, FusionScaler
from .formats import load_basis, load_model, save_basis, save_model, scaler_dict
from .pipeline import RunResult, TrainedModels

SCHEMA_PATH = Path(__file__).with_name("data") / "report.schema.json"


def clean(obj):
    """Make an object strict-JSON safe: NaN and infinities become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema())


def write_run(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(result.report))
        (out / "timings.json").write_text(dumps(result.timings))
        (out / "report.schema.json").write_text(SCHEMA_PATH.read_text())
        if result.models is not None:
            m = result.models
            save_model(out / "fwd.knn", m.fwd)
            save_model(out / "rev.knn", m.rev)
            save_basis(out / "md.pca", m.extractor.md_basis)
            save_basis(out / "rm.pca", m.extractor.rm_basis)
            (out / "scaler.json").write_text(dumps(scaler_dict(m.extractor.scaler)))
        if "tables" in result.report:
            (out / "tables.txt").write_text(render_report_dict(result.report))
    except OSError as exc:
        raise IoError(f"cannot write run directory {out}: {exc}") from None
    return out


def _pct(x) -> str:
    return "   n/a" if x is None else f"{100 * x:5.1f}%"


def render_report_dict(report: dict) -> str:
    parts = [f"run seed {report['seed']}  config sha256 {report['config_sha256'][:16]}"]
    for name, table in report.get("tables", {}).items():
        cm = confusion_from_dict(table)
        parts.append("")
        parts.append(cm.render(name))
        parts.append("  class" + " " * 27 + "  miss  false-alarm")
        for c in table["classes"]:
            parts.append(f"  {c:<32} {_pct(table['miss'][c])}  {_pct(table['false_alarm'][c])}")
    if "fall_miss" in report:
        fm = report["fall_miss"]
        parts.append("")
        parts.append(f"fall miss probability: restricted {_pct(fm['restricted'])}, "
                     f"all-class {_pct(fm['all_class'])}")
    for mod, acc in report.get("modality_accuracy", {}).items():
        parts.append(f"accuracy {mod:>5}: restricted {_pct(acc['restricted'])}, "
                     f"all-class {_pct(acc['all_class'])}")
    for sc in report.get("scenarios", []):
        parts.append("")
        parts.append(f"scenario {sc['name']}: " + " -> ".join(sc["states"]))
        for e in sc["timeline"]:
            flag = "  CONFLICT" if e["conflict"] else ""
            parts.append(f"  t={e['t']:7.3f}  {e['group']}-{e['state']:<4} via {e['action_in']}{flag}")
    return "\n".join(parts) + "\n"


def render_run(run_dir) -> str:
    path = Path(run_dir) / "report.json"
    try:
        report = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"missing run artifact {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise IoError(f"corrupt report {path}: {exc}") from None
    try:
        validate_report(report)
    except jsonschema.ValidationError as exc:
        raise IoError(f"{path} does not match the report schema: {exc.message}") from None
    return render_report_dict(report)


def load_models(run_dir):
    """Trained bases, scaler and both k-NN models written by ``write_run``."""
    d = Path(run_dir)
    try:
        scaler = FusionScaler(**json.loads((d / "scaler.json").read_text()))
    except OSError as exc:
        raise IoError(f"missing model artifact: {exc}") from None
    ex = FeatureExtractor(load_basis(d / "md.pca"), load_basis(d / "rm.pca"), scaler)
    return TrainedModels(ex, load_model(d / "fwd.knn"), load_model(d / "rev.knn"))
