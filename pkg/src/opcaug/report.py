"""Report serialization.

Two forms are emitted side by side:
- machine records: one record per line, `<kind> key=value key=value ...`
  with floats written exactly (shortest round-trip repr). Anything
  nondeterministic (timestamps, wall-clock timings) lives in '#'
  comment header lines so record bytes are identical across reruns.
- human tables: aligned columns, five decimal places.
"""

import time

from .errors import ConfigError
from .trainer import CvReport, SweepReport


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_record(kind: str, **fields) -> str:
    parts = [kind]
    for key, value in fields.items():
        text = _fmt(value)
        if " " in text or "=" in text:
            raise ConfigError(f"record value may not contain spaces: {text!r}")
        parts.append(f"{key}={text}")
    return " ".join(parts)


def parse_records(text: str):
    """Yield (kind, field dict) for every non-comment line; '=' values
    come back as strings."""
    records = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, *pairs = line.split(" ")
        fields = {}
        for pair in pairs:
            key, _, value = pair.partition("=")
            fields[key] = value
        records.append((head, fields))
    return records


def timestamp_header() -> str:
    return f"# generated_at={time.strftime('%Y-%m-%dT%H:%M:%S%z')}"


def cv_records(report: CvReport) -> str:
    lines = [timestamp_header()]
    for i, (ts, inf) in enumerate(zip(report.train_seconds, report.infer_seconds_per_example)):
        lines.append(f"# timing fold={i} train_seconds={ts:.3f} infer_seconds_per_example={inf:.6f}")
    for i, fold in enumerate(report.per_fold):
        lines.append(format_record(
            "fold", index=i, f1=fold.f1, precision=fold.precision, recall=fold.recall,
            tp=fold.tp, fp=fold.fp, tn=fold.tn, fn=fold.fn,
        ))
    lines.append(format_record("summary", k=report.k, mean_f1=report.mean_f1))
    return "\n".join(lines) + "\n"


def cv_table(report: CvReport) -> str:
    header = f"{'fold':>4}  {'f1':>8}  {'precision':>9}  {'recall':>8}  {'tp':>4} {'fp':>4} {'tn':>4} {'fn':>4}"
    lines = [header, "-" * len(header)]
    for i, fold in enumerate(report.per_fold):
        lines.append(
            f"{i:>4}  {fold.f1:>8.5f}  {fold.precision:>9.5f}  {fold.recall:>8.5f}  "
            f"{fold.tp:>4} {fold.fp:>4} {fold.tn:>4} {fold.fn:>4}"
        )
    lines.append("-" * len(header))
    lines.append(f"mean f1 over {report.k} folds: {report.mean_f1:.5f}")
    for i, (ts, inf) in enumerate(zip(report.train_seconds, report.infer_seconds_per_example)):
        lines.append(f"fold {i}: train {ts:.2f} s, inference {inf * 1e3:.3f} ms/example")
    return "\n".join(lines) + "\n"


def sweep_records(report: SweepReport) -> str:
    lines = [timestamp_header()]
    lines.append(format_record("sweepmeta", method=report.method, beta=report.beta))
    lines.append(format_record("baseline", mean_f1=report.baseline_f1))
    for alpha, f1 in report.rows:
        lines.append(format_record("sweeprow", alpha=alpha, mean_f1=f1,
                                   improved=f1 > report.baseline_f1))
    lines.append(format_record("max", mean_f1=report.max_f1))
    lines.append(format_record("delta", value=report.delta))
    return "\n".join(lines) + "\n"


def sweep_table(report: SweepReport) -> str:
    """Text table shaped like the augmentation comparison: a baseline
    row, one row per alpha with improvements starred, then Max and
    Delta."""
    lines = [
        f"method: {report.method}   beta: {report.beta:g}",
        f"{'row':<12} {'alpha':>6}  {'mean_f1':>8}",
        "-" * 30,
        f"{'Baseline':<12} {'-':>6}  {report.baseline_f1:>8.5f}",
    ]
    for alpha, f1 in report.rows:
        mark = " *" if f1 > report.baseline_f1 else ""
        lines.append(f"{'alpha':<12} {alpha:>6.2f}  {f1:>8.5f}{mark}")
    lines.append("-" * 30)
    lines.append(f"{'Max':<12} {'-':>6}  {report.max_f1:>8.5f}")
    lines.append(f"{'Delta':<12} {'-':>6}  {report.delta:>8.5f}")
    lines.append("(* marks improvement over the baseline)")
    return "\n".join(lines) + "\n"


def size_study_records(rows, augmented_row=None) -> str:
    """rows: (filters, params, mean_f1, train_seconds, infer_seconds);
    augmented_row: same tuple for the augmented reference model."""
    lines = [timestamp_header()]
    for filters, n_params, f1, ts, inf in rows:
        lines.append(f"# timing filters={filters} train_seconds={ts:.3f} infer_seconds_per_example={inf:.6f}")
        lines.append(format_record("sizerow", filters=filters, parameters=n_params, mean_f1=f1))
    if augmented_row is not None:
        filters, n_params, f1, ts, inf = augmented_row
        lines.append(f"# timing filters={filters} augmented=true train_seconds={ts:.3f} infer_seconds_per_example={inf:.6f}")
        lines.append(format_record("sizerow", filters=filters, parameters=n_params,
                                   mean_f1=f1, augmented=True))
    return "\n".join(lines) + "\n"


def size_study_table(rows, augmented_row=None) -> str:
    header = f"{'filters':>7}  {'parameters':>10}  {'mean_f1':>8}  {'train_s':>8}  {'infer_ms':>8}  aug"
    lines = [header, "-" * len(header)]
    for filters, n_params, f1, ts, inf in rows:
        lines.append(f"{filters:>7}  {n_params:>10}  {f1:>8.5f}  {ts:>8.2f}  {inf * 1e3:>8.3f}   no")
    if augmented_row is not None:
        filters, n_params, f1, ts, inf = augmented_row
        lines.append(f"{filters:>7}  {n_params:>10}  {f1:>8.5f}  {ts:>8.2f}  {inf * 1e3:>8.3f}  yes")
    return "\n".join(lines) + "\n"


def render_records(text: str) -> str:
    """Re-render a machine records file as a rough aligned table (used by
    the report command)."""
    records = parse_records(text)
    if not records:
        return "(no records)\n"
    lines = []
    for kind, fields in records:
        body = "  ".join(f"{k}={v}" for k, v in fields.items())
        lines.append(f"{kind:<10} {body}")
    return "\n".join(lines) + "\n"
