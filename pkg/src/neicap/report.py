"""Construction-stratified table rendering and the release-audit checklist.

Rendering discipline: every metric row must carry its construction tag; in
strict mode (the default) an untagged row refuses to render rather than being
silently emitted. The release audit is read-only over a declared workspace and
implements the mechanizable subset of the release checklist; checks requiring
organizational context are represented as declared-path existence checks.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ReportError
from .manifest import NEVER_HUMAN_VALIDATED, parse_manifest
from .metrics import parse_predictions, prediction_coverage


# ---------------------------------------------------------------------------
# matrix rendering
# ---------------------------------------------------------------------------


@dataclass
class MatrixArtifact:
    text: str
    csv: str
    rows: list[str]
    cols: list[str]


def render_matrix(
    cells: dict[tuple[str, str], float], metric_name: str = "nei_f1"
) -> MatrixArtifact:
    """Render a complete (train x eval) matrix to text and CSV.

    Rows and columns are ordered alphabetically by family; values print with 3
    decimals; the diagonal is the matched condition and is starred in the text
    rendering. A missing cell is an error naming its (row, column).
    """
    rows = sorted({t for t, _ in cells})
    cols = sorted({e for _, e in cells})
    if not rows or not cols:
        raise ReportError("empty matrix")
    for r in rows:
        for c in cols:
            if (r, c) not in cells:
                raise ReportError(f"missing matrix cell ({r}, {c})")
    width = max(len(metric_name), max((len(c) for c in cols), default=0), 9)
    name_w = max(len("train"), max(len(r) for r in rows))
    header = " " * 2 + "train".ljust(name_w) + "".join(
        f"  {c:>{width}}" for c in cols
    )
    lines = [f"{metric_name} matrix (rows: train construction, * = matched)", header]
    for r in rows:
        cells_txt = []
        for c in cols:
            mark = "*" if r == c else " "
            cells_txt.append(f"  {cells[(r, c)]:>{width - 1}.3f}{mark}")
        lines.append("  " + r.ljust(name_w) + "".join(cells_txt))
    text = "\n".join(lines) + "\n"

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["train_construction"] + cols)
    for r in rows:
        writer.writerow([r] + [f"{cells[(r, c)]:.3f}" for c in cols])
    return MatrixArtifact(text=text, csv=out.getvalue(), rows=rows, cols=cols)


def parse_matrix_csv(text: str) -> dict[tuple[str, str], float]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if not header or header[0] != "train_construction":
        raise ReportError("matrix CSV must start with a train_construction column")
    cols = header[1:]
    cells: dict[tuple[str, str], float] = {}
    for row in reader:
        if not row:
            continue
        train = row[0]
        for col, value in zip(cols, row[1:]):
            cells[(train, col)] = float(value)
    return cells


# ---------------------------------------------------------------------------
# generic metric tables
# ---------------------------------------------------------------------------


def render_metric_table(
    rows: Sequence[dict],
    columns: Sequence[str],
    tag_column: str = "construction",
    strict: bool = True,
) -> str:
    """CSV renderer that enforces the construction-tag discipline."""
    if tag_column not in columns:
        raise ReportError(f"tag column {tag_column!r} is not in the column set")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for i, row in enumerate(rows):
        if strict and not row.get(tag_column):
            raise ReportError(
                f"row {i} has no {tag_column} tag; refusing to render untagged metrics"
            )
        writer.writerow(
            [
                f"{row[c]:.3f}" if isinstance(row.get(c), float) else row.get(c, "")
                for c in columns
            ]
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# release audit
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    check: str
    passed: bool
    critical: bool
    detail: str


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def release_audit(workspace_file) -> list[CheckResult]:
    """Run the mechanizable release checks declared in a workspace file.

    The workspace declaration is JSON with optional keys: reports, tables,
    one_class_tables, manifests, fixed_claim {pairs_reference, pairs_hard,
    predictions}, locked {path: sha256}, unavailable_cases. All paths are
    resolved relative to the declaration file. The audit never writes.
    """
    ws_path = Path(workspace_file)
    try:
        ws = json.loads(ws_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"unreadable workspace declaration: {exc}") from None
    root = ws_path.parent
    results: list[CheckResult] = []

    def resolve(rel: str) -> Path:
        return root / rel

    # key reports exist
    missing = [p for p in ws.get("reports", []) if not resolve(p).exists()]
    results.append(
        CheckResult(
            "key-reports-exist",
            not missing,
            True,
            "all present" if not missing else f"missing: {missing}",
        )
    )

    # tables exist and are non-empty
    bad_tables = []
    for p in ws.get("tables", []):
        path = resolve(p)
        if not path.exists() or path.stat().st_size == 0:
            bad_tables.append(p)
    results.append(
        CheckResult(
            "tables-non-empty",
            not bad_tables,
            True,
            "all non-empty" if not bad_tables else f"empty or missing: {bad_tables}",
        )
    )

    # no Macro-F1 column on one-class tables
    offenders = []
    for p in ws.get("one_class_tables", []):
        path = resolve(p)
        if not path.exists():
            offenders.append(f"{p} (missing)")
            continue
        with open(path, encoding="utf-8", newline="") as fh:
            header = next(csv.reader(fh), [])
        if any("macro" in col.lower() for col in header):
            offenders.append(p)
    results.append(
        CheckResult(
            "no-macro-f1-on-one-class",
            not offenders,
            True,
            "clean" if not offenders else f"macro-F1 column present in: {offenders}",
        )
    )

    # no candidate-only construction marked human-validated
    marked = []
    for p in ws.get("manifests", []):
        path = resolve(p)
        if not path.exists():
            marked.append(f"{p} (missing)")
            continue
        for rec in parse_manifest(path):
            if (
                rec.construction in NEVER_HUMAN_VALIDATED
                and rec.validation_status == "valid_nei"
            ):
                marked.append(f"{p}:{rec.example_id}")
    results.append(
        CheckResult(
            "no-candidate-only-marked-valid",
            not marked,
            True,
            "clean" if not marked else f"candidate-only records marked valid: {marked[:5]}",
        )
    )

    # fixed-claim prediction coverage
    fc = ws.get("fixed_claim")
    if fc:
        try:
            expected = [
                r.example_id for r in parse_manifest(resolve(fc["pairs_reference"]))
            ] + [r.example_id for r in parse_manifest(resolve(fc["pairs_hard"]))]
            preds = parse_predictions(resolve(fc["predictions"]))
            cov = prediction_coverage(expected, preds)
            ok = cov.coverage == 1.0
            detail = f"coverage {cov.coverage:.3f}"
        except Exception as exc:  # noqa: BLE001 - audit reports, never raises
            ok, detail = False, f"unreadable fixed-claim inputs: {exc}"
        results.append(CheckResult("fixed-claim-coverage-complete", ok, True, detail))

    # locked outputs unchanged
    changed = []
    for rel, expected_hash in sorted(ws.get("locked", {}).items()):
        path = resolve(rel)
        if not path.exists():
            changed.append(f"{rel} (missing)")
        elif _sha256(path) != expected_hash:
            changed.append(rel)
    results.append(
        CheckResult(
            "locked-outputs-unchanged",
            not changed,
            True,
            "all hashes match" if not changed else f"changed: {changed}",
        )
    )

    # unavailable-case reasons documented
    if "unavailable_cases" in ws:
        path = resolve(ws["unavailable_cases"])
        ok = True
        detail = "documented"
        if not path.exists():
            ok, detail = False, f"missing file {ws['unavailable_cases']}"
        else:
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                if not obj.get("reason"):
                    ok, detail = False, f"case {obj.get('case')!r} has no reason"
                    break
        results.append(CheckResult("unavailable-cases-documented", ok, False, detail))

    return results


def checklist_to_lines(results: Sequence[CheckResult]) -> str:
    lines = [
        json.dumps(
            {
                "check": r.check,
                "passed": r.passed,
                "critical": r.critical,
                "detail": r.detail,
            }
        )
        for r in results
    ]
    return "\n".join(lines) + ("\n" if lines else "")
