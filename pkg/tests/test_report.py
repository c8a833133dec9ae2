"""Matrix rendering, the tag discipline, and the release-audit checklist."""

import hashlib
import json

import pytest

from neicap.errors import ReportError
from neicap.manifest import serialize_manifest
from neicap.metrics import write_predictions, make_prediction
from neicap.report import (
    checklist_to_lines,
    parse_matrix_csv,
    release_audit,
    render_matrix,
    render_metric_table,
)

FIVE_FAMILIES = (
    "bm25_near_miss",
    "cited_non_rationale",
    "placeholder",
    "position_biased",
    "random_irrelevant",
)

# published placeholder row, columns in alphabetical family order
PLACEHOLDER_ROW = (0.000, 0.000, 1.000, 0.947, 0.000)


def five_by_five_cells():
    cells = {}
    for i, train in enumerate(FIVE_FAMILIES):
        for j, col in enumerate(FIVE_FAMILIES):
            cells[(train, col)] = 0.1 * i + 0.01 * j
    for j, col in enumerate(FIVE_FAMILIES):
        cells[("placeholder", col)] = PLACEHOLDER_ROW[j]
    return cells


class TestRenderMatrix:
    def test_alphabetical_order_and_placeholder_row(self):
        artifact = render_matrix(five_by_five_cells())
        assert artifact.rows == sorted(FIVE_FAMILIES)
        assert artifact.cols == sorted(FIVE_FAMILIES)
        row = next(
            line
            for line in artifact.csv.splitlines()
            if line.startswith("placeholder,")
        )
        assert row == "placeholder,0.000,0.000,1.000,0.947,0.000"
        # diagonal is marked in the text rendering
        text_row = next(
            l for l in artifact.text.splitlines() if l.strip().startswith("placeholder")
        )
        assert "1.000*" in text_row

    def test_single_cell(self):
        artifact = render_matrix({("a", "a"): 0.5})
        assert "0.500" in artifact.csv

    def test_missing_cell_names_coordinates(self):
        cells = five_by_five_cells()
        del cells[("placeholder", "cited_non_rationale")]
        with pytest.raises(ReportError, match=r"\(placeholder, cited_non_rationale\)"):
            render_matrix(cells)

    def test_csv_round_trip_exact(self):
        artifact = render_matrix(five_by_five_cells())
        back = parse_matrix_csv(artifact.csv)
        rendered = {
            (r, c): float(f"{five_by_five_cells()[(r, c)]:.3f}")
            for r in artifact.rows
            for c in artifact.cols
        }
        assert back == rendered


class TestTagDiscipline:
    def test_untagged_row_refused(self):
        rows = [{"construction": "", "n": 5}]
        with pytest.raises(ReportError, match="refusing to render"):
            render_metric_table(rows, ("construction", "n"))

    def test_tagged_rows_render(self):
        rows = [{"construction": "placeholder", "n": 5}]
        out = render_metric_table(rows, ("construction", "n"))
        assert "placeholder,5" in out

    def test_non_strict_mode_allows(self):
        rows = [{"construction": "", "n": 5}]
        out = render_metric_table(rows, ("construction", "n"), strict=False)
        assert ",5" in out


def _pristine_workspace(tmp_path, sample_variants):
    ws_dir = tmp_path / "ws"
    ws_dir.mkdir()
    # one-class table without macro columns
    one_class = ws_dir / "one_class.csv"
    one_class.write_text(
        "construction,n,nei_recall,false_support_rate,false_refute_rate\n"
        "bm25_near_miss,54,0.000,0.870,0.130\n",
        encoding="utf-8",
    )
    matrix = ws_dir / "matrix.csv"
    matrix.write_text("train_construction,placeholder\nplaceholder,1.000\n", encoding="utf-8")
    manifest_path = ws_dir / "hard.jsonl"
    manifest_path.write_text(
        serialize_manifest(sample_variants["bm25_near_miss"][:20]), encoding="utf-8"
    )
    # fixed-claim inputs with complete coverage
    refs = [r for r in sample_variants["placeholder"] if r.label.value != "NEI"][:5]
    hards = [r for r in sample_variants["bm25_near_miss"] if r.label.value == "NEI"][:5]
    (ws_dir / "pairs_ref.jsonl").write_text(serialize_manifest(refs), encoding="utf-8")
    (ws_dir / "pairs_hard.jsonl").write_text(serialize_manifest(hards), encoding="utf-8")
    preds = [
        make_prediction(r.example_id, "m", 13, 0.8, 0.1, 0.1) for r in refs
    ] + [make_prediction(r.example_id, "m", 13, 0.1, 0.1, 0.8) for r in hards]
    write_predictions(preds, ws_dir / "preds.jsonl")
    cases = ws_dir / "unavailable.jsonl"
    cases.write_text(
        json.dumps({"case": "row-level recovery", "reason": "predictions not logged"})
        + "\n",
        encoding="utf-8",
    )
    locked = {
        "matrix.csv": hashlib.sha256(matrix.read_bytes()).hexdigest(),
    }
    ws = {
        "reports": ["one_class.csv", "matrix.csv"],
        "tables": ["one_class.csv", "matrix.csv"],
        "one_class_tables": ["one_class.csv"],
        "manifests": ["hard.jsonl"],
        "fixed_claim": {
            "pairs_reference": "pairs_ref.jsonl",
            "pairs_hard": "pairs_hard.jsonl",
            "predictions": "preds.jsonl",
        },
        "locked": locked,
        "unavailable_cases": "unavailable.jsonl",
    }
    ws_file = ws_dir / "workspace.json"
    ws_file.write_text(json.dumps(ws, indent=2), encoding="utf-8")
    return ws_dir, ws_file


class TestReleaseAudit:
    def test_pristine_workspace_passes(self, tmp_path, sample_variants):
        _, ws_file = _pristine_workspace(tmp_path, sample_variants)
        results = release_audit(ws_file)
        assert results, "no checks ran"
        assert all(r.passed for r in results)
        # line-delimited report matches the documented columns
        lines = checklist_to_lines(results).splitlines()
        first = json.loads(lines[0])
        assert set(first) == {"check", "passed", "critical", "detail"}

    def test_macro_f1_injection_critical_fail(self, tmp_path, sample_variants):
        ws_dir, ws_file = _pristine_workspace(tmp_path, sample_variants)
        one_class = ws_dir / "one_class.csv"
        text = one_class.read_text().replace("nei_recall", "macro_f1")
        one_class.write_text(text, encoding="utf-8")
        results = {r.check: r for r in release_audit(ws_file)}
        check = results["no-macro-f1-on-one-class"]
        assert not check.passed and check.critical

    def test_locked_byte_flip_detected(self, tmp_path, sample_variants):
        ws_dir, ws_file = _pristine_workspace(tmp_path, sample_variants)
        matrix = ws_dir / "matrix.csv"
        data = bytearray(matrix.read_bytes())
        data[0] ^= 0x01
        matrix.write_bytes(bytes(data))
        results = {r.check: r for r in release_audit(ws_file)}
        check = results["locked-outputs-unchanged"]
        assert not check.passed and check.critical
        assert "matrix.csv" in check.detail

    def test_candidate_only_marked_valid_fails(self, tmp_path, sample_variants):
        from dataclasses import replace

        ws_dir, ws_file = _pristine_workspace(tmp_path, sample_variants)
        bad = [
            replace(
                r,
                validation_status="valid_nei",
                adjudicated_label="truly_insufficient",
            )
            for r in sample_variants["placeholder"]
            if r.label.value == "NEI"
        ][:3]
        (ws_dir / "hard.jsonl").write_text(serialize_manifest(bad), encoding="utf-8")
        # keep it parseable but wrong: placeholder records marked human-valid
        results = {r.check: r for r in release_audit(ws_file)}
        check = results["no-candidate-only-marked-valid"]
        assert not check.passed and check.critical

    def test_unreadable_workspace_errors(self, tmp_path):
        bad = tmp_path / "ws.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(ReportError, match="unreadable"):
            release_audit(bad)

    def test_read_only(self, tmp_path, sample_variants):
        ws_dir, ws_file = _pristine_workspace(tmp_path, sample_variants)
        before = {
            p.name: p.read_bytes() for p in ws_dir.iterdir() if p.is_file()
        }
        release_audit(ws_file)
        after = {p.name: p.read_bytes() for p in ws_dir.iterdir() if p.is_file()}
        assert before == after
