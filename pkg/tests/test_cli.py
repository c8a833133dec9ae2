"""CLI exit-code contract, provenance stamps, and end-to-end subcommand flows."""

import json
from pathlib import Path

import pytest

from neicap.cli import main
from neicap.manifest import parse_manifest, write_manifest
from neicap.metrics import make_prediction, write_predictions


@pytest.fixture()
def gold_one_class(tmp_path, sample_variants):
    from dataclasses import replace

    gold = [
        replace(r, validation_status="valid_nei", adjudicated_label="truly_insufficient")
        for r in sample_variants["bm25_near_miss"]
        if r.label.value == "NEI" and r.split == "test"
    ][:54]
    gold_path = tmp_path / "gold.jsonl"
    write_manifest(gold, gold_path)
    preds = [
        make_prediction(r.example_id, "ext-model", 13, 0.9, 0.05, 0.05)
        for r in gold[:47]
    ] + [
        make_prediction(r.example_id, "ext-model", 13, 0.1, 0.8, 0.1)
        for r in gold[47:]
    ]
    preds_path = tmp_path / "preds.jsonl"
    write_predictions(preds, preds_path)
    return gold_path, preds_path


class TestExitCodes:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--gold", "g", "--preds", "p", "--out", "o", "--bogus"])
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2

    def test_data_error_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"example_id": "e1"}\n', encoding="utf-8")
        code = main(
            ["split", "--manifest", str(bad), "--out", str(tmp_path / "s.tsv")]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_one_class_happy_path_exit_0(self, tmp_path, gold_one_class, capsys):
        gold_path, preds_path = gold_one_class
        out = tmp_path / "one_class.csv"
        code = main(
            [
                "eval", "--gold", str(gold_path), "--preds", str(preds_path),
                "--one-class", "--out", str(out),
            ]
        )
        assert code == 0
        header, row = out.read_text().splitlines()
        assert "nei_recall" in header and "macro" not in header
        assert row.split(",")[1] == "54"

    def test_macro_f1_on_one_class_gold_refused_exit_1(
        self, tmp_path, gold_one_class, capsys
    ):
        gold_path, preds_path = gold_one_class
        code = main(
            [
                "eval", "--gold", str(gold_path), "--preds", str(preds_path),
                "--macro-f1", "--out", str(tmp_path / "out.csv"),
            ]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "not informative" in err


class TestProvenance:
    def test_stamp_written_with_hashes(self, tmp_path, gold_one_class):
        gold_path, preds_path = gold_one_class
        out = tmp_path / "run" / "one_class.csv"
        code = main(
            [
                "eval", "--gold", str(gold_path), "--preds", str(preds_path),
                "--one-class", "--out", str(out),
            ]
        )
        assert code == 0
        stamp = json.loads(
            (out.parent / "one_class.csv.provenance.json").read_text()
        )
        assert stamp["tool"] == "neicap" and stamp["command"] == "eval"
        assert str(gold_path) in stamp["inputs"]
        assert len(stamp["inputs"][str(gold_path)]) == 64  # sha256 hex
        assert stamp["args"]["one_class"] is True

    def test_identical_rerun_bit_identical_output(self, tmp_path, sample_dir):
        out1 = tmp_path / "a" / "assign.tsv"
        out2 = tmp_path / "b" / "assign.tsv"
        manifest = str(sample_dir / "variant_placeholder.jsonl")
        for out in (out1, out2):
            code = main(
                [
                    "split", "--manifest", manifest, "--ratios", "0.7,0.1,0.2",
                    "--seed", "41", "--out", str(out),
                ]
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestPipelineFlows:
    def test_construct_and_split(self, tmp_path, sample_dir):
        out = tmp_path / "placeholder.jsonl"
        code = main(
            [
                "construct", "--family", "placeholder",
                "--corpus", str(sample_dir / "corpus"),
                "--seed", "13", "--out", str(out),
            ]
        )
        assert code == 0
        records = parse_manifest(out)
        assert len(records) == 200
        assert all(r.construction.value == "placeholder" for r in records)

        assigned = tmp_path / "with_splits.jsonl"
        code = main(
            [
                "split", "--manifest", str(out), "--ratios", "0.8,0.1,0.1",
                "--seed", "13", "--out", str(tmp_path / "splits.tsv"),
                "--apply", str(assigned),
            ]
        )
        assert code == 0
        stamped = parse_manifest(assigned)
        assert {r.split for r in stamped} <= {"train", "dev", "test"}

    def test_audit_outputs(self, tmp_path, sample_dir):
        out_dir = tmp_path / "audit"
        code = main(
            [
                "audit",
                "--manifest", f"placeholder={sample_dir / 'test_placeholder.jsonl'}",
                "--manifest", f"bm25={sample_dir / 'test_bm25_near_miss.jsonl'}",
                "--probe", "placeholder", "bm25_near_miss",
                "--out", str(out_dir),
            ]
        )
        assert code == 0
        assert (out_dir / "audit_summary.csv").exists()
        assert (out_dir / "split_statistics.csv").exists()
        assert (out_dir / "leakage.csv").exists()
        stats = (out_dir / "split_statistics.csv").read_text().splitlines()
        assert any("placeholder,test,177,76,40,61" in line for line in stats)

    def test_probe_matrix_and_report(self, tmp_path, sample_dir):
        out_dir = tmp_path / "matrix"
        code = main(
            [
                "probe", "matrix",
                "--variant", f"placeholder={sample_dir / 'variant_placeholder.jsonl'}",
                "--variant", f"bm25_near_miss={sample_dir / 'variant_bm25_near_miss.jsonl'}",
                "--spec", "tfidf_claim_evidence",
                "--seeds", "13",
                "--out", str(out_dir),
            ]
        )
        assert code == 0
        csv_path = out_dir / "nei_f1_matrix.csv"
        assert csv_path.exists()
        logs = list((out_dir / "logs").glob("*.jsonl"))
        assert len(logs) == 4  # 2 train families x 1 seed x 2 eval families

        report_dir = tmp_path / "report"
        code = main(
            ["report", "--matrix", str(csv_path), "--out", str(report_dir)]
        )
        assert code == 0
        assert (report_dir / "nei_f1_matrix.txt").exists()

    def test_validate_sample_blinded(self, tmp_path, sample_dir, capsys):
        candidates = [
            r
            for r in parse_manifest(sample_dir / "variant_bm25_near_miss.jsonl")
            if r.validation_status == "candidate"
        ]
        cand_path = tmp_path / "candidates.jsonl"
        write_manifest(candidates, cand_path)
        out = tmp_path / "packet.jsonl"
        code = main(
            [
                "validate-sample", "--candidates", str(cand_path),
                "--n", "25", "--seed", "3", "--out", str(out),
            ]
        )
        assert code == 0
        text = out.read_text()
        for forbidden in ('"label"', '"construction"', '"bm25_score"'):
            assert forbidden not in text

    def test_merge_and_derive_hard(self, tmp_path):
        ann_a = tmp_path / "a.jsonl"
        ann_b = tmp_path / "b.jsonl"
        rows_a, rows_b = [], []
        from neicap.manifest import ConstructionFamily, EvidenceUnit, Label, ManifestRecord

        candidates = []
        for i in range(30):
            eid = f"cand{i:03d}"
            candidates.append(
                ManifestRecord(
                    example_id=eid, claim_id=eid, group_id=eid, source_data="t",
                    claim="c", evidence=[EvidenceUnit(text="e")], label=Label.NEI,
                    construction=ConstructionFamily.BM25_NEAR_MISS, split="audit",
                    validation_status="candidate",
                )
            )
            decision = "truly_insufficient" if i < 26 else "actually_supported"
            sub = "near_miss" if decision == "truly_insufficient" else None
            rows_a.append({"item_id": eid, "annotator_id": "a", "decision": decision,
                           **({"subtype": sub} if sub else {})})
            rows_b.append({"item_id": eid, "annotator_id": "b", "decision": decision,
                           **({"subtype": sub} if sub else {})})
        ann_a.write_text("\n".join(json.dumps(r) for r in rows_a) + "\n")
        ann_b.write_text("\n".join(json.dumps(r) for r in rows_b) + "\n")
        finals = tmp_path / "finals.jsonl"
        code = main(
            [
                "validate-merge", "--a", str(ann_a), "--b", str(ann_b),
                "--bootstrap", "200", "--out", str(finals),
            ]
        )
        assert code == 0
        rates = Path(str(finals) + ".rates.csv").read_text()
        assert "valid_nei_rate" in rates

        cand_path = tmp_path / "candidates.jsonl"
        write_manifest(candidates, cand_path)
        out_hard = tmp_path / "hard.jsonl"
        out_test = tmp_path / "hard_test.jsonl"
        code = main(
            [
                "derive-hard", "--finals", str(finals), "--candidates", str(cand_path),
                "--out-hard", str(out_hard), "--out-test", str(out_test),
            ]
        )
        assert code == 0
        hard = parse_manifest(out_hard)
        assert len(hard) == 26
        assert all(r.validation_status == "valid_nei" for r in hard)

    def test_fixed_claim_flow_with_coverage_csv(self, tmp_path):
        from dataclasses import replace

        from neicap.manifest import (
            ConstructionFamily,
            EvidenceUnit,
            Label,
            ManifestRecord,
        )

        refs, hards, preds = [], [], []
        for i in range(6):
            ref = ManifestRecord(
                example_id=f"r{i}", claim_id=f"c{i}", group_id=f"g{i}",
                source_data="t", claim="claim",
                evidence=[EvidenceUnit(text="reference evidence")],
                label=Label.SUPPORT, construction=ConstructionFamily.REFERENCE,
                split="test",
            )
            refs.append(ref)
            hards.append(
                replace(
                    ref,
                    example_id=f"h{i}",
                    evidence=[EvidenceUnit(text="insufficient evidence")],
                    label=Label.NEI,
                    construction=ConstructionFamily.FIXED_CLAIM,
                    validation_status="valid_nei",
                    adjudicated_label="truly_insufficient",
                )
            )
            preds.append(make_prediction(f"r{i}", "m", 13, 0.8, 0.1, 0.1))
            preds.append(make_prediction(f"h{i}", "m", 13, 0.2, 0.1, 0.7))
        write_manifest(refs, tmp_path / "refs.jsonl")
        write_manifest(hards, tmp_path / "hards.jsonl")
        write_predictions(preds, tmp_path / "preds.jsonl")
        out = tmp_path / "fixed_claim.csv"
        code = main(
            [
                "fixed-claim", "--reference", str(tmp_path / "refs.jsonl"),
                "--hard", str(tmp_path / "hards.jsonl"),
                "--preds", str(tmp_path / "preds.jsonl"), "--out", str(out),
            ]
        )
        assert code == 0
        assert "strict_swap_success" in out.read_text()
        coverage = Path(str(out) + ".coverage.csv").read_text().splitlines()
        assert coverage[0] == "scope,expected,predicted,coverage"
        assert "fixed_claim_reference_side,6,6,1.000" in coverage[1]

    def test_workspace_env_resolves_relative_outputs(
        self, tmp_path, sample_dir, monkeypatch
    ):
        monkeypatch.setenv("NEICAP_WORKSPACE", str(tmp_path))
        code = main(
            [
                "split", "--manifest", str(sample_dir / "variant_placeholder.jsonl"),
                "--seed", "13", "--out", "nested/assign.tsv",
            ]
        )
        assert code == 0
        assert (tmp_path / "nested" / "assign.tsv").exists()

    def test_release_audit_cli(self, tmp_path, capsys):
        ws = tmp_path / "workspace.json"
        report = tmp_path / "t.csv"
        report.write_text("construction,n\nplaceholder,1\n")
        ws.write_text(json.dumps({"reports": ["t.csv"], "tables": ["t.csv"]}))
        code = main(["release-audit", "--workspace", str(ws)])
        assert code == 0
        missing_ws = tmp_path / "ws2.json"
        missing_ws.write_text(json.dumps({"reports": ["gone.csv"]}))
        code = main(["release-audit", "--workspace", str(missing_ws)])
        assert code == 1
