"""Command-line entry point wiring the pipeline stages into one binary.

Exit codes: 0 success, 1 data error (any package error), 2 usage error
(argparse's default for unknown flags or bad invocations). Every
artifact-producing run writes a provenance stamp next to its outputs with the
resolved arguments, seeds, tool version, and content hashes of the inputs, so
the run can be reproduced bit-identically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import NeicapError


def out_path(path) -> Path:
    """Resolve a relative output path against NEICAP_WORKSPACE (default cwd)."""
    p = Path(path)
    if p.is_absolute():
        return p
    return Path(os.environ.get("NEICAP_WORKSPACE", ".")) / p


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_provenance(out_dir, command: str, args: dict, inputs, outputs, seed=None):
    """Stamp inputs (with hashes), arguments, and tool version beside outputs.

    The stamp is named after the first output so runs sharing a directory keep
    their stamps; directory-level runs fall back to provenance.json.
    """
    stamp = {
        "tool": "neicap",
        "version": __version__,
        "command": command,
        "args": {k: v for k, v in sorted(args.items()) if k != "func"},
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs if Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
    }
    out_dir = Path(out_dir)
    first = Path(outputs[0]) if outputs else None
    if first is not None and first.is_file():
        path = out_dir / f"{first.name}.provenance.json"
    else:
        path = out_dir / "provenance.json"
    path.write_text(json.dumps(stamp, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def _load_config_file(path):
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def cmd_construct(args) -> int:
    from .construct import (
        ConstructionConfig,
        load_multihop,
        make_bm25_near_miss,
        make_cited_non_rationale,
        make_missing_hop,
        make_placeholder,
        make_position_biased,
        make_random_irrelevant,
        make_same_document,
    )
    from .manifest import ConstructionFamily, load_corpus, parse_manifest, write_manifest
    from .retrieval import build_index

    family = ConstructionFamily.parse(args.family)
    file_cfg = _load_config_file(args.config)
    cfg_fields = {
        k: v
        for k, v in file_cfg.items()
        if k in ConstructionConfig.__dataclass_fields__
    }
    # flags win over the config file
    if args.seed is not None:
        cfg_fields["rng_seed"] = args.seed
    cfg_fields["family"] = family
    config = ConstructionConfig(**cfg_fields)

    inputs = []
    if family is ConstructionFamily.MISSING_HOP:
        examples = load_multihop(args.multihop)
        inputs.append(args.multihop)
        records = make_missing_hop(examples, config)
    else:
        corpus = load_corpus(args.corpus)
        inputs += [
            str(Path(args.corpus) / "documents.jsonl"),
            str(Path(args.corpus) / "claims.jsonl"),
        ]
        claims = sorted(corpus.claims.values(), key=lambda c: c.claim_id)
        if family is ConstructionFamily.PLACEHOLDER:
            records = make_placeholder(claims, config)
        elif family is ConstructionFamily.RANDOM_IRRELEVANT:
            records = make_random_irrelevant(claims, corpus, config)
        elif family is ConstructionFamily.POSITION_BIASED:
            records = make_position_biased(claims, corpus, config)
        elif family is ConstructionFamily.BM25_NEAR_MISS:
            records = make_bm25_near_miss(claims, corpus, build_index(corpus), config)
        elif family is ConstructionFamily.CITED_NON_RATIONALE:
            records = make_cited_non_rationale(claims, corpus, config)
        elif family is ConstructionFamily.SAME_DOCUMENT:
            refs = parse_manifest(args.reference)
            inputs.append(args.reference)
            records = make_same_document(refs, corpus, config)
        else:
            raise NeicapError(f"family {family.value} has no generator")
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(records, out)
    write_provenance(
        out.parent, "construct", vars(args), inputs, [out], seed=config.rng_seed
    )
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_split(args) -> int:
    from .manifest import (
        apply_split_assignment,
        group_disjoint_split,
        leakage_audit,
        parse_manifest,
        write_manifest,
        write_split_assignment,
    )

    ratios = tuple(float(x) for x in args.ratios.split(","))
    records = parse_manifest(args.manifest)
    assignment = group_disjoint_split(records, ratios, args.seed)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_split_assignment(assignment, out)
    outputs = [out]
    if args.apply:
        stamped = apply_split_assignment(records, assignment)
        applied = out_path(args.apply)
        write_manifest(stamped, applied)
        outputs.append(applied)
        report = leakage_audit([(Path(args.manifest).stem, stamped)])
        if not report.clean:
            raise NeicapError("split application produced leaks (bug)")
    write_provenance(
        out.parent, "split", vars(args), [args.manifest], outputs, seed=args.seed
    )
    print(f"assigned {len(assignment)} groups; wrote {out}")
    return 0


def cmd_audit(args) -> int:
    from .audit import (
        ProbeConfig,
        audit_summary,
        probe_report_csv,
        separability_probe,
        shallow_features,
        summary_to_csv,
    )
    from .manifest import parse_manifest, split_statistics, stats_to_csv, leakage_audit
    from .retrieval import tokenize

    out_dir = out_path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    inputs = list(args.manifest)
    all_named = []
    for item in args.manifest:
        name, _, path = item.rpartition("=")
        if not name:
            name = Path(path).stem
        all_named.append((name, parse_manifest(path)))

    summary_rows = []
    features_by_variant = {}
    for name, records in all_named:
        feats = [shallow_features(r) for r in records]
        features_by_variant[name] = (records, feats)
        for row in audit_summary(records, feats):
            summary_rows.append((name, row))
    summary_path = out_dir / "audit_summary.csv"
    lines = ["variant," + summary_to_csv([]).strip()]
    body = []
    for name, row in summary_rows:
        body.append(name + "," + summary_to_csv([row]).splitlines()[1])
    summary_path.write_text(
        "\n".join([lines[0]] + body) + "\n", encoding="utf-8"
    )
    outputs.append(summary_path)

    stats_rows = []
    for name, records in all_named:
        stats_rows += split_statistics(records, tokenize, variant=name)
    stats_path = out_dir / "split_statistics.csv"
    stats_path.write_text(stats_to_csv(stats_rows), encoding="utf-8")
    outputs.append(stats_path)

    leak_path = out_dir / "leakage.csv"
    leak_path.write_text(leakage_audit(all_named).to_csv(), encoding="utf-8")
    outputs.append(leak_path)

    if args.probe:
        fam_a, fam_b = args.probe
        group_a, group_b = [], []
        for records, feats in features_by_variant.values():
            for r, f in zip(records, feats):
                if r.construction.value == fam_a:
                    group_a.append(f)
                elif r.construction.value == fam_b:
                    group_b.append(f)
        if not group_a or not group_b:
            raise NeicapError(
                f"probe needs records of both families {fam_a!r} and {fam_b!r} "
                f"across the supplied manifests"
            )
        res = separability_probe(
            group_a, group_b, folds=args.folds, config=ProbeConfig(rng_seed=args.seed)
        )
        probe_path = out_dir / "separability.csv"
        probe_path.write_text(
            probe_report_csv([(f"{fam_a}-vs-{fam_b}", res)]), encoding="utf-8"
        )
        outputs.append(probe_path)

    write_provenance(out_dir, "audit", vars(args), inputs, outputs, seed=args.seed)
    print(f"wrote {len(outputs)} audit artifacts to {out_dir}")
    return 0


def cmd_probe(args) -> int:
    from .manifest import parse_manifest
    from .metrics import drop_summary
    from .probe import SuiteVariant, TrainConfig, run_construction_matrix
    from .report import render_matrix, render_metric_table

    if args.action != "matrix":
        raise NeicapError(f"unknown probe action {args.action!r}")
    seeds = [int(s) for s in args.seeds.split(",")]
    variants = []
    inputs = []
    for item in args.variant:
        name, _, path = item.rpartition("=")
        if not name:
            name = Path(path).stem.replace("variant_", "")
        records = parse_manifest(path)
        inputs.append(path)
        variants.append(
            SuiteVariant(
                family=name,
                train=[r for r in records if r.split == "train"],
                eval=[r for r in records if r.split == args.eval_split],
            )
        )
    out_dir = out_path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_construction_matrix(
        variants,
        spec=args.spec,
        seeds=seeds,
        config=TrainConfig(balanced=args.balanced),
        out_dir=out_dir / "logs",
    )
    artifact = render_matrix(result.nei_f1_means(), metric_name="nei_f1")
    (out_dir / "nei_f1_matrix.csv").write_text(artifact.csv, encoding="utf-8")
    (out_dir / "nei_f1_matrix.txt").write_text(artifact.text, encoding="utf-8")
    outputs = [out_dir / "nei_f1_matrix.csv", out_dir / "nei_f1_matrix.txt"]
    macro = {k: cell.macro_f1.mean for k, cell in result.cells.items()}
    m_art = render_matrix(macro, metric_name="macro_f1")
    (out_dir / "macro_f1_matrix.csv").write_text(m_art.csv, encoding="utf-8")
    outputs.append(out_dir / "macro_f1_matrix.csv")
    try:
        rows = drop_summary(result.nei_f1_means())
        drop_csv = render_metric_table(
            [
                {
                    "construction": r.train_construction,
                    "matched": r.matched,
                    "bm25": r.bm25,
                    "cited": r.cited,
                    "hard_drop": r.hard_drop,
                }
                for r in rows
            ],
            ("construction", "matched", "bm25", "cited", "hard_drop"),
        )
        (out_dir / "drop_summary.csv").write_text(drop_csv, encoding="utf-8")
        outputs.append(out_dir / "drop_summary.csv")
    except NeicapError:
        pass  # suite without both hard families: no drop table
    write_provenance(out_dir, "probe", vars(args), inputs, outputs, seed=seeds)
    print(f"matrix over {len(variants)} variants x {len(seeds)} seeds -> {out_dir}")
    return 0


def cmd_eval(args) -> int:
    from .manifest import parse_manifest
    from .metrics import classification_metrics, one_class_metrics, parse_predictions
    from .report import render_metric_table

    gold = parse_manifest(args.gold)
    preds = parse_predictions(args.preds)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    construction = args.construction or (
        gold[0].construction.value if gold else ""
    )
    if args.one_class:
        rep = one_class_metrics(
            gold,
            preds,
            bootstrap_B=args.bootstrap,
            rng_seed=args.seed,
            groups=[g.group_id for g in gold] if args.group_bootstrap else None,
        )
        row = {
            "construction": construction,
            "n": rep.n,
            "nei_recall": rep.nei_recall,
            "false_support_rate": rep.false_support_rate,
            "false_refute_rate": rep.false_refute_rate,
            "mean_p_nei": rep.mean_p_nei,
            "mean_p_support": rep.mean_p_support,
            "mean_p_refute": rep.mean_p_refute,
        }
        for name in ("nei_recall", "mean_p_nei"):
            if name in rep.cis:
                row[f"{name}_ci_low"], row[f"{name}_ci_high"] = rep.cis[name]
        cols = tuple(row.keys())
        out.write_text(render_metric_table([row], cols), encoding="utf-8")
    else:
        rep = classification_metrics(gold, preds)
        row = {
            "construction": construction,
            "n": rep.n,
            "accuracy": rep.accuracy,
            "macro_f1": rep.macro_f1,
            "nei_f1": rep.nei_f1,
        }
        for label, scores in rep.per_label.items():
            row[f"f1_{label.value.lower()}"] = scores.f1
        cols = tuple(row.keys())
        out.write_text(render_metric_table([row], cols), encoding="utf-8")
    write_provenance(
        out.parent, "eval", vars(args), [args.gold, args.preds], [out], seed=args.seed
    )
    print(f"wrote {out}")
    return 0


def cmd_fixed_claim(args) -> int:
    from .construct import make_fixed_claim_pairs
    from .manifest import parse_manifest
    from .metrics import (
        fixed_claim_diagnostics,
        parse_predictions,
        prediction_coverage,
    )
    from .report import render_metric_table

    refs = parse_manifest(args.reference)
    hard = parse_manifest(args.hard)
    pairing = make_fixed_claim_pairs(refs, hard)
    preds = parse_predictions(args.preds)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # coverage summary first (the reporting discipline: document coverage
    # before interpreting fixed-claim diagnostics)
    coverage_rows = []
    for scope, records in (
        ("fixed_claim_reference_side", [p.reference_example for p in pairing.pairs]),
        ("fixed_claim_insufficient_side", [p.hard_example for p in pairing.pairs]),
    ):
        cov = prediction_coverage([r.example_id for r in records], preds)
        coverage_rows.append(
            f"{scope},{cov.n_expected},{cov.n_predicted_valid},{cov.coverage:.3f}"
        )
    coverage_path = Path(str(out) + ".coverage.csv")
    coverage_path.write_text(
        "scope,expected,predicted,coverage\n" + "\n".join(coverage_rows) + "\n",
        encoding="utf-8",
    )
    rep = fixed_claim_diagnostics(pairing.pairs, preds)
    row = {
        "construction": "fixed_claim",
        "n_pairs": rep.n_pairs,
        "reference_accuracy": rep.reference_accuracy,
        "hard_recall": rep.hard_recall,
        "prob_drop_success": rep.prob_drop_success,
        "strict_swap_success": rep.strict_swap_success,
        "mean_delta": rep.mean_delta,
    }
    out.write_text(render_metric_table([row], tuple(row.keys())), encoding="utf-8")
    if pairing.reference_only or pairing.hard_only:
        unpaired = Path(str(out) + ".unpaired.json")
        unpaired.write_text(
            json.dumps(
                {
                    "reference_only": pairing.reference_only,
                    "hard_only": pairing.hard_only,
                },
                indent=2,
            ),
            encoding="utf-8",
        )
    write_provenance(
        out.parent,
        "fixed-claim",
        vars(args),
        [args.reference, args.hard, args.preds],
        [out, coverage_path],
    )
    print(f"wrote {out} ({rep.n_pairs} pairs)")
    return 0


def cmd_validate_sample(args) -> int:
    from .manifest import parse_manifest
    from .validate import build_audit_packet, write_packet

    candidates = parse_manifest(args.candidates)
    packet = build_audit_packet(candidates, args.n, args.seed)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_packet(packet, out)
    write_provenance(
        out.parent, "validate-sample", vars(args), [args.candidates], [out],
        seed=args.seed,
    )
    print(f"wrote blinded packet {packet.packet_id} ({len(packet.items)} items) to {out}")
    return 0


def cmd_validate_merge(args) -> int:
    from .validate import (
        merge_consensus,
        read_annotations,
        validity_rates,
        validation_summary_csv,
    )

    ann_a = read_annotations(args.a)
    ann_b = read_annotations(args.b)
    resolutions = read_annotations(args.resolutions) if args.resolutions else []
    merge = merge_consensus(ann_a, ann_b, resolutions)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    finals = [
        {
            "item_id": f.item_id,
            "decision": f.label,
            "subtype": f.subtype,
            "source": f.source,
        }
        for f in (merge.finals[k] for k in sorted(merge.finals))
    ]
    out.write_text(
        "\n".join(json.dumps(f) for f in finals) + ("\n" if finals else ""),
        encoding="utf-8",
    )
    outputs = [out]
    print(
        f"{len(merge.finals)} finals, {len(merge.disagreements)} open disagreements; "
        f"agreement raw={merge.raw_agreement:.3f} binary={merge.binary_agreement:.3f}"
    )
    if merge.disagreements:
        open_path = Path(str(out) + ".disagreements.jsonl")
        open_path.write_text(
            "\n".join(
                json.dumps(
                    {
                        "item_id": d.item_id,
                        "a": d.a.to_json(),
                        "b": d.b.to_json(),
                    }
                )
                for d in merge.disagreements
            )
            + "\n",
            encoding="utf-8",
        )
        outputs.append(open_path)
    else:
        rates = validity_rates(merge, bootstrap_B=args.bootstrap, rng_seed=args.seed)
        rates_path = Path(str(out) + ".rates.csv")
        rates_path.write_text(validation_summary_csv(rates), encoding="utf-8")
        outputs.append(rates_path)
    write_provenance(
        out.parent, "validate-merge", vars(args), [args.a, args.b], outputs,
        seed=args.seed,
    )
    return 0


def cmd_derive_hard(args) -> int:
    from .manifest import parse_manifest, write_manifest
    from .validate import FinalLabel, MergeResult, derive_hard_subset

    finals: dict[str, FinalLabel] = {}
    for line in Path(args.finals).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        finals[obj["item_id"]] = FinalLabel(
            item_id=obj["item_id"],
            label=obj["decision"],
            subtype=obj.get("subtype"),
            source=obj.get("source", "agreement"),
        )
    merge = MergeResult(
        finals=finals,
        disagreements=[],
        raw_agreement=1.0,
        binary_agreement=1.0,
        n_items=len(finals),
    )
    candidates = parse_manifest(args.candidates)
    hard, heldout = derive_hard_subset(
        merge, candidates, test_fraction=args.test_fraction, rng_seed=args.seed
    )
    out_hard = out_path(args.out_hard)
    out_hard.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(hard, out_hard)
    out_test = out_path(args.out_test)
    write_manifest(heldout, out_test)
    write_provenance(
        out_hard.parent,
        "derive-hard",
        vars(args),
        [args.finals, args.candidates],
        [out_hard, out_test],
        seed=args.seed,
    )
    print(f"hard subset n={len(hard)}, held-out test n={len(heldout)}")
    return 0


def cmd_report(args) -> int:
    from .metrics import drop_summary
    from .report import parse_matrix_csv, render_matrix, render_metric_table

    cells = parse_matrix_csv(Path(args.matrix).read_text(encoding="utf-8"))
    artifact = render_matrix(cells, metric_name=args.metric)
    out_dir = out_path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{args.metric}_matrix.txt").write_text(artifact.text, encoding="utf-8")
    (out_dir / f"{args.metric}_matrix.csv").write_text(artifact.csv, encoding="utf-8")
    outputs = [out_dir / f"{args.metric}_matrix.txt", out_dir / f"{args.metric}_matrix.csv"]
    if args.drop:
        rows = drop_summary(cells)
        drop_csv = render_metric_table(
            [
                {
                    "construction": r.train_construction,
                    "matched": r.matched,
                    "bm25": r.bm25,
                    "cited": r.cited,
                    "hard_drop": r.hard_drop,
                }
                for r in rows
            ],
            ("construction", "matched", "bm25", "cited", "hard_drop"),
        )
        (out_dir / "drop_summary.csv").write_text(drop_csv, encoding="utf-8")
        outputs.append(out_dir / "drop_summary.csv")
    write_provenance(out_dir, "report", vars(args), [args.matrix], outputs)
    print(f"wrote {len(outputs)} report artifacts to {out_dir}")
    return 0


def cmd_release_audit(args) -> int:
    from .report import checklist_to_lines, release_audit

    results = release_audit(args.workspace)
    text = checklist_to_lines(results)
    if args.out:
        out_path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    critical_failures = [r for r in results if r.critical and not r.passed]
    if critical_failures:
        print(
            f"FAIL: {len(critical_failures)} critical check(s) failed",
            file=sys.stderr,
        )
        return 1
    print("release audit passed", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    from .serve import run_server

    annotators = args.annotators.split(",") if args.annotators else ["a1", "a2"]
    run_server(
        args.packet,
        port=args.port,
        annotators=annotators,
        store_path=args.store,
        static_dir=args.static,
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neicap",
        description="construction-aware NEI evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"neicap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="generate NEI records for one family")
    p.add_argument("--family", required=True)
    p.add_argument("--config", help="JSON config file; flags win over the file")
    p.add_argument("--corpus", default=None, help="corpus directory")
    p.add_argument("--reference", help="reference manifest (same_document family)")
    p.add_argument("--multihop", help="multi-hop input file (missing_hop family)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("split", help="group-disjoint split assignment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, help="assignment TSV")
    p.add_argument("--apply", help="also write the manifest with splits applied")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("audit", help="shallow-feature audit, statistics, leakage")
    p.add_argument(
        "--manifest",
        action="append",
        required=True,
        help="manifest path, optionally name=path; repeatable",
    )
    p.add_argument("--probe", nargs=2, metavar=("FAMILY_A", "FAMILY_B"))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("probe", help="shallow-baseline construction matrix")
    p.add_argument("action", choices=["matrix"])
    p.add_argument(
        "--variant", action="append", required=True, help="family=manifest; repeatable"
    )
    p.add_argument("--spec", default="tfidf_claim_evidence")
    p.add_argument("--seeds", default="13,17,23,29,37")
    p.add_argument("--eval-split", default="test")
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("eval", help="score a prediction log against a gold manifest")
    p.add_argument("--gold", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--one-class", action="store_true")
    p.add_argument(
        "--macro-f1",
        action="store_true",
        help="three-way metrics incl. Macro-F1 (the default mode)",
    )
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates")
    p.add_argument("--group-bootstrap", action="store_true")
    p.add_argument("--construction", default="")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fixed-claim", help="fixed-claim diagnostics")
    p.add_argument("--reference", required=True)
    p.add_argument("--hard", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixed_claim)

    p = sub.add_parser("validate-sample", help="build a blinded audit packet")
    p.add_argument("--candidates", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate_sample)

    p = sub.add_parser("validate-merge", help="merge dual-annotator labels")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--resolutions")
    p.add_argument("--bootstrap", type=int, default=2000)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", required=True, help="finals JSONL")
    p.set_defaults(func=cmd_validate_merge)

    p = sub.add_parser("derive-hard", help="derive the adjudicated hard subset")
    p.add_argument("--finals", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--test-fraction", type=float, default=0.28)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out-hard", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_derive_hard)

    p = sub.add_parser("report", help="render matrix and drop tables")
    p.add_argument("--matrix", required=True, help="matrix CSV")
    p.add_argument("--metric", default="nei_f1")
    p.add_argument("--drop", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("release-audit", help="run the release checklist")
    p.add_argument("--workspace", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_release_audit)

    p = sub.add_parser("serve", help="run the adjudication HTTP service")
    p.add_argument("--packet", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--annotators", default="a1,a2")
    p.add_argument("--store", default="adjudication_log.jsonl")
    p.add_argument("--static", help="directory with the built UI")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NeicapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
