"""Human-validation workflow: blinded packets, consensus merge, validity rates,
and derivation of the adjudicated hard-NEI evaluation subset.

Wire-format note: the in-memory adjudication type carries a ``label`` field, but
the serialized annotation key is ``decision``. This keeps the blinding guarantee
mechanically checkable - no packet or service payload ever contains the field
names used for gold labels, construction tags, or model predictions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AdjudicationError
from .manifest import ManifestRecord, group_disjoint_split
from .metrics import bootstrap_ci

ADJUDICATION_LABELS = (
    "truly_insufficient",
    "actually_supported",
    "actually_contradicted",
    "ambiguous",
    "invalid_or_unreadable",
)
SUBTYPES = ("broad_topic", "near_miss", "partial", "topic_unrelated")

CONSENSUS_ANNOTATOR = "consensus"

# Field names that must never appear in a blinded artifact. ``label`` covers the
# manifest gold label; adjudication decisions are serialized as ``decision``.
FORBIDDEN_FIELD_NAMES = frozenset(
    {
        "label",
        "gold_label",
        "construction",
        "split",
        "group_id",
        "validation_status",
        "adjudicated_label",
        "retrieval_method",
        "retrieval_rank",
        "bm25_score",
        "sentence_position",
        "document_id",
        "sentence_ids",
        "pred_label",
        "p_support",
        "p_refute",
        "p_nei",
    }
)


@dataclass
class AdjudicationRecord:
    """One annotator's blinded judgment under the 5-way schema."""

    item_id: str
    annotator_id: str
    label: str
    subtype: str | None = None
    timestamp: str = ""

    def __post_init__(self):
        if self.label not in ADJUDICATION_LABELS:
            raise AdjudicationError(f"unknown adjudication label {self.label!r}")
        if self.subtype is not None:
            if self.subtype not in SUBTYPES:
                raise AdjudicationError(f"unknown subtype {self.subtype!r}")
            if self.label != "truly_insufficient":
                raise AdjudicationError(
                    "subtype is only valid with the truly_insufficient label"
                )

    def to_json(self) -> dict:
        out = {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "decision": self.label,
        }
        if self.subtype is not None:
            out["subtype"] = self.subtype
        if self.timestamp:
            out["timestamp"] = self.timestamp
        return out


def read_annotations(source) -> list[AdjudicationRecord]:
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    out = []
    for line in lines:
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            AdjudicationRecord(
                item_id=str(obj["item_id"]),
                annotator_id=str(obj["annotator_id"]),
                label=str(obj["decision"]),
                subtype=obj.get("subtype"),
                timestamp=str(obj.get("timestamp", "")),
            )
        )
    return out


def write_annotations(records: Iterable[AdjudicationRecord], path) -> None:
    lines = [json.dumps(r.to_json()) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# blinded packets
# ---------------------------------------------------------------------------


@dataclass
class PacketItem:
    item_id: str
    claim: str
    evidence: str


@dataclass
class Packet:
    packet_id: str
    items: list[PacketItem]


def build_audit_packet(
    candidates: Sequence[ManifestRecord], n: int, rng_seed: int
) -> Packet:
    """Sample n candidate records into a blinded packet.

    Packet items carry only item_id, claim, and evidence text; gold labels,
    construction tags, retrieval metadata, and machine predictions are absent by
    construction. Sampling is deterministic under the seed.
    """
    non_candidates = [
        r.example_id for r in candidates if r.validation_status != "candidate"
    ]
    if non_candidates:
        raise AdjudicationError(
            f"packet inputs must have validation_status=candidate; offending ids: "
            f"{non_candidates[:5]}"
        )
    if n > len(candidates):
        raise AdjudicationError(
            f"requested {n} items but only {len(candidates)} candidates exist"
        )
    ordered = sorted(candidates, key=lambda r: r.example_id)
    rng = np.random.default_rng(rng_seed)
    picked = rng.choice(len(ordered), size=n, replace=False)
    items = [
        PacketItem(
            item_id=ordered[i].example_id,
            claim=ordered[i].claim,
            evidence=ordered[i].evidence_text(),
        )
        for i in picked
    ]
    digest = hashlib.blake2b(
        json.dumps([it.item_id for it in items]).encode() + str(rng_seed).encode(),
        digest_size=6,
    ).hexdigest()
    return Packet(packet_id=f"pkt-{digest}", items=items)


def serialize_packet(packet: Packet) -> str:
    lines = [json.dumps({"packet_id": packet.packet_id, "n_items": len(packet.items)})]
    for it in packet.items:
        lines.append(
            json.dumps(
                {"item_id": it.item_id, "claim": it.claim, "evidence": it.evidence},
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n"


def write_packet(packet: Packet, path) -> None:
    Path(path).write_text(serialize_packet(packet), encoding="utf-8")


def read_packet(path) -> Packet:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise AdjudicationError("empty packet file")
    header = json.loads(lines[0])
    items = []
    for line in lines[1:]:
        if not line.strip():
            continue
        obj = json.loads(line)
        items.append(
            PacketItem(
                item_id=str(obj["item_id"]),
                claim=str(obj["claim"]),
                evidence=str(obj["evidence"]),
            )
        )
    return Packet(packet_id=str(header["packet_id"]), items=items)


def scan_for_forbidden_fields(payload) -> list[str]:
    """Collect every forbidden field name appearing as a key anywhere in a
    JSON-like payload (dict/list tree or a serialized JSONL string)."""
    hits: list[str] = []

    def walk(node):
        if isinstance(node, dict):
            for key, value in node.items():
                if key in FORBIDDEN_FIELD_NAMES:
                    hits.append(key)
                walk(value)
        elif isinstance(node, list):
            for value in node:
                walk(value)

    if isinstance(payload, str):
        for line in payload.splitlines():
            if line.strip():
                walk(json.loads(line))
    else:
        walk(payload)
    return hits


# ---------------------------------------------------------------------------
# consensus merge
# ---------------------------------------------------------------------------


@dataclass
class FinalLabel:
    item_id: str
    label: str
    subtype: str | None
    source: str  # agreement | consensus


@dataclass
class Disagreement:
    item_id: str
    a: AdjudicationRecord
    b: AdjudicationRecord


@dataclass
class MergeResult:
    finals: dict[str, FinalLabel]
    disagreements: list[Disagreement]
    raw_agreement: float
    binary_agreement: float
    n_items: int

    @property
    def unresolved(self) -> list[str]:
        return [d.item_id for d in self.disagreements]


def merge_consensus(
    annotations_a: Sequence[AdjudicationRecord],
    annotations_b: Sequence[AdjudicationRecord],
    resolutions: Sequence[AdjudicationRecord] = (),
) -> MergeResult:
    """Merge two annotator streams into final labels.

    Items agreeing on (label, subtype) finalize immediately. Fine-level
    disagreements finalize only through an explicit resolution record carrying
    annotator_id "consensus". Two agreement rates are reported: raw agreement at
    the (label, subtype) level and the coarser binary agreement on the
    hard-NEI-versus-contaminated distinction.
    """
    by_a = {r.item_id: r for r in annotations_a}
    by_b = {r.item_id: r for r in annotations_b}
    if set(by_a) != set(by_b):
        missing_a = sorted(set(by_b) - set(by_a))
        missing_b = sorted(set(by_a) - set(by_b))
        raise AdjudicationError(
            f"annotator coverage mismatch; missing from A: {missing_a[:5]}, "
            f"missing from B: {missing_b[:5]}"
        )
    res_by_item: dict[str, AdjudicationRecord] = {}
    for r in resolutions:
        if r.annotator_id != CONSENSUS_ANNOTATOR:
            raise AdjudicationError(
                f"resolution for {r.item_id!r} must carry annotator_id "
                f"'{CONSENSUS_ANNOTATOR}'"
            )
        res_by_item[r.item_id] = r
    finals: dict[str, FinalLabel] = {}
    disagreements: list[Disagreement] = []
    fine_agree = 0
    binary_agree = 0
    items = sorted(by_a)
    for item_id in items:
        a, b = by_a[item_id], by_b[item_id]
        fine = a.label == b.label and a.subtype == b.subtype
        binary = (a.label == "truly_insufficient") == (b.label == "truly_insufficient")
        fine_agree += fine
        binary_agree += binary
        if fine:
            finals[item_id] = FinalLabel(item_id, a.label, a.subtype, "agreement")
        elif item_id in res_by_item:
            r = res_by_item.pop(item_id)
            finals[item_id] = FinalLabel(item_id, r.label, r.subtype, "consensus")
        else:
            disagreements.append(Disagreement(item_id, a, b))
    if res_by_item:
        raise AdjudicationError(
            f"resolution records for non-disagreeing items: {sorted(res_by_item)[:5]}"
        )
    n = len(items)
    return MergeResult(
        finals=finals,
        disagreements=disagreements,
        raw_agreement=fine_agree / n if n else 1.0,
        binary_agreement=binary_agree / n if n else 1.0,
        n_items=n,
    )


# ---------------------------------------------------------------------------
# validity rates
# ---------------------------------------------------------------------------

RATE_NAMES = (
    "valid_nei_rate",
    "contamination_rate",
    "actually_supported_rate",
    "actually_refuted_rate",
    "ambiguous_invalid_rate",
    "hard_rate_among_valid",
    "topic_unrelated_rate_among_valid",
)


@dataclass
class ValidationSummary:
    n_audited: int
    valid_nei_rate: float
    contamination_rate: float
    actually_supported_rate: float
    actually_refuted_rate: float
    ambiguous_invalid_rate: float
    hard_rate_among_valid: float
    topic_unrelated_rate_among_valid: float
    cis: dict[str, tuple[float, float]] = field(default_factory=dict)


def _is_hard(final: FinalLabel) -> bool:
    # Hard = truly insufficient and not topic-unrelated; a missing subtype
    # counts as hard (only the explicit topic_unrelated subtype is excluded).
    return final.label == "truly_insufficient" and final.subtype != "topic_unrelated"


def validity_rates(
    merge: MergeResult,
    bootstrap_B: int = 0,
    bootstrap_level: float = 0.95,
    rng_seed: int = 13,
) -> ValidationSummary:
    """Validity and contamination rates over a fully finalized pool.

    valid = N_insufficient / N_audited; contamination is everything else
    (actually supported, actually contradicted, ambiguous, invalid/unreadable).
    The actually_contradicted count is reported under the refuted-rate name so
    report columns match the three-way label vocabulary.
    """
    if merge.unresolved:
        raise AdjudicationError(
            f"cannot compute rates with unresolved disagreements: "
            f"{merge.unresolved[:5]}"
        )
    finals = [merge.finals[k] for k in sorted(merge.finals)]
    n = len(finals)
    if n == 0:
        raise AdjudicationError("no finalized items")
    insufficient = np.array([f.label == "truly_insufficient" for f in finals], float)
    supported = np.array([f.label == "actually_supported" for f in finals], float)
    refuted = np.array([f.label == "actually_contradicted" for f in finals], float)
    amb_invalid = np.array(
        [f.label in ("ambiguous", "invalid_or_unreadable") for f in finals], float
    )
    hard = np.array([_is_hard(f) for f in finals], float)
    topic_unrelated = np.array(
        [f.label == "truly_insufficient" and f.subtype == "topic_unrelated" for f in finals],
        float,
    )

    n_valid = insufficient.sum()
    summary = ValidationSummary(
        n_audited=n,
        valid_nei_rate=float(insufficient.mean()),
        contamination_rate=float(1.0 - insufficient.mean()),
        actually_supported_rate=float(supported.mean()),
        actually_refuted_rate=float(refuted.mean()),
        ambiguous_invalid_rate=float(amb_invalid.mean()),
        hard_rate_among_valid=float(hard.sum() / n_valid) if n_valid else 0.0,
        topic_unrelated_rate_among_valid=float(topic_unrelated.sum() / n_valid)
        if n_valid
        else 0.0,
    )
    if bootstrap_B > 0:
        simple = {
            "valid_nei_rate": insufficient,
            "contamination_rate": 1.0 - insufficient,
            "actually_supported_rate": supported,
            "actually_refuted_rate": refuted,
            "ambiguous_invalid_rate": amb_invalid,
        }
        for name, values in simple.items():
            summary.cis[name] = bootstrap_ci(
                values, B=bootstrap_B, level=bootstrap_level, rng_seed=rng_seed
            )
        # Ratio statistics resample the whole pool and recompute the ratio.
        for name, numer in (
            ("hard_rate_among_valid", hard),
            ("topic_unrelated_rate_among_valid", topic_unrelated),
        ):
            paired = np.stack([insufficient, numer], axis=1)
            rng = np.random.default_rng(rng_seed)
            reps = np.empty(bootstrap_B)
            for i in range(bootstrap_B):
                take = rng.integers(0, n, size=n)
                sample = paired[take]
                ins = sample[:, 0].sum()
                reps[i] = sample[:, 1].sum() / ins if ins else 0.0
            lo, hi = np.quantile(
                reps, [(1 - bootstrap_level) / 2, (1 + bootstrap_level) / 2]
            )
            summary.cis[name] = (float(lo), float(hi))
    return summary


VALIDATION_CSV_COLUMNS = ("metric", "observed", "ci_low", "ci_high")


def validation_summary_csv(summary: ValidationSummary) -> str:
    lines = [",".join(VALIDATION_CSV_COLUMNS)]
    for name in RATE_NAMES:
        value = getattr(summary, name)
        ci = summary.cis.get(name)
        lo = f"{ci[0]:.3f}" if ci else ""
        hi = f"{ci[1]:.3f}" if ci else ""
        lines.append(f"{name},{value:.3f},{lo},{hi}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# hard subset derivation
# ---------------------------------------------------------------------------


def derive_hard_subset(
    merge: MergeResult,
    candidates: Sequence[ManifestRecord],
    test_fraction: float = 0.28,
    rng_seed: int = 13,
) -> tuple[list[ManifestRecord], list[ManifestRecord]]:
    """Derive the adjudicated hard manifest and its group-disjoint held-out test.

    Hard items are finalized truly_insufficient without the topic_unrelated
    subtype. Records are stamped validation_status=valid_nei with the
    adjudicated label; non-test records land in the ``audit`` split. The default
    test fraction 0.28 is a reverse-engineered configuration default, not a
    published constant.
    """
    if merge.unresolved:
        raise AdjudicationError(
            f"cannot derive hard subset with unresolved disagreements: "
            f"{merge.unresolved[:5]}"
        )
    by_id = {r.example_id: r for r in candidates}
    hard: list[ManifestRecord] = []
    for item_id in sorted(merge.finals):
        final = merge.finals[item_id]
        if not _is_hard(final):
            continue
        rec = by_id.get(item_id)
        if rec is None:
            raise AdjudicationError(
                f"final label for unknown candidate {item_id!r}"
            )
        extra = dict(rec.extra)
        if final.subtype:
            extra["adjudicated_subtype"] = final.subtype
        hard.append(
            replace(
                rec,
                validation_status="valid_nei",
                adjudicated_label=final.label,
                extra=extra,
            )
        )
    if not hard:
        return [], []
    groups = {r.group_id for r in hard}
    if test_fraction <= 0 or len(groups) < 2:
        hard = [replace(r, split="audit") for r in hard]
        return hard, []
    assignment = group_disjoint_split(
        hard, (1.0 - test_fraction, 0.0, test_fraction), rng_seed
    )
    stamped = []
    for rec in hard:
        split = "test" if assignment[rec.group_id] == "test" else "audit"
        stamped.append(replace(rec, split=split))
    heldout = [r for r in stamped if r.split == "test"]
    return stamped, heldout
