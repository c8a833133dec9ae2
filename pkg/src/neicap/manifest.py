"""Example data model, manifest IO, group-disjoint splitting, and leakage/statistics audits.

A manifest is UTF-8 line-delimited JSON, one record per line, with snake_case
field names. Optional fields are omitted rather than written as null. Parsing
followed by serialization is canonicalizing and idempotent: field order is
normalized, evidence is always written in list-of-units form, and unknown input
fields are preserved verbatim in a side map and re-emitted sorted by key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ManifestError

SPLITS = ("train", "dev", "test", "audit")
VALIDATION_STATUSES = (
    "not_validated",
    "candidate",
    "valid_nei",
    "contaminated",
    "ambiguous",
)


class Label(str, Enum):
    SUPPORT = "SUPPORT"
    REFUTE = "REFUTE"
    NEI = "NEI"

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls(value)
        except ValueError:
            raise ManifestError(
                f"label {value!r} outside the 3-way domain SUPPORT/REFUTE/NEI"
            ) from None


class ConstructionFamily(str, Enum):
    REFERENCE = "reference"
    PLACEHOLDER = "placeholder"
    RANDOM_IRRELEVANT = "random_irrelevant"
    POSITION_BIASED = "position_biased"
    BM25_NEAR_MISS = "bm25_near_miss"
    CITED_NON_RATIONALE = "cited_non_rationale"
    SAME_DOCUMENT = "same_document"
    FIXED_CLAIM = "fixed_claim"
    MISSING_HOP = "missing_hop"

    @classmethod
    def parse(cls, value: str) -> "ConstructionFamily":
        try:
            return cls(value)
        except ValueError:
            raise ManifestError(f"unknown construction family {value!r}") from None


# NEI families that never carry human validation; marking them valid_nei is a
# release-audit failure.
NEVER_HUMAN_VALIDATED = frozenset(
    {
        ConstructionFamily.PLACEHOLDER,
        ConstructionFamily.RANDOM_IRRELEVANT,
        ConstructionFamily.POSITION_BIASED,
        ConstructionFamily.MISSING_HOP,
    }
)


@dataclass
class EvidenceUnit:
    """One evidence span: free text plus optional document/sentence provenance."""

    text: str
    doc_id: str | None = None
    sentence_ids: list[int] | None = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.doc_id is not None:
            out["doc_id"] = self.doc_id
        if self.sentence_ids is not None:
            out["sentence_ids"] = list(self.sentence_ids)
        out["text"] = self.text
        return out


REQUIRED_FIELDS = (
    "example_id",
    "claim_id",
    "group_id",
    "source_data",
    "claim",
    "evidence",
    "label",
    "construction",
    "split",
    "validation_status",
)

FIELD_ORDER = (
    "example_id",
    "claim_id",
    "group_id",
    "source_data",
    "claim",
    "evidence",
    "label",
    "construction",
    "split",
    "document_id",
    "sentence_ids",
    "retrieval_method",
    "retrieval_rank",
    "bm25_score",
    "sentence_position",
    "validation_status",
    "adjudicated_label",
)


@dataclass
class ManifestRecord:
    """One claim-evidence-label instance with construction and provenance metadata."""

    example_id: str
    claim_id: str
    group_id: str
    source_data: str
    claim: str
    evidence: list[EvidenceUnit]
    label: Label
    construction: ConstructionFamily
    split: str
    document_id: list[str] | None = None
    sentence_ids: list[int] | None = None
    retrieval_method: str | None = None
    retrieval_rank: int | None = None
    bm25_score: float | None = None
    sentence_position: list[int] | None = None
    validation_status: str = "not_validated"
    adjudicated_label: str | None = None
    extra: dict = field(default_factory=dict)

    def evidence_text(self) -> str:
        return " ".join(u.text for u in self.evidence if u.text)

    def to_json(self) -> dict:
        out: dict = {}
        for name in FIELD_ORDER:
            value = getattr(self, name)
            if value is None:
                continue
            if name == "evidence":
                value = [u.to_json() for u in value]
            elif isinstance(value, Enum):
                value = value.value
            out[name] = value
        for key in sorted(self.extra):
            out[key] = self.extra[key]
        return out


def _parse_evidence(raw, line_no: int) -> list[EvidenceUnit]:
    if isinstance(raw, str):
        return [EvidenceUnit(text=raw)]
    if not isinstance(raw, list):
        raise ManifestError(f"line {line_no}: evidence must be a string or a list")
    units = []
    for item in raw:
        if isinstance(item, str):
            units.append(EvidenceUnit(text=item))
            continue
        if not isinstance(item, dict) or "text" not in item:
            raise ManifestError(f"line {line_no}: evidence unit missing 'text'")
        sids = item.get("sentence_ids")
        units.append(
            EvidenceUnit(
                text=item["text"],
                doc_id=item.get("doc_id"),
                sentence_ids=None if sids is None else [int(s) for s in sids],
            )
        )
    return units


def _as_str_list(value) -> list[str]:
    if isinstance(value, str):
        return [value]
    return [str(v) for v in value]


def _as_int_list(value) -> list[int]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [int(value)]
    return [int(v) for v in value]


def record_from_json(obj: dict, line_no: int = 0) -> ManifestRecord:
    for name in REQUIRED_FIELDS:
        if name not in obj:
            raise ManifestError(f"line {line_no}: missing required field '{name}'")
    split = obj["split"]
    if split not in SPLITS:
        raise ManifestError(f"line {line_no}: unknown split {split!r}")
    status = obj["validation_status"]
    if status not in VALIDATION_STATUSES:
        raise ManifestError(f"line {line_no}: unknown validation_status {status!r}")
    known = set(FIELD_ORDER)
    extra = {k: v for k, v in obj.items() if k not in known}
    return ManifestRecord(
        example_id=str(obj["example_id"]),
        claim_id=str(obj["claim_id"]),
        group_id=str(obj["group_id"]),
        source_data=str(obj["source_data"]),
        claim=str(obj["claim"]),
        evidence=_parse_evidence(obj["evidence"], line_no),
        label=Label.parse(obj["label"]),
        construction=ConstructionFamily.parse(obj["construction"]),
        split=split,
        document_id=None
        if obj.get("document_id") is None
        else _as_str_list(obj["document_id"]),
        sentence_ids=None
        if obj.get("sentence_ids") is None
        else _as_int_list(obj["sentence_ids"]),
        retrieval_method=obj.get("retrieval_method"),
        retrieval_rank=None
        if obj.get("retrieval_rank") is None
        else int(obj["retrieval_rank"]),
        bm25_score=None if obj.get("bm25_score") is None else float(obj["bm25_score"]),
        sentence_position=None
        if obj.get("sentence_position") is None
        else _as_int_list(obj["sentence_position"]),
        validation_status=status,
        adjudicated_label=obj.get("adjudicated_label"),
        extra=extra,
    )


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
        return
    yield from source


def parse_manifest(source) -> list[ManifestRecord]:
    """Parse a line-delimited manifest from a path, file object, or line iterable.

    Duplicate example ids, missing required fields, and out-of-domain labels are
    hard errors; everything softer is left to validate_manifest.
    """
    records: list[ManifestRecord] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(_iter_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"line {line_no}: invalid JSON ({exc.msg})") from None
        rec = record_from_json(obj, line_no)
        if rec.example_id in seen:
            raise ManifestError(
                f"duplicate example_id {rec.example_id!r} at lines "
                f"{seen[rec.example_id]} and {line_no}"
            )
        seen[rec.example_id] = line_no
        records.append(rec)
    return records


def serialize_manifest(records: Iterable[ManifestRecord]) -> str:
    lines = [json.dumps(r.to_json(), ensure_ascii=False) for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def write_manifest(records: Iterable[ManifestRecord], path) -> None:
    Path(path).write_text(serialize_manifest(records), encoding="utf-8")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    example_id: str
    rule: str
    detail: str


def validate_manifest(
    records: Sequence[ManifestRecord], corpus: "Corpus | None" = None
) -> list[Violation]:
    """Return every invariant violation; an empty list means the manifest is valid.

    Total over parseable data: semantically bad records produce violations, never
    exceptions. Sentence-id range checks run only when a corpus is supplied.
    """
    violations: list[Violation] = []
    seen: dict[str, int] = {}
    for idx, rec in enumerate(records):
        if rec.example_id in seen:
            violations.append(
                Violation(
                    rec.example_id,
                    "duplicate-example-id",
                    f"also at position {seen[rec.example_id]}",
                )
            )
        else:
            seen[rec.example_id] = idx
        if rec.label is Label.NEI and rec.construction is ConstructionFamily.REFERENCE:
            violations.append(
                Violation(
                    rec.example_id,
                    "nei-needs-family",
                    "NEI records must carry a non-reference construction family",
                )
            )
        if rec.validation_status == "valid_nei" and not rec.adjudicated_label:
            violations.append(
                Violation(
                    rec.example_id,
                    "valid-needs-adjudication",
                    "validation_status=valid_nei requires adjudicated_label",
                )
            )
        if rec.split not in SPLITS:
            violations.append(Violation(rec.example_id, "bad-split", rec.split))
        if rec.validation_status not in VALIDATION_STATUSES:
            violations.append(
                Violation(rec.example_id, "bad-validation-status", rec.validation_status)
            )
        if rec.retrieval_rank is not None and rec.retrieval_rank < 1:
            violations.append(
                Violation(rec.example_id, "bad-retrieval-rank", str(rec.retrieval_rank))
            )
        if rec.sentence_position is not None and any(
            p < 0 for p in rec.sentence_position
        ):
            violations.append(
                Violation(
                    rec.example_id, "bad-sentence-position", str(rec.sentence_position)
                )
            )
        for unit in rec.evidence:
            if not unit.text and rec.construction is not ConstructionFamily.PLACEHOLDER:
                violations.append(
                    Violation(
                        rec.example_id,
                        "empty-evidence-text",
                        "empty evidence text outside the placeholder family",
                    )
                )
            if corpus is not None and unit.doc_id is not None and unit.sentence_ids:
                doc = corpus.documents.get(unit.doc_id)
                if doc is None:
                    violations.append(
                        Violation(rec.example_id, "unknown-document", unit.doc_id)
                    )
                elif any(s < 0 or s >= len(doc.sentences) for s in unit.sentence_ids):
                    violations.append(
                        Violation(
                            rec.example_id,
                            "sentence-ids-out-of-range",
                            f"{unit.doc_id}: {unit.sentence_ids}",
                        )
                    )
    return violations


# ---------------------------------------------------------------------------
# corpus types
# ---------------------------------------------------------------------------


@dataclass
class Document:
    doc_id: str
    sentences: list[str]
    title: str | None = None

    def __post_init__(self):
        if not self.sentences:
            raise ManifestError(f"document {self.doc_id!r} has no sentences")

    def text(self) -> str:
        return " ".join(self.sentences)


@dataclass
class Claim:
    claim_id: str
    text: str
    group_id: str
    cited_doc_ids: list[str] = field(default_factory=list)
    rationales: dict[str, set[int]] = field(default_factory=dict)
    reference_label: Label | None = None


@dataclass
class Corpus:
    """Source documents plus claims with citation and rationale structure."""

    documents: dict[str, Document]
    claims: dict[str, Claim]
    source: str = "corpus"

    def check(self) -> None:
        for claim in self.claims.values():
            for doc_id in claim.cited_doc_ids:
                if doc_id not in self.documents:
                    raise ManifestError(
                        f"claim {claim.claim_id!r} cites unknown document {doc_id!r}"
                    )
            for doc_id, idxs in claim.rationales.items():
                doc = self.documents.get(doc_id)
                if doc is None:
                    raise ManifestError(
                        f"claim {claim.claim_id!r} has rationales in unknown document "
                        f"{doc_id!r}"
                    )
                bad = [i for i in idxs if i < 0 or i >= len(doc.sentences)]
                if bad:
                    raise ManifestError(
                        f"claim {claim.claim_id!r}: rationale indices {bad} out of "
                        f"range for document {doc_id!r}"
                    )


def load_corpus(directory) -> Corpus:
    """Load documents.jsonl and claims.jsonl from a corpus directory."""
    directory = Path(directory)
    documents: dict[str, Document] = {}
    for line in (directory / "documents.jsonl").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        doc = Document(
            doc_id=str(obj["doc_id"]),
            sentences=[str(s) for s in obj["sentences"]],
            title=obj.get("title"),
        )
        documents[doc.doc_id] = doc
    claims: dict[str, Claim] = {}
    for line in (directory / "claims.jsonl").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        ref = obj.get("reference_label")
        claim = Claim(
            claim_id=str(obj["claim_id"]),
            text=str(obj["claim"]),
            group_id=str(obj.get("group_id", obj["claim_id"])),
            cited_doc_ids=[str(d) for d in obj.get("cited_doc_ids", [])],
            rationales={
                str(doc_id): {int(i) for i in idxs}
                for doc_id, idxs in obj.get("rationales", {}).items()
            },
            reference_label=None if ref is None else Label.parse(ref),
        )
        claims[claim.claim_id] = claim
    corpus = Corpus(documents=documents, claims=claims, source=directory.name)
    corpus.check()
    return corpus


def write_corpus(corpus: Corpus, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "documents.jsonl", "w", encoding="utf-8") as fh:
        for doc_id in sorted(corpus.documents):
            doc = corpus.documents[doc_id]
            obj: dict = {"doc_id": doc.doc_id}
            if doc.title is not None:
                obj["title"] = doc.title
            obj["sentences"] = doc.sentences
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    with open(directory / "claims.jsonl", "w", encoding="utf-8") as fh:
        for claim_id in sorted(corpus.claims):
            c = corpus.claims[claim_id]
            obj = {
                "claim_id": c.claim_id,
                "claim": c.text,
                "group_id": c.group_id,
                "cited_doc_ids": c.cited_doc_ids,
                "rationales": {d: sorted(v) for d, v in sorted(c.rationales.items())},
            }
            if c.reference_label is not None:
                obj["reference_label"] = c.reference_label.value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# group-disjoint splitting
# ---------------------------------------------------------------------------


def group_disjoint_split(
    records: Sequence[ManifestRecord],
    ratios: tuple[float, float, float],
    rng_seed: int,
) -> dict[str, str]:
    """Assign every group_id to exactly one of train/dev/test.

    Deterministic in (group set, ratios, seed): groups are sorted, shuffled with
    a seeded generator, then greedily placed in the eligible bucket with the
    largest remaining example-count deficit. The achieved fraction of each
    bucket is within max-group-size/total of its target.
    """
    if len(ratios) != 3:
        raise ManifestError("ratios must be a (train, dev, test) triple")
    if any(r < 0 for r in ratios):
        raise ManifestError("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ManifestError(f"ratios must sum to 1 (got {sum(ratios)})")
    sizes: dict[str, int] = {}
    for rec in records:
        if not rec.group_id:
            raise ManifestError(f"record {rec.example_id!r} has no group_id")
        sizes[rec.group_id] = sizes.get(rec.group_id, 0) + 1
    groups = sorted(sizes)
    eligible = [i for i in range(3) if ratios[i] > 0]
    if len(groups) < len(eligible):
        raise ManifestError(
            f"insufficient-groups: {len(groups)} groups for "
            f"{len(eligible)} non-zero ratio buckets"
        )
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(groups))
    total = sum(sizes.values())
    targets = [r * total for r in ratios]
    assigned = [0.0, 0.0, 0.0]
    names = ("train", "dev", "test")
    out: dict[str, str] = {}
    for pos in order:
        gid = groups[pos]
        best = eligible[0]
        best_deficit = targets[best] - assigned[best]
        for i in eligible[1:]:
            deficit = targets[i] - assigned[i]
            if deficit > best_deficit:
                best, best_deficit = i, deficit
        assigned[best] += sizes[gid]
        out[gid] = names[best]
    return out


def apply_split_assignment(
    records: Sequence[ManifestRecord], assignment: dict[str, str]
) -> list[ManifestRecord]:
    missing = sorted({r.group_id for r in records} - set(assignment))
    if missing:
        raise ManifestError(f"groups without split assignment: {missing[:5]}")
    return [replace(r, split=assignment[r.group_id]) for r in records]


def write_split_assignment(assignment: dict[str, str], path) -> None:
    lines = [f"{gid}\t{split}" for gid, split in sorted(assignment.items())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_split_assignment(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        gid, split = line.split("\t")
        if split not in SPLITS:
            raise ManifestError(f"unknown split {split!r} in assignment file")
        out[gid] = split
    return out


# ---------------------------------------------------------------------------
# leakage audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WithinVariantLeak:
    variant: str
    group_id: str
    splits: tuple[str, ...]


@dataclass(frozen=True)
class CrossVariantLeak:
    group_id: str
    assignments: tuple[tuple[str, str], ...]  # (variant, split)


@dataclass
class LeakageReport:
    within_variant: list[WithinVariantLeak]
    cross_variant: list[CrossVariantLeak]
    # Documents appearing in more than one split are source-distribution
    # metadata, never claim leakage.
    document_overlap: dict[str, int]

    @property
    def clean(self) -> bool:
        return not self.within_variant and not self.cross_variant

    def to_csv(self) -> str:
        lines = ["kind,variant,group_id,detail"]
        for leak in self.within_variant:
            lines.append(
                f"within,{leak.variant},{leak.group_id},{'|'.join(leak.splits)}"
            )
        for leak in self.cross_variant:
            detail = "|".join(f"{v}:{s}" for v, s in leak.assignments)
            lines.append(f"cross,,{leak.group_id},{detail}")
        for variant in sorted(self.document_overlap):
            lines.append(
                f"doc_overlap,{variant},,{self.document_overlap[variant]}"
            )
        return "\n".join(lines) + "\n"


def leakage_audit(
    manifests: Sequence[tuple[str, Sequence[ManifestRecord]]],
) -> LeakageReport:
    """Check group disjointness within and across construction variants."""
    within: list[WithinVariantLeak] = []
    group_splits_by_variant: dict[str, dict[str, set[str]]] = {}
    doc_overlap: dict[str, int] = {}
    for variant, records in manifests:
        group_splits: dict[str, set[str]] = {}
        doc_splits: dict[str, set[str]] = {}
        for rec in records:
            group_splits.setdefault(rec.group_id, set()).add(rec.split)
            for doc in rec.document_id or []:
                doc_splits.setdefault(doc, set()).add(rec.split)
        group_splits_by_variant[variant] = group_splits
        for gid in sorted(group_splits):
            if len(group_splits[gid]) > 1:
                within.append(
                    WithinVariantLeak(variant, gid, tuple(sorted(group_splits[gid])))
                )
        doc_overlap[variant] = sum(1 for s in doc_splits.values() if len(s) > 1)

    cross: list[CrossVariantLeak] = []
    all_groups = sorted(
        {g for splits in group_splits_by_variant.values() for g in splits}
    )
    for gid in all_groups:
        assignments = []
        distinct = set()
        for variant, group_splits in group_splits_by_variant.items():
            if gid in group_splits:
                for split in sorted(group_splits[gid]):
                    assignments.append((variant, split))
                    distinct.add(split)
        if len(distinct) > 1:
            cross.append(CrossVariantLeak(gid, tuple(assignments)))
    return LeakageReport(within, cross, doc_overlap)


# ---------------------------------------------------------------------------
# split statistics
# ---------------------------------------------------------------------------

STATS_COLUMNS = (
    "variant",
    "split",
    "n",
    "n_support",
    "n_refute",
    "n_nei",
    "avg_tokens_total",
    "avg_tokens_evidence",
    "avg_coverage",
    "placeholder_rate",
    "duplicate_count",
    "missing_field_count",
)


@dataclass
class SplitStats:
    variant: str
    split: str
    n: int
    n_support: int
    n_refute: int
    n_nei: int
    # token averages are reported both ways; consumers pick the convention
    avg_tokens_total: float
    avg_tokens_evidence: float
    avg_coverage: float
    placeholder_rate: float
    duplicate_count: int
    missing_field_count: int

    def row(self) -> list:
        return [getattr(self, c) for c in STATS_COLUMNS]


def split_statistics(
    records: Sequence[ManifestRecord],
    tokenizer,
    variant: str = "",
    placeholder_marker: str = "NO EVIDENCE",
) -> list[SplitStats]:
    """Per-split label counts, token averages, coverage, and hygiene counters."""
    from . import audit  # local import; audit depends on manifest types

    by_split: dict[str, list[ManifestRecord]] = {}
    for rec in records:
        by_split.setdefault(rec.split, []).append(rec)
    rows = []
    for split in sorted(by_split):
        recs = by_split[split]
        n = len(recs)
        counts = {label: 0 for label in Label}
        tok_total = 0
        tok_evidence = 0
        coverage_sum = 0.0
        placeholder_hits = 0
        missing = 0
        seen: set[str] = set()
        dup = 0
        for rec in recs:
            counts[rec.label] += 1
            if rec.example_id in seen:
                dup += 1
            seen.add(rec.example_id)
            fv = audit.shallow_features(
                rec, tokenizer=tokenizer, placeholder_marker=placeholder_marker
            )
            claim_tokens = len(tokenizer(rec.claim))
            tok_total += claim_tokens + fv.n_tokens
            tok_evidence += fv.n_tokens
            coverage_sum += fv.coverage
            placeholder_hits += fv.placeholder_flag
            if not rec.claim or (
                not rec.evidence_text()
                and rec.construction is not ConstructionFamily.PLACEHOLDER
            ):
                missing += 1
        rows.append(
            SplitStats(
                variant=variant,
                split=split,
                n=n,
                n_support=counts[Label.SUPPORT],
                n_refute=counts[Label.REFUTE],
                n_nei=counts[Label.NEI],
                avg_tokens_total=tok_total / n if n else 0.0,
                avg_tokens_evidence=tok_evidence / n if n else 0.0,
                avg_coverage=coverage_sum / n if n else 0.0,
                placeholder_rate=placeholder_hits / n if n else 0.0,
                duplicate_count=dup,
                missing_field_count=missing,
            )
        )
    if not rows:
        rows.append(
            SplitStats(variant, "", 0, 0, 0, 0, 0.0, 0.0, 0.0, 0.0, 0, 0)
        )
    return rows


def stats_to_csv(rows: Sequence[SplitStats]) -> str:
    lines = [",".join(STATS_COLUMNS)]
    for r in rows:
        lines.append(",".join(_csv_cell(v) for v in r.row()))
    return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
