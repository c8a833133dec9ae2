"""Generators for every NEI construction family, with full provenance stamping.

Generators only ever add NEI records; SUPPORT/REFUTE portions of a suite are
never touched, so reference label counts stay identical across the variants
built from one reference manifest. Each generator is a deterministic function
of (inputs, config): per-claim randomness comes from a stream keyed by
hash(rng_seed, claim_id), so concurrent runners produce schedule-independent
output.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .audit import DEFAULT_STOPWORDS
from .errors import ConstructionError
from .manifest import (
    Claim,
    ConstructionFamily,
    Corpus,
    EvidenceUnit,
    Label,
    ManifestRecord,
)
from .retrieval import Bm25Index, retrieve_top_k, tokenize

REJECTION_ATTEMPTS = 1000


@dataclass
class ConstructionConfig:
    """Knobs for the generators; family-specific fields are ignored elsewhere.

    The placeholder marker, the random-irrelevant Jaccard ceiling, the near-miss
    overlap floor, and the position rule are package defaults, not published
    constants; all are configurable here and via the CLI config file.
    """

    family: ConstructionFamily = ConstructionFamily.PLACEHOLDER
    rng_seed: int = 13
    placeholder_marker: str = "NO EVIDENCE"
    max_irrelevant_jaccard: float = 0.05
    min_nearmiss_overlap: int = 2
    position_rule: str = "first"
    k_retrieval: int = 10
    cited_block_max: int = 3
    split: str = "train"
    source_data: str | None = None


def claim_rng(rng_seed: int, claim_id: str) -> np.random.Generator:
    """Per-claim RNG stream keyed by (seed, claim id); stable across processes."""
    digest = hashlib.blake2b(
        f"{rng_seed}:{claim_id}".encode("utf-8"), digest_size=8
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def _content_types(text: str) -> set[str]:
    return set(tokenize(text)) - DEFAULT_STOPWORDS


def _content_jaccard(a: str, b: str) -> float:
    ta, tb = _content_types(a), _content_types(b)
    union = ta | tb
    return len(ta & tb) / len(union) if union else 0.0


def _base_record(
    claim: Claim,
    family: ConstructionFamily,
    config: ConstructionConfig,
    corpus: Corpus | None,
    **kwargs,
) -> ManifestRecord:
    source = config.source_data or (corpus.source if corpus else "synthetic")
    fields = dict(
        example_id=f"{claim.claim_id}::{family.value}",
        claim_id=claim.claim_id,
        group_id=claim.group_id,
        source_data=source,
        claim=claim.text,
        label=Label.NEI,
        construction=family,
        split=config.split,
        validation_status="not_validated",
    )
    fields.update(kwargs)
    return ManifestRecord(**fields)


def make_placeholder(
    claims: Sequence[Claim], config: ConstructionConfig
) -> list[ManifestRecord]:
    """One fixed-marker NEI record per claim; an empty marker is allowed."""
    records = []
    for claim in claims:
        records.append(
            _base_record(
                claim,
                ConstructionFamily.PLACEHOLDER,
                config,
                None,
                evidence=[EvidenceUnit(text=config.placeholder_marker)],
            )
        )
    return records


def make_random_irrelevant(
    claims: Sequence[Claim], corpus: Corpus, config: ConstructionConfig
) -> list[ManifestRecord]:
    """Whole-document evidence from a different claim group, rejection-sampled
    until the claim/evidence content Jaccard is at or below the ceiling."""
    groups_citing: dict[str, set[str]] = {}
    for c in corpus.claims.values():
        for doc_id in c.cited_doc_ids:
            groups_citing.setdefault(doc_id, set()).add(c.group_id)
    all_docs = sorted(corpus.documents)
    records = []
    for claim in claims:
        cited = set(claim.cited_doc_ids)
        eligible = [
            d
            for d in all_docs
            if d not in cited and claim.group_id not in groups_citing.get(d, ())
        ]
        if not eligible:
            raise ConstructionError(
                f"claim {claim.claim_id!r}: no documents outside its group"
            )
        rng = claim_rng(config.rng_seed, claim.claim_id)
        chosen = None
        for _ in range(REJECTION_ATTEMPTS):
            doc_id = eligible[int(rng.integers(len(eligible)))]
            doc = corpus.documents[doc_id]
            if _content_jaccard(claim.text, doc.text()) <= config.max_irrelevant_jaccard:
                chosen = doc
                break
        if chosen is None:
            raise ConstructionError(
                f"claim {claim.claim_id!r}: no eligible document under "
                f"jaccard <= {config.max_irrelevant_jaccard} after "
                f"{REJECTION_ATTEMPTS} attempts"
            )
        records.append(
            _base_record(
                claim,
                ConstructionFamily.RANDOM_IRRELEVANT,
                config,
                corpus,
                evidence=[
                    EvidenceUnit(
                        text=chosen.text(),
                        doc_id=chosen.doc_id,
                        sentence_ids=list(range(len(chosen.sentences))),
                    )
                ],
                document_id=[chosen.doc_id],
                retrieval_method="random_sample",
            )
        )
    return records


def _non_rationale_indices(claim: Claim, doc_id: str, corpus: Corpus) -> list[int]:
    doc = corpus.documents[doc_id]
    rationale = claim.rationales.get(doc_id, set())
    return [i for i in range(len(doc.sentences)) if i not in rationale]


def make_position_biased(
    claims: Sequence[Claim], corpus: Corpus, config: ConstructionConfig
) -> list[ManifestRecord]:
    """Deterministic selection of the first non-rationale sentence of a cited doc."""
    if config.position_rule != "first":
        raise ConstructionError(f"unknown position rule {config.position_rule!r}")
    records = []
    for claim in claims:
        picked = None
        for doc_id in claim.cited_doc_ids:
            non_rat = _non_rationale_indices(claim, doc_id, corpus)
            if non_rat:
                picked = (doc_id, non_rat[0])
                break
        if picked is None:
            raise ConstructionError(
                f"claim {claim.claim_id!r}: every cited document is entirely rationale"
            )
        doc_id, idx = picked
        doc = corpus.documents[doc_id]
        records.append(
            _base_record(
                claim,
                ConstructionFamily.POSITION_BIASED,
                config,
                corpus,
                evidence=[
                    EvidenceUnit(
                        text=doc.sentences[idx], doc_id=doc_id, sentence_ids=[idx]
                    )
                ],
                document_id=[doc_id],
                sentence_ids=[idx],
                sentence_position=[idx],
            )
        )
    return records


def make_bm25_near_miss(
    claims: Sequence[Claim],
    corpus: Corpus,
    index: Bm25Index,
    config: ConstructionConfig,
) -> list[ManifestRecord]:
    """Highest-ranked retrieved document that still clears the overlap floor
    after all of the claim's rationale sentences are stripped.

    The claim's own cited document may win post-stripping; provenance records
    the document and rank so analyses can stratify on it.
    """
    records = []
    for claim in claims:
        query = tokenize(claim.text)
        ranked = retrieve_top_k(index, query, config.k_retrieval)
        claim_types = _content_types(claim.text)
        best_overlap = -1
        chosen = None
        for rank, (doc_id, score) in enumerate(ranked, start=1):
            keep = _non_rationale_indices(claim, doc_id, corpus)
            if not keep:
                continue
            doc = corpus.documents[doc_id]
            text = " ".join(doc.sentences[i] for i in keep)
            overlap = len(claim_types & _content_types(text))
            if overlap > best_overlap:
                best_overlap = overlap
            if overlap >= config.min_nearmiss_overlap:
                chosen = (doc_id, keep, text, rank, score)
                break
        if chosen is None:
            raise ConstructionError(
                f"claim {claim.claim_id!r}: no retrieval candidate reaches overlap "
                f">= {config.min_nearmiss_overlap} (best {max(best_overlap, 0)})"
            )
        doc_id, keep, text, rank, score = chosen
        records.append(
            _base_record(
                claim,
                ConstructionFamily.BM25_NEAR_MISS,
                config,
                corpus,
                evidence=[EvidenceUnit(text=text, doc_id=doc_id, sentence_ids=keep)],
                document_id=[doc_id],
                sentence_ids=keep,
                retrieval_method="bm25",
                retrieval_rank=rank,
                bm25_score=score,
                validation_status="candidate",
            )
        )
    return records


def _contiguous_runs(indices: Sequence[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for i in indices:
        if runs and i == runs[-1][-1] + 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    return runs


def make_cited_non_rationale(
    claims: Sequence[Claim], corpus: Corpus, config: ConstructionConfig
) -> list[ManifestRecord]:
    """Contiguous non-rationale block (1..cited_block_max sentences) from a cited doc."""
    records = []
    for claim in claims:
        candidates: list[tuple[str, list[int]]] = []
        for doc_id in claim.cited_doc_ids:
            for run in _contiguous_runs(_non_rationale_indices(claim, doc_id, corpus)):
                candidates.append((doc_id, run))
        if not candidates:
            raise ConstructionError(
                f"claim {claim.claim_id!r}: cited documents are entirely rationale"
            )
        rng = claim_rng(config.rng_seed, claim.claim_id)
        doc_id, run = candidates[int(rng.integers(len(candidates)))]
        block_len = min(int(rng.integers(1, config.cited_block_max + 1)), len(run))
        start = int(rng.integers(0, len(run) - block_len + 1))
        idxs = run[start : start + block_len]
        doc = corpus.documents[doc_id]
        records.append(
            _base_record(
                claim,
                ConstructionFamily.CITED_NON_RATIONALE,
                config,
                corpus,
                evidence=[
                    EvidenceUnit(
                        text=" ".join(doc.sentences[i] for i in idxs),
                        doc_id=doc_id,
                        sentence_ids=idxs,
                    )
                ],
                document_id=[doc_id],
                sentence_ids=idxs,
                validation_status="candidate",
            )
        )
    return records


def make_same_document(
    reference_records: Sequence[ManifestRecord],
    corpus: Corpus,
    config: ConstructionConfig,
) -> list[ManifestRecord]:
    """One non-rationale sentence drawn from the same document as the reference
    evidence (single-sentence profile)."""
    records = []
    for ref in reference_records:
        if ref.label is Label.NEI:
            raise ConstructionError(
                f"reference example {ref.example_id!r} must be SUPPORT or REFUTE"
            )
        if not ref.document_id:
            raise ConstructionError(
                f"reference example {ref.example_id!r} names no evidence document"
            )
        doc_id = ref.document_id[0]
        claim = corpus.claims.get(ref.claim_id)
        if claim is None:
            raise ConstructionError(f"unknown claim {ref.claim_id!r}")
        non_rat = _non_rationale_indices(claim, doc_id, corpus)
        if not non_rat:
            raise ConstructionError(
                f"claim {ref.claim_id!r}: document {doc_id!r} has no non-rationale "
                f"sentence"
            )
        rng = claim_rng(config.rng_seed, ref.claim_id)
        idx = non_rat[int(rng.integers(len(non_rat)))]
        doc = corpus.documents[doc_id]
        rec = _base_record(
            claim,
            ConstructionFamily.SAME_DOCUMENT,
            config,
            corpus,
            evidence=[
                EvidenceUnit(text=doc.sentences[idx], doc_id=doc_id, sentence_ids=[idx])
            ],
            document_id=[doc_id],
            sentence_ids=[idx],
            validation_status="candidate",
        )
        records.append(replace(rec, group_id=ref.group_id, split=ref.split))
    return records


# ---------------------------------------------------------------------------
# fixed-claim pairs
# ---------------------------------------------------------------------------


@dataclass
class FixedClaimPair:
    claim_id: str
    claim: str
    group_id: str
    reference_example: ManifestRecord
    hard_example: ManifestRecord


@dataclass
class PairingReport:
    pairs: list[FixedClaimPair]
    reference_only: list[str]
    hard_only: list[str]


def make_fixed_claim_pairs(
    reference_records: Sequence[ManifestRecord],
    hard_records: Sequence[ManifestRecord],
) -> PairingReport:
    """Pair each claim's reference side with its adjudicated insufficient side.

    Hard records must carry validation_status=valid_nei; unpaired claims are
    reported rather than silently dropped; both sides are forced into the
    reference side's group.
    """
    refs = {}
    for rec in reference_records:
        if rec.label is Label.NEI:
            raise ConstructionError(
                f"reference record {rec.example_id!r} has label NEI"
            )
        refs[rec.claim_id] = rec
    hards = {}
    for rec in hard_records:
        if rec.validation_status != "valid_nei":
            raise ConstructionError(
                f"hard record {rec.example_id!r} is not adjudicated "
                f"(validation_status={rec.validation_status!r})"
            )
        hards[rec.claim_id] = rec
    pairs = []
    for claim_id in sorted(set(refs) & set(hards)):
        ref = refs[claim_id]
        hard = replace(hards[claim_id], group_id=ref.group_id)
        pairs.append(
            FixedClaimPair(
                claim_id=claim_id,
                claim=ref.claim,
                group_id=ref.group_id,
                reference_example=ref,
                hard_example=hard,
            )
        )
    return PairingReport(
        pairs=pairs,
        reference_only=sorted(set(refs) - set(hards)),
        hard_only=sorted(set(hards) - set(refs)),
    )


# ---------------------------------------------------------------------------
# missing-hop control
# ---------------------------------------------------------------------------


@dataclass
class MultiHopExample:
    claim_id: str
    claim: str
    group_id: str
    required_facts: list[tuple[str, str]]  # (fact_id, text)
    optional_facts: list[tuple[str, str]] = field(default_factory=list)


def load_multihop(path) -> list[MultiHopExample]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            MultiHopExample(
                claim_id=str(obj["claim_id"]),
                claim=str(obj["claim"]),
                group_id=str(obj.get("group_id", obj["claim_id"])),
                required_facts=[(str(f["fact_id"]), str(f["text"])) for f in obj["required_facts"]],
                optional_facts=[
                    (str(f["fact_id"]), str(f["text"]))
                    for f in obj.get("optional_facts", [])
                ],
            )
        )
    return out


def make_missing_hop(
    examples: Sequence[MultiHopExample], config: ConstructionConfig
) -> list[ManifestRecord]:
    """Drop exactly one required fact per multi-hop example; output stays
    candidate-only (never valid_nei without adjudication)."""
    records = []
    for ex in examples:
        if len(ex.required_facts) < 2:
            raise ConstructionError(
                f"claim {ex.claim_id!r}: needs >= 2 required facts, got "
                f"{len(ex.required_facts)}"
            )
        rng = claim_rng(config.rng_seed, ex.claim_id)
        removed = int(rng.integers(len(ex.required_facts)))
        removed_id = ex.required_facts[removed][0]
        kept = [f for i, f in enumerate(ex.required_facts) if i != removed]
        units = [
            EvidenceUnit(text=text, doc_id=fact_id)
            for fact_id, text in kept + list(ex.optional_facts)
        ]
        rec = ManifestRecord(
            example_id=f"{ex.claim_id}::missing_hop",
            claim_id=ex.claim_id,
            group_id=ex.group_id,
            source_data=config.source_data or "multihop",
            claim=ex.claim,
            evidence=units,
            label=Label.NEI,
            construction=ConstructionFamily.MISSING_HOP,
            split=config.split,
            document_id=[u.doc_id for u in units if u.doc_id],
            validation_status="candidate",
            extra={"removed_fact": removed_id},
        )
        records.append(rec)
    return records
