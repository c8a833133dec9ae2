"""Deterministic synthetic sample suite: a desk-scale corpus plus the five core
construction variants built from it.

The generator exists so the shipped sample data can be regenerated byte-for-byte
(``python -m neicap.synthdata --out data/sample``). Shape of the suite:

  * 200 claims in 20 disjoint topics, each claim citing its own document; every
    topic also has one review document cited by two claims, so document overlap
    across splits is non-zero while claim groups stay split-disjoint.
  * splits assigned per topic: 116 test / 70 train / 14 dev claims.
  * test split of every variant: 177 records = 76 SUPPORT + 40 REFUTE + 61 NEI,
    with identical SUPPORT/REFUTE portions across variants.

Topic vocabularies are disjoint pseudo-words, so cross-topic lexical overlap is
limited to a couple of shared template words; that keeps random-irrelevant
evidence under the construction's Jaccard ceiling while BM25 near-misses stay
high-overlap.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .construct import (
    ConstructionConfig,
    make_bm25_near_miss,
    make_cited_non_rationale,
    make_placeholder,
    make_position_biased,
    make_random_irrelevant,
)
from .manifest import (
    Claim,
    ConstructionFamily,
    Corpus,
    Document,
    EvidenceUnit,
    Label,
    ManifestRecord,
    write_corpus,
    write_manifest,
    write_split_assignment,
)
from .retrieval import build_index

FAMILIES = (
    "placeholder",
    "random_irrelevant",
    "position_biased",
    "bm25_near_miss",
    "cited_non_rationale",
)

N_TOPICS = 20
CLAIMS_PER_TOPIC = 10

_SYLLABLES = (
    "ba ce di fo gu ha ki lo mu ne pi ro sa tu ve zo "
    "lan mer tin cor dal fen gri hul jas kel nim pol quar rud".split()
)

_TOPIC_VERBS = (
    "elevates suppresses normalizes stabilizes amplifies attenuates accelerates "
    "delays improves worsens triggers prevents modulates disrupts enhances "
    "impairs induces inhibits alters regulates".split()
)


def _word_maker(rng: np.random.Generator):
    seen: set[str] = set()

    def make() -> str:
        while True:
            n = 2 + int(rng.integers(0, 2))
            word = "".join(
                _SYLLABLES[int(rng.integers(len(_SYLLABLES)))] for _ in range(n)
            )
            if word not in seen:
                seen.add(word)
                return word

    return make


@dataclass
class SampleSuite:
    corpus: Corpus
    split_of: dict[str, str]
    reference_records: list[ManifestRecord]
    variants: dict[str, list[ManifestRecord]]
    nei_claim_ids: list[str]


def _topic_splits(topic: int) -> dict[int, str]:
    if topic < 14:
        layout = {0: "test", 1: "test", 2: "test", 3: "test", 4: "test", 5: "test",
                  6: "train", 7: "train", 8: "train", 9: "dev"}
    elif topic < 16:
        layout = {0: "test", 1: "test", 2: "test", 3: "test", 4: "test", 5: "test",
                  6: "train", 7: "train", 8: "train", 9: "train"}
    else:
        layout = {0: "test", 1: "test", 2: "test", 3: "test", 4: "test",
                  5: "train", 6: "train", 7: "train", 8: "train", 9: "train"}
    return layout


def _test_label(topic: int, position: int) -> Label:
    n_test = 6 if topic < 16 else 5
    n_support = 4 if topic < 16 else 3
    assert position < n_test
    return Label.SUPPORT if position < n_support else Label.REFUTE


def build_sample_suite(seed: int = 7) -> SampleSuite:
    rng = np.random.default_rng(seed)
    word = _word_maker(rng)

    documents: dict[str, Document] = {}
    claims: dict[str, Claim] = {}
    split_of: dict[str, str] = {}
    nei_claims: list[str] = []

    for t in range(N_TOPICS):
        themes = [word() for _ in range(8)]
        population = word()
        verb = _TOPIC_VERBS[t]
        layout = _topic_splits(t)
        entities = []
        test_pos = 0
        review_id = f"rev{t:02d}"
        for i in range(CLAIMS_PER_TOPIC):
            claim_id = f"c{t:02d}{i:02d}"
            doc_id = f"d{t:02d}{i:02d}"
            entity = word()
            outcome = word()
            entities.append(entity)
            split = layout[i]
            split_of[claim_id] = split
            if split == "test":
                label = _test_label(t, test_pos)
                has_nei = test_pos in (0, 2, 4) or (t == 0 and test_pos == 1)
                test_pos += 1
            else:
                label = Label.SUPPORT if (t * CLAIMS_PER_TOPIC + i) % 3 < 2 else Label.REFUTE
                has_nei = True
            if has_nei:
                nei_claims.append(claim_id)

            claim_text = f"{entity.capitalize()} {verb} {outcome} in {population} patients."

            th = [themes[int(rng.integers(len(themes)))] for _ in range(8)]
            body = [
                f"The study enrolled {population} patients in a {th[2]} cohort followed over repeated visits.",
                f"Baseline measurements captured {entity} exposure alongside {th[3]} status.",
                f"Investigators measured {outcome} and {th[4]} levels with a standardized {th[5]} assay.",
                f"However, previous work on {entity} reported conflicting findings in {th[7]} samples.",
                f"Secondary analyses considered {outcome} variation among {population} participants.",
                f"Procedures for the {population} group followed established {th[1]} protocols.",
            ]
            order = rng.permutation(len(body))
            sentences = [
                f"Background reports on {th[0]} and {th[1]} remain inconsistent across clinical settings."
            ] + [body[j] for j in order]
            if label is Label.SUPPORT:
                rationale_main = (
                    f"In this cohort, {entity} significantly {verb} {outcome} among "
                    f"{population} patients."
                )
                rationale_extra = (
                    f"These results indicate that {entity} robustly {verb} {outcome} "
                    f"in this population."
                )
            else:
                rationale_main = (
                    f"In this cohort, {entity} did not measurably change {outcome} "
                    f"among {population} patients."
                )
                rationale_extra = (
                    f"These results indicate no reliable association between {entity} "
                    f"and {outcome} in this population."
                )
            pos_main = 1 + int(rng.integers(len(sentences) - 1))
            sentences.insert(pos_main, rationale_main)
            rationale_ids = {pos_main}
            if rng.random() < 0.35:
                pos_extra = 1 + int(rng.integers(len(sentences) - 1))
                sentences.insert(pos_extra, rationale_extra)
                rationale_ids = {s if s < pos_extra else s + 1 for s in rationale_ids}
                rationale_ids.add(pos_extra)
            sentences.append(f"Replication in independent {th[2]} cohorts is warranted.")

            documents[doc_id] = Document(doc_id=doc_id, sentences=sentences)
            cited = [doc_id] + ([review_id] if i in (0, 5) else [])
            claims[claim_id] = Claim(
                claim_id=claim_id,
                text=claim_text,
                group_id=claim_id,
                cited_doc_ids=cited,
                rationales={doc_id: rationale_ids},
                reference_label=label,
            )
        documents[review_id] = Document(
            doc_id=review_id,
            sentences=[
                f"This review surveys {themes[0]}, {themes[1]}, and {themes[2]} across heterogeneous cohorts.",
                f"Reported findings on {themes[3]} remain mixed across study designs.",
                f"Early reports emphasized {entities[0]} while later work examined {entities[5]}.",
                f"Methodological variation in {themes[4]} assessment complicates synthesis.",
                f"Standardized reporting of {themes[5]} outcomes is recommended.",
            ],
        )

    corpus = Corpus(documents=documents, claims=claims, source="sample")
    corpus.check()

    reference_records = []
    for claim_id in sorted(claims):
        claim = claims[claim_id]
        doc_id = claim.cited_doc_ids[0]
        doc = documents[doc_id]
        ids = sorted(claim.rationales[doc_id])
        reference_records.append(
            ManifestRecord(
                example_id=f"{claim_id}::reference",
                claim_id=claim_id,
                group_id=claim.group_id,
                source_data="sample",
                claim=claim.text,
                evidence=[
                    EvidenceUnit(
                        text=" ".join(doc.sentences[i] for i in ids),
                        doc_id=doc_id,
                        sentence_ids=ids,
                    )
                ],
                label=claim.reference_label,
                construction=ConstructionFamily.REFERENCE,
                split=split_of[claim_id],
                document_id=[doc_id],
                sentence_ids=ids,
            )
        )

    nei_claim_objs = [claims[cid] for cid in sorted(nei_claims)]
    config = ConstructionConfig(rng_seed=13, source_data="sample")
    index = build_index(corpus)
    generated = {
        "placeholder": make_placeholder(nei_claim_objs, config),
        "random_irrelevant": make_random_irrelevant(nei_claim_objs, corpus, config),
        "position_biased": make_position_biased(nei_claim_objs, corpus, config),
        "bm25_near_miss": make_bm25_near_miss(nei_claim_objs, corpus, index, config),
        "cited_non_rationale": make_cited_non_rationale(nei_claim_objs, corpus, config),
    }
    variants: dict[str, list[ManifestRecord]] = {}
    for family, nei_records in generated.items():
        nei_records = [replace(r, split=split_of[r.claim_id]) for r in nei_records]
        manifest = sorted(
            reference_records + nei_records, key=lambda r: r.example_id
        )
        variants[family] = manifest
    return SampleSuite(
        corpus=corpus,
        split_of=split_of,
        reference_records=reference_records,
        variants=variants,
        nei_claim_ids=sorted(nei_claims),
    )


def write_sample_suite(suite: SampleSuite, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_corpus(suite.corpus, directory / "corpus")
    write_split_assignment(suite.split_of, directory / "splits.tsv")
    for family, records in suite.variants.items():
        write_manifest(records, directory / f"variant_{family}.jsonl")
        test = [r for r in records if r.split == "test"]
        write_manifest(test, directory / f"test_{family}.jsonl")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="neicap.synthdata", description="regenerate the shipped sample suite"
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    suite = build_sample_suite(seed=args.seed)
    write_sample_suite(suite, args.out)
    counts = {f: len(v) for f, v in suite.variants.items()}
    print(f"wrote sample suite to {args.out}: {counts}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
