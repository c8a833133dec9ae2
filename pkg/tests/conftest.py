"""Shared fixtures: the shipped sample suite and small hand-built corpora."""

from __future__ import annotations

from pathlib import Path

import pytest

from neicap import _kernels
from neicap.manifest import (
    Claim,
    Corpus,
    Document,
    Label,
    load_corpus,
    parse_manifest,
)

SAMPLE_DIR = Path(__file__).resolve().parent.parent / "data" / "sample"
FAMILIES = (
    "placeholder",
    "random_irrelevant",
    "position_biased",
    "bm25_near_miss",
    "cited_non_rationale",
)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compilation happens once here so timed tests measure the operation.
    _kernels.warmup()


@pytest.fixture(scope="session")
def sample_dir() -> Path:
    assert SAMPLE_DIR.is_dir(), "shipped sample suite missing; run python -m neicap.synthdata"
    return SAMPLE_DIR


@pytest.fixture(scope="session")
def sample_corpus(sample_dir) -> Corpus:
    return load_corpus(sample_dir / "corpus")


@pytest.fixture(scope="session")
def sample_variants(sample_dir) -> dict:
    return {
        fam: parse_manifest(sample_dir / f"variant_{fam}.jsonl") for fam in FAMILIES
    }


@pytest.fixture()
def toy_corpus() -> Corpus:
    """Three claims, four documents, rationales marked; small enough to reason
    about by hand."""
    docs = {
        "d1": Document(
            doc_id="d1",
            sentences=[
                "Cholesterol metabolism and klf4 signalling overview in vascular cells.",
                "Cholesterol loading induces klf4 expression in smooth muscle.",
                "Cell culture methods used a standard assay protocol.",
            ],
        ),
        "d2": Document(
            doc_id="d2",
            sentences=[
                "Blood pressure cohorts were enrolled across three sites.",
                "Salt intake correlates with blood pressure in adults.",
                "However, previous cohorts reported conflicting findings.",
            ],
        ),
        "d3": Document(
            doc_id="d3",
            sentences=[
                "Gut flora composition varies widely between individuals.",
                "Fiber intake alters gut flora diversity measurably.",
                "Dietary questionnaires were collected at baseline.",
            ],
        ),
        "d4": Document(
            doc_id="d4",
            sentences=[
                "Sleep duration studies span many countries.",
                "Short sleep predicts impaired glucose tolerance.",
            ],
        ),
    }
    claims = {
        "c1": Claim(
            claim_id="c1",
            text="Cholesterol loading induces KLF4 expression.",
            group_id="g1",
            cited_doc_ids=["d1"],
            rationales={"d1": {1}},
            reference_label=Label.SUPPORT,
        ),
        "c2": Claim(
            claim_id="c2",
            text="Salt intake raises blood pressure.",
            group_id="g2",
            cited_doc_ids=["d2"],
            rationales={"d2": {1}},
            reference_label=Label.SUPPORT,
        ),
        "c3": Claim(
            claim_id="c3",
            text="Fiber intake does not change gut flora.",
            group_id="g3",
            cited_doc_ids=["d3"],
            rationales={"d3": {1}},
            reference_label=Label.REFUTE,
        ),
    }
    corpus = Corpus(documents=docs, claims=claims, source="toy")
    corpus.check()
    return corpus
