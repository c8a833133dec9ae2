"""Evidence-side shallow features, per-construction aggregates, and the separability probe.

Every feature is computed from claim and evidence text alone; labels and
construction tags never enter the computation, so permuting them leaves the
feature vectors unchanged. "Content tokens" are tokens outside the shipped
120-word stopword list below; overlap, Jaccard, and coverage are all computed
over content-token *types*. The overlap token policy upstream is unpublished,
so tests pin orderings between families rather than third-decimal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import optim
from .errors import NeicapError
from .manifest import EvidenceUnit, ManifestRecord
from .retrieval import tokenize

# 120 common English function words; content tokens are everything else.
DEFAULT_STOPWORDS = frozenset(
    """
    a about above after again against all am an and
    any are as at be because been before being below
    between both but by can could did do does doing
    down during each few for from further had has have
    having he her here hers him his how i if
    in into is it its itself just me more most
    my no nor not now of off on once only
    or other our ours out over own same she should
    so some such than that the their theirs them then
    there these they this those through to too under until
    up very was we were what when where which while
    who whom why will with would you your yours yourself
    """.split()
)

# Marker lexicons are configurable because the reference lexicons are
# unpublished; these defaults cover the discourse cues the audit looks for.
DEFAULT_CONTEXT_MARKERS = frozenset(
    {"however", "although", "whereas", "contrast", "previous", "previously", "background"}
)
DEFAULT_METHOD_MARKERS = frozenset(
    {"methods", "performed", "assay", "cohort", "randomized", "measured", "enrolled"}
)

DEFAULT_PLACEHOLDER_MARKER = "NO EVIDENCE"

FEATURE_NAMES = (
    "n_tokens",
    "n_sentences",
    "overlap_count",
    "jaccard",
    "coverage",
    "placeholder_flag",
    "context_marker_rate",
    "method_marker_rate",
    "mean_sentence_position",
    "source_concentration",
)


@dataclass
class ShallowFeatureVector:
    n_tokens: int
    n_sentences: int
    overlap_count: int
    jaccard: float
    coverage: float
    placeholder_flag: int
    context_marker_rate: float
    method_marker_rate: float
    mean_sentence_position: float | None
    source_concentration: float

    def as_array(self) -> np.ndarray:
        """Dense vector in FEATURE_NAMES order; an absent position maps to 0."""
        pos = 0.0 if self.mean_sentence_position is None else self.mean_sentence_position
        return np.array(
            [
                float(self.n_tokens),
                float(self.n_sentences),
                float(self.overlap_count),
                self.jaccard,
                self.coverage,
                float(self.placeholder_flag),
                self.context_marker_rate,
                self.method_marker_rate,
                pos,
                self.source_concentration,
            ]
        )


def shallow_features_from_texts(
    claim: str,
    evidence: Sequence[EvidenceUnit] | str,
    sentence_position: Sequence[int] | None = None,
    tokenizer=tokenize,
    stopwords=DEFAULT_STOPWORDS,
    context_markers=DEFAULT_CONTEXT_MARKERS,
    method_markers=DEFAULT_METHOD_MARKERS,
    placeholder_marker: str = DEFAULT_PLACEHOLDER_MARKER,
) -> ShallowFeatureVector:
    if isinstance(evidence, str):
        evidence = [EvidenceUnit(text=evidence)]
    evidence_text = " ".join(u.text for u in evidence if u.text)
    claim_tokens = tokenizer(claim)
    ev_tokens = tokenizer(evidence_text)
    claim_types = set(claim_tokens) - stopwords
    ev_types = set(ev_tokens) - stopwords
    inter = claim_types & ev_types
    union = claim_types | ev_types
    n_sentences = sum(
        len(u.sentence_ids) if u.sentence_ids else 1 for u in evidence
    ) if evidence else 0

    positions: list[int] = []
    if sentence_position:
        positions = list(sentence_position)
    else:
        for u in evidence:
            if u.sentence_ids:
                positions.extend(u.sentence_ids)

    # Sentence counts per source; units without a doc_id count as distinct sources.
    per_source: dict[object, int] = {}
    for i, u in enumerate(evidence):
        key = u.doc_id if u.doc_id is not None else ("unit", i)
        per_source[key] = per_source.get(key, 0) + (
            len(u.sentence_ids) if u.sentence_ids else 1
        )
    total_sent = sum(per_source.values())
    concentration = max(per_source.values()) / total_sent if total_sent else 1.0

    stripped = evidence_text.strip()
    return ShallowFeatureVector(
        n_tokens=len(ev_tokens),
        n_sentences=n_sentences,
        overlap_count=len(inter),
        jaccard=len(inter) / len(union) if union else 0.0,
        coverage=len(inter) / len(claim_types) if claim_types else 0.0,
        placeholder_flag=int(stripped == placeholder_marker.strip() or stripped == ""),
        context_marker_rate=float(bool(set(ev_tokens) & context_markers)),
        method_marker_rate=float(bool(set(ev_tokens) & method_markers)),
        mean_sentence_position=float(np.mean(positions)) if positions else None,
        source_concentration=concentration,
    )


def shallow_features(record: ManifestRecord, **kwargs) -> ShallowFeatureVector:
    return shallow_features_from_texts(
        record.claim, record.evidence, record.sentence_position, **kwargs
    )


# ---------------------------------------------------------------------------
# per-construction aggregates
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = (
    "construction",
    "n",
    "avg_sentences",
    "avg_tokens",
    "coverage",
    "overlap_count",
    "jaccard",
    "context_marker",
    "method_marker",
    "placeholder_rate",
    "status",
)


@dataclass
class FamilySummary:
    construction: str
    n: int
    avg_sentences: float
    avg_tokens: float
    coverage: float
    overlap_count: float
    jaccard: float
    context_marker: float
    method_marker: float
    placeholder_rate: float
    status: str

    def row(self) -> list:
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


def audit_summary(
    records: Sequence[ManifestRecord],
    features: Sequence[ShallowFeatureVector],
) -> list[FamilySummary]:
    if len(records) != len(features):
        raise NeicapError("records and features are misaligned")
    grouped: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        grouped.setdefault(rec.construction.value, []).append(i)
    out = []
    for family in sorted(grouped):
        idxs = grouped[family]
        fvs = [features[i] for i in idxs]
        statuses = {records[i].validation_status for i in idxs}
        if statuses == {"valid_nei"}:
            status = "human-adjudicated"
        elif statuses <= {"not_validated", "candidate"}:
            status = "constructed-only"
        else:
            status = "mixed"
        out.append(
            FamilySummary(
                construction=family,
                n=len(idxs),
                avg_sentences=float(np.mean([f.n_sentences for f in fvs])),
                avg_tokens=float(np.mean([f.n_tokens for f in fvs])),
                coverage=float(np.mean([f.coverage for f in fvs])),
                overlap_count=float(np.mean([f.overlap_count for f in fvs])),
                jaccard=float(np.mean([f.jaccard for f in fvs])),
                context_marker=float(np.mean([f.context_marker_rate for f in fvs])),
                method_marker=float(np.mean([f.method_marker_rate for f in fvs])),
                placeholder_rate=float(np.mean([f.placeholder_flag for f in fvs])),
                status=status,
            )
        )
    return out


def summary_to_csv(rows: Sequence[FamilySummary]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for r in rows:
        cells = [
            f"{v:.6g}" if isinstance(v, float) else str(v) for v in r.row()
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# separability probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeConfig:
    """Cross-validated logistic probe settings (see README for provenance)."""

    l2: float = 1e-2
    lr: float = 0.1
    iters: int = 500
    rng_seed: int = 13
    power_floor: int = 30


@dataclass
class SeparabilityResult:
    accuracy: float | None
    macro_f1: float | None
    n_per_class: tuple[int, int]
    status: str  # completed | underpowered


def fold_assignment(n: int, folds: int, rng_seed: int) -> np.ndarray:
    """Deterministic fold labels: a seeded permutation dealt round-robin."""
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(n)
    labels = np.empty(n, dtype=np.int64)
    for pos, idx in enumerate(perm):
        labels[idx] = pos % folds
    return labels


def separability_probe(
    group_a: Sequence[ShallowFeatureVector],
    group_b: Sequence[ShallowFeatureVector],
    folds: int = 5,
    config: ProbeConfig = ProbeConfig(),
) -> SeparabilityResult:
    """K-fold logistic-regression separability of two feature pools.

    Metrics are withheld (status underpowered) when either pool is smaller than
    the power floor. Features are standardized with train-fold statistics;
    zero-variance features get unit scale instead of dividing by zero.
    """
    n_a, n_b = len(group_a), len(group_b)
    if n_a == 0 or n_b == 0:
        raise NeicapError("both probe groups must be non-empty")
    if min(n_a, n_b) < config.power_floor:
        return SeparabilityResult(None, None, (n_a, n_b), "underpowered")
    X = np.vstack([f.as_array() for f in list(group_a) + list(group_b)])
    y = np.concatenate([np.zeros(n_a, dtype=np.int64), np.ones(n_b, dtype=np.int64)])
    n = X.shape[0]
    folds = min(folds, n)
    fold = fold_assignment(n, folds, config.rng_seed)
    pred = np.empty(n, dtype=np.int64)
    train_config = optim.TrainConfig(
        l2=config.l2, lr=config.lr, iters=config.iters, seed=config.rng_seed
    )
    for f in range(folds):
        test_mask = fold == f
        train_mask = ~test_mask
        mu = X[train_mask].mean(axis=0)
        sd = X[train_mask].std(axis=0)
        sd[sd == 0] = 1.0
        Xtr = (X[train_mask] - mu) / sd
        Xte = (X[test_mask] - mu) / sd
        W, b, _ = optim.fit_softmax(Xtr, y[train_mask], 2, train_config)
        probs = optim.softmax_probs(W, b, Xte)
        pred[test_mask] = np.argmax(probs, axis=1)
    accuracy = float((pred == y).mean())
    f1s = []
    for cls in (0, 1):
        tp = int(((pred == cls) & (y == cls)).sum())
        fp = int(((pred == cls) & (y != cls)).sum())
        fn = int(((pred != cls) & (y == cls)).sum())
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return SeparabilityResult(accuracy, float(np.mean(f1s)), (n_a, n_b), "completed")


PROBE_REPORT_COLUMNS = ("comparison", "accuracy", "macro_f1", "status")


def probe_report_csv(rows: Sequence[tuple[str, SeparabilityResult]]) -> str:
    lines = [",".join(PROBE_REPORT_COLUMNS)]
    for name, res in rows:
        acc = "" if res.accuracy is None else f"{res.accuracy:.3f}"
        f1 = "" if res.macro_f1 is None else f"{res.macro_f1:.3f}"
        lines.append(f"{name},{acc},{f1},{res.status}")
    return "\n".join(lines) + "\n"
