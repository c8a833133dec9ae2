"""Shallow trainable baselines and the train/eval construction-matrix runner.

Three feature specs are supported: claim+evidence TF-IDF (disjoint index blocks
for the two sides), evidence-only TF-IDF, and the audit module's length/overlap
features. TF-IDF values are tf * ln(1 + N/df) with a train-split-only vocabulary
(min document frequency 2) so no evaluation text leaks into the featurizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics, optim
from .audit import shallow_features
from .errors import ProbeError
from .manifest import Label, ManifestRecord, leakage_audit
from .metrics import LABEL_ORDER, PredictionRecord, SeedStats
from .retrieval import tokenize

FEATURE_SPECS = ("tfidf_claim_evidence", "tfidf_evidence_only", "length_overlap")

TrainConfig = optim.TrainConfig


@dataclass
class SparseVector:
    indices: np.ndarray  # strictly increasing int64
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


@dataclass
class Vocabulary:
    index_of: dict[str, int]
    dfs: dict[str, int]
    n_docs: int
    min_df: int = 2

    @property
    def size(self) -> int:
        return len(self.index_of)


def build_vocabulary(
    records: Sequence[ManifestRecord], min_df: int = 2, tokenizer=tokenize
) -> Vocabulary:
    """Vocabulary from training records only; each record's claim plus evidence
    counts once toward document frequency."""
    dfs: dict[str, int] = {}
    for rec in records:
        types = set(tokenizer(rec.claim)) | set(tokenizer(rec.evidence_text()))
        for t in types:
            dfs[t] = dfs.get(t, 0) + 1
    kept = sorted(t for t, df in dfs.items() if df >= min_df)
    return Vocabulary(
        index_of={t: i for i, t in enumerate(kept)},
        dfs={t: dfs[t] for t in kept},
        n_docs=len(records),
        min_df=min_df,
    )


def _tfidf_block(tokens: Sequence[str], vocab: Vocabulary) -> dict[int, float]:
    counts: dict[str, int] = {}
    for t in tokens:
        if t in vocab.index_of:
            counts[t] = counts.get(t, 0) + 1
    out = {}
    for t, tf in counts.items():
        idf = np.log(1.0 + vocab.n_docs / vocab.dfs[t])
        out[vocab.index_of[t]] = tf * float(idf)
    return out


def featurize(
    claim: str,
    evidence,
    spec: str,
    vocabulary: Vocabulary | None = None,
    tokenizer=tokenize,
) -> SparseVector:
    """Featurize one (claim, evidence) pair under the named spec.

    ``evidence`` may be raw text or a list of evidence units. The evidence-only
    spec ignores the claim entirely; length_overlap reuses the audit features
    and needs no vocabulary.
    """
    if spec == "length_overlap":
        fv = shallow_features_from_pair(claim, evidence)
        dense = fv
        return SparseVector(
            indices=np.arange(len(dense), dtype=np.int64),
            values=np.asarray(dense, dtype=float),
            dim=len(dense),
        )
    if spec not in ("tfidf_claim_evidence", "tfidf_evidence_only"):
        raise ProbeError(f"unknown feature spec {spec!r}")
    if vocabulary is None:
        raise ProbeError(f"spec {spec!r} requires a vocabulary")
    ev_text = evidence if isinstance(evidence, str) else " ".join(
        u.text for u in evidence if u.text
    )
    v = vocabulary.size
    entries: dict[int, float] = {}
    if spec == "tfidf_claim_evidence":
        entries.update(_tfidf_block(tokenizer(claim), vocabulary))
        for idx, val in _tfidf_block(tokenizer(ev_text), vocabulary).items():
            entries[v + idx] = val
        dim = 2 * v
    else:
        entries.update(_tfidf_block(tokenizer(ev_text), vocabulary))
        dim = v
    idxs = np.array(sorted(entries), dtype=np.int64)
    vals = np.array([entries[i] for i in idxs], dtype=float)
    return SparseVector(indices=idxs, values=vals, dim=dim)


def shallow_features_from_pair(claim: str, evidence) -> np.ndarray:
    from .audit import shallow_features_from_texts

    fv = shallow_features_from_texts(claim, evidence)
    return fv.as_array()


def featurize_record(
    record: ManifestRecord, spec: str, vocabulary: Vocabulary | None = None
) -> SparseVector:
    if spec == "length_overlap":
        fv = shallow_features(record)
        arr = fv.as_array()
        return SparseVector(
            indices=np.arange(arr.size, dtype=np.int64), values=arr, dim=arr.size
        )
    return featurize(record.claim, record.evidence, spec, vocabulary)


# ---------------------------------------------------------------------------
# training and prediction
# ---------------------------------------------------------------------------


@dataclass
class LinearModel:
    """Multinomial logistic model; label order is fixed (SUPPORT, REFUTE, NEI)."""

    weights: np.ndarray  # (3, dim)
    bias: np.ndarray  # (3,)
    feature_spec: str
    train_family: str
    seed: int


def _densify(features: Sequence[SparseVector]) -> np.ndarray:
    if not features:
        raise ProbeError("no feature vectors supplied")
    dim = features[0].dim
    if any(f.dim != dim for f in features):
        raise ProbeError("feature vectors have inconsistent dimensions")
    X = np.zeros((len(features), dim))
    for i, f in enumerate(features):
        X[i, f.indices] = f.values
    return X


def train_logreg(
    features: Sequence[SparseVector],
    labels: Sequence[Label],
    config: TrainConfig = TrainConfig(),
    feature_spec: str = "",
    train_family: str = "",
) -> LinearModel:
    """Full-batch multinomial logistic regression, deterministic under seed.

    The balanced flag applies inverse-frequency example weights. Training with
    fewer than two distinct labels is refused ("missing-label").
    """
    if len(features) != len(labels):
        raise ProbeError("features and labels are misaligned")
    present = sorted({l.value for l in labels})
    if len(present) < 2:
        raise ProbeError(
            f"missing-label: training needs >= 2 distinct labels, got {present}"
        )
    X = _densify(features)
    y = np.array([LABEL_ORDER.index(l) for l in labels], dtype=np.int64)
    W, b, _losses = optim.fit_softmax(X, y, len(LABEL_ORDER), config)
    return LinearModel(
        weights=W, bias=b, feature_spec=feature_spec, train_family=train_family,
        seed=config.seed,
    )


def predict_proba(model: LinearModel, features: SparseVector) -> np.ndarray:
    """Probability triple in (SUPPORT, REFUTE, NEI) order; sums to 1."""
    if features.dim != model.weights.shape[1]:
        raise ProbeError(
            f"feature dimension {features.dim} does not match model "
            f"dimension {model.weights.shape[1]}"
        )
    x = features.to_dense()[None, :]
    return optim.softmax_probs(model.weights, model.bias, x)[0]


def predict_records(
    model: LinearModel,
    records: Sequence[ManifestRecord],
    vocabulary: Vocabulary | None,
    model_id: str,
) -> list[PredictionRecord]:
    out = []
    for rec in records:
        probs = predict_proba(
            model, featurize_record(rec, model.feature_spec, vocabulary)
        )
        out.append(
            metrics.make_prediction(
                rec.example_id,
                model_id,
                model.seed,
                float(probs[0]),
                float(probs[1]),
                float(probs[2]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# construction matrix
# ---------------------------------------------------------------------------


@dataclass
class SuiteVariant:
    family: str
    train: list[ManifestRecord]
    eval: list[ManifestRecord]


@dataclass
class MatrixCell:
    per_seed_nei_f1: dict[int, float]
    per_seed_macro_f1: dict[int, float]
    nei_f1: SeedStats
    macro_f1: SeedStats


@dataclass
class MatrixResult:
    spec: str
    seeds: tuple[int, ...]
    cells: dict[tuple[str, str], MatrixCell]
    log_paths: list[str] = field(default_factory=list)

    def nei_f1_means(self) -> dict[tuple[str, str], float]:
        return {key: cell.nei_f1.mean for key, cell in self.cells.items()}


def _reference_signature(records: Sequence[ManifestRecord]) -> list[tuple]:
    refs = [
        (r.example_id, r.label.value, r.claim, r.evidence_text())
        for r in records
        if r.label is not Label.NEI
    ]
    return sorted(refs)


def run_construction_matrix(
    variants: Sequence[SuiteVariant],
    spec: str,
    seeds: Sequence[int],
    config: TrainConfig = TrainConfig(),
    out_dir=None,
) -> MatrixResult:
    """Train one model per (train family, seed) and score it on every variant.

    Refuses to run when the variants' SUPPORT/REFUTE portions differ (the suite
    design holds them fixed) or when any group id leaks between a train split
    and any evaluation split (checked with the manifest leakage audit).
    Prediction logs are persisted per (train family, seed, eval family) when an
    output directory is given.
    """
    if spec not in FEATURE_SPECS:
        raise ProbeError(f"unknown feature spec {spec!r}")
    if not variants:
        raise ProbeError("no suite variants supplied")
    sig_train = _reference_signature(variants[0].train)
    sig_eval = _reference_signature(variants[0].eval)
    for var in variants[1:]:
        if _reference_signature(var.train) != sig_train or (
            _reference_signature(var.eval) != sig_eval
        ):
            raise ProbeError(
                f"SUPPORT/REFUTE portions differ between variants "
                f"{variants[0].family!r} and {var.family!r}"
            )
    leaks = leakage_audit(
        [(v.family, list(v.train) + list(v.eval)) for v in variants]
    )
    if not leaks.clean:
        raise ProbeError(
            f"group leakage between train and evaluation splits: "
            f"{len(leaks.within_variant)} within-variant, "
            f"{len(leaks.cross_variant)} cross-variant"
        )

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    cells: dict[tuple[str, str], MatrixCell] = {}
    raw: dict[tuple[str, str], dict[int, tuple[float, float]]] = {}
    log_paths: list[str] = []
    for variant in variants:
        vocab = (
            build_vocabulary(variant.train) if spec.startswith("tfidf") else None
        )
        feats = [featurize_record(r, spec, vocab) for r in variant.train]
        labels = [r.label for r in variant.train]
        for seed in seeds:
            model = train_logreg(
                feats,
                labels,
                config=optim.TrainConfig(
                    l2=config.l2,
                    lr=config.lr,
                    iters=config.iters,
                    seed=seed,
                    balanced=config.balanced,
                    init_scale=config.init_scale,
                ),
                feature_spec=spec,
                train_family=variant.family,
            )
            model_id = f"{spec}:{variant.family}"
            for target in variants:
                preds = predict_records(model, target.eval, vocab, model_id)
                if out_path is not None:
                    log = out_path / (
                        f"preds__{variant.family}__seed{seed}__on__"
                        f"{target.family}.jsonl"
                    )
                    metrics.write_predictions(preds, log)
                    log_paths.append(str(log))
                report = metrics.classification_metrics(target.eval, preds)
                raw.setdefault((variant.family, target.family), {})[seed] = (
                    report.nei_f1,
                    report.macro_f1,
                )
    for key in sorted(raw):
        per_seed = raw[key]
        nei = {s: per_seed[s][0] for s in sorted(per_seed)}
        mac = {s: per_seed[s][1] for s in sorted(per_seed)}
        cells[key] = MatrixCell(
            per_seed_nei_f1=nei,
            per_seed_macro_f1=mac,
            nei_f1=metrics.seed_aggregate(list(nei.values())),
            macro_f1=metrics.seed_aggregate(list(mac.values())),
        )
    return MatrixResult(
        spec=spec, seeds=tuple(seeds), cells=cells, log_paths=log_paths
    )
