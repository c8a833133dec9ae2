"""Metric computations over gold manifests and prediction logs.

Conventions used throughout (documented once here):
  * F1 uses the 0/0 := 0 convention, so a label that is never predicted and
    never present scores 0, and an exact 0.000 NEI-F1 means NEI was never
    predicted correctly.
  * Macro-F1 is refused outright on single-label gold sets; one-class subsets
    get their own recall/false-rate report instead.
  * Argmax ties in a probability triple break SUPPORT < REFUTE < NEI and are
    flagged on the record.
  * Probability triples must sum to 1 within 1e-6 on ingest; failing rows are
    rejected, never renormalized.
  * Bootstrap intervals are percentile intervals (B=2000 default), resampling
    examples, or whole groups when group keys are supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .construct import FixedClaimPair
from .errors import CoverageError, MetricsError, OneClassRefusalError
from .manifest import Label, ManifestRecord

LABEL_ORDER = (Label.SUPPORT, Label.REFUTE, Label.NEI)
PROB_SUM_TOL = 1e-6


@dataclass
class PredictionRecord:
    example_id: str
    model_id: str
    seed: int
    pred_label: Label
    p_support: float
    p_refute: float
    p_nei: float
    tie_flag: bool = False

    def probs(self) -> dict[Label, float]:
        return {
            Label.SUPPORT: self.p_support,
            Label.REFUTE: self.p_refute,
            Label.NEI: self.p_nei,
        }

    def to_json(self) -> dict:
        return {
            "example_id": self.example_id,
            "model_id": self.model_id,
            "seed": self.seed,
            "pred_label": self.pred_label.value,
            "p_support": self.p_support,
            "p_refute": self.p_refute,
            "p_nei": self.p_nei,
        }


def tie_broken_argmax(p_support: float, p_refute: float, p_nei: float):
    """Return (label, tie_flag) with ties resolved SUPPORT < REFUTE < NEI."""
    probs = (p_support, p_refute, p_nei)
    best = max(probs)
    winners = [i for i, p in enumerate(probs) if p == best]
    return LABEL_ORDER[winners[0]], len(winners) > 1


def make_prediction(
    example_id: str, model_id: str, seed: int, p_support: float, p_refute: float, p_nei: float
) -> PredictionRecord:
    label, tie = tie_broken_argmax(p_support, p_refute, p_nei)
    return PredictionRecord(
        example_id, model_id, seed, label, p_support, p_refute, p_nei, tie_flag=tie
    )


def _check_prediction(rec: PredictionRecord, where: str) -> None:
    probs = (rec.p_support, rec.p_refute, rec.p_nei)
    if any(p < 0 for p in probs):
        raise MetricsError(f"{where}: negative probability in {rec.example_id!r}")
    if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
        raise MetricsError(
            f"{where}: probabilities for {rec.example_id!r} sum to {sum(probs)!r}; "
            f"rows outside 1 +/- {PROB_SUM_TOL} are rejected, not renormalized"
        )
    expected, tie = tie_broken_argmax(*probs)
    if tie:
        best = max(probs)
        allowed = {
            LABEL_ORDER[i] for i, p in enumerate(probs) if p == best
        }
        if rec.pred_label not in allowed:
            raise MetricsError(
                f"{where}: pred_label {rec.pred_label.value} is not an argmax of "
                f"the probability triple for {rec.example_id!r}"
            )
        rec.tie_flag = True
    elif rec.pred_label is not expected:
        raise MetricsError(
            f"{where}: pred_label {rec.pred_label.value} contradicts the "
            f"probability triple for {rec.example_id!r} (argmax {expected.value})"
        )


def parse_predictions(source) -> list[PredictionRecord]:
    """Parse a line-delimited prediction log, validating every row."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)
    out = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        try:
            rec = PredictionRecord(
                example_id=str(obj["example_id"]),
                model_id=str(obj["model_id"]),
                seed=int(obj["seed"]),
                pred_label=Label.parse(obj["pred_label"]),
                p_support=float(obj["p_support"]),
                p_refute=float(obj["p_refute"]),
                p_nei=float(obj["p_nei"]),
            )
        except KeyError as exc:
            raise MetricsError(f"line {line_no}: missing field {exc}") from None
        _check_prediction(rec, f"line {line_no}")
        out.append(rec)
    return out


def write_predictions(records: Iterable[PredictionRecord], path) -> None:
    lines = [json.dumps(r.to_json()) for r in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    n_expected: int
    n_predicted_valid: int
    coverage: float
    missing: list[str]
    duplicates: list[str]


def prediction_coverage(
    expected_ids: Sequence[str], preds: Sequence[PredictionRecord]
) -> CoverageReport:
    """Fraction of expected ids with exactly one prediction; duplicates count
    toward neither the numerator nor the missing list."""
    expected = list(dict.fromkeys(expected_ids))
    counts: dict[str, int] = {}
    for p in preds:
        counts[p.example_id] = counts.get(p.example_id, 0) + 1
    missing = [eid for eid in expected if counts.get(eid, 0) == 0]
    duplicates = [eid for eid in expected if counts.get(eid, 0) > 1]
    valid = sum(1 for eid in expected if counts.get(eid, 0) == 1)
    return CoverageReport(
        n_expected=len(expected),
        n_predicted_valid=valid,
        coverage=valid / len(expected) if expected else 0.0,
        missing=missing,
        duplicates=duplicates,
    )


def _indexed_predictions(
    gold: Sequence[ManifestRecord], preds: Sequence[PredictionRecord], where: str
) -> dict[str, PredictionRecord]:
    report = prediction_coverage([g.example_id for g in gold], preds)
    if report.coverage != 1.0:
        raise CoverageError(
            f"{where}: prediction coverage {report.coverage:.3f} "
            f"({len(report.missing)} missing, {len(report.duplicates)} duplicated)"
        )
    by_id = {p.example_id: p for p in preds}
    return {g.example_id: by_id[g.example_id] for g in gold}


# ---------------------------------------------------------------------------
# three-way classification metrics
# ---------------------------------------------------------------------------


@dataclass
class PerLabelScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    n: int
    accuracy: float
    macro_f1: float
    per_label: dict[Label, PerLabelScores]

    @property
    def nei_f1(self) -> float:
        return self.per_label[Label.NEI].f1


def classification_metrics(
    gold: Sequence[ManifestRecord], preds: Sequence[PredictionRecord]
) -> ClassificationReport:
    """Accuracy, Macro-F1 (unweighted mean over the three labels), per-label F1.

    Raises OneClassRefusalError when the gold set carries fewer than two
    distinct labels: Macro-F1 is part of this report's contract and is not
    informative on one-class subsets.
    """
    if not gold:
        raise MetricsError("empty gold set")
    distinct = {g.label for g in gold}
    if len(distinct) < 2:
        only = next(iter(distinct)).value
        raise OneClassRefusalError(
            f"gold set is single-label ({only}); Macro-F1 is not informative on "
            f"one-class subsets - use one_class_metrics instead"
        )
    pred_of = _indexed_predictions(gold, preds, "classification_metrics")
    correct = 0
    tp = {label: 0 for label in LABEL_ORDER}
    fp = {label: 0 for label in LABEL_ORDER}
    fn = {label: 0 for label in LABEL_ORDER}
    support = {label: 0 for label in LABEL_ORDER}
    for g in gold:
        p = pred_of[g.example_id].pred_label
        support[g.label] += 1
        if p is g.label:
            correct += 1
            tp[g.label] += 1
        else:
            fp[p] += 1
            fn[g.label] += 1
    per_label = {}
    for label in LABEL_ORDER:
        prec_den = tp[label] + fp[label]
        rec_den = tp[label] + fn[label]
        precision = tp[label] / prec_den if prec_den else 0.0
        recall = tp[label] / rec_den if rec_den else 0.0
        f1_den = 2 * tp[label] + fp[label] + fn[label]
        f1 = 2 * tp[label] / f1_den if f1_den else 0.0
        per_label[label] = PerLabelScores(precision, recall, f1, support[label])
    macro = sum(per_label[label].f1 for label in LABEL_ORDER) / len(LABEL_ORDER)
    return ClassificationReport(
        n=len(gold),
        accuracy=correct / len(gold),
        macro_f1=macro,
        per_label=per_label,
    )


# ---------------------------------------------------------------------------
# one-class hard-NEI metrics
# ---------------------------------------------------------------------------


@dataclass
class OneClassReport:
    """Recall and error rates for an all-NEI subset. Macro-F1 intentionally
    does not exist on this type."""

    n: int
    nei_recall: float
    false_support_rate: float
    false_refute_rate: float
    mean_p_nei: float
    mean_p_support: float
    mean_p_refute: float
    cis: dict[str, tuple[float, float]] = field(default_factory=dict)


def one_class_metrics(
    gold: Sequence[ManifestRecord],
    preds: Sequence[PredictionRecord],
    bootstrap_B: int = 0,
    bootstrap_level: float = 0.95,
    rng_seed: int = 13,
    groups: Sequence[str] | None = None,
) -> OneClassReport:
    """NEI recall plus false SUPPORT/REFUTE rates over a validated all-NEI subset.

    recall = #predicted NEI / n, false rates likewise; the three always sum to 1.
    Pass bootstrap_B > 0 for percentile intervals (group-level when ``groups``
    gives one key per gold record).
    """
    if not gold:
        raise MetricsError("empty gold set")
    bad = [g.example_id for g in gold if g.label is not Label.NEI]
    if bad:
        raise MetricsError(
            f"one_class_metrics requires an all-NEI gold subset; non-NEI ids: {bad[:5]}"
        )
    pred_of = _indexed_predictions(gold, preds, "one_class_metrics")
    n = len(gold)
    ordered = [pred_of[g.example_id] for g in gold]
    is_nei = np.array([p.pred_label is Label.NEI for p in ordered], dtype=float)
    is_sup = np.array([p.pred_label is Label.SUPPORT for p in ordered], dtype=float)
    is_ref = np.array([p.pred_label is Label.REFUTE for p in ordered], dtype=float)
    p_nei = np.array([p.p_nei for p in ordered])
    p_sup = np.array([p.p_support for p in ordered])
    p_ref = np.array([p.p_refute for p in ordered])
    cis: dict[str, tuple[float, float]] = {}
    if bootstrap_B > 0:
        group_keys = None if groups is None else list(groups)
        for name, values in (
            ("nei_recall", is_nei),
            ("false_support_rate", is_sup),
            ("false_refute_rate", is_ref),
            ("mean_p_nei", p_nei),
            ("mean_p_support", p_sup),
            ("mean_p_refute", p_ref),
        ):
            cis[name] = bootstrap_ci(
                values,
                B=bootstrap_B,
                level=bootstrap_level,
                rng_seed=rng_seed,
                groups=group_keys,
            )
    return OneClassReport(
        n=n,
        nei_recall=float(is_nei.mean()),
        false_support_rate=float(is_sup.mean()),
        false_refute_rate=float(is_ref.mean()),
        mean_p_nei=float(p_nei.mean()),
        mean_p_support=float(p_sup.mean()),
        mean_p_refute=float(p_ref.mean()),
        cis=cis,
    )


# ---------------------------------------------------------------------------
# fixed-claim diagnostics
# ---------------------------------------------------------------------------


@dataclass
class FixedClaimReport:
    n_pairs: int
    deltas: list[float]
    mean_delta: float
    prob_drop_success: float
    strict_swap_success: float
    hard_recall: float
    reference_accuracy: float
    coverage_ok: bool


def fixed_claim_diagnostics(
    pairs: Sequence[FixedClaimPair], preds: Sequence[PredictionRecord]
) -> FixedClaimReport:
    """Reference-label probability drop and swap metrics over fixed-claim pairs.

    Coverage must be exactly 1.0 on both sides before any metric is computed.
    delta_i is the reference-label probability on the reference side minus the
    same probability on the insufficient side; the drop succeeds only when
    strictly positive. Strict swap additionally requires the reference side
    predicted as the reference label and the insufficient side predicted NEI.
    """
    if not pairs:
        raise MetricsError("no fixed-claim pairs supplied")
    expected = [p.reference_example.example_id for p in pairs] + [
        p.hard_example.example_id for p in pairs
    ]
    report = prediction_coverage(expected, preds)
    if report.coverage != 1.0:
        raise CoverageError(
            f"fixed-claim diagnostics require complete coverage on both sides: "
            f"{report.coverage:.3f} ({len(report.missing)} missing, "
            f"{len(report.duplicates)} duplicated)"
        )
    by_id = {p.example_id: p for p in preds}
    deltas = []
    drops = 0
    stricts = 0
    hard_nei = 0
    ref_correct = 0
    for pair in pairs:
        ref_label = pair.reference_example.label
        ref_pred = by_id[pair.reference_example.example_id]
        hard_pred = by_id[pair.hard_example.example_id]
        delta = ref_pred.probs()[ref_label] - hard_pred.probs()[ref_label]
        deltas.append(delta)
        if delta > 0:
            drops += 1
        ref_ok = ref_pred.pred_label is ref_label
        hard_ok = hard_pred.pred_label is Label.NEI
        if ref_ok:
            ref_correct += 1
        if hard_ok:
            hard_nei += 1
        if ref_ok and hard_ok:
            stricts += 1
    n = len(pairs)
    return FixedClaimReport(
        n_pairs=n,
        deltas=deltas,
        mean_delta=float(np.mean(deltas)),
        prob_drop_success=drops / n,
        strict_swap_success=stricts / n,
        hard_recall=hard_nei / n,
        reference_accuracy=ref_correct / n,
        coverage_ok=True,
    )


# ---------------------------------------------------------------------------
# bootstrap and seed aggregation
# ---------------------------------------------------------------------------


def bootstrap_ci(
    values: Sequence[float],
    B: int = 2000,
    level: float = 0.95,
    rng_seed: int = 13,
    statistic: Callable[[np.ndarray], float] | None = None,
    groups: Sequence[str] | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for a statistic (mean by default).

    With ``groups`` (one key per value), whole groups are resampled: unique keys
    are sorted first, so the interval is invariant to input ordering.
    Deterministic under rng_seed.
    """
    if B < 1:
        raise MetricsError("bootstrap B must be >= 1")
    if not (0.0 < level < 1.0):
        raise MetricsError("bootstrap level must be inside (0, 1)")
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise MetricsError("bootstrap requires at least one value")
    stat = statistic or (lambda v: float(v.mean()))
    rng = np.random.default_rng(rng_seed)
    reps = np.empty(B)
    if groups is None:
        n = arr.size
        for i in range(B):
            reps[i] = stat(arr[rng.integers(0, n, size=n)])
    else:
        keys = np.asarray(groups)
        if keys.shape[0] != arr.shape[0]:
            raise MetricsError("groups must align with values")
        uniq = np.sort(np.unique(keys))
        members = {k: np.flatnonzero(keys == k) for k in uniq}
        g = uniq.size
        for i in range(B):
            take = uniq[rng.integers(0, g, size=g)]
            idx = np.concatenate([members[k] for k in take])
            reps[i] = stat(arr[idx])
    lo, hi = np.quantile(reps, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


@dataclass
class SeedStats:
    mean: float
    sd: float
    min: float
    max: float


def seed_aggregate(values: Sequence[float]) -> SeedStats:
    """Mean, sample standard deviation (n-1 denominator, 0 when n=1), min, max."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise MetricsError("seed_aggregate requires at least one value")
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return SeedStats(float(arr.mean()), sd, float(arr.min()), float(arr.max()))


# ---------------------------------------------------------------------------
# drop summary
# ---------------------------------------------------------------------------

MATCHED_KEY = "matched"
BM25_FAMILY = "bm25_near_miss"
CITED_FAMILY = "cited_non_rationale"


@dataclass
class DropRow:
    train_construction: str
    matched: float
    bm25: float
    cited: float
    hard_drop: float


def drop_summary(cells: dict[tuple[str, str], float]) -> list[DropRow]:
    """Per train family: matched NEI-F1 minus the mean of the BM25 and cited
    hard-evaluation NEI-F1 (the placeholder-to-hard collapse statistic)."""
    trains = sorted({t for t, _ in cells})
    if not trains:
        raise MetricsError("empty matrix")
    rows = []
    for train in trains:
        matched = cells.get((train, train))
        if matched is None:
            raise MetricsError(f"missing matched column for train family {train!r}")
        bm25 = cells.get((train, BM25_FAMILY))
        if bm25 is None:
            raise MetricsError(f"missing {BM25_FAMILY} column for {train!r}")
        cited = cells.get((train, CITED_FAMILY))
        if cited is None:
            raise MetricsError(f"missing {CITED_FAMILY} column for {train!r}")
        rows.append(
            DropRow(train, matched, bm25, cited, matched - (bm25 + cited) / 2.0)
        )
    return rows
