"""Feature specs, the logistic trainer, and the construction-matrix runner."""

import math

import numpy as np
import pytest

from neicap import optim
from neicap.errors import ProbeError
from neicap.manifest import (
    ConstructionFamily,
    EvidenceUnit,
    Label,
    ManifestRecord,
)
from neicap.metrics import parse_predictions, seed_aggregate
from neicap.probe import (
    LinearModel,
    SparseVector,
    SuiteVariant,
    TrainConfig,
    build_vocabulary,
    featurize,
    predict_proba,
    run_construction_matrix,
    train_logreg,
)


def rec(eid, claim, evidence, label="NEI", split="train", group=None):
    return ManifestRecord(
        example_id=eid,
        claim_id=eid,
        group_id=group or eid,
        source_data="t",
        claim=claim,
        evidence=[EvidenceUnit(text=evidence)],
        label=Label.parse(label),
        construction=ConstructionFamily.PLACEHOLDER
        if label == "NEI"
        else ConstructionFamily.REFERENCE,
        split=split,
    )


class TestFeaturize:
    def test_evidence_only_ignores_claim(self):
        vocab = build_vocabulary(
            [
                rec("e1", "alpha beta", "gamma delta"),
                rec("e2", "alpha beta", "gamma delta"),
            ],
            min_df=1,
        )
        a = featurize("totally different claim", "gamma delta", "tfidf_evidence_only", vocab)
        b = featurize("another claim entirely", "gamma delta", "tfidf_evidence_only", vocab)
        assert (a.indices == b.indices).all() and (a.values == b.values).all()

    def test_hand_computed_tfidf_table(self):
        # 2 training records; df(apple)=2, df(pear)=1, df(plum)=1; N=2
        train = [
            rec("e1", "apple pear", "apple plum"),
            rec("e2", "apple", "apple"),
        ]
        vocab = build_vocabulary(train, min_df=1)
        sv = featurize("apple apple pear", "plum", "tfidf_claim_evidence", vocab)
        dense = sv.to_dense()
        v = vocab.size
        idx = vocab.index_of
        # claim block: tf(apple)=2 * ln(1+2/2), tf(pear)=1 * ln(1+2/1)
        assert dense[idx["apple"]] == pytest.approx(2 * math.log(2))
        assert dense[idx["pear"]] == pytest.approx(math.log(3))
        # evidence block: tf(plum)=1 * ln(1+2/1)
        assert dense[v + idx["plum"]] == pytest.approx(math.log(3))
        assert sv.dim == 2 * v

    def test_min_df_prunes_rare_terms(self):
        train = [
            rec("e1", "common rare1", "common"),
            rec("e2", "common rare2", "common"),
        ]
        vocab = build_vocabulary(train, min_df=2)
        assert "common" in vocab.index_of
        assert "rare1" not in vocab.index_of

    def test_length_overlap_matches_audit_features(self):
        from neicap.audit import shallow_features_from_texts

        sv = featurize("fiber alters flora", "NO EVIDENCE", "length_overlap")
        expected = shallow_features_from_texts(
            "fiber alters flora", "NO EVIDENCE"
        ).as_array()
        assert sv.to_dense() == pytest.approx(expected)
        assert sv.to_dense()[0] == 2.0  # n_tokens
        assert sv.to_dense()[4] == 0.0  # coverage

    def test_unknown_spec_errors(self):
        with pytest.raises(ProbeError, match="unknown feature spec"):
            featurize("c", "e", "embeddings", None)

    def test_indices_strictly_increasing(self):
        train = [rec("e1", "a b c d", "e f g h"), rec("e2", "a b c d", "e f g h")]
        vocab = build_vocabulary(train, min_df=1)
        sv = featurize("d c b a", "h g f e", "tfidf_claim_evidence", vocab)
        assert (np.diff(sv.indices) > 0).all()


def _separable_toyset():
    features, labels = [], []
    for i in range(12):
        cls = i % 3
        x = np.zeros(2)
        x[0] = cls  # feature 0 encodes the class
        x[1] = 1.0
        features.append(SparseVector(np.array([0, 1]), x.copy(), 2))
        labels.append([Label.SUPPORT, Label.REFUTE, Label.NEI][cls])
    return features, labels


class TestTrainer:
    def test_separable_training_accuracy_one(self):
        features, labels = _separable_toyset()
        model = train_logreg(features, labels, TrainConfig(iters=400))
        correct = 0
        for sv, lab in zip(features, labels):
            probs = predict_proba(model, sv)
            if [Label.SUPPORT, Label.REFUTE, Label.NEI][int(np.argmax(probs))] is lab:
                correct += 1
        assert correct == len(labels)

    def test_missing_label_error(self):
        features, _ = _separable_toyset()
        labels = [Label.NEI] * len(features)
        with pytest.raises(ProbeError, match="missing-label"):
            train_logreg(features, labels)

    def test_bitwise_determinism(self):
        features, labels = _separable_toyset()
        m1 = train_logreg(features, labels, TrainConfig(seed=29, iters=100))
        m2 = train_logreg(features, labels, TrainConfig(seed=29, iters=100))
        assert (m1.weights == m2.weights).all()
        assert (m1.bias == m2.bias).all()

    def test_loss_non_increasing_even_on_raw_tfidf_scale(self):
        rng = np.random.default_rng(4)
        X = rng.random((60, 30)) * 40  # tf-idf-like magnitudes
        y = rng.integers(0, 3, size=60)
        _, _, losses = optim.fit_softmax(X, y, 3, TrainConfig(iters=150, lr=0.1))
        assert (np.diff(losses) <= 1e-12).all()

    def test_balanced_flag_changes_fit(self):
        rng = np.random.default_rng(6)
        X = np.vstack([rng.normal(0, 1, (50, 3)), rng.normal(1.5, 1, (5, 3))])
        y = np.array([0] * 50 + [2] * 5)
        Wu, bu, _ = optim.fit_softmax(X, y, 3, TrainConfig(iters=100, balanced=False))
        Wb, bb, _ = optim.fit_softmax(X, y, 3, TrainConfig(iters=100, balanced=True))
        assert not np.allclose(Wu, Wb)


class TestPredictProba:
    def test_zero_model_uniform(self):
        model = LinearModel(np.zeros((3, 4)), np.zeros(3), "tfidf_evidence_only", "", 13)
        sv = SparseVector(np.array([1]), np.array([2.0]), 4)
        assert predict_proba(model, sv) == pytest.approx(np.full(3, 1 / 3))

    def test_sums_to_one_fuzzed(self):
        rng = np.random.default_rng(12)
        model = LinearModel(
            rng.normal(size=(3, 6)), rng.normal(size=3), "tfidf_evidence_only", "", 13
        )
        for _ in range(10_000):
            sv = SparseVector(
                np.arange(6, dtype=np.int64), rng.normal(size=6) * 10, 6
            )
            probs = predict_proba(model, sv)
            assert abs(probs.sum() - 1.0) < 1e-9
            assert (probs > 0).all()

    def test_monotone_in_nei_score(self):
        model = LinearModel(np.zeros((3, 1)), np.zeros(3), "tfidf_evidence_only", "", 13)
        sv = SparseVector(np.array([0]), np.array([1.0]), 1)
        last = 0.0
        for w in (0.5, 1.0, 2.0, 4.0):
            model.weights[2, 0] = w
            p_nei = predict_proba(model, sv)[2]
            assert p_nei > last
            last = p_nei

    def test_dimension_mismatch(self):
        model = LinearModel(np.zeros((3, 4)), np.zeros(3), "tfidf_evidence_only", "", 13)
        with pytest.raises(ProbeError, match="dimension"):
            predict_proba(model, SparseVector(np.array([0]), np.array([1.0]), 9))


def _mini_suite():
    """Two tiny variants sharing reference portions, fully group-disjoint."""
    refs_train = [
        rec(f"r{i}", f"claim {i} topic{i % 4}", f"evidence supports topic{i % 4} strongly",
            label="SUPPORT" if i % 3 else "REFUTE", split="train")
        for i in range(12)
    ]
    refs_eval = [
        rec(f"re{i}", f"claim eval {i} topic{i % 4}", f"evidence supports topic{i % 4} strongly",
            label="SUPPORT" if i % 3 else "REFUTE", split="test")
        for i in range(12)
    ]
    def nei(eid, evidence, split):
        return rec(eid, f"claim about topic{int(eid[-1]) % 4}", evidence, "NEI", split)

    ph_train = [nei(f"p{i}", "NO EVIDENCE", "train") for i in range(8)]
    ph_eval = [nei(f"pe{i}", "NO EVIDENCE", "test") for i in range(8)]
    hard_train = [
        nei(f"b{i}", f"related but insufficient topic{i % 4} words", "train")
        for i in range(8)
    ]
    hard_eval = [
        nei(f"be{i}", f"related but insufficient topic{i % 4} words", "test")
        for i in range(8)
    ]
    return [
        SuiteVariant("placeholder", refs_train + ph_train, refs_eval + ph_eval),
        SuiteVariant("bm25_near_miss", refs_train + hard_train, refs_eval + hard_eval),
    ]


class TestConstructionMatrix:
    def test_degenerate_1x1_equals_direct_call(self, tmp_path):
        variants = _mini_suite()[:1]
        res = run_construction_matrix(
            variants, "tfidf_claim_evidence", seeds=[13], out_dir=tmp_path
        )
        assert set(res.cells) == {("placeholder", "placeholder")}
        # direct train+eval reproduces the cell
        from neicap.metrics import classification_metrics
        from neicap.probe import featurize_record, predict_records

        vocab = build_vocabulary(variants[0].train)
        feats = [featurize_record(r, "tfidf_claim_evidence", vocab) for r in variants[0].train]
        model = train_logreg(
            feats, [r.label for r in variants[0].train],
            TrainConfig(seed=13), feature_spec="tfidf_claim_evidence",
        )
        preds = predict_records(model, variants[0].eval, vocab, "m")
        direct = classification_metrics(variants[0].eval, preds)
        cell = res.cells[("placeholder", "placeholder")]
        assert cell.per_seed_nei_f1[13] == pytest.approx(direct.nei_f1)

    def test_differing_reference_portions_rejected(self):
        from dataclasses import replace

        variants = _mini_suite()
        tampered = [replace(r) for r in variants[1].eval]
        tampered[0] = replace(tampered[0], claim="tampered claim")
        variants[1] = SuiteVariant(variants[1].family, variants[1].train, tampered)
        with pytest.raises(ProbeError, match="SUPPORT/REFUTE portions differ"):
            run_construction_matrix(variants, "tfidf_claim_evidence", seeds=[13])

    def test_group_leak_rejected(self):
        variants = _mini_suite()
        # move one eval record's group into the train split of the same variant
        variants[0].eval[0].group_id = variants[0].train[0].group_id
        variants[1].eval[0].group_id = variants[1].train[0].group_id
        with pytest.raises(ProbeError, match="leakage"):
            run_construction_matrix(variants, "tfidf_claim_evidence", seeds=[13])

    def test_aggregates_recomputable_from_logs(self, tmp_path):
        variants = _mini_suite()
        seeds = [13, 17, 23]
        res = run_construction_matrix(
            variants, "tfidf_claim_evidence", seeds=seeds, out_dir=tmp_path
        )
        from neicap.metrics import classification_metrics

        for (train_fam, eval_fam), cell in res.cells.items():
            recomputed = []
            eval_records = next(v for v in variants if v.family == eval_fam).eval
            for seed in seeds:
                log = tmp_path / f"preds__{train_fam}__seed{seed}__on__{eval_fam}.jsonl"
                preds = parse_predictions(log)
                recomputed.append(classification_metrics(eval_records, preds).nei_f1)
            agg = seed_aggregate(recomputed)
            assert agg.mean == pytest.approx(cell.nei_f1.mean)
            assert agg.sd == pytest.approx(cell.nei_f1.sd)
