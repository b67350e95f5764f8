import numpy as np
import pytest

from anxietyband.features import CONTEXT_COLUMN
from anxietyband.pipeline import (
    TrainConfig,
    feature_matrix,
    label_cohort,
    stai_summary,
    train_on_matrix,
)
from anxietyband.signalproc import EDA

GRID = [{"criterion": "gini", "max_depth": 3, "n_estimators": 5}]


@pytest.fixture(scope="module")
def eda_matrices(small_cohort):
    scores, labels = label_cohort([r for s in small_cohort for r in s.stai])
    sessions = [s.session for s in small_cohort]
    return scores, feature_matrix(sessions, labels, EDA, False), feature_matrix(sessions, labels, EDA, True)


def test_context_column_only_when_asked(eda_matrices):
    _, plain, ctx = eda_matrices
    assert CONTEXT_COLUMN not in plain.column_names
    assert ctx.column_names[-1] == CONTEXT_COLUMN
    np.testing.assert_array_equal(plain.X, ctx.X[:, :-1])
    assert set(np.unique(ctx.X[:, -1])) == {-1.0, 0.0, 1.0}


def test_stai_summary(eda_matrices):
    scores, _, _ = eda_matrices
    s = stai_summary(scores)
    assert s["A"]["n"] + s["NA"]["n"] == len(scores)
    assert s["A"]["z_mean"] > 0 > s["NA"]["z_mean"]
    assert 20 <= s["T1"]["mean"] <= 80


def test_train_on_matrix_is_reproducible(eda_matrices):
    _, plain, _ = eda_matrices
    cfg = TrainConfig(grid=GRID, seed=2)
    a, b = train_on_matrix(plain, cfg), train_on_matrix(plain, cfg)
    np.testing.assert_array_equal(a.test_proba, b.test_proba)
    assert a.metrics == b.metrics
    assert len(a.test_proba) == len(a.split.test)
    assert set(a.model.feature_names) <= set(plain.column_names)


def test_auto_model_picks_best_validation(eda_matrices):
    _, plain, _ = eda_matrices
    r = train_on_matrix(plain, TrainConfig(model="auto", seed=0))
    assert set(r.validation_scores) == {"random_forest", "logistic", "linear_svm"}
    assert r.validation_scores[r.model.kind] == max(r.validation_scores.values())


def test_subject_split_has_no_leakage(eda_matrices):
    _, plain, _ = eda_matrices
    r = train_on_matrix(plain, TrainConfig(grid=GRID, by_subject=True))
    subj = plain.subject_id
    assert not set(subj[r.split.train]) & set(subj[r.split.test])
