import numpy as np
import pandas as pd
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from replicheck.anova import grbd_anova
from replicheck.errors import DesignError
from replicheck.estimator import GRBDAnova, check_grbd_input, to_dataset
from replicheck.sim import SimParams, generate_grbd


@pytest.fixture
def data():
    d = generate_grbd(SimParams(2, 3, 6, (-1.0, 1.0), (0.0, 2.0, 4.0), interaction_sd=0.5, seed=10))
    y, tr, bt = d.columns()
    return d, np.column_stack([tr, bt]), np.asarray(y)


def test_get_set_params():
    est = GRBDAnova(alpha=0.01)
    assert est.get_params() == {"alpha": 0.01, "confidence": 0.95, "reference": None}
    assert clone(est.set_params(confidence=0.9)).confidence == 0.9


def test_fit_matches_functional_api(data):
    d, X, y = data
    est = GRBDAnova().fit(X, y)
    assert est.anova_table_ == grbd_anova(d)
    assert est.validation_.overall
    assert est.effects_ is not None and len(est.effects_.per_batch) == 3
    assert est.verdict_.alpha == 0.05


def test_predict_cell_means(data):
    _, X, y = data
    est = GRBDAnova().fit(X, y)
    pred = est.predict(X)
    for key in {tuple(r) for r in X}:
        mask = (X[:, 0] == key[0]) & (X[:, 1] == key[1])
        assert np.allclose(pred[mask], y[mask].mean())
    # full model: residuals are within-cell deviations
    assert np.sum((y - pred) ** 2) == pytest.approx(est.anova_table_["error"].ss)
    with pytest.raises(ValueError):
        est.predict([["T9", "B1"]])


def test_dataframe_columns_by_name(data):
    _, X, y = data
    df = pd.DataFrame({"batch": X[:, 1], "other": 0, "treatment": X[:, 0]})
    a = GRBDAnova().fit(df, y).anova_table_
    b = GRBDAnova().fit(X, y).anova_table_
    assert a == b


def test_sample_mask(data):
    _, X, y = data
    mask = np.zeros(len(y), dtype=bool)
    mask[0] = True
    est = GRBDAnova().fit(X, y, sample_mask=mask)
    assert est.design_.N == len(y) - 1


def test_not_fitted():
    with pytest.raises(NotFittedError):
        GRBDAnova().predict([["a", "b"]])


def test_input_validation():
    with pytest.raises(ValueError):
        check_grbd_input(np.ones((4, 3)), np.ones(4))
    with pytest.raises(ValueError):
        check_grbd_input(np.array([["a", "x"], ["b", "y"]]), [1.0, np.nan])
    with pytest.raises(ValueError):
        check_grbd_input(np.array([["a", "x"], ["b", "y"]]), [1.0, 2.0, 3.0])
    labels, _ = check_grbd_input(np.array([[" a ", 1], ["b", 2]], dtype=object))
    assert labels.tolist() == [["a", "1"], ["b", "2"]]


def test_uncrossed_design_rejected():
    X = [["a", "x"], ["a", "x"], ["b", "x"], ["b", "x"], ["a", "y"], ["a", "y"]]
    with pytest.raises(DesignError):
        GRBDAnova().fit(X, [1.0, 2.0, 3.0, 4.0, 5.0, 7.0])


def test_three_arms_skip_effects():
    d = generate_grbd(SimParams(3, 2, 4, seed=1))
    y, tr, bt = d.columns()
    est = GRBDAnova().fit(np.column_stack([tr, bt]), y)
    assert est.effects_ is None


def test_to_dataset_round_trip(data):
    d, X, y = data
    assert to_dataset(X, y).columns() == d.columns()
