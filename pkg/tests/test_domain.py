import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from replicheck.anova import grbd_anova
from replicheck.domain import (
    Dataset, Independence, Observation, Timing, all_replication_classes, classify_replication,
    summarize_design, validate_grbd,
)
from replicheck.errors import DesignError

from conftest import make_dataset, random_dataset


class TestObservation:
    def test_labels_are_trimmed(self):
        o = Observation(1, "  ctrl ", "site A\t")
        assert (o.treatment, o.batch) == ("ctrl", "site A")

    def test_case_sensitive_levels(self):
        d = Dataset.from_columns([1, 2, 3, 4], ["a", "A", "a", "A"], ["x", "x", "y", "y"])
        assert d.treatment_levels() == ("A", "a")

    @pytest.mark.parametrize("value", [float("nan"), float("inf"), "abc"])
    def test_non_finite_outcome(self, value):
        with pytest.raises(ValueError):
            Observation(value, "a", "b")

    @pytest.mark.parametrize("tr, bt", [("", "b"), ("a", "   ")])
    def test_empty_labels(self, tr, bt):
        with pytest.raises(ValueError):
            Observation(1.0, tr, bt)

    def test_immutable(self):
        with pytest.raises(dataclasses.FrozenInstanceError):
            Observation(1.0, "a", "b").outcome = 2.0


def test_dataset_needs_an_included_row():
    with pytest.raises(DesignError):
        Dataset((Observation(1.0, "a", "b", excluded=True),))


class TestSummarize:
    def test_uniform_counts(self):
        d = make_dataset({(tr, bt): [0.0] * 73 for tr in "CT" for bt in ("TJL", "UM", "UT")})
        s = summarize_design(d)
        assert (s.t, s.b, s.N, s.balanced, s.fully_crossed, s.genuine_replication) == (2, 3, 438, True, True, True)

    def test_unequal_site_sizes(self):
        # mouse-lifespan shaped: N = 438 split unevenly over three sites
        counts = {("C", "TJL"): 76, ("T", "TJL"): 71, ("C", "UM"): 70,
                  ("T", "UM"): 73, ("C", "UT"): 75, ("T", "UT"): 73}
        d = make_dataset({k: [1.0 * i for i in range(v)] for k, v in counts.items()})
        s = summarize_design(d)
        assert s.N == 438
        assert not s.balanced
        assert s.genuine_replication
        assert s.N - s.t * s.b == 432

    def test_empty_cell(self):
        d = make_dataset({("C", "B1"): [1, 2], ("T", "B1"): [3, 4], ("C", "B2"): [5, 6]})
        s = summarize_design(d)
        assert s.count("T", "B2") == 0
        assert not s.fully_crossed
        assert not s.balanced

    def test_excluded_rows_ignored(self, small_balanced):
        obs = list(small_balanced.observations)
        obs[0] = dataclasses.replace(obs[0], excluded=True)
        before = summarize_design(small_balanced)
        after = summarize_design(Dataset(tuple(obs)))
        assert after.N == before.N - 1
        diff = np.array(before.cell_counts) - np.array(after.cell_counts)
        assert diff.sum() == 1 and diff.max() == 1

    @pytest.mark.parametrize("cells", [
        {("C", "B1"): [1, 2], ("C", "B2"): [3, 4]},
        {("C", "B1"): [1, 2], ("T", "B1"): [3, 4]},
    ])
    def test_too_few_levels(self, cells):
        with pytest.raises(DesignError):
            summarize_design(make_dataset(cells))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_row_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng, 3, 2, counts=rng.integers(0, 4, (3, 2)) + 1)
        perm = rng.permutation(len(d.observations))
        shuffled = Dataset(tuple(d.observations[k] for k in perm))
        assert summarize_design(shuffled) == summarize_design(d)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_excluding_one_row(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dataset(rng, 2, 3, counts=rng.integers(2, 6, (2, 3)))
        k = int(rng.integers(len(d.observations)))
        obs = list(d.observations)
        obs[k] = dataclasses.replace(obs[k], excluded=True)
        a, b = summarize_design(d), summarize_design(Dataset(tuple(obs)))
        assert b.N == a.N - 1
        delta = np.array(a.cell_counts) - np.array(b.cell_counts)
        assert np.count_nonzero(delta) == 1 and delta.sum() == 1


class TestValidate:
    def test_all_pass(self):
        d = make_dataset({(tr, bt): [1, 2, 3, 4, 5] for tr in "CT" for bt in "XYZ"})
        rep = validate_grbd(summarize_design(d))
        assert rep.overall
        assert all(c.passed for c in rep.checks)
        assert rep.interaction_testable

    def test_single_replicate_cell(self):
        d = make_dataset({("C", "X"): [1], ("T", "X"): [2, 3], ("C", "Y"): [4, 5], ("T", "Y"): [6, 7]})
        rep = validate_grbd(summarize_design(d))
        assert not rep.overall
        assert not rep.get("genuine_replication").passed
        assert "genuine replication" in rep.get("genuine_replication").message
        assert not rep.interaction_testable
        assert rep.get("crossed").passed

    def test_uncrossed_fails(self):
        d = make_dataset({("C", "X"): [1, 2], ("T", "X"): [2, 3], ("C", "Y"): [4, 5]})
        rep = validate_grbd(summarize_design(d))
        assert not rep.overall
        assert not rep.get("crossed").passed

    def test_unbalanced_is_only_a_warning(self):
        # thin a balanced 80-per-cell design at random down to 70-80 per cell
        rng = np.random.default_rng(7)
        counts = rng.integers(70, 81, (2, 3))
        counts[0, 0], counts[1, 1] = 70, 80
        d = random_dataset(rng, 2, 3, counts=counts)
        rep = validate_grbd(summarize_design(d))
        assert rep.overall
        assert [c.name for c in rep.warnings] == ["balance"]
        assert "70-80" in rep.get("balance").message

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_valid_design_is_accepted_by_anova(self, seed):
        rng = np.random.default_rng(seed)
        t, b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        d = random_dataset(rng, t, b, counts=rng.integers(1, 5, (t, b)))
        if validate_grbd(summarize_design(d)).overall:
            grbd_anova(d)


class TestTaxonomy:
    @pytest.mark.parametrize("ind, tim, panel, label", [
        ("full", "sequential", "A", "independent sequential"),
        ("full", "parallel", "C", "independent parallel"),
        ("partial", "parallel", "D", "partially independent parallel"),
        ("partial", "sequential", "B", "partially independent sequential"),
        ("full", "staggered", "E", "independent staggered"),
        ("partial", "staggered", "F", "partially independent staggered"),
    ])
    def test_panels(self, ind, tim, panel, label):
        rc = classify_replication(ind, tim)
        assert (rc.figure_panel, rc.label) == (panel, label)

    def test_bijection(self):
        classes = [classify_replication(i, t) for i in Independence for t in Timing]
        assert sorted(c.figure_panel for c in classes) == list("ABCDEF")
        assert len({(c.independence, c.timing) for c in classes}) == 6
        assert [c.figure_panel for c in all_replication_classes()] == list("ABCDEF")

    def test_bad_enum(self):
        with pytest.raises(ValueError):
            classify_replication("mostly", "parallel")
