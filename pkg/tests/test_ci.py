import math
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdis.ci import (Dataset, FisherZCi, OracleCi, PooledScope, SettingScope, default_alpha, fisher_z,
                     fisher_z_from_corr)
from cdis.errors import DataError, DegenerateConditioning, InsufficientData, InvalidArgument
from cdis.equivalence import enumerate_models
from cdis.simulate import pest_scm, sample_interventional, sample_observational
from cdis.twin import TargetCollection, build_twin, implies_ci, implies_invariance


def _pest(n, seed):
    scm = pest_scm()
    x0, eps = sample_observational(scm, n, [seed, 2])
    x1 = sample_interventional(scm, eps, 0, seed=[seed, 3, 1])
    return Dataset((x0, x1), ("X1", "X2", "X3"), (frozenset(), frozenset({0})))


# oracle


def test_oracle_chain_answers(chain):
    p = OracleCi(chain, TargetCollection.of({2}, {0}))
    assert p.ci_within(1, 0, 2, {1})
    assert not p.ci_within(2, 0, 2, {1})


def test_oracle_clinical_invariances(clinical):
    p = OracleCi(clinical, TargetCollection.of({0}))
    assert p.invariance(1, 1)
    assert not p.invariance(1, 1, {0})


def test_oracle_delegates_to_twin_graph_queries():
    for g in enumerate_models(3, 1):
        targets = TargetCollection.of({0}, {1, 2})
        p = OracleCi(g, targets)
        for k, t in enumerate(targets):
            tw = build_twin(g, t)
            for i, j, c in ((0, 1, ()), (0, 2, (1,)), (1, 2, (0,))):
                assert p.ci_within(k, i, j, c) == implies_ci(tw, i, j, c)
            if k:
                for j, c in ((0, ()), (2, (1,)), (1, (0, 2))):
                    assert p.invariance(k, j, c) == implies_invariance(tw, j, c)


def test_oracle_argument_checks(clinical):
    p = OracleCi(clinical, TargetCollection.of({0}))
    with pytest.raises(InvalidArgument):
        p.ci_within(0, 0, 0)
    with pytest.raises(InvalidArgument):
        p.ci_within(0, 0, 1, {1})
    with pytest.raises(InvalidArgument):
        p.invariance(0, 1)


# Fisher-Z arithmetic


def test_zero_correlation_is_independent():
    corr = np.eye(2)
    stat, indep = fisher_z_from_corr(corr, 100, 0, 1, [], 0.5)
    assert stat == 0.0 and indep


def test_perfect_correlation_is_dependent():
    x = np.arange(50.0)
    stat, indep = fisher_z(x, 2 * x + 1, None, 0.05)
    assert stat > 100 and not indep  # r rounds to 1 - 1e-16
    stat, indep = fisher_z_from_corr(np.ones((2, 2)), 50, 0, 1, [], 0.05)
    assert stat == math.inf and not indep


def test_statistic_for_small_correlation_matches_scalar_formula():
    corr = np.array([[1.0, 0.1], [0.1, 1.0]])
    stat, indep = fisher_z_from_corr(corr, 1000, 0, 1, [], 0.05)
    # independent scalar computation: z = sqrt(n - 3) * 0.5 * ln((1 + r) / (1 - r))
    expected = math.sqrt(997) * 0.5 * math.log(1.1 / 0.9)
    assert stat == pytest.approx(expected, rel=1e-12)
    assert stat == pytest.approx(3.168, abs=1e-3)
    assert stat > statistics.NormalDist().inv_cdf(0.975)
    assert not indep


def test_duplicated_column_is_dependent():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 2))
    ds = Dataset((np.column_stack([x, x[:, 0]]),), ("A", "B", "A2"))
    assert not FisherZCi(ds, 0.05).ci_within(0, 0, 2)


def test_alpha_defaults():
    assert default_alpha(5) == 0.05
    assert default_alpha(10) == 0.05
    assert default_alpha(15) == 0.01
    assert default_alpha(20) == 0.01


def test_bad_alpha_rejected():
    with pytest.raises(InvalidArgument):
        fisher_z(np.arange(10.0), np.arange(10.0) ** 2, None, 1.5)


def test_sample_size_floor():
    x = np.random.default_rng(1).standard_normal((6, 3))
    p = FisherZCi(Dataset((x,), ("A", "B", "C")))
    with pytest.raises(InsufficientData):
        p.ci_within(0, 0, 1)
    with pytest.raises(InsufficientData):
        fisher_z(x[:4, 0], x[:4, 1], x[:4, 2], 0.05)


def test_singular_conditioning_raises_and_provider_treats_it_as_dependent(caplog):
    rng = np.random.default_rng(2)
    z = rng.standard_normal(300)
    x, y = rng.standard_normal(300), rng.standard_normal(300)
    with pytest.raises(DegenerateConditioning):
        fisher_z(x, y, np.column_stack([z, 2 * z]), 0.05)
    p = FisherZCi(Dataset((np.column_stack([x, y, z, 2 * z]),), ("X", "Y", "Z", "Z2")))
    assert not p.ci_within(0, 0, 1, {2, 3})
    assert p.degenerate_count == 1
    assert "treating as dependent" in caplog.text


@given(st.floats(0.1, 100), st.floats(-50, 50), st.floats(0.1, 100), st.integers(0, 2))
def test_statistic_invariant_under_affine_rescaling(scale, shift, scale_z, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(400)
    x = z + rng.standard_normal(400)
    y = 0.3 * x + z + rng.standard_normal(400)
    base, _ = fisher_z(x, y, z, 0.05)
    moved, _ = fisher_z(scale * x + shift, -scale * y, scale_z * z - shift, 0.05)
    assert moved == pytest.approx(base, abs=1e-9)


def test_pooled_invariance_rejection_rate_is_calibrated():
    # two settings drawn from the same distribution: rejections happen at rate alpha
    rng = np.random.default_rng(11)
    cov = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.4], [0.2, 0.4, 1.0]])
    alpha = 0.05
    rejected = 0
    runs = 500
    for _ in range(runs):
        a = rng.multivariate_normal(np.zeros(3), cov, 400)
        b = rng.multivariate_normal(np.zeros(3), cov, 400)
        p = FisherZCi(Dataset((a, b), ("A", "B", "C")), alpha)
        rejected += not p.invariance(1, 0, {1})
    assert abs(rejected / runs - alpha) <= 0.03


def test_identical_settings_are_invariant():
    x = np.random.default_rng(3).standard_normal((300, 3))
    p = FisherZCi(Dataset((x, x.copy()), ("A", "B", "C")), 0.2)
    assert all(p.invariance(1, j, c) for j in range(3) for c in ((), ({0, 1, 2} - {j})))


# pest-control data


def test_pest_observational_chain_independence_is_found():
    hits = sum(FisherZCi(_pest(5000, s), 0.05).ci_within(0, 0, 2, {1}) for s in range(50))
    assert hits >= 45


def test_pest_invariance_of_last_variable_given_middle_is_rejected():
    hits = sum(not FisherZCi(_pest(5000, s), 0.05).invariance(1, 2, {1}) for s in range(20))
    assert hits >= 18


def test_pest_interventional_dependence_is_found_with_enough_rows():
    # the induced partial correlation is about 0.02, so this needs far more than 5000 rows
    hits = sum(not FisherZCi(_pest(100_000, s), 0.05).ci_within(1, 0, 2, {1}) for s in range(10))
    assert hits >= 9


# datasets


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    ds = Dataset((rng.standard_normal((20, 2)), rng.standard_normal((15, 2))), ("A", "B"),
                 (frozenset(), frozenset({1})))
    back = Dataset.from_manifest(ds.to_csv(tmp_path))
    assert back.names == ds.names and back.targets == ds.targets
    for a, b in zip(ds.settings, back.settings):
        assert np.array_equal(a, b)


def test_dataset_copies_and_freezes_input():
    x = np.zeros((5, 2))
    x[:, 0] = np.arange(5)
    ds = Dataset((x,), ("A", "B"))
    assert x.flags.writeable
    assert not ds.settings[0].flags.writeable


def test_dataset_rejects_bad_shapes_and_missing_values():
    with pytest.raises(DataError):
        Dataset((np.zeros((5, 3)),), ("A", "B"))
    bad = np.ones((5, 2))
    bad[0, 0] = np.nan
    with pytest.raises(DataError):
        Dataset((bad,), ("A", "B"))


def test_manifest_with_gap_rejected(tmp_path):
    (tmp_path / "manifest.json").write_text('{"settings": [{"k": 1, "path": "a.csv"}]}')
    with pytest.raises(DataError):
        Dataset.from_manifest(tmp_path / "manifest.json")


# scopes


def test_pooled_scope_adds_indicator_to_x_x_tests(clinical):
    p = OracleCi(clinical, TargetCollection.of({0}))
    scope = PooledScope(p, 1)
    assert scope.names == ("X1", "X2", "zeta")
    indep, sepset = scope.independent(2, 1, frozenset())
    assert indep and sepset == frozenset()
    indep, _ = scope.independent(0, 1, frozenset({2}))
    assert not indep
    s0 = SettingScope(p, 0)
    assert s0.independent(0, 1, frozenset()) == (False, frozenset())
