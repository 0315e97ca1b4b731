import numpy as np
import pytest

from riskmlp import rais
from riskmlp.rais import (
    DEFAULT_CANDIDATE_SCHEMA,
    DEFAULT_RETAINED_SCHEMA,
    DegenerateVariableError,
    ParameterError,
    RaisSchema,
    RiskVariable,
)


class TestSchemas:
    def test_candidate_has_twenty_variables(self):
        assert len(DEFAULT_CANDIDATE_SCHEMA) == 20

    def test_retained_has_seventeen(self):
        assert len(DEFAULT_RETAINED_SCHEMA) == 17

    def test_retained_is_candidate_minus_reference_drops(self):
        dropped = set(DEFAULT_CANDIDATE_SCHEMA.codes) - set(
            DEFAULT_RETAINED_SCHEMA.codes
        )
        assert dropped == {"B2", "D3", "E2"}

    def test_retained_preserves_candidate_order(self):
        order = {c: i for i, c in enumerate(DEFAULT_CANDIDATE_SCHEMA.codes)}
        positions = [order[c] for c in DEFAULT_RETAINED_SCHEMA.codes]
        assert positions == sorted(positions)

    def test_code_prefix_must_match_content(self):
        with pytest.raises(ValueError):
            RiskVariable(code="A9", label="x", content="Technical")

    def test_duplicate_codes_rejected(self):
        v = DEFAULT_CANDIDATE_SCHEMA.variables[0]
        with pytest.raises(ValueError):
            RaisSchema(variables=(v, v), version="dup")

    def test_schema_file_round_trip(self, tmp_path):
        path = tmp_path / "schema.json"
        rais.save_schema(DEFAULT_RETAINED_SCHEMA, str(path))
        loaded = rais.load_schema(str(path))
        assert loaded.codes == DEFAULT_RETAINED_SCHEMA.codes
        assert [v.label for v in loaded.variables] == [
            v.label for v in DEFAULT_RETAINED_SCHEMA.variables
        ]


class TestStandardize:
    def test_simple_column(self):
        z, means, stds = rais.standardize(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(z[:, 0], [-1.0, 0.0, 1.0])
        assert means[0] == 2.0
        assert stds[0] == 1.0

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 3))
        z1, _, _ = rais.standardize(x)
        z2, _, _ = rais.standardize(z1)
        assert np.max(np.abs(z1 - z2)) < 1e-12

    def test_constant_column_rejected(self):
        x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        with pytest.raises(DegenerateVariableError, match="column 1"):
            rais.standardize(x)

    def test_needs_two_samples(self):
        with pytest.raises(ParameterError):
            rais.standardize(np.array([[1.0, 2.0]]))


class TestPca:
    def test_perfectly_correlated_pair(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=200)
        x = np.column_stack([a, 2.0 * a + 1.0])
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        np.testing.assert_allclose(result.eigenvalues, [2.0, 0.0], atol=1e-9)
        assert result.retained_component_count == 1
        np.testing.assert_allclose(result.communalities, [1.0, 1.0], atol=1e-9)

    def test_uncorrelated_variables(self):
        rng = np.random.default_rng(2)
        z, _, _ = rais.standardize(rng.normal(size=(20000, 4)))
        result = rais.pca(z)
        np.testing.assert_allclose(result.eigenvalues, np.ones(4), atol=0.05)
        np.testing.assert_allclose(
            result.explained_variance_ratio, np.full(4, 0.25), atol=0.02
        )

    def test_eigenvalue_sum_is_variable_count(self):
        rng = np.random.default_rng(3)
        z, _, _ = rais.standardize(rng.normal(size=(100, 6)))
        result = rais.pca(z)
        assert np.sum(result.eigenvalues) == pytest.approx(6.0, abs=1e-9)

    def test_explained_ratio_sums_to_one(self):
        rng = np.random.default_rng(4)
        z, _, _ = rais.standardize(rng.normal(size=(60, 5)))
        result = rais.pca(z)
        assert np.sum(result.explained_variance_ratio) == pytest.approx(1.0, abs=1e-9)

    def test_communalities_within_unit_interval(self):
        rng = np.random.default_rng(5)
        z, _, _ = rais.standardize(rng.normal(size=(80, 7)))
        result = rais.pca(z)
        assert np.all(result.communalities >= 0.0)
        assert np.all(result.communalities <= 1.0 + 1e-9)
        # total communality equals the retained eigenvalue mass, bounded by p
        retained_mass = np.sum(result.eigenvalues[: result.retained_component_count])
        assert np.sum(result.communalities) == pytest.approx(retained_mass, abs=1e-9)
        assert np.sum(result.communalities) <= 7.0 + 1e-9

    def test_scale_invariance(self):
        # correlation PCA ignores positive rescaling of raw variables
        rng = np.random.default_rng(6)
        x = rng.normal(size=(120, 5))
        scales = np.array([1.0, 10.0, 0.01, 3.0, 250.0])
        z1, _, _ = rais.standardize(x)
        z2, _, _ = rais.standardize(x * scales)
        r1 = rais.pca(z1)
        r2 = rais.pca(z2)
        assert np.max(np.abs(r1.eigenvalues - r2.eigenvalues)) < 1e-9
        assert np.max(np.abs(r1.communalities - r2.communalities)) < 1e-9

    def test_warns_when_few_samples(self):
        rng = np.random.default_rng(7)
        z, _, _ = rais.standardize(rng.normal(size=(4, 4)))
        with pytest.warns(UserWarning):
            rais.pca(z)


def correlated_with_noise_data(seed=0, n=500):
    """Three variables driven by one factor, plus an independent noise column."""
    rng = np.random.default_rng(seed)
    factor = rng.normal(size=n)
    informative = np.column_stack(
        [factor + 0.3 * rng.normal(size=n) for _ in range(3)]
    )
    noise = rng.normal(size=(n, 1))
    return np.hstack([informative, noise])


class TestSelectVariables:
    def make_schema(self, k):
        return RaisSchema(
            variables=tuple(DEFAULT_CANDIDATE_SCHEMA.variables[:k]), version="t"
        )

    def test_all_strong_variables_kept(self):
        rng = np.random.default_rng(8)
        factor = rng.normal(size=400)
        x = np.column_stack([factor + 0.2 * rng.normal(size=400) for _ in range(4)])
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        schema, report = rais.select_variables(self.make_schema(4), result)
        assert len(schema) == 4
        assert all(r["kept"] for r in report)

    def test_noise_variable_dropped(self):
        x = correlated_with_noise_data()
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        # independent check: the noise column's communality is genuinely low
        assert result.communalities[3] < 0.5
        assert np.all(result.communalities[:3] >= 0.5)
        schema, report = rais.select_variables(self.make_schema(4), result)
        assert len(schema) == 3
        assert report[3]["kept"] is False

    def test_output_is_subsequence(self):
        x = correlated_with_noise_data(seed=9)
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        candidates = self.make_schema(4)
        schema, _ = rais.select_variables(candidates, result)
        it = iter(candidates.codes)
        assert all(code in it for code in schema.codes)

    def test_threshold_bounds(self):
        x = correlated_with_noise_data(seed=10)
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        with pytest.raises(ParameterError):
            rais.select_variables(self.make_schema(4), result, communality_threshold=1.5)
        with pytest.raises(ParameterError):
            rais.select_variables(self.make_schema(4), result, communality_threshold=-0.1)

    def test_report_fields(self):
        x = correlated_with_noise_data(seed=11)
        z, _, _ = rais.standardize(x)
        result = rais.pca(z)
        _, report = rais.select_variables(self.make_schema(4), result)
        for row in report:
            assert set(row) == {"code", "communality", "kept"}
