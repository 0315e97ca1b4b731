import numpy as np
import pytest

from riskmlp import data, evaluate, nn, train
from riskmlp.data import FAILURE, SUCCESS
from riskmlp.evaluate import (
    ConfusionMatrix,
    accuracy_percent,
    classify,
    combine_matrices,
    error_histogram,
    failure_rate_report,
    round_half_away,
)
from riskmlp.linalg import ShapeError

CLASSES = ["success", "failure"]


def fixed_output_net(out0, out1):
    """1-input net whose two outputs have prescribed signs via biases."""
    big = 25.0  # deep saturation so outputs equal +-1
    return nn.Network(
        layer_sizes=[1, 2],
        weights=[np.zeros((2, 1))],
        biases=[np.array([big * out0, big * out1])],
    )


class TestClassify:
    def test_argmax_success(self):
        net = fixed_output_net(0.9, -0.9)
        label, raw = classify(net, np.array([0.0]))
        assert label == "success"
        assert raw[0] > raw[1]

    def test_argmax_failure(self):
        net = fixed_output_net(-0.2, 0.4)
        label, _ = classify(net, np.array([0.0]))
        assert label == "failure"

    def test_tie_goes_to_failure(self):
        net = fixed_output_net(0.0, 0.0)
        label, raw = classify(net, np.array([0.0]))
        assert tuple(raw) == (0.0, 0.0)
        assert label == "failure"

    def test_dimension_mismatch(self):
        net = nn.init_network([17, 5, 2], seed=0)
        with pytest.raises(ShapeError, match="17"):
            classify(net, np.zeros(4))


class TestAccuracy:
    def cm(self, correct, total):
        counts = np.array([[correct, 0], [total - correct, 0]])
        return ConfusionMatrix(counts=counts, split="t", class_order=CLASSES)

    def test_reference_percentages(self):
        assert accuracy_percent(self.cm(119, 154)) == 77.3
        assert accuracy_percent(self.cm(24, 33)) == 72.7
        assert accuracy_percent(self.cm(29, 33)) == 87.9
        assert accuracy_percent(self.cm(172, 220)) == 78.2

    def test_rounding_is_half_away_from_zero(self):
        assert round_half_away(77.25) == 77.3
        assert round_half_away(77.2499) == 77.2
        assert round_half_away(-0.05) == -0.1

    def test_relabel_invariance(self):
        counts = np.array([[50, 10], [5, 35]])
        cm = ConfusionMatrix(counts=counts, split="t", class_order=CLASSES)
        flipped = ConfusionMatrix(
            counts=counts[::-1, ::-1], split="t", class_order=CLASSES[::-1]
        )
        assert accuracy_percent(cm) == accuracy_percent(flipped)

    def test_empty_raises(self):
        cm = ConfusionMatrix(
            counts=np.zeros((2, 2), dtype=int), split="t", class_order=CLASSES
        )
        with pytest.raises(ValueError):
            accuracy_percent(cm)


class TestConfusionMatrix:
    def make_split(self, labels):
        samples = [
            data.Sample(firm_id=1, period=1, features=np.full(1, 0.5), label=lab)
            for lab in labels
        ]
        schema = type(data.DEFAULT_RETAINED_SCHEMA)(
            variables=(data.DEFAULT_RETAINED_SCHEMA.variables[0],), version="t"
        )
        return data.Dataset(schema=schema, samples=samples)

    def test_perfect_classifier_has_zero_off_diagonal(self):
        net = fixed_output_net(0.9, -0.9)  # always predicts success
        split = self.make_split([SUCCESS] * 5)
        cm = evaluate.confusion_matrix(net, split, "training")
        assert cm.correct == 5
        assert cm.counts[0, 1] == 0 and cm.counts[1, 0] == 0

    def test_counts_total_equals_split_size(self):
        net = fixed_output_net(-0.9, 0.9)
        split = self.make_split([SUCCESS] * 3 + [FAILURE] * 4)
        cm = evaluate.confusion_matrix(net, split, "test")
        assert cm.total == 7

    def test_combine_sums_elementwise(self):
        a = ConfusionMatrix(np.array([[1, 2], [3, 4]]), "training", CLASSES)
        b = ConfusionMatrix(np.array([[5, 0], [0, 5]]), "test", CLASSES)
        c = combine_matrices([a, b])
        np.testing.assert_array_equal(c.counts, [[6, 2], [3, 9]])
        assert c.split == "all"

    def test_empty_split_rejected(self):
        net = fixed_output_net(0.9, -0.9)
        with pytest.raises(ValueError):
            evaluate.confusion_matrix(net, self.make_split([]), "x")


class TestErrorHistogram:
    def test_even_span_bins(self):
        errors = {"training": np.linspace(-1.0, 1.0, 201)}
        h = error_histogram(errors, bins=20)
        widths = np.diff(h.bin_edges)
        np.testing.assert_allclose(widths, np.full(20, 0.1), atol=1e-12)
        assert h.counts["training"].sum() == 201

    def test_counts_conserved_across_splits(self):
        rng = np.random.default_rng(0)
        errors = {
            "training": rng.normal(size=300),
            "validation": rng.normal(size=66),
            "test": rng.normal(size=66),
        }
        h = error_histogram(errors)
        for name, vals in errors.items():
            assert h.counts[name].sum() == len(vals)

    def test_degenerate_all_equal(self):
        errors = {"training": np.zeros(10), "validation": np.zeros(4)}
        h = error_histogram(errors)
        assert len(h.bin_edges) == 2
        assert h.counts["training"].sum() == 10
        assert h.counts["validation"].sum() == 4

    def test_sign_convention(self):
        # output larger than target -> negative error
        target, output = 0.0, 1.0
        assert target - output == -1.0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            error_histogram({"training": np.array([])})


class TestFailureRateReport:
    def test_reference_periods(self):
        tallies = {1: (21, 16), 2: (38, 14), 3: (47, 16), 4: (58, 10)}
        rows = failure_rate_report(tallies)
        rates = [r["failure_rate_percent"] for r in rows]
        assert rates == [43.2, 26.9, 25.4, 14.7]
        assert [int(r) for r in rates] == [43, 26, 25, 14]  # truncated view

    def test_all_success_period(self):
        rows = failure_rate_report({1: (10, 0)})
        assert rows[0]["failure_rate_percent"] == 0.0

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            failure_rate_report({1: (0, 0)})

    def test_years_labels(self):
        rows = failure_rate_report({1: (1, 1), 4: (2, 2)})
        assert rows[0]["years"] == "2000-2002"
        assert rows[1]["years"] == "2010-2013"


class TestReport:
    @pytest.fixture(scope="module")
    @staticmethod
    def trained():
        ds = data.synth_generate(21)
        cfg = train.TrainConfig(algorithm="lm", seed=2, max_epochs=15)
        tr, val, te = train.split_dataset(ds, cfg.split_ratios, cfg.seed)
        net = nn.init_network([17, 8, 2], seed=2)
        net.norm_params = train.fit_normalization(tr.samples)
        splits = tuple(train.make_pairs(d.samples, net) for d in (tr, val, te))
        out = train.train_lm(net, splits, cfg)
        return out.best_network, {"training": tr, "validation": val, "test": te}, ds

    def test_build_report_structure(self, trained):
        net, splits, ds = trained
        report = evaluate.build_report(net, splits, ds)
        assert set(report["confusion"]) == {"training", "validation", "test", "all"}
        totals = {k: v["total"] for k, v in report["confusion"].items()}
        assert totals == {"training": 154, "validation": 33, "test": 33, "all": 220}
        for name in ("training", "validation", "test"):
            pooled = sum(report["histogram"]["counts"][name])
            assert pooled == 2 * totals[name]

    def test_all_matrix_is_sum_of_splits(self, trained):
        net, splits, ds = trained
        report = evaluate.build_report(net, splits, ds)
        total = np.zeros((2, 2), dtype=int)
        for name in ("training", "validation", "test"):
            total += np.array(report["confusion"][name]["counts"])
        np.testing.assert_array_equal(
            total, np.array(report["confusion"]["all"]["counts"])
        )

    def test_render_text(self, trained):
        net, splits, ds = trained
        report = evaluate.build_report(net, splits, ds)
        text = evaluate.render_text(report)
        assert "rows = actual" in text
        assert "training confusion matrix" in text
        assert "failure-rate trend" in text
        assert "43.2" in text
