import numpy as np
import pytest

from hscube.dataio import DEFAULT_REGISTRY
from hscube.metrics import (
    ClassConfusion,
    ClassMetrics,
    average_class_metrics,
    build_class_report,
    class_metrics,
    class_report_csv,
    class_report_text,
    image_based_accuracy,
    percent,
    pool_confusions,
)

REPORTING = DEFAULT_REGISTRY.reporting_ids


class TestPoolConfusions:
    def test_all_one_class_predicted_right(self):
        a, b = REPORTING[0], REPORTING[1]
        y = np.full(10, a)
        confs = {c.class_id: c for c in pool_confusions(y, y, REPORTING)}
        assert (confs[a].tp, confs[a].fn) == (10, 0)
        assert (confs[b].tn, confs[b].tp) == (10, 0)

    def test_perfect_predictor(self):
        rng = np.random.default_rng(1)
        y = rng.choice(REPORTING, 200)
        for conf in pool_confusions(y, y, REPORTING):
            m = class_metrics(conf)
            if not m.degenerate:
                assert m.sensitivity == 1.0
                assert m.specificity == 1.0

    def test_hand_counted_two_class_pool(self):
        a, b = REPORTING[0], REPORTING[1]
        y_true = np.array([a, a, b, b])
        y_pred = np.array([a, b, b, b])
        confs = {c.class_id: c for c in pool_confusions(y_true, y_pred, REPORTING)}
        assert (confs[a].tp, confs[a].fn, confs[a].fp, confs[a].tn) == (1, 1, 0, 2)
        assert (confs[b].tp, confs[b].fn, confs[b].fp, confs[b].tn) == (2, 0, 1, 1)

    def test_non_reporting_truth_excluded_entirely(self):
        a = REPORTING[0]
        outside = DEFAULT_REGISTRY.id_of("Out of focus area")
        assert outside not in REPORTING
        y_true = np.array([a, outside, outside])
        y_pred = np.array([a, a, a])
        confs = {c.class_id: c for c in pool_confusions(y_true, y_pred, REPORTING)}
        # Pool is the single reporting-class pixel; the rest never count.
        assert confs[a].total == 1
        assert (confs[a].tp, confs[a].fp) == (1, 0)

    def test_pool_size_conserved(self):
        rng = np.random.default_rng(2)
        y_true = rng.choice(REPORTING, 500)
        y_pred = rng.choice(REPORTING, 500)
        confs = pool_confusions(y_true, y_pred, REPORTING)
        assert sum(c.tp + c.fn for c in confs) == 500
        for c in confs:
            assert c.total == 500

    def test_constant_predictor(self):
        rng = np.random.default_rng(3)
        y_true = rng.choice(REPORTING, 300)
        k = REPORTING[4]
        y_pred = np.full(300, k)
        for conf in pool_confusions(y_true, y_pred, REPORTING):
            m = class_metrics(conf)
            if conf.class_id == k:
                assert m.sensitivity == 1.0
            elif conf.tp + conf.fn > 0:
                assert m.sensitivity == 0.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        y_true = rng.choice(REPORTING, 100)
        y_pred = rng.choice(REPORTING, 100)
        perm = rng.permutation(100)
        assert pool_confusions(y_true, y_pred, REPORTING) == \
            pool_confusions(y_true[perm], y_pred[perm], REPORTING)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pool_confusions(np.zeros(3, int), np.zeros(4, int), REPORTING)


class TestClassMetrics:
    def test_hair_row_from_published_table(self):
        # Counts realizing sensitivity 1.0000 and specificity 0.6848.
        conf = ClassConfusion(class_id=0, tp=500, fn=0, tn=6848, fp=3152)
        m = class_metrics(conf)
        assert percent(m.sensitivity) == "100.00"
        assert percent(m.specificity) == "68.48"
        assert percent(m.balanced_accuracy) == "84.24"

    def test_soft_palate_row_from_published_table(self):
        # Specificity 0.67368 displays as 67.37 while its balanced accuracy
        # 0.33684 displays as 33.68 (the table rounds them independently).
        conf = ClassConfusion(class_id=0, tp=0, fn=250, tn=67368, fp=32632)
        m = class_metrics(conf)
        assert percent(m.sensitivity) == "0.00"
        assert percent(m.specificity) == "67.37"
        assert percent(m.balanced_accuracy) == "33.68"

    def test_symmetric_confusion(self):
        m = class_metrics(ClassConfusion(class_id=0, tp=25, fn=25, fp=25, tn=25))
        assert m.sensitivity == m.specificity == m.accuracy == m.balanced_accuracy == 0.5

    def test_balanced_is_exact_mean(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            counts = rng.integers(0, 1000, 4)
            if counts.sum() == 0:
                continue
            m = class_metrics(ClassConfusion(0, *[int(c) for c in counts]))
            assert m.balanced_accuracy == (m.sensitivity + m.specificity) / 2

    def test_degenerate_flagged_and_zeroed(self):
        m = class_metrics(ClassConfusion(class_id=0, tp=0, fn=0, fp=3, tn=7))
        assert m.degenerate
        assert m.sensitivity == 0.0
        assert m.balanced_accuracy == m.specificity / 2

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            class_metrics(ClassConfusion(class_id=0, tp=0, fn=0, fp=0, tn=0))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ClassConfusion(class_id=0, tp=-1, fn=0, fp=0, tn=0)


RGBPIXEL_TABLE = {
    # class -> (sensitivity, specificity, accuracy, balanced accuracy), percent.
    "Attached gingiva": (54.89, 68.08, 67.74, 61.49),
    "Enamel": (56.52, 69.98, 68.64, 63.25),
    "Hair": (100.00, 68.48, 68.94, 84.24),
    "Hard palate": (44.01, 68.63, 66.40, 56.32),
    "Lip": (47.80, 68.15, 66.72, 57.98),
    "Oral mucosa": (42.95, 68.37, 66.16, 55.66),
    "Skin": (38.86, 69.33, 62.48, 54.10),
    "Soft palate": (0.00, 67.37, 67.12, 33.68),
    "Tongue": (2.14, 62.77, 54.61, 32.46),
}


class TestAverageClassMetrics:
    def test_single_class_is_itself(self):
        m = ClassMetrics(0.5, 0.6, 0.55, 0.55)
        assert average_class_metrics([m]) == m

    def test_two_class_mean(self):
        a = ClassMetrics(0.0, 0.0, 0.0, 0.8)
        b = ClassMetrics(0.0, 0.0, 0.0, 0.6)
        assert average_class_metrics([a, b]).balanced_accuracy == pytest.approx(0.7)

    def test_published_nine_row_average(self):
        rows = [
            ClassMetrics(sens / 100, spec / 100, acc / 100, bal / 100)
            for sens, spec, acc, bal in RGBPIXEL_TABLE.values()
        ]
        avg = average_class_metrics(rows)
        assert avg.balanced_accuracy == pytest.approx(0.5546, abs=5e-4)
        assert avg.sensitivity == pytest.approx(0.4302, abs=5e-4)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            average_class_metrics([])


class TestImageBasedAccuracy:
    def test_single_image(self):
        a = REPORTING[0]
        y_true = np.full(5, a)
        y_pred = np.array([a, a, a, REPORTING[1], REPORTING[1]])
        assert image_based_accuracy([(y_true, y_pred)], REPORTING) == pytest.approx(0.6)

    def test_unweighted_across_images(self):
        a, b = REPORTING[0], REPORTING[1]
        perfect = (np.full(100, a), np.full(100, a))
        wrong = (np.full(2, a), np.full(2, b))
        assert image_based_accuracy([perfect, wrong], REPORTING) == pytest.approx(0.5)

    def test_images_without_reporting_pixels_excluded(self):
        outside = DEFAULT_REGISTRY.id_of("Specular reflection")
        a = REPORTING[0]
        eligible = (np.full(4, a), np.full(4, a))
        ineligible = (np.full(3, outside), np.full(3, outside))
        assert image_based_accuracy([eligible, ineligible], REPORTING) == 1.0

    def test_no_eligible_images_rejected(self):
        outside = DEFAULT_REGISTRY.id_of("Specular reflection")
        with pytest.raises(ValueError):
            image_based_accuracy([(np.full(3, outside), np.full(3, outside))], REPORTING)


class TestPercentRounding:
    def test_half_up_examples(self):
        assert percent(0.8424) == "84.24"
        assert percent(0.33684) == "33.68"
        assert percent(0.336850000001) == "33.69"
        assert percent(1.0) == "100.00"
        assert percent(0.0) == "0.00"


class TestReports:
    def make_report(self):
        a, b = REPORTING[0], REPORTING[1]
        y_true = np.array([a, a, b, b])
        y_pred = np.array([a, b, b, b])
        confusions = pool_confusions(y_true, y_pred, REPORTING)
        return build_class_report(confusions, DEFAULT_REGISTRY)

    def test_degenerate_classes_excluded_from_average(self):
        report = self.make_report()
        assert len(report.excluded_from_average) == 7
        assert report.average is not None
        named = dict(report.rows)
        skin = named["Skin"]
        oral = named["Oral mucosa"]
        expected = (skin.balanced_accuracy + oral.balanced_accuracy) / 2
        assert report.average.balanced_accuracy == pytest.approx(expected)

    def test_text_table_layout(self):
        text = class_report_text(self.make_report())
        assert "Sensitivity" in text and "Balanced accuracy" in text
        assert "Average" in text
        assert "degenerate" in text

    def test_csv_columns(self):
        csv = class_report_csv(self.make_report())
        lines = csv.strip().splitlines()
        assert lines[0] == "class,sensitivity,specificity,accuracy,balanced_accuracy"
        # 9 class rows + header + average row
        assert len(lines) == 11
