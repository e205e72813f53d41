import struct

import numpy as np
import pytest

from fedcgs import (
    FormatError,
    IntegrityError,
    IoError,
    LabeledFeatureSet,
    SyntheticSpec,
    TruncationError,
    aggregate_plain,
    build_head,
    compute_client_stats,
    evaluate,
    generate_synthetic,
    read_feature_file,
    synthetic_params,
    write_feature_file,
)

from conftest import bayes_predict, split_even_odd


def small_set() -> LabeledFeatureSet:
    return LabeledFeatureSet(
        np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        np.array([0, 1]),
        num_classes=2,
        dim=3,
    )


class TestFeatureFile:
    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "small.fcgs"
        write_feature_file(small_set(), path)
        loaded = read_feature_file(path)
        np.testing.assert_array_equal(loaded.features, small_set().features)
        np.testing.assert_array_equal(loaded.labels, small_set().labels)
        assert (loaded.num_classes, loaded.dim) == (2, 3)
        # writing the loaded set again reproduces the bytes exactly
        second = tmp_path / "again.fcgs"
        write_feature_file(loaded, second)
        assert path.read_bytes() == second.read_bytes()

    def test_file_size_formula(self, tmp_path):
        # oracle: byte-layout arithmetic, 24 + N*d*4 + N*4
        rng = np.random.default_rng(0)
        data = LabeledFeatureSet(
            rng.standard_normal((1000, 16)).astype(np.float32),
            rng.integers(0, 4, size=1000),
            num_classes=4,
            dim=16,
        )
        path = tmp_path / "sized.fcgs"
        write_feature_file(data, path)
        assert path.stat().st_size == 24 + 1000 * 16 * 4 + 1000 * 4

    def test_truncated_payload(self, tmp_path):
        # header declares 100 rows, payload only has 99
        rng = np.random.default_rng(1)
        path = tmp_path / "trunc.fcgs"
        feats = rng.standard_normal((99, 3)).astype("<f4")
        labels = np.zeros(99, dtype="<u4")
        header = struct.pack("<4sIQII", b"FCGS", 1, 100, 3, 2)
        path.write_bytes(header + feats.tobytes() + labels.tobytes())
        with pytest.raises(TruncationError):
            read_feature_file(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fcgs"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(FormatError):
            read_feature_file(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "ver.fcgs"
        path.write_bytes(struct.pack("<4sIQII", b"FCGS", 9, 1, 1, 1) + b"\x00" * 8)
        with pytest.raises(FormatError):
            read_feature_file(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "label.fcgs"
        header = struct.pack("<4sIQII", b"FCGS", 1, 1, 2, 2)
        feats = np.zeros((1, 2), dtype="<f4").tobytes()
        labels = np.array([5], dtype="<u4").tobytes()
        path.write_bytes(header + feats + labels)
        with pytest.raises(IntegrityError):
            read_feature_file(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "trail.fcgs"
        write_feature_file(small_set(), path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(IntegrityError):
            read_feature_file(path)

    def test_empty_path_write(self):
        with pytest.raises(IoError):
            write_feature_file(small_set(), "")

    def test_missing_file_read(self, tmp_path):
        with pytest.raises(IoError):
            read_feature_file(tmp_path / "nothing.fcgs")

    def test_empty_set_rejected_on_write(self, tmp_path):
        empty = LabeledFeatureSet(np.zeros((0, 3)), np.zeros(0, dtype=int), 2, 3)
        with pytest.raises(ValueError):
            write_feature_file(empty, tmp_path / "empty.fcgs")


class TestLabeledFeatureSet:
    def test_label_range_validated(self):
        with pytest.raises(ValueError):
            LabeledFeatureSet(np.zeros((1, 2)), np.array([2]), num_classes=2, dim=2)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            LabeledFeatureSet(np.array([[np.inf, 0.0]]), np.array([0]), 1, 2)

    def test_histogram_sums_to_n(self):
        data = generate_synthetic(SyntheticSpec(3, 4, 50, seed=2))
        hist = data.label_histogram()
        assert hist.sum() == data.n
        np.testing.assert_array_equal(hist, [50, 50, 50])


class TestSyntheticGenerator:
    def test_deterministic(self):
        spec = SyntheticSpec(num_classes=2, dim=5, samples_per_class=20, seed=7)
        a, b = generate_synthetic(spec), generate_synthetic(spec)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_exact_per_class_counts(self):
        data = generate_synthetic(SyntheticSpec(3, 6, 100, seed=3))
        np.testing.assert_array_equal(data.label_histogram(), [100, 100, 100])

    def test_round_trips_through_file(self, tmp_path):
        data = generate_synthetic(SyntheticSpec(2, 4, 30, seed=4))
        path = tmp_path / "synth.fcgs"
        write_feature_file(data, path)
        loaded = read_feature_file(path)
        np.testing.assert_array_equal(loaded.features, data.features)
        np.testing.assert_array_equal(loaded.labels, data.labels)

    def test_params_match_generated_means(self):
        spec = SyntheticSpec(4, 16, 4000, class_mean_scale=2.5, seed=5)
        means, cov = synthetic_params(spec)
        data = generate_synthetic(spec)
        for cls in range(4):
            rows = data.features[data.labels == cls]
            # empirical mean within sampling error of the true mean
            assert np.linalg.norm(rows.mean(axis=0) - means[cls]) < 0.1
        np.testing.assert_array_equal(cov, np.eye(16))

    def test_head_near_bayes_optimal(self):
        # oracle: Bayes classifier built from the true generating parameters
        spec = SyntheticSpec(
            num_classes=2, dim=8, samples_per_class=2000, class_mean_scale=2.0, seed=6
        )
        means, cov = synthetic_params(spec)
        train, test = split_even_odd(generate_synthetic(spec))
        head = build_head(aggregate_plain([compute_client_stats(train)]))
        head_acc = evaluate(head, test)
        bayes_acc = float(np.mean(bayes_predict(test.features, means, cov) == test.labels))
        assert abs(head_acc - bayes_acc) <= 0.02

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec(0, 4, 10)
        with pytest.raises(ValueError):
            SyntheticSpec(2, 4, 10, class_mean_scale=-1.0)
