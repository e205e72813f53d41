import numpy as np
import pytest

from fedcgs import (
    LabeledFeatureSet,
    PartitionSpec,
    SyntheticSpec,
    compute_client_stats,
    deserialize_stats,
    generate_synthetic,
    merge_stats,
    partition,
    serialize_stats,
    zero_stats,
)


def naive_stats(data: LabeledFeatureSet):
    """Independent re-evaluation of the definitions via matmul and masks."""
    sums = np.stack(
        [data.features[data.labels == j].sum(axis=0) for j in range(data.num_classes)]
    )
    moment = data.features.T @ data.features
    counts = np.bincount(data.labels, minlength=data.num_classes)
    return sums, moment, counts


@pytest.fixture(scope="module")
def random_data():
    return generate_synthetic(SyntheticSpec(num_classes=4, dim=8, samples_per_class=50, seed=21))


class TestComputeClientStats:
    def test_single_sample(self):
        data = LabeledFeatureSet(np.array([[1.0, 2.0]]), np.array([0]), num_classes=2, dim=2)
        stats = compute_client_stats(data)
        np.testing.assert_array_equal(stats.class_sums, [[1.0, 2.0], [0.0, 0.0]])
        np.testing.assert_array_equal(stats.second_moment, [[1.0, 2.0], [2.0, 4.0]])
        np.testing.assert_array_equal(stats.class_counts, [1, 0])

    def test_empty_client_is_all_zero(self):
        empty = LabeledFeatureSet(np.zeros((0, 3)), np.zeros(0, dtype=int), 2, 3)
        stats = compute_client_stats(empty)
        assert stats.total_count == 0
        assert not stats.class_sums.any()
        assert not stats.second_moment.any()

    def test_matches_naive_recomputation(self, random_data):
        # oracle: direct per-definition evaluation through a separate code path
        stats = compute_client_stats(random_data)
        sums, moment, counts = naive_stats(random_data)
        np.testing.assert_allclose(stats.class_sums, sums, rtol=1e-12)
        np.testing.assert_allclose(stats.second_moment, moment, rtol=1e-12)
        np.testing.assert_array_equal(stats.class_counts, counts)

    def test_second_moment_is_psd(self, random_data):
        stats = compute_client_stats(random_data)
        rng = np.random.default_rng(5)
        trace = np.trace(stats.second_moment)
        for _ in range(20):
            v = rng.standard_normal(random_data.dim)
            quad = v @ stats.second_moment @ v
            assert quad >= -1e-10 * (v @ v) * trace

    def test_class_sums_total_the_feature_sum(self, random_data):
        stats = compute_client_stats(random_data)
        np.testing.assert_allclose(
            stats.feature_sum(), random_data.features.sum(axis=0), rtol=1e-12
        )

    def test_zero_labels_have_zero_sums(self):
        data = LabeledFeatureSet(np.ones((3, 2)), np.zeros(3, dtype=int), num_classes=4, dim=2)
        stats = compute_client_stats(data)
        np.testing.assert_array_equal(stats.class_sums[1:], np.zeros((3, 2)))


class TestMergeStats:
    def test_zero_is_identity(self, random_data):
        stats = compute_client_stats(random_data)
        merged = merge_stats(stats, zero_stats(stats.dim, stats.num_classes))
        np.testing.assert_array_equal(merged.class_sums, stats.class_sums)
        np.testing.assert_array_equal(merged.second_moment, stats.second_moment)
        np.testing.assert_array_equal(merged.class_counts, stats.class_counts)

    def test_commutative(self, random_data):
        half = random_data.n // 2
        a = compute_client_stats(random_data.take(np.arange(half)))
        b = compute_client_stats(random_data.take(np.arange(half, random_data.n)))
        ab, ba = merge_stats(a, b), merge_stats(b, a)
        np.testing.assert_array_equal(ab.class_counts, ba.class_counts)
        np.testing.assert_allclose(ab.class_sums, ba.class_sums, rtol=1e-12)
        np.testing.assert_allclose(ab.second_moment, ba.second_moment, rtol=1e-12)

    def test_three_way_partition_merges_to_whole(self, random_data):
        # oracle: statistics of the concatenated data
        parts = partition(random_data, PartitionSpec(3, "uniform", seed=17))
        folded = zero_stats(random_data.dim, random_data.num_classes)
        for part in parts:
            folded = merge_stats(folded, compute_client_stats(part))
        whole = compute_client_stats(random_data)
        np.testing.assert_array_equal(folded.class_counts, whole.class_counts)
        np.testing.assert_allclose(folded.class_sums, whole.class_sums, rtol=1e-10)
        np.testing.assert_allclose(folded.second_moment, whole.second_moment, rtol=1e-10)

    def test_partition_merge_identity_dirichlet(self, random_data):
        parts = partition(random_data, PartitionSpec(8, "dirichlet", alpha=0.1, seed=3))
        folded = zero_stats(random_data.dim, random_data.num_classes)
        for part in parts:
            folded = merge_stats(folded, compute_client_stats(part))
        whole = compute_client_stats(random_data)
        np.testing.assert_allclose(folded.second_moment, whole.second_moment, rtol=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            merge_stats(zero_stats(2, 3), zero_stats(2, 4))


class TestPayload:
    def test_round_trip(self, random_data):
        stats = compute_client_stats(random_data)
        back = deserialize_stats(serialize_stats(stats))
        np.testing.assert_array_equal(back.class_sums, stats.class_sums)
        np.testing.assert_array_equal(back.second_moment, stats.second_moment)
        np.testing.assert_array_equal(back.class_counts, stats.class_counts)

    def test_layout_length(self, random_data):
        stats = compute_client_stats(random_data)
        d, c = stats.dim, stats.num_classes
        assert len(serialize_stats(stats)) == 8 + 8 * (c + c * d + d * d)

    def test_corrupt_payload_rejected(self, random_data):
        payload = serialize_stats(compute_client_stats(random_data))
        with pytest.raises(ValueError):
            deserialize_stats(payload[:-8])
