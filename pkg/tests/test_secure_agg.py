import numpy as np
import pytest

from fedcgs import (
    SCOPE_COUNTS_ONLY,
    SCOPE_FULL_STATISTICS,
    ClientStatistics,
    FixedPointCodec,
    PartitionSpec,
    ProtocolError,
    SimulationConfig,
    SyntheticSpec,
    aggregate_masked,
    compute_client_stats,
    create_session,
    encode_masked,
    generate_synthetic,
    merge_stats,
    partition,
    run_simulation,
    zero_stats,
)

from conftest import make_train_test


def random_stats(dim, num_classes, seed, n=30):
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, dim))
    labels = rng.integers(0, num_classes, size=n)
    from fedcgs import LabeledFeatureSet

    return compute_client_stats(LabeledFeatureSet(feats, labels, num_classes, dim))


class TestFixedPointCodec:
    def test_round_trip_within_quantum(self):
        codec = FixedPointCodec(24)
        rng = np.random.default_rng(0)
        values = rng.uniform(-1000, 1000, size=256)
        decoded = codec.decode(codec.encode(values))
        assert np.max(np.abs(decoded - values)) <= 2.0 ** -25

    def test_negative_values_wrap_correctly(self):
        codec = FixedPointCodec(24)
        np.testing.assert_allclose(codec.decode(codec.encode(np.array([-3.5]))), [-3.5])

    def test_overflow_detected(self):
        codec = FixedPointCodec(24)
        with pytest.raises(OverflowError):
            codec.encode(np.array([2.0 ** 39]))

    def test_non_finite_rejected(self):
        with pytest.raises(OverflowError):
            FixedPointCodec().encode(np.array([np.nan]))

    def test_counts_are_exact(self):
        # counts never pass through fixed point; they are raw u64 words
        codec = FixedPointCodec(24)
        counts = np.array([0, 3, 2 ** 40], dtype=np.int64)
        np.testing.assert_array_equal(
            codec.decode_counts(counts.view(np.uint64)), counts
        )

    def test_fractional_bits_validated(self):
        with pytest.raises(ValueError):
            FixedPointCodec(52)
        with pytest.raises(ValueError):
            FixedPointCodec(0)


class TestMasking:
    def test_single_participant_payload_is_plain(self):
        stats = random_stats(4, 3, seed=1)
        for scope in (SCOPE_COUNTS_ONLY, SCOPE_FULL_STATISTICS):
            session = create_session([0], scope, seed=5)
            upload = encode_masked(stats, session, 0)
            if scope == SCOPE_COUNTS_ONLY:
                expected = stats.class_counts.astype(np.int64).view(np.uint64)
            else:
                reals = np.concatenate(
                    [stats.class_sums.ravel(), stats.second_moment.ravel()]
                )
                expected = np.concatenate(
                    [
                        stats.class_counts.astype(np.int64).view(np.uint64),
                        session.codec.encode(reals),
                    ]
                )
            np.testing.assert_array_equal(upload.payload, expected)

    def test_two_zero_clients_upload_exact_negations(self):
        session = create_session([0, 1], SCOPE_FULL_STATISTICS, seed=2)
        zero = zero_stats(3, 2)
        a = encode_masked(zero, session, 0)
        b = encode_masked(zero, session, 1)
        np.testing.assert_array_equal(a.payload + b.payload, np.zeros_like(a.payload))
        assert a.payload.any()  # the masks themselves are nonzero

    def test_every_masked_payload_differs_from_plain(self):
        # oracle: direct comparison against the unmasked encoding
        session = create_session(range(5), SCOPE_FULL_STATISTICS, seed=3)
        plain_session = create_session([7], SCOPE_FULL_STATISTICS, seed=3)
        for cid in range(5):
            stats = random_stats(4, 3, seed=10 + cid)
            masked = encode_masked(stats, session, cid)
            plain = encode_masked(stats, plain_session, 7)
            assert not np.array_equal(masked.payload, plain.payload)

    def test_mask_cancellation_is_exact(self):
        session = create_session(range(6), SCOPE_FULL_STATISTICS, seed=4)
        all_stats = [random_stats(5, 3, seed=20 + i) for i in range(6)]
        masked_total = np.zeros_like(encode_masked(all_stats[0], session, 0).payload)
        plain_total = np.zeros_like(masked_total)
        solo = create_session([0], SCOPE_FULL_STATISTICS, seed=4)
        for cid, stats in enumerate(all_stats):
            masked_total = masked_total + encode_masked(stats, session, cid).payload
            plain_total = plain_total + encode_masked(stats, solo, 0).payload
        np.testing.assert_array_equal(masked_total, plain_total)

    def test_unknown_client_rejected(self):
        session = create_session([0, 1], seed=5)
        with pytest.raises(ProtocolError):
            encode_masked(zero_stats(2, 2), session, 9)


class TestAggregateMasked:
    def test_counts_aggregate_exactly(self):
        session = create_session([0, 1], SCOPE_COUNTS_ONLY, seed=6)
        a = ClientStatistics(np.zeros((2, 2)), np.zeros((2, 2)), np.array([3, 1]), 2, 2)
        b = ClientStatistics(np.zeros((2, 2)), np.zeros((2, 2)), np.array([0, 2]), 2, 2)
        out = aggregate_masked(
            [encode_masked(a, session, 0), encode_masked(b, session, 1)], session
        )
        np.testing.assert_array_equal(out.class_counts, [3, 3])

    def test_full_scope_matches_plaintext_fold(self):
        # oracle: plaintext merge fold of the same statistics
        clients = 10
        session = create_session(range(clients), SCOPE_FULL_STATISTICS, seed=7)
        all_stats = [random_stats(6, 4, seed=40 + i) for i in range(clients)]
        uploads = [encode_masked(s, session, i) for i, s in enumerate(all_stats)]
        decoded = aggregate_masked(uploads, session)

        plain = zero_stats(6, 4)
        for stats in all_stats:
            plain = merge_stats(plain, stats)

        bound = clients * 2.0 ** -24
        np.testing.assert_array_equal(decoded.class_counts, plain.class_counts)
        assert np.max(np.abs(decoded.class_sums - plain.class_sums)) <= bound
        assert np.max(np.abs(decoded.second_moment - plain.second_moment)) <= bound

    def test_counts_scope_real_fields_are_exact(self):
        clients = 4
        session = create_session(range(clients), SCOPE_COUNTS_ONLY, seed=8)
        all_stats = [random_stats(3, 2, seed=60 + i) for i in range(clients)]
        uploads = [encode_masked(s, session, i) for i, s in enumerate(all_stats)]
        decoded = aggregate_masked(uploads, session)
        plain = zero_stats(3, 2)
        for stats in all_stats:
            plain = merge_stats(plain, stats)
        np.testing.assert_array_equal(decoded.class_counts, plain.class_counts)
        np.testing.assert_array_equal(decoded.class_sums, plain.class_sums)
        np.testing.assert_array_equal(decoded.second_moment, plain.second_moment)

    def test_missing_participant(self):
        session = create_session([0, 1, 2], SCOPE_COUNTS_ONLY, seed=9)
        uploads = [encode_masked(zero_stats(2, 2), session, i) for i in (0, 1)]
        with pytest.raises(ProtocolError):
            aggregate_masked(uploads, session)

    def test_duplicate_participant(self):
        session = create_session([0, 1], SCOPE_COUNTS_ONLY, seed=10)
        upload = encode_masked(zero_stats(2, 2), session, 0)
        with pytest.raises(ProtocolError):
            aggregate_masked([upload, upload], session)


class TestEndToEnd:
    @pytest.mark.parametrize("mode", ["counts", "full"])
    def test_predictions_identical_with_and_without_masking(self, mode):
        # oracle: the plaintext pipeline on identical inputs
        train, test = make_train_test(SyntheticSpec(5, 16, 160, seed=31))
        base = SimulationConfig(clients=8, alpha=0.1, seed=2, secure="off")
        secure = SimulationConfig(clients=8, alpha=0.1, seed=2, secure=mode)
        plain_result = run_simulation(train, test, base)
        secure_result = run_simulation(train, test, secure)
        from fedcgs import predict

        np.testing.assert_array_equal(
            predict(plain_result.head, test.features),
            predict(secure_result.head, test.features),
        )
        assert plain_result.report.accuracy == secure_result.report.accuracy
