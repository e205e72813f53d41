"""Secure aggregation by pairwise additive masking over fixed-point integers.

Simulation-grade: it reproduces the structure and exactness properties of a
pairwise-mask secure sum (the server only ever sees masked uploads whose sum
equals the sum of the plain encodings), but the pairwise seeds are handed out
by an in-process trusted setup. There is no key agreement, no dropout
recovery, and no malicious-adversary hardening.

Each unordered client pair shares one 64-bit seed; both members expand it
with a counter-based generator into an identical mask stream. The client with
the smaller id adds the stream, the larger one subtracts it, so masks cancel
exactly in the modular sum. Counts are encoded with zero fractional bits and
therefore aggregate with zero error; real-valued statistics are encoded with
``fractional_bits`` of precision, so the decoded sum differs from the plain
sum by at most M * 2**-fractional_bits per entry.
"""

from dataclasses import dataclass, field

import numpy as np

from .client_stats import ClientStatistics, merge_stats, zero_stats

SCOPE_COUNTS_ONLY = "counts_only"
SCOPE_FULL_STATISTICS = "full_statistics"

_U64 = np.uint64
_MOD = 1 << 64


class ProtocolError(RuntimeError):
    """Upload set does not match the session's participants."""


@dataclass(frozen=True)
class FixedPointCodec:
    """Two's-complement fixed-point encoding of doubles into u64 (mod 2**64)."""

    fractional_bits: int = 24

    def __post_init__(self):
        if not 0 < self.fractional_bits < 52:
            raise ValueError("fractional_bits must lie in (0, 52)")

    def encode(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        limit = float(1 << (63 - self.fractional_bits))
        if not np.all(np.isfinite(values)):
            raise OverflowError("cannot encode non-finite values")
        if np.any(np.abs(values) >= limit):
            raise OverflowError(
                f"value magnitude >= 2**{63 - self.fractional_bits} "
                f"overflows the fixed-point range"
            )
        scaled = np.round(values * float(1 << self.fractional_bits)).astype(np.int64)
        return scaled.view(_U64).copy()

    def decode(self, words: np.ndarray) -> np.ndarray:
        signed = np.asarray(words, dtype=_U64).view(np.int64)
        return signed.astype(np.float64) / float(1 << self.fractional_bits)

    def decode_counts(self, words: np.ndarray) -> np.ndarray:
        """Counts are non-negative integers encoded with zero fractional bits."""
        return np.asarray(words, dtype=_U64).astype(np.int64)


@dataclass(frozen=True)
class SecureSession:
    """Shared state of one secure-sum round.

    ``pairwise_seeds`` maps each unordered id pair (i, k), i < k, to the
    64-bit seed both members use to derive the pair's mask stream.
    """

    participant_ids: tuple[int, ...]
    pairwise_seeds: dict[tuple[int, int], int] = field(repr=False)
    scope: str = SCOPE_COUNTS_ONLY
    codec: FixedPointCodec = FixedPointCodec()

    def __post_init__(self):
        if self.scope not in (SCOPE_COUNTS_ONLY, SCOPE_FULL_STATISTICS):
            raise ValueError(f"unknown scope {self.scope!r}")
        ids = self.participant_ids
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate participant ids")
        expected = {(i, k) for i in ids for k in ids if i < k}
        if set(self.pairwise_seeds) != expected:
            raise ValueError("pairwise_seeds must hold exactly one seed per unordered pair")


def create_session(
    participant_ids,
    scope: str = SCOPE_COUNTS_ONLY,
    seed: int = 0,
    fractional_bits: int = 24,
) -> SecureSession:
    """Trusted in-process setup: derive one seed per unordered client pair."""
    ids = tuple(sorted(int(i) for i in participant_ids))
    rng = np.random.default_rng(seed)
    seeds = {
        (i, k): int(rng.integers(0, np.iinfo(np.uint64).max, dtype=np.uint64, endpoint=True))
        for i in ids
        for k in ids
        if i < k
    }
    return SecureSession(ids, seeds, scope, FixedPointCodec(fractional_bits))


@dataclass
class MaskedUpload:
    """One client's contribution to the secure sum.

    ``payload`` holds the masked fixed-point words for the fields in scope;
    ``dim``/``num_classes`` are public layout metadata. Under counts_only
    scope the real-valued statistics ride alongside in plaintext (only the
    label counts are hidden from the server).
    """

    client_id: int
    payload: np.ndarray  # (L,) uint64
    dim: int
    num_classes: int
    plain_class_sums: np.ndarray | None = None
    plain_second_moment: np.ndarray | None = None


def _mask_stream(seed: int, length: int) -> np.ndarray:
    """Counter-based PRNG stream shared by both members of a pair."""
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.integers(0, np.iinfo(np.uint64).max, size=length, dtype=_U64, endpoint=True)


def _plain_words(stats: ClientStatistics, session: SecureSession) -> np.ndarray:
    counts = stats.class_counts.astype(np.int64).view(_U64)
    if session.scope == SCOPE_COUNTS_ONLY:
        return counts.copy()
    reals = np.concatenate([stats.class_sums.ravel(), stats.second_moment.ravel()])
    return np.concatenate([counts, session.codec.encode(reals)])


def encode_masked(stats: ClientStatistics, session: SecureSession, client_id: int) -> MaskedUpload:
    """Fixed-point encode the in-scope fields and apply pairwise masks."""
    if client_id not in session.participant_ids:
        raise ProtocolError(f"client {client_id} is not part of the session")
    words = _plain_words(stats, session)
    masked = words.copy()
    for other in session.participant_ids:
        if other == client_id:
            continue
        pair = (min(client_id, other), max(client_id, other))
        stream = _mask_stream(session.pairwise_seeds[pair], len(words))
        if client_id < other:
            masked += stream  # uint64 arithmetic wraps mod 2**64
        else:
            masked -= stream
    upload = MaskedUpload(client_id, masked, stats.dim, stats.num_classes)
    if session.scope == SCOPE_COUNTS_ONLY:
        upload.plain_class_sums = stats.class_sums.copy()
        upload.plain_second_moment = stats.second_moment.copy()
    return upload


def aggregate_masked(uploads: list[MaskedUpload], session: SecureSession) -> ClientStatistics:
    """Sum the uploads; masks cancel and the plain-encoding sum is decoded.

    Counts come back exactly; real-valued entries carry fixed-point
    quantization of at most ``len(uploads) * 2**-fractional_bits`` each.
    """
    got = sorted(u.client_id for u in uploads)
    if got != list(session.participant_ids):
        raise ProtocolError(
            f"uploads {got} do not match session participants {list(session.participant_ids)}"
        )
    lengths = {len(u.payload) for u in uploads}
    shapes = {(u.dim, u.num_classes) for u in uploads}
    if len(lengths) != 1 or len(shapes) != 1:
        raise ProtocolError(
            f"uploads disagree on layout: lengths {sorted(lengths)}, shapes {sorted(shapes)}"
        )
    dim, num_classes = shapes.pop()

    uploads = sorted(uploads, key=lambda u: u.client_id)
    total = np.zeros(lengths.pop(), dtype=_U64)
    for upload in uploads:
        total += np.asarray(upload.payload, dtype=_U64)

    if session.scope == SCOPE_COUNTS_ONLY:
        if len(total) != num_classes:
            raise ProtocolError("masked payload length does not match the counts block")
        counts = session.codec.decode_counts(total)
        summed = zero_stats(dim, num_classes)
        for upload in uploads:
            if upload.plain_class_sums is None or upload.plain_second_moment is None:
                raise ProtocolError("counts_only uploads must carry plaintext statistics")
            summed = merge_stats(
                summed,
                ClientStatistics(
                    upload.plain_class_sums,
                    upload.plain_second_moment,
                    np.zeros(num_classes, dtype=np.int64),
                    dim,
                    num_classes,
                ),
            )
        return ClientStatistics(
            summed.class_sums, summed.second_moment, counts, dim, num_classes
        )

    if len(total) != num_classes + num_classes * dim + dim * dim:
        raise ProtocolError("masked payload length does not match the declared layout")
    counts = session.codec.decode_counts(total[:num_classes])
    reals = session.codec.decode(total[num_classes:])
    sums = reals[: num_classes * dim].reshape(num_classes, dim)
    moment = reals[num_classes * dim :].reshape(dim, dim)
    return ClientStatistics(sums, moment, counts, dim, num_classes)
