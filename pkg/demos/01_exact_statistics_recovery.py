"""How the server recovers exact global statistics from one upload per client.

Each client reduces its local features to three exactly mergeable pieces:
per-class feature sums, one raw second-moment matrix, and per-class counts.
Because addition is all the server ever does with them, it does not matter
how the data was split -- the reconstructed prototypes, mean, and covariance
match a centralized two-pass computation to ~1e-13 even under extreme label
skew.
"""

import numpy as np

from fedcgs import (
    PartitionSpec,
    SyntheticSpec,
    aggregate_plain,
    centralized_reference,
    compute_client_stats,
    deviation,
    generate_synthetic,
    partition,
)

data = generate_synthetic(SyntheticSpec(num_classes=5, dim=32, samples_per_class=400, seed=0))
reference = centralized_reference(data)

print(f"dataset: {data.n} rows, d={data.dim}, C={data.num_classes}")
print(f"{'clients':>8} {'alpha':>6} {'|mean gap|':>12} {'|cov gap|_F':>12} {'empty':>6}")

for clients in (1, 5, 10, 50):
    for alpha in (0.05, 0.1, 0.5):
        parts = partition(data, PartitionSpec(clients, "dirichlet", alpha=alpha, seed=3))
        reconstructed = aggregate_plain([compute_client_stats(p) for p in parts])
        delta_mu, delta_sigma = deviation(reconstructed, reference)
        empty = sum(1 for p in parts if p.n == 0)
        print(f"{clients:>8} {alpha:>6} {delta_mu:>12.2e} {delta_sigma:>12.2e} {empty:>6}")

# The class counts are integers, so they agree exactly, not just closely.
parts = partition(data, PartitionSpec(50, "dirichlet", alpha=0.05, seed=3))
reconstructed = aggregate_plain([compute_client_stats(p) for p in parts])
assert np.array_equal(reconstructed.class_counts, reference.class_counts)
print("\nclass counts recovered exactly:", reconstructed.class_counts)
