"""Rescuing a linearly inseparable problem with a shared random projection.

A checkerboard of four blobs -- class 0 at (+1,+1) and (-1,-1), class 1 at
(+1,-1) and (-1,+1) -- defeats any linear rule in the raw 2-D space: both
classes share mean zero. Pushing every feature through the same seeded
random projection plus ReLU before computing statistics makes the classes
linearly separable in the lifted space. The price is a bigger upload: the
payload grows from (C+d)d + C scalars to (C+d')d' + C.
"""

import numpy as np

from fedcgs import SimulationConfig, LabeledFeatureSet, count_upload, run_simulation


def checkerboard(per_blob: int, noise: float, seed: int) -> LabeledFeatureSet:
    rng = np.random.default_rng(seed)
    centers = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)
    labels = np.array([0, 0, 1, 1])
    feats = np.concatenate(
        [c + noise * rng.standard_normal((per_blob, 2)) for c in centers]
    )
    return LabeledFeatureSet(feats, np.repeat(labels, per_blob), num_classes=2, dim=2)


train = checkerboard(per_blob=400, noise=0.35, seed=10)
test = checkerboard(per_blob=400, noise=0.35, seed=11)

flat = run_simulation(train, test, SimulationConfig(clients=5, alpha=0.5, seed=12))
print(f"raw 2-D features  : accuracy {flat.report.accuracy:.3f} "
      f"({flat.report.params_per_client} scalars/client)")

for out_dim in (16, 64, 256):
    lifted = run_simulation(
        train,
        test,
        SimulationConfig(clients=5, alpha=0.5, seed=12, expand_dim=out_dim, expand_seed=13),
    )
    print(f"expanded to d'={out_dim:>3}: accuracy {lifted.report.accuracy:.3f} "
          f"({lifted.report.params_per_client} scalars/client)")

assert count_upload(256, 2) == (2 + 256) * 256 + 2
