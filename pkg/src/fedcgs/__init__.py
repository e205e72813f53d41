"""One-shot federated learning from exactly mergeable feature statistics.

Clients reduce local features to per-class sums, one second-moment matrix,
and label counts; a pairwise-masking secure sum combines the uploads in a
single round; the server reconstructs exact global prototypes, mean, and
covariance and configures a training-free linear classifier head. Global
prototypes double as a feature-alignment regularizer for personalized local
training.
"""

from .aggregate import (
    DegenerateCovarianceError,
    GlobalStatistics,
    aggregate,
    aggregate_plain,
    centralized_reference,
    load_global_statistics,
    save_global_statistics,
)
from .client_stats import (
    ClientStatistics,
    compute_client_stats,
    deserialize_stats,
    merge_stats,
    serialize_stats,
    zero_stats,
)
from .data import (
    FormatError,
    IntegrityError,
    IoError,
    LabeledFeatureSet,
    SyntheticSpec,
    TruncationError,
    generate_synthetic,
    read_feature_file,
    synthetic_params,
    write_feature_file,
)
from .expand import ExpansionConfig, apply_projection, expand, projection_matrix
from .head import (
    LinearHead,
    SingularCovarianceError,
    build_head,
    head_logits,
    head_probabilities,
    load_head,
    predict,
    save_head,
)
from .linalg import NotPositiveDefiniteError, cholesky_solve, outer_accumulate
from .metrics import RunReport, count_upload, deviation, evaluate
from .partition import PartitionError, PartitionSpec, partition, partition_indices
from .personalize import (
    MlpModel,
    PersonalizeConfig,
    TrainingDivergedError,
    TrainResult,
    class_feature_alignment,
    cross_entropy_and_grads,
    init_model,
    local_train,
    model_features,
    model_logits,
    regularizer,
    regularizer_and_grads,
)
from .secure_agg import (
    SCOPE_COUNTS_ONLY,
    SCOPE_FULL_STATISTICS,
    FixedPointCodec,
    MaskedUpload,
    ProtocolError,
    SecureSession,
    aggregate_masked,
    create_session,
    encode_masked,
)
from .simulate import SimulationConfig, SimulationResult, run_simulation

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
