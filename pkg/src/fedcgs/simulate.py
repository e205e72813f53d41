"""End-to-end one-shot run: partition, local statistics, aggregate, classify.

This is the single round the protocol consists of. Clients never share raw
features; the server reconstructs global statistics from the (optionally
masked) sum of uploads and configures the classifier head without training.
"""

import time
from dataclasses import asdict, dataclass

from .aggregate import GlobalStatistics, aggregate, aggregate_plain, centralized_reference
from .client_stats import compute_client_stats, serialize_stats
from .data import LabeledFeatureSet
from .expand import ExpansionConfig, expand
from .head import LinearHead, build_head
from .metrics import RunReport, count_upload, deviation, evaluate
from .partition import PartitionSpec, partition
from .secure_agg import (
    SCOPE_COUNTS_ONLY,
    SCOPE_FULL_STATISTICS,
    aggregate_masked,
    create_session,
    encode_masked,
)

SECURE_MODES = ("off", "counts", "full")


@dataclass(frozen=True)
class SimulationConfig:
    """Knobs of one simulated run."""

    clients: int = 10
    scheme: str = "dirichlet"
    alpha: float | None = 0.5
    seed: int = 0
    secure: str = "off"
    expand_dim: int | None = None
    expand_seed: int = 0
    expand_activation: str = "relu"
    ridge: float = 1e-6

    def __post_init__(self):
        if self.secure not in SECURE_MODES:
            raise ValueError(f"secure must be one of {SECURE_MODES}")


@dataclass
class SimulationResult:
    report: RunReport
    head: LinearHead
    global_stats: GlobalStatistics


def run_simulation(
    train: LabeledFeatureSet, test: LabeledFeatureSet, cfg: SimulationConfig
) -> SimulationResult:
    started = time.perf_counter()

    if cfg.expand_dim is not None:
        expansion = ExpansionConfig(
            train.dim, cfg.expand_dim, cfg.expand_seed, cfg.expand_activation
        )
        train = expand(train, expansion)
        test = expand(test, expansion)

    spec = PartitionSpec(cfg.clients, cfg.scheme, cfg.alpha, cfg.seed)
    clients = partition(train, spec)
    stats = [compute_client_stats(c) for c in clients]

    if cfg.secure == "off":
        global_stats = aggregate_plain(stats)
    else:
        scope = SCOPE_COUNTS_ONLY if cfg.secure == "counts" else SCOPE_FULL_STATISTICS
        session = create_session(range(len(stats)), scope, seed=cfg.seed)
        uploads = [encode_masked(s, session, i) for i, s in enumerate(stats)]
        global_stats = aggregate(aggregate_masked(uploads, session))

    head = build_head(global_stats, cfg.ridge)
    accuracy = evaluate(head, test)
    delta_mu, delta_sigma = deviation(global_stats, centralized_reference(train))

    params = count_upload(train.dim, train.num_classes)
    report = RunReport(
        accuracy=accuracy,
        delta_mu=delta_mu,
        delta_sigma=delta_sigma,
        params_per_client=params,
        params_total=params * cfg.clients,
        bytes_per_client=len(serialize_stats(stats[0])),
        elapsed_seconds=time.perf_counter() - started,
        config=asdict(cfg),
    )
    return SimulationResult(report, head, global_stats)
