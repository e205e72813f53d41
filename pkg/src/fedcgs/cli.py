"""Command-line front end: simulate, personalize, synth."""

import argparse
import json
import sys

import numpy as np

from .aggregate import load_global_statistics, save_global_statistics
from .data import SyntheticSpec, generate_synthetic, read_feature_file, write_feature_file
from .head import save_head
from .metrics import evaluate
from .personalize import PersonalizeConfig, init_model, local_train, model_logits
from .simulate import SECURE_MODES, SimulationConfig, run_simulation


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run one one-shot round and report metrics")
    p.add_argument("--train", help="training feature file (FCGS format)")
    p.add_argument("--test", help="test feature file (FCGS format)")
    p.add_argument("--synthetic", action="store_true", help="generate data instead of reading files")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--clients", type=int, default=10)
    p.add_argument("--scheme", choices=("dirichlet", "uniform"), default="dirichlet")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--secure-agg", choices=SECURE_MODES, default="off")
    p.add_argument("--expand-dim", type=int, default=None)
    p.add_argument("--expand-seed", type=int, default=0)
    p.add_argument("--expand-activation", choices=("relu", "tanh", "none"), default="relu")
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--save-stats", help="save aggregated global statistics (JSON + .bin)")
    p.add_argument("--save-head", help="save the classifier head (JSON + .bin)")
    return p


def _add_personalize(sub):
    p = sub.add_parser("personalize", help="train local models against downloaded prototypes")
    p.add_argument("--stats", required=True, help="global statistics file from simulate --save-stats")
    p.add_argument("--client-data", required=True, nargs="+", help="per-client feature files")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--momentum", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--out", help="write per-client JSON metrics here (default: stdout)")
    return p


def _add_synth(sub):
    p = sub.add_parser("synth", help="write a synthetic feature file")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--mean-scale", type=float, default=3.0)
    p.add_argument("--cov-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    return p


def _cmd_simulate(args) -> int:
    if args.synthetic:
        spec = SyntheticSpec(args.classes, args.dim, 2 * args.per_class, seed=args.data_seed)
        full = generate_synthetic(spec)
        split = np.arange(full.n) % 2 == 0  # even rows train, odd rows test
        train = full.take(np.flatnonzero(split))
        test = full.take(np.flatnonzero(~split))
    elif args.train and args.test:
        train = read_feature_file(args.train)
        test = read_feature_file(args.test)
    else:
        print("simulate needs either --synthetic or both --train and --test", file=sys.stderr)
        return 2

    cfg = SimulationConfig(
        clients=args.clients,
        scheme=args.scheme,
        alpha=args.alpha,
        seed=args.seed,
        secure=args.secure_agg,
        expand_dim=args.expand_dim,
        expand_seed=args.expand_seed,
        expand_activation=args.expand_activation,
        ridge=args.ridge,
    )
    result = run_simulation(train, test, cfg)
    if args.save_stats:
        save_global_statistics(result.global_stats, args.save_stats)
    if args.save_head:
        save_head(result.head, args.save_head)
    payload = json.dumps(result.report.to_dict(), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def _cmd_personalize(args) -> int:
    stats = load_global_statistics(args.stats)
    cfg = PersonalizeConfig(
        lam=args.lam,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        momentum=args.momentum,
    )
    clients = []
    for i, path in enumerate(args.client_data):
        data = read_feature_file(path)
        if data.dim != stats.dim:
            print(f"{path}: dim {data.dim} does not match statistics dim {stats.dim}",
                  file=sys.stderr)
            return 2
        model = init_model(data.dim, args.hidden, stats.dim, data.num_classes, seed=cfg.seed + i)
        result = local_train(model, data, stats.prototypes, cfg)
        preds = np.argmax(model_logits(result.model, data.features), axis=1)
        clients.append(
            {
                "path": str(path),
                "train_accuracy": float(np.mean(preds == data.labels)),
                "alignment": result.epoch_alignment,
                "losses": result.epoch_losses,
            }
        )
    payload = json.dumps({"lambda": cfg.lam, "clients": clients}, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        args.classes, args.dim, args.per_class, args.mean_scale, args.cov_scale, args.seed
    )
    write_feature_file(generate_synthetic(spec), args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedcgs",
        description="One-shot federated learning from exactly mergeable feature statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_personalize(sub)
    _add_synth(sub)
    args = parser.parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "personalize":
        return _cmd_personalize(args)
    return _cmd_synth(args)


if __name__ == "__main__":
    sys.exit(main())
