"""Proving workflow commands: init-toy, setup, commit-model, prove, verify, aggregate."""

import argparse
from pathlib import Path
from typing import List

from models.cnn import micro_model, random_inputs, toy_model
from models.schemas import SCHEMA_VERSION, DataFile, RoleConfig
from services import artifacts
from services.pipeline import (
    aggregate_bundles,
    commit_model,
    prove_bundle,
    setup,
    verify_testers,
)
from utils.config import Settings, make_rng
from utils.errors import ArtifactError, ConfigError
from utils.logger import setup_logger

logger = setup_logger()

EXIT_OK = 0
EXIT_REJECT = 1


def _role(role: str, **paths) -> RoleConfig:
    """
    Check that a command only touches the files its role may hold.

    Raises:
        ConfigError: If the role would read material it must not see
    """
    try:
        return RoleConfig(role=role, **paths)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def cmd_init_toy(args: argparse.Namespace, settings: Settings) -> int:
    """Write the shipped toy (or micro) model and one data file per tester."""
    out = Path(args.out)
    seed = settings.seed or 0
    model = micro_model(seed) if args.micro else toy_model(seed)
    artifacts.save_model(out / "model.json", model)
    for t in range(args.testers):
        inputs, labels = random_inputs(model, args.batch, seed=seed + 1 + t)
        data = DataFile(
            version=SCHEMA_VERSION,
            tester=f"tester-{t}",
            inputs=inputs.tolist(),
            labels=labels,
        )
        artifacts.write_json(out / "data" / f"tester-{t}.json", data)
    logger.info(f"wrote {model.name} model and {args.testers} data files to {out}")
    return EXIT_OK


def cmd_setup(args: argparse.Namespace, settings: Settings) -> int:
    _role("developer", keys_dir=args.out, model_path=args.model)
    model = artifacts.load_model(args.model)
    keys = setup(model, args.batch, args.testers, make_rng(settings.seed), settings)
    artifacts.write_keys(args.out, keys)
    print(f"architecture {keys.arch.hash_hex()}")
    return EXIT_OK


def cmd_commit_model(args: argparse.Namespace, settings: Settings) -> int:
    _role("developer", keys_dir=args.keys, commitments_dir=args.out, model_path=args.model)
    keys = artifacts.read_keys(args.keys)
    model = artifacts.load_model(args.model)
    commitments, openings = commit_model(keys, model, make_rng(settings.seed))
    artifacts.write_commitments(args.out, commitments, openings)
    return EXIT_OK


def cmd_prove(args: argparse.Namespace, settings: Settings) -> int:
    _role("provider", keys_dir=args.keys, commitments_dir=args.commitments, model_path=args.model,
          data_path=args.data)
    keys = artifacts.read_keys(args.keys)
    arch_hash = keys.arch.hash_hex()
    commitments = artifacts.read_commitments(args.commitments, arch_hash)
    openings = artifacts.read_openings(args.commitments)
    model = artifacts.load_model(args.model)
    data = artifacts.load_data(args.data)
    bundle = prove_bundle(keys, model, commitments, openings, data, make_rng(settings.seed))
    artifacts.write_bundle(args.out, bundle)
    st = bundle.statement
    print(f"{st.tester}: {st.correct_count}/{st.batch_size} correct (accuracy {st.accuracy:.3f})")
    return EXIT_OK


def _read_bundles(paths: List[str], arch_hash: str):
    if not paths:
        raise ConfigError("at least one --bundle is required")
    return [artifacts.read_bundle(p, arch_hash) for p in paths]


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    """
    Verify one or more bundles; with --aggregate the gadget proofs are
    checked through the aggregated proofs.

    A bundle directory that fails its manifest is a reject, not a usage
    error: the verifier saw the material and it did not hold up.
    """
    _role("verifier", keys_dir=args.keys, commitments_dir=args.commitments, bundle_dirs=args.bundle or [])
    keys = artifacts.read_keys(args.keys)
    arch_hash = keys.arch.hash_hex()
    commitments = artifacts.read_commitments(args.commitments, arch_hash)
    try:
        bundles = _read_bundles(args.bundle, arch_hash)
        aggregate = None
        if args.aggregate:
            index, aggregate = artifacts.read_aggregate(args.aggregate, arch_hash)
            if index.testers != [b.tester for b in bundles]:
                raise ArtifactError("aggregate was built over different testers or in another order")
    except ArtifactError as e:
        logger.info(f"rejected while reading artifacts: {e}")
        print(f"REJECT  artifacts  ({e})")
        return EXIT_REJECT

    report = verify_testers(keys, commitments, bundles, aggregate, fail_fast=args.fail_fast)
    for line in report.lines():
        print(line)
    for b in bundles:
        st = b.statement
        print(f"{st.tester}: {st.correct_count}/{st.batch_size} correct (accuracy {st.accuracy:.3f})")
    print("ACCEPT" if report.accepted else "REJECT")
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_aggregate(args: argparse.Namespace, settings: Settings) -> int:
    keys = artifacts.read_keys(args.keys)
    arch_hash = keys.arch.hash_hex()
    bundles = _read_bundles(args.bundle, arch_hash)
    proofs = aggregate_bundles(keys, bundles)
    artifacts.write_aggregate(args.out, arch_hash, [b.tester for b in bundles], proofs)
    return EXIT_OK


def register(sub: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    """Add the workflow commands to the CLI."""
    p = sub.add_parser("init-toy", parents=[common], help="write the toy model and tester data")
    p.add_argument("--out", required=True)
    p.add_argument("--micro", action="store_true", help="the 3x3-input model used by the tests")
    p.add_argument("--testers", type=int, default=3)
    p.add_argument("--batch", type=int, default=4)
    p.set_defaults(handler=cmd_init_toy)

    p = sub.add_parser("setup", parents=[common], help="generate every key for a model shape")
    p.add_argument("--model", required=True)
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--testers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_setup)

    p = sub.add_parser("commit-model", parents=[common], help="commit to the model weights")
    p.add_argument("--model", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_commit_model)

    p = sub.add_parser("prove", parents=[common], help="prove one tester batch")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--commitments", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_prove)

    p = sub.add_parser("verify", parents=[common], help="verify bundles")
    p.add_argument("--keys", required=True)
    p.add_argument("--commitments", required=True)
    p.add_argument("--bundle", action="append")
    p.add_argument("--aggregate")
    p.add_argument("--fail-fast", action="store_true")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("aggregate", parents=[common], help="aggregate gadget proofs over testers")
    p.add_argument("--keys", required=True)
    p.add_argument("--bundle", action="append")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_aggregate)
