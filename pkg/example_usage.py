"""
Example usage script for the zkcnn library.

This script demonstrates how to:
1. Generate keys and commit to a micro model
2. Prove one tester batch
3. Verify the bundle, then a tampered copy
4. Save the bundle to a directory
"""

import random
from dataclasses import replace
from pathlib import Path

from models.cnn import micro_model, random_inputs
from models.schemas import SCHEMA_VERSION, DataFile
from services import artifacts
from services.pipeline import commit_model, prove_bundle, setup, verify_bundle
from utils.config import Settings
from utils.errors import ZkCnnError

BATCH = 2


def main():
    """Main function demonstrating library usage."""

    print("=" * 60)
    print("zkcnn - Example Usage")
    print("=" * 60)

    settings = Settings(log_level="WARNING")
    rng = random.Random(7)
    model = micro_model(0)

    # Step 1: Keys and model commitments
    print("\n1. Generating keys and committing to the model...")
    try:
        keys = setup(model, BATCH, 1, rng, settings)
        commitments, openings = commit_model(keys, model, rng)
    except ZkCnnError as e:
        print(f"✗ Setup failed: {e}")
        return
    print(f"✓ Architecture {keys.arch.hash_hex()[:16]}...")
    print(f"  Relations: {', '.join(list(keys.plan.qmp_dims) + keys.plan.cap_relations)}")

    # Step 2: Prove one batch
    print("\n2. Proving a tester batch...")
    inputs, labels = random_inputs(model, BATCH, seed=1)
    data = DataFile(version=SCHEMA_VERSION, tester="demo", inputs=inputs.tolist(), labels=labels)
    try:
        bundle = prove_bundle(keys, model, commitments, openings, data, rng)
    except ZkCnnError as e:
        print(f"✗ Proving failed: {e}")
        return
    st = bundle.statement
    print(f"✓ Predictions {st.predictions} for labels {st.labels}")
    print(f"  {st.correct_count}/{st.batch_size} correct, {len(bundle.links)} links")

    # Step 3: Verify, then tamper with the claimed predictions
    print("\n3. Verifying...")
    report = verify_bundle(keys, commitments, bundle)
    print(f"✓ Honest bundle: {'ACCEPT' if report.accepted else 'REJECT'}")

    flipped = [1 - p for p in st.predictions]
    forged = replace(bundle, statement=st.model_copy(update={"predictions": flipped}))
    report = verify_bundle(keys, commitments, forged)
    print(f"  Flipped predictions: {'ACCEPT' if report.accepted else 'REJECT'}")
    for name in report.failures:
        print(f"    {name}: {report.reasons[name]}")

    # Step 4: Save the bundle
    out = Path("example_bundle")
    print(f"\n4. Saving bundle to {out}...")
    artifacts.write_bundle(out, bundle)
    print(f"✓ Bundle saved: {out.absolute()}")

    print("\n" + "=" * 60)
    print("Example complete!")
    print("=" * 60)


if __name__ == "__main__":
    main()
