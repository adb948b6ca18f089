import json
import logging
import sys
from pathlib import Path
from physarum_workbench.cli import run_actin
from physarum_workbench.manifest import RunRecorder

# Configure logging
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# Prevent duplicate handlers and cluttered terminal output
if not logger.hasHandlers():
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
    logger.addHandler(handler)
    logger.propagate = False

def main():
    # Parameters
    seeds = range(20)
    config = {
        'rule': 'c2', 'boundary': 'fixed', 'n': 500, 'steps': 5000,
        'p_excited': 0.25, 'p_refractory': 0.25,
        'chain': 'both', 'palette': 'standard', 'window': 128,
    }

    out_path = Path(__file__).parent.resolve() / 'data' / 'c2_soak'
    logger.info(f"Starting C2 soak over {len(seeds)} seeds...")

    pooled = {'mobile': 0, 'generator': 0, 'stationary': 0}
    for seed in seeds:
        run_dir = out_path / f"seed_{seed}"
        with RunRecorder(run_dir, 'actin', config, seed):
            run_actin(config, seed, run_dir)

        for report in sorted(run_dir.glob("localizations_*.json")):
            with open(report) as f:
                for record in json.load(f):
                    pooled[record['kind']] += 1
        logger.info(f"seed {seed}: pooled so far {pooled}")

    logger.info(f"Runs and manifests saved to {out_path}")
    if not (pooled['mobile'] and pooled['generator']):
        logger.error(f"Soak did not find both mobile localizations and generators: {pooled}")
        sys.exit(1)
    logger.info(f"✅ Found mobile localizations and generators: {pooled}")

if __name__ == "__main__":
    main()
