import logging
from pathlib import Path
import numpy as np
import pandas as pd
from physarum_workbench import metrics, watts_strogatz

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
    n = 500
    k = 6
    betas = np.logspace(-4, 0, 13)
    seeds = range(20)

    out_path = Path(__file__).parent.resolve() / 'data'
    out_path.mkdir(parents=True, exist_ok=True)

    lattice = metrics(watts_strogatz(n, k, 0.0))
    logger.info(f"Ring lattice: C(0)={lattice.clustering_coefficient:.4f}, L(0)={lattice.average_path_length:.2f}")

    rows = []
    for beta in betas:
        samples = [metrics(watts_strogatz(n, k, beta, seed)) for seed in seeds]
        c = np.mean([m.clustering_coefficient for m in samples])
        l = np.mean([m.average_path_length for m in samples])
        rows.append({'beta': beta,
                     'clustering_ratio': c / lattice.clustering_coefficient,
                     'path_length_ratio': l / lattice.average_path_length})
        logger.info(f"beta={beta:.4g}: C/C0={rows[-1]['clustering_ratio']:.3f}, "
                    f"L/L0={rows[-1]['path_length_ratio']:.3f}")

    pd.DataFrame(rows).to_csv(out_path / "small_world_sweep.csv", index=False)
    logger.info("Data saved to small_world_sweep.csv")

if __name__ == "__main__":
    main()
