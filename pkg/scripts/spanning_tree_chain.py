import json
import logging
import sys
from pathlib import Path
import pandas as pd
from physarum_workbench import SwarmConfig
from physarum_workbench.cli import run_swarm
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

def feedback_holds(trace, events, horizon):
    """Field mass drops below its value at every suppression event within `horizon` steps."""
    mass = trace.set_index('t')['field_mass']
    for t in events.loc[events['event'] == 'suppressed', 't']:
        after = mass.loc[t + 1:t + horizon]
        if after.empty or not after.min() < mass.loc[t]:
            return False
    return True

def bottom_to_top(events):
    """Nodes are suppressed in index order and never released."""
    if (events['event'] == 'released').any():
        return False
    order = events.loc[events['event'] == 'suppressed'].sort_values('t')['node'].tolist()
    return order == sorted(order)

def main():
    # Parameters
    config_file = Path(__file__).parent.parent.resolve() / 'configs' / 'chain_5node.cfg'
    seeds = range(10)
    steps = 20000
    snapshot_every = 500
    feedback_horizon = 50
    min_successes = 8

    out_path = Path(__file__).parent.resolve() / 'data' / 'spanning_tree'
    swarm = SwarmConfig.from_file(config_file)
    config = {'swarm': swarm.to_dict(), 'steps': steps, 'snapshot_every': snapshot_every}

    logger.info(f"Starting spanning-tree runs on {config_file.name} for {len(seeds)} seeds...")
    rows = []
    for seed in seeds:
        run_dir = out_path / f"seed_{seed}"
        with RunRecorder(run_dir, 'swarm', config, seed):
            run_swarm(config, seed, run_dir)

        with open(run_dir / "network_report.json") as f:
            report = json.load(f)
        trace = pd.read_csv(run_dir / "trace.csv")
        events = pd.read_csv(run_dir / "events.csv")
        all_suppressed = int(trace['nodes_suppressed'].iloc[-1]) == len(swarm.nodes)
        tree = report['all_connected'] and report['edge_count'] == len(swarm.nodes) - 1 and report['is_tree']
        rows.append({'seed': seed, 'all_suppressed': all_suppressed, 'tree': tree,
                     'in_order': bottom_to_top(events),
                     'feedback': feedback_holds(trace, events, feedback_horizon)})
        logger.info(f"seed {seed}: {rows[-1]}")

    summary = pd.DataFrame(rows)
    summary.to_csv(out_path / "summary.csv", index=False)
    successes = int((summary['all_suppressed'] & summary['tree'] & summary['in_order']).sum())
    feedback = int(summary['feedback'].sum())
    logger.info(f"{successes}/{len(seeds)} seeds built a spanning tree over all nodes in order; "
                f"feedback held in {feedback}/{len(seeds)}")
    if successes < min_successes or feedback < len(seeds):
        logger.error(f"Need {min_successes} spanning trees and feedback in every seed")
        sys.exit(1)
    logger.info(f"✅ Spanning-tree runs passed; summary saved to {out_path / 'summary.csv'}")

if __name__ == "__main__":
    main()
