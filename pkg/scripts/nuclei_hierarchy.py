import logging
from pathlib import Path
import matplotlib.pyplot as plt
import pandas as pd
from physarum_workbench import hierarchy, load_points, metrics
from physarum_workbench.proximity import plot_graph

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
    points_file = Path(__file__).parent.parent.resolve() / 'data' / 'example_nuclei.csv'
    families = ['delaunay', 'gabriel', 'rng', 'mst']

    out_path = Path(__file__).parent.resolve() / 'data'
    out_path.mkdir(parents=True, exist_ok=True)

    logger.info(f"Building proximity graphs over {points_file.name}...")
    points = load_points(points_file)
    report = hierarchy(points)

    rows = []
    fig, axes = plt.subplots(1, len(families), figsize=(4 * len(families), 4))
    for ax, family in zip(axes, families):
        graph = report.graphs[family]
        plot_graph(graph, points, ax=ax)
        m = metrics(graph)
        rows.append({'family': family, 'edges': graph.edge_count, 'length': graph.total_weight(),
                     'clustering': m.clustering_coefficient, 'path_length': m.average_path_length})
    fig.tight_layout()
    fig.savefig(out_path / "nuclei_hierarchy.png", dpi=150)

    table = pd.DataFrame(rows)
    table.to_csv(out_path / "nuclei_hierarchy.csv", index=False)
    print(table.to_string(index=False))
    logger.info("Figure and table saved to nuclei_hierarchy.png / nuclei_hierarchy.csv")

if __name__ == "__main__":
    main()
