import logging
from pathlib import Path
from physarum_workbench import RuleSpec, place_sources, random_init, run
from physarum_workbench.localization import detect_localizations, write_report

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
    steps = 1000
    seed = 1
    wave_sources = [40, 95, 170, 220, 290, 330, 410, 460]  # eight colliding waves in chain x
    window = 128

    out_path = Path(__file__).parent.resolve() / 'data' / 'actin'
    out_path.mkdir(parents=True, exist_ok=True)

    logger.info("Starting actin space-time script...")

    # C1 from isolated sources: waves collide and annihilate
    waves = run(place_sources(n, wave_sources), RuleSpec('c1'), steps=n)
    waves.x.to_pgm(out_path / "c1_waves_x.pgm", palette='two_tone')
    final = waves.activity.excited_x[-1] + waves.activity.excited_y[-1]
    logger.info(f"C1 waves: {final} excited nodes left after {n} steps")

    # C2 and C3 from the same random configuration
    initial = random_init(n, seed=seed)
    for rule in ('c2', 'c3'):
        result = run(initial, RuleSpec(rule), steps)
        for chain in ('x', 'y'):
            diagram = getattr(result, chain)
            diagram.to_pgm(out_path / f"{rule}_{chain}.pgm")
            found = detect_localizations(diagram, window)
            write_report(found, out_path / f"{rule}_{chain}_localizations.json")
            kinds = {kind: sum(loc.kind == kind for loc in found) for kind in ('mobile', 'generator', 'stationary')}
            logger.info(f"{rule} chain {chain}: {kinds}")
        result.activity.write_csv(out_path / f"{rule}_activity.csv")

    logger.info(f"Diagrams saved to {out_path}")

if __name__ == "__main__":
    main()
