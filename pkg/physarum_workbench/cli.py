"""
Command-line front end for the workbench.

    physarum-workbench actin --rule c2 --n 500 --steps 2000 --seed 1
    physarum-workbench graph --family hierarchy --points nuclei.csv --format json
    physarum-workbench graph --family ws --n 500 --k 6 --beta 0.05 --seed 3
    physarum-workbench swarm --config configs/chain_5node.cfg --steps 20000 --snapshot-every 500
    physarum-workbench replay runs/actin/manifest.json

Exit codes: 0 success, 1 usage error, 2 runtime or I/O error. Outputs go
to --out, or to $PHYSARUM_WORKBENCH_OUT/<subcommand> (default ./runs).
"""

import argparse
import difflib
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .actin import PALETTES, Boundary, Rule, RuleSpec, random_init, run
from .errors import UsageError, WorkbenchError
from .localization import DEFAULT_WINDOW, detect_localizations, write_report
from .manifest import RunRecorder, replay
from .proximity import (delaunay, er_random, gabriel, hierarchy, load_points, metrics, mst, rng,
                        watts_strogatz)
from .swarm import run_world
from .swarmconfig import SwarmConfig

logger = logging.getLogger(__name__)

OUT_ENV = "PHYSARUM_WORKBENCH_OUT"
DEFAULT_OUT = "runs"

GEOMETRIC_FAMILIES = {'delaunay': delaunay, 'gabriel': gabriel, 'rng': rng, 'mst': mst}
GRAPH_FAMILIES = list(GEOMETRIC_FAMILIES) + ['hierarchy', 'er', 'ws']
GRAPH_FORMATS = ['json', 'dot']


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad input."""

    def error(self, message):
        raise UsageError(message)


# --- runners: (resolved config, seed, output directory) -> files ---------------

def run_actin(config: Dict, seed: int, out_dir: Path) -> None:
    """Space-time diagrams, activity series and localization reports of one automaton run."""
    out_dir = Path(out_dir)
    initial = random_init(config['n'], config['p_excited'], config['p_refractory'], seed)
    result = run(initial, RuleSpec(config['rule'], config['boundary']), config['steps'])

    chains = ['x', 'y'] if config['chain'] == 'both' else [config['chain']]
    for chain in chains:
        getattr(result, chain).to_pgm(out_dir / f"spacetime_{chain}.pgm", config['palette'])
    result.activity.write_csv(out_dir / "activity.csv")

    window = config['window']
    if config['steps'] + 1 < 2 * window:
        logger.warning(f"Skipping localization detection: {config['steps']} steps are fewer than "
                       f"twice the {window}-row window")
        return
    for chain in chains:
        write_report(detect_localizations(getattr(result, chain), window), out_dir / f"localizations_{chain}.json")


def run_graph(config: Dict, seed: int, out_dir: Path) -> None:
    """Graph files and topology metrics for one proximity or reference family."""
    out_dir = Path(out_dir)
    family = config['family']
    points = None
    if family in GEOMETRIC_FAMILIES or family == 'hierarchy':
        points = load_points(config['points'])
        graphs = hierarchy(points).graphs if family == 'hierarchy' else {family: GEOMETRIC_FAMILIES[family](points)}
    elif family == 'er':
        graphs = {'er': er_random(config['n'], config['p'], seed)}
    else:
        graphs = {'ws': watts_strogatz(config['n'], config['k'], config['beta'], seed)}

    summary = {}
    for name, graph in graphs.items():
        if config['format'] == 'dot':
            graph.write_dot(out_dir / f"{name}.dot", points)
        else:
            graph.write_json(out_dir / f"{name}.json")
        summary[name] = asdict(metrics(graph))
        summary[name]['edges'] = graph.edge_count
    with open(out_dir / "metrics.json", 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True)


def run_swarm(config: Dict, seed: int, out_dir: Path) -> None:
    """Frames, metrics, events and the extracted network of one swarm run."""
    out_dir = Path(out_dir)
    world = SwarmConfig.from_dict(config['swarm']).build_world(seed)
    _, report = run_world(world, config['steps'], config['snapshot_every'], out_dir)
    with open(out_dir / "network_report.json", 'w') as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)


RUNNERS = {'actin': run_actin, 'graph': run_graph, 'swarm': run_swarm}


# --- argument handling -------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, default=0, help='Generator seed (default: 0)')
    parser.add_argument('--out', type=Path, default=None,
                        help=f'Output directory (default: ${OUT_ENV}/<subcommand>, falling back to ./{DEFAULT_OUT})')
    parser.add_argument('--repeat', type=int, default=1,
                        help='Run seeds seed..seed+K-1, one seed_<s>/ directory each (default: 1)')
    parser.add_argument('--jobs', type=int, default=1,
                        help='Worker processes for --repeat runs (default: 1)')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='physarum-workbench',
                     description='Actin automaton, proximity graphs and virtual plasmodium swarm.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log per-step detail')
    commands = parser.add_subparsers(dest='command', required=True, metavar='{actin,graph,swarm,replay}')

    actin = commands.add_parser('actin', help='Run the two-chain actin automaton')
    actin.add_argument('--rule', choices=[r.value for r in Rule], default='c1', help='Excitation rule (default: c1)')
    actin.add_argument('--n', type=int, default=500, help='Nodes per chain (default: 500)')
    actin.add_argument('--steps', type=int, default=1000, help='Number of steps (default: 1000)')
    actin.add_argument('--p-excited', type=float, default=0.25, help='Initial excited probability (default: 0.25)')
    actin.add_argument('--p-refractory', type=float, default=0.25,
                       help='Initial refractory probability (default: 0.25)')
    actin.add_argument('--boundary', choices=[b.value for b in Boundary], default='fixed',
                       help='Boundary policy (default: fixed)')
    actin.add_argument('--chain', choices=['x', 'y', 'both'], default='both',
                       help='Chains to render (default: both)')
    actin.add_argument('--palette', choices=list(PALETTES), default='standard',
                       help='Space-time grey levels (default: standard)')
    actin.add_argument('--window', type=int, default=DEFAULT_WINDOW,
                       help=f'Localization confirmation window in rows (default: {DEFAULT_WINDOW})')
    _add_common(actin)

    graph = commands.add_parser('graph', help='Build proximity or reference graphs')
    graph.add_argument('--family', choices=GRAPH_FAMILIES, required=True, help='Graph family')
    graph.add_argument('--points', type=Path, help='Point CSV with header id,x,y (geometric families)')
    graph.add_argument('--format', choices=GRAPH_FORMATS, default='json', help='Graph file format (default: json)')
    graph.add_argument('--n', type=int, default=500, help='Nodes for er / ws (default: 500)')
    graph.add_argument('--p', type=float, default=0.01, help='Edge probability for er (default: 0.01)')
    graph.add_argument('--k', type=int, default=6, help='Ring-lattice degree for ws (default: 6)')
    graph.add_argument('--beta', type=float, default=0.05, help='Rewiring probability for ws (default: 0.05)')
    _add_common(graph)

    swarm = commands.add_parser('swarm', help='Run the virtual plasmodium swarm')
    swarm.add_argument('--config', type=Path, required=True, help='Swarm configuration file')
    swarm.add_argument('--steps', type=int, default=20000, help='Number of steps (default: 20000)')
    swarm.add_argument('--snapshot-every', type=int, default=0,
                       help='Frame interval in steps, 0 for first and last only (default: 0)')
    _add_common(swarm)

    again = commands.add_parser('replay', help='Re-run a manifest and compare outputs byte for byte')
    again.add_argument('manifest', type=Path, help='manifest.json of the run to replay')
    again.add_argument('--out', type=Path, default=None, help='Fresh directory for the replay')
    return parser


def _vocabulary(parser: argparse.ArgumentParser) -> List[str]:
    words = []
    for action in parser._actions:
        words.extend(action.option_strings)
        if isinstance(action, argparse._SubParsersAction):
            words.extend(action.choices)
            for sub in action.choices.values():
                words.extend(_vocabulary(sub))
    return sorted(set(words))


def _with_suggestion(message: str, parser: argparse.ArgumentParser) -> str:
    match = re.search(r"invalid choice: '([^']+)'", message) or re.search(r"unrecognized arguments: (\S+)", message)
    if match:
        close = difflib.get_close_matches(match.group(1), _vocabulary(parser), n=1)
        if close:
            return f"{message}. Did you mean '{close[0]}'?"
    return message


def _resolve(args: argparse.Namespace) -> Tuple[Dict, List[Path]]:
    """Fully resolved configuration and input files of a subcommand."""
    if args.repeat < 1:
        raise UsageError(f"Invalid repeat: {args.repeat}. Must be >= 1")
    if args.jobs < 1:
        raise UsageError(f"Invalid jobs: {args.jobs}. Must be >= 1")
    if args.seed < 0:
        raise UsageError(f"Invalid seed: {args.seed}. Must be non-negative")

    if args.command == 'actin':
        if args.steps < 1:
            raise UsageError(f"Invalid steps: {args.steps}. Must be at least 1")
        if args.window < 2:
            raise UsageError(f"Invalid window: {args.window}. Must be at least 2")
        config = {
            'rule': args.rule, 'boundary': args.boundary, 'n': args.n, 'steps': args.steps,
            'p_excited': args.p_excited, 'p_refractory': args.p_refractory,
            'chain': args.chain, 'palette': args.palette, 'window': args.window,
        }
        return config, []

    if args.command == 'graph':
        config = {'family': args.family, 'format': args.format}
        if args.family in ('er', 'ws'):
            config.update({'n': args.n, 'p': args.p} if args.family == 'er'
                          else {'n': args.n, 'k': args.k, 'beta': args.beta})
            return config, []
        if args.points is None:
            raise UsageError(f"--points is required for --family {args.family}")
        config['points'] = str(args.points.resolve())
        return config, [args.points]

    if args.steps < 0:
        raise UsageError(f"Invalid steps: {args.steps}. Must be >= 0")
    if args.snapshot_every < 0:
        raise UsageError(f"Invalid snapshot interval: {args.snapshot_every}. Must be >= 0")
    swarm = SwarmConfig.from_file(args.config)
    return {'swarm': swarm.to_dict(), 'steps': args.steps, 'snapshot_every': args.snapshot_every}, []


def _record_run(command: str, config: Dict, seed: int, out_dir: Path, inputs: Sequence[Path]) -> Path:
    with RunRecorder(out_dir, command, config, seed, inputs):
        RUNNERS[command](config, seed, out_dir)
    return out_dir


def _configure_logging(verbose: bool) -> None:
    package_logger = logging.getLogger('physarum_workbench')
    package_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    if not package_logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        package_logger.addHandler(handler)
        package_logger.propagate = False


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run one subcommand.

    Returns:
        0 on success, 1 on a usage error, 2 on a runtime or I/O error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except UsageError as e:
        print(f"{parser.prog}: error: {_with_suggestion(str(e), parser)}", file=sys.stderr)
        return 1

    _configure_logging(args.verbose)
    try:
        if args.command == 'replay':
            report = replay(args.manifest, RUNNERS, args.out)
            if not report.identical:
                logger.error(f"Replay differs from the original run: {len(report.mismatched)} mismatched, "
                             f"{len(report.missing)} missing, {len(report.extra)} extra outputs")
                return 2
            return 0

        config, inputs = _resolve(args)
        base = args.out or Path(os.environ.get(OUT_ENV, DEFAULT_OUT)) / args.command
        seeds = list(range(args.seed, args.seed + args.repeat))
        dirs = [base] if args.repeat == 1 else [base / f"seed_{seed}" for seed in seeds]

        if args.jobs > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                futures = [pool.submit(_record_run, args.command, config, seed, out_dir, inputs)
                           for seed, out_dir in zip(seeds, dirs)]
                for future in futures:
                    future.result()
        else:
            for seed, out_dir in zip(seeds, dirs):
                _record_run(args.command, config, seed, out_dir, inputs)
        logger.info(f"✅ {args.command}: {len(seeds)} run(s) written under {base}")
        return 0
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return 1
    except (WorkbenchError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
