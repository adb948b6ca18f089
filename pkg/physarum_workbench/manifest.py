"""
Run manifests and deterministic replay.

Every command writes its outputs through a RunRecorder, which times the
run and, on success, writes manifest.json next to the outputs with the
resolved configuration, seed, artifact version, generator name and the
SHA-256 of every output and input file. `replay` re-executes a manifest
into a fresh directory and compares the checksums.

Example usage:
    with RunRecorder(out_dir, "actin", config, seed) as recorder:
        run_actin(config, seed, out_dir)
    report = replay(out_dir / "manifest.json", RUNNERS)
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Union

from . import __version__
from .errors import ReplayError
from .seeding import GENERATOR_NAME
from .writers import file_sha256

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

Runner = Callable[[Dict, int, Path], None]


@dataclass
class RunManifest:
    """
    Provenance of one run.

    Attributes:
        subcommand: 'actin', 'graph' or 'swarm'
        config: Fully resolved configuration
        seed: Generator seed
        version: Workbench version that produced the outputs
        generator: Bit generator name
        outputs: Output path relative to the run directory -> sha256
        inputs: Input file path -> sha256
        duration_s: Wall-clock run time
        created: UTC timestamp
    """
    subcommand: str
    config: Dict
    seed: int
    version: str = __version__
    generator: str = GENERATOR_NAME
    outputs: Dict[str, str] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    duration_s: float = 0.0
    created: str = ""

    def to_dict(self) -> Dict:
        return asdict(self)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        """
        Raises:
            ReplayError: If the file is missing or not a manifest
        """
        path = Path(path)
        if not path.is_file():
            raise ReplayError(f"Manifest not found: {path}")
        try:
            with open(path, 'r') as f:
                values = json.load(f)
            return cls(**values)
        except (json.JSONDecodeError, TypeError) as e:
            raise ReplayError(f"Invalid manifest {path}: {e}") from e


class RunRecorder:
    """
    A context manager recording the provenance of one run.

    Outputs are whatever files exist under out_dir when the block exits
    without an exception; nothing is recorded for a failed run.
    """

    def __init__(self, out_dir: Union[str, Path], subcommand: str, config: Dict, seed: int,
                 inputs: Iterable[Union[str, Path]] = ()):
        self.out_dir = Path(out_dir)
        self.manifest = RunManifest(subcommand, config, int(seed))
        self.inputs = [Path(p) for p in inputs]
        self._started = None

    def __enter__(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest.inputs = {str(p.resolve()): file_sha256(p) for p in self.inputs}
        self._started = time.perf_counter()
        logger.info(f"Starting {self.manifest.subcommand} run (seed {self.manifest.seed}) in {self.out_dir}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            logger.error(f"{self.manifest.subcommand} run failed: {exc_val}")
            return False

        self.manifest.duration_s = time.perf_counter() - self._started
        self.manifest.created = datetime.now(timezone.utc).isoformat()
        self.manifest.outputs = {
            path.relative_to(self.out_dir).as_posix(): file_sha256(path)
            for path in sorted(self.out_dir.rglob('*'))
            if path.is_file() and path.name != MANIFEST_NAME
        }
        self.manifest.write(self.out_dir / MANIFEST_NAME)
        logger.info(f"✅ {self.manifest.subcommand} run finished in {self.manifest.duration_s:.2f} s, "
                    f"{len(self.manifest.outputs)} outputs recorded")
        return False


@dataclass
class ReplayReport:
    """Checksum comparison between a manifest and its replay."""
    out_dir: Path
    matched: List[str]
    mismatched: List[str]
    missing: List[str]
    extra: List[str]

    @property
    def identical(self) -> bool:
        return not (self.mismatched or self.missing or self.extra)


def _fresh_directory(manifest_path: Path) -> Path:
    run_dir = manifest_path.parent
    for attempt in range(1, 10000):
        candidate = run_dir.parent / f"{run_dir.name}_replay{attempt}"
        if not candidate.exists():
            return candidate
    raise ReplayError(f"No free replay directory next to {run_dir}")


def replay(manifest_path: Union[str, Path], runners: Dict[str, Runner],
           out_dir: Optional[Union[str, Path]] = None) -> ReplayReport:
    """
    Re-execute a recorded run and compare its outputs byte for byte.

    Args:
        manifest_path: manifest.json of the original run
        runners: Subcommand name -> runner(config, seed, out_dir)
        out_dir: Fresh directory for the replay; defaults to a sibling
                 `<run>_replay<k>` directory

    Raises:
        ReplayError: If the manifest is missing or invalid, was written by
                     another version, names an unknown subcommand, or an
                     input file changed since the original run
    """
    manifest_path = Path(manifest_path)
    original = RunManifest.load(manifest_path)

    if original.version != __version__:
        raise ReplayError(
            f"Refusing to replay: manifest written by version {original.version}, this is {__version__}. "
            f"Outputs are only guaranteed identical within one version")
    if original.generator != GENERATOR_NAME:
        raise ReplayError(f"Refusing to replay: manifest uses generator {original.generator}, "
                          f"this build provides {GENERATOR_NAME}")
    runner = runners.get(original.subcommand)
    if runner is None:
        raise ReplayError(f"Unknown subcommand in manifest: {original.subcommand}")

    for path, digest in original.inputs.items():
        if not Path(path).is_file():
            raise ReplayError(f"Refusing to replay: input {path} no longer exists")
        if file_sha256(path) != digest:
            raise ReplayError(f"Refusing to replay: input {path} changed since the original run")

    out_dir = Path(out_dir) if out_dir is not None else _fresh_directory(manifest_path)
    if out_dir.exists() and any(out_dir.iterdir()):
        raise ReplayError(f"Replay directory {out_dir} is not empty")

    logger.info(f"Replaying {original.subcommand} run from {manifest_path} into {out_dir}")
    with RunRecorder(out_dir, original.subcommand, original.config, original.seed,
                     inputs=list(original.inputs)) as recorder:
        runner(original.config, original.seed, out_dir)

    produced = recorder.manifest.outputs
    matched = sorted(p for p, d in original.outputs.items() if produced.get(p) == d)
    mismatched = sorted(p for p, d in original.outputs.items() if p in produced and produced[p] != d)
    missing = sorted(p for p in original.outputs if p not in produced)
    extra = sorted(p for p in produced if p not in original.outputs)
    report = ReplayReport(out_dir, matched, mismatched, missing, extra)

    if report.identical:
        logger.info(f"✅ Replay identical: {len(matched)} outputs match")
    else:
        for path in mismatched:
            logger.warning(f"Checksum mismatch: {path}")
        for path in missing:
            logger.warning(f"Missing from replay: {path}")
        for path in extra:
            logger.warning(f"Not in original run: {path}")
    return report
