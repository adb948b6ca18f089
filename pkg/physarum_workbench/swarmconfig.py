"""
Swarm configuration files.

A configuration is a plain text key-value file, one entry per line with
the key and its values separated by tabs or spaces:

    # 5-node chain
    WIDTH	200
    HEIGHT	200
    SENSOR_ANGLE	45
    NODE	100	30	10
    NODE	100	170	10
    INOCULATE	1	150

Scalar keys are the upper-cased SwarmParams field names plus WIDTH and
HEIGHT; angles are given in degrees. NODE lines (x, y, projection value)
repeat, and INOCULATE names the node index and the population size.
"""

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from .errors import ConfigurationError
from .swarm import StimulusNode, SwarmParams, SwarmWorld, init_world

logger = logging.getLogger(__name__)

ANGLE_KEYS = {'SENSOR_ANGLE', 'ROTATION_ANGLE'}
PARAM_TYPES = {f.name.upper(): f.type for f in fields(SwarmParams)}
BOOLEAN_WORDS = {'true': True, 'yes': True, '1': True, 'false': False, 'no': False, '0': False}


def _convert(key: str, value: str, line_number: int) -> Any:
    kind = PARAM_TYPES[key]
    try:
        if kind in (bool, 'bool'):
            return BOOLEAN_WORDS[value.lower()]
        if kind in (int, 'int'):
            return int(value)
        if kind in (float, 'float'):
            number = float(value)
            return float(np.deg2rad(number)) if key in ANGLE_KEYS else number
        return value
    except (KeyError, ValueError):
        raise ConfigurationError(f"Line {line_number}: invalid value for {key}: {value!r}")


@dataclass
class SwarmConfig:
    """
    Everything needed to build a swarm world apart from the seed.

    Attributes:
        width, height: Lattice dimensions
        nodes: (x, y, projection value) per stimulus node
        inoculation: (node index, population size)
        params: Agent, field and growth parameters
    """
    width: int
    height: int
    nodes: List[Tuple[int, int, float]]
    inoculation: Tuple[int, int]
    params: SwarmParams = field(default_factory=SwarmParams)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SwarmConfig":
        """
        Parse a configuration file.

        Raises:
            ConfigurationError: On unknown or repeated keys, malformed
                                values, or missing WIDTH/HEIGHT/NODE/INOCULATE
        """
        path = Path(path)
        with open(path, 'r') as f:
            lines = f.readlines()

        settings: Dict[str, Any] = {}
        nodes = []
        inoculation = None
        for line_number, line in enumerate(lines, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            key, *values = line.split()
            key = key.upper()

            if key == 'NODE':
                if len(values) != 3:
                    raise ConfigurationError(f"Line {line_number}: NODE needs x, y and projection value")
                try:
                    nodes.append((int(values[0]), int(values[1]), float(values[2])))
                except ValueError:
                    raise ConfigurationError(f"Line {line_number}: invalid NODE entry {values}")
                continue
            if key == 'INOCULATE':
                if inoculation is not None:
                    raise ConfigurationError(f"Line {line_number}: INOCULATE given twice")
                if len(values) != 2:
                    raise ConfigurationError(f"Line {line_number}: INOCULATE needs node index and population")
                try:
                    inoculation = (int(values[0]), int(values[1]))
                except ValueError:
                    raise ConfigurationError(f"Line {line_number}: invalid INOCULATE entry {values}")
                continue

            if key not in PARAM_TYPES and key not in ('WIDTH', 'HEIGHT'):
                raise ConfigurationError(
                    f"Line {line_number}: unknown key {key}. Must be one of "
                    f"{['WIDTH', 'HEIGHT', 'NODE', 'INOCULATE'] + sorted(PARAM_TYPES)}")
            if key in settings:
                raise ConfigurationError(f"Line {line_number}: {key} given twice")
            if len(values) != 1:
                raise ConfigurationError(f"Line {line_number}: {key} takes exactly one value")
            if key in ('WIDTH', 'HEIGHT'):
                try:
                    settings[key] = int(values[0])
                except ValueError:
                    raise ConfigurationError(f"Line {line_number}: invalid value for {key}: {values[0]!r}")
            else:
                settings[key] = _convert(key, values[0], line_number)

        for required in ('WIDTH', 'HEIGHT'):
            if required not in settings:
                raise ConfigurationError(f"Configuration {path} lacks {required}")
        if not nodes:
            raise ConfigurationError(f"Configuration {path} has no NODE entries")
        if inoculation is None:
            raise ConfigurationError(f"Configuration {path} lacks INOCULATE")

        width, height = settings.pop('WIDTH'), settings.pop('HEIGHT')
        params = SwarmParams(**{key.lower(): value for key, value in settings.items()})
        logger.info(f"Loaded swarm configuration {path}: {width}x{height}, {len(nodes)} nodes")
        return cls(width, height, nodes, inoculation, params)

    def to_dict(self) -> Dict[str, Any]:
        """Fully resolved configuration; angles in radians."""
        return {
            'width': self.width,
            'height': self.height,
            'nodes': [list(node) for node in self.nodes],
            'inoculation': list(self.inoculation),
            'params': self.params.to_dict(),
        }

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "SwarmConfig":
        try:
            return cls(
                width=int(values['width']),
                height=int(values['height']),
                nodes=[(int(x), int(y), float(p)) for x, y, p in values['nodes']],
                inoculation=(int(values['inoculation'][0]), int(values['inoculation'][1])),
                params=SwarmParams.from_dict(values.get('params', {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid swarm configuration: {e}") from e

    def build_world(self, seed: int = 0) -> SwarmWorld:
        nodes = [StimulusNode(x, y, p) for x, y, p in self.nodes]
        return init_world((self.width, self.height), nodes, self.inoculation, self.params, seed)
