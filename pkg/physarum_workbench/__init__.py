__version__ = "0.0.1"

from .actin import (ActivitySeries, ChainPair, NodeState, RuleSpec, SpaceTimeDiagram, neighborhood,
                    place_sources, random_init, run, sigma, step)
from .localization import Localization, detect_localizations
from .proximity import (GraphMetrics, HierarchyReport, PointSet, ProximityGraph, delaunay, er_random,
                        gabriel, hierarchy, load_points, metrics, mst, rng, save_points, watts_strogatz)
from .swarm import (Agent, StimulusNode, SwarmParams, SwarmWorld, diffuse_and_decay, init_world,
                    move_and_deposit, project_and_suppress, reproduce_and_die, run_world,
                    sense_and_orient, snapshot, step_world)
from .network import NetworkReport, extract_network
from .swarmconfig import SwarmConfig
from .manifest import RunManifest, RunRecorder, replay
