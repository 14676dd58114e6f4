"""Road graph inference from construction-site truck GPS trips."""

from .config import Config, ConfigError
from .pipeline import RunResult, infer
from .roads import Edge, Node, RoadGraph

__all__ = ["Config", "ConfigError", "Edge", "Node", "RoadGraph", "RunResult", "infer"]
