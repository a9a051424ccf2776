"""Worst-case performance bounds for TSN traffic shapers via network calculus."""

__version__ = "0.1.0"

from .engine import AnalysisReport, analyze, difference_ratio  # noqa: F401
from .netmodel import Network, load, save, validate  # noqa: F401
from .shapers import ARCHITECTURES  # noqa: F401
from .testgen import GenSpec, build_topology, generate  # noqa: F401
