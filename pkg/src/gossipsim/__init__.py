"""Push-gossip dissemination simulator with adaptive forwarding thresholds."""

from .simengine import SimConfig, Trace, run, run_reference
from .topology import Graph, generate_overlay

__all__ = ["Graph", "SimConfig", "Trace", "generate_overlay", "run", "run_reference"]
