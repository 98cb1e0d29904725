"""Deterministic hex-grid canal traffic simulator.

A lockstep cellular-automaton world of narrowboats hauling cargo between
supply and delivery docks, with traffic regulated by timed locks.  The
full state advances every tick; consumers observe it only through small
"locus" disks streamed over a binary protocol.
"""

from canalsim.hexgrid import HexCoord, hex_disk, hex_distance, neighbors

__all__ = ["HexCoord", "neighbors", "hex_distance", "hex_disk"]

__version__ = "0.1.0"
