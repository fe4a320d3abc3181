"""Deterministic 2D search-and-rescue simulation toolkit.

A point robot explores an unknown occupancy-grid world, detects frontiers
incrementally, picks exploration goals by expected information gain, then
sweeps the mapped free space in a snake pattern while a cubature Kalman
filter localizes static tags seen by a noisy forward camera.
"""

__version__ = "0.1.0"
