"""Deterministic haptic teleoperation training simulator and analysis kit.

A leader haptic-device model is coupled to a follower exoskeleton model
through a virtual-coupling controller and a three-node wire protocol; a
task engine drives pose-guidance trials and a metrics pipeline scores the
resulting motion. See README.md for the CLI and the acceptance suite.
"""
from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
