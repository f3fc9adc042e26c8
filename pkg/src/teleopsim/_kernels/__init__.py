"""Hot-loop math kernels with a compiled core and a pure-Python fallback.

The compiled Cython extension is preferred when importable; set
``TELEOPSIM_KERNELS=python`` to force the pure-Python twin (used by the
benchmark and the backend-agreement tests). ``BACKEND`` names the active
implementation.
"""
import os

if os.environ.get("TELEOPSIM_KERNELS", "").lower() == "python":
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND_NAME

fk_points = _impl.fk_points
point_jacobian = _impl.point_jacobian
gravity_torques = _impl.gravity_torques
coupling_forces = _impl.coupling_forces
jac_t_force = _impl.jac_t_force
plant_advance = _impl.plant_advance

__all__ = [
    "BACKEND",
    "fk_points",
    "point_jacobian",
    "gravity_torques",
    "coupling_forces",
    "jac_t_force",
    "plant_advance",
]
