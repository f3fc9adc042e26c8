"""Session configuration: defaults, TOML loading, canonical digests.

Every tunable constant of the simulator appears here exactly once with its
default; a TOML file overrides fields per section. The manifest binds run
outputs to the configuration through a canonical JSON digest.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .coupling import CouplingGains, FrameMap
from .kinematics import KinematicParams
from .leader import DeviceLimits
from .metrics import SparcParams
from .plant import PlantParams
from .policies import TraineeParams, TrainerParams
from .tasks import Condition, Pose
from .transport import LinkModel


@dataclass(frozen=True)
class TaskParams:
    blocks: int = 3
    familiarization: int = 3
    match_tol: float = 0.07        # m
    hold_duration: float = 3.0     # s
    trial_timeout: float = 120.0   # s, reach phase wall limit
    return_timeout: float = 30.0   # s before the arm is reset to base


@dataclass(frozen=True)
class UdpAddresses:
    leader: tuple[str, int] = ("127.0.0.1", 47801)
    controller: tuple[str, int] = ("127.0.0.1", 47802)
    follower: tuple[str, int] = ("127.0.0.1", 47803)


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 42
    condition_order: tuple[Condition, Condition] = (Condition.VD, Condition.HD)
    transport: str = "loopback"        # loopback | udp
    leader_source: str = "scripted"    # scripted | ui
    dt: float = 0.002                  # s, tick and recording period
    send_rate: float = 450.0           # Hz, UDP state-stream pacing
    tau_dev: float = 0.02              # s, leader device servo constant
    tau_max: float = 30.0              # N*m, coupling torque clamp
    ui_rate: float = 50.0              # Hz, bridge snapshot rate

    frame_map: FrameMap = FrameMap()
    gains: CouplingGains = CouplingGains()
    device: DeviceLimits = DeviceLimits()
    kinematics: KinematicParams = KinematicParams()
    plant: PlantParams = PlantParams()
    sparc: SparcParams = SparcParams()
    link: LinkModel = LinkModel()
    task: TaskParams = TaskParams()
    trainer: TrainerParams = TrainerParams()
    trainee_hd: TraineeParams = TraineeParams(mode="compliant")
    trainee_vd: TraineeParams = TraineeParams(mode="imitation")
    udp: UdpAddresses = UdpAddresses()
    pose_overrides: dict[Pose, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.transport not in ("loopback", "udp"):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.leader_source not in ("scripted", "ui"):
            raise ValueError(f"unknown leader_source {self.leader_source!r}")
        if self.dt <= 0 or self.send_rate <= 0 or self.ui_rate <= 0:
            raise ValueError("dt and rates must be positive")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")


_SECTION_TYPES = {
    "frame_map": FrameMap,
    "gains": CouplingGains,
    "device": DeviceLimits,
    "kinematics": KinematicParams,
    "plant": PlantParams,
    "sparc": SparcParams,
    "link": LinkModel,
    "task": TaskParams,
    "trainer": TrainerParams,
    "trainee_hd": TraineeParams,
    "trainee_vd": TraineeParams,
    "udp": UdpAddresses,
}

_TUPLE_FIELDS = {
    "x_offset", "shoulder_origin", "joint_limits", "joint_damping",
    "baseline_viscous", "leader", "controller", "follower",
}


def _coerce(value):
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def _condition_order(names) -> tuple[Condition, Condition]:
    order = tuple(Condition[str(n).upper()] for n in names)
    if sorted(c.name for c in order) != ["HD", "VD"] or len(order) != 2:
        raise ValueError("condition_order must list HD and VD exactly once")
    return order


def load_config(path) -> SessionConfig:
    """Build a SessionConfig from a TOML file over the defaults."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SessionConfig:
    cfg = SessionConfig()
    session = dict(raw.get("session", {}))
    updates = {}
    if "condition_order" in session:
        updates["condition_order"] = _condition_order(session.pop("condition_order"))
    for key, value in session.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown session option {key!r}")
        updates[key] = _coerce(value)

    for section, cls in _SECTION_TYPES.items():
        if section in raw:
            base = getattr(cfg, section)
            overrides = {k: _coerce(v) for k, v in raw[section].items()}
            unknown = set(overrides) - set(asdict(base))
            if unknown:
                raise ValueError(f"unknown option(s) in [{section}]: {sorted(unknown)}")
            updates[section] = replace(base, **overrides)

    if "poses" in raw:
        overrides = {}
        for name, angles in raw["poses"].items():
            pose = Pose[name.upper()]
            if len(angles) != 6:
                raise ValueError(f"pose {name!r} needs six joint angles")
            overrides[pose] = tuple(float(a) for a in angles)
        updates["pose_overrides"] = overrides

    return replace(cfg, **updates)


def config_from_manifest(manifest: dict) -> SessionConfig:
    """Rebuild the effective config stored in a run manifest."""
    raw = dict(manifest.get("config", {}))
    sections = {k: raw.pop(k) for k in list(raw) if k in _SECTION_TYPES}
    poses = raw.pop("pose_overrides", None)
    doc = {"session": raw, **sections}
    if poses:
        doc["poses"] = poses
    return config_from_dict(doc)


def config_digest(cfg: SessionConfig) -> str:
    """Stable content hash binding outputs to their configuration."""

    def default(obj):
        if isinstance(obj, Condition) or isinstance(obj, Pose):
            return obj.name
        raise TypeError(type(obj).__name__)

    blob = json.dumps(asdict(cfg), sort_keys=True, default=default,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
