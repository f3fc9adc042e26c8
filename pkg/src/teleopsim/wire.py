"""Bit-exact binary wire protocol for the leader/controller/follower links.

Every datagram is a 16-byte header (magic ``HL``, version, message type,
u32 sequence number, u64 timestamp in microseconds, all little-endian)
followed by a fixed-layout payload of little-endian f64 fields, so the
same bytes decode identically in any language. State streams are
send-and-forget: receivers keep only the freshest sequence number per
(peer, type). Messages are named tuples: cheap to build in the 500 Hz
loop, structurally comparable in tests.
"""
from __future__ import annotations

import struct
from enum import IntEnum
from typing import NamedTuple

MAGIC = b"HL"
VERSION = 1

_HEADER = struct.Struct("<2sBBIQ")           # magic, version, type, seq, t_us
_LEADER = struct.Struct("<3d3dB7x")          # pos, vel, grip flag + pad
_FOLLOWER = struct.Struct("<6d6d3d3d")       # q, qdot, elbow, wrist
_FORCE = struct.Struct("<3d")                # force command (leader frame)
_TORQUE = struct.Struct("<6d")               # torque command
_TASK = struct.Struct("<HBBBBBB")            # trial, block, cond, pose, phase, grab, event


class MsgType(IntEnum):
    LEADER_STATE = 1
    FOLLOWER_STATE = 2
    FORCE_CMD = 3
    TORQUE_CMD = 4
    TASK_EVENT = 5


WIRE_SIZES = {
    MsgType.LEADER_STATE: _HEADER.size + _LEADER.size,      # 72
    MsgType.FOLLOWER_STATE: _HEADER.size + _FOLLOWER.size,  # 160
    MsgType.FORCE_CMD: _HEADER.size + _FORCE.size,          # 40
    MsgType.TORQUE_CMD: _HEADER.size + _TORQUE.size,        # 64
    MsgType.TASK_EVENT: _HEADER.size + _TASK.size,          # 24
}


class MalformedDatagram(ValueError):
    """Datagram rejected; ``reason`` is a stable machine-readable tag."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class LeaderStateMsg(NamedTuple):
    seq: int
    t_us: int
    pos: tuple
    vel: tuple
    grip_closed: bool


class FollowerStateMsg(NamedTuple):
    seq: int
    t_us: int
    q: tuple
    qdot: tuple
    elbow: tuple
    wrist: tuple


class ForceCmdMsg(NamedTuple):
    seq: int
    t_us: int
    force: tuple


class TorqueCmdMsg(NamedTuple):
    seq: int
    t_us: int
    tau: tuple


class TaskEventMsg(NamedTuple):
    """Task-state snapshot; ``event`` carries the transition code (0 = none)."""

    seq: int
    t_us: int
    trial: int
    block: int
    condition: int
    pose: int
    phase: int
    grab: int
    event: int


LeaderStateMsg.msg_type = MsgType.LEADER_STATE
FollowerStateMsg.msg_type = MsgType.FOLLOWER_STATE
ForceCmdMsg.msg_type = MsgType.FORCE_CMD
TorqueCmdMsg.msg_type = MsgType.TORQUE_CMD
TaskEventMsg.msg_type = MsgType.TASK_EVENT


def _pack_leader(m: LeaderStateMsg) -> bytes:
    return _LEADER.pack(*m.pos, *m.vel, 1 if m.grip_closed else 0)


def _pack_follower(m: FollowerStateMsg) -> bytes:
    return _FOLLOWER.pack(*m.q, *m.qdot, *m.elbow, *m.wrist)


def _pack_force(m: ForceCmdMsg) -> bytes:
    return _FORCE.pack(*m.force)


def _pack_torque(m: TorqueCmdMsg) -> bytes:
    return _TORQUE.pack(*m.tau)


def _pack_task(m: TaskEventMsg) -> bytes:
    return _TASK.pack(m.trial, m.block, m.condition, m.pose, m.phase,
                      m.grab, m.event)


def _unpack_leader(seq, t_us, body):
    f = _LEADER.unpack(body)
    return LeaderStateMsg(seq, t_us, f[0:3], f[3:6], bool(f[6]))


def _unpack_follower(seq, t_us, body):
    f = _FOLLOWER.unpack(body)
    return FollowerStateMsg(seq, t_us, f[0:6], f[6:12], f[12:15], f[15:18])


def _unpack_force(seq, t_us, body):
    return ForceCmdMsg(seq, t_us, _FORCE.unpack(body))


def _unpack_torque(seq, t_us, body):
    return TorqueCmdMsg(seq, t_us, _TORQUE.unpack(body))


def _unpack_task(seq, t_us, body):
    return TaskEventMsg(seq, t_us, *_TASK.unpack(body))


_PACKERS = {
    MsgType.LEADER_STATE: _pack_leader,
    MsgType.FOLLOWER_STATE: _pack_follower,
    MsgType.FORCE_CMD: _pack_force,
    MsgType.TORQUE_CMD: _pack_torque,
    MsgType.TASK_EVENT: _pack_task,
}

_UNPACKERS = {
    int(MsgType.LEADER_STATE): (_unpack_leader, WIRE_SIZES[MsgType.LEADER_STATE]),
    int(MsgType.FOLLOWER_STATE): (_unpack_follower, WIRE_SIZES[MsgType.FOLLOWER_STATE]),
    int(MsgType.FORCE_CMD): (_unpack_force, WIRE_SIZES[MsgType.FORCE_CMD]),
    int(MsgType.TORQUE_CMD): (_unpack_torque, WIRE_SIZES[MsgType.TORQUE_CMD]),
    int(MsgType.TASK_EVENT): (_unpack_task, WIRE_SIZES[MsgType.TASK_EVENT]),
}

_HEADER_SIZE = _HEADER.size


def encode(msg) -> bytes:
    try:
        packer = _PACKERS[msg.msg_type]
    except (AttributeError, KeyError):
        raise TypeError(f"unknown message {type(msg).__name__}") from None
    return _HEADER.pack(MAGIC, VERSION, int(msg.msg_type), msg.seq,
                        msg.t_us) + packer(msg)


def decode(data: bytes):
    if len(data) < _HEADER_SIZE:
        raise MalformedDatagram("too_short")
    magic, version, mtype, seq, t_us = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedDatagram("bad_magic")
    if version != VERSION:
        raise MalformedDatagram("bad_version")
    entry = _UNPACKERS.get(mtype)
    if entry is None:
        raise MalformedDatagram("bad_type")
    unpacker, size = entry
    if len(data) != size:
        raise MalformedDatagram("bad_length")
    return unpacker(seq, t_us, data[_HEADER_SIZE:])


class SequenceTracker:
    """Freshest-state filter per (peer, message type).

    ``accept`` returns True for strictly increasing sequence numbers and
    False for stale or duplicate ones; gaps are tolerated (state streams
    need no retransmit).
    """

    def __init__(self) -> None:
        self._last: dict[tuple[str, int], int] = {}

    def accept(self, peer: str, msg) -> bool:
        key = (peer, msg.msg_type)
        last = self._last.get(key)
        if last is not None and msg.seq <= last:
            return False
        self._last[key] = msg.seq
        return True
