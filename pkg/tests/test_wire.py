"""Wire protocol: layouts, round trips, rejection paths, freshest-wins."""
import numpy as np
import pytest

from teleopsim.rng import Xoshiro256StarStar
from teleopsim.transport import ImpairedLink, LinkModel
from teleopsim.wire import (
    WIRE_SIZES,
    FollowerStateMsg,
    ForceCmdMsg,
    LeaderStateMsg,
    MalformedDatagram,
    MsgType,
    SequenceTracker,
    TaskEventMsg,
    TorqueCmdMsg,
    decode,
    encode,
)


def random_message(mtype: MsgType, rng: np.random.Generator):
    seq = int(rng.integers(0, 2**32))
    t_us = int(rng.integers(0, 2**63))
    f = lambda n: tuple(float(x) for x in rng.uniform(-100, 100, n))
    if mtype is MsgType.LEADER_STATE:
        return LeaderStateMsg(seq, t_us, f(3), f(3), bool(rng.integers(0, 2)))
    if mtype is MsgType.FOLLOWER_STATE:
        return FollowerStateMsg(seq, t_us, f(6), f(6), f(3), f(3))
    if mtype is MsgType.FORCE_CMD:
        return ForceCmdMsg(seq, t_us, f(3))
    if mtype is MsgType.TORQUE_CMD:
        return TorqueCmdMsg(seq, t_us, f(6))
    small = lambda: int(rng.integers(0, 200))
    return TaskEventMsg(seq, t_us, int(rng.integers(0, 2**16)), small(),
                        small(), small(), small(), small(), small())


def test_declared_byte_lengths():
    assert WIRE_SIZES[MsgType.LEADER_STATE] == 72
    assert WIRE_SIZES[MsgType.FOLLOWER_STATE] == 160
    assert WIRE_SIZES[MsgType.FORCE_CMD] == 40
    assert WIRE_SIZES[MsgType.TORQUE_CMD] == 64
    assert WIRE_SIZES[MsgType.TASK_EVENT] == 24


def test_zero_leader_message_layout():
    msg = LeaderStateMsg(0, 0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), False)
    data = encode(msg)
    assert len(data) == 72
    assert data[0] == 0x48 and data[1] == 0x4C
    assert data[2] == 1  # version
    assert data[3] == 1  # type


@pytest.mark.parametrize("mtype", list(MsgType))
def test_round_trip_randomized(mtype):
    rng = np.random.default_rng(int(mtype))
    for _ in range(200):
        msg = random_message(mtype, rng)
        out = decode(encode(msg))
        assert type(out) is type(msg)
        assert out == msg


def test_encode_is_deterministic():
    rng = np.random.default_rng(0)
    msg = random_message(MsgType.FOLLOWER_STATE, rng)
    assert encode(msg) == encode(msg)


def test_truncated_rejected():
    with pytest.raises(MalformedDatagram) as e:
        decode(b"\x48\x4c\x01\x01\x00\x00")
    assert e.value.reason == "too_short"


def test_bad_magic_rejected():
    data = bytearray(encode(ForceCmdMsg(1, 2, (0.0, 0.0, 0.0))))
    data[0] = 0x00
    with pytest.raises(MalformedDatagram) as e:
        decode(bytes(data))
    assert e.value.reason == "bad_magic"


def test_bad_version_rejected():
    data = bytearray(encode(ForceCmdMsg(1, 2, (0.0, 0.0, 0.0))))
    data[2] = 9
    with pytest.raises(MalformedDatagram) as e:
        decode(bytes(data))
    assert e.value.reason == "bad_version"


def test_unknown_type_rejected():
    data = bytearray(encode(ForceCmdMsg(1, 2, (0.0, 0.0, 0.0))))
    data[3] = 77
    with pytest.raises(MalformedDatagram) as e:
        decode(bytes(data))
    assert e.value.reason == "bad_type"


def test_wrong_length_rejected():
    data = encode(ForceCmdMsg(1, 2, (0.0, 0.0, 0.0))) + b"\x00"
    with pytest.raises(MalformedDatagram) as e:
        decode(data)
    assert e.value.reason == "bad_length"


def test_sequence_tracker_stale_and_duplicate():
    tr = SequenceTracker()
    mk = lambda seq: ForceCmdMsg(seq, 0, (0.0, 0.0, 0.0))
    assert tr.accept("ctrl", mk(7))
    assert not tr.accept("ctrl", mk(5))   # stale
    assert not tr.accept("ctrl", mk(7))   # duplicate
    assert tr.accept("ctrl", mk(9))       # gap tolerated


def test_sequence_tracker_keys_by_peer_and_type():
    tr = SequenceTracker()
    assert tr.accept("a", ForceCmdMsg(5, 0, (0.0, 0.0, 0.0)))
    assert tr.accept("b", ForceCmdMsg(5, 0, (0.0, 0.0, 0.0)))
    assert tr.accept("a", TorqueCmdMsg(5, 0, (0.0,) * 6))


def test_link_immediate_delivery_without_impairment():
    link = ImpairedLink(LinkModel())
    link.submit(b"x", now=0.0)
    assert link.poll(0.0) == [b"x"]


def test_link_base_latency_gates_delivery():
    link = ImpairedLink(LinkModel(base_latency=0.020))
    link.submit(b"x", now=0.0)
    assert link.poll(0.019) == []
    assert link.poll(0.020) == [b"x"]


def test_link_full_drop_delivers_nothing():
    link = ImpairedLink(LinkModel(drop_prob=1.0, seed=3))
    for i in range(100):
        link.submit(bytes([i]), now=i * 0.001)
    assert link.poll(10.0) == []
    assert link.dropped == 100


def test_link_jitter_reorders_but_tracker_filters():
    model = LinkModel(base_latency=0.020, jitter=0.010, seed=12)
    link = ImpairedLink(model, label="reorder")
    n = 500
    for i in range(n):
        link.submit(encode(ForceCmdMsg(i, i, (0.0, 0.0, 0.0))), now=i * 0.002)
    received = link.poll(10.0)
    assert len(received) == n
    seqs = [decode(d).seq for d in received]
    assert seqs != sorted(seqs)  # jitter produced at least one reorder
    tr = SequenceTracker()
    consumed = [s for s, d in zip(seqs, received) if tr.accept("peer", decode(d))]
    assert consumed == sorted(consumed)
    assert all(b > a for a, b in zip(consumed, consumed[1:]))


def test_link_determinism_same_seed():
    def run():
        link = ImpairedLink(LinkModel(base_latency=0.01, jitter=0.005,
                                      drop_prob=0.3, seed=99), label="det")
        for i in range(200):
            link.submit(bytes([i % 256]), now=i * 0.002)
        return link.poll(5.0), link.dropped

    a, da = run()
    b, db = run()
    assert a == b and da == db


def test_rng_matches_reference_vectors():
    # first outputs of xoshiro256** seeded via splitmix64, verified against
    # the authors' C reference implementation
    expected = {
        0: [11091344671253066420, 13793997310169335082, 1900383378846508768],
        42: [1546998764402558742, 6990951692964543102, 12544586762248559009],
        0xDEADBEEFCAFEF00D: [11399401986271211195, 1585385652154531860,
                             10005412245774160782],
    }
    for seed, outs in expected.items():
        g = Xoshiro256StarStar(seed)
        assert [g.next_u64() for _ in range(3)] == outs


def test_rng_shuffle_is_permutation_and_deterministic():
    g1 = Xoshiro256StarStar.for_stream(7, "schedule")
    g2 = Xoshiro256StarStar.for_stream(7, "schedule")
    items1 = list(range(10))
    items2 = list(range(10))
    g1.shuffle(items1)
    g2.shuffle(items2)
    assert items1 == items2
    assert sorted(items1) == list(range(10))
    g3 = Xoshiro256StarStar.for_stream(8, "schedule")
    items3 = list(range(10))
    g3.shuffle(items3)
    assert items3 != items1  # different seed, different order
