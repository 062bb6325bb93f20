import pytest
from hypothesis import given, strategies as st

from gbfs_od.idregen import InvalidInterval, regen_dynamic, regen_resetting
from gbfs_od.model import NonMonotonicStream

from conftest import snap


def _presence(pattern, t0=60):
    """Stream from {vehicle: set of snapshot indices where it is listed}."""
    n = max(max(v) for v in pattern.values()) + 1
    return [snap(t0 + 60 * k, [(vid, 38.9 + i * 1e-3, -77.0) for i, (vid, ks) in
                               enumerate(sorted(pattern.items())) if k in ks]) for k in range(n)]


def test_resetting_new_id_after_gap():
    # present t=0..120, absent 180..240, present 300..420
    stream = _presence({"A": {0, 1, 2, 5, 6, 7}}, t0=60)
    out = regen_resetting(stream, seed=1)
    ids = [s.vehicle_ids[0] for s in out if len(s)]
    assert len(set(ids[:3])) == 1 and len(set(ids[3:])) == 1 and ids[0] != ids[3]


def test_resetting_stable_without_gaps():
    out = regen_resetting(_presence({"A": set(range(6)), "B": set(range(6))}))
    assert len({s.vehicle_ids for s in out}) == 1


def test_empty_streams():
    assert regen_resetting([]) == [] and regen_dynamic([], 300) == []


def test_dynamic_two_epochs():
    stream = [snap(3000 + 60 * k, [("A", 38.9, -77.0)]) for k in range(10)]
    out = regen_dynamic(stream, 300, seed=3)
    ids = [s.vehicle_ids[0] for s in out]
    assert len(set(ids)) == 2 and len(set(ids[:5])) == 1 and len(set(ids[5:])) == 1


def test_dynamic_long_interval_is_stable():
    stream = [snap(3000 + 60 * k, [("A", 38.9, -77.0)]) for k in range(10)]
    assert len({s.vehicle_ids for s in regen_dynamic(stream, 10**6)}) == 1


def test_errors():
    with pytest.raises(InvalidInterval):
        regen_dynamic([], 0)
    with pytest.raises(NonMonotonicStream):
        regen_resetting([snap(120, []), snap(60, [])])
    with pytest.raises(NonMonotonicStream):
        regen_dynamic([snap(120, []), snap(120, [])], 300)


presence = st.dictionaries(st.sampled_from("ABCDEFGH"), st.sets(st.integers(0, 14), min_size=1),
                           min_size=1)


@given(presence, st.integers(0, 5), st.sampled_from([120, 300, 900]))
def test_fidelity_and_injectivity(pattern, seed, interval):
    stream = _presence(pattern)
    for out in (regen_resetting(stream, seed), regen_dynamic(stream, interval, seed)):
        assert len(out) == len(stream)
        for a, b in zip(stream, out):
            assert (a.captured_at, list(a.lat), list(a.lon)) == (b.captured_at, list(b.lat), list(b.lon))
            assert len(set(b.vehicle_ids)) == len(b)
        # an output id never stands for two different input vehicles
        owner = {}
        for a, b in zip(stream, out):
            for src, dst in zip(a.vehicle_ids, b.vehicle_ids):
                assert owner.setdefault(dst, src) == src


@given(presence, st.integers(0, 5))
def test_resetting_runs(pattern, seed):
    stream = _presence(pattern)
    out = regen_resetting(stream, seed)
    for vid, ks in pattern.items():
        mapped = {}
        for k in sorted(ks):
            i = stream[k].vehicle_ids.index(vid)
            mapped[k] = out[k].vehicle_ids[i]
        for k in sorted(ks):
            if k - 1 in ks:
                assert mapped[k] == mapped[k - 1]
            elif k - 1 in mapped or any(j < k for j in ks):
                assert mapped[k] not in [mapped[j] for j in ks if j < k]
