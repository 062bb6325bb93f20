import json
import threading

import pytest
from hypothesis import given, strategies as st

from gbfs_od.feed import (
    CorruptRecord, FatalConfigError, FeedConfig, MalformedJson, MissingField, SnapshotStore,
    load_feed_configs, parse_free_bike_status, poll_loop, snapshot_to_wire,
)
from gbfs_od.model import DuplicateVehicleId, SchemaViolation, Snapshot

from conftest import snap

SAMPLE = (b'{"last_updated": 1582528501, "ttl": 300, "data": {"bikes": ['
          b'{"bike_id":8982,"lat":38.8962,"lon":-76.9592,"is_reserved":0,"is_disabled":0},'
          b'{"bike_id":9408,"lat":38.8797,"lon":-77.0100,"is_reserved":0, "is_disabled":0}]}}')


def test_parse_sample_payload():
    s = parse_free_bike_status(SAMPLE, "v")
    assert s == Snapshot("v", 1582528501, 300, ["8982", "9408"], [38.8962, 38.8797],
                         [-76.9592, -77.0100], [0, 0], [0, 0])


def test_parse_empty_fleet():
    s = parse_free_bike_status('{"last_updated":1,"ttl":0,"data":{"bikes":[]}}', "v")
    assert len(s) == 0 and s.captured_at == 1


def test_parse_duplicate_id():
    raw = ('{"last_updated":5,"ttl":0,"data":{"bikes":[{"bike_id":"a","lat":1,"lon":1},'
           '{"bike_id":"a","lat":2,"lon":2}]}}')
    with pytest.raises(DuplicateVehicleId):
        parse_free_bike_status(raw, "v")


@pytest.mark.parametrize("raw, exc", [
    (b"{not json", MalformedJson),
    (b"\xff\xfe", MalformedJson),
    (b"[]", MalformedJson),
    (b'{"ttl":0,"data":{"bikes":[]}}', MissingField),
    (b'{"last_updated":1,"data":{"bikes":[]}}', MissingField),
    (b'{"last_updated":1,"ttl":0,"data":{}}', MissingField),
    (b'{"last_updated":1,"ttl":0,"data":{"bikes":[{"lat":1,"lon":1}]}}', MissingField),
    (b'{"last_updated":1,"ttl":0,"data":{"bikes":[{"bike_id":"a","lat":91,"lon":1}]}}', SchemaViolation),
    (b'{"last_updated":1,"ttl":0,"data":{"bikes":[{"bike_id":true,"lat":1,"lon":1}]}}', SchemaViolation),
    (b'{"last_updated":1,"ttl":0,"data":{"bikes":[{"bike_id":"a","lat":1,"lon":1,"is_disabled":2}]}}',
     SchemaViolation),
])
def test_parse_errors(raw, exc):
    with pytest.raises(exc):
        parse_free_bike_status(raw, "v")


def test_missing_field_names_path():
    with pytest.raises(MissingField) as e:
        parse_free_bike_status(b'{"last_updated":1,"ttl":0,"data":{"bikes":[{"lat":1,"lon":1}]}}', "v")
    assert "bike_id" in str(e.value)


def test_flags_default_and_booleans():
    s = parse_free_bike_status(
        '{"last_updated":1,"ttl":0,"data":{"bikes":[{"bike_id":"a","lat":1,"lon":1,"is_disabled":true}]}}', "v")
    assert s.records[0].is_disabled == 1 and s.records[0].is_reserved == 0


ids = st.text(st.characters(codec="utf-8", exclude_categories=["Cs"]), min_size=1, max_size=12)
record = st.tuples(st.floats(-90, 90), st.floats(-180, 180), st.integers(0, 1), st.integers(0, 1))


@st.composite
def snapshots(draw):
    rows = draw(st.dictionaries(ids, record, max_size=15))
    return Snapshot(draw(st.sampled_from(["a", "lime", "v-1"])), draw(st.integers(1, 2**40)),
                    draw(st.integers(0, 3600)), list(rows), [r[0] for r in rows.values()],
                    [r[1] for r in rows.values()], [r[2] for r in rows.values()],
                    [r[3] for r in rows.values()])


@given(snapshots())
def test_wire_roundtrip(s):
    raw = json.dumps(snapshot_to_wire(s))
    assert parse_free_bike_status(raw, s.feed_id) == s


def test_poll_interval():
    assert FeedConfig("a", "http://x", declared_ttl=0).poll_interval == 60
    assert FeedConfig("a", "http://x", declared_ttl=30).poll_interval == 60
    assert FeedConfig("a", "http://x", declared_ttl=300).poll_interval == 300


# store -----------------------------------------------------------------------

def test_store_order_range_dedup(tmp_store):
    s1, s2 = snap(100, [("a", 1.0, 1.0)]), snap(200, [("a", 1.5, 1.0)])
    assert tmp_store.append(s1) and tmp_store.append(s2)
    assert not tmp_store.append(s1)
    assert not tmp_store.append(snap(200, []))
    assert tmp_store.load("f", 0, 300) == [s1, s2]
    assert tmp_store.load("f", 150, 300) == [s2]
    assert tmp_store.load("f") == [s1, s2]
    assert tmp_store.feeds() == ["f"]
    with pytest.raises(ValueError):
        tmp_store.load("f", 300, 0)


def test_store_reopen_keeps_dedup_state(tmp_store):
    tmp_store.append(snap(100, []))
    again = SnapshotStore(tmp_store.root)
    assert not again.append(snap(100, []))
    assert again.append(snap(160, []))


def test_store_day_files(tmp_store):
    day = 86400
    tmp_store.extend([snap(day * 10 + 5, []), snap(day * 11 + 5, [])])
    files = sorted(p.name for p in (tmp_store.root / "f").iterdir())
    assert files == ["1970-01-11.ndjson", "1970-01-12.ndjson"]
    assert [s.captured_at for s in tmp_store.load("f", day * 11)] == [day * 11 + 5]


def test_partial_trailing_line_skipped_then_repaired(tmp_store):
    s1 = snap(100, [("a", 1.0, 1.0)])
    tmp_store.append(s1)
    path = next((tmp_store.root / "f").iterdir())
    with open(path, "ab") as fh:
        fh.write(b'{"feed_id":"f","captured_at":160,"last_upd')
    assert tmp_store.load("f") == [s1]
    fresh = SnapshotStore(tmp_store.root)
    s2 = snap(160, [])
    assert fresh.append(s2)
    assert fresh.load("f") == [s1, s2]


def test_corrupt_middle_line_raises(tmp_store):
    tmp_store.extend([snap(100, []), snap(160, [])])
    path = next((tmp_store.root / "f").iterdir())
    lines = path.read_bytes().split(b"\n")
    path.write_bytes(lines[0] + b"\ngarbage\n" + lines[1] + b"\n")
    with pytest.raises(CorruptRecord) as e:
        tmp_store.load("f")
    assert e.value.offset == len(lines[0]) + 1


def test_concurrent_feeds(tmp_store):
    def run(feed):
        for t in range(1, 50):
            tmp_store.append(snap(t * 60, [("x", 1.0, 1.0)], feed_id=feed))

    threads = [threading.Thread(target=run, args=(f"feed{i}",)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(len(tmp_store.load(f"feed{i}")) == 49 for i in range(4))


# polling -------------------------------------------------------------------------

def _payload(t):
    return json.dumps({"last_updated": t, "ttl": 0,
                       "data": {"bikes": [{"bike_id": "a", "lat": 1, "lon": 1}]}}).encode()


def test_poll_loop_dedups_and_retries(tmp_store):
    stop = threading.Event()
    script = [_payload(100), _payload(100), OSError("boom"), _payload(200), b"{bad", b"{bad"]
    calls = []

    def fetch(cfg):
        calls.append(1)
        item = script[len(calls) - 1]
        if len(calls) == len(script):
            stop.set()
        if isinstance(item, Exception):
            raise item
        return item

    waits = []
    stop.wait = lambda timeout=None: (waits.append(timeout), stop.is_set())[1]  # no sleeping
    cfg = FeedConfig("f", "http://example.invalid/fbs.json", max_retries=1)
    stats = poll_loop(cfg, tmp_store, stop, fetch=fetch, retry_delay=0)
    assert stats == {"polls": 4, "stored": 2, "duplicates": 1, "failed": 1}
    assert [s.captured_at for s in tmp_store.load("f")] == [100, 200]
    assert 60 in [round(w) for w in waits if w]


def test_poll_loop_bad_url(tmp_store):
    with pytest.raises(FatalConfigError):
        poll_loop(FeedConfig("f", "ftp://nope"), tmp_store, threading.Event())


def test_poll_loop_file_url(tmp_store, tmp_path):
    p = tmp_path / "fbs.json"
    p.write_bytes(_payload(500))
    stop = threading.Event()
    stop.wait = lambda timeout=None: (stop.set(), True)[1]
    stats = poll_loop(FeedConfig("f", p.as_uri()), tmp_store, stop)
    assert stats["stored"] == 1


def test_load_feed_configs(tmp_path):
    p = tmp_path / "feeds.ini"
    p.write_text("[feed lime]\nurl = https://x/fbs.json\nttl = 300\nheader.Authorization = Bearer t\n"
                 "[feed spin]\nurl = https://y/fbs.json\n")
    a, b = load_feed_configs(p)
    assert (a.feed_id, a.poll_interval, a.headers) == ("lime", 300, {"Authorization": "Bearer t"})
    assert b.poll_interval == 60
    p.write_text("[feed x]\nurl = notaurl\n")
    with pytest.raises(FatalConfigError):
        load_feed_configs(p)
    p.write_text("[other]\n")
    with pytest.raises(FatalConfigError):
        load_feed_configs(p)
