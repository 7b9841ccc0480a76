from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from schedarena.platform import (
    DataNotReady,
    Overlap,
    OverlappingSlots,
    PlatformError,
    PowerModel,
    Processor,
    ScheduledSlot,
    energy_consumed,
    find_gaps,
    insert_slot,
    pick_level,
    platform_from_dict,
    platform_to_dict,
)
from schedarena.timebase import INF
from schedarena.workload import Task


def slots(*pairs):
    return [ScheduledSlot(f"s{i}", a, b, b - a) for i, (a, b) in enumerate(pairs)]


TABLE1_BASELINE = slots((0, 1), (2, 3), (5, 7), (7, 10))


def spans(gaps):
    return [(g.start, g.end) for g in gaps]


def test_gaps_of_four_tasks_baseline():
    assert spans(find_gaps(TABLE1_BASELINE)) == [(1, 2), (3, 5), (10, INF)]


def test_gaps_edge_cases():
    assert spans(find_gaps([])) == [(0, INF)]
    assert spans(find_gaps(slots((0, 2), (2, 4)))) == [(4, INF)]
    with pytest.raises(OverlappingSlots):
        find_gaps(slots((0, 2), (1, 3)))


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(1, 5)), max_size=8))
def test_slots_and_gaps_tile_the_line(raw):
    taken = []
    for a, d in raw:
        if all(a + d <= s or a >= e for s, e in taken):
            taken.append((a, a + d))
    ss = slots(*taken)
    pieces = sorted([(s.start, s.finish) for s in ss] + spans(find_gaps(ss)))
    assert pieces[0][0] == 0
    for (a, b), (c, _) in zip(pieces, pieces[1:]):
        assert b == c
    assert pieces[-1][1] == INF


def test_insert_slot():
    t = Task("x", 2)
    [s] = insert_slot([], t, 0, 2)
    assert (s.start, s.finish) == (0, 2)
    out = insert_slot(TABLE1_BASELINE, Task("n4", 3, 1, data_ready=1), 1, 1)
    assert [(s.start, s.finish) for s in out][:2] == [(0, 1), (1, 2)]
    assert set(TABLE1_BASELINE) <= set(out)
    with pytest.raises(Overlap):
        insert_slot(TABLE1_BASELINE, Task("y", 2), Fraction(3, 2), Fraction(3, 2))
    with pytest.raises(DataNotReady):
        insert_slot([], Task("z", 1, data_ready=4), 3, 1)


def test_energy_examples():
    assert energy_consumed(PowerModel(2, 8, 3), [], [10]) == 20
    full = ScheduledSlot("t", 0, 5, 5, 1)
    assert energy_consumed(PowerModel(2, 8, 3), [full]) == 50
    half = ScheduledSlot("t", 0, 10, 5, Fraction(1, 2))
    assert energy_consumed(PowerModel(2, 8, 3), [half]) == 30


def test_energy_grows_with_frequency_without_static_power():
    # same work, static power off: only the dynamic term is left, k * W * f**2
    pm = PowerModel(0, 1, 3)
    grid = [Fraction(i, 20) for i in range(1, 21)]
    e = [energy_consumed(pm, [ScheduledSlot("t", 0, 4 / f, 4, f)]) for f in grid]
    assert e == sorted(e)


def test_pick_level():
    assert pick_level((Fraction(1, 2), Fraction(3, 4), 1), Fraction(3, 5)) == Fraction(3, 4)
    assert pick_level(None, Fraction(3, 5)) == Fraction(3, 5)
    assert pick_level((Fraction(1, 2), 1), 2) == 1


def test_processor_checks():
    with pytest.raises(PlatformError):
        Processor("p", 0)
    with pytest.raises(PlatformError):
        Processor("p", 1, (0.5, 0.25, 1.0))
    with pytest.raises(PlatformError):
        Processor("p", 1, (0.5, 0.75))
    assert Processor("p", 2).duration(4) == 2


def test_platform_round_trip():
    d = {
        "processors": [{"id": "p0", "speedFactor": 1.5, "frequencyLevels": [0.5, 1.0]}],
        "hosts": [{"id": "h0", "vms": [{"id": "v0"}, {"id": "v1"}]}],
        "powerModel": {"static": 0.5, "dynamic": 2.0, "exponent": 3},
    }
    p = platform_from_dict(d)
    assert platform_from_dict(platform_to_dict(p)) == p
    assert p.processor("p0").speed_factor == Fraction(3, 2)
    assert [v.id for v in p.hosts[0].vms] == ["v0", "v1"]
