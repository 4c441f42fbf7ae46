import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delta_lab.errors import ValidationError
from delta_lab.parallel import ENV_THREADS, ordered_map, resolve_workers


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(), max_size=60), st.integers(1, 8))
def test_ordered_map_preserves_order(items, workers):
    assert list(ordered_map(lambda v: v * 3, items, workers)) == [v * 3 for v in items]


def test_ordered_map_with_uneven_durations():
    def slow(v):
        time.sleep(0.002 * (v % 3))
        return v
    assert list(ordered_map(slow, range(40), 4)) == list(range(40))


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "5")
    assert resolve_workers(None) == 5
    assert resolve_workers(2) == 2
    monkeypatch.delenv(ENV_THREADS)
    assert resolve_workers(None) >= 1
    with pytest.raises(ValidationError):
        resolve_workers(0)


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "many")
    with pytest.raises(ValidationError):
        resolve_workers(None)
