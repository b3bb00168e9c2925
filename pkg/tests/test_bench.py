import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hps_q1.bench import BenchRecord, break_even, detail_rows, run_cell, sweep, table_rows
from hps_q1.errors import ResourceGuardError


@given(st.floats(1e-6, 1e3), st.floats(1e-7, 1.0), st.floats(1e-7, 1.0))
def test_break_even_bracket(build, apply, baseline):
    b = break_even(build, apply, baseline)
    gain = baseline - apply
    if gain <= 0:
        assert b is None
    else:
        assert b >= 1
        assert b * gain >= build
        assert b == 1 or (b - 1) * gain < build


def test_break_even_examples():
    assert break_even(1.0, 0.5, 0.5) is None
    assert break_even(1.0, 0.25, 0.5) == 4
    assert break_even(1.0, 0.3, 0.5) == math.ceil(1.0 / 0.2)


def test_guard():
    with pytest.raises(ResourceGuardError):
        run_cell(32, 32, memory_budget=2**20)
    res = sweep((4, 32), (4,), memory_budget=2**20 * 0.5)
    assert isinstance(res[(4, 4)], BenchRecord)
    assert isinstance(res[(32, 4)], str)
    rows = table_rows(res, (4, 32), (4,))
    assert rows[0] == ["subdomains", "speedup_4x4", "break_even_4x4"]
    assert rows[2][1:] == ["guard", "guard"]


def test_small_cell_record():
    r = run_cell(4, 2, solves=5)
    assert r.speedup > 0 and r.build > 0
    assert r.break_even is None or r.break_even >= 1
    rows = detail_rows({(4, 2): r})
    assert rows[1][:2] == ["4", "2"]
    assert len(rows[0]) == len(rows[1])
