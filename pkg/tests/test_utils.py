import math
from concurrent.futures import ThreadPoolExecutor

import pydantic
import pytest

from app.services.sweep import sweep_service
from app.utils import cache_service, csv_writer
from app.utils.cache_service import BoundedCache
from app.utils.error_handler import (
    ConvergenceError,
    DegenerateParametersError,
    DomainError,
    EnumerationGuardError,
    ValidationError,
    handle_app_error,
    handle_model_error,
    handle_unexpected_error,
)
from app.utils.validators import ChannelParams, CsvRow, SweepConfig, split_floats


# ─── Validators ───────────────────────────────────────────

def test_sweep_config_parses_lists_and_ranges():
    config = SweepConfig(p="0.1, 0.2", L="2..4,7", quantities="lower,genie")
    assert config.p == [0.1, 0.2]
    assert config.L == [2, 3, 4, 7]
    assert config.quantities == ["lower", "genie"]
    assert [point.p_i for point in config.grid()] == [0.1, 0.2]


def test_sweep_config_defaults():
    config = SweepConfig()
    assert config.L == [2]
    assert config.tol == 1e-9
    assert config.bitsym and not config.pivot
    assert config.alpha == "0.5"
    with pytest.raises(ValidationError):
        config.grid()


def test_sweep_config_product_grid():
    config = SweepConfig(pi="0.1,0.2", pd="0.3")
    assert [(pt.p_i, pt.p_d) for pt in config.grid()] == [(0.1, 0.3), (0.2, 0.3)]


@pytest.mark.parametrize("kwargs", [
    {"p": "0.1", "pi": "0.2", "pd": "0.2"},
    {"pi": "0.2"},
    {"p": "-0.1"},
    {"L": "0"},
    {"quantities": "lower,capacity"},
    {"alpha": "1.5"},
    {"samples": 1},
    {"tol": 0.0},
])
def test_sweep_config_rejects(kwargs):
    with pytest.raises(pydantic.ValidationError):
        SweepConfig(**kwargs)


def test_alpha_opt_is_accepted():
    assert SweepConfig(alpha="opt").alpha == "opt"


def test_split_floats():
    assert split_floats("0.1,,0.3 ") == [0.1, 0.3]
    assert split_floats(0.5) == [0.5]
    assert split_floats(None) is None


def test_channel_params():
    params = ChannelParams(p_i=0.0, p_d=1.0)
    assert not params.is_symmetric
    clamped = params.interior()
    assert clamped.p_i == 1e-15 and clamped.p_d == 1.0 - 1e-9
    with pytest.raises(DegenerateParametersError):
        ChannelParams(p_i=0.0, p_d=0.0).require_nondegenerate()
    with pytest.raises(pydantic.ValidationError):
        ChannelParams(p_i=1.2, p_d=0.1)


def test_csv_row_requires_finite_value():
    with pytest.raises(pydantic.ValidationError):
        CsvRow(p_i=0.1, p_d=0.1, quantity="lower", value=math.nan, tol=1e-9)


# ─── CSV Writer ───────────────────────────────────────────

def _row(p, quantity, value, L=None):
    return CsvRow(p_i=p, p_d=p, quantity=quantity, L=L, value=value, tol=1e-9)


def test_fmt():
    assert csv_writer.fmt(0.123456789012345) == "0.123456789"
    assert csv_writer.fmt(1.0) == "1"
    assert csv_writer.fmt(True) == "true"
    assert csv_writer.fmt(None) == ""
    assert csv_writer.fmt(3) == "3"


def test_long_layout_is_sorted(capsys):
    rows = [_row(0.2, "genie", 0.5), _row(0.1, "upper_L", 0.8, L=3), _row(0.1, "upper_L", 0.9, L=2),
            _row(0.1, "lower", 0.7)]
    assert csv_writer.write_rows(rows) == 4
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(csv_writer.LONG_COLUMNS)
    assert [line.split(",")[2:4] for line in lines[1:]] == [
        ["lower", ""], ["upper_L", "2"], ["upper_L", "3"], ["genie", ""]]


def test_pivot_layout(capsys):
    rows = [_row(0.1, "lower", 0.7), _row(0.1, "upper_L", 0.8, L=2), _row(0.2, "lower", 0.6)]
    assert csv_writer.write_rows(rows, pivot=True) == 2
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["p_i,p_d,lower,upper_L2", "0.1,0.1,0.7,0.8", "0.2,0.2,0.6,"]


def test_write_records_to_file(tmp_path):
    target = tmp_path / "records.csv"
    assert csv_writer.write_records([{"a": 1, "b": 0.5}], ["b", "a"], str(target)) == 1
    assert target.read_text() == "b,a\n0.5,1\n"


# ─── Cache ────────────────────────────────────────────────

def test_bounded_cache_evicts_oldest():
    cache = BoundedCache(max_keys=2)
    cache.set("a", 1)
    cache.set("b", 2)
    cache.set("c", 3)
    assert cache.keys() == ["b", "c"]
    assert cache.get("a") is None
    assert cache.get("c") == 3
    assert (cache.hits, cache.misses) == (1, 1)


def test_bounded_cache_builds_once():
    cache = BoundedCache()
    calls = []
    build = lambda: calls.append(1) or "value"  # noqa: E731
    assert cache.get_or_build("k", build) == "value"
    assert cache.get_or_build("k", build) == "value"
    assert len(calls) == 1
    cache.flush()
    assert cache.size == 0 and cache.hits == 0


def test_bounded_cache_size_under_concurrent_builds():
    cache = BoundedCache(max_keys=8)
    keys = [f"k{i % 12}" for i in range(200)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        values = list(pool.map(lambda key: cache.get_or_build(key, lambda: key.upper()), keys))
    assert values == [key.upper() for key in keys]
    assert cache.size == len(cache.keys()) <= 8


def test_cache_stats(fresh_caches):
    assert cache_service.law_table(0.1, 0.2, 3, lambda: "table") == "table"
    assert cache_service.law_table(0.1, 0.2, 3, lambda: "other") == "table"
    stats = cache_service.get_stats()
    assert stats["laws"] == {"size": 1, "hits": 1, "misses": 1}
    assert stats["problems"]["size"] == 0


# ─── Error Handling ───────────────────────────────────────

@pytest.mark.parametrize("exc,code", [
    (ValidationError("bad flag"), 2),
    (DomainError("bad alpha"), 2),
    (EnumerationGuardError("L", 13, 12), 2),
    (DegenerateParametersError(0.0, 0.0), 2),
    (ConvergenceError("barrier solver", "gap 1e-3"), 1),
])
def test_exit_codes(exc, code):
    assert handle_app_error(exc) == code


def test_model_and_unexpected_errors(capsys):
    with pytest.raises(pydantic.ValidationError) as info:
        SweepConfig(tol=-1.0)
    assert handle_model_error(info.value) == 2
    assert handle_unexpected_error(RuntimeError("boom")) == 1
    assert "RuntimeError: boom" in capsys.readouterr().err


# ─── Grid Orchestration ───────────────────────────────────

def test_run_grid_output_is_sorted_regardless_of_scheduling():
    config = SweepConfig(p="0.3,0.1,0.2", threads=3)

    def task(point):
        return [_row(point.p_i, "genie", 1.0 - point.p_i), _row(point.p_i, "lower", 0.5)]

    rows = sweep_service.run_grid(config, ["lower", "genie"], task=task)
    assert [(row.p_i, row.quantity) for row in rows] == [
        (0.1, "lower"), (0.1, "genie"), (0.2, "lower"), (0.2, "genie"), (0.3, "lower"), (0.3, "genie")]


def test_expansion_rows_skip_asymmetric_points():
    config = SweepConfig(pi="0.1", pd="0.2")
    assert sweep_service.expansion_rows(config.grid()[0], config) == []


def test_trivial_rows_skip_short_windows():
    config = SweepConfig(p="0.3", L="1,2")
    rows = sweep_service.trivial_rows(config.grid()[0], config)
    assert [row.L for row in rows] == [2]
    assert rows[0].value == pytest.approx(1.0, abs=1e-12)


def test_resolve_alpha():
    point = ChannelParams(p_i=0.1, p_d=0.1)
    assert sweep_service.resolve_alpha(point, SweepConfig(alpha="0.3")) == 0.3
    assert 0.0 < sweep_service.resolve_alpha(point, SweepConfig(alpha="opt")) < 1.0
