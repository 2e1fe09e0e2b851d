import sqlite3

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from benchmarks.benchmark import DOMAIN, make_benchmark
from fem.dc_solver import DCConfig
from fem.exponent import w1p_error_norm
from fem.mesh import NodalField, build_uniform_rect_mesh
from fem.quadrature import get_rule
from study import runner
from study.export import FITS_FILE, PLOT_FILE, RECORDS_FILE, emit, read_records
from study.fitting import fit_rate
from study.runner import StudyConfig, StudyRecord, fit_all, run_study, solve_cell
from utils.analytics import StudyAnalytics
from utils.cache import StudyCache
from utils.errors import ConvergenceError, InvalidArgumentError, StudyError

PUBLISHED_GRIDS = (20, 40, 60, 80, 100, 120, 140)
PUBLISHED_ERRORS = {
    0.1: (0.0200, 0.0100, 0.0067, 0.0050, 0.0040, 0.0033, 0.0029),
    0.5: (0.1707, 0.0848, 0.0567, 0.0427, 0.0342, 0.0286, 0.0245),
    1.0: (0.6704, 0.3341, 0.2244, 0.1692, 0.1357, 0.1135, 0.0973),
}
PUBLISHED_FITS = {0.1: (0.9984, 0.1992), 0.5: (0.9961, 1.6842), 1.0: (0.9900, 6.52289)}


def published_records(b):
    return [StudyRecord(b, side, side * side, error, 0, 0.0)
            for side, error in zip(PUBLISHED_GRIDS, PUBLISHED_ERRORS[b])]


@pytest.fixture(scope="module")
def small_study():
    config = StudyConfig(b_values=(0.0, 0.5), grid_sides=(5, 9, 17), dc=DCConfig(tol=1e-8))
    analytics = StudyAnalytics()
    return config, run_study(config, analytics=analytics), analytics


@pytest.mark.parametrize("b", sorted(PUBLISHED_FITS))
def test_fit_reproduces_published_rates(b):
    alpha, C = PUBLISHED_FITS[b]
    fit = fit_rate(published_records(b), length_scale=2.0, p1=make_benchmark(b).p1)
    assert fit.alpha == pytest.approx(alpha, abs=0.002)
    assert fit.C == pytest.approx(C, rel=0.01)
    assert fit.points == 7
    assert fit.satisfies_rate_floor()


def test_fit_with_unit_length_scale():
    records = [StudyRecord(0.3, side, side * side, 7.0 / side, 1, 0.0) for side in (10, 20, 40)]
    fit = fit_rate(records)
    assert fit.alpha == pytest.approx(1.0, rel=1e-12)
    assert fit.C == pytest.approx(7.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.3, 2.5), C=st.floats(1e-3, 1e3), scale=st.floats(0.5, 4.0))
def test_fit_recovers_exact_power_law(alpha, C, scale):
    records = [StudyRecord(0.5, side, side * side, C * (scale / side) ** alpha, 1, 0.0) for side in (10, 20, 40, 80)]
    fit = fit_rate(records, length_scale=scale)
    assert fit.alpha == pytest.approx(alpha, rel=1e-9)
    assert fit.C == pytest.approx(C, rel=1e-8)
    assert fit.ssr < 1e-18


def test_fit_rejects_unusable_input():
    records = published_records(0.5)
    with pytest.raises(StudyError):
        fit_rate(records[:2])
    with pytest.raises(StudyError):
        fit_rate(records, min_grid=130)
    with pytest.raises(StudyError):
        fit_rate(records[:3] + published_records(1.0)[:3])
    with pytest.raises(StudyError):
        fit_rate(records[:3] + [StudyRecord(0.5, 200, 40000, 0.0, 1, 0.0)])
    with pytest.raises(StudyError):
        fit_rate(records).satisfies_rate_floor()


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        StudyConfig(grid_sides=(20, 20))
    with pytest.raises(InvalidArgumentError):
        StudyConfig(b_values=(-1.0,))
    with pytest.raises(InvalidArgumentError):
        StudyConfig(quad_degree=7)
    with pytest.raises(InvalidArgumentError):
        StudyConfig(workers=0)


def test_config_from_settings_applies_overrides():
    values = {"B_VALUES": "0.1, 0.5", "GRIDS": "20,40", "TOL": "1e-6", "PLOT": "yes", "RHO": "1.2"}
    config = StudyConfig.from_settings(values, TOL=1e-9, OUT="elsewhere", WORKERS=None)
    assert config.b_values == (0.1, 0.5)
    assert config.grid_sides == (20, 40)
    assert config.dc.tol == 1e-9
    assert config.dc.rho == 1.2
    assert config.plot is True
    assert config.out_dir == "elsewhere"
    assert config.workers == 1
    with pytest.raises(InvalidArgumentError):
        StudyConfig.from_settings({"MAX_ITER": "many"})


def test_small_study_records(small_study):
    config, records, analytics = small_study
    assert [(r.b, r.grid_side) for r in records] == [(b, s) for b in (0.0, 0.5) for s in (5, 9, 17)]
    assert all(r.converged and not r.failed for r in records)
    assert all(r.dof == r.grid_side ** 2 for r in records)

    affine = [r.error for r in records if r.b == 0.0]
    assert max(affine) <= 1e-7
    errors = [r.error for r in records if r.b == 0.5]
    assert errors[0] > errors[1] > errors[2]

    stats = analytics.get_statistics()
    assert stats["total_cells"] == 6
    assert stats["failed_cells"] == 0


def test_fit_all_skips_the_affine_member(small_study):
    config, records, _ = small_study
    fits = fit_all(records, config)
    assert [fit.b for fit in fits] == [0.5]
    assert fits[0].length_scale == 2.0
    assert 0.5 < fits[0].alpha < 1.5


def test_emit_round_trip(tmp_path, small_study):
    config, records, _ = small_study
    written = emit(records, fit_all(records, config), tmp_path, plot=True)
    assert {path.name for path in written} == {RECORDS_FILE, FITS_FILE, PLOT_FILE}
    assert (tmp_path / PLOT_FILE).stat().st_size > 0

    rows = read_records(tmp_path / RECORDS_FILE)
    assert len(rows) == len(records)
    for row, record in zip(rows, records):
        assert row["b"] == record.b
        assert row["grid_side"] == record.grid_side
        assert row["error"] == record.error
        assert row["seconds"] == record.seconds


def test_emit_rejects_empty_input(tmp_path):
    with pytest.raises(StudyError):
        emit([], [], tmp_path)


def test_study_output_is_reproducible(tmp_path):
    outputs = []
    for workers in (1, 2):
        config = StudyConfig(b_values=(0.5, 1.0), grid_sides=(3, 5), dc=DCConfig(tol=1e-8), workers=workers)
        records = run_study(config)
        out = tmp_path / f"run{workers}"
        emit(records, [], out, include_timing=False)
        outputs.append((out / RECORDS_FILE).read_bytes())
    assert outputs[0] == outputs[1]


def test_failed_cell_is_flagged_and_study_continues(monkeypatch):
    original = runner.solve_cell

    def flaky(b, grid_side, dc_config, quad_degree):
        if grid_side == 5:
            raise ConvergenceError("conjugate gradient did not converge", 1e-3, 7)
        return original(b, grid_side, dc_config, quad_degree)

    monkeypatch.setattr(runner, "solve_cell", flaky)
    analytics = StudyAnalytics()
    records = run_study(StudyConfig(b_values=(0.0,), grid_sides=(3, 5, 7)), analytics=analytics)

    failed = [r for r in records if r.failed]
    assert [r.grid_side for r in failed] == [5]
    assert np.isnan(failed[0].error)
    assert "did not converge" in failed[0].message
    assert analytics.get_statistics()["failed_cells"] == 1
    assert fit_all(records, StudyConfig(b_values=(0.0,), grid_sides=(3, 5, 7))) == []


def test_cached_cells_are_not_recomputed(tmp_path, monkeypatch):
    cache = StudyCache(str(tmp_path / "cache.db"))
    config = StudyConfig(b_values=(0.5,), grid_sides=(3, 5, 7), dump_solutions=True)
    try:
        first = run_study(config, cache=cache)
        coefficients = cache.load_solution(0.5, 5, config.dc.fingerprint, config.quad_degree)

        def unexpected(*args):
            raise AssertionError("cell should come from the cache")

        monkeypatch.setattr(runner, "solve_cell", unexpected)
        second = run_study(config, cache=cache)
    finally:
        cache.close()
    assert [r.error for r in second] == [r.error for r in first]

    # ошибка, пересчитанная по сохраненным коэффициентам, совпадает с записанной
    case = make_benchmark(0.5)
    mesh = build_uniform_rect_mesh(DOMAIN[0], DOMAIN[1], 4)
    error = w1p_error_norm(NodalField(mesh, coefficients), case.exact_u, case.exact_gradient,
                           case.exponent, get_rule(config.quad_degree))
    assert error == pytest.approx(first[1].error, rel=0, abs=1e-12)


def test_changed_solver_settings_bypass_the_cache(tmp_path):
    cache = StudyCache(str(tmp_path / "cache.db"))
    capped = StudyConfig(b_values=(1.0,), grid_sides=(6,), dc=DCConfig(max_iter=3))
    full = StudyConfig(b_values=(1.0,), grid_sides=(6,), dc=DCConfig(max_iter=5000))
    try:
        [stale] = run_study(capped, cache=cache)
        [fresh] = run_study(full, cache=cache)
        [again] = run_study(capped, cache=cache)
    finally:
        cache.close()
    assert not stale.converged and stale.iters == 3
    assert fresh.converged and fresh.iters > 3
    assert again.iters == 3


def test_cache_errors_do_not_abort_the_study():
    class BrokenCache:
        def get_record(self, *args):
            raise sqlite3.OperationalError("database is locked")

        def save_record(self, *args):
            raise sqlite3.OperationalError("disk I/O error")

    records = run_study(StudyConfig(b_values=(0.0,), grid_sides=(3, 4)), cache=BrokenCache())
    assert all(r.converged and not r.failed for r in records)


def test_unexpected_solver_exception_is_flagged(monkeypatch):
    def exploding(b, grid_side, dc_config, quad_degree):
        raise FloatingPointError("overflow in power")

    monkeypatch.setattr(runner, "solve_cell", exploding)
    records = run_study(StudyConfig(b_values=(0.5, 1.0), grid_sides=(3, 5), workers=2))
    assert len(records) == 4
    assert all(r.failed and not r.converged for r in records)
    assert records[0].message.startswith("FloatingPointError")


def test_solve_cell_returns_coefficients():
    solution = solve_cell(0.0, 4, DCConfig(tol=1e-9))
    assert solution.coefficients.shape == (16,)
    assert solution.record.error <= 1e-7


@pytest.mark.slow
@pytest.mark.parametrize("b", [0.1, 0.5, 1.0])
@pytest.mark.parametrize("side", [20, 40, 60, 80])
def test_published_error_table(b, side):
    record = solve_cell(b, side, DCConfig(tol=1e-8)).record
    expected = PUBLISHED_ERRORS[b][PUBLISHED_GRIDS.index(side)]
    assert record.converged
    assert record.error == pytest.approx(expected, rel=0.10)


@pytest.mark.slow
def test_measured_rates_on_desk_scale_grids():
    config = StudyConfig(b_values=(0.1, 0.5, 1.0), grid_sides=(20, 40, 60, 80), workers=2)
    fits = fit_all(run_study(config), config)
    assert len(fits) == 3
    for fit in fits:
        assert fit.alpha == pytest.approx(1.0, abs=0.05)
        assert fit.satisfies_rate_floor()
