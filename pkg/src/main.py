import argparse
import sys

import numpy as np

from benchmarks.benchmark import DOMAIN, make_benchmark
from benchmarks.radial import (RadialCase, parse_radial_function, radial_U, radial_U_second,
                               radial_Z, regularity_integral)
from fem.dc_solver import DCConfig, DCSolver
from fem.exponent import w1p_error_norm
from fem.mesh import build_uniform_rect_mesh, interpolate, load_mesh
from fem.quadrature import DEFAULT_QUAD_DEGREE, get_rule
from study.export import emit
from study.runner import StudyConfig, fit_all, run_study
from utils.analytics import StudyAnalytics
from utils.cache import StudyCache
from utils.config import Settings, load_study_file
from utils.errors import PxLaplaceError
from utils.logger import AppLogger
from utils.monitor import PerformanceMonitor


class PxLaplaceApp:
    """Точка входа: подкоманды study, solve и radial."""

    def __init__(self, settings: Settings = None):
        self.settings = settings or Settings.from_env()
        self.logger = AppLogger("app")
        self.analytics = StudyAnalytics()
        self.monitor = PerformanceMonitor()

    def run_study(self, args) -> int:
        file_values = load_study_file(args.config) if args.config else {}
        config = StudyConfig.from_settings(
            file_values,
            B_VALUES=args.b, GRIDS=args.grids, TOL=args.tol, MAX_ITER=args.max_iter,
            QUAD_DEGREE=args.quad_degree, OUT=args.out, PLOT=args.plot or None,
            WORKERS=args.workers, DUMP_SOLUTIONS=args.dump_solutions or None,
            LENGTH_SCALE=args.length_scale, FIT_MIN_GRID=args.fit_min_grid,
            LOG_HOLDER_THRESHOLD=args.log_holder_threshold,
        )

        cache = StudyCache(self.settings.cache_db) if (self.settings.use_cache or config.dump_solutions) else None
        try:
            records = run_study(config, cache=cache, monitor=self.monitor, analytics=self.analytics)
        finally:
            if cache is not None:
                cache.close()

        fits = fit_all(records, config)
        emit(records, fits, config.out_dir, plot=config.plot, include_timing=not args.no_timing)

        stats = self.analytics.get_statistics()
        self.logger.info(
            f"Исследование завершено: ячеек {stats['total_cells']}, со сбоем {stats['failed_cells']}, "
            f"DC итераций {stats['total_iterations']}, {stats['session_duration']:.1f}s"
        )
        usage = self.monitor.get_average_metrics()
        if 'error' not in usage:
            self.logger.info(f"Ресурсы: CPU в среднем {usage['avg_cpu']:.1f}%, "
                             f"пик памяти {usage['peak_rss_mb']:.0f} MB ({usage['samples_count']} замеров)")
        return 1 if stats['failed_cells'] else 0

    def run_solve(self, args) -> int:
        rule = get_rule(args.quad_degree or DEFAULT_QUAD_DEGREE)
        case = make_benchmark(args.b)
        if args.mesh:
            mesh = load_mesh(args.mesh)
        else:
            mesh = build_uniform_rect_mesh(DOMAIN[0], DOMAIN[1], args.grid - 1)

        config = DCConfig(tol=args.tol, max_iter=args.max_iter, log_holder_threshold=args.log_holder_threshold)
        boundary = interpolate(case.g, mesh)
        result = DCSolver(mesh, case.exponent, case.f, config, rule).run(boundary.coefficients)
        state = result.state
        error = w1p_error_norm(state.u, case.exact_u, case.exact_gradient, case.exponent, rule)

        if args.dump_solution:
            np.savetxt(args.dump_solution, state.u.coefficients, fmt="%.17g")
        if args.log_csv:
            result.log.to_csv(args.log_csv)

        print(f"b={case.b:g} vertices={mesh.n_vertices} h_max={mesh.h_max:.6g} "
              f"iters={state.n} residual={state.residual:.3e} error={error:.10g} "
              f"converged={state.converged}")
        return 0 if state.converged else 1

    def run_radial(self, args) -> int:
        P, dP = parse_radial_function(args.P)
        F, _ = parse_radial_function(args.F)
        case = RadialCase(P, F, g=args.g, dP=dP, name=f"P={args.P}, F={args.F}")

        print("r,Z,U,U_second")
        for r in np.linspace(0.0, 1.0, args.samples + 1)[1:]:
            print(f"{float(r)!r},{float(radial_Z(case, r))!r},{float(radial_U(case, r))!r},"
                  f"{float(radial_U_second(case, r))!r}")
        print(f"regularity_integral,{float(regularity_integral(case))!r}")
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pxlaplace",
                                     description="p(x)-Laplacian FEM solver and convergence studies")
    parser.add_argument("--config", help="key-value study configuration file")
    parser.add_argument("--quad-degree", type=int, choices=[5, 12], default=None,
                        help="quadrature: 5 = 7-point degree 5 (default), 12 = 12-point rule")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--log-holder-threshold", type=float, default=None,
                        help="warn when the log-Holder estimate of p(x) exceeds this value")
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="convergence study over b and N^(1/2)")
    study.add_argument("--b", help="comma separated b values")
    study.add_argument("--grids", help="comma separated N^(1/2) values")
    study.add_argument("--tol", type=float)
    study.add_argument("--max-iter", type=int)
    study.add_argument("--out")
    study.add_argument("--plot", action="store_true")
    study.add_argument("--workers", type=int)
    study.add_argument("--length-scale", type=float)
    study.add_argument("--fit-min-grid", type=int)
    study.add_argument("--dump-solutions", action="store_true")
    study.add_argument("--no-timing", action="store_true", help="write seconds=0 for reproducible CSV")

    solve = sub.add_parser("solve", help="solve one benchmark problem")
    mesh_source = solve.add_mutually_exclusive_group(required=True)
    mesh_source.add_argument("--mesh", help="mesh file (nv nt / x y flag / i j k)")
    mesh_source.add_argument("--grid", type=int, help="uniform mesh with N^(1/2) points per side")
    solve.add_argument("--b", type=float, required=True)
    solve.add_argument("--tol", type=float, default=1e-8)
    solve.add_argument("--max-iter", type=int, default=5000)
    solve.add_argument("--dump-solution")
    solve.add_argument("--log-csv", help="write the convergence log (iter,residual,J_value)")

    radial = sub.add_parser("radial", help="radial oracle values as CSV")
    radial.add_argument("--P", required=True, help="exponent, e.g. const:1.5 or linear:1.5,0.2")
    radial.add_argument("--F", required=True, help="source, e.g. const:-1")
    radial.add_argument("--g", type=float, default=0.0)
    radial.add_argument("--samples", type=int, default=10)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    settings = Settings.from_env()
    AppLogger.configure(settings.logs_dir, args.log_level or settings.log_level)
    logger = AppLogger("app")

    app = PxLaplaceApp(settings)
    handlers = {"study": app.run_study, "solve": app.run_solve, "radial": app.run_radial}
    try:
        return handlers[args.command](args)
    except PxLaplaceError as e:
        logger.error(f"Ошибка выполнения команды {args.command}: {e}", exc_info=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
