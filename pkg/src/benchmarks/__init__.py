from .benchmark import BenchmarkCase, make_benchmark
from .radial import RadialCase, regularity_integral

__all__ = ['BenchmarkCase', 'make_benchmark', 'RadialCase', 'regularity_integral']
