"""Reference solutions and benchmark scenarios."""

from .benchmarks import BenchReport, DropShape, list_benchmarks, measure_drop_ellipsoid, run_benchmark
from .oracles import (convergence_orders, exact_bulk_adsorption, l1_error, linf_error, oracle_bulk_adsorption,
                      oracle_expanding_sphere, oracle_sphere_diffusion, oracle_ygb)
