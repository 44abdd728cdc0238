"""Best mean (L^p area) approximation on the disk and ball.

Modules: ``grid`` (quadrature), ``basis`` (approximating spaces),
``solver`` (best approximation), ``certificates`` (duality checks),
``oracles`` (closed-form cases), ``potentials`` (Cauchy/Newton transforms
and peak-set functionals), ``catalog`` and ``cli``.
"""

from .basis import BasisSpec, project_l2
from .certificates import Verdict, badly_approximable_test, construct_dual
from .grid import BallSpec, Field, build_ball_sampler, build_disk_grid, build_radial_grid
from .solver import SolverOptions, solve_best

__version__ = "0.1.0"
