"""Circle-method computations for Waring's problem.

Exact representation counts, Weyl and Gauss sums, major/minor arcs,
the singular series, the Gamma main term and the approximation cascade.
"""
from .core import (BallCount, RepCountTable, WaringInstance, ball_count, count_bruteforce,
                   count_exact, iroot)
from .expsums import (BoundCheckReport, gauss_sum, hua_moment, measure_bound, v_integral,
                      weyl_sum)
from .arcs import (ArcDecomposition, FourierLadder, ReducedFraction, arc_integral, build_arcs,
                   circle_integral, dirichlet_approx, fourier_ladder)
from .singular import (ArcSum, LocalDensity, SingularSeriesResult, arc_sum, euler_product,
                       local_density, multiplicativity_check, truncated_series)
from .asymptotic import (MainTerm, VerificationRecord, approx_A1, approx_A2, approx_A3,
                         main_term, scan, singular_integral_check, verify)
from .errors import CapacityError, ConvergenceError, StabilizationError, WaringError

__version__ = "0.1.0"
