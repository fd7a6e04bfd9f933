"""Variable-exponent Lebesgue, mixed sequence and Besov norms.

The modules build on each other: :mod:`vexp.exponents` (exponent fields),
:mod:`vexp.lebesgue` (Luxemburg norms), :mod:`vexp.mixed` (the
``l^{q(.)}(L^{p(.)})`` space), :mod:`vexp.duality` (Köthe dual norms),
:mod:`vexp.besov` (Littlewood-Paley filters and Besov norms) and
:mod:`vexp.verify` (property suites behind ``vexp verify``).
"""

from .besov import BesovDecomposition, FilterPair, analyze, besov_norm, build_filter_pair, synthesize
from .domain import FuncSequence, Grid, GridFunction, integrate, random_function, random_sequence
from .duality import (DualNormResult, Method, dual_tail_norm, kothe_dual_norm, norming_check,
                      pairing)
from .errors import InputError, NumericalError, VexpError
from .exponents import (Condition, ExponentField, check_log_holder, check_normability, conjugate,
                        make_exponent_field, random_log_holder)
from .lebesgue import NormResult, luxemburg_norm, modular_lp
from .mixed import (lqminus_norm, mixed_modular_p1, mixed_modular_p1a, mixed_norm, project)

__version__ = "0.1.0"
