"""Numerical laboratory for planar randomly switched linear systems:
invariant angular measures, Lyapunov exponents by quadrature and Monte
Carlo, deterministic periodic control, and heavy-tail estimation for the
decentered variant."""

from ._kernels import backend
from .core import SystemParams
from .measure import (
    AngularMeasure,
    compute_constants,
    density_pair,
    lyapunov_chi,
    lyapunov_chi_ergodic,
    lyapunov_chi_fast,
)
from .periodic import PeriodicControl, explosive_control_search, periodic_chi
from .simulate import (
    ErlangStaged,
    Exponential,
    Periodic,
    estimate_chi_erlang,
    estimate_chi_mc,
    estimate_chi_p,
    jump_count_mgf,
    simulate,
)
from .tail import (
    DecenteredSystem,
    hill_tail_index,
    moment_root_x1,
    sample_B,
    yn_chain,
)

__version__ = "0.1.0"

__all__ = [
    "AngularMeasure",
    "DecenteredSystem",
    "ErlangStaged",
    "Exponential",
    "Periodic",
    "PeriodicControl",
    "SystemParams",
    "backend",
    "compute_constants",
    "density_pair",
    "estimate_chi_erlang",
    "estimate_chi_mc",
    "estimate_chi_p",
    "explosive_control_search",
    "hill_tail_index",
    "jump_count_mgf",
    "lyapunov_chi",
    "lyapunov_chi_ergodic",
    "lyapunov_chi_fast",
    "moment_root_x1",
    "periodic_chi",
    "sample_B",
    "simulate",
    "yn_chain",
]
