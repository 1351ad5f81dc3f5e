"""High-precision evaluation of two- and three-parameter multiple zeta(-star) series
and numerical verification of the identities among them."""

__version__ = "0.1.0"

from .indices import Index, parse_index  # noqa: E402
from .series import (  # noqa: E402
    EvalOptions,
    EvalResult,
    ParamPoint,
    SeriesSpec,
    eval_dp,
    eval_naive,
    evaluate,
    spec_Z3_single,
    spec_Z_I,
    spec_Z_II,
    spec_Z_single,
    spec_Zr,
    spec_Zstar_I,
    spec_Zstar_I3,
)

__all__ = [
    "EvalOptions",
    "EvalResult",
    "Index",
    "ParamPoint",
    "SeriesSpec",
    "eval_dp",
    "eval_naive",
    "evaluate",
    "parse_index",
    "spec_Z3_single",
    "spec_Z_I",
    "spec_Z_II",
    "spec_Z_single",
    "spec_Zr",
    "spec_Zstar_I",
    "spec_Zstar_I3",
]
