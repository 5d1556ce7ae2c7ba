"""Kernel backend selection.

The compiled Cython backend is preferred when it was built; otherwise the
pure-Python reference implementation is used. ``STYLEIRL_BACKEND`` overrides
the choice (``auto``/``compiled``/``pure``). Both backends are bit-identical
on the sequential kernels, so the choice affects speed only; see
``benchmarks/bench_kernels.py`` for the comparison.
"""

import os

from . import pure

_requested = os.environ.get("STYLEIRL_BACKEND", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _accel as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "pure"
elif _requested == "pure":
    _impl = pure
    BACKEND = "pure"
elif _requested == "compiled":
    from . import _accel as _impl

    BACKEND = "compiled"
else:
    raise ImportError(f"STYLEIRL_BACKEND must be auto, compiled, or pure; got {_requested!r}")

FORMULA_CURVATURE_PRODUCT = pure.FORMULA_CURVATURE_PRODUCT
FORMULA_CURVATURE_INVERSE = pure.FORMULA_CURVATURE_INVERSE

pm_rollout = _impl.pm_rollout
lqr_pm_solve = _impl.lqr_pm_solve
quad_feature_sums = _impl.quad_feature_sums
profile_from_s = _impl.profile_from_s
driving_features_from_s = _impl.driving_features_from_s
driving_features_of_actions = _impl.driving_features_of_actions
driving_derivs = _impl.driving_derivs
driving_cost_grad = _impl.driving_cost_grad


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "pure")."""
    return BACKEND
