"""rainblend: blending gridded precipitation products with gauge measurements.

The package builds spatial-interpolation regression features from gridded
products around gauge stations, trains six base regressors from scratch,
combines their predictions with eleven combiners (mean, median, two
best-learner selectors and seven stacking variants) and evaluates all of
them with MSE-based skill scores, rankings and feature importances.
"""

__version__ = "0.1.0"

# Pin BLAS pools to one thread: concurrency comes from the experiment's own
# worker pool, and results must not depend on BLAS internals. The limiter
# object is kept alive so the limit persists for the process.
try:
    from threadpoolctl import threadpool_limits as _threadpool_limits

    _blas_single_thread = _threadpool_limits(limits=1, user_api="blas")
except Exception:  # pragma: no cover - threadpoolctl is a hard dependency
    _blas_single_thread = None

from .errors import DataError, NumericError, RainblendError

__all__ = ["DataError", "NumericError", "RainblendError", "__version__"]
