"""Hot numerical kernels: compiled core with a pure-numpy fallback.

The compiled extension is used when available; set PULSEWAVE_KERNELS to
"python" to force the fallback or "compiled" to fail loudly when the
extension is missing. Both backends expose the same four functions:

    tridiag_factor(lower, diag, upper, periodic) -> factor
    tridiag_solve(factor, rhs)                   -> solution
    tridiag_matvec(lower, diag, upper, x, periodic)
    logistic_imex_run(u, mu, factor, dt, n_steps, affine)

Tridiagonal systems may wrap around (periodic cells); the cyclic part is
handled by a rank-one correction of a strictly more dominant core matrix,
so no pivoting is needed for the M-matrices assembled in this package.
"""

import os

_choice = os.environ.get("PULSEWAVE_KERNELS", "auto").lower()

if _choice == "python":
    from . import _ref as _impl

    BACKEND = "python"
elif _choice == "compiled":
    from . import _fast as _impl

    BACKEND = "compiled"
else:
    try:
        from . import _fast as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _ref as _impl

        BACKEND = "python"

tridiag_factor = _impl.tridiag_factor
tridiag_solve = _impl.tridiag_solve
tridiag_matvec = _impl.tridiag_matvec
logistic_imex_run = _impl.logistic_imex_run
logistic_twin_run = _impl.logistic_twin_run
