"""Hot per-node kernels with a compiled core and a pure-numpy fallback.

The compiled extension (``_core``, Cython) is preferred when the build
produced it; otherwise the numpy implementation in ``_fallback`` is used.
Both expose the same three entry points and are numerically equivalent
(see tests/test_kernels.py for the parity suite and benchmarks/ for the
speed comparison):

    apply_stencil_ops(ptr, idx, grad_coef, hess_coef, values)
        -> (grad_frame, hess_pack)
    weighted_stencil_rows(ptr, idx, center_slot, grad_coef, hess_coef,
                          hess_mult, grad_mult, diag_add) -> data
    radial_min(nodes, h, dirs, min_dot) -> (rho, argmin)
"""

from . import _fallback

try:  # pragma: no cover - depends on whether the extension was built
    from . import _core as _impl
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _impl = _fallback
    HAVE_COMPILED = False

apply_stencil_ops = _impl.apply_stencil_ops
weighted_stencil_rows = _impl.weighted_stencil_rows
radial_min = _impl.radial_min


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "numpy-fallback"
