"""Backend selection for the hot kernels.

The compiled Cython extension is preferred when importable; otherwise the
pure-numpy fallback is used. Set ``HMMFORGET_PURE=1`` to force the
fallback (useful for benchmarking and debugging).
"""

import os

from . import _kernels_py

if os.environ.get("HMMFORGET_PURE", "").strip() not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "pure"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "pure"

backward_pass = _impl.backward_pass
forward_pass = _impl.forward_pass
viterbi_path = _impl.viterbi_path
simulate_path = _impl.simulate_path


def backend_name() -> str:
    """Name of the kernel backend selected at import ('compiled' or 'pure')."""
    return BACKEND
