"""Backend selection for the hot event-scatter kernel.

The compiled Cython core is preferred when its extension module importable;
otherwise the numpy fallback is used. Set AEQSIM_KERNELS=python or
AEQSIM_KERNELS=compiled to force a backend (forcing "compiled" raises if the
extension was not built).
"""

import os

_requested = os.environ.get("AEQSIM_KERNELS", "").strip().lower()

if _requested == "python":
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _pykernels as _impl
        BACKEND = "python"

conv_scatter = _impl.conv_scatter


def get_backend(name: str):
    """Fetch a specific backend's conv_scatter (used by the benchmark)."""
    if name == "python":
        from . import _pykernels
        return _pykernels.conv_scatter
    if name == "compiled":
        from . import _ckernels  # type: ignore[attr-defined]
        return _ckernels.conv_scatter
    raise ValueError(f"unknown backend {name!r}")
