"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``BERNET_PURE_PYTHON`` is set, the numpy fallback is used.  Both expose the
same functions and return identical results.
"""
import os

from . import _fallback

if os.environ.get("BERNET_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = _impl.BACKEND

net_states = _impl.net_states
dp_table = _impl.dp_table
longest_run_batch = _impl.longest_run_batch
across_depth_batch = _impl.across_depth_batch
tree_depth_batch = _impl.tree_depth_batch
tree_splitting = _impl.tree_splitting
region_counts = _impl.region_counts
longest_path_labels = _impl.longest_path_labels


def backends():
    """Modules available for cross-checking, keyed by backend name."""
    found = {"python": _fallback}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
