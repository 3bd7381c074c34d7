"""Hot-loop kernels, compiled when available.

The Cython extension ``_ckernels`` is used when it was built at install time;
otherwise the pure-Python ``_pykernels`` are imported instead. Set
``SOCIOSEM_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("SOCIOSEM_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as _impl

        BACKEND = "python"

levenshtein = _impl.levenshtein
levenshtein_bounded = _impl.levenshtein_bounded
pb_tail = _impl.pb_tail
pair_tails = _impl.pair_tails
core_numbers = _impl.core_numbers
brandes = _impl.brandes
louvain_move = _impl.louvain_move
lp_run = _impl.lp_run
log_hypergeom_tail = _impl.log_hypergeom_tail

__all__ = [
    "BACKEND",
    "levenshtein",
    "levenshtein_bounded",
    "pb_tail",
    "pair_tails",
    "core_numbers",
    "brandes",
    "louvain_move",
    "lp_run",
    "log_hypergeom_tail",
]
