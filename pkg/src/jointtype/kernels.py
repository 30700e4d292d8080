"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``JOINTTYPE_FORCE_PYTHON=1``) the numpy fallback is used. ``BACKEND`` names
the active one.
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

_force_python = os.environ.get("JOINTTYPE_FORCE_PYTHON", "").strip() not in ("", "0")

_impl = None
if not _force_python:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError as exc:  # pragma: no cover - depends on the build
        logger.info("compiled kernels unavailable (%s); using the Python fallback", exc)
        _impl = None
if _impl is None:
    from . import _fallback as _impl  # type: ignore[no-redef]

BACKEND = "cython" if _impl.__name__.endswith("_core") else "python"

FLAG_RELATION = _impl.FLAG_RELATION
FLAG_ENTITY = _impl.FLAG_ENTITY
FLAG_TRIPLES = _impl.FLAG_TRIPLES
FLAG_FREEZE_ENTITY = _impl.FLAG_FREEZE_ENTITY
LOSS_PARTIAL = _impl.LOSS_PARTIAL
LOSS_ALL_CANDIDATES = _impl.LOSS_ALL_CANDIDATES

train_chunk = _impl.train_chunk
objective_terms = _impl.objective_terms
alias_draw_many = _impl.alias_draw_many
viterbi_batch = _impl.viterbi_batch
so_update = _impl.so_update
pl_step = _impl.pl_step
tri_step = _impl.tri_step


def get_backend(name: str):
    """Return the module implementing backend ``name`` ("cython" or "python")."""
    if name == "python":
        from . import _fallback

        return _fallback
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")
