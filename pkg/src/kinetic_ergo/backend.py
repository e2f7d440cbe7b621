"""Stepping-kernel backend selection.

The hot inner loop (drift evaluation + state update over all trajectories,
every step) exists twice: a compiled Cython extension and a NumPy
fallback with identical semantics.  Selection happens once at import:

    KINETIC_ERGO_BACKEND=auto      compiled if built, else python (default)
    KINETIC_ERGO_BACKEND=python    force the NumPy kernels
    KINETIC_ERGO_BACKEND=compiled  require the extension (raises if missing)

Drifts outside the compiled fast path (custom perturbations or non-linear
interaction kernels) silently use the generic NumPy evaluation regardless
of the selected backend.
"""
import os

from . import _kernels_py

_choice = os.environ.get("KINETIC_ERGO_BACKEND", "auto").lower()

if _choice not in ("auto", "python", "compiled"):
    raise ValueError(f"KINETIC_ERGO_BACKEND must be auto|python|compiled, got {_choice!r}")

kernels = _kernels_py
if _choice in ("auto", "compiled"):
    try:
        from . import _kernels as _kernels_c

        kernels = _kernels_c
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "KINETIC_ERGO_BACKEND=compiled but the extension is not built; "
                "reinstall with `pip install -e . --no-build-isolation`"
            )


def backend_name():
    return "compiled" if kernels.COMPILED else "python"
