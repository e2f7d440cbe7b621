import subprocess
import sys

import numpy as np
import pytest

from kinetic_ergo import backend_name
from kinetic_ergo import _kernels_py as pyk

try:
    from kinetic_ergo import _kernels as ck
except ImportError:
    ck = None


def test_backend_name_valid():
    assert backend_name() in ("python", "compiled")


def test_env_var_forces_python_backend():
    code = ("import kinetic_ergo as ke; print(ke.backend_name())")
    res = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env={"KINETIC_ERGO_BACKEND": "python",
                                         "PATH": "/usr/bin:/bin:/usr/local/bin"})
    assert res.stdout.strip() == "python", res.stderr


@pytest.mark.skipif(ck is None, reason="compiled extension not built")
@pytest.mark.parametrize("scheme", [pyk.SCHEME_EULER, pyk.SCHEME_SPLITTING])
@pytest.mark.parametrize("pert_kind,pa,pb", [
    (pyk.PERT_ZERO, 0.0, 0.0),
    (pyk.PERT_SINE, 0.4, 1.5),
    (pyk.PERT_BUMP, 0.3, 0.8),
    (pyk.PERT_TANH, 0.5, 2.0),
])
@pytest.mark.parametrize("measure_mode", [pyk.MEASURE_NONE, pyk.MEASURE_FROZEN,
                                          pyk.MEASURE_EMPIRICAL])
def test_kernel_parity(scheme, pert_kind, pa, pb, measure_mode):
    gen = np.random.default_rng(1234)
    n, d = 32, 2
    A = np.ascontiguousarray(np.eye(d) + 0.2 * gen.standard_normal((d, d)))
    frozen = np.ascontiguousarray(gen.standard_normal(d))
    noise = np.ascontiguousarray(gen.standard_normal((n, d)) * 0.05)
    X0 = np.ascontiguousarray(gen.standard_normal((n, d)))
    Y0 = np.ascontiguousarray(gen.standard_normal((n, d)))
    kappa = 0.1 if measure_mode != pyk.MEASURE_NONE else 0.0
    args = (A, 0.9, pert_kind, pa, pb, kappa, measure_mode, frozen, noise,
            0.01, scheme)
    Xp, Yp = X0.copy(), Y0.copy()
    pyk.step_ensemble(Xp, Yp, *args)
    Xc, Yc = X0.copy(), Y0.copy()
    ck.step_ensemble(Xc, Yc, *args)
    assert np.allclose(Xp, Xc, atol=1e-13, rtol=1e-13)
    assert np.allclose(Yp, Yc, atol=1e-13, rtol=1e-13)


def test_multi_step_parity():
    if ck is None:
        pytest.skip("compiled extension not built")
    gen = np.random.default_rng(7)
    n, d = 16, 1
    A = np.ascontiguousarray(np.eye(d))
    frozen = np.zeros(d)
    X0 = np.ascontiguousarray(gen.standard_normal((n, d)))
    Y0 = np.ascontiguousarray(gen.standard_normal((n, d)))
    Xp, Yp, Xc, Yc = X0.copy(), Y0.copy(), X0.copy(), Y0.copy()
    for step in range(200):
        noise = np.ascontiguousarray(gen.standard_normal((n, d)) * 0.04)
        args = (A, 1.0, pyk.PERT_TANH, 0.4, 1.0, 0.05, pyk.MEASURE_EMPIRICAL,
                frozen, noise, 0.01, pyk.SCHEME_SPLITTING)
        pyk.step_ensemble(Xp, Yp, *args)
        ck.step_ensemble(Xc, Yc, *args)
    assert np.allclose(Xp, Xc, atol=1e-11)
    assert np.allclose(Yp, Yc, atol=1e-11)
