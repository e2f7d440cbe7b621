"""Exact Wasserstein-2 distances between empirical measures.

Equal-size uniform measures reduce to an assignment problem; unequal sizes
are handled either by replicating points up to the least common multiple
(still an assignment, and exact for uniform weights) or by solving the
transportation LP directly.  No entropic approximations anywhere: the rate
experiments downstream need unbiased distances.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import coo_matrix
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError, SizeCapError
from .model import Ensemble
from . import rng as _rng

ASSIGNMENT_CAP = 4096
LCM_CAP = 8192
PAIR_CAP = 10_000_000


def cost_matrix(a, b):
    """Squared-distance cost c[i, j] = |z_i - zbar_j|^2."""
    pa, pb = _points(a), _points(b)
    if pa.shape[1] != pb.shape[1]:
        raise DimensionMismatchError("ensembles live in different dimensions")
    return cdist(pa, pb, "sqeuclidean")


def _points(a):
    return a.points if isinstance(a, Ensemble) else np.asarray(a, dtype=float)


def w2_empirical(a, b):
    """Exact W2 between equal-size uniform empirical measures."""
    pa, pb = _points(a), _points(b)
    if pa.shape[0] != pb.shape[0]:
        raise DimensionMismatchError(
            f"equal sample counts required ({pa.shape[0]} vs {pb.shape[0]}); "
            "use w2_empirical_general"
        )
    if pa.shape[0] > ASSIGNMENT_CAP:
        raise SizeCapError(
            f"exact mode capped at n={ASSIGNMENT_CAP}; subsample the ensembles first"
        )
    C = cost_matrix(pa, pb)
    rows, cols = linear_sum_assignment(C)
    return float(np.sqrt(C[rows, cols].mean()))


def w2_empirical_general(a, b):
    """Exact W2 between uniform empirical measures of any sizes.

    n == m delegates to the assignment solver (same LP optimum).  Unequal
    sizes with a moderate least common multiple are solved by replication,
    otherwise by the transportation LP (dual simplex).
    """
    pa, pb = _points(a), _points(b)
    n, m = pa.shape[0], pb.shape[0]
    if n * m > PAIR_CAP:
        raise SizeCapError(
            f"n*m = {n * m} exceeds {PAIR_CAP}; subsample the ensembles first"
        )
    if n == m:
        return w2_empirical(pa, pb)
    L = int(np.lcm(n, m))
    if L <= LCM_CAP:
        A = np.repeat(pa, L // n, axis=0)
        B = np.repeat(pb, L // m, axis=0)
        return w2_empirical(A, B)
    return _w2_lp(pa, pb)


def _w2_lp(pa, pb):
    n, m = pa.shape[0], pb.shape[0]
    if n * m > 2_000_000:
        raise SizeCapError(
            "transportation LP capped at 2e6 variables; subsample the ensembles first"
        )
    C = cost_matrix(pa, pb).ravel()
    # row-sum and column-sum equality constraints
    ii = np.repeat(np.arange(n), m)
    jj = np.tile(np.arange(m), n)
    rows = np.concatenate([ii, n + jj])
    cols = np.concatenate([np.arange(n * m), np.arange(n * m)])
    data = np.ones(2 * n * m)
    A_eq = coo_matrix((data, (rows, cols)), shape=(n + m, n * m))
    b_eq = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    res = linprog(C, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if not res.success:
        raise SizeCapError(f"transport LP failed: {res.message}")
    return float(np.sqrt(max(res.fun, 0.0)))


@dataclass
class W2Estimate:
    """Monte Carlo estimate of W2(a, reference law) via fresh reference samples."""

    mean: float
    stderr: float
    values: np.ndarray

    @property
    def mean_sq(self):
        return float(np.mean(self.values**2))

    @property
    def stderr_sq(self):
        v = self.values**2
        return float(np.std(v, ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0


def w2_to_reference(a, ref_sampler, n_ref=None, replicates=8, seed=0):
    """Average W2 between `a` and fresh i.i.d. reference samples.

    ref_sampler(n, gen) must draw n points from the reference law.  The
    reference sample size defaults to |a|; a fixed n_ref decouples the
    estimator floor from the size of `a`.
    """
    pa = _points(a)
    if n_ref is None:
        n_ref = pa.shape[0]
    vals = []
    for r in range(replicates):
        gen = _rng.substream(seed, 7001, r)
        ref = np.asarray(ref_sampler(n_ref, gen), dtype=float)
        vals.append(w2_empirical_general(pa, ref))
    vals = np.asarray(vals)
    stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return W2Estimate(mean=float(vals.mean()), stderr=stderr, values=vals)
