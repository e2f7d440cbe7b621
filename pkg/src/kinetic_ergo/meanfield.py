"""Mean-field layer: particle systems, the frozen-measure map and its
Picard fixed point, and propagation-of-chaos scaling experiments.

The McKean-Vlasov invariant law is found as the fixed point of the map
sending a measure mu to the invariant law of the SDE with the measure
argument frozen at mu, approximated here by time relaxation of an ensemble.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import EstimatorInputError, NonContractionError
from .gaussian import GaussianLaw, invariant_law
from .model import Ensemble
from .sde import IntegratorConfig, simulate
from .transport import w2_empirical_general


def rd(d, N):
    """Propagation-of-chaos rate R_d(N), piecewise in the dimension."""
    if d < 1 or N < 1:
        raise EstimatorInputError("need d >= 1 and N >= 1")
    if d < 2:
        return N ** (-0.5)
    if d == 2:
        return N ** (-0.5) * np.log(1.0 + N)
    return N ** (-2.0 / d)


@dataclass
class FixedPointState:
    mu_k: Ensemble
    iteration: int
    w2_gap: float
    history: list = field(default_factory=list)
    converged: bool = False


@dataclass
class ChaosScanResult:
    N_values: list
    mean_sq: np.ndarray
    stderr: np.ndarray
    slope: float
    rd_pred: np.ndarray
    values: list            # per-N list of replicate squared distances
    stationarity_ok: bool = True


def simulate_particles(spec, diff, init, cfg):
    """Integrate the N-particle system; drift sees the instantaneous
    empirical measure of the block."""
    return simulate(spec, diff, init, cfg, particles=True)


def _resample_points(points, n, seed):
    m = points.shape[0]
    if m == n:
        return points.copy()
    if m > n:
        return Ensemble(points).subsample(n).points
    idx = np.arange(n) % m
    return points[idx].copy()


def frozen_stationary(spec, diff, mu, relax_T, n_inner=1024, dt=1e-2, seed=0,
                      scheme="kinetic-splitting"):
    """Approximate Phi(mu): terminal ensemble of n_inner decoupled copies
    run for relax_T with the measure argument frozen at mu."""
    init = _resample_points(mu.points, n_inner, seed)
    cfg = IntegratorConfig(scheme=scheme, dt=dt, T=relax_T, seed=seed,
                           snapshot_times=[relax_T])
    frozen = mu if spec.interaction is not None else None
    path = simulate(spec, diff, init, cfg, frozen_mu=frozen)
    return path.final


K_I_CONTRACTION_WARN = 0.2


def picard_fixed_point(spec, diff, mu0, tol=0.05, max_iter=20, relax_T=None,
                       n_inner=1024, dt=1e-2, seed=0):
    """Iterate mu_{k+1} = Phi(mu_k) to the invariant law of the
    McKean-Vlasov equation.

    The same inner seed is reused every iteration (common random numbers),
    so the W2 gap between successive iterates measures the movement of the
    measure argument rather than resampling noise.  Three consecutive gap
    increases abort with the history attached.
    """
    if spec.K_I > K_I_CONTRACTION_WARN:
        warnings.warn(
            f"K_I={spec.K_I} above the measured contraction threshold "
            f"{K_I_CONTRACTION_WARN}; Picard iteration may not contract"
        )
    if relax_T is None:
        relax_T = 10.0
    mu = mu0
    history = []
    increases = 0
    gap_n = min(n_inner, 2048)   # keeps the assignment solve affordable

    def _gap(cur, nxt):
        return w2_empirical_general(
            Ensemble(_resample_points(cur.points, gap_n, seed)),
            nxt.subsample(gap_n),
        )

    for k in range(max_iter):
        nxt = frozen_stationary(spec, diff, mu, relax_T, n_inner, dt, seed)
        gap = _gap(mu, nxt)
        history.append(float(gap))
        if len(history) >= 2 and history[-1] > history[-2]:
            increases += 1
            if increases >= 3:
                raise NonContractionError(history)
        else:
            increases = 0
        mu = nxt
        if gap < tol:
            return FixedPointState(mu_k=mu, iteration=k + 1, w2_gap=float(gap),
                                   history=history, converged=True)
    return FixedPointState(mu_k=mu, iteration=max_iter, w2_gap=history[-1],
                           history=history, converged=False)


def _reference_sample(reference, n_ref, seed, rep):
    if isinstance(reference, GaussianLaw):
        return reference.sample(n_ref, _rng.substream(seed, 7103, rep))
    pts = reference.points if isinstance(reference, Ensemble) else np.asarray(reference)
    return _resample_points(pts, n_ref, seed)


def _stationary_check(path):
    """Compare first/second-half moment vectors of the trailing snapshots."""
    if len(path.states) < 4:
        return True
    half = len(path.states) // 2
    def moments(states):
        pts = np.vstack(states)
        return np.concatenate([pts.mean(axis=0), (pts**2).mean(axis=0)])
    m1 = moments(path.states[half:-1][:half])
    m2 = moments(path.states[-half:])
    scale = np.maximum(np.abs(m1) + np.abs(m2), 1.0)
    # moment noise scales like 1/sqrt(N); widen the band for small systems
    N = path.states[0].shape[0]
    tol = max(0.02, 5.0 / np.sqrt(N))
    return bool(np.all(np.abs(m1 - m2) / scale < tol))


def chaos_scan(spec, diff, N_list, T_stat=10.0, replicates=8, reference=None,
               n_ref=1024, dt=1e-2, seed=0):
    """Squared W2 between the stationary particle marginal and the limit law
    versus N, with the fitted log-log slope and the R_d(N) prediction.

    The reference is a fixed-size sample (n_ref points) of the limit law,
    so the N-scaling of the measured distance reflects the particle
    ensemble alone.  Defaults: the Gaussian invariant law when the model
    is linear without perturbation, else a Picard fixed point.
    """
    N_list = sorted(int(N) for N in N_list)
    if not N_list:
        raise EstimatorInputError("N_list is empty")
    d = spec.d
    if reference is None:
        if spec.perturbation.name == "zero":
            A_eff = spec.linear_position + (
                spec.interaction.kappa * np.eye(d) if spec.interaction is not None else 0.0
            )
            from .gaussian import LinearModel
            reference = invariant_law(
                LinearModel.from_kinetic(A_eff, spec.friction, diff.sigma @ diff.sigma.T)
            )
        else:
            mu0 = Ensemble(_rng.substream(seed, 7201).standard_normal((n_ref, 2 * d)))
            reference = picard_fixed_point(spec, diff, mu0, n_inner=n_ref,
                                           dt=dt, seed=seed).mu_k
    mean_sq = np.empty(len(N_list))
    stderr = np.empty(len(N_list))
    values = []
    stationary_ok = True
    snap = sorted({T_stat * f for f in (0.5, 0.625, 0.75, 0.875, 1.0)})
    for i, N in enumerate(N_list):
        vals = np.empty(replicates)
        for r in range(replicates):
            rep_seed = int(_rng.substream(seed, 7301, N, r).integers(0, 2**31 - 1))
            init = _reference_sample(reference, N, rep_seed, r)
            cfg = IntegratorConfig(dt=dt, T=T_stat, seed=rep_seed, snapshot_times=snap)
            path = simulate(spec, diff, init, cfg, particles=True)
            stationary_ok = stationary_ok and _stationary_check(path)
            ref = _reference_sample(reference, n_ref, rep_seed + 1, r)
            vals[r] = w2_empirical_general(path.final, ref) ** 2
        values.append(vals)
        mean_sq[i] = vals.mean()
        stderr[i] = vals.std(ddof=1) / np.sqrt(replicates) if replicates > 1 else 0.0
    if len(N_list) >= 2:
        slope = float(np.polyfit(np.log(N_list), np.log(mean_sq), 1)[0])
    else:
        slope = 0.0
    preds = np.array([rd(d, N) for N in N_list])
    if not stationary_ok:
        warnings.warn("chaos_scan: stationarity moment test failed on some runs")
    return ChaosScanResult(N_values=N_list, mean_sq=mean_sq, stderr=stderr,
                           slope=slope, rd_pred=preds, values=values,
                           stationarity_ok=stationary_ok)
