"""Experiment orchestration: configuration, rate fitting, pipelines,
persistence, and report/plot emission.

Pipelines tie the modules together into named acceptance runs; each one
writes CSV data, an SVG plot, and a schema-validated summary.json, and
reports pass/fail so the CLI can map it to an exit status.
"""
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import jsonschema

from . import rng as _rng
from .backend import backend_name
from .dissipativity import DissipativityCert, check_patdi, search_cert
from .entropy import kl_decay_curve
from .errors import ConfigError, EstimatorInputError
from .gaussian import (GaussianLaw, LinearModel, fit_gaussian, invariant_law,
                       kl_gaussian, poincare_constant, transition_law, w2_gaussian)
from .hypo import (TanhTest, build_constants, build_weight, check_rt_negativity,
                   decay_factor, eval_functional, McConfig)
from .meanfield import chaos_scan, picard_fixed_point
from .model import DiffusionSpec, DriftSpec, Ensemble
from .sde import IntegratorConfig, simulate

PIPELINES = ("ergodicity-classical", "ergodicity-mv", "chaos-scan",
             "hypo-verify", "dissipativity")


# ---------------------------------------------------------------------------
# rate fitting

@dataclass
class RateFit:
    lambda_hat: float
    intercept: float
    t_lo: float
    t_hi: float
    residual_rms: float
    n_points: int


def fit_rate(times, values, noise_floor=0.0, window=None):
    """Least squares of ln(value) on t; lambda_hat = -slope.

    Only points strictly above the noise floor and inside the window
    [t_lo, t_hi] enter the fit; at least 4 are required.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise EstimatorInputError("times and values must have matching shapes")
    mask = v > noise_floor
    if window is not None:
        t_lo, t_hi = window
        if not t_lo < t_hi:
            raise EstimatorInputError("window must satisfy t_lo < t_hi")
        mask &= (t >= t_lo) & (t <= t_hi)
    if mask.sum() < 4:
        raise EstimatorInputError(
            f"need >= 4 points above the noise floor in the window, got {int(mask.sum())}"
        )
    ts, vs = t[mask], np.log(v[mask])
    slope, intercept = np.polyfit(ts, vs, 1)
    resid = vs - (slope * ts + intercept)
    return RateFit(
        lambda_hat=float(-slope),
        intercept=float(intercept),
        t_lo=float(ts.min()),
        t_hi=float(ts.max()),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=int(mask.sum()),
    )


# ---------------------------------------------------------------------------
# configuration

_SCHEMA_CACHE = {}


def load_schema(name):
    if name not in _SCHEMA_CACHE:
        text = resources.files("kinetic_ergo.schemas").joinpath(name).read_text()
        _SCHEMA_CACHE[name] = json.loads(text)
    return _SCHEMA_CACHE[name]


@dataclass
class ExperimentConfig:
    pipeline: str
    model: dict
    diffusion: dict
    integrator: dict = field(default_factory=dict)
    ensemble: dict = field(default_factory=dict)
    estimators: dict = field(default_factory=dict)
    dissipativity: dict = field(default_factory=dict)
    hypo: dict = field(default_factory=dict)
    meanfield: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "out"

    @classmethod
    def from_dict(cls, raw):
        try:
            jsonschema.validate(raw, load_schema("config.schema.json"))
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config rejected by schema: {exc.message}")
        if raw["pipeline"] == "chaos-scan" and not raw.get("meanfield", {}).get("N_list"):
            raise ConfigError("chaos-scan requires a non-empty meanfield.N_list")
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})

    @classmethod
    def from_file(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        return cls.from_dict(raw)

    def build_model(self):
        spec = DriftSpec.from_config(self.model)
        diff = DiffusionSpec.from_config(self.diffusion)
        return spec, diff

    def build_integrator(self, **overrides):
        kw = dict(self.integrator)
        kw.update(overrides)
        kw.setdefault("seed", self.seed)
        return IntegratorConfig(**kw)


# ---------------------------------------------------------------------------
# Talagrand / log-Harnack audit

@dataclass
class AuditReport:
    violations: int
    n_probes: int
    talagrand_constant: float
    worst_slack: float      # min over probes of RHS - LHS (>= 0 means all hold)
    c1_values: list         # fitted entropy-W2 constants per probe set
    c1_spread: float        # (max - min) / mean of c1_values


def _random_gaussians(dim, n, gen, mean_scale=2.0):
    laws = []
    for _ in range(n):
        mean = mean_scale * gen.standard_normal(dim)
        Wm = gen.standard_normal((dim, dim)) / np.sqrt(dim)
        cov = Wm @ Wm.T + 0.3 * np.eye(dim)
        laws.append(GaussianLaw(mean=mean, cov=cov))
    return laws


def talagrand_harnack_audit(model, t_probe=1.0, n_probes=100, n_sets=3, seed=0):
    """Closed-form audit of the Talagrand and entropy-W2 inequalities.

    Talagrand: W2(nu, mubar)^2 <= 4 C KL(nu | mubar) with C the largest
    eigenvalue of the invariant covariance.  Entropy-W2: after time
    t_probe, KL(P_t nu | P_t nubar) <= c1 W2(nu, nubar)^2; the audit fits
    the best c1 per probe set and reports its spread across sets.
    """
    mubar = invariant_law(model)
    C = poincare_constant(mubar)
    dim = model.B.shape[0]
    gen = _rng.substream(seed, 41)
    violations = 0
    worst = np.inf
    for nu in _random_gaussians(dim, n_probes, gen):
        lhs = w2_gaussian(nu, mubar) ** 2
        rhs = 4.0 * C * kl_gaussian(nu, mubar)
        slack = rhs - lhs
        worst = min(worst, slack)
        if slack < -1e-9 * max(rhs, 1.0):
            violations += 1
    c1_values = []
    for s in range(n_sets):
        gset = _rng.substream(seed, 42, s)
        best = 0.0
        for _ in range(n_probes):
            nu, nub = _random_gaussians(dim, 2, gset)
            w2_sq = w2_gaussian(nu, nub) ** 2
            if w2_sq < 1e-12:
                continue
            ent = kl_gaussian(transition_law(model, nu, t_probe),
                              transition_law(model, nub, t_probe))
            best = max(best, ent / w2_sq)
        c1_values.append(best)
    c1 = np.asarray(c1_values)
    spread = float((c1.max() - c1.min()) / c1.mean()) if c1.mean() > 0 else np.inf
    return AuditReport(violations=violations, n_probes=n_probes,
                       talagrand_constant=C, worst_slack=float(worst),
                       c1_values=c1_values, c1_spread=spread)


# ---------------------------------------------------------------------------
# pipelines

def _out_dirs(out):
    out = Path(out)
    (out / "data").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(out, summary):
    jsonschema.validate(summary, load_schema("summary.schema.json"))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def _decay_plot(out, name, times, curves, labels):
    fig, ax = plt.subplots(figsize=(6, 4))
    for vals, label in zip(curves, labels):
        ax.semilogy(times, vals, marker="o", markersize=3, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "plots" / f"{name}.svg")
    plt.close(fig)


def _curve_csv(path, header, columns):
    arr = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _displaced_start(spec, n, seed, shift=3.0):
    gen = _rng.substream(seed, 51)
    pts = gen.standard_normal((n, 2 * spec.d))
    pts[:, : spec.d] += shift
    return pts


def _ergodicity_classical(cfg, out):
    spec, diff = cfg.build_model()
    model = LinearModel.from_kinetic(spec.linear_position, spec.friction,
                                     diff.sigma_sigma_t)
    mubar = invariant_law(model)
    oracle_rate = model.spectral_rate
    n = int(cfg.ensemble.get("n", 10_000))
    icfg = cfg.build_integrator()
    times = np.linspace(0.0, icfg.T, 31)
    icfg = cfg.build_integrator(snapshot_times=list(times))
    z0 = _displaced_start(spec, n, cfg.seed)
    path = simulate(spec, diff, z0, icfg)
    with open(out / "data" / "trajectories.csv", "w") as fh:
        EnsemblePathView(path).dump_tail_csv(fh)
    fits = [fit_gaussian(s) for s in path.states]
    w2_curve = np.array([w2_gaussian(g, mubar) for g in fits])
    _, kl_ests = kl_decay_curve(path, mubar)
    kl_curve = np.array([e.value for e in kl_ests])
    # rate fits on log scale; the floor hides the finite-n estimator bias
    # and the full window averages out the oscillatory modulation
    floor = float(cfg.estimators.get("noise_floor") or 0.05)
    w2_fit = fit_rate(path.times, w2_curve, noise_floor=floor)
    kl_fit = fit_rate(path.times, np.maximum(kl_curve, 0.0), noise_floor=floor**2)
    ratio = kl_fit.lambda_hat / w2_fit.lambda_hat
    passed = (abs(w2_fit.lambda_hat - oracle_rate) <= 0.1 * oracle_rate
              and 1.7 <= ratio <= 2.3)
    _curve_csv(out / "data" / "decay.csv", ["t", "w2", "kl"],
               [path.times, w2_curve, kl_curve])
    _decay_plot(out, "decay", path.times, [w2_curve, np.maximum(kl_curve, 1e-12)],
                ["W2 to invariant", "KL to invariant"])
    return passed, {
        "w2_rate": w2_fit.lambda_hat,
        "kl_rate": kl_fit.lambda_hat,
        "ratio": ratio,
        "oracle_rate": oracle_rate,
        "fit_window": [w2_fit.t_lo, w2_fit.t_hi],
    }


class EnsemblePathView:
    """CSV emission helper keeping trajectory files to a sane size."""

    def __init__(self, path, max_traj=100):
        self.path = path
        self.max_traj = max_traj

    def dump_tail_csv(self, fh):
        d = self.path.states[0].shape[1] // 2
        fh.write(",".join(
            ["traj_id", "t"]
            + [f"x_{j + 1}" for j in range(d)]
            + [f"y_{j + 1}" for j in range(d)]
        ) + "\n")
        keep = min(self.max_traj, self.path.states[0].shape[0])
        for t, state in zip(self.path.times, self.path.states):
            for i in range(keep):
                fh.write(",".join([str(i), repr(float(t))]
                                  + [repr(float(v)) for v in state[i]]) + "\n")


def _oscillation_period(model):
    eigs = np.linalg.eigvals(model.B)
    imag = np.abs(eigs.imag).max()
    return float(2 * np.pi / imag) if imag > 1e-12 else 1.0


def _ergodicity_mv(cfg, out):
    spec, diff = cfg.build_model()
    mf = cfg.meanfield
    d = spec.d
    kappa = spec.interaction.kappa if spec.interaction is not None else 0.0
    A_eff = spec.linear_position + kappa * np.eye(d)
    model = LinearModel.from_kinetic(A_eff, spec.friction, diff.sigma_sigma_t)
    mubar = invariant_law(model)
    n = int(cfg.ensemble.get("n", 2000))
    icfg = cfg.build_integrator()
    times = np.linspace(0.0, icfg.T, 25)
    icfg = cfg.build_integrator(snapshot_times=list(times))
    z0 = _displaced_start(spec, n, cfg.seed)
    path = simulate(spec, diff, z0, icfg, particles=True)
    fits = [fit_gaussian(s) for s in path.states]
    w2_curve = np.array([w2_gaussian(g, mubar) for g in fits])
    fit = fit_rate(path.times, w2_curve, noise_floor=5e-3,
                   window=(_oscillation_period(model), icfg.T))
    passed = fit.lambda_hat > 0
    _curve_csv(out / "data" / "mv_decay.csv", ["t", "w2"], [path.times, w2_curve])
    _decay_plot(out, "mv_decay", path.times, [w2_curve], ["W2 to MV invariant"])
    return passed, {
        "w2_rate": fit.lambda_hat,
        "kappa": kappa,
        "self_consistent_rate_oracle": model.spectral_rate,
    }


def _chaos_scan(cfg, out):
    spec, diff = cfg.build_model()
    mf = cfg.meanfield
    res = chaos_scan(
        spec, diff,
        N_list=mf["N_list"],
        T_stat=float(mf.get("T_stat", 10.0)),
        replicates=int(mf.get("replicates", 8)),
        n_ref=int(mf.get("n_ref", 1024)),
        dt=float(cfg.integrator.get("dt", 1e-2)),
        seed=cfg.seed,
    )
    passed = -0.65 <= res.slope <= -0.35
    _curve_csv(out / "data" / "chaos.csv",
               ["N", "mean_sq_w2", "stderr", "rd_pred"],
               [np.asarray(res.N_values, float), res.mean_sq, res.stderr, res.rd_pred])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(res.N_values, res.mean_sq, "o-", label="mean squared W2")
    scale = res.mean_sq[0] / res.rd_pred[0]
    ax.loglog(res.N_values, scale * res.rd_pred, "--", label="R_d(N) prediction")
    ax.set_xlabel("N")
    ax.set_ylabel("squared distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "plots" / "chaos.svg")
    plt.close(fig)
    return passed, {
        "slope": res.slope,
        "N_values": list(map(int, res.N_values)),
        "mean_sq_w2": res.mean_sq.tolist(),
        "stderr": res.stderr.tolist(),
        "rd_pred": res.rd_pred.tolist(),
        "stationarity_ok": res.stationarity_ok,
    }


def _hypo_verify(cfg, out):
    spec, diff = cfg.build_model()
    hy = cfg.hypo
    consts = build_constants(
        K_b=float(hy.get("K_b", spec.K_b)),
        delta1=float(hy.get("delta1", float(np.linalg.eigvalsh(diff.sigma_sigma_t).min()))),
        C_PI=float(hy.get("C_PI", 1.0)),
    )
    t_grid = hy.get("t_grid", list(np.linspace(0.1, 10.0, 25)))
    rt = check_rt_negativity(spec, consts, diff, t_grid,
                             z_trials=int(hy.get("z_trials", 1000)), seed=cfg.seed)
    # quadratic-form cap on random probes
    gen = _rng.substream(cfg.seed, 61)
    zs = gen.standard_normal((10_000, 2 * spec.d))
    zs /= np.linalg.norm(zs, axis=1, keepdims=True)
    G3 = build_weight(consts, 3.0, spec.d).G
    cap = float(np.max(np.einsum("ni,ij,nj->n", zs, G3, zs)))
    cap_ok = cap <= 2 * consts.eps + 1e-12
    t_func = float(hy.get("t_functional", 1.5))
    model = LinearModel.from_kinetic(spec.linear_position, spec.friction,
                                     diff.sigma_sigma_t)
    mubar = invariant_law(model)
    stat = Ensemble(mubar.sample(int(hy.get("outer", 512)), _rng.substream(cfg.seed, 62)))
    f = TanhTest(np.ones(2 * spec.d) / np.sqrt(2 * spec.d))
    mc = McConfig(inner=int(hy.get("inner", 128)), outer=stat.n,
                  dt=float(cfg.integrator.get("dt", 1e-2)), seed=cfg.seed)
    n0 = eval_functional(spec, diff, stat, f, 0.0, consts, mc)
    nt = eval_functional(spec, diff, stat, f, t_func, consts, mc)
    bound = decay_factor(consts, t_func) * n0.value
    decay_ok = nt.value <= bound + 3 * np.hypot(nt.se, decay_factor(consts, t_func) * n0.se)
    passed = bool(rt.holds and cap_ok and decay_ok)
    _curve_csv(out / "data" / "hypo.csv", ["t", "worst_margin"],
               [rt.t_grid, np.full(len(rt.t_grid), rt.worst_margin)])
    _decay_plot(out, "hypo_functional", [0.0, t_func],
                [[n0.value, nt.value], [n0.value, bound]],
                ["functional", "decay bound"])
    return passed, {
        "M": consts.M,
        "eps": consts.eps,
        "velocity_margin": consts.velocity_margin,
        "rt_holds": bool(rt.holds),
        "rt_worst_margin": rt.worst_margin,
        "quadratic_cap": cap,
        "quadratic_cap_limit": 2 * consts.eps,
        "functional_t0": n0.value,
        "functional_t": nt.value,
        "functional_bound": bound,
        "decay_ok": bool(decay_ok),
    }


def _dissipativity(cfg, out):
    spec, diff = cfg.build_model()
    ds = cfg.dissipativity
    trials = int(ds.get("trials", 100_000))
    if ds.get("cert"):
        c = ds["cert"]
        cert = DissipativityCert(theta=c["theta"], r=c["r"], r0=c["r0"], R=c["R"])
        rep = check_patdi(spec, cert, trials=trials, seed=cfg.seed)
    else:
        grid = ds.get("grid", {
            "r_values": [0.5, 1.0, 2.0],
            "r0_values": [-0.5, 0.0, 0.5],
            "R_values": [1.0, 3.0],
        })
        cert = search_cert(spec, grid, trials=min(trials, 20_000), seed=cfg.seed)
        if cert is None:
            return False, {"certified": False, "reason": "no certificate found on grid"}
        rep = check_patdi(spec, cert, trials=trials, seed=cfg.seed + 1)
    summary = {
        "certified": bool(rep.holds),
        "cert": cert.to_dict(),
        "worst_margin": rep.worst_margin,
        "trials": rep.trials,
    }
    if not rep.holds and rep.witness is not None:
        summary["witness"] = [w.tolist() for w in rep.witness]
    _curve_csv(out / "data" / "dissipativity.csv", ["worst_margin", "trials"],
               [[rep.worst_margin], [float(rep.trials)]])
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(["margin"], [rep.worst_margin])
    ax.set_ylabel("worst LHS + theta |dz|^2")
    fig.tight_layout()
    fig.savefig(out / "plots" / "dissipativity.svg")
    plt.close(fig)
    return bool(rep.holds), summary


_PIPELINE_FNS = {
    "ergodicity-classical": _ergodicity_classical,
    "ergodicity-mv": _ergodicity_mv,
    "chaos-scan": _chaos_scan,
    "hypo-verify": _hypo_verify,
    "dissipativity": _dissipativity,
}


def run_experiment(cfg):
    """Execute the configured pipeline; returns the summary dict.

    summary["passed"] reflects the pipeline's acceptance condition; files
    land under cfg.out (data/*.csv, plots/*.svg, summary.json).
    """
    if cfg.pipeline not in _PIPELINE_FNS:
        raise ConfigError(f"unknown pipeline {cfg.pipeline!r}; choose from {PIPELINES}")
    out = _out_dirs(cfg.out)
    t0 = time.time()
    passed, details = _PIPELINE_FNS[cfg.pipeline](cfg, out)
    summary = {
        "pipeline": cfg.pipeline,
        "passed": bool(passed),
        "seed": cfg.seed,
        "backend": backend_name(),
        "runtime_s": round(time.time() - t0, 3),
        "details": details,
    }
    _write_summary(out, summary)
    return summary
