//! Deterministic trajectory and ensemble execution.
//!
//! Every trajectory is a pure function of (config, master_seed, index): the
//! index selects an independent RNG stream, a Haar-random initial state (when
//! configured) is drawn from that stream before any dynamics noise, and
//! ensemble aggregation runs in index order, so results are bit-identical
//! across thread counts.

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qfilter::analysis::lyapunov_v_small;
use qfilter::control::{ControlLaw, ControlParams, Controller, Regime};
use qfilter::dynamics::{trajectory_rng, Stepper, SystemSpec};
use qfilter::operators::{target_state, SpinParams, TargetKind, TargetSpec};
use qfilter::qstate::{
    fidelity_to_target, sample_pure, trace_inner, ComplexMatrix, DensityMatrix, Tolerances,
};
use qfilter::Complex64;

use crate::config::{
    ConfigError, ControllerConfig, InitialStateConfig, SimulationConfig, SystemConfig,
    TargetConfig,
};

/// Initial state prepared once per run.
#[derive(Debug, Clone)]
enum PreparedInitial {
    Fixed(DensityMatrix),
    RandomPure,
}

/// Everything derived from a validated config that trajectories share.
#[derive(Debug, Clone)]
pub struct RunContext {
    /// System operators and measurement efficiency.
    pub spec: SystemSpec,
    /// Control law template (stateful controllers are built per trajectory).
    pub law: ControlLaw,
    /// Resolved target state.
    pub target: TargetSpec,
    /// Control Hamiltonians, for controller construction.
    pub controls: Vec<ComplexMatrix>,
    /// Measurement operator F_z (the system's c), for v(ρ) and Tr[F_zρ].
    pub fz: ComplexMatrix,
    /// Hilbert-space dimension.
    pub dim: usize,
    /// Integration steps per trajectory.
    pub steps: usize,
    /// State-validity tolerances.
    pub tol: Tolerances,
    initial: PreparedInitial,
}

impl RunContext {
    /// Builds the shared context, surfacing any config-induced construction
    /// error with the offending field named.
    pub fn new(cfg: &SimulationConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let spec = match cfg.system {
            SystemConfig::Spin { two_j } => {
                let p = SpinParams::new(two_j)
                    .map_err(|e| ConfigError(format!("system.two_j: {e}")))?;
                SystemSpec::spin(&p, cfg.eta).map_err(|e| ConfigError(format!("eta: {e}")))?
            }
            SystemConfig::TwoQubit => SystemSpec::two_qubit(cfg.eta)
                .map_err(|e| ConfigError(format!("eta: {e}")))?,
        };
        let target = match (cfg.system, cfg.resolved_target()) {
            (SystemConfig::Spin { two_j }, TargetConfig::SpinEigenstate { m }) => {
                let p = SpinParams::new(two_j).expect("validated");
                target_state(TargetKind::SpinEigenstate(m), Some(&p))
                    .map_err(|e| ConfigError(format!("target.m: {e}")))?
            }
            (SystemConfig::TwoQubit, TargetConfig::TwoQubitSymmetric) => {
                target_state(TargetKind::TwoQubitSymmetric, None).expect("static target")
            }
            (SystemConfig::TwoQubit, TargetConfig::TwoQubitAntisymmetric) => {
                target_state(TargetKind::TwoQubitAntisymmetric, None).expect("static target")
            }
            _ => unreachable!("validate() rejects mismatched system/target"),
        };
        let law = match &cfg.controller {
            ControllerConfig::Zero => ControlLaw::Zero,
            ControllerConfig::Constant { values } => ControlLaw::Constant(values.clone()),
            ControllerConfig::Feedback => ControlLaw::FeedbackSpin(target.clone()),
            ControllerConfig::Switching { gamma } => ControlLaw::SwitchingSpin(
                ControlParams::new(*gamma, target.clone())
                    .map_err(|e| ConfigError(format!("controller.gamma: {e}")))?,
            ),
            ControllerConfig::TwoQubitFeedback => ControlLaw::FeedbackTwoQubit(target.clone()),
            ControllerConfig::TwoQubitSwitching { gamma } => ControlLaw::SwitchingTwoQubit(
                ControlParams::new(*gamma, target.clone())
                    .map_err(|e| ConfigError(format!("controller.gamma: {e}")))?,
            ),
        };
        let controls = spec.controls().to_vec();
        let dim = cfg.dim();
        // Probe controller construction once so per-trajectory builds can't fail.
        Controller::new(law.clone(), &controls, dim)
            .map_err(|e| ConfigError(format!("controller: {e}")))?;
        let tol = Tolerances::default();
        let initial = match &cfg.initial_state {
            InitialStateConfig::MaximallyMixed => {
                PreparedInitial::Fixed(DensityMatrix::maximally_mixed(dim))
            }
            InitialStateConfig::Eigenstate { m } => {
                PreparedInitial::Fixed(DensityMatrix::eigenstate(dim, *m))
            }
            InitialStateConfig::Explicit { matrix } => {
                let m = ComplexMatrix::from_fn(dim, |i, j| {
                    Complex64::new(matrix[i][j][0], matrix[i][j][1])
                });
                PreparedInitial::Fixed(DensityMatrix::new(m, &tol).map_err(|e| {
                    ConfigError(format!("initial_state.matrix: not a density matrix ({e})"))
                })?)
            }
            InitialStateConfig::RandomPure => PreparedInitial::RandomPure,
        };
        Ok(RunContext {
            spec,
            law,
            target,
            controls,
            fz: cfg_fz_owned(&cfg.system),
            dim,
            steps: cfg.steps(),
            tol,
            initial,
        })
    }

    /// The deterministic initial state, or None for `random_pure`.
    pub fn fixed_initial(&self) -> Option<&DensityMatrix> {
        match &self.initial {
            PreparedInitial::Fixed(r) => Some(r),
            PreparedInitial::RandomPure => None,
        }
    }
}

fn cfg_fz_owned(system: &SystemConfig) -> ComplexMatrix {
    match system {
        SystemConfig::Spin { two_j } => {
            let p = SpinParams::new(*two_j).expect("validated");
            qfilter::operators::angular_momentum_ops(&p).1
        }
        SystemConfig::TwoQubit => qfilter::operators::two_qubit_ops().fz,
    }
}

/// One recorded point along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Time.
    pub t: f64,
    /// Tr[ρρ_f].
    pub fidelity: f64,
    /// v(ρ) = Tr[F_z²ρ] − Tr[F_zρ]².
    pub v: f64,
    /// Tr[F_zρ].
    pub tr_fz: f64,
    /// Applied control (u₂ = 0 for one-channel systems).
    pub u: [f64; 2],
    /// Active regime (non-hysteretic laws report Feedback).
    pub regime: Regime,
}

/// A regime change of the switching controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    /// Time of the switch.
    pub t: f64,
    /// Regime before.
    pub from: Regime,
    /// Regime after.
    pub to: Regime,
    /// Fidelity that triggered it.
    pub fidelity: f64,
}

/// Complete log of one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// RNG stream index.
    pub seed_index: usize,
    /// Strided samples, strictly increasing in t, final step always included.
    pub samples: Vec<Sample>,
    /// All regime changes.
    pub switch_events: Vec<SwitchEvent>,
    /// Final state (None if the trajectory failed).
    pub final_rho: Option<DensityMatrix>,
    /// v(ρ_T), NaN if failed.
    pub final_v: f64,
    /// Tr[ρ_Tρ_f], NaN if failed.
    pub final_fidelity: f64,
    /// V(ρ_T) < converge_eps.
    pub converged: bool,
    /// Failure context (step index and time), if the integrator blew up.
    pub failed: Option<String>,
}

/// Integrates one trajectory; deterministic in (config, master_seed, index).
pub fn run_trajectory(ctx: &RunContext, cfg: &SimulationConfig, index: usize) -> TrajectoryRecord {
    let mut rng = trajectory_rng(cfg.master_seed, index as u64);
    let mut rho = match &ctx.initial {
        PreparedInitial::Fixed(r) => r.clone(),
        PreparedInitial::RandomPure => sample_pure(ctx.dim, &mut rng),
    };
    let mut controller =
        Controller::new(ctx.law.clone(), &ctx.controls, ctx.dim).expect("probed at context build");
    let mut stepper = Stepper::new(ctx.spec.clone(), ctx.tol);
    let channels = ctx.controls.len();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();

    let mut samples = Vec::with_capacity(ctx.steps / cfg.record_stride + 2);
    let mut switch_events = Vec::new();
    let mut failed = None;
    let mut last_u = [0.0f64; 2];
    let mut prev_regime: Option<Regime> = None;

    for k in 0..ctx.steps {
        let t = k as f64 * dt;
        {
            let u = controller.update(&rho);
            last_u = [u[0], u.get(1).copied().unwrap_or(0.0)];
        }
        let regime = controller.regime();
        if let Some(prev) = prev_regime {
            if prev != regime {
                switch_events.push(SwitchEvent {
                    t,
                    from: prev,
                    to: regime,
                    fidelity: fidelity_to_target(&rho, ctx.target.rho_f()),
                });
            }
        }
        prev_regime = Some(regime);
        if k % cfg.record_stride == 0 {
            samples.push(Sample {
                t,
                fidelity: fidelity_to_target(&rho, ctx.target.rho_f()),
                v: lyapunov_v_small(&rho, &ctx.fz),
                tr_fz: trace_inner(&ctx.fz, rho.matrix()).re,
                u: last_u,
                regime,
            });
        }
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        if let Err(e) = stepper.step_in_place(&mut rho, &last_u[..channels], z * sqrt_dt, dt) {
            failed = Some(format!("step {k} of {} (t = {t:.6}): {e}", ctx.steps));
            break;
        }
    }

    if let Some(context) = failed {
        return TrajectoryRecord {
            seed_index: index,
            samples,
            switch_events,
            final_rho: None,
            final_v: f64::NAN,
            final_fidelity: f64::NAN,
            converged: false,
            failed: Some(context),
        };
    }

    let t_end = ctx.steps as f64 * dt;
    let final_fidelity = fidelity_to_target(&rho, ctx.target.rho_f());
    let final_v = lyapunov_v_small(&rho, &ctx.fz);
    samples.push(Sample {
        t: t_end,
        fidelity: final_fidelity,
        v: final_v,
        tr_fz: trace_inner(&ctx.fz, rho.matrix()).re,
        u: last_u,
        regime: prev_regime.unwrap_or(Regime::Feedback),
    });
    let converged = 1.0 - final_fidelity < cfg.converge_eps;
    TrajectoryRecord {
        seed_index: index,
        samples,
        switch_events,
        final_rho: Some(rho),
        final_v,
        final_fidelity,
        converged,
        failed: None,
    }
}

/// A point of the mean fidelity path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    /// Time.
    pub t: f64,
    /// Mean Tr[ρ_tρ_f] over the ensemble.
    pub mean: f64,
    /// Standard error (absent when fewer than 2 trajectories contribute).
    pub stderr: Option<f64>,
}

/// Per-trajectory OLS slope statistics of Tr[ρ_tρ_f] over t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftStats {
    /// Mean slope across trajectories.
    pub slope: f64,
    /// Standard error of the mean slope (absent for a single trajectory).
    pub stderr: Option<f64>,
}

/// Ensemble summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Ensemble size.
    pub n: usize,
    /// Trajectories that failed (counted as unconverged/unresolved).
    pub n_failed: usize,
    /// Fraction with V(ρ_T) < converge_eps.
    pub convergence_fraction: f64,
    /// Binomial standard error of the convergence fraction (absent for n = 1).
    pub convergence_stderr: Option<f64>,
    /// Fraction with v(ρ_T) < converge_eps (u = 0 runs only).
    pub resolved_fraction: Option<f64>,
    /// Per-eigenstate collapse fractions, gated on v(ρ_T) < converge_eps
    /// (u = 0 runs only); sums to ≤ 1, remainder unresolved.
    pub collapse_histogram: Option<Vec<f64>>,
    /// Mean number of regime switches.
    pub mean_switch_count: f64,
    /// Maximum number of regime switches.
    pub max_switch_count: usize,
    /// Mean fidelity over time.
    pub mean_fidelity_path: Vec<PathPoint>,
    /// Martingale check (u = 0 runs only): mean per-trajectory fidelity slope.
    pub martingale_drift: Option<DriftStats>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some((var / n as f64).sqrt()))
}

fn ols_slope(samples: &[Sample]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let t_mean = samples.iter().map(|s| s.t).sum::<f64>() / n;
    let f_mean = samples.iter().map(|s| s.fidelity).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        num += (s.t - t_mean) * (s.fidelity - f_mean);
        den += (s.t - t_mean) * (s.t - t_mean);
    }
    (den > 0.0).then(|| num / den)
}

/// Aggregates records (in index order) into ensemble statistics.
pub fn compute_stats(records: &[TrajectoryRecord], cfg: &SimulationConfig) -> EnsembleStats {
    let n = records.len();
    let n_failed = records.iter().filter(|r| r.failed.is_some()).count();
    let n_converged = records.iter().filter(|r| r.converged).count();
    let p = n_converged as f64 / n as f64;
    let convergence_stderr = (n >= 2).then(|| (p * (1.0 - p) / n as f64).sqrt());

    let is_zero_law = matches!(cfg.controller, ControllerConfig::Zero);
    let dim = cfg.dim();
    let (resolved_fraction, collapse_histogram) = if is_zero_law {
        let mut hist = vec![0.0; dim];
        let mut resolved = 0usize;
        for r in records {
            let Some(rho) = &r.final_rho else { continue };
            if r.final_v < cfg.converge_eps {
                resolved += 1;
                let mut best = 0;
                for m in 1..dim {
                    if rho.matrix()[(m, m)].re > rho.matrix()[(best, best)].re {
                        best = m;
                    }
                }
                hist[best] += 1.0;
            }
        }
        for h in &mut hist {
            *h /= n as f64;
        }
        (Some(resolved as f64 / n as f64), Some(hist))
    } else {
        (None, None)
    };

    let mean_switch_count =
        records.iter().map(|r| r.switch_events.len() as f64).sum::<f64>() / n as f64;
    let max_switch_count = records
        .iter()
        .map(|r| r.switch_events.len())
        .max()
        .unwrap_or(0);

    let max_len = records.iter().map(|r| r.samples.len()).max().unwrap_or(0);
    let mut mean_fidelity_path = Vec::with_capacity(max_len);
    let mut buf = Vec::with_capacity(n);
    for i in 0..max_len {
        buf.clear();
        let mut t = f64::NAN;
        for r in records {
            if let Some(s) = r.samples.get(i) {
                if t.is_nan() {
                    t = s.t;
                }
                buf.push(s.fidelity);
            }
        }
        let (mean, stderr) = mean_and_stderr(&buf);
        mean_fidelity_path.push(PathPoint { t, mean, stderr });
    }

    let martingale_drift = if is_zero_law {
        let slopes: Vec<f64> = records.iter().filter_map(|r| ols_slope(&r.samples)).collect();
        if slopes.is_empty() {
            None
        } else {
            let (slope, stderr) = mean_and_stderr(&slopes);
            Some(DriftStats { slope, stderr })
        }
    } else {
        None
    };

    EnsembleStats {
        n,
        n_failed,
        convergence_fraction: p,
        convergence_stderr,
        resolved_fraction,
        collapse_histogram,
        mean_switch_count,
        max_switch_count,
        mean_fidelity_path,
        martingale_drift,
    }
}

/// Runs the configured ensemble in parallel (deterministic aggregation in
/// index order) and computes its statistics.
pub fn run_ensemble(
    ctx: &RunContext,
    cfg: &SimulationConfig,
) -> (Vec<TrajectoryRecord>, EnsembleStats) {
    let records: Vec<TrajectoryRecord> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| run_trajectory(ctx, cfg, i))
        .collect();
    let stats = compute_stats(&records, cfg);
    (records, stats)
}

/// The state-reduction experiment: requires u ≡ 0, then classifies every
/// resolved final state (v < converge_eps) to its maximum-overlap eigenstate.
pub fn reduction_experiment(
    ctx: &RunContext,
    cfg: &SimulationConfig,
) -> Result<(Vec<TrajectoryRecord>, EnsembleStats), ConfigError> {
    if !matches!(cfg.controller, ControllerConfig::Zero) {
        return Err(ConfigError(
            "controller: the reduction experiment requires {\"type\": \"zero\"}".into(),
        ));
    }
    Ok(run_ensemble(ctx, cfg))
}
