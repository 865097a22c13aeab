//! Command-line harness for the quantum filtering simulator.
//!
//! Exit codes: 0 success; 1 usage/config error; 2 runtime or numerical
//! failure; 3 check failure in `--assert` mode.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use qfilter::analysis::{
    generator_mc_estimate, generator_v_analytic, generator_v_capital_analytic,
    generator_vv_analytic, lyapunov_v_small, reachability_check, ReachabilitySystem,
};
use qfilter::control::ControlLaw;
use qfilter::operators::{SpinParams, TargetKind};
use qfilter_cli::config::{ConfigError, ControllerConfig, SimulationConfig, SystemConfig};
use qfilter_cli::harness::{
    compute_stats, reduction_experiment, run_ensemble, run_trajectory, RunContext,
};
use qfilter_cli::io::{
    default_out_dir, ensemble_json, read_config, write_outputs, write_trajectory_csv,
};

#[derive(Parser)]
#[command(
    name = "qfilter-cli",
    version,
    about = "Quantum filtering SDE simulator: trajectories, ensembles, generator and reachability checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a single trajectory and write its CSV log.
    Simulate {
        /// Config file (strict JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory index (selects the RNG stream).
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Output directory (default: $QFILTER_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured ensemble and write CSVs plus ensemble.json.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's n_trajectories.
        #[arg(long)]
        trajectories: Option<usize>,
        /// Worker threads (default: rayon's choice). Results are identical
        /// for any value.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// State-reduction experiment (requires the zero controller): ensemble
    /// plus per-eigenstate collapse classification.
    Reduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of a closed-form generator at the configured
    /// initial state. The law is implied by the function: `v` uses u = 0,
    /// `V` the spin feedback law, `VV` the feedback-branch law of the
    /// configured system; the config's own controller field is ignored.
    CheckGenerator {
        #[arg(long)]
        config: PathBuf,
        /// One of: V, v, VV.
        #[arg(long)]
        function: String,
        /// Generator time increment δ.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Monte Carlo samples.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with code 3 unless |mc − analytic| ≤ 3·stderr + bias allowance.
        #[arg(long)]
        assert: bool,
        /// Absolute discretization-bias allowance used by --assert.
        #[arg(long, default_value_t = 0.05)]
        bias_allowance: f64,
    },
    /// Spectral reachability diagnostics of the drive matrix
    /// A = −iG − F_z² + κF_z.
    Reachability {
        /// One of: spin, two-qubit.
        #[arg(long)]
        system: String,
        /// 2J for the spin system.
        #[arg(long, default_value_t = 2)]
        two_j: u32,
        /// Target eigenstate index (default: 2J, the highest level).
        #[arg(long)]
        target_m: Option<usize>,
        /// Bell-type target for the two-qubit system: symmetric or
        /// antisymmetric.
        #[arg(long, default_value = "antisymmetric")]
        kind: String,
        /// Drive strength κ.
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        /// Degeneracy threshold.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Exit with code 3 unless the check passes.
        #[arg(long)]
        assert: bool,
    },
    /// Parse and validate a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            // Config errors are usage errors (1); everything else is a
            // runtime failure (2).
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load(config: &PathBuf, seed: Option<u64>, trajectories: Option<usize>) -> anyhow::Result<SimulationConfig> {
    let mut cfg = read_config(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(n) = trajectories {
        cfg.n_trajectories = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            Ok(pool.install(f))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Simulate {
            config,
            seed,
            index,
            out,
        } => {
            let cfg = load(&config, seed, None)?;
            let ctx = RunContext::new(&cfg)?;
            let record = run_trajectory(&ctx, &cfg, index);
            let dir = out.unwrap_or_else(default_out_dir);
            std::fs::create_dir_all(&dir)?;
            let path = write_trajectory_csv(&dir, &record)?;
            let stats = compute_stats(std::slice::from_ref(&record), &cfg);
            let doc = ensemble_json(&cfg, &stats, std::slice::from_ref(&record));
            std::fs::write(dir.join("ensemble.json"), serde_json::to_string_pretty(&doc)?)?;
            if let Some(why) = &record.failed {
                eprintln!("trajectory {index} failed: {why}");
                return Ok(ExitCode::from(2));
            }
            println!(
                "trajectory {index}: converged={} final_fidelity={:.6} switches={} -> {}",
                record.converged,
                record.final_fidelity,
                record.switch_events.len(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Ensemble {
            config,
            seed,
            trajectories,
            threads,
            out,
        } => {
            let cfg = load(&config, seed, trajectories)?;
            let ctx = RunContext::new(&cfg)?;
            let (records, stats) = in_pool(threads, || run_ensemble(&ctx, &cfg))?;
            let dir = out.unwrap_or_else(default_out_dir);
            write_outputs(&dir, &cfg, &stats, &records)?;
            println!(
                "{} trajectories ({} failed): convergence {:.4}, mean switches {:.2} -> {}",
                stats.n,
                stats.n_failed,
                stats.convergence_fraction,
                stats.mean_switch_count,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Reduce {
            config,
            seed,
            trajectories,
            threads,
            out,
        } => {
            let cfg = load(&config, seed, trajectories)?;
            let ctx = RunContext::new(&cfg)?;
            let (records, stats) = in_pool(threads, || reduction_experiment(&ctx, &cfg))??;
            let dir = out.unwrap_or_else(default_out_dir);
            write_outputs(&dir, &cfg, &stats, &records)?;
            let hist = stats
                .collapse_histogram
                .as_ref()
                .map(|h| {
                    h.iter()
                        .map(|x| format!("{x:.4}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .unwrap_or_default();
            println!(
                "{} trajectories: resolved {:.4}, histogram [{}] -> {}",
                stats.n,
                stats.resolved_fraction.unwrap_or(f64::NAN),
                hist,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CheckGenerator {
            config,
            function,
            delta,
            samples,
            seed,
            assert,
            bias_allowance,
        } => {
            let cfg = load(&config, seed, None)?;
            let report = check_generator(&cfg, &function, delta, samples)?;
            let deviation = (report.mc_estimate - report.analytic).abs();
            let tolerance = 3.0 * report.mc_stderr + bias_allowance;
            let pass = deviation <= tolerance;
            let doc = json!({
                "function": function,
                "analytic": report.analytic,
                "mc_estimate": report.mc_estimate,
                "mc_stderr": report.mc_stderr,
                "n_samples": report.n_samples,
                "delta": report.delta,
                "deviation": deviation,
                "tolerance": tolerance,
                "pass": pass,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            if assert && !pass {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Reachability {
            system,
            two_j,
            target_m,
            kind,
            kappa,
            tol,
            assert,
        } => {
            let sys = match system.as_str() {
                "spin" => ReachabilitySystem::Spin {
                    params: SpinParams::new(two_j)
                        .map_err(|e| ConfigError(format!("--two-j: {e}")))?,
                    target_m: target_m.unwrap_or(two_j as usize),
                },
                "two-qubit" => ReachabilitySystem::TwoQubit {
                    kind: match kind.as_str() {
                        "symmetric" => TargetKind::TwoQubitSymmetric,
                        "antisymmetric" => TargetKind::TwoQubitAntisymmetric,
                        other => {
                            return Err(ConfigError(format!(
                                "--kind: '{other}' is not one of symmetric, antisymmetric"
                            ))
                            .into())
                        }
                    },
                },
                other => {
                    return Err(ConfigError(format!(
                        "--system: '{other}' is not one of spin, two-qubit"
                    ))
                    .into())
                }
            };
            let report = reachability_check(&sys, kappa, tol)
                .map_err(|e| anyhow::anyhow!("reachability check failed: {e}"))?;
            let doc = json!({
                "kappa": report.kappa,
                "eigenvalues": report.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "eigenvalue_min_gap": report.eigenvalue_min_gap,
                "min_abs_eigvec_entry": report.min_abs_eigvec_entry,
                "vandermonde_logdet_modulus": report.vandermonde_logdet_modulus,
                "pass": report.pass,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            if assert && !report.pass {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ValidateConfig { config } => {
            let cfg = read_config(&config)?;
            println!(
                "ok: {} system, {} steps × {} trajectories",
                match cfg.system {
                    SystemConfig::Spin { two_j } => format!("spin (2J = {two_j})"),
                    SystemConfig::TwoQubit => "two-qubit".into(),
                },
                cfg.steps(),
                cfg.n_trajectories
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn check_generator(
    cfg: &SimulationConfig,
    function: &str,
    delta: f64,
    samples: usize,
) -> anyhow::Result<qfilter::analysis::GeneratorReport> {
    let probe = {
        // The generator check defines its own law; reuse the context
        // machinery with the controller field neutralized.
        let mut c = cfg.clone();
        c.controller = ControllerConfig::Zero;
        RunContext::new(&c)?
    };
    let rho0 = probe
        .fixed_initial()
        .ok_or_else(|| {
            ConfigError(
                "initial_state: random_pure is not usable with check-generator; \
                 use maximally_mixed, eigenstate, or explicit"
                    .into(),
            )
        })?
        .clone();
    let spec = &probe.spec;
    let target = &probe.target;
    let report = match function {
        "v" => {
            let fz = spec.c().clone();
            let analytic = generator_v_analytic(spec, &rho0);
            generator_mc_estimate(
                spec,
                &ControlLaw::Zero,
                &move |rho| lyapunov_v_small(rho, &fz),
                analytic,
                &rho0,
                delta,
                samples,
                cfg.master_seed,
            )
        }
        "V" => {
            if !matches!(cfg.system, SystemConfig::Spin { .. }) {
                return Err(ConfigError(
                    "--function V applies to spin systems only".into(),
                )
                .into());
            }
            let analytic = generator_v_capital_analytic(spec, &rho0, target);
            let t = target.clone();
            generator_mc_estimate(
                spec,
                &ControlLaw::FeedbackSpin(target.clone()),
                &move |rho| qfilter::analysis::lyapunov_v_capital(rho, &t),
                analytic,
                &rho0,
                delta,
                samples,
                cfg.master_seed,
            )
        }
        "VV" => {
            let analytic = generator_vv_analytic(spec, &rho0, target);
            let law = match cfg.system {
                SystemConfig::Spin { .. } => ControlLaw::FeedbackSpin(target.clone()),
                SystemConfig::TwoQubit => ControlLaw::FeedbackTwoQubit(target.clone()),
            };
            let t = target.clone();
            generator_mc_estimate(
                spec,
                &law,
                &move |rho| qfilter::analysis::lyapunov_vv(rho, &t),
                analytic,
                &rho0,
                delta,
                samples,
                cfg.master_seed,
            )
        }
        other => {
            return Err(ConfigError(format!(
                "--function: '{other}' is not one of V, v, VV"
            ))
            .into())
        }
    };
    report.map_err(|e| anyhow::anyhow!("generator check failed: {e}"))
}
