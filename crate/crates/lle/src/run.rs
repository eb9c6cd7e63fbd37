//! Command dispatch: runs the configured experiment and writes CSV tables,
//! JSON summaries, optional SVG plots, and a MANIFEST with content hashes.

use crate::config::{Command, GuessName, PerturbationKind, RunConfig};
use crate::continuation::{self, Branch};
use crate::evolution::{self, EvolutionConfig, Scheme};
use crate::field::{Field, TorusGrid};
use crate::linalg;
use crate::operators;
use crate::output::{self, OutputWriter};
use crate::pinning;
use crate::plot::{self, Series};
use crate::reductions::{self, DualPumpParams};
use crate::stationary::{self, GuessKind, Params, PhaseFix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("solve failure: {0}")]
    SolveFailure(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("output failure: {0}")]
    Output(#[from] output::OutputError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::SolveFailure(_) => 3,
            RunError::BlowUp(_) => 4,
            RunError::Output(_) => 5,
        }
    }
}

/// Execute a validated configuration. Artifacts are flushed as they are
/// produced; on failure the MANIFEST records the incompleteness.
pub fn run(cfg: &RunConfig) -> Result<(), RunError> {
    crate::config::validate(cfg).map_err(|e| RunError::Validation(e.to_string()))?;
    let mut w = OutputWriter::new(&cfg.run.output_dir)?;
    w.write("config_echo.toml", &crate::config::echo(cfg))?;
    let result = dispatch(cfg, &mut w);
    match &result {
        Ok(()) => w.finish(true, None)?,
        Err(e) => w.finish(false, Some(&e.to_string()))?,
    }
    result
}

fn dispatch(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    match cfg.run.command {
        Command::Solve => cmd_solve(cfg, w),
        Command::Spectrum => cmd_spectrum(cfg, w),
        Command::Veff => cmd_veff(cfg, w),
        Command::Continue => cmd_continue(cfg, w),
        Command::Simulate => cmd_simulate(cfg, w),
        Command::Reduce => cmd_reduce(cfg, w),
        Command::Asymptotics => cmd_asymptotics(cfg, w),
    }
}

fn grid_for(cfg: &RunConfig) -> Arc<TorusGrid> {
    Arc::new(TorusGrid::new(cfg.numerics.n).expect("validated"))
}

/// Solve the stationary problem configured in [numerics]: the guess is built
/// and converged at eps = 0, optionally shifted, and then ramped to the
/// requested eps with plain Newton (the Jacobian is regular off eps = 0).
fn solve_state(cfg: &RunConfig) -> Result<(Field, Params), RunError> {
    let p = cfg
        .model_params()
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let grid = grid_for(cfg);
    let p0 = p.with_eps(0.0);
    let guess = match cfg.numerics.guess {
        GuessName::Bright => stationary::initial_guess(&GuessKind::Bright, &p0, &grid),
        GuessName::Dark => stationary::initial_guess(&GuessKind::Dark, &p0, &grid),
        GuessName::ConstantPlusMode => stationary::initial_guess(
            &GuessKind::ConstantPlusMode {
                k: cfg.numerics.mode_k,
                delta: cfg.numerics.mode_delta,
            },
            &p0,
            &grid,
        ),
        GuessName::Constant => {
            let set = stationary::solve_constant_states(&p0);
            Ok(Field::constant(grid.clone(), set.lowest().value))
        }
    }
    .map_err(|e| RunError::Validation(e.to_string()))?;
    let rep = stationary::newton_solve_with(
        &guess,
        &p0,
        cfg.numerics.phase_fix,
        cfg.numerics.newton_tol,
        cfg.numerics.newton_max_iter,
    )
    .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    if !rep.converged {
        return Err(RunError::SolveFailure(format!(
            "Newton stalled at residual {:.3e} after {} iterations",
            rep.residual_norm, rep.iterations
        )));
    }
    let mut state = rep.solution;
    if let Some(sigma) = cfg.numerics.shift_to {
        state = state.shift(sigma);
    }
    if p.eps != 0.0 {
        for step in 1..=4 {
            let pe = p.with_eps(p.eps * step as f64 / 4.0);
            let rep = stationary::newton_solve_with(
                &state,
                &pe,
                PhaseFix::None,
                cfg.numerics.newton_tol,
                cfg.numerics.newton_max_iter,
            )
            .map_err(|e| RunError::SolveFailure(e.to_string()))?;
            if !rep.converged {
                return Err(RunError::SolveFailure(format!(
                    "eps ramp stalled at eps = {} with residual {:.3e}",
                    pe.eps, rep.residual_norm
                )));
            }
            state = rep.solution;
        }
    }
    Ok((state, p))
}

#[derive(Serialize)]
struct SolveSummary {
    residual_norm: f64,
    l2norm: f64,
    max_intensity: f64,
    min_intensity: f64,
    extremum_location: f64,
}

fn write_state_artifacts(
    w: &mut OutputWriter,
    cfg: &RunConfig,
    state: &Field,
    p: &Params,
) -> Result<(), RunError> {
    w.write_json("state.json", &output::state_to_record(state))?;
    w.write("profile.csv", &output::profile_csv(state))?;
    let ii: Vec<f64> = state.values().iter().map(|v| v.norm_sqr()).collect();
    let summary = SolveSummary {
        residual_norm: stationary::residual_norm(state, p),
        l2norm: state.l2_norm(),
        max_intensity: ii.iter().cloned().fold(0.0, f64::max),
        min_intensity: ii.iter().cloned().fold(f64::INFINITY, f64::min),
        extremum_location: continuation::intensity_extremum(state, p.d),
    };
    w.write_json("summary.json", &summary)?;
    if cfg.run.emit_svg {
        let xs: Vec<f64> = state.grid().points().to_vec();
        let svg = plot::render(
            "|u|^2",
            &[Series {
                xs: &xs,
                ys: &ii,
                color: "#d62728",
                scatter: false,
            }],
        );
        w.write("profile.svg", &svg)?;
    }
    Ok(())
}

fn cmd_solve(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let (state, p) = solve_state(cfg)?;
    write_state_artifacts(w, cfg, &state, &p)
}

#[derive(Serialize)]
struct SpectrumSummary {
    critical_re: f64,
    critical_im: f64,
    gap: f64,
    classification: operators::StabilityClass,
    count: usize,
    fraction_near_minus_mu: f64,
}

fn cmd_spectrum(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let (state, p) = solve_state(cfg)?;
    write_state_artifacts(w, cfg, &state, &p)?;
    let spec = operators::full_spectrum(&operators::assemble(&state, &p))
        .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    w.write("spectrum.csv", &output::spectrum_csv(&spec.eigenvalues))?;
    let near = spec
        .eigenvalues
        .iter()
        .filter(|z| (z.re + p.mu).abs() < 0.05)
        .count() as f64
        / spec.eigenvalues.len() as f64;
    let summary = SpectrumSummary {
        critical_re: spec.critical.re,
        critical_im: spec.critical.im,
        gap: spec.gap,
        classification: spec.classification,
        count: spec.eigenvalues.len(),
        fraction_near_minus_mu: near,
    };
    w.write_json("spectrum_summary.json", &summary)?;
    if cfg.run.emit_svg {
        let xs: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re).collect();
        let ys: Vec<f64> = spec.eigenvalues.iter().map(|z| z.im).collect();
        let svg = plot::render(
            "spectrum",
            &[Series {
                xs: &xs,
                ys: &ys,
                color: "#1f77b4",
                scatter: true,
            }],
        );
        w.write("spectrum.svg", &svg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VeffSummary {
    zeros: Vec<pinning::ZeroRecord>,
    non_simple: Vec<f64>,
    max_deviation_from_v: f64,
}

fn cmd_veff(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let p = cfg
        .model_params()
        .map_err(|e| RunError::Validation(e.to_string()))?;
    if p.eps != 0.0 {
        return Err(RunError::Validation(
            "veff requires eps = 0 (the kernel pair lives at the unperturbed state)".into(),
        ));
    }
    let (state, p) = solve_state(cfg)?;
    write_state_artifacts(w, cfg, &state, &p)?;
    let kp = operators::kernel_pair(&operators::assemble(&state, &p))
        .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    let ep = pinning::find_zeros(&kp, &p.potential)
        .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    w.write("veff.csv", &output::veff_csv(&ep.sigma_grid, &ep.values))?;
    w.write("zeros.csv", &output::zeros_csv(&ep.zeros))?;
    let max_dev = ep
        .sigma_grid
        .iter()
        .zip(&ep.values)
        .map(|(s, v)| (v - p.potential.eval(*s)).abs())
        .fold(0.0, f64::max);
    w.write_json(
        "veff_summary.json",
        &VeffSummary {
            zeros: ep.zeros.clone(),
            non_simple: ep.non_simple.clone(),
            max_deviation_from_v: max_dev,
        },
    )?;
    if cfg.run.emit_svg {
        let vs: Vec<f64> = ep.sigma_grid.iter().map(|&s| p.potential.eval(s)).collect();
        let svg = plot::render(
            "V_eff (blue) and V (gray)",
            &[
                Series {
                    xs: &ep.sigma_grid,
                    ys: &vs,
                    color: "#999999",
                    scatter: false,
                },
                Series {
                    xs: &ep.sigma_grid,
                    ys: &ep.values,
                    color: "#1f77b4",
                    scatter: false,
                },
            ],
        );
        w.write("veff.svg", &svg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BranchStateRecord {
    param: f64,
    state: output::StateRecord,
}

#[derive(Serialize)]
struct BranchSummary {
    points: usize,
    param_min: f64,
    param_max: f64,
    events: Vec<continuation::BranchEvent>,
    stable_count: usize,
}

fn cmd_continue(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let section = cfg.continuation.as_ref().expect("validated");
    let (state, p) = solve_state(cfg)?;
    let branch: Branch = continuation::continue_branch(
        &state,
        &p,
        section.parameter,
        (section.range[0], section.range[1]),
        &section.controls(),
    )
    .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    w.write("branch.csv", &output::branch_csv(&branch))?;
    let states: Vec<BranchStateRecord> = branch
        .points
        .iter()
        .map(|pt| BranchStateRecord {
            param: pt.param,
            state: output::state_to_record(&pt.state),
        })
        .collect();
    w.write_json("branch_states.json", &states)?;
    let summary = BranchSummary {
        points: branch.points.len(),
        param_min: branch
            .points
            .iter()
            .map(|p| p.param)
            .fold(f64::INFINITY, f64::min),
        param_max: branch
            .points
            .iter()
            .map(|p| p.param)
            .fold(f64::NEG_INFINITY, f64::max),
        events: branch.events.clone(),
        stable_count: branch.points.iter().filter(|p| p.stable).count(),
    };
    w.write_json("branch_summary.json", &summary)?;
    if cfg.run.emit_svg {
        let xs: Vec<f64> = branch.points.iter().map(|p| p.param).collect();
        let ys: Vec<f64> = branch.points.iter().map(|p| p.l2norm).collect();
        let svg = plot::render(
            "branch: L2 norm vs parameter",
            &[Series {
                xs: &xs,
                ys: &ys,
                color: "#d62728",
                scatter: false,
            }],
        );
        w.write("branch.svg", &svg)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    verdict: evolution::Verdict,
    eta: Option<f64>,
    slope: f64,
    correlation: f64,
    fit_window: (f64, f64),
    blowup_time: Option<f64>,
    seed: u64,
    config_echo: String,
}

fn cmd_simulate(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let section = cfg.evolution.as_ref().expect("validated");
    let (state, p) = solve_state(cfg)?;
    let grid = state.grid().clone();
    let perturbation = match section.perturbation {
        PerturbationKind::CriticalMode => {
            let op = operators::assemble(&state, &p);
            let spec = operators::full_spectrum(&op)
                .map_err(|e| RunError::SolveFailure(e.to_string()))?;
            let v = linalg::eigvec_near(&op.matrix, spec.critical.re, 8)
                .map_err(|e| RunError::SolveFailure(e.to_string()))?;
            stationary::from_real_vec(&grid, &v)
        }
        PerturbationKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
            let n = grid.n();
            let coeffs: Vec<Complex64> = (0..n)
                .map(|b| {
                    let k = grid.wavenumber(b) as f64;
                    let decay = (-(k / 8.0).powi(2)).exp();
                    Complex64::new(
                        rng.gen_range(-1.0..1.0) * decay,
                        rng.gen_range(-1.0..1.0) * decay,
                    )
                })
                .collect();
            Field::from_coeffs(grid.clone(), coeffs)
        }
    };
    let perturbation = perturbation.scale(Complex64::new(
        1.0 / perturbation.sobolev_norm(1),
        0.0,
    ));
    let ecfg = EvolutionConfig {
        dt: section.dt,
        t_end: section.t_end,
        scheme: Scheme::EtdImex,
        record_every: section.record_every,
        perturbation,
        perturbation_scale: section.perturbation_scale,
    };
    let fit = evolution::evolve_and_fit(&state, &p, &ecfg)
        .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    w.write(
        "trajectory.csv",
        &output::trajectory_csv(&fit.times, &fit.deviations, &fit.deviations_l2),
    )?;
    let summary = SimulateSummary {
        verdict: fit.verdict,
        eta: fit.eta,
        slope: fit.slope,
        correlation: fit.correlation,
        fit_window: fit.fit_window,
        blowup_time: fit.blowup_time,
        seed: cfg.run.seed,
        config_echo: crate::config::echo(cfg),
    };
    w.write_json("simulate_summary.json", &summary)?;
    if cfg.run.emit_svg {
        let logs: Vec<f64> = fit
            .deviations
            .iter()
            .map(|d| d.max(1e-300).log10())
            .collect();
        let svg = plot::render(
            "log10 H1 deviation vs t",
            &[Series {
                xs: &fit.times,
                ys: &logs,
                color: "#2ca02c",
                scatter: false,
            }],
        );
        w.write("trajectory.svg", &svg)?;
    }
    if fit.blowup_time.is_some() && fit.verdict == evolution::Verdict::Inconclusive {
        return Err(RunError::BlowUp(format!(
            "trajectory blew up at t = {}",
            fit.blowup_time.unwrap()
        )));
    }
    Ok(())
}

fn cmd_reduce(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let r = cfg.reduction.as_ref().expect("validated");
    let dp = DualPumpParams {
        d: r.d,
        zeta: r.zeta,
        mu: r.mu,
        f0: r.f0,
        f1: r.f1,
        k1: r.k1,
        nu1: r.nu1,
    };
    let grid = grid_for(cfg);
    let (reduced, gauge) =
        reductions::dual_pump_reduce(&dp).map_err(|e| RunError::Validation(e.to_string()))?;
    #[derive(Serialize)]
    struct ReduceSummary {
        inputs: DualPumpParams,
        potential_mean: f64,
        potential_cosine: Vec<f64>,
        effective_dispersion: f64,
        gauge: reductions::GaugeData,
        validation: reductions::ValidationReport,
    }
    let validation = reductions::dual_pump_validate(&dp, &grid)
        .map_err(|e| RunError::SolveFailure(e.to_string()))?;
    w.write_json(
        "reduction_report.json",
        &ReduceSummary {
            inputs: dp.clone(),
            potential_mean: reduced.potential.mean,
            potential_cosine: reduced.potential.cosine_coeffs.clone(),
            effective_dispersion: reduced.d,
            gauge,
            validation,
        },
    )?;
    Ok(())
}

fn cmd_asymptotics(cfg: &RunConfig, w: &mut OutputWriter) -> Result<(), RunError> {
    let a = cfg.asymptotics.clone().unwrap_or_default();
    let grid = Arc::new(TorusGrid::new(a.n).map_err(|e| RunError::Validation(e.to_string()))?);
    let soliton = reductions::nls_soliton(a.zeta, a.d, a.l, &grid)
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let v = cfg.potential_spec();
    let m = 72;
    let sigmas: Vec<f64> = (0..m)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / m as f64)
        .collect();
    let leading: Vec<f64> = sigmas
        .iter()
        .map(|&s| reductions::veff_leading_order(s, &soliton, &v))
        .collect();
    let mut columns: Vec<(f64, Vec<f64>)> = Vec::new();
    for &mu in &a.mu_values {
        let (state, p) = reductions::line_stationary_solve(&soliton, mu, a.f0)
            .map_err(|e| RunError::SolveFailure(e.to_string()))?;
        let full: Vec<f64> = sigmas
            .iter()
            .map(|&s| reductions::line_veff_full(&state, &p, a.l, &v, s))
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::SolveFailure(e.to_string()))?;
        columns.push((mu, full));
    }
    let mut csv = String::from("sigma,leading");
    for (mu, _) in &columns {
        csv.push_str(&format!(",full_mu_{mu}"));
    }
    csv.push('\n');
    for (i, s) in sigmas.iter().enumerate() {
        csv.push_str(&format!("{},{}", s, leading[i]));
        for (_, full) in &columns {
            csv.push_str(&format!(",{}", full[i]));
        }
        csv.push('\n');
    }
    w.write("asymptotics.csv", &csv)?;
    #[derive(Serialize)]
    struct AsymptoticsSummary {
        nls_residual_linf: f64,
        mass: f64,
        max_diff_by_mu: Vec<(f64, f64)>,
    }
    let max_diffs: Vec<(f64, f64)> = columns
        .iter()
        .map(|(mu, full)| {
            let d = full
                .iter()
                .zip(&leading)
                .map(|(f, l)| (f - l).abs())
                .fold(0.0, f64::max);
            (*mu, d)
        })
        .collect();
    w.write_json(
        "asymptotics_summary.json",
        &AsymptoticsSummary {
            nls_residual_linf: reductions::nls_residual_linf(&soliton),
            mass: soliton.mass(),
            max_diff_by_mu: max_diffs,
        },
    )?;
    Ok(())
}
