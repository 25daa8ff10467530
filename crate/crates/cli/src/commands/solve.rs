use gspde::kernel::{weighted_double_integral, CovarianceKernel, TimeFunction};
use gspde::operators::DriftKind;
use gspde::solver::{convergence_study, estimate_moments, InitialState, Problem, RateTable, Simulation, SolutionPath};
use gspde::stats::MeanEstimate;
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{section, ProblemConfig, RatesConfig, Resolved};
use crate::error::{at, CliError, Result};
use crate::output::OutputDir;

use super::{agrees, MODE};

fn build_problem(resolved: &mut Resolved) -> Result<(ProblemConfig, Problem)> {
    let cfg = section(&resolved.config.problem, "problem")?.clone();
    let kernel = resolved.kernel("problem.kernel", &cfg.kernel, Some(cfg.solver.horizon))?;
    let noise = cfg.noise()?;
    let pair = cfg.operator.build().map_err(at("problem.operator"))?;
    let h = cfg
        .h
        .build(pair.space.dim(), noise.n_terms())
        .map_err(at("problem.h"))?;
    let problem = Problem {
        drift: pair.drift,
        diffusion: pair.diffusion,
        h,
        kernel,
        noise,
    };
    problem.validate().map_err(at("problem"))?;
    cfg.initial().validate(problem.dim()).map_err(at("problem.initial"))?;
    Ok((cfg, problem))
}

#[derive(Serialize)]
struct ModeRow {
    mode: usize,
    mean: f64,
    mean_se: f64,
    mean_oracle: f64,
    variance: f64,
    variance_se: f64,
    variance_oracle: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ModeReport {
    horizon: f64,
    n_runs: usize,
    modes: Vec<ModeRow>,
    pass: bool,
}

/// Per-mode mean and variance of `X(T)` against closed forms, available when
/// the drift is diagonal and linear, `B ≡ 0` and `h` is constant. The mean
/// follows the backward-Euler recursion exactly; the variance oracle is the
/// mild-solution double integral.
fn mode_report(problem: &Problem, x0: &InitialState, runs: &[SolutionPath], dt: f64, z: f64) -> Result<Option<ModeReport>> {
    if !matches!(problem.drift.kind(), DriftKind::LinearHeat | DriftKind::Diagonal { .. }) || !problem.diffusion.is_zero() {
        return Ok(None);
    }
    let n = problem.dim();
    let jac = match problem.drift.jacobian(0.0, &DVector::zeros(n)) {
        Some(j) => j,
        None => return Ok(None),
    };
    let grid = runs[0].grid();
    let horizon = grid.horizon();
    let steps = (grid.len() - 1) as i32;
    let (mean0, var0) = match x0 {
        InitialState::Deterministic { coeffs } => (coeffs.clone(), vec![0.0; n]),
        InitialState::Gaussian { mean, std, .. } => (mean.clone(), std.iter().map(|s| s * s).collect()),
    };
    let h = problem.h.at(0.0);
    let lambdas = problem.noise.lambdas();
    let mut modes = Vec::with_capacity(n);
    for k in 0..n {
        let a = jac[(k, k)];
        let amp = (1.0 - dt * a).powi(-steps);
        let forced: f64 = (0..h.ncols()).map(|j| h[(k, j)].powi(2) * lambdas[j]).sum();
        let integral = if forced > 0.0 {
            mild_integral(&problem.kernel, a, horizon).map_err(at("mode oracle"))?
        } else {
            0.0
        };
        // shifted by the first sample so that identical runs give zero spread
        let shift = runs[0].final_x()[k];
        let finals: Vec<f64> = runs.iter().map(|r| r.final_x()[k] - shift).collect();
        let mut mean = MeanEstimate::from_samples(&finals);
        let centred: Vec<f64> = finals.iter().map(|x| (x - mean.mean).powi(2)).collect();
        mean.mean += shift;
        let sq = MeanEstimate::from_samples(&centred);
        let scale = if finals.len() > 1 {
            finals.len() as f64 / (finals.len() - 1) as f64
        } else {
            1.0
        };
        let row = ModeRow {
            mode: k,
            mean: mean.mean,
            mean_se: mean.se,
            mean_oracle: mean0[k] * amp,
            variance: sq.mean * scale,
            variance_se: sq.se * scale,
            variance_oracle: var0[k] * amp * amp + forced * integral,
            pass: false,
        };
        let pass = agrees(row.mean, row.mean_se, row.mean_oracle, z)
            && agrees(row.variance, row.variance_se, row.variance_oracle, z);
        modes.push(ModeRow { pass, ..row });
    }
    let pass = modes.iter().all(|m| m.pass);
    Ok(Some(ModeReport {
        horizon,
        n_runs: runs.len(),
        modes,
        pass,
    }))
}

/// `∫∫ e^{a(T-s)} e^{a(T-s')} φ(s,s') ds ds'`.
fn mild_integral(k: &CovarianceKernel, a: f64, horizon: f64) -> gspde::Result<f64> {
    let f = TimeFunction::scalar_closure(move |s| (a * (horizon - s)).exp());
    weighted_double_integral(k, &f, &f)
}

fn rate_study(resolved: &Resolved, problem: &Problem, cfg: &ProblemConfig, rates: &RatesConfig, out: &OutputDir) -> Result<RateTable> {
    let base = cfg.solver(&resolved.seeds)?;
    let table = convergence_study(problem, &cfg.initial(), &base, &rates.dt_list, rates.n_runs, MODE).map_err(at("rates"))?;
    let mut csv = String::new();
    for line in resolved.header_lines() {
        csv.push_str(&format!("# {line}\n"));
    }
    csv.push_str("dt,error,se\n");
    for r in &table.rows {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", r.dt, r.error, r.se));
    }
    out.write("rates.csv", csv.as_bytes())?;
    out.write_report("rates.json", resolved, &table)?;
    match table.slope {
        Some(s) => println!("rate study over {} step sizes: fitted slope {s:.4}", table.rows.len()),
        None => println!("rate study over {} step sizes: slope undefined", table.rows.len()),
    }
    Ok(table)
}

pub fn cmd_solve(mut resolved: Resolved) -> Result<()> {
    let solve = section(&resolved.config.solve, "solve")?.clone();
    if solve.n_runs == 0 {
        return Err(CliError::Config("solve.n_runs must be at least 1".into()));
    }
    let (cfg, problem) = build_problem(&mut resolved)?;
    let rates = if solve.with_rates {
        Some(section(&resolved.config.rates, "rates")?.clone())
    } else {
        None
    };
    let solver = cfg.solver(&resolved.seeds)?;
    let dt = solver.dt;
    let sim = Simulation::new(&problem, solver).map_err(at("problem.solver"))?;
    let x0 = cfg.initial();
    let runs = sim.ensemble(&x0, solve.n_runs, MODE).map_err(at("solve"))?;

    let out = OutputDir::create(&resolved.config.output_dir)?;
    let header = resolved.header_lines();
    for r in runs.iter().take(solve.write_paths) {
        let mut csv = Vec::new();
        r.write_csv(&header, &mut csv).map_err(at("path csv"))?;
        out.write(&format!("paths/run_{:05}.csv", r.run()), &csv)?;
    }
    let diagnostics: Vec<_> = runs.iter().map(|r| r.summary()).collect();
    out.write_report("diagnostics.json", &resolved, &diagnostics)?;
    let moments = estimate_moments(&runs, problem.drift.space()).map_err(at("moments"))?;
    out.write_report("moments.json", &resolved, &moments)?;
    println!(
        "solved {} runs of {} steps; sup_t E|X|_H^2 = {:.6e} (se {:.2e})",
        runs.len(),
        sim.grid().len() - 1,
        moments.sup_t_mean_h2,
        moments.sup_se
    );
    let mut failure = None;
    if let Some(report) = mode_report(&problem, &x0, &runs, dt, solve.z)? {
        out.write_report("modes.json", &resolved, &report)?;
        println!(
            "per-mode oracle comparison: {}",
            if report.pass { "all modes agree" } else { "mismatch" }
        );
        if !report.pass {
            failure = Some("per-mode moments disagree with their oracles".to_string());
        }
    }
    if let Some(rates) = rates {
        rate_study(&resolved, &problem, &cfg, &rates, &out)?;
    }
    match failure {
        Some(m) => Err(CliError::Verification(m)),
        None => Ok(()),
    }
}

pub fn cmd_rates(mut resolved: Resolved) -> Result<()> {
    let rates = section(&resolved.config.rates, "rates")?.clone();
    let (cfg, problem) = build_problem(&mut resolved)?;
    let out = OutputDir::create(&resolved.config.output_dir)?;
    rate_study(&resolved, &problem, &cfg, &rates, &out)?;
    Ok(())
}
