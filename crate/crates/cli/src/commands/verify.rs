use gspde::gaussian::{
    covariance_fidelity, even_subgrid, sample_g_with, sample_scalar_with, verify_dg_identities, verify_isometry,
    NoiseConfig, OperatorValuedIntegrand, TimeGrid,
};
use gspde::kernel::{empirical_cr_check, min_eigen_ratio, CovarianceKernel, TimeFunction};
use gspde::operators::{check_h1, check_h2, check_h3, check_h4};
use gspde::stats::confidence_for_z;
use nalgebra::DVector;
use serde::Serialize;

use crate::config::{section, Resolved, Suite, VerifyConfig};
use crate::error::{at, CliError, Result};
use crate::output::OutputDir;

use super::{agrees, MODE};

#[derive(Debug, Serialize)]
struct Check {
    suite: Suite,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    se: Option<f64>,
    detail: String,
    pass: bool,
}

impl Check {
    fn statistical(suite: Suite, label: String, estimate: f64, se: f64, oracle: f64, z: f64) -> Self {
        let score = if se > 0.0 { (estimate - oracle) / se } else { 0.0 };
        Self {
            suite,
            label,
            estimate: Some(estimate),
            oracle: Some(oracle),
            se: Some(se),
            detail: format!("z = {score:.3}"),
            pass: agrees(estimate, se, oracle, z),
        }
    }

    fn flag(suite: Suite, label: String, detail: String, pass: bool) -> Self {
        Self {
            suite,
            label,
            estimate: None,
            oracle: None,
            se: None,
            detail,
            pass,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<Check>,
    passed: usize,
    failed: usize,
    pass: bool,
}

fn kernel_label(i: usize) -> String {
    format!("verify.kernels[{i}]")
}

fn fidelity(cfg: &VerifyConfig, k: &CovarianceKernel, label: &str, grid: &TimeGrid, seed: u64) -> Result<Vec<Check>> {
    let e = sample_scalar_with(k, grid, cfg.n_paths, seed, MODE).map_err(at(label))?;
    let nodes = even_subgrid(cfg.nodes, cfg.fidelity_nodes.min(cfg.nodes - 1));
    let rep = covariance_fidelity(&e, k, &nodes, 0, cfg.z).map_err(at(label))?;
    Ok(rep
        .entries
        .iter()
        .map(|c| {
            Check::statistical(
                Suite::Fidelity,
                format!("{label} R(t_{}, t_{})", c.i, c.j),
                c.empirical,
                c.se,
                c.exact + cfg.inject_oracle_offset,
                cfg.z,
            )
        })
        .collect())
}

fn isometry(cfg: &VerifyConfig, k: &CovarianceKernel, label: &str, grid: &TimeGrid, seed: u64) -> Result<Vec<Check>> {
    let e = sample_scalar_with(k, grid, cfg.n_paths, seed, MODE).map_err(at(label))?;
    let names = ["1", "s", "s^2"];
    let mut out = Vec::new();
    for a in 0..3 {
        for b in a..3 {
            let (f, h) = (TimeFunction::monomial(a), TimeFunction::monomial(b));
            let c = verify_isometry(&f, &h, k, &e, confidence_for_z(cfg.z)).map_err(at(label))?;
            out.push(Check::statistical(
                Suite::Isometry,
                format!("{label} f = {}, h = {}", names[a], names[b]),
                c.mc_estimate,
                c.se,
                c.quadrature_value + cfg.inject_oracle_offset,
                cfg.z,
            ));
        }
    }
    Ok(out)
}

fn identities(cfg: &VerifyConfig, k: &CovarianceKernel, label: &str, grid: &TimeGrid, seed: u64) -> Result<Vec<Check>> {
    let noise = cfg.noise.clone().unwrap_or(NoiseConfig::Power {
        lambda0: 1.0,
        beta: 3.0,
        n_terms: 8,
    });
    let spec = noise.build().map_err(at("verify.noise"))?;
    let n = spec.n_terms();
    let e = sample_g_with(k, &spec, grid, cfg.n_paths, seed, MODE).map_err(at(label))?;
    let id = OperatorValuedIntegrand::identity(n);
    let p0 = OperatorValuedIntegrand::mode_projection(n, n, &[0]).map_err(at("verify.noise"))?;
    let e0 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let ones = DVector::from_element(n, 1.0);
    let cases = [("identity, identity", &id, &id), ("projection, identity", &p0, &id)];
    let mut out = Vec::new();
    for (name, h1, h2) in cases {
        let r = verify_dg_identities(h1, h2, &e0, &ones, &spec, k, &e, confidence_for_z(cfg.z)).map_err(at(label))?;
        for (which, c) in [("pairing", &r.pairing), ("trace", &r.trace)] {
            out.push(Check::statistical(
                Suite::Identities,
                format!("{label} {which} ({name})"),
                c.mc_estimate,
                c.se,
                c.quadrature_value + cfg.inject_oracle_offset,
                cfg.z,
            ));
        }
    }
    Ok(out)
}

fn integrability(k: &CovarianceKernel, label: &str, grid: &TimeGrid) -> Result<Vec<Check>> {
    let t = k.horizon();
    let tests = vec![
        TimeFunction::monomial(0),
        TimeFunction::monomial(1),
        TimeFunction::monomial(2),
        TimeFunction::indicator(0.0, 0.5 * t, t),
    ];
    let cr = empirical_cr_check(k, &tests);
    let nodes: Vec<f64> = grid.nodes()[1..].to_vec();
    let ratio = min_eigen_ratio(k, &nodes).map_err(at(label))?;
    Ok(vec![
        Check::flag(
            Suite::Integrability,
            format!("{label} integrability ratios"),
            format!("worst ratio {:.4e}", cr.worst_ratio),
            cr.pass,
        ),
        Check::flag(
            Suite::Integrability,
            format!("{label} positive semidefinite on grid"),
            format!("min eigenvalue ratio {ratio:.3e}"),
            ratio > -1e-10,
        ),
    ])
}

fn conditions(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, op) in cfg.operators.iter().enumerate() {
        let label = format!("verify.operators[{i}]");
        let pair = op.build().map_err(at(&label))?;
        let (a, b) = (&pair.drift, &pair.diffusion);
        let s = seed.wrapping_add(i as u64);
        let n = cfg.condition_samples;
        let h1 = check_h1(a, n, s);
        let h2 = check_h2(a, b, n, s);
        let h3 = check_h3(a, b, n, s);
        let h4 = check_h4(a, n, s);
        out.push(Check::flag(Suite::Conditions, format!("{label} H1"), format!("worst ratio {:.4}", h1.worst_ratio), h1.pass));
        out.push(Check::flag(
            Suite::Conditions,
            format!("{label} H2"),
            format!("declared c = {}, worst empirical c = {:.4e}", h2.declared_c, h2.worst_c),
            h2.pass,
        ));
        out.push(Check::flag(Suite::Conditions, format!("{label} H3"), format!("worst margin {:.4e}", h3.worst_margin), h3.pass));
        out.push(Check::flag(
            Suite::Conditions,
            format!("{label} H4"),
            format!(
                "slope {} (expected {:.3}), worst margin {:.4e}",
                h4.slope.map_or("n/a".to_string(), |s| format!("{s:.4}")),
                h4.expected_slope,
                h4.worst_margin
            ),
            h4.pass,
        ));
    }
    Ok(out)
}

pub fn cmd_verify(mut resolved: Resolved) -> Result<()> {
    let cfg = section(&resolved.config.verify, "verify")?.clone();
    if cfg.n_paths == 0 {
        return Err(CliError::Config("verify.n_paths must be at least 1".into()));
    }
    let needs_kernel = cfg.suites.iter().any(|s| *s != Suite::Conditions);
    if needs_kernel && cfg.kernels.is_empty() {
        return Err(CliError::Config("verify.kernels must list at least one kernel".into()));
    }
    if cfg.suites.contains(&Suite::Conditions) && cfg.operators.is_empty() {
        return Err(CliError::Config("verify.operators must list at least one operator for the conditions suite".into()));
    }
    let grid = TimeGrid::uniform(cfg.horizon, cfg.nodes).map_err(at("verify.nodes"))?;
    let mut kernels = Vec::new();
    for (i, kc) in cfg.kernels.iter().enumerate() {
        kernels.push(resolved.kernel(&kernel_label(i), kc, Some(cfg.horizon))?);
    }
    let seeds = resolved.seeds.clone();
    let mut checks = Vec::new();
    for suite in &cfg.suites {
        for (i, k) in kernels.iter().enumerate() {
            let label = kernel_label(i);
            let seed = seeds.gaussian.wrapping_add(i as u64);
            match suite {
                Suite::Fidelity => checks.extend(fidelity(&cfg, k, &label, &grid, seed)?),
                Suite::Isometry => checks.extend(isometry(&cfg, k, &label, &grid, seed)?),
                Suite::Identities => checks.extend(identities(&cfg, k, &label, &grid, seed)?),
                Suite::Integrability => checks.extend(integrability(k, &label, &grid)?),
                Suite::Conditions => {}
            }
        }
        if *suite == Suite::Conditions {
            checks.extend(conditions(&cfg, seeds.harness)?);
        }
    }
    for c in &checks {
        println!("[{}] {:?} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.suite, c.label, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let report = VerifyReport {
        passed: checks.len() - failed,
        failed,
        pass: failed == 0,
        checks,
    };
    let out = OutputDir::create(&resolved.config.output_dir)?;
    out.write_report("verify.json", &resolved, &report)?;
    println!("{} of {} checks passed", report.passed, report.passed + report.failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} checks failed")))
    }
}
