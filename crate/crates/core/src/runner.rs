//! Orchestration of configuration-driven runs: dispatch on the command,
//! collect the report, write artifacts (report.json + CSV field dumps).

use crate::cones::{certify_subsolution, SubsolutionCertificate};
use crate::config::{CommandKind, RunConfig};
use crate::diagnostics::{epsilon_trend, estimate_monitor, EstimateReport, TrendRecord};
use crate::envelope::{compute_envelope, RungSummary};
use crate::error::Error;
use crate::newton_solver::{solve_eigenpair, solve_nondegenerate, EigenpairReport, SolveReport};
use crate::torus_field::{dump_mask_csv, dump_scalar_csv, ScalarField};
use crate::verify::{run_suite, SuiteReport};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub total_s: f64,
}

/// Envelope section of the run report: per-rung scalar summaries plus
/// the per-rung estimate monitors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReportSection {
    pub rungs: Vec<RungSummary>,
    pub estimates: Vec<EstimateReport>,
    pub rung_distances: Vec<f64>,
    pub contact_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_rung: Option<(f64, String)>,
}

/// The report.json payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config_echo: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SubsolutionCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_report: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenpair: Option<EigenpairReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope_result: Option<EnvelopeReportSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<SuiteReport>,
    /// Present when the run ended in a solver failure; partial data
    /// above is still meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timings: Timings,
}

/// A finished run: the report, the exit code the CLI should use, and the
/// fields to dump.
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
    fields: Vec<(String, ScalarField)>,
    masks: Vec<(String, Vec<bool>)>,
    extra_csv: Vec<(String, String)>,
}

impl RunOutcome {
    /// Write report.json and the CSV artifacts into a directory.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join("report.json"))?;
        f.write_all(serde_json::to_string_pretty(&self.report)?.as_bytes())?;
        for (name, field) in &self.fields {
            dump_scalar_csv(field, &dir.join(name))?;
        }
        for (name, mask) in &self.masks {
            if let Some((_, field)) = self.fields.first() {
                dump_mask_csv(&field.grid, mask, &dir.join(name))?;
            }
        }
        for (name, text) in &self.extra_csv {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }
}

fn residual_history_csv(report: &SolveReport) -> String {
    let mut out = String::from("iter,residual,cone_margin\n");
    for (i, (r, m)) in report
        .residual_history
        .iter()
        .zip(&report.cone_margin_history)
        .enumerate()
    {
        out.push_str(&format!("{i},{r:?},{m:?}\n"));
    }
    out
}

/// Execute a run. Solver failures produce a partial report with exit
/// code 3 instead of an error; validation problems are returned as
/// errors (exit code 2).
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut outcome = RunOutcome {
        report: RunReport {
            config_echo: config.clone(),
            certificate: None,
            solve_report: None,
            estimate: None,
            eigenpair: None,
            envelope_result: None,
            trend: None,
            verify: None,
            error: None,
            timings: Timings { total_s: 0.0 },
        },
        exit_code: 0,
        fields: vec![],
        masks: vec![],
        extra_csv: vec![],
    };

    match config.command {
        CommandKind::Verify => {
            let suite = config
                .suite
                .ok_or_else(|| Error::Config("verify needs a suite".into()))?;
            let report = run_suite(suite, config.seed.unwrap_or(0));
            outcome.exit_code = if report.passed { 0 } else { 1 };
            outcome.report.verify = Some(report);
        }
        CommandKind::Subcheck => {
            let built = config.build()?;
            let cert = certify_subsolution(&built.op, &built.theta, &built.u_sub, &built.h)?;
            outcome.exit_code = 0;
            outcome.report.certificate = Some(cert);
        }
        CommandKind::Solve => {
            let built = config.build()?;
            match solve_nondegenerate(&built.op, &built.theta, &built.h, &built.solver) {
                Ok((u, report)) => {
                    outcome.extra_csv.push((
                        "residual_history.csv".into(),
                        residual_history_csv(&report),
                    ));
                    outcome.report.estimate = Some(estimate_monitor(
                        &u,
                        &built.theta,
                        &built.op,
                        built.diagnostics_a,
                        Some(&built.h),
                    )?);
                    outcome.report.solve_report = Some(report);
                    outcome.fields.push(("u.csv".into(), u));
                    outcome.fields.push(("h.csv".into(), built.h));
                }
                Err(Error::NonConvergence { report }) => {
                    outcome.report.error = Some(format!(
                        "no convergence after {} iterations (residual {:.3e})",
                        report.iterations, report.final_residual
                    ));
                    outcome.report.solve_report = Some(*report);
                    outcome.exit_code = 3;
                }
                Err(Error::Divergence { witness, detail, report }) => {
                    outcome.report.error =
                        Some(format!("diverged at grid point {witness}: {detail}"));
                    outcome.report.solve_report = Some(*report);
                    outcome.exit_code = 3;
                }
                Err(e) => return Err(e),
            }
        }
        CommandKind::Eigenpair => {
            let built = config.build()?;
            let mut solver = built.solver.clone();
            solver.eps_reg_schedule = built.schedule.clone();
            match solve_eigenpair(&built.op, &built.theta, &built.h, &solver) {
                Ok((u, c, report)) => {
                    let mut csv = String::from("rung,eps,c\n");
                    for (i, (eps, ck)) in report
                        .eps_schedule
                        .iter()
                        .zip(&report.c_sequence)
                        .enumerate()
                    {
                        csv.push_str(&format!("{i},{eps:?},{ck:?}\n"));
                    }
                    outcome.extra_csv.push(("c_sequence.csv".into(), csv));
                    outcome.report.estimate = Some(estimate_monitor(
                        &u,
                        &built.theta,
                        &built.op,
                        built.diagnostics_a,
                        Some(&built.h),
                    )?);
                    let _ = c;
                    outcome.report.solve_report = report.rungs.last().cloned();
                    outcome.report.eigenpair = Some(report);
                    outcome.fields.push(("u.csv".into(), u));
                }
                Err(Error::NonConvergence { report }) => {
                    outcome.report.error = Some(format!(
                        "eigenpair rung failed after {} iterations",
                        report.iterations
                    ));
                    outcome.report.solve_report = Some(*report);
                    outcome.exit_code = 3;
                }
                Err(Error::Divergence { witness, detail, report }) => {
                    outcome.report.error =
                        Some(format!("eigenpair diverged at grid point {witness}: {detail}"));
                    outcome.report.solve_report = Some(*report);
                    outcome.exit_code = 3;
                }
                Err(e) => return Err(e),
            }
        }
        CommandKind::Envelope => {
            let built = config.build()?;
            let m = built.op.m;
            let result =
                compute_envelope(&built.theta, &built.h, m, &built.schedule, &built.solver)?;
            let mut estimates = Vec::new();
            for state in &result.states {
                estimates.push(estimate_monitor(
                    &state.u,
                    &built.theta,
                    &built.op,
                    built.diagnostics_a,
                    Some(&built.h),
                )?);
            }
            let trend = if result.states.len() >= 3 {
                Some(epsilon_trend(&result.states, &estimates)?)
            } else {
                None
            };
            let mut csv = String::from(
                "rung,eps,sup_overshoot,overshoot_ratio,residual_off_k,residual_on_k,sup_hess\n",
            );
            for (i, (s, e)) in result.states.iter().zip(&estimates).enumerate() {
                csv.push_str(&format!(
                    "{i},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                    s.eps,
                    s.sup_overshoot,
                    s.overshoot_ratio,
                    s.residual_off_k,
                    s.residual_on_k,
                    e.norms.sup_hess
                ));
            }
            outcome.extra_csv.push(("trend.csv".into(), csv));
            let contact =
                result.contact_mask.iter().filter(|&&b| b).count() as f64
                    / result.contact_mask.len() as f64;
            if let Some((eps, msg)) = &result.failed_rung {
                outcome.report.error =
                    Some(format!("envelope rung at eps = {eps:.3e} failed: {msg}"));
                outcome.exit_code = 3;
            }
            outcome.report.envelope_result = Some(EnvelopeReportSection {
                rungs: result.states.iter().map(RungSummary::from_state).collect(),
                estimates,
                rung_distances: result.rung_distances.clone(),
                contact_fraction: contact,
                failed_rung: result.failed_rung.clone(),
            });
            outcome.report.trend = trend;
            outcome.fields.push(("p.csv".into(), result.p.clone()));
            outcome.fields.push(("h.csv".into(), built.h.clone()));
            outcome.masks.push(("contact_mask.csv".into(), result.contact_mask.clone()));
        }
    }

    outcome.report.timings = Timings { total_s: start.elapsed().as_secs_f64() };
    Ok(outcome)
}

/// Run and write artifacts when an output directory is known.
pub fn run_to_dir(config: &RunConfig, out_override: Option<&Path>) -> Result<RunOutcome> {
    let outcome = run(config)?;
    let dir = out_override
        .map(|p| p.to_path_buf())
        .or_else(|| config.output_dir.as_ref().map(std::path::PathBuf::from));
    if let Some(dir) = dir {
        outcome.write_artifacts(&dir)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GridConfig, OperatorConfig, ThetaConfig, TrigPoly};

    fn solve_config() -> RunConfig {
        RunConfig {
            command: CommandKind::Solve,
            grid: Some(GridConfig { n: 1, points_per_axis: 16 }),
            operator: Some(OperatorConfig {
                name: "monge_ampere".into(),
                m: None,
                ell: None,
            }),
            theta: Some(ThetaConfig::identity(1.0)),
            h: Some(TrigPoly::constant_only(0.0)),
            subsolution: None,
            schedule: None,
            solver: None,
            diagnostics_a: None,
            seed: Some(3),
            suite: None,
            output_dir: None,
        }
    }

    #[test]
    fn solve_run_constant_case() {
        let outcome = run(&solve_config()).unwrap();
        assert_eq!(outcome.exit_code, 0);
        let rep = outcome.report.solve_report.unwrap();
        assert!(rep.final_residual <= 1e-10);
        assert!(outcome.report.estimate.is_some());
        // u is identically -1 in the dump
        let (_, u) = &outcome.fields[0];
        assert!(u.values.iter().all(|&v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn subcheck_run_accepts_identity() {
        let mut cfg = solve_config();
        cfg.command = CommandKind::Subcheck;
        cfg.operator = Some(OperatorConfig {
            name: "hessian_log_sigma_m".into(),
            m: Some(1),
            ell: None,
        });
        let outcome = run(&cfg).unwrap();
        let cert = outcome.report.certificate.unwrap();
        assert!(cert.accepted);
        assert_eq!(cert.sigma_0, 1.0);
    }

    #[test]
    fn artifacts_written() {
        let mut cfg = solve_config();
        let dir = std::env::temp_dir().join("hessenv_runner_test");
        let _ = std::fs::remove_dir_all(&dir);
        cfg.output_dir = Some(dir.to_string_lossy().into_owned());
        let outcome = run_to_dir(&cfg, None).unwrap();
        assert_eq!(outcome.exit_code, 0);
        assert!(dir.join("report.json").exists());
        assert!(dir.join("u.csv").exists());
        assert!(dir.join("residual_history.csv").exists());
        let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
        assert!(text.contains("config_echo"));
    }

    #[test]
    fn determinism_modulo_wall_time() {
        let cfg = solve_config();
        let a = run(&cfg).unwrap().report;
        let b = run(&cfg).unwrap().report;
        let scrub = |r: &RunReport| -> serde_json::Value {
            let mut v = serde_json::to_value(r).unwrap();
            fn strip(v: &mut serde_json::Value) {
                match v {
                    serde_json::Value::Object(map) => {
                        map.remove("wall_time_s");
                        map.remove("timings");
                        map.remove("total_s");
                        for (_, val) in map.iter_mut() {
                            strip(val);
                        }
                    }
                    serde_json::Value::Array(items) => {
                        for item in items {
                            strip(item);
                        }
                    }
                    _ => {}
                }
            }
            strip(&mut v);
            v
        };
        assert_eq!(
            serde_json::to_string(&scrub(&a)).unwrap(),
            serde_json::to_string(&scrub(&b)).unwrap()
        );
    }

    #[test]
    fn verify_run_produces_suite_report() {
        let cfg = RunConfig {
            command: CommandKind::Verify,
            grid: None,
            operator: None,
            theta: None,
            h: None,
            subsolution: None,
            schedule: None,
            solver: None,
            diagnostics_a: None,
            seed: Some(11),
            suite: Some(crate::verify::SuiteKind::Fields),
            output_dir: None,
        };
        let outcome = run(&cfg).unwrap();
        assert_eq!(outcome.exit_code, 0);
        assert!(outcome.report.verify.unwrap().passed);
    }
}
