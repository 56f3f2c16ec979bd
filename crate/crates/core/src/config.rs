//! Configuration-driven problem setup: trig-polynomial field specs,
//! operator selection, and validation (band limits, Hermitian data,
//! cone admissibility of θ at load time).

use crate::eigen_ops::EigenOperator;
use crate::newton_solver::SolverConfig;
use crate::torus_field::{HermitianFormField, PeriodicGrid, ScalarField, SpectralOps};
use crate::verify::SuiteKind;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Solve,
    Envelope,
    Eigenpair,
    Subcheck,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    #[serde(alias = "N")]
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub name: String,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub ell: Option<usize>,
}

/// One cosine mode a·cos(2π k·x + φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigMode {
    /// 2n integer components, axis order (x¹, y¹, ..., xⁿ, yⁿ).
    pub wavevector: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Band-limited field spec: constant offset plus cosine modes. Every
/// wavevector component must stay within N/4.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<TrigMode>,
}

impl TrigPoly {
    pub fn constant_only(c: f64) -> Self {
        Self { constant: c, modes: vec![] }
    }

    pub fn single(wavevector: Vec<i64>, amplitude: f64, phase: f64) -> Self {
        Self { constant: 0.0, modes: vec![TrigMode { wavevector, amplitude, phase }] }
    }

    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        let limit = (grid.points_per_axis() / 4) as i64;
        for mode in &self.modes {
            if mode.wavevector.len() != grid.axes() {
                return Err(Error::Config(format!(
                    "wavevector {:?} must have {} components",
                    mode.wavevector,
                    grid.axes()
                )));
            }
            if mode.wavevector.iter().any(|k| k.abs() > limit) {
                return Err(Error::Config(format!(
                    "wavevector {:?} exceeds the band limit N/4 = {limit}",
                    mode.wavevector
                )));
            }
            if !mode.amplitude.is_finite() || !mode.phase.is_finite() {
                return Err(Error::Config("mode amplitude/phase must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, grid: PeriodicGrid) -> Result<ScalarField> {
        self.validate(&grid)?;
        let modes = self.modes.clone();
        let c = self.constant;
        Ok(ScalarField::from_fn(grid, move |g, p| {
            let mut v = c;
            for mode in &modes {
                let mut arg = mode.phase;
                for (a, &k) in mode.wavevector.iter().enumerate() {
                    arg += TAU * k as f64 * g.position(p, a);
                }
                v += mode.amplitude * arg.cos();
            }
            v
        }))
    }
}

/// Background form spec: any combination of a scalar multiple of the
/// identity, an explicit constant Hermitian matrix (row-major re/im
/// pairs), and i∂∂̄ of a trig polynomial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    #[serde(default)]
    pub identity_times: Option<f64>,
    #[serde(default)]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub ddbar_of: Option<TrigPoly>,
}

impl ThetaConfig {
    pub fn identity(s: f64) -> Self {
        Self { identity_times: Some(s), matrix: None, ddbar_of: None }
    }

    pub fn build(&self, grid: PeriodicGrid) -> Result<HermitianFormField> {
        let n = grid.complex_dim();
        let mut theta = HermitianFormField::zeros(grid);
        let mut any = false;
        if let Some(s) = self.identity_times {
            theta = theta.axpy(1.0, &HermitianFormField::identity_times(grid, s))?;
            any = true;
        }
        if let Some(entries) = &self.matrix {
            if entries.len() != n * n {
                return Err(Error::Config(format!(
                    "theta matrix needs {} complex entries, got {}",
                    n * n,
                    entries.len()
                )));
            }
            let m: Vec<Complex64> =
                entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            theta = theta.axpy(1.0, &HermitianFormField::from_constant_matrix(grid, &m)?)?;
            any = true;
        }
        if let Some(poly) = &self.ddbar_of {
            let field = poly.evaluate(grid)?;
            let spectral = SpectralOps::new(grid);
            theta = theta.axpy(1.0, &spectral.ddbar(&field)?)?;
            any = true;
        }
        if !any {
            return Err(Error::Config(
                "theta spec needs identity_times, matrix, or ddbar_of".into(),
            ));
        }
        Ok(theta)
    }
}

/// A full run request, as parsed from the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub theta: Option<ThetaConfig>,
    #[serde(default)]
    pub h: Option<TrigPoly>,
    /// The candidate subsolution u̲ for subcheck runs (default 0).
    #[serde(default)]
    pub subsolution: Option<TrigPoly>,
    /// ε schedule for envelope/eigenpair runs.
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    /// Exponent constant A of the monitored quantity Q.
    #[serde(default)]
    pub diagnostics_a: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Which property suite a verify run executes.
    #[serde(default)]
    pub suite: Option<SuiteKind>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Everything a run needs, built and validated from a `RunConfig`.
pub struct BuiltProblem {
    pub grid: PeriodicGrid,
    pub op: EigenOperator,
    pub theta: HermitianFormField,
    pub h: ScalarField,
    pub u_sub: ScalarField,
    pub schedule: Vec<f64>,
    pub solver: SolverConfig,
    pub diagnostics_a: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config JSON: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn operator_for(&self, n: usize) -> Result<EigenOperator> {
        let oc = self
            .operator
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs an operator spec".into()))?;
        let m = oc.m;
        let ell = oc.ell;
        match oc.name.as_str() {
            "monge_ampere" => EigenOperator::monge_ampere(n),
            "hessian_log_sigma_m" => EigenOperator::hessian_log(
                n,
                m.ok_or_else(|| Error::Config("hessian_log_sigma_m needs m".into()))?,
            ),
            "hessian_root_sigma_m" => EigenOperator::hessian_root(
                n,
                m.ok_or_else(|| Error::Config("hessian_root_sigma_m needs m".into()))?,
            ),
            "hessian_quotient" => EigenOperator::hessian_quotient(
                n,
                m.ok_or_else(|| Error::Config("hessian_quotient needs m".into()))?,
                ell.ok_or_else(|| Error::Config("hessian_quotient needs ell".into()))?,
            ),
            "n_minus_one_ma" => EigenOperator::n_minus_one_ma(n),
            other => Err(Error::Config(format!("unknown operator {other:?}"))),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    /// Validate and build the fields. θ must be strictly inside the
    /// operator cone at every grid point; violations are hard errors.
    pub fn build(&self) -> Result<BuiltProblem> {
        let gc = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a grid spec".into()))?;
        let grid = PeriodicGrid::new(gc.n, gc.points_per_axis)
            .map_err(|e| Error::Config(e.to_string()))?;
        let op = self.operator_for(gc.n)?;
        let solver = self.solver.clone().unwrap_or_default();
        solver.validate()?;
        let theta = self
            .theta
            .clone()
            .unwrap_or_else(|| ThetaConfig::identity(1.0))
            .build(grid)?;
        let h = self.h.clone().unwrap_or_default().evaluate(grid)?;
        let u_sub = self.subsolution.clone().unwrap_or_default().evaluate(grid)?;

        // hard admissibility gate on theta
        let data = crate::newton_solver::analyze_iterate(&op, &theta)?;
        if data.margin < solver.cone_margin {
            let detail = op.cone().membership(data.eig.values_at(data.witness)).2;
            return Err(Error::Config(format!(
                "theta is not strictly inside the operator cone at grid point {}: {detail}",
                data.witness
            )));
        }

        let schedule = match &self.schedule {
            Some(s) => s.clone(),
            None => match self.command {
                CommandKind::Eigenpair => solver.eps_reg_schedule.clone(),
                _ => vec![1e-1, 1e-2, 1e-3],
            },
        };
        Ok(BuiltProblem {
            grid,
            op,
            theta,
            h,
            u_sub,
            schedule,
            solver,
            diagnostics_a: self.diagnostics_a.unwrap_or(1.0),
            seed: self.seed.unwrap_or(0),
        })
    }
}
