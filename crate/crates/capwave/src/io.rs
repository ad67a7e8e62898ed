//! Solution records, branch files, CSV summaries, and revalidation.
//!
//! One solution record is a single-line JSON object holding the physical
//! parameters, the vorticity family, the surface cosine coefficients, the
//! bulk field values (x-major), and the stored diagnostics. Numbers are
//! written with 17 significant digits through one shared formatter, so
//! identical runs produce byte-identical files. Branch files are
//! line-delimited records plus a trailer carrying the termination label.

use serde::Deserialize;

use crate::continuation::{Branch, Termination};
use crate::error::{Error, Result};
use crate::flows::VorticitySpec;
use crate::grid::{GridSpec, PeriodicEvenFunction, StripField};
use crate::operator::{
    bernoulli_residual, diagnostics, residual, residual_norm, Diagnostics, State, WaveProblem,
};
use crate::spectral::{harmonic_extension, laplacian_residual};
use crate::Physics;

/// 17-significant-digit decimal form of a double; round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_array(values: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&fmt_f64(*v));
    }
    s.push(']');
    s
}

/// A solved state with everything needed to rebuild and revalidate it.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub period: f64,
    pub depth: f64,
    pub gravity: f64,
    pub surface_tension: f64,
    pub vorticity: String,
    pub w_coeffs: Vec<f64>,
    /// Bulk values, x-major: phi_values[i][j] at (x_i, y_j).
    pub phi_values: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

#[derive(Deserialize)]
struct RecordRaw {
    lambda: f64,
    #[serde(rename = "L")]
    period: f64,
    h: f64,
    g: f64,
    sigma: f64,
    vorticity: String,
    w_coeffs: Vec<f64>,
    phi_values: Vec<Vec<f64>>,
    diagnostics: Diagnostics,
}

impl SolutionRecord {
    pub fn from_state(problem: &WaveProblem, state: &State, diag: &Diagnostics) -> Self {
        let grid = problem.grid;
        let phi_values = (0..grid.n_colloc())
            .map(|i| (0..=grid.m_levels()).map(|j| state.phi.value(i, j)).collect())
            .collect();
        Self {
            lambda: state.lambda,
            period: grid.period(),
            depth: grid.depth(),
            gravity: problem.phys.gravity,
            surface_tension: problem.phys.surface_tension,
            vorticity: problem.vorticity.to_string(),
            w_coeffs: state.w.coeffs().to_vec(),
            phi_values,
            diagnostics: diag.clone(),
        }
    }

    /// Rebuild the problem and state this record describes; array shapes
    /// determine the grid.
    pub fn to_problem_state(&self) -> Result<(WaveProblem, State)> {
        if self.w_coeffs.is_empty() {
            return Err(Error::InvalidInput("record has no surface coefficients".into()));
        }
        let n = self.w_coeffs.len() - 1;
        if self.phi_values.len() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "record has {} bulk columns; expected 2N = {}",
                self.phi_values.len(),
                2 * n
            )));
        }
        let m = self
            .phi_values
            .first()
            .map(|c| c.len())
            .unwrap_or(0)
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidInput("record has empty bulk columns".into()))?;
        let grid = GridSpec::new(self.period, self.depth, n, m)?;
        let phys = Physics::new(self.gravity, self.surface_tension)?;
        let vorticity = VorticitySpec::parse(&self.vorticity)?;
        let problem = WaveProblem::new(grid, phys, vorticity);
        let w = PeriodicEvenFunction::from_coeffs(grid, &self.w_coeffs)?;
        let mut phi = StripField::zeros(grid);
        for (i, column) in self.phi_values.iter().enumerate() {
            if column.len() != m + 1 {
                return Err(Error::InvalidInput(format!(
                    "bulk column {i} has {} levels; expected {}",
                    column.len(),
                    m + 1
                )));
            }
            for (j, v) in column.iter().enumerate() {
                phi.set(i, j, *v);
            }
        }
        let state = State::new(self.lambda, w, phi)?;
        Ok((problem, state))
    }

    /// Single-line JSON with deterministic number formatting.
    pub fn to_json(&self) -> String {
        let d = &self.diagnostics;
        let mut s = String::with_capacity(4096);
        s.push_str("{\"lambda\":");
        s.push_str(&fmt_f64(self.lambda));
        s.push_str(",\"L\":");
        s.push_str(&fmt_f64(self.period));
        s.push_str(",\"h\":");
        s.push_str(&fmt_f64(self.depth));
        s.push_str(",\"g\":");
        s.push_str(&fmt_f64(self.gravity));
        s.push_str(",\"sigma\":");
        s.push_str(&fmt_f64(self.surface_tension));
        s.push_str(",\"vorticity\":\"");
        s.push_str(&self.vorticity);
        s.push_str("\",\"w_coeffs\":");
        s.push_str(&fmt_array(&self.w_coeffs));
        s.push_str(",\"phi_values\":[");
        for (i, column) in self.phi_values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&fmt_array(column));
        }
        s.push_str("],\"diagnostics\":{\"q\":");
        s.push_str(&fmt_f64(d.q));
        s.push_str(",\"bernoulli_residual\":");
        s.push_str(&fmt_f64(d.bernoulli_residual));
        s.push_str(",\"f_residual\":");
        s.push_str(&fmt_f64(d.f_residual));
        s.push_str(",\"min_k2\":");
        s.push_str(&fmt_f64(d.min_k2));
        s.push_str(",\"min_depth\":");
        s.push_str(&fmt_f64(d.min_depth));
        s.push_str(",\"max_curvature\":");
        s.push_str(&fmt_f64(d.max_curvature));
        s.push_str(",\"min_surface_speed\":");
        s.push_str(&fmt_f64(d.min_surface_speed));
        s.push_str(",\"vorticity_lp\":");
        s.push_str(&fmt_f64(d.vorticity_lp));
        s.push_str(",\"self_intersecting\":");
        s.push_str(if d.self_intersecting { "true" } else { "false" });
        s.push_str(",\"overhanging\":");
        s.push_str(if d.overhanging { "true" } else { "false" });
        s.push_str("}}");
        s
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: RecordRaw = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        Ok(Self {
            lambda: raw.lambda,
            period: raw.period,
            depth: raw.h,
            gravity: raw.g,
            surface_tension: raw.sigma,
            vorticity: raw.vorticity,
            w_coeffs: raw.w_coeffs,
            phi_values: raw.phi_values,
            diagnostics: raw.diagnostics,
        })
    }
}

/// Branch file: one record line per point (with step metadata), then a
/// trailer line with the termination label.
pub fn branch_to_ndjson(problem: &WaveProblem, branch: &Branch) -> String {
    let mut out = String::new();
    for point in &branch.points {
        let record = SolutionRecord::from_state(problem, &point.state, &point.diagnostics);
        out.push_str("{\"step\":");
        out.push_str(&point.step.to_string());
        out.push_str(",\"ds\":");
        out.push_str(&fmt_f64(point.ds));
        out.push_str(",\"arclength\":");
        out.push_str(&fmt_f64(point.arclength));
        // splice the record fields into the same object
        let record_json = record.to_json();
        out.push(',');
        out.push_str(&record_json[1..]);
        out.push('\n');
    }
    out.push_str("{\"termination\":");
    out.push_str(&serde_json::to_string(&branch.termination).expect("enum serialises"));
    out.push_str("}\n");
    out
}

/// A parsed branch-file line with its step metadata.
#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub step: usize,
    pub ds: f64,
    pub arclength: f64,
    pub record: SolutionRecord,
}

#[derive(Deserialize)]
struct TrailerRaw {
    termination: Termination,
}

#[derive(Deserialize)]
struct BranchLineRaw {
    step: usize,
    ds: f64,
    arclength: f64,
    #[serde(flatten)]
    record: RecordRaw,
}

/// Parse a branch file (or a single-record file, which is a one-line branch
/// without trailer).
pub fn parse_branch_file(text: &str) -> Result<(Vec<BranchRecord>, Option<Termination>)> {
    let mut records = Vec::new();
    let mut termination = None;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        if let Ok(trailer) = serde_json::from_str::<TrailerRaw>(line) {
            termination = Some(trailer.termination);
            continue;
        }
        if let Ok(bl) = serde_json::from_str::<BranchLineRaw>(line) {
            records.push(BranchRecord {
                step: bl.step,
                ds: bl.ds,
                arclength: bl.arclength,
                record: SolutionRecord {
                    lambda: bl.record.lambda,
                    period: bl.record.period,
                    depth: bl.record.h,
                    gravity: bl.record.g,
                    surface_tension: bl.record.sigma,
                    vorticity: bl.record.vorticity,
                    w_coeffs: bl.record.w_coeffs,
                    phi_values: bl.record.phi_values,
                    diagnostics: bl.record.diagnostics,
                },
            });
            continue;
        }
        match SolutionRecord::parse_json(line) {
            Ok(record) => {
                records.push(BranchRecord { step: 0, ds: 0.0, arclength: 0.0, record })
            }
            Err(Error::Parse { message, .. }) => {
                return Err(Error::Parse { line: lineno, message })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((records, termination))
}

/// Companion CSV for plotting: one row per branch point.
pub fn branch_summary_csv(branch: &Branch) -> String {
    let mut out =
        String::from("step,lambda,amplitude,Q,min_K2,min_depth,max_curvature,bernoulli_residual\n");
    for point in &branch.points {
        let d = &point.diagnostics;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            point.step,
            fmt_f64(point.state.lambda),
            fmt_f64(point.state.w.sup_norm()),
            fmt_f64(d.q),
            fmt_f64(d.min_k2),
            fmt_f64(d.min_depth),
            fmt_f64(d.max_curvature),
            fmt_f64(d.bernoulli_residual),
        ));
    }
    out
}

/// One row of the dispersion scan table.
#[derive(Debug, Clone)]
pub struct DispersionRow {
    pub k: usize,
    pub lambda: f64,
    pub d_value: Option<f64>,
    pub branch_index: i64,
}

pub fn dispersion_csv(rows: &[DispersionRow]) -> String {
    let mut out = String::from("k,lambda,d_value,in_spectrum,branch_index\n");
    for row in rows {
        let (d, in_spec) = match row.d_value {
            Some(d) => (fmt_f64(d), "false"),
            None => ("inf".to_string(), "true"),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k,
            fmt_f64(row.lambda),
            d,
            in_spec,
            row.branch_index
        ));
    }
    out
}

pub fn bifurcation_points_csv(points: &[crate::dispersion::BifurcationPoint]) -> String {
    let mut out = String::from("lambda0,k0,d_lambda,kernel_dim,closed_form_lambda\n");
    for bp in points {
        let cf = bp.closed_form_lambda.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(bp.lambda0),
            bp.k0,
            fmt_f64(bp.d_lambda),
            bp.kernel_dim,
            cf
        ));
    }
    out
}

/// One row of the laminar-flow table.
#[derive(Debug, Clone)]
pub struct LaminarRow {
    pub lambda: f64,
    pub m: f64,
    pub psi_min: f64,
    pub unidirectional: bool,
}

pub fn laminar_csv(rows: &[LaminarRow]) -> String {
    let mut out = String::from("lambda,m,psi_min,unidirectional\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(row.lambda),
            fmt_f64(row.m),
            fmt_f64(row.psi_min),
            row.unidirectional
        ));
    }
    out
}

/// Acceptance thresholds for revalidating a stored record.
#[derive(Debug, Clone, Copy)]
pub struct ValidationThresholds {
    pub f_residual: f64,
    pub bernoulli_residual: f64,
    pub harmonicity_residual: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self { f_residual: 1e-8, bernoulli_residual: 1e-4, harmonicity_residual: 1e-2 }
    }
}

/// Residuals recomputed from a reloaded record.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub f_residual: f64,
    pub bernoulli_residual: f64,
    pub harmonicity_residual: f64,
    pub diagnostics: Diagnostics,
    pub pass: bool,
}

/// Rebuild the state from a record and recompute every residual from
/// scratch.
pub fn validate_record(
    record: &SolutionRecord,
    thresholds: &ValidationThresholds,
) -> Result<ValidationReport> {
    let (problem, state) = record.to_problem_state()?;
    let flow = problem.flow(state.lambda)?;
    let (surface, bulk) = residual(&problem, &flow, &state)?;
    let f_res = residual_norm(&surface, &bulk);
    let bern = bernoulli_residual(&problem, &flow, &state)?;
    let mut boundary = state.w.clone();
    boundary.coeffs_mut()[0] += problem.grid.depth();
    let harm = laplacian_residual(&harmonic_extension(&boundary));
    let diag = diagnostics(&problem, &flow, &state)?;
    let pass = f_res <= thresholds.f_residual
        && bern <= thresholds.bernoulli_residual
        && harm <= thresholds.harmonicity_residual;
    Ok(ValidationReport {
        f_residual: f_res,
        bernoulli_residual: bern,
        harmonicity_residual: harm,
        diagnostics: diag,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{run_branch, ContinuationConfig};
    use crate::dispersion::find_bifurcation_points;

    fn problem() -> WaveProblem {
        let grid = GridSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 16).unwrap();
        WaveProblem::new(grid, Physics::new(9.81, 0.074).unwrap(), VorticitySpec::Constant(2.0))
    }

    #[test]
    fn record_round_trip_is_lossless() {
        let p = problem();
        let lambda = 1.1;
        let flow = p.flow(lambda).unwrap();
        let mut w = PeriodicEvenFunction::zeros(p.grid);
        w.coeffs_mut()[1] = 0.017_312_345_678_9;
        let phi = StripField::from_fn(p.grid, |x, y| {
            0.01 * x.cos() * (y + p.grid.depth()) * (-y)
        });
        let state = State::new(lambda, w, phi).unwrap();
        let diag = diagnostics(&p, &flow, &state).unwrap();
        let record = SolutionRecord::from_state(&p, &state, &diag);
        let json = record.to_json();
        let parsed = SolutionRecord::parse_json(&json).unwrap();
        let (p2, state2) = parsed.to_problem_state().unwrap();
        assert_eq!(p2.grid, p.grid);
        assert_eq!(state2.lambda, state.lambda);
        assert!(state2.w.sub(&state.w).sup_norm() == 0.0);
        assert!(state2.phi.sub(&state.phi).sup_norm() == 0.0);
        // writing again gives the identical bytes
        let diag2 = diagnostics(&p2, &p2.flow(lambda).unwrap(), &state2).unwrap();
        let record2 = SolutionRecord::from_state(&p2, &state2, &diag2);
        assert_eq!(record2.to_json(), json);
    }

    #[test]
    fn validation_passes_fresh_and_fails_perturbed() {
        let grid = GridSpec::new(2.0 * std::f64::consts::PI, 1.0, 12, 24).unwrap();
        let p = WaveProblem::new(grid, Physics::new(9.81, 0.074).unwrap(), VorticitySpec::zero());
        let bp = find_bifurcation_points(1, &p.vorticity, grid, &p.phys, (0.5, 5.0), p.ode_tol)
            .unwrap()
            .remove(0);
        let (state, _) = crate::continuation::switch_branch(&p, &bp, 1e-3).unwrap();
        let flow = p.flow(state.lambda).unwrap();
        let diag = diagnostics(&p, &flow, &state).unwrap();
        let record = SolutionRecord::from_state(&p, &state, &diag);
        let thresholds = ValidationThresholds::default();
        let report = validate_record(&record, &thresholds).unwrap();
        assert!(report.pass, "{report:?}");

        // bump one coefficient by 1e-3: the residual must blow past the gate
        let mut broken = record.clone();
        broken.w_coeffs[2] += 1e-3;
        let report = validate_record(&broken, &thresholds).unwrap();
        assert!(!report.pass);
        assert!(report.f_residual > thresholds.f_residual);
    }

    #[test]
    fn laminar_record_validates_with_zero_residuals() {
        let p = problem();
        let state = State::laminar(-1.0, p.grid);
        let flow = p.flow(-1.0).unwrap();
        let diag = diagnostics(&p, &flow, &state).unwrap();
        let record = SolutionRecord::from_state(&p, &state, &diag);
        let report = validate_record(&record, &ValidationThresholds::default()).unwrap();
        assert!(report.pass);
        assert!(report.f_residual < 1e-12);
        assert!(report.bernoulli_residual < 1e-11);
        assert!(report.harmonicity_residual < 1e-12);
    }

    #[test]
    fn branch_file_round_trip() {
        let grid = GridSpec::new(2.0 * std::f64::consts::PI, 1.0, 10, 20).unwrap();
        let p = WaveProblem::new(grid, Physics::new(9.81, 0.074).unwrap(), VorticitySpec::zero());
        let bp = find_bifurcation_points(1, &p.vorticity, grid, &p.phys, (0.5, 5.0), p.ode_tol)
            .unwrap()
            .remove(0);
        let config = ContinuationConfig { max_steps: 3, ..Default::default() };
        let branch = run_branch(&p, &bp, 0.004, &config).unwrap();
        let text = branch_to_ndjson(&p, &branch);
        let (records, termination) = parse_branch_file(&text).unwrap();
        assert_eq!(records.len(), branch.points.len());
        assert_eq!(termination, Some(branch.termination.clone()));
        // revalidation reproduces the stored residual level
        for rec in &records {
            let report = validate_record(&rec.record, &ValidationThresholds::default()).unwrap();
            assert!(report.f_residual <= 1.01e-10, "{}", report.f_residual);
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"lambda\": 1.0,\n{oops}\n";
        match parse_branch_file(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_headers_are_stable() {
        assert!(branch_summary_csv(&Branch {
            origin: crate::dispersion::BifurcationPoint {
                lambda0: 1.0,
                k0: 1,
                mu0: -1.0,
                d_lambda: 1.0,
                kernel_dim: 1,
                closed_form_lambda: None,
            },
            points: vec![],
            termination: Termination::MaxSteps,
        })
        .starts_with("step,lambda,amplitude,Q,min_K2,min_depth,max_curvature,bernoulli_residual"));
        assert!(dispersion_csv(&[]).starts_with("k,lambda,d_value,in_spectrum,branch_index"));
        assert!(bifurcation_points_csv(&[])
            .starts_with("lambda0,k0,d_lambda,kernel_dim,closed_form_lambda"));
        assert!(laminar_csv(&[]).starts_with("lambda,m,psi_min,unidirectional"));
    }
}
