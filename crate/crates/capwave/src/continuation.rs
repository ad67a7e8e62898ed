//! Newton correction, branch switching at bifurcation points, pseudo-arclength
//! stepping, and termination on the global-alternative monitors.
//!
//! The Newton corrector works on the packed unknowns. The bulk block of the
//! Jacobian is the identity minus a smoothing solve, so the linear systems
//! are solved by block elimination: an inner Picard iteration drives the bulk
//! equation to fixed-point accuracy and the outer dense Newton then acts on
//! the surface modes (plus lambda when a pinning or arclength constraint is
//! active). At a converged point this is exactly the Schur complement of the
//! packed system, and the reported residual is the full packed one.

use nalgebra::{DMatrix, DVector};

use crate::dispersion::BifurcationPoint;
use crate::error::{Error, Result};
use crate::flows::LaminarFlow;
use crate::grid::{PeriodicEvenFunction, StripField, Trig};
use crate::linearization::{kernel_element, Packing};
use crate::operator::{
    diagnostics, residual_given, solve_stream_given, Diagnostics, State, WaveProblem,
};

/// Tuning knobs for Newton and the arclength loop, plus the monitor
/// thresholds that operationalise the branch-termination alternatives.
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Initial arclength step.
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Convergence tolerance on the packed residual infinity norm.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_steps: usize,
    /// Stop when min K^2 falls below this (conformality degeneracy).
    pub min_k2_stop: f64,
    /// Stop when min (w + h) falls below this fraction of h (bed contact).
    pub min_depth_stop_frac: f64,
    /// Stop when the maximal surface curvature exceeds this.
    pub max_curvature_stop: f64,
    /// Stop when |lambda| exceeds this.
    pub lambda_bound: f64,
    /// Stop when the amplitude proxy (l1 norm of w' coefficients plus
    /// max |w|) exceeds this.
    pub amplitude_stop: f64,
    /// Stop when the vorticity L^p monitor exceeds this.
    pub vorticity_lp_stop: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds0: 0.01,
            ds_min: 1e-6,
            ds_max: 0.1,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            max_steps: 40,
            min_k2_stop: 1e-4,
            min_depth_stop_frac: 1e-3,
            max_curvature_stop: 1e3,
            lambda_bound: 50.0,
            amplitude_stop: 10.0,
            vorticity_lp_stop: 1e3,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.ds_min && self.ds_min <= self.ds0 && self.ds0 <= self.ds_max;
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "need 0 < ds_min <= ds0 <= ds_max, got {} / {} / {}",
                self.ds_min, self.ds0, self.ds_max
            )));
        }
        Ok(())
    }
}

/// Why a branch run stopped.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Termination {
    MaxSteps,
    LambdaUnbounded,
    AmplitudeUnbounded,
    VorticityLpUnbounded,
    ReturnedToTrivial(f64),
    ConformalityDegeneracy,
    SelfIntersection,
    BedContact,
    NewtonFailure,
}

/// A converged point on a branch with its diagnostics.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub state: State,
    pub diagnostics: Diagnostics,
    pub step: usize,
    /// Arclength step that produced this point (0 for the first).
    pub ds: f64,
    /// Accumulated arclength from the bifurcation point.
    pub arclength: f64,
}

/// A traced solution branch.
#[derive(Debug, Clone)]
pub struct Branch {
    pub origin: BifurcationPoint,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

/// Joint direction over (packed state, lambda), normalised in the Euclidean
/// norm of the pair.
#[derive(Debug, Clone)]
pub struct BranchTangent {
    pub state: DVector<f64>,
    pub lambda: f64,
}

impl BranchTangent {
    fn norm(&self) -> f64 {
        (self.state.norm_squared() + self.lambda * self.lambda).sqrt()
    }

    fn normalized(mut self) -> Self {
        let n = self.norm();
        self.state /= n;
        self.lambda /= n;
        self
    }

    pub fn reversed(&self) -> Self {
        Self { state: -self.state.clone(), lambda: -self.lambda }
    }
}

/// Constraint closing the Newton system.
pub enum Constraint<'a> {
    /// Solve at fixed lambda (square system in the surface modes).
    FixedLambda,
    /// Free lambda; pin one surface cosine coefficient to a value.
    PinMode { k: usize, value: f64 },
    /// Free lambda; Keller normalisation against the previous point.
    Arclength {
        prev_state: &'a DVector<f64>,
        prev_lambda: f64,
        tangent: &'a BranchTangent,
        ds: f64,
    },
}

/// Convergence record of a Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Final packed residual (infinity norm, both blocks).
    pub residual: f64,
    /// Packed residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

const INNER_MAX_ITER: usize = 80;
const FD_EPS: f64 = 1e-7;
const MAX_DAMPING_HALVINGS: usize = 8;

/// Drive the bulk equation to its fixed point at frozen (lambda, w),
/// starting from `phi0`. Returns the iterate, its exact fixed-point defect,
/// and the stream solve at the iterate (reused by the residual evaluation).
/// For vorticity families with vanishing slope the bulk problem does not
/// depend on phi and a single solve is exact.
fn solve_bulk(
    trig: &Trig,
    problem: &WaveProblem,
    flow: &LaminarFlow,
    grad_sq: &StripField,
    phi0: StripField,
    tol: f64,
) -> Result<(StripField, f64, StripField)> {
    let phi = solve_stream_given(trig, problem, flow, grad_sq, &phi0);
    if problem.vorticity.slope_is_zero() {
        let stream = phi.clone();
        return Ok((phi, 0.0, stream));
    }
    let mut phi = phi;
    let mut defect = f64::INFINITY;
    for _ in 0..INNER_MAX_ITER {
        let next = solve_stream_given(trig, problem, flow, grad_sq, &phi);
        defect = next.sub(&phi).sup_norm();
        if defect <= tol {
            // F2 at the returned iterate is exactly phi - next
            return Ok((phi, defect, next));
        }
        phi = next;
    }
    Err(Error::NewtonFailure { residual: defect, iterations: INNER_MAX_ITER })
}

/// One full evaluation of the reduced system at outer unknowns (lambda, w).
struct Eval {
    /// Surface residual modes 1..N.
    surface: DVector<f64>,
    /// Bulk residual sup-norm (fixed-point defect).
    bulk_defect: f64,
    phi: StripField,
}

fn eval_reduced(
    problem: &WaveProblem,
    lambda: f64,
    w: &PeriodicEvenFunction,
    phi_start: &StripField,
    inner_tol: f64,
) -> Result<Eval> {
    let flow = problem.flow(lambda)?;
    let trig = Trig::new(&problem.grid);
    let grad_sq = crate::spectral::extension_gradient_sq(&trig, w);
    let (phi, defect, stream) =
        solve_bulk(&trig, problem, &flow, &grad_sq, phi_start.clone(), inner_tol)?;
    let state = State { lambda, w: w.clone(), phi };
    let (surface, bulk) = residual_given(&trig, problem, &state, &stream)?;
    let n = problem.grid.n_modes();
    let mut r = DVector::zeros(n);
    for k in 1..=n {
        r[k - 1] = surface.coeff(k);
    }
    Ok(Eval { surface: r, bulk_defect: bulk.sup_norm().max(defect), phi: state.phi })
}

/// Damped Newton on the packed unknowns under the given constraint.
///
/// Returns a state whose full packed residual is at or below
/// `config.newton_tol`, together with the iteration record.
pub fn newton_correct(
    problem: &WaveProblem,
    guess: &State,
    constraint: &Constraint,
    config: &ContinuationConfig,
) -> Result<(State, NewtonReport)> {
    let n = problem.grid.n_modes();
    let packing = Packing::new(problem.grid);
    let inner_tol = (config.newton_tol * 1e-3).min(1e-13);
    let free_lambda = !matches!(constraint, Constraint::FixedLambda);
    let dim = if free_lambda { n + 1 } else { n };

    // unknown vector u = (w modes 1..N [, lambda])
    let mut u = DVector::zeros(dim);
    for k in 1..=n {
        u[k - 1] = guess.w.coeff(k);
    }
    if free_lambda {
        u[n] = guess.lambda;
    }
    let mut phi_warm = guess.phi.clone();

    let unpack_w = |u: &DVector<f64>| {
        let mut w = PeriodicEvenFunction::zeros(problem.grid);
        for k in 1..=n {
            w.coeffs_mut()[k] = u[k - 1];
        }
        w
    };
    let lambda_of = |u: &DVector<f64>| if free_lambda { u[n] } else { guess.lambda };

    // residual of the constrained system: surface modes plus constraint row
    let full_eval = |u: &DVector<f64>, phi_start: &StripField| -> Result<(DVector<f64>, Eval)> {
        let w = unpack_w(u);
        let lambda = lambda_of(u);
        let eval = eval_reduced(problem, lambda, &w, phi_start, inner_tol)?;
        let mut r = DVector::zeros(dim);
        r.rows_mut(0, n).copy_from(&eval.surface);
        if free_lambda {
            r[n] = match constraint {
                Constraint::FixedLambda => unreachable!(),
                Constraint::PinMode { k, value } => w.coeff(*k) - value,
                Constraint::Arclength { prev_state, prev_lambda, tangent, ds } => {
                    let packed = packing.pack(&w, &eval.phi);
                    (packed - *prev_state).dot(&tangent.state)
                        + (lambda - prev_lambda) * tangent.lambda
                        - ds
                }
            };
        }
        Ok((r, eval))
    };

    let (mut r, mut eval) = full_eval(&u, &phi_warm)?;
    phi_warm = eval.phi.clone();
    let packed_norm = |r: &DVector<f64>, ev: &Eval| r.amax().max(ev.bulk_defect);
    let mut res_norm = packed_norm(&r, &eval);
    let mut history = vec![res_norm];

    // re-assert the state invariants (zero mean, boundary traces) on exit
    let finish = |u: &DVector<f64>, phi: StripField| -> Result<State> {
        State::new(lambda_of(u), unpack_w(u), phi)
            .map_err(|e| Error::Internal(format!("corrected state violates invariants: {e}")))
    };

    for iter in 0..config.newton_max_iter {
        if res_norm <= config.newton_tol {
            let state = finish(&u, eval.phi)?;
            return Ok((state, NewtonReport { iterations: iter, residual: res_norm, history }));
        }

        // Jacobian of the reduced system by forward differences
        let mut jac = DMatrix::zeros(dim, dim);
        let mut up = u.clone();
        for col in 0..dim {
            let h = FD_EPS * (1.0 + u[col].abs());
            up[col] = u[col] + h;
            let (rp, _) = full_eval(&up, &phi_warm)?;
            up[col] = u[col];
            jac.set_column(col, &((rp - &r) / h));
        }

        let delta = jac
            .lu()
            .solve(&(-&r))
            .ok_or(Error::NewtonFailure { residual: res_norm, iterations: iter })?;

        // damped line search on the packed residual
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..=MAX_DAMPING_HALVINGS {
            let trial = &u + &delta * t;
            match full_eval(&trial, &phi_warm) {
                Ok((rt, et)) => {
                    let nt = packed_norm(&rt, &et);
                    if nt < res_norm * (1.0 - 1e-4 * t) || nt <= config.newton_tol {
                        u = trial;
                        r = rt;
                        eval = et;
                        phi_warm = eval.phi.clone();
                        res_norm = nt;
                        history.push(nt);
                        accepted = true;
                        break;
                    }
                }
                Err(Error::ConformalityLoss { .. }) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailure { residual: res_norm, iterations: iter + 1 });
        }
    }
    if res_norm <= config.newton_tol {
        let state = finish(&u, eval.phi)?;
        return Ok((
            state,
            NewtonReport { iterations: config.newton_max_iter, residual: res_norm, history },
        ));
    }
    Err(Error::NewtonFailure { residual: res_norm, iterations: config.newton_max_iter })
}

/// First nontrivial point near a simple bifurcation point: start from the
/// predictor scaled to (signed) amplitude `s0` and correct with the leading
/// cosine coefficient pinned, leaving lambda free.
pub fn switch_branch(
    problem: &WaveProblem,
    bp: &BifurcationPoint,
    s0: f64,
) -> Result<(State, NewtonReport)> {
    switch_branch_with(problem, bp, s0, &ContinuationConfig::default())
}

/// As [`switch_branch`] but under a caller-supplied Newton configuration, so
/// branch runs converge their first point to the same tolerance as every
/// later one.
pub fn switch_branch_with(
    problem: &WaveProblem,
    bp: &BifurcationPoint,
    s0: f64,
    config: &ContinuationConfig,
) -> Result<(State, NewtonReport)> {
    if bp.d_lambda == 0.0 {
        return Err(Error::InvalidInput(
            "transversality fails at this root (d_lambda = 0); cannot switch branch".into(),
        ));
    }
    let ke = kernel_element(problem, bp)?;
    let guess = State {
        lambda: bp.lambda0,
        w: ke.predictor.dw.scaled(s0),
        phi: ke.predictor.dphi.scaled(s0),
    };
    let target = s0 * ke.predictor.dw.coeff(bp.k0);
    let constraint = Constraint::PinMode { k: bp.k0, value: target };
    newton_correct(problem, &guess, &constraint, config)
}

fn amplitude_proxy(w: &PeriodicEvenFunction) -> f64 {
    let nu = w.grid().nu();
    let l1: f64 = w
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * nu * c.abs())
        .sum();
    l1 + w.sup_norm()
}

fn check_termination(
    problem: &WaveProblem,
    config: &ContinuationConfig,
    state: &State,
    diag: &Diagnostics,
    peak_amplitude: f64,
    prev_amplitude: f64,
) -> Option<Termination> {
    let amp = amplitude_proxy(&state.w);
    if state.lambda.abs() > config.lambda_bound {
        return Some(Termination::LambdaUnbounded);
    }
    if amp > config.amplitude_stop {
        return Some(Termination::AmplitudeUnbounded);
    }
    if diag.vorticity_lp > config.vorticity_lp_stop {
        return Some(Termination::VorticityLpUnbounded);
    }
    if peak_amplitude > 1e-3 && amp < 1e-6 && amp < prev_amplitude {
        return Some(Termination::ReturnedToTrivial(state.lambda));
    }
    if diag.min_k2 < config.min_k2_stop || diag.max_curvature > config.max_curvature_stop {
        return Some(Termination::ConformalityDegeneracy);
    }
    if diag.self_intersecting {
        return Some(Termination::SelfIntersection);
    }
    if diag.min_depth < config.min_depth_stop_frac * problem.grid.depth() {
        return Some(Termination::BedContact);
    }
    None
}

/// Tangent-predictor / Newton-corrector continuation from a start state and
/// an initial joint tangent. The step halves on corrector failure and grows
/// by 1.3 on fast convergence.
pub fn trace(
    problem: &WaveProblem,
    origin: BifurcationPoint,
    start: State,
    start_tangent: BranchTangent,
    config: &ContinuationConfig,
) -> Result<Branch> {
    config.validate()?;
    let packing = Packing::new(problem.grid);
    let flow = problem.flow(start.lambda)?;
    let start_diag = diagnostics(problem, &flow, &start)?;
    let mut points = vec![BranchPoint {
        state: start.clone(),
        diagnostics: start_diag,
        step: 0,
        ds: 0.0,
        arclength: 0.0,
    }];
    let mut tangent = start_tangent.normalized();
    let mut packed_cur = packing.pack(&start.w, &start.phi);
    let mut lambda_cur = start.lambda;
    let mut ds = config.ds0;
    let mut arclength = 0.0;
    let mut peak_amplitude = amplitude_proxy(&start.w);
    let mut prev_amplitude = peak_amplitude;
    let mut termination = Termination::MaxSteps;

    let mut step = 0;
    while step < config.max_steps {
        // predictor along the joint tangent
        let packed_pred = &packed_cur + &tangent.state * ds;
        let lambda_pred = lambda_cur + tangent.lambda * ds;
        let (w_pred, phi_pred) = packing.unpack(&packed_pred)?;
        let guess = State { lambda: lambda_pred, w: w_pred, phi: phi_pred };
        let constraint = Constraint::Arclength {
            prev_state: &packed_cur,
            prev_lambda: lambda_cur,
            tangent: &tangent,
            ds,
        };
        match newton_correct(problem, &guess, &constraint, config) {
            Ok((state, report)) => {
                step += 1;
                let flow = problem.flow(state.lambda)?;
                let diag = diagnostics(problem, &flow, &state)?;
                let packed_new = packing.pack(&state.w, &state.phi);
                let dstate = &packed_new - &packed_cur;
                let dlambda = state.lambda - lambda_cur;
                let moved = (dstate.norm_squared() + dlambda * dlambda).sqrt();
                arclength += moved;
                points.push(BranchPoint {
                    state: state.clone(),
                    diagnostics: diag.clone(),
                    step,
                    ds,
                    arclength,
                });

                let amp = amplitude_proxy(&state.w);
                if let Some(term) = check_termination(
                    problem,
                    config,
                    &state,
                    &diag,
                    peak_amplitude,
                    prev_amplitude,
                ) {
                    termination = term;
                    break;
                }
                peak_amplitude = peak_amplitude.max(amp);
                prev_amplitude = amp;

                // secant tangent, oriented by construction
                tangent = BranchTangent { state: dstate / moved, lambda: dlambda / moved };
                packed_cur = packed_new;
                lambda_cur = state.lambda;
                if report.iterations <= 4 {
                    ds = (ds * 1.3).min(config.ds_max);
                }
            }
            Err(Error::ConformalityLoss { .. }) => {
                termination = Termination::ConformalityDegeneracy;
                break;
            }
            Err(Error::NewtonFailure { .. }) => {
                ds *= 0.5;
                if ds < config.ds_min {
                    termination = Termination::NewtonFailure;
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Branch { origin, points, termination })
}

/// Switch onto the branch at a bifurcation point and trace it; the sign of
/// `s0` selects the half-branch.
pub fn run_branch(
    problem: &WaveProblem,
    bp: &BifurcationPoint,
    s0: f64,
    config: &ContinuationConfig,
) -> Result<Branch> {
    config.validate()?;
    let (first, _) = switch_branch_with(problem, bp, s0, config)?;
    let packing = Packing::new(problem.grid);
    // joint tangent from the laminar state to the first point
    let packed_first = packing.pack(&first.w, &first.phi);
    let tangent = BranchTangent { state: packed_first.clone(), lambda: first.lambda - bp.lambda0 };
    trace(problem, bp.clone(), first, tangent, config)
}
