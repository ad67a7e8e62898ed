//! The nonlinear wave operator: conformal factor and curvature of the
//! parametrised surface, the transported bulk Poisson problem, the Bernoulli
//! terms, the fixed-point residual whose zeros are steady waves, and the
//! diagnostic monitors evaluated along solution branches.

use crate::error::{Error, Result};
use crate::flows::{laminar_flow, LaminarFlow, VorticitySpec};
use crate::geometry::periodic_polyline_self_intersects;
use crate::grid::{GridSpec, PeriodicEvenFunction, StripField, Trig};
use crate::spectral;
use crate::Physics;

/// Mean of the surface equation's right-hand side must sit below this before
/// the second antiderivative is applied; a violation signals aliasing and the
/// caller should raise N.
pub const MEAN_ASSERT_TOL: f64 = 1e-10;

/// Exponent of the vorticity norm monitor.
pub const VORTICITY_LP_EXPONENT: f64 = 2.0;

/// Problem setup shared by every evaluation: discretisation, gravity and
/// surface tension, and the vorticity family.
#[derive(Debug, Clone)]
pub struct WaveProblem {
    pub grid: GridSpec,
    pub phys: Physics,
    pub vorticity: VorticitySpec,
    /// Tolerance for the laminar-profile integrations.
    pub ode_tol: f64,
}

impl WaveProblem {
    pub fn new(grid: GridSpec, phys: Physics, vorticity: VorticitySpec) -> Self {
        Self { grid, phys, vorticity, ode_tol: crate::flows::DEFAULT_ODE_TOL }
    }

    pub fn flow(&self, lambda: f64) -> Result<LaminarFlow> {
        laminar_flow(lambda, &self.vorticity, self.grid, self.ode_tol)
    }
}

/// A point of the unknown space: surface velocity parameter, zero-mean
/// surface elevation, and a bulk stream correction vanishing on both
/// boundaries.
#[derive(Debug, Clone)]
pub struct State {
    pub lambda: f64,
    pub w: PeriodicEvenFunction,
    pub phi: StripField,
}

impl State {
    pub fn new(lambda: f64, w: PeriodicEvenFunction, phi: StripField) -> Result<Self> {
        if w.grid() != phi.grid() {
            return Err(Error::InvalidInput("w and phi live on different grids".into()));
        }
        if !w.is_zero_mean() {
            return Err(Error::NonzeroMean { op: "State::new", mean: w.mean() });
        }
        let defect = phi.boundary_defect();
        if defect > 1e-9 * (1.0 + phi.sup_norm()) {
            return Err(Error::InvalidInput(format!(
                "phi must vanish on both boundaries (defect {defect:.3e})"
            )));
        }
        Ok(Self { lambda, w, phi })
    }

    /// The flat-surface state at a given lambda.
    pub fn laminar(lambda: f64, grid: GridSpec) -> Self {
        Self { lambda, w: PeriodicEvenFunction::zeros(grid), phi: StripField::zeros(grid) }
    }

    pub fn grid(&self) -> &GridSpec {
        self.w.grid()
    }
}

/// Conformal factor K(w) at the collocation points (re-expanded in cosine
/// modes) together with min K^2 over the grid.
pub fn conformal_factor(w: &PeriodicEvenFunction) -> Result<(PeriodicEvenFunction, f64)> {
    let trig = Trig::new(w.grid());
    let (k_samples, min_k2) = conformal_factor_samples(&trig, w)?;
    let f = PeriodicEvenFunction::from_samples(*w.grid(), &k_samples)?;
    Ok((f, min_k2))
}

/// K at the collocation points and min K^2; sample-space version.
fn conformal_factor_samples(trig: &Trig, w: &PeriodicEvenFunction) -> Result<(Vec<f64>, f64)> {
    let (even, odd) = spectral::surface_gradient(w)?;
    let e = even.samples_with(trig);
    let o = odd.samples_with(trig);
    let mut min_k2 = f64::INFINITY;
    let k: Vec<f64> = e
        .iter()
        .zip(&o)
        .map(|(a, b)| {
            let k2 = a * a + b * b;
            min_k2 = min_k2.min(k2);
            k2.sqrt()
        })
        .collect();
    Ok((k, min_k2))
}

/// Signed curvature of a parametrised curve from first and second derivative
/// samples.
pub fn parametric_curvature(xp: &[f64], yp: &[f64], xpp: &[f64], ypp: &[f64]) -> Vec<f64> {
    xp.iter()
        .zip(yp)
        .zip(xpp.iter().zip(ypp))
        .map(|((xp, yp), (xpp, ypp))| {
            (xp * ypp - yp * xpp) / (xp * xp + yp * yp).powf(1.5)
        })
        .collect()
}

/// Mean curvature of the surface parametrised by w, evaluated pointwise.
pub fn curvature(w: &PeriodicEvenFunction) -> Result<PeriodicEvenFunction> {
    let grid = *w.grid();
    let trig = Trig::new(&grid);
    let (_, min_k2) = conformal_factor_samples(&trig, w)?;
    if min_k2 <= 0.0 {
        return Err(Error::ConformalityLoss { min_k2 });
    }
    // x' = 1 + C w', y' = w'; x'' = C w'', y'' = w''
    let (even, odd) = spectral::surface_gradient(w)?;
    let wpp = odd.derivative();
    let cwpp = spectral::hilbert_even(&wpp)?;
    let xp = even.samples_with(&trig);
    let yp = odd.samples_with(&trig);
    let xpp = cwpp.samples_with(&trig);
    let ypp = wpp.samples_with(&trig);
    let kappa = parametric_curvature(&xp, &yp, &xpp, &ypp);
    PeriodicEvenFunction::from_samples(grid, &kappa)
}

/// Solve the transported bulk problem: the Poisson problem on the strip whose
/// solution is the update of the stream correction (the second component of
/// the fixed-point map).
pub fn solve_stream(problem: &WaveProblem, flow: &LaminarFlow, state: &State) -> Result<StripField> {
    let trig = Trig::new(&problem.grid);
    let grad_sq = spectral::extension_gradient_sq(&trig, &state.w);
    Ok(solve_stream_given(&trig, problem, flow, &grad_sq, &state.phi))
}

/// Stream solve with precomputed trig tables and |grad V|^2; the hot path of
/// the inner fixed-point iteration.
pub(crate) fn solve_stream_given(
    trig: &Trig,
    problem: &WaveProblem,
    flow: &LaminarFlow,
    grad_sq: &StripField,
    phi: &StripField,
) -> StripField {
    let grid = problem.grid;
    let mut rhs = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let psi = flow.psi[j];
        let g_laminar = problem.vorticity.gamma(psi);
        for i in 0..grid.n_colloc() {
            let total = phi.value(i, j) + psi;
            let v = -problem.vorticity.gamma(total) * grad_sq.value(i, j) + g_laminar;
            rhs.set(i, j, v);
        }
    }
    spectral::poisson_dirichlet_with(trig, &rhs)
}

/// The Bernoulli ingredients at a state: the kinetic surface term B, the
/// Bernoulli constant Q (a weighted collocation mean, so R averages to zero
/// exactly), and the zero-mean forcing R.
#[derive(Debug, Clone)]
pub struct BernoulliTerms {
    pub b: PeriodicEvenFunction,
    pub q: f64,
    pub r: PeriodicEvenFunction,
}

pub fn bernoulli_terms(
    problem: &WaveProblem,
    flow: &LaminarFlow,
    state: &State,
) -> Result<BernoulliTerms> {
    let trig = Trig::new(&problem.grid);
    let stream = solve_stream(problem, flow, state)?;
    bernoulli_terms_given(&trig, problem, state, &stream).map(|t| t.0)
}

/// Sample-space workhorse operating on a precomputed stream solve; also
/// returns the K samples and min K^2 so callers can reuse them.
fn bernoulli_terms_given(
    trig: &Trig,
    problem: &WaveProblem,
    state: &State,
    stream: &StripField,
) -> Result<(BernoulliTerms, Vec<f64>, f64)> {
    let grid = problem.grid;
    let (k_samples, min_k2) = conformal_factor_samples(trig, &state.w)?;
    if min_k2 <= 0.0 {
        return Err(Error::ConformalityLoss { min_k2 });
    }
    // surface gradient of (stream + laminar): the x-derivative vanishes on
    // the boundary row, the y-derivative is lambda plus the one-sided stencil
    let dtop = stream.d_dy_top();
    let w_samples = state.w.samples_with(trig);
    let g = problem.phys.gravity;
    let b_samples: Vec<f64> = dtop
        .iter()
        .zip(&k_samples)
        .map(|(dy, k)| {
            let speed = state.lambda + dy;
            speed * speed / (2.0 * k * k)
        })
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n_colloc() {
        num += k_samples[i] * (b_samples[i] + g * w_samples[i]);
        den += k_samples[i];
    }
    let q = num / den;
    let sigma = problem.phys.surface_tension;
    let r_samples: Vec<f64> = (0..grid.n_colloc())
        .map(|i| k_samples[i] * (b_samples[i] + g * w_samples[i] - q) / sigma)
        .collect();
    let b = PeriodicEvenFunction::from_samples(grid, &b_samples)?;
    let r = PeriodicEvenFunction::from_samples(grid, &r_samples)?;
    Ok((BernoulliTerms { b, q, r }, k_samples, min_k2))
}

/// The residual of the fixed-point formulation: (w, phi) minus the map whose
/// fixed points are steady waves. Vanishes identically at laminar states.
pub fn residual(
    problem: &WaveProblem,
    flow: &LaminarFlow,
    state: &State,
) -> Result<(PeriodicEvenFunction, StripField)> {
    let trig = Trig::new(&problem.grid);
    let stream = solve_stream(problem, flow, state)?;
    residual_given(&trig, problem, state, &stream)
}

/// Residual with a precomputed stream solve (the bulk block is then just
/// phi minus the stream).
pub(crate) fn residual_given(
    trig: &Trig,
    problem: &WaveProblem,
    state: &State,
    stream: &StripField,
) -> Result<(PeriodicEvenFunction, StripField)> {
    let grid = problem.grid;
    let (terms, _, _) = bernoulli_terms_given(trig, problem, state, stream)?;

    // surface component: w - dxinv2((1 + C w') R + w' C R)
    let (even, odd) = spectral::surface_gradient(&state.w)?;
    let cr = spectral::hilbert_even(&terms.r)?;
    let e = even.samples_with(trig);
    let o = odd.samples_with(trig);
    let r = terms.r.samples_with(trig);
    let c = cr.samples_with(trig);
    let arg_samples: Vec<f64> = (0..grid.n_colloc()).map(|i| e[i] * r[i] + o[i] * c[i]).collect();
    let arg = PeriodicEvenFunction::from_samples(grid, &arg_samples)?;
    if arg.mean().abs() > MEAN_ASSERT_TOL * arg.scale() {
        return Err(Error::Internal(format!(
            "surface right-hand side has mean {:.3e}; raise N to control aliasing",
            arg.mean()
        )));
    }
    let integrated = spectral::second_antiderivative(&spectral::project_zero_mean(&arg))?;
    let surface = state.w.sub(&integrated);
    let bulk = state.phi.sub(stream);
    Ok((surface, bulk))
}

/// Infinity norm of the residual over packed coordinates (cosine modes of
/// the surface component, grid values of the bulk component).
pub fn residual_norm(surface: &PeriodicEvenFunction, bulk: &StripField) -> f64 {
    let a = surface.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    a.max(bulk.sup_norm())
}

/// Sup-norm of the pointwise Bernoulli equation residual in the flattened
/// variables: curvature form on the left, the forcing R on the right.
pub fn bernoulli_residual(
    problem: &WaveProblem,
    flow: &LaminarFlow,
    state: &State,
) -> Result<f64> {
    let trig = Trig::new(&problem.grid);
    let stream = solve_stream(problem, flow, state)?;
    let (terms, k_samples, _) = bernoulli_terms_given(&trig, problem, state, &stream)?;
    bernoulli_residual_given(&trig, problem, state, &terms, &k_samples)
}

fn bernoulli_residual_given(
    trig: &Trig,
    problem: &WaveProblem,
    state: &State,
    terms: &BernoulliTerms,
    k_samples: &[f64],
) -> Result<f64> {
    let grid = problem.grid;
    let (even, odd) = spectral::surface_gradient(&state.w)?;
    let wpp = odd.derivative();
    let cwpp = spectral::hilbert_even(&wpp)?;
    let e = even.samples_with(trig);
    let o = odd.samples_with(trig);
    let a = wpp.samples_with(trig);
    let ca = cwpp.samples_with(trig);
    let r = terms.r.samples_with(trig);
    let mut worst = 0.0_f64;
    for i in 0..grid.n_colloc() {
        let lhs = (e[i] * a[i] - o[i] * ca[i]) / (k_samples[i] * k_samples[i]);
        worst = worst.max((lhs - r[i]).abs());
    }
    Ok(worst)
}

/// Monitors evaluated at a state, including the quantities whose blow-up or
/// degeneration labels the end of a continuation branch.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Diagnostics {
    pub q: f64,
    pub bernoulli_residual: f64,
    pub f_residual: f64,
    pub min_k2: f64,
    pub min_depth: f64,
    pub max_curvature: f64,
    pub min_surface_speed: f64,
    pub vorticity_lp: f64,
    pub self_intersecting: bool,
    pub overhanging: bool,
}

pub fn diagnostics(problem: &WaveProblem, flow: &LaminarFlow, state: &State) -> Result<Diagnostics> {
    let grid = problem.grid;
    let trig = Trig::new(&grid);
    let grad_sq = spectral::extension_gradient_sq(&trig, &state.w);
    let stream = solve_stream_given(&trig, problem, flow, &grad_sq, &state.phi);
    let (terms, k_samples, min_k2) = bernoulli_terms_given(&trig, problem, state, &stream)?;
    let (surface, bulk) = residual_given(&trig, problem, state, &stream)?;
    let f_residual = residual_norm(&surface, &bulk);
    let bernoulli = bernoulli_residual_given(&trig, problem, state, &terms, &k_samples)?;

    let w_samples = state.w.samples_with(&trig);
    let min_depth = w_samples
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v + grid.depth()));
    let kappa = curvature(&state.w)?;
    let max_curvature = kappa
        .samples_with(&trig)
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v));

    // surface speed of the state's own stream correction
    let dtop = state.phi.d_dy_top();
    let min_surface_speed = dtop
        .iter()
        .fold(f64::INFINITY, |m, dy| m.min((state.lambda + dy).abs()));

    // vorticity L^p monitor, transported to the physical domain by the
    // conformal weight |grad V|^2
    let p = VORTICITY_LP_EXPONENT;
    let dx = grid.period() / grid.n_colloc() as f64;
    let dy = grid.dy();
    let mut integral = 0.0;
    for j in 0..=grid.m_levels() {
        let weight = if j == 0 || j == grid.m_levels() { 0.5 } else { 1.0 };
        let psi = flow.psi[j];
        for i in 0..grid.n_colloc() {
            let gamma = problem.vorticity.gamma(state.phi.value(i, j) + psi);
            integral += weight * gamma.abs().powf(p) * grad_sq.value(i, j) * dx * dy;
        }
    }
    let vorticity_lp = integral.powf(1.0 / p);

    // surface polyline and its sign tests
    let cw = spectral::hilbert_even(&state.w)?;
    let cw_samples = cw.samples_with(&trig);
    let points: Vec<(f64, f64)> = (0..grid.n_colloc())
        .map(|i| (grid.x(i) + cw_samples[i], w_samples[i] + grid.depth()))
        .collect();
    let self_intersecting = periodic_polyline_self_intersects(&points, grid.period());
    let e = spectral::surface_gradient(&state.w)?.0.samples_with(&trig);
    let overhanging = e.iter().any(|v| *v <= 0.0) && e.iter().any(|v| *v > 0.0);

    Ok(Diagnostics {
        q: terms.q,
        bernoulli_residual: bernoulli,
        f_residual,
        min_k2,
        min_depth,
        max_curvature,
        min_surface_speed,
        vorticity_lp,
        self_intersecting,
        overhanging,
    })
}
