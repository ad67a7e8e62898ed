//! Linearisation machinery: the analytic derivative of the wave operator at
//! laminar states, the good-unknown change of variables that decouples its
//! surface and bulk blocks, kernel vectors and branch predictors at
//! bifurcation points, and finite-difference Jacobians of the discretised
//! operator in packed coordinates.

use nalgebra::{DMatrix, DVector};

use crate::dispersion::{vertical_profile, BifurcationPoint};
use crate::error::{Error, Result};
use crate::flows::LaminarFlow;
use crate::grid::{sinh_ratio, GridSpec, PeriodicEvenFunction, StripField, Trig};
use crate::operator::{residual, State, WaveProblem};
use crate::spectral;

/// Default step scale for forward differences in the packed Jacobian.
pub const FD_EPS_FORWARD: f64 = 1e-7;
/// Default step scale for central differences in the packed Jacobian.
pub const FD_EPS_CENTRAL: f64 = 1e-5;

/// A direction in the unknown space (optionally with a lambda component for
/// continuation tangents).
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub dw: PeriodicEvenFunction,
    pub dphi: StripField,
    pub dlambda: f64,
}

impl TangentVector {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            dw: PeriodicEvenFunction::zeros(grid),
            dphi: StripField::zeros(grid),
            dlambda: 0.0,
        }
    }
}

/// Kernel data at a simple bifurcation point: the reduced kernel field and
/// the branch predictor it induces through the good unknown.
#[derive(Debug, Clone)]
pub struct KernelElement {
    pub k: usize,
    pub theta: StripField,
    pub predictor: TangentVector,
}

fn admissible_trace(theta: &StripField) -> Result<PeriodicEvenFunction> {
    let trace = theta.trace_top();
    if !trace.is_zero_mean() {
        return Err(Error::NonzeroMean { op: "good_unknown", mean: trace.mean() });
    }
    Ok(trace)
}

/// The good-unknown isomorphism: maps an admissible bulk field to a state
/// direction, decoupling the linearised surface and bulk problems at laminar
/// flows.
pub fn good_unknown(lambda: f64, flow: &LaminarFlow, theta: &StripField) -> Result<TangentVector> {
    if lambda == 0.0 {
        return Err(Error::InvalidInput("good unknown needs lambda != 0".into()));
    }
    let grid = *theta.grid();
    let trace = admissible_trace(theta)?;
    let extension = spectral::harmonic_extension(&trace);
    let mut dphi = theta.clone();
    for j in 0..=grid.m_levels() {
        let factor = flow.psi_y[j] / lambda;
        for i in 0..grid.n_colloc() {
            let v = dphi.value(i, j) - factor * extension.value(i, j);
            dphi.set(i, j, v);
        }
    }
    Ok(TangentVector { dw: trace.scaled(-1.0 / lambda), dphi, dlambda: 0.0 })
}

/// Inverse of [`good_unknown`].
pub fn good_unknown_inverse(
    lambda: f64,
    flow: &LaminarFlow,
    v: &TangentVector,
) -> Result<StripField> {
    if lambda == 0.0 {
        return Err(Error::InvalidInput("good unknown needs lambda != 0".into()));
    }
    let grid = *v.dw.grid();
    let extension = spectral::harmonic_extension(&v.dw);
    let mut theta = v.dphi.clone();
    for j in 0..=grid.m_levels() {
        let psi_y = flow.psi_y[j];
        for i in 0..grid.n_colloc() {
            let val = theta.value(i, j) - psi_y * extension.value(i, j);
            theta.set(i, j, val);
        }
    }
    Ok(theta)
}

/// Top trace of the y-derivative of the harmonic extension of a zero-mean
/// boundary function, exact per mode.
fn extension_dy_top(v: &PeriodicEvenFunction) -> PeriodicEvenFunction {
    spectral::hilbert_odd(&v.derivative())
}

/// Apply the analytic derivative of the wave operator at the laminar state
/// with the flow's lambda to a state direction.
pub fn apply_trivial_jacobian(
    problem: &WaveProblem,
    flow: &LaminarFlow,
    v: &TangentVector,
) -> Result<TangentVector> {
    let grid = problem.grid;
    let trig = Trig::new(&grid);
    let lambda = flow.lambda;
    let sigma = problem.phys.surface_tension;
    let g = problem.phys.gravity;

    // bulk sensitivities: both are Poisson solves with zero boundary data
    let (_, ext_dy) = spectral::harmonic_gradient(&v.dw);
    let mut rhs_w = StripField::zeros(grid);
    let mut rhs_phi = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let gamma = problem.vorticity.gamma(flow.psi[j]);
        let gamma_p = problem.vorticity.gamma_prime(flow.psi[j]);
        for i in 0..grid.n_colloc() {
            rhs_w.set(i, j, -2.0 * gamma * ext_dy.value(i, j));
            rhs_phi.set(i, j, -gamma_p * v.dphi.value(i, j));
        }
    }
    let aw = spectral::poisson_dirichlet_with(&trig, &rhs_w);
    let aphi = spectral::poisson_dirichlet_with(&trig, &rhs_phi);

    // surface block
    let s_dy_aw = PeriodicEvenFunction::from_samples(grid, &aw.d_dy_top())?;
    let s_dy_aphi = PeriodicEvenFunction::from_samples(grid, &aphi.d_dy_top())?;
    let cwp = spectral::hilbert_odd(&v.dw.derivative());
    let mut arg = spectral::project_zero_mean(&s_dy_aw).scaled(lambda);
    arg = arg.add(&cwp.scaled(-lambda * lambda));
    arg = arg.add(&v.dw.scaled(g));
    let mut surface = v.dw.sub(
        &spectral::second_antiderivative(&spectral::project_zero_mean(&arg))?.scaled(1.0 / sigma),
    );
    let phi_part = spectral::second_antiderivative(&spectral::project_zero_mean(&s_dy_aphi))?
        .scaled(-lambda / sigma);
    surface = surface.add(&phi_part);

    // bulk output: dphi - (A_w + A_phi)
    let bulk = v.dphi.sub(&aw).sub(&aphi);
    Ok(TangentVector { dw: surface, dphi: bulk, dlambda: 0.0 })
}

/// Apply the linearised operator conjugated by the good unknown to an
/// admissible bulk field; equals `apply_trivial_jacobian` after the change of
/// variables.
pub fn apply_good_unknown_linearization(
    problem: &WaveProblem,
    flow: &LaminarFlow,
    theta: &StripField,
) -> Result<(PeriodicEvenFunction, StripField)> {
    let grid = problem.grid;
    let trig = Trig::new(&grid);
    let lambda = flow.lambda;
    if lambda == 0.0 {
        return Err(Error::InvalidInput("good unknown needs lambda != 0".into()));
    }
    let sigma = problem.phys.surface_tension;
    let g = problem.phys.gravity;
    let trace = admissible_trace(theta)?;

    // bulk sensitivity of the stream solve in the theta direction
    let mut rhs = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let gamma_p = problem.vorticity.gamma_prime(flow.psi[j]);
        for i in 0..grid.n_colloc() {
            rhs.set(i, j, -gamma_p * theta.value(i, j));
        }
    }
    let aphi = spectral::poisson_dirichlet_with(&trig, &rhs);
    let extension = spectral::harmonic_extension(&trace);
    let combined = aphi.add(&extension);

    // surface block: the derivative trace splits into a one-sided stencil
    // for the Poisson part and the exact modal derivative of the extension
    let s_dy_aphi = PeriodicEvenFunction::from_samples(grid, &aphi.d_dy_top())?;
    let s_dy = spectral::project_zero_mean(&s_dy_aphi).add(&extension_dy_top(&trace));
    let gamma0 = problem.vorticity.gamma(0.0);
    let mut arg = s_dy.scaled(lambda);
    arg = arg.add(&trace.scaled(gamma0 - g / lambda));
    let surface = trace.scaled(-1.0 / lambda).sub(
        &spectral::second_antiderivative(&spectral::project_zero_mean(&arg))?.scaled(1.0 / sigma),
    );
    let bulk = theta.sub(&combined);
    Ok((surface, bulk))
}

/// Kernel field and branch predictor at a simple bifurcation point.
pub fn kernel_element(problem: &WaveProblem, bp: &BifurcationPoint) -> Result<KernelElement> {
    if bp.kernel_dim != 1 {
        return Err(Error::InvalidInput(format!(
            "kernel is {}-dimensional; branch switching needs a simple kernel \
             (re-pose on the sub-period to separate the modes)",
            bp.kernel_dim
        )));
    }
    let grid = problem.grid;
    let flow = problem.flow(bp.lambda0)?;
    let profile = vertical_profile(bp.mu0, &flow, problem.ode_tol)?;
    if profile.in_dirichlet_spectrum {
        return Err(Error::DirichletSpectrum { mu: bp.mu0 });
    }
    let trig = Trig::new(&grid);
    let mut theta = StripField::zeros(grid);
    let mut dphi = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let beta = profile.values[j];
        let slot = beta - flow.psi_y[j] * sinh_ratio(&grid, bp.k0, grid.y(j)) / bp.lambda0;
        for i in 0..grid.n_colloc() {
            let c = trig.cos(bp.k0, i);
            theta.set(i, j, beta * c);
            dphi.set(i, j, slot * c);
        }
    }
    let dw = PeriodicEvenFunction::mode(grid, bp.k0, -1.0 / bp.lambda0);
    Ok(KernelElement { k: bp.k0, theta, predictor: TangentVector { dw, dphi, dlambda: 0.0 } })
}

/// Packed coordinates: surface cosine modes 1..N first, then for each bulk
/// cosine mode 0..N its interior level values (levels 1..M-1), mode-major.
#[derive(Debug, Clone, Copy)]
pub struct Packing {
    grid: GridSpec,
}

impl Packing {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid }
    }

    pub fn dim(&self) -> usize {
        let n = self.grid.n_modes();
        let m = self.grid.m_levels();
        n + (n + 1) * (m - 1)
    }

    pub fn pack(&self, w: &PeriodicEvenFunction, phi: &StripField) -> DVector<f64> {
        let n = self.grid.n_modes();
        let m = self.grid.m_levels();
        let trig = Trig::new(&self.grid);
        let mut out = DVector::zeros(self.dim());
        for k in 1..=n {
            out[k - 1] = w.coeff(k);
        }
        let mut coeffs = vec![0.0; n + 1];
        for j in 1..m {
            let row = phi.level_samples(j);
            trig.even_from_samples(&row, &mut coeffs);
            for (k, c) in coeffs.iter().enumerate() {
                out[n + k * (m - 1) + (j - 1)] = *c;
            }
        }
        out
    }

    pub fn unpack(&self, v: &DVector<f64>) -> Result<(PeriodicEvenFunction, StripField)> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "packed vector has length {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        let n = self.grid.n_modes();
        let m = self.grid.m_levels();
        let trig = Trig::new(&self.grid);
        let mut w = PeriodicEvenFunction::zeros(self.grid);
        for k in 1..=n {
            w.coeffs_mut()[k] = v[k - 1];
        }
        let mut phi = StripField::zeros(self.grid);
        let mut coeffs = vec![0.0; n + 1];
        let mut samples = vec![0.0; self.grid.n_colloc()];
        for j in 1..m {
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c = v[n + k * (m - 1) + (j - 1)];
            }
            trig.even_to_samples(&coeffs, &mut samples);
            for (i, s) in samples.iter().enumerate() {
                phi.set(i, j, *s);
            }
        }
        Ok((w, phi))
    }
}

/// Finite-difference stencil for packed Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdStencil {
    Forward,
    Central,
}

/// Dense Jacobian of the packed residual at a state, by column-wise
/// differencing. The step for coordinate x is eps_scale * (1 + |x|).
pub fn fd_jacobian(
    problem: &WaveProblem,
    state: &State,
    stencil: FdStencil,
    eps_scale: Option<f64>,
) -> Result<DMatrix<f64>> {
    let packing = Packing::new(problem.grid);
    let dim = packing.dim();
    let flow = problem.flow(state.lambda)?;
    let x0 = packing.pack(&state.w, &state.phi);
    let eps = eps_scale.unwrap_or(match stencil {
        FdStencil::Forward => FD_EPS_FORWARD,
        FdStencil::Central => FD_EPS_CENTRAL,
    });

    let eval = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let (w, phi) = packing.unpack(x)?;
        let trial = State { lambda: state.lambda, w, phi };
        let (surface, bulk) = residual(problem, &flow, &trial)?;
        Ok(packing.pack(&surface, &bulk))
    };

    let base = eval(&x0)?;
    let mut jac = DMatrix::zeros(dim, dim);
    let mut x = x0.clone();
    for col in 0..dim {
        let h = eps * (1.0 + x0[col].abs());
        let column = match stencil {
            FdStencil::Forward => {
                x[col] = x0[col] + h;
                let plus = eval(&x)?;
                x[col] = x0[col];
                (plus - &base) / h
            }
            FdStencil::Central => {
                x[col] = x0[col] + h;
                let plus = eval(&x)?;
                x[col] = x0[col] - h;
                let minus = eval(&x)?;
                x[col] = x0[col];
                (plus - minus) / (2.0 * h)
            }
        };
        if let Some(row) = column.iter().position(|v| !v.is_finite()) {
            return Err(Error::Internal(format!(
                "non-finite Jacobian entry at row {row}, column {col}"
            )));
        }
        jac.set_column(col, &column);
    }
    Ok(jac)
}

/// Dense matrix of the analytic laminar-state Jacobian, column by column
/// through [`apply_trivial_jacobian`].
pub fn trivial_jacobian_matrix(problem: &WaveProblem, flow: &LaminarFlow) -> Result<DMatrix<f64>> {
    let packing = Packing::new(problem.grid);
    let dim = packing.dim();
    let mut jac = DMatrix::zeros(dim, dim);
    let mut unit = DVector::zeros(dim);
    for col in 0..dim {
        unit[col] = 1.0;
        let (dw, dphi) = packing.unpack(&unit)?;
        unit[col] = 0.0;
        let out =
            apply_trivial_jacobian(problem, flow, &TangentVector { dw, dphi, dlambda: 0.0 })?;
        jac.set_column(col, &packing.pack(&out.dw, &out.dphi));
    }
    Ok(jac)
}
