//! Vorticity function families and laminar (flat-surface) flows.
//!
//! A laminar flow is the depth-only stream function obtained by integrating
//! the Cauchy problem psi'' = -gamma(psi), psi(0) = 0, psi_y(0) = lambda from
//! the surface down to the bed, together with its derivative with respect to
//! lambda (needed for mass-flux sensitivities and transversality checks).

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ode;

/// Default integration tolerance for laminar profiles and shooting.
pub const DEFAULT_ODE_TOL: f64 = 1e-12;

/// Analytic vorticity function family providing gamma and two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum VorticitySpec {
    /// gamma(s) = c
    Constant(f64),
    /// gamma(s) = a s + b
    Affine { a: f64, b: f64 },
    /// gamma(s) = sum_i c_i s^i
    Polynomial(Vec<f64>),
}

impl VorticitySpec {
    pub fn zero() -> Self {
        VorticitySpec::Constant(0.0)
    }

    pub fn gamma(&self, s: f64) -> f64 {
        match self {
            VorticitySpec::Constant(c) => *c,
            VorticitySpec::Affine { a, b } => a * s + b,
            VorticitySpec::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ci| acc * s + ci),
        }
    }

    pub fn gamma_prime(&self, s: f64) -> f64 {
        match self {
            VorticitySpec::Constant(_) => 0.0,
            VorticitySpec::Affine { a, .. } => *a,
            VorticitySpec::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate().skip(1).rev() {
                    acc = acc * s + i as f64 * ci;
                }
                acc
            }
        }
    }

    pub fn gamma_second(&self, s: f64) -> f64 {
        match self {
            VorticitySpec::Constant(_) | VorticitySpec::Affine { .. } => 0.0,
            VorticitySpec::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate().skip(2).rev() {
                    acc = acc * s + (i * (i - 1)) as f64 * ci;
                }
                acc
            }
        }
    }

    /// Antiderivative of gamma with value 0 at 0 (closed form per family).
    pub fn gamma_antiderivative(&self, s: f64) -> f64 {
        match self {
            VorticitySpec::Constant(c) => c * s,
            VorticitySpec::Affine { a, b } => 0.5 * a * s * s + b * s,
            VorticitySpec::Polynomial(c) => {
                let mut acc = 0.0;
                for (i, ci) in c.iter().enumerate().rev() {
                    acc = acc * s + ci / (i + 1) as f64;
                }
                acc * s
            }
        }
    }

    /// Whether gamma' is globally bounded (false only for nonlinear
    /// polynomials, which are still accepted as long as the profile
    /// integration reaches the bed).
    pub fn has_bounded_slope(&self) -> bool {
        match self {
            VorticitySpec::Constant(_) | VorticitySpec::Affine { .. } => true,
            VorticitySpec::Polynomial(c) => c.len() <= 2,
        }
    }

    /// True when gamma' vanishes identically, so the bulk problem does not
    /// depend on the stream correction and its fixed point is reached in one
    /// solve.
    pub fn slope_is_zero(&self) -> bool {
        match self {
            VorticitySpec::Constant(_) => true,
            VorticitySpec::Affine { a, .. } => *a == 0.0,
            VorticitySpec::Polynomial(c) => c.iter().skip(1).all(|ci| *ci == 0.0),
        }
    }

    /// Parse "constant:G", "affine:A,B", or "poly:c0,c1,...".
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidInput(msg);
        let (kind, args) = text
            .split_once(':')
            .ok_or_else(|| bad(format!("vorticity spec '{text}' missing ':'")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("vorticity spec '{text}': {e}")))?;
        match (kind.trim(), nums.as_slice()) {
            ("constant", [g]) => Ok(VorticitySpec::Constant(*g)),
            ("affine", [a, b]) => {
                if *a == 0.0 {
                    return Err(bad("affine vorticity needs a != 0; use constant".into()));
                }
                Ok(VorticitySpec::Affine { a: *a, b: *b })
            }
            ("poly", c) if !c.is_empty() => Ok(VorticitySpec::Polynomial(c.to_vec())),
            _ => Err(bad(format!("unrecognised vorticity spec '{text}'"))),
        }
    }
}

impl std::fmt::Display for VorticitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VorticitySpec::Constant(c) => write!(f, "constant:{c}"),
            VorticitySpec::Affine { a, b } => write!(f, "affine:{a},{b}"),
            VorticitySpec::Polynomial(c) => {
                write!(f, "poly:")?;
                for (i, ci) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{ci}")?;
                }
                Ok(())
            }
        }
    }
}

/// Laminar solution psi^lambda sampled on the y-levels, with its
/// lambda-derivative and the mass flux m(lambda) = -psi(-h).
#[derive(Debug, Clone)]
pub struct LaminarFlow {
    pub lambda: f64,
    pub grid: GridSpec,
    pub vorticity: VorticitySpec,
    /// psi at levels j = 0..=M (bottom to top).
    pub psi: Vec<f64>,
    /// psi_y at the levels.
    pub psi_y: Vec<f64>,
    /// d psi / d lambda at the levels.
    pub dpsi_dlambda: Vec<f64>,
    /// d psi_y / d lambda at the levels.
    pub dpsi_y_dlambda: Vec<f64>,
    /// Mass flux m(lambda).
    pub m: f64,
}

/// Integrate the laminar Cauchy problem from the surface down to the bed
/// together with its variational equation, sampling on the y-levels.
pub fn laminar_flow(
    lambda: f64,
    vorticity: &VorticitySpec,
    grid: GridSpec,
    tol: f64,
) -> Result<LaminarFlow> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let vort = vorticity.clone();
    let rhs = move |_y: f64, s: &[f64; 4]| {
        [s[1], -vort.gamma(s[0]), s[3], -vort.gamma_prime(s[0]) * s[2]]
    };
    // integrate top (y = 0) to bottom (y = -h), then store bottom-to-top
    let ts: Vec<f64> = (0..=grid.m_levels()).rev().map(|j| grid.y(j)).collect();
    let states = ode::integrate_sampled(&rhs, &ts, [0.0, lambda, 0.0, 1.0], tol)
        .map_err(|e| Error::Integration(format!("laminar flow does not reach -h: {e}")))?;
    let m_levels = grid.m_levels();
    let mut psi = vec![0.0; m_levels + 1];
    let mut psi_y = vec![0.0; m_levels + 1];
    let mut dpsi = vec![0.0; m_levels + 1];
    let mut dpsi_y = vec![0.0; m_levels + 1];
    for (row, state) in states.iter().enumerate() {
        let j = m_levels - row;
        psi[j] = state[0];
        psi_y[j] = state[1];
        dpsi[j] = state[2];
        dpsi_y[j] = state[3];
    }
    let m = -psi[0];
    Ok(LaminarFlow {
        lambda,
        grid,
        vorticity: vorticity.clone(),
        psi,
        psi_y,
        dpsi_dlambda: dpsi,
        dpsi_y_dlambda: dpsi_y,
        m,
    })
}

/// True when the horizontal velocity never vanishes: psi_y < 0 at every
/// level, so the semi-hodograph change of variables applies.
pub fn is_unidirectional(flow: &LaminarFlow) -> bool {
    flow.psi_y.iter().all(|v| *v < 0.0)
}

impl LaminarFlow {
    /// Range of gamma'(psi(y)) over the sampled levels.
    pub fn gamma_prime_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &self.psi {
            let g = self.vorticity.gamma_prime(p);
            lo = lo.min(g);
            hi = hi.max(g);
        }
        (lo, hi)
    }
}

/// Closed-form laminar profile for the constant and affine families (None for
/// polynomials), used as an oracle by tests and scans.
pub fn laminar_closed_form(vorticity: &VorticitySpec, lambda: f64, y: f64) -> Option<f64> {
    match vorticity {
        VorticitySpec::Constant(g) => Some(-0.5 * g * y * y + lambda * y),
        VorticitySpec::Affine { a, b } => {
            if *a > 0.0 {
                let r = a.sqrt();
                Some(lambda / r * (r * y).sin() + b / a * ((r * y).cos() - 1.0))
            } else {
                let r = (-a).sqrt();
                Some(lambda / r * (r * y).sinh() + b / a * ((r * y).cosh() - 1.0))
            }
        }
        VorticitySpec::Polynomial(_) => None,
    }
}
