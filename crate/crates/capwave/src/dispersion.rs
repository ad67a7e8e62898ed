//! The dispersion relation of the linearisation at laminar flows and
//! everything needed to locate bifurcation points on the laminar family:
//! vertical-mode shooting, a Pruefer-angle cross-oracle, the
//! lambda-derivative (transversality), closed forms for constant and affine
//! vorticity, a kernel-dimension scan, and the unidirectional Sturm-Liouville
//! cross-check.

use crate::error::{Error, Result};
use crate::flows::{is_unidirectional, laminar_flow, LaminarFlow, VorticitySpec};
use crate::grid::{coth, GridSpec};
use crate::ode;
use crate::Physics;

/// |shoot value at the surface| below this fraction of the profile sup-norm
/// flags mu as sitting in the Dirichlet spectrum.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Roots of the dispersion relation are refined until |d| drops below this.
pub const ROOT_TOL: f64 = 1e-10;

/// A wavenumber k counts towards the kernel dimension when
/// |d(-(k nu)^2, lambda)| is below this.
pub const KERNEL_TOL: f64 = 1e-8;

/// Number of initial samples when scanning a lambda window for roots.
const SCAN_SAMPLES: usize = 400;

/// Solution of the linearised vertical problem with Dirichlet bottom value,
/// normalised to 1 at the surface (when possible).
#[derive(Debug, Clone)]
pub struct VerticalProfile {
    pub mu: f64,
    pub lambda: f64,
    /// Profile at the y-levels, bottom to top. Normalised so the top value is
    /// 1 unless `in_dirichlet_spectrum`, in which case the raw shoot profile
    /// is kept.
    pub values: Vec<f64>,
    /// y-derivative at the surface of the normalised profile (NaN when in
    /// the Dirichlet spectrum).
    pub slope_top: f64,
    /// Raw shoot value at the surface (unit slope at the bed).
    pub shoot_top: f64,
    pub in_dirichlet_spectrum: bool,
}

/// Shoot the vertical problem upward from the bed: unit slope at y = -h,
/// coupled with the laminar profile so the variable coefficient is evaluated
/// exactly along the integration.
pub fn vertical_profile(mu: f64, flow: &LaminarFlow, tol: f64) -> Result<VerticalProfile> {
    let grid = flow.grid;
    let vort = flow.vorticity.clone();
    let rhs = move |_y: f64, s: &[f64; 4]| {
        [s[1], -vort.gamma(s[0]), s[3], -(vort.gamma_prime(s[0]) + mu) * s[2]]
    };
    let ts: Vec<f64> = (0..=grid.m_levels()).map(|j| grid.y(j)).collect();
    let init = [flow.psi[0], flow.psi_y[0], 0.0, 1.0];
    let states = ode::integrate_sampled(&rhs, &ts, init, tol)?;
    let shoot: Vec<f64> = states.iter().map(|s| s[2]).collect();
    let shoot_top = shoot[grid.m_levels()];
    let slope_shoot_top = states[grid.m_levels()][3];
    let sup = shoot.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let in_spectrum = shoot_top.abs() < SPECTRUM_TOL * sup;
    if in_spectrum {
        return Ok(VerticalProfile {
            mu,
            lambda: flow.lambda,
            values: shoot,
            slope_top: f64::NAN,
            shoot_top,
            in_dirichlet_spectrum: true,
        });
    }
    let values = shoot.iter().map(|v| v / shoot_top).collect();
    Ok(VerticalProfile {
        mu,
        lambda: flow.lambda,
        values,
        slope_top: slope_shoot_top / shoot_top,
        shoot_top,
        in_dirichlet_spectrum: false,
    })
}

/// d(mu, lambda) computed from an existing laminar flow; `None` marks the
/// infinite value on the Dirichlet spectrum.
pub fn dispersion_from_flow(
    mu: f64,
    flow: &LaminarFlow,
    phys: &Physics,
    tol: f64,
) -> Result<Option<f64>> {
    let lambda = flow.lambda;
    if lambda == 0.0 {
        return Err(Error::InvalidInput("dispersion relation needs lambda != 0".into()));
    }
    let profile = vertical_profile(mu, flow, tol)?;
    if profile.in_dirichlet_spectrum {
        return Ok(None);
    }
    let gamma0 = flow.vorticity.gamma(0.0);
    Ok(Some(
        profile.slope_top + phys.surface_tension * mu / (lambda * lambda) + gamma0 / lambda
            - phys.gravity / (lambda * lambda),
    ))
}

/// d(mu, lambda) for a vorticity family on a grid.
pub fn dispersion_value(
    mu: f64,
    lambda: f64,
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    tol: f64,
) -> Result<Option<f64>> {
    if lambda == 0.0 {
        return Err(Error::InvalidInput("dispersion relation needs lambda != 0".into()));
    }
    let flow = laminar_flow(lambda, vorticity, grid, tol)?;
    dispersion_from_flow(mu, &flow, phys, tol)
}

/// Partial derivative of d with respect to lambda.
///
/// The derivative of the surface slope is obtained from the linear
/// two-point problem it satisfies, solved by shooting superposition: a
/// particular solution with zero Cauchy data at the bed plus the right
/// multiple of the homogeneous shoot.
pub fn dispersion_lambda_derivative(
    mu: f64,
    lambda: f64,
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    tol: f64,
) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::InvalidInput("dispersion relation needs lambda != 0".into()));
    }
    let flow = laminar_flow(lambda, vorticity, grid, tol)?;
    let vort = flow.vorticity.clone();
    // state: psi, psi_y, dpsi/dlambda, dpsi_y/dlambda, shoot, shoot_y,
    //        particular, particular_y
    let rhs = move |_y: f64, s: &[f64; 8]| {
        let gp = vort.gamma_prime(s[0]) + mu;
        [
            s[1],
            -vort.gamma(s[0]),
            s[3],
            -vort.gamma_prime(s[0]) * s[2],
            s[5],
            -gp * s[4],
            s[7],
            -gp * s[6] - vort.gamma_second(s[0]) * s[4] * s[2],
        ]
    };
    let init = [
        flow.psi[0],
        flow.psi_y[0],
        flow.dpsi_dlambda[0],
        flow.dpsi_y_dlambda[0],
        0.0,
        1.0,
        0.0,
        0.0,
    ];
    let end = ode::integrate(&rhs, -grid.depth(), 0.0, init, tol)?;
    let shoot_top = end[4];
    let sup = shoot_top.abs().max(end[5].abs()).max(1.0);
    if shoot_top.abs() < SPECTRUM_TOL * sup {
        return Err(Error::DirichletSpectrum { mu });
    }
    // the particular pass used the unnormalised shoot profile on the
    // right-hand side; rescale, then enforce the zero surface value
    let part_top = end[6] / shoot_top;
    let part_slope_top = end[7] / shoot_top;
    let c = -part_top / shoot_top;
    let dslope_dlambda = part_slope_top + c * end[5];
    let gamma0 = flow.vorticity.gamma(0.0);
    let l3 = lambda * lambda * lambda;
    Ok(dslope_dlambda - 2.0 * phys.surface_tension * mu / l3 - gamma0 / (lambda * lambda)
        + 2.0 * phys.gravity / l3)
}

/// Pruefer-angle computation of the surface slope: integrate the angle ODE
/// upward from zero phase at the bed and return cot of the surface phase,
/// plus the branch index counting how many multiples of pi were crossed.
#[derive(Debug, Clone, Copy)]
pub struct PrueferSlope {
    pub slope_top: f64,
    pub theta_top: f64,
    pub branch_index: i64,
    pub in_dirichlet_spectrum: bool,
}

pub fn pruefer_slope(mu: f64, flow: &LaminarFlow, tol: f64) -> Result<PrueferSlope> {
    let vort = flow.vorticity.clone();
    let rhs = move |_y: f64, s: &[f64; 3]| {
        let (sin, cos) = s[2].sin_cos();
        [s[1], -vort.gamma(s[0]), cos * cos + (vort.gamma_prime(s[0]) + mu) * sin * sin]
    };
    let init = [flow.psi[0], flow.psi_y[0], 0.0];
    let end = ode::integrate(&rhs, -flow.grid.depth(), 0.0, init, tol)?;
    let theta = end[2];
    let frac = theta / std::f64::consts::PI;
    let in_spectrum = (frac - frac.round()).abs() < SPECTRUM_TOL;
    Ok(PrueferSlope {
        slope_top: if in_spectrum { f64::NAN } else { 1.0 / theta.tan() },
        theta_top: theta,
        branch_index: frac.floor() as i64,
        in_dirichlet_spectrum: in_spectrum,
    })
}

/// The comparison function v(z) bounding the surface slope: sqrt(-z) coth of
/// h sqrt(-z) for z < 0, continued through z = 0 to sqrt(z) cot(h sqrt(z)).
pub fn slope_bound(z: f64, h: f64) -> f64 {
    if z.abs() * h * h < 1e-8 {
        return 1.0 / h - z * h / 3.0;
    }
    if z < 0.0 {
        let r = (-z).sqrt();
        r * coth(h * r)
    } else {
        let r = z.sqrt();
        r / (h * r).tan()
    }
}

/// The interval of mu values (between consecutive Dirichlet bands) on which
/// the two-sided slope bounds apply; `None` when empty.
pub fn bound_interval(j: usize, h: f64, inf_gp: f64, sup_gp: f64) -> Option<(f64, f64)> {
    let pi = std::f64::consts::PI;
    let upper = ((j + 1) as f64 * pi / h).powi(2) - sup_gp;
    let lower = if j == 0 {
        f64::NEG_INFINITY
    } else {
        (j as f64 * pi / h).powi(2) - inf_gp
    };
    if lower < upper {
        Some((lower, upper))
    } else {
        None
    }
}

/// A located zero of d(-(k0 nu)^2, .) on the laminar family.
#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub lambda0: f64,
    pub k0: usize,
    /// mu0 = -(k0 nu)^2.
    pub mu0: f64,
    /// d_lambda at the root (transversality value).
    pub d_lambda: f64,
    /// Number of wavenumbers k in 1..=k_max with |d(-(k nu)^2, lambda0)|
    /// below [`KERNEL_TOL`].
    pub kernel_dim: usize,
    /// Closed-form root for constant/affine vorticity, when available.
    pub closed_form_lambda: Option<f64>,
}

/// Scan a lambda window for roots of d(-(k0 nu)^2, .), refine them, and
/// attach transversality and kernel-dimension data.
///
/// The window must not contain 0. Tangential near-roots (no sign change) are
/// chased through a local minimisation and kept only if |d| reaches the root
/// tolerance; they then carry d_lambda near zero, flagging a transversality
/// failure.
pub fn find_bifurcation_points(
    k0: usize,
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    lambda_window: (f64, f64),
    tol: f64,
) -> Result<Vec<BifurcationPoint>> {
    if k0 < 1 {
        return Err(Error::InvalidInput("need k0 >= 1".into()));
    }
    let (lo, hi) = lambda_window;
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidInput(format!("bad lambda window ({lo}, {hi})")));
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidInput("lambda window must exclude 0".into()));
    }
    let mu0 = -(k0 as f64 * grid.nu()).powi(2);
    let d_at = |lambda: f64| -> Result<Option<f64>> {
        dispersion_value(mu0, lambda, vorticity, grid, phys, tol)
    };

    let mut samples = Vec::with_capacity(SCAN_SAMPLES + 1);
    for i in 0..=SCAN_SAMPLES {
        let lambda = lo + (hi - lo) * i as f64 / SCAN_SAMPLES as f64;
        samples.push((lambda, d_at(lambda)?));
    }

    let mut roots: Vec<f64> = Vec::new();
    for pair in samples.windows(2) {
        let (la, da) = (pair[0].0, pair[0].1);
        let (lb, db) = (pair[1].0, pair[1].1);
        if let (Some(da), Some(db)) = (da, db) {
            if da == 0.0 {
                roots.push(la);
            } else if da * db < 0.0 {
                let f = |l: f64| d_at(l).ok().flatten().unwrap_or(f64::INFINITY);
                let (root, _) = ode::refine_root(&f, la, lb, da, db, 1e-14, ROOT_TOL);
                roots.push(root);
            }
        }
    }

    // tangential candidates: interior |d| minima without a sign change
    for w in samples.windows(3) {
        if let (Some(d0), Some(d1), Some(d2)) = (w[0].1, w[1].1, w[2].1) {
            if d0.signum() == d1.signum()
                && d1.signum() == d2.signum()
                && d1.abs() < d0.abs()
                && d1.abs() < d2.abs()
                && d1.abs() < 1e-2
            {
                let f = |l: f64| d_at(l).ok().flatten().map_or(f64::INFINITY, f64::abs);
                let x = golden_min(&f, w[0].0, w[2].0, 1e-13);
                if f(x) < ROOT_TOL {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));

    let k_max = 20.max(4 * k0);
    let mut out = Vec::new();
    for lambda0 in roots {
        let flow = laminar_flow(lambda0, vorticity, grid, tol)?;
        let mut kernel_dim = 0;
        for k in 1..=k_max {
            let mu = -(k as f64 * grid.nu()).powi(2);
            if let Some(d) = dispersion_from_flow(mu, &flow, phys, tol)? {
                if d.abs() < KERNEL_TOL {
                    kernel_dim += 1;
                }
            }
        }
        let d_lambda =
            dispersion_lambda_derivative(mu0, lambda0, vorticity, grid, phys, tol).unwrap_or(0.0);
        let closed_form_lambda = closed_form_lambda_roots(vorticity, grid, phys, k0)
            .map(|(lm, lp)| {
                if (lambda0 - lm).abs() < (lambda0 - lp).abs() {
                    lm
                } else {
                    lp
                }
            });
        if let Some(cf) = closed_form_lambda {
            if (cf - lambda0).abs() > 1e-6 * (1.0 + lambda0.abs()) {
                return Err(Error::Internal(format!(
                    "root {lambda0} disagrees with closed form {cf}"
                )));
            }
        }
        out.push(BifurcationPoint {
            lambda0,
            k0,
            mu0,
            d_lambda,
            kernel_dim,
            closed_form_lambda,
        });
    }
    Ok(out)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, x_tol: f64) -> f64 {
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Closed-form surface slope of the vertical profile for constant/affine
/// vorticity at mu = -(k nu)^2; None for other families or at a Dirichlet
/// pole.
pub fn closed_form_slope_top(vorticity: &VorticitySpec, grid: GridSpec, k: usize) -> Option<f64> {
    let l = k as f64 * grid.nu();
    let h = grid.depth();
    let a = match vorticity {
        VorticitySpec::Constant(_) => 0.0,
        VorticitySpec::Affine { a, .. } => *a,
        VorticitySpec::Polynomial(_) => return None,
    };
    let q = a - l * l;
    if q > 0.0 {
        let r = q.sqrt();
        let s = (r * h).sin();
        if s.abs() < 1e-12 {
            return None;
        }
        Some(r * (r * h).cos() / s)
    } else if q == 0.0 {
        Some(1.0 / h)
    } else {
        let r = (-q).sqrt();
        Some(r * coth(r * h))
    }
}

/// Closed-form d(-(k nu)^2, lambda) for constant/affine vorticity.
pub fn closed_form_dispersion(
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    k: usize,
    lambda: f64,
) -> Option<f64> {
    let slope = closed_form_slope_top(vorticity, grid, k)?;
    let l = k as f64 * grid.nu();
    let gamma0 = vorticity.gamma(0.0);
    Some(
        slope - phys.surface_tension * l * l / (lambda * lambda) + gamma0 / lambda
            - phys.gravity / (lambda * lambda),
    )
}

/// The two closed-form roots (lambda_minus, lambda_plus) of the dispersion
/// relation at wavenumber k for constant/affine vorticity; None when the
/// family has no closed form, the slope sits at a pole, or the discriminant
/// is negative.
pub fn closed_form_lambda_roots(
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    k: usize,
) -> Option<(f64, f64)> {
    let f = closed_form_slope_top(vorticity, grid, k)?;
    if f == 0.0 {
        return None;
    }
    let l = k as f64 * grid.nu();
    let b = vorticity.gamma(0.0);
    let disc = b * b + 4.0 * (phys.surface_tension * l * l + phys.gravity) * f;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lp = (-b + sq) / (2.0 * f);
    let lm = (-b - sq) / (2.0 * f);
    Some((lm.min(lp), lm.max(lp)))
}

/// Result of the unidirectional Sturm-Liouville eigenvalue scan.
#[derive(Debug, Clone)]
pub struct SturmLiouvilleScan {
    /// Eigenvalues mu found inside the scanned window, ascending.
    pub eigenvalues: Vec<f64>,
    /// Mass-flux coordinate of the bed, p0 = m(lambda) < 0.
    pub p0: f64,
    /// Value of the integral criterion for a single negative eigenvalue
    /// (integral of a^-3 over [p0, 0]); compare against 1/g.
    pub criterion_integral: f64,
    /// Whether the integral criterion for exactly one negative eigenvalue
    /// holds.
    pub single_negative_criterion: bool,
}

/// For a unidirectional laminar flow, recast the vertical problem in the
/// mass-flux variable and scan for eigenvalues of the Sturm-Liouville problem
/// with the eigenvalue-dependent surface condition. Eigenvalues must agree
/// with the roots of d(., lambda).
pub fn sturm_liouville_eigenvalues(
    lambda: f64,
    vorticity: &VorticitySpec,
    grid: GridSpec,
    phys: &Physics,
    mu_window: (f64, f64),
    tol: f64,
) -> Result<SturmLiouvilleScan> {
    if lambda >= 0.0 || lambda.is_nan() {
        return Err(Error::InvalidInput("Sturm-Liouville check needs lambda < 0".into()));
    }
    let flow = laminar_flow(lambda, vorticity, grid, tol)?;
    if !is_unidirectional(&flow) {
        return Err(Error::InvalidInput("laminar flow is not unidirectional".into()));
    }
    let p0 = flow.m;
    if p0 >= 0.0 || p0.is_nan() {
        return Err(Error::InvalidInput(format!("expected negative mass flux, got {p0}")));
    }

    // Gamma(p) at the bed by adaptive Simpson, and its minimum over a sample
    // of [p0, 0] to validate the change of variables a = sqrt(lambda^2 +
    // 2 Gamma) > 0.
    let vort = vorticity.clone();
    let gamma_of = move |p: f64| vort.gamma(-p);
    let gamma_at = |p: f64| -> f64 { ode::simpson(&gamma_of, 0.0, p, 1e-12) };
    let mut min_gamma = 0.0_f64;
    for i in 0..=100 {
        let p = p0 * i as f64 / 100.0;
        min_gamma = min_gamma.min(gamma_at(p));
    }
    if lambda * lambda + 2.0 * min_gamma <= 0.0 {
        return Err(Error::InvalidInput(
            "lambda^2 + 2 min Gamma <= 0: mass-flux change of variables degenerates".into(),
        ));
    }
    let gamma_p0 = gamma_at(p0);

    // Shoot from the bed: state [v, v_p, Gamma, integral of a^-3].
    let vort = vorticity.clone();
    let shoot = move |mu: f64| -> Result<(f64, f64, f64)> {
        let vort = vort.clone();
        let rhs = move |p: f64, s: &[f64; 4]| {
            let a2 = lambda * lambda + 2.0 * s[2];
            let g = vort.gamma(-p);
            [s[1], (-mu * s[0] - 3.0 * g * s[1]) / a2, g, a2.powf(-1.5)]
        };
        let end = ode::integrate(&rhs, p0, 0.0, [0.0, 1.0, gamma_p0, 0.0], tol)?;
        Ok((end[0], end[1], end[3]))
    };

    // boundary defect whose zeros are the eigenvalues
    let a0_cubed = (-lambda).powi(3);
    let defect = |mu: f64| -> Result<f64> {
        let (v0, vp0, _) = shoot(mu)?;
        Ok(a0_cubed * vp0 - (-phys.surface_tension * mu + phys.gravity) * v0)
    };

    let (_, _, criterion_integral) = shoot(0.0)?;
    let single_negative_criterion = criterion_integral < 1.0 / phys.gravity;

    let (lo, hi) = mu_window;
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidInput(format!("bad mu window ({lo}, {hi})")));
    }
    let n = 240;
    let mut eigenvalues = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let mu = lo + (hi - lo) * i as f64 / n as f64;
        let w = defect(mu)?;
        if let Some((pm, pw)) = prev {
            if pw == 0.0 {
                eigenvalues.push(pm);
            } else if pw * w < 0.0 {
                let f = |m: f64| defect(m).unwrap_or(f64::INFINITY);
                let scale = pw.abs().max(w.abs());
                let (root, _) = ode::refine_root(&f, pm, mu, pw, w, 1e-12, 1e-12 * scale);
                eigenvalues.push(root);
            }
        }
        prev = Some((mu, w));
    }
    Ok(SturmLiouvilleScan { eigenvalues, p0, criterion_integral, single_negative_criterion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::DEFAULT_ODE_TOL as TOL;
    use crate::grid::sinh_ratio;

    fn grid() -> GridSpec {
        GridSpec::new(2.0 * std::f64::consts::PI, 1.0, 8, 32).unwrap()
    }

    fn phys() -> Physics {
        Physics::new(9.81, 0.074).unwrap()
    }

    #[test]
    fn profile_constant_vorticity_closed_form() {
        // beta = sinh(k nu (y+h)) / sinh(k nu h), slope k nu coth(k nu h)
        let g = grid();
        let flow = laminar_flow(1.0, &VorticitySpec::Constant(1.5), g, TOL).unwrap();
        for k in 1..=3 {
            let mu = -(k as f64 * g.nu()).powi(2);
            let profile = vertical_profile(mu, &flow, TOL).unwrap();
            assert!(!profile.in_dirichlet_spectrum);
            for j in 0..=g.m_levels() {
                let exact = sinh_ratio(&g, k, g.y(j));
                assert!((profile.values[j] - exact).abs() < 1e-10, "k={k} j={j}");
            }
            let l = k as f64 * g.nu();
            assert!((profile.slope_top - l * coth(l * g.depth())).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_affine_below_and_at_resonance() {
        let g = grid();
        // case with a - (k nu)^2 < 0
        let a = -2.0;
        let flow = laminar_flow(-1.0, &VorticitySpec::Affine { a, b: 0.3 }, g, TOL).unwrap();
        let k = 2;
        let l = k as f64 * g.nu();
        let mu = -l * l;
        let profile = vertical_profile(mu, &flow, TOL).unwrap();
        let r = (l * l - a).sqrt();
        assert!((profile.slope_top - r * coth(r * g.depth())).abs() < 1e-10);

        // a = (k nu)^2: beta = (y + h)/h with slope 1/h
        let k = 1;
        let a = (k as f64 * g.nu()).powi(2);
        let flow = laminar_flow(-1.0, &VorticitySpec::Affine { a, b: 0.3 }, g, TOL).unwrap();
        let profile = vertical_profile(-a, &flow, TOL).unwrap();
        for j in 0..=g.m_levels() {
            let exact = (g.y(j) + g.depth()) / g.depth();
            assert!((profile.values[j] - exact).abs() < 1e-10);
        }
        assert!((profile.slope_top - 1.0 / g.depth()).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_spectrum_is_flagged() {
        // for affine a and mu with a + mu = (m pi / h)^2 the shoot vanishes
        // at the surface
        let g = grid();
        let a = 1.0;
        let flow = laminar_flow(-1.0, &VorticitySpec::Affine { a, b: 0.0 }, g, TOL).unwrap();
        let mu = (std::f64::consts::PI / g.depth()).powi(2) - a;
        let profile = vertical_profile(mu, &flow, TOL).unwrap();
        assert!(profile.in_dirichlet_spectrum);
        let d = dispersion_from_flow(mu, &flow, &phys(), TOL).unwrap();
        assert!(d.is_none());
    }

    #[test]
    fn dispersion_matches_constant_closed_form() {
        let g = grid();
        let p = phys();
        let gamma = 2.0;
        let vort = VorticitySpec::Constant(gamma);
        for k in 1..=4 {
            for &lambda in &[-2.5, -1.0, 0.7, 3.0] {
                let mu = -(k as f64 * g.nu()).powi(2);
                let d = dispersion_value(mu, lambda, &vort, g, &p, TOL).unwrap().unwrap();
                let exact = closed_form_dispersion(&vort, g, &p, k, lambda).unwrap();
                assert!((d - exact).abs() < 1e-9, "k={k} lambda={lambda}: {d} vs {exact}");
            }
        }
    }

    #[test]
    fn dispersion_matches_affine_oscillatory_closed_form() {
        // a - (k nu)^2 > 0 exercises the cot branch
        let g = grid();
        let p = phys();
        let vort = VorticitySpec::Affine { a: 2.0, b: 0.5 };
        let k = 1;
        let mu = -(k as f64 * g.nu()).powi(2);
        for &lambda in &[-2.0, 1.5] {
            let d = dispersion_value(mu, lambda, &vort, g, &p, TOL).unwrap().unwrap();
            let exact = closed_form_dispersion(&vort, g, &p, k, lambda).unwrap();
            assert!((d - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_derivative_reduces_when_gamma_second_vanishes() {
        // gamma'' = 0 makes the profile lambda-independent, so d_lambda is
        // the explicit algebraic tail with gamma(0) in place
        let g = grid();
        let p = phys();
        for vort in [VorticitySpec::Constant(1.3), VorticitySpec::Affine { a: -0.8, b: 0.4 }] {
            let gamma0 = vort.gamma(0.0);
            let k = 2;
            let mu = -(k as f64 * g.nu()).powi(2);
            for &lambda in &[-1.7, 0.9] {
                let dl = dispersion_lambda_derivative(mu, lambda, &vort, g, &p, TOL).unwrap();
                let l3 = lambda.powi(3);
                let exact = -2.0 * p.surface_tension * mu / l3 - gamma0 / (lambda * lambda)
                    + 2.0 * p.gravity / l3;
                assert!((dl - exact).abs() < 1e-9, "{vort:?} lambda={lambda}: {dl} vs {exact}");
            }
        }
    }

    #[test]
    fn returned_roots_meet_tolerance_and_transversality_is_fd_consistent() {
        let g = grid();
        let p = phys();
        let vort = VorticitySpec::Affine { a: -1.0, b: 0.5 };
        let roots = find_bifurcation_points(1, &vort, g, &p, (0.2, 6.0), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        let bp = &roots[0];
        let d_at_root =
            dispersion_value(bp.mu0, bp.lambda0, &vort, g, &p, TOL).unwrap().unwrap();
        assert!(d_at_root.abs() < ROOT_TOL, "|d| at root = {d_at_root:.2e}");
        let eps = 1e-6 * (1.0 + bp.lambda0.abs());
        let dp = dispersion_value(bp.mu0, bp.lambda0 + eps, &vort, g, &p, TOL).unwrap().unwrap();
        let dm = dispersion_value(bp.mu0, bp.lambda0 - eps, &vort, g, &p, TOL).unwrap().unwrap();
        let fd = (dp - dm) / (2.0 * eps);
        assert!(
            (bp.d_lambda - fd).abs() < 1e-5 * fd.abs().max(1.0),
            "d_lambda {} vs FD {fd}",
            bp.d_lambda
        );
    }

    #[test]
    fn lambda_derivative_matches_finite_differences() {
        let g = grid();
        let p = phys();
        // nonlinear vorticity exercises the gamma'' forcing term
        let vort = VorticitySpec::Polynomial(vec![0.4, -0.3, 0.25]);
        let k = 1;
        let mu = -(k as f64 * g.nu()).powi(2);
        for &lambda in &[-1.4_f64, 1.1] {
            let dl = dispersion_lambda_derivative(mu, lambda, &vort, g, &p, TOL).unwrap();
            let eps = 1e-6 * (1.0 + lambda.abs());
            let dp = dispersion_value(mu, lambda + eps, &vort, g, &p, TOL).unwrap().unwrap();
            let dm = dispersion_value(mu, lambda - eps, &vort, g, &p, TOL).unwrap().unwrap();
            let fd = (dp - dm) / (2.0 * eps);
            assert!(
                (dl - fd).abs() < 1e-5 * fd.abs().max(1.0),
                "lambda={lambda}: {dl} vs fd {fd}"
            );
        }
    }

    #[test]
    fn pruefer_agrees_with_shooting() {
        let g = grid();
        let vort = VorticitySpec::Polynomial(vec![0.2, 0.3, -0.15]);
        let flow = laminar_flow(-1.2, &vort, g, TOL).unwrap();
        for &mu in &[-9.0, -4.0, -1.0, 2.0] {
            let profile = vertical_profile(mu, &flow, TOL).unwrap();
            let pruefer = pruefer_slope(mu, &flow, TOL).unwrap();
            assert!(!profile.in_dirichlet_spectrum && !pruefer.in_dirichlet_spectrum);
            assert!(
                (profile.slope_top - pruefer.slope_top).abs()
                    < 1e-8 * profile.slope_top.abs().max(1.0),
                "mu={mu}: {} vs {}",
                profile.slope_top,
                pruefer.slope_top
            );
        }
    }

    #[test]
    fn pruefer_irrotational_single_mode() {
        let g = grid();
        let flow = laminar_flow(-1.0, &VorticitySpec::zero(), g, TOL).unwrap();
        let mu = -g.nu() * g.nu();
        let p = pruefer_slope(mu, &flow, TOL).unwrap();
        assert!((p.slope_top - g.nu() * coth(g.nu() * g.depth())).abs() < 1e-9);
        assert_eq!(p.branch_index, 0);
    }

    #[test]
    fn slope_bounds_hold_on_intervals() {
        // two-sided comparison bounds with the inf/sup of gamma' along the
        // laminar profile
        let g = grid();
        let vort = VorticitySpec::Polynomial(vec![0.3, 0.4, -0.2]);
        let flow = laminar_flow(-1.5, &vort, g, TOL).unwrap();
        let (inf_gp, sup_gp) = flow.gamma_prime_range();
        assert!(sup_gp > inf_gp);
        for j in 0..2 {
            let Some((lo, hi)) = bound_interval(j, g.depth(), inf_gp, sup_gp) else {
                continue;
            };
            let lo = lo.max(hi - 30.0);
            for i in 1..6 {
                let mu = lo + (hi - lo) * i as f64 / 6.0;
                let profile = vertical_profile(mu, &flow, TOL).unwrap();
                if profile.in_dirichlet_spectrum {
                    continue;
                }
                let upper = slope_bound(mu + inf_gp, g.depth());
                let lower = slope_bound(mu + sup_gp, g.depth());
                assert!(
                    profile.slope_top <= upper + 1e-9 && profile.slope_top >= lower - 1e-9,
                    "j={j} mu={mu}: {} not in [{lower}, {upper}]",
                    profile.slope_top
                );
            }
        }
    }

    #[test]
    fn slope_monotone_decreasing_on_branch() {
        let g = grid();
        let flow = laminar_flow(-1.0, &VorticitySpec::Constant(0.8), g, TOL).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..10 {
            let mu = -20.0 + 2.0 * i as f64;
            let p = pruefer_slope(mu, &flow, TOL).unwrap();
            if p.branch_index == 0 && !p.in_dirichlet_spectrum {
                assert!(p.slope_top < last, "mu={mu}");
                last = p.slope_top;
            }
        }
    }

    #[test]
    fn irrotational_bifurcation_points_match_closed_form() {
        // gamma = 0, g = 9.81, sigma = 0.074, h = 1, L = 2 pi, k0 = 1:
        // lambda0 = +/- sqrt((sigma + g) tanh 1)
        let g = grid();
        let p = phys();
        let expected = ((p.surface_tension + p.gravity) * 1.0_f64.tanh()).sqrt();
        let roots =
            find_bifurcation_points(1, &VorticitySpec::zero(), g, &p, (0.5, 5.0), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda0 - expected).abs() < 1e-8, "{} vs {expected}", roots[0].lambda0);
        assert_eq!(roots[0].kernel_dim, 1);
        assert!(roots[0].d_lambda.abs() > 1e-3);

        let roots =
            find_bifurcation_points(1, &VorticitySpec::zero(), g, &p, (-5.0, -0.5), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda0 + expected).abs() < 1e-8);
    }

    #[test]
    fn constant_vorticity_roots_match_lambda_pm() {
        let g = grid();
        let p = phys();
        let vort = VorticitySpec::Constant(2.0);
        let (lm, lp) = closed_form_lambda_roots(&vort, g, &p, 1).unwrap();
        let roots = find_bifurcation_points(1, &vort, g, &p, (0.2, 6.0), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda0 - lp).abs() < 1e-8);
        let roots = find_bifurcation_points(1, &vort, g, &p, (-6.0, -0.2), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda0 - lm).abs() < 1e-8);
    }

    #[test]
    fn affine_vorticity_roots_match_lambda_pm() {
        let g = grid();
        let p = phys();
        let vort = VorticitySpec::Affine { a: -1.0, b: 0.5 };
        let (lm, lp) = closed_form_lambda_roots(&vort, g, &p, 2).unwrap();
        let roots = find_bifurcation_points(2, &vort, g, &p, (0.2, 6.0), TOL).unwrap();
        assert_eq!(roots.len(), 1, "{roots:?}");
        assert!((roots[0].lambda0 - lp).abs() < 1e-8);
        let roots = find_bifurcation_points(2, &vort, g, &p, (-6.0, -0.2), TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].lambda0 - lm).abs() < 1e-8);
    }

    #[test]
    fn window_containing_zero_is_rejected() {
        let g = grid();
        let err = find_bifurcation_points(1, &VorticitySpec::zero(), g, &phys(), (-1.0, 1.0), TOL);
        assert!(err.is_err());
    }

    #[test]
    fn sturm_liouville_matches_dispersion_irrotational() {
        let g = grid();
        let p = phys();
        let vort = VorticitySpec::zero();
        // pick lambda at the k = 1 bifurcation point so mu = -nu^2 is an
        // eigenvalue
        let expected = -((p.surface_tension + p.gravity) * 1.0_f64.tanh()).sqrt();
        let scan =
            sturm_liouville_eigenvalues(expected, &vort, g, &p, (-20.0, -0.05), TOL).unwrap();
        let target = -g.nu() * g.nu();
        assert!(
            scan.eigenvalues.iter().any(|mu| (mu - target).abs() < 1e-6),
            "eigenvalues {:?} miss {target}",
            scan.eigenvalues
        );
        // every reported eigenvalue is a dispersion root
        for &mu in &scan.eigenvalues {
            let d = dispersion_value(mu, expected, &vort, g, &p, TOL).unwrap().unwrap();
            assert!(d.abs() < 1e-6, "mu={mu}: d={d}");
        }
        assert!(scan.eigenvalues.len() <= 2);
    }

    #[test]
    fn sturm_liouville_rejects_non_unidirectional() {
        let g = grid();
        let gamma = 1.4;
        let vort = VorticitySpec::Constant(gamma);
        let err = sturm_liouville_eigenvalues(
            -gamma * g.depth() / 2.0,
            &vort,
            g,
            &phys(),
            (-10.0, -0.1),
            TOL,
        );
        assert!(err.is_err());
        let err2 = sturm_liouville_eigenvalues(1.0, &vort, g, &phys(), (-10.0, -0.1), TOL);
        assert!(err2.is_err());
    }

    #[test]
    fn sturm_liouville_constant_vorticity_cross_check() {
        let g = grid();
        let p = phys();
        let gamma = 0.8;
        let vort = VorticitySpec::Constant(gamma);
        let (lm, _) = closed_form_lambda_roots(&vort, g, &p, 1).unwrap();
        // lm < 0 < -gamma h is required for unidirectionality
        assert!(lm < -gamma * g.depth());
        let scan = sturm_liouville_eigenvalues(lm, &vort, g, &p, (-20.0, -0.05), TOL).unwrap();
        let target = -g.nu() * g.nu();
        assert!(scan.eigenvalues.iter().any(|mu| (mu - target).abs() < 1e-6));
        for &mu in &scan.eigenvalues {
            let d = dispersion_value(mu, lm, &vort, g, &p, TOL).unwrap().unwrap();
            assert!(d.abs() < 1e-6);
        }
        assert!(scan.eigenvalues.len() <= 2);
    }
}
