//! Fourier toolkit on the period-L circle and the strip: the periodic Hilbert
//! transform on a strip, the second antiderivative, harmonic extension with
//! exact modal gradients, and a fast Poisson solver (cosine transform in x,
//! tridiagonal solve in y).

use crate::error::{Error, Result};
use crate::grid::{coth, cosh_ratio, sinh_ratio, Trig};
use crate::grid::{PeriodicEvenFunction, PeriodicOddFunction, StripField, ZERO_MEAN_TOL};

fn require_zero_mean(f: &PeriodicEvenFunction, op: &'static str) -> Result<()> {
    if f.mean().abs() > ZERO_MEAN_TOL * f.scale() {
        return Err(Error::NonzeroMean { op, mean: f.mean() });
    }
    Ok(())
}

/// Periodic Hilbert transform on the strip applied to an even zero-mean
/// function: cos(k nu x) maps to coth(k nu h) sin(k nu x).
pub fn hilbert_even(f: &PeriodicEvenFunction) -> Result<PeriodicOddFunction> {
    require_zero_mean(f, "hilbert_even")?;
    let grid = *f.grid();
    let mut out = PeriodicOddFunction::zeros(grid);
    for k in 1..=grid.n_modes() {
        out.coeffs_mut()[k] = coth(k as f64 * grid.nu() * grid.depth()) * f.coeff(k);
    }
    Ok(out)
}

/// The same transform on odd functions: sin(k nu x) maps to
/// -coth(k nu h) cos(k nu x). Output has zero mean by construction.
pub fn hilbert_odd(g: &PeriodicOddFunction) -> PeriodicEvenFunction {
    let grid = *g.grid();
    let mut out = PeriodicEvenFunction::zeros(grid);
    for k in 1..=grid.n_modes() {
        out.coeffs_mut()[k] = -coth(k as f64 * grid.nu() * grid.depth()) * g.coeff(k);
    }
    out
}

/// Inverse of twice differentiation on zero-mean functions; the multiplier
/// -1/(k nu)^2.
pub fn second_antiderivative(f: &PeriodicEvenFunction) -> Result<PeriodicEvenFunction> {
    require_zero_mean(f, "second_antiderivative")?;
    let grid = *f.grid();
    let mut out = PeriodicEvenFunction::zeros(grid);
    for k in 1..=grid.n_modes() {
        let knu = k as f64 * grid.nu();
        out.coeffs_mut()[k] = -f.coeff(k) / (knu * knu);
    }
    Ok(out)
}

/// Drop the mean: projection onto zero-average functions.
pub fn project_zero_mean(f: &PeriodicEvenFunction) -> PeriodicEvenFunction {
    let mut out = f.clone();
    out.coeffs_mut()[0] = 0.0;
    out
}

/// Default ceiling for the relative size of the top third of a resolved
/// surface spectrum.
pub const SPECTRUM_DROP_TOL: f64 = 1e-10;

/// Relative magnitude of the top third of the cosine spectrum; the grid
/// resolves f adequately for products when this sits below
/// [`SPECTRUM_DROP_TOL`].
pub fn spectrum_tail(f: &PeriodicEvenFunction) -> f64 {
    let n = f.grid().n_modes();
    let from = n - n / 3;
    let tail = f.coeffs()[from..].iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    tail / f.scale()
}

/// Harmonic extension of boundary data v at y = 0 with zero values at y = -h,
/// evaluated per mode from the explicit sinh formula (no linear solve).
pub fn harmonic_extension(v: &PeriodicEvenFunction) -> StripField {
    let grid = *v.grid();
    let trig = Trig::new(&grid);
    harmonic_extension_with(&trig, v)
}

pub(crate) fn harmonic_extension_with(trig: &Trig, v: &PeriodicEvenFunction) -> StripField {
    let grid = *v.grid();
    let h = grid.depth();
    let mut field = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let y = grid.y(j);
        let linear = v.mean() / h * (y + h);
        let mut ratios = vec![0.0; grid.n_modes() + 1];
        for (k, r) in ratios.iter_mut().enumerate().skip(1) {
            *r = sinh_ratio(&grid, k, y);
        }
        for i in 0..grid.n_colloc() {
            let mut s = linear;
            for k in 1..=grid.n_modes() {
                s += v.coeff(k) * ratios[k] * trig.cos(k, i);
            }
            field.set(i, j, s);
        }
    }
    field
}

/// Gradient (V_x, V_y) of the harmonic extension of v, from exact modal
/// derivatives of the sinh formula.
pub fn harmonic_gradient(v: &PeriodicEvenFunction) -> (StripField, StripField) {
    let grid = *v.grid();
    let trig = Trig::new(&grid);
    harmonic_gradient_with(&trig, v)
}

pub(crate) fn harmonic_gradient_with(
    trig: &Trig,
    v: &PeriodicEvenFunction,
) -> (StripField, StripField) {
    let grid = *v.grid();
    let h = grid.depth();
    let nu = grid.nu();
    let mut vx = StripField::zeros(grid);
    let mut vy = StripField::zeros(grid);
    for j in 0..=grid.m_levels() {
        let y = grid.y(j);
        let mut s_ratio = vec![0.0; grid.n_modes() + 1];
        let mut c_ratio = vec![0.0; grid.n_modes() + 1];
        for k in 1..=grid.n_modes() {
            s_ratio[k] = sinh_ratio(&grid, k, y);
            c_ratio[k] = cosh_ratio(&grid, k, y);
        }
        for i in 0..grid.n_colloc() {
            let mut sx = 0.0;
            let mut sy = v.mean() / h;
            for k in 1..=grid.n_modes() {
                let knu = k as f64 * nu;
                sx -= v.coeff(k) * knu * s_ratio[k] * trig.sin(k, i);
                sy += v.coeff(k) * knu * c_ratio[k] * trig.cos(k, i);
            }
            vx.set(i, j, sx);
            vy.set(i, j, sy);
        }
    }
    (vx, vy)
}

/// |grad V|^2 on the grid for the extension of w + h, where w is the
/// zero-mean surface elevation.
pub(crate) fn extension_gradient_sq(trig: &Trig, w: &PeriodicEvenFunction) -> StripField {
    let grid = *w.grid();
    let mut boundary = w.clone();
    boundary.coeffs_mut()[0] += grid.depth();
    let (vx, vy) = harmonic_gradient_with(trig, &boundary);
    let mut out = StripField::zeros(grid);
    for (o, (a, b)) in out
        .values_mut()
        .iter_mut()
        .zip(vx.values().iter().zip(vy.values()))
    {
        *o = a * a + b * b;
    }
    out
}

/// Trace of the gradient of the extension of w + h at the surface:
/// (1 + C w', w') with C the strip Hilbert transform.
pub fn surface_gradient(
    w: &PeriodicEvenFunction,
) -> Result<(PeriodicEvenFunction, PeriodicOddFunction)> {
    require_zero_mean(w, "surface_gradient")?;
    let wp = w.derivative();
    let mut even = hilbert_odd(&wp);
    even.coeffs_mut()[0] += 1.0;
    Ok((even, wp))
}

/// Solve Delta u = rhs on the strip with u = 0 at y = 0 and y = -h:
/// cosine transform in x, then a per-mode tridiagonal solve of
/// u'' - (k nu)^2 u = rhs with second-order central differences.
pub fn poisson_dirichlet(rhs: &StripField) -> StripField {
    let grid = *rhs.grid();
    let trig = Trig::new(&grid);
    poisson_dirichlet_with(&trig, rhs)
}

pub(crate) fn poisson_dirichlet_with(trig: &Trig, rhs: &StripField) -> StripField {
    let grid = *rhs.grid();
    let n = grid.n_modes();
    let m = grid.m_levels();
    let dy = grid.dy();
    let dy2 = dy * dy;

    // forward transform per level
    let mut rhat = vec![0.0; (n + 1) * (m + 1)];
    let mut row = vec![0.0; grid.n_colloc()];
    let mut coeffs = vec![0.0; n + 1];
    for j in 0..=m {
        for (i, r) in row.iter_mut().enumerate() {
            *r = rhs.value(i, j);
        }
        trig.even_from_samples(&row, &mut coeffs);
        for k in 0..=n {
            rhat[k * (m + 1) + j] = coeffs[k];
        }
    }

    // Thomas solve per mode on interior levels; Dirichlet ends are zero.
    // The matrix (1/dy^2) tridiag(1, -2 - (k nu dy)^2, 1) is strictly
    // negative definite, so no pivoting is needed.
    let mut uhat = vec![0.0; (n + 1) * (m + 1)];
    let mut cprime = vec![0.0; m];
    let mut dprime = vec![0.0; m];
    for k in 0..=n {
        let knu = k as f64 * grid.nu();
        let diag = -2.0 / dy2 - knu * knu;
        let off = 1.0 / dy2;
        cprime[1] = off / diag;
        dprime[1] = rhat[k * (m + 1) + 1] / diag;
        for j in 2..m {
            let denom = diag - off * cprime[j - 1];
            cprime[j] = off / denom;
            dprime[j] = (rhat[k * (m + 1) + j] - off * dprime[j - 1]) / denom;
        }
        let mut prev = 0.0;
        for j in (1..m).rev() {
            prev = dprime[j] - cprime[j] * prev;
            uhat[k * (m + 1) + j] = prev;
        }
    }

    // inverse transform per level
    let mut out = StripField::zeros(grid);
    let mut samples = vec![0.0; grid.n_colloc()];
    for j in 1..m {
        for k in 0..=n {
            coeffs[k] = uhat[k * (m + 1) + j];
        }
        trig.even_to_samples(&coeffs, &mut samples);
        for (i, s) in samples.iter().enumerate() {
            out.set(i, j, *s);
        }
    }
    out
}

/// Residual of the discrete Laplacian that the Poisson solver inverts:
/// per cosine mode, the centred second difference in y minus (k nu)^2 times
/// the mode, sup over interior levels. Spectral in x, O(dy^2) in y.
pub fn laplacian_residual(field: &StripField) -> f64 {
    let grid = *field.grid();
    let trig = Trig::new(&grid);
    let n = grid.n_modes();
    let m = grid.m_levels();
    let dy2 = grid.dy() * grid.dy();
    let mut modes = vec![vec![0.0; m + 1]; n + 1];
    let mut coeffs = vec![0.0; n + 1];
    for j in 0..=m {
        let row = field.level_samples(j);
        trig.even_from_samples(&row, &mut coeffs);
        for k in 0..=n {
            modes[k][j] = coeffs[k];
        }
    }
    let mut worst = 0.0_f64;
    for (k, profile) in modes.iter().enumerate() {
        let knu2 = (k as f64 * grid.nu()).powi(2);
        for j in 1..m {
            let second = (profile[j + 1] - 2.0 * profile[j] + profile[j - 1]) / dy2;
            worst = worst.max((second - knu2 * profile[j]).abs());
        }
    }
    worst
}

/// Pointwise product of two even functions, formed at the collocation points
/// and re-truncated to N modes.
pub fn product_even_even(
    a: &PeriodicEvenFunction,
    b: &PeriodicEvenFunction,
) -> PeriodicEvenFunction {
    let grid = *a.grid();
    let trig = Trig::new(&grid);
    let sa = a.samples_with(&trig);
    let sb = b.samples_with(&trig);
    let prod: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
    let mut coeffs = vec![0.0; grid.n_modes() + 1];
    trig.even_from_samples(&prod, &mut coeffs);
    PeriodicEvenFunction::from_coeffs(grid, &coeffs).expect("finite product")
}

/// Pointwise product of two odd functions (an even function).
pub fn product_odd_odd(a: &PeriodicOddFunction, b: &PeriodicOddFunction) -> PeriodicEvenFunction {
    let grid = *a.grid();
    let trig = Trig::new(&grid);
    let sa = a.samples_with(&trig);
    let sb = b.samples_with(&trig);
    let prod: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
    let mut coeffs = vec![0.0; grid.n_modes() + 1];
    trig.even_from_samples(&prod, &mut coeffs);
    PeriodicEvenFunction::from_coeffs(grid, &coeffs).expect("finite product")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn grid_2pi(h: f64) -> GridSpec {
        GridSpec::new(2.0 * std::f64::consts::PI, h, 16, 24).unwrap()
    }

    #[test]
    fn hilbert_zero_is_zero() {
        let g = grid_2pi(1.0);
        let out = hilbert_even(&PeriodicEvenFunction::zeros(g)).unwrap();
        assert!(out.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn hilbert_single_mode() {
        // cos(nu x) with h = 1, L = 2 pi maps to coth(1) sin(x)
        let g = grid_2pi(1.0);
        let f = PeriodicEvenFunction::mode(g, 1, 1.0);
        let out = hilbert_even(&f).unwrap();
        assert_eq!(out.coeff(1), coth(1.0));
        for k in 2..=g.n_modes() {
            assert_eq!(out.coeff(k), 0.0);
        }
    }

    #[test]
    fn hilbert_two_modes_h07() {
        // hand-applied multiplier, mode by mode, h = 0.7
        let g = grid_2pi(0.7);
        let mut f = PeriodicEvenFunction::zeros(g);
        f.coeffs_mut()[2] = 1.0;
        f.coeffs_mut()[5] = 1.0;
        let out = hilbert_even(&f).unwrap();
        assert!(close(out.coeff(2), coth(1.4), 1e-15));
        assert!(close(out.coeff(5), coth(3.5), 1e-15));
    }

    #[test]
    fn hilbert_rejects_nonzero_mean() {
        let g = grid_2pi(1.0);
        let f = PeriodicEvenFunction::mode(g, 0, 1.0);
        assert!(matches!(hilbert_even(&f), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn hilbert_odd_single_mode() {
        let g = grid_2pi(1.0);
        let f = PeriodicOddFunction::mode(g, 1, 1.0);
        let out = hilbert_odd(&f);
        assert_eq!(out.coeff(1), -coth(1.0));
        assert_eq!(out.mean(), 0.0);
    }

    #[test]
    fn hilbert_round_trip_mode_three() {
        // applying both transforms to cos(3 nu x) returns -coth^2(3 nu h) cos
        let g = grid_2pi(0.9);
        let f = PeriodicEvenFunction::mode(g, 3, 1.0);
        let out = hilbert_odd(&hilbert_even(&f).unwrap());
        let expect = -coth(3.0 * g.nu() * 0.9).powi(2);
        assert!(close(out.coeff(3), expect, 1e-15));
    }

    #[test]
    fn antiderivative_single_modes() {
        let g = grid_2pi(1.0);
        let f = PeriodicEvenFunction::mode(g, 1, 1.0);
        let out = second_antiderivative(&f).unwrap();
        assert_eq!(out.coeff(1), -1.0);

        // L = pi so nu = 2; mode 3 carries k nu = 6
        let g2 = GridSpec::new(std::f64::consts::PI, 1.0, 16, 24).unwrap();
        let f2 = PeriodicEvenFunction::mode(g2, 3, 1.0);
        let out2 = second_antiderivative(&f2).unwrap();
        assert!(close(out2.coeff(3), -1.0 / 36.0, 1e-17));

        let zero = second_antiderivative(&PeriodicEvenFunction::zeros(g)).unwrap();
        assert!(zero.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn antiderivative_inverts_second_derivative() {
        // below the Nyquist mode, which the collocation derivative drops
        let g = grid_2pi(1.0);
        let mut f = PeriodicEvenFunction::zeros(g);
        for k in 1..g.n_modes() {
            f.coeffs_mut()[k] = 1.0 / (k * k) as f64;
        }
        let dd = f.derivative().derivative();
        let back = second_antiderivative(&dd).unwrap();
        for k in 1..g.n_modes() {
            assert!(close(back.coeff(k), f.coeff(k), 1e-14), "mode {k}");
        }
    }

    #[test]
    fn extension_of_constant_depth_is_linear() {
        // v = h: V(x, y) = y + h
        let g = grid_2pi(1.0);
        let v = PeriodicEvenFunction::mode(g, 0, g.depth());
        let field = harmonic_extension(&v);
        for j in 0..=g.m_levels() {
            for i in 0..g.n_colloc() {
                assert!(close(field.value(i, j), g.y(j) + g.depth(), 1e-14));
            }
        }
    }

    #[test]
    fn extension_single_mode_profile() {
        // v = h + cos(nu x): V = y + h + cos(nu x) sinh(nu (y+h)) / sinh(nu h)
        let g = grid_2pi(1.0);
        let mut v = PeriodicEvenFunction::mode(g, 0, g.depth());
        v.coeffs_mut()[1] = 1.0;
        let field = harmonic_extension(&v);
        for j in 0..=g.m_levels() {
            let y = g.y(j);
            for i in 0..g.n_colloc() {
                let expect = y + g.depth() + g.x(i).cos() * sinh_ratio(&g, 1, y);
                assert!(close(field.value(i, j), expect, 1e-13));
            }
        }
        // boundary rows are exact by construction
        let top = field.trace_top().sub(&v);
        assert!(top.sup_norm() < 1e-13);
        assert!(field.trace_bottom().sup_norm() < 1e-13);
    }

    #[test]
    fn extension_of_zero_is_zero() {
        let g = grid_2pi(1.0);
        let field = harmonic_extension(&PeriodicEvenFunction::zeros(g));
        assert_eq!(field.sup_norm(), 0.0);
    }

    #[test]
    fn surface_gradient_flat() {
        let g = grid_2pi(1.0);
        let (even, odd) = surface_gradient(&PeriodicEvenFunction::zeros(g)).unwrap();
        assert_eq!(even.coeff(0), 1.0);
        assert!(even.coeffs()[1..].iter().all(|c| *c == 0.0));
        assert!(odd.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn surface_gradient_single_mode() {
        // w = e cos(nu x): w' = -e nu sin(nu x), C w' = e nu coth(nu h) cos
        let g = grid_2pi(1.0);
        let eps = 0.01;
        let w = PeriodicEvenFunction::mode(g, 1, eps);
        let (even, odd) = surface_gradient(&w).unwrap();
        assert!(close(odd.coeff(1), -eps * g.nu(), 1e-16));
        assert!(close(even.coeff(1), eps * g.nu() * coth(g.nu() * g.depth()), 1e-15));
    }

    #[test]
    fn surface_gradient_matches_extension_gradient_trace() {
        // trace identity: the modal gradient of the extension of w + h equals
        // (1 + C w', w') on the surface row
        let g = grid_2pi(0.8);
        let mut w = PeriodicEvenFunction::zeros(g);
        w.coeffs_mut()[1] = 0.05;
        w.coeffs_mut()[3] = -0.02;
        let (even, odd) = surface_gradient(&w).unwrap();
        let mut boundary = w.clone();
        boundary.coeffs_mut()[0] += g.depth();
        let (vx, vy) = harmonic_gradient(&boundary);
        let m = g.m_levels();
        let even_samples = even.samples();
        let odd_samples = odd.samples();
        for i in 0..g.n_colloc() {
            assert!(close(vy.value(i, m), even_samples[i], 1e-12));
            assert!(close(vx.value(i, m), odd_samples[i], 1e-12));
        }
    }

    #[test]
    fn surface_gradient_finite_difference_oracle() {
        // grid-refinement oracle: one-sided FD of the extension's y-derivative
        // converges to 1 + C w' at O(M^-2)
        let nu_h = 0.8;
        let mut defects = Vec::new();
        for m in [40, 80, 160] {
            let g = GridSpec::new(2.0 * std::f64::consts::PI, nu_h, 12, m).unwrap();
            let w = PeriodicEvenFunction::mode(g, 1, 0.05);
            let (even, _) = surface_gradient(&w).unwrap();
            let mut boundary = w.clone();
            boundary.coeffs_mut()[0] += g.depth();
            let field = harmonic_extension(&boundary);
            let fd = field.d_dy_top();
            let exact = even.samples();
            let defect = fd
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            defects.push(defect);
        }
        assert!(defects[0] / defects[1] > 3.5, "{defects:?}");
        assert!(defects[1] / defects[2] > 3.5, "{defects:?}");
    }

    #[test]
    fn poisson_zero_rhs() {
        let g = grid_2pi(1.0);
        let u = poisson_dirichlet(&StripField::zeros(g));
        assert_eq!(u.sup_norm(), 0.0);
    }

    #[test]
    fn poisson_manufactured_solution() {
        // rhs = -(nu^2 + pi^2/h^2) sin(pi (y+h)/h) cos(nu x)
        let h = 1.0;
        let mut errors = Vec::new();
        for m in [32, 64, 128] {
            let g = GridSpec::new(2.0 * std::f64::consts::PI, h, 8, m).unwrap();
            let factor = g.nu().powi(2) + (std::f64::consts::PI / h).powi(2);
            let exact = |x: f64, y: f64| (std::f64::consts::PI * (y + h) / h).sin() * x.cos();
            let rhs = StripField::from_fn(g, |x, y| -factor * exact(x, y));
            let u = poisson_dirichlet(&rhs);
            let mut err = 0.0_f64;
            for i in 0..g.n_colloc() {
                for j in 0..=g.m_levels() {
                    err = err.max((u.value(i, j) - exact(g.x(i), g.y(j))).abs());
                }
            }
            errors.push(err);
        }
        assert!(errors[0] / errors[1] > 3.7, "{errors:?}");
        assert!(errors[1] / errors[2] > 3.7, "{errors:?}");
    }

    #[test]
    fn poisson_constant_rhs_quadratic() {
        // u'' = c with zero ends: u = c y (y + h) / 2, exact for the
        // second-order stencil since u is quadratic
        let g = grid_2pi(1.0);
        let c = 2.5;
        let rhs = StripField::from_fn(g, |_, _| c);
        let u = poisson_dirichlet(&rhs);
        for i in 0..g.n_colloc() {
            for j in 0..=g.m_levels() {
                let y = g.y(j);
                assert!(close(u.value(i, j), c * y * (y + g.depth()) / 2.0, 1e-12));
            }
        }
    }

    #[test]
    fn poisson_is_linear() {
        let g = grid_2pi(0.6);
        let f = StripField::from_fn(g, |x, y| (x.cos() + 0.3) * (y + 0.2 * y * y));
        let gfield = StripField::from_fn(g, |x, y| (2.0 * x).cos() * (y * y * y + 0.1));
        let a = 1.7;
        let b = -0.9;
        let combined = poisson_dirichlet(&f.scaled(a).add(&gfield.scaled(b)));
        let separate = poisson_dirichlet(&f).scaled(a).add(&poisson_dirichlet(&gfield).scaled(b));
        let defect = combined.sub(&separate).sup_norm();
        assert!(defect < 1e-12, "defect {defect}");
    }

    #[test]
    fn harmonicity_residual_decays_second_order() {
        let h = 1.0;
        let mut residuals = Vec::new();
        for m in [25, 50, 100] {
            let g = GridSpec::new(2.0 * std::f64::consts::PI, h, 8, m).unwrap();
            let mut v = PeriodicEvenFunction::mode(g, 0, h);
            v.coeffs_mut()[1] = 0.4;
            v.coeffs_mut()[2] = -0.1;
            let field = harmonic_extension(&v);
            residuals.push(laplacian_residual(&field));
        }
        assert!(residuals[0] / residuals[1] > 3.7, "{residuals:?}");
        assert!(residuals[1] / residuals[2] > 3.7, "{residuals:?}");
    }

    #[test]
    fn skew_identity_discrete() {
        // <(C f1) f2 + f1 (C f2)> = 0; the nontrivial pairing takes f1 odd and
        // f2 even, as in the first component of the wave operator, where the
        // two means cancel instead of vanishing individually
        let g = grid_2pi(1.1);
        let mut f1 = PeriodicOddFunction::zeros(g);
        let mut f2 = PeriodicEvenFunction::zeros(g);
        for k in 1..g.n_modes() {
            f1.coeffs_mut()[k] = ((k * 7 % 5) as f64 - 2.0) / (k as f64);
            f2.coeffs_mut()[k] = ((k * 3 % 7) as f64 - 3.0) / (1.0 + k as f64);
        }
        let cf1 = hilbert_odd(&f1);
        let cf2 = hilbert_even(&f2).unwrap();
        let s1 = cf1.samples();
        let s2 = f2.samples();
        let s3 = f1.samples();
        let s4 = cf2.samples();
        let n = g.n_colloc() as f64;
        let first: f64 = s1.iter().zip(&s2).map(|(a, b)| a * b).sum::<f64>() / n;
        let second: f64 = s3.iter().zip(&s4).map(|(a, b)| a * b).sum::<f64>() / n;
        assert!(first.abs() > 0.1, "pairing should be nontrivial, got {first}");
        assert!((first + second).abs() < 1e-14, "sum {}", first + second);
    }
}
