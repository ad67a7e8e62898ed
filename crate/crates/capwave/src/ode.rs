//! Small numerics kit: an adaptive Dormand-Prince 5(4) integrator for the
//! shooting problems, adaptive Simpson quadrature, and bracketed root
//! refinement (bisection stabilised by secant steps).

use crate::error::{Error, Result};

const MAX_STEPS: usize = 1_000_000;

/// Dormand-Prince coefficients (the classical 7-stage FSAL pair).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the 5th- and 4th-order weights, used for the error
/// estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate y' = f(t, y) from t0 to t1 (either direction) with absolute and
/// relative tolerance `tol`, returning the final state.
pub fn integrate<const D: usize>(
    f: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    t1: f64,
    y0: [f64; D],
    tol: f64,
) -> Result<[f64; D]> {
    let mut y = y0;
    let mut t = t0;
    advance(f, &mut t, t1, &mut y, tol)?;
    Ok(y)
}

/// Integrate while recording the state at each of the (monotone) sample
/// points `ts`; `ts[0]` must equal `t0`.
pub fn integrate_sampled<const D: usize>(
    f: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    ts: &[f64],
    y0: [f64; D],
    tol: f64,
) -> Result<Vec<[f64; D]>> {
    let mut out = Vec::with_capacity(ts.len());
    let mut y = y0;
    out.push(y);
    let mut t = ts[0];
    for &target in &ts[1..] {
        advance(f, &mut t, target, &mut y, tol)?;
        out.push(y);
    }
    Ok(out)
}

/// Advance the state from `*t` to `t_end`, clipping steps to land exactly.
fn advance<const D: usize>(
    f: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    t: &mut f64,
    t_end: f64,
    y: &mut [f64; D],
    tol: f64,
) -> Result<()> {
    let span = t_end - *t;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut h = (0.1 * span.abs()).min(span.abs()) * dir;
    let mut k0 = f(*t, y);
    for _ in 0..MAX_STEPS {
        if (t_end - *t) * dir <= 0.0 {
            return Ok(());
        }
        if (*t + h - t_end) * dir > 0.0 {
            h = t_end - *t;
        }
        let mut k = [[0.0; D]; 7];
        k[0] = k0;
        for s in 0..6 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for d in 0..D {
                        ys[d] += h * a * kj[d];
                    }
                }
            }
            k[s + 1] = f(*t + C[s] * h, &ys);
        }
        // 5th-order solution is the last stage's argument (FSAL)
        let mut y5 = *y;
        for d in 0..D {
            for (j, kj) in k.iter().enumerate().take(6) {
                y5[d] += h * A[5][j] * kj[d];
            }
        }
        let mut err = 0.0_f64;
        for d in 0..D {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[d];
            }
            let scale = tol + tol * y[d].abs().max(y5[d].abs());
            err = err.max((h * e / scale).abs());
        }
        if err <= 1.0 {
            *t += h;
            *y = y5;
            k0 = k[6];
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration(format!("state blew up at t = {t}")));
            }
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Integration("step budget exhausted".into()))
}

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Refine a bracketed root of f to |f| < f_tol or interval width < x_tol.
/// Secant steps accelerate plain bisection but are rejected when they leave
/// the bracket.
pub fn refine_root(
    f: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    x_tol: f64,
    f_tol: f64,
) -> (f64, f64) {
    if fa == 0.0 {
        return (a, fa);
    }
    if fb == 0.0 {
        return (b, fb);
    }
    assert!(fa * fb < 0.0, "root not bracketed: f({a}) = {fa}, f({b}) = {fb}");
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if secant.is_finite() && (secant - a) * (secant - b) < 0.0 { secant } else { mid };
        let fx = f(x);
        if fx.abs() < f_tol || (b - a).abs() < x_tol {
            return (x, fx);
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
