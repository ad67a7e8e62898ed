//! Discretisation of the periodic strip: grid parameters, cosine/sine series
//! for surface functions, and tensor-grid fields on the strip.
//!
//! Even periodic functions are stored as cosine coefficients `c_0..c_N`,
//! f(x) = sum_k c_k cos(k nu x), collocated on the 2N equispaced points
//! x_i = i L / (2N). Odd functions use the sine basis with modes 1..N.
//! Fields on the strip live on the tensor grid (x_i, y_j) with
//! y_j = -h + j h / M.

use crate::error::{Error, Result};

/// Relative threshold below which a leading coefficient counts as zero mean.
pub const ZERO_MEAN_TOL: f64 = 1e-12;

/// Grid parameters for the period-L circle and the reference strip of depth h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    period: f64,
    depth: f64,
    n_modes: usize,
    m_levels: usize,
}

impl GridSpec {
    /// Build a grid, validating `L > 0`, `h > 0`, `N >= 4`, `M >= 8`.
    pub fn new(period: f64, depth: f64, n_modes: usize, m_levels: usize) -> Result<Self> {
        if period <= 0.0 || !period.is_finite() {
            return Err(Error::InvalidInput(format!("period L must be positive, got {period}")));
        }
        if depth <= 0.0 || !depth.is_finite() {
            return Err(Error::InvalidInput(format!("depth h must be positive, got {depth}")));
        }
        if n_modes < 4 {
            return Err(Error::InvalidInput(format!("need N >= 4 cosine modes, got {n_modes}")));
        }
        if m_levels < 8 {
            return Err(Error::InvalidInput(format!("need M >= 8 vertical intervals, got {m_levels}")));
        }
        Ok(Self { period, depth, n_modes, m_levels })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// Wavenumber unit nu = 2 pi / L.
    pub fn nu(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Number of retained cosine modes N (modes k = 0..=N).
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Number of vertical intervals M (levels j = 0..=M).
    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    /// Number of collocation points in x (2N).
    pub fn n_colloc(&self) -> usize {
        2 * self.n_modes
    }

    /// i-th collocation abscissa, x_i = i L / (2N).
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.period / self.n_colloc() as f64
    }

    /// j-th vertical level, y_j = -h + j h / M (j = 0 bottom, j = M top).
    pub fn y(&self, j: usize) -> f64 {
        -self.depth + j as f64 * self.depth / self.m_levels as f64
    }

    /// Vertical spacing h / M.
    pub fn dy(&self) -> f64 {
        self.depth / self.m_levels as f64
    }

    /// Same horizontal discretisation with a different number of y-levels.
    pub fn with_m_levels(&self, m_levels: usize) -> Result<Self> {
        Self::new(self.period, self.depth, self.n_modes, m_levels)
    }
}

/// coth evaluated through exp to stay finite for large arguments.
pub fn coth(x: f64) -> f64 {
    let e = (-2.0 * x).exp();
    (1.0 + e) / (1.0 - e)
}

/// sinh(k nu (y+h)) / sinh(k nu h), exp-scaled; requires k >= 1, y in [-h, 0].
pub fn sinh_ratio(grid: &GridSpec, k: usize, y: f64) -> f64 {
    let b = k as f64 * grid.nu() * grid.depth();
    let a = k as f64 * grid.nu() * (y + grid.depth());
    ((a - b).exp() - (-a - b).exp()) / (1.0 - (-2.0 * b).exp())
}

/// cosh(k nu (y+h)) / sinh(k nu h), exp-scaled; requires k >= 1, y in [-h, 0].
pub fn cosh_ratio(grid: &GridSpec, k: usize, y: f64) -> f64 {
    let b = k as f64 * grid.nu() * grid.depth();
    let a = k as f64 * grid.nu() * (y + grid.depth());
    ((a - b).exp() + (-a - b).exp()) / (1.0 - (-2.0 * b).exp())
}

/// Precomputed trigonometric tables for the collocation grid.
///
/// Entry (k, i) holds cos/sin(k nu x_i); built once per operation that
/// touches grid values, shared across all y-levels.
pub(crate) struct Trig {
    n_modes: usize,
    n_colloc: usize,
    cos_tab: Vec<f64>,
    sin_tab: Vec<f64>,
}

impl Trig {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        let n = grid.n_modes;
        let nc = grid.n_colloc();
        let mut cos_tab = vec![0.0; (n + 1) * nc];
        let mut sin_tab = vec![0.0; (n + 1) * nc];
        for k in 0..=n {
            for i in 0..nc {
                let arg = k as f64 * grid.nu() * grid.x(i);
                cos_tab[k * nc + i] = arg.cos();
                sin_tab[k * nc + i] = arg.sin();
            }
        }
        Self { n_modes: n, n_colloc: nc, cos_tab, sin_tab }
    }

    #[inline]
    pub(crate) fn cos(&self, k: usize, i: usize) -> f64 {
        self.cos_tab[k * self.n_colloc + i]
    }

    #[inline]
    pub(crate) fn sin(&self, k: usize, i: usize) -> f64 {
        self.sin_tab[k * self.n_colloc + i]
    }

    /// Synthesise samples from cosine coefficients.
    pub(crate) fn even_to_samples(&self, coeffs: &[f64], out: &mut [f64]) {
        for i in 0..self.n_colloc {
            let mut s = 0.0;
            for k in 0..=self.n_modes {
                s += coeffs[k] * self.cos(k, i);
            }
            out[i] = s;
        }
    }

    /// Analyse samples of an even function into cosine coefficients.
    ///
    /// Exact inverse of [`Trig::even_to_samples`] for even data.
    pub(crate) fn even_from_samples(&self, samples: &[f64], out: &mut [f64]) {
        let nc = self.n_colloc as f64;
        for k in 0..=self.n_modes {
            let mut s = 0.0;
            for i in 0..self.n_colloc {
                s += samples[i] * self.cos(k, i);
            }
            let norm = if k == 0 || k == self.n_modes { nc } else { nc / 2.0 };
            out[k] = s / norm;
        }
    }

    /// Synthesise samples from sine coefficients (index 0 unused).
    pub(crate) fn odd_to_samples(&self, coeffs: &[f64], out: &mut [f64]) {
        for i in 0..self.n_colloc {
            let mut s = 0.0;
            for k in 1..=self.n_modes {
                s += coeffs[k] * self.sin(k, i);
            }
            out[i] = s;
        }
    }

    /// Analyse samples of an odd function into sine coefficients.
    ///
    /// Mode N is invisible at the 2N collocation points (sin(N nu x_i) = 0)
    /// and comes back as zero.
    pub(crate) fn odd_from_samples(&self, samples: &[f64], out: &mut [f64]) {
        let nc = self.n_colloc as f64;
        out[0] = 0.0;
        for k in 1..=self.n_modes {
            let mut s = 0.0;
            for i in 0..self.n_colloc {
                s += samples[i] * self.sin(k, i);
            }
            out[k] = if k == self.n_modes { 0.0 } else { s / (nc / 2.0) };
        }
    }
}

/// Real, even, L-periodic function stored as cosine coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicEvenFunction {
    grid: GridSpec,
    coeffs: Vec<f64>,
}

impl PeriodicEvenFunction {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.n_modes();
        Self { grid, coeffs: vec![0.0; n + 1] }
    }

    /// Build from cosine coefficients `c_0..c_N` (padded/truncated to N+1).
    pub fn from_coeffs(grid: GridSpec, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > grid.n_modes() + 1 {
            return Err(Error::InvalidInput(format!(
                "too many cosine coefficients: {} for N = {}",
                coeffs.len(),
                grid.n_modes()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite cosine coefficient".into()));
        }
        let mut c = coeffs.to_vec();
        c.resize(grid.n_modes() + 1, 0.0);
        Ok(Self { grid, coeffs: c })
    }

    /// Single mode a cos(k nu x).
    pub fn mode(grid: GridSpec, k: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[k] = amplitude;
        f
    }

    /// Analyse 2N collocation samples of an even function.
    pub fn from_samples(grid: GridSpec, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n_colloc() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.n_colloc(),
                samples.len()
            )));
        }
        let trig = Trig::new(&grid);
        let mut coeffs = vec![0.0; grid.n_modes() + 1];
        trig.even_from_samples(samples, &mut coeffs);
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Average over one period (the zeroth coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// True when the mean is negligible relative to the coefficient scale.
    pub fn is_zero_mean(&self) -> bool {
        self.coeffs[0].abs() <= ZERO_MEAN_TOL * self.scale()
    }

    /// Max |c_k| clamped away from zero, used for relative thresholds.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(1.0_f64, |a, c| a.max(c.abs()))
    }

    /// Collocation samples at the 2N grid points.
    pub fn samples(&self) -> Vec<f64> {
        let trig = Trig::new(&self.grid);
        let mut out = vec![0.0; self.grid.n_colloc()];
        trig.even_to_samples(&self.coeffs, &mut out);
        out
    }

    pub(crate) fn samples_with(&self, trig: &Trig) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.n_colloc()];
        trig.even_to_samples(&self.coeffs, &mut out);
        out
    }

    /// Evaluate the cosine series at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        let nu = self.grid.nu();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * nu * x).cos())
            .sum()
    }

    /// Collocation derivative; an odd function. The Nyquist mode is dropped:
    /// sin(N nu x) vanishes at every collocation point, so keeping a
    /// coefficient there would break the skew pairing of products on the
    /// grid.
    pub fn derivative(&self) -> PeriodicOddFunction {
        let nu = self.grid.nu();
        let mut out = PeriodicOddFunction::zeros(self.grid);
        for k in 1..self.grid.n_modes() {
            out.coeffs[k] = -self.coeffs[k] * k as f64 * nu;
        }
        out
    }

    /// Max |f| over the collocation points.
    pub fn sup_norm(&self) -> f64 {
        self.samples().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// L2 norm over one period divided by sqrt(L), from coefficients.
    pub fn l2_norm(&self) -> f64 {
        let mut s = self.coeffs[0] * self.coeffs[0];
        for c in &self.coeffs[1..] {
            s += 0.5 * c * c;
        }
        s.sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= a;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c -= o;
        }
        out
    }
}

/// Real, odd, L-periodic function stored as sine coefficients (modes 1..N).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOddFunction {
    grid: GridSpec,
    coeffs: Vec<f64>,
}

impl PeriodicOddFunction {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.n_modes();
        Self { grid, coeffs: vec![0.0; n + 1] }
    }

    /// Single mode a sin(k nu x), k >= 1.
    pub fn mode(grid: GridSpec, k: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[k] = amplitude;
        f
    }

    /// Analyse 2N collocation samples of an odd function. Mode N is not
    /// representable on the grid and comes back as zero.
    pub fn from_samples(grid: GridSpec, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n_colloc() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.n_colloc(),
                samples.len()
            )));
        }
        let trig = Trig::new(&grid);
        let mut coeffs = vec![0.0; grid.n_modes() + 1];
        trig.odd_from_samples(samples, &mut coeffs);
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Sine coefficients, index 0 unused (always zero).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn samples(&self) -> Vec<f64> {
        let trig = Trig::new(&self.grid);
        let mut out = vec![0.0; self.grid.n_colloc()];
        trig.odd_to_samples(&self.coeffs, &mut out);
        out
    }

    pub(crate) fn samples_with(&self, trig: &Trig) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.n_colloc()];
        trig.odd_to_samples(&self.coeffs, &mut out);
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        let nu = self.grid.nu();
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * (k as f64 * nu * x).sin())
            .sum()
    }

    /// Derivative; an even function with zero mean.
    pub fn derivative(&self) -> PeriodicEvenFunction {
        let nu = self.grid.nu();
        let mut out = PeriodicEvenFunction::zeros(self.grid);
        for k in 1..=self.grid.n_modes() {
            out.coeffs[k] = self.coeffs[k] * k as f64 * nu;
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// Real field on the reference strip, even and L-periodic in x, stored on the
/// tensor grid (x_i, y_j), x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl StripField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.n_colloc() * (grid.m_levels() + 1);
        Self { grid, values: vec![0.0; len] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..grid.n_colloc() {
            for j in 0..=grid.m_levels() {
                let v = f(grid.x(i), grid.y(j));
                field.set(i, j, v);
            }
        }
        field
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let len = grid.n_colloc() * (grid.m_levels() + 1);
        if values.len() != len {
            return Err(Error::InvalidInput(format!(
                "expected {len} field values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.grid.m_levels() + 1) + j
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.idx(i, j);
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Boundary row at y = 0, cosine-transformed.
    pub fn trace_top(&self) -> PeriodicEvenFunction {
        self.trace_level(self.grid.m_levels())
    }

    /// Boundary row at y = -h, cosine-transformed.
    pub fn trace_bottom(&self) -> PeriodicEvenFunction {
        self.trace_level(0)
    }

    fn trace_level(&self, j: usize) -> PeriodicEvenFunction {
        let row: Vec<f64> = (0..self.grid.n_colloc()).map(|i| self.value(i, j)).collect();
        PeriodicEvenFunction::from_samples(self.grid, &row).expect("row length matches grid")
    }

    /// Row of samples at level j.
    pub fn level_samples(&self, j: usize) -> Vec<f64> {
        (0..self.grid.n_colloc()).map(|i| self.value(i, j)).collect()
    }

    /// y-derivative at the top boundary by the one-sided second-order stencil.
    pub fn d_dy_top(&self) -> Vec<f64> {
        let m = self.grid.m_levels();
        let dy = self.grid.dy();
        (0..self.grid.n_colloc())
            .map(|i| {
                (3.0 * self.value(i, m) - 4.0 * self.value(i, m - 1) + self.value(i, m - 2))
                    / (2.0 * dy)
            })
            .collect()
    }

    /// Max deviation from evenness in x, |v(i, j) - v(2N - i, j)|.
    pub fn evenness_defect(&self) -> f64 {
        let nc = self.grid.n_colloc();
        let mut worst = 0.0_f64;
        for i in 1..nc {
            for j in 0..=self.grid.m_levels() {
                worst = worst.max((self.value(i, j) - self.value(nc - i, j)).abs());
            }
        }
        worst
    }

    /// Max |value| over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Max |top trace| + |bottom trace| over collocation points.
    pub fn boundary_defect(&self) -> f64 {
        let m = self.grid.m_levels();
        let mut worst = 0.0_f64;
        for i in 0..self.grid.n_colloc() {
            worst = worst.max(self.value(i, 0).abs()).max(self.value(i, m).abs());
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= a;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v += o;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, o) in out.values.iter_mut().zip(&other.values) {
            *v -= o;
        }
        out
    }
}
