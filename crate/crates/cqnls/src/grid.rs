//! Uniform radial grid, spectral sine transform, quadrature and derivatives.
//!
//! Radial fields live on interior nodes `r_j = j*dr`, `j = 1..=n`, with
//! `dr = r_max/(n+1)`. Working in the variable `v = r*u` turns the radial
//! Laplacian into a plain second derivative and the free propagator into a
//! diagonal phase in the DST-I basis `sin(k_m r)`, `k_m = m*pi/r_max`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug)]
struct GridInner {
    n: usize,
    r_max: f64,
    dr: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
}

/// Shared-immutable radial grid. Clones are cheap handle copies.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    inner: Arc<GridInner>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.r_max == other.inner.r_max
    }
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn r_max(&self) -> f64 {
        self.inner.r_max
    }

    pub fn dr(&self) -> f64 {
        self.inner.dr
    }

    /// Interior nodes `r_1..r_n`.
    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// Sine-basis wavenumbers `k_1..k_n`, `k_m = m*pi/r_max`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }
}

/// Build a uniform radial grid with `n` interior nodes on `(0, r_max)`.
pub fn make_grid(r_max: f64, n: usize) -> Result<RadialGrid> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidParameter(format!("r_max must be positive, got {r_max}")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter(format!("need n >= 16 interior nodes, got {n}")));
    }
    let dr = r_max / (n + 1) as f64;
    let nodes = (1..=n).map(|j| j as f64 * dr).collect();
    let wavenumbers = (1..=n)
        .map(|m| m as f64 * std::f64::consts::PI / r_max)
        .collect();
    Ok(RadialGrid {
        inner: Arc::new(GridInner { n, r_max, dr, nodes, wavenumbers }),
    })
}

/// Complex radial field sampled on a grid's interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<Complex64>,
}

impl RadialField {
    pub fn new(grid: &RadialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "field has {} values for a grid with {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(RadialField { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        RadialField {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    /// Sample a complex profile `f(r)` on the grid nodes.
    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        RadialField {
            grid: grid.clone(),
            values: grid.nodes().iter().map(|&r| f(r)).collect(),
        }
    }

    /// Sample a real profile on the grid nodes.
    pub fn from_real_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, a: Complex64) {
        for z in &mut self.values {
            *z *= a;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Discrete `int_0^r_max f(r) 4 pi r^2 dr` by the trapezoid rule with the
/// implicit zero samples at `r = 0` and `r = r_max`.
pub fn integrate_radial(grid: &RadialGrid, f: &[f64]) -> f64 {
    assert_eq!(f.len(), grid.n(), "sample count must match the grid");
    let mut acc = 0.0;
    for (fj, &r) in f.iter().zip(grid.nodes()) {
        acc += fj * r * r;
    }
    4.0 * std::f64::consts::PI * grid.dr() * acc
}

// ---------------------------------------------------------------------------
// DST-I through a complex FFT of the odd extension.

fn plan_for(len: usize) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}

/// Unnormalized DST-I of `v`: `S_m = sum_j v_j sin(pi j m/(n+1))`.
///
/// Applying it twice multiplies by `(n+1)/2`, so the inverse is the same
/// transform scaled by `2/(n+1)`.
fn dst_i(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    let len = 2 * (n + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (j, &vj) in v.iter().enumerate() {
        buf[j + 1] = vj;
        buf[len - 1 - j] = -vj;
    }
    plan_for(len).process(&mut buf);
    // The odd extension makes B_m = -2i S_m.
    (1..=n).map(|m| Complex64::new(0.0, 0.5) * buf[m]).collect()
}

/// Apply the exact free propagator of `i v_t + v_rr = 0` (the radial
/// Laplacian in the `v = r*u` variable) over a time `dt`: each sine mode
/// picks up the phase `exp(-i k_m^2 dt)`.
pub fn apply_linear_propagator(u: &RadialField, dt: f64) -> RadialField {
    let grid = u.grid();
    let n = grid.n();
    let v: Vec<Complex64> = u
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&uj, &r)| uj * r)
        .collect();
    let mut modes = dst_i(&v);
    for (m, s) in modes.iter_mut().enumerate() {
        let k = grid.wavenumbers()[m];
        *s *= Complex64::cis(-k * k * dt);
    }
    let back = dst_i(&modes);
    let scale = 2.0 / (n + 1) as f64;
    let values = back
        .iter()
        .zip(grid.nodes())
        .map(|(&vj, &r)| vj * scale / r)
        .collect();
    RadialField { grid: grid.clone(), values }
}

/// Radial Laplacian computed in the sine basis: the exact generator of
/// `apply_linear_propagator`, so `<u, -spectral_laplacian(u)>` is invariant
/// under the free flow to machine precision.
pub fn spectral_laplacian(u: &RadialField) -> RadialField {
    let grid = u.grid();
    let n = grid.n();
    let v: Vec<Complex64> = u
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&uj, &r)| uj * r)
        .collect();
    let mut modes = dst_i(&v);
    for (m, s) in modes.iter_mut().enumerate() {
        let k = grid.wavenumbers()[m];
        *s *= -k * k;
    }
    let back = dst_i(&modes);
    let scale = 2.0 / (n + 1) as f64;
    let values = back
        .iter()
        .zip(grid.nodes())
        .map(|(&vj, &r)| vj * scale / r)
        .collect();
    RadialField { grid: grid.clone(), values }
}

// ---------------------------------------------------------------------------
// Finite differences on v = r*u. The odd extension v(-r) = -v(r) keeps the
// centered stencils valid through r = 0; the right edge uses genuine
// one-sided fourth-order stencils (fields need not vanish at r_max).

// v at a signed index: v_0 = 0 and v_{-j} = -v_j.
fn v_at(v: &[Complex64], i: isize) -> Complex64 {
    if i > 0 {
        v[(i - 1) as usize]
    } else if i == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        -v[(-i - 1) as usize]
    }
}

/// First radial derivative `u'`, fourth order, via `u' = ((r u)' - u)/r`.
pub fn radial_derivative(u: &RadialField) -> RadialField {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.dr();
    let v: Vec<Complex64> = u
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&uj, &r)| uj * r)
        .collect();
    let mut vp = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..=n as isize {
        let d = if (j as usize) + 2 <= n {
            (v_at(&v, j - 2) - v_at(&v, j - 1) * 8.0 + v_at(&v, j + 1) * 8.0 - v_at(&v, j + 2)) / (12.0 * h)
        } else if (j as usize) + 1 == n {
            (-v_at(&v, j - 3) + v_at(&v, j - 2) * 6.0 - v_at(&v, j - 1) * 18.0 + v_at(&v, j) * 10.0
                + v_at(&v, j + 1) * 3.0)
                / (12.0 * h)
        } else {
            (v_at(&v, j - 4) * 3.0 - v_at(&v, j - 3) * 16.0 + v_at(&v, j - 2) * 36.0 - v_at(&v, j - 1) * 48.0
                + v_at(&v, j) * 25.0)
                / (12.0 * h)
        };
        vp[(j - 1) as usize] = d;
    }
    let values = vp
        .iter()
        .zip(u.values())
        .zip(grid.nodes())
        .map(|((&d, &uj), &r)| (d - uj) / r)
        .collect();
    RadialField { grid: grid.clone(), values }
}

/// Radial Laplacian `(1/r)(r u)''`, fourth order.
pub fn radial_laplacian(u: &RadialField) -> RadialField {
    let grid = u.grid();
    let n = grid.n();
    let h2 = grid.dr() * grid.dr();
    let v: Vec<Complex64> = u
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&uj, &r)| uj * r)
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..=n as isize {
        let d2 = if (j as usize) + 2 <= n {
            (-v_at(&v, j - 2) + v_at(&v, j - 1) * 16.0 - v_at(&v, j) * 30.0 + v_at(&v, j + 1) * 16.0
                - v_at(&v, j + 2))
                / (12.0 * h2)
        } else if (j as usize) + 1 == n {
            (v_at(&v, j - 4) - v_at(&v, j - 3) * 6.0 + v_at(&v, j - 2) * 14.0 - v_at(&v, j - 1) * 4.0
                - v_at(&v, j) * 15.0
                + v_at(&v, j + 1) * 10.0)
                / (12.0 * h2)
        } else {
            (-v_at(&v, j - 5) * 10.0 + v_at(&v, j - 4) * 61.0 - v_at(&v, j - 3) * 156.0
                + v_at(&v, j - 2) * 214.0
                - v_at(&v, j - 1) * 154.0
                + v_at(&v, j) * 45.0)
                / (12.0 * h2)
        };
        out[(j - 1) as usize] = d2;
    }
    let values = out
        .iter()
        .zip(grid.nodes())
        .map(|(&d2, &r)| d2 / r)
        .collect();
    RadialField { grid: grid.clone(), values }
}

/// Fraction of the discrete L2 mass carried by the outermost 5% of nodes.
/// Used by the integrator's boundary-contamination monitor.
pub fn boundary_mass_fraction(u: &RadialField) -> f64 {
    let n = u.len();
    let cut = n - n / 20;
    let mut total = 0.0;
    let mut outer = 0.0;
    for (idx, (&z, &r)) in u.values().iter().zip(u.grid().nodes()).enumerate() {
        let w = z.norm_sqr() * r * r;
        total += w;
        if idx >= cut {
            outer += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}
