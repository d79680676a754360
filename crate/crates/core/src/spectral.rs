//! Fourier-side checks: Riesz-weighted integrals `int |f^(xi)|^2 / |xi|^{2 theta}`
//! and the antiderivative energy identity behind the uniform L2 bounds.
//!
//! The continuum transform `(2 pi)^{-n/2} int e^{-i x.xi} f(x) dx` is
//! approximated by the DFT of samples on a centered periodic box
//! `x_j = (j - N/2) h`, `xi_k = 2 pi k / (N h)`. With that scaling the
//! dual-grid quadrature of `|f^|^2` equals the primal quadrature of `|f|^2`
//! exactly.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{norm, Field, InitialData, Point};
use crate::grid::Grid;
use crate::solver::{Observer, Snapshot};

/// Periodic sampling box with `n` nodes per axis in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralGrid {
    pub dim: usize,
    pub n: usize,
    pub h: f64,
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize, h: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param(
                "dim",
                "spectral grids are 1-, 2- or 3-dimensional",
            ));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::param("n", "need an even node count >= 4"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", "spacing must be positive"));
        }
        Ok(Self { dim, n, h })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half-width of the box.
    pub fn extent(&self) -> f64 {
        0.5 * self.n as f64 * self.h
    }

    fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = (m[a] as f64 - 0.5 * self.n as f64) * self.h;
        }
        p
    }

    fn signed(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    fn frequency(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        let step = 2.0 * std::f64::consts::PI / (self.n as f64 * self.h);
        let mut xi = [0.0; 3];
        for a in 0..self.dim {
            xi[a] = self.signed(m[a]) as f64 * step;
        }
        xi
    }

    /// Dual-grid cell volume `(2 pi / (N h))^n`.
    pub fn dual_cell(&self) -> f64 {
        (2.0 * std::f64::consts::PI / (self.n as f64 * self.h)).powi(self.dim as i32)
    }

    pub fn cell(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn sample(&self, field: &Field) -> Vec<f64> {
        (0..self.len())
            .map(|i| field.value(&self.point(i)))
            .collect()
    }

    fn on_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        m[..self.dim].iter().any(|&k| k == 0 || k == self.n - 1)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralSample {
    pub grid: SpectralGrid,
    pub values: Vec<f64>,
    pub coeffs: Vec<Complex64>,
    /// `f^(0) = (2 pi)^{-n/2} int f`.
    pub zero_mode: Complex64,
    /// Set when the samples do not vanish on the box boundary.
    pub aliasing_warning: bool,
}

impl SpectralSample {
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell()
    }

    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell()
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell()
    }

    /// `int (1 + |x|^gamma) |f|`.
    pub fn weighted_l1(&self, gamma: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 + norm(&self.grid.point(i)).powf(gamma)) * v.abs())
            .sum::<f64>()
            * self.grid.cell()
    }

    /// Dual-grid quadrature of `|f^|^2`.
    pub fn spectral_l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dual_cell()
    }
}

fn fft_axis(
    data: &mut [Complex64],
    grid: &SpectralGrid,
    axis: usize,
    planner: &mut FftPlanner<f64>,
) {
    let n = grid.n;
    let fft = planner.plan_fft_forward(n);
    let stride = n.pow((grid.dim - 1 - axis) as u32);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let total = grid.len();
    for base in 0..total {
        // visit each line once, from its first element
        if (base / stride) % n != 0 {
            continue;
        }
        for (k, slot) in line.iter_mut().enumerate() {
            *slot = data[base + k * stride];
        }
        fft.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            data[base + k * stride] = *v;
        }
    }
}

pub fn transform(grid: &SpectralGrid, values: &[f64]) -> Result<SpectralSample> {
    if values.len() != grid.len() {
        return Err(Error::param("values", "length does not match the grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "spectral samples",
        });
    }
    let aliasing_warning = values
        .iter()
        .enumerate()
        .any(|(i, &v)| v != 0.0 && grid.on_boundary(i));
    if aliasing_warning {
        log::warn!("samples touch the periodic box boundary; expect aliasing");
    }
    let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    for axis in 0..grid.dim {
        fft_axis(&mut coeffs, grid, axis, &mut planner);
    }
    let scale = grid.cell() / (2.0 * std::f64::consts::PI).powf(grid.dim as f64 / 2.0);
    for (idx, c) in coeffs.iter_mut().enumerate() {
        // (-1)^{k} per axis moves the origin to the box center
        let m = grid.multi_index(idx);
        let parity: i64 = m[..grid.dim].iter().map(|&k| grid.signed(k)).sum();
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *c *= scale * sign;
    }
    Ok(SpectralSample {
        grid: *grid,
        values: values.to_vec(),
        zero_mode: coeffs[0],
        coeffs,
        aliasing_warning,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroModePolicy {
    /// Drop the `xi = 0` cell.
    ExcludeZeroMode,
    /// Demand `int f = 0` and fill the `xi = 0` cell from its neighbors.
    RequireZeroMean,
}

/// Relative tolerance on `|int f| / ||f||_1` for the zero-mean policy.
pub const ZERO_MEAN_TOL: f64 = 1e-8;

pub fn riesz_weighted_integral(
    sample: &SpectralSample,
    theta: f64,
    policy: ZeroModePolicy,
) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::param("theta", "must be finite and >= 0"));
    }
    let g = &sample.grid;
    let integrand = |idx: usize| {
        let xi = g.frequency(idx);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        sample.coeffs[idx].norm_sqr() / r2.powf(theta)
    };
    let mut total: f64 = (1..g.len()).map(integrand).sum();
    if theta == 0.0 {
        total += sample.coeffs[0].norm_sqr();
    } else if policy == ZeroModePolicy::RequireZeroMean {
        let mass = sample.mass();
        if mass.abs() > ZERO_MEAN_TOL * sample.l1() {
            return Err(Error::Hypothesis(format!(
                "zero-mean hypothesis int f = 0 fails (int f = {mass:e})"
            )));
        }
        // neighbours of the origin: index 1 and N-1 along each axis
        let mut acc = 0.0;
        for a in 0..g.dim {
            let stride = g.n.pow((g.dim - 1 - a) as u32);
            acc += integrand(stride) + integrand((g.n - 1) * stride);
        }
        total += acc / (2 * g.dim) as f64;
    }
    Ok(total * g.dual_cell())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
    pub theta: f64,
    pub gamma: f64,
    pub with_moment: bool,
    pub policy: ZeroModePolicy,
}

/// Ratio of the Riesz-weighted integral to the data side of the weighted
/// Fourier inequality. `with_moment = false` is the zero-mean variant
/// (`theta < gamma + n/2`); `with_moment = true` adds `|int f|^2` to the
/// right side and needs `theta < n/2`.
pub fn weighted_inequality_ratio(
    sample: &SpectralSample,
    gamma: f64,
    theta: f64,
    with_moment: bool,
) -> Result<InequalityReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("{gamma} not in [0, 1]")));
    }
    let n = sample.grid.dim as f64;
    let (limit, policy) = if with_moment {
        (n / 2.0, ZeroModePolicy::ExcludeZeroMode)
    } else {
        (gamma + n / 2.0, ZeroModePolicy::RequireZeroMean)
    };
    if !(theta >= 0.0 && theta < limit) {
        return Err(Error::param(
            "theta",
            format!("{theta} outside the admissible range [0, {limit})"),
        ));
    }
    let lhs = riesz_weighted_integral(sample, theta, policy)?;
    let l1g = sample.weighted_l1(gamma);
    let mut rhs_core = l1g * l1g + sample.l2_sq();
    if with_moment {
        rhs_core += sample.mass().powi(2);
    }
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_core };
    Ok(InequalityReport {
        lhs,
        rhs_core,
        ratio,
        theta,
        gamma,
        with_moment,
        policy,
    })
}

/// Largest ratio over a family of samples.
pub fn empirical_constant(reports: &[InequalityReport]) -> f64 {
    reports.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

/// One sample of the antiderivative identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AntiderivativeSample {
    pub t: f64,
    /// `E_v = (||c^-1 v_t||^2 + ||grad v||^2) / 2` with `v_t = u`.
    pub energy_v: f64,
    /// `int w v` with `w = u1 / c^2`.
    pub source_pairing: f64,
    pub residual: f64,
    pub l2_u: f64,
}

/// Builds `v = int_0^t u ds` by the trapezoidal rule at every step and
/// evaluates `E_v(t) - ||c^-1 u0||^2 / 2 - int w v` at sample times.
pub struct AntiderivativeTracker {
    weight_field: Vec<f64>,
    initial_half: Option<f64>,
    u1: Field,
    v: Vec<f64>,
    pub samples: Vec<AntiderivativeSample>,
}

impl AntiderivativeTracker {
    pub fn new(data: &InitialData) -> Self {
        Self {
            weight_field: Vec::new(),
            initial_half: None,
            u1: data.u1.clone(),
            v: Vec::new(),
            samples: Vec::new(),
        }
    }

    fn prepare(&mut self, snap: &Snapshot<'_>) {
        if self.initial_half.is_some() {
            return;
        }
        let grid: &Grid = snap.grid;
        self.weight_field = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                self.u1.value(&x) / snap.speed_sq[i]
            })
            .collect();
        // ||c^-1 u0||^2 / 2 from the stored initial level
        let half = 0.5
            * (0..grid.len())
                .map(|i| {
                    let u = grid.physical(snap.curr, i);
                    grid.weight(i) * u * u / snap.speed_sq[i]
                })
                .sum::<f64>();
        self.initial_half = Some(half);
        self.v = vec![0.0; grid.len()];
    }
}

impl Observer for AntiderivativeTracker {
    fn on_step(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self.prepare(snap);
        if snap.step > 0 {
            let k = 0.5 * snap.dt;
            for ((v, a), b) in self.v.iter_mut().zip(snap.prev).zip(snap.curr) {
                *v += k * (a + b);
            }
        }
        Ok(())
    }

    fn on_sample(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let grid = snap.grid;
        let mut energy = 0.0;
        let mut pairing = 0.0;
        let mut l2 = 0.0;
        for i in 0..grid.len() {
            let wgt = grid.weight(i);
            if wgt == 0.0 {
                continue;
            }
            let u = grid.physical(snap.curr, i);
            let (v, gv) = grid.value_and_gradient(&self.v, i);
            energy += wgt * 0.5 * (u * u / snap.speed_sq[i] + gv[0] * gv[0] + gv[1] * gv[1]);
            pairing += wgt * self.weight_field[i] * v;
            l2 += wgt * u * u;
        }
        let initial = self.initial_half.unwrap_or(0.0);
        self.samples.push(AntiderivativeSample {
            t: snap.t,
            energy_v: energy,
            source_pairing: pairing,
            residual: energy - initial - pairing,
            l2_u: l2.sqrt(),
        });
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AntiderivativeReport {
    /// `max |residual| / max(E_v)`.
    pub max_relative_residual: f64,
    pub sup_l2_first_half: f64,
    pub sup_l2_second_half: f64,
    /// `sup ||u||` over the second half within `1 + tol` of the first half.
    pub plateau: bool,
}

pub fn antiderivative_identity_check(
    samples: &[AntiderivativeSample],
    plateau_tol: f64,
) -> AntiderivativeReport {
    let scale = samples.iter().map(|s| s.energy_v).fold(0.0, f64::max);
    let worst = samples.iter().map(|s| s.residual.abs()).fold(0.0, f64::max);
    let t_end = samples.last().map_or(0.0, |s| s.t);
    let (first, second): (Vec<_>, Vec<_>) = samples.iter().partition(|s| s.t <= 0.5 * t_end);
    let sup = |v: &[&AntiderivativeSample]| v.iter().map(|s| s.l2_u).fold(0.0, f64::max);
    let (a, b) = (sup(&first), sup(&second));
    AntiderivativeReport {
        max_relative_residual: if worst == 0.0 { 0.0 } else { worst / scale },
        sup_l2_first_half: a,
        sup_l2_second_half: b,
        plateau: b <= (1.0 + plateau_tol) * a,
    }
}
