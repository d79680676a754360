//! Explicit leapfrog for `u_tt = c(x)^2 Lap u`.
//!
//! The update is `u^{k+1} = 2 u^k - u^{k-1} + dt^2 c^2 Lap_h u^k` with the
//! 3-point Laplacian on the line (and on the radial line, where the stored
//! field is `w = r u` and `w_tt = c(r)^2 w_rr`) and the 5-point Laplacian in
//! the plane. Outer nodes are held at zero; the grid is sized so that no
//! signal reaches them before `t_final`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{InitialData, Point};
use crate::grid::Grid;
use crate::medium::{DimMode, WavespeedProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Courant safety factor, `0 < cfl <= 0.9`.
    pub cfl: f64,
    pub h: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    /// Multiplier on the causal margin `max(c_sup, 1) t_final`.
    pub extent_rule: f64,
    /// Largest admissible node count.
    pub max_cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            h: 0.01,
            t_final: 10.0,
            sample_stride: 10,
            extent_rule: 1.05,
            max_cells: 50_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::param("cfl", format!("{} not in (0, 0.9]", self.cfl)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::param("h", "spacing must be positive"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("t_final", "must be finite and >= 0"));
        }
        if self.sample_stride == 0 {
            return Err(Error::param("sample_stride", "must be >= 1"));
        }
        if !(self.extent_rule >= 1.0 && self.extent_rule.is_finite()) {
            return Err(Error::param("extent_rule", "must be >= 1"));
        }
        Ok(())
    }
}

/// `cfl h / (c_sup sqrt(d))` with `d` the lattice dimension.
pub fn time_step(profile: &WavespeedProfile, cfl: f64, h: f64) -> f64 {
    cfl * h / (profile.c_sup * (profile.dim.grid_dim() as f64).sqrt())
}

/// Half-width needed to keep the outer boundary causally invisible.
pub fn causal_extent(profile: &WavespeedProfile, data: &InitialData, config: &SolverConfig) -> f64 {
    data.support_radius()
        + profile.c_sup.max(1.0) * config.t_final * config.extent_rule
        + 2.0 * config.h
}

pub fn build_grid(
    profile: &WavespeedProfile,
    data: &InitialData,
    config: &SolverConfig,
) -> Result<Grid> {
    config.validate()?;
    data.check_dim(profile.dim)?;
    let extent = causal_extent(profile, data, config);
    let per_axis = (extent / config.h).ceil() * 2.0 + 1.0;
    let required = per_axis.powi(profile.dim.grid_dim() as i32);
    if required > config.max_cells as f64 {
        return Err(Error::ResourceCap {
            required: required.min(usize::MAX as f64) as usize,
            cap: config.max_cells,
            h: config.h,
            extent,
        });
    }
    Ok(Grid::covering(profile.dim, config.h, extent))
}

/// Two consecutive time levels `u^{k-1}, u^k` (stored form) with `t = t_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub step: usize,
}

/// Precomputed stencil coefficients for one grid and profile.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: Grid,
    speed_sq: Vec<f64>,
    courant_sq: Vec<f64>,
    dt: f64,
}

impl Stepper {
    pub fn new(grid: &Grid, profile: &WavespeedProfile, dt: f64) -> Self {
        let speed_sq: Vec<f64> = (0..grid.len())
            .map(|i| {
                let c = profile.speed(&grid.point(i));
                c * c
            })
            .collect();
        let k = dt * dt / (grid.h * grid.h);
        let courant_sq = speed_sq.iter().map(|c2| c2 * k).collect();
        Self {
            grid: grid.clone(),
            speed_sq,
            courant_sq,
            dt,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn speed_sq(&self) -> &[f64] {
        &self.speed_sq
    }

    /// `h^2 Lap_h u` with zero Dirichlet data on the outer nodes.
    fn scaled_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n;
        match self.grid.dim {
            DimMode::Line1D | DimMode::Radial3D => {
                out[0] = 0.0;
                out[n - 1] = 0.0;
                for i in 1..n - 1 {
                    out[i] = u[i - 1] - 2.0 * u[i] + u[i + 1];
                }
            }
            DimMode::Plane2D => {
                for i in 0..n {
                    for j in 0..n {
                        let idx = i * n + j;
                        out[idx] = if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                            0.0
                        } else {
                            u[idx - n] + u[idx + n] + u[idx - 1] + u[idx + 1] - 4.0 * u[idx]
                        };
                    }
                }
            }
        }
    }

    /// `u0 + sign dt u1 + dt^2/2 c^2 Lap_h u0`, the second-order Taylor level.
    fn taylor_level(&self, u0: &[f64], u1: &[f64], sign: f64) -> Vec<f64> {
        let mut lap = vec![0.0; u0.len()];
        self.scaled_laplacian(u0, &mut lap);
        let mut out: Vec<f64> = (0..u0.len())
            .map(|i| u0[i] + sign * self.dt * u1[i] + 0.5 * self.courant_sq[i] * lap[i])
            .collect();
        self.clear_boundary(&mut out);
        out
    }

    fn clear_boundary(&self, v: &mut [f64]) {
        let n = self.grid.n;
        match self.grid.dim {
            DimMode::Plane2D => {
                for k in 0..n {
                    v[k] = 0.0;
                    v[(n - 1) * n + k] = 0.0;
                    v[k * n] = 0.0;
                    v[k * n + n - 1] = 0.0;
                }
            }
            _ => {
                v[0] = 0.0;
                v[n - 1] = 0.0;
            }
        }
    }

    /// Advances `state` by one step. On return `spare` holds the level that
    /// dropped out of the state (the old `u_prev`).
    pub fn step(&self, state: &mut FieldState, spare: &mut Vec<f64>) -> Result<()> {
        let n = self.grid.n;
        spare.resize(self.grid.len(), 0.0);
        let u = &state.u_curr;
        let prev = &state.u_prev;
        let cs = &self.courant_sq;
        let finite = match self.grid.dim {
            DimMode::Line1D | DimMode::Radial3D => {
                let next = spare.as_mut_slice();
                next[0] = 0.0;
                next[n - 1] = 0.0;
                let mut ok = true;
                for i in 1..n - 1 {
                    let v = 2.0 * u[i] - prev[i] + cs[i] * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
                    ok &= v.is_finite();
                    next[i] = v;
                }
                ok
            }
            DimMode::Plane2D => spare
                .par_chunks_mut(n)
                .enumerate()
                .map(|(i, row)| {
                    if i == 0 || i == n - 1 {
                        row.fill(0.0);
                        return true;
                    }
                    row[0] = 0.0;
                    row[n - 1] = 0.0;
                    let base = i * n;
                    let mut ok = true;
                    for j in 1..n - 1 {
                        let idx = base + j;
                        let lap = u[idx - n] + u[idx + n] + u[idx - 1] + u[idx + 1] - 4.0 * u[idx];
                        let v = 2.0 * u[idx] - prev[idx] + cs[idx] * lap;
                        ok &= v.is_finite();
                        row[j] = v;
                    }
                    ok
                })
                .reduce(|| true, |a, b| a && b),
        };
        if !finite {
            return Err(Error::Unstable {
                step: state.step + 1,
            });
        }
        // rotate: (prev, curr, spare=next) -> (curr, next, prev)
        std::mem::swap(&mut state.u_prev, &mut state.u_curr);
        std::mem::swap(&mut state.u_curr, spare);
        state.step += 1;
        state.t = state.step as f64 * self.dt;
        Ok(())
    }
}

/// Levels `u^0` (prev) and `u^1` (curr) with `t = dt`.
pub fn init_state(
    data: &InitialData,
    profile: &WavespeedProfile,
    grid: &Grid,
    dt: f64,
) -> FieldState {
    let stepper = Stepper::new(grid, profile, dt);
    init_with(&stepper, data).0
}

/// Initial state plus the backward Taylor level `u^{-1}`.
fn init_with(stepper: &Stepper, data: &InitialData) -> (FieldState, Vec<f64>) {
    let grid = stepper.grid();
    let mut u0 = grid.sample(&data.u0);
    stepper.clear_boundary(&mut u0);
    let u1 = grid.sample(&data.u1);
    let forward = stepper.taylor_level(&u0, &u1, 1.0);
    let backward = stepper.taylor_level(&u0, &u1, -1.0);
    (
        FieldState {
            u_prev: u0,
            u_curr: forward,
            t: stepper.dt(),
            dt: stepper.dt(),
            step: 1,
        },
        backward,
    )
}

/// Read-only view of three consecutive levels centered at `t = step dt`.
pub struct Snapshot<'a> {
    pub grid: &'a Grid,
    pub speed_sq: &'a [f64],
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub prev: &'a [f64],
    pub curr: &'a [f64],
    pub next: &'a [f64],
}

/// Physical quantities at one node.
#[derive(Clone, Copy, Debug)]
pub struct NodeSample {
    pub x: Point,
    pub weight: f64,
    pub u: f64,
    pub u_t: f64,
    pub grad: Point,
    pub speed_sq: f64,
}

impl Snapshot<'_> {
    /// Stored-form centered time derivative.
    pub fn stored_velocity(&self, idx: usize) -> f64 {
        (self.next[idx] - self.prev[idx]) / (2.0 * self.dt)
    }

    fn physical_velocity(&self, idx: usize) -> f64 {
        match self.grid.dim {
            DimMode::Radial3D if idx == 0 => {
                if self.grid.n > 1 {
                    self.stored_velocity(1) / self.grid.h
                } else {
                    0.0
                }
            }
            DimMode::Radial3D => self.stored_velocity(idx) / self.grid.axis_coord(idx),
            _ => self.stored_velocity(idx),
        }
    }

    pub fn node(&self, idx: usize) -> NodeSample {
        let (u, grad) = self.grid.value_and_gradient(self.curr, idx);
        NodeSample {
            x: self.grid.point(idx),
            weight: self.grid.weight(idx),
            u,
            u_t: self.physical_velocity(idx),
            grad,
            speed_sq: self.speed_sq[idx],
        }
    }

    /// Nodes with nonzero quadrature weight.
    pub fn nodes(&self) -> impl Iterator<Item = NodeSample> + '_ {
        (0..self.grid.len())
            .filter(|&i| self.grid.weight(i) != 0.0)
            .map(|i| self.node(i))
    }
}

pub trait Observer {
    /// Called at every time level, before `on_sample` when both apply.
    fn on_step(&mut self, _snap: &Snapshot<'_>) -> Result<()> {
        Ok(())
    }

    /// Called every `sample_stride` levels, starting at `t = 0`.
    fn on_sample(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub steps: usize,
    pub samples: usize,
    pub dt: f64,
    pub final_t: f64,
}

/// A configured discretization ready to run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub stepper: Stepper,
    pub n_steps: usize,
    pub sample_stride: usize,
}

impl Simulation {
    pub fn new(
        data: &InitialData,
        profile: &WavespeedProfile,
        config: &SolverConfig,
    ) -> Result<Self> {
        let grid = build_grid(profile, data, config)?;
        let dt = time_step(profile, config.cfl, config.h);
        Ok(Self::with_grid(
            grid,
            profile,
            dt,
            config.t_final,
            config.sample_stride,
        ))
    }

    /// No stability or sizing checks; used to probe unstable settings.
    pub fn with_grid(
        grid: Grid,
        profile: &WavespeedProfile,
        dt: f64,
        t_final: f64,
        sample_stride: usize,
    ) -> Self {
        let n_steps = (t_final / dt + 1e-9).floor() as usize;
        Self {
            stepper: Stepper::new(&grid, profile, dt),
            n_steps,
            sample_stride: sample_stride.max(1),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.stepper.grid()
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt()
    }

    pub fn run(
        &self,
        data: &InitialData,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunOutcome> {
        let (state, backward) = init_with(&self.stepper, data);
        self.run_from(state, backward, observers)
    }

    /// Runs from explicit levels `(u^{-1}, u^0, u^1)`.
    pub fn run_from(
        &self,
        mut state: FieldState,
        mut older: Vec<f64>,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunOutcome> {
        let grid = self.stepper.grid();
        let dt = self.stepper.dt();
        let mut samples = 0;
        let mut k = state.step - 1;
        loop {
            let snap = Snapshot {
                grid,
                speed_sq: self.stepper.speed_sq(),
                step: k,
                t: k as f64 * dt,
                dt,
                prev: &older,
                curr: &state.u_prev,
                next: &state.u_curr,
            };
            for obs in observers.iter_mut() {
                obs.on_step(&snap)?;
            }
            if k % self.sample_stride == 0 {
                samples += 1;
                for obs in observers.iter_mut() {
                    obs.on_sample(&snap)?;
                }
            }
            if k >= self.n_steps {
                break;
            }
            self.stepper.step(&mut state, &mut older)?;
            k += 1;
        }
        Ok(RunOutcome {
            steps: k,
            samples,
            dt,
            final_t: k as f64 * dt,
        })
    }
}

/// Convenience wrapper: build, run, and report.
pub fn run(
    data: &InitialData,
    profile: &WavespeedProfile,
    config: &SolverConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    Simulation::new(data, profile, config)?.run(data, observers)
}

/// Closed-form constant-speed solutions used as verification oracles.
#[derive(Clone, Debug)]
pub struct Oracle {
    dim: DimMode,
    data: InitialData,
    t: f64,
}

pub fn oracle_solution(profile: &WavespeedProfile, data: &InitialData, t: f64) -> Result<Oracle> {
    if !profile.is_constant() {
        return Err(Error::NoClosedForm(
            "closed forms exist only for constant speed".into(),
        ));
    }
    if profile.dim == DimMode::Plane2D {
        return Err(Error::NoClosedForm(
            "no closed form implemented for plane-2d".into(),
        ));
    }
    data.check_dim(profile.dim)?;
    Ok(Oracle {
        dim: profile.dim,
        data: data.clone(),
        t,
    })
}

impl Oracle {
    fn w0(&self, s: f64) -> f64 {
        s * self.data.u0.value(&[s.abs(), 0.0, 0.0])
    }

    fn g1(&self, s: f64) -> f64 {
        self.data
            .u1
            .radial_first_moment(s.abs())
            .expect("radial data checked at construction")
    }

    /// Stored-form value: `u` on the line, `w = r u` on the radial grid.
    pub fn stored(&self, x: f64) -> f64 {
        let t = self.t;
        match self.dim {
            DimMode::Line1D => {
                let at = |s: f64| self.data.u0.value(&[s, 0.0, 0.0]);
                0.5 * (at(x + t) + at(x - t))
                    + 0.5
                        * (self.data.u1.line_antiderivative(x + t)
                            - self.data.u1.line_antiderivative(x - t))
            }
            _ => 0.5 * (self.w0(x + t) + self.w0(x - t)) + 0.5 * (self.g1(x + t) - self.g1(x - t)),
        }
    }

    /// Physical value `u(t, x)` (`x` is the radius in radial mode).
    pub fn value(&self, x: f64) -> f64 {
        match self.dim {
            DimMode::Radial3D if x == 0.0 => {
                let p = [self.t, 0.0, 0.0];
                self.data.u0.value(&p)
                    + self.t * self.data.u0.gradient(&p)[0]
                    + self.t * self.data.u1.value(&p)
            }
            DimMode::Radial3D => self.stored(x) / x,
            _ => self.stored(x),
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| self.stored(grid.axis_coord(i)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::medium::{make_profile, Family};

    fn constant(dim: DimMode) -> WavespeedProfile {
        make_profile(dim, Family::Constant, 1.0).unwrap()
    }

    #[test]
    fn grid_extent_formula() {
        let p = constant(DimMode::Line1D);
        let data = InitialData::new(Field::centered_bump(1.0, 1.0, 4), Field::Zero);
        let cfg = SolverConfig {
            h: 0.01,
            t_final: 10.0,
            extent_rule: 1.05,
            ..Default::default()
        };
        let g = build_grid(&p, &data, &cfg).unwrap();
        assert!(g.extent() >= 11.52 - 1e-12, "{}", g.extent());
        assert!(g.extent() < 11.52 + 0.011);
    }

    #[test]
    fn time_step_formula() {
        let p = make_profile(DimMode::Plane2D, Family::RadialBump { amplitude: 0.1 }, 1.0).unwrap();
        let dt = time_step(&p, 0.5, 0.02);
        assert!((dt - 0.5 * 0.02 / (1.1 * 2f64.sqrt())).abs() < 1e-15);
        assert!((dt - 0.006428).abs() < 1e-6);
    }

    #[test]
    fn resource_cap() {
        let p = constant(DimMode::Plane2D);
        let data = InitialData::new(Field::centered_bump(1.0, 1.0, 4), Field::Zero);
        let cfg = SolverConfig {
            h: 0.001,
            t_final: 100.0,
            max_cells: 1_000_000,
            ..Default::default()
        };
        assert!(matches!(
            build_grid(&p, &data, &cfg),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn radial_reduction_identity() {
        // Lap u = u_rr + 2 u_r / r and (r u)_rr = r (u_rr + 2 u_r / r), checked
        // by finite differences on a smooth radial profile.
        let u = |r: f64| (1.0 + r * r).recip() + (0.3 * r).cos();
        let h = 1e-4;
        for r in [0.3, 0.9, 2.5] {
            let d1 = (u(r + h) - u(r - h)) / (2.0 * h);
            let d2 = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
            let w = |s: f64| s * u(s);
            let w2 = (w(r + h) - 2.0 * w(r) + w(r - h)) / (h * h);
            assert!((w2 - r * (d2 + 2.0 * d1 / r)).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = constant(DimMode::Plane2D);
        let g = Grid::covering(DimMode::Plane2D, 0.1, 2.0);
        let dt = time_step(&p, 0.5, 0.1);
        let stepper = Stepper::new(&g, &p, dt);
        let mut state = init_state(&InitialData::default(), &p, &g, dt);
        assert!(state.u_prev.iter().all(|&v| v == 0.0));
        assert!(state.u_curr.iter().all(|&v| v == 0.0));
        let mut spare = Vec::new();
        for _ in 0..5 {
            stepper.step(&mut state, &mut spare).unwrap();
        }
        assert!(state.u_curr.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn taylor_start_tracks_translation() {
        let p = constant(DimMode::Line1D);
        let g = Grid::covering(DimMode::Line1D, 0.01, 3.0);
        let data = InitialData::right_moving_pulse(0.0, 1.0, 1.0, 6);
        let mut worst: f64 = 0.0;
        let mut errs = Vec::new();
        for dt in [0.008, 0.004] {
            let s = init_state(&data, &p, &g, dt);
            let e = (0..g.len())
                .map(|i| (s.u_curr[i] - data.u0.value(&[g.axis_coord(i) - dt, 0.0, 0.0])).abs())
                .fold(0.0, f64::max);
            worst = worst.max(e);
            errs.push(e);
        }
        // local error dominated by O(dt^3) (plus the O(h^2 dt^2) Laplacian error)
        assert!(worst < 1e-5, "{errs:?}");
        assert!(errs[1] < errs[0] / 6.0, "{errs:?}");
    }

    #[test]
    fn unstable_courant_number_diverges() {
        use rand::{Rng, SeedableRng};
        let p = constant(DimMode::Line1D);
        let g = Grid::covering(DimMode::Line1D, 0.01, 2.0);
        let dt = 1.2 * g.h;
        let stepper = Stepper::new(&g, &p, dt);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let u0: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut state = FieldState {
            u_prev: u0.clone(),
            u_curr: u0,
            t: dt,
            dt,
            step: 1,
        };
        let mut spare = Vec::new();
        let mut failed_at = None;
        for _ in 0..1000 {
            if let Err(Error::Unstable { step }) = stepper.step(&mut state, &mut spare) {
                failed_at = Some(step);
                break;
            }
        }
        assert!(failed_at.is_some_and(|s| s <= 1000), "{failed_at:?}");
    }

    struct Collect(Vec<(usize, f64, Vec<f64>)>);
    impl Observer for Collect {
        fn on_sample(&mut self, snap: &Snapshot<'_>) -> Result<()> {
            self.0.push((snap.step, snap.t, snap.curr.to_vec()));
            Ok(())
        }
    }

    #[test]
    fn zero_final_time_gives_single_sample() {
        let p = constant(DimMode::Line1D);
        let data = InitialData::new(Field::centered_bump(1.0, 1.0, 4), Field::Zero);
        let cfg = SolverConfig {
            t_final: 0.0,
            h: 0.05,
            ..Default::default()
        };
        let mut c = Collect(Vec::new());
        let out = run(&data, &p, &cfg, &mut [&mut c]).unwrap();
        assert_eq!(out.samples, 1);
        assert_eq!(c.0.len(), 1);
        assert_eq!(c.0[0].1, 0.0);
    }

    #[test]
    fn discrete_support_grows_one_cell_per_step() {
        let p = make_profile(DimMode::Line1D, Family::RadialBump { amplitude: 0.2 }, 1.0).unwrap();
        let data = InitialData::new(
            Field::centered_bump(0.5, 1.0, 4),
            Field::centered_bump(0.5, 0.3, 4),
        );
        let cfg = SolverConfig {
            t_final: 1.0,
            h: 0.02,
            sample_stride: 1,
            ..Default::default()
        };
        let sim = Simulation::new(&data, &p, &cfg).unwrap();
        let mut c = Collect(Vec::new());
        sim.run(&data, &mut [&mut c]).unwrap();
        let g = sim.grid();
        for (k, _, u) in &c.0 {
            let limit = 0.5 + *k as f64 * g.h + 1e-9;
            for (i, v) in u.iter().enumerate() {
                if g.axis_coord(i).abs() > limit {
                    assert_eq!(*v, 0.0, "step {k} node {i}");
                }
            }
        }
    }

    #[test]
    fn deterministic_runs() {
        let p = make_profile(
            DimMode::Plane2D,
            Family::RadialBump { amplitude: -0.2 },
            1.0,
        )
        .unwrap();
        let data = InitialData::new(
            Field::bump([0.2, 0.1, 0.0], 0.6, 1.0, 4),
            Field::bump([-0.1, 0.0, 0.0], 0.5, 0.7, 4),
        );
        let cfg = SolverConfig {
            t_final: 0.5,
            h: 0.05,
            sample_stride: 3,
            ..Default::default()
        };
        let mut a = Collect(Vec::new());
        let mut b = Collect(Vec::new());
        run(&data, &p, &cfg, &mut [&mut a]).unwrap();
        run(&data, &p, &cfg, &mut [&mut b]).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn oracle_basics() {
        let p = constant(DimMode::Line1D);
        let g = Field::centered_bump(1.0, 1.0, 4);
        let data = InitialData::new(g.clone(), Field::Zero);
        let o = oracle_solution(&p, &data, 0.0).unwrap();
        for x in [-0.7, 0.0, 0.4] {
            assert_eq!(o.value(x), g.value(&[x, 0.0, 0.0]));
        }
        let o = oracle_solution(&p, &data, 1.3).unwrap();
        let x = 0.25;
        let expect = 0.5 * (g.value(&[x + 1.3, 0.0, 0.0]) + g.value(&[x - 1.3, 0.0, 0.0]));
        assert!((o.value(x) - expect).abs() < 1e-15);

        let bumpy =
            make_profile(DimMode::Line1D, Family::RadialBump { amplitude: 0.1 }, 1.0).unwrap();
        assert!(matches!(
            oracle_solution(&bumpy, &data, 1.0),
            Err(Error::NoClosedForm(_))
        ));
    }

    #[test]
    fn radial_oracle_strong_huygens() {
        let p = constant(DimMode::Radial3D);
        let data = InitialData::new(
            Field::centered_bump(1.0, 1.0, 4),
            Field::centered_bump(1.0, 0.5, 4),
        );
        let r_obs = 2.0;
        let t = 1.0 + r_obs + 0.01;
        let o = oracle_solution(&p, &data, t).unwrap();
        for k in 0..=200 {
            let r = r_obs * k as f64 / 200.0;
            assert_eq!(o.value(r), 0.0, "r = {r}");
        }
        // and the origin limit matches nearby values before the exit
        let o = oracle_solution(&p, &data, 0.4).unwrap();
        assert!((o.value(0.0) - o.value(1e-5)).abs() < 1e-4);
    }
}
