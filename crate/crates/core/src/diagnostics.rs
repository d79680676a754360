//! Energy functionals, the Morawetz identity residual and the weighted
//! exterior-energy checks.
//!
//! With `E(t, x) = (c^-2 u_t^2 + |grad u|^2) / 2` the identity tracked here is
//!
//! ```text
//! t E_u(t) = (n-1)/2 (c^-2 u1, u0) + (c^-2 u1, x . grad u0)
//!          - (n-1)/2 (c^-2 u_t, u) - (c^-2 u_t, x . grad u)
//!          + int_0^t int c^-3 (x . grad c) u_s^2 dx ds
//! ```
//!
//! All pairings share the trapezoidal quadrature of the energies, so the
//! residual only carries the discretization error of the scheme itself.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{dot, norm, Point};
use crate::medium::{DimMode, WavespeedProfile};
use crate::solver::{Observer, Snapshot};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Total energy `E_u(t)`.
    pub energy: f64,
    /// Observation radii, shared by `local_energy` and `weighted_ext`.
    pub radii: Vec<f64>,
    /// `E_R(t)` for each radius.
    pub local_energy: Vec<f64>,
    pub l2_u: f64,
    /// `(c^-2 u_t, u)`.
    pub pair_ut_u: f64,
    /// `(c^-2 u_t, x . grad u)`.
    pub pair_ut_xgrad: f64,
    /// Running time integral of `int c^-3 (x . grad c) u_t^2 dx`.
    pub source_accum: f64,
    /// `int_{|x| >= R} psi E dx` for each radius.
    pub weighted_ext: Vec<f64>,
    pub morawetz_residual: f64,
}

impl DiagnosticsRecord {
    fn radius_index(&self, radius: f64) -> Result<usize> {
        self.radii
            .iter()
            .position(|&r| r == radius)
            .ok_or_else(|| Error::param("R", format!("radius {radius} was not recorded")))
    }

    pub fn local_energy_at(&self, radius: f64) -> Result<f64> {
        Ok(self.local_energy[self.radius_index(radius)?])
    }

    pub fn weighted_ext_at(&self, radius: f64) -> Result<f64> {
        Ok(self.weighted_ext[self.radius_index(radius)?])
    }
}

fn check_radii(radii: &[f64], support: f64) -> Result<()> {
    match radii.iter().find(|&&r| !(r > support)) {
        Some(&radius) => Err(Error::RadiusInsidePerturbation { radius, support }),
        None => Ok(()),
    }
}

/// Energies and pairings of one snapshot (the source integral is left at 0).
pub fn energy_report(
    snap: &Snapshot<'_>,
    profile: &WavespeedProfile,
    radii: &[f64],
) -> Result<DiagnosticsRecord> {
    check_radii(radii, profile.support)?;
    let mut rec = DiagnosticsRecord {
        t: snap.t,
        radii: radii.to_vec(),
        local_energy: vec![0.0; radii.len()],
        weighted_ext: vec![0.0; radii.len()],
        ..Default::default()
    };
    let mut l2 = 0.0;
    for node in snap.nodes() {
        let ic2 = 1.0 / node.speed_sq;
        let dens = 0.5 * (ic2 * node.u_t * node.u_t + dot(&node.grad, &node.grad));
        let w = node.weight;
        l2 += w * node.u * node.u;
        if dens == 0.0 && node.u_t == 0.0 {
            continue;
        }
        let r = norm(&node.x);
        rec.energy += w * dens;
        rec.pair_ut_u += w * ic2 * node.u_t * node.u;
        rec.pair_ut_xgrad += w * ic2 * node.u_t * dot(&node.x, &node.grad);
        if dens == 0.0 {
            continue;
        }
        let mut psi = None;
        for (j, &big_r) in radii.iter().enumerate() {
            if r <= big_r {
                rec.local_energy[j] += w * dens;
            }
            if r >= big_r {
                let p = *psi.get_or_insert_with(|| psi_value(snap.t, r));
                rec.weighted_ext[j] += w * p * dens;
            }
        }
    }
    rec.l2_u = l2.sqrt();
    Ok(rec)
}

/// Collects one [`DiagnosticsRecord`] per sample and integrates the
/// Morawetz source term at every step.
pub struct Recorder {
    profile: WavespeedProfile,
    radii: Vec<f64>,
    /// `(node, weight * c^-3 (x . grad c))` for nodes inside the perturbation.
    source_nodes: Option<Vec<(usize, f64)>>,
    last_density: Option<f64>,
    source_accum: f64,
    pub records: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn new(profile: &WavespeedProfile, radii: &[f64]) -> Result<Self> {
        check_radii(radii, profile.support)?;
        Ok(Self {
            profile: profile.clone(),
            radii: radii.to_vec(),
            source_nodes: None,
            last_density: None,
            source_accum: 0.0,
            records: Vec::new(),
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn source_density(&mut self, snap: &Snapshot<'_>) -> f64 {
        let profile = &self.profile;
        let nodes = self.source_nodes.get_or_insert_with(|| {
            if profile.is_constant() {
                return Vec::new();
            }
            (0..snap.grid.len())
                .filter_map(|i| {
                    let x = snap.grid.point(i);
                    let wgt = snap.grid.weight(i);
                    let m = profile.radial_derivative_moment(&x);
                    if wgt == 0.0 || m == 0.0 {
                        return None;
                    }
                    let c = profile.speed(&x);
                    Some((i, wgt * m / (c * c * c)))
                })
                .collect()
        });
        nodes
            .iter()
            .map(|&(i, k)| {
                let ut = snap.node(i).u_t;
                k * ut * ut
            })
            .sum()
    }
}

impl Observer for Recorder {
    fn on_step(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let density = self.source_density(snap);
        if let Some(last) = self.last_density {
            self.source_accum += 0.5 * snap.dt * (last + density);
        }
        self.last_density = Some(density);
        Ok(())
    }

    fn on_sample(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let mut rec = energy_report(snap, &self.profile, &self.radii)?;
        rec.source_accum = self.source_accum;
        self.records.push(rec);
        Ok(())
    }
}

/// Morawetz residual per record, given `J0^2` of the data.
pub fn morawetz_residual(records: &[DiagnosticsRecord], j0_sq: f64, dim: DimMode) -> Vec<f64> {
    let k = dim.multiplier_coefficient();
    records
        .iter()
        .map(|r| {
            let rhs = j0_sq - k * r.pair_ut_u - r.pair_ut_xgrad + r.source_accum;
            r.t * r.energy - rhs
        })
        .collect()
}

/// Stores the residuals in the records and returns them.
pub fn fill_morawetz_residual(
    records: &mut [DiagnosticsRecord],
    j0_sq: f64,
    dim: DimMode,
) -> Vec<f64> {
    let res = morawetz_residual(records, j0_sq, dim);
    for (r, v) in records.iter_mut().zip(&res) {
        r.morawetz_residual = *v;
    }
    res
}

/// Values of the weights `psi(t, x)` and `phi(t)` with their derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub psi: f64,
    pub psi_t: f64,
    /// Undefined at `x = 0`.
    pub grad_psi: Option<Point>,
    pub phi: f64,
    pub phi_t: f64,
}

fn psi_value(t: f64, r: f64) -> f64 {
    if r >= t {
        1.0 + r - t
    } else {
        1.0 / (1.0 + t - r)
    }
}

pub fn weights(t: f64, x: &Point, support: f64) -> Weights {
    let r = norm(x);
    let (psi, psi_t, radial) = if r >= t {
        (1.0 + r - t, -1.0, 1.0)
    } else {
        let q = 1.0 + t - r;
        (1.0 / q, -1.0 / (q * q), 1.0 / (q * q))
    };
    let grad_psi = (r > 0.0).then(|| [radial * x[0] / r, radial * x[1] / r, radial * x[2] / r]);
    let (phi, phi_t) = if t < support {
        (1.0 + support - t, -1.0)
    } else {
        let q = 1.0 + t - support;
        (1.0 / q, -1.0 / (q * q))
    };
    Weights {
        psi,
        psi_t,
        grad_psi,
        phi,
        phi_t,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedExteriorReport {
    pub radius: f64,
    /// `(2 + L) I0^2`.
    pub bound: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Weighted exterior energy against `(2 + L) I0^2` at every sample.
pub fn weighted_exterior_check(
    records: &[DiagnosticsRecord],
    i0_sq: f64,
    support: f64,
    radius: f64,
    tol: f64,
) -> Result<WeightedExteriorReport> {
    check_radii(&[radius], support)?;
    let bound = (2.0 + support) * i0_sq;
    let ratios = records
        .iter()
        .map(|r| {
            let v = r.weighted_ext_at(radius)?;
            Ok(if v == 0.0 { 0.0 } else { v / bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(WeightedExteriorReport {
        radius,
        bound,
        passed: max_ratio <= 1.0 + tol,
        max_ratio,
        ratios,
    })
}

/// Smallest constant `C` making the exterior-pairing estimate hold at this
/// sample: `|(c^-2 u_t, x . grad u)| <= (R/c_m) E_R + C I0^2 / 2 + t (E_u - E_R)`.
pub fn exterior_pairing_ratio(
    record: &DiagnosticsRecord,
    i0_sq: f64,
    radius: f64,
    c_min: f64,
) -> Result<f64> {
    if !(record.t > radius) {
        return Err(Error::Hypothesis(format!(
            "needs t > R, got t = {} and R = {radius}",
            record.t
        )));
    }
    let e_r = record.local_energy_at(radius)?;
    let excess =
        record.pair_ut_xgrad.abs() - radius / c_min * e_r - record.t * (record.energy - e_r);
    let excess = excess.max(0.0);
    Ok(if excess == 0.0 {
        0.0
    } else {
        excess / (0.5 * i0_sq)
    })
}

/// Largest ratio `S(t) / (eta int_0^t E_R)` over samples where `S > 0`.
pub fn source_bound_ratio(records: &[DiagnosticsRecord], eta: f64, radius: f64) -> Result<f64> {
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    let mut last: Option<(f64, f64)> = None;
    for r in records {
        let e = r.local_energy_at(radius)?;
        if let Some((t0, e0)) = last {
            integral += 0.5 * (r.t - t0) * (e0 + e);
        }
        last = Some((r.t, e));
        if r.source_accum > 0.0 {
            worst = worst.max(r.source_accum / (eta * integral));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, InitialData};
    use crate::medium::{init_data_norms, make_profile, Family};
    use crate::solver::{Simulation, SolverConfig};
    use rand::{Rng, SeedableRng};

    #[test]
    fn weights_branches_and_continuity() {
        let w = weights(0.0, &[0.7, 0.0, 0.0], 1.5);
        assert_eq!(w.psi, 1.7);
        assert_eq!(w.phi, 2.5);
        let on_cone = weights(2.0, &[1.2, 1.6, 0.0], 1.0);
        assert!((on_cone.psi - 1.0).abs() < 1e-15);
        let inside = weights(2.0, &[1.2, 1.6 - 1e-12, 0.0], 1.0);
        assert!((inside.psi - 1.0).abs() < 1e-11);
        assert!(weights(1.0, &[0.0; 3], 1.0).grad_psi.is_none());
    }

    #[test]
    fn eikonal_and_signs() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let support = 1.3;
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let t = rng.random_range(0.0..20.0);
            let x = [
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
            ];
            let w = weights(t, &x, support);
            let g = w.grad_psi.unwrap();
            worst = worst.max((dot(&g, &g) - w.psi_t * w.psi_t).abs());
            assert!(w.psi > 0.0 && w.psi_t < 0.0 && w.phi_t < 0.0);
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn radii_must_exceed_support() {
        let p = make_profile(DimMode::Line1D, Family::Constant, 1.0).unwrap();
        assert!(matches!(
            Recorder::new(&p, &[2.0, 1.0]),
            Err(Error::RadiusInsidePerturbation { .. })
        ));
    }

    fn run_recorded(
        data: &InitialData,
        profile: &WavespeedProfile,
        cfg: &SolverConfig,
        radii: &[f64],
    ) -> Vec<DiagnosticsRecord> {
        let sim = Simulation::new(data, profile, cfg).unwrap();
        let mut rec = Recorder::new(profile, radii).unwrap();
        sim.run(data, &mut [&mut rec]).unwrap();
        rec.records
    }

    #[test]
    fn zero_field_reports_zero() {
        let p = make_profile(DimMode::Plane2D, Family::RadialBump { amplitude: 0.1 }, 1.0).unwrap();
        let cfg = SolverConfig {
            t_final: 0.2,
            h: 0.1,
            ..Default::default()
        };
        let recs = run_recorded(&InitialData::default(), &p, &cfg, &[2.0]);
        for r in &recs {
            assert_eq!(r.energy, 0.0);
            assert_eq!(r.local_energy, vec![0.0]);
            assert_eq!(r.weighted_ext, vec![0.0]);
            assert_eq!(r.source_accum, 0.0);
        }
    }

    #[test]
    fn initial_energy_is_gradient_energy() {
        let p = make_profile(DimMode::Line1D, Family::Constant, 1.0).unwrap();
        let g = Field::centered_bump(1.0, 1.0, 4);
        let data = InitialData::new(g, Field::Zero);
        let cfg = SolverConfig {
            t_final: 0.0,
            h: 0.001,
            ..Default::default()
        };
        let recs = run_recorded(&data, &p, &cfg, &[2.0]);
        let norms = init_data_norms(&data, &p, 0.0, 0.001).unwrap();
        assert!(((recs[0].energy - norms.energy) / norms.energy).abs() < 1e-5);
    }

    #[test]
    fn energies_are_monotone_in_radius_and_source_vanishes_for_constant_speed() {
        let p = make_profile(DimMode::Radial3D, Family::Constant, 1.0).unwrap();
        let data = InitialData::new(
            Field::centered_bump(1.0, 1.0, 4),
            Field::centered_bump(0.8, 0.5, 4),
        );
        let cfg = SolverConfig {
            t_final: 4.0,
            h: 0.02,
            sample_stride: 5,
            ..Default::default()
        };
        let recs = run_recorded(&data, &p, &cfg, &[1.5, 2.0, 3.0]);
        for r in &recs {
            assert!(r.local_energy[0] <= r.local_energy[1]);
            assert!(r.local_energy[1] <= r.local_energy[2]);
            assert!(r.local_energy[2] <= r.energy);
            assert!(r.weighted_ext.iter().all(|&w| w >= 0.0));
            assert_eq!(r.source_accum, 0.0);
        }
    }

    #[test]
    fn morawetz_residual_at_start_is_small() {
        let p = make_profile(DimMode::Line1D, Family::RadialBump { amplitude: 0.1 }, 1.0).unwrap();
        let data = InitialData::right_moving_pulse(-0.3, 1.0, 1.0, 5);
        let cfg = SolverConfig {
            t_final: 0.0,
            h: 0.005,
            ..Default::default()
        };
        let recs = run_recorded(&data, &p, &cfg, &[2.0]);
        let norms = init_data_norms(&data, &p, 0.0, cfg.h).unwrap();
        let res = morawetz_residual(&recs, norms.j0_sq, p.dim);
        assert!(res[0].abs() < 1e-4 * norms.energy, "{res:?}");
    }

    #[test]
    fn pairing_ratio_rejects_early_times_and_scales() {
        let rec = DiagnosticsRecord {
            t: 1.0,
            radii: vec![2.0],
            local_energy: vec![0.1],
            weighted_ext: vec![0.0],
            energy: 0.2,
            ..Default::default()
        };
        assert!(exterior_pairing_ratio(&rec, 1.0, 2.0, 1.0).is_err());
        let late = DiagnosticsRecord {
            t: 3.0,
            pair_ut_xgrad: 5.0,
            ..rec
        };
        let c1 = exterior_pairing_ratio(&late, 2.0, 2.0, 1.0).unwrap();
        let scaled = DiagnosticsRecord {
            pair_ut_xgrad: 45.0,
            local_energy: vec![0.9],
            energy: 1.8,
            ..late.clone()
        };
        let c3 = exterior_pairing_ratio(&scaled, 18.0, 2.0, 1.0).unwrap();
        assert!(((c1 - c3) / c1).abs() < 1e-12);
    }
}
