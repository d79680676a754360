use proptest::prelude::*;

use wavedecay::analysis::{bounded_scaled_energy_check, fit_decay, DecayModel};
use wavedecay::diagnostics::{weights, Recorder};
use wavedecay::solver::{causal_extent, time_step};
use wavedecay::spectral::{riesz_weighted_integral, transform, SpectralGrid, ZeroModePolicy};
use wavedecay::*;

fn bump(a: f64) -> Family {
    Family::RadialBump { amplitude: a }
}

fn line_data(x0: f64, r: f64, amp0: f64, amp1: f64) -> InitialData {
    InitialData::new(
        Field::bump([x0, 0.0, 0.0], r, amp0, 4),
        Field::bump([-x0, 0.0, 0.0], r, amp1, 4),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn line_energy_drift_is_small(
        a in -0.3f64..0.3,
        x0 in -0.5f64..0.5,
        r in 0.4f64..1.0,
        amp0 in -1.0f64..1.0,
        amp1 in -1.0f64..1.0,
    ) {
        prop_assume!(amp0.abs() + amp1.abs() > 0.1);
        let p = make_profile(DimMode::Line1D, bump(a), 1.0).unwrap();
        let data = line_data(x0, r, amp0, amp1);
        let cfg = SolverConfig { h: 0.01, t_final: 4.0, sample_stride: 40, ..Default::default() };
        let mut rec = Recorder::new(&p, &[2.0, 3.0]).unwrap();
        solver::run(&data, &p, &cfg, &mut [&mut rec]).unwrap();
        let e0 = rec.records[0].energy;
        for r in &rec.records {
            prop_assert!(((r.energy - e0) / e0).abs() < 1e-3);
            // monotone in R and bounded by the total
            prop_assert!(r.local_energy[0] <= r.local_energy[1] + 1e-15);
            prop_assert!(r.local_energy[1] <= r.energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn energies_scale_quadratically(lambda in 0.1f64..10.0) {
        let p = make_profile(DimMode::Radial3D, bump(0.1), 1.0).unwrap();
        let data = InitialData::new(Field::centered_bump(0.8, 1.0, 4), Field::centered_bump(0.5, 0.3, 4));
        let cfg = SolverConfig { h: 0.02, t_final: 2.0, sample_stride: 20, ..Default::default() };
        let mut a = Recorder::new(&p, &[1.5]).unwrap();
        let mut b = Recorder::new(&p, &[1.5]).unwrap();
        solver::run(&data, &p, &cfg, &mut [&mut a]).unwrap();
        solver::run(&data.scaled(lambda), &p, &cfg, &mut [&mut b]).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            let l2 = lambda * lambda;
            prop_assert!((y.energy - l2 * x.energy).abs() <= 1e-10 * y.energy);
            prop_assert!((y.source_accum - l2 * x.source_accum).abs() <= 1e-10 * y.energy.max(1e-300) * (1.0 + x.t));
        }
    }

    #[test]
    fn weights_are_positive_and_matched(
        t in 0.0f64..50.0,
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
        z in -20.0f64..20.0,
        support in 0.1f64..5.0,
    ) {
        let w = weights(t, &[x, y, z], support);
        prop_assert!(w.psi > 0.0 && w.psi_t < 0.0 && w.phi_t < 0.0);
        if let Some(g) = w.grad_psi {
            let eik = g[0] * g[0] + g[1] * g[1] + g[2] * g[2] - w.psi_t * w.psi_t;
            prop_assert!(eik.abs() < 1e-12);
        }
        let n = (x * x + y * y + z * z).sqrt();
        prop_assume!(n > 0.0);
        let on_sphere = [x / n * support, y / n * support, z / n * support];
        let ws = weights(t, &on_sphere, support);
        prop_assert!((ws.psi - ws.phi).abs() < 1e-12);
    }

    #[test]
    fn riesz_integral_translation_and_plancherel(
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        shift in 1usize..8,
        r in 0.3f64..0.9,
    ) {
        let g = SpectralGrid::new(2, 64, 0.1).unwrap();
        let dipole = |dx: f64| Field::sum(vec![
            Field::bump([cx + dx, cy, 0.0], r, 1.0, 4),
            Field::bump([-cx + dx, -cy + 1.0, 0.0], r, -1.0, 4),
        ]);
        let base = transform(&g, &g.sample(&dipole(0.0))).unwrap();
        let moved = transform(&g, &g.sample(&dipole(shift as f64 * g.h))).unwrap();
        let a = riesz_weighted_integral(&base, 1.0, ZeroModePolicy::RequireZeroMean).unwrap();
        let b = riesz_weighted_integral(&moved, 1.0, ZeroModePolicy::RequireZeroMean).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-10);
        let p = riesz_weighted_integral(&base, 0.0, ZeroModePolicy::ExcludeZeroMode).unwrap();
        prop_assert!(((p - base.l2_sq()) / p).abs() < 1e-10);
    }

    #[test]
    fn power_law_fits_are_exact(amp in 0.01f64..100.0, p in 0.05f64..3.0, t0 in 1.0f64..20.0) {
        let s: Vec<(f64, f64)> = (0..60)
            .map(|k| { let t = t0 * 10f64.powf(k as f64 / 59.0); (t, amp * t.powf(-p)) })
            .collect();
        let fit = fit_decay(&s, (t0, 10.0 * t0), DecayModel::Algebraic, 1e-300).unwrap();
        prop_assert!((fit.exponent.unwrap() - p).abs() < 1e-6);
        prop_assert!(((fit.amplitude.unwrap() - amp) / amp).abs() < 1e-6);
        let log = fit_decay(&s, (t0, 10.0 * t0), DecayModel::Logarithmic, 1e-300).unwrap();
        prop_assert!(fit.rss.unwrap() < log.rss.unwrap());
    }

    #[test]
    fn log_law_prefers_log_model(amp in 0.01f64..100.0, t0 in 1.0f64..50.0) {
        let s: Vec<(f64, f64)> = (0..60)
            .map(|k| { let t = t0 * 10f64.powf(k as f64 / 59.0); (t, amp / (2.0 + t).ln().powi(2)) })
            .collect();
        let alg = fit_decay(&s, (t0, 10.0 * t0), DecayModel::Algebraic, 1e-300).unwrap();
        let log = fit_decay(&s, (t0, 10.0 * t0), DecayModel::Logarithmic, 1e-300).unwrap();
        prop_assert!(log.rss.unwrap() < alg.rss.unwrap());
    }

    #[test]
    fn bounded_check_is_scale_invariant(lambda in 1e-6f64..1e6, eta in 0.0f64..0.99, wiggle in 0.0f64..0.5) {
        let a = 2.0;
        let s: Vec<(f64, f64)> = (1..400)
            .map(|k| { let t = 2.0 + 0.25 * k as f64; (t, (t - a).powf(eta - 1.0) * (1.0 + wiggle * (t * 0.3).sin())) })
            .collect();
        let v1 = bounded_scaled_energy_check(&s, eta, 2.0, 1.0, (30.0, 90.0)).unwrap();
        let scaled: Vec<_> = s.iter().map(|&(t, e)| (t, lambda * e)).collect();
        let v2 = bounded_scaled_energy_check(&scaled, eta, 2.0, 1.0, (30.0, 90.0)).unwrap();
        prop_assert_eq!(v1.status(), v2.status());
        let ratio = |v: &analysis::BoundedVerdict| match v {
            analysis::BoundedVerdict::Pass { ratio, .. } | analysis::BoundedVerdict::Fail { ratio, .. } => *ratio,
            _ => f64::NAN,
        };
        prop_assert!((ratio(&v1) - ratio(&v2)).abs() < 1e-12 * ratio(&v1).max(1.0));
    }
}

#[test]
fn outer_boundary_is_invisible() {
    let p = make_profile(DimMode::Line1D, bump(0.2), 1.0).unwrap();
    let data = line_data(0.2, 0.8, 1.0, 0.5);
    let cfg = SolverConfig {
        h: 0.01,
        t_final: 6.0,
        sample_stride: 50,
        ..Default::default()
    };
    let extent = causal_extent(&p, &data, &cfg);
    let dt = time_step(&p, cfg.cfl, cfg.h);
    let energies = |ext: f64| {
        let grid = Grid::covering(p.dim, cfg.h, ext);
        let sim = Simulation::with_grid(grid, &p, dt, cfg.t_final, cfg.sample_stride);
        let radii: Vec<f64> = (0..=6).map(|k| 0.9 * extent - k as f64).collect();
        let mut rec = Recorder::new(&p, &radii).unwrap();
        sim.run(&data, &mut [&mut rec]).unwrap();
        rec.records
    };
    let small = energies(extent);
    let large = energies(1.2 * extent);
    let speed = p.c_sup.max(1.0);
    for (a, b) in small.iter().zip(&large) {
        for (j, &r) in a.radii.iter().enumerate() {
            if r <= extent - (cfg.t_final - a.t) * speed && r > p.support {
                let (x, y) = (a.local_energy[j], b.local_energy[j]);
                assert!(
                    (x - y).abs() <= 1e-12 * y.max(1e-300),
                    "t {} R {r}: {x} vs {y}",
                    a.t
                );
            }
        }
    }
}

#[test]
fn eta_scale_invariance() {
    let base = make_profile(DimMode::Plane2D, bump(0.1), 1.0).unwrap().eta;
    for lambda in [0.5, 2.0, 10.0] {
        let e = make_profile(DimMode::Plane2D, bump(0.1), lambda)
            .unwrap()
            .eta;
        assert!(((e - base) / base).abs() < 1e-12);
    }
}
