//! Runs one config: expands the scenario matrix, simulates each scenario,
//! evaluates the enabled checks and writes per-scenario artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use wavedecay::analysis::{
    bounded_scaled_energy_check, fit_decay, gronwall_bound, minimal_k0_sq, BoundedVerdict,
    DecayFit, DecayModel, EnergyHistory, GronwallCertificate, OUTSIDE_HYPOTHESIS,
};
use wavedecay::diagnostics::{
    exterior_pairing_ratio, fill_morawetz_residual, source_bound_ratio, weighted_exterior_check,
    DiagnosticsRecord, Recorder,
};
use wavedecay::spectral::{
    antiderivative_identity_check, transform, weighted_inequality_ratio, AntiderivativeReport,
    AntiderivativeTracker, InequalityReport, SpectralGrid, ZERO_MEAN_TOL,
};
use wavedecay::{
    compute_eta, init_data_norms, DataNorms, InitialData, Observer, Simulation, WavespeedProfile,
};

use crate::config::{ExperimentConfig, Scenario, SCHEMA_VERSION};
use crate::error::CliError;

pub const SUMMARY_FILE: &str = "summary.json";
pub const SERIES_FILE: &str = "timeseries.csv";
pub const TIMING_FILE: &str = "timing.json";
pub const INDEX_FILE: &str = "index.json";
/// Output root used when `--out` is absent.
pub const OUT_ENV: &str = "WAVEDECAY_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `pass`, `fail` or `skipped:<reason>`.
    pub status: String,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    fn verdict(name: impl Into<String>, ok: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { "pass" } else { "fail" }.into(),
            value: Some(value),
            detail: detail.into(),
        }
    }

    fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: format!("skipped:{}", reason.into()),
            value: None,
            detail: String::new(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == "fail"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayEntry {
    pub radius: f64,
    pub a: f64,
    pub window: (f64, f64),
    pub algebraic: Option<DecayFit>,
    pub logarithmic: Option<DecayFit>,
    pub bounded: Option<BoundedVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallEntry {
    pub radius: f64,
    pub certificate: Option<GronwallCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub complete: bool,
    pub error: Option<String>,
    pub name: String,
    pub scenario: Scenario,
    pub config_digest: String,
    pub cfl: f64,
    pub t_final: f64,
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub eta: f64,
    pub eta_applicable: bool,
    pub c_min: f64,
    pub c_sup: f64,
    pub grad_c_sup: f64,
    pub data_norms: DataNorms,
    pub conservation_drift: f64,
    pub morawetz_max_ratio: Option<f64>,
    pub weighted_exterior_max_ratio: Vec<f64>,
    pub exterior_pairing_constant: Vec<Option<f64>>,
    pub spectral: Vec<InequalityReport>,
    pub decay: Vec<DecayEntry>,
    pub gronwall: Vec<GronwallEntry>,
    pub antiderivative: Option<AntiderivativeReport>,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.complete && !self.checks.iter().any(Check::failed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Timing {
    wall_clock_s: f64,
    steps: usize,
    steps_per_second: f64,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_root: PathBuf,
    pub parallel: usize,
    pub resolution_scale: f64,
}

pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub summaries: Vec<RunSummary>,
}

impl ExperimentOutcome {
    pub fn all_passed(&self) -> bool {
        self.summaries.iter().all(RunSummary::all_passed)
    }
}

pub fn csv_header(radii: &[f64]) -> String {
    let mut cols = vec!["t".to_string(), "E_u".to_string()];
    cols.extend(radii.iter().map(|r| format!("E_R@{r}")));
    cols.extend(
        ["l2_u", "pair_ut_u", "pair_ut_xgrad", "S_accum"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.extend(radii.iter().map(|r| format!("wext@{r}")));
    cols.push("morawetz_residual".into());
    cols.join(",")
}

pub fn render_csv(radii: &[f64], records: &[DiagnosticsRecord]) -> String {
    let mut out = csv_header(radii);
    out.push('\n');
    for r in records {
        let mut row = vec![r.t, r.energy];
        row.extend(&r.local_energy);
        row.extend([r.l2_u, r.pair_ut_u, r.pair_ut_xgrad, r.source_accum]);
        row.extend(&r.weighted_ext);
        row.push(r.morawetz_residual);
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summary types serialize");
    s.push('\n');
    s
}

/// Spectral samples of `w = u1 / c^2` on a box four times the data support.
fn spectral_checks(
    data: &InitialData,
    profile: &WavespeedProfile,
    gamma: f64,
    thetas: &[f64],
    h: f64,
) -> Result<(Vec<InequalityReport>, Vec<Check>), CliError> {
    let dim = profile.dim.spatial_dim();
    let cap = [1 << 16, 2048, 96][dim - 1];
    let support = data.u1.support_radius().max(h);
    let mut n = ((8.0 * support / h).ceil() as usize).min(cap);
    n += n % 2;
    let grid = SpectralGrid::new(dim, n, 8.0 * support / n as f64)?;
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let c = profile.speed(&x);
            data.u1.value(&x) / (c * c)
        })
        .collect();
    let sample = transform(&grid, &values)?;
    let zero_mean = sample.l1() > 0.0 && sample.mass().abs() <= ZERO_MEAN_TOL * sample.l1();
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for &theta in thetas {
        let name = format!("spectral_inequality@theta={theta}");
        match weighted_inequality_ratio(&sample, gamma, theta, !zero_mean) {
            Ok(rep) => {
                let variant = if zero_mean {
                    "zero-mean"
                } else {
                    "with-moment"
                };
                checks.push(Check::verdict(
                    name,
                    rep.ratio.is_finite(),
                    rep.ratio,
                    format!("{variant} variant; empirical constant on n = {n} per axis"),
                ));
                reports.push(rep);
            }
            Err(wavedecay::Error::InvalidParameter { reason, .. }) => {
                checks.push(Check::skipped(name, format!("theta {reason}")))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((reports, checks))
}

fn morawetz_ratio(records: &[DiagnosticsRecord]) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.t > 0.0)
        .map(|r| {
            let scale = r.t * r.energy;
            if r.morawetz_residual == 0.0 {
                0.0
            } else {
                r.morawetz_residual.abs() / scale
            }
        })
        .reduce(f64::max)
}

struct Evaluated {
    checks: Vec<Check>,
    drift: f64,
    morawetz: Option<f64>,
    wext: Vec<f64>,
    pairing: Vec<Option<f64>>,
    decay: Vec<DecayEntry>,
    gronwall: Vec<GronwallEntry>,
}

fn evaluate(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    profile: &WavespeedProfile,
    norms: &DataNorms,
    records: &[DiagnosticsRecord],
) -> Result<Evaluated, CliError> {
    let c = &cfg.checks;
    let tol = &c.tolerances;
    let eta = profile.eta;
    let mut checks = Vec::new();
    let e0 = records.first().map_or(0.0, |r| r.energy);

    let drift = if e0 > 0.0 {
        records
            .iter()
            .map(|r| ((r.energy - e0) / e0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    if c.energy {
        checks.push(Check::verdict(
            "energy_conservation",
            drift <= tol.energy_drift,
            drift,
            format!("max relative drift, tolerance {:e}", tol.energy_drift),
        ));
    }

    let morawetz = morawetz_ratio(records);
    if c.morawetz {
        checks.push(match morawetz {
            Some(m) => Check::verdict(
                "morawetz_identity",
                m <= tol.morawetz,
                m,
                format!(
                    "max |residual| / (t E_u) over t > 0, tolerance {:e}",
                    tol.morawetz
                ),
            ),
            None => Check::skipped("morawetz_identity", "no samples with t > 0"),
        });
    }

    let mut wext = Vec::new();
    let mut pairing = Vec::new();
    let mut decay = Vec::new();
    let mut gronwall = Vec::new();
    let t_final = cfg.solver.t_final;
    let window = (c.decay_window[0] * t_final, c.decay_window[1] * t_final);

    for &radius in &scenario.radii {
        let rep = weighted_exterior_check(
            records,
            norms.i0_sq,
            profile.support,
            radius,
            tol.weighted_exterior,
        )?;
        wext.push(rep.max_ratio);
        if c.weighted_exterior {
            checks.push(Check::verdict(
                format!("weighted_exterior_bound@{radius}"),
                rep.passed,
                rep.max_ratio,
                format!(
                    "max ratio to (2 + L) I0^2, tolerance 1 + {}",
                    tol.weighted_exterior
                ),
            ));
        }

        let late: Vec<f64> = records
            .iter()
            .filter(|r| r.t > radius)
            .map(|r| exterior_pairing_ratio(r, norms.i0_sq, radius, profile.c_min))
            .collect::<Result<_, _>>()?;
        let constant = late.iter().copied().reduce(f64::max);
        pairing.push(constant);
        if c.exterior_pairing {
            let name = format!("exterior_pairing_constant@{radius}");
            checks.push(match constant {
                Some(k) => {
                    Check::verdict(name, k.is_finite(), k, "implied constant, reported only")
                }
                None => Check::skipped(name, "no samples with t > R"),
            });
        }

        if c.source {
            let name = format!("source_bound@{radius}");
            checks.push(if profile.is_constant() {
                let worst = records
                    .iter()
                    .map(|r| r.source_accum.abs())
                    .fold(0.0, f64::max);
                Check::verdict(name, worst == 0.0, worst, "constant speed: S must vanish")
            } else if eta == 0.0 {
                Check::skipped(name, "eta = 0")
            } else {
                let ratio = source_bound_ratio(records, eta, radius)?;
                Check::verdict(
                    name,
                    ratio <= 1.0 + tol.source,
                    ratio,
                    "max S(t) / (eta int_0^t E_R) over samples with S > 0",
                )
            });
        }

        let a = radius / profile.c_min;
        let series: Vec<(f64, f64)> = records
            .iter()
            .map(|r| Ok((r.t, r.local_energy_at(radius)?)))
            .collect::<Result<_, wavedecay::Error>>()?;
        let mut entry = DecayEntry {
            radius,
            a,
            window,
            algebraic: None,
            logarithmic: None,
            bounded: None,
        };
        let window_ok = window.0 > a && series.iter().filter(|(t, _)| *t >= window.0).count() >= 2;
        if c.decay {
            let bounded_name = format!("decay_bounded@{radius}");
            let compare_name = format!("decay_model_comparison@{radius}");
            if eta >= 1.0 {
                checks.push(Check::skipped(bounded_name, OUTSIDE_HYPOTHESIS));
                checks.push(Check::skipped(compare_name, OUTSIDE_HYPOTHESIS));
            } else if !window_ok {
                let why = format!(
                    "decay window [{}, {}] must start after R/c_m = {a} and hold samples",
                    window.0, window.1
                );
                checks.push(Check::skipped(bounded_name, why.clone()));
                checks.push(Check::skipped(compare_name, why));
            } else {
                let verdict =
                    bounded_scaled_energy_check(&series, eta, radius, profile.c_min, window)?;
                checks.push(match &verdict {
                    BoundedVerdict::Pass { ratio, .. } | BoundedVerdict::Fail { ratio, .. } => {
                        Check::verdict(
                            bounded_name,
                            matches!(verdict, BoundedVerdict::Pass { .. }),
                            *ratio,
                            "second-half / first-half max of (t - R/c_m)^(1-eta) E_R",
                        )
                    }
                    BoundedVerdict::Skipped { reason } => {
                        Check::skipped(bounded_name, reason.clone())
                    }
                });
                entry.bounded = Some(verdict);
                let alg = fit_decay(&series, window, DecayModel::Algebraic, e0)?;
                let log = fit_decay(&series, window, DecayModel::Logarithmic, e0)?;
                checks.push(match (alg.rss, log.rss) {
                    (Some(ra), Some(rl)) => Check::verdict(
                        compare_name,
                        rl > ra,
                        rl / ra.max(f64::MIN_POSITIVE),
                        format!(
                            "RSS(log) / RSS(algebraic); fitted exponent {:.4} vs 1 - eta = {:.4}",
                            alg.exponent.unwrap_or(f64::NAN),
                            1.0 - eta
                        ),
                    ),
                    _ => Check::skipped(
                        compare_name,
                        format!(
                            "no-fit: {}",
                            alg.no_fit_reason
                                .clone()
                                .or(log.no_fit_reason.clone())
                                .unwrap_or_default()
                        ),
                    ),
                });
                entry.algebraic = Some(alg);
                entry.logarithmic = Some(log);
            }
        }
        decay.push(entry);

        if c.gronwall {
            let name = format!("gronwall_certificate@{radius}");
            let mut g = GronwallEntry {
                radius,
                certificate: None,
            };
            if eta >= 1.0 {
                checks.push(Check::skipped(name, OUTSIDE_HYPOTHESIS));
            } else if !window_ok || series.len() < 2 {
                checks.push(Check::skipped(
                    name,
                    format!("needs samples past t0 > R/c_m = {a}"),
                ));
            } else {
                let history = EnergyHistory::from_samples(
                    series.iter().map(|p| p.0).collect(),
                    series.iter().map(|p| p.1).collect(),
                    0.0,
                )?;
                let k0 = minimal_k0_sq(&history, eta, a, window.0)?;
                let cert = gronwall_bound(&history, k0, eta, a, window.0)?;
                checks.push(Check::verdict(
                    name,
                    cert.m0.is_finite() && cert.max_ratio <= 1.0 + 1e-9,
                    cert.max_ratio,
                    format!("minimal K0^2 = {k0:e}, M0 = {:e}", cert.m0),
                ));
                g.certificate = Some(cert);
            }
            gronwall.push(g);
        }
    }
    Ok(Evaluated {
        checks,
        drift,
        morawetz,
        wext,
        pairing,
        decay,
        gronwall,
    })
}

/// Simulates one scenario and writes its directory.
pub fn run_scenario(
    cfg: &ExperimentConfig,
    digest: &str,
    scenario: &Scenario,
    dir: &Path,
) -> Result<RunSummary, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let started = Instant::now();
    let profile = scenario.profile()?;
    let verdict = compute_eta(&profile);
    let data = cfg.build_data(&profile, scenario.h)?;
    let norms = init_data_norms(&data, &profile, cfg.checks.gamma, scenario.h)
        .map_err(|e| CliError::config("data", e))?;
    let solver = scenario.solver(&cfg.solver);
    let sim =
        Simulation::new(&data, &profile, &solver).map_err(|e| CliError::config("solver", e))?;
    let mut recorder = Recorder::new(&profile, &scenario.radii)
        .map_err(|e| CliError::config("checks.radii", e))?;
    let mut tracker = cfg
        .checks
        .antiderivative
        .then(|| AntiderivativeTracker::new(&data));

    let outcome = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut recorder];
        if let Some(t) = tracker.as_mut() {
            observers.push(t);
        }
        sim.run(&data, &mut observers)
    };

    let mut summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        complete: false,
        error: None,
        name: cfg.name.clone(),
        scenario: scenario.clone(),
        config_digest: digest.to_string(),
        cfl: solver.cfl,
        t_final: solver.t_final,
        dt: sim.dt(),
        steps: 0,
        samples: recorder.records.len(),
        eta: verdict.eta,
        eta_applicable: verdict.applicable,
        c_min: profile.c_min,
        c_sup: profile.c_sup,
        grad_c_sup: profile.grad_c_sup,
        data_norms: norms.clone(),
        conservation_drift: 0.0,
        morawetz_max_ratio: None,
        weighted_exterior_max_ratio: Vec::new(),
        exterior_pairing_constant: Vec::new(),
        spectral: Vec::new(),
        decay: Vec::new(),
        gronwall: Vec::new(),
        antiderivative: None,
        checks: Vec::new(),
    };

    let records = &mut recorder.records;
    fill_morawetz_residual(records, norms.j0_sq, profile.dim);
    write(
        &dir.join(SERIES_FILE),
        &render_csv(&scenario.radii, records),
    )?;

    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let err = match e {
                wavedecay::Error::Unstable { step } => CliError::Unstable { step },
                other => CliError::Core(other),
            };
            summary.error = Some(err.to_string());
            write(&dir.join(SUMMARY_FILE), &to_json(&summary))?;
            return Err(err);
        }
    };
    summary.steps = outcome.steps;

    let ev = evaluate(cfg, scenario, &profile, &norms, records)?;
    let mut checks = ev.checks;
    if cfg.checks.spectral {
        let (reports, spectral) = spectral_checks(
            &data,
            &profile,
            cfg.checks.gamma,
            &cfg.checks.theta,
            scenario.h,
        )?;
        summary.spectral = reports;
        checks.extend(spectral);
    }
    if let Some(t) = tracker {
        let tol = &cfg.checks.tolerances;
        let rep = antiderivative_identity_check(&t.samples, tol.plateau);
        checks.push(Check::verdict(
            "antiderivative_identity",
            rep.max_relative_residual <= tol.antiderivative,
            rep.max_relative_residual,
            "max |residual| / max E_v",
        ));
        checks.push(Check::verdict(
            "l2_plateau",
            rep.plateau,
            rep.sup_l2_second_half / rep.sup_l2_first_half.max(f64::MIN_POSITIVE),
            format!(
                "sup ||u|| second half / first half, tolerance 1 + {}",
                tol.plateau
            ),
        ));
        summary.antiderivative = Some(rep);
    }
    summary.conservation_drift = ev.drift;
    summary.morawetz_max_ratio = ev.morawetz;
    summary.weighted_exterior_max_ratio = ev.wext;
    summary.exterior_pairing_constant = ev.pairing;
    summary.decay = ev.decay;
    summary.gronwall = ev.gronwall;
    summary.checks = checks;
    summary.complete = true;
    write(&dir.join(SUMMARY_FILE), &to_json(&summary))?;

    let wall = started.elapsed().as_secs_f64();
    let timing = Timing {
        wall_clock_s: wall,
        steps: outcome.steps,
        steps_per_second: if wall > 0.0 {
            outcome.steps as f64 / wall
        } else {
            0.0
        },
    };
    write(&dir.join(TIMING_FILE), &to_json(&timing))?;
    log::info!(
        "{}: {} steps in {wall:.2}s, {} checks",
        scenario.id,
        outcome.steps,
        summary.checks.len()
    );
    Ok(summary)
}

#[derive(Serialize)]
struct IndexEntry<'a> {
    id: &'a str,
    passed: bool,
}

/// Runs every scenario of `config_path` under `opts.out_root/<name>/`.
pub fn run_experiment(
    config_path: &Path,
    opts: &RunOptions,
) -> Result<ExperimentOutcome, CliError> {
    let (cfg, digest) = ExperimentConfig::load(config_path)?;
    let scenarios = cfg.scenarios(opts.resolution_scale)?;
    let dir = opts.out_root.join(&cfg.name);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel.max(1))
        .build()
        .map_err(|e| CliError::config("--parallel", e))?;
    let results: Vec<Result<RunSummary, CliError>> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_scenario(&cfg, &digest, s, &dir.join(&s.id)))
            .collect()
    });
    let mut summaries = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => {
                // instability outranks everything else
                let worse = match &first_err {
                    None => true,
                    Some(prev) => {
                        matches!(e, CliError::Unstable { .. })
                            && !matches!(prev, CliError::Unstable { .. })
                    }
                };
                if worse {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let index: Vec<IndexEntry> = summaries
        .iter()
        .map(|s| IndexEntry {
            id: &s.scenario.id,
            passed: s.all_passed(),
        })
        .collect();
    write(&dir.join(INDEX_FILE), &to_json(&index))?;
    Ok(ExperimentOutcome { dir, summaries })
}

/// One line per check, for the terminal.
pub fn format_checks(summary: &RunSummary) -> String {
    let mut out = String::new();
    for c in &summary.checks {
        let value = c.value.map_or(String::new(), |v| format!(" {v:.4e}"));
        let _ = writeln!(out, "  [{}] {}{}", c.status, c.name, value);
    }
    out
}
