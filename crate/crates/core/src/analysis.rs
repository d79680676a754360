//! Verdicts on local-energy time series: power-law and logarithmic decay
//! fits, the scaled-energy boundedness witness, and an executable Gronwall
//! bootstrap that turns the integral inequality
//! `(t - a) e(t) <= K0 + eta int_0^t e` into a pointwise bound.

use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of the initial total energy below which samples are treated as
/// numerical zero and left out of log fits.
pub const EXCLUSION_FLOOR: f64 = 1e-14;
/// Minimum number of usable samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 5;
/// Allowed growth of the running maximum between window halves.
pub const BOUNDED_GROWTH_TOL: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `A t^{-p}`.
    Algebraic,
    /// `A / log^2(2 + t)`.
    Logarithmic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub model: DecayModel,
    pub exponent: Option<f64>,
    pub amplitude: Option<f64>,
    /// Residual sum of squares on log values.
    pub rss: Option<f64>,
    pub used_samples: usize,
    pub excluded_samples: usize,
    pub no_fit_reason: Option<String>,
}

impl DecayFit {
    pub fn is_fit(&self) -> bool {
        self.no_fit_reason.is_none()
    }
}

/// Fits `series` (pairs `(t, E)`) on `window`. Samples with
/// `E < EXCLUSION_FLOOR * reference` are counted as excluded.
pub fn fit_decay(
    series: &[(f64, f64)],
    window: (f64, f64),
    model: DecayModel,
    reference: f64,
) -> Result<DecayFit> {
    let (ta, tb) = window;
    if !(ta < tb) || !(ta > 0.0) {
        return Err(Error::param(
            "window",
            format!("need 0 < t_a < t_b, got [{ta}, {tb}]"),
        ));
    }
    if series.iter().any(|&(_, e)| !(e >= 0.0)) {
        return Err(Error::param("series", "energies must be nonnegative"));
    }
    let floor = EXCLUSION_FLOOR * reference;
    let in_window: Vec<_> = series
        .iter()
        .filter(|(t, _)| *t >= ta && *t <= tb)
        .collect();
    let usable: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|(_, e)| *e >= floor && *e > 0.0)
        .map(|&&p| p)
        .collect();
    let excluded = in_window.len() - usable.len();
    let mut fit = DecayFit {
        window,
        model,
        exponent: None,
        amplitude: None,
        rss: None,
        used_samples: usable.len(),
        excluded_samples: excluded,
        no_fit_reason: None,
    };
    if usable.len() < MIN_FIT_SAMPLES {
        fit.no_fit_reason = Some(if excluded > 0 {
            format!(
                "{} usable samples ({excluded} below the {EXCLUSION_FLOOR:e} floor): energy left the ball (Huygens collapse)",
                usable.len()
            )
        } else {
            format!("{} samples in window, need {MIN_FIT_SAMPLES}", usable.len())
        });
        return Ok(fit);
    }
    match model {
        DecayModel::Algebraic => {
            let xs: Vec<f64> = usable.iter().map(|(t, _)| t.ln()).collect();
            let ys: Vec<f64> = usable.iter().map(|(_, e)| e.ln()).collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let slope = sxy / sxx;
            let icpt = my - slope * mx;
            let rss = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (y - icpt - slope * x).powi(2))
                .sum();
            fit.exponent = Some(-slope);
            fit.amplitude = Some(icpt.exp());
            fit.rss = Some(rss);
        }
        DecayModel::Logarithmic => {
            let basis = |t: f64| (2.0 + t).ln().powi(-2);
            let num: f64 = usable.iter().map(|&(t, e)| basis(t) * e).sum();
            let den: f64 = usable.iter().map(|&(t, _)| basis(t).powi(2)).sum();
            let amp = num / den;
            let rss = usable
                .iter()
                .map(|&(t, e)| (e.ln() - (amp * basis(t)).ln()).powi(2))
                .sum();
            fit.amplitude = Some(amp);
            fit.rss = Some(rss);
        }
    }
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BoundedVerdict {
    Pass {
        sup_first: f64,
        sup_second: f64,
        ratio: f64,
    },
    Fail {
        sup_first: f64,
        sup_second: f64,
        ratio: f64,
    },
    Skipped {
        reason: String,
    },
}

impl BoundedVerdict {
    pub fn status(&self) -> String {
        match self {
            BoundedVerdict::Pass { .. } => "pass".into(),
            BoundedVerdict::Fail { .. } => "fail".into(),
            BoundedVerdict::Skipped { reason } => format!("skipped:{reason}"),
        }
    }
}

pub const OUTSIDE_HYPOTHESIS: &str = "eta >= 1: outside theorem hypothesis";

/// Running-maximum test on `Q(t) = (t - a)^{1 - eta} E_R(t)` with `a = R / c_m`.
pub fn bounded_scaled_energy_check(
    series: &[(f64, f64)],
    eta: f64,
    radius: f64,
    c_min: f64,
    window: (f64, f64),
) -> Result<BoundedVerdict> {
    if eta >= 1.0 {
        return Ok(BoundedVerdict::Skipped {
            reason: OUTSIDE_HYPOTHESIS.into(),
        });
    }
    let a = radius / c_min;
    let (ta, tb) = window;
    if !(ta > a && tb > ta) {
        return Err(Error::param(
            "window",
            format!("need R/c_m = {a} < t_a < t_b, got [{ta}, {tb}]"),
        ));
    }
    let mid = 0.5 * (ta + tb);
    let (mut s1, mut s2) = (0.0_f64, 0.0_f64);
    let mut seen = (false, false);
    for &(t, e) in series.iter().filter(|(t, _)| *t >= ta && *t <= tb) {
        let q = (t - a).powf(1.0 - eta) * e;
        if t <= mid {
            s1 = s1.max(q);
            seen.0 = true;
        } else {
            s2 = s2.max(q);
            seen.1 = true;
        }
    }
    if !(seen.0 && seen.1) {
        return Err(Error::param(
            "window",
            "each half of the window needs samples",
        ));
    }
    let ratio = if s2 == 0.0 { 0.0 } else { s2 / s1 };
    Ok(if s2 <= (1.0 + BOUNDED_GROWTH_TOL) * s1 {
        BoundedVerdict::Pass {
            sup_first: s1,
            sup_second: s2,
            ratio,
        }
    } else {
        BoundedVerdict::Fail {
            sup_first: s1,
            sup_second: s2,
            ratio,
        }
    })
}

/// Energy samples together with the running integral `int_0^t e`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyHistory {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub integral: Vec<f64>,
}

impl EnergyHistory {
    /// Cumulative trapezoid; `initial` is `int_0^{t[0]} e`.
    pub fn from_samples(t: Vec<f64>, e: Vec<f64>, initial: f64) -> Result<Self> {
        if t.len() != e.len() || t.is_empty() {
            return Err(Error::param(
                "history",
                "t and e must be nonempty and equally long",
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("history", "times must increase strictly"));
        }
        if e.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("history", "energies must be nonnegative"));
        }
        let mut integral = Vec::with_capacity(t.len());
        let mut acc = initial;
        integral.push(acc);
        for k in 1..t.len() {
            acc += 0.5 * (t[k] - t[k - 1]) * (e[k] + e[k - 1]);
            integral.push(acc);
        }
        Ok(Self { t, e, integral })
    }

    /// Exact history from a closed form and its antiderivative from 0.
    pub fn from_closed_form(
        times: &[f64],
        e: impl Fn(f64) -> f64,
        integral: impl Fn(f64) -> f64,
    ) -> Self {
        Self {
            t: times.to_vec(),
            e: times.iter().map(|&t| e(t)).collect(),
            integral: times.iter().map(|&t| integral(t)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallCertificate {
    pub k0_sq: f64,
    pub eta: f64,
    pub a: f64,
    pub t0: f64,
    pub m0: f64,
    /// `max e(t) / bound(t)` over the sampled window past `t0`.
    pub max_ratio: f64,
}

impl GronwallCertificate {
    pub fn bound(&self, t: f64) -> f64 {
        let s = t - self.a;
        if self.eta == 0.0 {
            self.k0_sq / s
        } else {
            (self.k0_sq + self.eta * self.m0 * s.powf(self.eta)) / s
        }
    }
}

/// Relative slack allowed when checking the integral inequality.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

fn check_range(eta: f64, a: f64, t0: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::param("eta", format!("{eta} not in [0, 1)")));
    }
    if !(t0 > a) {
        return Err(Error::param("t0", format!("need t0 > a = {a}")));
    }
    Ok(())
}

/// Verifies the integral inequality on samples with `t >= t0` and integrates
/// it into a bound valid from `t0` on.
pub fn gronwall_bound(
    history: &EnergyHistory,
    k0_sq: f64,
    eta: f64,
    a: f64,
    t0: f64,
) -> Result<GronwallCertificate> {
    check_range(eta, a, t0)?;
    if !(k0_sq >= 0.0) {
        return Err(Error::param("k0_sq", "must be nonnegative"));
    }
    let start = history
        .t
        .iter()
        .position(|&t| t >= t0)
        .ok_or_else(|| Error::param("t0", "past the end of the history"))?;
    for k in start..history.t.len() {
        let lhs = (history.t[k] - a) * history.e[k];
        let rhs = k0_sq + eta * history.integral[k];
        if lhs - rhs > HYPOTHESIS_TOL * lhs.abs().max(rhs.abs()) {
            return Err(Error::InequalityViolated {
                t: history.t[k],
                lhs,
                rhs,
            });
        }
    }
    let ts = history.t[start];
    let xi0 = (ts - a).powf(-eta) * history.integral[start];
    let m0 = if eta == 0.0 {
        xi0
    } else {
        xi0 + k0_sq / eta * (ts - a).powf(-eta)
    };
    let mut cert = GronwallCertificate {
        k0_sq,
        eta,
        a,
        t0: ts,
        m0,
        max_ratio: 0.0,
    };
    cert.max_ratio = (start..history.t.len())
        .map(|k| {
            let b = cert.bound(history.t[k]);
            if history.e[k] == 0.0 {
                0.0
            } else {
                history.e[k] / b
            }
        })
        .fold(0.0, f64::max);
    Ok(cert)
}

/// Smallest `K0` for which the integral inequality holds from `t0` on.
pub fn minimal_k0_sq(history: &EnergyHistory, eta: f64, a: f64, t0: f64) -> Result<f64> {
    check_range(eta, a, t0)?;
    Ok(history
        .t
        .iter()
        .zip(&history.e)
        .zip(&history.integral)
        .filter(|((t, _), _)| **t >= t0)
        .map(|((t, e), i)| (t - a) * e - eta * i)
        .fold(0.0, f64::max))
}

/// `M0` as a function of the start time, for sensitivity reports.
pub fn m0_sensitivity(
    history: &EnergyHistory,
    k0_sq: f64,
    eta: f64,
    a: f64,
    starts: &[f64],
) -> Vec<(f64, Result<f64>)> {
    starts
        .iter()
        .map(|&t0| (t0, gronwall_bound(history, k0_sq, eta, a, t0).map(|c| c.m0)))
        .collect()
}
