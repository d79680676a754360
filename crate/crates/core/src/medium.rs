//! Wavespeed profiles and the scalar constants built from them and from
//! the initial data.
//!
//! The bump family is `c(x) = 1 + a (1 - (|x|/L)^2)^3` for `|x| <= L` and
//! `c = 1` outside. Its slope `|c'(r)| = 6 |a| s (1 - s^2)^2 / L` with
//! `s = r / L` peaks at `s = 1/sqrt(5)`, giving the closed form
//! `||grad c||_inf = |a| / L * 96 / (25 sqrt 5)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dot, norm, Field, InitialData, Point};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DimMode {
    #[serde(rename = "line-1d")]
    Line1D,
    #[serde(rename = "plane-2d")]
    Plane2D,
    #[serde(rename = "radial-3d")]
    Radial3D,
}

impl DimMode {
    /// Dimension `n` of the physical space.
    pub fn spatial_dim(self) -> usize {
        match self {
            DimMode::Line1D => 1,
            DimMode::Plane2D => 2,
            DimMode::Radial3D => 3,
        }
    }

    /// Dimension of the storage lattice (the radial problem is solved on a line).
    pub fn grid_dim(self) -> usize {
        match self {
            DimMode::Plane2D => 2,
            _ => 1,
        }
    }

    /// The `(n - 1) / 2` coefficient of the Morawetz multiplier.
    pub fn multiplier_coefficient(self) -> f64 {
        (self.spatial_dim() as f64 - 1.0) / 2.0
    }
}

impl std::fmt::Display for DimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DimMode::Line1D => "line-1d",
            DimMode::Plane2D => "plane-2d",
            DimMode::Radial3D => "radial-3d",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Constant,
    RadialBump { amplitude: f64 },
}

/// Maximum of `6 s (1 - s^2)^2` over `[0, 1]`.
pub fn bump_slope_peak() -> f64 {
    96.0 / (25.0 * 5f64.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WavespeedProfile {
    pub dim: DimMode,
    pub family: Family,
    /// Radius `L` outside which `c = 1`.
    pub support: f64,
    pub c_sup: f64,
    pub c_min: f64,
    pub inv_c_sup: f64,
    pub grad_c_sup: f64,
    pub eta: f64,
}

/// `eta = 2 L ||1/c|| ||grad c||` and whether it lies in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaVerdict {
    pub eta: f64,
    pub applicable: bool,
}

pub fn make_profile(dim: DimMode, family: Family, support: f64) -> Result<WavespeedProfile> {
    if !(support > 0.0 && support.is_finite()) {
        return Err(Error::param(
            "L",
            format!("must be positive, got {support}"),
        ));
    }
    if let Family::RadialBump { amplitude } = family {
        if !amplitude.is_finite() || amplitude <= -1.0 {
            return Err(Error::AssumptionViolated {
                assumption: "A-1",
                detail: format!("amplitude {amplitude} <= -1 makes c vanish"),
            });
        }
    }
    Ok(WavespeedProfile::unchecked(dim, family, support))
}

pub fn compute_eta(profile: &WavespeedProfile) -> EtaVerdict {
    let eta = 2.0 * profile.support * profile.inv_c_sup * profile.grad_c_sup;
    EtaVerdict {
        eta,
        applicable: (0.0..1.0).contains(&eta),
    }
}

impl WavespeedProfile {
    /// Builds a profile and its constants without checking the assumptions.
    pub fn unchecked(dim: DimMode, family: Family, support: f64) -> Self {
        let (c_sup, c_min, grad_c_sup) = match family {
            Family::Constant => (1.0, 1.0, 0.0),
            Family::RadialBump { amplitude } => (
                1f64.max(1.0 + amplitude),
                1f64.min(1.0 + amplitude),
                amplitude.abs() / support * bump_slope_peak(),
            ),
        };
        let mut p = WavespeedProfile {
            dim,
            family,
            support,
            c_sup,
            c_min,
            inv_c_sup: 1.0 / c_min,
            grad_c_sup,
            eta: 0.0,
        };
        p.eta = compute_eta(&p).eta;
        p
    }

    pub fn speed_at_radius(&self, r: f64) -> f64 {
        match self.family {
            Family::Constant => 1.0,
            Family::RadialBump { amplitude } => {
                if r > self.support {
                    1.0
                } else {
                    let s = r / self.support;
                    let q = 1.0 - s * s;
                    1.0 + amplitude * q * q * q
                }
            }
        }
    }

    /// `dc/dr`.
    pub fn slope_at_radius(&self, r: f64) -> f64 {
        match self.family {
            Family::Constant => 0.0,
            Family::RadialBump { amplitude } => {
                if r > self.support {
                    0.0
                } else {
                    let s = r / self.support;
                    let q = 1.0 - s * s;
                    -6.0 * amplitude * s * q * q / self.support
                }
            }
        }
    }

    pub fn speed(&self, x: &Point) -> f64 {
        self.speed_at_radius(norm(x))
    }

    /// `x . grad c(x) = r c'(r)`.
    pub fn radial_derivative_moment(&self, x: &Point) -> f64 {
        let r = norm(x);
        r * self.slope_at_radius(r)
    }

    pub fn is_constant(&self) -> bool {
        self.grad_c_sup == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub min_speed: f64,
    pub max_speed: f64,
    pub max_sampled_slope: f64,
    /// `max sampled |grad c| / grad_c_sup`, 0 for constant profiles.
    pub slope_ratio: f64,
}

/// Dense radial sampling of the standing assumptions on `c`.
pub fn validate_profile(profile: &WavespeedProfile, samples: usize) -> Result<ValidationReport> {
    if samples < 1000 {
        return Err(Error::param("samples", "need at least 1000 samples"));
    }
    let l = profile.support;
    let mut report = ValidationReport {
        samples,
        min_speed: f64::INFINITY,
        max_speed: 0.0,
        max_sampled_slope: 0.0,
        slope_ratio: 0.0,
    };
    for k in 0..samples {
        let r = 2.0 * l * k as f64 / (samples - 1) as f64;
        let c = profile.speed_at_radius(r);
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::AssumptionViolated {
                assumption: "A-1",
                detail: format!("c({r}) = {c} is not positive and finite"),
            });
        }
        if c > profile.c_sup * (1.0 + 1e-12) || 1.0 / c > profile.inv_c_sup * (1.0 + 1e-12) {
            return Err(Error::AssumptionViolated {
                assumption: "A-1",
                detail: format!("c({r}) = {c} escapes the declared bounds"),
            });
        }
        if r > l && c != 1.0 {
            return Err(Error::AssumptionViolated {
                assumption: "A-2",
                detail: format!("c({r}) = {c} differs from 1 outside L = {l}"),
            });
        }
        let slope = profile.slope_at_radius(r).abs();
        if slope > profile.grad_c_sup * (1.0 + 1e-6) {
            return Err(Error::AssumptionViolated {
                assumption: "A-1",
                detail: format!("|grad c({r})| = {slope} exceeds {}", profile.grad_c_sup),
            });
        }
        report.min_speed = report.min_speed.min(c);
        report.max_speed = report.max_speed.max(c);
        report.max_sampled_slope = report.max_sampled_slope.max(slope);
    }
    if profile.grad_c_sup > 0.0 {
        report.slope_ratio = report.max_sampled_slope / profile.grad_c_sup;
    }
    Ok(report)
}

/// Weighted norms and pairings of the initial data.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DataNorms {
    /// `int (1 + |x|)(c^-2 u1^2 + |grad u0|^2)`.
    pub i0_sq: f64,
    /// `(n-1)/2 (c^-2 u1, u0) + (c^-2 u1, x . grad u0)`.
    pub j0_sq: f64,
    /// `int u1 / c^2`.
    pub moment: f64,
    pub u1_l2: f64,
    pub u1_l1: f64,
    pub gamma: f64,
    /// `int (1 + |x|^gamma) |u1|`.
    pub u1_l1_gamma: f64,
    /// `||c^-1 u0||`.
    pub inv_c_u0_l2: f64,
    pub u0_l2: f64,
    /// Total energy of the data.
    pub energy: f64,
}

/// Quadrature grid used for data norms at spacing `h`.
pub fn norm_grid(data: &InitialData, dim: DimMode, h: f64) -> Grid {
    Grid::covering(dim, h, data.support_radius() + 2.0 * h)
}

pub fn init_data_norms(
    data: &InitialData,
    profile: &WavespeedProfile,
    gamma: f64,
    h: f64,
) -> Result<DataNorms> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("{gamma} not in [0, 1]")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", "spacing must be positive"));
    }
    data.check_dim(profile.dim)?;
    let grid = norm_grid(data, profile.dim, h);
    let k = profile.dim.multiplier_coefficient();
    let mut acc = [0.0f64; 10];
    for idx in 0..grid.len() {
        let wgt = grid.weight(idx);
        if wgt == 0.0 {
            continue;
        }
        let x = grid.point(idx);
        let u0 = data.u0.value(&x);
        let u1 = data.u1.value(&x);
        let g0 = data.u0.gradient(&x);
        if !(u0.is_finite() && u1.is_finite() && g0.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                what: "initial data",
            });
        }
        let c = profile.speed(&x);
        let ic2 = 1.0 / (c * c);
        let r = norm(&x);
        let dens = ic2 * u1 * u1 + dot(&g0, &g0);
        let terms = [
            (1.0 + r) * dens,
            k * ic2 * u1 * u0 + ic2 * u1 * dot(&x, &g0),
            u1 * ic2,
            u1 * u1,
            u1.abs(),
            (1.0 + r.powf(gamma)) * u1.abs(),
            ic2 * u0 * u0,
            u0 * u0,
            0.5 * dens,
            0.0,
        ];
        for (a, t) in acc.iter_mut().zip(terms) {
            *a += wgt * t;
        }
    }
    Ok(DataNorms {
        i0_sq: acc[0],
        j0_sq: acc[1],
        moment: acc[2],
        u1_l2: acc[3].sqrt(),
        u1_l1: acc[4],
        gamma,
        u1_l1_gamma: acc[5],
        inv_c_u0_l2: acc[6].sqrt(),
        u0_l2: acc[7].sqrt(),
        energy: acc[8],
    })
}

/// `int f / c^2` on the norm grid of `data` at spacing `h`.
fn weighted_moment(field: &Field, grid: &Grid, profile: &WavespeedProfile) -> f64 {
    grid.integrate(|_, x| {
        let c = profile.speed(x);
        field.value(x) / (c * c)
    })
}

/// Removes the `c^-2`-moment of `u1` by subtracting a multiple of a
/// reference bump supported in the data's ball.
pub fn project_moment_zero(
    data: &InitialData,
    profile: &WavespeedProfile,
    h: f64,
) -> Result<InitialData> {
    if profile.dim != DimMode::Plane2D {
        return Err(Error::param(
            "dim",
            "moment projection applies to plane-2d data",
        ));
    }
    data.check_dim(profile.dim)?;
    let support = data.support_radius();
    let radius = if support > 0.0 { support } else { 1.0 };
    let reference = Field::centered_bump(radius, 1.0, 4);
    let grid = Grid::covering(profile.dim, h, radius.max(support) + 2.0 * h);
    let ref_moment = weighted_moment(&reference, &grid, profile);
    if !(ref_moment.abs() > f64::MIN_POSITIVE) {
        return Err(Error::Hypothesis(
            "reference bump has zero c^-2 moment on this grid".into(),
        ));
    }
    let lambda = weighted_moment(&data.u1, &grid, profile) / ref_moment;
    if lambda == 0.0 {
        return Ok(data.clone());
    }
    let u1 = Field::sum(vec![data.u1.clone(), reference.scaled(-lambda)]);
    Ok(InitialData::new(data.u0.clone(), u1))
}
