//! Analytic scalar fields used as initial data.
//!
//! Every field is a finite combination of compactly supported polynomial
//! bumps `A (1 - |x - x0|^2 / rho^2)^p` and their directional derivatives,
//! so values, gradients and the few antiderivatives the closed-form
//! oracles need are all exact.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::medium::DimMode;

/// A point in up to three dimensions; unused trailing coordinates are zero.
pub type Point = [f64; 3];

pub(crate) fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn pad_point<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Point, D::Error> {
    let v: Vec<f64> = Vec::deserialize(d)?;
    if v.len() > 3 {
        return Err(serde::de::Error::custom(
            "points have at most 3 coordinates",
        ));
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(&v);
    Ok(p)
}

fn origin() -> Point {
    [0.0; 3]
}

fn default_power() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Field {
    Zero,
    /// `amplitude * (1 - |x - center|^2 / radius^2)^power` inside the ball.
    Bump {
        #[serde(default = "origin", deserialize_with = "pad_point")]
        center: Point,
        radius: f64,
        amplitude: f64,
        #[serde(default = "default_power")]
        power: u32,
    },
    /// Partial derivative of the matching bump along `axis`.
    BumpSlope {
        #[serde(default = "origin", deserialize_with = "pad_point")]
        center: Point,
        radius: f64,
        amplitude: f64,
        #[serde(default = "default_power")]
        power: u32,
        axis: usize,
    },
    Sum {
        terms: Vec<Field>,
    },
}

impl Default for Field {
    fn default() -> Self {
        Field::Zero
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

struct BumpGeom {
    d: Point,
    q: f64,
}

fn geom(x: &Point, center: &Point, radius: f64) -> Option<BumpGeom> {
    let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
    let q = 1.0 - dot(&d, &d) / (radius * radius);
    (q > 0.0).then_some(BumpGeom { d, q })
}

impl Field {
    pub fn bump(center: Point, radius: f64, amplitude: f64, power: u32) -> Self {
        Field::Bump {
            center,
            radius,
            amplitude,
            power,
        }
    }

    pub fn centered_bump(radius: f64, amplitude: f64, power: u32) -> Self {
        Self::bump(origin(), radius, amplitude, power)
    }

    pub fn bump_slope(center: Point, radius: f64, amplitude: f64, power: u32, axis: usize) -> Self {
        Field::BumpSlope {
            center,
            radius,
            amplitude,
            power,
            axis,
        }
    }

    pub fn sum(terms: Vec<Field>) -> Self {
        Field::Sum { terms }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Bump {
                center,
                radius,
                amplitude,
                power,
            } => match geom(x, center, *radius) {
                Some(g) => amplitude * g.q.powi(*power as i32),
                None => 0.0,
            },
            Field::BumpSlope {
                center,
                radius,
                amplitude,
                power,
                axis,
            } => match geom(x, center, *radius) {
                Some(g) => {
                    let p = f64::from(*power);
                    amplitude * p * g.q.powi(*power as i32 - 1) * (-2.0 * g.d[*axis])
                        / (radius * radius)
                }
                None => 0.0,
            },
            Field::Sum { terms } => terms.iter().map(|f| f.value(x)).sum(),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match self {
            Field::Zero => [0.0; 3],
            Field::Bump {
                center,
                radius,
                amplitude,
                power,
            } => match geom(x, center, *radius) {
                Some(g) => {
                    let p = f64::from(*power);
                    let k =
                        amplitude * p * g.q.powi(*power as i32 - 1) * (-2.0) / (radius * radius);
                    [k * g.d[0], k * g.d[1], k * g.d[2]]
                }
                None => [0.0; 3],
            },
            Field::BumpSlope {
                center,
                radius,
                amplitude,
                power,
                axis,
            } => match geom(x, center, *radius) {
                Some(g) => {
                    let p = f64::from(*power);
                    let r2 = radius * radius;
                    let second = if *power >= 2 {
                        amplitude * p * (p - 1.0) * g.q.powi(*power as i32 - 2) * 4.0 / (r2 * r2)
                    } else {
                        0.0
                    };
                    let first = amplitude * p * g.q.powi(*power as i32 - 1) * (-2.0) / r2;
                    let mut out = [0.0; 3];
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = second * g.d[*axis] * g.d[j] + if j == *axis { first } else { 0.0 };
                    }
                    out
                }
                None => [0.0; 3],
            },
            Field::Sum { terms } => terms.iter().fold([0.0; 3], |acc, f| {
                let g = f.gradient(x);
                [acc[0] + g[0], acc[1] + g[1], acc[2] + g[2]]
            }),
        }
    }

    /// Radius of the smallest origin-centered ball containing the support.
    pub fn support_radius(&self) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Bump { center, radius, .. } | Field::BumpSlope { center, radius, .. } => {
                norm(center) + radius
            }
            Field::Sum { terms } => terms.iter().map(Field::support_radius).fold(0.0, f64::max),
        }
    }

    pub fn scaled(&self, factor: f64) -> Field {
        match self {
            Field::Zero => Field::Zero,
            Field::Bump {
                center,
                radius,
                amplitude,
                power,
            } => Field::bump(*center, *radius, amplitude * factor, *power),
            Field::BumpSlope {
                center,
                radius,
                amplitude,
                power,
                axis,
            } => Field::bump_slope(*center, *radius, amplitude * factor, *power, *axis),
            Field::Sum { terms } => Field::sum(terms.iter().map(|f| f.scaled(factor)).collect()),
        }
    }

    /// True when the field depends on `|x|` only.
    pub fn is_radial(&self) -> bool {
        match self {
            Field::Zero => true,
            Field::Bump { center, .. } => norm(center) == 0.0,
            Field::BumpSlope { .. } => false,
            Field::Sum { terms } => terms.iter().all(Field::is_radial),
        }
    }

    /// Checks that the field lives in the coordinates used by `dim`.
    pub fn check_dim(&self, dim: DimMode) -> Result<()> {
        let bad = |reason: &str| Err(Error::param("field", reason.to_string()));
        match (self, dim) {
            (Field::Zero, _) => Ok(()),
            (Field::Sum { terms }, _) => terms.iter().try_for_each(|f| f.check_dim(dim)),
            (_, DimMode::Radial3D) if !self.is_radial() => {
                bad("radial-3d data must be origin-centered bumps")
            }
            (
                Field::Bump {
                    center,
                    radius,
                    power,
                    ..
                }
                | Field::BumpSlope {
                    center,
                    radius,
                    power,
                    ..
                },
                _,
            ) => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("bump radius must be positive");
                }
                if *power == 0 {
                    return bad("bump power must be at least 1");
                }
                let used = match dim {
                    DimMode::Line1D => 1,
                    DimMode::Plane2D => 2,
                    DimMode::Radial3D => 3,
                };
                if dim != DimMode::Radial3D && center[used..].iter().any(|&c| c != 0.0) {
                    return bad("center has coordinates outside the simulated dimensions");
                }
                if let Field::BumpSlope { axis, .. } = self {
                    if *axis >= used {
                        return bad("slope axis outside the simulated dimensions");
                    }
                }
                Ok(())
            }
        }
    }

    /// `int_{-inf}^{x} f(s, 0, 0) ds` for a field on the line.
    pub fn line_antiderivative(&self, x: f64) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Bump {
                center,
                radius,
                amplitude,
                power,
            } => {
                let sigma = ((x - center[0]) / radius).clamp(-1.0, 1.0);
                let series: f64 = (0..=*power)
                    .map(|k| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        let e = 2 * k as i32 + 1;
                        sign * binomial(*power, k) * (sigma.powi(e) + 1.0) / f64::from(e)
                    })
                    .sum();
                amplitude * radius * series
            }
            Field::BumpSlope { axis, .. } => {
                if *axis == 0 {
                    let base = self.base_bump();
                    base.value(&[x, 0.0, 0.0])
                } else {
                    0.0
                }
            }
            Field::Sum { terms } => terms.iter().map(|f| f.line_antiderivative(x)).sum(),
        }
    }

    /// `int_0^r s f(s) ds` for a radial field.
    pub fn radial_first_moment(&self, r: f64) -> Result<f64> {
        match self {
            Field::Zero => Ok(0.0),
            Field::Bump {
                center,
                radius,
                amplitude,
                power,
            } if norm(center) == 0.0 => {
                let q = (1.0 - (r * r) / (radius * radius)).max(0.0);
                let p1 = *power as i32 + 1;
                Ok(amplitude * radius * radius / (2.0 * f64::from(p1)) * (1.0 - q.powi(p1)))
            }
            Field::Sum { terms } => terms.iter().map(|f| f.radial_first_moment(r)).sum(),
            _ => Err(Error::NoClosedForm(
                "radial moment of a non-radial field".into(),
            )),
        }
    }

    fn base_bump(&self) -> Field {
        match self {
            Field::BumpSlope {
                center,
                radius,
                amplitude,
                power,
                ..
            } => Field::bump(*center, *radius, *amplitude, *power),
            other => other.clone(),
        }
    }
}

/// Cauchy data `(u0, u1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub u0: Field,
    pub u1: Field,
}

impl InitialData {
    pub fn new(u0: Field, u1: Field) -> Self {
        Self { u0, u1 }
    }

    pub fn support_radius(&self) -> f64 {
        self.u0.support_radius().max(self.u1.support_radius())
    }

    pub fn check_dim(&self, dim: DimMode) -> Result<()> {
        self.u0.check_dim(dim)?;
        self.u1.check_dim(dim)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.u0.scaled(factor), self.u1.scaled(factor))
    }

    /// Right-moving pulse on the line: `u0 = g`, `u1 = -g'`.
    pub fn right_moving_pulse(center: f64, radius: f64, amplitude: f64, power: u32) -> Self {
        let c = [center, 0.0, 0.0];
        Self::new(
            Field::bump(c, radius, amplitude, power),
            Field::bump_slope(c, radius, -amplitude, power, 0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &Field, x: &Point) -> Point {
        let h = 1e-6;
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate() {
            let mut a = *x;
            let mut b = *x;
            a[j] += h;
            b[j] -= h;
            *gj = (f.value(&a) - f.value(&b)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fields = [
            Field::bump([0.3, -0.2, 0.0], 1.3, 2.0, 4),
            Field::bump_slope([0.1, 0.4, 0.0], 0.9, -1.5, 5, 1),
            Field::sum(vec![
                Field::centered_bump(1.0, 1.0, 3),
                Field::bump_slope([0.0; 3], 1.0, 1.0, 3, 0),
            ]),
        ];
        for f in &fields {
            for x in [[0.2, 0.1, 0.0], [-0.5, 0.3, 0.0], [0.05, -0.6, 0.0]] {
                let g = f.gradient(&x);
                let fd = fd_gradient(f, &x);
                for j in 0..3 {
                    assert!(
                        (g[j] - fd[j]).abs() < 1e-6,
                        "{f:?} at {x:?}: {g:?} vs {fd:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let f = Field::bump([1.0, 0.0, 0.0], 0.5, 3.0, 4);
        assert_eq!(f.value(&[1.5, 0.0, 0.0]), 0.0);
        assert_eq!(f.value(&[2.0, 0.0, 0.0]), 0.0);
        assert_eq!(f.support_radius(), 1.5);
    }

    #[test]
    fn line_antiderivative_matches_quadrature() {
        let f = Field::bump([0.4, 0.0, 0.0], 1.1, 1.7, 4);
        let n = 200_000;
        let (a, b) = (-1.0, 0.9);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            acc += f.value(&[x, 0.0, 0.0]) * h;
        }
        let exact = f.line_antiderivative(b) - f.line_antiderivative(a);
        assert!((acc - exact).abs() < 1e-9, "{acc} vs {exact}");
        // full mass is reached past the support
        let total = f.line_antiderivative(10.0);
        assert!((f.line_antiderivative(3.0) - total).abs() < 1e-15);
    }

    #[test]
    fn radial_moment_matches_quadrature() {
        let f = Field::centered_bump(1.2, 0.8, 5);
        let n = 100_000;
        let r_end = 0.9;
        let h = r_end / n as f64;
        let acc: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                s * f.value(&[s, 0.0, 0.0]) * h
            })
            .sum();
        assert!((acc - f.radial_first_moment(r_end).unwrap()).abs() < 1e-10);
        assert!(Field::bump_slope([0.0; 3], 1.0, 1.0, 3, 0)
            .radial_first_moment(0.5)
            .is_err());
    }

    #[test]
    fn dimension_checks() {
        let off_axis = Field::bump([0.0, 1.0, 0.0], 1.0, 1.0, 4);
        assert!(off_axis.check_dim(DimMode::Line1D).is_err());
        assert!(off_axis.check_dim(DimMode::Plane2D).is_ok());
        assert!(off_axis.check_dim(DimMode::Radial3D).is_err());
        assert!(Field::centered_bump(1.0, 1.0, 4)
            .check_dim(DimMode::Radial3D)
            .is_ok());
    }

    #[test]
    fn parses_short_centers() {
        let f: Field =
            serde_json::from_str(r#"{"kind":"bump","center":[0.5],"radius":1.0,"amplitude":2.0}"#)
                .unwrap();
        assert_eq!(f, Field::bump([0.5, 0.0, 0.0], 1.0, 2.0, 4));
    }
}
