//! Convex cones of nonnegative, symmetric, angularly monotone fields:
//! membership reports and the clamp → symmetrize → rearrange projection.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discretize::{Field, Grid};
use crate::error::{Error, Result};
use crate::geometry::SymmetryClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeSpec {
    #[serde(rename = "K+")]
    KPlus,
    #[serde(rename = "K-")]
    KMinus,
    #[serde(rename = "K-pi2")]
    KMinusPi2,
    #[serde(rename = "K3+")]
    K3Plus,
    #[serde(rename = "K3-")]
    K3Minus,
    #[serde(rename = "K3-pi2")]
    K3MinusPi2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotoneAxis {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl ConeSpec {
    pub fn monotone_axis(self) -> MonotoneAxis {
        match self {
            ConeSpec::KPlus | ConeSpec::KMinus | ConeSpec::KMinusPi2 => MonotoneAxis::Theta,
            _ => MonotoneAxis::Phi,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            ConeSpec::KPlus | ConeSpec::K3Plus => Direction::Increasing,
            _ => Direction::Decreasing,
        }
    }

    /// Whether members are even across the quarter angle.
    pub fn even(self) -> bool {
        !matches!(self, ConeSpec::KMinusPi2 | ConeSpec::K3MinusPi2)
    }

    /// Upper end of the interval on which monotonicity is imposed.
    pub fn monotone_top(self) -> f64 {
        if self.even() {
            FRAC_PI_4
        } else {
            FRAC_PI_2
        }
    }

    pub fn is_triple(self) -> bool {
        self.monotone_axis() == MonotoneAxis::Phi
    }

    pub fn symmetry_class(self) -> SymmetryClass {
        match self {
            ConeSpec::KPlus | ConeSpec::KMinus => SymmetryClass::Pi4Annular,
            ConeSpec::KMinusPi2 => SymmetryClass::Pi2Annular,
            ConeSpec::K3Plus => SymmetryClass::TripleKPlus,
            ConeSpec::K3Minus => SymmetryClass::TripleKMinus,
            ConeSpec::K3MinusPi2 => SymmetryClass::TripleKMinusPi2,
        }
    }

    /// Cone whose monotonicity box matches the given symmetry class, with the
    /// decreasing direction.
    pub fn default_for(class: SymmetryClass) -> Self {
        match class {
            SymmetryClass::Pi4Annular => ConeSpec::KMinus,
            SymmetryClass::Pi2Annular => ConeSpec::KMinusPi2,
            SymmetryClass::TripleKMinus => ConeSpec::K3Minus,
            SymmetryClass::TripleKPlus => ConeSpec::K3Plus,
            SymmetryClass::TripleKMinusPi2 => ConeSpec::K3MinusPi2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConeSpec::KPlus => "K+",
            ConeSpec::KMinus => "K-",
            ConeSpec::KMinusPi2 => "K-pi2",
            ConeSpec::K3Plus => "K3+",
            ConeSpec::K3Minus => "K3-",
            ConeSpec::K3MinusPi2 => "K3-pi2",
        }
    }

    /// Checks that the grid's monotone axis is either the cone's half box or,
    /// for even cones, the full quarter-turn box. Returns true for a full box.
    fn check_box(self, grid: &Grid) -> Result<bool> {
        if self.is_triple() != grid.is_triple() {
            return Err(Error::BoxMismatch(format!(
                "cone {} does not act on a {} grid",
                self.name(),
                if grid.is_triple() { "triple" } else { "double" }
            )));
        }
        let top = grid.monotone_axis().top;
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        if close(top, self.monotone_top()) {
            Ok(false)
        } else if self.even() && close(top, FRAC_PI_2) {
            Ok(true)
        } else {
            Err(Error::BoxMismatch(format!(
                "cone {} needs a box of width {:.4}, grid has {:.4}",
                self.name(),
                self.monotone_top(),
                top
            )))
        }
    }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "K+" => ConeSpec::KPlus,
            "K-" => ConeSpec::KMinus,
            "K-pi2" => ConeSpec::KMinusPi2,
            "K3+" => ConeSpec::K3Plus,
            "K3-" => ConeSpec::K3Minus,
            "K3-pi2" => ConeSpec::K3MinusPi2,
            other => return Err(Error::InvalidInput(format!("unknown cone '{other}'"))),
        })
    }
}

/// Worst-case violations of the three cone conditions. Monotonicity is
/// measured as the largest wrong-signed difference quotient along the
/// monotone axis, so it carries units of value per radian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MembershipReport {
    pub nonneg_violation: f64,
    pub monotonicity_violation: f64,
    pub evenness_violation: f64,
    pub tolerance: f64,
    pub is_member: bool,
}

impl MembershipReport {
    pub fn worst(&self) -> f64 {
        self.nonneg_violation
            .max(self.monotonicity_violation)
            .max(self.evenness_violation)
    }
}

/// Lines along the monotone axis are contiguous runs of length
/// `grid.monotone_axis().len()` in the flat node ordering.
fn lines(grid: &Grid) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
    let len = grid.monotone_axis().len();
    (0..grid.len() / len).map(move |q| q * len..(q + 1) * len)
}

pub fn is_member(field: &Field, cone: ConeSpec, tol: f64) -> Result<MembershipReport> {
    let grid = &field.grid;
    let full = cone.check_box(grid)?;
    let u = &field.values;
    let axis = grid.monotone_axis();
    let step = axis.step();
    let half = if full { axis.len() / 2 } else { axis.len() };
    let sign = match cone.direction() {
        Direction::Increasing => -1.0,
        Direction::Decreasing => 1.0,
    };

    let mut nonneg: f64 = 0.0;
    let mut mono: f64 = 0.0;
    let mut even: f64 = 0.0;
    for line in lines(grid) {
        let start = line.start;
        let mut prev: Option<f64> = None;
        for j in 0..axis.len() {
            let p = start + j;
            if !grid.active[p] {
                continue;
            }
            nonneg = nonneg.max(-u[p]);
            if full {
                let q = start + axis.mirror(j);
                if grid.active[q] {
                    even = even.max((u[p] - u[q]).abs());
                }
            }
            if j < half {
                if let Some(pv) = prev {
                    mono = mono.max(sign * (u[p] - pv) / step);
                }
                prev = Some(u[p]);
            }
        }
    }
    Ok(MembershipReport {
        nonneg_violation: nonneg,
        monotonicity_violation: mono,
        evenness_violation: even,
        tolerance: tol,
        is_member: nonneg <= tol && mono <= tol && even <= tol,
    })
}

/// Clamps negatives, averages mirror nodes (full boxes only), then sorts
/// each monotone line into the cone's order.
pub fn project(field: &Field, cone: ConeSpec) -> Result<Field> {
    let grid = &field.grid;
    let full = cone.check_box(grid)?;
    let axis = grid.monotone_axis();
    let n = axis.len();
    let half = if full { n / 2 } else { n };
    let mut v: Vec<f64> = field.values.iter().map(|&x| x.max(0.0)).collect();
    for (p, x) in v.iter_mut().enumerate() {
        if !grid.active[p] {
            *x = 0.0;
        }
    }
    let mut buf = Vec::with_capacity(n);
    for line in lines(grid) {
        let s = line.start;
        if full {
            for j in 0..half {
                let (p, q) = (s + j, s + axis.mirror(j));
                if grid.active[p] && grid.active[q] && v[p] != v[q] {
                    let avg = 0.5 * (v[p] + v[q]);
                    v[p] = avg;
                    v[q] = avg;
                }
            }
        }
        buf.clear();
        buf.extend((0..half).filter(|&j| grid.active[s + j]).map(|j| v[s + j]));
        match cone.direction() {
            Direction::Decreasing => buf.sort_by(|a, b| b.total_cmp(a)),
            Direction::Increasing => buf.sort_by(|a, b| a.total_cmp(b)),
        }
        let mut it = buf.iter();
        for j in 0..half {
            if grid.active[s + j] {
                let val = *it.next().unwrap();
                v[s + j] = val;
                if full {
                    let q = s + axis.mirror(j);
                    if grid.active[q] {
                        v[q] = val;
                    }
                }
            }
        }
    }
    Field::new(grid.clone(), v)
}
