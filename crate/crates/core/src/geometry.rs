//! Domains of double and triple revolution, coordinate maps, the measure
//! weight of the reduced problem, and closed-form exponent calculators.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Block structure `ℝ^N = ℝ^m × ℝ^n [× ℝ^l]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RevolutionSplit {
    parts: Vec<usize>,
}

impl RevolutionSplit {
    pub fn new(parts: &[usize]) -> Result<Self> {
        if parts.len() != 2 && parts.len() != 3 {
            return Err(Error::InvalidSplit(format!(
                "expected 2 or 3 parts, got {}",
                parts.len()
            )));
        }
        if let Some(bad) = parts.iter().find(|&&k| k == 0) {
            return Err(Error::InvalidSplit(format!("parts must be >= 1, got {bad}")));
        }
        let dim: usize = parts.iter().sum();
        if dim < 3 {
            return Err(Error::InvalidSplit(format!("dimension {dim} < 3")));
        }
        Ok(Self {
            parts: parts.to_vec(),
        })
    }

    pub fn double(m: usize, n: usize) -> Result<Self> {
        Self::new(&[m, n])
    }

    pub fn triple(m: usize, n: usize, l: usize) -> Result<Self> {
        Self::new(&[m, n, l])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn dim(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn is_triple(&self) -> bool {
        self.parts.len() == 3
    }

    pub fn m(&self) -> usize {
        self.parts[0]
    }

    pub fn n(&self) -> usize {
        self.parts[1]
    }

    /// Third block dimension; zero for a double split.
    pub fn l(&self) -> usize {
        self.parts.get(2).copied().unwrap_or(0)
    }
}

impl TryFrom<Vec<usize>> for RevolutionSplit {
    type Error = Error;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Self::new(&parts)
    }
}

impl From<RevolutionSplit> for Vec<usize> {
    fn from(split: RevolutionSplit) -> Self {
        split.parts
    }
}

impl FromStr for RevolutionSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSplit(format!("cannot parse '{p}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&parts)
    }
}

impl fmt::Display for RevolutionSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

pub fn polar_to_st(r: f64, theta: f64) -> (f64, f64) {
    (r * theta.cos(), r * theta.sin())
}

pub fn st_to_polar(s: f64, t: f64) -> (f64, f64) {
    (s.hypot(t), t.atan2(s))
}

pub fn spherical_to_stt(r: f64, theta: f64, phi: f64) -> (f64, f64, f64) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (r * st * cp, r * st * sp, r * ct)
}

pub fn stt_to_spherical(s: f64, t: f64, tau: f64) -> (f64, f64, f64) {
    let rho = s.hypot(t);
    (rho.hypot(tau), rho.atan2(tau), t.atan2(s))
}

/// Drift coefficient of the reduced polar operator, `(m-1) tan θ - (n-1)/tan θ`.
pub fn h_double(m: usize, n: usize, theta: f64) -> f64 {
    (m as f64 - 1.0) * theta.tan() - (n as f64 - 1.0) / theta.tan()
}

/// Drift coefficient in the azimuthal variable of the triple operator.
pub fn h_triple(phi: f64) -> f64 {
    phi.tan() - 1.0 / phi.tan()
}

/// Angular part of the measure for a double split: `cos^{m-1}θ sin^{n-1}θ`.
pub fn double_angular_weight(m: usize, n: usize, theta: f64) -> f64 {
    powi(theta.cos(), m as i32 - 1) * powi(theta.sin(), n as i32 - 1)
}

/// Polar-angle part of the triple measure: `sin^{m+n-1}θ cos^{l-1}θ`.
pub fn triple_theta_weight(m: usize, n: usize, l: usize, theta: f64) -> f64 {
    powi(theta.sin(), (m + n) as i32 - 1) * powi(theta.cos(), l as i32 - 1)
}

/// Azimuthal part of the triple measure: `cos^{m-1}φ sin^{n-1}φ`.
pub fn triple_phi_weight(m: usize, n: usize, phi: f64) -> f64 {
    double_angular_weight(m, n, phi)
}

fn powi(x: f64, k: i32) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Polar { r: f64, theta: f64 },
    Spherical { r: f64, theta: f64, phi: f64 },
}

/// Density of `dx` in reduced coordinates, with the block-sphere constant
/// fixed to 1.
pub fn measure_weight_split(point: Point, split: &RevolutionSplit) -> f64 {
    let big_n = split.dim() as i32;
    match point {
        Point::Polar { r, theta } => {
            powi(r, big_n - 1) * double_angular_weight(split.m(), split.n(), theta)
        }
        Point::Spherical { r, theta, phi } => {
            powi(r, big_n - 1)
                * triple_theta_weight(split.m(), split.n(), split.l().max(1), theta)
                * triple_phi_weight(split.m(), split.n(), phi)
        }
    }
}

pub fn measure_weight(point: Point, domain: &Domain) -> f64 {
    measure_weight_split(point, &domain.split)
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson limiting, so
/// monotone samples give a monotone C¹ profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidDomain(
                "tabulated profile needs at least two (x, y) samples of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDomain(
                "tabulated profile abscissae must be strictly increasing".into(),
            ));
        }
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                (delta[i - 1] + delta[i]) / 2.0
            };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / delta[i];
            let b = slopes[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[i] = tau * a * delta[i];
                slopes[i + 1] = tau * b * delta[i];
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Radial boundary profile `r = g(angle)`, where the angle is θ for double
/// revolution and φ for triple revolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Profile {
    Constant { radius: f64 },
    /// `base + amp (1 - cos(freq·angle)) / 2`
    CosineBump { base: f64, amp: f64, freq: f64 },
    Tabulated { spline: MonotoneSpline },
}

impl Profile {
    pub fn eval(&self, angle: f64) -> f64 {
        match self {
            Profile::Constant { radius } => *radius,
            Profile::CosineBump { base, amp, freq } => {
                base + amp * (1.0 - (freq * angle).cos()) / 2.0
            }
            Profile::Tabulated { spline } => spline.eval(angle),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    AnnularProfile,
    Ball,
    TruncatedFullSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    Pi2Annular,
    Pi4Annular,
    TripleKMinus,
    TripleKPlus,
    TripleKMinusPi2,
}

impl SymmetryClass {
    pub fn is_triple(self) -> bool {
        matches!(
            self,
            SymmetryClass::TripleKMinus | SymmetryClass::TripleKPlus | SymmetryClass::TripleKMinusPi2
        )
    }

    /// Upper end of the monotone angle's default box: θ for double classes,
    /// φ for triple classes.
    pub fn monotone_box_top(self) -> f64 {
        match self {
            SymmetryClass::Pi2Annular | SymmetryClass::TripleKMinusPi2 => FRAC_PI_2,
            _ => FRAC_PI_4,
        }
    }
}

impl FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "pi2-annular" => SymmetryClass::Pi2Annular,
            "pi4-annular" => SymmetryClass::Pi4Annular,
            "triple-K-" => SymmetryClass::TripleKMinus,
            "triple-K+" => SymmetryClass::TripleKPlus,
            "triple-K-pi2" => SymmetryClass::TripleKMinusPi2,
            other => return Err(Error::InvalidDomain(format!("unknown symmetry class '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub split: RevolutionSplit,
    pub kind: DomainKind,
    pub g1: Profile,
    pub g2: Profile,
    pub symmetry_class: SymmetryClass,
}

impl Domain {
    pub fn annulus(split: RevolutionSplit, r1: f64, r2: f64, class: SymmetryClass) -> Result<Self> {
        Self::with_profiles(
            format!("annulus({r1},{r2})"),
            split,
            DomainKind::AnnularProfile,
            Profile::Constant { radius: r1 },
            Profile::Constant { radius: r2 },
            class,
        )
    }

    pub fn ball(split: RevolutionSplit, class: SymmetryClass) -> Result<Self> {
        Self::with_profiles(
            "ball".into(),
            split,
            DomainKind::Ball,
            Profile::Constant { radius: 0.0 },
            Profile::Constant { radius: 1.0 },
            class,
        )
    }

    /// Stand-in for ℝ^N: the ball of radius `radius` with a Dirichlet condition.
    pub fn truncated_rn(split: RevolutionSplit, radius: f64, class: SymmetryClass) -> Result<Self> {
        Self::with_profiles(
            format!("truncated-rn({radius})"),
            split,
            DomainKind::TruncatedFullSpace,
            Profile::Constant { radius: 0.0 },
            Profile::Constant { radius },
            class,
        )
    }

    /// Annular domain whose inner radius rises and outer radius falls by
    /// `amp` between the axis and the diagonal.
    pub fn pi4_bump(
        split: RevolutionSplit,
        r1: f64,
        r2: f64,
        amp: f64,
        class: SymmetryClass,
    ) -> Result<Self> {
        Self::with_profiles(
            format!("pi4-bump({r1},{r2},{amp})"),
            split,
            DomainKind::AnnularProfile,
            Profile::CosineBump {
                base: r1,
                amp,
                freq: 4.0,
            },
            Profile::CosineBump {
                base: r2,
                amp: -amp,
                freq: 4.0,
            },
            class,
        )
    }

    pub fn with_profiles(
        id: String,
        split: RevolutionSplit,
        kind: DomainKind,
        g1: Profile,
        g2: Profile,
        symmetry_class: SymmetryClass,
    ) -> Result<Self> {
        let d = Self {
            id,
            split,
            kind,
            g1,
            g2,
            symmetry_class,
        };
        d.validate()?;
        Ok(d)
    }

    /// Parses the preset ids `annulus(R1,R2)`, `ball`, `pi4-bump(R1,R2,amp)`
    /// and `truncated-rn(R)`.
    pub fn from_preset(id: &str, split: RevolutionSplit, class: SymmetryClass) -> Result<Self> {
        let id = id.trim();
        let (name, args) = match id.find('(') {
            Some(open) => {
                if !id.ends_with(')') {
                    return Err(Error::InvalidDomain(format!("unbalanced parentheses in '{id}'")));
                }
                let args = id[open + 1..id.len() - 1]
                    .split(',')
                    .map(|a| {
                        a.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidDomain(format!("bad number '{a}' in '{id}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (&id[..open], args)
            }
            None => (id, Vec::new()),
        };
        let arity = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!(
                    "'{name}' takes {k} argument(s), got {}",
                    args.len()
                )))
            }
        };
        match name {
            "annulus" => {
                arity(2)?;
                Self::annulus(split, args[0], args[1], class)
            }
            "ball" => {
                arity(0)?;
                Self::ball(split, class)
            }
            "pi4-bump" => {
                arity(3)?;
                Self::pi4_bump(split, args[0], args[1], args[2], class)
            }
            "truncated-rn" => {
                arity(1)?;
                Self::truncated_rn(split, args[0], class)
            }
            other => Err(Error::InvalidDomain(format!("unknown domain preset '{other}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.split.dim()
    }

    pub fn is_bounded_away_from_origin(&self) -> bool {
        self.kind == DomainKind::AnnularProfile
    }

    /// True when both profiles are constant, i.e. the domain is radial.
    pub fn is_radial(&self) -> bool {
        self.g1.is_constant() && self.g2.is_constant()
    }

    pub fn inner_radius(&self, angle: f64) -> f64 {
        match self.kind {
            DomainKind::AnnularProfile => self.g1.eval(angle),
            _ => 0.0,
        }
    }

    pub fn outer_radius(&self, angle: f64) -> f64 {
        self.g2.eval(angle)
    }

    /// Box of the polar angle θ.
    pub fn theta_box(&self) -> f64 {
        if self.split.is_triple() {
            FRAC_PI_2
        } else {
            self.symmetry_class.monotone_box_top()
        }
    }

    /// Box of the azimuthal angle φ (triple revolution only).
    pub fn phi_box(&self) -> Option<f64> {
        self.split
            .is_triple()
            .then(|| self.symmetry_class.monotone_box_top())
    }

    fn validate(&self) -> Result<()> {
        if self.split.is_triple() != self.symmetry_class.is_triple() {
            return Err(Error::InvalidDomain(format!(
                "symmetry class {:?} does not fit split ({})",
                self.symmetry_class, self.split
            )));
        }
        let samples = 257;
        let full = FRAC_PI_2;
        let mono_top = self.symmetry_class.monotone_box_top();
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..samples {
            let a = full * k as f64 / (samples - 1) as f64;
            let g1 = self.inner_radius(a);
            let g2 = self.outer_radius(a);
            if !(g1.is_finite() && g2.is_finite()) {
                return Err(Error::InvalidDomain("non-finite profile value".into()));
            }
            match self.kind {
                DomainKind::AnnularProfile if g1 <= 0.0 => {
                    return Err(Error::InvalidDomain(format!("g1 = {g1} <= 0 at angle {a}")));
                }
                _ => {}
            }
            if g2 <= g1 {
                return Err(Error::InvalidDomain(format!(
                    "g2 = {g2} <= g1 = {g1} at angle {a}"
                )));
            }
            if a <= mono_top + 1e-12 {
                if let Some((p1, p2)) = prev {
                    let tol = 1e-12 * g2.abs().max(1.0);
                    if self.symmetry_class != SymmetryClass::TripleKPlus && (g1 < p1 - tol || g2 > p2 + tol) {
                        return Err(Error::InvalidDomain(format!(
                            "profiles must have g1 increasing and g2 decreasing on (0, {mono_top:.4})"
                        )));
                    }
                }
                prev = Some((g1, g2));
            }
            if mono_top < full {
                let mirror = full - a;
                let tol = 1e-9 * g2.abs().max(1.0);
                if (self.inner_radius(mirror) - g1).abs() > tol
                    || (self.outer_radius(mirror) - g2).abs() > tol
                {
                    return Err(Error::InvalidDomain(
                        "profiles must be even across the quarter angle".into(),
                    ));
                }
            }
        }
        if self.symmetry_class == SymmetryClass::TripleKPlus && !self.is_radial() {
            return Err(Error::InvalidDomain(
                "triple K+ domains need profiles constant in the azimuthal angle".into(),
            ));
        }
        Ok(())
    }
}

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn serialize_extended_opt<S: Serializer>(
    v: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => serialize_extended(x, s),
        None => s.serialize_none(),
    }
}

/// `2(k+1)/(k-1)`, the critical exponent of dimension `k+1`; `+∞` for `k = 1`.
pub fn critical_exponent_plus_one(k: usize) -> f64 {
    if k <= 1 {
        f64::INFINITY
    } else {
        2.0 * (k as f64 + 1.0) / (k as f64 - 1.0)
    }
}

/// Open interval of admissible exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentWindow {
    #[serde(serialize_with = "serialize_extended")]
    pub lower: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub upper: f64,
}

impl ExponentWindow {
    pub fn contains(&self, p: f64) -> bool {
        p > self.lower && p < self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub split: Vec<usize>,
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub two_star: f64,
    #[serde(rename = "theoremA_no_mono", serialize_with = "serialize_extended_opt")]
    pub embedding_no_mono: Option<f64>,
    #[serde(rename = "theoremA_mono", serialize_with = "serialize_extended_opt")]
    pub embedding_mono: Option<f64>,
    /// `(2N+4)/(N-2)`, reported for `m = n`.
    #[serde(serialize_with = "serialize_extended_opt")]
    pub pi4_annular_upper: Option<f64>,
    #[serde(serialize_with = "serialize_extended_opt")]
    pub p1: Option<f64>,
    #[serde(serialize_with = "serialize_extended_opt")]
    pub p2: Option<f64>,
    #[serde(serialize_with = "serialize_extended_opt")]
    pub p3: Option<f64>,
    pub henon_upper: f64,
    pub fullspace_window: ExponentWindow,
    /// `(2N+2α-4)/(N-2)`, reported for `α > 2`.
    #[serde(serialize_with = "serialize_extended_opt")]
    pub singular_upper: Option<f64>,
    pub breaking_threshold: f64,
}

pub fn exponent_report(split: &RevolutionSplit, alpha: f64, beta: f64) -> Result<ExponentReport> {
    let big_n = split.dim();
    if big_n < 3 {
        return Err(Error::InvalidSplit(format!("dimension {big_n} < 3")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be > 0, got {beta}")));
    }
    let nf = big_n as f64;
    let (m, n) = (split.m(), split.n());
    let two_star = 2.0 * nf / (nf - 2.0);

    let (embedding_no_mono, embedding_mono, pi4_annular_upper, p1, p2, p3) = if split.is_triple() {
        let l = split.l();
        let pair = |a: usize, b: usize| critical_exponent_plus_one(a + b);
        let p1 = pair(n, m).min(pair(m, l)).min(pair(n, l));
        let p2 = pair(n, m).min(pair(n, l));
        let p3 = (2.0 * (l as f64 + 2.0) / l as f64).min(pair(n, m));
        (None, None, None, Some(p1), Some(p2), Some(p3))
    } else {
        let no_mono = critical_exponent_plus_one(n).min(critical_exponent_plus_one(m));
        let mono = critical_exponent_plus_one(m.min(n));
        let pi4 = (m == n).then(|| (2.0 * nf + 4.0) / (nf - 2.0));
        (Some(no_mono), Some(mono), pi4, None, None, None)
    };

    let henon_upper = (2.0 * nf + 2.0 * alpha) / (nf - 2.0);
    let fullspace_window = ExponentWindow {
        lower: ((2.0 * nf + 2.0 * alpha - 4.0) / (nf - 2.0)).max(2.0),
        upper: henon_upper,
    };
    let singular_upper = (alpha > 2.0).then(|| (2.0 * nf + 2.0 * alpha - 4.0) / (nf - 2.0));

    Ok(ExponentReport {
        split: split.parts().to_vec(),
        dim: big_n,
        alpha,
        beta,
        two_star,
        embedding_no_mono,
        embedding_mono,
        pi4_annular_upper,
        p1,
        p2,
        p3,
        henon_upper,
        fullspace_window,
        singular_upper,
        breaking_threshold: 4.0 * (nf + 2.0) / beta + 2.0,
    })
}
