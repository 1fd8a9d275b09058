//! Hardy constants and weighted angular Sturm-Liouville eigenpairs.
//!
//! All pencils `S x = μ M x` here have a symmetric band `S` and a diagonal
//! `M`. Eigenvalues are bracketed by bisection on the inertia of `S - σM`
//! and polished by shifted inverse iteration.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble, assemble_radial, build_grid_with, AngularAxis, Field, Grid, Potential, RadialGrid,
    RadialSpacing,
};
use crate::elliptic::SolveStats;
use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainKind};
use crate::linalg::{count_below, BandMatrix, CsrMatrix};

/// Required backward error of every returned eigenpair.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum SpectralVector {
    Field(Field),
    Profile(AngularProfile),
    Radial { r: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularProfile {
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    /// Weight at the cell centers.
    pub weight: Vec<f64>,
    /// Cell integrals of the weight.
    pub cell_measure: Vec<f64>,
    /// Weight at the cell faces.
    pub face_weight: Vec<f64>,
    pub top: f64,
}

impl AngularProfile {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,psi,weight")?;
        for i in 0..self.theta.len() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.theta[i], self.psi[i], self.weight[i])?;
        }
        Ok(())
    }

    /// `∫ ψ'² w` by face differences, the discrete Dirichlet form.
    pub fn gradient_sq(&self) -> f64 {
        let h = self.top / self.psi.len() as f64;
        (1..self.psi.len())
            .map(|j| self.face_weight[j] * (self.psi[j] - self.psi[j - 1]).powi(2) / h)
            .sum()
    }

    /// `∫ f g w` by the cell measures.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        (0..f.len()).map(|i| f[i] * g[i] * self.cell_measure[i]).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub value: f64,
    #[serde(skip)]
    pub vector: SpectralVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Backward error `‖Sx - μMx‖ / (‖S‖∞‖x‖ + |μ|‖M‖∞‖x‖)`.
fn backward_error(s: &CsrMatrix, m: &[f64], x: &[f64], mu: f64) -> f64 {
    let sx = s.matvec(x);
    let r: f64 = (0..x.len())
        .map(|i| (sx[i] - mu * m[i] * x[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    let s_norm = (0..s.n())
        .map(|i| s.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let m_norm = m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / ((s_norm + mu.abs() * m_norm) * xn)
}

fn not_converged(iterations: usize, residual: f64) -> Error {
    Error::NotConverged(SolveStats {
        iterations,
        final_relative_residual: residual,
        converged: false,
        backend: "shift-invert",
        trace: Vec::new(),
    })
}

fn count(s: &CsrMatrix, m: &[f64], sigma: f64, scale: f64) -> usize {
    // an exact hit on an eigenvalue gives a zero pivot; nudge the shift
    let mut shift = sigma;
    for k in 0..8 {
        if let Some(c) = count_below(s, m, shift) {
            return c;
        }
        shift = sigma + scale * 1e-14 * (k + 1) as f64;
    }
    count_below(s, m, shift).unwrap_or(0)
}

/// Eigenpair `index` (0-based) of the pencil, bracketed to relative width
/// `bracket_tol` and then polished by inverse iteration from below.
fn pencil_eigenpair(
    s: &CsrMatrix,
    m: &[f64],
    index: usize,
    upper: f64,
    start: &[f64],
) -> Result<(f64, Vec<f64>, usize, f64)> {
    let mut work = 0usize;
    let (mut lo, mut hi) = (0.0f64, upper);
    // allow a lower end below zero so a null mode is bracketed from below
    let floor = -1e-9 * upper.max(1.0);
    if count(s, m, 0.0, upper) > index {
        lo = floor;
    }
    work += 1;
    let mut c_hi = count(s, m, hi, upper);
    while c_hi <= index {
        hi *= 2.0;
        c_hi = count(s, m, hi, upper);
        work += 1;
        if !hi.is_finite() {
            return Err(not_converged(work, f64::INFINITY));
        }
    }
    // bisect until the bracket isolates the eigenvalue and is narrow
    loop {
        let width = hi - lo;
        let isolated = c_hi == index + 1;
        if (isolated && width <= 1e-9 * hi.abs().max(1e-300)) || width <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let c = count(s, m, mid, upper);
        if c <= index {
            lo = mid;
        } else {
            hi = mid;
            c_hi = c;
        }
        work += 1;
    }
    let sigma = lo - 1e-12 * hi.abs().max(1e-300);
    let factor = BandMatrix::from_csr_shifted(s, sigma, m)
        .factor()
        .ok_or_else(|| not_converged(work, f64::NAN))?;
    let mut x = start.to_vec();
    let mut mu = f64::NAN;
    let mut res = f64::INFINITY;
    for _ in 0..60 {
        let mx: Vec<f64> = x.iter().zip(m).map(|(x, m)| x * m).collect();
        x = factor.solve(&mx);
        work += 1;
        let norm = x.iter().zip(m).map(|(x, m)| x * x * m).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(not_converged(work, f64::NAN));
        }
        x.iter_mut().for_each(|v| *v /= norm);
        let sx = s.matvec(&x);
        let num: f64 = sx.iter().zip(&x).map(|(a, b)| a * b).sum();
        mu = num;
        res = backward_error(s, m, &x, mu);
        if res <= 1e-2 * EIGEN_RESIDUAL_TOL {
            break;
        }
    }
    if !(res <= EIGEN_RESIDUAL_TOL) {
        return Err(not_converged(work, res));
    }
    Ok((mu, x, work, res))
}

fn gershgorin_upper(s: &CsrMatrix, m: &[f64]) -> f64 {
    (0..s.n())
        .filter(|&i| m[i] > 0.0)
        .map(|i| s.row(i).map(|(_, v)| v.abs()).sum::<f64>() / m[i])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyConfig {
    pub nr: usize,
    pub ntheta: usize,
    pub nphi: usize,
    /// Radial spacing; `None` picks geometric grading towards the origin for
    /// balls and uniform spacing for annuli.
    pub spacing: Option<RadialSpacing>,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            nr: 128,
            ntheta: 64,
            nphi: 16,
            spacing: None,
        }
    }
}

/// Ratio `ε/R` of the first geometric cell on a ball; the grid is graded
/// over `log r ∈ [log ε, 0]`, far enough to resolve the slowly decaying
/// Hardy minimizing sequence `r^{-(N-2)/2}`.
pub fn geometric_inner_ratio(dim: usize) -> f64 {
    let underflow = (1e-280f64).powf(1.0 / (dim as f64 - 1.0));
    underflow.max(1e-24)
}

pub fn hardy_spacing(domain: &Domain, cfg: &HardyConfig) -> RadialSpacing {
    cfg.spacing.unwrap_or(match domain.kind {
        DomainKind::AnnularProfile => RadialSpacing::Uniform,
        _ => RadialSpacing::Geometric {
            inner: geometric_inner_ratio(domain.dim()),
        },
    })
}

/// Best constant of `∫(|∇u|² + λu²) ≥ β ∫ u²/|x|²` over the discrete H¹₀ space.
pub fn hardy_constant(domain: &Domain, lambda: f64, cfg: &HardyConfig) -> Result<SpectralResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    let nphi = domain.split.is_triple().then_some(cfg.nphi);
    let grid = Arc::new(build_grid_with(
        domain,
        cfg.nr,
        cfg.ntheta,
        nphi,
        hardy_spacing(domain, cfg),
    )?);
    hardy_on_grid(&grid, lambda, Potential::None)
}

/// Lowest eigenpair of `(∫|∇u|² + ∫(λ + V)u², ∫ u²/r²)` on a grid.
pub fn hardy_on_grid(grid: &Arc<Grid>, lambda: f64, potential: Potential) -> Result<SpectralResult> {
    let op = assemble(grid, lambda, potential)?;
    let mass = grid.inverse_square_mass();
    let start: Vec<f64> = mass.iter().map(|&m| if m > 0.0 { 1.0 } else { 0.0 }).collect();
    let upper = rayleigh_upper(&op.stiffness, &mass, &start)?;
    let (value, mut x, iterations, residual) =
        pencil_eigenpair(&op.stiffness, &mass, 0, upper, &start)?;
    orient_positive(&mut x, &mass);
    Ok(SpectralResult {
        value,
        vector: SpectralVector::Field(Field::new(grid.clone(), x)?),
        iterations,
        residual,
    })
}

/// Rayleigh quotient after a few unshifted inverse steps: an upper bound on
/// the lowest eigenvalue.
fn rayleigh_upper(s: &CsrMatrix, m: &[f64], start: &[f64]) -> Result<f64> {
    let factor = BandMatrix::from_csr(s)
        .factor()
        .ok_or_else(|| not_converged(0, f64::NAN))?;
    let mut x = start.to_vec();
    for _ in 0..4 {
        let mx: Vec<f64> = x.iter().zip(m).map(|(x, m)| x * m).collect();
        x = factor.solve(&mx);
        let n = x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        x.iter_mut().for_each(|v| *v /= n);
    }
    let sx = s.matvec(&x);
    let num: f64 = sx.iter().zip(&x).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().zip(m).map(|(x, m)| x * x * m).sum();
    Ok(num / den * (1.0 + 1e-9))
}

fn orient_positive(x: &mut [f64], m: &[f64]) {
    let s: f64 = x.iter().zip(m).map(|(x, m)| x * m).sum();
    if s < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Hardy constant of a radial domain computed on a one-dimensional radial grid.
pub fn radial_hardy(
    domain: &Domain,
    lambda: f64,
    potential: Potential,
    rg: &RadialGrid,
) -> Result<SpectralResult> {
    let s = assemble_radial(domain, rg, lambda, potential);
    let start = vec![1.0; rg.len()];
    let upper = rayleigh_upper(&s, &rg.inv_sq_volume, &start)?;
    let (value, mut x, iterations, residual) =
        pencil_eigenpair(&s, &rg.inv_sq_volume, 0, upper, &start)?;
    orient_positive(&mut x, &rg.inv_sq_volume);
    Ok(SpectralResult {
        value,
        vector: SpectralVector::Radial {
            r: rg.centers.clone(),
            values: x,
        },
        iterations,
        residual,
    })
}

/// One Richardson step for a second-order quantity sampled at `h` and `h/2`.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Weights of the angular Sturm-Liouville problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum AngularWeight {
    /// `cos^{n-1}θ sin^{n-1}θ`, the `m = n` double-revolution weight.
    Omega { n: usize },
    /// `sin^{N-l-1}θ cos^{l-1}θ`
    Wl { dim: usize, l: usize },
    /// `cos^{m-1}φ sin^{n-1}φ`
    Wmn { m: usize, n: usize },
}

impl AngularWeight {
    pub fn eval(&self, t: f64) -> f64 {
        let pw = |x: f64, k: i64| if k == 0 { 1.0 } else { x.powi(k as i32) };
        match *self {
            AngularWeight::Omega { n } => pw(t.cos(), n as i64 - 1) * pw(t.sin(), n as i64 - 1),
            AngularWeight::Wl { dim, l } => {
                pw(t.sin(), dim as i64 - l as i64 - 1) * pw(t.cos(), l as i64 - 1)
            }
            AngularWeight::Wmn { m, n } => pw(t.cos(), m as i64 - 1) * pw(t.sin(), n as i64 - 1),
        }
    }

    /// Natural interval `(0, π/4)` for ω, `(0, π/2)` otherwise.
    pub fn default_top(&self) -> f64 {
        match self {
            AngularWeight::Omega { .. } => FRAC_PI_4,
            _ => FRAC_PI_2,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            AngularWeight::Omega { n } => n >= 1,
            AngularWeight::Wl { dim, l } => l >= 1 && dim >= l + 1,
            AngularWeight::Wmn { m, n } => m >= 1 && n >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid angular weight {self:?}")))
        }
    }
}

impl std::str::FromStr for AngularWeight {
    type Err = Error;

    /// Parses `omega(n)`, `w_l(N,l)` or `w_mn(m,n)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse angular weight '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let args = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let w = match (&s[..open], args.as_slice()) {
            ("omega", [n]) => AngularWeight::Omega { n: *n },
            ("w_l", [dim, l]) => AngularWeight::Wl { dim: *dim, l: *l },
            ("w_mn", [m, n]) => AngularWeight::Wmn { m: *m, n: *n },
            _ => return Err(bad()),
        };
        w.validate()?;
        Ok(w)
    }
}

/// Lowest `k + 1` Neumann eigenpairs of `-(w ψ')' = μ w ψ` on `(0, top)`,
/// with eigenfunctions normalized to `∫ψ² w = 1`. The constant mode has a
/// positive sign; every other mode ends above where it starts.
pub fn angular_eigs(
    weight: AngularWeight,
    top: f64,
    ncells: usize,
    k: usize,
) -> Result<Vec<SpectralResult>> {
    weight.validate()?;
    if ncells < crate::discretize::MIN_CELLS {
        return Err(Error::GridTooSmall {
            axis: "theta",
            min: crate::discretize::MIN_CELLS,
            got: ncells,
        });
    }
    if k + 1 > ncells {
        return Err(Error::InvalidInput(format!("cannot compute {} modes on {ncells} cells", k + 1)));
    }
    let axis = AngularAxis::new(top, ncells, |t| weight.eval(t));
    let h = axis.step();
    let mut trip = Vec::new();
    let mut diag = vec![0.0; ncells];
    for j in 0..ncells - 1 {
        let c = axis.face_weight[j + 1] / h;
        diag[j] += c;
        diag[j + 1] += c;
        trip.push((j, j + 1, -c));
        trip.push((j + 1, j, -c));
    }
    for (j, d) in diag.iter().enumerate() {
        trip.push((j, j, *d));
    }
    let s = CsrMatrix::from_triplets(ncells, trip);
    let m = axis.volume.clone();
    let upper = gershgorin_upper(&s, &m);
    let profile = |psi: Vec<f64>| AngularProfile {
        theta: axis.centers.clone(),
        weight: axis.centers.iter().map(|&t| weight.eval(t)).collect(),
        cell_measure: axis.volume.clone(),
        face_weight: axis.face_weight.clone(),
        top,
        psi,
    };
    let mut out = Vec::with_capacity(k + 1);
    for index in 0..=k {
        // a start vector with `index` sign changes
        let start: Vec<f64> = axis
            .centers
            .iter()
            .map(|&t| (index as f64 * std::f64::consts::PI * t / top).cos() + 1e-3)
            .collect();
        let (mu, mut x, iterations, residual) = pencil_eigenpair(&s, &m, index, upper, &start)?;
        let norm = (0..ncells).map(|j| x[j] * x[j] * m[j]).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let flip = if index == 0 {
            x.iter().sum::<f64>() < 0.0
        } else {
            x[ncells - 1] < x[0]
        };
        if flip {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        out.push(SpectralResult {
            value: mu,
            vector: SpectralVector::Profile(profile(x)),
            iterations,
            residual,
        });
    }
    Ok(out)
}

/// `H_α(r) = r²/(4(1-r)²) + r^{2-α}`.
pub fn singular_hardy_h(alpha: f64, r: f64) -> f64 {
    r * r / (4.0 * (1.0 - r).powi(2)) + r.powf(2.0 - alpha)
}

fn singular_hardy_dh(alpha: f64, r: f64) -> f64 {
    r / (2.0 * (1.0 - r).powi(3)) + (2.0 - alpha) * r.powf(1.0 - alpha)
}

/// Minimum of `H_α` on `(0, 1)` and its location: a 4096-point scan followed
/// by 40 bisection steps on `H_α'` around the best sample.
pub fn singular_hardy_bound(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 2.0) {
        return Err(Error::InvalidInput(format!("alpha must exceed 2, got {alpha}")));
    }
    let n = 4096;
    let r_at = |k: usize| k as f64 / (n + 1) as f64;
    let best = (1..=n)
        .min_by(|&a, &b| singular_hardy_h(alpha, r_at(a)).total_cmp(&singular_hardy_h(alpha, r_at(b))))
        .unwrap();
    let (mut lo, mut hi) = (r_at(best - 1).max(1e-300), r_at(best + 1));
    if singular_hardy_dh(alpha, lo) < 0.0 && singular_hardy_dh(alpha, hi) > 0.0 {
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if singular_hardy_dh(alpha, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        Ok((singular_hardy_h(alpha, r), r))
    } else {
        Ok((singular_hardy_h(alpha, r_at(best)), r_at(best)))
    }
}

/// `inf (∫|∇φ|² + ∫φ²/r^α) / ∫φ²/r²` on a ball grid.
pub fn singular_hardy_constant(alpha: f64, grid: &Arc<Grid>) -> Result<SpectralResult> {
    if !(alpha > 2.0) {
        return Err(Error::InvalidInput(format!("alpha must exceed 2, got {alpha}")));
    }
    if grid.domain.kind == DomainKind::AnnularProfile {
        return Err(Error::InvalidDomain("singular Hardy constant needs a ball grid".into()));
    }
    hardy_on_grid(grid, 0.0, Potential::InversePower { alpha })
}
