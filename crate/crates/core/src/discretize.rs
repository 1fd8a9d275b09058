//! Cell-centered tensor grids on the reduced (r, θ[, φ]) box and the
//! finite-volume assembly of the weighted operator `-(1/w) ∇·(w ∇u) + (λ + V) u`.
//!
//! Every cell carries the exact integral of the measure weight over the cell,
//! and every face carries the weight at the face divided by the distance
//! between the adjacent centers. The resulting stiffness matrix `S` is
//! symmetric, and the operator itself is `A = W⁻¹ S` with `W` the diagonal of
//! cell measures.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    double_angular_weight, triple_phi_weight, triple_theta_weight, Domain, DomainKind,
};
use crate::linalg::CsrMatrix;

pub const MIN_CELLS: usize = 8;

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 8-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    half * GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Placement of the radial cell faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RadialSpacing {
    Uniform,
    /// Faces in geometric progression. On a ball the first cell is
    /// `[0, inner·R]`; on an annulus the ratio spans `[R1, R2]` and `inner`
    /// is ignored.
    Geometric { inner: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    /// `∫ r^{N-1} dr` over each cell.
    pub volume: Vec<f64>,
    /// `∫ r^{N-3} dr` over each cell.
    pub inv_sq_volume: Vec<f64>,
    geometric: bool,
}

impl RadialGrid {
    pub fn new(r0: f64, r1: f64, nr: usize, spacing: RadialSpacing, dim: usize) -> Self {
        let faces: Vec<f64> = match spacing {
            RadialSpacing::Uniform => (0..=nr)
                .map(|k| r0 + (r1 - r0) * k as f64 / nr as f64)
                .collect(),
            RadialSpacing::Geometric { inner } if r0 == 0.0 => {
                let eps = inner * r1;
                let mut f = vec![0.0];
                f.extend((0..nr).map(|k| eps * (r1 / eps).powf(k as f64 / (nr - 1) as f64)));
                *f.last_mut().unwrap() = r1;
                f
            }
            RadialSpacing::Geometric { .. } => {
                let mut f: Vec<f64> = (0..=nr)
                    .map(|k| r0 * (r1 / r0).powf(k as f64 / nr as f64))
                    .collect();
                *f.last_mut().unwrap() = r1;
                f
            }
        };
        let geometric = !matches!(spacing, RadialSpacing::Uniform);
        let centers: Vec<f64> = faces
            .windows(2)
            .map(|w| {
                if geometric && w[0] > 0.0 {
                    (w[0] * w[1]).sqrt()
                } else {
                    0.5 * (w[0] + w[1])
                }
            })
            .collect();
        let nf = dim as f64;
        let volume = faces
            .windows(2)
            .map(|w| (w[1].powf(nf) - w[0].powf(nf)) / nf)
            .collect();
        let inv_sq_volume = faces
            .windows(2)
            .map(|w| (w[1].powf(nf - 2.0) - w[0].powf(nf - 2.0)) / (nf - 2.0))
            .collect();
        Self {
            faces,
            centers,
            volume,
            inv_sq_volume,
            geometric,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.faces[i + 1] - self.faces[i]
    }

    /// Gradient distance between centers `i` and `i + 1`.
    pub fn center_gap(&self, i: usize) -> f64 {
        let (a, b) = (self.centers[i], self.centers[i + 1]);
        if self.geometric {
            self.faces[i + 1] * (b / a).ln()
        } else {
            b - a
        }
    }

    /// Gradient distance from center `i` to a boundary at radius `g`.
    pub fn boundary_gap(&self, i: usize, g: f64) -> f64 {
        let c = self.centers[i];
        let d = if self.geometric && g > 0.0 && c > 0.0 {
            (g * (g / c).ln()).abs()
        } else {
            (g - c).abs()
        };
        d.max(0.1 * self.width(i))
    }
}

/// Uniform angular axis on `[0, top]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularAxis {
    pub top: f64,
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    /// Cell integrals of the axis weight.
    pub volume: Vec<f64>,
    /// Axis weight at each face.
    pub face_weight: Vec<f64>,
}

impl AngularAxis {
    pub fn new(top: f64, n: usize, weight: impl Fn(f64) -> f64) -> Self {
        let faces: Vec<f64> = (0..=n).map(|k| top * k as f64 / n as f64).collect();
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volume = faces
            .windows(2)
            .map(|w| gauss_legendre(w[0], w[1], &weight))
            .collect();
        let face_weight = faces.iter().map(|&f| weight(f)).collect();
        Self {
            top,
            faces,
            centers,
            volume,
            face_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.top / self.len() as f64
    }

    /// Index of the cell mirrored across the middle of the axis.
    pub fn mirror(&self, j: usize) -> usize {
        self.len() - 1 - j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCounts {
    pub nr: usize,
    pub ntheta: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nphi: Option<usize>,
}

/// A flux between two cells (`b = Some`) or from a cell to a Dirichlet wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub a: usize,
    pub b: Option<usize>,
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    pub spacing: RadialSpacing,
    pub radial: RadialGrid,
    pub theta: AngularAxis,
    pub phi: Option<AngularAxis>,
    /// `∫ sin^{m+n-3}θ cos^{l-1}θ dθ` per θ-cell, weighting φ-fluxes.
    phi_flux_theta: Vec<f64>,
    /// Inner and outer radius per angular column.
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub active: Vec<bool>,
    pub weights: Vec<f64>,
    couplings: Vec<Coupling>,
}

pub fn build_grid(domain: &Domain, nr: usize, ntheta: usize, nphi: Option<usize>) -> Result<Grid> {
    build_grid_with(domain, nr, ntheta, nphi, RadialSpacing::Uniform)
}

pub fn build_grid_with(
    domain: &Domain,
    nr: usize,
    ntheta: usize,
    nphi: Option<usize>,
    spacing: RadialSpacing,
) -> Result<Grid> {
    for (axis, got) in [("r", nr), ("theta", ntheta)] {
        if got < MIN_CELLS {
            return Err(Error::GridTooSmall {
                axis,
                min: MIN_CELLS,
                got,
            });
        }
    }
    let split = &domain.split;
    let triple = split.is_triple();
    let nphi = match (triple, nphi) {
        (true, Some(k)) if k < MIN_CELLS => {
            return Err(Error::GridTooSmall {
                axis: "phi",
                min: MIN_CELLS,
                got: k,
            })
        }
        (true, Some(k)) => Some(k),
        (true, None) => {
            return Err(Error::InvalidInput(
                "triple-revolution grids need an phi cell count".into(),
            ))
        }
        (false, _) => None,
    };
    if let RadialSpacing::Geometric { inner } = spacing {
        if !(inner > 0.0 && inner < 1.0) {
            return Err(Error::InvalidInput(format!(
                "geometric inner radius ratio must lie in (0, 1), got {inner}"
            )));
        }
    }
    let (m, n, l) = (split.m(), split.n(), split.l());
    let dim = split.dim();

    let theta = if triple {
        AngularAxis::new(domain.theta_box(), ntheta, |t| triple_theta_weight(m, n, l, t))
    } else {
        AngularAxis::new(domain.theta_box(), ntheta, |t| double_angular_weight(m, n, t))
    };
    let phi = nphi.map(|k| {
        AngularAxis::new(domain.phi_box().unwrap(), k, |p| triple_phi_weight(m, n, p))
    });
    let phi_flux_theta = if triple {
        let e_sin = (m + n) as i32 - 3;
        let e_cos = l as i32 - 1;
        theta
            .faces
            .windows(2)
            .map(|w| gauss_legendre(w[0], w[1], |t| t.sin().powi(e_sin) * t.cos().powi(e_cos)))
            .collect()
    } else {
        Vec::new()
    };

    let profile_angles: Vec<f64> = match &phi {
        Some(ph) => (0..ntheta)
            .flat_map(|_| ph.centers.iter().copied())
            .collect(),
        None => theta.centers.clone(),
    };
    let g1: Vec<f64> = profile_angles.iter().map(|&a| domain.inner_radius(a)).collect();
    let g2: Vec<f64> = profile_angles.iter().map(|&a| domain.outer_radius(a)).collect();
    let r_lo = g1.iter().copied().fold(f64::INFINITY, f64::min);
    let r_hi = g2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (r_lo, r_hi) = match domain.kind {
        DomainKind::AnnularProfile => (r_lo, r_hi),
        _ => (0.0, r_hi),
    };
    let radial = RadialGrid::new(r_lo, r_hi, nr, spacing, dim);

    let ncol = g1.len();
    let mut active = vec![false; nr * ncol];
    let mut weights = vec![0.0; nr * ncol];
    for i in 0..nr {
        let rc = radial.centers[i];
        for c in 0..ncol {
            let p = i * ncol + c;
            let inside = rc < g2[c] && (domain.kind != DomainKind::AnnularProfile || rc > g1[c]);
            active[p] = inside;
            if inside {
                weights[p] = radial.volume[i] * angular_volume(&theta, phi.as_ref(), c);
            }
        }
    }
    if !active.iter().any(|&a| a) {
        return Err(Error::InvalidDomain("grid has no active cells".into()));
    }

    let mut grid = Grid {
        domain: domain.clone(),
        spacing,
        radial,
        theta,
        phi,
        phi_flux_theta,
        g1,
        g2,
        active,
        weights,
        couplings: Vec::new(),
    };
    grid.couplings = grid.compute_couplings();
    Ok(grid)
}

fn angular_volume(theta: &AngularAxis, phi: Option<&AngularAxis>, c: usize) -> f64 {
    match phi {
        Some(ph) => theta.volume[c / ph.len()] * ph.volume[c % ph.len()],
        None => theta.volume[c],
    }
}

impl Grid {
    pub fn counts(&self) -> GridCounts {
        GridCounts {
            nr: self.radial.len(),
            ntheta: self.theta.len(),
            nphi: self.phi.as_ref().map(|p| p.len()),
        }
    }

    pub fn is_triple(&self) -> bool {
        self.phi.is_some()
    }

    pub fn nr(&self) -> usize {
        self.radial.len()
    }

    /// Number of angular columns, `nθ` or `nθ·nφ`.
    pub fn ncol(&self) -> usize {
        self.theta.len() * self.nphi()
    }

    pub fn nphi(&self) -> usize {
        self.phi.as_ref().map_or(1, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.theta.len() + j) * self.nphi() + k
    }

    /// `(i, j, k)` of a flat index; `k = 0` for double grids.
    pub fn unflatten(&self, p: usize) -> (usize, usize, usize) {
        let nphi = self.nphi();
        let k = p % nphi;
        let rest = p / nphi;
        (rest / self.theta.len(), rest % self.theta.len(), k)
    }

    /// `(r, θ, φ)` of a node; `φ = 0` for double grids.
    pub fn coords(&self, p: usize) -> (f64, f64, f64) {
        let (i, j, k) = self.unflatten(p);
        let phi = self.phi.as_ref().map_or(0.0, |ph| ph.centers[k]);
        (self.radial.centers[i], self.theta.centers[j], phi)
    }

    /// Angle the profiles and the monotone cones act on: θ for double
    /// grids, φ for triple grids.
    pub fn monotone_axis(&self) -> &AngularAxis {
        self.phi.as_ref().unwrap_or(&self.theta)
    }

    /// Angular cell measure of column `c`.
    pub fn column_volume(&self, c: usize) -> f64 {
        angular_volume(&self.theta, self.phi.as_ref(), c)
    }

    /// Node-wise `∫ r^{N-3}` measure, the mass of the Hardy quotient.
    pub fn inverse_square_mass(&self) -> Vec<f64> {
        let ncol = self.ncol();
        (0..self.len())
            .map(|p| {
                if self.active[p] {
                    self.radial.inv_sq_volume[p / ncol] * self.column_volume(p % ncol)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Total measure of the reduced domain.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Diagonal used for weighted norms: the cell measure, or 1 on inactive cells.
    pub fn norm_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.active)
            .map(|(&w, &a)| if a { w } else { 1.0 })
            .collect()
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    fn compute_couplings(&self) -> Vec<Coupling> {
        let nr = self.nr();
        let nth = self.theta.len();
        let nphi = self.nphi();
        let ncol = self.ncol();
        let dim = self.domain.dim() as i32;
        let rpow = |r: f64| r.powi(dim - 1);
        let ball_like = self.domain.kind != DomainKind::AnnularProfile;
        let mut out = Vec::new();
        let mut push = |a: usize, b: Option<usize>, coef: f64| {
            if coef > 0.0 {
                out.push(Coupling { a, b, coef });
            }
        };
        for i in 0..nr {
            for j in 0..nth {
                for k in 0..nphi {
                    let c = j * nphi + k;
                    let p = i * ncol + c;
                    if !self.active[p] {
                        continue;
                    }
                    let wang = self.column_volume(c);
                    // outward radial face
                    if i + 1 < nr && self.active[p + ncol] {
                        let rf = self.radial.faces[i + 1];
                        push(p, Some(p + ncol), rpow(rf) * wang / self.radial.center_gap(i));
                    } else {
                        let g = self.g2[c];
                        push(p, None, rpow(g) * wang / self.radial.boundary_gap(i, g));
                    }
                    // inward radial wall
                    if i == 0 && ball_like {
                        // reflection at the origin: no flux
                    } else if i == 0 || !self.active[p - ncol] {
                        let g = self.g1[c];
                        push(p, None, rpow(g) * wang / self.radial.boundary_gap(i, g));
                    }
                    let rm2 = self.radial.inv_sq_volume[i];
                    // θ faces
                    let dth = self.theta.step();
                    let phi_w = self.phi.as_ref().map_or(1.0, |ph| ph.volume[k]);
                    if j + 1 < nth {
                        let coef = rm2 * self.theta.face_weight[j + 1] * phi_w / dth;
                        let q = p + nphi;
                        if self.active[q] {
                            push(p, Some(q), coef);
                        } else {
                            push(p, None, 2.0 * coef);
                        }
                    }
                    if j > 0 && !self.active[p - nphi] {
                        push(p, None, 2.0 * rm2 * self.theta.face_weight[j] * phi_w / dth);
                    }
                    // φ faces
                    if let Some(ph) = &self.phi {
                        let dph = ph.step();
                        let qj = self.phi_flux_theta[j];
                        if k + 1 < nphi {
                            let coef = rm2 * qj * ph.face_weight[k + 1] / dph;
                            if self.active[p + 1] {
                                push(p, Some(p + 1), coef);
                            } else {
                                push(p, None, 2.0 * coef);
                            }
                        }
                        if k > 0 && !self.active[p - 1] {
                            push(p, None, 2.0 * rm2 * qj * ph.face_weight[k] / dph);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Zero-order potential `V`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Potential {
    #[default]
    None,
    /// `V = |x|^{-alpha}`
    InversePower { alpha: f64 },
}

impl Potential {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::None => 0.0,
            Potential::InversePower { alpha } => r.powf(-alpha),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Potential::None => "none".into(),
            Potential::InversePower { alpha } => format!("inverse-power({alpha})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryConditions {
    pub radial_outer: &'static str,
    pub radial_inner: &'static str,
    pub angular: &'static str,
}

/// `A = W⁻¹ S` with `S` stored explicitly.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Arc<Grid>,
    pub stiffness: CsrMatrix,
    pub lambda: f64,
    pub potential: Potential,
    pub bc: BoundaryConditions,
}

pub fn assemble_double(grid: &Arc<Grid>, lambda: f64, potential: Potential) -> Result<DiscreteOperator> {
    if grid.is_triple() {
        return Err(Error::BoxMismatch("assemble_double needs a double-revolution grid".into()));
    }
    assemble(grid, lambda, potential)
}

pub fn assemble_triple(grid: &Arc<Grid>, lambda: f64, potential: Potential) -> Result<DiscreteOperator> {
    if !grid.is_triple() {
        return Err(Error::BoxMismatch("assemble_triple needs a triple-revolution grid".into()));
    }
    assemble(grid, lambda, potential)
}

/// Assembles the operator for either grid type.
pub fn assemble(grid: &Arc<Grid>, lambda: f64, potential: Potential) -> Result<DiscreteOperator> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
    }
    let n = grid.len();
    let ncol = grid.ncol();
    let mut diag = vec![0.0; n];
    let mut trip = Vec::with_capacity(5 * n);
    for cp in grid.couplings() {
        diag[cp.a] += cp.coef;
        if let Some(b) = cp.b {
            diag[b] += cp.coef;
            trip.push((cp.a, b, -cp.coef));
            trip.push((b, cp.a, -cp.coef));
        }
    }
    for p in 0..n {
        if grid.active[p] {
            let r = grid.radial.centers[p / ncol];
            diag[p] += (lambda + potential.eval(r)) * grid.weights[p];
        } else {
            diag[p] = 1.0;
        }
        trip.push((p, p, diag[p]));
    }
    let ball_like = grid.domain.kind != DomainKind::AnnularProfile;
    Ok(DiscreteOperator {
        grid: Arc::clone(grid),
        stiffness: CsrMatrix::from_triplets(n, trip),
        lambda,
        potential,
        bc: BoundaryConditions {
            radial_outer: "dirichlet",
            radial_inner: if ball_like { "reflection" } else { "dirichlet" },
            angular: "neumann",
        },
    })
}

impl DiscreteOperator {
    /// `A u`, zero on inactive cells.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.matvec(u);
        for (p, v) in y.iter_mut().enumerate() {
            *v = if self.grid.active[p] {
                *v / self.grid.weights[p]
            } else {
                0.0
            };
        }
        y
    }

    /// `⟨A u, v⟩` in the weighted inner product, i.e. `vᵀ S u` over active cells.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let su = self.stiffness.matvec(u);
        su.iter()
            .zip(v)
            .zip(&self.grid.active)
            .filter(|(_, &a)| a)
            .map(|((a, b), _)| a * b)
            .sum()
    }
}

/// Stiffness matrix of the radial operator `-u'' - (N-1)u'/r + (λ + V) u`
/// on a one-dimensional grid, with the same face and wall coefficients as
/// the angular grids use for a single column of unit angular measure.
pub fn assemble_radial(
    domain: &Domain,
    rg: &RadialGrid,
    lambda: f64,
    potential: Potential,
) -> CsrMatrix {
    let dim = domain.dim() as i32;
    let nr = rg.len();
    let g1 = rg.faces[0];
    let g2 = rg.faces[nr];
    let ball_like = domain.kind != DomainKind::AnnularProfile;
    let mut trip = Vec::with_capacity(3 * nr);
    let mut diag = vec![0.0; nr];
    for i in 0..nr {
        if i + 1 < nr {
            let c = rg.faces[i + 1].powi(dim - 1) / rg.center_gap(i);
            diag[i] += c;
            diag[i + 1] += c;
            trip.push((i, i + 1, -c));
            trip.push((i + 1, i, -c));
        } else {
            diag[i] += g2.powi(dim - 1) / rg.boundary_gap(i, g2);
        }
        if i == 0 && !ball_like {
            diag[i] += g1.powi(dim - 1) / rg.boundary_gap(i, g1);
        }
        diag[i] += (lambda + potential.eval(rg.centers[i])) * rg.volume[i];
        trip.push((i, i, diag[i]));
    }
    CsrMatrix::from_triplets(nr, trip)
}

/// Grid function on the cells of a grid.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f(r, θ, φ)` at active cell centers; inactive cells are 0.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                if grid.active[p] {
                    let (r, t, ph) = grid.coords(p);
                    f(r, t, ph)
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    /// Writes `r,theta[,phi],value,weight` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if self.grid.is_triple() {
            writeln!(w, "r,theta,phi,value,weight")?;
        } else {
            writeln!(w, "r,theta,value,weight")?;
        }
        for p in 0..self.grid.len() {
            let (r, t, ph) = self.grid.coords(p);
            let (v, wt) = (self.values[p], self.grid.weights[p]);
            if self.grid.is_triple() {
                writeln!(w, "{r:.17e},{t:.17e},{ph:.17e},{v:.17e},{wt:.17e}")?;
            } else {
                writeln!(w, "{r:.17e},{t:.17e},{v:.17e},{wt:.17e}")?;
            }
        }
        Ok(())
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            domain: self.grid.domain.id.clone(),
            split: self.grid.domain.split.parts().to_vec(),
            counts: self.grid.counts(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldHeader {
    pub domain: String,
    pub split: Vec<usize>,
    pub counts: GridCounts,
}

/// `Σ values · weights`.
pub fn integrate(field: &Field) -> f64 {
    field
        .values
        .iter()
        .zip(&field.grid.weights)
        .map(|(v, w)| v * w)
        .sum()
}

/// Weighted integral of `f(u)` over the grid.
pub fn integrate_map(field: &Field, f: impl Fn(f64) -> f64) -> f64 {
    field
        .values
        .iter()
        .zip(&field.grid.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, w)| f(v) * w)
        .sum()
}

/// Discrete `∫ (|∇u|² + λ u²) dμ`, summed face by face.
pub fn h1_norm_sq(field: &Field, lambda: f64) -> f64 {
    let u = &field.values;
    let grad: f64 = field
        .grid
        .couplings()
        .iter()
        .map(|cp| {
            let d = match cp.b {
                Some(b) => u[cp.a] - u[b],
                None => u[cp.a],
            };
            cp.coef * d * d
        })
        .sum();
    grad + lambda * integrate_map(field, |v| v * v)
}

/// `∫ V u² dμ` with the potential at cell centers.
pub fn potential_energy(field: &Field, potential: Potential) -> f64 {
    if potential == Potential::None {
        return 0.0;
    }
    let ncol = field.grid.ncol();
    field
        .values
        .iter()
        .enumerate()
        .filter(|(p, _)| field.grid.active[*p])
        .map(|(p, v)| potential.eval(field.grid.radial.centers[p / ncol]) * v * v * field.grid.weights[p])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RevolutionSplit, SymmetryClass};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn annulus22() -> Domain {
        Domain::annulus(RevolutionSplit::double(2, 2).unwrap(), 1.0, 2.0, SymmetryClass::Pi2Annular)
            .unwrap()
    }

    fn ball22() -> Domain {
        Domain::ball(RevolutionSplit::double(2, 2).unwrap(), SymmetryClass::Pi2Annular).unwrap()
    }

    fn triple_annulus() -> Domain {
        Domain::annulus(
            RevolutionSplit::triple(2, 2, 2).unwrap(),
            1.0,
            2.0,
            SymmetryClass::TripleKMinus,
        )
        .unwrap()
    }

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(
            build_grid(&annulus22(), 7, 16, None),
            Err(Error::GridTooSmall { axis: "r", .. })
        ));
        assert!(build_grid(&triple_annulus(), 8, 8, Some(4)).is_err());
    }

    #[test]
    fn annulus_measure_matches_closed_form() {
        // ∫_1^2 r³ dr · ∫_0^{π/2} cos θ sin θ dθ = 15/4 · 1/2
        let g = build_grid(&annulus22(), 64, 64, None).unwrap();
        assert_relative_eq!(g.measure(), 15.0 / 8.0, max_relative = 1e-10);
        let one = Field::from_fn(Arc::new(g), |_, _, _| 1.0);
        assert_relative_eq!(integrate(&one), 15.0 / 8.0, max_relative = 1e-10);
    }

    #[test]
    fn half_box_indicator_has_half_measure() {
        let g = Arc::new(build_grid(&annulus22(), 16, 32, None).unwrap());
        let ind = Field::from_fn(Arc::clone(&g), |_, t, _| if t < FRAC_PI_4 { 1.0 } else { 0.0 });
        assert_relative_eq!(integrate(&ind), 0.5 * g.measure(), max_relative = 1e-12);
        assert_eq!(integrate(&Field::zeros(g)), 0.0);
    }

    #[test]
    fn ball_innermost_node_is_half_step() {
        let g = build_grid(&ball22(), 64, 8, None).unwrap();
        assert_relative_eq!(g.radial.centers[0], 0.5 / 64.0);
    }

    #[test]
    fn triple_phi_nodes_in_quarter_box() {
        let g = build_grid(&triple_annulus(), 8, 8, Some(32)).unwrap();
        let ph = g.phi.as_ref().unwrap();
        assert!(ph.centers.iter().all(|&p| p > 0.0 && p < FRAC_PI_4));
        assert!(g.theta.centers.iter().all(|&t| t > 0.0 && t < FRAC_PI_2));
        // ∫_1^2 r^5 · ∫ sin³θ cosθ · ∫_0^{π/4} cosφ sinφ = 63/6 · 1/4 · 1/4
        assert_relative_eq!(g.measure(), 63.0 / 96.0, max_relative = 1e-9);
    }

    #[test]
    fn operator_is_weighted_symmetric_and_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grids = [
            build_grid(&annulus22(), 12, 10, None).unwrap(),
            build_grid(&ball22(), 12, 10, None).unwrap(),
            build_grid(&triple_annulus(), 8, 8, Some(8)).unwrap(),
        ];
        for g in grids {
            let g = Arc::new(g);
            let op = assemble(&g, 0.0, Potential::None).unwrap();
            assert!(op.stiffness.asymmetry() <= 1e-14 * op.stiffness.diagonal().iter().fold(0.0, |a: f64, b| a.max(*b)));
            for _ in 0..5 {
                let u: Vec<f64> = (0..g.len()).map(|p| if g.active[p] { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
                let v: Vec<f64> = (0..g.len()).map(|p| if g.active[p] { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
                let lhs = op.form(&u, &v);
                let rhs = op.form(&v, &u);
                let nu = integrate_map(&Field::new(Arc::clone(&g), u.clone()).unwrap(), |x| x * x).sqrt();
                let nv = integrate_map(&Field::new(Arc::clone(&g), v.clone()).unwrap(), |x| x * x).sqrt();
                assert!((lhs - rhs).abs() <= 1e-10 * nu * nv * op.stiffness.diagonal().iter().fold(0.0, |a: f64, b| a.max(*b)));
                assert!(op.form(&u, &u) > 0.0);
            }
        }
    }

    #[test]
    fn minus_laplacian_of_paraboloid_on_ball() {
        // -Δ(1 - r²) = 2N = 8
        for n in [32, 64] {
            let g = Arc::new(build_grid(&ball22(), n, 8, None).unwrap());
            let op = assemble_double(&g, 0.0, Potential::None).unwrap();
            let u = Field::from_fn(Arc::clone(&g), |r, _, _| 1.0 - r * r);
            let au = op.apply(&u.values);
            let ncol = g.ncol();
            for p in 0..g.len() {
                let i = p / ncol;
                if i + 1 < n {
                    assert_relative_eq!(au[p], 8.0, max_relative = 1e-9);
                } else {
                    // boundary row: bounded, the half-cell Dirichlet closure is first order
                    assert!(au[p] > 0.0 && au[p] < 80.0);
                }
            }
        }
    }

    #[test]
    fn triple_constants_map_to_lambda() {
        let g = Arc::new(build_grid(&triple_annulus(), 8, 8, Some(8)).unwrap());
        let op = assemble_triple(&g, 1.0, Potential::None).unwrap();
        let au = op.apply(&vec![1.0; g.len()]);
        let ncol = g.ncol();
        for p in 0..g.len() {
            let i = p / ncol;
            if i > 0 && i + 1 < g.nr() {
                assert_relative_eq!(au[p], 1.0, max_relative = 1e-10);
            }
        }
        assert!(assemble_double(&g, 0.0, Potential::None).is_err());
    }

    #[test]
    fn h1_of_radial_mode_matches_quadrature() {
        let g = Arc::new(build_grid(&annulus22(), 128, 16, None).unwrap());
        let u = Field::from_fn(Arc::clone(&g), |r, _, _| (PI * (r - 1.0)).sin());
        let exact = PI * PI
            * gauss_composite(1.0, 2.0, 200, |r| (PI * (r - 1.0)).cos().powi(2) * r.powi(3))
            * 0.5;
        assert_relative_eq!(h1_norm_sq(&u, 0.0), exact, max_relative = 1e-2);
    }

    fn gauss_composite(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|k| gauss_legendre(a + k as f64 * h, a + (k + 1) as f64 * h, &f)).sum()
    }

    #[test]
    fn h1_equals_form_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Arc::new(build_grid(&annulus22(), 16, 16, None).unwrap());
        let op = assemble(&g, 0.5, Potential::None).unwrap();
        for _ in 0..10 {
            let u: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = Field::new(Arc::clone(&g), u.clone()).unwrap();
            assert_relative_eq!(h1_norm_sq(&f, 0.5), op.form(&u, &u), max_relative = 1e-12);
        }
    }

    #[test]
    fn bump_domain_marks_outside_cells_inactive() {
        let d = Domain::pi4_bump(
            RevolutionSplit::double(2, 2).unwrap(),
            1.0,
            2.0,
            0.3,
            SymmetryClass::Pi4Annular,
        )
        .unwrap();
        let g = build_grid(&d, 32, 16, None).unwrap();
        assert!(g.active.iter().any(|a| !a));
        for p in 0..g.len() {
            let (r, t, _) = g.coords(p);
            assert_eq!(g.active[p], r > d.inner_radius(t) && r < d.outer_radius(t));
        }
    }

    #[test]
    fn geometric_ball_grid_volumes_are_exact() {
        let g = build_grid_with(&ball22(), 64, 8, None, RadialSpacing::Geometric { inner: 1e-12 }).unwrap();
        assert_eq!(g.radial.faces[0], 0.0);
        assert_relative_eq!(g.radial.faces[1], 1e-12);
        assert_relative_eq!(g.radial.volume.iter().sum::<f64>(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(g.radial.inv_sq_volume.iter().sum::<f64>(), 0.5, max_relative = 1e-12);
    }
}
