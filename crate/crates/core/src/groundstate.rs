//! Energy, Nehari rescaling and the cone-constrained fixed-point iteration
//! `u ← nehari(project(A⁻¹(a u^{p-1})))`, plus its one-dimensional radial
//! counterpart, the Moser exponent recurrence, and decay-rate fits.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeSpec, Direction, MembershipReport};
use crate::discretize::{
    assemble, assemble_radial, build_grid, h1_norm_sq, integrate_map, potential_energy, DiscreteOperator, Field,
    Grid, Potential, RadialGrid, RadialSpacing,
};
use crate::elliptic::{nonlinearity, LinearSolveConfig, LinearSolver};
use crate::error::{Error, Result};
use crate::geometry::{exponent_report, Domain, DomainKind};
use crate::linalg::CsrMatrix;

/// Coefficient `a(x)` of the nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Weight {
    Constant { value: f64 },
    /// `|x|^alpha`
    Power { alpha: f64 },
    /// `1 + amp cos(4·angle)` in the monotone angle.
    AngularCos { amp: f64 },
    /// Bilinear interpolation of samples on an `(r, angle)` lattice, row-major
    /// in `r`, clamped outside the sampled rectangle.
    Tabulated {
        r: Vec<f64>,
        angle: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Constant { value: 1.0 }
    }
}

fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
    if xs.len() == 1 || x <= xs[0] {
        return (0, 0.0);
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return (last - 1, 1.0);
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
}

impl Weight {
    pub fn eval(&self, r: f64, angle: f64) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::Power { alpha } => r.powf(*alpha),
            Weight::AngularCos { amp } => 1.0 + amp * (4.0 * angle).cos(),
            Weight::Tabulated { r: rs, angle: angs, values } => {
                let na = angs.len();
                let (i, s) = bracket(rs, r);
                let (j, t) = bracket(angs, angle);
                let at = |i: usize, j: usize| values[i.min(rs.len() - 1) * na + j.min(na - 1)];
                let lo = (1.0 - t) * at(i, j) + t * at(i, j + 1);
                let hi = (1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1);
                (1.0 - s) * lo + s * hi
            }
        }
    }

    pub fn is_radial(&self) -> bool {
        match self {
            Weight::Constant { .. } | Weight::Power { .. } => true,
            Weight::AngularCos { amp } => *amp == 0.0,
            Weight::Tabulated { angle, .. } => angle.len() == 1,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Weight::Constant { value } if !(*value > 0.0) => Err(Error::InvalidInput(format!(
                "constant weight must be positive, got {value}"
            ))),
            Weight::Power { alpha } if !(*alpha >= 0.0) => Err(Error::InvalidInput(format!(
                "weight exponent must be >= 0, got {alpha}"
            ))),
            Weight::AngularCos { amp } if !(amp.abs() < 1.0) => Err(Error::InvalidInput(format!(
                "angular weight amplitude must lie in (-1, 1), got {amp}"
            ))),
            Weight::Tabulated { r, angle, values } => {
                if r.is_empty() || angle.is_empty() || values.len() != r.len() * angle.len() {
                    return Err(Error::InvalidInput(
                        "tabulated weight needs values of length len(r) * len(angle)".into(),
                    ));
                }
                if r.windows(2).any(|w| w[1] <= w[0]) || angle.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput(
                        "tabulated weight abscissae must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidInput("tabulated weight must be >= 0".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `-Δu + (λ + V) u = a |u|^{p-2} u` restricted to a cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    pub domain: Domain,
    pub weight: Weight,
    pub potential: Potential,
    pub lambda: f64,
    pub p: f64,
    pub cone: ConeSpec,
}

impl Problem {
    pub fn new(
        domain: Domain,
        weight: Weight,
        potential: Potential,
        lambda: f64,
        p: f64,
        cone: ConeSpec,
    ) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p must exceed 2, got {p}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        if domain.kind == DomainKind::TruncatedFullSpace && lambda <= 0.0 {
            return Err(Error::InvalidInput(
                "full-space problems need lambda > 0".into(),
            ));
        }
        if let Potential::InversePower { alpha } = potential {
            if !(alpha > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "potential exponent must be positive, got {alpha}"
                )));
            }
        }
        weight.validate()?;
        if cone.symmetry_class() != domain.symmetry_class {
            return Err(Error::BoxMismatch(format!(
                "cone {cone} does not match symmetry class {:?}",
                domain.symmetry_class
            )));
        }
        if cone.even() && domain.split.m() != domain.split.n() {
            return Err(Error::InvalidSplit(format!(
                "cone {cone} needs equal first blocks, split is ({})",
                domain.split
            )));
        }
        if cone.direction() == Direction::Increasing && !domain.is_radial() {
            return Err(Error::InvalidDomain(format!(
                "cone {cone} is only available on annuli and balls"
            )));
        }
        let problem = Self {
            domain,
            weight,
            potential,
            lambda,
            p,
            cone,
        };
        if let Some(upper) = problem.exponent_upper() {
            if p >= upper {
                log::warn!("p = {p} lies outside the admissible window (upper bound {upper})");
            }
        }
        Ok(problem)
    }

    /// Upper end of the exponent window that applies to this problem.
    pub fn exponent_upper(&self) -> Option<f64> {
        let alpha = match self.weight {
            Weight::Power { alpha } => alpha,
            _ => 0.0,
        };
        if let Potential::InversePower { alpha } = self.potential {
            let rep = exponent_report(&self.domain.split, alpha, 1.0).ok()?;
            return rep.singular_upper;
        }
        let rep = exponent_report(&self.domain.split, alpha, 1.0).ok()?;
        match self.domain.kind {
            DomainKind::Ball | DomainKind::TruncatedFullSpace => Some(rep.henon_upper),
            DomainKind::AnnularProfile => match self.cone {
                ConeSpec::KPlus | ConeSpec::KMinus => rep.pi4_annular_upper,
                ConeSpec::KMinusPi2 => rep.embedding_mono,
                ConeSpec::K3Plus | ConeSpec::K3Minus => rep.p1,
                ConeSpec::K3MinusPi2 => rep.p2,
            },
        }
    }

    pub fn operator(&self, grid: &Arc<Grid>) -> Result<DiscreteOperator> {
        assemble(grid, self.lambda, self.potential)
    }

    /// `a` at active cell centers, zero elsewhere.
    pub fn weight_on(&self, grid: &Grid) -> Vec<f64> {
        let axis_len = grid.monotone_axis().len();
        let mono = &grid.monotone_axis().centers;
        (0..grid.len())
            .map(|p| {
                if grid.active[p] {
                    self.weight.eval(grid.coords(p).0, mono[p % axis_len])
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Checks `a ≥ 0` and that `a` is monotone along the cone's axis in the
    /// cone's direction on the given grid.
    pub fn validate_on(&self, grid: &Grid) -> Result<()> {
        let a = self.weight_on(grid);
        if a.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("weight a must be nonnegative".into()));
        }
        let field = Field::new(Arc::new(grid.clone()), a)?;
        let rep = cones::is_member(&field, self.cone, 1e-12 * field.max_abs().max(1e-300))?;
        if rep.monotonicity_violation > rep.tolerance {
            return Err(Error::InvalidInput(format!(
                "weight a is not monotone in the direction of cone {} (violation {:.3e})",
                self.cone, rep.monotonicity_violation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundStateConfig {
    pub nr: usize,
    pub ntheta: usize,
    pub nphi: usize,
    pub spacing: RadialSpacing,
    /// Relative tolerance on both the energy change and the PDE residual.
    pub tol: f64,
    pub max_outer: usize,
    pub linear: LinearSolveConfig,
    /// Amplitude of the cone-compatible angular mode in the initial guess.
    pub perturbation: f64,
    /// Amplitude of seeded multiplicative noise in the initial guess.
    pub noise: f64,
    pub seed: u64,
    pub max_restarts: u32,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            nr: 64,
            ntheta: 32,
            nphi: 16,
            spacing: RadialSpacing::Uniform,
            tol: 1e-6,
            max_outer: 500,
            linear: LinearSolveConfig::default(),
            perturbation: 0.1,
            noise: 0.0,
            seed: 0,
            max_restarts: 3,
        }
    }
}

impl GroundStateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be positive".into()));
        }
        self.linear.validate()
    }

    pub fn grid(&self, domain: &Domain) -> Result<Arc<Grid>> {
        let nphi = domain.split.is_triple().then_some(self.nphi);
        Ok(Arc::new(crate::discretize::build_grid_with(
            domain,
            self.nr,
            self.ntheta,
            nphi,
            self.spacing,
        )?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub energy: f64,
    pub residual: f64,
    /// Cone violations of the linear-solve output before projection.
    pub nonneg_violation: f64,
    pub monotonicity_violation: f64,
    pub evenness_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Energy of the one-dimensional problem `½∫(u'²+(λ+V)u²)r^{N-1} - (1/p)∫a u^p r^{N-1}`.
    pub energy_1d: f64,
    /// Measure of the angular box the profile was embedded over.
    pub angular_measure: f64,
    #[serde(skip)]
    pub grid: RadialGrid,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateResult {
    #[serde(skip)]
    pub field: Field,
    pub energy: f64,
    /// `‖Au - a u^{p-1}‖ / ‖a u^{p-1}‖` in the weighted L² norm.
    pub residual: f64,
    pub residual_abs: f64,
    pub membership: MembershipReport,
    pub iterations: usize,
    pub nehari_gap: f64,
    pub norm_sq: f64,
    pub nonlinear_integral: f64,
    pub converged: bool,
    pub restarts: u32,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub profile: Option<RadialProfile>,
}

impl GroundStateResult {
    /// Turns a non-converged result into `MaxOuterIterations`.
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxOuterIterations(self.iterations))
        }
    }
}

/// `½ (‖u‖²_{H¹,λ} + ∫V u²) - (1/p) ∫ a |u|^p`.
pub fn energy(u: &Field, problem: &Problem) -> f64 {
    let (q, b) = energy_parts(u, problem);
    0.5 * q - b / problem.p
}

/// Quadratic part (including `V`) and `∫ a |u|^p`.
pub fn energy_parts(u: &Field, problem: &Problem) -> (f64, f64) {
    let q = h1_norm_sq(u, problem.lambda) + potential_energy(u, problem.potential);
    let a = problem.weight_on(&u.grid);
    let b: f64 = u
        .values
        .iter()
        .zip(&a)
        .zip(&u.grid.weights)
        .map(|((u, a), w)| a * u.abs().powf(problem.p) * w)
        .sum();
    (q, b)
}

fn nehari_factor(q: f64, b: f64, p: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() || !(q > 0.0) || !q.is_finite() {
        return Err(Error::DegenerateRay(b));
    }
    Ok((q / b).powf(1.0 / (p - 2.0)))
}

/// Returns `t*` maximizing `t ↦ energy(t u)` and the rescaled field.
pub fn nehari_rescale(u: &Field, problem: &Problem) -> Result<(f64, Field)> {
    let (q, b) = energy_parts(u, problem);
    let t = nehari_factor(q, b, problem.p)?;
    Ok((t, u.scaled(t)))
}

/// Discrete system shared by the 2-D/3-D and the radial iterations.
struct System<'a> {
    stiffness: &'a CsrMatrix,
    weights: &'a [f64],
    active: &'a [bool],
    a: &'a [f64],
    p: f64,
    solver: LinearSolver<'a>,
}

struct Iterate {
    u: Vec<f64>,
    energy: f64,
    residual: f64,
    residual_abs: f64,
    q: f64,
    b: f64,
}

impl System<'_> {
    fn parts(&self, u: &[f64]) -> (f64, f64) {
        let su = self.stiffness.matvec(u);
        let (mut q, mut b) = (0.0, 0.0);
        for i in 0..u.len() {
            if self.active[i] {
                q += su[i] * u[i];
                b += self.a[i] * u[i].abs().powf(self.p) * self.weights[i];
            }
        }
        (q, b)
    }

    fn residual(&self, u: &[f64]) -> (f64, f64) {
        let su = self.stiffness.matvec(u);
        let f = nonlinearity(u, self.a, self.p);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..u.len() {
            if self.active[i] {
                let w = self.weights[i];
                num += (su[i] / w - f[i]).powi(2) * w;
                den += f[i] * f[i] * w;
            }
        }
        (num.sqrt(), den.sqrt())
    }

    fn evaluate(&self, u: Vec<f64>) -> Iterate {
        let (q, b) = self.parts(&u);
        let (abs, den) = self.residual(&u);
        Iterate {
            energy: 0.5 * q - b / self.p,
            residual: if den > 0.0 { abs / den } else { f64::INFINITY },
            residual_abs: abs,
            q,
            b,
            u,
        }
    }

    fn rescale(&self, mut u: Vec<f64>) -> Result<Vec<f64>> {
        let (q, b) = self.parts(&u);
        let t = nehari_factor(q, b, self.p)?;
        u.iter_mut().for_each(|v| *v *= t);
        Ok(u)
    }
}

struct Outcome {
    best: Iterate,
    iterations: usize,
    converged: bool,
    restarts: u32,
    trace: Vec<TraceRow>,
}

fn iterate(
    sys: &System,
    cfg: &GroundStateConfig,
    initial: impl Fn(u32) -> Vec<f64>,
    project: impl Fn(&[f64]) -> Result<Vec<f64>>,
    member: impl Fn(&[f64]) -> Result<MembershipReport>,
) -> Result<Outcome> {
    let mut restarts = 0u32;
    let start = |restarts: u32| -> Result<Iterate> {
        let u0 = project(&initial(restarts))?;
        Ok(sys.evaluate(sys.rescale(u0)?))
    };
    let mut cur = start(0)?;
    let mut best: Option<Iterate> = None;
    let mut trace = Vec::new();
    for k in 1..=cfg.max_outer {
        let f = nonlinearity(&cur.u, sys.a, sys.p);
        let (v, _) = sys.solver.solve(&f)?;
        let rep = member(&v)?;
        let next = project(&v).and_then(|w| sys.rescale(w));
        let next = match next {
            Ok(u) => sys.evaluate(u),
            Err(Error::DegenerateRay(b)) => {
                if restarts >= cfg.max_restarts {
                    return Err(Error::DegenerateRay(b));
                }
                restarts += 1;
                log::warn!("degenerate Nehari ray at outer step {k}; restarting ({restarts})");
                cur = start(restarts)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        trace.push(TraceRow {
            k,
            energy: next.energy,
            residual: next.residual,
            nonneg_violation: rep.nonneg_violation,
            monotonicity_violation: rep.monotonicity_violation,
            evenness_violation: rep.evenness_violation,
        });
        log::debug!("outer {k}: energy {:.12e} residual {:.3e}", next.energy, next.residual);
        let de = (next.energy - cur.energy).abs();
        let done = de <= cfg.tol * next.energy.abs() && next.residual <= cfg.tol;
        cur = next;
        if done {
            return Ok(Outcome {
                best: cur,
                iterations: k,
                converged: true,
                restarts,
                trace,
            });
        }
        if best.as_ref().map_or(true, |b| cur.residual < b.residual) {
            best = Some(Iterate {
                u: cur.u.clone(),
                ..cur
            });
        }
    }
    Ok(Outcome {
        best: best.unwrap_or(cur),
        iterations: cfg.max_outer,
        converged: false,
        restarts,
        trace,
    })
}

/// Radial bump vanishing on both walls (annulus) or at the outer wall with
/// zero slope at the origin (ball).
fn radial_bump(kind: DomainKind, r: f64, g1: f64, g2: f64) -> f64 {
    match kind {
        DomainKind::AnnularProfile => (PI * (r - g1) / (g2 - g1)).sin().max(0.0),
        _ => (0.5 * PI * r / g2).cos().max(0.0),
    }
}

/// Angular mode compatible with the cone's monotonicity.
fn cone_mode(cone: ConeSpec, angle: f64) -> f64 {
    match cone {
        ConeSpec::KPlus | ConeSpec::K3Plus => -(4.0 * angle).cos(),
        ConeSpec::KMinus | ConeSpec::K3Minus => (4.0 * angle).cos(),
        ConeSpec::KMinusPi2 | ConeSpec::K3MinusPi2 => (2.0 * angle).cos(),
    }
}

/// Initial guess: radial bump times `1 + δ·mode`, with optional seeded noise.
pub fn initial_guess(problem: &Problem, grid: &Grid, cfg: &GroundStateConfig, salt: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(salt as u64));
    let ncol = grid.ncol();
    let axis_len = grid.monotone_axis().len();
    let mono = &grid.monotone_axis().centers;
    let delta = if salt == 0 {
        cfg.perturbation
    } else {
        cfg.perturbation.max(0.05) * (1.0 + salt as f64)
    };
    let noise = if salt == 0 { cfg.noise } else { cfg.noise.max(0.01) };
    (0..grid.len())
        .map(|p| {
            let jitter = if noise > 0.0 {
                1.0 + noise * rng.gen_range(-1.0..1.0)
            } else {
                1.0
            };
            if !grid.active[p] {
                return 0.0;
            }
            let c = p % ncol;
            let r = grid.radial.centers[p / ncol];
            let bump = radial_bump(grid.domain.kind, r, grid.g1[c], grid.g2[c]);
            let mode = cone_mode(problem.cone, mono[p % axis_len]);
            bump * (1.0 + delta * mode).max(0.0) * jitter
        })
        .collect()
}

/// Cone-constrained ground state on a grid built from `cfg`.
pub fn find_ground_state(problem: &Problem, cfg: &GroundStateConfig) -> Result<GroundStateResult> {
    cfg.validate()?;
    let grid = cfg.grid(&problem.domain)?;
    find_ground_state_on(problem, &grid, cfg, None)
}

/// Same as [`find_ground_state`] on a given grid, optionally from a given
/// starting field. A zero start is replaced by the default bump.
pub fn find_ground_state_on(
    problem: &Problem,
    grid: &Arc<Grid>,
    cfg: &GroundStateConfig,
    start: Option<&Field>,
) -> Result<GroundStateResult> {
    cfg.validate()?;
    problem.validate_on(grid)?;
    let op = problem.operator(grid)?;
    let a = problem.weight_on(grid);
    let sys = System {
        stiffness: &op.stiffness,
        weights: &grid.weights,
        active: &grid.active,
        a: &a,
        p: problem.p,
        solver: LinearSolver::new(&op, cfg.linear)?,
    };
    let given = start
        .filter(|f| f.values.len() == grid.len() && f.max_abs() > 0.0)
        .map(|f| f.values.clone());
    if start.is_some() && given.is_none() {
        log::info!("zero or mismatched starting field replaced by the default bump");
    }
    let initial = |salt: u32| match (&given, salt) {
        (Some(u), 0) => u.clone(),
        _ => initial_guess(problem, grid, cfg, salt),
    };
    let project = |v: &[f64]| -> Result<Vec<f64>> {
        Ok(cones::project(&Field::new(grid.clone(), v.to_vec())?, problem.cone)?.values)
    };
    let member = |v: &[f64]| -> Result<MembershipReport> {
        let f = Field::new(grid.clone(), v.to_vec())?;
        cones::is_member(&f, problem.cone, cfg.tol * f.max_abs())
    };
    let out = iterate(&sys, cfg, initial, project, member)?;
    finish(out, grid, problem, cfg, None)
}

fn finish(
    out: Outcome,
    grid: &Arc<Grid>,
    problem: &Problem,
    cfg: &GroundStateConfig,
    profile: Option<RadialProfile>,
) -> Result<GroundStateResult> {
    let Outcome {
        best,
        iterations,
        converged,
        restarts,
        trace,
    } = out;
    let field = Field::new(grid.clone(), best.u)?;
    let membership = cones::is_member(&field, problem.cone, cfg.tol * field.max_abs())?;
    if !converged {
        log::warn!("outer iteration cap of {} reached; returning best iterate", cfg.max_outer);
    }
    Ok(GroundStateResult {
        field,
        energy: best.energy,
        residual: best.residual,
        residual_abs: best.residual_abs,
        membership,
        iterations,
        nehari_gap: (best.q - best.b).abs(),
        norm_sq: best.q,
        nonlinear_integral: best.b,
        converged,
        restarts,
        trace,
        profile,
    })
}

/// Radial ground state by the same iteration on a one-dimensional grid,
/// embedded into the angular grid of `cfg` for comparison with full solves.
pub fn solve_radial(problem: &Problem, cfg: &GroundStateConfig) -> Result<GroundStateResult> {
    cfg.validate()?;
    let domain = &problem.domain;
    if !domain.is_radial() || !problem.weight.is_radial() {
        return Err(Error::InvalidInput(
            "radial solves need a radial domain and a radial weight".into(),
        ));
    }
    let g1 = domain.inner_radius(0.0);
    let g2 = domain.outer_radius(0.0);
    let rg = RadialGrid::new(g1, g2, cfg.nr, cfg.spacing, domain.dim());
    let nr = rg.len();
    let s = assemble_radial(domain, &rg, problem.lambda, problem.potential);
    let active = vec![true; nr];
    let a: Vec<f64> = rg.centers.iter().map(|&r| problem.weight.eval(r, 0.0)).collect();
    let sys = System {
        stiffness: &s,
        weights: &rg.volume,
        active: &active,
        a: &a,
        p: problem.p,
        solver: LinearSolver::from_parts(&s, &rg.volume, &active, cfg.linear)?,
    };
    let initial = |_salt: u32| -> Vec<f64> {
        rg.centers
            .iter()
            .map(|&r| radial_bump(domain.kind, r, g1, g2))
            .collect()
    };
    let project = |v: &[f64]| -> Result<Vec<f64>> { Ok(v.iter().map(|x| x.max(0.0)).collect()) };
    let member = |v: &[f64]| -> Result<MembershipReport> {
        let neg = v.iter().fold(0.0f64, |m, &x| m.max(-x));
        let tol = cfg.tol * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(MembershipReport {
            nonneg_violation: neg,
            monotonicity_violation: 0.0,
            evenness_violation: 0.0,
            tolerance: tol,
            is_member: neg <= tol,
        })
    };
    let out = iterate(&sys, cfg, initial, project, member)?;

    let grid = cfg.grid(domain)?;
    let profile = RadialProfile {
        r: rg.centers.clone(),
        u: out.best.u.clone(),
        energy_1d: out.best.energy,
        angular_measure: angular_measure(&grid),
        grid: rg.clone(),
    };
    let embedded = embed_profile(&profile.r, &profile.u, &grid);
    let theta = profile.angular_measure;
    let mut result = finish(
        Outcome {
            best: Iterate {
                u: embedded,
                energy: out.best.energy * theta,
                residual: out.best.residual,
                residual_abs: out.best.residual_abs * theta.sqrt(),
                q: out.best.q * theta,
                b: out.best.b * theta,
            },
            ..out
        },
        &grid,
        problem,
        cfg,
        None,
    )?;
    result.profile = Some(profile);
    Ok(result)
}

/// Total measure of the angular box of a grid.
pub fn angular_measure(grid: &Grid) -> f64 {
    (0..grid.ncol()).map(|c| grid.column_volume(c)).sum()
}

/// Piecewise-linear interpolation of a radial profile onto every column of a
/// grid; values outside the profile's range use the nearest end value.
pub fn embed_profile(r: &[f64], u: &[f64], grid: &Grid) -> Vec<f64> {
    let ncol = grid.ncol();
    (0..grid.len())
        .map(|p| {
            if !grid.active[p] {
                return 0.0;
            }
            let x = grid.radial.centers[p / ncol];
            let (i, t) = bracket(r, x);
            if r.len() == 1 {
                u[0]
            } else {
                (1.0 - t) * u[i] + t * u[(i + 1).min(u.len() - 1)]
            }
        })
        .collect()
}

/// Builds a uniform grid for `problem.domain` matching a radial profile.
pub fn radial_comparison_grid(problem: &Problem, cfg: &GroundStateConfig) -> Result<Arc<Grid>> {
    let nphi = problem.domain.split.is_triple().then_some(cfg.nphi);
    Ok(Arc::new(build_grid(&problem.domain, cfg.nr, cfg.ntheta, nphi)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoserSequence {
    pub q: f64,
    pub p: f64,
    pub t0: f64,
    pub values: Vec<f64>,
    pub diverged: bool,
}

/// Iterates `t_{k+1} = q t_k / 2 - (p - 2) / 2`.
pub fn moser_sequence(p: f64, q: f64, t0: f64, kmax: usize) -> Result<MoserSequence> {
    if !(p > 2.0) || !(q > p) || !q.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Moser recurrence needs 2 < p < q, got p = {p}, q = {q}"
        )));
    }
    if !(t0 >= 1.0) {
        return Err(Error::InvalidInput(format!("t0 must be >= 1, got {t0}")));
    }
    let mut values = vec![t0];
    let mut t = t0;
    for _ in 0..kmax {
        t = q * t / 2.0 - (p - 2.0) / 2.0;
        if !t.is_finite() {
            break;
        }
        values.push(t);
    }
    let diverged = values.iter().any(|&v| v > 1e6);
    Ok(MoserSequence {
        q,
        p,
        t0,
        values,
        diverged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub window: (f64, f64),
    pub radii_used: usize,
    pub target: f64,
    pub passes: bool,
}

pub const MIN_DECAY_RADII: usize = 6;

/// Least-squares slope of `log u` against `log r` over radii in `window`.
/// Nonpositive samples are skipped.
pub fn decay_fit(r: &[f64], u: &[f64], target: f64, window: (f64, f64)) -> Result<DecayReport> {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(u)
        .filter(|(&r, &u)| r >= window.0 && r <= window.1 && r > 0.0 && u > 0.0)
        .map(|(&r, &u)| (r.ln(), u.ln()))
        .collect();
    if pts.len() < MIN_DECAY_RADII {
        return Err(Error::InsufficientWindow {
            got: pts.len(),
            need: MIN_DECAY_RADII,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(DecayReport {
        slope,
        intercept,
        slope_stderr: stderr,
        window,
        radii_used: pts.len(),
        target,
        passes: slope >= target,
    })
}

/// Decay fit of the angular maximum of `u` at each radius.
pub fn decay_check(u: &Field, target: f64, window: (f64, f64)) -> Result<DecayReport> {
    let g = &u.grid;
    let ncol = g.ncol();
    let maxima: Vec<f64> = (0..g.nr())
        .map(|i| {
            (0..ncol)
                .filter(|&c| g.active[i * ncol + c])
                .map(|c| u.values[i * ncol + c])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    decay_fit(&g.radial.centers, &maxima, target, window)
}

/// `∫ a |u|^p` for a field.
pub fn nonlinear_integral(u: &Field, problem: &Problem) -> f64 {
    energy_parts(u, problem).1
}

/// `∫ u²` for a field.
pub fn l2_norm_sq(u: &Field) -> f64 {
    integrate_map(u, |v| v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RevolutionSplit, SymmetryClass};
    use approx::assert_relative_eq;

    fn annulus_problem(p: f64) -> Problem {
        let d = Domain::annulus(RevolutionSplit::double(2, 2).unwrap(), 1.0, 2.0, SymmetryClass::Pi4Annular)
            .unwrap();
        Problem::new(d, Weight::default(), Potential::None, 0.0, p, ConeSpec::KMinus).unwrap()
    }

    fn small_cfg() -> GroundStateConfig {
        GroundStateConfig {
            nr: 24,
            ntheta: 12,
            ..Default::default()
        }
    }

    #[test]
    fn energy_of_zero_is_zero() {
        let prob = annulus_problem(3.0);
        let g = small_cfg().grid(&prob.domain).unwrap();
        assert_eq!(energy(&Field::zeros(g), &prob), 0.0);
    }

    #[test]
    fn energy_scaling_law() {
        let prob = annulus_problem(3.5);
        let g = small_cfg().grid(&prob.domain).unwrap();
        let u = Field::from_fn(g, |r, t, _| (PI * (r - 1.0)).sin() * (1.0 + 0.2 * (4.0 * t).cos()));
        let (q, b) = energy_parts(&u, &prob);
        for t in [0.5, 1.0, 2.0] {
            let direct = energy(&u.scaled(t), &prob);
            let law = 0.5 * t * t * q - t.powf(3.5) * b / 3.5;
            assert_relative_eq!(direct, law, max_relative = 1e-12);
        }
    }

    #[test]
    fn nehari_factor_closed_form() {
        assert_relative_eq!(nehari_factor(2.0, 8.0, 4.0).unwrap(), 0.5);
        assert!(matches!(nehari_factor(1.0, 0.0, 3.0), Err(Error::DegenerateRay(_))));
    }

    #[test]
    fn nehari_rescale_maximizes_along_ray() {
        let prob = annulus_problem(3.0);
        let g = small_cfg().grid(&prob.domain).unwrap();
        let u = Field::from_fn(g, |r, _, _| 2.0 * (PI * (r - 1.0)).sin());
        let (t, v) = nehari_rescale(&u, &prob).unwrap();
        let (t2, _) = nehari_rescale(&v, &prob).unwrap();
        assert_relative_eq!(t2, 1.0, max_relative = 1e-12);
        // golden-section search on t ↦ energy(t u)
        let f = |s: f64| -energy(&u.scaled(s), &prob);
        let (mut lo, mut hi) = (1e-3, 10.0 * t);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - gr * (hi - lo);
            let x2 = lo + gr * (hi - lo);
            if f(x1) < f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        assert_relative_eq!(0.5 * (lo + hi), t, max_relative = 1e-6);
    }

    #[test]
    fn problem_validation() {
        let d = Domain::annulus(RevolutionSplit::double(2, 3).unwrap(), 1.0, 2.0, SymmetryClass::Pi4Annular)
            .unwrap();
        assert!(Problem::new(d.clone(), Weight::default(), Potential::None, 0.0, 3.0, ConeSpec::KMinus).is_err());
        let d = Domain::truncated_rn(RevolutionSplit::double(2, 2).unwrap(), 8.0, SymmetryClass::Pi4Annular)
            .unwrap();
        assert!(Problem::new(d.clone(), Weight::default(), Potential::None, 0.0, 3.0, ConeSpec::KPlus).is_err());
        assert!(Problem::new(d.clone(), Weight::default(), Potential::None, 1.0, 2.0, ConeSpec::KPlus).is_err());
        assert!(Problem::new(d, Weight::default(), Potential::None, 1.0, 3.0, ConeSpec::KMinusPi2).is_err());
    }

    #[test]
    fn weight_monotonicity_is_checked_against_cone() {
        let d = Domain::annulus(RevolutionSplit::double(2, 2).unwrap(), 1.0, 2.0, SymmetryClass::Pi4Annular)
            .unwrap();
        let ok = Problem::new(d.clone(), Weight::AngularCos { amp: 0.5 }, Potential::None, 0.0, 3.0, ConeSpec::KMinus)
            .unwrap();
        let g = small_cfg().grid(&d).unwrap();
        assert!(ok.validate_on(&g).is_ok());
        let bad = Problem { cone: ConeSpec::KPlus, ..ok };
        assert!(bad.validate_on(&g).is_err());
    }

    #[test]
    fn tabulated_weight_interpolates() {
        let w = Weight::Tabulated {
            r: vec![0.0, 1.0],
            angle: vec![0.0, 1.0],
            values: vec![0.0, 1.0, 2.0, 3.0],
        };
        assert_relative_eq!(w.eval(0.5, 0.5), 1.5);
        assert_relative_eq!(w.eval(2.0, -1.0), 2.0);
    }

    #[test]
    fn moser_examples() {
        let s = moser_sequence(4.0, 6.0, 1.0, 4).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 5.0, 14.0, 41.0]);
        let s = moser_sequence(5.9, 6.0, 1.0, 40).unwrap();
        assert!(s.diverged);
        assert!(s.values.windows(2).all(|w| w[1] > w[0]));
        assert!(moser_sequence(6.0, 6.0, 1.0, 4).is_err());
        assert!(moser_sequence(7.0, 6.0, 1.0, 4).is_err());
    }

    #[test]
    fn decay_fit_on_power_law() {
        let r: Vec<f64> = (1..=20).map(|k| k as f64 * 0.01).collect();
        let u: Vec<f64> = r.iter().map(|r| r.powi(3)).collect();
        let rep = decay_fit(&r, &u, 2.0, (0.0, 1.0)).unwrap();
        assert!((rep.slope - 3.0).abs() < 1e-6);
        assert!(rep.passes);
        assert!(matches!(
            decay_fit(&r, &u, 2.0, (0.0, 0.045)),
            Err(Error::InsufficientWindow { got: 4, need: 6 })
        ));
    }

    #[test]
    fn decay_fit_on_exponential_flatness() {
        let r: Vec<f64> = (1..=10).map(|k| k as f64 * 0.004).collect();
        let u: Vec<f64> = r.iter().map(|r| (-1.0 / r).exp()).collect();
        for target in [1.0, 5.0, 10.0, 20.0] {
            assert!(decay_fit(&r, &u, target, (0.0, 1.0)).unwrap().passes);
        }
    }

    #[test]
    fn zero_start_is_replaced() {
        let prob = annulus_problem(3.0);
        let cfg = GroundStateConfig { tol: 1e-5, ..small_cfg() };
        let g = cfg.grid(&prob.domain).unwrap();
        let res = find_ground_state_on(&prob, &g, &cfg, Some(&Field::zeros(g.clone()))).unwrap();
        assert!(res.converged);
        assert!(res.energy > 0.0);
    }

    #[test]
    fn radial_and_full_solves_agree() {
        let prob = annulus_problem(3.0);
        let cfg = GroundStateConfig { tol: 1e-8, ..small_cfg() };
        let full = find_ground_state(&prob, &cfg).unwrap();
        let rad = solve_radial(&prob, &cfg).unwrap();
        assert!(full.converged && rad.converged);
        assert_relative_eq!(full.energy, rad.energy, max_relative = 1e-6);
        assert_relative_eq!(full.energy, (0.5 - 1.0 / 3.0) * full.nonlinear_integral, max_relative = 1e-6);
    }
}
