//! Linear solves with the weighted operator: conjugate gradients or a banded
//! direct factorization, the pointwise-invariance map `u ↦ A⁻¹(a u^{p-1})`,
//! and PDE residuals.

use serde::{Deserialize, Serialize};

use crate::cones::{self, MembershipReport};
use crate::discretize::{DiscreteOperator, Field};
use crate::error::{Error, Result};
use crate::groundstate::Problem;
use crate::linalg::{pcg, BandMatrix, CsrMatrix, LdlFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Banded factorization when the band is small enough, otherwise CG.
    Auto,
    Cg,
    Banded,
}

/// Work estimate `n · bandwidth²` above which `Auto` falls back to CG.
const BANDED_WORK_LIMIT: f64 = 4e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSolveConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub preconditioner: Preconditioner,
    pub backend: Backend,
    /// Keep the per-iteration residual history in the stats.
    pub record_trace: bool,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            rel_tol: 1e-10,
            preconditioner: Preconditioner::Diagonal,
            backend: Backend::Auto,
            record_trace: false,
        }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::Config(format!(
                "rel_tol must lie in (0, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if self.max_iters < 100 {
            return Err(Error::Config(format!(
                "max_iters must be >= 100, got {}",
                self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    pub backend: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

enum Engine {
    Cg,
    Direct(LdlFactor),
}

/// An operator prepared for repeated solves `S v = W f`.
pub struct LinearSolver<'a> {
    stiffness: &'a CsrMatrix,
    weights: &'a [f64],
    active: &'a [bool],
    cfg: LinearSolveConfig,
    norm_weights: Vec<f64>,
    engine: Engine,
}

impl<'a> LinearSolver<'a> {
    pub fn new(op: &'a DiscreteOperator, cfg: LinearSolveConfig) -> Result<Self> {
        Self::from_parts(&op.stiffness, &op.grid.weights, &op.grid.active, cfg)
    }

    /// Solver for `S v = W f` given the stiffness matrix, the cell measures
    /// and the mask of unknowns (inactive rows must be identity rows).
    pub fn from_parts(
        stiffness: &'a CsrMatrix,
        weights: &'a [f64],
        active: &'a [bool],
        cfg: LinearSolveConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = stiffness.n() as f64;
        let bw = stiffness.bandwidth() as f64;
        let direct = match cfg.backend {
            Backend::Cg => false,
            Backend::Banded => true,
            Backend::Auto => n * bw * bw <= BANDED_WORK_LIMIT,
        };
        let engine = if direct {
            match BandMatrix::from_csr(stiffness).factor() {
                Some(f) => Engine::Direct(f),
                None => Engine::Cg,
            }
        } else {
            Engine::Cg
        };
        let norm_weights = weights
            .iter()
            .zip(active)
            .map(|(&w, &a)| if a { w } else { 1.0 })
            .collect();
        Ok(Self {
            stiffness,
            weights,
            active,
            cfg,
            norm_weights,
            engine,
        })
    }

    /// Solves `A v = f` for cell values `f`; inactive cells are ignored.
    pub fn solve(&self, f: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        if f.len() != self.weights.len() {
            return Err(Error::GridMismatch);
        }
        let b: Vec<f64> = f
            .iter()
            .zip(self.weights)
            .zip(self.active)
            .map(|((f, w), &a)| if a { f * w } else { 0.0 })
            .collect();
        let (x, stats) = match &self.engine {
            Engine::Cg => {
                let mut x = vec![0.0; b.len()];
                let mut trace = Vec::new();
                let out = pcg(
                    self.stiffness,
                    &b,
                    &mut x,
                    &self.norm_weights,
                    self.cfg.preconditioner == Preconditioner::Diagonal,
                    self.cfg.rel_tol,
                    self.cfg.max_iters,
                    |_, r| {
                        if self.cfg.record_trace {
                            trace.push(r)
                        }
                    },
                );
                (
                    x,
                    SolveStats {
                        iterations: out.iterations,
                        final_relative_residual: out.relative_residual,
                        converged: out.converged,
                        backend: "cg",
                        trace,
                    },
                )
            }
            Engine::Direct(factor) => {
                let x = factor.solve(&b);
                let rel = self.relative_residual(&x, &b);
                (
                    x,
                    SolveStats {
                        iterations: usize::from(b.iter().any(|&v| v != 0.0)),
                        final_relative_residual: rel,
                        converged: rel <= self.cfg.rel_tol,
                        backend: "banded",
                        trace: Vec::new(),
                    },
                )
            }
        };
        if !stats.converged {
            return Err(Error::NotConverged(stats));
        }
        Ok((x, stats))
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let sx = self.stiffness.matvec(x);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..b.len() {
            let w = self.norm_weights[i];
            num += (b[i] - sx[i]).powi(2) / w;
            den += b[i] * b[i] / w;
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

pub fn solve_linear(
    op: &DiscreteOperator,
    rhs: &Field,
    cfg: &LinearSolveConfig,
) -> Result<(Field, SolveStats)> {
    if op.grid.len() != rhs.grid.len() {
        return Err(Error::GridMismatch);
    }
    let solver = LinearSolver::new(op, *cfg)?;
    let (x, stats) = solver.solve(&rhs.values)?;
    Ok((Field::new(op.grid.clone(), x)?, stats))
}

/// Solves `-Δv + (λ + V) v = a |u|^{p-2} u` and reports whether `v` lies in
/// the problem's cone. The report tolerance is `1e-8 · max|v|`.
pub fn pointwise_invariance(
    u: &Field,
    problem: &Problem,
    cfg: &LinearSolveConfig,
) -> Result<(Field, MembershipReport, SolveStats)> {
    let pre = cones::is_member(u, problem.cone, 1e-8 * u.max_abs())?;
    if !pre.is_member {
        log::warn!(
            "pointwise_invariance input is not a cone member (worst violation {:.3e})",
            pre.worst()
        );
    }
    let op = problem.operator(&u.grid)?;
    let a = problem.weight_on(&u.grid);
    let f = nonlinearity(&u.values, &a, problem.p);
    let solver = LinearSolver::new(&op, *cfg)?;
    let (x, stats) = solver.solve(&f)?;
    let v = Field::new(u.grid.clone(), x)?;
    let report = cones::is_member(&v, problem.cone, 1e-8 * v.max_abs())?;
    Ok((v, report, stats))
}

/// `a |u|^{p-2} u` node by node.
pub fn nonlinearity(u: &[f64], a: &[f64], p: f64) -> Vec<f64> {
    u.iter()
        .zip(a)
        .map(|(&u, &a)| a * u.abs().powf(p - 2.0) * u)
        .collect()
}

/// Weighted L² norm of `A u - a |u|^{p-2} u` over active cells.
pub fn residual_norm(u: &Field, problem: &Problem) -> Result<f64> {
    let op = problem.operator(&u.grid)?;
    let a = problem.weight_on(&u.grid);
    Ok(residual_with(&op, &a, problem.p, &u.values).0)
}

/// Absolute residual and the weighted norm of the nonlinear term.
pub(crate) fn residual_with(op: &DiscreteOperator, a: &[f64], p: f64, u: &[f64]) -> (f64, f64) {
    let au = op.apply(u);
    let f = nonlinearity(u, a, p);
    let g = &op.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..u.len() {
        if g.active[i] {
            num += (au[i] - f[i]).powi(2) * g.weights[i];
            den += f[i] * f[i] * g.weights[i];
        }
    }
    (num.sqrt(), den.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, build_grid, Potential};
    use crate::geometry::{Domain, RevolutionSplit, SymmetryClass};
    use std::sync::Arc;

    fn ball_grid(n: usize) -> Arc<crate::discretize::Grid> {
        let d = Domain::ball(RevolutionSplit::double(2, 2).unwrap(), SymmetryClass::Pi4Annular).unwrap();
        Arc::new(build_grid(&d, n, 8, None).unwrap())
    }

    #[test]
    fn config_validation() {
        let mut cfg = LinearSolveConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rel_tol = 0.1;
        assert!(cfg.validate().is_err());
        cfg.rel_tol = 1e-8;
        cfg.max_iters = 10;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = ball_grid(16);
        let op = assemble(&g, 0.0, Potential::None).unwrap();
        for backend in [Backend::Cg, Backend::Banded] {
            let cfg = LinearSolveConfig { backend, ..Default::default() };
            let (v, stats) = solve_linear(&op, &Field::zeros(g.clone()), &cfg).unwrap();
            assert_eq!(stats.iterations, 0);
            assert!(v.values.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn paraboloid_recovered_on_ball() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = ball_grid(n);
            let op = assemble(&g, 0.0, Potential::None).unwrap();
            let rhs = Field::from_fn(g.clone(), |_, _, _| 8.0);
            for backend in [Backend::Cg, Backend::Banded] {
                let cfg = LinearSolveConfig { backend, rel_tol: 1e-12, ..Default::default() };
                let (v, _) = solve_linear(&op, &rhs, &cfg).unwrap();
                let err = (0..g.len())
                    .map(|p| (v.values[p] - (1.0 - g.coords(p).0.powi(2))).abs())
                    .fold(0.0, f64::max);
                errs.push(err);
            }
        }
        assert!(errs[0] < 1e-3 && errs[2] < errs[0] / 3.0, "{errs:?}");
        assert!((errs[0] - errs[1]).abs() < 1e-9);
    }

    #[test]
    fn not_converged_carries_stats() {
        let g = ball_grid(64);
        let op = assemble(&g, 0.0, Potential::None).unwrap();
        let rhs = Field::from_fn(g.clone(), |_, _, _| 8.0);
        let cfg = LinearSolveConfig {
            backend: Backend::Cg,
            max_iters: 100,
            rel_tol: 1e-14,
            ..Default::default()
        };
        match solve_linear(&op, &rhs, &cfg) {
            Err(Error::NotConverged(stats)) => {
                assert_eq!(stats.iterations, 100);
                assert!(!stats.converged);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
