//! Symmetry-breaking thresholds, the second variation along `u·ψ`,
//! nonradiality and dependence indices, and the multiplicity count.

use serde::Serialize;

use crate::discretize::{assemble_radial, Field, Potential};
use crate::error::{Error, Result};
use crate::geometry::SymmetryClass;
use crate::groundstate::{find_ground_state, solve_radial, GroundStateConfig, Problem, RadialProfile};
use crate::spectra::{angular_eigs, radial_hardy, AngularProfile, AngularWeight, SpectralVector};

/// Index above which a computed field counts as nonradial.
pub const NONRADIAL_INDEX: f64 = 0.05;

/// `4(N+2)/β + 2`.
pub fn breaking_threshold(dim: usize, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    Ok(4.0 * (dim as f64 + 2.0) / beta + 2.0)
}

/// `(p-1)μ/β < p-2`, the criterion used for triple revolution.
pub fn triple_criterion(p: f64, mu: f64, beta: f64) -> bool {
    (p - 1.0) * mu / beta < p - 2.0
}

/// Smallest `p` satisfying [`triple_criterion`], or infinity when `β ≤ μ`.
pub fn triple_threshold(mu: f64, beta: f64) -> f64 {
    if beta > mu {
        (2.0 * beta - mu) / (beta - mu)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariation {
    /// `M(u, uψ)`.
    pub m_value: f64,
    /// `(∫ψ²ω)(∫(u_r²+λu²)r^{N-1})(μ₁/β - (p-2))`.
    pub bound: f64,
    pub beta: f64,
    pub mu1: f64,
    /// `∫ψ²ω` and `∫ψ'²ω` over the evenly extended profile.
    pub psi_sq: f64,
    pub psi_grad_sq: f64,
    /// `∫(u_r² + λu²) r^{N-1}`.
    pub radial_form: f64,
    /// `∫ u² r^{N-3}`.
    pub inverse_square: f64,
    /// `∫ a u^p r^{N-1}`.
    pub nonlinear: f64,
}

/// `M(u, uψ)` for a radial profile `u` and an angular eigenprofile `ψ` with
/// eigenvalue `mu1`, by tensor quadrature of
/// `ψ²u_r² + u²ψ'²/r² + (λ+V)u²ψ² - (p-1)a u^p ψ²`.
/// `β` is the Hardy constant on the profile's own radial grid.
pub fn second_variation_radial(
    u: &RadialProfile,
    psi: &AngularProfile,
    mu1: f64,
    problem: &Problem,
) -> Result<SecondVariation> {
    let rg = &u.grid;
    if rg.len() != u.u.len() {
        return Err(Error::GridMismatch);
    }
    let domain = &problem.domain;
    let beta = radial_hardy(domain, problem.lambda, Potential::None, rg)?.value;
    let form = |lambda: f64, potential: Potential| {
        let s = assemble_radial(domain, rg, lambda, potential);
        let su = s.matvec(&u.u);
        su.iter().zip(&u.u).map(|(a, b)| a * b).sum::<f64>()
    };
    let radial_form = form(problem.lambda, Potential::None);
    let full_form = form(problem.lambda, problem.potential);
    let inverse_square: f64 = (0..rg.len()).map(|i| u.u[i] * u.u[i] * rg.inv_sq_volume[i]).sum();
    let nonlinear: f64 = (0..rg.len())
        .map(|i| problem.weight.eval(rg.centers[i], 0.0) * u.u[i].abs().powf(problem.p) * rg.volume[i])
        .sum();
    // the profile lives on half of (0, π/2) when the cone is even across π/4
    let ext = if (psi.top - std::f64::consts::FRAC_PI_4).abs() < 1e-12 { 2.0 } else { 1.0 };
    let psi_sq = ext * psi.inner(&psi.psi, &psi.psi);
    let psi_grad_sq = ext * psi.gradient_sq();
    let p = problem.p;
    let m_value = psi_sq * full_form + psi_grad_sq * inverse_square - (p - 1.0) * psi_sq * nonlinear;
    let bound = psi_sq * radial_form * (mu1 / beta - (p - 2.0));
    Ok(SecondVariation {
        m_value,
        bound,
        beta,
        mu1,
        psi_sq,
        psi_grad_sq,
        radial_form,
        inverse_square,
        nonlinear,
    })
}

/// Weighted angular average of `u` on each radius, spread back over the grid.
pub fn radial_projection(u: &Field) -> Field {
    let g = &u.grid;
    let ncol = g.ncol();
    let mut values = vec![0.0; g.len()];
    for i in 0..g.nr() {
        let (mut num, mut den) = (0.0, 0.0);
        for p in i * ncol..(i + 1) * ncol {
            if g.active[p] {
                num += u.values[p] * g.weights[p];
                den += g.weights[p];
            }
        }
        let avg = if den > 0.0 { num / den } else { 0.0 };
        for p in i * ncol..(i + 1) * ncol {
            if g.active[p] {
                values[p] = avg;
            }
        }
    }
    Field {
        grid: g.clone(),
        values,
    }
}

fn weighted_norm(u: &Field, values: &[f64]) -> f64 {
    let g = &u.grid;
    (0..g.len())
        .filter(|&p| g.active[p])
        .map(|p| values[p] * values[p] * g.weights[p])
        .sum::<f64>()
        .sqrt()
}

fn relative_distance(u: &Field, avg: &Field) -> Result<f64> {
    let norm = weighted_norm(u, &u.values);
    if !(norm > 0.0) {
        return Err(Error::ZeroField);
    }
    let diff: Vec<f64> = u.values.iter().zip(&avg.values).map(|(a, b)| a - b).collect();
    Ok(weighted_norm(u, &diff) / norm)
}

/// `‖u - Π_rad u‖ / ‖u‖` in `L²(dμ)`.
pub fn nonradiality_index(u: &Field) -> Result<f64> {
    relative_distance(u, &radial_projection(u))
}

/// Average over one angular axis of a triple field at fixed values of the
/// other two coordinates.
fn axis_average(u: &Field, over_theta: bool) -> Field {
    let g = &u.grid;
    let (nt, nf) = (g.theta.len(), g.nphi());
    let mut values = vec![0.0; g.len()];
    let outer = if over_theta { nf } else { nt };
    let inner = if over_theta { nt } else { nf };
    for i in 0..g.nr() {
        for a in 0..outer {
            let idx = |b: usize| {
                if over_theta {
                    g.index(i, b, a)
                } else {
                    g.index(i, a, b)
                }
            };
            let (mut num, mut den) = (0.0, 0.0);
            for b in 0..inner {
                let p = idx(b);
                if g.active[p] {
                    num += u.values[p] * g.weights[p];
                    den += g.weights[p];
                }
            }
            let avg = if den > 0.0 { num / den } else { 0.0 };
            for b in 0..inner {
                let p = idx(b);
                if g.active[p] {
                    values[p] = avg;
                }
            }
        }
    }
    Field {
        grid: g.clone(),
        values,
    }
}

/// `(index_theta, index_phi)`: distance from the θ-average at fixed `(r, φ)`
/// and from the φ-average at fixed `(r, θ)`, relative to `‖u‖`.
pub fn dependence_indices(u: &Field) -> Result<(f64, f64)> {
    if !u.grid.is_triple() {
        return Err(Error::BoxMismatch("dependence indices need a triple-revolution field".into()));
    }
    let t = relative_distance(u, &axis_average(u, true))?;
    let f = relative_distance(u, &axis_average(u, false))?;
    Ok((t, f))
}

/// `Σ_{i=0}^{k} ⌊(N-i)/2⌋` with `k = ⌊N/3⌋`.
pub fn multiplicity_count(dim: usize) -> Result<usize> {
    if dim < 4 {
        return Err(Error::InvalidInput(format!("multiplicity count needs N >= 4, got {dim}")));
    }
    Ok((0..=dim / 3).map(|i| (dim - i) / 2).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOptions {
    /// Cells of the angular eigenproblem.
    pub angular_cells: usize,
    /// Also compute the full cone-constrained ground state and its index.
    pub full_solve: bool,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            angular_cells: 512,
            full_solve: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakingVerdict {
    pub beta: f64,
    pub threshold: f64,
    pub p: f64,
    pub criterion_met: bool,
    #[serde(rename = "M_value")]
    pub m_value: Option<f64>,
    pub bound: Option<f64>,
    pub mu1: f64,
    pub index: Option<f64>,
    pub dependence: Option<(f64, f64)>,
    pub nonradial: Option<bool>,
    pub radial_energy: f64,
    pub energy: Option<f64>,
    pub converged: Option<bool>,
    /// The index is evidence about the computed solution, not a proof.
    pub note: &'static str,
}

/// Angular weight and box of the first nonconstant mode used for a class.
fn angular_problem(problem: &Problem) -> (AngularWeight, f64) {
    let split = &problem.domain.split;
    match problem.domain.symmetry_class {
        SymmetryClass::Pi4Annular => (AngularWeight::Omega { n: split.n() }, std::f64::consts::FRAC_PI_4),
        SymmetryClass::Pi2Annular => (
            AngularWeight::Wmn { m: split.m(), n: split.n() },
            std::f64::consts::FRAC_PI_2,
        ),
        _ => (
            AngularWeight::Wmn { m: split.m(), n: split.n() },
            problem.domain.phi_box().unwrap_or(std::f64::consts::FRAC_PI_4),
        ),
    }
}

/// Threshold, second variation and (optionally) the nonradiality of the
/// computed ground state for a radial problem.
pub fn breaking_verdict(
    problem: &Problem,
    cfg: &GroundStateConfig,
    opts: &VerdictOptions,
) -> Result<BreakingVerdict> {
    let radial = solve_radial(problem, cfg)?;
    let profile = radial
        .profile
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("radial solve returned no profile".into()))?;
    let (weight, top) = angular_problem(problem);
    let eig = angular_eigs(weight, top, opts.angular_cells, 1)?.remove(1);
    let psi = match &eig.vector {
        SpectralVector::Profile(p) => p.clone(),
        _ => unreachable!("angular eigenpairs carry profiles"),
    };
    let dim = problem.domain.dim();
    let triple = problem.domain.split.is_triple();
    let (beta, m_value, bound, threshold, met) = if triple {
        let beta = radial_hardy(&problem.domain, problem.lambda, Potential::None, &profile.grid)?.value;
        let t = triple_threshold(eig.value, beta);
        (beta, None, None, t, triple_criterion(problem.p, eig.value, beta))
    } else {
        let sv = second_variation_radial(profile, &psi, eig.value, problem)?;
        let t = if problem.domain.symmetry_class == SymmetryClass::Pi4Annular {
            breaking_threshold(dim, sv.beta)?
        } else {
            eig.value / sv.beta + 2.0
        };
        (sv.beta, Some(sv.m_value), Some(sv.bound), t, problem.p > t)
    };
    let mut verdict = BreakingVerdict {
        beta,
        threshold,
        p: problem.p,
        criterion_met: met,
        m_value,
        bound,
        mu1: eig.value,
        index: None,
        dependence: None,
        nonradial: None,
        radial_energy: radial.energy,
        energy: None,
        converged: None,
        note: "the index describes the computed solution and is numerical evidence only",
    };
    if opts.full_solve {
        let gs = find_ground_state(problem, cfg)?;
        let index = nonradiality_index(&gs.field)?;
        verdict.index = Some(index);
        verdict.nonradial = Some(index > NONRADIAL_INDEX);
        verdict.energy = Some(gs.energy);
        verdict.converged = Some(gs.converged);
        if triple {
            verdict.dependence = Some(dependence_indices(&gs.field)?);
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::ConeSpec;
    use crate::discretize::build_grid;
    use crate::geometry::{Domain, RevolutionSplit};
    use crate::groundstate::Weight;
    use std::sync::Arc;

    fn annulus_grid() -> Arc<crate::discretize::Grid> {
        let d = Domain::annulus(RevolutionSplit::double(2, 2).unwrap(), 1.0, 2.0, SymmetryClass::Pi4Annular)
            .unwrap();
        Arc::new(build_grid(&d, 16, 32, None).unwrap())
    }

    #[test]
    fn thresholds() {
        assert_eq!(breaking_threshold(4, 1.0).unwrap(), 26.0);
        assert_eq!(breaking_threshold(6, 4.0).unwrap(), 10.0);
        assert!((breaking_threshold(4, 1e12).unwrap() - 2.0).abs() < 1e-10);
        assert!(breaking_threshold(4, 0.0).is_err());
        // the ball threshold matches 16(N+2)/(N-2)² + 2 at N = 4
        assert_eq!(breaking_threshold(4, 1.0).unwrap(), 16.0 * 6.0 / 4.0 + 2.0);
    }

    #[test]
    fn triple_threshold_inverts_criterion() {
        let (mu, beta) = (12.0, 40.0);
        let t = triple_threshold(mu, beta);
        assert!(triple_criterion(t + 1e-9, mu, beta));
        assert!(!triple_criterion(t - 1e-9, mu, beta));
        assert!(triple_threshold(5.0, 5.0).is_infinite());
    }

    #[test]
    fn multiplicity() {
        for (n, k) in [(4, 3), (5, 4), (6, 7), (9, 14), (12, 24)] {
            assert_eq!(multiplicity_count(n).unwrap(), k);
        }
        assert!(multiplicity_count(3).is_err());
    }

    #[test]
    fn radial_field_has_zero_index() {
        let g = annulus_grid();
        let u = Field::from_fn(g, |r, _, _| (r - 1.0) * (2.0 - r));
        assert!(nonradiality_index(&u).unwrap() < 1e-14);
        let z = Field::zeros(annulus_grid());
        assert!(matches!(nonradiality_index(&z), Err(Error::ZeroField)));
    }

    #[test]
    fn zero_mean_mode_has_unit_index() {
        let g = annulus_grid();
        // ψ₁ for N = 4 has zero ω-mean; the discrete mean is removed exactly
        let psi = Field::from_fn(g.clone(), |_, t, _| -(4.0 * t).cos() - 1.0 / 3.0);
        let avg = radial_projection(&psi);
        let centered = Field {
            grid: g,
            values: psi.values.iter().zip(&avg.values).map(|(a, b)| a - b).collect(),
        };
        assert!((nonradiality_index(&centered).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_variation_constant_mode() {
        let d = Domain::annulus(RevolutionSplit::double(2, 2).unwrap(), 1.0, 2.0, SymmetryClass::Pi4Annular)
            .unwrap();
        let problem = Problem::new(d, Weight::default(), Potential::None, 0.0, 3.0, ConeSpec::KPlus).unwrap();
        let cfg = GroundStateConfig { nr: 32, ntheta: 16, ..Default::default() };
        let rad = solve_radial(&problem, &cfg).unwrap();
        let prof = rad.profile.unwrap();
        let eig = angular_eigs(AngularWeight::Omega { n: 2 }, std::f64::consts::FRAC_PI_4, 64, 0)
            .unwrap()
            .remove(0);
        let SpectralVector::Profile(psi) = eig.vector else { panic!() };
        let sv = second_variation_radial(&prof, &psi, eig.value, &problem).unwrap();
        let expect = (2.0 - problem.p) * sv.radial_form * sv.psi_sq;
        assert!(sv.m_value < 0.0);
        assert!((sv.m_value - expect).abs() <= 1e-6 * expect.abs(), "{} vs {expect}", sv.m_value);
    }
}
