//! Ground state on a domain of triple revolution, N = 6, with the θ and φ
//! dependence indices of the computed solution.

use revsym::cones::ConeSpec;
use revsym::discretize::Potential;
use revsym::geometry::{exponent_report, Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{find_ground_state, GroundStateConfig, Problem, Weight};
use revsym::symmetry::{dependence_indices, nonradiality_index};

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::triple(2, 2, 2)?;
    let rep = exponent_report(&split, 0.0, 1.0)?;
    println!("N = {}, 2* = {:.4}, p1 = {:.4}", rep.dim, rep.two_star, rep.p1.unwrap_or(f64::NAN));

    let d = Domain::annulus(split, 1.0, 2.0, SymmetryClass::TripleKMinus)?;
    let p = 4.0;
    let problem = Problem::new(d, Weight::default(), Potential::None, 0.0, p, ConeSpec::K3Minus)?;
    let gs = find_ground_state(&problem, &GroundStateConfig { nr: 16, ntheta: 12, nphi: 12, ..Default::default() })?;
    let (it, ip) = dependence_indices(&gs.field)?;
    println!("p = {p}: energy {:.6}  converged {}", gs.energy, gs.converged);
    println!("index {:.4}  theta index {it:.4}  phi index {ip:.4}", nonradiality_index(&gs.field)?);
    Ok(())
}
