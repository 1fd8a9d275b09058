//! Hénon weight `|x|^α` on the ball: above the radial critical exponent the
//! cone still gives a ground state with positive energy.

use revsym::cones::ConeSpec;
use revsym::discretize::Potential;
use revsym::geometry::{exponent_report, Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{find_ground_state, GroundStateConfig, Problem, Weight};
use revsym::symmetry::nonradiality_index;

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::double(2, 2)?;
    let alpha = 2.0;
    let rep = exponent_report(&split, alpha, 1.0)?;
    println!("2* = {}, Hénon upper bound {:.3}", rep.two_star, rep.henon_upper);
    for p in [3.0, 4.5, 5.5] {
        let d = Domain::ball(split.clone(), SymmetryClass::Pi4Annular)?;
        let problem = Problem::new(d, Weight::Power { alpha }, Potential::None, 0.0, p, ConeSpec::KPlus)?;
        let gs = find_ground_state(&problem, &GroundStateConfig { nr: 48, ntheta: 16, ..Default::default() })?;
        println!(
            "p = {p}: energy {:.6}  converged {}  index {:.3}",
            gs.energy,
            gs.converged,
            nonradiality_index(&gs.field)?
        );
    }
    Ok(())
}
