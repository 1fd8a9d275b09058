//! Cone-constrained ground state on an annulus, with the iteration trace and
//! a comparison against the radial solver.

use revsym::cones::ConeSpec;
use revsym::discretize::Potential;
use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{find_ground_state, solve_radial, GroundStateConfig, Problem, Weight};
use revsym::symmetry::nonradiality_index;

fn main() -> revsym::Result<()> {
    let d = Domain::annulus(RevolutionSplit::double(2, 2)?, 1.0, 2.0, SymmetryClass::Pi4Annular)?;
    let problem = Problem::new(d, Weight::default(), Potential::None, 0.0, 3.0, ConeSpec::KPlus)?;
    let cfg = GroundStateConfig { nr: 48, ntheta: 24, ..Default::default() };

    let gs = find_ground_state(&problem, &cfg)?;
    for row in &gs.trace {
        println!("{:>3}  energy {:.10}  residual {:.2e}", row.k, row.energy, row.residual);
    }
    let gs = gs.ensure_converged()?;
    println!("energy {:.8}  nehari gap {:.2e}", gs.energy, gs.nehari_gap / gs.norm_sq);
    println!("nonradiality index {:.2e}", nonradiality_index(&gs.field)?);

    let radial = solve_radial(&problem, &cfg)?;
    println!("radial energy {:.8}", radial.energy);
    Ok(())
}
