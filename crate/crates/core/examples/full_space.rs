//! Full-space problem with `λ = 1`, truncated to a ball: the energy settles
//! once the truncation radius is large.

use revsym::cones::ConeSpec;
use revsym::discretize::Potential;
use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{solve_radial, GroundStateConfig, Problem, Weight};

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::double(2, 2)?;
    for radius in [4.0, 8.0, 16.0] {
        let d = Domain::truncated_rn(split.clone(), radius, SymmetryClass::Pi4Annular)?;
        let problem = Problem::new(d, Weight::default(), Potential::None, 1.0, 3.0, ConeSpec::KPlus)?;
        let cfg = GroundStateConfig { nr: (16.0 * radius) as usize, ntheta: 8, ..Default::default() };
        let res = solve_radial(&problem, &cfg)?;
        println!("R = {radius:>4}: energy {:.8}", res.energy);
    }
    Ok(())
}
