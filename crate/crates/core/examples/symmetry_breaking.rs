//! Breaking threshold against annulus radius, and the second variation of
//! the radial ground state along its first angular mode.

use revsym::cones::ConeSpec;
use revsym::discretize::Potential;
use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{GroundStateConfig, Problem, Weight};
use revsym::symmetry::{breaking_verdict, VerdictOptions};

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::double(2, 2)?;
    let cfg = GroundStateConfig { nr: 48, ntheta: 16, ..Default::default() };
    println!("{:>4} {:>10} {:>8} {:>4} {:>12} {:>12} {:>8}", "R", "beta0", "p*", "p", "M", "bound", "index");
    for r in [1.0, 2.0, 4.0, 8.0] {
        let d = Domain::annulus(split.clone(), r, r + 1.0, SymmetryClass::Pi4Annular)?;
        let problem = Problem::new(d, Weight::default(), Potential::None, 0.0, 4.0, ConeSpec::KPlus)?;
        let v = breaking_verdict(&problem, &cfg, &VerdictOptions::default())?;
        println!(
            "{r:>4} {:>10.3} {:>8.4} {:>4} {:>12.4e} {:>12.4e} {:>8.4}",
            v.beta,
            v.threshold,
            v.p,
            v.m_value.unwrap_or(f64::NAN),
            v.bound.unwrap_or(f64::NAN),
            v.index.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
