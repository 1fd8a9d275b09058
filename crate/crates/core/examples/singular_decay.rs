//! Singular potential `V = |x|^{-α}`: weighted Hardy constants against the
//! lower bound, and the decay rate of the ground state near the origin.

use std::sync::Arc;

use revsym::cones::ConeSpec;
use revsym::discretize::{build_grid, Potential};
use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};
use revsym::groundstate::{decay_check, find_ground_state, GroundStateConfig, Problem, Weight};
use revsym::spectra::{singular_hardy_bound, singular_hardy_constant};

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::double(2, 2)?;
    let ball = Domain::ball(split, SymmetryClass::Pi4Annular)?;
    let grid = Arc::new(build_grid(&ball, 128, 8, None)?);
    for alpha in [3.0, 6.0, 12.0] {
        let beta = singular_hardy_constant(alpha, &grid)?.value;
        let (c, _) = singular_hardy_bound(alpha)?;
        println!("alpha {alpha:>4}: computed {beta:.4}  bound {c:.4}");
    }

    let problem = Problem::new(ball, Weight::default(), Potential::InversePower { alpha: 3.0 }, 0.0, 4.0, ConeSpec::KPlus)?;
    let nr = 200;
    let gs = find_ground_state(&problem, &GroundStateConfig { nr, ntheta: 8, ..Default::default() })?;
    let h = 1.0 / nr as f64;
    let fit = decay_check(&gs.field, 2.0, (h, 10.0 * h))?;
    println!(
        "log-log slope {:.2} over {} radii (target > {}), passes {}",
        fit.slope, fit.radii_used, fit.target, fit.passes
    );
    Ok(())
}
