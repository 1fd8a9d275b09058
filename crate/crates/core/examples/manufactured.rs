//! Second-order convergence of the discrete operator on a manufactured
//! solution `u = sin(π(r-1)) cos 4θ` on the annulus `1 < r < 2`, N = 4.

use std::f64::consts::PI;
use std::sync::Arc;

use revsym::discretize::{assemble, build_grid, Field, Potential};
use revsym::elliptic::{solve_linear, LinearSolveConfig};
use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};

fn exact(r: f64, t: f64) -> f64 {
    (PI * (r - 1.0)).sin() * (4.0 * t).cos()
}

/// `-Δu + u` in reduced polar coordinates with `N = 4`.
fn forcing(r: f64, t: f64) -> f64 {
    let s = PI * (r - 1.0);
    let radial = PI * PI * s.sin() - 3.0 * PI * s.cos() / r;
    // angular part: -(1/ω)(ω ψ')' with ω = sinθ cosθ for ψ = cos 4θ
    let c = (4.0 * t).cos();
    let psi2 = -16.0 * c;
    let psi1 = -4.0 * (4.0 * t).sin();
    let cot2 = (2.0 * t).cos() / (2.0 * t).sin();
    let angular = -(psi2 + 2.0 * cot2 * psi1);
    radial * c + s.sin() * angular / (r * r) + exact(r, t)
}

fn main() -> revsym::Result<()> {
    let d = Domain::annulus(RevolutionSplit::double(2, 2)?, 1.0, 2.0, SymmetryClass::Pi4Annular)?;
    let mut prev: Option<f64> = None;
    for n in [16, 32, 64, 128] {
        let g = Arc::new(build_grid(&d, n, n, None)?);
        let op = assemble(&g, 1.0, Potential::None)?;
        let f = Field::from_fn(g.clone(), |r, t, _| forcing(r, t));
        let (u, _) = solve_linear(&op, &f, &LinearSolveConfig::default())?;
        let err = Field::from_fn(g.clone(), |r, t, _| exact(r, t));
        let e: f64 = (0..g.len())
            .map(|p| (u.values[p] - err.values[p]).powi(2) * g.weights[p])
            .sum::<f64>()
            .sqrt();
        match prev {
            Some(p) => println!("n={n:>3}: L2 error {e:.3e}  ratio {:.2}", p / e),
            None => println!("n={n:>3}: L2 error {e:.3e}"),
        }
        prev = Some(e);
    }
    Ok(())
}
