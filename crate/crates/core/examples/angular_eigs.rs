//! First angular eigenvalues for the double and triple weights, with the
//! error of the first nonconstant one under refinement.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use revsym::spectra::{angular_eigs, AngularWeight};

fn main() -> revsym::Result<()> {
    for (w, top) in [
        (AngularWeight::Omega { n: 2 }, FRAC_PI_4),
        (AngularWeight::Omega { n: 3 }, FRAC_PI_4),
        (AngularWeight::Wmn { m: 2, n: 3 }, FRAC_PI_2),
        (AngularWeight::Wl { dim: 6, l: 2 }, FRAC_PI_2),
    ] {
        let pairs = angular_eigs(w, top, 512, 3)?;
        let values: Vec<String> = pairs.iter().map(|p| format!("{:.6}", p.value)).collect();
        println!("{w:?}: {}", values.join("  "));
    }

    // omega(2) has μ₁ = 4(N+2) = 24 at N = 4
    for cells in [32, 64, 128, 256, 512] {
        let mu = angular_eigs(AngularWeight::Omega { n: 2 }, FRAC_PI_4, cells, 1)?[1].value;
        println!("cells {cells:>4}: mu1 = {mu:.10}  error {:.3e}", (mu - 24.0).abs());
    }
    Ok(())
}
