//! Hardy constants on the ball and on annuli moving away from the origin.

use revsym::geometry::{Domain, RevolutionSplit, SymmetryClass};
use revsym::spectra::{hardy_constant, richardson, HardyConfig};

fn main() -> revsym::Result<()> {
    let split = RevolutionSplit::double(2, 2)?;
    let ball = Domain::ball(split.clone(), SymmetryClass::Pi4Annular)?;
    let mut prev = None;
    for nr in [64, 128, 256] {
        let cfg = HardyConfig { nr, ntheta: 8, ..Default::default() };
        let beta = hardy_constant(&ball, 0.0, &cfg)?.value;
        match prev {
            Some(c) => println!("ball nr={nr:>3}: {beta:.6}  extrapolated {:.6}", richardson(c, beta)),
            None => println!("ball nr={nr:>3}: {beta:.6}"),
        }
        prev = Some(beta);
    }
    println!("exact ((N-2)/2)^2 = 1");

    for r in [1.0, 2.0, 4.0, 8.0] {
        let d = Domain::annulus(split.clone(), r, r + 1.0, SymmetryClass::Pi4Annular)?;
        let beta = hardy_constant(&d, 0.0, &HardyConfig { nr: 128, ntheta: 8, ..Default::default() })?.value;
        println!("annulus({r},{}): beta0 = {beta:.4}", r + 1.0);
    }
    Ok(())
}
