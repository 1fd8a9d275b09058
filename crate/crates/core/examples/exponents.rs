//! Exponent table for a few splits and Hénon weights.

use revsym::geometry::{exponent_report, RevolutionSplit};

fn show(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn main() -> revsym::Result<()> {
    println!("{:>8} {:>5} {:>8} {:>8} {:>8} {:>8} {:>10}", "split", "alpha", "2*", "mono", "p1", "henon", "window");
    for parts in [[2, 2].as_slice(), &[3, 3], &[2, 5], &[2, 2, 2], &[3, 3, 3]] {
        let split = RevolutionSplit::new(parts)?;
        for alpha in [0.0, 2.0, 4.0] {
            let rep = exponent_report(&split, alpha, 1.0)?;
            let label = parts.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
            println!(
                "{label:>8} {alpha:>5} {:>8.4} {:>8} {:>8} {:>8.4} ({:.3}, {:.3})",
                rep.two_star,
                show(rep.embedding_mono),
                show(rep.p1),
                rep.henon_upper,
                rep.fullspace_window.lower,
                rep.fullspace_window.upper,
            );
        }
    }
    Ok(())
}
