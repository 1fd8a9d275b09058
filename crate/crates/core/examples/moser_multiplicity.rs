//! Moser exponent sequences and the count of distinct symmetric solutions.

use revsym::groundstate::moser_sequence;
use revsym::symmetry::multiplicity_count;

fn main() -> revsym::Result<()> {
    for (p, q) in [(4.0, 6.0), (3.0, 3.5), (10.0, 12.0)] {
        let s = moser_sequence(p, q, 1.0, 6)?;
        let v: Vec<String> = s.values.iter().map(|t| format!("{t:.4}")).collect();
        println!("p = {p}, q = {q}: {}  diverged {}", v.join(" "), s.diverged);
    }
    for n in 4..=16 {
        println!("N = {n:>2}: {} solutions", multiplicity_count(n)?);
    }
    Ok(())
}
