//! CPLEX LP text format writer.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::{LinearProgram, Sense};

fn term(out: &mut String, first: bool, coeff: f64, name: &str) {
    if first {
        let _ = write!(out, "{coeff:e} {name}");
    } else if coeff < 0.0 {
        let _ = write!(out, "- {:e} {name}", -coeff);
    } else {
        let _ = write!(out, "+ {coeff:e} {name}");
    }
}

/// Writes `lp` with all variables declared free. Row names carry the family.
pub fn write_cplex_lp(lp: &LinearProgram, w: &mut dyn Write) -> io::Result<()> {
    let mut s = String::from("\\ sparse SLP subproblem\nMinimize\n obj:");
    let mut first = true;
    for (j, &c) in lp.cost.iter().enumerate() {
        if c != 0.0 {
            s.push(' ');
            term(&mut s, first, c, &lp.names[j]);
            first = false;
        }
    }
    if first {
        let _ = write!(s, " 0 {}", lp.names.first().map(String::as_str).unwrap_or("v0"));
    }
    s.push_str("\nSubject To\n");
    for (i, r) in lp.rows.iter().enumerate() {
        let _ = write!(s, " {}_{i}:", r.family);
        if r.coeffs.is_empty() {
            let _ = write!(s, " 0 {}", lp.names[0]);
        }
        for (k, &(j, a)) in r.coeffs.iter().enumerate() {
            s.push(' ');
            term(&mut s, k == 0, a, &lp.names[j]);
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, " {op} {:e}", r.rhs);
    }
    s.push_str("Bounds\n");
    for name in &lp.names {
        let _ = writeln!(s, " {name} free");
    }
    s.push_str("End\n");
    w.write_all(s.as_bytes())
}
