//! CPLEX LP text export.

use std::fmt::Write as _;

use super::{MipModel, VarKind};

/// `%.9g`-style rendering: 9 significant digits, no trailing zeros.
pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Renders the model in the CPLEX LP dialect with a constant zero objective.
/// Output is a pure function of the model.
pub fn export_lp(model: &MipModel) -> String {
    let mut out = String::new();
    out.push_str("\\ time resource network, big-M order encoding\n");
    out.push_str("Minimize\n obj:\n");
    out.push_str("Subject To\n");
    for c in &model.constraints {
        let mut line = format!(" {}:", c.name);
        if c.terms.is_empty() {
            // keep the row well-formed; it reduces to 0 <sense> rhs
            let _ = write!(line, " 0 {}", model.variables[0].name);
        }
        for (i, &(v, coef)) in c.terms.iter().enumerate() {
            let name = &model.variables[v.0].name;
            let sign = if coef < 0.0 { "-" } else { "+" };
            let mag = coef.abs();
            let body = if mag == 1.0 {
                name.clone()
            } else {
                format!("{} {}", format_number(mag), name)
            };
            if i == 0 && coef >= 0.0 {
                let _ = write!(line, " {body}");
            } else {
                let _ = write!(line, " {sign} {body}");
            }
        }
        let _ = writeln!(line, " {} {}", c.sense, format_number(c.rhs));
        out.push_str(&line);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if let VarKind::Continuous { lower, upper } = v.kind {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                format_number(lower),
                v.name,
                format_number(upper)
            );
        }
    }
    out.push_str("Binaries\n");
    for v in &model.variables {
        if v.kind == VarKind::Binary {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    out
}
