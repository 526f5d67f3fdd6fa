//! CSV emission with `%.9g`-style numbers.

use std::io::{self, Write};

use chancompat::figures::FigureRow;
use chancompat::witness::Teleportation;

const SIG_DIGITS: usize = 9;

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 ≤ |x| < 1e9`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Rounding to 9 digits may bump the exponent (9.9999999996 → 1e1), so
    // read it back from the rounded scientific form.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

pub fn write_figure_csv(out: &mut dyn Write, rows: &[FigureRow], teleportation: bool) -> io::Result<()> {
    let mut header = String::from("t,r_generic,r_cd,trace_distance");
    if teleportation {
        header.push_str(",n_value,f_max");
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let r = &row.record;
        write!(
            out,
            "{},{},{},{}",
            fmt_g(r.t),
            opt(r.r_generic),
            opt(r.r_cd),
            fmt_g(r.trace_distance)
        )?;
        if teleportation {
            write!(out, ",{},{}", opt(row.n_value), opt(row.f_max))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_teleport_csv(out: &mut dyn Write, rows: &[(f64, Teleportation)]) -> io::Result<()> {
    writeln!(out, "t,n_value,f_max")?;
    for (t, tp) in rows {
        writeln!(out, "{},{},{}", fmt_g(*t), fmt_g(tp.n_value), fmt_g(tp.f_max))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::fmt_g;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.335, "0.335"),
            (0.1 + 0.2, "0.3"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (-0.5, "-0.5"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (9.9999999996, "10"),
            (f64::NAN, "nan"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }
}
