//! Deterministic text output: C-style `%.12e` floats and fixed-schema CSV.
//!
//! Result files must be byte-identical across reruns and thread counts, so
//! every float goes through one formatter with a fixed mantissa width and a
//! signed two-digit exponent, and every writer emits rows in a fixed order.

use std::fmt::Write as _;

/// Format like C's `%.12e`: 12 mantissa decimals, `e` followed by a sign and
/// at least two exponent digits. Negative zero collapses to positive zero so
/// equal values can never print differently.
pub fn fmt_e12(value: f64) -> String {
    if value == 0.0 {
        return "0.000000000000e+00".to_string();
    }
    let raw = format!("{:.12e}", value);
    let (mantissa, exponent) = raw
        .split_once('e')
        .expect("float formatting always yields an exponent");
    let (sign, digits) = match exponent.strip_prefix('-') {
        Some(rest) => ('-', rest),
        None => ('+', exponent),
    };
    if digits.len() >= 2 {
        format!("{mantissa}e{sign}{digits}")
    } else {
        format!("{mantissa}e{sign}0{digits}")
    }
}

/// One CSV cell.
pub enum Cell {
    Int(i64),
    Float(f64),
    /// Masked entry, emitted as an empty field.
    Gap,
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(value: f64) -> Self {
        Cell::Float(value)
    }
}

impl From<Option<f64>> for Cell {
    fn from(value: Option<f64>) -> Self {
        match value {
            Some(v) => Cell::Float(v),
            None => Cell::Gap,
        }
    }
}

/// Render a header plus rows; rows are written in the order given.
pub fn render_csv(header: &str, rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            first = false;
            match cell {
                Cell::Int(v) => {
                    let _ = write!(out, "{v}");
                }
                Cell::Float(v) => out.push_str(&fmt_e12(*v)),
                Cell::Gap => {}
                Cell::Flag(v) => out.push_str(if *v { "1" } else { "0" }),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_match_c_printf() {
        assert_eq!(fmt_e12(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e12(-0.0), "0.000000000000e+00");
        assert_eq!(fmt_e12(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e12(-2.5), "-2.500000000000e+00");
        assert_eq!(fmt_e12(1.0 / 3.0), "3.333333333333e-01");
        assert_eq!(fmt_e12(6.02214076e23), "6.022140760000e+23");
        assert_eq!(fmt_e12(-9.1e-31), "-9.100000000000e-31");
        assert_eq!(fmt_e12(1e100), "1.000000000000e+100");
        // Mantissa carry during rounding must bump the exponent.
        assert_eq!(fmt_e12(0.99999999999999999), "1.000000000000e+00");
    }

    #[test]
    fn csv_rows_render_gaps_and_flags() {
        let rows = vec![
            vec![Cell::Int(3), Cell::Float(0.5), Cell::Gap, Cell::Flag(true)],
            vec![
                Cell::Int(-1),
                Cell::Float(-0.0),
                Cell::Gap,
                Cell::Flag(false),
            ],
        ];
        let text = render_csv("n,x,t,flag", &rows);
        assert_eq!(
            text,
            "n,x,t,flag\n3,5.000000000000e-01,,1\n-1,0.000000000000e+00,,0\n"
        );
    }
}
