//! CSV emission of jump series: 15-significant-digit decimal, LF line
//! endings, one trailing newline. Emission after parsing is byte-stable.

use thermoform_core::{CountSeries, Jump};

/// Formats with the given number of significant digits in plain decimal.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let dec = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{:.*}", dec, x)
}

pub const CSV_HEADER: &str = "T,N_before,N_after,ratio_before,ratio_after";

/// Renders the series rows in increasing T.
pub fn emit_series(series: &CountSeries) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for j in &series.jumps {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(j.t, 15),
            j.n_before,
            j.n_after,
            fmt_sig(j.ratio_before, 15),
            fmt_sig(j.ratio_after, 15),
        ));
    }
    out
}

/// Parses rows back; counts are exact, reals carry 15 significant digits.
pub fn parse_series(text: &str) -> Result<Vec<Jump>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut jumps = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(format!("row {}: expected 5 columns, got {}", i + 2, cols.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2));
        let int = |s: &str| s.parse::<u64>().map_err(|e| format!("row {}: {e}", i + 2));
        jumps.push(Jump {
            t: num(cols[0])?,
            n_before: int(cols[1])?,
            n_after: int(cols[2])?,
            ratio_before: num(cols[3])?,
            ratio_after: num(cols[4])?,
        });
    }
    Ok(jumps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountSeries {
        CountSeries {
            delta: 0.6309297535714574,
            t_lo: 0.5,
            t_hi: 3.3,
            total_jumps: 3,
            jumps: vec![
                Jump {
                    t: 1.0986122886681098,
                    n_before: 0,
                    n_after: 2,
                    ratio_before: 0.0,
                    ratio_after: 1.0,
                },
                Jump {
                    t: 2.1972245773362196,
                    n_before: 2,
                    n_after: 6,
                    ratio_before: 0.5,
                    ratio_after: 1.5,
                },
            ],
        }
    }

    #[test]
    fn emit_has_header_and_lf_rows() {
        let text = emit_series(&sample());
        assert!(text.starts_with("T,N_before,N_after,ratio_before,ratio_after\n"));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn format_is_self_inverse() {
        let text = emit_series(&sample());
        let parsed = parse_series(&text).unwrap();
        let mut series = sample();
        series.jumps = parsed;
        assert_eq!(emit_series(&series), text);
    }

    #[test]
    fn fifteen_digit_roundtrip_is_exact_on_parse() {
        // 15 significant decimal digits survive a f64 roundtrip.
        for &x in &[1.0986122886681098f64, 62.0, 0.000244140625, 123456.789012345] {
            let s = fmt_sig(x, 15);
            let y: f64 = s.parse().unwrap();
            assert_eq!(fmt_sig(y, 15), s);
        }
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_series("nope\n1,2,3,4,5\n").is_err());
    }
}
