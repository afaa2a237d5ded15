//! Number formatting that mimics R's `print`/`format` conventions, used by
//! the human-readable reports.

/// Significant digits needed to show `x` to `digits` significant digits
/// with trailing zeros dropped, and the decimal exponent after rounding.
fn sig_and_exp(x: f64, digits: usize) -> (usize, i32) {
    if x == 0.0 || !x.is_finite() {
        return (1, 0);
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x.abs());
    let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let digits_only: String = mant.chars().filter(char::is_ascii_digit).collect();
    let sig = digits_only.trim_end_matches('0').len().max(1);
    (sig, exp)
}

/// Scientific notation with `mantissa_decimals` decimals and an exponent of
/// at least two digits, e.g. `8.609e-11`.
pub fn format_sci(x: f64, mantissa_decimals: usize) -> String {
    let s = format!("{:.*e}", mantissa_decimals, x);
    let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

enum Layout {
    Fixed(usize),
    Sci(usize),
}

fn layout(values: &[f64], digits: usize) -> Layout {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Layout::Fixed(0);
    }
    let neg = usize::from(finite.iter().any(|&v| v < 0.0));
    let (mut rgt, mut left, mut mxsig, mut max_exp) = (0usize, 1usize, 1usize, 0i32);
    for &v in &finite {
        let (sig, kp) = sig_and_exp(v, digits);
        rgt = rgt.max((sig as i32 - kp - 1).max(0) as usize);
        left = left.max(if kp >= 0 { kp as usize + 1 } else { 1 });
        mxsig = mxsig.max(sig);
        max_exp = max_exp.max(kp.abs());
    }
    let fixed_w = neg + left + if rgt > 0 { rgt + 1 } else { 0 };
    let exp_w = if max_exp >= 100 { 5 } else { 4 };
    let sci_w = neg + if mxsig > 1 { mxsig + 1 } else { mxsig } + exp_w;
    if fixed_w <= sci_w {
        Layout::Fixed(rgt)
    } else {
        Layout::Sci(mxsig - 1)
    }
}

/// Formats a column of numbers with a common layout, as R does for one
/// column of a printed matrix. `None` prints as `NA`. Strings are not
/// padded.
pub fn format_column(values: &[Option<f64>], digits: usize) -> Vec<String> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let lay = layout(&present, digits);
    values
        .iter()
        .map(|v| match (v, &lay) {
            (None, _) => "NA".to_string(),
            (Some(x), Layout::Fixed(r)) => format!("{:.*}", r, x),
            (Some(x), Layout::Sci(m)) => format_sci(*x, *m),
        })
        .collect()
}

/// Formats one number with `digits` significant digits.
pub fn format_signif(x: f64, digits: usize) -> String {
    format_column(&[Some(x)], digits).pop().unwrap_or_default()
}

/// p-value rendering of R's `format.pval`: values below machine epsilon
/// print as `< 2.2e-16`.
pub fn format_pval(p: f64, digits: usize) -> String {
    if p < f64::EPSILON {
        "< 2.2e-16".to_string()
    } else {
        format!("= {}", format_signif(p, digits))
    }
}

/// Left-justified label followed by right-justified cells, one space apart.
pub fn render_table(header: &[&str], rows: &[(String, Vec<String>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
    let ncol = header.len();
    let widths: Vec<usize> = (0..ncol)
        .map(|j| {
            rows.iter()
                .filter_map(|(_, c)| c.get(j).map(String::len))
                .chain(std::iter::once(header[j].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = format!("{:label_w$}", "");
    for (h, w) in header.iter().zip(&widths) {
        out.push_str(&format!(" {h:>w$}"));
    }
    out.push('\n');
    for (label, cells) in rows {
        out.push_str(&format!("{label:<label_w$}"));
        for (j, w) in widths.iter().enumerate() {
            let c = cells.get(j).map_or("", String::as_str);
            out.push_str(&format!(" {c:>w$}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64], digits: usize) -> Vec<String> {
        format_column(&v.iter().map(|&x| Some(x)).collect::<Vec<_>>(), digits)
    }

    #[test]
    fn common_decimals_follow_the_smallest_element() {
        assert_eq!(col(&[41.029118, 0.865361, 0.0396559], 4), ["41.02912", "0.86536", "0.03966"]);
        assert_eq!(col(&[40.30171, 0.850413, 0.0200034], 4), ["40.3017", "0.8504", "0.0200"]);
        assert_eq!(col(&[0.3711561, 0.0076443, 0.0100271], 4), ["0.371156", "0.007644", "0.010027"]);
    }

    #[test]
    fn wide_fixed_switches_to_scientific() {
        assert_eq!(col(&[8.6092e-11, 1.926869e-19, 0.0], 7), ["8.609200e-11", "1.926869e-19", "0.000000e+00"]);
        assert_eq!(format_signif(8.6092e-11, 4), "8.609e-11");
        assert_eq!(format_signif(7.661e-5, 4), "7.661e-05");
        assert_eq!(format_signif(0.01234, 4), "0.01234");
    }

    #[test]
    fn signif_matches_print() {
        assert_eq!(format_signif(40.759281, 5), "40.759");
        assert_eq!(format_signif(2.76190799, 7), "2.761908");
        assert_eq!(format_signif(0.0396558912, 7), "0.03965589");
        assert_eq!(format_signif(1.0, 4), "1");
        assert_eq!(format_signif(-0.05, 7), "-0.05");
        assert_eq!(format_signif(0.0, 7), "0");
    }

    #[test]
    fn na_cells() {
        assert_eq!(format_column(&[Some(2.5), None], 7), ["2.5", "NA"]);
    }

    #[test]
    fn pvalues() {
        assert_eq!(format_pval(1e-20, 4), "< 2.2e-16");
        assert_eq!(format_pval(8.6092e-11, 4), "= 8.609e-11");
        assert_eq!(format_pval(1.0, 4), "= 1");
    }

    #[test]
    fn sci_exponent_padding() {
        assert_eq!(format_sci(0.0, 3), "0.000e+00");
        assert_eq!(format_sci(1.722e-10, 3), "1.722e-10");
        assert_eq!(format_sci(123.0, 1), "1.2e+02");
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["A", "Bee"], &[("x".into(), vec!["1.5".into(), "2".into()]), ("long".into(), vec![])]);
        assert_eq!(t, "       A Bee\nx    1.5   2\nlong        \n");
    }
}
