use super::{EstimationResult, Z_975};
use crate::numfmt::{format_column, format_sci, render_table};

/// `2.0` for integral landmarks, the shortest exact form otherwise.
pub fn tau_label(tau: f64) -> String {
    if tau.fract() == 0.0 {
        format!("{tau:.1}")
    } else {
        format!("{tau}")
    }
}

pub fn row_labels(tau: f64) -> [String; 6] {
    let t = tau_label(tau);
    [
        format!("E(Y|T>{t},A=0)"),
        format!("E(Y|T>{t},A=1)"),
        "diff".to_string(),
        format!("P(T>{t}|A=0)"),
        format!("P(T>{t}|A=1)"),
        "riskdiff".to_string(),
    ]
}

/// Six-row estimate table: arm-wise mean scores and their difference, then
/// arm-wise landmark survival and the risk difference, each with standard
/// error, 95% Wald interval and two-sided p-value.
pub fn format_estimate_table(r: &EstimationResult) -> String {
    let est = [
        r.theta_y[0],
        r.theta_y[1],
        r.psi_y,
        1.0 - r.theta_t[0],
        1.0 - r.theta_t[1],
        r.psi_t,
    ];
    let se = [r.se_theta_y[0], r.se_theta_y[1], r.se_psi_y, r.se_theta_t[0], r.se_theta_t[1], r.se_psi_t];
    let lower: Vec<f64> = est.iter().zip(&se).map(|(e, s)| e - Z_975 * s).collect();
    let upper: Vec<f64> = est.iter().zip(&se).map(|(e, s)| e + Z_975 * s).collect();
    let columns: Vec<Vec<String>> = [&est[..], &se[..], &lower, &upper]
        .into_iter()
        .map(|c| format_column(&c.iter().map(|&x| Some(x)).collect::<Vec<_>>(), 4))
        .collect();
    let pvals: Vec<String> = est.iter().zip(&se).map(|(e, s)| format_sci(EstimationResult::wald_p(*e, *s), 3)).collect();

    let labels = row_labels(r.tau);
    let mut rows = Vec::with_capacity(7);
    for k in 0..7 {
        if k == 3 {
            rows.push(("-".repeat(labels[0].chars().count()), vec![String::new(); 5]));
            continue;
        }
        let i = if k < 3 { k } else { k - 1 };
        let mut cells: Vec<String> = columns.iter().map(|c| c[i].clone()).collect();
        cells.push(pvals[i].clone());
        rows.push((labels[i].clone(), cells));
    }
    render_table(&["Estimate", "Std.Err", "2.5%", "97.5%", "P-value"], &rows)
}
