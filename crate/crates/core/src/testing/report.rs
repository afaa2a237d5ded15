use crate::estimators::{format_estimate_table, tau_label, EstimationResult};
use crate::numfmt::{format_column, format_pval, format_signif, render_table};

use super::{ClosedTestReport, SignedWaldResult};

fn signed(x: f64) -> String {
    format_signif(x + 0.0, 7)
}

fn single_block(name: &str, definition: &str, bound: f64, res: &SignedWaldResult, estimate: f64) -> String {
    let value = format_signif(estimate, 7);
    let w = name.len().max(value.len());
    let bound = signed(bound);
    format!(
        "\n{name} = {definition}\n\n\tSigned Wald Test\n\ndata:  H0: {name} =< {bound}\n\
         Q = {q}, p-value {p}\nalternative hypothesis: HA: {name} > {bound}\n\
         sample estimates:\n{name:>w$} \n{value:>w$} \n",
        q = format_signif(res.statistic, 5),
        p = format_pval(res.p_value, 4),
    )
}

/// One-sided test blocks followed by the intersection test block.
pub fn format_test_report(rep: &ClosedTestReport, tau: f64) -> String {
    let t = tau_label(tau);
    let cfg = &rep.config;
    let mut s = String::from("-- One-sided tests --\n");
    s.push_str(&single_block(
        "b1",
        &format!("E(Y|T>{t},A=1) - E(Y|T>{t},A=0)"),
        cfg.delta_y,
        &rep.single_y,
        rep.estimates[0],
    ));
    s.push('\n');
    s.push_str(&single_block(
        "b2",
        &format!("P(T>{t}|A=1) - P(T>{t}|A=0)"),
        -cfg.delta_t,
        &rep.single_t,
        rep.estimates[1],
    ));
    let inter = &rep.intersection;
    s.push_str("-- Intersection test --\n");
    s.push_str(&format!(
        "\n\tSigned Wald Intersection Test\n\ndata:  \nIntersection null hypothesis: b =< [{}, {}]\n\
         w = [0.5, {}]\nQ = {}, p-value {}\n",
        signed(cfg.delta_y),
        signed(-cfg.delta_t),
        format_signif(inter.q_hat, 4),
        format_signif(inter.statistic, 5),
        format_pval(inter.p_value, 4),
    ));
    s
}

/// Closed-testing and Holm decisions at the configured level.
pub fn format_decisions(rep: &ClosedTestReport) -> String {
    let yes = |b: bool| if b { "rejected" } else { "not rejected" };
    format!(
        "-- Decisions (alpha = {}) --\nclosed testing: H1 {}, H2 {}\nholm:           H1 {}, H2 {}\n",
        format_signif(rep.config.alpha, 7),
        yes(rep.reject_y),
        yes(rep.reject_t),
        yes(rep.holm.reject_y),
        yes(rep.holm.reject_t),
    )
}

/// Estimates, statistics and p-values of the three tests as a matrix.
pub fn format_parameter_matrix(rep: &ClosedTestReport) -> String {
    let inter = &rep.intersection;
    let est = format_column(&[Some(rep.estimates[0]), Some(rep.estimates[1]), None], 7);
    let stat = format_column(
        &[Some(rep.single_y.statistic), Some(rep.single_t.statistic), Some(inter.statistic)],
        7,
    );
    let pv = format_column(&[Some(rep.single_y.p_value), Some(rep.single_t.p_value), Some(inter.p_value)], 7);
    let rows: Vec<(String, Vec<String>)> = ["b1", "b2", "intersection"]
        .iter()
        .enumerate()
        .map(|(i, l)| (l.to_string(), vec![est[i].clone(), stat[i].clone(), pv[i].clone()]))
        .collect();
    render_table(&["estimate", "statistic", "p.value"], &rows)
}

/// Estimate table followed by the one-sided and intersection test blocks.
pub fn format_summary(est: &EstimationResult, rep: &ClosedTestReport) -> String {
    format!(
        "-- Parameter estimates --\n\n{}{}",
        format_estimate_table(est),
        format_test_report(rep, est.tau)
    )
}
