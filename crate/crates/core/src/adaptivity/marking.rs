use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::MarkSet;

/// Bulk parameters `0 < θ' ≤ θ ≤ 1` for the estimator and oscillation criteria.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkingParams {
    pub theta: f64,
    pub theta_prime: f64,
}

impl MarkingParams {
    pub fn new(theta: f64, theta_prime: f64) -> Result<Self> {
        if !(theta_prime > 0.0 && theta_prime <= theta && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < theta' <= theta <= 1, got theta = {theta}, theta' = {theta_prime}"
            )));
        }
        Ok(Self { theta, theta_prime })
    }
}

impl Default for MarkingParams {
    fn default() -> Self {
        Self {
            theta: 0.5,
            theta_prime: 0.5,
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(t) => Err(Error::InvalidParameter(format!(
            "indicator of element {t} is {}, expected a finite non-negative value",
            values[t]
        ))),
        None => Ok(()),
    }
}

/// Indices sorted by decreasing value, ties by increasing index.
fn descending(values: &[f64], ids: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut order: Vec<usize> = ids.collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Adds elements from `order` to `marked` until `covered >= target`; zero
/// entries never help and stop the scan.
fn fill(values: &[f64], order: &[usize], mut covered: f64, target: f64, marked: &mut Vec<usize>) {
    for &t in order {
        if covered >= target || values[t] == 0.0 {
            break;
        }
        covered += values[t];
        marked.push(t);
    }
}

/// Set of minimal cardinality with `θ Σ_all ≤ Σ_M`: the shortest prefix of the
/// elements sorted by decreasing value, ties broken by smaller id.
pub fn doerfler_mark(values: &[f64], theta: f64) -> Result<MarkSet> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta = {theta} outside (0, 1]"
        )));
    }
    check_values(values)?;
    let order = descending(values, 0..values.len());
    // summing in sorted order makes θ = 1 reachable exactly
    let total: f64 = order.iter().map(|&t| values[t]).sum();
    let mut marked = Vec::new();
    fill(values, &order, 0.0, theta * total, &mut marked);
    Ok(MarkSet::from_iter(marked))
}

/// `M_η = doerfler_mark(η², θ)`, then `M ⊇ M_η` extended by the largest
/// remaining oscillations until `θ' Σ osc² ≤ Σ_M osc²`.
pub fn mark_two_stage(
    eta_sq: &[f64],
    osc_sq: &[f64],
    params: &MarkingParams,
) -> Result<(MarkSet, MarkSet)> {
    if eta_sq.len() != osc_sq.len() {
        return Err(Error::InvalidParameter(
            "indicator fields differ in length".into(),
        ));
    }
    let params = MarkingParams::new(params.theta, params.theta_prime)?;
    check_values(osc_sq)?;
    let m_eta = doerfler_mark(eta_sq, params.theta)?;
    let total: f64 = descending(osc_sq, 0..osc_sq.len())
        .iter()
        .map(|&t| osc_sq[t])
        .sum();
    let covered: f64 = m_eta.iter().map(|t| osc_sq[t]).sum();
    let mut marked = m_eta.as_slice().to_vec();
    let rest = descending(osc_sq, (0..osc_sq.len()).filter(|&t| !m_eta.contains(t)));
    fill(
        osc_sq,
        &rest,
        covered,
        params.theta_prime * total,
        &mut marked,
    );
    Ok((m_eta, MarkSet::from_iter(marked)))
}
