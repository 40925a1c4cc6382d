//! Time regularity of the interpolated trajectory.

use crate::error::{Error, Result};
use crate::jko::Trajectory;
use crate::transport::product_w2_sq;

use super::CheckResult;

const MIN_STEPS: usize = 10;

/// Snapshot pairs `(n, n + lag)` over geometric lags, spread evenly in time.
fn sample_pairs(n_steps: usize, budget: usize) -> Vec<(usize, usize)> {
    let mut lags = Vec::new();
    let mut lag = 1;
    while lag <= n_steps {
        lags.push(lag);
        lag *= 2;
    }
    let per_lag = (budget / lags.len()).max(1);
    let mut out = Vec::new();
    for &lag in &lags {
        let starts = n_steps - lag + 1;
        let k = per_lag.min(starts);
        for q in 0..k {
            let s = if k == 1 { 0 } else { q * (starts - 1) / (k - 1) };
            out.push((s, s + lag));
        }
    }
    out
}

/// Least-squares slope of `log 𝒲₂(𝛒(s), 𝛒(t))` against `log |t − s|` over
/// the given pairs; `None` when fewer than two pairs have positive distance.
pub fn holder_exponent(traj: &Trajectory, pairs: &[(usize, usize)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter_map(|&(a, b)| {
            let w = product_w2_sq(&traj.snapshots[a], &traj.snapshots[b]).sqrt();
            (w > 1e-14).then(|| (((b - a) as f64 * traj.tau()).ln(), w.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `𝒲₂(𝛒(s), 𝛒(t)) ≤ c √(1 + T) (√|t − s| + √τ)` over sampled snapshot pairs.
///
/// With `calibrated_c` the bound is checked with that constant; otherwise the
/// smallest admissible `c` is fitted and reported. The exponent of the
/// distance in `|t − s|` is fitted as well and must not exceed 1.1.
pub fn check_holder(traj: &Trajectory, n_pairs: usize, calibrated_c: Option<f64>) -> Result<CheckResult> {
    let n = traj.n_steps();
    if n < MIN_STEPS {
        return Err(Error::TooFewSteps { got: n, need: MIN_STEPS });
    }
    let tau = traj.tau();
    let scale = (1.0 + traj.horizon()).sqrt();
    let pairs = sample_pairs(n, n_pairs.max(1));
    let mut c_fit: f64 = 0.0;
    let mut witness = Vec::new();
    for &(a, b) in &pairs {
        let w = product_w2_sq(&traj.snapshots[a], &traj.snapshots[b]).sqrt();
        let r = w / (scale * (((b - a) as f64 * tau).sqrt() + tau.sqrt()));
        if r > c_fit {
            c_fit = r;
            witness = vec![a as f64 * tau, b as f64 * tau];
        }
    }
    let exponent = holder_exponent(traj, &pairs);
    let c = calibrated_c.unwrap_or(c_fit);
    let slack = c_fit - c * (1.0 + 1e-9);
    let exp_ok = exponent.map_or(true, |e| e <= 1.1);
    let mut result = CheckResult::new("holder", slack <= 0.0 && exp_ok, slack, witness).with_fit("c_fit", c_fit);
    if let Some(e) = exponent {
        result = result.with_fit("exponent", e);
    }
    if let Some(c) = calibrated_c {
        result = result.with_fit("c_calibrated", c);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_cover_all_lags_within_range() {
        let p = sample_pairs(40, 24);
        assert!(p.iter().all(|&(a, b)| a < b && b <= 40));
        for lag in [1, 2, 4, 8, 16, 32] {
            assert!(p.iter().any(|&(a, b)| b - a == lag));
        }
        assert!(p.contains(&(0, 1)) && p.contains(&(39, 40)));
    }
}
