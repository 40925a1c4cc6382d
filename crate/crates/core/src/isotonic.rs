//! Euclidean projection onto nondecreasing vectors by pool-adjacent-violators.

/// Replaces `y` by its closest nondecreasing vector in the least-squares sense.
pub fn isotonic_project(y: &mut [f64]) {
    // Blocks are (sum, count); a block's value is its mean.
    let mut sums: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let l = sums.len();
            let right = sums[l - 1] / counts[l - 1] as f64;
            let left = sums[l - 2] / counts[l - 2] as f64;
            if left <= right {
                break;
            }
            sums[l - 2] += sums[l - 1];
            counts[l - 2] += counts[l - 1];
            sums.pop();
            counts.pop();
        }
    }
    let mut at = 0;
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        y[at..at + c].iter_mut().for_each(|v| *v = mean);
        at += c;
    }
}

/// Projection onto `{lo ≤ y_0 ≤ … ≤ y_{n−1} ≤ hi}`: isotonic fit, then clip.
pub fn project_monotone_box(y: &mut [f64], lo: f64, hi: f64) {
    isotonic_project(y);
    y.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
}
