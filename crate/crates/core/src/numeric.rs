//! Small numeric helpers.

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Least-squares slope of `ys` against uniformly spaced abscissae `k * dx`.
pub fn ls_slope(ys: &[f64], dx: f64) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = compensated_sum(ys.iter().copied()) / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, y) in ys.iter().enumerate() {
        let dxk = k as f64 - x_mean;
        num += dxk * (y - y_mean);
        den += dxk * dxk;
    }
    num / den / dx
}
