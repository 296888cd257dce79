/// Piecewise-linear interpolation on strictly increasing `xs`.
///
/// Returns `None` outside `[xs[0], xs[last]]`.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let last = xs.len().checked_sub(1)?;
    if !(x >= xs[0] && x <= xs[last]) {
        return None;
    }
    let hi = xs.partition_point(|&v| v < x);
    if hi == 0 || xs[hi] == x {
        return Some(ys[hi]);
    }
    let lo = hi - 1;
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    Some(ys[lo] + w * (ys[hi] - ys[lo]))
}
