//! Composite quadrature on uniform grids.

/// Composite Simpson rule over uniformly spaced samples `y` with spacing `h`.
///
/// An odd number of intervals is handled by closing the last three intervals
/// with Simpson's 3/8 rule. Two samples fall back to the trapezoid rule.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (y[0] + y[1]),
        3 => h / 3.0 * (y[0] + 4.0 * y[1] + y[2]),
        _ => {
            let intervals = n - 1;
            if intervals % 2 == 0 {
                simpson_even(y, h)
            } else {
                let head = &y[..n - 3];
                let tail = &y[n - 4..];
                let head_area = if head.len() > 1 {
                    simpson_even(head, h)
                } else {
                    0.0
                };
                head_area + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])
            }
        }
    }
}

fn simpson_even(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    debug_assert!(n % 2 == 1);
    let mut acc = y[0] + y[n - 1];
    for (i, v) in y.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_exactly() {
        for n in 2..12 {
            let y = vec![0.7; n];
            let h = 2.0 / (n - 1) as f64;
            assert!((simpson(&y, h) - 1.4).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn cubic_is_exact_for_even_and_odd_intervals() {
        for n in [5usize, 6, 9, 10] {
            let h = 1.0 / (n - 1) as f64;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&y, h) - 0.25).abs() < 1e-13, "n = {n}");
        }
    }
}
