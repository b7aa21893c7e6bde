use std::f64::consts::{PI, TAU};

/// Signed distance from `y` to `x` reduced to `[-π, π)`.
pub fn circle_offset(x: f64, y: f64) -> f64 {
    (x - y + PI).rem_euclid(TAU) - PI
}

/// Evaluates a function with a removable singularity at `y` (mod 2π).
///
/// Inside the window `|x - y| < delta` the value comes from the quintic through
/// the samples at `y ± delta`, `y ± 2 delta`, `y ± 3 delta`, sixth-order
/// accurate in `delta`. Outside the window `g` is called directly.
pub fn removable<F: Fn(f64) -> f64>(x: f64, y: f64, delta: f64, g: F) -> f64 {
    let d = circle_offset(x, y);
    if d.abs() >= delta {
        return g(x);
    }
    let nodes = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].map(|k| k * delta);
    let vals = nodes.map(|n| g(y + n));
    let mut acc = 0.0;
    for i in 0..nodes.len() {
        let mut w = 1.0;
        for j in 0..nodes.len() {
            if i != j {
                w *= (d - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        acc += w * vals[i];
    }
    acc
}

/// Pairwise (cascade) summation; result is independent of thread layout.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn sup_norm<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removable_reproduces_smooth_limit() {
        // sin(d)/d has limit 1 at d = 0.
        let g = |x: f64| (x - 1.0).sin() / (x - 1.0);
        for d in [0.0, 1e-12, -3e-4, 7e-4] {
            let v = removable(1.0 + d, 1.0, 1e-3, g);
            let exact = if d == 0.0 { 1.0 } else { d.sin() / d };
            assert!((v - exact).abs() < 1e-12, "{d}: {v} vs {exact}");
        }
    }

    #[test]
    fn circle_offset_wraps() {
        assert!((circle_offset(0.1, TAU - 0.1) - 0.2).abs() < 1e-15);
        assert!((circle_offset(TAU - 0.1, 0.1) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sqrt()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }
}
