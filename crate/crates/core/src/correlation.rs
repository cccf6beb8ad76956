use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    G1Incoherent,
    G1Total,
    G2,
}

/// Correlation values sampled at a set of delays (s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTrace {
    pub delays: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CorrelationKind,
}

impl CorrelationTrace {
    pub fn new(delays: Vec<f64>, values: Vec<f64>, kind: CorrelationKind) -> Self {
        debug_assert_eq!(delays.len(), values.len());
        CorrelationTrace { delays, values, kind }
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.delays.iter().copied().zip(self.values.iter().copied())
    }

    /// Linear interpolation; clamps to the end values outside the grid.
    /// Assumes increasing delays.
    pub fn interpolate(&self, t: f64) -> f64 {
        interp_linear(&self.delays, &self.values, t)
    }
}

pub(crate) fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let (y0, y1) = (ys[k - 1], ys[k]);
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// `n` evenly spaced points covering `[start, stop]`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 2.0, 6.0];
        assert_eq!(interp_linear(&xs, &ys, -1.0), 0.0);
        assert_eq!(interp_linear(&xs, &ys, 0.5), 1.0);
        assert_eq!(interp_linear(&xs, &ys, 2.0), 4.0);
        assert_eq!(interp_linear(&xs, &ys, 9.0), 6.0);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-1.0, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
