//! Start-stop-free cross-correlation histograms.

use serde::{Deserialize, Serialize};

use super::stream::PhotonStream;
use crate::correlation::{CorrelationKind, CorrelationTrace};
use crate::error::{Error, Result};

/// Pair counts of `t_b − t_a` in bins of width `w` centred on `k·w`,
/// `k = −n..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width: f64,
    /// `2n + 2` edges from `−(n + ½)w` to `(n + ½)w`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Pairs expected from uncorrelated streams of the same rates.
    pub expected: Vec<f64>,
    pub normalized: Vec<f64>,
    pub total_pairs: u64,
}

impl CorrelationHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Normalized histogram as a `g²` trace over the bin centres.
    pub fn to_trace(&self) -> CorrelationTrace {
        CorrelationTrace::new(self.centers(), self.normalized.clone(), CorrelationKind::G2)
    }

    /// Sum of two histograms with identical binning, e.g. from independent
    /// segments.
    pub fn merge(&self, other: &CorrelationHistogram) -> Result<CorrelationHistogram> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::invalid(
                "histogram",
                "cannot merge histograms with different bins",
            ));
        }
        let counts: Vec<u64> = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        let expected: Vec<f64> = self.expected.iter().zip(&other.expected).map(|(a, b)| a + b).collect();
        Ok(CorrelationHistogram {
            bin_width: self.bin_width,
            bin_edges: self.bin_edges.clone(),
            normalized: normalize(&counts, &expected),
            counts,
            expected,
            total_pairs: self.total_pairs + other.total_pairs,
        })
    }

    /// CSV with header `delay_s,counts,expected,normalized`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delay_s,counts,expected,normalized\n");
        for (i, c) in self.centers().iter().enumerate() {
            s.push_str(&format!(
                "{:.8e},{},{:.8e},{:.8e}\n",
                c, self.counts[i], self.expected[i], self.normalized[i]
            ));
        }
        s
    }
}

fn normalize(counts: &[u64], expected: &[f64]) -> Vec<f64> {
    counts
        .iter()
        .zip(expected)
        .map(|(&c, &e)| if e > 0.0 { c as f64 / e } else { f64::NAN })
        .collect()
}

/// `∫ (D − |τ|) dτ` over `[lo, hi]`, the number of start times in a record
/// of length `D` whose partner at delay `τ` still falls inside the record.
fn overlap(lo: f64, hi: f64, d: f64) -> f64 {
    let prim = |x: f64| d * x - 0.5 * x * x.abs();
    let (lo, hi) = (lo.clamp(-d, d), hi.clamp(-d, d));
    (prim(hi) - prim(lo)).max(0.0)
}

/// Histogram of all pairs `(a_i, b_j)` with `|t_b − t_a|` inside the
/// binned window.
///
/// `n = round(max_delay / bin_width)` bins lie on each side of the zero
/// bin. Normalization divides by `N_a N_b / D² · ∫_bin (D − |τ|) dτ`, the
/// pair count of two uncorrelated streams over the common record length.
pub fn g2_histogram(
    a: &PhotonStream,
    b: &PhotonStream,
    bin_width: f64,
    max_delay: f64,
) -> Result<CorrelationHistogram> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    if !(max_delay >= bin_width) || !max_delay.is_finite() {
        return Err(Error::invalid("max_delay", "must be at least one bin width"));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("photon stream"));
    }
    if (a.duration - b.duration).abs() > 1e-12 * a.duration {
        return Err(Error::invalid("duration", "streams must share a record length"));
    }
    let d = a.duration;
    let n = (max_delay / bin_width).round().max(1.0) as i64;
    let nbins = (2 * n + 1) as usize;
    let half = (n as f64 + 0.5) * bin_width;
    let edges: Vec<f64> = (0..=nbins).map(|i| (i as f64 - n as f64 - 0.5) * bin_width).collect();

    let mut counts = vec![0u64; nbins];
    let mut total = 0u64;
    let mut lo = 0usize;
    for &ta in &a.timestamps {
        while lo < b.len() && b.timestamps[lo] < ta - half {
            lo += 1;
        }
        for &tb in &b.timestamps[lo..] {
            let tau = tb - ta;
            if tau >= half {
                break;
            }
            let k = ((tau + half) / bin_width).floor() as i64;
            if (0..nbins as i64).contains(&k) {
                counts[k as usize] += 1;
                total += 1;
            }
        }
    }
    let scale = a.len() as f64 * b.len() as f64 / (d * d);
    let expected: Vec<f64> = edges.windows(2).map(|e| scale * overlap(e[0], e[1], d)).collect();
    Ok(CorrelationHistogram {
        bin_width,
        normalized: normalize(&counts, &expected),
        bin_edges: edges,
        counts,
        expected,
        total_pairs: total,
    })
}
