//! Timing response of the intensity-correlation setup.

use serde::{Deserialize, Serialize};

use super::response::InstrumentResponse;
use crate::correlation::{CorrelationKind, CorrelationTrace};
use crate::error::{Error, Result};

/// A correlation as the instrument records it, with the ideal trace kept
/// alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentView {
    pub raw: CorrelationTrace,
    pub observed: CorrelationTrace,
}

/// Convolves a `g²` trace with the timing response.
///
/// The trace must sit on a uniform grid starting at zero delay. It is
/// mirrored to negative delays using `g²(−τ) = g²(τ)` and held at its last
/// value beyond the end, which preserves the `τ → ∞` limit. The response is
/// integrated over each grid cell so that the discrete kernel has unit sum.
pub fn irf_convolve_correlation(trace: &CorrelationTrace, irf: &InstrumentResponse) -> Result<InstrumentView> {
    if trace.kind != CorrelationKind::G2 {
        return Err(Error::Unsupported("IRF convolution expects a g2 trace".into()));
    }
    irf.validate()?;
    let n = trace.len();
    if n < 2 {
        return Err(Error::Empty("correlation trace needs at least two delays"));
    }
    let d = &trace.delays;
    if d[0].abs() > 1e-12 * d[n - 1].abs().max(f64::MIN_POSITIVE) {
        return Err(Error::invalid("delays", "must start at zero delay"));
    }
    let dt = (d[n - 1] - d[0]) / (n - 1) as f64;
    if !(dt > 0.0) || d.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::invalid("delays", "must be uniformly spaced and increasing"));
    }
    let span = d[n - 1];
    let support = irf.support();
    if support > span {
        return Err(Error::ResponseTooWide { support, trace: span });
    }
    if matches!(irf, InstrumentResponse::Delta) {
        return Ok(InstrumentView {
            raw: trace.clone(),
            observed: trace.clone(),
        });
    }
    let half = (support / dt).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let c = (j as f64 - half as f64) * dt;
            irf.cell_weight(c - 0.5 * dt, c + 0.5 * dt)
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::invalid("irf", "response has no weight on the trace grid"));
    }
    kernel.iter_mut().for_each(|k| *k /= sum);

    let v = &trace.values;
    let at = |i: isize| -> f64 {
        let k = i.unsigned_abs();
        if k < n {
            v[k]
        } else {
            v[n - 1]
        }
    };
    let observed = (0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, k)| k * at(i - (j as isize - half as isize)))
                .sum()
        })
        .collect();
    Ok(InstrumentView {
        raw: trace.clone(),
        observed: CorrelationTrace::new(d.clone(), observed, CorrelationKind::G2),
    })
}
