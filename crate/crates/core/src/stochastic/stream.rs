//! Photon streams and their text format.
//!
//! ```text
//! # duration=1.000000000e-2 seed=42 channel=A
//! 1.23456789e-9
//! 4.56789012e-9
//! ```
//!
//! Timestamps are written in the shortest form that parses back to the
//! same `f64`, so a stream survives a write/read cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time-ordered detection (or emission) times in `[0, duration)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonStream {
    pub timestamps: Vec<f64>,
    pub duration: f64,
    pub channel: String,
    /// Seed the stream was generated with, if any.
    pub seed: Option<u64>,
}

impl PhotonStream {
    pub fn new(timestamps: Vec<f64>, duration: f64, channel: impl Into<String>) -> Result<Self> {
        let s = PhotonStream {
            timestamps,
            duration,
            channel: channel.into(),
            seed: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(duration: f64, channel: impl Into<String>) -> Result<Self> {
        Self::new(Vec::new(), duration, channel)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::invalid(
                "duration",
                format!("must be positive, got {}", self.duration),
            ));
        }
        if self.channel.chars().any(char::is_whitespace) {
            return Err(Error::invalid("channel", "must not contain whitespace"));
        }
        if let Some(&t) = self.timestamps.first() {
            if !(t >= 0.0) {
                return Err(Error::invalid("timestamps", "must be >= 0"));
            }
        }
        if let Some(&t) = self.timestamps.last() {
            if !(t < self.duration) {
                return Err(Error::invalid("timestamps", "must be < duration"));
            }
        }
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("timestamps", "must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Mean count rate (1/s).
    pub fn rate(&self) -> f64 {
        self.len() as f64 / self.duration
    }

    /// Intervals between consecutive events.
    pub fn waiting_times(&self) -> Vec<f64> {
        self.timestamps.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * self.len() + 64);
        let _ = write!(out, "# duration={:.9e}", self.duration);
        if let Some(seed) = self.seed {
            let _ = write!(out, " seed={seed}");
        }
        let _ = writeln!(out, " channel={}", self.channel);
        for &t in &self.timestamps {
            let _ = writeln!(out, "{t:e}");
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut duration = None;
        let mut seed = None;
        let mut channel = None;
        let mut timestamps = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                for field in header.split_whitespace() {
                    let Some((key, value)) = field.split_once('=') else {
                        continue;
                    };
                    let bad = |e: &dyn std::fmt::Display| Error::Parse {
                        line: lineno,
                        message: format!("{key}: {e}"),
                    };
                    match key {
                        "duration" => duration = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
                        "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(&e))?),
                        "channel" => channel = Some(value.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            let t: f64 = trimmed.parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("timestamp `{trimmed}`: {e}"),
            })?;
            if let Some(&prev) = timestamps.last() {
                if !(t > prev) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "timestamps must be strictly increasing".into(),
                    });
                }
            }
            timestamps.push(t);
        }
        let duration = duration.ok_or(Error::Parse {
            line: 1,
            message: "missing `duration=` header".into(),
        })?;
        let stream = PhotonStream {
            timestamps,
            duration,
            channel: channel.unwrap_or_else(|| "A".into()),
            seed,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let s = PhotonStream::new(vec![0.0, 1.5e-9, 2.25e-6], 1e-3, "A")
            .unwrap()
            .with_seed(7);
        let text = s.to_text();
        assert!(text.starts_with("# duration=1.000000000e-3 seed=7 channel=A\n"));
        assert!(text.contains("\n1.5e-9\n"));
        let back = PhotonStream::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn close_neighbours_stay_distinct() {
        let s = PhotonStream::new(vec![1.0e-3, 1.0e-3 + 1e-15], 1.0, "B").unwrap();
        let back = PhotonStream::read_from(s.to_text().as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back.timestamps[1] > back.timestamps[0]);
    }

    #[test]
    fn rejects_ties_and_bad_headers() {
        assert!(PhotonStream::read_from("# duration=1\n0.5\n0.5\n".as_bytes()).is_err());
        assert!(PhotonStream::read_from("0.5\n".as_bytes()).is_err());
        assert!(PhotonStream::read_from("# duration=1\n2.0\n".as_bytes()).is_err());
        match PhotonStream::read_from("# duration=1\n0.1\nabc\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        assert!(PhotonStream::new(vec![0.2, 0.1], 1.0, "A").is_err());
        assert!(PhotonStream::new(vec![1.0], 1.0, "A").is_err());
        assert!(PhotonStream::new(vec![], 0.0, "A").is_err());
        assert!(PhotonStream::new(vec![], 1.0, "A B").is_err());
    }
}
