use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::interp::SnapshotMap;

/// Closed-form oracle functions for exercising the interpolation code
/// without the FOM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticKind {
    /// `1 / (1 + 25 y²)`, one parameter, scalar.
    Runge,
    /// `exp(Σ y_j / 2)`, scalar.
    TensorExp,
    /// `sin(k π (Σ y_j + i/D))` for `i = 0..D`.
    SineField { k: f64 },
}

impl AnalyticKind {
    /// Evaluates at `y`; `len` is only used by the vector-valued kind.
    pub fn evaluate(self, y: &[f64], len: usize) -> Vec<f64> {
        match self {
            AnalyticKind::Runge => vec![1.0 / (1.0 + 25.0 * y[0] * y[0])],
            AnalyticKind::TensorExp => vec![(0.5 * y.iter().sum::<f64>()).exp()],
            AnalyticKind::SineField { k } => {
                let s: f64 = y.iter().sum();
                (0..len)
                    .map(|i| (k * PI * (s + i as f64 / len as f64)).sin())
                    .collect()
            }
        }
    }
}

impl fmt::Display for AnalyticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticKind::Runge => write!(f, "runge"),
            AnalyticKind::TensorExp => write!(f, "tensor-exp"),
            AnalyticKind::SineField { k } => write!(f, "sine:{k}"),
        }
    }
}

impl FromStr for AnalyticKind {
    type Err = Error;

    /// `runge`, `tensor-exp`, `sine` or `sine:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "runge" => Ok(AnalyticKind::Runge),
            "tensor-exp" => Ok(AnalyticKind::TensorExp),
            "sine" => Ok(AnalyticKind::SineField { k: 1.0 }),
            other => {
                if let Some(k) = other.strip_prefix("sine:") {
                    let k: f64 = k
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad wave number in {other:?}")))?;
                    Ok(AnalyticKind::SineField { k })
                } else {
                    Err(Error::InvalidInput(format!("unknown analytic kind {other:?}")))
                }
            }
        }
    }
}

/// Snapshot map around an [`AnalyticKind`], counting its evaluations.
#[derive(Debug)]
pub struct AnalyticMap {
    kind: AnalyticKind,
    dim: usize,
    len: usize,
    calls: AtomicUsize,
}

impl AnalyticMap {
    pub fn new(kind: AnalyticKind, dim: usize, len: usize) -> Result<Self> {
        let ok = match kind {
            AnalyticKind::Runge => dim == 1 && len == 1,
            AnalyticKind::TensorExp => dim >= 1 && len == 1,
            AnalyticKind::SineField { .. } => dim >= 1 && len >= 1,
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "{kind} does not support d={dim}, D={len}"
            )));
        }
        Ok(Self {
            kind,
            dim,
            len,
            calls: AtomicUsize::new(0),
        })
    }

    /// Convenience constructor with the natural output length.
    pub fn scalar(kind: AnalyticKind, dim: usize) -> Result<Self> {
        Self::new(kind, dim, 1)
    }

    pub fn kind(&self) -> AnalyticKind {
        self.kind
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl SnapshotMap for AnalyticMap {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn output_len(&self) -> usize {
        self.len
    }

    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        if y.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("{y:?} outside [-1, 1]^d")));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.kind.evaluate(y, self.len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let r = AnalyticMap::scalar(AnalyticKind::Runge, 1).unwrap();
        assert_eq!(r.evaluate(&[0.0]).unwrap(), vec![1.0]);
        assert_eq!(r.evaluate(&[1.0]).unwrap(), vec![1.0 / 26.0]);
        assert_eq!(r.evaluate(&[-1.0]).unwrap(), vec![1.0 / 26.0]);
        let e = AnalyticMap::scalar(AnalyticKind::TensorExp, 2).unwrap();
        assert_eq!(e.evaluate(&[0.0, 0.0]).unwrap(), vec![1.0]);
        assert_eq!(r.calls() + e.calls(), 4);
    }

    #[test]
    fn sine_field_shape() {
        let s = AnalyticMap::new(AnalyticKind::SineField { k: 2.0 }, 3, 8).unwrap();
        let v = s.evaluate(&[0.1, -0.2, 0.3]).unwrap();
        assert_eq!(v.len(), 8);
        assert!((v[0] - (2.0 * PI * 0.2).sin()).abs() < 1e-15);
    }

    #[test]
    fn parsing_and_errors() {
        assert_eq!("runge".parse::<AnalyticKind>().unwrap(), AnalyticKind::Runge);
        assert_eq!("sine:3".parse::<AnalyticKind>().unwrap(), AnalyticKind::SineField { k: 3.0 });
        assert_eq!(
            AnalyticKind::SineField { k: 1.5 }.to_string().parse::<AnalyticKind>().unwrap(),
            AnalyticKind::SineField { k: 1.5 }
        );
        assert!("bessel".parse::<AnalyticKind>().is_err());
        assert!(AnalyticMap::scalar(AnalyticKind::Runge, 2).is_err());
        let r = AnalyticMap::scalar(AnalyticKind::Runge, 1).unwrap();
        assert!(matches!(r.evaluate(&[1.2]), Err(Error::Domain(_))));
    }
}
