use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LossKind {
    /// Categorical cross-entropy.
    #[default]
    #[serde(rename = "CCE")]
    Cce,
    /// Kullback-Leibler divergence.
    #[serde(rename = "KLDE")]
    Klde,
    /// Poisson.
    #[serde(rename = "PSSE")]
    Psse,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Cce, LossKind::Klde, LossKind::Psse];
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CCE" => Ok(LossKind::Cce),
            "KLDE" => Ok(LossKind::Klde),
            "PSSE" => Ok(LossKind::Psse),
            _ => Err(Error::invalid(format!("unknown loss `{s}`"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Cce => "CCE",
            LossKind::Klde => "KLDE",
            LossKind::Psse => "PSSE",
        })
    }
}

fn check_distribution<T: Real>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::invalid(format!("{what} has negative or non-finite entries")));
    }
    let sum = v.iter().copied().fold(T::zero(), |a, b| a + b);
    if (sum - T::one()).abs() > T::epsilon().sqrt() {
        return Err(Error::invalid(format!("{what} sums to {sum:?}, not 1")));
    }
    Ok(())
}

fn clamp<T: Real>(p: T) -> T {
    p.max(T::lit(PROB_FLOOR)).min(T::one())
}

/// Loss of predicted distribution `pred` against `target`.
pub fn loss<T: Real>(pred: &[T], target: &[T], kind: LossKind) -> Result<T> {
    check_distribution(pred, "prediction")?;
    check_distribution(target, "target")?;
    if pred.len() != target.len() {
        return Err(Error::invalid("prediction and target lengths differ"));
    }
    let terms = pred.iter().zip(target).map(|(&p, &t)| (clamp(p), t));
    let zero = T::zero();
    Ok(match kind {
        LossKind::Cce => terms.fold(zero, |acc, (p, t)| acc - t * p.ln()),
        // t (ln t - ln p), with 0 ln 0 = 0. Written this way a one-hot target
        // reproduces the cross-entropy bit for bit.
        LossKind::Klde => terms.fold(zero, |acc, (p, t)| {
            if t > zero {
                acc + t * (t.ln() - p.ln())
            } else {
                acc
            }
        }),
        LossKind::Psse => {
            let k = T::from_count(pred.len() as u64);
            terms.fold(zero, |acc, (p, t)| acc + (p - t * p.ln())) / k
        }
    })
}

/// `d loss / d pred`, zero wherever the clamp is active.
pub(crate) fn loss_gradient<T: Real>(pred: &[T], target: &[T], kind: LossKind) -> Result<Vec<T>> {
    if pred.len() != target.len() {
        return Err(Error::invalid("prediction and target lengths differ"));
    }
    let floor = T::lit(PROB_FLOOR);
    let k = T::from_count(pred.len() as u64);
    Ok(pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            if p < floor {
                return T::zero();
            }
            match kind {
                LossKind::Cce | LossKind::Klde => -t / p,
                LossKind::Psse => (T::one() - t / p) / k,
            }
        })
        .collect())
}

pub fn one_hot<T: Real>(index: usize, len: usize) -> Vec<T> {
    let mut v = vec![T::zero(); len];
    v[index] = T::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let t: Vec<f64> = one_hot(2, 4);
        // A clamped one-hot: floor everywhere else, renormalised.
        let mut p = vec![1e-12; 4];
        p[2] = 1.0 - 3e-12;
        assert!(loss(&p, &t, LossKind::Cce).unwrap() < 1e-11);
        assert!(loss(&p, &t, LossKind::Klde).unwrap() < 1e-11);
        assert!(loss(&t, &t, LossKind::Cce).unwrap().abs() < 1e-15);
    }

    #[test]
    fn uniform_cross_entropy_is_ln_k() {
        let p = vec![0.25f64; 4];
        for i in 0..4 {
            let l = loss(&p, &one_hot(i, 4), LossKind::Cce).unwrap();
            assert!((l - 4f64.ln()).abs() < 1e-15);
            assert!((l - 1.386294).abs() < 1e-6);
        }
    }

    #[test]
    fn klde_equals_cce_for_one_hot() {
        let p = [0.1f64, 0.6, 0.05, 0.25];
        for i in 0..4 {
            let t = one_hot(i, 4);
            assert_eq!(loss(&p, &t, LossKind::Klde).unwrap(), loss(&p, &t, LossKind::Cce).unwrap());
        }
    }

    #[test]
    fn psse_matches_definition() {
        let p = [0.2f64, 0.5, 0.3];
        let t = one_hot(1, 3);
        let expected = (0.2 + (0.5 - 0.5f64.ln()) + 0.3) / 3.0;
        assert!((loss(&p, &t, LossKind::Psse).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn clamp_keeps_loss_finite() {
        let p = [0.0f64, 1.0];
        let l = loss(&p, &one_hot(0, 2), LossKind::Cce).unwrap();
        assert!((l - (-(1e-12f64).ln())).abs() < 1e-9);
        assert!(loss(&p, &one_hot(0, 2), LossKind::Psse).unwrap().is_finite());
    }

    #[test]
    fn non_distribution_rejected() {
        let t: Vec<f64> = one_hot(0, 3);
        assert!(loss(&[0.5, 0.5, 0.5], &t, LossKind::Cce).is_err());
        assert!(loss(&[-0.5, 1.0, 0.5], &t, LossKind::Cce).is_err());
        assert!(loss(&[0.5, 0.5], &t, LossKind::Cce).is_err());
    }

    #[test]
    fn parse_and_display() {
        for k in LossKind::ALL {
            assert_eq!(k.to_string().parse::<LossKind>().unwrap(), k);
        }
        assert_eq!(serde_json::to_string(&LossKind::Klde).unwrap(), "\"KLDE\"");
        assert!("mse".parse::<LossKind>().is_err());
    }
}
