use crate::domain::Prediction;
use crate::error::{Error, Result};

/// Accuracy over the answered entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub value: f64,
    pub answered: usize,
    /// Set when nothing was answered; `value` is then 0.
    pub empty_coverage: bool,
}

pub fn accuracy(predictions: &[Prediction], truth: &[usize]) -> Result<Accuracy> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut answered = 0usize;
    let mut correct = 0usize;
    for (p, &y) in predictions.iter().zip(truth) {
        if let Prediction::Class(k) = p {
            answered += 1;
            if *k == y {
                correct += 1;
            }
        }
    }
    Ok(if answered == 0 {
        Accuracy {
            value: 0.0,
            answered: 0,
            empty_coverage: true,
        }
    } else {
        Accuracy {
            value: correct as f64 / answered as f64,
            answered,
            empty_coverage: false,
        }
    })
}

/// Fraction of answered entries. An empty input is vacuously fully covered.
pub fn coverage(predictions: &[Prediction]) -> f64 {
    if predictions.is_empty() {
        log::warn!("coverage of an empty prediction list is vacuous; reporting 1.0");
        return 1.0;
    }
    let answered = predictions.iter().filter(|p| p.is_answered()).count();
    answered as f64 / predictions.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use Prediction::{Class, Reject};

    #[test]
    fn all_correct() {
        let a = accuracy(&[Class(0), Class(1)], &[0, 1]).unwrap();
        assert_eq!(a.value, 1.0);
        assert!(!a.empty_coverage);
    }

    #[test]
    fn rejections_excluded() {
        let a = accuracy(&[Class(1), Reject, Class(0)], &[1, 1, 1]).unwrap();
        assert_eq!(a.value, 0.5);
        assert_eq!(a.answered, 2);
    }

    #[test]
    fn nothing_answered_flags() {
        let a = accuracy(&[Reject, Reject], &[0, 1]).unwrap();
        assert_eq!(a.value, 0.0);
        assert!(a.empty_coverage);
    }

    #[test]
    fn length_mismatch() {
        assert!(accuracy(&[Reject], &[0, 1]).is_err());
    }

    #[test]
    fn coverage_cases() {
        assert_eq!(coverage(&[Class(0), Class(1)]), 1.0);
        assert_eq!(coverage(&[Class(0), Reject, Class(1), Reject]), 0.5);
        assert_eq!(coverage(&[]), 1.0);
    }
}
