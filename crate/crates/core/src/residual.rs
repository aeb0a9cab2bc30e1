//! Residual control: the model-based command F·s plus the data-driven
//! command, saturated by the actuator limits.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ResidualError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("action limits must satisfy lo < hi elementwise")]
    InvalidLimits,
}

/// Elementwise actuator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionLimits {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl ActionLimits {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self, ResidualError> {
        if lo.len() != hi.len() {
            return Err(ResidualError::DimensionMismatch(format!(
                "lo has length {} but hi has length {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l >= h) {
            return Err(ResidualError::InvalidLimits);
        }
        Ok(Self { lo, hi })
    }

    pub fn symmetric(limit: f64, dim: usize) -> Self {
        Self {
            lo: DVector::from_element(dim, -limit),
            hi: DVector::from_element(dim, limit),
        }
    }
}

/// Combined command with the saturation record; `raw` keeps the pre-clamp sum
/// so the actuator bound and the stated command remain separately auditable.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedAction {
    pub action: DVector<f64>,
    pub raw: DVector<f64>,
    pub saturated: bool,
}

/// a_phy = F·s.
pub fn model_based_action(
    f: &DMatrix<f64>,
    s: &DVector<f64>,
) -> Result<DVector<f64>, ResidualError> {
    if f.ncols() != s.len() {
        return Err(ResidualError::DimensionMismatch(format!(
            "F has {} columns but state has length {}",
            f.ncols(),
            s.len()
        )));
    }
    Ok(f * s)
}

/// a = clamp(a_drl + a_phy, lo, hi). Saturation applies to the sum; the raw
/// sum is returned alongside.
pub fn combine(
    a_drl: &DVector<f64>,
    a_phy: &DVector<f64>,
    limits: &ActionLimits,
) -> Result<CombinedAction, ResidualError> {
    let m = limits.lo.len();
    if a_drl.len() != m || a_phy.len() != m {
        return Err(ResidualError::DimensionMismatch(format!(
            "actions have lengths {}/{} but limits are over R^{m}",
            a_drl.len(),
            a_phy.len()
        )));
    }
    let raw = a_drl + a_phy;
    let mut action = raw.clone();
    let mut saturated = false;
    for i in 0..m {
        if action[i] < limits.lo[i] {
            action[i] = limits.lo[i];
            saturated = true;
        } else if action[i] > limits.hi[i] {
            action[i] = limits.hi[i];
            saturated = true;
        }
    }
    Ok(CombinedAction {
        action,
        raw,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> ActionLimits {
        ActionLimits::symmetric(16.0, 1)
    }

    #[test]
    fn zero_state_gives_zero_command() {
        let f = DMatrix::from_row_slice(1, 4, &[8.0, 6.0, 40.0, 6.0]);
        let s = DVector::zeros(4);
        assert_eq!(model_based_action(&f, &s).unwrap(), DVector::zeros(1));
    }

    #[test]
    fn paper_gain_row_example() {
        let f = DMatrix::from_row_slice(
            1,
            4,
            &[8.25691599, 6.76016534, 40.12484514, 6.84742553],
        );
        let s = DVector::from_row_slice(&[0.1, 0.0, 0.0, 0.0]);
        let a = model_based_action(&f, &s).unwrap();
        assert!((a[0] - 0.825691599).abs() < 1e-12);
    }

    #[test]
    fn basis_expansion_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = DMatrix::from_fn(2, 3, |_, _| rng.gen_range(-2.0..2.0f64));
        let s = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0f64));
        let a = model_based_action(&f, &s).unwrap();
        let mut expected = DVector::zeros(2);
        for j in 0..3 {
            expected += f.column(j) * s[j];
        }
        assert!((a - expected).amax() < 1e-13);
    }

    #[test]
    fn pure_model_based_mode() {
        let a_phy = DVector::from_element(1, 20.0);
        let out = combine(&DVector::zeros(1), &a_phy, &limits()).unwrap();
        assert_eq!(out.action[0], 16.0);
        assert_eq!(out.raw[0], 20.0);
        assert!(out.saturated);
    }

    #[test]
    fn clamp_and_additive_cases() {
        let out = combine(
            &DVector::from_element(1, 3.0),
            &DVector::from_element(1, 15.0),
            &limits(),
        )
        .unwrap();
        assert_eq!(out.action[0], 16.0);
        assert!(out.saturated);

        let out = combine(
            &DVector::from_element(1, -2.0),
            &DVector::from_element(1, 5.0),
            &limits(),
        )
        .unwrap();
        assert_eq!(out.action[0], 3.0);
        assert!(!out.saturated);
    }

    #[test]
    fn combine_is_symmetric_and_bounded() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lims = limits();
        for _ in 0..200 {
            let a = DVector::from_element(1, rng.gen_range(-30.0..30.0f64));
            let b = DVector::from_element(1, rng.gen_range(-30.0..30.0f64));
            let ab = combine(&a, &b, &lims).unwrap();
            let ba = combine(&b, &a, &lims).unwrap();
            assert_eq!(ab.action, ba.action);
            assert!(ab.action[0] >= -16.0 && ab.action[0] <= 16.0);
        }
    }
}
