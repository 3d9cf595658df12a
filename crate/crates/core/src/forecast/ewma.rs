//! Exponentially weighted moving average.

use crate::error::{Error, Result};

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "smoothing factor {alpha} outside (0, 1]"
        )))
    }
}

/// One step of `S_t = α·Y_t + (1 − α)·S_{t−1}`, with `S_1 = Y_1` when there
/// is no previous state.
pub fn ewma_update(prev: Option<f64>, y: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match prev {
        None => y,
        Some(s) => alpha * y + (1.0 - alpha) * s,
    })
}

/// Folds `values` through [`ewma_update`]; `None` for an empty slice.
pub fn ewma_fold(values: &[f64], alpha: f64) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    Ok(values.iter().fold(None, |s, &y| {
        Some(s.map_or(y, |s| alpha * y + (1.0 - alpha) * s))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed form: α Σ_{i<t−1} (1−α)^i Y_{t−i} + (1−α)^{t−1} Y_1.
    fn closed_form(ys: &[f64], alpha: f64) -> f64 {
        let t = ys.len();
        let mut acc = (1.0 - alpha).powi(t as i32 - 1) * ys[0];
        for i in 0..t - 1 {
            acc += alpha * (1.0 - alpha).powi(i as i32) * ys[t - 1 - i];
        }
        acc
    }

    #[test]
    fn base_case_returns_observation() {
        assert_eq!(ewma_update(None, 4.0, 0.3).unwrap(), 4.0);
    }

    #[test]
    fn recursion_step() {
        assert_eq!(ewma_update(Some(4.0), 8.0, 0.5).unwrap(), 6.0);
    }

    #[test]
    fn fold_matches_closed_form() {
        let ys = [1.0, 2.0, 3.0, 4.0];
        let folded = ewma_fold(&ys, 0.3).unwrap().unwrap();
        assert!((folded - closed_form(&ys, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn alpha_range_enforced() {
        assert!(ewma_update(None, 1.0, 0.0).is_err());
        assert!(ewma_update(None, 1.0, 1.5).is_err());
        assert!(ewma_update(None, 1.0, f64::NAN).is_err());
        assert_eq!(ewma_update(Some(3.0), 1.0, 1.0).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn fold_equals_closed_form(
            ys in prop::collection::vec(-1e6f64..1e6, 1..200),
            alpha in 0.001f64..=1.0,
        ) {
            let folded = ewma_fold(&ys, alpha).unwrap().unwrap();
            let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs())).max(1e-300);
            prop_assert!((folded - closed_form(&ys, alpha)).abs() <= 1e-9 * scale);
        }
    }
}
