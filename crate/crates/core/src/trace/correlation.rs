//! Sample autocorrelation and partial autocorrelation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlogram values. `degenerate` is set when the input has zero
/// variance; the values are then 1 at lag 0 and 0 elsewhere (ACF) or all
/// zeros (PACF).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

impl Correlogram {
    /// Index (>= `min_lag`) with the largest value. Indices are lags for an
    /// ACF; add one for a PACF, whose first value is lag 1.
    pub fn argmax_from(&self, min_lag: usize) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .skip(min_lag)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
    }

    /// Highest interior local maximum of an ACF, i.e. the dominant
    /// seasonal lag. The lobe decaying from lag 0 is not a peak.
    pub fn peak_lag(&self) -> Option<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&k| v[k] > v[k - 1] && v[k] >= v[k + 1])
            .max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a)))
    }
}

fn check(series: &[f64], max_lag: usize) -> Result<()> {
    if max_lag == 0 || series.len() <= max_lag {
        return Err(Error::param(format!(
            "need series length > max_lag >= 1 (len {}, max_lag {max_lag})",
            series.len()
        )));
    }
    Ok(())
}

/// ACF `r_0..=r_max_lag` with the mean-centred estimator
/// `r_k = Σ (x_t - m)(x_{t+k} - m) / Σ (x_t - m)^2`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    check(series, max_lag)?;
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centred.iter().map(|x| x * x).sum();
    let scale = series.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if denom <= f64::EPSILON * scale * scale * n as f64 {
        let mut values = vec![0.0; max_lag + 1];
        values[0] = 1.0;
        return Ok(Correlogram {
            values,
            degenerate: true,
        });
    }
    let values = (0..=max_lag)
        .map(|k| {
            centred[..n - k]
                .iter()
                .zip(&centred[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect();
    Ok(Correlogram {
        values,
        degenerate: false,
    })
}

/// PACF `φ_11..=φ_{max_lag,max_lag}` via the Durbin–Levinson recursion on
/// the sample ACF.
pub fn partial_autocorrelation(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    let acf = autocorrelation(series, max_lag)?;
    if acf.degenerate {
        return Ok(Correlogram {
            values: vec![0.0; max_lag],
            degenerate: true,
        });
    }
    let r = &acf.values;
    let mut pacf = Vec::with_capacity(max_lag);
    let mut phi = vec![r[1]];
    let mut var = 1.0 - r[1] * r[1];
    pacf.push(r[1]);
    for k in 2..=max_lag {
        if var.abs() < 1e-12 {
            pacf.resize(max_lag, 0.0);
            return Ok(Correlogram {
                values: pacf,
                degenerate: true,
            });
        }
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let phi_kk = num / var;
        let next: Vec<f64> = (1..k)
            .map(|j| phi[j - 1] - phi_kk * phi[k - j - 1])
            .chain(std::iter::once(phi_kk))
            .collect();
        phi = next;
        var *= 1.0 - phi_kk * phi_kk;
        pacf.push(phi_kk);
    }
    Ok(Correlogram {
        values: pacf,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn sinusoid_peaks_at_period() {
        let series: Vec<f64> = (0..1440)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 144.0).sin())
            .collect();
        let acf = autocorrelation(&series, 200).unwrap();
        assert_eq!(acf.peak_lag(), Some(144));
    }

    #[test]
    fn repeated_random_pattern_peaks_at_period() {
        let pattern = white_noise(37, 2);
        let series: Vec<f64> = (0..37 * 12).map(|t| pattern[t % 37]).collect();
        let acf = autocorrelation(&series, 60).unwrap();
        assert_eq!(acf.argmax_from(1), Some(37));
        assert_eq!(acf.peak_lag(), Some(37));
    }

    #[test]
    fn lag_zero_is_one() {
        let acf = autocorrelation(&[1.0, 3.0, 2.0, 7.0, 4.0], 3).unwrap();
        assert!((acf.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn white_noise_acf_is_small() {
        let acf = autocorrelation(&white_noise(10_000, 7), 50).unwrap();
        assert!(acf.values[1..].iter().all(|r| r.abs() < 0.05));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let acf = autocorrelation(&[5.0; 20], 4).unwrap();
        assert!(acf.degenerate);
        assert_eq!(acf.values, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let pacf = partial_autocorrelation(&[5.0; 20], 4).unwrap();
        assert!(pacf.degenerate);
        assert_eq!(pacf.values, vec![0.0; 4]);
    }

    #[test]
    fn lag_bounds_checked() {
        assert!(autocorrelation(&[1.0, 2.0], 2).is_err());
        assert!(autocorrelation(&[1.0, 2.0, 3.0], 0).is_err());
    }

    #[test]
    fn pacf_first_lag_equals_acf() {
        let x = white_noise(500, 3);
        let acf = autocorrelation(&x, 5).unwrap();
        let pacf = partial_autocorrelation(&x, 5).unwrap();
        assert_eq!(pacf.values[0], acf.values[1]);
    }

    #[test]
    fn ar1_pacf_cuts_off() {
        let eps = white_noise(20_000, 11);
        let mut x = Vec::with_capacity(eps.len());
        let mut prev = 0.0;
        for e in eps {
            prev = 0.8 * prev + e;
            x.push(prev);
        }
        let pacf = partial_autocorrelation(&x, 10).unwrap();
        assert!(
            (pacf.values[0] - 0.8).abs() < 0.05,
            "phi11 = {}",
            pacf.values[0]
        );
        assert!(pacf.values[1..].iter().all(|p| p.abs() < 0.05));
    }

    #[test]
    fn white_noise_pacf_is_small() {
        let pacf = partial_autocorrelation(&white_noise(10_000, 5), 30).unwrap();
        assert!(pacf.values.iter().all(|p| p.abs() < 0.05));
    }

    /// Brute-force oracle: φ_kk is the last coefficient of the order-k
    /// Yule–Walker solution, solved by Gaussian elimination.
    fn yule_walker_last(r: &[f64], k: usize) -> f64 {
        let mut a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| r[i.abs_diff(j)]).collect();
                row.push(r[i + 1]);
                row
            })
            .collect();
        for col in 0..k {
            let piv = (col..k)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for row in 0..k {
                if row != col {
                    let f = a[row][col] / a[col][col];
                    let pivot = a[col].clone();
                    for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
        a[k - 1][k] / a[k - 1][k - 1]
    }

    #[test]
    fn durbin_levinson_matches_yule_walker() {
        let eps = white_noise(2_000, 21);
        let x: Vec<f64> = eps
            .windows(3)
            .map(|w| w[0] + 0.5 * w[1] - 0.3 * w[2])
            .collect();
        let acf = autocorrelation(&x, 8).unwrap();
        let pacf = partial_autocorrelation(&x, 8).unwrap();
        for k in 1..=8 {
            let oracle = yule_walker_last(&acf.values, k);
            assert!((pacf.values[k - 1] - oracle).abs() < 1e-9, "lag {k}");
        }
    }
}
