//! Calibrated linear batch-time models fitted with non-negative least
//! squares (bias unconstrained) so predictions stay monotone in every
//! batch feature.

use super::features::{BatchFeatures, FEATURE_NAMES, NUM_FEATURES};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// One profiled batch: its features and the observed wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub features: BatchFeatures,
    pub observed_seconds: f64,
}

/// Linear batch-time model; all non-bias coefficients are >= 0 by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCostModel {
    /// One weight per feature, bias first (see [`FEATURE_NAMES`]).
    pub coefficients: [f64; NUM_FEATURES],
    pub r_squared: f64,
}

impl LinearCostModel {
    pub fn predict(&self, features: &BatchFeatures) -> f64 {
        let v = features.to_vector();
        self.coefficients.iter().zip(v.iter()).map(|(w, x)| w * x).sum()
    }

    pub fn from_coefficients(coefficients: [f64; NUM_FEATURES]) -> Self {
        LinearCostModel { coefficients, r_squared: f64::NAN }
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("design matrix is rank-deficient; collinear features: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("sample {index} has non-positive observed time {seconds}")]
    NonPositiveObservation { index: usize, seconds: f64 },
    #[error("fitted model predicts non-positive time for a minimal batch")]
    NonPositivePrediction,
    #[error("profile csv: {0}")]
    Csv(String),
}

/// Fits by Lawson-Hanson active-set NNLS. The bias column stays in the
/// passive set throughout, leaving it unconstrained in sign.
pub fn fit_linear(samples: &[ProfileSample]) -> Result<LinearCostModel, FitError> {
    if samples.len() < 2 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.observed_seconds <= 0.0 {
            return Err(FitError::NonPositiveObservation { index: i, seconds: s.observed_seconds });
        }
    }

    let n = samples.len();
    let full = DMatrix::from_fn(n, NUM_FEATURES, |r, c| samples[r].features.to_vector()[c]);
    let y = DVector::from_fn(n, |r, _| samples[r].observed_seconds);

    // All-zero columns carry no information; they get coefficient 0.
    let active_cols: Vec<usize> = (0..NUM_FEATURES)
        .filter(|&c| full.column(c).iter().any(|v| *v != 0.0))
        .collect();
    check_collinearity(&full, &active_cols)?;

    let a = full.select_columns(active_cols.iter());
    let x_active = nnls_free_bias(&a, &y);

    let mut coefficients = [0.0; NUM_FEATURES];
    for (k, &col) in active_cols.iter().enumerate() {
        coefficients[col] = x_active[k];
    }

    let predictions = &a * &x_active;
    let r_squared = r2(&y, &predictions);

    let model = LinearCostModel { coefficients, r_squared };
    let unit_decode = BatchFeatures { sum_c: 1, n_decode: 1, ..Default::default() };
    if model.predict(&unit_decode) <= 0.0 {
        return Err(FitError::NonPositivePrediction);
    }
    Ok(model)
}

fn r2(y: &DVector<f64>, pred: &DVector<f64>) -> f64 {
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(pred.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res < 1e-18 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Rejects designs where a non-zero column is (numerically) a linear
/// combination of the earlier ones, naming the offending features.
fn check_collinearity(full: &DMatrix<f64>, active_cols: &[usize]) -> Result<(), FitError> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut collinear = Vec::new();
    for &c in active_cols {
        let mut v: DVector<f64> = full.column(c).into();
        let norm0 = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() <= 1e-10 * norm0.max(1.0) {
            collinear.push(FEATURE_NAMES[c].to_string());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    if collinear.is_empty() {
        Ok(())
    } else {
        Err(FitError::RankDeficient(collinear))
    }
}

/// Lawson-Hanson NNLS where column 0 (the bias) is exempt from the sign
/// constraint. Columns are the active (non-zero) features of the design.
fn nnls_free_bias(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let ncols = a.ncols();
    let mut x = DVector::zeros(ncols);
    // Passive set starts with the bias column when present.
    let mut passive: Vec<bool> = vec![false; ncols];
    passive[0] = true;
    solve_passive(a, y, &passive, &mut x);

    let tol = 1e-12 * y.norm().max(1.0);
    for _ in 0..(10 * ncols + 10) {
        let residual = y - a * &x;
        let gradient = a.transpose() * residual;
        let mut best: Option<(usize, f64)> = None;
        for j in 1..ncols {
            if !passive[j] && gradient[j] > tol {
                if best.map_or(true, |(_, g)| gradient[j] > g) {
                    best = Some((j, gradient[j]));
                }
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;

        // Inner loop: retreat until the passive solution is feasible.
        loop {
            let mut z = x.clone();
            solve_passive(a, y, &passive, &mut z);
            let violators: Vec<usize> =
                (1..ncols).filter(|&j| passive[j] && z[j] < 0.0).collect();
            if violators.is_empty() {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &violators {
                let step = x[j] / (x[j] - z[j]);
                alpha = alpha.min(step);
            }
            x = &x + (z - &x) * alpha;
            for j in 1..ncols {
                if passive[j] && x[j].abs() <= 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// Least squares restricted to the passive columns; others forced to zero.
fn solve_passive(a: &DMatrix<f64>, y: &DVector<f64>, passive: &[bool], x: &mut DVector<f64>) {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    if cols.is_empty() {
        x.fill(0.0);
        return;
    }
    let sub = a.select_columns(cols.iter());
    let svd = sub.svd(true, true);
    let sol = svd.solve(y, 1e-12).expect("svd solve");
    x.fill(0.0);
    for (k, &j) in cols.iter().enumerate() {
        x[j] = sol[k];
    }
}

const PROFILE_HEADER: &str = "sum_c,sum_c2_prefill,sum_mc_prefill,sum_m_decode,n_prefill,n_decode,seconds";

pub fn write_profile_csv<W: Write>(samples: &[ProfileSample], mut w: W) -> Result<(), FitError> {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for s in samples {
        let f = s.features;
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.12e}\n",
            f.sum_c, f.sum_c2_prefill, f.sum_mc_prefill, f.sum_m_decode, f.n_prefill, f.n_decode,
            s.observed_seconds
        ));
    }
    w.write_all(out.as_bytes()).map_err(|e| FitError::Csv(e.to_string()))
}

pub fn read_profile_csv<R: Read>(r: R) -> Result<Vec<ProfileSample>, FitError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr.headers().map_err(|e| FitError::Csv(e.to_string()))?.clone();
    let expected: Vec<&str> = PROFILE_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(FitError::Csv(format!("unexpected header: {headers:?}")));
    }
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FitError::Csv(e.to_string()))?;
        let parse_u = |k: usize| -> Result<u64, FitError> {
            rec[k].trim().parse().map_err(|_| FitError::Csv(format!("row {}: bad field {k}", i + 2)))
        };
        let features = BatchFeatures {
            sum_c: parse_u(0)?,
            sum_c2_prefill: parse_u(1)?,
            sum_mc_prefill: parse_u(2)?,
            sum_m_decode: parse_u(3)?,
            n_prefill: parse_u(4)?,
            n_decode: parse_u(5)?,
        };
        let observed_seconds: f64 = rec[6]
            .trim()
            .parse()
            .map_err(|_| FitError::Csv(format!("row {}: bad seconds", i + 2)))?;
        samples.push(ProfileSample { features, observed_seconds });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(sum_c: u64, extra: BatchFeatures, seconds: f64) -> ProfileSample {
        ProfileSample { features: BatchFeatures { sum_c, ..extra }, observed_seconds: seconds }
    }

    #[test]
    fn recovers_exact_linear_data() {
        let samples: Vec<_> = (1..=16)
            .map(|c| sample(c, BatchFeatures { n_prefill: 1, ..Default::default() }, 0.002 + 0.0005 * c as f64))
            .collect();
        // n_prefill is constant 1 here, collinear with the bias.
        let samples: Vec<_> = samples
            .into_iter()
            .map(|mut s| {
                s.features.n_prefill = 0;
                s
            })
            .collect();
        let model = fit_linear(&samples).unwrap();
        assert!((model.coefficients[0] - 0.002).abs() < 1e-9);
        assert!((model.coefficients[1] - 0.0005).abs() < 1e-9);
        for c in &model.coefficients[2..] {
            assert_eq!(*c, 0.0);
        }
        assert!((model.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_percent_noise_keeps_r2_high() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<_> = (1..=200)
            .map(|c| {
                let y = 0.002 + 0.0005 * c as f64;
                let noisy = y * (1.0 + 0.01 * rng.gen_range(-1.0..1.0));
                sample(c, BatchFeatures::default(), noisy)
            })
            .collect();
        let model = fit_linear(&samples).unwrap();
        assert!(model.r_squared >= 0.99, "r2 = {}", model.r_squared);
    }

    #[test]
    fn single_sample_is_rejected() {
        let s = sample(1, BatchFeatures::default(), 1.0);
        assert!(matches!(fit_linear(&[s]), Err(FitError::TooFewSamples(1))));
    }

    #[test]
    fn collinear_columns_are_named() {
        // n_prefill duplicated into n_decode exactly: collinear.
        let samples: Vec<_> = (1..=8)
            .map(|c| {
                sample(
                    c,
                    BatchFeatures { n_prefill: c, n_decode: c, ..Default::default() },
                    0.01 * c as f64 + 0.001,
                )
            })
            .collect();
        match fit_linear(&samples) {
            Err(FitError::RankDeficient(names)) => {
                assert!(names.iter().any(|n| n == "n_decode" || n == "n_prefill"), "{names:?}");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn coefficients_stay_non_negative() {
        // Decreasing trend in sum_m_decode would want a negative weight.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<_> = (1..=50u64)
            .map(|i| {
                let m = i * i;
                let y = 0.5 - 1e-4 * m as f64 + rng.gen_range(0.0..1e-6);
                sample(
                    i,
                    BatchFeatures { sum_m_decode: m, n_decode: (i % 4) + 1, ..Default::default() },
                    y,
                )
            })
            .collect();
        let model = fit_linear(&samples).unwrap();
        for c in &model.coefficients[1..] {
            assert!(*c >= 0.0);
        }
    }

    #[test]
    fn profile_csv_roundtrip() {
        let samples = vec![
            sample(514, BatchFeatures { sum_c2_prefill: 262_144, n_prefill: 1, n_decode: 2, sum_m_decode: 100, ..Default::default() }, 0.015),
            sample(1, BatchFeatures { n_decode: 1, sum_m_decode: 9, ..Default::default() }, 0.002),
        ];
        let mut buf = Vec::new();
        write_profile_csv(&samples, &mut buf).unwrap();
        let back = read_profile_csv(buf.as_slice()).unwrap();
        assert_eq!(samples, back);
    }
}
