//! Return-series ingestion and validated asset universes.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Relative element-wise tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Per-period simple returns, one row per period and one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    labels: Vec<String>,
    observations: Vec<Vec<f64>>,
}

impl ReturnSeries {
    pub fn new(labels: Vec<String>, observations: Vec<Vec<f64>>) -> Result<Self> {
        validate_labels(&labels, 1)?;
        let n = labels.len();
        for (i, row) in observations.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape {
                    line: i + 2,
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("non-finite return {v}"),
                });
            }
        }
        if observations.len() < n + 1 {
            return Err(Error::InsufficientData {
                assets: n,
                required: n + 1,
                found: observations.len(),
            });
        }
        Ok(Self {
            labels,
            observations,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn num_assets(&self) -> usize {
        self.labels.len()
    }

    pub fn num_periods(&self) -> usize {
        self.observations.len()
    }
}

/// Controls the checks applied when building an [`AssetUniverse`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Validation {
    /// Accept expected returns that are zero or negative.
    pub allow_nonpositive_returns: bool,
}

/// Asset labels, expected returns `r` and covariance `σ`.
///
/// Construction validates that `σ` is symmetric and positive definite and,
/// unless relaxed through [`Validation`], that every expected return is
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetUniverse {
    labels: Vec<String>,
    expected_returns: Vec<f64>,
    covariance: Matrix,
}

impl AssetUniverse {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn expected_returns(&self) -> &[f64] {
        &self.expected_returns
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(&self.covariance)
    }

    /// `yᵀ σ y`.
    pub fn variance_of(&self, amounts: &[f64]) -> f64 {
        self.covariance.quadratic_form(amounts)
    }

    /// Same assets with the covariance multiplied by `factor`.
    pub fn with_scaled_covariance(&self, factor: f64) -> Result<Self> {
        universe_from_parts_with(
            self.labels.clone(),
            self.expected_returns.clone(),
            self.covariance.scaled(factor),
            Validation {
                allow_nonpositive_returns: true,
            },
        )
    }

    pub fn to_json(&self) -> UniverseJson {
        UniverseJson {
            labels: self.labels.clone(),
            expected_returns: self.expected_returns.clone(),
            covariance: self.covariance.to_rows(),
        }
    }
}

/// Wire form of a universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseJson {
    pub labels: Vec<String>,
    pub expected_returns: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

impl UniverseJson {
    pub fn into_universe(self, validation: Validation) -> Result<AssetUniverse> {
        let sigma = Matrix::from_rows(&self.covariance)?;
        universe_from_parts_with(self.labels, self.expected_returns, sigma, validation)
    }
}

pub fn universe_from_json(text: &str, validation: Validation) -> Result<AssetUniverse> {
    let raw: UniverseJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    raw.into_universe(validation)
}

fn validate_labels(labels: &[String], min: usize) -> Result<()> {
    if labels.len() < min {
        return Err(Error::Dimension(format!(
            "need at least {min} assets, found {}",
            labels.len()
        )));
    }
    let mut seen = HashSet::new();
    for label in labels {
        if label.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty asset label".into(),
            });
        }
        if !seen.insert(label.as_str()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate asset label '{label}'"),
            });
        }
    }
    Ok(())
}

/// Parses the comma-separated returns format: a header of labels followed
/// by one row of decimal returns per period. Blank lines are skipped.
pub fn load_returns<R: Read>(mut source: R) -> Result<ReturnSeries> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header row".into(),
    })?;
    let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    validate_labels(&labels, 1)?;

    let mut observations = Vec::new();
    for (line, raw) in lines {
        let row = raw
            .split(',')
            .map(|cell| parse_cell(cell, line))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != labels.len() {
            return Err(Error::Shape {
                line,
                expected: labels.len(),
                found: row.len(),
            });
        }
        observations.push(row);
    }
    ReturnSeries::new(labels, observations)
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    let cell = cell.trim();
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("not a finite decimal number: '{cell}'"),
        }),
    }
}

/// Column means and unbiased (divisor `T − 1`) sample covariance.
pub fn sample_moments(series: &ReturnSeries) -> (Vec<f64>, Matrix) {
    let n = series.num_assets();
    let t = series.num_periods();
    let obs = series.observations();

    let mut means = vec![0.0; n];
    for row in obs {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= t as f64);

    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = obs
                .iter()
                .map(|row| (row[i] - means[i]) * (row[j] - means[j]))
                .sum();
            let c = s / (t as f64 - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    (means, cov)
}

pub fn estimate_universe(series: &ReturnSeries) -> Result<AssetUniverse> {
    estimate_universe_with(series, Validation::default())
}

pub fn estimate_universe_with(
    series: &ReturnSeries,
    validation: Validation,
) -> Result<AssetUniverse> {
    let (means, cov) = sample_moments(series);
    universe_from_parts_with(series.labels().to_vec(), means, cov, validation)
}

pub fn universe_from_parts(
    labels: Vec<String>,
    expected_returns: Vec<f64>,
    covariance: Matrix,
) -> Result<AssetUniverse> {
    universe_from_parts_with(labels, expected_returns, covariance, Validation::default())
}

pub fn universe_from_parts_with(
    labels: Vec<String>,
    expected_returns: Vec<f64>,
    covariance: Matrix,
    validation: Validation,
) -> Result<AssetUniverse> {
    validate_labels(&labels, 2)?;
    let n = labels.len();
    if expected_returns.len() != n || covariance.nrows() != n || covariance.ncols() != n {
        return Err(Error::Dimension(format!(
            "{n} labels, {} expected returns, {}x{} covariance",
            expected_returns.len(),
            covariance.nrows(),
            covariance.ncols()
        )));
    }
    if let Some(v) = expected_returns.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("expected return {v}")));
    }
    if !covariance.is_finite() {
        return Err(Error::NonFinite("covariance entry".into()));
    }

    check_symmetry(&covariance)?;
    Cholesky::factor(&covariance)?;

    if !validation.allow_nonpositive_returns {
        if let Some((label, value)) = labels
            .iter()
            .zip(&expected_returns)
            .find(|(_, r)| **r <= 0.0)
        {
            return Err(Error::NonPositiveReturn {
                label: label.clone(),
                value: *value,
            });
        }
    }

    Ok(AssetUniverse {
        labels,
        expected_returns,
        covariance,
    })
}

// Entries are compared relative to the larger of the pair and the geometric
// mean of the matching diagonal, so tiny off-diagonal noise is not flagged.
fn check_symmetry(sigma: &Matrix) -> Result<()> {
    let n = sigma.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let (upper, lower) = (sigma[(i, j)], sigma[(j, i)]);
            let scale = upper
                .abs()
                .max(lower.abs())
                .max((sigma[(i, i)] * sigma[(j, j)]).abs().sqrt());
            if (upper - lower).abs() > SYMMETRY_TOL * scale {
                return Err(Error::AsymmetricCovariance {
                    row: i,
                    col: j,
                    upper,
                    lower,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn load_returns_basic() {
        let csv = "A,B\n0.01,0.02\n0.03,-0.01\n0.00,0.01\n";
        let series = load_returns(csv.as_bytes()).unwrap();
        assert_eq!(series.labels(), &["A", "B"]);
        assert_eq!(series.num_periods(), 3);
        assert_eq!(series.observations()[1], vec![0.03, -0.01]);
    }

    #[test]
    fn load_returns_crlf() {
        let csv = "A,B\r\n0.01,0.02\r\n0.03,-0.01\r\n0.00,0.01\r\n";
        let series = load_returns(csv.as_bytes()).unwrap();
        assert_eq!(series.num_periods(), 3);
        assert_eq!(series.observations()[2], vec![0.0, 0.01]);
    }

    #[test]
    fn load_returns_ragged_row() {
        let err = load_returns("A,B\n0.01\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::Shape {
                line: 2,
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn load_returns_too_few_rows() {
        let err = load_returns("A,B\n0.01,0.02\n0.03,0.04\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientData {
                assets: 2,
                required: 3,
                found: 2
            }
        ));
    }

    #[test]
    fn load_returns_non_numeric() {
        for bad in ["1%", "abc", "", "1,000", "NaN", "inf"] {
            let csv = format!("A,B\n0.1,0.2\n{bad},0.3\n0.2,0.1\n");
            assert!(
                matches!(
                    load_returns(csv.as_bytes()),
                    Err(Error::Parse { .. }) | Err(Error::Shape { .. })
                ),
                "cell {bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn load_returns_rejects_duplicate_labels() {
        let err = load_returns("A,A\n1,2\n3,4\n5,6\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn estimate_perfectly_correlated_is_singular() {
        let series = ReturnSeries::new(
            labels(&["A", "B"]),
            vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.2, 0.3]],
        )
        .unwrap();
        let (means, cov) = sample_moments(&series);
        assert_relative_eq!(means[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(means[1], 0.3, epsilon = 1e-15);
        for v in cov.to_rows().concat() {
            assert_relative_eq!(v, 0.01, epsilon = 1e-15);
        }
        assert!(matches!(
            estimate_universe(&series),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn estimate_hand_computed() {
        let series = ReturnSeries::new(
            labels(&["A", "B"]),
            vec![vec![0.1, 0.0], vec![0.0, 0.1], vec![0.2, 0.2]],
        )
        .unwrap();
        let u = estimate_universe(&series).unwrap();
        assert_relative_eq!(u.expected_returns()[0], 0.1, epsilon = 1e-15);
        assert_relative_eq!(u.expected_returns()[1], 0.1, epsilon = 1e-15);
        let c = u.covariance();
        assert_relative_eq!(c[(0, 0)], 0.01, epsilon = 1e-15);
        assert_relative_eq!(c[(1, 1)], 0.01, epsilon = 1e-15);
        assert_relative_eq!(c[(0, 1)], 0.005, epsilon = 1e-15);
        assert_relative_eq!(c[(1, 0)], 0.005, epsilon = 1e-15);
    }

    #[test]
    fn estimate_constant_column_is_singular() {
        let series = ReturnSeries::new(
            labels(&["A", "B", "C"]),
            vec![
                vec![0.1, 0.05, 0.3],
                vec![0.2, 0.05, 0.1],
                vec![0.0, 0.05, 0.2],
                vec![0.3, 0.05, 0.4],
            ],
        )
        .unwrap();
        assert!(matches!(
            estimate_universe(&series),
            Err(Error::SingularCovariance { index: 1, .. })
        ));
    }

    #[test]
    fn estimate_negative_mean_reports_label() {
        let series = ReturnSeries::new(
            labels(&["A", "B"]),
            vec![vec![0.1, -0.1], vec![0.0, 0.05], vec![0.2, -0.2]],
        )
        .unwrap();
        match estimate_universe(&series) {
            Err(Error::NonPositiveReturn { label, .. }) => assert_eq!(label, "B"),
            other => panic!("unexpected {other:?}"),
        }
        let relaxed = estimate_universe_with(
            &series,
            Validation {
                allow_nonpositive_returns: true,
            },
        )
        .unwrap();
        assert!(relaxed.expected_returns()[1] < 0.0);
    }

    #[test]
    fn from_parts_identity() {
        let u =
            universe_from_parts(labels(&["A", "B"]), vec![1.0, 2.0], Matrix::identity(2)).unwrap();
        assert_eq!(u.len(), 2);
    }

    #[test]
    fn from_parts_rank_one() {
        let sigma = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            universe_from_parts(labels(&["A", "B"]), vec![1.0, 2.0], sigma),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn from_parts_asymmetric() {
        let sigma = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(
            universe_from_parts(labels(&["A", "B"]), vec![1.0, 2.0], sigma),
            Err(Error::AsymmetricCovariance { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn from_parts_shape_mismatch() {
        assert!(matches!(
            universe_from_parts(labels(&["A", "B"]), vec![1.0], Matrix::identity(2)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            universe_from_parts(labels(&["A"]), vec![1.0], Matrix::identity(1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let u = universe_from_parts(
            labels(&["A", "B"]),
            vec![0.1, 0.2],
            Matrix::from_rows(&[vec![0.04, 0.01], vec![0.01, 0.09]]).unwrap(),
        )
        .unwrap();
        let text = serde_json::to_string(&u.to_json()).unwrap();
        let back = universe_from_json(&text, Validation::default()).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn json_rejects_ragged_covariance() {
        let text = r#"{"labels":["A","B"],"expected_returns":[1,2],"covariance":[[1,0],[0]]}"#;
        assert!(matches!(
            universe_from_json(text, Validation::default()),
            Err(Error::Dimension(_))
        ));
    }
}
