//! Closed-form minimum-variance allocations and efficient frontiers stated
//! in total currency amounts rather than weights, so that zero and
//! negative budgets are handled on the same footing as positive ones.
//!
//! Everything is driven by four scalars built from `σ⁻¹`:
//!
//! ```text
//! A11 = 1ᵀσ⁻¹1    A1r = 1ᵀσ⁻¹r    Arr = rᵀσ⁻¹r    D = A11·Arr − A1r²
//! ```
//!
//! `σ⁻¹` itself is never formed; `σ⁻¹1` and `σ⁻¹r` come from one Cholesky
//! factorization and are kept on [`ACoefficients`] for reuse.
//!
//! Allocations are assembled in the equivalent two-fund form
//!
//! ```text
//! y = B·σ⁻¹1/A11 + (R − A1r·B/A11)·w,    w = σ⁻¹(r − (A1r/A11)·1) / (Arr − A1r²/A11)
//! ```
//!
//! where `w` is the zero-budget portfolio per unit return. Expanding it gives
//! back `[(Arr·B − A1r·R)/D]·σ⁻¹1 + [(A11·R − A1r·B)/D]·σ⁻¹r` term for term,
//! but `w` is solved from the centered return vector directly, which avoids
//! the cancellation in `A11·σ⁻¹r − A1r·σ⁻¹1` when `r` is nearly flat.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::market_data::AssetUniverse;

/// `D` is treated as zero when `D ≤ DEGENERACY_TOL · A11 · Arr`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Relative slack allowed below the frontier apex before a risk is infeasible.
pub const APEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ACoefficients {
    pub a11: f64,
    pub a1r: f64,
    pub arr: f64,
    pub d: f64,
    inv_ones: Vec<f64>,
    inv_returns: Vec<f64>,
    // σ⁻¹1 / A11
    min_variance_weights: Vec<f64>,
    critical_weights: Vec<f64>,
    // (r − m1)ᵀσ⁻¹(r − m1) with m = A1r/A11
    slope_sq: f64,
}

impl ACoefficients {
    /// `σ⁻¹1`.
    pub fn inv_ones(&self) -> &[f64] {
        &self.inv_ones
    }

    /// `σ⁻¹r`.
    pub fn inv_returns(&self) -> &[f64] {
        &self.inv_returns
    }

    pub fn degeneracy_threshold(&self) -> f64 {
        DEGENERACY_TOL * self.a11 * self.arr
    }

    /// True when `r` is (numerically) proportional to `1`.
    pub fn is_degenerate(&self) -> bool {
        !(self.d > self.degeneracy_threshold())
    }

    fn require_nondegenerate(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegenerateUniverse { d: self.d })
        } else {
            Ok(())
        }
    }

    /// `Arr − A1r²/A11 = D/A11`, the squared slope of the zero-budget
    /// frontier. Evaluated from centered returns, so it keeps full relative
    /// accuracy when `r` is close to proportional to `1`.
    pub fn slope_sq(&self) -> f64 {
        self.slope_sq
    }

    /// `√(B²/A11)`, the smallest attainable risk for budget `B`.
    pub fn minimum_risk(&self, budget: f64) -> f64 {
        (budget * budget / self.a11).sqrt()
    }

    /// `unit·σ⁻¹1/A11 + excess·w`: a portfolio with `Σy = unit` and
    /// `yᵀr = unit·A1r/A11 + excess`.
    fn two_fund(&self, unit: f64, excess: f64) -> Vec<f64> {
        self.min_variance_weights
            .iter()
            .zip(&self.critical_weights)
            .map(|(m, w)| unit * m + excess * w)
            .collect()
    }
}

pub fn compute_coefficients(universe: &AssetUniverse) -> Result<ACoefficients> {
    let chol = universe.cholesky()?;
    let n = universe.len();
    let r = universe.expected_returns();
    let inv_ones = chol.solve(&vec![1.0; n]);
    let inv_returns = chol.solve(r);

    let a11: f64 = inv_ones.iter().sum();
    let a1r: f64 = inv_returns.iter().sum();
    let arr = dot(r, &inv_returns);
    let d = a11 * arr - a1r * a1r;
    if !(a11 > 0.0) || !arr.is_finite() {
        return Err(Error::SingularCovariance {
            index: 0,
            pivot: a11,
            threshold: 0.0,
        });
    }

    let mean = a1r / a11;
    let centered: Vec<f64> = r.iter().map(|ri| ri - mean).collect();
    let mut z = chol.solve(&centered);
    // one refinement step on the mean: make 1ᵀz vanish against the computed σ⁻¹1
    let drift = z.iter().sum::<f64>() / a11;
    z.iter_mut()
        .zip(&inv_ones)
        .for_each(|(zi, u)| *zi -= drift * u);
    // (r − m1)ᵀσ⁻¹(r − m1) = Arr − A1r²/A11, without the subtraction
    let excess_sq = dot(&centered, &z);
    let critical_weights = z.iter().map(|v| v / excess_sq).collect();
    let min_variance_weights = inv_ones.iter().map(|v| v / a11).collect();
    Ok(ACoefficients {
        a11,
        a1r,
        arr,
        d,
        inv_ones,
        inv_returns,
        min_variance_weights,
        critical_weights,
        slope_sq: excess_sq,
    })
}

/// Leverage regime keyed on the sign of the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetClass {
    /// `B > 0`: long positions dominate.
    Subcritical,
    /// `B = 0`: shorts exactly offset longs.
    Critical,
    /// `B < 0`: short positions dominate.
    Supercritical,
}

impl BudgetClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BudgetClass::Subcritical => "subcritical",
            BudgetClass::Critical => "critical",
            BudgetClass::Supercritical => "supercritical",
        }
    }
}

impl fmt::Display for BudgetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact classification: only `B == 0.0` is critical.
pub fn classify_budget(budget: f64) -> Result<BudgetClass> {
    if !budget.is_finite() {
        return Err(Error::NonFinite(format!("budget {budget}")));
    }
    Ok(if budget > 0.0 {
        BudgetClass::Subcritical
    } else if budget < 0.0 {
        BudgetClass::Supercritical
    } else {
        BudgetClass::Critical
    })
}

/// Sign choice in `R = R_min ± √(…)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Upper, Branch::Lower];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }

    pub fn flipped(self) -> Branch {
        match self {
            Branch::Upper => Branch::Lower,
            Branch::Lower => Branch::Upper,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Branch::Upper),
            "lower" => Ok(Branch::Lower),
            other => Err(Error::Parse {
                line: 0,
                message: format!("unknown branch '{other}'"),
            }),
        }
    }
}

/// An optimal allocation in currency amounts together with its realized
/// budget, expected return and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub amounts: Vec<f64>,
    pub budget: f64,
    pub expected_return: f64,
    pub variance: f64,
    pub std_dev: f64,
}

impl Allocation {
    fn realize(universe: &AssetUniverse, amounts: Vec<f64>) -> Self {
        let budget = amounts.iter().sum();
        let expected_return = dot(&amounts, universe.expected_returns());
        let variance = universe.variance_of(&amounts);
        Self {
            budget,
            expected_return,
            std_dev: variance.max(0.0).sqrt(),
            variance,
            amounts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub risk: f64,
    pub ret: f64,
    pub variance: f64,
    pub branch: Branch,
}

/// Minimum-variance allocation of budget `B` reaching expected return `R`.
///
/// For `B == 0` this is exactly `R` times [`critical_relative_weights`].
pub fn optimal_allocation(
    universe: &AssetUniverse,
    coeffs: &ACoefficients,
    budget: f64,
    target_return: f64,
) -> Result<Allocation> {
    coeffs.require_nondegenerate()?;
    let excess = target_return - coeffs.a1r * budget / coeffs.a11;
    let amounts = coeffs.two_fund(budget, excess);
    Ok(Allocation::realize(universe, amounts))
}

/// `V = B²/A11 + (A11/D)(R − A1r·B/A11)²`.
pub fn variance_at_return(coeffs: &ACoefficients, budget: f64, target_return: f64) -> Result<f64> {
    coeffs.require_nondegenerate()?;
    let excess = target_return - coeffs.a1r * budget / coeffs.a11;
    Ok(budget * budget / coeffs.a11 + excess * excess / coeffs.slope_sq())
}

/// The frontier apex: `V_min = B²/A11`, `R_min = A1r·B/A11`.
pub fn minimum_variance_point(coeffs: &ACoefficients, budget: f64) -> FrontierPoint {
    let variance = budget * budget / coeffs.a11;
    FrontierPoint {
        risk: variance.sqrt(),
        ret: coeffs.a1r * budget / coeffs.a11,
        variance,
        branch: Branch::Upper,
    }
}

/// Expected return on the chosen frontier branch at total risk `Σ`.
pub fn frontier_return_at_risk(
    coeffs: &ACoefficients,
    budget: f64,
    risk: f64,
    branch: Branch,
) -> Result<f64> {
    coeffs.require_nondegenerate()?;
    let spread = frontier_spread(
        coeffs,
        budget * budget / coeffs.a11,
        risk,
        coeffs.minimum_risk(budget),
    )?;
    Ok(coeffs.a1r / coeffs.a11 * budget + branch.sign() * spread)
}

// √[(Arr − A1r²/A11)(Σ² − floor)], clamping a slightly negative radicand.
fn frontier_spread(coeffs: &ACoefficients, floor: f64, risk: f64, minimum: f64) -> Result<f64> {
    if !risk.is_finite() || risk < 0.0 {
        return Err(Error::InfeasibleRisk { risk, minimum });
    }
    let risk_sq = risk * risk;
    let mut gap = risk_sq - floor;
    if gap < 0.0 {
        if gap >= -APEX_TOL * risk_sq.max(floor) {
            gap = 0.0;
        } else {
            return Err(Error::InfeasibleRisk { risk, minimum });
        }
    }
    Ok((coeffs.slope_sq() * gap).sqrt())
}

/// Samples both branches on a risk grid uniform over `[Σ_min, Σmax]`.
///
/// Upper-branch points come first, each branch ordered by ascending risk.
/// The first point of each branch is the apex itself.
pub fn sample_frontier(
    coeffs: &ACoefficients,
    budget: f64,
    risk_max: f64,
    count: usize,
) -> Result<Vec<FrontierPoint>> {
    coeffs.require_nondegenerate()?;
    if count < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 samples, got {count}"
        )));
    }
    let apex = minimum_variance_point(coeffs, budget);
    if !(risk_max > apex.risk) || !risk_max.is_finite() {
        return Err(Error::InfeasibleRisk {
            risk: risk_max,
            minimum: apex.risk,
        });
    }
    let grid = risk_grid(apex.risk, risk_max, count);
    let mut points = Vec::with_capacity(2 * count);
    for branch in Branch::BOTH {
        points.push(FrontierPoint { branch, ..apex });
        for &risk in &grid[1..] {
            let ret = frontier_return_at_risk(coeffs, budget, risk, branch)?;
            points.push(FrontierPoint {
                risk,
                ret,
                variance: risk * risk,
                branch,
            });
        }
    }
    Ok(points)
}

/// `count` values uniformly spaced on `[lo, hi]`, endpoints exact.
pub fn risk_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect()
}

/// Zero-budget composition per unit of expected return:
/// `w = σ⁻¹(A11·r − A1r·1)/D`. Sums to zero and has `wᵀr = 1`.
pub fn critical_relative_weights(
    universe: &AssetUniverse,
    coeffs: &ACoefficients,
) -> Result<Vec<f64>> {
    coeffs.require_nondegenerate()?;
    debug_assert_eq!(universe.len(), coeffs.inv_ones.len());
    Ok(coeffs.critical_weights.clone())
}

/// `s = √(Arr − A1r²/A11)`; the zero-budget frontier is `R = ±s·Σ`.
pub fn critical_frontier_slope(coeffs: &ACoefficients) -> Result<f64> {
    coeffs.require_nondegenerate()?;
    Ok(coeffs.slope_sq().sqrt())
}

/// Which quantity rescales amounts into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Divide by `B`: weights sum to 1, `r = R/B`.
    BudgetNumeraire,
    /// Divide by `|B|`: weights sum to `sign(B)`, `r = R/|B|`.
    AbsBudgetNumeraire,
}

impl Convention {
    pub fn numeraire(self, budget: f64) -> f64 {
        match self {
            Convention::BudgetNumeraire => budget,
            Convention::AbsBudgetNumeraire => budget.abs(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::BudgetNumeraire => "budget",
            Convention::AbsBudgetNumeraire => "abs-budget",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledFrontierPoint {
    pub risk: f64,
    pub ret: f64,
    pub convention: Convention,
    pub branch: Branch,
}

fn budget_sign(budget: f64) -> Result<f64> {
    match classify_budget(budget)? {
        BudgetClass::Critical => Err(Error::CriticalBudget),
        BudgetClass::Subcritical => Ok(1.0),
        BudgetClass::Supercritical => Ok(-1.0),
    }
}

/// Frontier in rescaled units at rescaled risk `σ = Σ/|B|`.
///
/// `branch` is the geometric branch in the rescaled plane: `Upper` always lies
/// above `Lower`. With [`Convention::BudgetNumeraire`] and `B < 0`, dividing by
/// the negative budget flips the branches and reverses the sign of the return:
/// the rescaled `Upper` point times `B` is the `Lower` point of
/// [`frontier_return_at_risk`] at `Σ = σ|B|`. With
/// [`Convention::AbsBudgetNumeraire`] the tags agree for either sign.
pub fn rescaled_frontier(
    coeffs: &ACoefficients,
    budget: f64,
    risk: f64,
    branch: Branch,
    convention: Convention,
) -> Result<RescaledFrontierPoint> {
    let sign = budget_sign(budget)?;
    coeffs.require_nondegenerate()?;
    let spread = frontier_spread(coeffs, 1.0 / coeffs.a11, risk, coeffs.minimum_risk(1.0))?;
    let base = coeffs.a1r / coeffs.a11;
    let ret = match convention {
        Convention::BudgetNumeraire => base + branch.sign() * spread,
        Convention::AbsBudgetNumeraire => sign * base + branch.sign() * spread,
    };
    Ok(RescaledFrontierPoint {
        risk,
        ret,
        convention,
        branch,
    })
}

/// Rescaled counterpart of [`sample_frontier`]: both branches on a grid
/// uniform over `[1/√A11, σmax]`, apex first.
pub fn sample_rescaled_frontier(
    coeffs: &ACoefficients,
    budget: f64,
    risk_max: f64,
    count: usize,
    convention: Convention,
) -> Result<Vec<RescaledFrontierPoint>> {
    let sign = budget_sign(budget)?;
    coeffs.require_nondegenerate()?;
    if count < 2 {
        return Err(Error::Dimension(format!(
            "need at least 2 samples, got {count}"
        )));
    }
    let apex_risk = coeffs.minimum_risk(1.0);
    if !(risk_max > apex_risk) || !risk_max.is_finite() {
        return Err(Error::InfeasibleRisk {
            risk: risk_max,
            minimum: apex_risk,
        });
    }
    let apex_ret = match convention {
        Convention::BudgetNumeraire => coeffs.a1r / coeffs.a11,
        Convention::AbsBudgetNumeraire => sign * coeffs.a1r / coeffs.a11,
    };
    let grid = risk_grid(apex_risk, risk_max, count);
    let mut points = Vec::with_capacity(2 * count);
    for branch in Branch::BOTH {
        points.push(RescaledFrontierPoint {
            risk: apex_risk,
            ret: apex_ret,
            convention,
            branch,
        });
        for &risk in &grid[1..] {
            points.push(rescaled_frontier(coeffs, budget, risk, branch, convention)?);
        }
    }
    Ok(points)
}

/// Optimal weights `x = y/numeraire` reaching rescaled return `r`.
pub fn rescaled_allocation(
    universe: &AssetUniverse,
    coeffs: &ACoefficients,
    budget: f64,
    rescaled_return: f64,
    convention: Convention,
) -> Result<Vec<f64>> {
    let sign = budget_sign(budget)?;
    coeffs.require_nondegenerate()?;
    debug_assert_eq!(universe.len(), coeffs.inv_ones.len());
    let unit = match convention {
        Convention::BudgetNumeraire => 1.0,
        Convention::AbsBudgetNumeraire => sign,
    };
    let excess = rescaled_return - coeffs.a1r * unit / coeffs.a11;
    Ok(coeffs.two_fund(unit, excess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::market_data::{universe_from_parts, universe_from_parts_with, Validation};
    use approx::assert_relative_eq;

    fn identity_universe(r: &[f64]) -> AssetUniverse {
        let labels = (0..r.len()).map(|i| format!("A{i}")).collect();
        universe_from_parts(labels, r.to_vec(), Matrix::identity(r.len())).unwrap()
    }

    fn id2() -> (AssetUniverse, ACoefficients) {
        let u = identity_universe(&[1.0, 2.0]);
        let c = compute_coefficients(&u).unwrap();
        (u, c)
    }

    fn assert_vec(got: &[f64], want: &[f64], eps: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= eps, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn coefficients_identity() {
        let (_, c) = id2();
        assert_relative_eq!(c.a11, 2.0);
        assert_relative_eq!(c.a1r, 3.0);
        assert_relative_eq!(c.arr, 5.0);
        assert_relative_eq!(c.d, 1.0);
    }

    #[test]
    fn coefficients_proportional_returns_are_degenerate() {
        let u = identity_universe(&[1.0, 1.0, 1.0]);
        let c = compute_coefficients(&u).unwrap();
        assert_eq!((c.a11, c.a1r, c.arr, c.d), (3.0, 3.0, 3.0, 0.0));
        assert!(c.is_degenerate());
    }

    #[test]
    fn coefficients_diagonal() {
        let u = universe_from_parts(
            vec!["A".into(), "B".into()],
            vec![0.1, 0.2],
            Matrix::diagonal(&[0.04, 0.09]),
        )
        .unwrap();
        let c = compute_coefficients(&u).unwrap();
        let a11 = 25.0 + 100.0 / 9.0;
        let a1r = 2.5 + 20.0 / 9.0;
        let arr = 0.25 + 4.0 / 9.0;
        assert_relative_eq!(c.a11, a11, max_relative = 1e-14);
        assert_relative_eq!(c.a1r, a1r, max_relative = 1e-14);
        assert_relative_eq!(c.arr, arr, max_relative = 1e-14);
        assert_relative_eq!(c.d, a11 * arr - a1r * a1r, max_relative = 1e-12);
    }

    #[test]
    fn allocation_subcritical_identity() {
        let (u, c) = id2();
        let a = optimal_allocation(&u, &c, 1.0, 2.0).unwrap();
        assert_vec(&a.amounts, &[0.0, 1.0], 1e-14);
        assert_relative_eq!(a.budget, 1.0, epsilon = 1e-14);
        assert_relative_eq!(a.expected_return, 2.0, epsilon = 1e-14);
        assert_relative_eq!(a.variance, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn allocation_critical_identity() {
        let (u, c) = id2();
        let a = optimal_allocation(&u, &c, 0.0, 1.0).unwrap();
        assert_vec(&a.amounts, &[-1.0, 1.0], 1e-14);
        assert_relative_eq!(a.budget, 0.0, epsilon = 1e-14);
        assert_relative_eq!(a.expected_return, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn allocation_null_portfolio() {
        let (u, c) = id2();
        let a = optimal_allocation(&u, &c, 0.0, 0.0).unwrap();
        assert!(a.amounts.iter().all(|v| *v == 0.0));
        assert_eq!(a.variance, 0.0);
        assert_eq!(variance_at_return(&c, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn allocation_degenerate_errors() {
        let u = identity_universe(&[2.0, 2.0]);
        let c = compute_coefficients(&u).unwrap();
        assert!(matches!(
            optimal_allocation(&u, &c, 1.0, 1.0),
            Err(Error::DegenerateUniverse { .. })
        ));
    }

    #[test]
    fn variance_identity() {
        let (_, c) = id2();
        assert_relative_eq!(
            variance_at_return(&c, 1.0, 2.0).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // B = 0: V = (A11/D) R² = 2 R²
        for r in [-3.0, 0.5, 7.0] {
            assert_relative_eq!(
                variance_at_return(&c, 0.0, r).unwrap(),
                2.0 * r * r,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn minimum_variance_identity() {
        let (_, c) = id2();
        let p = minimum_variance_point(&c, 1.0);
        assert_relative_eq!(p.risk, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p.ret, 1.5, epsilon = 1e-15);
        let z = minimum_variance_point(&c, 0.0);
        assert_eq!((z.risk, z.ret), (0.0, 0.0));
        let m = minimum_variance_point(&c, -1.0);
        assert_eq!(m.risk, p.risk);
        assert_eq!(m.ret, -p.ret);
    }

    #[test]
    fn minimum_variance_defined_when_degenerate() {
        let u = identity_universe(&[0.3, 0.3]);
        let c = compute_coefficients(&u).unwrap();
        let p = minimum_variance_point(&c, 2.0);
        assert_relative_eq!(p.variance, 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.ret, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn frontier_return_identity() {
        let (_, c) = id2();
        assert_relative_eq!(
            frontier_return_at_risk(&c, 1.0, 1.0, Branch::Upper).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            frontier_return_at_risk(&c, 1.0, 1.0, Branch::Lower).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            frontier_return_at_risk(&c, 0.0, 1.0, Branch::Upper).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn frontier_apex_both_branches() {
        let (_, c) = id2();
        let apex = minimum_variance_point(&c, 1.0);
        for b in Branch::BOTH {
            assert_relative_eq!(
                frontier_return_at_risk(&c, 1.0, apex.risk, b).unwrap(),
                apex.ret,
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn frontier_below_apex_is_infeasible() {
        let (_, c) = id2();
        assert!(matches!(
            frontier_return_at_risk(&c, 1.0, 0.5, Branch::Upper),
            Err(Error::InfeasibleRisk { .. })
        ));
        assert!(matches!(
            frontier_return_at_risk(&c, 0.0, -1.0, Branch::Upper),
            Err(Error::InfeasibleRisk { .. })
        ));
    }

    #[test]
    fn sample_critical_is_linear() {
        let (_, c) = id2();
        let pts = sample_frontier(&c, 0.0, 2.0, 3).unwrap();
        assert_eq!(pts.len(), 6);
        let s = 0.5f64.sqrt();
        let upper: Vec<_> = pts.iter().filter(|p| p.branch == Branch::Upper).collect();
        for (p, (risk, ret)) in upper.iter().zip([(0.0, 0.0), (1.0, s), (2.0, 2.0 * s)]) {
            assert_relative_eq!(p.risk, risk, epsilon = 1e-15);
            assert_relative_eq!(p.ret, ret, epsilon = 1e-15);
        }
    }

    #[test]
    fn sample_starts_at_apex() {
        let (_, c) = id2();
        let pts = sample_frontier(&c, 1.0, 3.0, 5).unwrap();
        let apex = minimum_variance_point(&c, 1.0);
        assert_eq!(pts[0].risk, apex.risk);
        assert_eq!(pts[0].ret, apex.ret);
        assert_eq!(pts[5].risk, apex.risk);
        assert_eq!(pts[5].branch, Branch::Lower);
    }

    #[test]
    fn sample_rejects_bad_arguments() {
        let (_, c) = id2();
        assert!(sample_frontier(&c, 1.0, 3.0, 1).is_err());
        assert!(matches!(
            sample_frontier(&c, 1.0, 0.5, 4),
            Err(Error::InfeasibleRisk { .. })
        ));
    }

    #[test]
    fn relative_weights_identity() {
        let (u, c) = id2();
        assert_vec(
            &critical_relative_weights(&u, &c).unwrap(),
            &[-1.0, 1.0],
            1e-15,
        );
        let u3 = identity_universe(&[1.0, 2.0, 3.0]);
        let c3 = compute_coefficients(&u3).unwrap();
        assert_vec(
            &critical_relative_weights(&u3, &c3).unwrap(),
            &[-0.5, 0.0, 0.5],
            1e-15,
        );
    }

    #[test]
    fn slope_identity_and_degenerate() {
        let (_, c) = id2();
        assert_relative_eq!(
            critical_frontier_slope(&c).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        let cd = compute_coefficients(&identity_universe(&[1.0, 1.0])).unwrap();
        assert!(matches!(
            critical_frontier_slope(&cd),
            Err(Error::DegenerateUniverse { .. })
        ));
    }

    #[test]
    fn classify() {
        assert_eq!(classify_budget(100.0).unwrap(), BudgetClass::Subcritical);
        assert_eq!(classify_budget(0.0).unwrap(), BudgetClass::Critical);
        assert_eq!(classify_budget(-0.0).unwrap(), BudgetClass::Critical);
        assert_eq!(classify_budget(-3.5).unwrap(), BudgetClass::Supercritical);
        assert_eq!(classify_budget(1e-300).unwrap(), BudgetClass::Subcritical);
        assert!(matches!(
            classify_budget(f64::NAN),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            classify_budget(f64::INFINITY),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn rescaled_unit_budget_is_identity() {
        let (u, c) = id2();
        for conv in [Convention::BudgetNumeraire, Convention::AbsBudgetNumeraire] {
            for b in Branch::BOTH {
                let p = rescaled_frontier(&c, 1.0, 1.3, b, conv).unwrap();
                let q = frontier_return_at_risk(&c, 1.0, 1.3, b).unwrap();
                assert_relative_eq!(p.ret, q, max_relative = 1e-15);
                assert_eq!(p.convention, conv);
            }
            let x = rescaled_allocation(&u, &c, 1.0, 2.0, conv).unwrap();
            assert_vec(&x, &[0.0, 1.0], 1e-14);
        }
    }

    #[test]
    fn rescaled_negative_budget_flips_branches() {
        let (_, c) = id2();
        let risk = 1.7;
        let up =
            rescaled_frontier(&c, -1.0, risk, Branch::Upper, Convention::BudgetNumeraire).unwrap();
        let lo =
            rescaled_frontier(&c, -1.0, risk, Branch::Lower, Convention::BudgetNumeraire).unwrap();
        // upper rescaled curve is the negated lower total-variable branch, and vice versa
        assert_eq!(
            up.ret,
            -frontier_return_at_risk(&c, -1.0, risk, Branch::Lower).unwrap()
        );
        assert_eq!(
            lo.ret,
            -frontier_return_at_risk(&c, -1.0, risk, Branch::Upper).unwrap()
        );
        // which puts it on the upper curve of B = +1
        assert_eq!(
            up.ret,
            frontier_return_at_risk(&c, 1.0, risk, Branch::Upper).unwrap()
        );
        assert!(up.ret > lo.ret);
    }

    #[test]
    fn rescaled_critical_budget_errors() {
        let (u, c) = id2();
        for conv in [Convention::BudgetNumeraire, Convention::AbsBudgetNumeraire] {
            assert_eq!(
                rescaled_frontier(&c, 0.0, 1.0, Branch::Upper, conv),
                Err(Error::CriticalBudget)
            );
            assert_eq!(
                rescaled_allocation(&u, &c, 0.0, 1.0, conv),
                Err(Error::CriticalBudget)
            );
        }
    }

    #[test]
    fn rescaled_abs_weights_sum_to_budget_sign() {
        let (u, c) = id2();
        let x = rescaled_allocation(&u, &c, -2.0, 0.7, Convention::AbsBudgetNumeraire).unwrap();
        assert_relative_eq!(x.iter().sum::<f64>(), -1.0, epsilon = 1e-14);
        let x = rescaled_allocation(&u, &c, -2.0, 0.7, Convention::BudgetNumeraire).unwrap();
        assert_relative_eq!(x.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn nonpositive_returns_still_solve() {
        let u = universe_from_parts_with(
            vec!["A".into(), "B".into()],
            vec![-0.1, 0.2],
            Matrix::identity(2),
            Validation {
                allow_nonpositive_returns: true,
            },
        )
        .unwrap();
        let c = compute_coefficients(&u).unwrap();
        let a = optimal_allocation(&u, &c, 1.0, 0.3).unwrap();
        assert_relative_eq!(a.budget, 1.0, epsilon = 1e-14);
        assert_relative_eq!(a.expected_return, 0.3, epsilon = 1e-14);
    }
}
