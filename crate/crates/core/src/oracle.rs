//! Independent cross-check of the closed forms: the same minimum-variance
//! program solved as a generic equality-constrained QP through its KKT
//! system, plus randomized null-space dominance probes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Lu, Matrix};
use crate::market_data::{universe_from_parts, AssetUniverse};

/// Pivot floor for the KKT factorization, relative to the largest entry.
pub const KKT_PIVOT_TOL: f64 = 1e-13;

/// Absolute slack before a variance decrease counts as a violation.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// `[[2σ, 1, r], [1ᵀ, 0, 0], [rᵀ, 0, 0]] · (y, λ₁, λᵣ) = (0, B, R)`.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

impl KktSystem {
    pub fn new(universe: &AssetUniverse, budget: f64, target_return: f64) -> Self {
        let n = universe.len();
        let sigma = universe.covariance();
        let r = universe.expected_returns();
        let mut m = Matrix::zeros(n + 2, n + 2);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = 2.0 * sigma[(i, j)];
            }
            m[(i, n)] = 1.0;
            m[(n, i)] = 1.0;
            m[(i, n + 1)] = r[i];
            m[(n + 1, i)] = r[i];
        }
        let mut rhs = vec![0.0; n + 2];
        rhs[n] = budget;
        rhs[n + 1] = target_return;
        Self { matrix: m, rhs }
    }

    pub fn residual(&self, solution: &[f64]) -> f64 {
        let lhs = self.matrix.mul_vec(solution);
        lhs.iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktSolution {
    pub amounts: Vec<f64>,
    /// Multipliers for the budget and return constraints.
    pub multipliers: (f64, f64),
    pub residual: f64,
}

pub fn solve_kkt(universe: &AssetUniverse, budget: f64, target_return: f64) -> Result<KktSolution> {
    let system = KktSystem::new(universe, budget, target_return);
    let lu = Lu::factor(&system.matrix, KKT_PIVOT_TOL).map_err(|p| Error::SingularKkt {
        step: p.step,
        pivot: p.pivot,
    })?;
    let mut solution = lu.solve(&system.rhs);
    let residual = system.residual(&solution);
    let n = universe.len();
    let lambda_return = solution.pop().expect("n + 2 entries");
    let lambda_budget = solution.pop().expect("n + 1 entries");
    debug_assert_eq!(solution.len(), n);
    Ok(KktSolution {
        amounts: solution,
        multipliers: (lambda_budget, lambda_return),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Trial index, or `None` for the steepest-descent probe.
    pub trial: Option<usize>,
    pub base_variance: f64,
    pub perturbed_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub trials: usize,
    /// Dimension of the space of perturbations preserving both constraints.
    pub null_space_dim: usize,
    pub base_variance: f64,
    /// Smallest `(y+z)ᵀσ(y+z) − yᵀσy` seen.
    pub min_change: f64,
    pub violations: Vec<Violation>,
}

impl DominanceReport {
    pub fn is_trivial(&self) -> bool {
        self.null_space_dim == 0
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Orthonormal basis of span{1, r}; a single vector when r ∝ 1.
fn constraint_basis(r: &[f64]) -> Vec<Vec<f64>> {
    let n = r.len();
    let e1: Vec<f64> = vec![1.0 / (n as f64).sqrt(); n];
    let proj = dot(r, &e1);
    let resid: Vec<f64> = r.iter().zip(&e1).map(|(ri, ei)| ri - proj * ei).collect();
    let norm = dot(&resid, &resid).sqrt();
    let scale = dot(r, r).sqrt();
    if norm <= 1e-12 * scale {
        vec![e1]
    } else {
        vec![e1, resid.into_iter().map(|v| v / norm).collect()]
    }
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of Gram-Schmidt to keep the residual orthogonal to rounding
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, e)| *x -= c * e);
        }
    }
}

/// Checks that no constraint-preserving perturbation lowers the variance of
/// `candidate`.
///
/// Runs `trials` random perturbations drawn uniformly from `[-1, 1]ⁿ`,
/// scaled by `max(1, ‖y‖∞)` and projected onto the null space of `1` and
/// `r`, plus one exact line-search step along the projected negative
/// gradient. That probe strictly lowers the variance of any non-optimal
/// feasible point.
pub fn dominance_check(
    universe: &AssetUniverse,
    candidate: &[f64],
    trials: usize,
    seed: u64,
) -> DominanceReport {
    let n = universe.len();
    let sigma = universe.covariance();
    let basis = constraint_basis(universe.expected_returns());
    let null_space_dim = n - basis.len();
    let base_variance = sigma.quadratic_form(candidate);
    let mut report = DominanceReport {
        trials,
        null_space_dim,
        base_variance,
        min_change: 0.0,
        violations: Vec::new(),
    };
    if null_space_dim == 0 {
        return report;
    }

    let sigma_y = sigma.mul_vec(candidate);
    // (y+z)ᵀσ(y+z) − yᵀσy = 2(σy)ᵀz + zᵀσz, formed directly rather than as a
    // difference of two large quadratic forms
    let check = |z: &[f64], trial: Option<usize>, report: &mut DominanceReport| {
        let change = 2.0 * dot(&sigma_y, z) + sigma.quadratic_form(z);
        report.min_change = report.min_change.min(change);
        if change < -DOMINANCE_TOL {
            report.violations.push(Violation {
                trial,
                base_variance,
                perturbed_variance: base_variance + change,
            });
        }
    };

    // gradient of yᵀσy is 2σy; step t* = gᵀg / (2 gᵀσg) along -g
    let mut grad: Vec<f64> = sigma_y.iter().map(|v| 2.0 * v).collect();
    project_out(&mut grad, &basis);
    let curvature = sigma.quadratic_form(&grad);
    if curvature > 0.0 {
        let t = dot(&grad, &grad) / (2.0 * curvature);
        let step: Vec<f64> = grad.iter().map(|g| -t * g).collect();
        check(&step, None, &mut report);
    }

    let scale = norm_inf(candidate).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0) * scale).collect();
        project_out(&mut z, &basis);
        check(&z, Some(trial), &mut report);
    }
    report
}

/// Random test universe: `σ = MᵀM + 0.1·I` with `M` uniform in `[-1, 1]`,
/// expected returns uniform in `[0.02, 0.25]`.
pub fn random_universe<R: Rng>(rng: &mut R, n: usize) -> AssetUniverse {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.gen_range(-1.0..=1.0);
        }
    }
    let mut sigma = m.transpose().matmul(&m);
    for i in 0..n {
        sigma[(i, i)] += 0.1;
    }
    // MᵀM is symmetric in exact arithmetic; mirror to make it bitwise so
    for i in 0..n {
        for j in 0..i {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    let r = (0..n).map(|_| rng.gen_range(0.02..=0.25)).collect();
    let labels = (0..n).map(|i| format!("X{}", i + 1)).collect();
    universe_from_parts(labels, r, sigma).expect("MᵀM + 0.1·I is positive definite")
}
