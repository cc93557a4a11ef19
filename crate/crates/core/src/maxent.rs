//! Maximum-entropy distributions under linear expectation constraints.
//!
//! The solution has exponential-family form `p_i ∝ exp(-Σ_c λ_c f_c(i))`.
//! The multipliers minimize the convex dual `ln Z(λ) + λ·F`, whose gradient
//! is `F - E_p[f]` and whose Hessian is `Cov_p(f)`. We run damped Newton on
//! it from `λ = 0`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dist::Marginal;
use crate::entropy::{entropy, EntropyValue};
use crate::sum::compensated_sum;

/// Multipliers whose log-odds spread `max_i λ·f(i) - min_i λ·f(i)` exceeds
/// this mean the target sits on or outside the achievable hull. The spread
/// is `ln(p_max / p_min)`, so beyond ~745 some state has underflowed to 0.
pub const MULTIPLIER_BLOWUP: f64 = 1e3;
/// Iterations of stagnant residual (with blown-up multipliers) before giving up.
pub const STAGNATION_WINDOW: usize = 25;
/// Constant features must carry a target equal to the constant within this.
pub const CONSTANT_FEATURE_TOL: f64 = 1e-12;
/// Extra Newton steps taken after the residual first drops below tol.
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxEntError {
    #[error("problem has no states")]
    NoStates,
    #[error("feature {feature} has {found} values, expected {expected}")]
    FeatureLength {
        feature: usize,
        expected: usize,
        found: usize,
    },
    #[error("{features} features but {targets} targets")]
    TargetCount { features: usize, targets: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("beta must be nonnegative and finite, got {0}")]
    InvalidBeta(f64),
    #[error("target {target} for feature {feature} is not strictly inside the achievable range [{lo}, {hi}]")]
    InfeasibleTarget {
        feature: usize,
        target: f64,
        lo: f64,
        hi: f64,
    },
    #[error("constraints are not jointly achievable by any distribution with full support (residual {residual})")]
    InfeasibleHull { residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxEntProblem {
    k: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl MaxEntProblem {
    pub fn new(k: usize, features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, MaxEntError> {
        if k == 0 {
            return Err(MaxEntError::NoStates);
        }
        if features.len() != targets.len() {
            return Err(MaxEntError::TargetCount {
                features: features.len(),
                targets: targets.len(),
            });
        }
        for (feature, f) in features.iter().enumerate() {
            if f.len() != k {
                return Err(MaxEntError::FeatureLength {
                    feature,
                    expected: k,
                    found: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(MaxEntError::NonFinite("features"));
            }
        }
        if targets.iter().any(|x| !x.is_finite()) {
            return Err(MaxEntError::NonFinite("targets"));
        }
        Ok(MaxEntProblem {
            k,
            features,
            targets,
        })
    }

    /// No constraints: the answer is uniform over `k` states.
    pub fn unconstrained(k: usize) -> Result<Self, MaxEntError> {
        Self::new(k, Vec::new(), Vec::new())
    }

    pub fn states(&self) -> usize {
        self.k
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxEntSolution {
    pub dist: Marginal,
    /// One multiplier per feature; dropped constant features carry 0.
    pub multipliers: Vec<f64>,
    pub entropy: EntropyValue,
    /// `max_c |E_p[f_c] - F_c|`.
    pub residual: f64,
    pub iterations: usize,
    /// Dual objective at the start and after every accepted step.
    pub dual_trace: Vec<f64>,
    /// Rounding bound on the dual evaluations in `dual_trace`. No accepted
    /// step raised the dual by more than this.
    pub dual_noise: f64,
}

/// `p_i ∝ exp(-Σ_c λ_c f_c(i))` together with `ln Z`.
fn gibbs_with_log_partition(features: &[&[f64]], multipliers: &[f64], k: usize) -> (Vec<f64>, f64) {
    let logits: Vec<f64> = (0..k)
        .map(|i| {
            -compensated_sum(
                features
                    .iter()
                    .zip(multipliers)
                    .map(|(f, l)| l * f[i]),
            )
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|a| (a - max).exp()).collect();
    let z = compensated_sum(weights.iter().copied());
    let p = weights.into_iter().map(|w| w / z).collect();
    (p, max + z.ln())
}

/// Rebuild the exponential-family distribution for given multipliers.
pub fn gibbs(features: &[Vec<f64>], multipliers: &[f64]) -> Marginal {
    let k = features.first().map_or(1, Vec::len);
    let fs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    Marginal::from_normalized(gibbs_with_log_partition(&fs, multipliers, k).0)
}

/// `p_i = e^{-β E_i} / Σ_j e^{-β E_j}`.
pub fn boltzmann(energies: &[f64], beta: f64) -> Result<Marginal, MaxEntError> {
    if energies.is_empty() {
        return Err(MaxEntError::NoStates);
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(MaxEntError::NonFinite("energies"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(MaxEntError::InvalidBeta(beta));
    }
    let (p, _) = gibbs_with_log_partition(&[energies], &[beta], energies.len());
    Ok(Marginal::from_normalized(p))
}

fn expectation(p: &[f64], f: &[f64]) -> f64 {
    compensated_sum(p.iter().zip(f).map(|(a, b)| a * b))
}

/// `ln(p_max / p_min)` of the Gibbs distribution for `lambda`.
fn log_odds_spread(sys: &Scaled, lambda: &[f64]) -> f64 {
    let logits = (0..sys.k).map(|i| compensated_sum(sys.features.iter().zip(lambda).map(|(f, l)| l * f[i])));
    let (lo, hi) = logits.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Active features mapped to `(f - mid) / range`, so each spans [-1/2, 1/2]
/// and multiplier size no longer depends on feature units. Multipliers map
/// back as `λ = λ_scaled / range`.
struct Scaled {
    k: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
    ranges: Vec<f64>,
}

struct DualState {
    p: Vec<f64>,
    dual: f64,
    /// Rounding scale of `dual`: the logits carry absolute error of order
    /// `eps · Σ|λ|` since scaled features are bounded by 1/2.
    noise: f64,
    grad: Vec<f64>,
    residual: f64,
}

/// Dual state for the rescaled problem. `residual` is reported in the
/// caller's units: each gradient entry times its feature's range.
fn evaluate(sys: &Scaled, lambda: &[f64]) -> DualState {
    let fs: Vec<&[f64]> = sys.features.iter().map(Vec::as_slice).collect();
    let (p, log_z) = gibbs_with_log_partition(&fs, lambda, sys.k);
    let dual = log_z + compensated_sum(lambda.iter().zip(&sys.targets).map(|(l, t)| l * t));
    let grad: Vec<f64> = fs
        .iter()
        .zip(&sys.targets)
        .map(|(f, t)| t - expectation(&p, f))
        .collect();
    let residual = max_abs(grad.iter().zip(&sys.ranges).map(|(g, r)| g * r));
    let noise = 16.0 * f64::EPSILON * (1.0 + log_z.abs() + lambda.iter().map(|l| l.abs()).sum::<f64>());
    DualState {
        p,
        dual,
        noise,
        grad,
        residual,
    }
}

fn covariance(features: &[&[f64]], p: &[f64]) -> DMatrix<f64> {
    let c = features.len();
    let means: Vec<f64> = features.iter().map(|f| expectation(p, f)).collect();
    DMatrix::from_fn(c, c, |a, b| {
        compensated_sum(
            p.iter()
                .enumerate()
                .map(|(i, w)| w * (features[a][i] - means[a]) * (features[b][i] - means[b])),
        )
    })
}

/// Solve `H x = b` through the pseudo-inverse so that linearly dependent
/// features do not make the step blow up.
fn newton_direction(h: DMatrix<f64>, grad: &[f64]) -> Option<DVector<f64>> {
    if grad.is_empty() {
        return None;
    }
    let b = DVector::from_iterator(grad.len(), grad.iter().map(|g| -g));
    let svd = h.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    svd.solve(&b, smax * 1e-13)
        .ok()
        .filter(|d| d.iter().all(|x| x.is_finite()))
}

/// Entropy-maximizing distribution subject to `E_p[f_c] = F_c` for every
/// feature.
pub fn solve_maxent(prob: &MaxEntProblem, opts: SolverOptions) -> Result<MaxEntSolution, MaxEntError> {
    if !(opts.tol > 0.0) {
        return Err(MaxEntError::NonPositiveTolerance(opts.tol));
    }
    let k = prob.k;

    // Range checks per feature; constant features are dropped.
    let mut active = Vec::new();
    for (c, (f, &t)) in prob.features.iter().zip(&prob.targets).enumerate() {
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let infeasible = MaxEntError::InfeasibleTarget {
            feature: c,
            target: t,
            lo,
            hi,
        };
        if lo == hi {
            if (t - lo).abs() > CONSTANT_FEATURE_TOL {
                return Err(infeasible);
            }
        } else if t <= lo || t >= hi {
            return Err(infeasible);
        } else {
            active.push(c);
        }
    }
    let features: Vec<&[f64]> = active.iter().map(|&c| prob.features[c].as_slice()).collect();
    let targets: Vec<f64> = active.iter().map(|&c| prob.targets[c]).collect();

    // Dependent features must agree: any direction with zero variance under
    // the uniform distribution is constant on every state.
    if features.len() > 1 {
        let uniform = vec![1.0 / k as f64; k];
        let cov = covariance(&features, &uniform);
        let eig = cov.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev > scale * 1e-12 {
                continue;
            }
            let d = eig.eigenvectors.column(idx);
            let mismatch: f64 = (0..features.len())
                .map(|a| d[a] * (targets[a] - expectation(&uniform, features[a])))
                .sum();
            let fscale = max_abs(features.iter().flat_map(|f| f.iter().copied())).max(1.0);
            if mismatch.abs() > 1e-9 * fscale {
                return Err(MaxEntError::InfeasibleHull {
                    residual: mismatch.abs(),
                });
            }
        }
    }

    let mut sys = Scaled {
        k,
        features: Vec::with_capacity(features.len()),
        targets: Vec::with_capacity(features.len()),
        ranges: Vec::with_capacity(features.len()),
    };
    for (f, &t) in features.iter().zip(&targets) {
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mid, range) = (0.5 * (lo + hi), hi - lo);
        sys.features.push(f.iter().map(|x| (x - mid) / range).collect());
        sys.targets.push((t - mid) / range);
        sys.ranges.push(range);
    }
    let scaled: Vec<&[f64]> = sys.features.iter().map(Vec::as_slice).collect();

    let mut lambda = vec![0.0; features.len()];
    let mut state = evaluate(&sys, &lambda);
    let mut dual_trace = vec![state.dual];
    let mut dual_noise = state.noise;
    let mut best_residual = state.residual;
    let mut stagnant = 0usize;
    let mut iterations = 0usize;

    while state.residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(MaxEntError::NoConvergence {
                iterations,
                residual: state.residual,
            });
        }
        iterations += 1;

        let blown_up = log_odds_spread(&sys, &lambda) > MULTIPLIER_BLOWUP;
        let step = newton_direction(covariance(&scaled, &state.p), &state.grad);
        let accepted = step
            .and_then(|dir| line_search(&sys, &lambda, &dir, &state))
            .or_else(|| steepest_descent(&sys, &lambda, &state));

        match accepted {
            Some((new_lambda, new_state)) => {
                lambda = new_lambda;
                state = new_state;
                dual_trace.push(state.dual);
                dual_noise = dual_noise.max(state.noise);
            }
            None if blown_up => {}
            None => {
                return Err(MaxEntError::NoConvergence {
                    iterations,
                    residual: state.residual,
                })
            }
        }

        if state.residual < best_residual * 0.99 {
            best_residual = state.residual;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if log_odds_spread(&sys, &lambda) > MULTIPLIER_BLOWUP && stagnant >= STAGNATION_WINDOW {
            return Err(MaxEntError::InfeasibleHull {
                residual: state.residual,
            });
        }
    }

    if log_odds_spread(&sys, &lambda) > MULTIPLIER_BLOWUP {
        return Err(MaxEntError::InfeasibleHull {
            residual: state.residual,
        });
    }

    // Converged to tol. A few more Newton steps cost little and pin the
    // multipliers down when the covariance is small.
    for _ in 0..POLISH_STEPS {
        let Some(dir) = newton_direction(covariance(&scaled, &state.p), &state.grad) else {
            break;
        };
        match line_search(&sys, &lambda, &dir, &state) {
            Some((l, next)) if next.residual < state.residual => {
                lambda = l;
                state = next;
                dual_trace.push(state.dual);
                dual_noise = dual_noise.max(state.noise);
            }
            _ => break,
        }
    }

    let mut multipliers = vec![0.0; prob.features.len()];
    for ((&c, &l), &r) in active.iter().zip(&lambda).zip(&sys.ranges) {
        multipliers[c] = l / r;
    }
    let dist = Marginal::from_normalized(state.p);
    Ok(MaxEntSolution {
        entropy: entropy(&dist),
        dist,
        multipliers,
        residual: state.residual,
        iterations,
        dual_trace,
        dual_noise,
    })
}

/// Step halving until the dual decreases. Near the optimum the dual
/// changes by less than its own rounding error, so a step that leaves the
/// dual flat within that error is also accepted when it shrinks the gradient.
fn line_search(
    sys: &Scaled,
    lambda: &[f64],
    dir: &DVector<f64>,
    current: &DualState,
) -> Option<(Vec<f64>, DualState)> {
    let mut t = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = lambda.iter().zip(dir.iter()).map(|(l, d)| l + t * d).collect();
        let next = evaluate(sys, &trial);
        let decreased = next.dual < current.dual;
        let flat = current.noise.max(next.noise);
        let flat_but_better = next.dual <= current.dual + flat && next.residual < current.residual;
        if next.dual.is_finite() && (decreased || flat_but_better) {
            return Some((trial, next));
        }
        t *= 0.5;
    }
    None
}

/// Fallback when the Hessian has lost rank along the gradient, which happens
/// once the distribution has collapsed onto a face of the hull. The step is
/// doubled for as long as the dual keeps falling, so an unbounded dual drives
/// the multipliers past [`MULTIPLIER_BLOWUP`].
fn steepest_descent(sys: &Scaled, lambda: &[f64], current: &DualState) -> Option<(Vec<f64>, DualState)> {
    let at = |t: f64| {
        let trial: Vec<f64> = lambda
            .iter()
            .zip(&current.grad)
            .map(|(l, g)| l - t * g)
            .collect();
        let next = evaluate(sys, &trial);
        (trial, next)
    };
    let mut t = 1.0;
    let mut best = at(t);
    if best.1.dual < current.dual {
        for _ in 0..40 {
            let wider = at(t * 2.0);
            if !(wider.1.dual < best.1.dual) {
                break;
            }
            t *= 2.0;
            best = wider;
        }
        return Some(best);
    }
    for _ in 0..60 {
        t *= 0.5;
        best = at(t);
        if best.1.dual < current.dual {
            return Some(best);
        }
    }
    None
}
