//! Shared random and adversarial inputs for the integration tests.
#![allow(dead_code)]

use entrocorr::{JointDist, Marginal, NormalizeMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet(1, ..., 1) draw via normalized exponentials.
pub fn dirichlet(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Dirichlet draw with some entries knocked out to zero and some shrunk to
/// tiny but positive masses. Always keeps at least one positive entry.
pub fn sparse_dirichlet(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut w = dirichlet(rng, k);
    for x in &mut w {
        match rng.random_range(0..8) {
            0 => *x = 0.0,
            1 => *x *= 1e-12,
            _ => {}
        }
    }
    if w.iter().all(|&x| x == 0.0) {
        let i = rng.random_range(0..k);
        w[i] = 1.0;
    }
    w
}

pub fn joint(rows: usize, cols: usize, data: Vec<f64>) -> JointDist {
    JointDist::from_row_major(rows, cols, data, NormalizeMode::Renormalize).unwrap()
}

pub fn marginal(w: Vec<f64>) -> Marginal {
    Marginal::new(w, NormalizeMode::Renormalize).unwrap()
}

/// Random joint with shape drawn from {2..8} x {2..8}. One in four is
/// sparse, so zero rows and columns show up regularly.
pub fn random_joint(rng: &mut impl Rng) -> JointDist {
    let r = rng.random_range(2..=8);
    let c = rng.random_range(2..=8);
    let data = if rng.random_range(0..4) == 0 {
        sparse_dirichlet(rng, r * c)
    } else {
        dirichlet(rng, r * c)
    };
    joint(r, c, data)
}

/// Hand-built edge cases: deltas, exact products, diagonals, zero rows and
/// columns, degenerate shapes, and extreme mass ratios.
pub fn corner_joints() -> Vec<JointDist> {
    let mut out = Vec::new();
    for (r, c) in [(1, 1), (1, 5), (5, 1), (2, 2), (3, 7), (8, 8)] {
        for cell in [0, r * c - 1] {
            let mut d = vec![0.0; r * c];
            d[cell] = 1.0;
            out.push(joint(r, c, d));
        }
        out.push(joint(r, c, vec![1.0; r * c]));
    }
    for n in 2..=8 {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        out.push(joint(n, n, d.clone()));
        let mut anti = vec![0.0; n * n];
        for i in 0..n {
            anti[i * n + (n - 1 - i)] = (i + 1) as f64;
        }
        out.push(joint(n, n, anti));
    }
    // Zero rows and zero columns.
    out.push(joint(3, 3, vec![0.0, 0.0, 0.0, 0.2, 0.3, 0.1, 0.1, 0.0, 0.3]));
    out.push(joint(4, 2, vec![0.0, 0.0, 0.5, 0.1, 0.0, 0.0, 0.1, 0.3]));
    out.push(joint(2, 4, vec![0.0, 0.4, 0.0, 0.1, 0.0, 0.2, 0.0, 0.3]));
    out.push(joint(5, 3, {
        let mut d = vec![0.0; 15];
        d[4] = 0.7;
        d[5] = 0.3;
        d
    }));
    // Extreme mass ratios.
    out.push(joint(2, 2, vec![1.0 - 3e-15, 1e-15, 1e-15, 1e-15]));
    out.push(joint(2, 2, vec![1.0, 1e-300, 1e-300, 1e-300]));
    out.push(joint(2, 3, vec![1.0, 1e-200, 0.0, 0.0, 1e-100, 1e-50]));
    // Exact products, including ones with zero factors.
    let products = [
        (vec![0.5, 0.5], vec![0.25, 0.75]),
        (vec![0.1, 0.0, 0.9], vec![0.3, 0.3, 0.4]),
        (vec![1.0, 0.0], vec![0.0, 0.2, 0.8]),
        (vec![0.2; 5], vec![0.125; 8]),
    ];
    for (a, b) in products {
        out.push(JointDist::product(&marginal(a), &marginal(b)));
    }
    out
}

/// The corner set followed by `n` random joints from `seed`.
pub fn corpus(seed: u64, n: usize) -> Vec<JointDist> {
    let mut r = rng(seed);
    let mut out = corner_joints();
    out.extend((0..n).map(|_| random_joint(&mut r)));
    out
}

/// `-Σ p ln p` accumulated in sorted order with a Kahan-free plain sum.
/// Deliberately shares no code with the library.
pub fn naive_entropy(p: &[f64]) -> f64 {
    let mut terms: Vec<f64> = p
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    terms.iter().sum()
}

/// Strategy for joints up to 8 x 8 with occasional zero and tiny cells.
pub fn joint_strategy() -> impl Strategy<Value = JointDist> {
    (1usize..=8, 1usize..=8)
        .prop_flat_map(|(r, c)| {
            let cell = prop_oneof![
                6 => 0.0f64..1.0,
                1 => Just(0.0),
                1 => 1e-300f64..1e-12,
            ];
            (Just(r), Just(c), proptest::collection::vec(cell, r * c))
        })
        .prop_filter("positive mass", |(_, _, d)| d.iter().sum::<f64>() > 0.0)
        .prop_map(|(r, c, d)| joint(r, c, d))
}

pub fn marginal_strategy(max_len: usize) -> impl Strategy<Value = Marginal> {
    proptest::collection::vec(prop_oneof![4 => 0.0f64..1.0, 1 => Just(0.0)], 1..=max_len)
        .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 0.0)
        .prop_map(marginal)
}
