//! Shannon entropy `S(p) = -Σ p ln p` and the identities built on
//! it: the chain decomposition over a conditional family, mutual information
//! as the entropy gained by decorrelating a joint, and the averaging gap of a
//! convex mixture.
//!
//! Everything is computed in nats; bits and physical units are views.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, JointDist, Marginal, MixtureWeights};
use crate::sum::compensated_sum;

/// Tolerance separating rounding noise from a genuine sign violation in
/// quantities that are nonnegative in exact arithmetic.
pub const NEGATIVE_GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("sigma is defined on [0, 1], got {0}")]
    Domain(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("internal consistency failure: {quantity} = {value} is below -1e-12")]
    Inconsistent { quantity: &'static str, value: f64 },
}

/// Display unit for entropy values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
    /// Nats multiplied by a caller-supplied Boltzmann constant.
    Physical(f64),
}

impl Unit {
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / LN_2,
            Unit::Physical(k) => nats * k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
            Unit::Physical(_) => "physical",
        }
    }
}

/// A nonnegative entropy in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub const ZERO: EntropyValue = EntropyValue(0.0);

    /// Values in `[-1e-12, 0)` are clamped to zero; anything lower is an error.
    pub fn from_nats(nats: f64, quantity: &'static str) -> Result<Self, EntropyError> {
        if nats >= 0.0 {
            Ok(EntropyValue(nats))
        } else if nats >= -NEGATIVE_GAP_TOL {
            Ok(EntropyValue(0.0))
        } else {
            Err(EntropyError::Inconsistent {
                quantity,
                value: nats,
            })
        }
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / LN_2
    }

    pub fn physical(self, boltzmann_k: f64) -> f64 {
        self.0 * boltzmann_k
    }

    pub fn in_unit(self, unit: Unit) -> f64 {
        unit.from_nats(self.0)
    }
}

/// Anything exposing a flat list of probability masses.
pub trait Masses {
    fn masses(&self) -> &[f64];
}

impl Masses for Marginal {
    fn masses(&self) -> &[f64] {
        self.probs()
    }
}

impl Masses for JointDist {
    fn masses(&self) -> &[f64] {
        self.entries()
    }
}

/// `σ(x) = -x ln x`, with `σ(0) = 0`.
pub fn sigma(x: f64) -> Result<f64, EntropyError> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&x) {
        return Err(EntropyError::Domain(x));
    }
    Ok(sigma_term(x.clamp(0.0, 1.0)))
}

#[inline]
fn sigma_term(x: f64) -> f64 {
    if x <= 0.0 || x == 1.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

fn entropy_of(masses: &[f64]) -> f64 {
    compensated_sum(masses.iter().map(|&x| sigma_term(x)))
}

/// Plug-in entropy of a marginal or a joint (summed over all cells).
pub fn entropy<D: Masses + ?Sized>(d: &D) -> EntropyValue {
    EntropyValue(entropy_of(d.masses()))
}

/// Both sides of `S(p) = S(P) + Σ_i P_i S(ζ^(i))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDecomposition {
    pub s_base: EntropyValue,
    pub s_cond: EntropyValue,
    pub s_total: EntropyValue,
    /// `S(ζ^(i))` per row; `None` for rows with zero base mass.
    pub row_entropies: Vec<Option<EntropyValue>>,
}

pub fn chain_decompose(j: &JointDist) -> ChainDecomposition {
    let family = j.condition_on_a();
    let s_base = entropy(family.base());
    let row_entropies: Vec<Option<EntropyValue>> = family
        .rows()
        .iter()
        .map(|r| r.as_ref().map(entropy))
        .collect();
    let s_cond = compensated_sum(
        family
            .base()
            .probs()
            .iter()
            .zip(&row_entropies)
            .filter_map(|(&w, s)| s.map(|s| w * s.nats())),
    );
    ChainDecomposition {
        s_base,
        s_cond: EntropyValue(s_cond),
        s_total: EntropyValue(s_base.nats() + s_cond),
        row_entropies,
    }
}

/// `S(C(p)) - S(p)`: the entropy gained by replacing the joint with the
/// product of its marginals.
pub fn mutual_information(j: &JointDist) -> Result<EntropyValue, EntropyError> {
    let gap = entropy(&j.decorrelate()).nats() - entropy(j).nats();
    EntropyValue::from_nats(gap, "mutual information")
}

/// `S(mixture) - Σ_k w̄_k S(Z^k)` for normalized weights `w̄`.
pub fn averaging_gap(dists: &[Marginal], weights: &MixtureWeights) -> Result<f64, EntropyError> {
    let mix = Marginal::mixture(dists, weights)?;
    let mean_entropy = compensated_sum(
        dists
            .iter()
            .zip(weights.normalized())
            .map(|(d, w)| w * entropy(d).nats()),
    );
    let gap = entropy(&mix).nats() - mean_entropy;
    Ok(EntropyValue::from_nats(gap, "averaging gap")?.nats())
}

/// Comparison of a joint's entropy with that of its decorrelated form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubadditivityReport {
    pub s_joint: f64,
    pub s_pi: f64,
    pub s_marg_a: f64,
    pub s_marg_b: f64,
    /// `s_pi - s_joint`, unclamped.
    pub gap: f64,
    pub holds: bool,
}

impl SubadditivityReport {
    /// Every entropy field rescaled into `unit`.
    pub fn in_unit(&self, unit: Unit) -> Self {
        SubadditivityReport {
            s_joint: unit.from_nats(self.s_joint),
            s_pi: unit.from_nats(self.s_pi),
            s_marg_a: unit.from_nats(self.s_marg_a),
            s_marg_b: unit.from_nats(self.s_marg_b),
            gap: unit.from_nats(self.gap),
            holds: self.holds,
        }
    }
}

pub fn subadditivity_report(j: &JointDist) -> SubadditivityReport {
    let s_joint = entropy(j).nats();
    let s_pi = entropy(&j.decorrelate()).nats();
    let gap = s_pi - s_joint;
    SubadditivityReport {
        s_joint,
        s_pi,
        s_marg_a: entropy(&j.marginal_a()).nats(),
        s_marg_b: entropy(&j.marginal_b()).nats(),
        gap,
        holds: gap >= -NEGATIVE_GAP_TOL,
    }
}
