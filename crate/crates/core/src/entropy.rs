//! Von Neumann entropies in bits and the standard inequality checkers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qlin::linalg::{hermitian_eigenvalues, hermitian_function, CMatrix};
use crate::qlin::norms::{hermitian_trace_distance, PSD_CLIP};
use crate::qlin::state::DENSITY_TOL;
use crate::qlin::{DensityOperator, PureState};

/// Eigenvalues at or below this contribute nothing to an entropy.
pub const EIGEN_CLIP: f64 = 1e-12;

/// Slack for the inequality checkers.
pub const CHECK_TOL: f64 = 1e-9;

/// `-sum l log2 l` over eigenvalues above the clip.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues.iter().filter(|&&l| l > EIGEN_CLIP).map(|&l| -l * l.log2()).sum();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let t = rho.trace();
    if (t - 1.0).abs() > DENSITY_TOL {
        return Err(Error::NotNormalized(t));
    }
    Ok(entropy_of_spectrum(&rho.eigenvalues()))
}

/// Entropy of the marginal on `labels`; the empty set has entropy 0.
pub fn marginal_entropy<S: AsRef<str>>(rho: &DensityOperator, labels: &[S]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    von_neumann_entropy(&rho.partial_trace(labels)?)
}

/// Entropy of the marginal of a pure state on `labels`, from its Schmidt spectrum.
pub fn pure_marginal_entropy<S: AsRef<str>>(psi: &PureState, labels: &[S]) -> Result<f64> {
    if labels.is_empty() || labels.len() == psi.layout().len() {
        psi.layout().positions(labels)?;
        return Ok(0.0);
    }
    Ok(entropy_of_spectrum(&psi.schmidt_spectrum(labels)?))
}

fn disjoint_union(sets: &[&[&str]]) -> Result<Vec<String>> {
    let mut all: Vec<String> = Vec::new();
    for set in sets {
        for l in *set {
            if all.iter().any(|x| x == l) {
                return Err(Error::InvalidParameter(format!("label `{l}` appears in more than one set")));
            }
            all.push(l.to_string());
        }
    }
    Ok(all)
}

/// `S(A|B) = S(AB) - S(B)`.
pub fn conditional_entropy(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    let ab = disjoint_union(&[a, b])?;
    Ok(marginal_entropy(rho, &ab)? - marginal_entropy(rho, b)?)
}

/// `I(A:B) = S(A) + S(B) - S(AB)`.
pub fn mutual_information(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    let ab = disjoint_union(&[a, b])?;
    Ok(marginal_entropy(rho, a)? + marginal_entropy(rho, b)? - marginal_entropy(rho, &ab)?)
}

/// `I(A>B) = -S(A|B)`, through the same arithmetic.
pub fn coherent_information(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    Ok(-conditional_entropy(rho, a, b)?)
}

/// The Fannes function in bits.
pub fn fannes_eta(x: f64) -> f64 {
    let e = std::f64::consts::E;
    if x <= 1.0 / e {
        if x <= 0.0 {
            0.0
        } else {
            x - x * x.log2()
        }
    } else {
        x + std::f64::consts::LOG2_E / e
    }
}

/// `|S(rho) - S(sigma)| <= eta(||rho - sigma||_1) log2 d`.
pub fn fannes_check(rho: &DensityOperator, sigma: &DensityOperator) -> Result<bool> {
    if rho.layout().dims() != sigma.layout().dims() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.layout(), sigma.layout())));
    }
    let lhs = (von_neumann_entropy(rho)? - von_neumann_entropy(sigma)?).abs();
    let dist = hermitian_trace_distance(rho.matrix(), sigma.matrix());
    let rhs = fannes_eta(dist) * (rho.dim() as f64).log2();
    Ok(lhs <= rhs + CHECK_TOL)
}

/// `||sqrt(X) rho sqrt(X) - rho||_1 <= 2 sqrt(1 - Tr rho X)` for `0 <= X <= I`.
///
/// `rho` may be subnormalized.
pub fn gentle_measurement_check(rho: &DensityOperator, x: &CMatrix) -> Result<bool> {
    if x.shape() != (rho.dim(), rho.dim()) {
        return Err(Error::DimensionMismatch(format!("{:?} operator on dimension {}", x.shape(), rho.dim())));
    }
    let vals = hermitian_eigenvalues(x);
    let (min, max) = (vals[0], vals[vals.len() - 1]);
    if min < -PSD_CLIP || max > 1.0 + PSD_CLIP {
        return Err(Error::InvalidParameter(format!("X has spectrum [{min}, {max}], outside [0, 1]")));
    }
    let sx = hermitian_function(x, |v| v.clamp(0.0, 1.0).sqrt());
    let squeezed = &sx * rho.matrix() * &sx;
    let lhs = hermitian_trace_distance(&squeezed, rho.matrix());
    let eps = (1.0 - (rho.matrix() * x).trace().re).max(0.0);
    Ok(lhs <= 2.0 * eps.sqrt() + CHECK_TOL)
}

/// `S(A|BC) <= S(A|B)`.
pub fn strong_subadditivity_check(rho: &DensityOperator, a: &[&str], b: &[&str], cc: &[&str]) -> Result<bool> {
    let bc = disjoint_union(&[b, cc])?;
    let bc: Vec<&str> = bc.iter().map(String::as_str).collect();
    disjoint_union(&[a, &bc])?;
    let lhs = conditional_entropy(rho, a, &bc)?;
    let rhs = conditional_entropy(rho, a, b)?;
    Ok(lhs <= rhs + CHECK_TOL)
}

/// `I(A1 A2 > B) = I(A2 > B) + I(A1 > B A2)`.
pub fn chain_rule_check(rho: &DensityOperator, a1: &[&str], a2: &[&str], b: &[&str]) -> Result<bool> {
    let a12 = disjoint_union(&[a1, a2])?;
    let ba2 = disjoint_union(&[b, a2])?;
    let a12: Vec<&str> = a12.iter().map(String::as_str).collect();
    let ba2: Vec<&str> = ba2.iter().map(String::as_str).collect();
    let lhs = coherent_information(rho, &a12, b)?;
    let rhs = coherent_information(rho, a2, b)? + coherent_information(rho, a1, &ba2)?;
    Ok((lhs - rhs).abs() <= CHECK_TOL)
}

/// Entropy of every subset of the labels of a state.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    labels: Vec<String>,
    /// Keyed by comma-joined labels in layout order; the empty key is the empty set.
    entropies: BTreeMap<String, f64>,
}

impl EntropyReport {
    pub fn of_density(rho: &DensityOperator) -> Result<Self> {
        let labels: Vec<String> = rho.layout().labels().iter().map(|s| s.to_string()).collect();
        let m = labels.len();
        if m > 16 {
            return Err(Error::InvalidParameter(format!("{m} subsystems is too many for subset enumeration")));
        }
        let mut entropies = BTreeMap::new();
        for mask in 0u32..(1 << m) {
            let subset: Vec<&str> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| labels[i].as_str()).collect();
            entropies.insert(subset.join(","), marginal_entropy(rho, &subset)?);
        }
        Ok(Self { labels, entropies })
    }

    /// Marginals of a pure state come from Schmidt spectra.
    pub fn of_pure(psi: &PureState) -> Result<Self> {
        let labels: Vec<String> = psi.layout().labels().iter().map(|s| s.to_string()).collect();
        let m = labels.len();
        if m > 16 {
            return Err(Error::InvalidParameter(format!("{m} subsystems is too many for subset enumeration")));
        }
        let mut entropies = BTreeMap::new();
        for mask in 0u32..(1 << m) {
            let subset: Vec<&str> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| labels[i].as_str()).collect();
            let s = if subset.is_empty() || subset.len() == m {
                0.0
            } else {
                entropy_of_spectrum(&psi.schmidt_spectrum(&subset)?)
            };
            entropies.insert(subset.join(","), s);
        }
        Ok(Self { labels, entropies })
    }

    fn key(&self, set: &[&str]) -> Result<String> {
        let mut idx = Vec::with_capacity(set.len());
        for l in set {
            let i = self.labels.iter().position(|x| x == l).ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if idx.contains(&i) {
                return Err(Error::InvalidParameter(format!("label `{l}` repeated")));
            }
            idx.push(i);
        }
        idx.sort_unstable();
        Ok(idx.iter().map(|&i| self.labels[i].as_str()).collect::<Vec<_>>().join(","))
    }

    pub fn entropy(&self, set: &[&str]) -> Result<f64> {
        Ok(self.entropies[&self.key(set)?])
    }

    pub fn conditional(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        let ab = disjoint_union(&[a, b])?;
        let ab: Vec<&str> = ab.iter().map(String::as_str).collect();
        Ok(self.entropy(&ab)? - self.entropy(b)?)
    }

    pub fn mutual(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        let ab = disjoint_union(&[a, b])?;
        let ab: Vec<&str> = ab.iter().map(String::as_str).collect();
        Ok(self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?)
    }

    pub fn coherent(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        Ok(-self.conditional(a, b)?)
    }

    pub fn entropies(&self) -> &BTreeMap<String, f64> {
        &self.entropies
    }
}

/// Inverse purity `1 / Tr rho^2`, the effective dimension of a marginal.
pub fn collision_dimension(rho: &DensityOperator) -> f64 {
    1.0 / rho.purity()
}
