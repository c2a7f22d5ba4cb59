use std::fmt;

use crate::error::{Error, Result};

/// Ordered list of named tensor factors with their dimensions.
///
/// Flattened indices are row-major: the first part is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    parts: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let parts: Vec<(String, usize)> = parts.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in parts.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::InvalidDimension(format!("subsystem `{label}` has dimension 0")));
            }
            if parts[..i].iter().any(|(other, _)| other == label) {
                return Err(Error::LabelCollision(label.clone()));
            }
        }
        Ok(Self { parts })
    }

    /// Layout with no factors; total dimension 1.
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    pub fn parts(&self) -> &[(String, usize)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.parts.iter().map(|(_, d)| d).product()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.parts.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(|(_, d)| *d).collect()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.parts.iter().any(|(l, _)| l == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.parts
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.parts[self.position(label)?].1)
    }

    /// Product of the dimensions of `labels`.
    pub fn dim_of_all<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        labels.iter().map(|l| self.dim_of(l.as_ref())).product()
    }

    /// Positions of `labels`, rejecting unknown and repeated entries.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if out.contains(&p) {
                return Err(Error::LabelCollision(l.as_ref().to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Sub-layout with the given labels in the given order.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let pos = self.positions(labels)?;
        Ok(Self { parts: pos.into_iter().map(|p| self.parts[p].clone()).collect() })
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<String>> {
        self.positions(labels)?;
        Ok(self
            .parts
            .iter()
            .filter(|(l, _)| !labels.iter().any(|x| x.as_ref() == l))
            .map(|(l, _)| l.clone())
            .collect())
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        Self::new(self.parts.iter().chain(other.parts.iter()).cloned())
    }

    pub fn renamed(&self, from: &str, to: &str) -> Result<Self> {
        let p = self.position(from)?;
        let mut parts = self.parts.clone();
        parts[p].0 = to.to_string();
        Self::new(parts)
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (l, d)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}:{d}")?;
        }
        write!(f, "]")
    }
}

/// Reorders a row-major tensor so that output axis `k` is input axis `perm[k]`.
pub(crate) fn permute_axes<T: Copy + Default>(data: &[T], dims: &[usize], perm: &[usize]) -> Vec<T> {
    debug_assert_eq!(dims.len(), perm.len());
    let total: usize = dims.iter().product();
    debug_assert_eq!(data.len(), total);
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return data.to_vec();
    }
    let rank = dims.len();
    let mut strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();

    let mut out = vec![T::default(); total];
    let mut idx = vec![0usize; rank];
    let mut src = 0usize;
    for slot in out.iter_mut() {
        *slot = data[src];
        // odometer increment over the output axes
        for k in (0..rank).rev() {
            idx[k] += 1;
            src += new_strides[k];
            if idx[k] < new_dims[k] {
                break;
            }
            src -= new_strides[k] * new_dims[k];
            idx[k] = 0;
        }
    }
    out
}

/// Splits a flat index into digits for the given dimensions (row-major).
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}
