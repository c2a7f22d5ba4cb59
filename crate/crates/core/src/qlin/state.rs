use crate::error::{Error, Result};

use super::layout::{digits, permute_axes, SubsystemLayout};
use super::linalg::{
    c, hermitian_eigenvalues, hermiticity_defect, matrix_from_row_major, row_major, trace, CMatrix,
    CVector, C64, ONE,
};

pub const NORM_TOL: f64 = 1e-12;
pub const DENSITY_TOL: f64 = 1e-10;

/// Unit vector on a labeled tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    layout: SubsystemLayout,
}

impl PureState {
    /// Wraps amplitudes that are already unit norm (within 1e-12).
    pub fn new(amplitudes: CVector, layout: SubsystemLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes, layout })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: CVector, layout: SubsystemLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes: amplitudes / c(norm, 0.0), layout })
    }

    /// Carries a vector of any norm through layout operations; callers must not
    /// treat the result as a state.
    pub(crate) fn new_unchecked_norm(amplitudes: CVector, layout: SubsystemLayout) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.total_dim());
        Self { amplitudes, layout }
    }

    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let dim = layout.total_dim();
        if index >= dim {
            return Err(Error::InvalidParameter(format!("basis index {index} out of range {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Self { amplitudes: v, layout })
    }

    /// `sum_i |i>|i> / sqrt(d)` on two subsystems of dimension `d`.
    pub fn maximally_entangled(a: &str, b: &str, d: usize) -> Result<Self> {
        let layout = SubsystemLayout::new([(a, d), (b, d)])?;
        let mut v = CVector::zeros(d * d);
        let amp = c(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            v[i * d + i] = amp;
        }
        Ok(Self { amplitudes: v, layout })
    }

    /// `(|0..0> + |1..1> + ..) / sqrt(d)` on the given labels, each of dimension `d`.
    pub fn ghz(labels: &[&str], d: usize) -> Result<Self> {
        let layout = SubsystemLayout::new(labels.iter().map(|l| (*l, d)))?;
        let dim = layout.total_dim();
        let mut v = CVector::zeros(dim);
        let step: usize = (0..labels.len()).map(|k| d.pow(k as u32)).sum();
        let amp = c(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            v[i * step] = amp;
        }
        Ok(Self { amplitudes: v, layout })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn into_parts(self) -> (CVector, SubsystemLayout) {
        (self.amplitudes, self.layout)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self { amplitudes, layout })
    }

    /// `n`-fold tensor power; copy `k` of label `X` is named `X_k` (1-based).
    pub fn tensor_power(&self, n: usize) -> Result<PureState> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
        }
        let mut parts = Vec::new();
        let mut amps = CVector::from_element(1, ONE);
        for k in 1..=n {
            for (l, d) in self.layout.parts() {
                parts.push((format!("{l}_{k}"), *d));
            }
            amps = amps.kronecker(&self.amplitudes);
        }
        Ok(Self { amplitudes: amps, layout: SubsystemLayout::new(parts)? })
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Reorders subsystems to `order` (a permutation of all labels).
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<PureState> {
        if order.len() != self.layout.len() {
            return Err(Error::InvalidParameter("permutation must list every label".into()));
        }
        let perm = self.layout.positions(order)?;
        let data = permute_axes(self.amplitudes.as_slice(), &self.layout.dims(), &perm);
        Ok(Self { amplitudes: CVector::from_vec(data), layout: self.layout.select(order)? })
    }

    /// Permutes and fuses subsystems into named composite factors.
    ///
    /// Every label must appear in exactly one group.
    pub fn regroup(&self, groups: &[(&str, Vec<String>)]) -> Result<PureState> {
        let order: Vec<&str> = groups.iter().flat_map(|(_, g)| g.iter().map(String::as_str)).collect();
        let p = self.permuted(&order)?;
        let mut parts = Vec::with_capacity(groups.len());
        for (name, g) in groups {
            parts.push((name.to_string(), p.layout.dim_of_all(g)?));
        }
        Ok(Self { amplitudes: p.amplitudes, layout: SubsystemLayout::new(parts)? })
    }

    pub fn relabeled(&self, from: &str, to: &str) -> Result<PureState> {
        Ok(Self { amplitudes: self.amplitudes.clone(), layout: self.layout.renamed(from, to)? })
    }

    /// Coefficient matrix with `rows` labels as row index and the remaining labels
    /// (in layout order) as column index.
    pub fn matrix_view<S: AsRef<str>>(&self, rows: &[S]) -> Result<(CMatrix, SubsystemLayout, SubsystemLayout)> {
        let rest = self.layout.complement(rows)?;
        let row_layout = self.layout.select(rows)?;
        let col_layout = self.layout.select(&rest)?;
        let mut order: Vec<&str> = rows.iter().map(|s| s.as_ref()).collect();
        order.extend(rest.iter().map(String::as_str));
        let perm = self.layout.positions(&order)?;
        let data = permute_axes(self.amplitudes.as_slice(), &self.layout.dims(), &perm);
        let m = matrix_from_row_major(row_layout.total_dim(), col_layout.total_dim(), &data);
        Ok((m, row_layout, col_layout))
    }

    /// Reduced density operator on `keep`, in layout order.
    pub fn reduced<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        self.layout.positions(keep)?;
        let ordered: Vec<String> = self
            .layout
            .labels()
            .into_iter()
            .filter(|l| keep.iter().any(|k| k.as_ref() == *l))
            .map(String::from)
            .collect();
        let (m, rows, _) = self.matrix_view(&ordered)?;
        let rho = &m * m.adjoint();
        Ok(DensityOperator { matrix: rho, layout: rows, subnormalized: false })
    }

    /// Squared Schmidt coefficients across `labels` versus the rest, descending.
    pub fn schmidt_spectrum<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<f64>> {
        let (m, _, _) = self.matrix_view(labels)?;
        let mut s: Vec<f64> = super::linalg::singular_values(&m).into_iter().map(|x| x * x).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    pub fn density(&self) -> DensityOperator {
        let v = &self.amplitudes;
        DensityOperator { matrix: v * v.adjoint(), layout: self.layout.clone(), subnormalized: false }
    }

    /// Applies `op` (rows = output dim, cols = dim of `targets`) to the `targets` factors.
    ///
    /// The output factors `out_parts` are placed first, followed by the untouched
    /// labels in layout order. The result is not renormalized.
    pub fn apply_operator<S: AsRef<str>>(
        &self,
        targets: &[S],
        op: &CMatrix,
        out_parts: &[(&str, usize)],
    ) -> Result<(CVector, SubsystemLayout)> {
        let (m, rows, cols) = self.matrix_view(targets)?;
        if op.ncols() != rows.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} columns, targets have dimension {}",
                op.ncols(),
                rows.total_dim()
            )));
        }
        let out_layout = SubsystemLayout::new(out_parts.iter().map(|(l, d)| (*l, *d)))?;
        if out_layout.total_dim() != op.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} rows, output layout {} has dimension {}",
                op.nrows(),
                out_layout,
                out_layout.total_dim()
            )));
        }
        let layout = out_layout.concat(&cols)?;
        let out = op * m;
        Ok((CVector::from_vec(row_major(&out)), layout))
    }

    /// Applies an isometry to its input labels; the outputs take the slot of the
    /// first input label.
    pub fn apply_isometry(&self, iso: &super::Isometry) -> Result<PureState> {
        let inputs = iso.input().labels();
        if inputs.is_empty() {
            return Err(Error::InvalidParameter("isometry has no input labels".into()));
        }
        if iso.input().dims() != self.layout.select(&inputs)?.dims() {
            return Err(Error::DimensionMismatch("isometry input dims differ from state".into()));
        }
        let first = self.layout.position(inputs[0])?;
        let out_parts: Vec<(&str, usize)> = iso.output().parts().iter().map(|(l, d)| (l.as_str(), *d)).collect();
        let (amps, layout) = self.apply_operator(&inputs, iso.matrix(), &out_parts)?;
        let state = PureState::normalized(amps, layout)?;
        let mut order: Vec<String> = Vec::new();
        for (i, (l, _)) in self.layout.parts().iter().enumerate() {
            if i == first {
                order.extend(iso.output().labels().iter().map(|s| s.to_string()));
            }
            if !inputs.contains(&l.as_str()) {
                order.push(l.clone());
            }
        }
        state.permuted(&order)
    }
}

fn check_len(len: usize, layout: &SubsystemLayout) -> Result<()> {
    if len != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {len} vs layout {layout} of dimension {}",
            layout.total_dim()
        )));
    }
    Ok(())
}

/// Positive semidefinite operator with unit trace (or trace at most one when flagged
/// as subnormalized).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    layout: SubsystemLayout,
    subnormalized: bool,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, layout: SubsystemLayout) -> Result<Self> {
        let rho = Self::validated(matrix, layout, false)?;
        let tr = trace(&rho.matrix).re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotNormalized(tr));
        }
        Ok(rho)
    }

    pub fn new_subnormalized(matrix: CMatrix, layout: SubsystemLayout) -> Result<Self> {
        let rho = Self::validated(matrix, layout, true)?;
        let tr = trace(&rho.matrix).re;
        if tr > 1.0 + DENSITY_TOL {
            return Err(Error::NotNormalized(tr));
        }
        Ok(rho)
    }

    fn validated(matrix: CMatrix, layout: SubsystemLayout, subnormalized: bool) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for layout {layout}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermiticity_defect(&matrix);
        if herm > DENSITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let min = hermitian_eigenvalues(&matrix).first().copied().unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix, layout, subnormalized })
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self { matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0), layout, subnormalized: false }
    }

    /// Diagonal state with the given probabilities on a single subsystem.
    pub fn diagonal(label: &str, probs: &[f64]) -> Result<Self> {
        let layout = SubsystemLayout::single(label, probs.len())?;
        let diag = CVector::from_iterator(probs.len(), probs.iter().map(|&p| c(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&diag), layout)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        // Tr rho^2 = sum |rho_ij|^2 for Hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            layout,
            subnormalized: self.subnormalized || other.subnormalized,
        })
    }

    /// Traces out every label not in `keep`; kept labels stay in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityOperator> {
        self.layout.positions(keep)?;
        let dims = self.layout.dims();
        let keep_mask: Vec<bool> =
            self.layout.labels().iter().map(|l| keep.iter().any(|k| k.as_ref() == *l)).collect();
        let kept_layout = SubsystemLayout::new(
            self.layout.parts().iter().zip(&keep_mask).filter(|(_, &m)| m).map(|(p, _)| p.clone()),
        )?;
        let dk = kept_layout.total_dim();
        let dt = self.dim() / dk;

        // (kept index, traced index) for every flat index
        let mut buckets: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
        for flat in 0..self.dim() {
            let dig = digits(flat, &dims);
            let (mut k, mut t) = (0usize, 0usize);
            for (axis, &dgt) in dig.iter().enumerate() {
                if keep_mask[axis] {
                    k = k * dims[axis] + dgt;
                } else {
                    t = t * dims[axis] + dgt;
                }
            }
            buckets[t].push((flat, k));
        }
        let mut out = CMatrix::zeros(dk, dk);
        for bucket in &buckets {
            for &(i, ki) in bucket {
                for &(j, kj) in bucket {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Self { matrix: out, layout: kept_layout, subnormalized: self.subnormalized })
    }

    /// Reorders subsystems to `order` (a permutation of all labels).
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<DensityOperator> {
        if order.len() != self.layout.len() {
            return Err(Error::InvalidParameter("permutation must list every label".into()));
        }
        let perm = self.layout.positions(order)?;
        let dims = self.layout.dims();
        let mut tensor_dims = dims.clone();
        tensor_dims.extend(dims.iter());
        let mut full_perm = perm.clone();
        full_perm.extend(perm.iter().map(|p| p + dims.len()));
        let data = permute_axes(&row_major(&self.matrix), &tensor_dims, &full_perm);
        let d = self.dim();
        Ok(Self {
            matrix: matrix_from_row_major(d, d, &data),
            layout: self.layout.select(order)?,
            subnormalized: self.subnormalized,
        })
    }

    /// Applies `sum_k K rho K^H` on the `targets` factors; outputs take the targets' place
    /// at the front of the layout (followed by the untouched labels).
    pub fn apply_channel<S: AsRef<str>>(&self, targets: &[S], channel: &super::KrausChannel) -> Result<DensityOperator> {
        let rest = self.layout.complement(targets)?;
        let mut order: Vec<String> = targets.iter().map(|s| s.as_ref().to_string()).collect();
        order.extend(rest.iter().cloned());
        let p = self.permuted(&order)?;
        let din = p.layout.dim_of_all(targets)?;
        if din != channel.input().total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} vs targets {din}",
                channel.input().total_dim()
            )));
        }
        let rest_layout = p.layout.select(&rest)?;
        let drest = rest_layout.total_dim();
        let id = CMatrix::identity(drest, drest);
        let mut out = CMatrix::zeros(channel.output().total_dim() * drest, channel.output().total_dim() * drest);
        for k in channel.kraus_ops() {
            let big = k.kronecker(&id);
            out += &big * &p.matrix * big.adjoint();
        }
        Ok(Self {
            matrix: out,
            layout: channel.output().concat(&rest_layout)?,
            subnormalized: self.subnormalized,
        })
    }

    /// Embeds into a pure state: amplitudes `sqrt(rho)` vectorized, purifier of full dimension.
    pub fn sqrt_matrix(&self) -> CMatrix {
        super::linalg::hermitian_function(&self.matrix, |x| x.max(0.0).sqrt())
    }
}

