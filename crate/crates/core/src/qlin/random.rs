use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::LabRng;

use super::layout::SubsystemLayout;
use super::linalg::{c, CMatrix, CVector, C64};
use super::state::{DensityOperator, PureState};

fn gaussian(rng: &mut LabRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix with i.i.d. standard complex normal entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut LabRng) -> CMatrix {
    // fill row by row so the draw order does not depend on storage order
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// Haar-distributed `d x d` unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(d: usize, rng: &mut LabRng) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::InvalidDimension("Haar unitary of dimension 0".into()));
    }
    let (mut q, r) = ginibre(d, d, rng).qr().unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(q)
}

/// Haar-random isometry `cols -> rows` (first columns of a Haar unitary).
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut LabRng) -> Result<CMatrix> {
    if cols > rows {
        return Err(Error::InvalidDimension(format!("isometry {cols} -> {rows}")));
    }
    let u = haar_unitary(rows, rng)?;
    Ok(u.columns(0, cols).into_owned())
}

/// Uniformly random unit vector on `layout`.
pub fn random_pure_state(layout: SubsystemLayout, rng: &mut LabRng) -> Result<PureState> {
    let d = layout.total_dim();
    let v = CVector::from_iterator(d, (0..d).map(|_| gaussian(rng)));
    PureState::normalized(v, layout)
}

/// Random mixed state `G G^H / Tr(G G^H)` with `G` Ginibre of the given rank
/// (Hilbert-Schmidt measure when `rank` equals the dimension).
pub fn random_density(layout: SubsystemLayout, rank: usize, rng: &mut LabRng) -> Result<DensityOperator> {
    let d = layout.total_dim();
    if rank == 0 {
        return Err(Error::InvalidDimension("rank 0 density".into()));
    }
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = super::linalg::trace(&m).re;
    let m = m * c(1.0 / tr, 0.0);
    // symmetrize away rounding so validation never trips on it
    let m = (&m + m.adjoint()) * c(0.5, 0.0);
    DensityOperator::new(m, layout)
}

/// Random Hermitian matrix with standard Gaussian entries (GUE-like).
pub fn random_hermitian(d: usize, rng: &mut LabRng) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * c(0.5, 0.0)
}
