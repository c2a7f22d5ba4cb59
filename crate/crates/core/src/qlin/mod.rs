//! Dense complex linear algebra over labeled multipartite Hilbert spaces.

pub mod layout;
pub mod linalg;
pub mod norms;
pub mod ops;
pub mod random;
pub mod state;
pub mod uhlmann;

pub use layout::SubsystemLayout;
pub use linalg::{CMatrix, CVector, C64};
pub use norms::{fidelity, fuchs_van_de_graaf_check, hs_norm, norm_dim_inequality, trace_norm};
pub use ops::{Isometry, KrausChannel};
pub use random::{haar_unitary, random_density, random_pure_state};
pub use state::{DensityOperator, PureState};
pub use uhlmann::{uhlmann_decoder, UhlmannDecoder, UhlmannTarget};

use crate::error::{Error, Result};
use linalg::{c, hermitian_eigen, ZERO};

/// Purification `sum_i sqrt(l_i) |e_i> |i>` with eigenvalues in descending order.
///
/// The purifier always has the full dimension of `rho`.
pub fn purify(rho: &DensityOperator, purifier_label: &str) -> Result<PureState> {
    if (rho.trace() - 1.0).abs() > state::DENSITY_TOL {
        return Err(Error::NotNormalized(rho.trace()));
    }
    let d = rho.dim();
    let layout = rho.layout().concat(&SubsystemLayout::single(purifier_label, d)?)?;
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let mut amps = CVector::from_element(d * d, ZERO);
    for (slot, k) in (0..d).rev().enumerate() {
        let w = vals[k].max(0.0).sqrt();
        for r in 0..d {
            amps[r * d + slot] = vecs[(r, k)] * c(w, 0.0);
        }
    }
    PureState::normalized(amps, layout)
}

/// Flip operator `F|ij> = |ji>` and the symmetric / antisymmetric projectors on `C^d (x) C^d`.
#[derive(Clone, Debug)]
pub struct SwapOperators {
    pub flip: CMatrix,
    pub symmetric: CMatrix,
    pub antisymmetric: CMatrix,
}

pub fn swap_and_projectors(d: usize) -> Result<SwapOperators> {
    if d == 0 {
        return Err(Error::InvalidDimension("swap on dimension 0".into()));
    }
    let flip = flip_operator(d);
    let id = CMatrix::identity(d * d, d * d);
    let half = c(0.5, 0.0);
    Ok(SwapOperators { symmetric: (&id + &flip) * half, antisymmetric: (&id - &flip) * half, flip })
}

pub(crate) fn flip_operator(d: usize) -> CMatrix {
    let mut f = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = c(1.0, 0.0);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::linalg::trace;

    #[test]
    fn swap_traces_and_square() {
        let s = swap_and_projectors(2).unwrap();
        assert!((trace(&s.symmetric).re - 3.0).abs() < 1e-12);
        assert!((trace(&s.antisymmetric).re - 1.0).abs() < 1e-12);
        let f2 = &s.flip * &s.flip;
        assert!((f2 - CMatrix::identity(4, 4)).norm() < 1e-14);
        for d in 1..6 {
            let s = swap_and_projectors(d).unwrap();
            assert!((trace(&s.symmetric).re - (d * (d + 1) / 2) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn purify_pure_state_puts_purifier_in_zero() {
        let phi = PureState::normalized(
            CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]),
            SubsystemLayout::single("A", 2).unwrap(),
        )
        .unwrap();
        let p = purify(&phi.density(), "P").unwrap();
        let on_p = p.reduced(&["P"]).unwrap();
        assert!((on_p.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(fidelity(&p.reduced(&["A"]).unwrap(), &phi.density()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn purify_diagonal_has_matching_marginals() {
        let rho = DensityOperator::diagonal("A", &[0.25, 0.75]).unwrap();
        let p = purify(&rho, "P").unwrap();
        let mut ev = p.reduced(&["P"]).unwrap().eigenvalues();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.25).abs() < 1e-12 && (ev[1] - 0.75).abs() < 1e-12);
        assert!(fidelity(&p.reduced(&["A"]).unwrap(), &rho).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_gives_maximally_entangled() {
        let rho = DensityOperator::maximally_mixed(SubsystemLayout::single("A", 2).unwrap());
        let p = purify(&rho, "P").unwrap();
        let spec = p.schmidt_spectrum(&["A"]).unwrap();
        assert!((spec[0] - 0.5).abs() < 1e-12 && (spec[1] - 0.5).abs() < 1e-12);
    }
}
