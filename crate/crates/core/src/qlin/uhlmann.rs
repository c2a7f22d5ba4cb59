//! Optimal receiver-side isometry between two purifications.
//!
//! Writing both states as coefficient matrices over (fixed x movable), the overlap
//! `<target| (I (x) V) |actual>` equals `Tr(V^T X)` with `X = M_target^H M_actual`.
//! Its modulus is maximized by the unitary polar factor of `X`; the maximum is the
//! sum of singular values of `X`, i.e. the root fidelity of the fixed marginals.

use crate::error::{Error, Result};

use super::linalg::{c, orthonormal_complement, thin_svd, CMatrix, Householder, C64, ZERO};
use super::layout::SubsystemLayout;
use super::ops::Isometry;
use super::state::PureState;

#[derive(Clone, Debug)]
pub struct UhlmannDecoder {
    isometry: Isometry,
    overlap: C64,
}

impl UhlmannDecoder {
    /// Isometry from the actual state's movable factors to the target's.
    pub fn isometry(&self) -> &Isometry {
        &self.isometry
    }

    /// `|<target|(I (x) V)|actual>|^2`, evaluated by applying `V`.
    pub fn fidelity(&self) -> f64 {
        self.overlap.norm_sqr().min(1.0)
    }

    pub fn overlap(&self) -> C64 {
        self.overlap
    }
}

/// Builds the decoder for `actual -> target`, both sharing the `fixed` factors.
///
/// The movable factors are everything else on each side, in layout order; the
/// target's movable dimension must be at least the actual's.
pub fn uhlmann_decoder<S: AsRef<str>>(actual: &PureState, target: &PureState, fixed: &[S]) -> Result<UhlmannDecoder> {
    UhlmannTarget::new(target, fixed)?.decoder(actual)
}

/// A target prepared once for decoding many actual states.
#[derive(Clone, Debug)]
pub struct UhlmannTarget {
    fixed: Vec<String>,
    m_b: CMatrix,
    fix_b: SubsystemLayout,
    mov_b: SubsystemLayout,
    u_b: CMatrix,
    s_b: Vec<f64>,
    vt_b: CMatrix,
}

/// Pieces of `V = H [Z; 0]` with `H` a product of Householder reflections.
struct Polar {
    hh: Householder,
    z: CMatrix,
}

impl UhlmannTarget {
    pub fn new<S: AsRef<str>>(target: &PureState, fixed: &[S]) -> Result<Self> {
        let (m_b, fix_b, mov_b) = target.matrix_view(fixed)?;
        let (u_b, s_b, vt_b) = thin_svd(&m_b);
        let fixed = fixed.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(Self { fixed, m_b, fix_b, mov_b, u_b, s_b, vt_b })
    }

    fn view(&self, actual: &PureState) -> Result<(CMatrix, SubsystemLayout)> {
        let (m_a, fix_a, mov_a) = actual.matrix_view(&self.fixed)?;
        if fix_a.dims() != self.fix_b.dims() {
            return Err(Error::DimensionMismatch(format!("fixed factors {fix_a} vs {}", self.fix_b)));
        }
        let (ma, mt) = (mov_a.total_dim(), self.mov_b.total_dim());
        if mt < ma {
            return Err(Error::DimensionMismatch(format!(
                "target movable dimension {mt} smaller than actual {ma}"
            )));
        }
        Ok((m_a, mov_a))
    }

    /// Isometry `V` (mt x ma) maximizing `|Tr(V^T M_b^H M_a)|`, kept in factored form.
    ///
    /// Uses the low rank of `X = M_b^H M_a` (at most the fixed dimension) so the tall
    /// target side is only touched through Householder reflections.
    fn polar(&self, m_a: &CMatrix) -> Polar {
        let ma = m_a.ncols();

        // M_b = U_b S_b V_b^H  =>  X = V_b Y,  Y = S_b U_b^H M_a
        let mut y = self.u_b.adjoint() * m_a;
        for (i, s) in self.s_b.iter().enumerate() {
            y.row_mut(i).iter_mut().for_each(|z| *z *= c(*s, 0.0));
        }
        // Y = U_y S W^H  =>  X = (V_b U_y) S W^H
        let (u_y, _, wt) = thin_svd(&y);
        let g = self.vt_b.adjoint() * u_y;
        let w = wt.adjoint();

        // V = conj(G) W^T on span(conj W); complement of span(conj W) goes to span(conj G)^perp
        let g_conj = g.map(|z| z.conj());
        let w_conj = w.map(|z| z.conj());
        let k = g_conj.ncols();
        let e = orthonormal_complement(&w_conj);
        let mut right = CMatrix::from_element(ma, ma, ZERO);
        right.columns_mut(0, k).copy_from(&w_conj);
        right.columns_mut(k, ma - k).copy_from(&e);

        let hh = Householder::new(&g_conj);
        let mut z = right.adjoint();
        for (i, phase) in hh.phases().iter().enumerate() {
            z.row_mut(i).iter_mut().for_each(|x| *x *= phase);
        }
        Polar { hh, z }
    }

    fn overlap_of(&self, decoded: &CMatrix) -> C64 {
        self.m_b.iter().zip(decoded.iter()).map(|(b, d)| b.conj() * d).sum()
    }

    /// Builds the decoder with its isometry written out.
    pub fn decoder(&self, actual: &PureState) -> Result<UhlmannDecoder> {
        let (m_a, mov_a) = self.view(actual)?;
        let polar = self.polar(&m_a);
        let v = polar.hh.apply_padded(&polar.z);
        // decoded coefficients (fixed x target-movable) = M_a V^T
        let decoded = &m_a * v.transpose();
        let overlap = self.overlap_of(&decoded);
        let isometry = Isometry::from_trusted(v, mov_a, self.mov_b.clone());
        Ok(UhlmannDecoder { isometry, overlap })
    }

    /// `<target|(I (x) V)|actual>` with `V` applied in factored form, without
    /// forming the `mt x ma` matrix.
    pub fn decoded_overlap(&self, actual: &PureState) -> Result<C64> {
        let (m_a, _) = self.view(actual)?;
        let polar = self.polar(&m_a);
        let decoded = polar.hh.apply_transposed_right(&(&m_a * polar.z.transpose()));
        Ok(self.overlap_of(&decoded))
    }

    /// `|decoded_overlap|^2`.
    pub fn decoded_fidelity(&self, actual: &PureState) -> Result<f64> {
        Ok(self.decoded_overlap(actual)?.norm_sqr().min(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlin::layout::SubsystemLayout;
    use crate::qlin::linalg::{isometry_defect, CVector};
    use crate::qlin::norms::fidelity;
    use crate::qlin::random::{haar_unitary, random_pure_state};
    use crate::rng::seeded;

    #[test]
    fn identical_states_decode_perfectly() {
        let mut rng = seeded(1);
        let layout = SubsystemLayout::new([("F", 2), ("M", 3)]).unwrap();
        let psi = random_pure_state(layout, &mut rng).unwrap();
        let dec = uhlmann_decoder(&psi, &psi, &["F"]).unwrap();
        assert!((dec.fidelity() - 1.0).abs() < 1e-12);
        assert!(isometry_defect(dec.isometry().matrix()) < 1e-12);
    }

    #[test]
    fn purifications_of_maximally_mixed_differ_by_basis_change() {
        let mut rng = seeded(2);
        let phi = PureState::maximally_entangled("F", "M", 2).unwrap();
        let u = haar_unitary(2, &mut rng).unwrap();
        let (rotated, layout) = phi.apply_operator(&["M"], &u, &[("M", 2)]).unwrap();
        let rotated = PureState::new(rotated, layout).unwrap().permuted(&["F", "M"]).unwrap();
        assert!(phi.inner(&rotated).unwrap().norm_sqr() < 1.0 - 1e-3);
        let dec = uhlmann_decoder(&rotated, &phi, &["F"]).unwrap();
        assert!((dec.fidelity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn achieved_fidelity_equals_marginal_fidelity() {
        // fixed marginal |0><0| versus I/2 gives 1/2
        let actual = PureState::new(
            CVector::from_vec(vec![c(1.0, 0.0), ZERO, ZERO, ZERO]),
            SubsystemLayout::new([("F", 2), ("M", 2)]).unwrap(),
        )
        .unwrap();
        let target = PureState::maximally_entangled("F", "N", 2).unwrap();
        let dec = uhlmann_decoder(&actual, &target, &["F"]).unwrap();
        assert!((dec.fidelity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn embeds_into_larger_target_space() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let actual = random_pure_state(SubsystemLayout::new([("F", 3), ("M", 4)]).unwrap(), &mut rng).unwrap();
            let target =
                random_pure_state(SubsystemLayout::new([("X", 2), ("F", 3), ("Y", 5)]).unwrap(), &mut rng).unwrap();
            let dec = uhlmann_decoder(&actual, &target, &["F"]).unwrap();
            let expected =
                fidelity(&actual.reduced(&["F"]).unwrap(), &target.reduced(&["F"]).unwrap()).unwrap();
            assert!((dec.fidelity() - expected).abs() < 1e-10);
            assert!(isometry_defect(dec.isometry().matrix()) < 1e-10);
            assert_eq!(dec.isometry().output().labels(), vec!["X", "Y"]);
        }
    }

    #[test]
    fn factored_overlap_matches_explicit_isometry() {
        let mut rng = seeded(4);
        for _ in 0..10 {
            let actual = random_pure_state(SubsystemLayout::new([("F", 2), ("M", 3)]).unwrap(), &mut rng).unwrap();
            let target =
                random_pure_state(SubsystemLayout::new([("F", 2), ("Y", 7)]).unwrap(), &mut rng).unwrap();
            let prepared = UhlmannTarget::new(&target, &["F"]).unwrap();
            let explicit = prepared.decoder(&actual).unwrap().overlap();
            assert!((prepared.decoded_overlap(&actual).unwrap() - explicit).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_smaller_target() {
        let a = PureState::basis(SubsystemLayout::new([("F", 2), ("M", 4)]).unwrap(), 0).unwrap();
        let b = PureState::basis(SubsystemLayout::new([("F", 2), ("M", 2)]).unwrap(), 0).unwrap();
        assert!(matches!(uhlmann_decoder(&a, &b, &["F"]), Err(Error::DimensionMismatch(_))));
    }
}
