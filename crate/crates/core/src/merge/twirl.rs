//! `<(U (x) U)^H F_{A1 A1} (U (x) U)>` over Haar `U`, where `F_{A1 A1}` is the flip
//! restricted to the first `L` basis vectors of each copy.

use crate::error::{Error, Result};
use crate::qlin::flip_operator;
use crate::qlin::linalg::{c, kron, CMatrix};
use crate::qlin::random::haar_unitary;
use crate::rng::LabRng;

fn check(d: usize, l: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("twirl needs d_A >= 2, got {d}")));
    }
    if l == 0 || l > d {
        return Err(Error::InvalidParameter(format!("need 1 <= L <= d_A, got L={l}, d_A={d}")));
    }
    Ok(())
}

/// `(L/d)(d-L)/(d^2-1) I + (L/d)(Ld-1)/(d^2-1) F`.
pub fn twirl_analytic(d: usize, l: usize) -> Result<CMatrix> {
    check(d, l)?;
    let (df, lf) = (d as f64, l as f64);
    let denom = df * df - 1.0;
    let a = lf / df * (df - lf) / denom;
    let b = lf / df * (lf * df - 1.0) / denom;
    Ok(CMatrix::identity(d * d, d * d) * c(a, 0.0) + flip_operator(d) * c(b, 0.0))
}

/// Flip between the first `L` coordinates of two copies of `C^d`.
pub fn restricted_flip(d: usize, l: usize) -> CMatrix {
    let mut f = CMatrix::zeros(d * d, d * d);
    for i in 0..l {
        for j in 0..l {
            f[(j * d + i, i * d + j)] = c(1.0, 0.0);
        }
    }
    f
}

pub fn twirl_monte_carlo(d: usize, l: usize, samples: usize, rng: &mut LabRng) -> Result<CMatrix> {
    check(d, l)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("twirl needs at least one sample".into()));
    }
    let f = restricted_flip(d, l);
    let mut acc = CMatrix::zeros(d * d, d * d);
    for _ in 0..samples {
        let u = haar_unitary(d, rng)?;
        let uu = kron(&u, &u);
        acc += uu.adjoint() * &f * uu;
    }
    Ok(acc / c(samples as f64, 0.0))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_entry_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
