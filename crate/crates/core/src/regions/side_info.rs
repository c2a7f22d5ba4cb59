use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::entropy::pure_marginal_entropy;
use crate::error::{Error, Result};
use crate::merge::{canonical_abr, ALICE, BOB};
use crate::qlin::linalg::{c, CMatrix, ONE};
use crate::qlin::random::haar_isometry;
use crate::qlin::{Isometry, KrausChannel, PureState, SubsystemLayout};
use crate::rng::LabRng;

/// Environment label of the channel dilation.
pub const ENV: &str = "B'";

#[derive(Clone, Debug, Serialize)]
pub struct SideInfoRates {
    /// `S(A|U)`.
    pub r_a: f64,
    /// `S(U) + S(W|AU)`.
    pub r_b: f64,
    pub s_u: f64,
    pub s_au: f64,
    pub s_auw: f64,
}

impl SideInfoRates {
    pub fn sum(&self) -> f64 {
        self.r_a + self.r_b
    }
}

/// Rates when Bob applies `t: B -> U V`, sends `U`, dilates `lambda: V -> W` with
/// environment `B'` and merges `W` after Alice.
pub fn side_info_rates(psi: &PureState, t: &Isometry, lambda: &KrausChannel) -> Result<SideInfoRates> {
    let psi = canonical_abr(psi)?;
    if t.input().labels() != [BOB] {
        return Err(Error::DimensionMismatch(format!("T must act on {BOB}, got input {}", t.input())));
    }
    let out = t.output().labels();
    if out.len() != 2 {
        return Err(Error::DimensionMismatch(format!("T must map to two labels U V, got {}", t.output())));
    }
    let (u, v) = (out[0], out[1]);
    if lambda.input().parts() != t.output().select(&[v])?.parts() {
        return Err(Error::DimensionMismatch(format!("channel input {} differs from V = {v}", lambda.input())));
    }
    let state = psi.apply_isometry(t)?.apply_isometry(&lambda.stinespring(ENV)?)?;
    let w: Vec<&str> = lambda.output().labels();
    let mut auw = vec![ALICE, u];
    auw.extend(&w);
    let s_u = pure_marginal_entropy(&state, &[u])?;
    let s_au = pure_marginal_entropy(&state, &[ALICE, u])?;
    let s_auw = pure_marginal_entropy(&state, &auw)?;
    Ok(SideInfoRates { r_a: s_au - s_u, r_b: s_u + s_auw - s_au, s_u, s_au, s_auw })
}

/// `T` = identity onto `U = B`, `V` trivial.
pub fn identity_candidate(d_b: usize) -> Result<(Isometry, KrausChannel)> {
    let t = Isometry::new(
        CMatrix::identity(d_b, d_b),
        SubsystemLayout::single(BOB, d_b)?,
        SubsystemLayout::new([("U", d_b), ("V", 1)])?,
    )?;
    let lambda = KrausChannel::identity(SubsystemLayout::single("V", 1)?, SubsystemLayout::single("W", 1)?)?;
    Ok((t, lambda))
}

/// `U` trivial and `V = B` discarded.
pub fn trivial_candidate(d_b: usize) -> Result<(Isometry, KrausChannel)> {
    let t = Isometry::new(
        CMatrix::identity(d_b, d_b),
        SubsystemLayout::single(BOB, d_b)?,
        SubsystemLayout::new([("U", 1), ("V", d_b)])?,
    )?;
    let lambda = KrausChannel::replacement(SubsystemLayout::single("V", d_b)?, SubsystemLayout::single("W", 1)?)?;
    Ok((t, lambda))
}

/// Candidate from one isometry `B -> U W E`: `T` keeps `W E` together as `V` and
/// `Lambda` traces out `E`.
fn candidate(x: &CMatrix, d_b: usize, d_u: usize, d_w: usize, d_e: usize) -> Result<(Isometry, KrausChannel)> {
    let t = Isometry::new(
        x.clone(),
        SubsystemLayout::single(BOB, d_b)?,
        SubsystemLayout::new([("U", d_u), ("V", d_w * d_e)])?,
    )?;
    let ops = (0..d_e)
        .map(|e| {
            let mut k = CMatrix::zeros(d_w, d_w * d_e);
            for o in 0..d_w {
                k[(o, o * d_e + e)] = ONE;
            }
            k
        })
        .collect();
    let lambda =
        KrausChannel::new(ops, SubsystemLayout::single("V", d_w * d_e)?, SubsystemLayout::single("W", d_w)?)?;
    Ok((t, lambda))
}

fn better(a: &SideInfoRates, b: &SideInfoRates) -> bool {
    let (sa, sb) = (a.sum(), b.sum());
    sa < sb - 1e-12 || ((sa - sb).abs() <= 1e-12 && a.r_a < b.r_a - 1e-12)
}

/// Rotation by a random angle and phase between two rows.
fn givens_move(x: &mut CMatrix, step: f64, rng: &mut LabRng) {
    let rows = x.nrows();
    let i = rng.random_range(0..rows);
    let mut j = rng.random_range(0..rows - 1);
    if j >= i {
        j += 1;
    }
    let theta: f64 = step * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (cs, sn) = (theta.cos(), theta.sin());
    let ph = c(phi.cos(), phi.sin());
    for col in 0..x.ncols() {
        let (a, b) = (x[(i, col)], x[(j, col)]);
        x[(i, col)] = a * cs - ph * b * sn;
        x[(j, col)] = ph.conj() * a * sn + b * cs;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SideInfoSearch {
    /// Lowest `R_A + R_B` found (ties: lower `R_A`).
    pub best: SideInfoRates,
    pub identity_baseline: SideInfoRates,
    pub trivial_baseline: SideInfoRates,
    pub evaluations: usize,
    /// Always true: a found point is only an upper bound on the optimum.
    pub heuristic: bool,
}

/// Steps of local search per restart.
pub const SEARCH_STEPS: usize = 300;

/// Random-restart local search over `B -> U W E` isometries with `dim U = d_u`,
/// minimizing the total rate `S(AUW)`.
pub fn side_info_search(psi: &PureState, d_u: usize, restarts: usize, rng: &mut LabRng) -> Result<SideInfoSearch> {
    if d_u == 0 {
        return Err(Error::InvalidParameter("dim U must be at least 1".into()));
    }
    let psi = canonical_abr(psi)?;
    let d_b = psi.layout().dim_of(BOB)?;
    let (t, l) = trivial_candidate(d_b)?;
    let trivial_baseline = side_info_rates(&psi, &t, &l)?;
    let (t, l) = identity_candidate(d_b)?;
    let identity_baseline = side_info_rates(&psi, &t, &l)?;
    let mut best =
        if better(&identity_baseline, &trivial_baseline) { identity_baseline.clone() } else { trivial_baseline.clone() };
    let mut evaluations = 2;
    if d_b > 1 {
        let (d_w, d_e) = (d_b, d_b * d_u);
        let rows = d_u * d_w * d_e;
        for _ in 0..restarts {
            let mut x = haar_isometry(rows, d_b, rng)?;
            let (t, l) = candidate(&x, d_b, d_u, d_w, d_e)?;
            let mut current = side_info_rates(&psi, &t, &l)?;
            evaluations += 1;
            let mut step = 0.5;
            for _ in 0..SEARCH_STEPS {
                let mut y = x.clone();
                givens_move(&mut y, step, rng);
                let (t, l) = candidate(&y, d_b, d_u, d_w, d_e)?;
                let r = side_info_rates(&psi, &t, &l)?;
                evaluations += 1;
                if better(&r, &current) {
                    x = y;
                    current = r;
                } else {
                    step = (step * 0.98).max(1e-3);
                }
            }
            if better(&current, &best) {
                best = current;
            }
        }
    }
    Ok(SideInfoSearch { best, identity_baseline, trivial_baseline, evaluations, heuristic: true })
}
