//! Entropy-typical sequences of i.i.d. spectra and the truncated states built from them.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::entropy_of_spectrum;
use crate::error::{Error, Result};
use crate::qlin::layout::digits;
use crate::qlin::linalg::{hermitian_eigen, CMatrix, CVector, ZERO};
use crate::qlin::norms::pure_trace_distance;
use crate::qlin::{PureState, SubsystemLayout};

/// Largest `n log2 d` handled by explicit enumeration.
pub const ENUMERATION_BITS: f64 = 24.0;
/// Largest `n log2 d` handled at all (type-class counts must fit in `u128`).
pub const PREDICATE_BITS: f64 = 120.0;
/// Slack on the typicality window, so sequences exactly on the boundary count.
pub const WINDOW_TOL: f64 = 1e-9;
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Enumeration,
    Predicate,
}

/// Projector onto `{ i^n : | -log2 p(i^n) - n S | <= n delta }` in the product eigenbasis.
#[derive(Clone, Debug, Serialize)]
pub struct TypicalProjector {
    spectrum: Vec<f64>,
    n: usize,
    delta: f64,
    entropy: f64,
    mode: Mode,
    rank: u128,
    weight: f64,
    /// Smallest and largest `-log2 p(i^n)` over members; `None` for an empty set.
    surprisal_range: Option<(f64, f64)>,
}

fn check_spectrum(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) {
        return Err(Error::InvalidParameter(format!("not a probability vector: {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

fn log_probs(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&x| if x > 0.0 { -x.log2() } else { f64::INFINITY }).collect()
}

fn within_window(surprisal: f64, n: usize, entropy: f64, delta: f64) -> bool {
    surprisal.is_finite() && (surprisal - n as f64 * entropy).abs() <= n as f64 * delta + WINDOW_TOL
}

/// Number of sequences with the given symbol counts.
fn multinomial(counts: &[usize]) -> u128 {
    let mut total: u128 = 1;
    let mut seen = 0u128;
    for &k in counts {
        // running product of binomial(seen + k, k), exact at each step
        let mut b: u128 = 1;
        for i in 1..=k as u128 {
            b = b * (seen + i) / i;
        }
        total *= b;
        seen += k as u128;
    }
    total
}

/// All compositions of `n` into `d` nonnegative parts, in lexicographic order.
fn compositions(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=rem).rev() {
            cur.push(k);
            rec(rem - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

impl TypicalProjector {
    pub fn new(p: &[f64], n: usize, delta: f64) -> Result<Self> {
        check_spectrum(p)?;
        if n == 0 || delta <= 0.0 || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("need n >= 1 and delta > 0, got n={n}, delta={delta}")));
        }
        let bits = n as f64 * (p.len() as f64).log2();
        if bits > PREDICATE_BITS {
            return Err(Error::EnumerationTooLarge(format!("n log2 d = {bits:.1} exceeds {PREDICATE_BITS}")));
        }
        let mode = if bits <= ENUMERATION_BITS { Mode::Enumeration } else { Mode::Predicate };
        let entropy = entropy_of_spectrum(p);
        let mut tp = Self {
            spectrum: p.to_vec(),
            n,
            delta,
            entropy,
            mode,
            rank: 0,
            weight: 0.0,
            surprisal_range: None,
        };
        match mode {
            Mode::Enumeration => tp.fill_by_enumeration(),
            Mode::Predicate => tp.fill_by_types(),
        }
        Ok(tp)
    }

    fn fill_by_enumeration(&mut self) {
        let d = self.spectrum.len();
        let n = self.n;
        let lp = log_probs(&self.spectrum);
        let total = d.pow(n as u32);
        // split on the first few symbols so chunks reduce in a fixed order
        let prefix = n.min(4);
        let chunk = d.pow((n - prefix) as u32);
        let parts: Vec<(u128, f64, f64, f64)> = (0..d.pow(prefix as u32))
            .into_par_iter()
            .map(|c| {
                let (mut rank, mut weight) = (0u128, 0.0f64);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                let mut dig = digits(c * chunk, &vec![d; n]);
                for idx in c * chunk..(c + 1) * chunk {
                    if idx > c * chunk {
                        // odometer increment on the last axis
                        let mut k = n - 1;
                        loop {
                            dig[k] += 1;
                            if dig[k] < d {
                                break;
                            }
                            dig[k] = 0;
                            k -= 1;
                        }
                    }
                    let s: f64 = dig.iter().map(|&i| lp[i]).sum();
                    if within_window(s, n, self.entropy, self.delta) {
                        rank += 1;
                        weight += (-s).exp2();
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                }
                (rank, weight, lo, hi)
            })
            .collect();
        debug_assert_eq!(parts.len() * chunk, total);
        self.absorb(parts);
    }

    fn fill_by_types(&mut self) {
        let lp = log_probs(&self.spectrum);
        let parts: Vec<(u128, f64, f64, f64)> = compositions(self.n, self.spectrum.len())
            .into_iter()
            .filter_map(|counts| {
                let s: f64 = counts.iter().zip(&lp).filter(|(k, _)| **k > 0).map(|(&k, &l)| k as f64 * l).sum();
                if !within_window(s, self.n, self.entropy, self.delta) {
                    return None;
                }
                let m = multinomial(&counts);
                Some((m, ((m as f64).log2() - s).exp2(), s, s))
            })
            .collect();
        self.absorb(parts);
    }

    fn absorb(&mut self, parts: Vec<(u128, f64, f64, f64)>) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (r, w, l, h) in parts {
            self.rank += r;
            self.weight += w;
            lo = lo.min(l);
            hi = hi.max(h);
        }
        self.surprisal_range = (self.rank > 0).then_some((lo, hi));
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `S` of the single-copy spectrum, in bits.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rank(&self) -> u128 {
        self.rank
    }

    /// `Tr(rho^{(x) n} Pi)`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn contains(&self, sequence: &[usize]) -> bool {
        if sequence.len() != self.n || sequence.iter().any(|&i| i >= self.spectrum.len()) {
            return false;
        }
        let s: f64 = sequence.iter().map(|&i| if self.spectrum[i] > 0.0 { -self.spectrum[i].log2() } else { f64::INFINITY }).sum();
        within_window(s, self.n, self.entropy, self.delta)
    }

    /// Flattened indices (first copy most significant) of all members.
    pub fn members(&self) -> Result<Vec<usize>> {
        if self.mode != Mode::Enumeration {
            return Err(Error::EnumerationTooLarge(format!("n = {} is beyond enumeration mode", self.n)));
        }
        let d = self.spectrum.len();
        let dims = vec![d; self.n];
        Ok((0..d.pow(self.n as u32)).filter(|&i| self.contains(&digits(i, &dims))).collect())
    }

    /// Checks the six standard properties of the typical projector.
    ///
    /// The weight bound is certified as a trend: the weight at `n` is at least the
    /// weight at `ceil(n/2)`, strictly unless already saturated.
    pub fn certify(&self) -> Result<Certificate> {
        if self.mode != Mode::Enumeration {
            return Err(Error::EnumerationTooLarge(format!("certification needs enumeration mode (n = {})", self.n)));
        }
        let n = self.n as f64;
        let (s, delta) = (self.entropy, self.delta);
        let half = TypicalProjector::new(&self.spectrum, self.n.div_ceil(2), delta)?;
        let c1 = self.weight > half.weight || half.weight >= 1.0 - 1e-12 && self.weight >= 1.0 - 1e-12;
        // both sides are diagonal: members keep p(i^n), everything else drops to 0 <= p(i^n)
        let c2 = self.spectrum.iter().all(|&x| x >= 0.0);
        let (c3, c4) = match self.surprisal_range {
            None => (true, true),
            Some((lo, hi)) => (lo >= n * (s - delta) - WINDOW_TOL, hi <= n * (s + delta) + WINDOW_TOL),
        };
        let rank = self.rank as f64;
        let c5 = rank.log2() <= n * (s + delta) + WINDOW_TOL || self.rank == 0;
        let c6 = rank >= self.weight * (n * (s - delta)).exp2() * (1.0 - 1e-12);
        Ok(Certificate {
            c1_weight_trend: c1,
            c2_dominated: c2,
            c3_upper_window: c3,
            c4_lower_window: c4,
            c5_rank_upper: c5,
            c6_rank_lower: c6,
            weight: self.weight,
            weight_half_n: half.weight,
            rank: self.rank,
            rank_upper: (n * (s + delta)).exp2(),
            rank_lower: self.weight * (n * (s - delta)).exp2(),
        })
    }
}

/// Outcome of [`TypicalProjector::certify`].
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub c1_weight_trend: bool,
    pub c2_dominated: bool,
    pub c3_upper_window: bool,
    pub c4_lower_window: bool,
    pub c5_rank_upper: bool,
    pub c6_rank_lower: bool,
    pub weight: f64,
    pub weight_half_n: f64,
    pub rank: u128,
    pub rank_upper: f64,
    pub rank_lower: f64,
}

impl Certificate {
    pub fn all(&self) -> bool {
        self.c1_weight_trend
            && self.c2_dominated
            && self.c3_upper_window
            && self.c4_lower_window
            && self.c5_rank_upper
            && self.c6_rank_lower
    }
}

pub fn typical_projector(p: &[f64], n: usize, delta: f64) -> Result<TypicalProjector> {
    TypicalProjector::new(p, n, delta)
}

/// `psi^{(x) n}` cut down to the typical subspaces of every single-party marginal.
#[derive(Clone, Debug)]
pub struct TruncatedState {
    omega: CVector,
    psi: PureState,
    compressed: PureState,
    overlap: f64,
    n: usize,
    delta: f64,
    projectors: Vec<(String, TypicalProjector)>,
    distance_omega: f64,
    distance_psi: f64,
}

impl TruncatedState {
    /// Subnormalized `Omega` in the original basis, grouped per party.
    pub fn omega(&self) -> &CVector {
        &self.omega
    }

    /// Normalized `Omega`.
    pub fn psi(&self) -> &PureState {
        &self.psi
    }

    /// `Psi` restricted to the typical coordinates, one factor per party of
    /// dimension equal to the projector rank.
    pub fn compressed(&self) -> &PureState {
        &self.compressed
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn projectors(&self) -> &[(String, TypicalProjector)] {
        &self.projectors
    }

    /// `1 - overlap - sum of marginal tail weights`, nonnegative by the union bound.
    pub fn union_bound_margin(&self) -> f64 {
        let tails: f64 = self.projectors.iter().map(|(_, p)| 1.0 - p.weight()).sum();
        self.overlap - (1.0 - tails)
    }

    /// `|| psi^n - Omega ||_1 <= 2 sqrt(eps)` and `|| psi^n - Psi ||_1 <= 4 sqrt(eps)`.
    ///
    /// Distances between nearly equal pure states carry square-root rounding error,
    /// hence the 1e-7 slack.
    pub fn gentle_chain(&self) -> (f64, f64, bool) {
        let eps = (1.0 - self.overlap).max(0.0);
        let ok = self.distance_omega <= 2.0 * eps.sqrt() + 1e-7 && self.distance_psi <= 4.0 * eps.sqrt() + 1e-7;
        (self.distance_omega, self.distance_psi, ok)
    }
}

/// Projects `psi^{(x) n}` onto the tensor product of the typical subspaces of each
/// party's single-copy marginal.
pub fn truncate(psi: &PureState, n: usize, delta: f64, cap: usize) -> Result<TruncatedState> {
    let layout = psi.layout().clone();
    let total = u32::try_from(n).ok().and_then(|k| layout.total_dim().checked_pow(k)).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::CapExceeded { requested: total, cap });
    }
    let labels: Vec<String> = layout.labels().iter().map(|s| s.to_string()).collect();

    // rotate every factor into the eigenbasis of its marginal, largest eigenvalue first
    let mut rotated = psi.clone();
    let mut bases = Vec::with_capacity(labels.len());
    let mut projectors = Vec::with_capacity(labels.len());
    for l in &labels {
        let (vals, vecs) = hermitian_eigen(psi.reduced(&[l])?.matrix());
        let order: Vec<usize> = (0..vals.len()).rev().collect();
        let basis = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, k| vecs[(r, order[k])]);
        let mut p: Vec<f64> = order.iter().map(|&k| vals[k].max(0.0)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let d = p.len();
        let (amps, lay) = rotated.apply_operator(&[l.as_str()], &basis.adjoint(), &[(l.as_str(), d)])?;
        rotated = PureState::normalized(amps, lay)?.permuted(&labels)?;
        projectors.push((l.clone(), TypicalProjector::new(&p, n, delta)?));
        bases.push(basis);
    }

    // mask the n-fold product (copy-major layout X_1, Y_1, ..., X_n, Y_n)
    let power = rotated.tensor_power(n)?;
    let dims = power.layout().dims();
    let m = labels.len();
    let mut masked = power.amplitudes().clone();
    let mut seq = vec![0usize; n];
    for (idx, z) in masked.iter_mut().enumerate() {
        let dig = digits(idx, &dims);
        let keep = projectors.iter().enumerate().all(|(party, (_, tp))| {
            for (copy, s) in seq.iter_mut().enumerate() {
                *s = dig[copy * m + party];
            }
            tp.contains(&seq)
        });
        if !keep {
            *z = ZERO;
        }
    }
    let overlap = masked.norm_squared();
    if overlap < 0.5 {
        return Err(Error::TypicalityFailed(overlap));
    }
    let groups: Vec<(&str, Vec<String>)> =
        labels.iter().map(|l| (l.as_str(), (1..=n).map(|k| format!("{l}_{k}")).collect())).collect();

    // compressed: keep typical coordinates only, in the eigenbasis
    let masked_eigen = PureState::new_unchecked_norm(masked.clone(), power.layout().clone()).regroup(&groups)?;
    let mut index_lists = Vec::with_capacity(m);
    for (_, tp) in &projectors {
        index_lists.push(tp.members_any_mode()?);
    }
    let grouped_dims = masked_eigen.layout().dims();
    let comp_parts: Vec<(String, usize)> =
        labels.iter().zip(&index_lists).map(|(l, idx)| (l.clone(), idx.len())).collect();
    let comp_layout = SubsystemLayout::new(comp_parts)?;
    let mut comp = CVector::from_element(comp_layout.total_dim(), ZERO);
    let comp_dims = comp_layout.dims();
    for (ci, z) in comp.iter_mut().enumerate() {
        let cd = digits(ci, &comp_dims);
        let mut flat = 0usize;
        for (party, &c) in cd.iter().enumerate() {
            flat = flat * grouped_dims[party] + index_lists[party][c];
        }
        *z = masked_eigen.amplitudes()[flat];
    }
    let compressed = PureState::normalized(comp, comp_layout)?;

    // back to the original basis, then group per party
    let mut omega_state = PureState::new_unchecked_norm(masked, power.layout().clone());
    for copy in 1..=n {
        for (l, basis) in labels.iter().zip(&bases) {
            let name = format!("{l}_{copy}");
            let order: Vec<String> = omega_state.layout().labels().iter().map(|s| s.to_string()).collect();
            let (amps, lay) = omega_state.apply_operator(&[name.as_str()], basis, &[(name.as_str(), basis.nrows())])?;
            omega_state = PureState::new_unchecked_norm(amps, lay).permuted(&order)?;
        }
    }
    let omega_grouped = omega_state.regroup(&groups)?;
    let original = psi.tensor_power(n)?.regroup(&groups)?;
    let omega = omega_grouped.amplitudes().clone();
    let psi_norm = PureState::normalized(omega.clone(), omega_grouped.layout().clone())?;
    let distance_omega = pure_trace_distance(original.amplitudes(), &omega);
    let distance_psi = pure_trace_distance(original.amplitudes(), psi_norm.amplitudes());
    Ok(TruncatedState {
        omega,
        psi: psi_norm,
        compressed,
        overlap,
        n,
        delta,
        projectors,
        distance_omega,
        distance_psi,
    })
}

impl TypicalProjector {
    /// Member indices, enumerating through the predicate when needed (caller bounds the size).
    fn members_any_mode(&self) -> Result<Vec<usize>> {
        let d = self.spectrum.len();
        let total = u32::try_from(self.n).ok().and_then(|k| d.checked_pow(k)).ok_or_else(|| {
            Error::EnumerationTooLarge(format!("d^n overflows for d = {d}, n = {}", self.n))
        })?;
        let dims = vec![d; self.n];
        Ok((0..total).filter(|&i| self.contains(&digits(i, &dims))).collect())
    }
}

/// Effective dimensions of a truncated state for the one-shot merging bound.
#[derive(Clone, Debug, Serialize)]
pub struct MergeParameters {
    pub d_a_eff: usize,
    pub d_r_eff: usize,
    /// `1 / Tr Psi_B^2`.
    pub d_eff: f64,
    pub d_a_lower: f64,
    pub d_r_upper: f64,
    pub d_lower: f64,
    pub bracketed: bool,
}

/// Dimensions of the truncated `A`, `R` spaces and the collision dimension of
/// `B`, next to their lower/upper bounds with `eps = 1 - overlap`.
pub fn merge_parameters(ts: &TruncatedState, a: &str, b: &str, r: &str) -> Result<MergeParameters> {
    let find = |l: &str| {
        ts.projectors.iter().find(|(x, _)| x == l).map(|(_, p)| p).ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    let (pa, pb, pr) = (find(a)?, find(b)?, find(r)?);
    let n = ts.n as f64;
    let eps = (1.0 - ts.overlap).max(0.0);
    let d_a_eff = ts.compressed.layout().dim_of(a)?;
    let d_r_eff = ts.compressed.layout().dim_of(r)?;
    let d_eff = 1.0 / ts.compressed.reduced(&[b])?.purity();
    let d_a_lower = (1.0 - eps) * (n * (pa.entropy - ts.delta)).exp2();
    let d_r_upper = (n * (pr.entropy + ts.delta)).exp2();
    let d_lower = (1.0 - eps).powi(2) * (n * (pb.entropy - ts.delta)).exp2();
    let bracketed = d_a_eff as f64 >= d_a_lower * (1.0 - 1e-12)
        && d_r_eff as f64 <= d_r_upper * (1.0 + 1e-12)
        && d_eff >= d_lower * (1.0 - 1e-9);
    Ok(MergeParameters { d_a_eff, d_r_eff, d_eff, d_a_lower, d_r_upper, d_lower, bracketed })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub delta: f64,
    pub rank: u128,
    pub weight: f64,
}

pub fn sweep(p: &[f64], ns: &[usize], deltas: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(ns.len() * deltas.len());
    for &n in ns {
        for &delta in deltas {
            let tp = TypicalProjector::new(p, n, delta)?;
            rows.push(SweepRow { n, delta, rank: tp.rank(), weight: tp.weight() });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "delta", "rank", "weight"])?;
    for r in rows {
        w.write_record([r.n.to_string(), r.delta.to_string(), r.rank.to_string(), r.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::{trivial_reference, ALICE, BOB, REFERENCE};
    use crate::qlin::random::random_pure_state;
    use crate::rng::seeded;

    /// Independent oracle: count sequences of k zeros (probability 0.2 each).
    fn binary_oracle(p0: f64, n: usize, delta: f64) -> (u128, f64) {
        let s = -p0 * p0.log2() - (1.0 - p0) * (1.0 - p0).log2();
        let (mut rank, mut weight) = (0u128, 0.0);
        for k in 0..=n {
            let surprisal = -(k as f64) * p0.log2() - ((n - k) as f64) * (1.0 - p0).log2();
            if (surprisal - n as f64 * s).abs() <= n as f64 * delta + 1e-9 {
                let mut c = 1u128;
                for i in 0..k as u128 {
                    c = c * (n as u128 - i) / (i + 1);
                }
                rank += c;
                weight += c as f64 * p0.powi(k as i32) * (1.0 - p0).powi((n - k) as i32);
            }
        }
        (rank, weight)
    }

    #[test]
    fn uniform_spectrum_keeps_everything() {
        let tp = typical_projector(&[0.5, 0.5], 10, 0.1).unwrap();
        assert_eq!(tp.rank(), 1024);
        assert!((tp.weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_spectrum_keeps_one_sequence() {
        let tp = typical_projector(&[1.0, 0.0], 8, 0.1).unwrap();
        assert_eq!(tp.rank(), 1);
        assert_eq!(tp.members().unwrap(), vec![0]);
    }

    #[test]
    fn enumeration_matches_binomial_oracle() {
        for (n, delta) in [(10, 0.1), (20, 0.1), (15, 0.05), (12, 0.3)] {
            let tp = typical_projector(&[0.2, 0.8], n, delta).unwrap();
            let (rank, weight) = binary_oracle(0.2, n, delta);
            assert_eq!(tp.rank(), rank, "n={n}");
            assert!((tp.weight() - weight).abs() < 1e-12, "n={n}");
        }
        let tp = typical_projector(&[0.2, 0.8], 20, 0.1).unwrap();
        assert_eq!(tp.rank(), 21489);
        assert!((tp.weight() - 0.598).abs() < 1e-3);
    }

    #[test]
    fn type_classes_agree_with_enumeration() {
        let p = [0.1, 0.3, 0.6];
        let tp = typical_projector(&p, 9, 0.2).unwrap();
        let mut by_types = tp.clone();
        by_types.rank = 0;
        by_types.weight = 0.0;
        by_types.fill_by_types();
        assert_eq!(tp.rank(), by_types.rank());
        assert!((tp.weight() - by_types.weight()).abs() < 1e-12);
        assert_eq!(tp.surprisal_range.is_some(), by_types.surprisal_range.is_some());
    }

    #[test]
    fn large_n_uses_predicate_mode() {
        let tp = typical_projector(&[0.2, 0.8], 60, 0.1).unwrap();
        assert_eq!(tp.mode(), Mode::Predicate);
        let (rank, weight) = binary_oracle(0.2, 60, 0.1);
        assert_eq!(tp.rank(), rank);
        assert!((tp.weight() - weight).abs() < 1e-12);
        assert!(tp.certify().is_err());
        assert!(typical_projector(&[0.5, 0.5], 200, 0.1).is_err());
    }

    #[test]
    fn certificate_for_skewed_bit() {
        let cert = typical_projector(&[0.2, 0.8], 20, 0.1).unwrap().certify().unwrap();
        assert!(cert.all(), "{cert:?}");
        assert!(cert.weight > cert.weight_half_n);
        assert!((cert.weight_half_n - 0.302).abs() < 1e-3);
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 1]), 3);
        assert_eq!(multinomial(&[30, 30]), 118264581564861424);
        assert_eq!(multinomial(&[60, 60]), 96614908840363322603893139521372656);
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
    }

    #[test]
    fn uniform_marginals_are_untouched() {
        let psi = PureState::ghz(&[ALICE, BOB, REFERENCE], 2).unwrap();
        let ts = truncate(&psi, 3, 0.1, 1 << 16).unwrap();
        assert!((ts.overlap() - 1.0).abs() < 1e-12);
        let (d1, d2, ok) = ts.gentle_chain();
        assert!(d1 < 1e-7 && d2 < 1e-7 && ok, "{d1} {d2}");
        let mp = merge_parameters(&ts, ALICE, BOB, REFERENCE).unwrap();
        assert_eq!(mp.d_a_eff, 8);
        assert!(mp.bracketed);
    }

    #[test]
    fn epr_with_trivial_reference() {
        let psi = PureState::maximally_entangled(ALICE, BOB, 2).unwrap().tensor(&trivial_reference()).unwrap();
        let ts = truncate(&psi, 4, 0.1, 1 << 16).unwrap();
        let mp = merge_parameters(&ts, ALICE, BOB, REFERENCE).unwrap();
        assert!((mp.d_eff - 16.0).abs() < 1e-9);
        assert_eq!(mp.d_r_eff, 1);
    }

    #[test]
    fn random_state_truncation_obeys_union_bound_and_gentle_chain() {
        let mut rng = seeded(12);
        let layout = SubsystemLayout::new([(ALICE, 2), (BOB, 2), (REFERENCE, 2)]).unwrap();
        let mut done = 0;
        for _ in 0..20 {
            let psi = random_pure_state(layout.clone(), &mut rng).unwrap();
            match truncate(&psi, 4, 0.25, 1 << 16) {
                Ok(ts) => {
                    assert!(ts.union_bound_margin() >= -1e-12);
                    assert!(ts.gentle_chain().2);
                    assert!(merge_parameters(&ts, ALICE, BOB, REFERENCE).unwrap().bracketed);
                    let mut norm = ts.compressed().amplitudes().norm_squared();
                    norm -= 1.0;
                    assert!(norm.abs() < 1e-12);
                    done += 1;
                }
                Err(Error::TypicalityFailed(o)) => assert!(o < 0.5),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(done > 0);
    }

    #[test]
    fn sweep_csv_has_header() {
        let rows = sweep(&[0.5, 0.5], &[10], &[0.1]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,delta,rank,weight\n10,0.1,1024,1\n");
    }
}
