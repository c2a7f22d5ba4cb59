use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::entropy::{coherent_information, marginal_entropy};
use crate::error::{Error, Result};
use crate::qlin::{DensityOperator, KrausChannel, PureState};

/// Corner and inequality tolerance.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    AtLeast,
    AtMost,
}

/// `sum_i c_i R_i >= bound` (or `<=`).
#[derive(Clone, Debug, Serialize)]
pub struct Inequality {
    pub coefficients: BTreeMap<String, f64>,
    pub bound: f64,
    pub sense: Sense,
}

impl Inequality {
    /// Signed violation at `rates`; non-positive when satisfied.
    pub fn violation(&self, parties: &[String], rates: &[f64]) -> f64 {
        let lhs: f64 = parties
            .iter()
            .zip(rates)
            .map(|(p, r)| self.coefficients.get(p).copied().unwrap_or(0.0) * r)
            .sum();
        match self.sense {
            Sense::AtLeast => self.bound - lhs,
            Sense::AtMost => lhs - self.bound,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Corner {
    pub rates: Vec<f64>,
    /// Encoder orderings that reach this point.
    pub orderings: Vec<Vec<String>>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateRegion {
    pub parties: Vec<String>,
    pub inequalities: Vec<Inequality>,
    pub corners: Vec<Corner>,
}

impl RateRegion {
    /// Largest violation of any inequality at any corner.
    pub fn max_corner_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for c in &self.corners {
            for ineq in &self.inequalities {
                worst = worst.max(ineq.violation(&self.parties, &c.rates));
            }
        }
        worst
    }

    pub fn corners_feasible(&self) -> bool {
        self.max_corner_violation() <= REGION_TOL
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Vertices of a two-party region for plotting: the corners sorted by the first
    /// rate, closed by two points along the unbounded rays.
    pub fn polygon(&self) -> Result<Vec<(f64, f64, &'static str)>> {
        if self.parties.len() != 2 {
            return Err(Error::InvalidParameter(format!("polygon needs 2 parties, got {}", self.parties.len())));
        }
        let sense = self.inequalities.first().map(|i| i.sense).unwrap_or(Sense::AtLeast);
        let mut pts: Vec<(f64, f64)> = self.corners.iter().map(|c| (c.rates[0], c.rates[1])).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < REGION_TOL && (a.1 - b.1).abs() < REGION_TOL);
        let (Some(&first), Some(&last)) = (pts.first(), pts.last()) else {
            return Ok(Vec::new());
        };
        let span = pts.iter().flat_map(|p| [p.0.abs(), p.1.abs()]).fold(0.0, f64::max) + 1.0;
        let mut out = Vec::with_capacity(pts.len() + 2);
        match sense {
            Sense::AtLeast => {
                out.push((first.0, first.1 + span, "ray"));
                out.extend(pts.iter().map(|p| (p.0, p.1, "corner")));
                out.push((last.0 + span, last.1, "ray"));
            }
            Sense::AtMost => {
                out.push((first.0 - span, first.1, "ray"));
                out.extend(pts.iter().map(|p| (p.0, p.1, "corner")));
                out.push((last.0, last.1 - span, "ray"));
            }
        }
        Ok(out)
    }

    pub fn write_polygon_csv<W: Write>(&self, out: W) -> Result<()> {
        let pts = self.polygon()?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv output failed: {e}"));
        w.write_record([format!("R_{}", self.parties[0]), format!("R_{}", self.parties[1]), "kind".into()])
            .map_err(io)?;
        for (x, y, kind) in pts {
            w.write_record([x.to_string(), y.to_string(), kind.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

fn subset(parties: &[String], mask: usize) -> Vec<&str> {
    parties.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.as_str()).collect()
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(m - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, m - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

fn push_corner(corners: &mut Vec<Corner>, rates: Vec<f64>, ordering: Vec<String>) {
    if let Some(c) =
        corners.iter_mut().find(|c| c.rates.iter().zip(&rates).all(|(a, b)| (a - b).abs() < REGION_TOL))
    {
        c.orderings.push(ordering);
    } else {
        corners.push(Corner { rates, orderings: vec![ordering], note: None });
    }
}

/// Distributed compression of `rho` to a decoder holding none of `parties`:
/// `sum_{i in T} R_i >= S(T | rest)` for every nonempty subset `T`.
pub fn distributed_compression_region(rho: &DensityOperator, parties: &[&str]) -> Result<RateRegion> {
    if parties.is_empty() {
        return Err(Error::InvalidParameter("need at least one party".into()));
    }
    rho.layout().positions(parties)?;
    let m = parties.len();
    if m > 16 {
        return Err(Error::InvalidParameter(format!("{m} parties is too many subsets")));
    }
    let names: Vec<String> = parties.iter().map(|s| s.to_string()).collect();
    let full = (1usize << m) - 1;
    let mut entropy = vec![0.0; 1 << m];
    for (mask, s) in entropy.iter_mut().enumerate().skip(1) {
        *s = marginal_entropy(rho, &subset(&names, mask))?;
    }
    let inequalities = (1..=full)
        .map(|mask| Inequality {
            coefficients: subset(&names, mask).into_iter().map(|p| (p.to_string(), 1.0)).collect(),
            bound: entropy[full] - entropy[full & !mask],
            sense: Sense::AtLeast,
        })
        .collect();
    let mut corners = Vec::new();
    for order in permutations(m) {
        let mut rates = vec![0.0; m];
        let mut seen = 0usize;
        for &i in &order {
            rates[i] = entropy[seen | 1 << i] - entropy[seen];
            seen |= 1 << i;
        }
        push_corner(&mut corners, rates, order.iter().map(|&i| names[i].clone()).collect());
    }
    Ok(RateRegion { parties: names, inequalities, corners })
}

/// Same region for the reduced state of a pure state.
pub fn distributed_compression_region_pure(psi: &PureState, parties: &[&str]) -> Result<RateRegion> {
    distributed_compression_region(&psi.reduced(parties)?, parties)
}

/// Two-sender multiple-access channel with inputs `A'` of `psi_a` and `B'` of `psi_b`.
///
/// `psi_a` holds labels `A, A'` and `psi_b` holds `B, B'`; the channel maps
/// `A' B'` to its output layout `C`. Negative rates are entanglement the sender
/// has to invest and are kept as they are.
pub fn mac_rates(channel: &KrausChannel, psi_a: &PureState, psi_b: &PureState) -> Result<RateRegion> {
    let split = |psi: &PureState, who: &str| -> Result<(String, String)> {
        let labels = psi.layout().labels();
        if labels.len() != 2 {
            return Err(Error::InvalidParameter(format!("input state of {who} needs 2 labels, got {}", psi.layout())));
        }
        Ok((labels[0].to_string(), labels[1].to_string()))
    };
    let (a, a_in) = split(psi_a, "A")?;
    let (b, b_in) = split(psi_b, "B")?;
    let joint = psi_a.tensor(psi_b)?;
    let in_labels = channel.input().labels();
    if in_labels != [a_in.as_str(), b_in.as_str()] {
        return Err(Error::DimensionMismatch(format!(
            "channel input {} does not match the inputs {a_in}, {b_in}",
            channel.input()
        )));
    }
    if channel.input().dims() != joint.layout().select(&[&a_in, &b_in])?.dims() {
        return Err(Error::DimensionMismatch("channel input dims differ from the input states".into()));
    }
    let rho = joint.density().permuted(&[&a, &b, &a_in, &b_in])?.apply_channel(&[&a_in, &b_in], channel)?;
    let c: Vec<&str> = channel.output().labels();
    let (a, b) = (a.as_str(), b.as_str());
    let (bc, ac): (Vec<&str>, Vec<&str>) =
        (std::iter::once(b).chain(c.iter().copied()).collect(), std::iter::once(a).chain(c.iter().copied()).collect());

    let ia_bc = coherent_information(&rho, &[a], &bc)?;
    let ib_ac = coherent_information(&rho, &[b], &ac)?;
    let iab_c = coherent_information(&rho, &[a, b], &c)?;
    let ia_c = coherent_information(&rho, &[a], &c)?;
    let ib_c = coherent_information(&rho, &[b], &c)?;

    let single = |p: &str, bound: f64| Inequality {
        coefficients: [(p.to_string(), 1.0)].into(),
        bound,
        sense: Sense::AtMost,
    };
    let inequalities = vec![
        single(a, ia_bc),
        single(b, ib_ac),
        Inequality { coefficients: [(a.to_string(), 1.0), (b.to_string(), 1.0)].into(), bound: iab_c, sense: Sense::AtMost },
    ];
    let note = |rates: &[f64]| {
        rates.iter().any(|r| *r < 0.0).then(|| "negative rate: entanglement invested by that sender".to_string())
    };
    let r1 = vec![ia_bc, ib_c];
    let r2 = vec![ia_c, ib_ac];
    let corners = vec![
        Corner { note: note(&r1), rates: r1, orderings: vec![vec![b.to_string(), a.to_string()]] },
        Corner { note: note(&r2), rates: r2, orderings: vec![vec![a.to_string(), b.to_string()]] },
    ];
    Ok(RateRegion { parties: vec![a.to_string(), b.to_string()], inequalities, corners })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::EntropyReport;
    use crate::qlin::random::{random_density, random_pure_state};
    use crate::qlin::{Isometry, SubsystemLayout};
    use crate::rng::seeded;

    #[test]
    fn product_region_is_a_quadrant() {
        let rho = DensityOperator::diagonal("A", &[0.3, 0.7])
            .unwrap()
            .tensor(&DensityOperator::diagonal("B", &[0.5, 0.25, 0.25]).unwrap())
            .unwrap();
        let reg = distributed_compression_region(&rho, &["A", "B"]).unwrap();
        assert_eq!(reg.corners.len(), 1);
        let (sa, sb) = (marginal_entropy(&rho, &["A"]).unwrap(), marginal_entropy(&rho, &["B"]).unwrap());
        assert!((reg.corners[0].rates[0] - sa).abs() < 1e-12);
        assert!((reg.corners[0].rates[1] - sb).abs() < 1e-12);
        assert!(reg.corners_feasible());
    }

    #[test]
    fn pure_bipartite_corners_are_negative() {
        let mut rng = seeded(1);
        let psi = random_pure_state(SubsystemLayout::new([("A", 2), ("B", 3)]).unwrap(), &mut rng).unwrap();
        let reg = distributed_compression_region_pure(&psi, &["A", "B"]).unwrap();
        let s = EntropyReport::of_pure(&psi).unwrap().entropy(&["A"]).unwrap();
        let mut pts: Vec<Vec<f64>> = reg.corners.iter().map(|c| c.rates.clone()).collect();
        pts.sort_by(|x, y| x[0].total_cmp(&y[0]));
        assert!((pts[0][0] + s).abs() < 1e-9 && (pts[0][1] - s).abs() < 1e-9);
        assert!((pts[1][0] - s).abs() < 1e-9 && (pts[1][1] + s).abs() < 1e-9);
        assert!(reg.corners.iter().all(|c| (c.rates.iter().sum::<f64>()).abs() < 1e-9));
    }

    #[test]
    fn ghz_marginal_has_six_corners() {
        let ghz = PureState::ghz(&["A", "B", "C"], 2).unwrap();
        let reg = distributed_compression_region_pure(&ghz, &["A", "B", "C"]).unwrap();
        assert_eq!(reg.inequalities.len(), 7);
        assert_eq!(reg.corners.len(), 6);
        assert!(reg.corners.iter().all(|c| c.rates.iter().sum::<f64>().abs() < 1e-9));
        // with a fourth holder the orderings collapse onto three corners
        let ghz = PureState::ghz(&["A", "B", "C", "R"], 2).unwrap();
        let reg = distributed_compression_region_pure(&ghz, &["A", "B", "C"]).unwrap();
        assert_eq!(reg.corners.len(), 3);
        assert!(reg.corners.iter().all(|c| (c.rates.iter().sum::<f64>() - 1.0).abs() < 1e-9));
        assert!(reg.corners_feasible());
    }

    #[test]
    fn random_regions_are_consistent() {
        let mut rng = seeded(2);
        for _ in 0..10 {
            let rho = random_density(SubsystemLayout::new([("A", 2), ("B", 2), ("C", 2)]).unwrap(), 3, &mut rng)
                .unwrap();
            let reg = distributed_compression_region(&rho, &["A", "B", "C"]).unwrap();
            let total = marginal_entropy(&rho, &["A", "B", "C"]).unwrap();
            assert!(reg.corners.len() <= 6);
            assert!(reg.corners_feasible());
            for c in &reg.corners {
                assert!((c.rates.iter().sum::<f64>() - total).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn polygon_has_rays_at_both_ends() {
        let psi = PureState::maximally_entangled("A", "B", 2).unwrap();
        let reg = distributed_compression_region_pure(&psi, &["A", "B"]).unwrap();
        let pts = reg.polygon().unwrap();
        assert_eq!(pts.len(), 4);
        assert!((pts[1].0 + 1.0).abs() < 1e-9 && (pts[1].1 - 1.0).abs() < 1e-9);
        assert_eq!((pts[0].2, pts[1].2, pts[3].2), ("ray", "corner", "ray"));
        let mut buf = Vec::new();
        reg.write_polygon_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("R_A,R_B,kind\n"));
    }

    fn identity_channel() -> KrausChannel {
        let inp = SubsystemLayout::new([("A'", 2), ("B'", 2)]).unwrap();
        let out = SubsystemLayout::new([("C1", 2), ("C2", 2)]).unwrap();
        KrausChannel::identity(inp, out).unwrap()
    }

    #[test]
    fn identity_mac_on_maximally_entangled_inputs() {
        let pa = PureState::maximally_entangled("A", "A'", 2).unwrap();
        let pb = PureState::maximally_entangled("B", "B'", 2).unwrap();
        let reg = mac_rates(&identity_channel(), &pa, &pb).unwrap();
        for c in &reg.corners {
            assert!((c.rates[0] - 1.0).abs() < 1e-9 && (c.rates[1] - 1.0).abs() < 1e-9);
            assert!((c.rates.iter().sum::<f64>() - reg.inequalities[2].bound).abs() < 1e-12);
        }
        assert!((reg.inequalities[2].bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_mac_has_only_investment_rates() {
        let inp = SubsystemLayout::new([("A'", 2), ("B'", 2)]).unwrap();
        let ch = KrausChannel::replacement(inp, SubsystemLayout::single("C", 2).unwrap()).unwrap();
        let pa = PureState::maximally_entangled("A", "A'", 2).unwrap();
        let pb = PureState::maximally_entangled("B", "B'", 2).unwrap();
        let reg = mac_rates(&ch, &pa, &pb).unwrap();
        assert!((reg.inequalities[0].bound + 1.0).abs() < 1e-9);
        assert!((reg.inequalities[2].bound + 2.0).abs() < 1e-9);
        assert!(reg.corners.iter().all(|c| c.note.is_some()));
    }

    #[test]
    fn random_mac_corners_obey_chain_rule_and_conditioning() {
        let mut rng = seeded(3);
        for _ in 0..10 {
            let pa = random_pure_state(SubsystemLayout::new([("A", 2), ("A'", 2)]).unwrap(), &mut rng).unwrap();
            let pb = random_pure_state(SubsystemLayout::new([("B", 2), ("B'", 2)]).unwrap(), &mut rng).unwrap();
            let inp = SubsystemLayout::new([("A'", 2), ("B'", 2)]).unwrap();
            let v = crate::qlin::random::haar_isometry(8, 4, &mut rng).unwrap();
            let iso =
                Isometry::new(v, inp.clone(), SubsystemLayout::new([("C", 4), ("E", 2)]).unwrap()).unwrap();
            // Kraus operators from the isometry: K_e = (I_C (x) <e|) V
            let ops = (0..2)
                .map(|e| crate::qlin::linalg::CMatrix::from_fn(4, 4, |o, i| iso.matrix()[(o * 2 + e, i)]))
                .collect();
            let ch = KrausChannel::new(ops, inp, SubsystemLayout::single("C", 4).unwrap()).unwrap();
            let reg = mac_rates(&ch, &pa, &pb).unwrap();
            let sum = reg.inequalities[2].bound;
            for c in &reg.corners {
                assert!((c.rates.iter().sum::<f64>() - sum).abs() < 1e-9);
            }
            assert!(reg.inequalities[0].bound >= reg.corners[1].rates[0] - 1e-9);
            assert!(reg.corners_feasible());
        }
    }
}
