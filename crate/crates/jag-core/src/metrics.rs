//! Overlap-aware cover comparison: best-match F1, overlapping NMI, and the
//! omega index.
//!
//! Variant choices, since the literature is not unanimous:
//! - F1 is the symmetric best-match average used throughout the affiliation
//!   graph model line of work.
//! - NMI is the LFK overlapping-cover variant built on binary membership
//!   vectors, with the usual admissibility constraint on matched-community
//!   conditional entropies.
//! - Omega is the Collins–Dent agreement-over-co-membership-levels form,
//!   corrected for chance.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::real::Real;

/// A cover: a list of possibly overlapping node-id sets over a shared node
/// universe. Sets are non-empty, sorted, and deduplicated; a node may appear
/// in any number of sets, including zero. Communities with identical member
/// sets collapse into one, which keeps every comparison metric invariant to
/// duplicated sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    communities: Vec<Vec<u32>>,
}

impl Cover {
    /// Builds a cover, sorting and deduplicating members within each set and
    /// dropping repeated identical sets (first occurrence kept). Errors if
    /// any community is empty.
    pub fn new(communities: Vec<Vec<u32>>) -> Result<Self> {
        let mut sets = Vec::with_capacity(communities.len());
        let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
        for mut members in communities {
            members.sort_unstable();
            members.dedup();
            if members.is_empty() {
                return Err(Error::InvalidArgument(
                    "cover contains an empty community".into(),
                ));
            }
            if seen.insert(members.clone()) {
                sets.push(members);
            }
        }
        Ok(Cover { communities: sets })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.communities.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    #[inline]
    pub fn communities(&self) -> &[Vec<u32>] {
        &self.communities
    }

    /// Distinct node ids appearing in any community.
    pub fn node_ids(&self) -> BTreeSet<u32> {
        self.communities.iter().flatten().copied().collect()
    }

    /// Number of communities containing node `u`.
    pub fn membership_count(&self, u: u32) -> usize {
        self.communities
            .iter()
            .filter(|m| m.binary_search(&u).is_ok())
            .count()
    }
}

fn require_non_empty(cover: &Cover) -> Result<()> {
    if cover.is_empty() {
        return Err(Error::EmptyCover);
    }
    Ok(())
}

#[inline]
fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut inter) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter
}

/// Pairwise F1 between two node sets: harmonic mean of set precision and
/// recall, `2|A ∩ B| / (|A| + |B|)`.
#[inline]
fn pairwise_f1<F: Real>(a: &[u32], b: &[u32]) -> F {
    let inter = intersection_size(a, b);
    F::ratio_of(2 * inter, a.len() + b.len())
}

/// Symmetric best-match F1 between two covers: the average of (a) the mean
/// over truth communities of their best F1 against any detected community and
/// (b) the same with the roles swapped.
pub fn f1_score<F: Real>(truth: &Cover, detected: &Cover) -> Result<F> {
    require_non_empty(truth)?;
    require_non_empty(detected)?;
    let half = F::from_f64_lossy(0.5);
    Ok(half * (best_match_mean::<F>(truth, detected) + best_match_mean::<F>(detected, truth)))
}

fn best_match_mean<F: Real>(from: &Cover, to: &Cover) -> F {
    let total: F = from
        .communities()
        .iter()
        .map(|a| {
            to.communities()
                .iter()
                .map(|b| pairwise_f1::<F>(a, b))
                .fold(F::zero(), F::max)
        })
        .sum();
    total / F::from_usize(from.len()).expect("cover size fits in Real")
}

/// Omega index as an exact rational. See [`omega_index`] for the definition.
///
/// `graph_nodes`, when given, adds ids `0..n` to the pair universe so that
/// nodes outside every community still count as agreeing at co-membership
/// level zero.
pub fn omega_index_exact(
    truth: &Cover,
    detected: &Cover,
    graph_nodes: Option<usize>,
) -> Result<Ratio<i128>> {
    require_non_empty(truth)?;
    require_non_empty(detected)?;

    let mut universe: BTreeSet<u32> = truth.node_ids();
    universe.extend(detected.node_ids());
    if let Some(n) = graph_nodes {
        universe.extend(0..n as u32);
    }
    let n = universe.len() as u128;
    let total_pairs = n * (n - 1) / 2;
    if total_pairs == 0 {
        return Err(Error::InvalidArgument(
            "omega index requires at least two nodes".into(),
        ));
    }

    // Per-pair co-membership level in each cover; pairs absent from the map
    // sit at level (0, 0).
    let mut levels: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for members in truth.communities() {
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                levels.entry((u, v)).or_default().0 += 1;
            }
        }
    }
    for members in detected.communities() {
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                levels.entry((u, v)).or_default().1 += 1;
            }
        }
    }

    let mut agreements: u128 = 0;
    let mut truth_hist: BTreeMap<u32, u128> = BTreeMap::new();
    let mut detected_hist: BTreeMap<u32, u128> = BTreeMap::new();
    for &(t, d) in levels.values() {
        if t == d {
            agreements += 1;
        }
        *truth_hist.entry(t).or_default() += 1;
        *detected_hist.entry(d).or_default() += 1;
    }
    let uncovered = total_pairs - levels.len() as u128;
    agreements += uncovered;
    *truth_hist.entry(0).or_default() += uncovered;
    *detected_hist.entry(0).or_default() += uncovered;

    // expected agreement numerator: sum over levels of t_j * s_j, over N^2.
    let mut expected_num: u128 = 0;
    for (level, t_count) in &truth_hist {
        if let Some(s_count) = detected_hist.get(level) {
            expected_num += t_count * s_count;
        }
    }

    // omega = (obs - exp) / (1 - exp) with obs = a/N, exp = b/N^2
    //       = (a*N - b) / (N^2 - b).
    let a = agreements;
    let b = expected_num;
    let n2 = total_pairs * total_pairs;
    if n2 == b {
        return if a == total_pairs {
            Ok(Ratio::from_integer(1))
        } else {
            Err(Error::DegenerateOmega)
        };
    }
    let numer = (a * total_pairs) as i128 - b as i128;
    let denom = (n2 - b) as i128;
    Ok(Ratio::new(numer, denom))
}

/// Omega index: chance-corrected agreement on per-pair co-membership
/// multiplicities. For each unordered node pair, the two covers agree when
/// the pair is together in the same number of communities in both; observed
/// agreement is corrected by the expected agreement of independent covers
/// with the same level histograms.
pub fn omega_index<F: Real>(
    truth: &Cover,
    detected: &Cover,
    graph_nodes: Option<usize>,
) -> Result<F> {
    let exact = omega_index_exact(truth, detected, graph_nodes)?;
    let value = num_traits::ToPrimitive::to_f64(&exact)
        .ok_or_else(|| Error::InvalidArgument("omega ratio does not fit in f64".into()))?;
    Ok(F::from_f64_lossy(value))
}

/// Overlapping NMI (LFK variant) on binary membership vectors.
///
/// For covers X and Y: `1 - [H(X|Y)_norm + H(Y|X)_norm] / 2`, where each
/// community of X is matched to the Y community minimizing its conditional
/// entropy, subject to the admissibility constraint
/// `h(p11) + h(p00) >= h(p01) + h(p10)`; inadmissible matches fall back to
/// the unconditional entropy. Communities with zero entropy (trivial over the
/// universe) contribute zero to the normalized sum. The node universe is the
/// union of nodes appearing in either cover.
pub fn overlapping_nmi<F: Real>(truth: &Cover, detected: &Cover) -> Result<F> {
    require_non_empty(truth)?;
    require_non_empty(detected)?;

    let mut universe: BTreeSet<u32> = truth.node_ids();
    universe.extend(detected.node_ids());
    let n = universe.len();
    if n == 0 {
        return Err(Error::InvalidArgument("covers contain no nodes".into()));
    }

    let h_xy = normalized_conditional_entropy(truth, detected, n);
    let h_yx = normalized_conditional_entropy(detected, truth, n);
    Ok(F::from_f64_lossy(1.0 - 0.5 * (h_xy + h_yx)))
}

/// `H(X|Y)_norm`: mean over communities of X of the best admissible
/// conditional entropy against Y, each normalized by the community's own
/// entropy.
fn normalized_conditional_entropy(x: &Cover, y: &Cover, n: usize) -> f64 {
    let total = n as f64;
    let mut sum = 0.0;
    for xi in x.communities() {
        let px = xi.len() as f64 / total;
        let h_x = h(px) + h(1.0 - px);
        if h_x == 0.0 {
            continue;
        }

        let mut best: Option<f64> = None;
        for yj in y.communities() {
            let py = yj.len() as f64 / total;
            let inter = intersection_size(xi, yj) as f64 / total;
            // Joint cells: 11 = in both, 10 = in X only, 01 = in Y only.
            let p11 = inter;
            let p10 = px - inter;
            let p01 = py - inter;
            let p00 = 1.0 - px - py + inter;
            if h(p11) + h(p00) < h(p01) + h(p10) {
                continue; // inadmissible match
            }
            let h_joint = h(p11) + h(p10) + h(p01) + h(p00);
            let h_y = h(py) + h(1.0 - py);
            let cond = h_joint - h_y;
            best = Some(best.map_or(cond, |b: f64| b.min(cond)));
        }
        let cond = best.unwrap_or(h_x);
        sum += (cond / h_x).clamp(0.0, 1.0);
    }
    sum / x.len() as f64
}

#[inline]
fn h(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(sets: &[&[u32]]) -> Cover {
        Cover::new(sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn empty_community_rejected() {
        assert!(Cover::new(vec![vec![1], vec![]]).is_err());
    }

    #[test]
    fn f1_identical_covers() {
        let c = cover(&[&[0, 1, 2], &[2, 3, 4]]);
        assert_eq!(f1_score::<f64>(&c, &c).unwrap(), 1.0);
    }

    #[test]
    fn f1_disjoint_detected() {
        let truth = cover(&[&[0, 1, 2]]);
        let detected = cover(&[&[7, 8, 9]]);
        assert_eq!(f1_score::<f64>(&truth, &detected).unwrap(), 0.0);
    }

    #[test]
    fn f1_hand_example() {
        let truth = cover(&[&[1, 2, 3, 4]]);
        let detected = cover(&[&[1, 2, 3, 5]]);
        let f1 = f1_score::<f64>(&truth, &detected).unwrap();
        assert!((f1 - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn f1_empty_cover_is_error() {
        let truth = cover(&[&[0, 1]]);
        let empty = Cover::new(vec![]).unwrap();
        assert!(matches!(
            f1_score::<f64>(&truth, &empty),
            Err(Error::EmptyCover)
        ));
    }

    #[test]
    fn omega_identical_covers() {
        let c = cover(&[&[0, 1, 2], &[2, 3]]);
        assert_eq!(omega_index::<f64>(&c, &c, None).unwrap(), 1.0);
        assert_eq!(
            omega_index_exact(&c, &c, None).unwrap(),
            Ratio::from_integer(1)
        );
    }

    #[test]
    fn omega_worked_four_node_example() {
        // Truth puts only (1,2) together, detected only (3,4); universe 1..=4.
        let truth = cover(&[&[1, 2], &[3], &[4]]);
        let detected = cover(&[&[3, 4], &[1], &[2]]);
        let exact = omega_index_exact(&truth, &detected, None).unwrap();
        assert_eq!(exact, Ratio::new(-1, 5));
        let approx: f64 = omega_index(&truth, &detected, None).unwrap();
        assert!((approx + 0.2).abs() < 1e-15);
    }

    #[test]
    fn omega_universe_extension_counts_uncovered_pairs() {
        let truth = cover(&[&[0, 1]]);
        let detected = cover(&[&[0, 1]]);
        // With only covered nodes the covers agree perfectly.
        assert_eq!(omega_index::<f64>(&truth, &detected, None).unwrap(), 1.0);
        // Adding uncovered nodes keeps perfect agreement (all extra pairs at
        // level 0 in both).
        assert_eq!(
            omega_index::<f64>(&truth, &detected, Some(6)).unwrap(),
            1.0
        );
    }

    #[test]
    fn nmi_identical_covers() {
        let c = cover(&[&[0, 1, 2], &[3, 4], &[2, 3]]);
        let nmi = overlapping_nmi::<f64>(&c, &c).unwrap();
        assert!((nmi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nmi_all_nodes_single_community_loses_information() {
        let truth = cover(&[&[0, 1, 2], &[3, 4, 5]]);
        let detected = cover(&[&[0, 1, 2, 3, 4, 5]]);
        let nmi = overlapping_nmi::<f64>(&truth, &detected).unwrap();
        assert!(nmi < 1.0);
        assert!(nmi >= 0.0);
    }
}
