//! Photon-pattern combinatorics, canonical orderings, and finite-support
//! distributions over patterns.
//!
//! A [`ModePattern`] is the per-mode photon count vector `n` (or a leak
//! count vector `l`) indexing every sum in the crate. Patterns are ordered
//! lexicographically with the leftmost mode most significant; that order
//! fixes the enumeration of leak patterns, the layout of CSV/JSON output,
//! and the iteration order of every downstream sum.

use crate::{Error, Result, PROB_TOL};
use serde::{Deserialize, Serialize};

/// How the signal modes are grouped into pixels: `modes_per_pixel[p]` is the
/// number of modes interrogating pixel `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct ModeLayout {
    modes_per_pixel: Vec<usize>,
}

#[derive(Clone, Serialize, Deserialize)]
struct LayoutRepr {
    modes_per_pixel: Vec<usize>,
}

impl TryFrom<LayoutRepr> for ModeLayout {
    type Error = Error;
    fn try_from(repr: LayoutRepr) -> Result<Self> {
        Self::new(repr.modes_per_pixel)
    }
}

impl From<ModeLayout> for LayoutRepr {
    fn from(layout: ModeLayout) -> Self {
        Self {
            modes_per_pixel: layout.modes_per_pixel,
        }
    }
}

impl ModeLayout {
    pub fn new(modes_per_pixel: Vec<usize>) -> Result<Self> {
        if modes_per_pixel.is_empty() {
            return Err(Error::InvalidLayout("need at least one pixel".into()));
        }
        if modes_per_pixel.contains(&0) {
            return Err(Error::InvalidLayout(
                "every pixel needs at least one mode".into(),
            ));
        }
        Ok(Self { modes_per_pixel })
    }

    /// Single pixel probed by `modes` modes.
    pub fn single_pixel(modes: usize) -> Result<Self> {
        Self::new(vec![modes])
    }

    /// Number of pixels `P`.
    pub fn pixel_count(&self) -> usize {
        self.modes_per_pixel.len()
    }

    /// Total number of signal modes `J`.
    pub fn total_modes(&self) -> usize {
        self.modes_per_pixel.iter().sum()
    }

    pub fn modes_per_pixel(&self) -> &[usize] {
        &self.modes_per_pixel
    }

    /// Mode index ranges per pixel, in layout order.
    pub fn pixel_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.modes_per_pixel.iter().scan(0usize, |start, &j| {
            let r = *start..*start + j;
            *start += j;
            Some(r)
        })
    }

    pub(crate) fn check_pattern(&self, pattern: &ModePattern) -> Result<()> {
        if pattern.len() == self.total_modes() {
            Ok(())
        } else {
            Err(Error::PatternLengthMismatch {
                expected: self.total_modes(),
                got: pattern.len(),
            })
        }
    }
}

/// Per-mode photon counts, grouped by pixel in layout order.
///
/// `Ord` is the canonical order: lexicographic, leftmost mode most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModePattern(Vec<u32>);

impl ModePattern {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zeros(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise difference `self - leak`; requires `leak.le(self)`.
    pub fn minus(&self, leak: &Self) -> Result<Self> {
        if !leak.le(self) {
            return Err(Error::LeakExceedsPattern);
        }
        Ok(Self(
            self.0.iter().zip(&leak.0).map(|(n, l)| n - l).collect(),
        ))
    }

    /// Compact rendering `n1;n2;...` used in CSV output.
    pub fn render(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl From<Vec<u32>> for ModePattern {
    fn from(counts: Vec<u32>) -> Self {
        Self(counts)
    }
}

impl std::fmt::Display for ModePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.render())
    }
}

/// All leak patterns `l` with `0 <= l_j <= n_j` componentwise, in canonical
/// order. The result has exactly `prod_j (n_j + 1)` elements; panics if
/// that count cannot be materialized.
pub fn enumerate_leak_patterns(n: &ModePattern) -> Vec<ModePattern> {
    let caps = n.counts();
    let count: usize = caps
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c as usize + 1))
        .filter(|&c| c <= 100_000_000)
        .expect("leak pattern enumeration too large to materialize");
    let mut out = Vec::with_capacity(count);
    let mut cur = vec![0u32; caps.len()];
    loop {
        out.push(ModePattern::new(cur.clone()));
        // odometer: rightmost mode least significant
        let mut j = caps.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < caps[j] {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
        }
    }
}

/// Total photon count of a pattern.
pub fn total_photons(n: &ModePattern) -> u32 {
    n.counts().iter().sum()
}

/// Per-pixel totals `nu = (n^(1), ..., n^(P))`.
pub fn aggregate_by_pixel(n: &ModePattern, layout: &ModeLayout) -> Result<Vec<u32>> {
    layout.check_pattern(n)?;
    Ok(layout
        .pixel_ranges()
        .map(|r| n.counts()[r].iter().sum())
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PmfEntry {
    pattern: Vec<u32>,
    p: f64,
}

/// A finite-support probability mass function over photon patterns.
///
/// Entries are stored in canonical pattern order. Construction rejects
/// distributions whose total mass is outside `1 +- 1e-12` and renormalizes
/// those within tolerance, so downstream sums can treat the mass as exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PmfEntry>", into = "Vec<PmfEntry>")]
pub struct PhotonPmf {
    support: Vec<(ModePattern, f64)>,
}

impl PhotonPmf {
    pub fn new(entries: Vec<(ModePattern, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("pmf support is empty".into()));
        }
        let modes = entries[0].0.len();
        let mut support = Vec::with_capacity(entries.len());
        for (pattern, p) in entries {
            if pattern.len() != modes {
                return Err(Error::PatternLengthMismatch {
                    expected: modes,
                    got: pattern.len(),
                });
            }
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) || !p.is_finite() {
                return Err(Error::ProbabilityOutOfRange(p));
            }
            support.push((pattern, p.max(0.0)));
        }
        support.sort_by(|a, b| a.0.cmp(&b.0));
        if support.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicatePattern);
        }
        let sum: f64 = support.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized(sum));
        }
        for (_, p) in &mut support {
            *p /= sum;
        }
        Ok(Self { support })
    }

    /// Point mass on a single pattern.
    pub fn point_mass(pattern: ModePattern) -> Self {
        Self {
            support: vec![(pattern, 1.0)],
        }
    }

    /// Pmf on a single mode with probabilities `probs[k]` for `k` photons.
    pub fn single_mode(probs: &[f64]) -> Result<Self> {
        Self::new(
            probs
                .iter()
                .enumerate()
                .map(|(k, &p)| (ModePattern::new(vec![k as u32]), p))
                .collect(),
        )
    }

    /// Support entries in canonical order.
    pub fn support(&self) -> &[(ModePattern, f64)] {
        &self.support
    }

    /// Number of modes each support pattern spans.
    pub fn mode_count(&self) -> usize {
        self.support[0].0.len()
    }

    /// Probability of `pattern` (zero off support).
    pub fn prob(&self, pattern: &ModePattern) -> f64 {
        match self.support.binary_search_by(|(q, _)| q.cmp(pattern)) {
            Ok(i) => self.support[i].1,
            Err(_) => 0.0,
        }
    }

    /// Largest total photon count on the support.
    pub fn max_total_photons(&self) -> u32 {
        self.support
            .iter()
            .map(|(n, _)| total_photons(n))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pmf serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

impl TryFrom<Vec<PmfEntry>> for PhotonPmf {
    type Error = Error;
    fn try_from(entries: Vec<PmfEntry>) -> Result<Self> {
        Self::new(
            entries
                .into_iter()
                .map(|e| (ModePattern::new(e.pattern), e.p))
                .collect(),
        )
    }
}

impl From<PhotonPmf> for Vec<PmfEntry> {
    fn from(pmf: PhotonPmf) -> Self {
        pmf.support
            .into_iter()
            .map(|(pattern, p)| PmfEntry {
                pattern: pattern.0,
                p,
            })
            .collect()
    }
}

/// Mean total signal energy `sum_n n p_n` (photon units).
pub fn mean_energy(pmf: &PhotonPmf) -> f64 {
    pmf.support()
        .iter()
        .map(|(n, p)| f64::from(total_photons(n)) * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pat(counts: &[u32]) -> ModePattern {
        ModePattern::new(counts.to_vec())
    }

    #[test]
    fn leak_enumeration_vacuum() {
        assert_eq!(enumerate_leak_patterns(&pat(&[0])), vec![pat(&[0])]);
    }

    #[test]
    fn leak_enumeration_single_mode() {
        assert_eq!(
            enumerate_leak_patterns(&pat(&[2])),
            vec![pat(&[0]), pat(&[1]), pat(&[2])]
        );
    }

    #[test]
    fn leak_enumeration_two_modes() {
        assert_eq!(
            enumerate_leak_patterns(&pat(&[1, 1])),
            vec![pat(&[0, 0]), pat(&[0, 1]), pat(&[1, 0]), pat(&[1, 1])]
        );
    }

    #[test]
    fn totals() {
        assert_eq!(total_photons(&pat(&[0, 0])), 0);
        assert_eq!(total_photons(&pat(&[2, 1])), 3);
        assert_eq!(total_photons(&pat(&[1, 1, 1])), 3);
    }

    #[test]
    fn pixel_aggregation() {
        let two_in_one = ModeLayout::new(vec![2]).unwrap();
        assert_eq!(
            aggregate_by_pixel(&pat(&[1, 1]), &two_in_one).unwrap(),
            vec![2]
        );
        let one_one = ModeLayout::new(vec![1, 1]).unwrap();
        assert_eq!(
            aggregate_by_pixel(&pat(&[3, 0]), &one_one).unwrap(),
            vec![3, 0]
        );
        let two_one = ModeLayout::new(vec![2, 1]).unwrap();
        assert_eq!(
            aggregate_by_pixel(&pat(&[1, 0, 2]), &two_one).unwrap(),
            vec![1, 2]
        );
    }

    #[test]
    fn mean_energy_values() {
        assert_eq!(mean_energy(&PhotonPmf::point_mass(pat(&[0]))), 0.0);
        let probs = [0.239583, 0.5, 0.260417];
        let pmf = PhotonPmf::single_mode(&probs).unwrap();
        let expected = (probs[1] + 2.0 * probs[2]) / probs.iter().sum::<f64>();
        assert_abs_diff_eq!(mean_energy(&pmf), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(mean_energy(&pmf), 1.020833, epsilon = 2e-6);
    }

    #[test]
    fn pmf_rejects_bad_mass() {
        assert!(matches!(
            PhotonPmf::single_mode(&[0.5, 0.4]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            PhotonPmf::single_mode(&[1.5, -0.5]),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        assert!(matches!(
            PhotonPmf::new(vec![(pat(&[1]), 0.5), (pat(&[1]), 0.5)]),
            Err(Error::DuplicatePattern)
        ));
    }

    #[test]
    fn pmf_renormalizes_within_tolerance() {
        let eps = 4e-13;
        let pmf = PhotonPmf::single_mode(&[0.5 + eps, 0.5]).unwrap();
        let total: f64 = pmf.support().iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip_normalizes_order() {
        let json = r#"[{"pattern":[1,0],"p":0.75},{"pattern":[0,1],"p":0.25}]"#;
        let pmf = PhotonPmf::from_json(json).unwrap();
        // canonical order puts (0,1) first
        assert_eq!(pmf.support()[0].0, pat(&[0, 1]));
        let back = PhotonPmf::from_json(&pmf.to_json()).unwrap();
        assert_eq!(back, pmf);
    }

    #[test]
    fn layout_validation() {
        assert!(ModeLayout::new(vec![]).is_err());
        assert!(ModeLayout::new(vec![1, 0]).is_err());
        let layout = ModeLayout::new(vec![2, 1]).unwrap();
        assert_eq!(layout.pixel_count(), 2);
        assert_eq!(layout.total_modes(), 3);
    }

    proptest! {
        #[test]
        fn leak_patterns_complete_and_distinct(counts in proptest::collection::vec(0u32..4, 1..4)) {
            let n = ModePattern::new(counts);
            let leaks = enumerate_leak_patterns(&n);
            let expected: usize = n.counts().iter().map(|&c| c as usize + 1).product();
            prop_assert_eq!(leaks.len(), expected);
            prop_assert!(leaks.iter().all(|l| l.le(&n)));
            prop_assert!(leaks.windows(2).all(|w| w[0] < w[1])); // sorted, hence distinct
        }

        #[test]
        fn mean_energy_is_linear(
            ps in proptest::collection::vec(0.01f64..1.0, 3),
            qs in proptest::collection::vec(0.01f64..1.0, 3),
            alpha in 0.0f64..1.0,
        ) {
            let norm = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let (ps, qs) = (norm(&ps), norm(&qs));
            let mix: Vec<f64> = ps.iter().zip(&qs).map(|(p, q)| alpha * p + (1.0 - alpha) * q).collect();
            let e = |v: &[f64]| mean_energy(&PhotonPmf::single_mode(v).unwrap());
            prop_assert!((e(&mix) - (alpha * e(&ps) + (1.0 - alpha) * e(&qs))).abs() < 1e-12);
        }

        #[test]
        fn canonical_order_total_and_stable(
            a in proptest::collection::vec(0u32..5, 3),
            b in proptest::collection::vec(0u32..5, 3),
        ) {
            let (pa, pb) = (ModePattern::new(a), ModePattern::new(b));
            if pa != pb {
                prop_assert!(pa < pb || pb < pa);
            }
            // round-trip through json preserves canonical order
            let entries = if pa == pb { vec![(pa, 1.0)] } else { vec![(pa, 0.5), (pb, 0.5)] };
            let pmf = PhotonPmf::new(entries).unwrap();
            let rt = PhotonPmf::from_json(&pmf.to_json()).unwrap();
            prop_assert_eq!(rt, pmf);
        }
    }
}
