//! Per-leak-pattern sub-ensemble data and the NDS lower bound.
//!
//! Conditioning the output of a lossy scene on the leaked photon pattern `l`
//! splits the problem into sub-ensembles of pure states whose pairwise inner
//! products form the Gram matrix
//! `G^(l)_{m,m'} = sum_{n >= l} p_n conj(A_m^(n:l)) A_m'^(n:l)`.
//! These matrices, the leak weights `lambda_l`, and the conditional priors
//! depend only on the photon pmf and the scene, never on the idler states;
//! the weighted sum of per-leak minimum costs is therefore a lower bound on
//! the cost of any input with that pmf, attained by number-diagonal signal
//! states.

use crate::fock::{aggregate_by_pixel, enumerate_leak_patterns, ModePattern, PhotonPmf};
use crate::fmt::sig12;
use crate::linalg::CMat;
use crate::scene::{hypothesis_norms, pattern_phase, transition_weight, SceneSpec};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::Write;

/// Everything the decision side needs to know about one leak pattern:
/// its weight, the conditional hypothesis priors, and the (unnormalized)
/// Gram matrix of the conditional pure states.
#[derive(Clone, Debug)]
pub struct SubEnsembleGram {
    pub leak: ModePattern,
    pub lambda: f64,
    pub cond_priors: Vec<f64>,
    pub gram: DMatrix<Complex64>,
}

impl SubEnsembleGram {
    /// Overlap of the normalized conditional states of hypotheses `i`, `j`;
    /// zero when either has no mass at this leak pattern.
    pub fn normalized_overlap(&self, i: usize, j: usize) -> Complex64 {
        let gi = self.gram[(i, i)].re;
        let gj = self.gram[(j, j)].re;
        if gi > 0.0 && gj > 0.0 {
            let g = self.gram[(i, j)] / Complex64::new((gi * gj).sqrt(), 0.0);
            if g.norm() > 1.0 {
                g / Complex64::new(g.norm(), 0.0)
            } else {
                g
            }
        } else {
            Complex64::ZERO
        }
    }
}

/// Union of the leak patterns reachable from the pmf support, in canonical
/// order. This is the exact, finite index set of every per-leak sum.
pub fn leak_support(pmf: &PhotonPmf) -> Vec<ModePattern> {
    leak_support_of(pmf.support().iter().map(|(n, _)| n))
}

pub(crate) fn leak_support_of<'a>(
    patterns: impl Iterator<Item = &'a ModePattern>,
) -> Vec<ModePattern> {
    let mut set = std::collections::BTreeSet::new();
    for n in patterns {
        set.extend(enumerate_leak_patterns(n));
    }
    set.into_iter().collect()
}

/// The sub-ensemble data for one leak pattern, by the exact finite sum over
/// the pmf support. Zero-weight patterns come back with `lambda = 0`, zero
/// conditional priors, and a zero matrix.
pub fn gram_for_leak(scene: &SceneSpec, pmf: &PhotonPmf, l: &ModePattern) -> Result<SubEnsembleGram> {
    scene.check_inputs(pmf)?;
    scene.layout().check_pattern(l)?;
    let m_count = scene.hypothesis_count();
    let mut gram = CMat::zeros(m_count, m_count);
    for (n, p) in pmf.support() {
        if !l.le(n) {
            continue;
        }
        let weights: Vec<f64> = (0..m_count)
            .map(|m| transition_weight(scene, m, n, l))
            .collect();
        let phases: Vec<f64> = (0..m_count).map(|m| pattern_phase(scene, m, n)).collect();
        for i in 0..m_count {
            gram[(i, i)] += Complex64::new(p * weights[i], 0.0);
            for j in i + 1..m_count {
                let term = Complex64::from_polar(
                    p * (weights[i] * weights[j]).sqrt(),
                    phases[j] - phases[i],
                );
                gram[(i, j)] += term;
                gram[(j, i)] += term.conj();
            }
        }
    }
    let lambda: f64 = scene
        .priors()
        .iter()
        .enumerate()
        .map(|(m, pi)| pi * gram[(m, m)].re)
        .sum();
    let cond_priors = if lambda > 0.0 {
        scene
            .priors()
            .iter()
            .enumerate()
            .map(|(m, pi)| pi * gram[(m, m)].re / lambda)
            .collect()
    } else {
        vec![0.0; m_count]
    };
    Ok(SubEnsembleGram {
        leak: l.clone(),
        lambda,
        cond_priors,
        gram,
    })
}

/// All sub-ensembles over [`leak_support`], in canonical leak order.
pub fn sub_ensembles(scene: &SceneSpec, pmf: &PhotonPmf) -> Result<Vec<SubEnsembleGram>> {
    leak_support(pmf)
        .iter()
        .map(|l| gram_for_leak(scene, pmf, l))
        .collect()
}

/// Per-hypothesis totals `sum_l G^(l)_mm`; each equals 1 by beam-splitter
/// unitarity, which makes this a cheap global consistency check.
pub fn gram_diagonal_mass(scene: &SceneSpec, pmf: &PhotonPmf) -> Result<Vec<f64>> {
    scene.check_inputs(pmf)?;
    let mut mass = vec![0.0; scene.hypothesis_count()];
    for l in leak_support(pmf) {
        for (m, g) in hypothesis_norms(scene, pmf, &l).into_iter().enumerate() {
            mass[m] += g;
        }
    }
    Ok(mass)
}

/// The minimum error probability achieved by an NDS input with photon pmf
/// `pmf` on a binary scene: `sum_l lambda_l P_e(pi^(l), G^(l))` with each
/// term the pure-pair Helstrom value of the conditional states.
///
/// By idler independence this is also a lower bound on the error probability
/// of *any* pure input state with the same pmf.
///
/// Each term is evaluated as
/// `(lambda - sqrt((pi1 G00 - pi2 G11)^2 + 4 pi1 pi2 det G)) / 2`, with the
/// Gram determinant accumulated by the pairwise Lagrange identity. That
/// route is algebraically identical to the normalized-overlap form but has
/// no cancellation, so near-parallel conditional states cost no precision.
pub fn nds_bound_binary(scene: &SceneSpec, pmf: &PhotonPmf) -> Result<f64> {
    if scene.hypothesis_count() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: scene.hypothesis_count(),
        });
    }
    scene.check_inputs(pmf)?;
    let (pi1, pi2) = (scene.priors()[0], scene.priors()[1]);
    let mut total = 0.0;
    for l in leak_support(pmf) {
        // conditional amplitudes sqrt(p_n) A_m^(n:l) for both hypotheses
        let mut terms: Vec<(f64, f64, Complex64, Complex64)> = Vec::new();
        for (n, p) in pmf.support() {
            if !l.le(n) || *p == 0.0 {
                continue;
            }
            let w1 = transition_weight(scene, 0, n, &l);
            let w2 = transition_weight(scene, 1, n, &l);
            let a1 = Complex64::from_polar(w1.sqrt(), pattern_phase(scene, 0, n));
            let a2 = Complex64::from_polar(w2.sqrt(), pattern_phase(scene, 1, n));
            terms.push((p * w1, p * w2, a1, a2));
        }
        let g00: f64 = terms.iter().map(|t| t.0).sum();
        let g11: f64 = terms.iter().map(|t| t.1).sum();
        let lambda = pi1 * g00 + pi2 * g11;
        if lambda == 0.0 {
            continue;
        }
        // det G = sum_{n < n'} p_n p_n' |A1(n) A2(n') - A1(n') A2(n)|^2
        let probs: Vec<f64> = pmf
            .support()
            .iter()
            .filter(|(n, p)| l.le(n) && *p != 0.0)
            .map(|(_, p)| *p)
            .collect();
        let mut det = 0.0;
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let cross = terms[i].2 * terms[j].3 - terms[j].2 * terms[i].3;
                det += probs[i] * probs[j] * cross.norm_sqr();
            }
        }
        let skew = pi1 * g00 - pi2 * g11;
        let separation = (skew * skew + 4.0 * pi1 * pi2 * det).sqrt();
        total += ((lambda - separation) / 2.0).max(0.0);
    }
    Ok(total)
}

/// The Gram matrix of a lossless scene, computed from the pixel-aggregated
/// pmf `p_nu` and the phase characteristic function. Equals
/// `gram_for_leak(0)` when every pixel has `eta = 1`.
pub fn lossless_gram(scene: &SceneSpec, pmf: &PhotonPmf) -> Result<DMatrix<Complex64>> {
    scene.check_inputs(pmf)?;
    for image in scene.images() {
        for px in image.pixels() {
            if px.eta() < 1.0 {
                return Err(Error::NotLossless(px.eta()));
            }
        }
    }
    // aggregate the pmf over per-pixel totals
    let mut by_pixel: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (n, p) in pmf.support() {
        *by_pixel
            .entry(aggregate_by_pixel(n, scene.layout())?)
            .or_insert(0.0) += p;
    }
    let m_count = scene.hypothesis_count();
    let mut gram = CMat::zeros(m_count, m_count);
    for (nu, p) in &by_pixel {
        for i in 0..m_count {
            gram[(i, i)] += Complex64::new(*p, 0.0);
            for j in i + 1..m_count {
                let phase: f64 = nu
                    .iter()
                    .enumerate()
                    .map(|(px, &count)| {
                        let ti = scene.images()[i].pixels()[px].theta();
                        let tj = scene.images()[j].pixels()[px].theta();
                        (tj - ti) * f64::from(count)
                    })
                    .sum();
                let term = Complex64::from_polar(*p, phase);
                gram[(i, j)] += term;
                gram[(j, i)] += term.conj();
            }
        }
    }
    Ok(gram)
}

/// CSV dump of all sub-ensembles: leak pattern, weight, conditional priors,
/// and the upper triangle of the Gram matrix as Re/Im pairs; canonical leak
/// order, 12 significant digits. `prune` drops rows with
/// `lambda < prune` (the cut is recorded by the caller, not here).
pub fn write_sub_ensembles_csv<W: Write>(
    out: &mut W,
    scene: &SceneSpec,
    pmf: &PhotonPmf,
    prune: Option<f64>,
) -> Result<()> {
    let m_count = scene.hypothesis_count();
    let mut header = vec!["l".to_string(), "lambda".to_string()];
    for m in 1..=m_count {
        header.push(format!("pi_{m}"));
    }
    for i in 1..=m_count {
        for j in i..=m_count {
            header.push(format!("g_{i}_{j}_re"));
            header.push(format!("g_{i}_{j}_im"));
        }
    }
    let io_err = |e: std::io::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for sub in sub_ensembles(scene, pmf)? {
        if let Some(eps) = prune {
            if sub.lambda < eps {
                continue;
            }
        }
        let mut row = vec![sub.leak.render(), sig12(sub.lambda)];
        for pi in &sub.cond_priors {
            row.push(sig12(*pi));
        }
        for i in 0..m_count {
            for j in i..m_count {
                row.push(sig12(sub.gram[(i, j)].re));
                row.push(sig12(sub.gram[(i, j)].im));
            }
        }
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeLayout;
    use crate::scene::Image;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pat(counts: &[u32]) -> ModePattern {
        ModePattern::new(counts.to_vec())
    }

    fn phase_scene(eta: f64) -> SceneSpec {
        SceneSpec::new(
            ModeLayout::single_pixel(1).unwrap(),
            vec![
                Image::uniform(1, eta, 0.0).unwrap(),
                Image::uniform(1, eta, PI).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    fn example_pmf() -> PhotonPmf {
        PhotonPmf::single_mode(&[0.239583, 0.5, 0.260417]).unwrap()
    }

    #[test]
    fn leak_support_is_down_closure() {
        let pmf = PhotonPmf::new(vec![(pat(&[1, 1]), 0.5), (pat(&[0, 2]), 0.5)]).unwrap();
        let support = leak_support(&pmf);
        let expected: Vec<ModePattern> = [
            [0, 0], [0, 1], [0, 2], [1, 0], [1, 1],
        ]
        .iter()
        .map(|c| pat(c))
        .collect();
        assert_eq!(support, expected);
    }

    #[test]
    fn lossless_symmetric_pmf_has_zero_overlap() {
        let scene = phase_scene(1.0);
        let pmf = PhotonPmf::single_mode(&[0.5, 0.5]).unwrap();
        let sub = gram_for_leak(&scene, &pmf, &pat(&[0])).unwrap();
        assert_abs_diff_eq!(sub.gram[(0, 1)].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sub.lambda, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn example_gram_entries() {
        let scene = phase_scene(0.6);
        let pmf = example_pmf();
        let sub = gram_for_leak(&scene, &pmf, &pat(&[0])).unwrap();
        // three-term sums p0 -+ p1 eta + p2 eta^2
        let expected_diag = 0.239583 + 0.5 * 0.6 + 0.260417 * 0.36;
        let expected_off = 0.239583 - 0.5 * 0.6 + 0.260417 * 0.36;
        assert_abs_diff_eq!(sub.gram[(0, 0)].re, expected_diag, epsilon = 1e-12);
        assert_abs_diff_eq!(sub.gram[(0, 1)].re, expected_off, epsilon = 1e-12);
        assert_abs_diff_eq!(sub.gram[(0, 1)].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_diag, 0.633333, epsilon = 1e-6);
        assert_abs_diff_eq!(expected_off, 0.033333, epsilon = 1e-6);
    }

    #[test]
    fn leak_beyond_support_is_zero() {
        let scene = phase_scene(0.6);
        let pmf = example_pmf();
        let sub = gram_for_leak(&scene, &pmf, &pat(&[5])).unwrap();
        assert_eq!(sub.lambda, 0.0);
        assert!(sub.gram.iter().all(|z| *z == Complex64::ZERO));
        assert_eq!(sub.cond_priors, vec![0.0, 0.0]);
    }

    #[test]
    fn diagonal_mass_is_unit() {
        let scene = phase_scene(0.6);
        for mass in gram_diagonal_mass(&scene, &example_pmf()).unwrap() {
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
        }
        // eta = 0: all mass leaks
        let opaque = phase_scene(0.0);
        let one = PhotonPmf::point_mass(pat(&[1]));
        for mass in gram_diagonal_mass(&opaque, &one).unwrap() {
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-15);
        }
        let sub = gram_for_leak(&opaque, &one, &pat(&[1])).unwrap();
        assert_abs_diff_eq!(sub.gram[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn leak_weights_sum_to_one() {
        let scene = phase_scene(0.37);
        let pmf = example_pmf();
        let total: f64 = sub_ensembles(&scene, &pmf)
            .unwrap()
            .iter()
            .map(|s| s.lambda)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn binary_bound_examples() {
        // lossless symmetric superposition discriminates perfectly
        let scene = phase_scene(1.0);
        let pmf = PhotonPmf::single_mode(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(nds_bound_binary(&scene, &pmf).unwrap(), 0.0, epsilon = 1e-15);

        // the worked example value
        let scene = phase_scene(0.6);
        assert_abs_diff_eq!(
            nds_bound_binary(&scene, &example_pmf()).unwrap(),
            0.0256584,
            epsilon = 1e-7
        );

        // vacuum carries no information
        let vacuum = PhotonPmf::point_mass(pat(&[0]));
        assert_abs_diff_eq!(nds_bound_binary(&scene, &vacuum).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bound_requires_binary_scene() {
        let scene = SceneSpec::new(
            ModeLayout::single_pixel(1).unwrap(),
            vec![
                Image::uniform(1, 0.5, 0.0).unwrap(),
                Image::uniform(1, 0.5, 1.0).unwrap(),
                Image::uniform(1, 0.5, 2.0).unwrap(),
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        assert!(matches!(
            nds_bound_binary(&scene, &PhotonPmf::point_mass(pat(&[0]))),
            Err(Error::UnsupportedArity { .. })
        ));
    }

    #[test]
    fn lossless_gram_matches_general_path() {
        // two-pixel interferometer-style scene, single photon split across arms
        let layout = ModeLayout::new(vec![1, 1]).unwrap();
        let delta = 0.7;
        let images = vec![
            Image::new(vec![
                crate::scene::Pixel::new(1.0, 0.3).unwrap(),
                crate::scene::Pixel::new(1.0, 0.0).unwrap(),
            ]),
            Image::new(vec![
                crate::scene::Pixel::new(1.0, 0.3 + delta).unwrap(),
                crate::scene::Pixel::new(1.0, 0.0).unwrap(),
            ]),
        ];
        let scene = SceneSpec::new(layout, images, vec![0.5, 0.5]).unwrap();
        let pmf = PhotonPmf::new(vec![(pat(&[1, 0]), 0.5), (pat(&[0, 1]), 0.5)]).unwrap();

        let from_closed = lossless_gram(&scene, &pmf).unwrap();
        let from_general = gram_for_leak(&scene, &pmf, &pat(&[0, 0])).unwrap().gram;
        assert!((0..2).all(|i| (0..2).all(|j| {
            (from_closed[(i, j)] - from_general[(i, j)]).norm() < 1e-14
        })));
        // the off-diagonal is (e^{i delta} + 1) / 2
        let expected = (Complex64::from_polar(1.0, delta) + Complex64::new(1.0, 0.0)) * 0.5;
        assert_abs_diff_eq!(from_closed[(0, 1)].re, expected.re, epsilon = 1e-14);
        assert_abs_diff_eq!(from_closed[(0, 1)].im, expected.im, epsilon = 1e-14);
    }

    #[test]
    fn lossless_gram_identical_phases_is_all_ones() {
        let scene = SceneSpec::new(
            ModeLayout::single_pixel(1).unwrap(),
            vec![
                Image::uniform(1, 1.0, 0.4).unwrap(),
                Image::uniform(1, 1.0, 0.4).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let gram = lossless_gram(&scene, &example_pmf()).unwrap();
        assert!(gram.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn lossless_gram_rejects_lossy_scene() {
        assert!(matches!(
            lossless_gram(&phase_scene(0.9), &example_pmf()),
            Err(Error::NotLossless(_))
        ));
    }

    #[test]
    fn sub_ensemble_invariants() {
        // asymmetric scene: different eta and theta per hypothesis
        let scene = SceneSpec::new(
            ModeLayout::single_pixel(2).unwrap(),
            vec![
                Image::uniform(1, 0.8, 0.7).unwrap(),
                Image::uniform(1, 0.35, 2.9).unwrap(),
            ],
            vec![0.3, 0.7],
        )
        .unwrap();
        let pmf = PhotonPmf::new(vec![
            (pat(&[0, 0]), 0.4),
            (pat(&[1, 1]), 0.35),
            (pat(&[2, 0]), 0.25),
        ])
        .unwrap();
        for sub in sub_ensembles(&scene, &pmf).unwrap() {
            // Hermitian with real diagonal in [0, 1]
            for i in 0..2 {
                assert!(sub.gram[(i, i)].im == 0.0);
                assert!((0.0..=1.0 + 1e-12).contains(&sub.gram[(i, i)].re));
                for j in 0..2 {
                    assert!((sub.gram[(i, j)] - sub.gram[(j, i)].conj()).norm() < 1e-12);
                }
            }
            // PSD: 2x2 determinant and trace non-negative
            let det = sub.gram[(0, 0)].re * sub.gram[(1, 1)].re - sub.gram[(0, 1)].norm_sqr();
            assert!(det >= -1e-10);
            // lambda consistency with the conditional priors
            let expected: f64 = scene
                .priors()
                .iter()
                .enumerate()
                .map(|(m, pi)| pi * sub.gram[(m, m)].re)
                .sum();
            assert_abs_diff_eq!(sub.lambda, expected, epsilon = 1e-12);
            if sub.lambda > 0.0 {
                let total: f64 = sub.cond_priors.iter().sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
        // the bound never exceeds the smaller prior
        let bound = nds_bound_binary(&scene, &pmf).unwrap();
        assert!((0.0..=0.3 + 1e-12).contains(&bound));
    }

    #[test]
    fn csv_dump_shape() {
        let scene = phase_scene(0.6);
        let mut buf = Vec::new();
        write_sub_ensembles_csv(&mut buf, &scene, &example_pmf(), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "l,lambda,pi_1,pi_2,g_1_1_re,g_1_1_im,g_1_2_re,g_1_2_im,g_2_2_re,g_2_2_im");
        assert_eq!(lines.len(), 4); // header + leaks 0, 1, 2
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use std::f64::consts::TAU;

        proptest! {
            // mass conservation and the bound range over arbitrary binary
            // scenes and two-photon pmfs
            #[test]
            fn mass_and_bound_range(
                eta1 in 0.0f64..=1.0,
                eta2 in 0.0f64..=1.0,
                theta1 in 0.0f64..TAU,
                theta2 in 0.0f64..TAU,
                prior in 0.05f64..0.95,
                p0 in 0.0f64..1.0,
                p1 in 0.0f64..1.0,
            ) {
                let scene = SceneSpec::new(
                    ModeLayout::single_pixel(1).unwrap(),
                    vec![
                        Image::uniform(1, eta1, theta1).unwrap(),
                        Image::uniform(1, eta2, theta2).unwrap(),
                    ],
                    vec![prior, 1.0 - prior],
                )
                .unwrap();
                let total = p0 + p1 + 1.0;
                let pmf = PhotonPmf::single_mode(&[p0 / total, p1 / total, 1.0 / total]).unwrap();

                let lambda_total: f64 = sub_ensembles(&scene, &pmf)
                    .unwrap()
                    .iter()
                    .map(|s| s.lambda)
                    .sum();
                prop_assert!((lambda_total - 1.0).abs() < 1e-10);
                for mass in gram_diagonal_mass(&scene, &pmf).unwrap() {
                    prop_assert!((mass - 1.0).abs() < 1e-10);
                }
                let bound = nds_bound_binary(&scene, &pmf).unwrap();
                prop_assert!(bound >= 0.0);
                prop_assert!(bound <= prior.min(1.0 - prior) + 1e-12);
            }
        }
    }
}
