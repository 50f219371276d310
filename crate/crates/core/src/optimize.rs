//! Search over photon pmfs for NDS states minimizing the binary error
//! probability under energy constraints: an exhaustive simplex lattice scan
//! for reproducible certificates, plus a derivative-free local refinement.

use crate::fock::{mean_energy, ModeLayout, ModePattern, PhotonPmf};
use crate::gram::nds_bound_binary;
use crate::phase::lattice_resolution;
use crate::scene::SceneSpec;
use crate::{Error, Result};
use serde::Serialize;

/// Energy constraints on the probe: any combination of a mean signal energy
/// cap, a total peak photon cap, and per-mode peak caps. A mean cap alone
/// does not bound the support, so at least one peak cap is required by
/// [`feasible_support`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnergyConstraint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_at_most: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_at_most: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_mode_peak: Option<Vec<u32>>,
}

impl EnergyConstraint {
    pub fn peak_at_most(peak: u32) -> Self {
        Self {
            peak_at_most: Some(peak),
            ..Self::default()
        }
    }

    pub fn per_mode_peak(peaks: Vec<u32>) -> Self {
        Self {
            per_mode_peak: Some(peaks),
            ..Self::default()
        }
    }

    pub fn mean_at_most(mean: f64) -> Self {
        Self {
            mean_at_most: Some(mean),
            ..Self::default()
        }
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean_at_most = Some(mean);
        self
    }

    pub fn with_peak(mut self, peak: u32) -> Self {
        self.peak_at_most = Some(peak);
        self
    }

    fn validate(&self, layout: &ModeLayout) -> Result<()> {
        if let Some(mean) = self.mean_at_most {
            if !mean.is_finite() || mean < 0.0 {
                return Err(Error::InvalidInput(format!("mean energy cap {mean}")));
            }
        }
        if let Some(peaks) = &self.per_mode_peak {
            if peaks.len() != layout.total_modes() {
                return Err(Error::DimensionMismatch(format!(
                    "{} per-mode peaks for {} modes",
                    peaks.len(),
                    layout.total_modes()
                )));
            }
        }
        Ok(())
    }

    /// True when every support pattern respects the peak caps and the mean
    /// energy is within the cap (with a 1e-12 slack).
    pub fn permits(&self, pmf: &PhotonPmf) -> bool {
        let peaks_ok = pmf.support().iter().all(|(n, _)| {
            let total_ok = self
                .peak_at_most
                .is_none_or(|peak| crate::fock::total_photons(n) <= peak);
            let per_mode_ok = self.per_mode_peak.as_ref().is_none_or(|peaks| {
                n.counts().iter().zip(peaks).all(|(c, cap)| c <= cap)
            });
            total_ok && per_mode_ok
        });
        let mean_ok = self
            .mean_at_most
            .is_none_or(|cap| mean_energy(pmf) <= cap + 1e-12);
        peaks_ok && mean_ok
    }
}

/// All patterns compatible with the peak caps, in canonical order. Errors
/// with [`Error::UnboundedSupport`] when only a mean cap is given.
pub fn feasible_support(
    layout: &ModeLayout,
    constraint: &EnergyConstraint,
) -> Result<Vec<ModePattern>> {
    constraint.validate(layout)?;
    let modes = layout.total_modes();
    let caps: Vec<u32> = match (&constraint.per_mode_peak, constraint.peak_at_most) {
        (Some(per_mode), peak) => per_mode
            .iter()
            .map(|&c| peak.map_or(c, |p| c.min(p)))
            .collect(),
        (None, Some(peak)) => vec![peak; modes],
        (None, None) => return Err(Error::UnboundedSupport),
    };
    let all = crate::fock::enumerate_leak_patterns(&ModePattern::new(caps));
    Ok(match constraint.peak_at_most {
        Some(peak) => all
            .into_iter()
            .filter(|n| crate::fock::total_photons(n) <= peak)
            .collect(),
        None => all,
    })
}

/// Result of a lattice scan: the minimizer, every lattice point tying with
/// it within 1e-9 (in canonical order, minimizer included), and the number
/// of bound evaluations.
#[derive(Clone, Debug)]
pub struct GridMinimizeResult {
    pub best_pmf: PhotonPmf,
    pub best_cost: f64,
    pub ties: Vec<(PhotonPmf, f64)>,
    pub evaluations: u64,
}

const TIE_TOL: f64 = 1e-9;

/// Evaluate the NDS bound on every simplex lattice pmf over the feasible
/// support (mean-energy caps filter lattice points) and report the minimum.
pub fn grid_minimize(
    scene: &SceneSpec,
    constraint: &EnergyConstraint,
    grid_step: f64,
) -> Result<GridMinimizeResult> {
    let support = feasible_support(scene.layout(), constraint)?;
    let resolution = lattice_resolution(grid_step)?;
    let mut evaluated: Vec<(PhotonPmf, f64)> = Vec::new();
    let mut ticks = vec![0u32; support.len()];
    enumerate_compositions(resolution as u32, &mut ticks, 0, &mut |ticks| {
        let entries: Vec<(ModePattern, f64)> = support
            .iter()
            .zip(ticks)
            .map(|(n, &k)| (n.clone(), f64::from(k) * grid_step))
            .collect();
        let pmf = PhotonPmf::new(entries)?;
        if !constraint.permits(&pmf) {
            return Ok(());
        }
        let cost = nds_bound_binary(scene, &pmf)?;
        evaluated.push((pmf, cost));
        Ok(())
    })?;
    if evaluated.is_empty() {
        return Err(Error::InvalidInput(
            "no lattice point satisfies the constraint".into(),
        ));
    }
    let evaluations = evaluated.len() as u64;
    let best_cost = evaluated
        .iter()
        .map(|(_, c)| *c)
        .fold(f64::INFINITY, f64::min);
    let ties: Vec<(PhotonPmf, f64)> = evaluated
        .iter()
        .filter(|(_, c)| *c <= best_cost + TIE_TOL)
        .cloned()
        .collect();
    let best_pmf = ties[0].0.clone();
    Ok(GridMinimizeResult {
        best_pmf,
        best_cost,
        ties,
        evaluations,
    })
}

/// Visit every composition of `total` into `ticks.len()` parts in
/// lexicographic order (first coordinate most significant).
fn enumerate_compositions(
    total: u32,
    ticks: &mut Vec<u32>,
    index: usize,
    visit: &mut impl FnMut(&[u32]) -> Result<()>,
) -> Result<()> {
    if index + 1 == ticks.len() {
        ticks[index] = total;
        return visit(ticks);
    }
    for k in 0..=total {
        ticks[index] = k;
        enumerate_compositions(total - k, ticks, index + 1, visit)?;
    }
    Ok(())
}

const REFINE_DIAMETER_TOL: f64 = 1e-10;
const REFINE_IMPROVEMENT_TOL: f64 = 1e-12;
const REFINE_STALL_LIMIT: u32 = 100;
const REFINE_MAX_ITER: u32 = 50_000;

/// Derivative-free descent (reflect/expand/contract/shrink over the free
/// simplex coordinates) from a feasible start, terminating once the simplex
/// diameter falls below 1e-10 or the best cost stops improving by more than
/// 1e-12. The result is feasible and never costs more than the start.
pub fn local_refine(
    scene: &SceneSpec,
    constraint: &EnergyConstraint,
    start: &PhotonPmf,
) -> Result<(PhotonPmf, f64)> {
    let support = feasible_support(scene.layout(), constraint)?;
    if !constraint.permits(start) {
        return Err(Error::InvalidInput("start pmf violates the constraint".into()));
    }
    // start probabilities over the full feasible support, canonical order
    let mut x0 = vec![0.0; support.len()];
    for (n, p) in start.support() {
        match support.binary_search(n) {
            Ok(i) => x0[i] = *p,
            Err(_) => {
                if *p > 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "start pmf puts mass on {n}, outside the feasible support"
                    )));
                }
            }
        }
    }
    let free = support.len() - 1;

    let make_pmf = |x: &[f64]| -> Option<PhotonPmf> {
        let mut probs = Vec::with_capacity(support.len());
        let mut tail = 1.0;
        for &p in x {
            if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                return None;
            }
            probs.push(p.max(0.0));
            tail -= p;
        }
        if tail < -1e-12 {
            return None;
        }
        probs.push(tail.max(0.0));
        let entries = support
            .iter()
            .zip(&probs)
            .map(|(n, &p)| (n.clone(), p))
            .collect();
        let pmf = PhotonPmf::new(entries).ok()?;
        constraint.permits(&pmf).then_some(pmf)
    };
    let evaluate = |x: &[f64]| -> Result<(f64, Option<PhotonPmf>)> {
        match make_pmf(x) {
            Some(pmf) => {
                let cost = nds_bound_binary(scene, &pmf)?;
                Ok((cost, Some(pmf)))
            }
            None => Ok((f64::INFINITY, None)),
        }
    };

    let start_free: Vec<f64> = x0[..free].to_vec();
    let (start_cost, start_pmf) = evaluate(&start_free)?;
    let mut best_pmf = start_pmf.expect("start pmf is feasible");
    let mut best_cost = start_cost;
    if free == 0 {
        return Ok((best_pmf, best_cost));
    }

    // initial simplex: blend the start towards each simplex corner
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(start_cost, start_free.clone())];
    for i in 0..free {
        let mut t = 0.05;
        let vertex = loop {
            let mut v: Vec<f64> = start_free.iter().map(|&p| p * (1.0 - t)).collect();
            v[i] += t;
            if evaluate(&v)?.0.is_finite() || t < 1e-9 {
                break v;
            }
            t *= 0.5;
        };
        let (cost, _) = evaluate(&vertex)?;
        simplex.push((cost, vertex));
    }

    let mut stall = 0u32;
    for _ in 0..REFINE_MAX_ITER {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(_, v)| {
                v.iter()
                    .zip(&simplex[0].1)
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max);
        if diameter < REFINE_DIAMETER_TOL || stall >= REFINE_STALL_LIMIT {
            break;
        }
        let previous_best = best_cost;

        let worst = simplex.len() - 1;
        let centroid: Vec<f64> = (0..free)
            .map(|d| simplex[..worst].iter().map(|(_, v)| v[d]).sum::<f64>() / worst as f64)
            .collect();
        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect()
        };

        let reflected = blend(&centroid, &simplex[worst].1, 1.0);
        let (f_reflected, p_reflected) = evaluate(&reflected)?;
        if f_reflected < best_cost {
            if let Some(pmf) = &p_reflected {
                best_cost = f_reflected;
                best_pmf = pmf.clone();
            }
        }

        if f_reflected < simplex[0].0 {
            // try to expand
            let expanded = blend(&centroid, &simplex[worst].1, 2.0);
            let (f_expanded, p_expanded) = evaluate(&expanded)?;
            if f_expanded < best_cost {
                if let Some(pmf) = &p_expanded {
                    best_cost = f_expanded;
                    best_pmf = pmf.clone();
                }
            }
            simplex[worst] = if f_expanded < f_reflected {
                (f_expanded, expanded)
            } else {
                (f_reflected, reflected)
            };
        } else if f_reflected < simplex[worst - 1].0 {
            simplex[worst] = (f_reflected, reflected);
        } else {
            // contract outside or inside of the worst vertex
            let t = if f_reflected < simplex[worst].0 { 0.5 } else { -0.5 };
            let contracted = blend(&centroid, &simplex[worst].1, t);
            let (f_contracted, p_contracted) = evaluate(&contracted)?;
            if f_contracted < best_cost {
                if let Some(pmf) = &p_contracted {
                    best_cost = f_contracted;
                    best_pmf = pmf.clone();
                }
            }
            if f_contracted < simplex[worst].0.min(f_reflected) {
                simplex[worst] = (f_contracted, contracted);
            } else {
                // shrink everything toward the best vertex
                let anchor = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = entry
                        .1
                        .iter()
                        .zip(&anchor)
                        .map(|(v, a)| a + 0.5 * (v - a))
                        .collect();
                    let (f_shrunk, p_shrunk) = evaluate(&shrunk)?;
                    if f_shrunk < best_cost {
                        if let Some(pmf) = &p_shrunk {
                            best_cost = f_shrunk;
                            best_pmf = pmf.clone();
                        }
                    }
                    *entry = (f_shrunk, shrunk);
                }
            }
        }

        if previous_best - best_cost < REFINE_IMPROVEMENT_TOL {
            stall += 1;
        } else {
            stall = 0;
        }
    }
    Ok((best_pmf, best_cost))
}
