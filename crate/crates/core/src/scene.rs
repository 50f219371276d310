//! The image and channel model: pixels, images, priors, cost functions, and
//! the beam-splitter transition amplitudes with their leak-pattern
//! bookkeeping.
//!
//! Each pixel of each image acts as a beam splitter of transmittance `eta`
//! and phase `theta` on the modes interrogating it, with the environment in
//! vacuum. Everything downstream reduces to the transition amplitude between
//! an input pattern `n` and a leaked pattern `l`.

use crate::fock::{ModeLayout, ModePattern, PhotonPmf};
use crate::{Error, Result, PROB_TOL};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// One pixel: transmittance (or reflectance) `eta` and phase shift `theta`,
/// stored reduced to `[0, 2*pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PixelRepr", into = "PixelRepr")]
pub struct Pixel {
    eta: f64,
    theta: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct PixelRepr {
    eta: f64,
    theta: f64,
}

impl Pixel {
    pub fn new(eta: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
            return Err(Error::InvalidScene(format!(
                "transmittance {eta} outside [0, 1]"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidScene("non-finite phase".into()));
        }
        let mut theta = theta.rem_euclid(TAU);
        if theta >= TAU {
            theta = 0.0;
        }
        Ok(Self { eta, theta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl TryFrom<PixelRepr> for Pixel {
    type Error = Error;
    fn try_from(r: PixelRepr) -> Result<Self> {
        Self::new(r.eta, r.theta)
    }
}

impl From<Pixel> for PixelRepr {
    fn from(p: Pixel) -> Self {
        Self {
            eta: p.eta,
            theta: p.theta,
        }
    }
}

/// A pixelated mask: one [`Pixel`] per scene pixel, in layout order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Image {
    pixels: Vec<Pixel>,
}

impl Image {
    pub fn new(pixels: Vec<Pixel>) -> Self {
        Self { pixels }
    }

    /// Uniform image: every pixel identical.
    pub fn uniform(pixel_count: usize, eta: f64, theta: f64) -> Result<Self> {
        Ok(Self::new(vec![Pixel::new(eta, theta)?; pixel_count]))
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }
}

/// The discrimination problem: a mode layout, `M >= 2` candidate images, and
/// their prior probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    layout: ModeLayout,
    images: Vec<Image>,
    priors: Vec<f64>,
}

impl SceneSpec {
    pub fn new(layout: ModeLayout, images: Vec<Image>, priors: Vec<f64>) -> Result<Self> {
        if images.len() < 2 {
            return Err(Error::InvalidScene("need at least two images".into()));
        }
        if priors.len() != images.len() {
            return Err(Error::InvalidScene(format!(
                "{} priors for {} images",
                priors.len(),
                images.len()
            )));
        }
        for image in &images {
            if image.pixels().len() != layout.pixel_count() {
                return Err(Error::InvalidScene(format!(
                    "image has {} pixels, layout has {}",
                    image.pixels().len(),
                    layout.pixel_count()
                )));
            }
        }
        let priors = normalize_probability_vector(priors)?;
        Ok(Self {
            layout,
            images,
            priors,
        })
    }

    /// Number of hypotheses `M`.
    pub fn hypothesis_count(&self) -> usize {
        self.images.len()
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// True when every pixel of every image has `eta == 1`.
    pub fn is_lossless(&self) -> bool {
        self.images
            .iter()
            .all(|im| im.pixels().iter().all(|px| px.eta() == 1.0))
    }

    pub(crate) fn check_inputs(&self, pmf: &PhotonPmf) -> Result<()> {
        if pmf.mode_count() != self.layout.total_modes() {
            return Err(Error::PatternLengthMismatch {
                expected: self.layout.total_modes(),
                got: pmf.mode_count(),
            });
        }
        Ok(())
    }
}

pub(crate) fn normalize_probability_vector(mut v: Vec<f64>) -> Result<Vec<f64>> {
    for p in &mut v {
        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(p) || !p.is_finite() {
            return Err(Error::ProbabilityOutOfRange(*p));
        }
        *p = p.max(0.0);
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NotNormalized(sum));
    }
    for p in &mut v {
        *p /= sum;
    }
    Ok(v)
}

/// A finite observation space and the cost `C(m, x)` of deciding `x` when
/// image `m` is true.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRepr", into = "CostRepr")]
pub struct CostFunction {
    outcomes: Vec<String>,
    costs: Vec<Vec<f64>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct CostRepr {
    outcomes: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl CostFunction {
    pub fn new(outcomes: Vec<String>, costs: Vec<Vec<f64>>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("empty observation space".into()));
        }
        if costs.is_empty() {
            return Err(Error::InvalidInput("empty cost matrix".into()));
        }
        for row in &costs {
            if row.len() != outcomes.len() {
                return Err(Error::DimensionMismatch(format!(
                    "cost row has {} entries for {} outcomes",
                    row.len(),
                    outcomes.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("non-finite cost entry".into()));
            }
        }
        Ok(Self { outcomes, costs })
    }

    /// The minimum-probability-of-error cost: `X = {1..M}`,
    /// `C(m, x) = 1 - delta_{m,x}`.
    pub fn error_probability(hypotheses: usize) -> Self {
        let outcomes = (1..=hypotheses).map(|m| m.to_string()).collect();
        let costs = (0..hypotheses)
            .map(|m| {
                (0..hypotheses)
                    .map(|x| if m == x { 0.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        Self { outcomes, costs }
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    /// `C(m, x)` by index.
    pub fn cost(&self, m: usize, x: usize) -> f64 {
        self.costs[m][x]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn hypothesis_count(&self) -> usize {
        self.costs.len()
    }

    /// True iff this is `error_probability(M)` for the matching `M`.
    pub fn is_error_probability(&self) -> bool {
        *self == Self::error_probability(self.costs.len())
    }
}

impl TryFrom<CostRepr> for CostFunction {
    type Error = Error;
    fn try_from(r: CostRepr) -> Result<Self> {
        Self::new(r.outcomes, r.matrix)
    }
}

impl From<CostFunction> for CostRepr {
    fn from(c: CostFunction) -> Self {
        Self {
            outcomes: c.outcomes,
            matrix: c.costs,
        }
    }
}

/// On-disk scene description: the scene plus an optional cost function
/// (absent means minimum error probability).
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFile {
    pub scene: SceneSpec,
    pub cost: Option<CostFunction>,
}

#[derive(Serialize, Deserialize)]
struct SceneRepr {
    layout: ModeLayout,
    images: Vec<Image>,
    priors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<CostFunction>,
}

impl SceneFile {
    pub fn new(scene: SceneSpec, cost: Option<CostFunction>) -> Result<Self> {
        if let Some(c) = &cost {
            if c.hypothesis_count() != scene.hypothesis_count() {
                return Err(Error::DimensionMismatch(format!(
                    "cost matrix has {} rows for {} images",
                    c.hypothesis_count(),
                    scene.hypothesis_count()
                )));
            }
        }
        Ok(Self { scene, cost })
    }

    /// The cost in effect: the stored one, or minimum error probability.
    pub fn effective_cost(&self) -> CostFunction {
        self.cost
            .clone()
            .unwrap_or_else(|| CostFunction::error_probability(self.scene.hypothesis_count()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let repr: SceneRepr = serde_json::from_str(json)?;
        Self::new(
            SceneSpec::new(repr.layout, repr.images, repr.priors)?,
            repr.cost,
        )
    }

    pub fn to_json(&self) -> String {
        let repr = SceneRepr {
            layout: self.scene.layout.clone(),
            images: self.scene.images.clone(),
            priors: self.scene.priors.clone(),
            cost: self.cost.clone(),
        };
        serde_json::to_string_pretty(&repr).expect("scene serializes")
    }
}

/// Exact binomial coefficient, converted to `f64` at the end. Panics
/// rather than wrapping if the intermediate product leaves `u128`
/// (patterns with >130 photons in one mode are outside the supported
/// scale).
fn binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(n - k + i)
            .expect("binomial coefficient exceeds u128")
            / i;
    }
    acc as f64
}

/// Squared magnitude of the transition amplitude, `|A_m^(n:l)|^2`.
///
/// Phase-free, so it only depends on the transmittances. Uses the `0^0 = 1`
/// convention so `eta` at 0 or 1 is exact.
pub(crate) fn transition_weight(
    scene: &SceneSpec,
    image_index: usize,
    n: &ModePattern,
    l: &ModePattern,
) -> f64 {
    let image = &scene.images()[image_index];
    let mut weight = 1.0;
    for (p, range) in scene.layout().pixel_ranges().enumerate() {
        let eta = image.pixels()[p].eta();
        for j in range {
            let (nj, lj) = (n.counts()[j], l.counts()[j]);
            weight *= binomial(nj, lj) * eta.powi((nj - lj) as i32) * (1.0 - eta).powi(lj as i32);
        }
    }
    weight
}

/// Phase accumulated by pattern `n` under image `image_index`:
/// `sum_p theta^(p) n^(p)`.
pub(crate) fn pattern_phase(scene: &SceneSpec, image_index: usize, n: &ModePattern) -> f64 {
    let image = &scene.images()[image_index];
    scene
        .layout()
        .pixel_ranges()
        .enumerate()
        .map(|(p, range)| {
            let n_p: u32 = n.counts()[range].iter().sum();
            image.pixels()[p].theta() * f64::from(n_p)
        })
        .sum()
}

fn check_amplitude_args(
    scene: &SceneSpec,
    image_index: usize,
    n: &ModePattern,
    l: &ModePattern,
) -> Result<()> {
    scene.layout().check_pattern(n)?;
    scene.layout().check_pattern(l)?;
    if image_index >= scene.hypothesis_count() {
        return Err(Error::InvalidInput(format!(
            "image index {image_index} out of range"
        )));
    }
    if !l.le(n) {
        return Err(Error::LeakExceedsPattern);
    }
    Ok(())
}

/// Transition amplitude `A_m^(n:l)`: the amplitude for input pattern `n` to
/// leak pattern `l` into the environment under image `m`, the surviving
/// photons picking up the pixel phases.
pub fn amplitude(
    scene: &SceneSpec,
    image_index: usize,
    n: &ModePattern,
    l: &ModePattern,
) -> Result<Complex64> {
    check_amplitude_args(scene, image_index, n, l)?;
    let weight = transition_weight(scene, image_index, n, l);
    let phase = pattern_phase(scene, image_index, n);
    Ok(Complex64::from_polar(weight.sqrt(), phase))
}

/// Probability `lambda_l` that the leaked photon pattern is `l`:
/// `sum_m pi_m sum_{n >= l} p_n |A_m^(n:l)|^2`.
pub fn leak_weight(scene: &SceneSpec, pmf: &PhotonPmf, l: &ModePattern) -> Result<f64> {
    scene.check_inputs(pmf)?;
    scene.layout().check_pattern(l)?;
    let norms = hypothesis_norms(scene, pmf, l);
    Ok(scene
        .priors()
        .iter()
        .zip(&norms)
        .map(|(pi, g)| pi * g)
        .sum())
}

/// Squared norms `<psi_m^(l)|psi_m^(l)>` for each hypothesis.
pub(crate) fn hypothesis_norms(scene: &SceneSpec, pmf: &PhotonPmf, l: &ModePattern) -> Vec<f64> {
    (0..scene.hypothesis_count())
        .map(|m| {
            pmf.support()
                .iter()
                .filter(|(n, _)| l.le(n))
                .map(|(n, p)| p * transition_weight(scene, m, n, l))
                .sum()
        })
        .collect()
}

/// Conditional probability of each hypothesis given leak pattern `l`.
///
/// Fails with [`Error::DegenerateLeakPattern`] when `lambda_l = 0`.
pub fn conditional_priors(scene: &SceneSpec, pmf: &PhotonPmf, l: &ModePattern) -> Result<Vec<f64>> {
    scene.check_inputs(pmf)?;
    scene.layout().check_pattern(l)?;
    let norms = hypothesis_norms(scene, pmf, l);
    let lambda: f64 = scene
        .priors()
        .iter()
        .zip(&norms)
        .map(|(pi, g)| pi * g)
        .sum();
    if lambda <= 0.0 {
        return Err(Error::DegenerateLeakPattern);
    }
    Ok(scene
        .priors()
        .iter()
        .zip(&norms)
        .map(|(pi, g)| pi * g / lambda)
        .collect())
}
