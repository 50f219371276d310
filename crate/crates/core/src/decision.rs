//! Minimum-cost measurement theory on finite-dimensional ensembles:
//! Helstrom binary bounds, the square-root-measurement upper bound, ensemble
//! mixtures, orthogonal-ensemble tests, and the block POVM that attains
//! additivity of cost over orthogonal sub-ensembles.

use crate::linalg::{
    eigh, hermitian_deviation, hermitian_part, max_abs, min_eigenvalue, outer, recompose,
    trace_product_re, trace_re, CMat, CVec,
};
use crate::scene::{normalize_probability_vector, CostFunction};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Tolerance for Hermiticity, positivity, and completeness checks on
/// density matrices and POVM elements.
pub const OPERATOR_TOL: f64 = 1e-10;

/// A prior-weighted set of density matrices over one shared ordered basis.
///
/// A state may be absent (`None`) only when its prior is exactly zero; such
/// hypotheses contribute nothing to any cost. Absent states arise from
/// mixing ensembles in which a hypothesis has zero mixed prior.
#[derive(Clone, Debug)]
pub struct Ensemble {
    priors: Vec<f64>,
    states: Vec<Option<CMat>>,
    dim: usize,
}

impl Ensemble {
    pub fn new(priors: Vec<f64>, states: Vec<DMatrix<Complex64>>) -> Result<Self> {
        Self::with_absent(priors, states.into_iter().map(Some).collect())
    }

    pub fn with_absent(priors: Vec<f64>, states: Vec<Option<DMatrix<Complex64>>>) -> Result<Self> {
        if priors.len() != states.len() || states.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} priors for {} states",
                priors.len(),
                states.len()
            )));
        }
        let priors = normalize_probability_vector(priors)?;
        let dim = states
            .iter()
            .flatten()
            .map(|s| s.nrows())
            .next()
            .ok_or_else(|| Error::InvalidState("ensemble with no present state".into()))?;
        for (m, state) in states.iter().enumerate() {
            match state {
                Some(rho) => {
                    if rho.nrows() != dim || rho.ncols() != dim {
                        return Err(Error::DimensionMismatch(format!(
                            "state {m} is {}x{}, expected {dim}x{dim}",
                            rho.nrows(),
                            rho.ncols()
                        )));
                    }
                    let dev = hermitian_deviation(rho);
                    if dev > OPERATOR_TOL {
                        return Err(Error::NotHermitian(dev));
                    }
                    let lo = min_eigenvalue(rho);
                    if lo < -OPERATOR_TOL {
                        return Err(Error::NotPsd(lo));
                    }
                    if (trace_re(rho) - 1.0).abs() > OPERATOR_TOL {
                        return Err(Error::InvalidState(format!(
                            "state {m} has trace {}",
                            trace_re(rho)
                        )));
                    }
                }
                None => {
                    if priors[m] != 0.0 {
                        return Err(Error::InvalidState(format!(
                            "state {m} is absent but has prior {}",
                            priors[m]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            priors,
            states,
            dim,
        })
    }

    /// Ensemble of pure states given as unit vectors.
    pub fn from_pure(priors: Vec<f64>, vectors: &[CVec]) -> Result<Self> {
        Self::new(priors, vectors.iter().map(outer).collect())
    }

    /// Number of hypotheses.
    pub fn arity(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn state(&self, m: usize) -> Option<&DMatrix<Complex64>> {
        self.states[m].as_ref()
    }

    pub fn states(&self) -> &[Option<DMatrix<Complex64>>] {
        &self.states
    }

    /// `pi_m rho_m`, zero when the state is absent.
    fn weighted_state(&self, m: usize) -> CMat {
        match &self.states[m] {
            Some(rho) => rho * Complex64::new(self.priors[m], 0.0),
            None => CMat::zeros(self.dim, self.dim),
        }
    }
}

/// A positive-operator-valued measure with labeled outcomes.
///
/// Elements are Hermitian PSD and sum to the identity — or, for a POVM
/// assembled on a direct sum of blocks, to the projector onto that subspace.
#[derive(Clone, Debug)]
pub struct Povm {
    outcomes: Vec<String>,
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(outcomes: Vec<String>, elements: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let dim = elements
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidInput("empty POVM".into()))?;
        Self::new_on_span(outcomes, elements, &CMat::identity(dim, dim))
    }

    /// POVM complete on a subspace: elements must sum to `span`, an
    /// orthogonal projector.
    pub fn new_on_span(
        outcomes: Vec<String>,
        elements: Vec<DMatrix<Complex64>>,
        span: &DMatrix<Complex64>,
    ) -> Result<Self> {
        if outcomes.len() != elements.len() || elements.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for {} elements",
                outcomes.len(),
                elements.len()
            )));
        }
        let dim = elements[0].nrows();
        let mut total = CMat::zeros(dim, dim);
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch("ragged POVM elements".into()));
            }
            let dev = hermitian_deviation(e);
            if dev > OPERATOR_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let lo = min_eigenvalue(e);
            if lo < -OPERATOR_TOL {
                return Err(Error::NotPsd(lo));
            }
            total += e;
        }
        if max_abs(&(span * span - span)) > OPERATOR_TOL {
            return Err(Error::InvalidInput("span is not a projector".into()));
        }
        if max_abs(&(&total - span)) > OPERATOR_TOL {
            return Err(Error::InvalidInput(
                "POVM elements do not sum to the completeness operator".into(),
            ));
        }
        Ok(Self { outcomes, elements })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn elements(&self) -> &[DMatrix<Complex64>] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }
}

/// Trace norm `||a||_1` of a Hermitian matrix: the sum of the absolute
/// values of its eigenvalues. The input is symmetrized first to absorb
/// roundoff.
pub fn trace_norm(a: &DMatrix<Complex64>) -> f64 {
    eigh(a).0.into_iter().map(f64::abs).sum()
}

/// Row-major Re/Im pair array, the JSON form used by debugging dumps.
pub fn matrix_to_json(a: &DMatrix<Complex64>) -> serde_json::Value {
    serde_json::Value::Array(
        (0..a.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..a.ncols())
                        .map(|j| serde_json::json!([a[(i, j)].re, a[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues in
/// `[-1e-10, 0)` are clamped to zero; anything lower is an error.
/// Eigenvalues below `1e-14` times the largest are treated as zero, so
/// roundoff in an exactly singular input cannot surface as `sqrt(noise)`.
pub fn psd_sqrt(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (vals, vecs) = eigh(a);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if lo < -OPERATOR_TOL {
        return Err(Error::NotPsd(lo));
    }
    let floor = 1e-14 * vals.iter().copied().fold(0.0, f64::max);
    Ok(recompose(
        &vals,
        &vecs,
        |x| if x > floor { x.sqrt() } else { 0.0 },
    ))
}

/// Minimum error probability for discriminating two pure states with priors
/// `pi1`, `pi2` and inner-product `overlap`:
/// `(1 - sqrt(1 - 4 pi1 pi2 |overlap|^2)) / 2`.
///
/// `|overlap|` is clamped to 1 to absorb roundoff.
pub fn helstrom_binary_pure(pi1: f64, pi2: f64, overlap: impl Into<Complex64>) -> f64 {
    let gamma = overlap.into().norm().min(1.0);
    let radicand = (1.0 - 4.0 * pi1 * pi2 * gamma * gamma).max(0.0);
    (1.0 - radicand.sqrt()) / 2.0
}

/// Minimum error probability for a binary ensemble:
/// `(1 - ||pi1 rho1 - pi2 rho2||_1) / 2`.
pub fn helstrom_binary_mixed(ens: &Ensemble) -> Result<f64> {
    if ens.arity() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: ens.arity(),
        });
    }
    let delta = ens.weighted_state(0) - ens.weighted_state(1);
    Ok(((1.0 - trace_norm(&delta)) / 2.0).max(0.0))
}

/// Average cost of a fixed measurement (no minimization):
/// `sum_x sum_m pi_m tr(rho_m E_x) C(m, x)`.
pub fn bayes_cost(ens: &Ensemble, povm: &Povm, cost: &CostFunction) -> Result<f64> {
    if cost.hypothesis_count() != ens.arity() {
        return Err(Error::DimensionMismatch(format!(
            "cost has {} hypotheses, ensemble has {}",
            cost.hypothesis_count(),
            ens.arity()
        )));
    }
    if povm.outcomes() != cost.outcomes() {
        return Err(Error::DimensionMismatch(
            "POVM outcomes do not match cost outcomes".into(),
        ));
    }
    if povm.dim() != ens.dim() {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimension {} vs ensemble dimension {}",
            povm.dim(),
            ens.dim()
        )));
    }
    let mut total = 0.0;
    for (m, state) in ens.states().iter().enumerate() {
        let Some(rho) = state else { continue };
        for (x, element) in povm.elements().iter().enumerate() {
            total += ens.priors()[m] * trace_product_re(rho, element) * cost.cost(m, x);
        }
    }
    Ok(total)
}

/// The measurement achieving [`helstrom_binary_mixed`]: project onto the
/// positive eigenspace of `pi1 rho1 - pi2 rho2` for outcome "1", the rest
/// for outcome "2".
pub fn helstrom_povm(ens: &Ensemble) -> Result<Povm> {
    if ens.arity() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: ens.arity(),
        });
    }
    let delta = ens.weighted_state(0) - ens.weighted_state(1);
    let (vals, vecs) = eigh(&delta);
    let positive = recompose(&vals, &vecs, |x| if x > 0.0 { 1.0 } else { 0.0 });
    let rest = CMat::identity(ens.dim(), ens.dim()) - &positive;
    Povm::new(vec!["1".into(), "2".into()], vec![positive, rest])
}

/// Error probability of the square-root (pretty good) measurement on a
/// pure-state ensemble with the given normalized Gram matrix:
/// `1 - sum_m ((W^{1/2})_mm)^2` with `W_ij = sqrt(pi_i pi_j) gram_ij`.
///
/// An upper bound on the minimum error probability; tight for two
/// equiprobable pure states.
pub fn srm_error_probability(gram: &DMatrix<Complex64>, priors: &[f64]) -> Result<f64> {
    let m = priors.len();
    if gram.nrows() != m || gram.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} Gram matrix for {} priors",
            gram.nrows(),
            gram.ncols(),
            m
        )));
    }
    let dev = hermitian_deviation(gram);
    if dev > OPERATOR_TOL {
        return Err(Error::NotHermitian(dev));
    }
    for i in 0..m {
        if (gram[(i, i)].re - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "Gram diagonal entry {i} is {}, expected 1 (normalized states)",
                gram[(i, i)].re
            )));
        }
    }
    let priors = normalize_probability_vector(priors.to_vec())?;
    let weighted = CMat::from_fn(m, m, |i, j| {
        gram[(i, j)] * Complex64::new((priors[i] * priors[j]).sqrt(), 0.0)
    });
    let root = psd_sqrt(&weighted)?;
    let correct: f64 = (0..m).map(|i| root[(i, i)].re.powi(2)).sum();
    Ok((1.0 - correct).clamp(0.0, 1.0))
}

/// Mixture of ensembles: priors `sum_l w_l pi_m^(l)` and states given by the
/// weight-and-prior-weighted averages. A hypothesis whose mixed prior is
/// zero gets an absent state.
pub fn mix_ensembles(weights: &[f64], ensembles: &[Ensemble]) -> Result<Ensemble> {
    if weights.len() != ensembles.len() || ensembles.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} ensembles",
            weights.len(),
            ensembles.len()
        )));
    }
    let weights = normalize_probability_vector(weights.to_vec())?;
    let arity = ensembles[0].arity();
    let dim = ensembles[0].dim();
    if ensembles
        .iter()
        .any(|e| e.arity() != arity || e.dim() != dim)
    {
        return Err(Error::DimensionMismatch(
            "ensembles must share arity and basis".into(),
        ));
    }
    let mut priors = Vec::with_capacity(arity);
    let mut states = Vec::with_capacity(arity);
    for m in 0..arity {
        let mixed_prior: f64 = weights
            .iter()
            .zip(ensembles)
            .map(|(w, e)| w * e.priors()[m])
            .sum();
        if mixed_prior == 0.0 {
            priors.push(0.0);
            states.push(None);
            continue;
        }
        let mut acc = CMat::zeros(dim, dim);
        for (w, e) in weights.iter().zip(ensembles) {
            let coeff = w * e.priors()[m];
            if coeff == 0.0 {
                continue;
            }
            let rho = e
                .state(m)
                .ok_or_else(|| Error::InvalidState(format!("state {m} absent with prior > 0")))?;
            acc += rho * Complex64::new(coeff, 0.0);
        }
        acc.unscale_mut(mixed_prior);
        priors.push(mixed_prior);
        states.push(Some(acc));
    }
    Ensemble::with_absent(priors, states)
}

/// True iff every cross product `rho_m rho_m'` between the two ensembles
/// vanishes within tolerance, i.e. the support spaces are orthogonal.
pub fn ensembles_orthogonal(e1: &Ensemble, e2: &Ensemble) -> Result<bool> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch(
            "ensembles live on different bases".into(),
        ));
    }
    for a in e1.states().iter().flatten() {
        for b in e2.states().iter().flatten() {
            if max_abs(&(a * b)) >= OPERATOR_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Assemble `E_x = sum_l E_x^(l) Pi_l` from pairwise-orthogonal block
/// projectors and per-block POVMs sharing one outcome set.
///
/// The result is a valid POVM on the direct sum of the blocks; states
/// supported there see exactly the per-block measurements.
pub fn block_povm(projectors: &[DMatrix<Complex64>], sub_povms: &[Povm]) -> Result<Povm> {
    if projectors.len() != sub_povms.len() || projectors.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} projectors for {} sub-POVMs",
            projectors.len(),
            sub_povms.len()
        )));
    }
    let dim = projectors[0].nrows();
    let outcomes = sub_povms[0].outcomes().to_vec();
    for (pi, povm) in projectors.iter().zip(sub_povms) {
        if pi.nrows() != dim || pi.ncols() != dim || povm.dim() != dim {
            return Err(Error::DimensionMismatch(
                "projectors and sub-POVMs must share one basis".into(),
            ));
        }
        if povm.outcomes() != outcomes {
            return Err(Error::DimensionMismatch(
                "sub-POVMs must share one outcome set".into(),
            ));
        }
        let dev = hermitian_deviation(pi);
        if dev > OPERATOR_TOL {
            return Err(Error::NotHermitian(dev));
        }
        if max_abs(&(pi * pi - pi)) > OPERATOR_TOL {
            return Err(Error::InvalidInput("projector is not idempotent".into()));
        }
    }
    for i in 0..projectors.len() {
        for j in i + 1..projectors.len() {
            if max_abs(&(&projectors[i] * &projectors[j])) > OPERATOR_TOL {
                return Err(Error::InvalidInput(format!(
                    "projectors {i} and {j} are not orthogonal"
                )));
            }
        }
    }
    let span = projectors
        .iter()
        .fold(CMat::zeros(dim, dim), |acc, pi| acc + pi);
    let elements: Vec<CMat> = (0..outcomes.len())
        .map(|x| {
            projectors
                .iter()
                .zip(sub_povms)
                .fold(CMat::zeros(dim, dim), |acc, (pi, povm)| {
                    acc + &povm.elements()[x] * pi
                })
        })
        // symmetrize: each term is Hermitian up to roundoff when the
        // sub-POVM respects its block
        .map(|e| hermitian_part(&e))
        .collect();
    Povm::new_on_span(outcomes, elements, &span)
}
