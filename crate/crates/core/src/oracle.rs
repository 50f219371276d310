//! Independent brute-force verification engine.
//!
//! Builds the explicit purification of a pure signal+idler input, traces out
//! the environment leak by leak, and computes costs from the resulting
//! density matrices. Nothing here shares a code path with the Gram-side
//! machinery in [`crate::gram`], which is the point: the two must agree.
//!
//! The environment is never materialized as a state space. Leak patterns
//! index an exact orthogonal decomposition of the output, so the partial
//! trace is a finite sum of outer products of explicit vectors, and the
//! basis only covers return patterns reachable from the pmf support.

use crate::decision::{helstrom_binary_mixed, matrix_to_json, Ensemble};
use crate::fock::{total_photons, ModeLayout, ModePattern, PhotonPmf};
use crate::gram::{leak_support_of, SubEnsembleGram};
use crate::linalg::{outer, CMat, CVec};
use crate::scene::{pattern_phase, transition_weight, SceneSpec};
use crate::{Error, Result, PROB_TOL};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// A pure input state `sum_n c_n |phi_n>_I |n>_S` with explicit idler
/// vectors in a shared `idler_dim`-dimensional idler space.
#[derive(Clone, Debug)]
pub struct PureInputState {
    layout: ModeLayout,
    terms: Vec<(ModePattern, Complex64, DVector<Complex64>)>,
    idler_dim: usize,
}

impl PureInputState {
    /// Build from `(pattern, amplitude, idler vector)` terms. Amplitudes
    /// must be normalized within 1e-12 (then renormalized exactly), idler
    /// vectors unit within 1e-12.
    pub fn new(
        layout: ModeLayout,
        mut terms: Vec<(ModePattern, Complex64, DVector<Complex64>)>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidState("state with empty support".into()));
        }
        for (pattern, _, _) in &terms {
            layout.check_pattern(pattern)?;
        }
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicatePattern);
        }
        let idler_dim = terms[0].2.len();
        if idler_dim == 0 {
            return Err(Error::InvalidState("idler space must have dimension >= 1".into()));
        }
        let total: f64 = terms.iter().map(|(_, c, _)| c.norm_sqr()).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized(total));
        }
        let scale = total.sqrt().recip();
        for (_, c, idler) in &mut terms {
            *c *= scale;
            if idler.len() != idler_dim {
                return Err(Error::DimensionMismatch(
                    "idler vectors live in one shared space".into(),
                ));
            }
            let norm = idler.norm();
            if (norm - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidState(format!(
                    "idler vector norm {norm} outside the 1e-12 tolerance"
                )));
            }
            idler.unscale_mut(norm);
        }
        Ok(Self {
            layout,
            terms,
            idler_dim,
        })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[(ModePattern, Complex64, DVector<Complex64>)] {
        &self.terms
    }

    pub fn idler_dim(&self) -> usize {
        self.idler_dim
    }

    /// The signal photon pmf `p_n = |c_n|^2`.
    pub fn pmf(&self) -> PhotonPmf {
        PhotonPmf::new(
            self.terms
                .iter()
                .map(|(n, c, _)| (n.clone(), c.norm_sqr()))
                .collect(),
        )
        .expect("amplitudes are normalized")
    }

    /// Replay/debug dump: patterns, amplitudes, and idler vectors as Re/Im
    /// pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "idler_dim": self.idler_dim,
            "terms": self.terms.iter().map(|(n, c, idler)| serde_json::json!({
                "pattern": n.counts(),
                "amplitude": [c.re, c.im],
                "idler": idler.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// The NDS state for a pmf: real amplitudes `sqrt(p_n)` and one standard
/// basis idler vector per support pattern, so the idlers are exactly
/// orthonormal. Interpreting idler basis vector `k` as the Fock pattern of
/// support entry `k` realizes the construction whose signal+idler energy is
/// twice the signal energy.
pub fn make_nds_state(layout: &ModeLayout, pmf: &PhotonPmf) -> Result<PureInputState> {
    let dim = pmf.support().len();
    let terms = pmf
        .support()
        .iter()
        .enumerate()
        .map(|(k, (n, p))| {
            let mut idler = DVector::zeros(dim);
            idler[k] = Complex64::new(1.0, 0.0);
            (n.clone(), Complex64::new(p.sqrt(), 0.0), idler)
        })
        .collect();
    PureInputState::new(layout.clone(), terms)
}

/// A signal-only state (no usable idler): amplitudes `sqrt(p_n)` with every
/// idler vector equal, realized in a one-dimensional idler space.
pub fn make_signal_only_state(layout: &ModeLayout, pmf: &PhotonPmf) -> Result<PureInputState> {
    let terms = pmf
        .support()
        .iter()
        .map(|(n, p)| {
            (
                n.clone(),
                Complex64::new(p.sqrt(), 0.0),
                DVector::from_element(1, Complex64::new(1.0, 0.0)),
            )
        })
        .collect();
    PureInputState::new(layout.clone(), terms)
}

/// Seeded random input with the given pmf: amplitudes `sqrt(p_n)` times
/// random unit phases, idler vectors drawn as normalized complex Gaussian
/// vectors. Deterministic given the seed.
pub fn random_input(
    seed: u64,
    layout: &ModeLayout,
    pmf: &PhotonPmf,
    idler_dim: usize,
) -> Result<PureInputState> {
    if idler_dim == 0 {
        return Err(Error::InvalidInput("idler dimension must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let terms = pmf
        .support()
        .iter()
        .map(|(n, p)| {
            let phase: f64 = rng.random::<f64>() * TAU;
            let c = Complex64::from_polar(p.sqrt(), phase);
            let idler = loop {
                let v = DVector::from_fn(idler_dim, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                let norm = v.norm();
                if norm > 1e-6 {
                    break v.unscale(norm);
                }
            };
            (n.clone(), c, idler)
        })
        .collect();
    PureInputState::new(layout.clone(), terms)
}

/// A density matrix over an explicit ordered basis of
/// `(idler index, return pattern)` pairs, idler index major.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: Vec<(usize, ModePattern)>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn basis(&self) -> &[(usize, ModePattern)] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Debug dump: basis labels plus the row-major Re/Im pair array.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "basis": self.basis.iter()
                .map(|(i, n)| serde_json::json!([i, n.counts()]))
                .collect::<Vec<_>>(),
            "matrix": matrix_to_json(&self.matrix),
        })
    }
}

/// Output of [`propagate`]: the reduced return+idler density matrix and the
/// unnormalized conditional vectors, one per leak pattern in canonical
/// order.
#[derive(Clone, Debug)]
pub struct Propagated {
    pub rho: DensityMatrix,
    pub leak_vectors: Vec<(ModePattern, DVector<Complex64>)>,
}

/// Send the signal modes of `state` through image `image_index` and trace
/// out the environment: `rho_m = sum_l |psi_m^(l)><psi_m^(l)|` with
/// `|psi_m^(l)> = sum_{n >= l} c_n A_m^(n:l) |phi_n>|n - l>`.
pub fn propagate(
    state: &PureInputState,
    scene: &SceneSpec,
    image_index: usize,
) -> Result<Propagated> {
    if state.layout() != scene.layout() {
        return Err(Error::InvalidScene(
            "state layout does not match scene layout".into(),
        ));
    }
    if image_index >= scene.hypothesis_count() {
        return Err(Error::InvalidInput(format!(
            "image index {image_index} out of range"
        )));
    }
    let returns = leak_support_of(state.terms().iter().map(|(n, _, _)| n));
    let r_count = returns.len();
    let d_i = state.idler_dim();
    let dim = d_i * r_count;

    let mut leak_vectors = Vec::with_capacity(r_count);
    for l in &returns {
        let mut v = CVec::zeros(dim);
        for (n, c, idler) in state.terms() {
            if !l.le(n) {
                continue;
            }
            let amp = Complex64::from_polar(
                transition_weight(scene, image_index, n, l).sqrt(),
                pattern_phase(scene, image_index, n),
            );
            let coeff = c * amp;
            let returned = n.minus(l)?;
            let r_idx = returns
                .binary_search(&returned)
                .expect("return pattern is in the down-closure");
            for i in 0..d_i {
                v[i * r_count + r_idx] += coeff * idler[i];
            }
        }
        leak_vectors.push((l.clone(), v));
    }

    let mut rho = CMat::zeros(dim, dim);
    for (_, v) in &leak_vectors {
        rho += outer(v);
    }
    let basis = (0..d_i)
        .flat_map(|i| returns.iter().map(move |r| (i, r.clone())))
        .collect();
    Ok(Propagated {
        rho: DensityMatrix { basis, matrix: rho },
        leak_vectors,
    })
}

/// Exact minimum error probability of the state on a binary scene, by
/// propagating both hypotheses and applying the Helstrom formula to the
/// explicit density matrices.
pub fn oracle_min_error(state: &PureInputState, scene: &SceneSpec) -> Result<f64> {
    if scene.hypothesis_count() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: scene.hypothesis_count(),
        });
    }
    let rho0 = propagate(state, scene, 0)?.rho;
    let rho1 = propagate(state, scene, 1)?.rho;
    let ens = Ensemble::new(scene.priors().to_vec(), vec![rho0.matrix, rho1.matrix])?;
    helstrom_binary_mixed(&ens)
}

/// Sub-ensemble data recomputed from the explicit conditional vectors, plus
/// the largest cross-leak overlap `|<psi_m^(l)|psi_m'^(l')>|` over `l != l'`
/// (zero, up to roundoff, exactly when the input is NDS).
#[derive(Clone, Debug)]
pub struct OracleSubEnsembles {
    pub per_leak: Vec<SubEnsembleGram>,
    pub max_cross_leak_overlap: f64,
}

pub fn sub_ensemble_vectors(
    state: &PureInputState,
    scene: &SceneSpec,
) -> Result<OracleSubEnsembles> {
    let m_count = scene.hypothesis_count();
    let per_image: Vec<Propagated> = (0..m_count)
        .map(|m| propagate(state, scene, m))
        .collect::<Result<_>>()?;
    let leak_count = per_image[0].leak_vectors.len();

    let mut per_leak = Vec::with_capacity(leak_count);
    for k in 0..leak_count {
        let mut gram = CMat::zeros(m_count, m_count);
        for i in 0..m_count {
            let vi = &per_image[i].leak_vectors[k].1;
            gram[(i, i)] = Complex64::new(vi.norm_squared(), 0.0);
            for j in i + 1..m_count {
                let g = vi.dotc(&per_image[j].leak_vectors[k].1);
                gram[(i, j)] = g;
                gram[(j, i)] = g.conj();
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
        per_leak.push(SubEnsembleGram {
            leak: per_image[0].leak_vectors[k].0.clone(),
            lambda,
            cond_priors,
            gram,
        });
    }

    let mut max_cross: f64 = 0.0;
    for k in 0..leak_count {
        for k2 in k + 1..leak_count {
            for vi in per_image.iter().map(|p| &p.leak_vectors[k].1) {
                for vj in per_image.iter().map(|p| &p.leak_vectors[k2].1) {
                    max_cross = max_cross.max(vi.dotc(vj).norm());
                }
            }
        }
    }
    Ok(OracleSubEnsembles {
        per_leak,
        max_cross_leak_overlap: max_cross,
    })
}

/// Total signal+idler energy of the Fock-idler NDS realization of `pmf`:
/// the idler for support pattern `n` is the idler-side Fock state `|n>`, so
/// each term contributes `p_n (n + n)`. Equals twice the mean signal energy
/// exactly.
pub fn nds_signal_idler_energy(pmf: &PhotonPmf) -> f64 {
    pmf.support()
        .iter()
        .map(|(n, p)| {
            let photons = f64::from(total_photons(n));
            p * (photons + photons)
        })
        .sum()
}
