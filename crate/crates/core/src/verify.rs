//! Seeded randomized verification suites: the NDS lower-bound inequality,
//! its attainment by NDS states, idler independence of the sub-ensemble
//! data, the Gram-vs-simulation identity, concavity of minimum cost under
//! mixing, and the constructive block-POVM equality for orthogonal
//! sub-ensembles.
//!
//! Every suite is deterministic given its seed and reports counterexamples
//! with enough serialized input to replay them.

use crate::decision::{
    bayes_cost, block_povm, helstrom_binary_mixed, helstrom_povm, mix_ensembles, Ensemble, Povm,
};
use crate::fock::{ModeLayout, ModePattern, PhotonPmf};
use crate::gram::{gram_for_leak, nds_bound_binary};
use crate::linalg::{eigh, max_abs, outer, CMat, CVec};
use crate::oracle::{
    make_nds_state, oracle_min_error, propagate, random_input, sub_ensemble_vectors,
};
use crate::scene::{CostFunction, Image, Pixel, SceneFile, SceneSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::TAU;

/// Configuration shared by all suites.
#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: u32,
    /// Overrides each suite's default comparison tolerance when set.
    pub tol: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            trials: 100,
            tol: None,
        }
    }
}

/// A failed trial with replayable inputs.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub trial: u32,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub replay: serde_json::Value,
}

/// Outcome of one suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: u32,
    pub failures: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn scene_replay(scene: &SceneSpec, pmf: &PhotonPmf) -> serde_json::Value {
    let scene_json = SceneFile::new(scene.clone(), None)
        .expect("scene file")
        .to_json();
    serde_json::json!({
        "scene": serde_json::from_str::<serde_json::Value>(&scene_json).expect("scene json"),
        "pmf": serde_json::to_value(pmf).expect("pmf json"),
    })
}

/// Random binary scene with `J <= 2` and a random pmf with at most
/// `max_photons` total photons.
fn random_problem(
    rng: &mut ChaCha12Rng,
    equal_priors: bool,
    max_photons: u32,
) -> (SceneSpec, PhotonPmf) {
    let layout = match rng.random_range(0..3) {
        0 => ModeLayout::single_pixel(1),
        1 => ModeLayout::single_pixel(2),
        _ => ModeLayout::new(vec![1, 1]),
    }
    .expect("valid layout");

    let caps = ModePattern::new(vec![max_photons; layout.total_modes()]);
    let candidates: Vec<ModePattern> = crate::fock::enumerate_leak_patterns(&caps)
        .into_iter()
        .filter(|n| crate::fock::total_photons(n) <= max_photons)
        .collect();
    let mut support: Vec<ModePattern> = candidates
        .iter()
        .filter(|_| rng.random::<f64>() < 0.5)
        .cloned()
        .collect();
    if support.is_empty() {
        let pick = rng.random_range(0..candidates.len());
        support.push(candidates[pick].clone());
    }
    let raw: Vec<f64> = (0..support.len())
        .map(|_| rng.random::<f64>() + 1e-3)
        .collect();
    let total: f64 = raw.iter().sum();
    let pmf = PhotonPmf::new(
        support
            .into_iter()
            .zip(raw)
            .map(|(n, w)| (n, w / total))
            .collect(),
    )
    .expect("normalized pmf");

    let pixel_count = layout.pixel_count();
    let image = |rng: &mut ChaCha12Rng| {
        Image::new(
            (0..pixel_count)
                .map(|_| {
                    Pixel::new(rng.random::<f64>(), rng.random::<f64>() * TAU).expect("pixel")
                })
                .collect(),
        )
    };
    let priors = if equal_priors {
        vec![0.5, 0.5]
    } else {
        let a = rng.random::<f64>() * 0.9 + 0.05;
        vec![a, 1.0 - a]
    };
    let scene = SceneSpec::new(layout, vec![image(rng), image(rng)], priors).expect("scene");
    (scene, pmf)
}

fn random_density(rng: &mut ChaCha12Rng, dim: usize) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let g = &a * a.adjoint();
    let trace: f64 = g.diagonal().iter().map(|z| z.re).sum();
    g / Complex64::new(trace, 0.0)
}

fn random_binary_ensemble(rng: &mut ChaCha12Rng, dim: usize) -> Ensemble {
    let a = rng.random::<f64>() * 0.9 + 0.05;
    Ensemble::new(
        vec![a, 1.0 - a],
        vec![random_density(rng, dim), random_density(rng, dim)],
    )
    .expect("random ensemble")
}

/// Random two-outcome projective POVM from the eigenbasis of a random
/// Hermitian matrix, eigenvectors assigned to outcomes round-robin.
fn random_binary_povm(rng: &mut ChaCha12Rng, dim: usize) -> Povm {
    let a = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (_, vectors) = eigh(&(&a + a.adjoint()));
    let mut elements = vec![CMat::zeros(dim, dim), CMat::zeros(dim, dim)];
    for k in 0..dim {
        let v = CVec::from_iterator(dim, vectors.column(k).iter().copied());
        elements[k % 2] += outer(&v);
    }
    Povm::new(vec!["1".into(), "2".into()], elements).expect("projective POVM")
}

/// The NDS lower bound holds for arbitrary pure inputs:
/// `oracle_min_error(state) >= nds_bound_binary(pmf of state) - tol`.
pub fn bound_inequality_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-9);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x7431);
    let mut failures = Vec::new();
    for trial in 0..cfg.trials {
        let (scene, pmf) = random_problem(&mut rng, true, 3);
        let idler_dim = rng.random_range(1..=4);
        let state_seed = rng.random::<u64>();
        let state =
            random_input(state_seed, scene.layout(), &pmf, idler_dim).expect("random state");
        let lhs = oracle_min_error(&state, &scene).expect("oracle");
        let rhs = nds_bound_binary(&scene, &pmf).expect("bound");
        if lhs < rhs - tol {
            let mut replay = scene_replay(&scene, &pmf);
            replay["state"] = state.to_json();
            replay["state_seed"] = state_seed.into();
            failures.push(Counterexample {
                trial,
                description: format!("oracle error {lhs} below NDS bound {rhs}"),
                lhs,
                rhs,
                replay,
            });
        }
    }
    SuiteReport {
        name: "bound-inequality",
        trials: cfg.trials,
        failures,
    }
}

/// NDS states attain the bound: `oracle_min_error(nds) == nds_bound_binary`.
pub fn nds_attainment_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-9);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x2e9d);
    let mut failures = Vec::new();
    for trial in 0..cfg.trials {
        let (scene, pmf) = random_problem(&mut rng, false, 3);
        let state = make_nds_state(scene.layout(), &pmf).expect("nds state");
        let lhs = oracle_min_error(&state, &scene).expect("oracle");
        let rhs = nds_bound_binary(&scene, &pmf).expect("bound");
        if (lhs - rhs).abs() > tol {
            failures.push(Counterexample {
                trial,
                description: format!("NDS oracle error {lhs} != bound {rhs}"),
                lhs,
                rhs,
                replay: scene_replay(&scene, &pmf),
            });
        }
    }
    SuiteReport {
        name: "nds-attainment",
        trials: cfg.trials,
        failures,
    }
}

/// The sub-ensemble data `(lambda_l, pi^(l), G^(l))` is independent of the
/// idler assignment: two random assignments agree entrywise.
pub fn idler_independence_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-12);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x1d1e);
    let mut failures = Vec::new();
    for trial in 0..cfg.trials {
        let (scene, pmf) = random_problem(&mut rng, true, 3);
        let seed_a = rng.random::<u64>();
        let seed_b = rng.random::<u64>();
        let dim_a = rng.random_range(1..=4);
        let dim_b = rng.random_range(1..=4);
        let state_a = random_input(seed_a, scene.layout(), &pmf, dim_a).expect("state a");
        let state_b = random_input(seed_b, scene.layout(), &pmf, dim_b).expect("state b");
        let subs_a = sub_ensemble_vectors(&state_a, &scene).expect("subs a");
        let subs_b = sub_ensemble_vectors(&state_b, &scene).expect("subs b");
        let mut worst: f64 = 0.0;
        for (a, b) in subs_a.per_leak.iter().zip(&subs_b.per_leak) {
            worst = worst.max((a.lambda - b.lambda).abs());
            for m in 0..2 {
                worst = worst.max((a.cond_priors[m] - b.cond_priors[m]).abs());
            }
            worst = worst.max(max_abs(&(&a.gram - &b.gram)));
        }
        if worst > tol {
            let mut replay = scene_replay(&scene, &pmf);
            replay["seeds"] = serde_json::json!([seed_a, seed_b]);
            replay["idler_dims"] = serde_json::json!([dim_a, dim_b]);
            failures.push(Counterexample {
                trial,
                description: format!("sub-ensemble data differs by {worst} across idlers"),
                lhs: worst,
                rhs: tol,
                replay,
            });
        }
    }
    SuiteReport {
        name: "idler-independence",
        trials: cfg.trials,
        failures,
    }
}

/// The simulation-side Gram data matches the formula-side Gram data.
pub fn gram_oracle_identity_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-12);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x6a0b);
    let mut failures = Vec::new();
    for trial in 0..cfg.trials {
        let (scene, pmf) = random_problem(&mut rng, false, 3);
        let seed = rng.random::<u64>();
        let idler_dim = rng.random_range(1..=3);
        let state = random_input(seed, scene.layout(), &pmf, idler_dim).expect("state");
        let subs = sub_ensemble_vectors(&state, &scene).expect("oracle subs");
        let mut worst: f64 = 0.0;
        for sub in &subs.per_leak {
            let formula = gram_for_leak(&scene, &pmf, &sub.leak).expect("gram");
            worst = worst.max((sub.lambda - formula.lambda).abs());
            for m in 0..2 {
                worst = worst.max((sub.cond_priors[m] - formula.cond_priors[m]).abs());
            }
            worst = worst.max(max_abs(&(&sub.gram - &formula.gram)));
        }
        if worst > tol {
            let mut replay = scene_replay(&scene, &pmf);
            replay["state_seed"] = seed.into();
            failures.push(Counterexample {
                trial,
                description: format!("oracle and formula Gram data differ by {worst}"),
                lhs: worst,
                rhs: tol,
                replay,
            });
        }
    }
    SuiteReport {
        name: "gram-oracle-identity",
        trials: cfg.trials,
        failures,
    }
}

/// Concavity of minimum cost under mixing, plus exact linearity of the
/// fixed-measurement cost in the mixture.
pub fn mixing_concavity_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-9);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x11c0);
    let mut failures = Vec::new();
    let error_cost = CostFunction::error_probability(2);
    for trial in 0..cfg.trials {
        let dim = rng.random_range(2..=4);
        let parts = rng.random_range(2..=3);
        let ensembles: Vec<Ensemble> = (0..parts)
            .map(|_| random_binary_ensemble(&mut rng, dim))
            .collect();
        let raw: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mixture = mix_ensembles(&weights, &ensembles).expect("mixture");

        let mixed_cost = helstrom_binary_mixed(&mixture).expect("mixed helstrom");
        let split_cost: f64 = weights
            .iter()
            .zip(&ensembles)
            .map(|(w, e)| w * helstrom_binary_mixed(e).expect("sub helstrom"))
            .sum();
        if mixed_cost < split_cost - tol {
            failures.push(Counterexample {
                trial,
                description: format!(
                    "mixture cost {mixed_cost} below weighted sub-ensemble cost {split_cost}"
                ),
                lhs: mixed_cost,
                rhs: split_cost,
                replay: serde_json::json!({"dim": dim, "weights": weights}),
            });
            continue;
        }

        // fixed measurement: cost is exactly linear in the mixture, and no
        // measurement beats the Helstrom value
        let povm = random_binary_povm(&mut rng, dim);
        let lhs = bayes_cost(&mixture, &povm, &error_cost).expect("mixture cost");
        let rhs: f64 = weights
            .iter()
            .zip(&ensembles)
            .map(|(w, e)| w * bayes_cost(e, &povm, &error_cost).expect("sub cost"))
            .sum();
        if (lhs - rhs).abs() > 1e-10 {
            failures.push(Counterexample {
                trial,
                description: format!("fixed-POVM cost not linear: {lhs} vs {rhs}"),
                lhs,
                rhs,
                replay: serde_json::json!({"dim": dim, "weights": weights}),
            });
        }
        if lhs < mixed_cost - tol {
            failures.push(Counterexample {
                trial,
                description: format!("a POVM beat the Helstrom value: {lhs} < {mixed_cost}"),
                lhs,
                rhs: mixed_cost,
                replay: serde_json::json!({"dim": dim, "weights": weights}),
            });
        }
    }
    SuiteReport {
        name: "mixing-concavity",
        trials: cfg.trials,
        failures,
    }
}

/// Equality for orthogonal sub-ensembles, realized by block embedding, and
/// attained by the assembled block POVM.
pub fn orthogonal_equality_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-9);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x5bed);
    let mut failures = Vec::new();
    let error_cost = CostFunction::error_probability(2);
    for trial in 0..cfg.trials {
        let dim = rng.random_range(2..=3);
        let parts = rng.random_range(2..=3);
        let big = dim * parts;
        let embed = |small: &CMat, block: usize| -> CMat {
            let mut out = CMat::zeros(big, big);
            out.view_mut((block * dim, block * dim), (dim, dim))
                .copy_from(small);
            out
        };
        let ensembles: Vec<Ensemble> = (0..parts)
            .map(|block| {
                let e = random_binary_ensemble(&mut rng, dim);
                let states = (0..2)
                    .map(|m| embed(e.state(m).expect("present"), block))
                    .collect();
                Ensemble::new(e.priors().to_vec(), states).expect("embedded ensemble")
            })
            .collect();
        let raw: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mixture = mix_ensembles(&weights, &ensembles).expect("mixture");

        let lhs = helstrom_binary_mixed(&mixture).expect("mixture helstrom");
        let rhs: f64 = weights
            .iter()
            .zip(&ensembles)
            .map(|(w, e)| w * helstrom_binary_mixed(e).expect("sub helstrom"))
            .sum();
        if (lhs - rhs).abs() > tol {
            failures.push(Counterexample {
                trial,
                description: format!("orthogonal mixture cost {lhs} != weighted sum {rhs}"),
                lhs,
                rhs,
                replay: serde_json::json!({"dim": dim, "parts": parts, "weights": weights}),
            });
            continue;
        }

        // the assembled block POVM achieves the same cost on the mixture
        let projectors: Vec<CMat> = (0..parts)
            .map(|block| embed(&CMat::identity(dim, dim), block))
            .collect();
        let sub_povms: Vec<Povm> = ensembles
            .iter()
            .map(|e| helstrom_povm(e).expect("per-block POVM"))
            .collect();
        let povm = block_povm(&projectors, &sub_povms).expect("block POVM");
        let assembled = bayes_cost(&mixture, &povm, &error_cost).expect("assembled cost");
        if (assembled - rhs).abs() > tol {
            failures.push(Counterexample {
                trial,
                description: format!("block POVM cost {assembled} != weighted sum {rhs}"),
                lhs: assembled,
                rhs,
                replay: serde_json::json!({"dim": dim, "parts": parts, "weights": weights}),
            });
        }
    }
    SuiteReport {
        name: "orthogonal-equality",
        trials: cfg.trials,
        failures,
    }
}

/// Full-pipeline constructive check on NDS scenes: per-leak optimal POVMs
/// assembled into a block POVM realize the NDS bound on the propagated
/// mixture.
pub fn block_povm_constructive_suite(cfg: &VerifyConfig) -> SuiteReport {
    let tol = cfg.tol.unwrap_or(1e-9);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x3b0c);
    let mut failures = Vec::new();
    let error_cost = CostFunction::error_probability(2);
    for trial in 0..cfg.trials {
        let (scene, pmf) = random_problem(&mut rng, false, 2);
        let state = make_nds_state(scene.layout(), &pmf).expect("nds state");
        let outputs: Vec<_> = (0..2)
            .map(|m| propagate(&state, &scene, m).expect("propagate"))
            .collect();

        let mut projectors = Vec::new();
        let mut sub_povms = Vec::new();
        let mut weighted_cost = 0.0;
        for k in 0..outputs[0].leak_vectors.len() {
            let vectors: Vec<&CVec> = outputs.iter().map(|p| &p.leak_vectors[k].1).collect();
            let norms: Vec<f64> = vectors.iter().map(|v| v.norm_squared()).collect();
            let lambda: f64 = scene
                .priors()
                .iter()
                .zip(&norms)
                .map(|(pi, n)| pi * n)
                .sum();
            if lambda == 0.0 {
                continue;
            }
            let cond_priors: Vec<f64> = scene
                .priors()
                .iter()
                .zip(&norms)
                .map(|(pi, n)| pi * n / lambda)
                .collect();
            let states: Vec<Option<CMat>> = vectors
                .iter()
                .zip(&norms)
                .map(|(v, &n)| (n > 0.0).then(|| outer(v) / Complex64::new(n, 0.0)))
                .collect();
            let sub_ensemble = Ensemble::with_absent(cond_priors, states).expect("sub-ensemble");
            weighted_cost += lambda * helstrom_binary_mixed(&sub_ensemble).expect("sub cost");

            // block projector from the span of the conditional vectors
            let dim = vectors[0].len();
            let mut span = CMat::zeros(dim, dim);
            for v in &vectors {
                span += outer(v);
            }
            let (vals, vecs) = eigh(&span);
            let cutoff = 1e-12 * vals.iter().copied().fold(0.0, f64::max).max(1e-300);
            let mut projector = CMat::zeros(dim, dim);
            for (j, &v) in vals.iter().enumerate() {
                if v > cutoff {
                    let q = CVec::from_iterator(dim, vecs.column(j).iter().copied());
                    projector += outer(&q);
                }
            }
            projectors.push(projector);
            sub_povms.push(helstrom_povm(&sub_ensemble).expect("per-leak POVM"));
        }

        let mixture = Ensemble::new(
            scene.priors().to_vec(),
            outputs.iter().map(|p| p.rho.matrix().clone()).collect(),
        )
        .expect("propagated mixture");
        let povm = block_povm(&projectors, &sub_povms).expect("assembled POVM");
        let assembled = bayes_cost(&mixture, &povm, &error_cost).expect("assembled cost");
        let bound = nds_bound_binary(&scene, &pmf).expect("bound");

        let worst = (assembled - weighted_cost).abs().max((assembled - bound).abs());
        if worst > tol {
            failures.push(Counterexample {
                trial,
                description: format!(
                    "assembled POVM cost {assembled} vs per-leak sum {weighted_cost} vs bound {bound}"
                ),
                lhs: assembled,
                rhs: bound,
                replay: scene_replay(&scene, &pmf),
            });
        }
    }
    SuiteReport {
        name: "block-povm-constructive",
        trials: cfg.trials,
        failures,
    }
}

/// Run every suite with the same configuration.
pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteReport> {
    vec![
        bound_inequality_suite(cfg),
        nds_attainment_suite(cfg),
        idler_independence_suite(cfg),
        gram_oracle_identity_suite(cfg),
        mixing_concavity_suite(cfg),
        orthogonal_equality_suite(cfg),
        block_povm_constructive_suite(cfg),
    ]
}
