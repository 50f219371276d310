//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured margin. Run with
//! `cargo test -p ndsense-cli --test acceptance -- --nocapture`.

use approx::assert_abs_diff_eq;
use ndsense::decision::helstrom_binary_pure;
use ndsense::fock::{
    enumerate_leak_patterns, mean_energy, ModeLayout, ModePattern, PhotonPmf,
};
use ndsense::gram::{
    gram_diagonal_mass, gram_for_leak, leak_support, lossless_gram, nds_bound_binary,
    sub_ensembles,
};
use ndsense::oracle::{make_nds_state, nds_signal_idler_energy, oracle_min_error};
use ndsense::phase::{
    boundary_local_minima, interior_extremum, nds_pe_closed_form, signal_only_pe, scene,
    triangle_lattice, TrianglePoint,
};
use ndsense::scene::{amplitude, Image, Pixel, SceneSpec};
use ndsense::verify::{
    idler_independence_suite, mixing_concavity_suite, orthogonal_equality_suite,
    nds_attainment_suite, bound_inequality_suite, VerifyConfig,
};
use num_complex::Complex64;
use std::time::{Duration, Instant};

const SEED: u64 = 20260810;

fn cfg(trials: u32) -> VerifyConfig {
    VerifyConfig {
        seed: SEED,
        trials,
        tol: None,
    }
}

fn budget(started: Instant, limit: Duration, label: &str) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < limit,
        "{label} took {elapsed:?}, budget {limit:?}"
    );
}

#[test]
fn criterion_01_closed_form_matches_gram_machinery() {
    let started = Instant::now();
    let lattice = triangle_lattice(0.01).unwrap();
    let mut worst: f64 = 0.0;
    for &eta in &[0.2, 0.6, 0.9] {
        let scene = scene(eta).unwrap();
        for pt in &lattice {
            let closed = nds_pe_closed_form(pt, eta);
            let machinery = nds_bound_binary(&scene, &pt.pmf()).unwrap();
            worst = worst.max((closed - machinery).abs());
        }
    }
    assert!(worst < 1e-12, "max |closed - machinery| = {worst}");
    budget(started, Duration::from_secs(10), "criterion 1");
    println!("[PASS] criterion 1: closed form = Gram machinery on 0.01 lattice, max diff {worst:.3e}");
}

#[test]
fn criterion_02_nds_states_attain_the_bound() {
    let started = Instant::now();
    let report = nds_attainment_suite(&cfg(50));
    assert!(
        report.passed(),
        "NDS equality failures: {:?}",
        report.failures.first()
    );
    budget(started, Duration::from_secs(30), "criterion 2");
    println!(
        "[PASS] criterion 2: oracle(NDS) = bound within 1e-9 on {} random scenes",
        report.trials
    );
}

#[test]
fn criterion_03_lower_bound_inequality_holds() {
    let started = Instant::now();
    let report = bound_inequality_suite(&cfg(100));
    assert!(
        report.passed(),
        "bound violations: {:?}",
        report.failures.first()
    );
    budget(started, Duration::from_secs(60), "criterion 3");
    println!(
        "[PASS] criterion 3: oracle >= bound - 1e-9 for {} random input states, zero violations",
        report.trials
    );
}

#[test]
fn criterion_04_left_panel_anchors() {
    let eta = 0.6;
    let scene = scene(eta).unwrap();

    // identically 1/2 on the p0 axis
    for k in 0..=100 {
        let p0 = k as f64 / 100.0;
        let pt = TrianglePoint::new(p0, 0.0, 1.0 - p0).unwrap();
        assert!((nds_pe_closed_form(&pt, eta) - 0.5).abs() <= 1e-12);
    }

    // boundary local minima confirmed by edge finite differences
    let minima = boundary_local_minima(eta).unwrap();
    assert_eq!(minima[0].0, TrianglePoint::new(0.0, 0.5, 0.5).unwrap());
    assert_eq!(minima[1].0, TrianglePoint::new(0.5, 0.5, 0.0).unwrap());

    // the interior extremum: location, stationarity, and value
    let pt = interior_extremum(eta).unwrap();
    assert_abs_diff_eq!(pt.p0(), 1.84 / 7.68, epsilon = 1e-12);
    assert_abs_diff_eq!(pt.p1(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(pt.p2(), 1.0 / 3.84, epsilon = 1e-12);

    let h = 1e-5;
    let f = |p0: f64, p1: f64| {
        nds_pe_closed_form(&TrianglePoint::new(p0, p1, 1.0 - p0 - p1).unwrap(), eta)
    };
    let g0 = (f(pt.p0() + h, pt.p1()) - f(pt.p0() - h, pt.p1())) / (2.0 * h);
    let g1 = (f(pt.p0(), pt.p1() + h) - f(pt.p0(), pt.p1() - h)) / (2.0 * h);
    let grad_norm = (g0 * g0 + g1 * g1).sqrt();
    assert!(grad_norm < 1e-6, "gradient norm {grad_norm}");

    let closed = nds_pe_closed_form(&pt, eta);
    assert_abs_diff_eq!(closed, 0.0256584, epsilon = 5e-8);
    let machinery = nds_bound_binary(&scene, &pt.pmf()).unwrap();
    assert_abs_diff_eq!(machinery, closed, epsilon = 1e-9);
    let state = make_nds_state(scene.layout(), &pt.pmf()).unwrap();
    let simulated = oracle_min_error(&state, &scene).unwrap();
    assert_abs_diff_eq!(simulated, closed, epsilon = 1e-9);

    println!(
        "[PASS] criterion 4: p0-axis at 1/2, boundary minima verified, extremum value {closed:.7} grad {grad_norm:.2e}"
    );
}

#[test]
fn criterion_05_signal_only_never_beats_nds() {
    let started = Instant::now();
    let eta = 0.6;
    let n = 100;
    let step = 0.01;
    let mut min_difference = f64::INFINITY;
    let mut worst_edge: f64 = 0.0;
    for i in 0..=n {
        let p0 = i as f64 * step;
        for j in 0..=(n - i) {
            let p1 = j as f64 * step;
            let pt = TrianglePoint::new(p0, p1, (1.0 - p0 - p1).max(0.0)).unwrap();
            let difference = signal_only_pe(&pt, eta).unwrap() - nds_pe_closed_form(&pt, eta);
            min_difference = min_difference.min(difference);
            if j == 0 || i + j == n {
                worst_edge = worst_edge.max(difference.abs());
            }
        }
    }
    assert!(
        min_difference >= -1e-9,
        "signal-only dipped below NDS by {min_difference}"
    );
    assert!(worst_edge < 1e-6, "edge difference {worst_edge}");
    budget(started, Duration::from_secs(120), "criterion 5");
    println!(
        "[PASS] criterion 5: signal-only - NDS >= {min_difference:.2e} on the lattice, edges within {worst_edge:.2e}"
    );
}

#[test]
fn criterion_06_idler_independence() {
    let report = idler_independence_suite(&cfg(50));
    assert!(
        report.passed(),
        "idler dependence detected: {:?}",
        report.failures.first()
    );
    println!(
        "[PASS] criterion 6: sub-ensemble data idler-independent within 1e-12 over {} trials",
        report.trials
    );
}

#[test]
fn criterion_07_mixing_properties() {
    let concavity = mixing_concavity_suite(&cfg(100));
    assert!(
        concavity.passed(),
        "concavity failures: {:?}",
        concavity.failures.first()
    );
    let embedding = orthogonal_equality_suite(&cfg(100));
    assert!(
        embedding.passed(),
        "orthogonal-equality failures: {:?}",
        embedding.failures.first()
    );
    println!(
        "[PASS] criterion 7: concavity ({} trials), orthogonal equality and block-POVM attainment ({} trials)",
        concavity.trials, embedding.trials
    );
}

#[test]
fn criterion_08_lossless_reduction() {
    let single = scene(1.0).unwrap();
    let multi = SceneSpec::new(
        ModeLayout::new(vec![1, 2]).unwrap(),
        vec![
            Image::new(vec![
                Pixel::new(1.0, 0.3).unwrap(),
                Pixel::new(1.0, 1.9).unwrap(),
            ]),
            Image::new(vec![
                Pixel::new(1.0, 2.4).unwrap(),
                Pixel::new(1.0, 0.0).unwrap(),
            ]),
        ],
        vec![0.3, 0.7],
    )
    .unwrap();
    let single_pmf = PhotonPmf::single_mode(&[0.2, 0.5, 0.3]).unwrap();
    let multi_pmf = PhotonPmf::new(vec![
        (ModePattern::new(vec![0, 0, 0]), 0.25),
        (ModePattern::new(vec![1, 0, 1]), 0.5),
        (ModePattern::new(vec![0, 2, 0]), 0.25),
    ])
    .unwrap();

    for (scene, pmf) in [(&single, &single_pmf), (&multi, &multi_pmf)] {
        let subs = sub_ensembles(scene, pmf).unwrap();
        let zero = ModePattern::zeros(scene.layout().total_modes());
        for sub in &subs {
            if sub.leak == zero {
                assert!((sub.lambda - 1.0).abs() <= 1e-12, "lambda_0 = {}", sub.lambda);
            } else {
                assert!(sub.lambda.abs() <= 1e-12);
            }
        }
        let closed = lossless_gram(scene, pmf).unwrap();
        let general = gram_for_leak(scene, pmf, &zero).unwrap().gram;
        let worst = (&closed - &general)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "gram mismatch {worst}");

        let overlap = closed[(0, 1)]
            / Complex64::new((closed[(0, 0)].re * closed[(1, 1)].re).sqrt(), 0.0);
        let bound = nds_bound_binary(scene, pmf).unwrap();
        let pure = helstrom_binary_pure(scene.priors()[0], scene.priors()[1], overlap);
        assert!((bound - pure).abs() <= 1e-12);
    }
    println!("[PASS] criterion 8: lossless scenes reduce to the single zero-leak Gram term");
}

#[test]
fn criterion_09_unitarity_and_mass() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(SEED);
    for _ in 0..25 {
        let layout = if rng.random::<bool>() {
            ModeLayout::single_pixel(2).unwrap()
        } else {
            ModeLayout::new(vec![1, 1]).unwrap()
        };
        let scene = SceneSpec::new(
            layout.clone(),
            vec![
                Image::new(
                    (0..layout.pixel_count())
                        .map(|_| Pixel::new(rng.random(), rng.random::<f64>() * std::f64::consts::TAU).unwrap())
                        .collect(),
                ),
                Image::new(
                    (0..layout.pixel_count())
                        .map(|_| Pixel::new(rng.random(), rng.random::<f64>() * std::f64::consts::TAU).unwrap())
                        .collect(),
                ),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();

        // per-(m, n) unitarity of the transition amplitudes
        for _ in 0..4 {
            let n = ModePattern::new(vec![rng.random_range(0..4), rng.random_range(0..4)]);
            for m in 0..2 {
                let total: f64 = enumerate_leak_patterns(&n)
                    .iter()
                    .map(|l| amplitude(&scene, m, &n, l).unwrap().norm_sqr())
                    .sum();
                assert!((total - 1.0).abs() <= 1e-12, "unitarity defect {total}");
            }
        }

        // diagonal mass and leak weights over a random pmf
        let patterns = [
            ModePattern::new(vec![0, 0]),
            ModePattern::new(vec![1, 0]),
            ModePattern::new(vec![0, 2]),
            ModePattern::new(vec![2, 1]),
        ];
        let raw: Vec<f64> = (0..patterns.len()).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let pmf = PhotonPmf::new(
            patterns
                .iter()
                .cloned()
                .zip(raw.iter().map(|w| w / total))
                .collect(),
        )
        .unwrap();
        for mass in gram_diagonal_mass(&scene, &pmf).unwrap() {
            assert!((mass - 1.0).abs() <= 1e-10, "diagonal mass {mass}");
        }
        let lambda_total: f64 = sub_ensembles(&scene, &pmf)
            .unwrap()
            .iter()
            .map(|s| s.lambda)
            .sum();
        assert!((lambda_total - 1.0).abs() <= 1e-10, "lambda sum {lambda_total}");
        assert_eq!(leak_support(&pmf).len(), 7); // down-closure of the support above
    }
    println!("[PASS] criterion 9: unitarity, unit diagonal mass, and unit leak weight verified");
}

#[test]
fn criterion_10_energy_bookkeeping() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(SEED ^ 0xe9e);
    for trial in 0..50 {
        let len = rng.random_range(1..=4usize);
        let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let pmf = PhotonPmf::new(
            (0..len)
                .map(|k| (ModePattern::new(vec![k as u32]), raw[k] / total))
                .collect(),
        )
        .unwrap();
        // exact equality, not approximate
        assert_eq!(
            nds_signal_idler_energy(&pmf),
            2.0 * mean_energy(&pmf),
            "trial {trial}"
        );
    }
    let extremum = interior_extremum(0.6).unwrap().pmf();
    assert_abs_diff_eq!(mean_energy(&extremum), 1.020833, epsilon = 1e-6);
    println!("[PASS] criterion 10: Fock-idler NDS energy = 2 x signal energy exactly; extremum mean energy 1.020833");
}

#[test]
fn criterion_11_sweep_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |path: &std::path::Path| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_ndsense"))
            .args([
                "sweep-triangle",
                "--eta",
                "0.6",
                "--grid-step",
                "0.01",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{out:?}");
        std::fs::read(path).unwrap()
    };
    let first = run(&dir.path().join("a.csv"));
    let second = run(&dir.path().join("b.csv"));
    assert_eq!(first, second, "sweep output is not byte-identical");
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 5152); // header + 5151 rows
    println!("[PASS] criterion 11: identical sweep invocations produce byte-identical files");
}
