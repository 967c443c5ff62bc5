//! Acceptance gate. One test per criterion; each prints a PASS/FAIL line
//! with its measurement and wall time, then asserts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lava_core::activation::{stack_critical, ActivationDataset};
use lava_core::continuum::{ad_score, MetricColumn, MetricTable, Orientation};
use lava_core::granularity::{
    adjusted_mutual_information, build_knn_graph, constrained_ward_hac, ConnectivityGraph, KnnMode,
};
use lava_core::kde::Bandwidth;
use lava_core::morphometrics::{
    fractal_dimension, save_lavamask, vessel_density, VesselMap, DEFAULT_MIN_BOX,
};
use lava_core::oracles::{oracle_hac_inertia, oracle_svr_qp};
use lava_core::probing::{
    mutual_information_discrete, mutual_information_kde, probe_dataset, rfe_select, sanity_check,
    train_epsilon_svr, CriticalNeuronSet, RfeConfig, SvrConfig, Verdict,
};
use lava_core::synthetic::{generate_synthetic_activations, SynthSpec};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let within = elapsed <= budget;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    // straight to the handle so the line shows without --nocapture
    let _ = writeln!(
        std::io::stderr(),
        "[{verdict}] criterion {id:>2} {name}: {detail} ({:.2}s, budget {:.0}s)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(
        within,
        "criterion {id} over budget: {elapsed:?} > {budget:?}"
    );
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

fn select_sets(outcomes: Vec<lava_core::probing::RfeOutcome>) -> Vec<CriticalNeuronSet> {
    outcomes.into_iter().map(|o| o.selection).collect()
}

#[test]
fn criterion_01_svr_matches_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_rel = 0.0f64;
    let mut worst_feas = 0.0f64;
    let mut failures = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=3);
        let c = [1.0, 10.0, 100.0][case % 3];
        let eps = [0.0, 0.1, 0.5][(case / 3) % 3];
        let x = normal_matrix(&mut rng, n, m);
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let cfg = SvrConfig {
            c,
            epsilon: eps,
            tol: 1e-9,
            standardize: false,
            ..SvrConfig::default()
        };
        let model = train_epsilon_svr(x.view(), &y, &cfg).unwrap();
        let oracle = oracle_svr_qp(x.view(), &y, c, eps).unwrap();
        let rel = (model.objective - oracle.objective).abs() / oracle.objective.abs().max(1.0);
        let sum: f64 = model.dual_coefs.iter().sum();
        let over_box = model
            .dual_coefs
            .iter()
            .map(|b| (b.abs() - c).max(0.0))
            .fold(0.0, f64::max);
        let feas = sum.abs().max(over_box).max(model.max_violation);
        worst_rel = worst_rel.max(rel);
        worst_feas = worst_feas.max(feas);
        if rel > 1e-4 || feas > cfg.tol || !model.converged {
            failures += 1;
        }
    }
    let detail = format!(
        "{failures}/50 mismatches, worst relative objective gap {worst_rel:.2e}, worst feasibility gap {worst_feas:.2e}"
    );
    report(
        1,
        "SVR-oracle equivalence",
        failures == 0,
        &detail,
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_02_ward_matches_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let graph = ConnectivityGraph::complete(8);
    let mut mismatches = 0;
    let mut worst_ratio_err = 0.0f64;
    for _ in 0..100 {
        let x = normal_matrix(&mut rng, 8, 4);
        let (tree, assignment) = constrained_ward_hac(x.view(), &graph, 3).unwrap();
        let oracle = oracle_hac_inertia(x.view(), &graph, 3).unwrap();
        let ours: Vec<(usize, usize)> = tree.merges.iter().map(|m| (m.left, m.right)).collect();
        let theirs: Vec<(usize, usize)> = oracle.merges.iter().map(|m| (m.left, m.right)).collect();
        if ours != theirs || assignment.labels != oracle.labels {
            mismatches += 1;
        }
        for (m, o) in tree.merges.iter().zip(&oracle.merges) {
            worst_ratio_err =
                worst_ratio_err.max((m.cost - 2.0 * o.delta).abs() / o.delta.max(1e-12));
        }
    }
    let detail = format!(
        "{mismatches}/100 sequence mismatches, worst |cost - 2 delta| / delta {worst_ratio_err:.1e}"
    );
    report(
        2,
        "Ward-oracle equivalence",
        mismatches == 0 && worst_ratio_err < 1e-9,
        &detail,
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_03_merges_respect_graph() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut instances, mut draws, mut violations, mut cross) = (0, 0, 0, 0);
    while instances < 100 {
        draws += 1;
        let x = normal_matrix(&mut rng, 30, 2);
        let graph = build_knn_graph(x.view(), 3, KnnMode::FeatureSpace, None).unwrap();
        if graph.components().len() != 1 {
            continue;
        }
        instances += 1;
        let (tree, _) = constrained_ward_hac(x.view(), &graph, 1).unwrap();
        cross += tree.cross_component.len();
        for m in &tree.merges {
            let a = tree.members(m.left);
            let b: BTreeSet<usize> = tree.members(m.right).into_iter().collect();
            let adjacent = a
                .iter()
                .any(|&i| graph.neighbors(i).iter().any(|j| b.contains(j)));
            if !adjacent {
                violations += 1;
            }
        }
    }
    let detail = format!(
        "100 connected graphs ({draws} drawn), {violations} non-adjacent merges, {cross} cross-component merges"
    );
    report(
        3,
        "constraint compliance",
        violations == 0 && cross == 0,
        &detail,
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_04_knn_sparsity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let x = normal_matrix(&mut rng, 200, 10);
    let graph = build_knn_graph(x.view(), 5, KnnMode::FeatureSpace, None).unwrap();
    let study = graph.directed_sparsity();
    let mut exact = study == 1.0 - 5.0 / 200.0 && study == 0.975;
    for (k, n) in [(1, 10), (3, 30), (7, 50), (50, 50)] {
        let x = normal_matrix(&mut rng, n, 3);
        let g = build_knn_graph(x.view(), k, KnnMode::FeatureSpace, None).unwrap();
        exact &= g.directed_sparsity() == 1.0 - k as f64 / n as f64;
    }
    let detail = format!("k=5, N=200 sparsity {study}");
    report(
        4,
        "k-NNG sparsity",
        exact,
        &detail,
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_05_ensemble_arithmetic() {
    let start = Instant::now();
    let rfe = RfeConfig {
        n_select: 20,
        step: 1000,
    };
    let mut datasets = Vec::new();
    let mut selections = Vec::new();
    for fold in 0..5u32 {
        let spec = SynthSpec {
            n_layers: 7,
            layer_width: 30,
            seed: 500 + fold as u64,
            ..SynthSpec::default()
        };
        let ds = generate_synthetic_activations(&spec)
            .unwrap()
            .dataset
            .with_fold(fold);
        selections.push(select_sets(
            probe_dataset(&ds, &SvrConfig::default(), &rfe).unwrap(),
        ));
        datasets.push(ds);
    }
    let stacked = stack_critical(&datasets, &selections).unwrap();
    let total = stacked.matrix.ncols();
    let mut per_layer = std::collections::BTreeMap::new();
    for col in &stacked.columns {
        *per_layer.entry(col.neuron.layer.clone()).or_insert(0usize) += 1;
    }
    let even = per_layer.len() == 7 && per_layer.values().all(|&c| c == 100);
    let detail = format!(
        "{total} stacked columns, per layer {:?}",
        per_layer.values().collect::<Vec<_>>()
    );
    report(
        5,
        "ensemble arithmetic",
        total == 700 && even,
        &detail,
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_06_end_to_end_recovery() {
    let start = Instant::now();
    let rfe = RfeConfig {
        n_select: 3,
        step: 1000,
    };
    let mut good = 0;
    let mut amis = Vec::new();
    for seed in 0..50 {
        let data = generate_synthetic_activations(&SynthSpec {
            seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let ds = data.dataset.with_fold(0);
        let sets = select_sets(probe_dataset(&ds, &SvrConfig::default(), &rfe).unwrap());
        let stacked = stack_critical(std::slice::from_ref(&ds), &[sets]).unwrap();
        let graph = build_knn_graph(stacked.matrix.view(), 5, KnnMode::FeatureSpace, None).unwrap();
        let (_, assignment) = constrained_ward_hac(stacked.matrix.view(), &graph, 6).unwrap();
        let ami = adjusted_mutual_information(&data.truth.subgroups, &assignment.labels).unwrap();
        if ami >= 0.9 {
            good += 1;
        }
        amis.push(ami);
    }
    let min = amis.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!("{good}/50 seeds with AMI >= 0.9 (min {min:.3})");
    report(
        6,
        "end-to-end synthetic recovery",
        good >= 45,
        &detail,
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_07_rfe_recovers_planted_columns() {
    let start = Instant::now();
    let rfe = RfeConfig {
        n_select: 3,
        step: 1,
    };
    let mut good = 0;
    for seed in 0..100 {
        let spec = SynthSpec {
            n_layers: 1,
            layer_width: 50,
            n_informative: 3,
            seed: 7000 + seed,
            ..SynthSpec::default()
        };
        let data = generate_synthetic_activations(&spec).unwrap();
        let layer = &data.dataset.layers()[0];
        let outcome =
            rfe_select(layer, data.dataset.labels(), &SvrConfig::default(), &rfe).unwrap();
        let chosen: BTreeSet<usize> = outcome
            .selection
            .neurons
            .iter()
            .map(|n| n.neuron.index)
            .collect();
        let planted: BTreeSet<usize> = data.truth.informative[&layer.layer]
            .iter()
            .copied()
            .collect();
        if chosen == planted {
            good += 1;
        }
    }
    let detail = format!("{good}/100 seeds selected every planted column (N = 120, 50 columns)");
    report(
        7,
        "RFE planted-feature recovery",
        good >= 95,
        &detail,
        start.elapsed(),
        Duration::from_secs(30),
    );
}

fn sierpinski(side: usize, cell: usize) -> VesselMap {
    VesselMap::from_fn(side, side, |x, y| ((x / cell) & (y / cell)) == 0).unwrap()
}

#[test]
fn criterion_08_fractal_dimension() {
    let start = Instant::now();
    let square = fractal_dimension(
        &VesselMap::from_fn(1000, 1000, |_, _| true).unwrap(),
        DEFAULT_MIN_BOX,
    )
    .unwrap();
    let line = fractal_dimension(
        &VesselMap::from_fn(1024, 1024, |_, y| y == 512).unwrap(),
        DEFAULT_MIN_BOX,
    )
    .unwrap();
    // 1024 pixels with 4-pixel cells: 8 levels of subdivision
    let tri = fractal_dimension(&sierpinski(1024, 4), DEFAULT_MIN_BOX).unwrap();
    let target = 3f64.log2();
    let pass = (1.95..=2.0).contains(&square.fitted_dimension)
        && square.r2 >= 0.99
        && (0.95..=1.05).contains(&line.fitted_dimension)
        && line.r2 >= 0.999
        && (tri.fitted_dimension - target).abs() <= 0.1
        && tri.r2 >= 0.99;
    let detail = format!(
        "square {:.4} (r2 {:.4}), line {:.4} (r2 {:.4}), Sierpinski {:.4} (r2 {:.4})",
        square.fitted_dimension,
        square.r2,
        line.fitted_dimension,
        line.r2,
        tri.fitted_dimension,
        tri.r2
    );
    report(
        8,
        "fractal dimension",
        pass,
        &detail,
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_09_vessel_density_exact() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..200), rng.random_range(1..200));
        let p: f64 = rng.random();
        let mut map = VesselMap::new(w, h).unwrap();
        let mut on = 0usize;
        for y in 0..h {
            for x in 0..w {
                if rng.random_bool(p) {
                    map.set(x, y, true);
                    on += 1;
                }
            }
        }
        if vessel_density(&map) != on as f64 / (w * h) as f64 {
            mismatches += 1;
        }
    }
    let detail = format!("{mismatches}/1000 masks differ from popcount/area");
    report(
        9,
        "vessel density exactness",
        mismatches == 0,
        &detail,
        start.elapsed(),
        Duration::from_secs(2),
    );
}

/// Mutual information of the balanced mixture `N(-mu, 1)`, `N(mu, 1)` with
/// its component label, by Simpson quadrature on [-mu-12, mu+12].
fn mixture_mi_bits(mu: f64) -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |x: f64| {
        let p = 0.5 * phi(x + mu) + 0.5 * phi(x - mu);
        if p > 0.0 {
            -p * p.log2()
        } else {
            0.0
        }
    };
    let (a, b, n) = (-mu - 12.0, mu + 12.0, 20_000usize);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let marginal = s * h / 3.0;
    let conditional = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2();
    marginal - conditional
}

#[test]
fn criterion_10_mutual_information() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut negatives = 0;
    for _ in 0..1000 {
        let n = rng.random_range(20..300);
        let levels = rng.random_range(1..20);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        y[0] = 0;
        y[1] = 1;
        let bins = rng.random_range(2..=20);
        let mi = mutual_information_discrete(&z, &y, bins).unwrap();
        if !(mi.value_bits >= 0.0) {
            negatives += 1;
        }
    }

    let y: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
    let z: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let identical = mutual_information_discrete(&z, &y, 2).unwrap().value_bits;

    let n = 10_000;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let null = mutual_information_discrete(&z, &y, lava_core::probing::default_bins(n))
        .unwrap()
        .value_bits;

    let mu = 1.0;
    let n = 4000;
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let z: Vec<f64> = y
        .iter()
        .map(|&l| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g + if l == 1 { mu } else { -mu }
        })
        .collect();
    let kde = mutual_information_kde(&z, &y, Bandwidth::Silverman)
        .unwrap()
        .value_bits;
    let truth = mixture_mi_bits(mu);

    let pass = negatives == 0
        && (identical - 1.0).abs() <= 1e-9
        && null < 0.02
        && (kde - truth).abs() <= 0.1;
    let detail = format!(
        "{negatives} negative fuzz estimates, identical pair {identical:.12} bits, null {null:.4} bits, KDE {kde:.4} vs quadrature {truth:.4} bits"
    );
    report(
        10,
        "MI properties",
        pass,
        &detail,
        start.elapsed(),
        Duration::from_secs(30),
    );
}

fn shuffled_labels(ds: &ActivationDataset, rng: &mut ChaCha8Rng) -> ActivationDataset {
    let mut labels = ds.labels().to_vec();
    labels.shuffle(rng);
    ActivationDataset::new(ds.layers().to_vec(), labels, ds.sample_ids().to_vec()).unwrap()
}

#[test]
fn criterion_11_sanity_check() {
    let start = Instant::now();
    let rfe = RfeConfig {
        n_select: 3,
        step: 1000,
    };
    let svr = SvrConfig::default();
    let mut passes = 0;
    let mut identical_ok = true;
    for seed in 0..100u64 {
        let data = generate_synthetic_activations(&SynthSpec {
            seed: 1100 + seed,
            ..SynthSpec::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trained = select_sets(probe_dataset(&data.dataset, &svr, &rfe).unwrap());
        let randomized = select_sets(
            probe_dataset(&shuffled_labels(&data.dataset, &mut rng), &svr, &rfe).unwrap(),
        );
        if sanity_check(&trained, &randomized).unwrap().verdict == Verdict::Pass {
            passes += 1;
        }
        if seed < 5 {
            let same = sanity_check(&trained, &trained).unwrap();
            identical_ok &=
                same.verdict == Verdict::Fail && same.layers.iter().all(|l| l.jaccard == 1.0);
        }
    }
    let detail = format!(
        "{passes}/100 trained-vs-shuffled runs PASS, identical runs J = 1 and FAIL: {identical_ok}"
    );
    report(
        11,
        "sanity-check behavior",
        passes >= 90 && identical_ok,
        &detail,
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn health_table(rows: &[[f64; 3]]) -> MetricTable {
    let names = lava_core::continuum::default_score_columns();
    let columns = (0..3)
        .map(|j| MetricColumn {
            name: names[j].clone(),
            orientation: Orientation::HigherIsBetter,
            values: rows.iter().map(|r| Some(r[j])).collect(),
        })
        .collect();
    MetricTable::new((0..rows.len()).map(|i| format!("s{i}")).collect(), columns).unwrap()
}

#[test]
fn criterion_12_ad_score_endpoints_and_monotonicity() {
    let start = Instant::now();
    let names = lava_core::continuum::default_score_columns();
    let ends = ad_score(&health_table(&[[1.0; 3], [0.0; 3]]), &names).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let mut violations = 0;
    for _ in 0..1000 {
        let base: [f64; 3] = std::array::from_fn(|_| rng.random());
        let j = rng.random_range(0..3);
        let mut raised = base;
        raised[j] = rng.random_range(base[j]..=1.0);
        let s = ad_score(&health_table(&[base, raised]), &names).unwrap();
        if s[1] > s[0] || !(0.0..=1.0).contains(&s[0]) {
            violations += 1;
        }
    }
    let pass = ends == vec![0.0, 1.0] && violations == 0;
    let detail = format!(
        "healthy {}, worst {}, {violations}/1000 monotonicity violations",
        ends[0], ends[1]
    );
    report(
        12,
        "AD-score endpoints and monotonicity",
        pass,
        &detail,
        start.elapsed(),
        Duration::from_secs(1),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
                continue;
            }
            let mut bytes = fs::read(&path).unwrap();
            if path.file_name().is_some_and(|n| n == "run.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("timestamp").unwrap();
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Runs `lava` with `args` twice into the same output directory and returns
/// whether the artifacts matched, with the slower wall time.
fn run_twice(work: &Path, args: &[&str], out: &str) -> (bool, Duration) {
    let mut snaps = Vec::new();
    let mut slowest = Duration::ZERO;
    for _ in 0..2 {
        let out_dir = work.join(out);
        if out_dir.exists() {
            fs::remove_dir_all(&out_dir).unwrap();
        }
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_lava"))
            .current_dir(work)
            .args(args)
            .args(["--out", out])
            .output()
            .unwrap();
        slowest = slowest.max(start.elapsed());
        assert!(
            status.status.success(),
            "lava {args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        snaps.push(snapshot(&out_dir));
    }
    (!snaps[0].is_empty() && snaps[0] == snaps[1], slowest)
}

#[test]
fn criterion_13_cli_reproducibility() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let work = tmp.path();
    fs::create_dir(work.join("masks")).unwrap();
    for (name, map) in [
        (
            "square",
            VesselMap::from_fn(256, 256, |x, y| x < 200 && y < 200).unwrap(),
        ),
        (
            "line",
            VesselMap::from_fn(256, 256, |_, y| y == 100).unwrap(),
        ),
        ("gasket", sierpinski(256, 1)),
    ] {
        save_lavamask(&map, &work.join("masks").join(format!("{name}.lmsk"))).unwrap();
    }

    let steps: [(&str, Vec<&str>, &str); 8] = [
        (
            "synth",
            vec!["synth", "--seed", "13", "--shuffled-copy"],
            "syn",
        ),
        (
            "synth-lavabin",
            vec!["synth", "--seed", "13", "--format", "lavabin"],
            "synbin",
        ),
        (
            "probe",
            vec![
                "probe",
                "--folds",
                "syn/activations.csv",
                "--folds",
                "synbin/activations.lavabin",
                "--p",
                "3",
            ],
            "probe",
        ),
        (
            "probe-shuffled",
            vec![
                "probe",
                "--folds",
                "syn/activations_shuffled.csv",
                "--p",
                "3",
            ],
            "probe_rand",
        ),
        (
            "cluster",
            vec![
                "cluster",
                "--folds",
                "syn/activations.csv",
                "--folds",
                "synbin/activations.lavabin",
                "--selections",
                "probe",
                "--clusters",
                "6",
                "--reference-labels",
                "syn/subgroups.csv",
            ],
            "clu",
        ),
        (
            "score",
            vec![
                "score",
                "--input",
                "clu/assignment.csv",
                "--metrics",
                "syn/metrics.csv",
                "--orientations",
                "syn/orientations.json",
            ],
            "score",
        ),
        (
            "sanity",
            vec!["sanity", "--trained", "probe", "--randomized", "probe_rand"],
            "sanity",
        ),
        ("morph", vec!["morph", "--input", "masks"], "morph"),
    ];
    let mut mismatched = Vec::new();
    let mut slowest = Duration::ZERO;
    for (name, args, out) in &steps {
        let (same, t) = run_twice(work, args, out);
        slowest = slowest.max(t);
        if !same {
            mismatched.push(*name);
        }
    }
    let detail = format!(
        "{}/{} subcommand runs byte-identical (mismatched: {mismatched:?}), slowest single run {:.2}s",
        steps.len() - mismatched.len(),
        steps.len(),
        slowest.as_secs_f64()
    );
    report(
        13,
        "CLI reproducibility",
        mismatched.is_empty() && slowest <= Duration::from_secs(5),
        &detail,
        start.elapsed(),
        Duration::from_secs(60),
    );
}
