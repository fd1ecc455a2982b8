//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nutrition_ensembles::data::synth::{BENCHMARK_SIGNAL, SURVEY_MARGINALS};
use nutrition_ensembles::data::{generate_synthetic, GeneratorSpec};
use nutrition_ensembles::ensembles::{
    multiclass_log_loss, softmax_grad_hess, ForestParams, MaxFeatures, ModelKind, TreeParams,
};
use nutrition_ensembles::evaluation::{
    binary_auc, classification_metrics, confusion_matrix, roc_curve_points, stratified_kfold,
    stratified_split, stratified_split_indices, trapezoid_area, ConfusionMatrix,
};
use nutrition_ensembles::pipeline::{
    emit_report, predict_reader, predict_records, run_pipeline, DataSource, ModelSpec,
    PipelineConfig, Preset, SelectionConfig, SelectionMethod,
};
use nutrition_ensembles::resampling::{smote_with_provenance, SmoteParams};
use nutrition_ensembles::selection::{default_sbs_estimator, sequential_backward};
use nutrition_ensembles::{Dataset, FeatureSpec, ModelParams, TrainedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

// Tolerances and thresholds, one place.
const C1_CASES: usize = 1000;
const C1_MAX_N: usize = 50;
const C1_PRF_TOL: f64 = 1e-12;
const C1_MAX_SECONDS: f64 = 5.0;

const C2_DIAGONAL: [u64; 4] = [2155, 2122, 2168, 2200];
const C2_TOTAL: u64 = 8833;
const C2_REPORTED_PCT: f64 = 97.87;
const C2_TOL_PP: f64 = 0.01;

const C3_MAJORITY: usize = 11_041;
const C3_EXPECTED_ROWS: usize = 44_164;
const C3_CONVEX_TOL: f64 = 1e-12;

const C4_RANDOM_N: usize = 2000;
const C4_RANDOM_TOL: f64 = 0.05;
const C4_TRAPEZOID_TOL: f64 = 1e-9;

const C5_POINTS: usize = 100;
const C5_STEP: f64 = 1e-4;
const C5_MAX_ERR: f64 = 1e-6;

const C6_SEEDS: u64 = 20;
const C6_ROWS: usize = 5000;
const C6_TEST_FRACTION: f64 = 0.2;
const C6_MIN_RF_MEDIAN: f64 = 0.95;
const C6_MAX_SECONDS: f64 = 300.0;

const C7_THREADS: [usize; 2] = [1, 8];

const C8_PER_CLASS: usize = 11_041;
const C8_TEST_FRACTION: f64 = 0.2;
const C8_TEST_ROWS: usize = 8833;
const C8_TEST_PER_CLASS: [usize; 4] = [2209, 2208, 2208, 2208];
const C8_FOLDS: usize = 10;

const C9_FROM: usize = 30;
const C9_TO: usize = 19;
const C9_RUNS: u64 = 20;
const C9_MIN_NOISE_FIRST: usize = 16;

const C10_RECORDS: usize = 1000;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn accuracy(model: &TrainedModel, test: &Dataset) -> f64 {
    let pred = model.predict(test);
    let hits = pred.iter().zip(test.labels()).filter(|(p, y)| p == y).count();
    hits as f64 / test.n_rows() as f64
}

// 1. Metric oracle equivalence.

fn criterion_1() -> Outcome {
    let k = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..C1_CASES {
        let n = rng.random_range(1..=C1_MAX_N);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let report = classification_metrics(&confusion_matrix(&y, &p, k).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;

        // Per-sample oracle.
        let hits = (0..n).filter(|&i| y[i] == p[i]).count();
        let acc = hits as f64 / n as f64;
        check(report.accuracy == acc, || {
            format!("case {case}: accuracy {} vs oracle {acc}", report.accuracy)
        })?;
        let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
        let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
        for c in 0..k {
            let mut tp = 0usize;
            let mut pred_c = 0usize;
            let mut true_c = 0usize;
            for i in 0..n {
                if p[i] == c {
                    pred_c += 1;
                }
                if y[i] == c {
                    true_c += 1;
                    if p[i] == c {
                        tp += 1;
                    }
                }
            }
            let prec = if pred_c == 0 { 0.0 } else { tp as f64 / pred_c as f64 };
            let rec = if true_c == 0 { 0.0 } else { tp as f64 / true_c as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            let got = &report.per_class[c];
            for (a, b) in [(got.precision, prec), (got.recall, rec), (got.f1, f1)] {
                worst = worst.max((a - b).abs());
            }
            check(got.support as usize == true_c, || format!("case {case}: support mismatch"))?;
            let w = true_c as f64 / n as f64;
            wp += w * prec;
            wr += w * rec;
            wf += w * f1;
            mp += prec / k as f64;
            mr += rec / k as f64;
            mf += f1 / k as f64;
        }
        for (a, b) in [
            (report.weighted.precision, wp),
            (report.weighted.recall, wr),
            (report.weighted.f1, wf),
            (report.macro_avg.precision, mp),
            (report.macro_avg.recall, mr),
            (report.macro_avg.f1, mf),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= C1_PRF_TOL, || format!("max P/R/F1 deviation {worst:e}"))?;
    check(secs < C1_MAX_SECONDS, || format!("took {secs:.2}s"))?;
    Ok(format!("{C1_CASES} cases, accuracy exact, max P/R/F1 error {worst:e}, {secs:.3}s"))
}

// 2. Reported accuracy from the confusion-matrix diagonal.

fn criterion_2() -> Outcome {
    let sizes = [2209u64, 2208, 2208, 2208];
    check(sizes.iter().sum::<u64>() == C2_TOTAL, || "row sizes do not sum to total".into())?;
    let mut counts = vec![vec![0u64; 4]; 4];
    for c in 0..4 {
        counts[c][c] = C2_DIAGONAL[c];
        counts[c][(c + 1) % 4] = sizes[c] - C2_DIAGONAL[c];
    }
    let m = ConfusionMatrix::from_counts(counts).map_err(|e| e.to_string())?;
    let report = classification_metrics(&m).map_err(|e| e.to_string())?;
    let pct = 100.0 * report.accuracy;
    check((pct - C2_REPORTED_PCT).abs() <= C2_TOL_PP, || {
        format!("accuracy {pct:.4}% vs {C2_REPORTED_PCT}%")
    })?;
    Ok(format!("trace {} / {} = {pct:.4}%", m.trace(), m.total()))
}

// 3. SMOTE balance and convexity.

fn smote_fixture(counts: &[usize], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = vec![
        FeatureSpec::numeric("a"),
        FeatureSpec::numeric("b"),
        FeatureSpec::ordinal("c", &[1, 2, 3, 4, 5]),
        FeatureSpec::nominal("d", &[1, 2, 3]),
    ];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            x.push(c as f64 + z);
            x.push(rng.random::<f64>() * 10.0);
            x.push(rng.random_range(0..5) as f64);
            x.push(rng.random_range(1..=3) as f64);
            y.push(c);
        }
    }
    Dataset::new(x, y, features, counts.len()).unwrap()
}

fn survey_counts(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Multinomial draw over the survey class proportions.
    let mut counts = vec![0usize; 4];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cls = 3;
        for (c, &p) in SURVEY_MARGINALS.iter().enumerate() {
            acc += p;
            if u < acc {
                cls = c;
                break;
            }
        }
        counts[cls] += 1;
    }
    counts
}

fn check_smote(ds: &Dataset, seed: u64) -> Result<usize, String> {
    let params = SmoteParams { seed, ..SmoteParams::default() };
    let (out, origins) = smote_with_provenance(ds, &params).map_err(|e| e.to_string())?;
    let majority = *ds.class_counts().iter().max().unwrap();
    check(out.class_counts().iter().all(|&c| c == majority), || {
        format!("counts {:?} not uniform at {majority}", out.class_counts())
    })?;
    let n_in = ds.n_rows();
    check(out.n_rows() == n_in + origins.len(), || "row count mismatch".into())?;
    for (i, o) in origins.iter().enumerate() {
        check(ds.labels()[o.base] == o.class && ds.labels()[o.neighbor] == o.class, || {
            format!("synthetic row {i} has parents outside its class")
        })?;
        check((0.0..=1.0).contains(&o.u), || format!("u = {} outside [0,1]", o.u))?;
        let (a, b) = (ds.row(o.base), ds.row(o.neighbor));
        for j in 0..ds.n_features() {
            let v = o.unrounded[j];
            let lo = a[j].min(b[j]) - C3_CONVEX_TOL;
            let hi = a[j].max(b[j]) + C3_CONVEX_TOL;
            check(v >= lo && v <= hi, || format!("synthetic row {i} leaves the segment"))?;
            check((v - (a[j] + o.u * (b[j] - a[j]))).abs() <= C3_CONVEX_TOL, || {
                format!("synthetic row {i} is not the stated combination")
            })?;
        }
        let row = out.row(n_in + i);
        check(row[0] == o.unrounded[0] && row[1] == o.unrounded[1], || {
            format!("numeric coordinates of row {i} were altered")
        })?;
    }
    Ok(origins.len())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut synthetic = 0;
    for draw in 0..5 {
        let n = rng.random_range(400..2000);
        let counts = survey_counts(n, &mut rng);
        if counts.iter().any(|&c| c < 2) {
            continue;
        }
        let ds = smote_fixture(&counts, 100 + draw);
        synthetic += check_smote(&ds, draw)?;
    }
    // Full-size case with the reported majority count.
    let counts = [265, 1457, 3790, C3_MAJORITY];
    let ds = smote_fixture(&counts, 7);
    synthetic += check_smote(&ds, 7)?;
    let out_rows = 4 * C3_MAJORITY;
    check(out_rows == C3_EXPECTED_ROWS, || format!("4 x {C3_MAJORITY} = {out_rows}"))?;
    let full = nutrition_ensembles::resampling::smote(&ds, &SmoteParams::default())
        .map_err(|e| e.to_string())?;
    check(full.n_rows() == C3_EXPECTED_ROWS, || format!("balanced rows {}", full.n_rows()))?;
    Ok(format!(
        "uniform counts on all draws, {C3_EXPECTED_ROWS} rows at majority {C3_MAJORITY}, \
         {synthetic} synthetic rows convex"
    ))
}

// 4. AUC invariants.

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let positive: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
    let scores: Vec<f64> = positive.iter().map(|&p| if p { 0.9 } else { 0.1 }).collect();
    let auc = binary_auc(&positive, &scores).unwrap();
    check(auc == 1.0, || format!("perfect separation gave {auc}"))?;

    let positive: Vec<bool> = (0..C4_RANDOM_N).map(|_| rng.random::<bool>()).collect();
    let scores: Vec<f64> = (0..C4_RANDOM_N).map(|_| rng.random::<f64>()).collect();
    let random_auc = binary_auc(&positive, &scores).unwrap();
    check((random_auc - 0.5).abs() <= C4_RANDOM_TOL, || format!("random AUC {random_auc}"))?;

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(10..300);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        // Tie-free scores: a shuffled permutation plus jitter.
        let scores: Vec<f64> = (0..n)
            .map(|i| i as f64 + rng.random::<f64>() * 0.5)
            .collect();
        let pos: Vec<bool> = y.iter().map(|&v| v == 1).collect();
        let base = binary_auc(&pos, &scores).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| (0.3 * s).exp() * 2.0 + 7.0).collect();
        let t = binary_auc(&pos, &transformed).unwrap();
        check(t == base, || format!("monotone transform changed AUC {base} -> {t}"))?;
        let curve = roc_curve_points(&y, &scores, 1);
        worst = worst.max((trapezoid_area(&curve.points) - base).abs());
    }
    check(worst <= C4_TRAPEZOID_TOL, || format!("trapezoid deviation {worst:e}"))?;
    Ok(format!("perfect 1.0, random {random_auc:.4}, transform exact, trapezoid err {worst:e}"))
}

// 5. Gradient and hessian against finite differences of the loss.

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = 4;
    let h = C5_STEP;
    let mut worst: f64 = 0.0;
    for _ in 0..C5_POINTS {
        let s: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let label = rng.random_range(0..k);
        let (g, hess) = softmax_grad_hess(&s, label);
        let l0 = multiclass_log_loss(&s, label);
        for j in 0..k {
            let mut up = s.clone();
            let mut dn = s.clone();
            up[j] += h;
            dn[j] -= h;
            let lu = multiclass_log_loss(&up, label);
            let ld = multiclass_log_loss(&dn, label);
            let fd_g = (lu - ld) / (2.0 * h);
            let fd_h = (lu - 2.0 * l0 + ld) / (h * h);
            worst = worst.max((fd_g - g[j]).abs()).max((fd_h - hess[j]).abs());
        }
    }
    check(worst < C5_MAX_ERR, || format!("max error {worst:e}"))?;
    Ok(format!("{C5_POINTS} points, max abs error {worst:e}"))
}

// 6. Model ordering on the benchmark generator.

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let spec = GeneratorSpec::benchmark();
    let (mut rf, mut tree, mut ada_tuned, mut ada_default) = (vec![], vec![], vec![], vec![]);
    for seed in 0..C6_SEEDS {
        let ds = generate_synthetic(&spec, C6_ROWS, seed).map_err(|e| e.to_string())?;
        let (train, test) = stratified_split(&ds, C6_TEST_FRACTION, seed).map_err(|e| e.to_string())?;
        let fit = |p: ModelParams| -> Result<f64, String> {
            let m = p.with_seed(seed).fit(&train).map_err(|e| e.to_string())?;
            Ok(accuracy(&m, &test))
        };
        rf.push(fit(ModelParams::tuned_for(ModelKind::RandomForest))?);
        tree.push(fit(ModelParams::default_for(ModelKind::DecisionTree))?);
        ada_tuned.push(fit(ModelParams::tuned_for(ModelKind::AdaBoost))?);
        ada_default.push(fit(ModelParams::default_for(ModelKind::AdaBoost))?);
    }
    let secs = start.elapsed().as_secs_f64();
    let (rf, tree, at, ad) = (median(rf), median(tree), median(ada_tuned), median(ada_default));
    let detail = format!(
        "signal {BENCHMARK_SIGNAL}, medians rf {rf:.4} tree {tree:.4} ada_tuned {at:.4} \
         ada_default {ad:.4}, {secs:.1}s"
    );
    check(rf >= C6_MIN_RF_MEDIAN, || detail.clone())?;
    check(rf >= tree, || detail.clone())?;
    check(at > ad, || detail.clone())?;
    check(secs < C6_MAX_SECONDS, || detail.clone())?;
    Ok(detail)
}

// 7. Byte-identical reports across runs and thread counts.

fn small_config() -> PipelineConfig {
    let mut models = Vec::new();
    for (kind, knob, value) in [
        (ModelKind::RandomForest, "n_estimators", 20),
        (ModelKind::AdaBoost, "n_estimators", 20),
        (ModelKind::Gbt, "n_estimators", 10),
        (ModelKind::ObliviousGbt, "iterations", 30),
    ] {
        let mut m = ModelSpec::new(kind, Preset::Default);
        m.overrides.insert(knob.into(), json!(value));
        models.push(m);
    }
    PipelineConfig {
        data: DataSource::Generator {
            spec: None,
            signal: 1.0,
            marginals: SURVEY_MARGINALS.to_vec(),
            missing_rate: 0.05,
            n_rows: 600,
        },
        smote: Some(SmoteParams::default()),
        selection: Some(SelectionConfig {
            method: SelectionMethod::MutualInformation,
            target_size: 19,
            cv_folds: 5,
            bins: 10,
            estimator: default_sbs_estimator(),
        }),
        splits: vec![0.25],
        models,
        seed: 77,
        ..PipelineConfig::standard(600, Preset::Default)
    }
}

fn report_bytes(config: &PipelineConfig, threads: usize) -> Result<Vec<u8>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let out = pool.install(|| run_pipeline(config)).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    emit_report(&out.report, dir.path()).map_err(|e| e.to_string())?;
    std::fs::read(dir.path().join("report.json")).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let config = small_config();
    let first = report_bytes(&config, C7_THREADS[0])?;
    let again = report_bytes(&config, C7_THREADS[0])?;
    let wide = report_bytes(&config, C7_THREADS[1])?;
    check(first == again, || "report.json differs between identical runs".into())?;
    check(first == wide, || {
        format!("report.json differs between {} and {} threads", C7_THREADS[0], C7_THREADS[1])
    })?;
    Ok(format!(
        "{} bytes identical over 2 runs and {:?} threads",
        first.len(),
        C7_THREADS
    ))
}

// 8. Split and fold arithmetic.

fn criterion_8() -> Outcome {
    let labels: Vec<usize> = (0..4).flat_map(|c| std::iter::repeat_n(c, C8_PER_CLASS)).collect();
    let (_, test) = stratified_split_indices(&labels, 4, C8_TEST_FRACTION, 8).map_err(|e| e.to_string())?;
    check(test.len() == C8_TEST_ROWS, || format!("test rows {}", test.len()))?;
    let mut per_class = [0usize; 4];
    for &i in &test {
        per_class[labels[i]] += 1;
    }
    check(per_class == C8_TEST_PER_CLASS, || format!("test per class {per_class:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let unbalanced: Vec<usize> = (0..5000)
        .map(|_| {
            let u: f64 = rng.random();
            SURVEY_MARGINALS
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .position(|c| u < c)
                .unwrap_or(3)
        })
        .collect();
    for (name, y) in [("balanced", &labels), ("unbalanced", &unbalanced)] {
        let folds = stratified_kfold(y, 4, C8_FOLDS, 8).map_err(|e| e.to_string())?;
        check(folds.len() == C8_FOLDS, || format!("{name}: {} folds", folds.len()))?;
        let mut seen = vec![0u8; y.len()];
        for f in &folds {
            for &i in f {
                seen[i] += 1;
            }
        }
        check(seen.iter().all(|&s| s == 1), || format!("{name}: folds do not partition"))?;
        for c in 0..4 {
            let sizes: Vec<usize> = folds
                .iter()
                .map(|f| f.iter().filter(|&&i| y[i] == c).count())
                .collect();
            let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
            check(spread <= 1, || format!("{name}: class {c} fold sizes {sizes:?}"))?;
        }
    }
    Ok(format!("test {C8_TEST_ROWS} = {per_class:?}; {C8_FOLDS}-fold partitions within 1 per class"))
}

// 9. Backward selection cardinality and noise ordering.

fn planted_noise(seed: u64) -> (Dataset, usize) {
    // Feature 0 is pure noise; feature j (1..=4) marks class j-1.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_per = 60;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for c in 0..4 {
        for _ in 0..n_per {
            x.push(rng.random::<f64>());
            for j in 0..4 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.push(if j == c { 2.5 } else { 0.0 } + z);
            }
            y.push(c);
        }
    }
    let features = (0..5).map(|j| FeatureSpec::numeric(&format!("f{j}"))).collect();
    (Dataset::new(x, y, features, 4).unwrap(), 0)
}

fn criterion_9() -> Outcome {
    let small_forest = ForestParams {
        n_estimators: 10,
        tree: TreeParams { max_features: MaxFeatures::Sqrt, ..TreeParams::default() },
        ..ForestParams::default()
    };
    let ds = generate_synthetic(&GeneratorSpec::benchmark(), 240, 9).map_err(|e| e.to_string())?;
    check(ds.n_features() == C9_FROM, || format!("{} features", ds.n_features()))?;
    let r = sequential_backward(&ds, &small_forest, C9_TO, 3, 9).map_err(|e| e.to_string())?;
    check(r.selected.len() == C9_TO, || format!("selected {}", r.selected.len()))?;
    check(r.trace.len() == C9_FROM - C9_TO, || format!("trace length {}", r.trace.len()))?;

    let forest = ForestParams { n_estimators: 20, ..small_forest };
    let mut noise_first = 0;
    for run in 0..C9_RUNS {
        let (ds, noise) = planted_noise(1000 + run);
        let r = sequential_backward(&ds, &forest, 1, 5, run).map_err(|e| e.to_string())?;
        let pos = r.trace.iter().position(|s| s.removed == noise);
        // Everything else is informative, so noise must go first.
        if pos == Some(0) {
            noise_first += 1;
        }
    }
    check(noise_first >= C9_MIN_NOISE_FIRST, || {
        format!("noise removed first in {noise_first}/{C9_RUNS} runs")
    })?;
    Ok(format!(
        "{C9_FROM} -> {} features; noise removed first in {noise_first}/{C9_RUNS} runs",
        r.selected.len()
    ))
}

// 10. Persistence round trip.

fn same_proba(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = GeneratorSpec::edhs_like(1.0, &SURVEY_MARGINALS);
    let train = generate_synthetic(&spec, 800, 10).map_err(|e| e.to_string())?;
    let records = generate_synthetic(&spec, C10_RECORDS, 11).map_err(|e| e.to_string())?;

    let small = |kind: ModelKind| -> Result<ModelParams, String> {
        let p = ModelParams::default_for(kind).with_seed(10);
        let (name, v) = match kind {
            ModelKind::ObliviousGbt => ("iterations", 50),
            _ => ("n_estimators", 30),
        };
        p.set(name, &json!(v)).map_err(|e| e.to_string())
    };

    for &kind in ModelKind::ENSEMBLES.iter() {
        let model = small(kind)?.fit(&train).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{}.json", kind.name()));
        model.save(&path).map_err(|e| e.to_string())?;
        let loaded = TrainedModel::load(&path).map_err(|e| e.to_string())?;
        check(same_proba(&model.predict_proba(&records), &loaded.predict_proba(&records)), || {
            format!("{}: probabilities differ after reload", kind.name())
        })?;
        check(model.predict(&records) == loaded.predict(&records), || {
            format!("{}: classes differ after reload", kind.name())
        })?;
    }

    // Raw-record path: CSV with missing cells through stored preprocessing.
    let mut config = small_config();
    config.selection = None;
    let out = run_pipeline(&config).map_err(|e| e.to_string())?;
    let raw = GeneratorSpec { missing_rate: 0.05, ..spec };
    let mut csv = Vec::new();
    raw.write_csv(C10_RECORDS, 12, &mut csv).map_err(|e| e.to_string())?;
    let csv_path = dir.path().join("records.csv");
    std::fs::write(&csv_path, &csv).map_err(|e| e.to_string())?;
    for (label, model) in &out.models {
        let in_memory = predict_reader(model, csv.as_slice()).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{label}.model.json"));
        model.save(&path).map_err(|e| e.to_string())?;
        let (_, reloaded) = predict_records(&path, &csv_path, None).map_err(|e| e.to_string())?;
        check(in_memory.len() == C10_RECORDS, || format!("{label}: {} predictions", in_memory.len()))?;
        let a: Vec<Vec<f64>> = in_memory.iter().map(|p| p.probabilities.clone()).collect();
        let b: Vec<Vec<f64>> = reloaded.iter().map(|p| p.probabilities.clone()).collect();
        check(same_proba(&a, &b), || format!("{label}: CSV predictions differ after reload"))?;
    }
    Ok(format!(
        "{} variants exact on {C10_RECORDS} records, in memory and via CSV",
        ModelKind::ENSEMBLES.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("metric oracle equivalence", criterion_1),
        ("reported accuracy consistency", criterion_2),
        ("SMOTE balance exactness", criterion_3),
        ("AUC invariants", criterion_4),
        ("gradient check", criterion_5),
        ("model ordering at desk scale", criterion_6),
        ("determinism", criterion_7),
        ("split/fold arithmetic", criterion_8),
        ("selection cardinality", criterion_9),
        ("persistence round-trip", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} [{name}]: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} [{name}]: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
