//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the criteria execute one
//! after another and the timings are not skewed by parallel tests.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tgcn::synth::{generate, SynthConfig};
use tgcn_core::dtw::{all_pairs_dtw, dtw_distance, mean_daily_profile};
use tgcn_core::gradcheck::{gradcheck, GradcheckOptions};
use tgcn_core::graph::{cheb_apply, Basis, scaled_laplacian, temporal_adjacency, Adjacency, GraphKind};
use tgcn_core::metrics::{compute_metrics, evaluate, historical_average, EvalMode};
use tgcn_core::model::{fit, ModelState, TGCNConfig, TrainConfig};
use tgcn_core::nn::{gconv3d_forward, Conv3DWeights, ParamClass};
use tgcn_core::oracle::{dense_lambda_max, dtw_oracle, spectral_filter_oracle};
use tgcn_core::series::{apply_zscore, chronological_split, fit_zscore, make_windows, Normalization, SpeedMatrix};
use tgcn_core::{DenseArray, Sequential};

/// Epochs per model in the synthetic benchmark, sized so both models train
/// inside the runtime limit on one core. `TGCN_BENCH_EPOCHS` overrides it.
const BENCH_EPOCHS: usize = 4;

fn bench_epochs() -> usize {
    std::env::var("TGCN_BENCH_EPOCHS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&e| (1..=30).contains(&e))
        .unwrap_or(BENCH_EPOCHS)
}

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn random_series(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(2..=6);
    (0..len).map(|_| rng.random_range(0..=9) as f64).collect()
}

fn dtw_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let pairs = 500;
    let mut mismatches = 0;
    for _ in 0..pairs {
        let x = random_series(&mut rng);
        let y = random_series(&mut rng);
        let (d, path) = dtw_distance(&x, &y, None).unwrap();
        let o = dtw_oracle(&x, &y).unwrap();
        if d != o || !path.is_valid_for(x.len(), y.len()) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    judge(
        mismatches == 0 && secs < 10.0,
        format!("{pairs} pairs, {mismatches} mismatches, {secs:.2} s (limit 10 s)"),
    )
}

/// Random spanning tree plus extra edges, weights in (0, 1].
fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> Adjacency {
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((j, i, rng.random_range(0.05..=1.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.15) && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                edges.push((i, j, rng.random_range(0.05..=1.0)));
            }
        }
    }
    Adjacency::from_edges(n, GraphKind::Spatial, &edges).unwrap()
}

fn spectral_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let graphs = 120;
    let mut worst: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    let mut fallbacks = 0;
    for _ in 0..graphs {
        let n = rng.random_range(2..=20);
        let order = rng.random_range(1..=5);
        let w = random_connected_graph(&mut rng, n);
        let lt = scaled_laplacian(&w).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta: Vec<f64> = (0..order).map(|_| rng.random_range(-1.0..1.0)).collect();
        let stack = cheb_apply(&lt, &DenseArray::from_vec(&[n, 1], x.clone()).unwrap(), order).unwrap();
        if lt.converged() {
            let exact = dense_lambda_max(&w).unwrap();
            worst_lambda = worst_lambda.max((lt.lambda_max() - exact).abs() / exact);
        } else {
            fallbacks += 1;
        }
        let expect = spectral_filter_oracle(&w, Some(lt.lambda_max()), &theta, &x).unwrap();
        for (v, e) in expect.iter().enumerate() {
            let got: f64 = (0..order).map(|k| theta[k] * stack.get(&[k, v, 0])).sum();
            worst = worst.max((got - e).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    judge(
        worst < 1e-8 && secs < 30.0,
        format!(
            "{graphs} graphs, max abs error {worst:.2e} (limit 1e-8), {secs:.2} s (limit 30 s); \
             power-iteration lambda_max rel error {worst_lambda:.1e}, {fallbacks} fallbacks to 2"
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let report = gradcheck(&GradcheckOptions::toy(0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let classes: Vec<String> = report
        .by_class()
        .iter()
        .map(|(c, e)| format!("{}={e:.1e}", c.as_str()))
        .collect();
    let all_classes = report.by_class().len() == ParamClass::ALL.len();
    judge(
        report.passed() && all_classes && secs < 60.0,
        format!("max rel error {} (limit 1e-4), {secs:.2} s (limit 60 s)", classes.join(" ")),
    )
}

fn ring(n: usize) -> Adjacency {
    let edges: Vec<_> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n), 1.0)).collect();
    Adjacency::from_edges(n, GraphKind::Temporal, &edges).unwrap()
}

fn path_graph(n: usize) -> Adjacency {
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    Adjacency::from_edges(n, GraphKind::Temporal, &edges).unwrap()
}

fn random_array(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseArray {
    let len = shape.iter().product();
    DenseArray::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn shape_and_receptive_field() -> Outcome {
    let cfg = TGCNConfig::default();
    let lens = cfg.time_lengths();
    let mut notes = vec![format!(
        "time lengths {}",
        lens.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("->")
    )];
    let mut ok = lens == [12, 10, 8, 6, 4, 1];

    // The built network agrees: the output layer spans the 4 remaining steps.
    let n = 6;
    let state = ModelState::build(cfg, scaled_laplacian(&ring(n)).unwrap(), n, 1).unwrap();
    let out_theta = state.params().iter().find(|p| p.name == "output.conv.theta").unwrap();
    ok &= out_theta.value.dim(2) == 4;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    ok &= state.forward(&random_array(&mut rng, &[2, 12, n])).unwrap().shape() == [2, n];
    ok &= state.forward(&random_array(&mut rng, &[2, 11, n])).is_err();

    // Two stacked GLU layers of a block (K_t=2, K=3) on a path graph: output
    // (t, v) sees input times t..t+2 and nodes within 4 hops of v.
    let n = 9;
    let lt = scaled_laplacian(&path_graph(n)).unwrap();
    let (c, kt, k) = (3, 2, 3);
    let l1 = Conv3DWeights {
        theta: random_array(&mut rng, &[1, 2 * c, kt, k]),
        bias: random_array(&mut rng, &[2 * c]),
    };
    let l2 = Conv3DWeights {
        theta: random_array(&mut rng, &[c, 2 * c, kt, k]),
        bias: random_array(&mut rng, &[2 * c]),
    };
    let stack = |x: &DenseArray| {
        let h = gconv3d_forward(x, &lt, &l1, Basis::Chebyshev).unwrap();
        gconv3d_forward(&h, &lt, &l2, Basis::Chebyshev).unwrap()
    };
    let t_in = 8;
    let x = random_array(&mut rng, &[1, t_in, n, 1]);
    let base = stack(&x);
    let (t_out, v_out) = (2, 0);
    let mut outside = 0;
    let mut unchanged = true;
    let mut inside_moves = true;
    for t in 0..t_in {
        for v in 0..n {
            let mut xp = x.clone();
            xp.set(&[0, t, v, 0], x.get(&[0, t, v, 0]) + 0.75);
            let y = stack(&xp);
            let moved = (0..c).any(|ch| y.get(&[0, t_out, v_out, ch]) != base.get(&[0, t_out, v_out, ch]));
            let inside = (t_out..t_out + 3).contains(&t) && v <= v_out + 4;
            if inside {
                inside_moves &= moved || v > v_out + 4;
            } else {
                outside += 1;
                unchanged &= !moved;
            }
        }
    }
    ok &= unchanged;
    notes.push(format!(
        "{outside} perturbations outside the receptive field, {}",
        if unchanged { "none changed the output" } else { "SOME CHANGED the output" }
    ));
    if !inside_moves {
        notes.push("note: some in-field perturbation had no effect".into());
    }
    judge(ok, notes.join("; "))
}

struct Bench {
    intra: f64,
    edges: usize,
    ha: f64,
    direct: f64,
    recursive: f64,
    secs: f64,
}

fn train_model(
    horizon: usize,
    lt: &tgcn_core::graph::ScaledLaplacian,
    train: &SpeedMatrix,
    val: &SpeedMatrix,
    stats: &tgcn_core::series::NormStats,
) -> ModelState {
    let cfg = TGCNConfig {
        horizon,
        ..TGCNConfig::default()
    };
    let tc = TrainConfig {
        epochs: bench_epochs(),
        ..TrainConfig::default()
    };
    let tw = make_windows(&apply_zscore(train, stats), cfg.input_len, horizon).unwrap();
    let vw = make_windows(&apply_zscore(val, stats), cfg.input_len, horizon).unwrap();
    let mut state = ModelState::build(cfg, lt.clone(), train.n_roads(), tc.seed).unwrap();
    let history = fit(&mut state, &tw, &vw, stats, &tc, &Sequential).unwrap();
    for r in &history.epochs {
        println!(
            "    H={horizon} epoch {:>2}: train loss {:.4}, val MAE {:.4}",
            r.epoch, r.train_loss, r.val_mae
        );
    }
    state
}

fn run_benchmark() -> Bench {
    let start = Instant::now();
    let data = generate(&SynthConfig::default()).unwrap();
    let (train, val, test) = chronological_split(&data.speeds, 0.7, 0.1, 15).unwrap();

    let profiles = mean_daily_profile(&train).unwrap();
    let d = all_pairs_dtw(&profiles, None, &Sequential).unwrap();
    let adj = temporal_adjacency(&d, 0.05).unwrap();
    let edges = adj.edges();
    let intra = edges
        .iter()
        .filter(|&&(i, j, _)| data.cluster_of[i] == data.cluster_of[j])
        .count() as f64
        / edges.len() as f64;

    let (m, h) = (12, 3);
    let ha_pred = historical_average(&train, &test, m, h).unwrap();
    let truth = make_windows(&test, m, h).unwrap().targets_direct;
    let ha = compute_metrics(&ha_pred, &truth).unwrap().mae;

    let stats = fit_zscore(&train, Normalization::Global);
    let lt = scaled_laplacian(&adj).unwrap();
    let test_windows = make_windows(&apply_zscore(&test, &stats), m, h).unwrap();

    let direct_model = train_model(h, &lt, &train, &val, &stats);
    let direct = evaluate(&direct_model, &test_windows, &stats, EvalMode::Direct, &Sequential)
        .unwrap()
        .mae;
    let step_model = train_model(1, &lt, &train, &val, &stats);
    let recursive = evaluate(&step_model, &test_windows, &stats, EvalMode::Recursive, &Sequential)
        .unwrap()
        .mae;
    Bench {
        intra,
        edges: edges.len(),
        ha,
        direct,
        recursive,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tgcn")
}

fn run_cli(args: &[&str], dir: &Path) -> bool {
    let out = Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run tgcn");
    if !out.status.success() {
        eprintln!("tgcn {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn pipeline(root: &Path, name: &str) -> Option<Vec<(String, Vec<u8>)>> {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = "data = ../data/speeds.csv\nsteps_per_day = 48\noutput = out\nn_blocks = 2\nchannels = 8\n\
               epochs = 3\nbatch_size = 16\nseed = 7\nworkers = 1\n";
    std::fs::write(dir.join("run.cfg"), cfg).unwrap();
    for cmd in ["build-graph", "train", "evaluate"] {
        if !run_cli(&[cmd, "--config", "run.cfg"], &dir) {
            return None;
        }
    }
    let out = dir.join("out");
    Some(
        ["graph.csv", "model.ckpt", "metrics-direct-test.csv"]
            .iter()
            .map(|f| (f.to_string(), std::fs::read(out.join(f)).unwrap()))
            .collect(),
    )
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    if !run_cli(
        &[
            "synth",
            "--roads",
            "8",
            "--days",
            "4",
            "--steps-per-day",
            "48",
            "--seed",
            "3",
            "--output",
            data.to_str().unwrap(),
        ],
        root.path(),
    ) {
        return judge(false, "synthetic data generation failed".into());
    }
    let (Some(a), Some(b)) = (pipeline(root.path(), "a"), pipeline(root.path(), "b")) else {
        return judge(false, "a pipeline command failed".into());
    };
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    judge(
        differing.is_empty(),
        if differing.is_empty() {
            "edge list, checkpoint and metric CSV byte-identical across two runs".into()
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    )
}

fn real_data_ha() -> Outcome {
    let Some(path) = std::env::var_os("TGCN_PEMSD7M").map(PathBuf::from) else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "set TGCN_PEMSD7M to a PeMSD7(M) speed CSV to run".into(),
        };
    };
    let speeds = tgcn::formats::load_speed_csv(&path, 288, false).unwrap();
    let (train, _, test) = chronological_split(&speeds, 0.7, 0.1, 15).unwrap();
    let pred = historical_average(&train, &test, 12, 3).unwrap();
    let truth = make_windows(&test, 12, 3).unwrap().targets_direct;
    let r = compute_metrics(&pred, &truth).unwrap();
    let near = |got: f64, want: f64| (got / want - 1.0).abs() <= 0.05;
    let mape = r.mape.unwrap_or(f64::NAN);
    judge(
        near(r.mae, 4.01) && near(mape, 10.61) && near(r.rmse, 7.20),
        format!(
            "HA MAE {:.2} / MAPE {mape:.2} / RMSE {:.2} against 4.01 / 10.61 / 7.20 (±5%)",
            r.mae, r.rmse
        ),
    )
}

fn main() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let mut outcomes: Vec<(&str, Outcome)> = vec![
        ("1 DTW oracle equivalence", dtw_oracle_equivalence()),
        ("2 spectral equivalence", spectral_equivalence()),
        ("3 gradient correctness", gradient_correctness()),
        ("4 shape and receptive field", shape_and_receptive_field()),
    ];
    for (name, o) in &outcomes {
        report(name, o);
    }

    println!("    synthetic benchmark: training two default models for {} epochs each", bench_epochs());
    let b = run_benchmark();
    let bench = [
        (
            "5a planted clusters",
            judge(
                b.intra >= 0.9,
                format!("{:.1}% of {} temporal edges intra-cluster (need >= 90%)", 100.0 * b.intra, b.edges),
            ),
        ),
        (
            "5b model beats HA",
            judge(
                b.direct <= 0.7 * b.ha,
                format!(
                    "test MAE {:.4} vs HA {:.4}, ratio {:.3} (need <= 0.7)",
                    b.direct,
                    b.ha,
                    b.direct / b.ha
                ),
            ),
        ),
        (
            "5c direct vs recursive",
            judge(
                b.direct <= b.recursive * 1.05,
                format!("direct MAE {:.4} vs recursive {:.4} (need direct <= recursive + 5%)", b.direct, b.recursive),
            ),
        ),
        (
            "5  benchmark runtime",
            judge(b.secs < 900.0, format!("{:.0} s (limit 900 s)", b.secs)),
        ),
    ];
    for (name, o) in &bench {
        report(name, o);
    }
    outcomes.extend(bench);

    let late = [("6 determinism", determinism()), ("7 real-data HA", real_data_ha())];
    for (name, o) in &late {
        report(name, o);
    }
    outcomes.extend(late);

    let failed = outcomes.iter().filter(|(_, o)| matches!(o.verdict, Verdict::Fail)).count();
    println!("acceptance: {} criteria checked, {failed} failed", outcomes.len());
    // Failures are reported above; they only fail the process on request so
    // that the workspace test run stays usable.
    if failed > 0 && std::env::var_os("TGCN_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn report(name: &str, o: &Outcome) {
    let tag = match o.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Skip => "SKIP",
    };
    println!("[{tag}] {name}: {}", o.detail);
}
