//! Command implementations behind the `tgcn` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use tgcn_core::dtw::{all_pairs_dtw, mean_daily_profile};
use tgcn_core::gradcheck::{gradcheck, GradcheckOptions, GradcheckReport};
use tgcn_core::graph::{
    neighbors_per_road, scaled_laplacian, spatial_adjacency, temporal_adjacency, Adjacency, GraphKind,
    ScaledLaplacian,
};
use tgcn_core::metrics::{evaluate_steps, EvalMode, MetricReport};
use tgcn_core::model::{fit, predict_recursive, History, ModelState};
use tgcn_core::nn::ParamClass;
use tgcn_core::series::{apply_zscore, chronological_split, fit_zscore, make_windows, NormStats, SpeedMatrix};
use tgcn_core::DenseArray;

use crate::checkpoint::{fingerprint, Checkpoint};
use crate::config::{EvalSplit, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{
    load_speed_csv, metrics_csv, metrics_table, write_distance_matrix, write_edge_list, write_norm_stats,
    write_speed_csv, write_text,
};
use crate::pool::Threads;
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "tgcn", version, about = "Temporal-graph 3D graph convolutional traffic forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Speed CSV files start with a header line.
    #[arg(long, global = true)]
    pub header: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DTW distances and the temporal graph, or the Gaussian spatial graph.
    BuildGraph,
    /// Fit a model and write the best checkpoint and the history.
    Train,
    /// Score a checkpoint on the test (or validation) split.
    Evaluate {
        #[arg(long)]
        mode: Option<EvalMode>,
        /// Steps ahead to score; defaults to the model horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        split: Option<EvalSplit>,
    },
    /// Forecast from the last input window of a speed CSV.
    Predict {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        mode: Option<EvalMode>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Finite-difference check of every gradient on a toy model.
    Gradcheck {
        /// Perturb one class of analytic gradients (negative control).
        #[arg(long, hide = true)]
        corrupt: Option<ParamClass>,
    },
    /// Write synthetic speeds with planted clusters.
    Synth {
        #[arg(long, default_value_t = 30)]
        roads: usize,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 20)]
        days: usize,
        #[arg(long, default_value_t = 288)]
        steps_per_day: usize,
        /// Lag-one autocorrelation of the noise.
        #[arg(long, default_value_t = 0.95)]
        noise_ar: f64,
    },
}

/// Loads the config file (if any) and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    if cli.header {
        cfg.header = true;
    }
    match &cli.command {
        Command::Evaluate { mode, horizon, split } => {
            cfg.mode = mode.unwrap_or(cfg.mode);
            cfg.eval_horizon = horizon.or(cfg.eval_horizon);
            cfg.eval_split = split.unwrap_or(cfg.eval_split);
        }
        Command::Predict { input, mode, horizon } => {
            cfg.predict_input = input.clone().or(cfg.predict_input.take());
            cfg.mode = mode.unwrap_or(cfg.mode);
            cfg.eval_horizon = horizon.or(cfg.eval_horizon);
        }
        _ => {}
    }
    cfg.absolutize()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Command::Gradcheck { corrupt } = &cli.command {
        let mut opts = GradcheckOptions::toy(cli.seed.unwrap_or(0));
        opts.corrupt = *corrupt;
        let report = cmd_gradcheck(&opts)?;
        println!("{report}");
        return if report.passed() {
            Ok(())
        } else {
            Err(CliError::Verification(format!(
                "gradient check failed for {}",
                report
                    .failing_classes()
                    .iter()
                    .map(|c| c.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        };
    }
    if let Command::Synth {
        roads,
        clusters,
        days,
        steps_per_day,
        noise_ar,
    } = &cli.command
    {
        let sc = SynthConfig {
            n_roads: *roads,
            clusters: *clusters,
            days: *days,
            steps_per_day: *steps_per_day,
            noise_ar: *noise_ar,
            seed: cli.seed.unwrap_or(0),
            ..SynthConfig::default()
        };
        let out = cli.output.clone().unwrap_or_else(|| PathBuf::from("out"));
        return cmd_synth(&sc, &out);
    }
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::BuildGraph => cmd_build_graph(&cfg).map(|_| ()),
        Command::Train => cmd_train(&cfg).map(|_| ()),
        Command::Evaluate { .. } => {
            let reports = cmd_evaluate(&cfg)?;
            print!("{}", metrics_table(&format!("{} on {} split", cfg.mode, cfg.eval_split), &reports));
            Ok(())
        }
        Command::Predict { .. } => cmd_predict(&cfg).map(|_| ()),
        Command::Gradcheck { .. } | Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn write_resolved(cfg: &ExperimentConfig, command: &str) -> CliResult<()> {
    write_text(&cfg.output.join(format!("{command}.resolved.cfg")), &cfg.resolved_text())
}

/// Raw train / validation / test segments.
pub struct Segments {
    pub train: SpeedMatrix,
    pub val: SpeedMatrix,
    pub test: SpeedMatrix,
}

pub fn load_segments(cfg: &ExperimentConfig, min_rows: usize) -> CliResult<Segments> {
    let speeds = load_speed_csv(cfg.data_path()?, cfg.steps_per_day, cfg.header)?;
    if speeds.n_steps() < cfg.steps_per_day {
        return Err(CliError::Data(format!(
            "{} steps is less than one day of {}",
            speeds.n_steps(),
            cfg.steps_per_day
        )));
    }
    let (train, val, test) = chronological_split(&speeds, cfg.train_frac, cfg.val_frac, min_rows)?;
    log::info!(
        "split {} / {} / {} rows",
        train.n_steps(),
        val.n_steps(),
        test.n_steps()
    );
    Ok(Segments { train, val, test })
}

fn model_rows(cfg: &ExperimentConfig) -> usize {
    cfg.model.input_len + cfg.model.horizon.max(cfg.eval_horizon.unwrap_or(1))
}

pub struct GraphOutputs {
    pub adjacency: Adjacency,
    pub edge_list: PathBuf,
    pub distances: Option<PathBuf>,
}

pub fn cmd_build_graph(cfg: &ExperimentConfig) -> CliResult<GraphOutputs> {
    let seg = load_segments(cfg, model_rows(cfg))?;
    let n = seg.train.n_roads();
    let exec = Threads::new(cfg.workers);
    let mut distances = None;
    let adjacency = match cfg.graph_kind {
        GraphKind::Temporal => {
            let profiles = mean_daily_profile(&seg.train)?;
            let d = all_pairs_dtw(&profiles, cfg.band, &exec)?;
            let path = cfg.output.join("distances.csv");
            write_distance_matrix(&path, &d)?;
            distances = Some(path);
            log::info!("k = {} neighbours per road before symmetrization", neighbors_per_road(n, cfg.sparsity));
            temporal_adjacency(&d, cfg.sparsity)?
        }
        GraphKind::Spatial => {
            let path = cfg
                .road_distances
                .as_deref()
                .ok_or_else(|| CliError::Config("spatial graph needs `road_distances`".into()))?;
            let (Some(sigma2), Some(epsilon)) = (cfg.sigma2, cfg.epsilon) else {
                return Err(CliError::Config("spatial graph needs `sigma2` and `epsilon`".into()));
            };
            let dist = crate::formats::read_square(path)?;
            if dist.dim(0) != n {
                return Err(CliError::Data(format!(
                    "road distances cover {} roads, speed data has {n}",
                    dist.dim(0)
                )));
            }
            spatial_adjacency(&dist, sigma2, epsilon)?
        }
    };
    let edge_list = cfg.graph_path();
    write_edge_list(&edge_list, &adjacency)?;
    write_resolved(cfg, "build-graph")?;
    log::info!(
        "graph: n={n} edges={} density={:.4} -> {}",
        adjacency.edge_count(),
        adjacency.density(),
        edge_list.display()
    );
    Ok(GraphOutputs {
        adjacency,
        edge_list,
        distances,
    })
}

/// Reads the configured graph and checks it against `n` roads.
fn load_graph(cfg: &ExperimentConfig, n: usize) -> CliResult<(ScaledLaplacian, String)> {
    let path = cfg.graph_path();
    let (adj, text) = crate::formats::read_edge_list(&path)?;
    if adj.n() != n {
        return Err(CliError::Data(format!(
            "graph {} has n={} but the speed data has n={n}",
            path.display(),
            adj.n()
        )));
    }
    Ok((scaled_laplacian(&adj)?, fingerprint(text.as_bytes())))
}

pub struct TrainOutputs {
    pub state: ModelState,
    pub stats: NormStats,
    pub history: History,
    pub checkpoint: PathBuf,
}

pub fn history_csv(h: &History) -> String {
    let mut out = String::from("epoch,lr,train_loss,val_loss,val_mae\n");
    for r in &h.epochs {
        writeln!(out, "{},{},{},{},{}", r.epoch, r.lr, r.train_loss, r.val_loss, r.val_mae).unwrap();
    }
    out
}

pub fn cmd_train(cfg: &ExperimentConfig) -> CliResult<TrainOutputs> {
    let m = &cfg.model;
    let seg = load_segments(cfg, m.input_len + m.horizon)?;
    let n = seg.train.n_roads();
    let (lt, hash) = load_graph(cfg, n)?;
    let stats = fit_zscore(&seg.train, cfg.normalization);
    let train = make_windows(&apply_zscore(&seg.train, &stats), m.input_len, m.horizon)?;
    let val = make_windows(&apply_zscore(&seg.val, &stats), m.input_len, m.horizon)?;
    let mut state = ModelState::build(*m, lt, n, cfg.train.seed)?;
    log::info!(
        "training {} parameters on {} windows ({} validation)",
        state.param_count(),
        train.len(),
        val.len()
    );
    let history = fit(&mut state, &train, &val, &stats, &cfg.train, &Threads::new(cfg.workers))?;
    let checkpoint = cfg.checkpoint_path();
    Checkpoint::from_state(&state, &stats, &hash).save(&checkpoint)?;
    write_text(&cfg.output.join("history.csv"), &history_csv(&history))?;
    write_norm_stats(&cfg.output.join("norm.txt"), &stats)?;
    write_resolved(cfg, "train")?;
    if let Some(best) = history.best() {
        log::info!("kept epoch {} (validation MAE {:.4})", best.epoch, best.val_mae);
    }
    Ok(TrainOutputs {
        state,
        stats,
        history,
        checkpoint,
    })
}

fn load_checkpoint(cfg: &ExperimentConfig, n: usize) -> CliResult<(ModelState, NormStats)> {
    let ck = Checkpoint::load(&cfg.checkpoint_path())?;
    let (lt, hash) = load_graph(cfg, n)?;
    if hash != ck.adjacency_hash {
        log::warn!("graph {} differs from the one the checkpoint was trained on", cfg.graph_path().display());
    }
    let stats = ck.stats.clone();
    Ok((ck.into_state(lt)?, stats))
}

fn requested_horizon(cfg: &ExperimentConfig, state: &ModelState) -> usize {
    cfg.eval_horizon.unwrap_or(state.config().horizon)
}

pub fn metrics_file(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.join(format!("metrics-{}-{}.csv", cfg.mode, cfg.eval_split))
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> CliResult<Vec<MetricReport>> {
    let seg = load_segments(cfg, model_rows(cfg))?;
    let (state, stats) = load_checkpoint(cfg, seg.train.n_roads())?;
    let h = requested_horizon(cfg, &state);
    let segment = match cfg.eval_split {
        EvalSplit::Val => &seg.val,
        EvalSplit::Test => &seg.test,
    };
    let windows = make_windows(&apply_zscore(segment, &stats), state.config().input_len, h)?;
    let reports = evaluate_steps(&state, &windows, &stats, cfg.mode, &Threads::new(cfg.workers))?;
    write_text(&metrics_file(cfg), &metrics_csv(&cfg.mode.to_string(), &reports))?;
    write_resolved(cfg, "evaluate")?;
    Ok(reports)
}

/// Forecasts after the last `M` rows of the input file; one output row per
/// predicted step, in speed units.
pub fn cmd_predict(cfg: &ExperimentConfig) -> CliResult<DenseArray> {
    let input = cfg
        .predict_input
        .as_deref()
        .or(cfg.data.as_deref())
        .ok_or_else(|| CliError::Config("no `predict_input` file configured".into()))?;
    let s = load_speed_csv(input, cfg.steps_per_day, cfg.header)?;
    let (state, stats) = load_checkpoint(cfg, s.n_roads())?;
    let m = state.config().input_len;
    if s.n_steps() < m {
        return Err(CliError::Data(format!("{} needs at least {m} rows", input.display())));
    }
    let window = apply_zscore(&s.slice_rows(s.n_steps() - m, s.n_steps())?, &stats);
    let n = s.n_roads();
    let x = DenseArray::from_vec(&[1, m, n], window.values().to_vec())?;
    let h = requested_horizon(cfg, &state);
    let pred = match cfg.mode {
        EvalMode::Direct => tgcn_core::model::predict_direct(&state, &x, h)?.reshape(&[1, n])?,
        EvalMode::Recursive => predict_recursive(&state, &x, h)?.reshape(&[h, n])?,
    };
    let rows = pred.dim(0);
    let denorm: Vec<f64> = pred
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| stats.denormalize(i % n, v))
        .collect();
    let out = SpeedMatrix::new(denorm, n, cfg.steps_per_day)?;
    write_speed_csv(&cfg.output.join("predictions.csv"), &out)?;
    write_resolved(cfg, "predict")?;
    log::info!("wrote {rows} forecast row(s) for {n} roads");
    Ok(DenseArray::from_vec(&[rows, n], out.values().to_vec())?)
}

pub fn cmd_gradcheck(opts: &GradcheckOptions) -> CliResult<GradcheckReport> {
    Ok(gradcheck(opts)?)
}

pub fn cmd_synth(sc: &SynthConfig, out: &Path) -> CliResult<()> {
    let data = generate(sc)?;
    write_speed_csv(&out.join("speeds.csv"), &data.speeds)?;
    let labels: String = data.cluster_of.iter().map(|c| format!("{c}\n")).collect();
    write_text(&out.join("clusters.csv"), &labels)?;
    log::info!(
        "wrote {} steps for {} roads to {}",
        data.speeds.n_steps(),
        data.speeds.n_roads(),
        out.display()
    );
    Ok(())
}
