//! Command-line entry points: `train`, `predict`, `evaluate`, `bench`, and
//! the MPP-mode `worker`. The binary in `src/main.rs` is a thin shim over
//! `run`; everything here is callable from tests and examples.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::comm::{PendingCoordinator, SocketWorker};
use crate::data::{
    encode_and_partition, fit_codec, parse_dense, parse_dense_rows, parse_sparse, DenseOptions,
    LabelSpec, RawDataset, TrainingPartition, UnknownCategory,
};
use crate::error::{Error, Result};
use crate::ipm::trainer::{run_coordinator, run_worker};
use crate::ipm::{SolveReport, TrainConfig};
use crate::model::{ModelDiagnostics, SvmModel};
use crate::synth::two_clouds;

/// Exit codes: 0 success, 1 failure, 3 model produced but not converged.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "maxmargin",
    about = "Distributed linear SVM training and scoring",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a labeled dataset.
    Train(TrainArgs),
    /// Score rows with a trained model.
    Predict(PredictArgs),
    /// Compute accuracy of a model on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Measure training throughput on seeded synthetic data.
    Bench(BenchArgs),
    /// Join a socket-mode training run as one worker.
    Worker(WorkerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transport {
    InProcess,
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnknownPolicy {
    Error,
    Zeros,
}

impl From<UnknownPolicy> for UnknownCategory {
    fn from(p: UnknownPolicy) -> Self {
        match p {
            UnknownPolicy::Error => UnknownCategory::Error,
            UnknownPolicy::Zeros => UnknownCategory::Zeros,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input data path.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = DataFormat::Dense)]
    pub format: DataFormat,
    /// Label column: an index, or a name when the file has a header.
    #[arg(long, default_value = "0")]
    pub label: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Treat the first row as a header.
    #[arg(long)]
    pub header: bool,
    /// Declared feature count for sparse input (default: largest index seen).
    #[arg(long)]
    pub features: Option<usize>,
    /// Label token that maps to +1 (default: first token seen).
    #[arg(long)]
    pub positive_class: Option<String>,
}

impl DataArgs {
    fn label_spec(&self) -> LabelSpec {
        match self.label.parse::<usize>() {
            Ok(i) => LabelSpec::Index(i),
            Err(_) => LabelSpec::Name(self.label.clone()),
        }
    }

    fn dense_options(&self) -> DenseOptions {
        DenseOptions {
            delimiter: self.delimiter,
            has_header: self.header || matches!(self.label_spec(), LabelSpec::Name(_)),
            label: self.label_spec(),
            positive_class: self.positive_class.clone(),
        }
    }

    pub fn load(&self) -> Result<(RawDataset, usize)> {
        let reader = BufReader::new(File::open(&self.data)?);
        match self.format {
            DataFormat::Dense => {
                let opts = self.dense_options();
                let ds = parse_dense(reader, None, &opts)?;
                let label_col = match &opts.label {
                    LabelSpec::Index(i) => *i,
                    LabelSpec::Name(name) => {
                        // re-derive the index the parser used
                        let file = BufReader::new(File::open(&self.data)?);
                        let header = file
                            .lines()
                            .next()
                            .transpose()?
                            .unwrap_or_default();
                        header
                            .split(opts.delimiter)
                            .map(str::trim)
                            .position(|h| h == name)
                            .ok_or_else(|| {
                                Error::Config(format!("label column {name:?} not found"))
                            })?
                    }
                };
                Ok((ds, label_col))
            }
            DataFormat::Sparse => {
                let ds = parse_sparse(reader, self.features)?;
                Ok((ds, 0))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Feasibility and complementarity tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Fraction-to-boundary step factor.
    #[arg(long, default_value_t = 0.995)]
    pub eta: f64,
    /// Barrier centering factor.
    #[arg(long, default_value_t = 0.1)]
    pub centering: f64,
    /// Threads per worker for the reduction kernel.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl SolverArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            tau: self.tau,
            tol_feas: self.tol,
            tol_comp: self.tol,
            max_iterations: self.max_iter,
            eta: self.eta,
            centering: self.centering,
            threads: self.threads,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker count.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Transport::InProcess)]
    pub transport: Transport,
    /// Listen address for socket transport.
    #[arg(long, default_value = "127.0.0.1")]
    pub listen: String,
    /// Listen port for socket transport (0 picks a free port).
    #[arg(long, default_value_t = 7070)]
    pub port: u16,
    /// Where worker data slices are written in socket mode.
    #[arg(long)]
    pub slice_dir: Option<PathBuf>,
    /// Registration/collective timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Report path (default: `<model-out>.report`).
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Predictions file: `class,margin` per input row.
    #[arg(long)]
    pub out: PathBuf,
    /// What to do with category values unseen during training.
    #[arg(long, value_enum, default_value_t = UnknownPolicy::Error)]
    pub unknown: UnknownPolicy,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Metrics file (default: stdout), `metric,value` per line.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UnknownPolicy::Error)]
    pub unknown: UnknownPolicy,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Synthetic observation count.
    #[arg(long, default_value_t = 1_000_000)]
    pub bench_n: usize,
    /// Synthetic feature count.
    #[arg(long, default_value_t = 50)]
    pub bench_m: usize,
    /// Cloud separation (larger is easier).
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker counts to sweep, comma separated.
    #[arg(long, default_value = "1,2,4")]
    pub workers: String,
    /// Newton iterations to measure per configuration.
    #[arg(long, default_value_t = 12)]
    pub iters: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Scaling table output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkerArgs {
    /// Coordinator address, `host:port`.
    #[arg(long)]
    pub connect: String,
    #[arg(long)]
    pub rank: usize,
    /// Local data slice written by the coordinator.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

/// Dispatch a parsed command line. Returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Predict(args) => cmd_predict(&args).map(|()| EXIT_OK),
        Command::Evaluate(args) => cmd_evaluate(&args).map(|()| EXIT_OK),
        Command::Bench(args) => cmd_bench(&args).map(|()| EXIT_OK),
        Command::Worker(args) => cmd_worker(&args).map(|()| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_ERROR
        }
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<i32> {
    if args.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let cfg = args.solver.config();
    cfg.validate()?;

    let (ds, label_col) = args.data.load()?;
    if !ds.labels.contains(&1) || !ds.labels.contains(&-1) {
        return Err(Error::Config("training data must contain both classes".into()));
    }
    let codec = fit_codec(&ds)?;
    let partitions = encode_and_partition(&ds, &codec, args.workers)?;
    let n = ds.n;
    let m = codec.m;

    let (params, report) = match args.transport {
        Transport::InProcess => crate::ipm::train_in_process(&partitions, &cfg)?,
        Transport::Socket => {
            let timeout = Duration::from_secs(args.timeout);
            let slice_dir = args
                .slice_dir
                .clone()
                .unwrap_or_else(|| args.model_out.parent().unwrap_or(Path::new(".")).to_path_buf());
            std::fs::create_dir_all(&slice_dir)?;
            let pending = PendingCoordinator::bind((args.listen.as_str(), args.port))?;
            let addr = pending.local_addr()?;
            let mut slice_meta = Vec::with_capacity(partitions.len());
            for (rank, part) in partitions.iter().enumerate() {
                let path = slice_dir.join(format!("slice-{rank}.mmpart"));
                write_partition(&path, rank, part)?;
                println!(
                    "worker launch: maxmargin worker --connect {addr} --rank {rank} --data {}",
                    path.display()
                );
                slice_meta.push((part.n_rows, part.m));
            }
            println!("coordinator listening on {addr}, waiting for {} workers", args.workers);
            let (mut comm, extras) =
                pending.accept_workers(args.workers, timeout, &cfg.to_ack_payload(n, m))?;
            for (rank, extra) in extras.iter().enumerate() {
                let expect = slice_meta[rank];
                if extra.len() != 2 || extra[0] as usize != expect.0 || extra[1] as usize != expect.1 {
                    return Err(Error::Protocol(format!(
                        "rank {rank} registered with shape {extra:?}, expected {expect:?}"
                    )));
                }
            }
            run_coordinator(&mut comm, n, m, &cfg)?
        }
    };

    let model = SvmModel {
        w: params.w,
        beta: params.beta,
        tau: cfg.tau,
        codec,
        class_map: ds.class_map.clone(),
        label_col,
        diagnostics: ModelDiagnostics {
            iterations: report.iterations,
            final_mu: report.final_mu,
            support_vector_count: report.support_vector_count,
            converged: report.converged,
        },
    };
    model.save(&args.model_out)?;
    let report_path = args
        .report_out
        .clone()
        .unwrap_or_else(|| append_extension(&args.model_out, "report"));
    write_report(&report_path, &report)?;

    println!(
        "trained: n={} m={} p={} iterations={} mu={:.3e} support_vectors={}",
        report.n, report.m, report.p, report.iterations, report.final_mu, report.support_vector_count
    );
    if report.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "warning: iteration cap {} reached before convergence; model written anyway",
            cfg.max_iterations
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Rows for scoring: `(optional label, feature tokens)` per input row.
fn scoring_rows(args: &DataArgs, model: &SvmModel) -> Result<Vec<(Option<String>, Vec<String>)>> {
    let want = model.codec.columns.len();
    match args.format {
        DataFormat::Dense => {
            let reader = BufReader::new(File::open(&args.data)?);
            let mut rows = parse_dense_rows(reader, args.delimiter)?;
            if args.header && !rows.is_empty() {
                rows.remove(0);
            }
            rows.into_iter()
                .map(|(line, mut toks)| {
                    if toks.len() == want + 1 {
                        let label = toks.remove(model.label_col.min(toks.len() - 1));
                        Ok((Some(label), toks))
                    } else if toks.len() == want {
                        Ok((None, toks))
                    } else {
                        Err(Error::Parse {
                            line,
                            msg: format!(
                                "row has {} fields; the model scores {want} features (+1 with label)",
                                toks.len()
                            ),
                        })
                    }
                })
                .collect()
        }
        DataFormat::Sparse => {
            let reader = BufReader::new(File::open(&args.data)?);
            let ds = parse_sparse(reader, Some(want))?;
            Ok((0..ds.n)
                .map(|i| {
                    let label = ds.class_map.token(ds.labels[i]).to_string();
                    (Some(label), ds.row_tokens(i))
                })
                .collect())
        }
    }
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = SvmModel::load(&args.model)?;
    let rows = match scoring_rows(&args.data, &model) {
        Ok(rows) => rows,
        // an empty input file produces an empty predictions file
        Err(Error::Parse { line: 0, msg }) if msg.contains("empty input") => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut out = BufWriter::new(File::create(&args.out)?);
    for (_, features) in &rows {
        let (class, margin) = model.predict(features, args.unknown.into())?;
        writeln!(out, "{class},{margin}")?;
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let model = SvmModel::load(&args.model)?;
    let rows = scoring_rows(&args.data, &model)?;
    let labeled: Result<Vec<(String, Vec<String>)>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, (label, feats))| {
            label.map(|l| (l, feats)).ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "evaluation needs labeled rows".into(),
            })
        })
        .collect();
    let labeled = labeled?;
    let eval = model.evaluate(
        labeled.iter().map(|(l, f)| (l.as_str(), f.as_slice())),
        args.unknown.into(),
    )?;

    let mut text = String::new();
    text.push_str(&format!("accuracy,{}\n", eval.accuracy_percent()));
    text.push_str(&format!("correct,{}\n", eval.correct));
    text.push_str(&format!("total,{}\n", eval.total));
    text.push_str(&format!("true_positive,{}\n", eval.true_positive));
    text.push_str(&format!("true_negative,{}\n", eval.true_negative));
    text.push_str(&format!("false_positive,{}\n", eval.false_positive));
    text.push_str(&format!("false_negative,{}\n", eval.false_negative));
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let worker_counts: Result<Vec<usize>> = args
        .workers
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad worker count {s:?}")))
        })
        .collect();
    let worker_counts = worker_counts?;
    if worker_counts.iter().any(|&p| p == 0) {
        return Err(Error::Config("--workers entries must be at least 1".into()));
    }

    let mut cfg = args.solver.config();
    cfg.max_iterations = args.iters;
    // force the full iteration budget so every configuration measures the
    // same number of Newton steps
    cfg.tol_feas = 1e-300;
    cfg.tol_comp = 1e-300;
    cfg.validate()?;

    eprintln!(
        "generating synthetic data: n={} m={} separation={} seed={}",
        args.bench_n, args.bench_m, args.separation, args.seed
    );
    let ds = two_clouds(args.bench_n, args.bench_m, args.separation, args.seed);
    let codec = fit_codec(&ds)?;

    let mut table = String::from("p,iterations,total_wall_s,per_iter_s,bytes_up_per_iter,bytes_down_per_iter\n");
    for &p in &worker_counts {
        let partitions = encode_and_partition(&ds, &codec, p)?;
        let (_, report) = crate::ipm::train_in_process(&partitions, &cfg)?;
        let iters = report.iteration_stats.len().max(1);
        let per_iter: f64 = report
            .iteration_stats
            .iter()
            .map(|s| s.wall.as_secs_f64())
            .sum::<f64>()
            / iters as f64;
        let up = report.iteration_stats.first().map_or(0, |s| s.bytes_up_per_worker);
        let down = report.iteration_stats.first().map_or(0, |s| {
            s.bytes_down_direction_per_worker + s.bytes_down_control_per_worker
        });
        table.push_str(&format!(
            "{p},{iters},{:.6},{per_iter:.6},{up},{down}\n",
            report.total_wall.as_secs_f64()
        ));
        eprintln!("p={p}: {per_iter:.4}s per iteration over {iters} iterations");
    }
    let header = format!(
        "# synthetic two-cloud benchmark: n={} m={} separation={} seed={}\n",
        args.bench_n, args.bench_m, args.separation, args.seed
    );
    match &args.out {
        Some(path) => std::fs::write(path, format!("{header}{table}"))?,
        None => print!("{header}{table}"),
    }
    Ok(())
}

pub fn cmd_worker(args: &WorkerArgs) -> Result<()> {
    let (rank, part) = read_partition(&args.data)?;
    if rank != args.rank {
        return Err(Error::Config(format!(
            "slice {} was written for rank {rank}, not {}",
            args.data.display(),
            args.rank
        )));
    }
    let timeout = Duration::from_secs(args.timeout);
    let extra = [part.n_rows as f64, part.m as f64];
    let (mut comm, ack) = SocketWorker::connect(args.connect.as_str(), args.rank, timeout, &extra)?;
    let (mut cfg, _n, m) = TrainConfig::from_ack_payload(&ack)?;
    cfg.threads = args.threads;
    if m != part.m {
        return Err(Error::Protocol(format!(
            "coordinator trains {m} features but the slice holds {}",
            part.m
        )));
    }
    run_worker(&mut comm, &part, &cfg)?;
    eprintln!("rank {} done", args.rank);
    Ok(())
}

const SLICE_MAGIC: &[u8; 8] = b"MMSLICE1";

/// Write one worker's data slice: magic, four u64 header words, labels,
/// then the signed rows, all little-endian.
pub fn write_partition(path: &Path, rank: usize, part: &TrainingPartition) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(SLICE_MAGIC)?;
    for word in [rank as u64, part.global_offset as u64, part.n_rows as u64, part.m as u64] {
        out.write_all(&word.to_le_bytes())?;
    }
    for d in part.labels() {
        out.write_all(&d.to_le_bytes())?;
    }
    for y in part.rows_flat() {
        out.write_all(&y.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_partition(path: &Path) -> Result<(usize, TrainingPartition)> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)
        .map_err(|_| Error::Model(format!("{} is not a data slice", path.display())))?;
    if &magic != SLICE_MAGIC {
        return Err(Error::Model(format!("{} is not a data slice", path.display())));
    }
    let mut word = [0u8; 8];
    let mut header = [0u64; 4];
    for h in header.iter_mut() {
        file.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    let [rank, offset, rows, m] = header.map(|x| x as usize);
    let mut labels = vec![0.0f64; rows];
    for l in labels.iter_mut() {
        file.read_exact(&mut word)?;
        *l = f64::from_le_bytes(word);
    }
    let mut y = vec![0.0f64; rows * m];
    for v in y.iter_mut() {
        file.read_exact(&mut word)?;
        *v = f64::from_le_bytes(word);
    }
    Ok((rank, TrainingPartition::new(m, offset, y, labels)?))
}

fn append_extension(path: &Path, ext: &str) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".");
    os.push(ext);
    PathBuf::from(os)
}

/// Machine-parseable training report: `key,value` summary lines followed by
/// one CSV row per Newton iteration.
pub fn write_report(path: &Path, report: &SolveReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "converged,{}", u8::from(report.converged))?;
    writeln!(out, "iterations,{}", report.iterations)?;
    writeln!(out, "final_mu,{}", report.final_mu)?;
    writeln!(out, "final_r_w_inf,{}", report.final_r_w_inf)?;
    writeln!(out, "final_rho_beta_abs,{}", report.final_rho_beta_abs)?;
    writeln!(out, "final_r_v_inf,{}", report.final_r_v_inf)?;
    writeln!(out, "final_r_z_inf,{}", report.final_r_z_inf)?;
    writeln!(out, "n,{}", report.n)?;
    writeln!(out, "m,{}", report.m)?;
    writeln!(out, "p,{}", report.p)?;
    writeln!(out, "support_vectors,{}", report.support_vector_count)?;
    writeln!(out, "total_wall_s,{}", report.total_wall.as_secs_f64())?;
    writeln!(out, "total_bytes_up,{}", report.total_bytes_up)?;
    writeln!(out, "total_bytes_down,{}", report.total_bytes_down)?;
    writeln!(
        out,
        "iter,mu,mu_target,alpha,r_w_inf,rho_beta_abs,r_v_inf,r_z_inf,r_u_inf,r_s_inf,comp_zu,comp_sv,min_s,min_u,min_v,min_z,wall_s,bytes_up_per_worker,bytes_down_direction_per_worker,bytes_down_control_per_worker"
    )?;
    for s in &report.iteration_stats {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.iteration,
            s.mu,
            s.mu_target,
            s.alpha,
            s.r_w_inf,
            s.rho_beta_abs,
            s.r_v_inf,
            s.r_z_inf,
            s.r_u_inf,
            s.r_s_inf,
            s.comp_zu,
            s.comp_sv,
            s.min_s,
            s.min_u,
            s.min_v,
            s.min_z,
            s.wall.as_secs_f64(),
            s.bytes_up_per_worker,
            s.bytes_down_direction_per_worker,
            s.bytes_down_control_per_worker,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_spec_parses_index_or_name() {
        let mut args = DataArgs {
            data: PathBuf::from("x"),
            format: DataFormat::Dense,
            label: "3".into(),
            delimiter: ',',
            header: false,
            features: None,
            positive_class: None,
        };
        assert_eq!(args.label_spec(), LabelSpec::Index(3));
        args.label = "income".into();
        assert_eq!(args.label_spec(), LabelSpec::Name("income".into()));
        // a named label implies a header row
        assert!(args.dense_options().has_header);
    }

    #[test]
    fn partition_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice-0.mmpart");
        let part = TrainingPartition::new(2, 5, vec![1.0, -2.0, 0.5, 0.25], vec![1.0, -1.0]).unwrap();
        write_partition(&path, 3, &part).unwrap();
        let (rank, back) = read_partition(&path).unwrap();
        assert_eq!(rank, 3);
        assert_eq!(back, part);
    }

    #[test]
    fn truncated_partition_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("slice.mmpart");
        std::fs::write(&path, b"MMSLICE1\x01\x00").unwrap();
        assert!(read_partition(&path).is_err());
    }
}
