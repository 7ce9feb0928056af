//! Experiment harness: generate synthetic pairs, run one sketch and emit a
//! CSV report row, sweep a grid of algorithms and sketch sizes, or run the
//! verification suites.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ammsketch::data_io::{
    gen_synthetic_matrices, read_matrix_market, write_matrix_market, zip_pair, SynthConfig,
};
use ammsketch::oracle::{self, ErrorDenominator, ErrorMode, MatRef};
use ammsketch::registry::{self, BuildParams};
use ammsketch::scod::QSchedule;
use ammsketch::sparse::SparseMatrix;
use ammsketch::verify::{run_all, VerifyConfig};
use ammsketch::Error;

/// CSV schema emitted by `run` (sweep appends `repeat,status`).
const CSV_HEADER: &str = "algo,m,q,n,dx,dy,nnz_x,nnz_y,time_ms_total,time_ms_sketch,\
                          rel_err,abs_err,err_denominator,lemma2_rhs,theorem1_rhs_min,\
                          delta_sum,flush_count,epsilon_hat,seed";

#[derive(Parser)]
#[command(
    name = "ammsketch",
    about = "Streaming approximate matrix multiplication sketches",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic aligned sparse pair as Matrix Market files.
    Gen(GenArgs),
    /// Sketch one input pair and print a CSV report row.
    Run(RunArgs),
    /// Run a grid of (algorithm, sketch size) cells and print a CSV table.
    Sweep(SweepArgs),
    /// Run the verification suites and print one line per criterion.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dx: usize,
    #[arg(long)]
    dy: usize,
    /// Latent rank of the shared factor.
    #[arg(long)]
    rank: usize,
    /// Spectral decay in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    /// Keep probability in (0, 1]; kept entries are rescaled by 1/density.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Additive Gaussian noise scale.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for X.mtx, Y.mtx and manifest.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Matrix Market path for the X side (requires --y).
    #[arg(long, requires = "y", conflicts_with = "synth")]
    x: Option<PathBuf>,
    /// Matrix Market path for the Y side (requires --x).
    #[arg(long, requires = "x", conflicts_with = "synth")]
    y: Option<PathBuf>,
    /// Synthetic config as key=value text, e.g.
    /// "n=2000,dx=200,dy=200,rank=10,decay=0.8,density=0.02,seed=7".
    #[arg(long)]
    synth: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ErrorModeArg {
    Dense,
    Implicit,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DenominatorArg {
    FrobProduct,
    ExactSpectral,
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm name; see `--help` for the registered set.
    #[arg(long)]
    algo: String,
    /// Sketch size (rows of the maintained factors).
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    input: InputArgs,
    /// Power iterations per flush (sparse algorithms only).
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ErrorModeArg::Dense)]
    error_mode: ErrorModeArg,
    #[arg(long, value_enum, default_value_t = DenominatorArg::FrobProduct)]
    err_denominator: DenominatorArg,
    /// Retain per-flush diagnostics and report the measured compression
    /// slack (sparse algorithms only).
    #[arg(long, default_value_t = false)]
    diagnostics: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<String>,
    /// Comma-separated sketch sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
    /// Repeats per cell; timing columns report the per-cell median.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ErrorModeArg::Dense)]
    error_mode: ErrorModeArg,
    #[arg(long, value_enum, default_value_t = DenominatorArg::FrobProduct)]
    err_denominator: DenominatorArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0x5c0d)]
    seed: u64,
    /// Skip the wall-clock complexity criterion (minutes of runtime).
    #[arg(long, default_value_t = false)]
    skip_perf: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::Parse { .. } | Error::Parameter(_) => ExitCode::from(2),
        Error::GuardExceeded { .. } | Error::Io(_) => ExitCode::from(3),
        Error::Flush { source, .. } => exit_code_for(source),
        _ => ExitCode::from(1),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Error> {
    let cfg = SynthConfig {
        n: args.n,
        dx: args.dx,
        dy: args.dy,
        latent_rank: args.rank,
        decay: args.decay,
        noise_scale: args.noise,
        density: args.density,
        seed: args.seed,
    };
    cfg.validate()?;
    let (x, y) = gen_synthetic_matrices(&cfg)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let x_path = args.out_dir.join("X.mtx");
    let y_path = args.out_dir.join("Y.mtx");
    write_matrix_market(&x_path, &x)?;
    write_matrix_market(&y_path, &y)?;

    let manifest = serde_json::json!({
        "config": cfg,
        "nnz_x": x.nnz(),
        "nnz_y": y.nnz(),
        "density_x": x.density(),
        "density_y": y.density(),
        "files": { "x": "X.mtx", "y": "Y.mtx" },
    });
    std::fs::write(
        args.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    eprintln!(
        "wrote {} ({} nnz) and {} ({} nnz)",
        x_path.display(),
        x.nnz(),
        y_path.display(),
        y.nnz()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_input(input: &InputArgs) -> Result<(SparseMatrix, SparseMatrix), Error> {
    match (&input.x, &input.y, &input.synth) {
        (Some(x), Some(y), None) => {
            let xr = read_matrix_market(x)?;
            if xr.dropped_zeros > 0 {
                eprintln!("{}: dropped {} explicit zeros", x.display(), xr.dropped_zeros);
            }
            let yr = read_matrix_market(y)?;
            if yr.dropped_zeros > 0 {
                eprintln!("{}: dropped {} explicit zeros", y.display(), yr.dropped_zeros);
            }
            if xr.matrix.rows() != yr.matrix.rows() {
                return Err(Error::Alignment {
                    x_rows: xr.matrix.rows(),
                    y_rows: yr.matrix.rows(),
                });
            }
            Ok((xr.matrix, yr.matrix))
        }
        (None, None, Some(synth)) => {
            let cfg = SynthConfig::parse(synth)?;
            gen_synthetic_matrices(&cfg)
        }
        _ => Err(Error::Parameter(
            "provide either --x and --y or --synth".into(),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    algo: &str,
    m: usize,
    q: usize,
    seed: u64,
    x: &SparseMatrix,
    y: &SparseMatrix,
    ingest_ms: f64,
    mode: ErrorMode,
    denominator: ErrorDenominator,
    diagnostics: bool,
) -> Result<(String, f64), Error> {
    let mut params = BuildParams::new(m, x.cols(), y.cols());
    params.schedule = QSchedule::fixed(q)?;
    params.seed = seed;
    params.retain_diagnostics = diagnostics && registry::is_sparse_algo(algo);
    let mut sketch = registry::build(algo, &params)?;

    let stream = zip_pair(x.clone(), y.clone())?;
    let t0 = Instant::now();
    for (x_row, y_row) in stream {
        sketch.update(&x_row, &y_row)?;
    }
    let output = sketch.finalize()?;
    let sketch_ms = t0.elapsed().as_secs_f64() * 1e3;

    let opts = oracle::ReportOptions {
        mode,
        denominator,
        cod_diagnostics: algo == "cod",
    };
    let mut report =
        oracle::build_report(&MatRef::Sparse(x), &MatRef::Sparse(y), &output, m, &opts)?;
    report.wall_time_ms.ingest_ms = ingest_ms;
    report.wall_time_ms.sketch_ms = sketch_ms;
    let total_ms = report.wall_time_ms.total_ms();

    let q_field = if registry::is_sparse_algo(algo) {
        q.to_string()
    } else {
        String::new()
    };
    let flush_field = output
        .flush_count
        .map(|t| t.to_string())
        .unwrap_or_default();
    let eps_field = report
        .measured_epsilon_hat
        .map(|e| format!("{e:e}"))
        .unwrap_or_default();
    let theorem1_field = report
        .theorem1_rhs_min
        .map(|v| format!("{v:e}"))
        .unwrap_or_default();

    let csv = format!(
        "{algo},{m},{q_field},{n},{dx},{dy},{nnz_x},{nnz_y},{total:e},{sketch:e},{rel:e},{abs:e},{denom},{lemma2:e},{theorem1},{delta:e},{flush_field},{eps_field},{seed}",
        n = x.rows(),
        dx = x.cols(),
        dy = y.cols(),
        nnz_x = x.nnz(),
        nnz_y = y.nnz(),
        total = total_ms,
        sketch = sketch_ms,
        rel = report.relative_error,
        abs = report.exact_spectral_error,
        denom = report.rel_error_denominator.as_str(),
        lemma2 = report.lemma2_rhs,
        theorem1 = theorem1_field,
        delta = output.delta_sum,
    );
    Ok((csv, sketch_ms))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let t0 = Instant::now();
    let (x, y) = load_input(&args.input)?;
    let ingest_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mode = match args.error_mode {
        ErrorModeArg::Dense => ErrorMode::Dense,
        ErrorModeArg::Implicit => ErrorMode::Implicit,
    };
    let denominator = match args.err_denominator {
        DenominatorArg::FrobProduct => ErrorDenominator::FrobProduct,
        DenominatorArg::ExactSpectral => ErrorDenominator::ExactSpectral,
    };
    let (csv, _) = run_once(
        &args.algo,
        args.m,
        args.q,
        args.seed,
        &x,
        &y,
        ingest_ms,
        mode,
        denominator,
        args.diagnostics,
    )?;
    println!("{CSV_HEADER}");
    println!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let t0 = Instant::now();
    let (x, y) = load_input(&args.input)?;
    let ingest_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mode = match args.error_mode {
        ErrorModeArg::Dense => ErrorMode::Dense,
        ErrorModeArg::Implicit => ErrorMode::Implicit,
    };
    let denominator = match args.err_denominator {
        DenominatorArg::FrobProduct => ErrorDenominator::FrobProduct,
        DenominatorArg::ExactSpectral => ErrorDenominator::ExactSpectral,
    };
    if args.repeats == 0 {
        return Err(Error::Parameter("repeats must be >= 1".into()));
    }
    for algo in &args.algos {
        // Validate names before spawning workers.
        registry::build(algo, &BuildParams::new(1, 1, 1)).map(|_| ())?;
    }

    let cells: Vec<(String, usize)> = args
        .algos
        .iter()
        .flat_map(|a| args.m_list.iter().map(move |&m| (a.clone(), m)))
        .collect();

    // AMM_THREADS caps worker parallelism; default is sequential so that
    // timing columns stay honest.
    let workers = std::env::var("AMM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .clamp(1, cells.len().max(1));

    // Each cell runs its repeats sequentially, then rewrites the timing
    // columns with the per-cell median; error columns stay per-repeat
    // (seed-indexed for the randomized algorithms).
    let run_cell = |algo: &str, m: usize| -> Vec<String> {
        let mut ok_rows: Vec<(usize, String)> = Vec::new();
        let mut err_rows: Vec<(usize, String)> = Vec::new();
        let mut measured: Vec<f64> = Vec::new();
        for rep in 0..args.repeats {
            let seed = args.seed.wrapping_add(rep as u64);
            match run_once(
                algo,
                m,
                args.q,
                seed,
                &x,
                &y,
                ingest_ms,
                mode,
                denominator,
                false,
            ) {
                Ok((csv, sketch_ms)) => {
                    measured.push(sketch_ms);
                    ok_rows.push((rep, csv));
                }
                Err(e) => {
                    let msg = e.to_string().replace(',', ";");
                    let mut fields = vec![algo.to_string(), m.to_string()];
                    fields.resize(19, String::new());
                    err_rows.push((rep, format!("{},{rep},error: {msg}", fields.join(","))));
                }
            }
        }
        measured.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
        let median = measured.get(measured.len() / 2).copied();
        let mut rendered: Vec<(usize, String)> = ok_rows
            .into_iter()
            .map(|(rep, csv)| {
                let mut fields: Vec<String> = csv.split(',').map(str::to_string).collect();
                if let Some(median) = median {
                    fields[8] = format!("{:e}", ingest_ms + median);
                    fields[9] = format!("{median:e}");
                }
                (rep, format!("{},{rep},ok", fields.join(",")))
            })
            .collect();
        rendered.extend(err_rows);
        rendered.sort_by_key(|(rep, _)| *rep);
        rendered.into_iter().map(|(_, row)| row).collect()
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Vec<String>>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (algo, m) = &cells[i];
                let rows = run_cell(algo, *m);
                results.lock().expect("sweep results lock")[i] = Some(rows);
            });
        }
    });

    println!("{CSV_HEADER},repeat,status");
    for rows in results.into_inner().expect("sweep results lock").iter().flatten() {
        for row in rows {
            println!("{row}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let cfg = VerifyConfig {
        seed: args.seed,
        run_perf: !args.skip_perf,
    };
    let outcomes = run_all(&cfg)?;
    let mut all_passed = true;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        all_passed &= outcome.passed;
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
