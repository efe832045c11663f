use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmd_core::bench::{random_cell, DEFAULT_FACTORS, DEFAULT_MEASURE_ITERS, DEFAULT_SEED, DEFAULT_SEQ_LEN, DEFAULT_WARMUP_ITERS};
use hmd_core::linalg::{random_matrix, random_vector_with};
use hmd_core::{
    emit_report, load_container, parse_report_csv, run_cell_bench, run_matvec_bench, save_container, BenchConfig,
    BenchShape, Container, ContainerError, Error, LstmCell, LstmState, Preset, RealVector, ReportFormat, Scheme,
    WeightOperator,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_ORACLE: u8 = 4;

/// Compress and benchmark weight operators.
#[derive(Debug, Parser)]
#[command(name = "hmd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress a dense matrix or dense LSTM cell into a container.
    Compress(CompressArgs),
    /// Summarize a container and optionally verify it against a dense oracle.
    Check(CheckArgs),
    /// Time matvecs or LSTM forward passes across schemes and factors.
    Bench(BenchArgs),
    /// Re-render a CSV benchmark report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct CompressArgs {
    /// Container path, `random:MxN` for a seeded random matrix or
    /// `random-cell:IxH` for a seeded dense LSTM cell.
    #[arg(long = "in")]
    input: String,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long)]
    factor: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    a: PathBuf,
    /// Compare against the densified operator on seeded inputs.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchTarget {
    Matvec,
    Cell,
}

#[derive(Debug, Args)]
struct BenchArgs {
    target: BenchTarget,
    #[arg(long, value_parser = parse_preset, required_unless_present = "dims", conflicts_with = "dims")]
    preset: Option<Preset>,
    /// `MxN` for matvec, `INPUTxHIDDEN` for cell.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<(usize, usize)>,
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    schemes: Option<Vec<Scheme>>,
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_WARMUP_ITERS)]
    warmup: usize,
    #[arg(long, default_value_t = DEFAULT_MEASURE_ITERS)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_SEQ_LEN)]
    seq_len: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// CSV report produced by `bench`; `-` reads stdin.
    #[arg(long = "in", default_value = "-")]
    input: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Table => ReportFormat::Table,
        }
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected MxN, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad dimension '{t}'"));
    Ok((parse(a)?, parse(b)?))
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn format(message: impl Into<String>) -> Self {
        Failure { code: EXIT_FORMAT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ContainerError> for Failure {
    fn from(e: ContainerError) -> Self {
        match e {
            ContainerError::Io(io) => Failure::usage(io.to_string()),
            other => Failure::format(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Compress(args) => compress(args),
        Command::Check(args) => check(args),
        Command::Bench(args) => bench(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn compress(args: CompressArgs) -> CmdResult {
    if !(args.factor.is_finite() && args.factor >= 1.0) {
        return Err(Failure::usage(format!("--factor must be at least 1, got {}", args.factor)));
    }
    let random_dims = |spec: &str| -> Result<(usize, usize), Failure> {
        match parse_dims(spec).map_err(Failure::usage)? {
            (0, _) | (_, 0) => Err(Failure::usage("random dimensions must be positive")),
            dims => Ok(dims),
        }
    };
    let source = if let Some(spec) = args.input.strip_prefix("random:") {
        let (m, n) = random_dims(spec)?;
        Container::Operator(random_matrix(m, n, 1.0 / (n as f64).sqrt(), args.seed).into())
    } else if let Some(spec) = args.input.strip_prefix("random-cell:") {
        let (input, hidden) = random_dims(spec)?;
        Container::Cell(random_cell(input, hidden, args.seed))
    } else {
        load_container(&args.input)?
    };
    let out = match source {
        Container::Operator(WeightOperator::Dense(a)) => Container::Operator(hmd_core::compress_matrix(&a, args.scheme, args.factor)?),
        Container::Cell(cell) => Container::Cell(cell.compress(args.scheme, args.factor)?),
        Container::Operator(op) => {
            return Err(Failure::usage(format!("input is already compressed ({})", op.kind())));
        }
    };
    save_container(&args.out, &out)?;
    println!("{}", summary(&out));
    Ok(())
}

fn summary(item: &Container) -> String {
    match item {
        Container::Operator(op) => {
            let dense = (op.out_dim() * op.in_dim()) as f64;
            let mut s = format!(
                "kind={} rows={} cols={} params={} macs={} factor={:.4}",
                op.kind(),
                op.out_dim(),
                op.in_dim(),
                op.param_count(),
                op.mac_count(),
                dense / op.param_count().max(1) as f64
            );
            match op {
                WeightOperator::Hmd(h) => s += &format!(" dense_rows={}", h.dense_rows()),
                WeightOperator::Lmf(l) => s += &format!(" rank={}", l.inner_rank()),
                WeightOperator::Csr(c) => s += &format!(" nnz={} index_words={}", c.nnz(), c.storage().index_overhead),
                WeightOperator::Dense(_) => {}
            }
            s
        }
        Container::Cell(cell) => {
            let dense = (4 * cell.hidden_dim() * (cell.input_dim() + cell.hidden_dim())) as f64;
            let kind = cell.operator_kind().map_or("mixed".to_string(), |k| k.to_string());
            format!(
                "kind=lstm_cell weights={} input={} hidden={} params={} macs_per_step={} factor={:.4}",
                kind,
                cell.input_dim(),
                cell.hidden_dim(),
                cell.param_count(),
                cell.mac_count(1),
                dense / cell.weight_param_count().max(1) as f64
            )
        }
    }
}

fn check(args: CheckArgs) -> CmdResult {
    let item = load_container(&args.a)?;
    println!("{}", summary(&item));
    if !args.oracle {
        return Ok(());
    }
    let (diff, tol) = match &item {
        Container::Operator(op) => operator_oracle(op, args.seed),
        Container::Cell(cell) => cell_oracle(cell, args.seed),
    };
    if diff < tol {
        println!("oracle: pass max_abs_diff={diff:e} tol={tol:e}");
        Ok(())
    } else {
        println!("oracle: FAIL max_abs_diff={diff:e} tol={tol:e}");
        Err(Failure { code: EXIT_ORACLE, message: "oracle mismatch".into() })
    }
}

fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

const ORACLE_TRIALS: usize = 16;
const ORACLE_STEPS: usize = 81;

/// Operator matvec against the expanded matrix, as a plain loop.
fn operator_oracle(op: &WeightOperator, seed: u64) -> (f64, f64) {
    let dense = op.to_dense();
    let (m, n) = (op.out_dim(), op.in_dim());
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_TRIALS {
        let x = random_vector_with(&mut rng, n, 1.0);
        let y = op.matvec(&x).expect("length matches");
        for i in 0..m {
            let mut want = 0.0;
            for j in 0..n {
                want += dense.get(i, j) * x.as_slice()[j];
            }
            worst = worst.max((y.as_slice()[i] - want).abs());
        }
    }
    (worst, 1e-12 * n as f64 * dense.max_abs().max(f64::MIN_POSITIVE))
}

fn cell_oracle(cell: &LstmCell, seed: u64) -> (f64, f64) {
    let twin = cell.densified();
    let mut rng = seeded_rng(seed);
    let xs: Vec<RealVector> = (0..ORACLE_STEPS).map(|_| random_vector_with(&mut rng, cell.input_dim(), 1.0)).collect();
    let init = LstmState::zeros(cell.hidden_dim());
    let a = cell.forward(&xs, &init).expect("shapes match");
    let b = twin.forward(&xs, &init).expect("shapes match");
    let worst = a
        .iter()
        .zip(&b)
        .flat_map(|(s, t)| {
            let h = s.h.as_slice().iter().zip(t.h.as_slice());
            let c = s.c.as_slice().iter().zip(t.c.as_slice());
            h.chain(c).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max);
    (worst, 1e-10)
}

fn bench(args: BenchArgs) -> CmdResult {
    let shape = match (args.preset, args.dims, args.target) {
        (Some(p), _, _) => BenchShape::from(p),
        (None, Some((rows, cols)), BenchTarget::Matvec) => BenchShape::Matrix { rows, cols },
        (None, Some((input_dim, hidden_dim)), BenchTarget::Cell) => BenchShape::Cell { input_dim, hidden_dim },
        (None, None, _) => return Err(Failure::usage("one of --preset or --dims is required")),
    };
    let config = BenchConfig {
        schemes: args.schemes.unwrap_or_else(|| Scheme::ALL.to_vec()),
        factors: args.factors.unwrap_or_else(|| DEFAULT_FACTORS.to_vec()),
        warmup_iters: args.warmup,
        measure_iters: args.iters,
        seq_len: args.seq_len,
        seed: args.seed,
        ..BenchConfig::new(shape)
    };
    let rows = match args.target {
        BenchTarget::Matvec => run_matvec_bench(&config)?,
        BenchTarget::Cell => run_cell_bench(&config)?,
    };
    let text = emit_report(&rows, args.format.into())?;
    match args.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn report(args: ReportArgs) -> CmdResult {
    let text = if args.input == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&args.input)?
    };
    let rows = parse_report_csv(&text).map_err(|e| Failure::format(e.to_string()))?;
    let out = emit_report(&rows, args.format.into()).map_err(|e| Failure::format(e.to_string()))?;
    io::stdout().write_all(out.as_bytes())?;
    Ok(())
}
