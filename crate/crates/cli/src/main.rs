use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use htdp_cli::output::{read_rows_file, write_rows};
use htdp_cli::{
    run_experiment, summarize, CalibrationMode, CliError, ExperimentConfig, OutputFormat,
    ResultRow, Task,
};

#[derive(Parser)]
#[command(
    name = "htdp",
    version,
    about = "Private mean estimation and SCO experiments on heavy-tailed data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-estimation trials.
    MeanEst(RunArgs),
    /// Private stochastic convex optimization trials.
    Sco(RunArgs),
    /// Packing constructions and the private Fano bound.
    LowerBound(RunArgs),
    /// Runs the task named in the config file.
    Sweep(RunArgs),
    /// Aggregates a results file per grid point.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Calib {
    Paper,
    Exact,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    algorithm: Option<String>,
    /// e.g. `student_t:k=2`, `packing:p=0.1`.
    #[arg(long)]
    distribution: Option<String>,
    /// e.g. `quadratic:radius=0.5`.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, value_enum)]
    calibration: Option<Calib>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    smoothing_c: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Record per-trial wall-clock time.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results file (CSV or JSON lines).
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl RunArgs {
    fn into_config(self, task: Option<Task>) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(task) = task {
            match c.task {
                Some(t) if t != task => {
                    return Err(CliError::Config(format!(
                        "config is for task {} but the {} subcommand was used",
                        t.name(),
                        task.name()
                    )))
                }
                _ => c.task = Some(task),
            }
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        macro_rules! set_opt {
            ($($field:ident),*) => { $(if self.$field.is_some() { c.$field = self.$field; })* };
        }
        set!(n, d, k, q, trials, beta, smoothing_c, max_iterations);
        set_opt!(rho, eps, algorithm, distribution, loss, tau, workers, out);
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        if let Some(f) = self.format {
            c.format = f.into();
        }
        if let Some(cal) = self.calibration {
            c.calibration = match cal {
                Calib::Paper => CalibrationMode::Paper,
                Calib::Exact => CalibrationMode::Exact,
            };
        }
        c.timing |= self.timing;
        Ok(c)
    }
}

fn emit<T: serde::Serialize>(
    rows: &[T],
    format: OutputFormat,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
            write_rows(rows, format, std::io::BufWriter::new(file))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_rows(rows, format, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, task) = match cli.command {
        Command::MeanEst(a) => (a, Some(Task::MeanEst)),
        Command::Sco(a) => (a, Some(Task::Sco)),
        Command::LowerBound(a) => (a, Some(Task::LowerBound)),
        Command::Sweep(a) => (a, None),
        Command::Summarize(s) => {
            let rows: Vec<ResultRow> = read_rows_file(&s.input)?;
            let table = summarize(&rows)?;
            let format = s.format.map_or(OutputFormat::Csv, Into::into);
            return emit(&table, format, s.out.as_ref());
        }
    };
    let config = args.into_config(task)?;
    let rows = run_experiment(&config)?;
    let failed = rows.iter().filter(|r| !r.metric_value.is_finite()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} trials failed; see the warnings column",
            rows.len()
        );
    }
    emit(&rows, config.format, config.out.as_ref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
