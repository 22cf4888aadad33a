use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stablefit::cli::{cmd_ecf, cmd_fit, cmd_pdf, cmd_roll, cmd_sample, CommandOutput};
use stablefit::density::DEFAULT_TOL;
use stablefit::estimator::{EstimationConfig, KSelection};
use stablefit::market::PriceColumn;
use stablefit::output::{OutputFormat, Precision};
use stablefit::{Result, StableError, StableParams};

#[derive(Parser)]
#[command(name = "stablefit", version, about = "Levy alpha-stable fitting for return series")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit (alpha, beta, gamma, delta) to each input file
    Fit {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Rolling-window (alpha, beta) tracks
    Roll {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        window: usize,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stable and matched Gaussian densities on a grid
    Pdf {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 201)]
        n_points: usize,
        /// Absolute density tolerance
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw stable variates
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Empirical and fitted characteristic function of the standardized data
    Ecf {
        #[arg(long)]
        input: PathBuf,
        /// Upper wavenumber of the dump
        #[arg(long, default_value_t = 5.0)]
        k_max: f64,
        /// Rows in the dump
        #[arg(long, default_value_t = 200)]
        k_points: usize,
        #[arg(long, value_enum, default_value_t = ColumnArg::Close)]
        column: ColumnArg,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<StableParams> {
        StableParams::new(self.alpha, self.beta, self.gamma, self.delta)
    }
}

#[derive(Args)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = ColumnArg::Close)]
    column: ColumnArg,
    /// Regression points
    #[arg(long)]
    k_points: Option<usize>,
    /// Fixed upper regression wavenumber in normalized units
    #[arg(long)]
    k_max: Option<f64>,
    /// Normalization tolerance on |gamma - 1| and |delta|
    #[arg(long)]
    tol: Option<f64>,
}

impl EstimatorArgs {
    fn config(&self) -> EstimationConfig {
        let mut c = EstimationConfig::default();
        if let Some(n) = self.k_points {
            c.n_k_points = n;
        }
        if let Some(k) = self.k_max {
            c.k_selection = KSelection::Fixed(k);
        }
        if let Some(t) = self.tol {
            c.normalization_tol = t;
        }
        c
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Significant digits, or `full`
    #[arg(long, default_value = "6", value_parser = parse_precision)]
    precision: Precision,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    JsonLines,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColumnArg {
    Close,
    Adjclose,
}

impl From<ColumnArg> for PriceColumn {
    fn from(c: ColumnArg) -> Self {
        match c {
            ColumnArg::Close => PriceColumn::Close,
            ColumnArg::Adjclose => PriceColumn::AdjClose,
        }
    }
}

fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(Precision::Full);
    }
    match s.parse::<usize>() {
        Ok(n) if (1..=17).contains(&n) => Ok(Precision::Significant(n)),
        _ => Err(format!("expected 1..=17 or `full`, got {s:?}")),
    }
}

fn emit(result: CommandOutput, out: &OutputArgs) -> Result<()> {
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let format = match out.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::JsonLines => OutputFormat::JsonLines,
    };
    match &out.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| StableError::from(e).with_context(path.display().to_string()))?;
            let mut w = BufWriter::new(file);
            result.table.write_to(&mut w, format, out.precision)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            result.table.write_to(&mut w, format, out.precision)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { input, est, out } => emit(cmd_fit(&input, est.column.into(), &est.config())?, &out),
        Command::Roll { input, window, est, out } => {
            emit(cmd_roll(&input, est.column.into(), window, &est.config())?, &out)
        }
        Command::Pdf { params, x_min, x_max, n_points, tol, out } => {
            emit(cmd_pdf(&params.params()?, x_min, x_max, n_points, tol)?, &out)
        }
        Command::Sample { params, n, seed, out } => {
            if n == 0 {
                return Err(StableError::Domain { field: "n", value: 0.0, reason: "must be at least 1" });
            }
            emit(cmd_sample(&params.params()?, n, seed)?, &out)
        }
        Command::Ecf { input, k_max, k_points, column, out } => emit(
            cmd_ecf(&input, column.into(), k_max, k_points, &EstimationConfig::default())?,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(StableError::Io(e.to_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
