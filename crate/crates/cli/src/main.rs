use std::path::PathBuf;
use std::process::ExitCode;

use bubble_bs::harness::{CompareSpec, SurfaceSpec, FIGURE_H_VALUES};
use bubble_bs::pde::GridConfig;
use bubble_bs::series::DEFAULT_N_MAX;
use bubble_bs::{MarketParams, Method, SquareBubble};
use bubble_bs_cli::commands::{cmd_coeffs, cmd_compare, cmd_price, cmd_surface, Report};
use bubble_bs_cli::config::{
    parse_grid, parse_method, Format, OutputSpec, QuotePoint, RunConfig, SweepSpec,
};
use bubble_bs_cli::output::write_atomic;
use bubble_bs_cli::CliError;
use clap::{Args, Parser, Subcommand};

const AFTER_HELP: &str = "\
Times are times to maturity tau = T - t unless --t is used.
Defaults marked [artifact-chosen] are illustrative values, not published ones.
Environment: BUBBLE_BS_MAX_ORDER caps the highest Greek order (default 16, max 40).
Exit codes: 0 success, 2 invalid input, 3 numerical guard (pole or stiffness), 1 I/O.";

#[derive(Parser)]
#[command(name = "bubble-bs", version, about = "European call prices under a square arbitrage bubble", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one (S, tau) point and show the per-order term table.
    Price(PriceArgs),
    /// Price surfaces over (S, tau), one CSV file per coupling.
    Surface(SurfaceArgs),
    /// Report series errors against the finite-difference oracle.
    Compare(CompareArgs),
    /// Print rows of the coefficient triangle.
    Coeffs(CoeffsArgs),
}

#[derive(Args, Clone)]
struct MarketArgs {
    /// Risk-free rate r.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    r: f64,
    /// Drift alpha of the underlying.
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    alpha: f64,
    /// Volatility sigma [artifact-chosen].
    #[arg(long, default_value_t = 0.4)]
    sigma: f64,
    /// Strike K [artifact-chosen].
    #[arg(long, default_value_t = 100.0)]
    strike: f64,
    /// Maturity T [artifact-chosen].
    #[arg(long, default_value_t = 1.0)]
    maturity: f64,
    /// Bubble window start, in time to maturity [artifact-chosen].
    #[arg(long, default_value_t = 0.25)]
    tau1: f64,
    /// Bubble window end, in time to maturity [artifact-chosen].
    #[arg(long, default_value_t = 0.75)]
    tau2: f64,
}

impl MarketArgs {
    fn market(&self) -> Result<MarketParams, CliError> {
        Ok(MarketParams::new(
            self.r,
            self.alpha,
            self.sigma,
            self.strike,
            self.maturity,
        )?)
    }
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// Series method: perturb3, exact, trunc3, dual-exact or dual-trunc3.
    #[arg(long)]
    method: Option<String>,
    /// Highest Greek order of the exact series.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
}

impl MethodArgs {
    fn method(&self, default: &str) -> Result<Method, CliError> {
        parse_method(self.method.as_deref().unwrap_or(default), self.n_max)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Load the whole run configuration from JSON; parameter flags are then ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the resolved run configuration as JSON before running.
    #[arg(long)]
    save_config: Option<PathBuf>,
    /// Evaluate couplings next to the pole h = 1.
    #[arg(long)]
    allow_near_pole: bool,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    market: MarketArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Bubble amplitude f0.
    #[arg(long, conflicts_with = "h")]
    f0: Option<f64>,
    /// Bubble amplitude as a fraction h = f0 / sigma.
    #[arg(long)]
    h: Option<f64>,
    /// Spot price S (defaults to the strike).
    #[arg(long)]
    s: Option<f64>,
    /// Time to maturity tau.
    #[arg(long, conflicts_with = "t")]
    tau: Option<f64>,
    /// Calendar time t, converted to tau = T - t.
    #[arg(long)]
    t: Option<f64>,
    /// Also solve the finite-difference oracle and report the gap.
    #[arg(long)]
    oracle: bool,
    /// Oracle grid NSxNT.
    #[arg(long, default_value = "400x400")]
    grid: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SurfaceArgs {
    #[command(flatten)]
    market: MarketArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated couplings (h, or h* for dual methods); defaults to the figure list.
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    /// Surface lattice NSxNT: S = s_max i / NS for i = 1..=NS, tau = T j / NT for j = 0..=NT.
    #[arg(long, default_value = "60x40")]
    grid: String,
    /// Largest spot on the lattice.
    #[arg(long, default_value_t = 300.0)]
    s_max: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    market: MarketArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "exact,trunc3,perturb3")]
    methods: Vec<String>,
    /// Highest Greek order of the exact series.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    /// Comma-separated couplings h; defaults to the figure list.
    #[arg(long, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    /// Oracle grid NSxNT.
    #[arg(long, default_value = "400x400")]
    grid: String,
    /// Spot window for the max-abs error, as LO,HI (defaults to K/2,2K).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    s_window: Option<Vec<f64>>,
    /// Time to maturity of the at-the-money comparison (defaults to mid-window).
    #[arg(long)]
    atm_tau: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffsArgs {
    /// Number of rows.
    #[arg(long, default_value_t = 7)]
    n_max: usize,
    /// Output format (csv prints space-separated rows).
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn grid_config(text: &str) -> Result<GridConfig, CliError> {
    let (n_s, n_tau) = parse_grid(text).map_err(|e| CliError::Validation(format!("invalid `grid`: {e}")))?;
    Ok(GridConfig::new(n_s, n_tau))
}

fn load_or(run: &RunArgs, build: impl FnOnce() -> Result<RunConfig, CliError>) -> Result<RunConfig, CliError> {
    let cfg = match &run.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => build()?,
    };
    if let Some(path) = &run.save_config {
        write_atomic(path, cfg.to_json().as_bytes())?;
    }
    Ok(cfg)
}

fn price(a: PriceArgs) -> Result<Report, CliError> {
    let cfg = load_or(&a.run, || {
        let market = a.market.market()?;
        let f0 = match (a.f0, a.h) {
            (Some(f0), _) => f0,
            (None, Some(h)) => h * market.sigma(),
            (None, None) => 0.0,
        };
        let bubble = SquareBubble::new(f0, a.market.tau1, a.market.tau2, &market)?;
        let tau = match (a.tau, a.t) {
            (Some(tau), _) => tau,
            (None, Some(t)) => market.maturity() - t,
            (None, None) => market.maturity(),
        };
        Ok(RunConfig {
            market,
            bubble,
            method: a.method.method("exact")?,
            grid: Some(grid_config(&a.grid)?),
            output: OutputSpec {
                path: a.out.clone(),
                format: a.run.format,
            },
            sweep: None,
            point: Some(QuotePoint {
                s: a.s.unwrap_or(market.strike()),
                tau,
            }),
            allow_near_pole: a.run.allow_near_pole,
        })
    })?;
    cmd_price(&cfg, a.oracle)
}

fn surface(a: SurfaceArgs) -> Result<Report, CliError> {
    let cfg = load_or(&a.run, || {
        let market = a.market.market()?;
        let (n_s, n_tau) = parse_grid(&a.grid).map_err(|e| CliError::Validation(format!("invalid `grid`: {e}")))?;
        Ok(RunConfig {
            market,
            bubble: SquareBubble::new(0.0, a.market.tau1, a.market.tau2, &market)?,
            method: a.method.method("perturb3")?,
            grid: None,
            output: OutputSpec {
                path: Some(a.out.clone()),
                format: a.run.format,
            },
            sweep: Some(SweepSpec {
                h_values: a.h_list.clone().unwrap_or_else(|| FIGURE_H_VALUES.to_vec()),
                surface: SurfaceSpec {
                    s_max: a.s_max,
                    n_s,
                    n_tau,
                },
            }),
            point: None,
            allow_near_pole: a.run.allow_near_pole,
        })
    })?;
    if cfg.output.format == Some(Format::Json) {
        return Err(CliError::Validation(
            "invalid `format`: surfaces are written as CSV".into(),
        ));
    }
    cmd_surface(&cfg)
}

fn compare(a: CompareArgs) -> Result<Report, CliError> {
    let methods = a
        .methods
        .iter()
        .map(|m| parse_method(m, a.n_max))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = load_or(&a.run, || {
        let market = a.market.market()?;
        Ok(RunConfig {
            market,
            bubble: SquareBubble::new(0.0, a.market.tau1, a.market.tau2, &market)?,
            method: methods[0],
            grid: Some(grid_config(&a.grid)?),
            output: OutputSpec {
                path: a.out.clone(),
                format: a.run.format,
            },
            sweep: Some(SweepSpec {
                h_values: a.h_list.clone().unwrap_or_else(|| FIGURE_H_VALUES.to_vec()),
                surface: SurfaceSpec::default(),
            }),
            point: None,
            allow_near_pole: a.run.allow_near_pole,
        })
    })?;
    let m = &cfg.market;
    let (tau1, tau2) = (cfg.bubble.tau1(), cfg.bubble.tau2());
    let s_window = match a.s_window.as_deref() {
        Some([lo, hi]) if lo < hi => (*lo, *hi),
        Some(_) => return Err(CliError::Validation("invalid `s-window`: need LO < HI".into())),
        None => (0.5 * m.strike(), 2.0 * m.strike()),
    };
    let spec = CompareSpec {
        methods,
        h_values: cfg.sweep.as_ref().map(|s| s.h_values.clone()).unwrap_or_default(),
        tau1,
        tau2,
        grid: cfg.grid.unwrap_or_default(),
        s_window,
        atm_tau: a.atm_tau.unwrap_or(0.5 * (tau1 + tau2)),
        max_points_per_axis: 40,
    };
    cmd_compare(&cfg, &spec)
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Price(a) => price(a),
        Command::Surface(a) => surface(a),
        Command::Compare(a) => compare(a),
        Command::Coeffs(a) => cmd_coeffs(a.n_max, a.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{}", report.stdout);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
