use std::fmt::Write as _;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use steinmle::boundary::{FisherAtTheta0, PoissonC};
use steinmle::models::{BoundOptions, Model, ModelKind};
use steinmle::montecarlo::{ci_coverage, run_mse_sweep, run_simulation, SimulationConfig};
use steinmle::msebound::{beta_constants, BetaParams};
use steinmle::report::{breakdown_csv, reports_csv, round_sig, table_csv, to_json, BoundReport};
use steinmle::steincore::{conservative_ci, ConfidenceInterval, HWeights};
use steinmle::tables::{build_table, Table, TableId, TableSimulation};
use steinmle::{Error, Result};

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(
    name = "steinmle",
    version,
    about = "Finite-sample normal-approximation bounds for maximum likelihood estimators"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Term-by-term distance bound and its Kolmogorov conversion.
    Bound(BoundArgs),
    /// Monte Carlo comparison of the MLE with its normal approximation.
    Simulate(SimulateArgs),
    /// Reproduce simulation table 1, 2 or 3.
    Table(TableArgs),
    /// Coverage of the conservative confidence interval, or one interval with --theta-hat.
    Ci(CiArgs),
    /// Empirical MSE of the Beta MLE against the MSE bound over a range of n.
    MseSweep(SweepArgs),
    /// Beta-model constants B1, B2, B3, D_psi1 and the minimal n.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// exp-canonical, exp-noncanonical, poisson or beta.
    #[arg(long)]
    model: String,
    #[arg(long)]
    theta0: f64,
    /// Known second shape of the beta model (default 1).
    #[arg(long)]
    beta: Option<f64>,
}

impl ModelArgs {
    fn model(&self) -> Result<Model> {
        Model::with_beta(ModelKind::from_str(&self.model)?, self.theta0, self.beta)
    }
}

#[derive(Args)]
struct BoundOptArgs {
    /// Override of ε (default θ₀/2).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Poisson perturbation constant: a positive number or `auto`.
    #[arg(long, default_value = "auto")]
    c: String,
}

impl BoundOptArgs {
    fn options(&self) -> Result<BoundOptions> {
        let c = if self.c == "auto" {
            PoissonC::Auto
        } else {
            let v: f64 = self
                .c
                .parse()
                .map_err(|_| Error::Validation(format!("--c must be a number or `auto`, got `{}`", self.c)))?;
            PoissonC::Fixed(v)
        };
        Ok(BoundOptions {
            epsilon: self.epsilon,
            c,
        })
    }
}

#[derive(Args)]
struct SeedArgs {
    /// Master seed.
    #[arg(long, env = "STEINMLE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: u64,
    /// ‖h‖ weight.
    #[arg(long, default_value_t = 1.0)]
    h_sup: f64,
    /// ‖h'‖ weight.
    #[arg(long, default_value_t = 1.0)]
    h_lip: f64,
    #[command(flatten)]
    opts: BoundOptArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = SimulationConfig::DEFAULT_TRIALS)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    opts: BoundOptArgs,
}

#[derive(Args)]
struct TableArgs {
    /// 1, 2 or 3.
    which: u8,
    /// Monte Carlo trials (default 10000 for tables 1-2, 1000 for table 3).
    #[arg(long)]
    trials: Option<u64>,
    /// Print the deterministic bound columns only.
    #[arg(long)]
    bounds_only: bool,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    /// Report the interval around this estimate instead of simulating coverage.
    #[arg(long)]
    theta_hat: Option<f64>,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 1.5)]
    theta0: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// First n of the range.
    #[arg(long)]
    n_start: u64,
    /// Last n of the range (inclusive).
    #[arg(long)]
    n_end: u64,
    #[arg(long, default_value_t = 100)]
    step: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArgs,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Also evaluate B3 at this n.
    #[arg(long)]
    n: Option<u64>,
}

fn json_out<T: serde::Serialize>(kind: &str, body: &T) -> Result<String> {
    to_json(kind, body).map(|mut s| {
        s.push('\n');
        s
    })
}

fn cmd_bound(a: &BoundArgs, format: Format) -> Result<String> {
    let model = a.model.model()?;
    let weights = HWeights::new(a.h_sup, a.h_lip)?;
    let r = BoundReport::compute(model, a.n, weights, a.opts.options()?)?;
    match format {
        Format::Json => json_out("bound", &r),
        Format::Csv => breakdown_csv(&r.breakdown),
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "model {} theta0 {} n {}", model.name(), model.theta0, a.n).unwrap();
            if let Some(b) = model.beta {
                writeln!(s, "beta {b}").unwrap();
            }
            writeln!(s, "weights ||h|| = {}, ||h'|| = {}", weights.sup_norm, weights.lip_norm).unwrap();
            for t in &r.breakdown.terms {
                writeln!(s, "  {:<18} {:.9}", t.label, t.value).unwrap();
            }
            writeln!(s, "  {:<18} {:.9}", "total", r.breakdown.total).unwrap();
            writeln!(s, "d_bW bound {:.9}", r.bw_bound).unwrap();
            writeln!(s, "B_K = 2 sqrt(d_bW) {:.9}", r.b_k).unwrap();
            Ok(s)
        }
    }
}

fn cmd_simulate(a: &SimulateArgs, format: Format) -> Result<String> {
    let mut cfg = SimulationConfig::new(a.model.model()?, a.n, a.seed.seed);
    cfg.trials = a.trials;
    cfg.threads = a.seed.threads;
    cfg.bound_options = a.opts.options()?;
    let r = run_simulation(&cfg)?;
    match format {
        Format::Json => json_out("simulation", &r),
        Format::Csv => reports_csv(std::slice::from_ref(&r)),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "model {} theta0 {} n {} trials {} seed {}",
                r.model, r.theta0, r.n, r.trials, r.seed
            )
            .unwrap();
            writeln!(s, "rng {}", r.rng).unwrap();
            writeln!(
                s,
                "h {} (||h|| = {}, ||h'|| = {})",
                r.test_function, r.h_sup_norm, r.h_lip_norm
            )
            .unwrap();
            writeln!(s, "E h(target)            {:.9}", r.reference_expectation).unwrap();
            writeln!(s, "mean h                 {:.9}", r.mean_h).unwrap();
            let se = r
                .standard_error
                .map_or("unavailable".to_string(), |v| format!("{v:.3e}"));
            writeln!(
                s,
                "h-specific discrepancy {:.3e} (standard error {se})",
                r.empirical_distance
            )
            .unwrap();
            writeln!(s, "empirical MSE          {:.6e}", r.empirical_mse).unwrap();
            match (r.bound_total, r.error) {
                (Some(b), Some(e)) => {
                    writeln!(s, "bound                  {b:.6}\nerror                  {e:.6}").unwrap()
                }
                _ => writeln!(s, "bound                  unavailable at this n").unwrap(),
            }
            Ok(s)
        }
    }
}

fn render_table(t: &Table) -> String {
    let bound_dp = if t.id == TableId::Three { 4 } else { 3 };
    let mut s = String::new();
    writeln!(
        s,
        "Table {}: {} theta0 {}",
        t.id.number(),
        t.model.name(),
        t.model.theta0
    )
    .unwrap();
    if let (Some(trials), Some(seed)) = (t.trials, t.seed) {
        writeln!(s, "trials {trials} seed {seed}").unwrap();
    }
    let extra = if t.id == TableId::Two {
        format!(" {:>12}", "direct Stein")
    } else {
        String::new()
    };
    writeln!(
        s,
        "{:>8} {:>24} {:>12} {:>12}{extra}",
        "n",
        t.id.empirical_label(),
        "bound",
        "error"
    )
    .unwrap();
    for r in &t.rows {
        let emp = r.empirical.map_or("-".into(), |v| round_sig(v, 2));
        let err = r.error.map_or("-".into(), |v| format!("{v:.bound_dp$}"));
        let extra = r.direct_bound.map_or(String::new(), |v| format!(" {v:>12.3}"));
        writeln!(s, "{:>8} {:>24} {:>12.bound_dp$} {:>12}{extra}", r.n, emp, r.bound, err).unwrap();
    }
    s
}

fn cmd_table(a: &TableArgs, format: Format) -> Result<String> {
    let id = TableId::from_number(a.which)?;
    let sim = (!a.bounds_only).then(|| TableSimulation {
        trials: a.trials.unwrap_or(if id == TableId::Three {
            1000
        } else {
            SimulationConfig::DEFAULT_TRIALS
        }),
        seed: a.seed.seed,
        threads: a.seed.threads,
    });
    let t = build_table(id, sim)?;
    match format {
        Format::Json => json_out("table", &t),
        Format::Csv => table_csv(&t),
        Format::Text => Ok(render_table(&t)),
    }
}

fn cmd_ci(a: &CiArgs, format: Format) -> Result<String> {
    let model = a.model.model()?;
    if let Some(theta_hat) = a.theta_hat {
        let r = BoundReport::compute(model, a.n, HWeights::UNIT, BoundOptions::default())?;
        let i = match model.fisher_info()? {
            FisherAtTheta0::Finite(i) if model.has_unit_normal_target() => i,
            _ => return Err(Error::Validation(format!("{} has no unit-normal interval", model.kind))),
        };
        let ci = conservative_ci(theta_hat, a.n, i, a.alpha, r.b_k)?;
        let body =
            json!({ "model": model, "n": a.n, "alpha": a.alpha, "theta_hat": theta_hat, "b_k": r.b_k, "interval": ci });
        return match format {
            Format::Json => json_out("interval", &body),
            Format::Csv => {
                let (lo, hi) = match ci {
                    ConfidenceInterval::Bounded { lower, upper } => (lower, upper),
                    ConfidenceInterval::WholeLine => (f64::NEG_INFINITY, f64::INFINITY),
                };
                Ok(format!(
                    "model,n,alpha,theta_hat,b_k,lower,upper\n{},{},{},{},{},{},{}\n",
                    model.name(),
                    a.n,
                    a.alpha,
                    theta_hat,
                    r.b_k,
                    lo,
                    hi
                ))
            }
            Format::Text => Ok(match ci {
                ConfidenceInterval::Bounded { lower, upper } => {
                    format!("B_K {:.6}\ninterval [{lower:.9}, {upper:.9}]\n", r.b_k)
                }
                ConfidenceInterval::WholeLine => {
                    format!("B_K {:.6} >= alpha/2: the interval is the whole line\n", r.b_k)
                }
            }),
        };
    }
    let r = ci_coverage(&model, a.n, a.alpha, a.trials, a.seed.seed, a.seed.threads)?;
    match format {
        Format::Json => json_out("coverage", &r),
        Format::Csv => Ok(format!(
            "model,theta0,n,alpha,trials,seed,bw_bound,b_k,whole_line,coverage,standard_error\n{},{},{},{},{},{},{},{},{},{},{}\n",
            model.name(),
            r.theta0,
            r.n,
            r.alpha,
            r.trials,
            r.seed,
            r.bw_bound,
            r.b_k,
            r.whole_line,
            r.coverage,
            r.standard_error
        )),
        Format::Text => Ok(format!(
            "model {} theta0 {} n {} alpha {} trials {} seed {}\nd_bW bound {:.6}  B_K {:.6}{}\ncoverage {:.4} (standard error {:.4})\n",
            model.name(),
            r.theta0,
            r.n,
            r.alpha,
            r.trials,
            r.seed,
            r.bw_bound,
            r.b_k,
            if r.whole_line { "  (whole-line interval)" } else { "" },
            r.coverage,
            r.standard_error
        )),
    }
}

fn cmd_mse_sweep(a: &SweepArgs, format: Format) -> Result<String> {
    if a.step == 0 || a.n_end < a.n_start {
        return Err(Error::Validation("need n_start <= n_end and step >= 1".into()));
    }
    let p = BetaParams::new(a.theta0, a.beta)?;
    let ns = (a.n_start..=a.n_end).step_by(a.step as usize);
    let reports = run_mse_sweep(&p, ns, a.trials, a.seed.seed, a.seed.threads)?;
    match format {
        Format::Json => json_out("mse-sweep", &json!({ "reports": reports })),
        Format::Csv => reports_csv(&reports),
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "beta({}, {}) trials {} seed {}",
                a.theta0, a.beta, a.trials, a.seed.seed
            )
            .unwrap();
            writeln!(s, "{:>8} {:>14} {:>12} {:>12}", "n", "empirical MSE", "bound", "error").unwrap();
            for r in &reports {
                let b = r.bound_total.expect("sweep attaches the bound");
                writeln!(
                    s,
                    "{:>8} {:>14} {:>12.4} {:>12.4}",
                    r.n,
                    round_sig(r.empirical_mse, 2),
                    b,
                    b - r.empirical_mse
                )
                .unwrap();
            }
            Ok(s)
        }
    }
}

fn cmd_constants(a: &ConstantsArgs, format: Format) -> Result<String> {
    let model = a.model.model()?;
    let p = model
        .beta_params()
        .ok_or_else(|| Error::Validation(format!("constants are defined for the beta model, not {}", model.kind)))?;
    let c = beta_constants(&p, a.n)?;
    match format {
        Format::Json => json_out("constants", &c),
        Format::Csv => {
            let b3 = c.b3.map_or(String::new(), |v| v.to_string());
            Ok(format!(
                "theta0,beta,B1,B2,B3,D_psi1,minimal_n\n{},{},{},{},{},{},{}\n",
                p.theta0, p.beta, c.b1, c.b2, b3, c.d_psi1, c.minimal_n
            ))
        }
        Format::Text => {
            let mut s = format!("B1 {:.6}\nB2 {:.6}\n", c.b1, c.b2);
            if let Some(b3) = c.b3 {
                writeln!(s, "B3 {b3:.6}").unwrap();
            }
            writeln!(s, "D_psi1 {:.6}\nminimal_n {}", c.d_psi1, c.minimal_n).unwrap();
            Ok(s)
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Bound(a) => cmd_bound(a, cli.format),
        Command::Simulate(a) => cmd_simulate(a, cli.format),
        Command::Table(a) => cmd_table(a, cli.format),
        Command::Ci(a) => cmd_ci(a, cli.format),
        Command::MseSweep(a) => cmd_mse_sweep(a, cli.format),
        Command::Constants(a) => cmd_constants(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (code, kind) = if e.is_validation() {
                (2, "validation")
            } else {
                (3, "numerical")
            };
            if cli.format == Format::Json {
                let body = json!({ "schema": "steinmle/error/v1", "kind": kind, "message": e.to_string() });
                eprintln!("{body}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(code)
        }
    }
}
