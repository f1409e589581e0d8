//! `fractv`: fractional derivatives and integrals of sampled signals, the
//! r-order total variation, TV^r denoising, order search and the
//! verification suite.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fractv::denoise::LossSpec;
use fractv::frac1d::{frac_derivative_caputo, frac_derivative_revised, frac_derivative_rl, frac_integral};
use fractv::io::{format_f64, read_field, read_signal_csv, write_field, write_signal_csv};
use fractv::{
    denoise, exec, order_search, tv_dual_estimate, tv_primal, verify, Dataset, DenoiseConfig, Field2D, FracOrder,
    GridFunction, LpIndex, Side, Signal1D, TVMethod, TVResult,
};

#[derive(Parser)]
#[command(name = "fractv", version, about = "Fractional calculus and r-order total variation on [0,1] and [0,1]²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fractional derivative of a signal (one value per line).
    Deriv(DerivArgs),
    /// Riemann–Liouville fractional integral of a signal.
    Integral(IntegralArgs),
    /// r-order total variation of a signal or image.
    Tv(TvArgs),
    /// TV^r-regularised denoising of a signal or image.
    Denoise(DenoiseArgs),
    /// Grid search for the order minimising the loss over a dataset.
    OrderSearch(OrderSearchArgs),
    /// Run the numerical verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Rl,
    Caputo,
    Revised,
}

#[derive(Args)]
struct DerivArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output CSV; values go to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    order: f64,
    #[arg(long, default_value = "left")]
    side: Side,
    #[arg(long, value_enum, default_value = "rl")]
    kind: Kind,
}

#[derive(Args)]
struct IntegralArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    order: f64,
    #[arg(long, default_value = "left")]
    side: Side,
}

#[derive(Args)]
struct TvArgs {
    /// Signal CSV (one column), matrix CSV or PGM image.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    order: f64,
    #[arg(long, default_value = "2")]
    lp: LpIndex,
    #[arg(long, default_value = "primal")]
    method: TVMethod,
    /// Random test fields for the dual estimate.
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full result as JSON instead of the bare value.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output path; `.pgm` or `.csv` for images, `.csv` for signals.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    order: f64,
    #[arg(long, default_value = "2")]
    lp: LpIndex,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Smoothing of the TV term; defaults to 1e-6 times the input range.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Optional JSON file with the energy trace.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct OrderSearchArgs {
    /// Candidate orders as `start:stop:step` (both ends included) or a single value.
    #[arg(long, value_parser = parse_ladder)]
    orders: Ladder,
    /// Directory of `<name>.clean.{pgm,csv}` / `<name>.noisy.{pgm,csv}` pairs.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Exponent of the denoiser's TV term.
    #[arg(long, default_value = "2")]
    lp: LpIndex,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    /// Exponent of the loss's TV term.
    #[arg(long, default_value = "2")]
    loss_lp: LpIndex,
    /// Fixed order of the loss's TV term; defaults to each candidate order.
    #[arg(long, allow_negative_numbers = true)]
    loss_order: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// `all` or a comma-separated list of experiment names.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report path; `.csv` and `.json` files are written next to each other.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
struct Ladder(Vec<f64>);

/// `a:b:step` with both ends included when `step` divides the span to
/// within 1e-12 (relative to the number of steps); a bare number is one order.
fn parse_ladder(s: &str) -> Result<Ladder, String> {
    let nums = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<Vec<f64>, String>>()?;
    if nums.iter().any(|v| !v.is_finite()) {
        return Err("orders must be finite".into());
    }
    match nums[..] {
        [r] => Ok(Ladder(vec![r])),
        [a, b, step] => {
            if step <= 0.0 || b < a {
                return Err(format!("need start ≤ stop and step > 0 in '{s}'"));
            }
            let span = (b - a) / step;
            let whole = span.round();
            let (count, ends_at_b) =
                if (span - whole).abs() <= 1e-12 * whole.max(1.0) { (whole, true) } else { (span.floor(), false) };
            if count > 1e6 {
                return Err(format!("'{s}' gives more than a million orders"));
            }
            let mut v: Vec<f64> = (0..=count as usize).map(|i| a + i as f64 * step).collect();
            if ends_at_b {
                *v.last_mut().expect("ladder has at least one order") = b;
            }
            Ok(Ladder(v))
        }
        _ => Err(format!("expected start:stop:step, got '{s}'")),
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification(usize),
}

impl From<fractv::Error> for Failure {
    fn from(e: fractv::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Verification(k) => write!(f, "{k} verification experiment(s) failed"),
        }
    }
}

type Outcome = Result<(), Failure>;

enum Input {
    Signal(Signal1D),
    Field(Field2D),
}

/// A one-column CSV is a signal; anything else is read as an image.
fn read_input(path: &Path) -> Result<Input, Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        if let Ok(w) = read_signal_csv(path) {
            return Ok(Input::Signal(w));
        }
    }
    Ok(Input::Field(read_field(path)?))
}

fn read_signal(path: &Path) -> Result<Signal1D, Failure> {
    Ok(read_signal_csv(path)?)
}

fn emit_signal(w: &Signal1D, output: Option<&Path>) -> Outcome {
    match output {
        Some(p) => Ok(write_signal_csv(p, w)?),
        None => {
            let mut out = String::with_capacity(24 * w.len());
            for v in w.as_slice() {
                out.push_str(&format_f64(*v));
                out.push('\n');
            }
            print!("{out}");
            Ok(())
        }
    }
}

fn run_deriv(a: DerivArgs) -> Outcome {
    let w = read_signal(&a.input)?;
    let r = FracOrder::new(a.order)?;
    let out = match a.kind {
        Kind::Rl => frac_derivative_rl(&w, r, a.side)?,
        Kind::Caputo => frac_derivative_caputo(&w, r, a.side)?,
        Kind::Revised => {
            if a.side != Side::Left {
                return Err(Failure::Usage("the revised derivative is left-sided only".into()));
            }
            frac_derivative_revised(&w, a.order)?
        }
    };
    emit_signal(&out, a.output.as_deref())
}

fn run_integral(a: IntegralArgs) -> Outcome {
    let w = read_signal(&a.input)?;
    emit_signal(&frac_integral(&w, a.order, a.side)?, a.output.as_deref())
}

fn tv_of<F: GridFunction>(u: &F, a: &TvArgs) -> Result<TVResult, Failure> {
    let r = FracOrder::new(a.order)?;
    Ok(match a.method {
        TVMethod::Primal => tv_primal(u, r, a.lp)?,
        TVMethod::Dual => tv_dual_estimate(u, r, a.lp, a.trials, a.seed)?,
    })
}

fn run_tv(a: TvArgs) -> Outcome {
    let res = match read_input(&a.input)? {
        Input::Signal(w) => tv_of(&w, &a)?,
        Input::Field(u) => tv_of(&u, &a)?,
    };
    if !res.value.is_finite() {
        return Err(Failure::Numerical(format!("TV^{} evaluated to {}", a.order, res.value)));
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&res).expect("TV results serialise"));
    } else {
        println!("{}", res.value);
    }
    Ok(())
}

fn run_denoise(a: DenoiseArgs) -> Outcome {
    let mut cfg = DenoiseConfig::new(a.alpha, a.order, a.lp)?;
    cfg.max_iters = a.iters;
    cfg.tol = a.tol;
    cfg.eps = a.eps;
    cfg.validate()?;
    let (energies, iterations, converged, eps) = match read_input(&a.input)? {
        Input::Signal(w) => {
            let rep = denoise(&w, &cfg)?;
            write_signal_csv(&a.output, &rep.output)?;
            (rep.energies, rep.iterations, rep.converged, rep.eps)
        }
        Input::Field(u) => {
            let rep = denoise(&u, &cfg)?;
            write_field(&a.output, &rep.output)?;
            (rep.energies, rep.iterations, rep.converged, rep.eps)
        }
    };
    let last = energies.last().copied().unwrap_or(f64::NAN);
    println!("iterations {iterations}, converged {converged}, energy {last}");
    if let Some(path) = a.report {
        let doc = serde_json::json!({
            "config": cfg,
            "eps": eps,
            "iterations": iterations,
            "converged": converged,
            "energies": energies,
        });
        write_text(&path, &(serde_json::to_string_pretty(&doc).expect("report serialises") + "\n"))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_order_search(a: OrderSearchArgs) -> Outcome {
    let ds = Dataset::load(&a.dataset)?;
    let mut cfg = DenoiseConfig::new(a.alpha, 1.0, a.lp)?;
    cfg.max_iters = a.iters;
    cfg.tol = a.tol;
    cfg.validate()?;
    let loss = LossSpec { beta0: a.beta0, beta1: a.beta1, p: a.loss_lp, r_loss: a.loss_order };
    let rep = order_search(&ds, &a.orders.0, &cfg, &loss)?;
    for row in &rep.table {
        println!("r = {:<8} loss = {}", row.r, format_f64(row.total_loss));
    }
    println!("best r = {}", rep.best_r);
    if let Some(path) = a.report {
        write_text(&path, &(serde_json::to_string_pretty(&rep).expect("report serialises") + "\n"))?;
    }
    Ok(())
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let names: Vec<&str> = a.suite.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let suite = verify::run_suite(&names, a.n, a.seed)?;
    for r in &suite.reports {
        let params = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
        println!(
            "{}  {:<20} {:<44} measured {:>12.5e}  bound {:>12.5e}",
            if r.pass { "pass" } else { "FAIL" },
            r.name,
            params,
            r.measured,
            r.bound
        );
    }
    let failed = suite.failed().count();
    println!("{} of {} experiments passed", suite.reports.len() - failed, suite.reports.len());
    if let Some(path) = a.report {
        suite.write(&path)?;
    }
    if failed > 0 {
        Err(Failure::Verification(failed))
    } else {
        Ok(())
    }
}

fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var("FRACTV_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("FRACTV_THREADS must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

fn run(cli: Cli) -> Outcome {
    let threads = threads_from_env()?;
    exec::with_threads(threads, move || match cli.command {
        Command::Deriv(a) => run_deriv(a),
        Command::Integral(a) => run_integral(a),
        Command::Tv(a) => run_tv(a),
        Command::Denoise(a) => run_denoise(a),
        Command::OrderSearch(a) => run_order_search(a),
        Command::Verify(a) => run_verify(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(match f {
                Failure::Usage(_) => 1,
                Failure::Numerical(_) => 2,
                Failure::Verification(_) => 3,
            })
        }
    }
}
