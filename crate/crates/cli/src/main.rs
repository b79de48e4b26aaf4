use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use paley_core::charsum::{self, SubsetPair};
use paley_core::clique::{clique_number, DEFAULT_NODE_BUDGET};
use paley_core::etf::{verify_etf, EtfMatrix, SeidelMatrix};
use paley_core::extractor::{self, BiasMode, BIAS_CSV_HEADER};
use paley_core::format::{round_json, sig12};
use paley_core::pipeline::{self, GammaChoice, ImplicationConfig, ScalingConfig};
use paley_core::rip::{self, RipReport};
use paley_core::search::SearchConfig;
use paley_core::{Error, FieldCtx, Subset};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug, Serialize)]
#[command(name = "paley", version, about = "Paley ETF and Paley graph extractor laboratory")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration budget; scientific notation accepted.
    #[arg(long, global = true, value_parser = parse_count)]
    budget: Option<u128>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Character tables and the Gauss-sum check.
    Field(FieldArgs),
    /// The Paley ETF: verification report, or the matrix itself as CSV.
    Etf(EtfArgs),
    /// The RIP constant δ_K.
    Rip(RipArgs),
    /// Double character sums and the checks built on them.
    Charsum(CharsumArgs),
    /// Clique number of the Paley graph.
    Clique(CliqueArgs),
    /// Extractor bias on flat sources.
    Extractor(ExtractorArgs),
    /// RIP ⇒ character-sum bound ⇒ extractor bound at one prime.
    Implication(ImplicationArgs),
    /// δ_K against √(K/p)·log₂K·log₂p over a list of primes.
    Scaling(ScalingArgs),
}

#[derive(Args, Debug, Serialize)]
struct FieldArgs {
    #[arg(long)]
    p: u64,
    /// Accept any odd prime instead of only p ≡ 1 (mod 4).
    #[arg(long)]
    any_odd: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EtfOutput {
    Verify,
    Matrix,
    Seidel,
}

#[derive(Args, Debug, Serialize)]
struct EtfArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, value_enum, default_value_t = EtfOutput::Verify)]
    output: EtfOutput,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RipMethod {
    /// Exact if within budget, else seeded search.
    Best,
    Exact,
    Search,
    Coherence,
}

#[derive(Args, Debug, Serialize)]
struct RipArgs {
    #[arg(long)]
    p: u64,
    #[arg(long = "K")]
    k: usize,
    #[arg(long, value_enum, default_value_t = RipMethod::Best)]
    method: RipMethod,
    #[arg(long, default_value_t = 20_000)]
    iters: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CharsumTask {
    Sum,
    Decomposition,
    Chain,
    Karatsuba,
    Property,
    Scan,
}

#[derive(Args, Debug, Serialize)]
struct CharsumArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, value_enum, default_value_t = CharsumTask::Sum)]
    task: CharsumTask,
    #[arg(long = "S", value_delimiter = ',')]
    s: Vec<usize>,
    #[arg(long = "T", value_delimiter = ',')]
    t: Vec<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// β at which to report the empirical constant C.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sizes for local search and scans.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Local search instead of the exhaustive property scan.
    #[arg(long)]
    search: bool,
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    #[arg(long, default_value_t = 8)]
    restarts: u32,
    #[arg(long, default_value_t = 1000, value_parser = parse_count_u64)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct CliqueArgs {
    #[arg(long)]
    p: u64,
}

#[derive(Args, Debug, Serialize)]
struct ExtractorArgs {
    #[arg(long)]
    p: u64,
    /// Flat sources to evaluate; omit both to search for the worst case.
    #[arg(long = "S", value_delimiter = ',')]
    s: Vec<usize>,
    #[arg(long = "T", value_delimiter = ',')]
    t: Vec<usize>,
    /// Min-entropies (bits) for the worst-case sweep.
    #[arg(long, value_delimiter = ',')]
    k: Vec<f64>,
    #[arg(long)]
    search: bool,
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    #[arg(long, default_value_t = 8)]
    restarts: u32,
}

#[derive(Args, Debug, Serialize)]
struct ImplicationArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Absolute γ; overrides --gamma-frac.
    #[arg(long)]
    gamma: Option<f64>,
    /// γ as a fraction of the measured τ.
    #[arg(long, default_value_t = 0.5)]
    gamma_frac: f64,
    #[arg(long = "Kmax", default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value_t = 100_000, value_parser = parse_count_u64)]
    samples: u64,
    #[arg(long, default_value_t = 2000)]
    iters: u64,
    #[arg(long, default_value_t = 8)]
    restarts: u32,
}

#[derive(Args, Debug, Serialize)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long = "Kmax", default_value_t = 4)]
    k_max: usize,
    #[arg(long, default_value_t = 20_000)]
    iters: u64,
    /// Append the fitted constants as comment lines (CSV) or a field (JSON).
    #[arg(long)]
    fit: bool,
}

fn parse_count(s: &str) -> Result<u128, String> {
    if let Ok(v) = s.parse::<u128>() {
        return Ok(v);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a nonnegative count such as 1000 or 1e6, got '{s}'"))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 3.4e38) {
        return Err(format!("expected a nonnegative integral count, got '{s}'"));
    }
    Ok(v as u128)
}

fn parse_count_u64(s: &str) -> Result<u64, String> {
    let v = parse_count(s)?;
    u64::try_from(v).map_err(|_| format!("count '{s}' is too large"))
}

enum Output {
    Json(Value),
    /// Data lines, joined with LF after the provenance line.
    Csv(String),
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 3,
            Error::NoConvergence { .. } | Error::NotSymmetric | Error::CrossCheckFailed(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn pair_from(p: u64, s: &[usize], t: &[usize]) -> Result<SubsetPair, Failure> {
    let build = |flag: &str, items: &[usize]| {
        Subset::try_from_indices(p as usize, items.iter().copied())
            .ok_or_else(|| usage(format!("--{flag}: elements must lie in 0..{p}")))
    };
    Ok(SubsetPair::new(build("S", s)?, build("T", t)?))
}

fn budget(cli: &Cli, default: u128) -> u128 {
    cli.budget.unwrap_or(default)
}

fn run(cli: &Cli, format: Format) -> Result<Output, Failure> {
    match &cli.command {
        Command::Field(a) => {
            let ctx = FieldCtx::new(a.p, !a.any_odd)?;
            let gauss = if ctx.is_1mod4() { Some(ctx.gauss_sum_max_error()?) } else { None };
            if format == Format::Csv {
                let mut out = String::from("x,chi\n");
                for (x, c) in ctx.chi_table().iter().enumerate() {
                    out.push_str(&format!("{x},{c}\n"));
                }
                return Ok(Output::Csv(out));
            }
            Ok(Output::Json(json!({
                "p": ctx.p(),
                "n_bits": ctx.n_bits(),
                "is_1mod4": ctx.is_1mod4(),
                "qr": ctx.qr_set(),
                "chi": ctx.chi_table(),
                "gauss_sum_max_error": gauss,
            })))
        }
        Command::Etf(a) => {
            let ctx = FieldCtx::paley(a.p)?;
            match a.output {
                EtfOutput::Verify => {
                    let etf = EtfMatrix::build(&ctx)?;
                    Ok(Output::Json(to_value(&verify_etf(&etf, a.tol))))
                }
                EtfOutput::Matrix => Ok(Output::Csv(EtfMatrix::build(&ctx)?.to_csv())),
                EtfOutput::Seidel => Ok(Output::Csv(SeidelMatrix::build(&ctx)?.to_csv())),
            }
        }
        Command::Rip(a) => {
            let ctx = FieldCtx::paley(a.p)?;
            let s = SeidelMatrix::build(&ctx)?;
            let b = budget(cli, rip::DEFAULT_BUDGET);
            let report: RipReport = match a.method {
                RipMethod::Best => rip::rip_best_available(&s, a.k, b, a.iters, cli.seed)?,
                RipMethod::Exact => rip::rip_exact(&s, a.k, b)?,
                RipMethod::Search => rip::rip_lower_search(&s, a.k, a.iters, cli.seed)?,
                RipMethod::Coherence => rip::rip_coherence_report(a.p, a.k),
            };
            Ok(match format {
                Format::Json => Output::Json(to_value(&report)),
                Format::Csv => Output::Csv(format!("{}\n{}\n", RipReport::CSV_HEADER, report.csv_row())),
            })
        }
        Command::Charsum(a) => run_charsum(cli, a, format),
        Command::Clique(a) => {
            let ctx = FieldCtx::paley(a.p)?;
            let r = clique_number(&ctx, cli.budget.map_or(DEFAULT_NODE_BUDGET, |b| b.min(u64::MAX as u128) as u64))?;
            Ok(Output::Json(to_value(&r)))
        }
        Command::Extractor(a) => run_extractor(cli, a, format),
        Command::Implication(a) => {
            let ctx = FieldCtx::paley(a.p)?;
            let defaults = ImplicationConfig::default();
            let cfg = ImplicationConfig {
                epsilon: a.epsilon,
                gamma: a.gamma.map_or(GammaChoice::FractionOfTau(a.gamma_frac), GammaChoice::Absolute),
                k_max: a.k_max,
                rip_budget: budget(cli, defaults.rip_budget),
                sweep_budget: budget(cli, defaults.sweep_budget),
                samples: a.samples,
                search: SearchConfig {
                    iters: a.iters,
                    restarts: a.restarts,
                    seed: cli.seed,
                },
                seed: cli.seed,
                ..defaults
            };
            Ok(Output::Json(to_value(&pipeline::run_implication(&ctx, &cfg)?)))
        }
        Command::Scaling(a) => {
            let cfg = ScalingConfig {
                k_max: a.k_max,
                rip_budget: budget(cli, rip::DEFAULT_BUDGET),
                rip_iters: a.iters,
                seed: cli.seed,
            };
            let rows = pipeline::run_scaling_study(&a.primes, &cfg)?;
            let fit = if a.fit { Some(pipeline::fit_constants(&rows)?) } else { None };
            Ok(match format {
                Format::Csv => {
                    let mut out = pipeline::scaling_csv(&rows);
                    if let Some(f) = fit {
                        out.push_str(&format!(
                            "# fit c1_hat={} c2_hat={} rms_residual={}\n",
                            sig12(f.c1_hat),
                            sig12(f.c2_hat),
                            sig12(f.rms_residual)
                        ));
                    }
                    Output::Csv(out)
                }
                Format::Json => Output::Json(json!({ "rows": rows, "fit": fit })),
            })
        }
    }
}

fn run_charsum(cli: &Cli, a: &CharsumArgs, format: Format) -> Result<Output, Failure> {
    let ctx = FieldCtx::paley(a.p)?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for this task")));
    let search_cfg = SearchConfig {
        iters: a.iters,
        restarts: a.restarts,
        seed: cli.seed,
    };
    let value = match a.task {
        CharsumTask::Sum => {
            let pair = pair_from(a.p, &a.s, &a.t)?;
            let sum = charsum::double_char_sum(&ctx, &pair)?;
            if format == Format::Csv {
                return Ok(Output::Csv(format!("{}\n{}\n", charsum::SCAN_HEADER, charsum::scan_row(&ctx, &pair)?)));
            }
            json!({ "p": a.p, "S": pair.s, "T": pair.t, "sum": sum })
        }
        CharsumTask::Decomposition => to_value(&charsum::decomposition_check(&ctx, &pair_from(a.p, &a.s, &a.t)?)?),
        CharsumTask::Chain => {
            let pair = pair_from(a.p, &a.s, &a.t)?;
            let delta = need(a.delta, "delta")?;
            let tau = a.tau.unwrap_or(-delta.ln() / (a.p as f64).ln());
            let gamma = a.gamma.unwrap_or(tau / 2.0);
            to_value(&charsum::chain_bound_check(&ctx, &pair, delta, tau, gamma)?)
        }
        CharsumTask::Karatsuba => {
            let pair = pair_from(a.p, &a.s, &a.t)?;
            to_value(&charsum::karatsuba_check(&ctx, &pair, need(a.epsilon, "epsilon")?)?)
        }
        CharsumTask::Property => {
            let alpha = need(a.alpha, "alpha")?;
            let report = if a.search {
                if a.sizes.is_empty() {
                    return Err(usage("--sizes is required with --search"));
                }
                charsum::property_p_search(&ctx, alpha, &a.sizes, &search_cfg)?
            } else {
                charsum::property_p_exhaustive(&ctx, alpha, budget(cli, rip::DEFAULT_BUDGET))?
            };
            to_value(&match a.beta {
                Some(b) => report.at_beta(b),
                None => report,
            })
        }
        CharsumTask::Scan => {
            if a.sizes.is_empty() {
                return Err(usage("--sizes is required for a scan"));
            }
            let mut out = format!("{}\n", charsum::SCAN_HEADER);
            for i in 0..a.samples {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cli.seed);
                rng.set_stream(i);
                let m = a.sizes.len() as u64;
                let (ns, nt) = (a.sizes[(i % m) as usize], a.sizes[((i / m) % m) as usize]);
                if ns > ctx.size() || nt > ctx.size() {
                    return Err(usage(format!("--sizes: sizes must be at most {}", a.p)));
                }
                let pair = SubsetPair::new(
                    Subset::random(ctx.size(), ns, &mut rng),
                    Subset::random(ctx.size(), nt, &mut rng),
                );
                out.push_str(&charsum::scan_row(&ctx, &pair)?);
                out.push('\n');
            }
            return Ok(Output::Csv(out));
        }
    };
    Ok(Output::Json(value))
}

fn run_extractor(cli: &Cli, a: &ExtractorArgs, format: Format) -> Result<Output, Failure> {
    let ctx = FieldCtx::paley(a.p)?;
    if !a.s.is_empty() || !a.t.is_empty() {
        let pair = pair_from(a.p, &a.s, &a.t)?;
        let r = extractor::flat_bias(&ctx, &pair.s, &pair.t)?.with_beta();
        return Ok(match format {
            Format::Json => Output::Json(to_value(&r)),
            Format::Csv => Output::Csv(format!("{BIAS_CSV_HEADER}\n{}\n", r.csv_row())),
        });
    }
    if a.k.is_empty() {
        return Err(usage("give --S and --T, or --k for a worst-case sweep"));
    }
    let cfg = SearchConfig {
        iters: a.iters,
        restarts: a.restarts,
        seed: cli.seed,
    };
    let mode = if a.search || a.p > paley_core::masks::MAX_MASK_P {
        BiasMode::Search
    } else {
        BiasMode::Exhaustive
    };
    let reports = a
        .k
        .iter()
        .map(|&k| extractor::worst_flat_bias(&ctx, k, mode, &cfg, budget(cli, rip::DEFAULT_BUDGET)).map(|r| r.with_beta()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match format {
        Format::Csv => {
            let mut out = format!("{BIAS_CSV_HEADER}\n");
            for r in &reports {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            Output::Csv(out)
        }
        Format::Json if reports.len() == 1 => Output::Json(to_value(&reports[0])),
        Format::Json => Output::Json(json!({ "reports": reports })),
    })
}

fn default_format(cmd: &Command) -> Format {
    match cmd {
        Command::Scaling(_) => Format::Csv,
        Command::Etf(a) if a.output != EtfOutput::Verify => Format::Csv,
        _ => Format::Json,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Field(_) => "field",
        Command::Etf(_) => "etf",
        Command::Rip(_) => "rip",
        Command::Charsum(_) => "charsum",
        Command::Clique(_) => "clique",
        Command::Extractor(_) => "extractor",
        Command::Implication(_) => "implication",
        Command::Scaling(_) => "scaling",
    }
}

fn provenance(cli: &Cli, format: Format, workers: usize) -> Value {
    let flags = match to_value(&cli.command) {
        Value::Object(mut m) => m.remove(command_name(&cli.command)).unwrap_or(Value::Null),
        other => other,
    };
    json!({
        "tool": "paley",
        "version": VERSION,
        "command": command_name(&cli.command),
        "flags": flags,
        "format": format,
        "budget": cli.budget.map(|b| b.to_string()),
        "seed": cli.seed,
        "workers": workers,
    })
}

fn render(out: Output, prov: Value) -> String {
    match out {
        Output::Json(mut v) => {
            round_json(&mut v);
            let v = match v {
                Value::Object(mut m) => {
                    m.insert("provenance".into(), prov);
                    Value::Object(m)
                }
                other => json!({ "provenance": prov, "result": other }),
            };
            let mut s = serde_json::to_string_pretty(&v).expect("serializable");
            s.push('\n');
            s
        }
        Output::Csv(body) => format!("# provenance {}\n{body}", serde_json::to_string(&prov).expect("serializable")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format.unwrap_or_else(|| default_format(&cli.command));
    if format == Format::Csv && matches!(cli.command, Command::Clique(_) | Command::Implication(_)) {
        eprintln!("error: --format csv is not available for {}", command_name(&cli.command));
        return ExitCode::from(2);
    }
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let (result, workers) = pool.install(|| (run(&cli, format), rayon::current_num_threads()));
    let text = match result {
        Ok(out) => render(out, provenance(&cli, format, workers)),
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, text.as_bytes()),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
