//! Command-line front end: Luxemburg norms, atomic decompositions, Walsh
//! analysis, seeded verification campaigns and reports.
//!
//! Exit codes: 0 on success or a passing campaign, 2 when a campaign exceeds
//! its ceiling or its hypotheses are rejected in strict mode, 1 on usage and
//! input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mohardy::grid::martingale_of;
use mohardy::harness::{
    atom_campaign, decompose, fejer_convergence, five_space_report, verify, AtomCampaignConfig,
    CampaignKind, ExperimentConfig, Inequality, Law, DEFAULT_STABILITY,
};
use mohardy::walsh::{analyze, fejer_mean, maximal_fejer, partial_sum};
use mohardy::{builtin, luxemburg_norm, Error, SampledFunction};

const GRAMMAR: &str = "\
phi-spec grammar:
  spec   := family [ ':' param { ',' param } ]
  param  := key '=' value
  family := power(p) | wpower(p, w) | orlicz-exp | loglow(alpha) | loggrow(alpha)
          | logdamp(alpha) | double-phase(p, q, w) | varexp(pfile)
          | xlog(alpha, beta, gamma) | tabulated(file)
  w      := one | zero | <csv path>
examples: power:p=2   double-phase:p=2,q=4,w=one   xlog:alpha=1.5,beta=1,gamma=1";

#[derive(Parser, Debug)]
#[command(
    name = "mohardy",
    version,
    about = "Dyadic martingale Hardy spaces in Musielak-Orlicz norms"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout, including for failures.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Luxemburg norm of a sampled function.
    Norm {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Atomic decomposition of the centered martingale of a sampled function.
    Decompose {
        /// One of s, S, M, P, Q.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Weight parameter of the weighted M/S constructions.
        #[arg(long, default_value_t = 1.0)]
        t_star: f64,
    },
    /// Walsh-Paley analysis of a sampled function.
    Walsh {
        #[command(subcommand)]
        op: WalshOp,
    },
    /// Seeded verification campaign for one inequality.
    Verify(VerifyArgs),
    /// Tables: five-space equivalence, Fejér convergence, atom campaigns.
    Report {
        #[command(subcommand)]
        op: ReportOp,
    },
}

#[derive(Subcommand, Debug)]
enum WalshOp {
    /// Paley-ordered Walsh coefficients.
    Coeffs(WalshInput),
    /// Partial sum `s_n f`.
    PartialSum(WalshOrder),
    /// Fejér mean `σ_n f`.
    Fejer(WalshOrder),
    /// Maximal Fejér operator `σ_* f`.
    Maximal(WalshInput),
}

#[derive(Args, Debug)]
struct WalshInput {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct WalshOrder {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// doob, weak, dual-doob, fefferman-stein, stein, s-vs-S, bdg, five-space,
    /// transform, partial-sum, maximal-fejer, maximal-fejer-dyadic, uv-maximal.
    name: String,
    #[arg(long)]
    phi: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [6u32, 8, 10])]
    resolutions: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    r: Option<f64>,
    /// bounded, gaussian, heavy or sparse.
    #[arg(long, default_value = "gaussian")]
    law: String,
    /// Run even when hypotheses fail, attaching the hypothesis report.
    #[arg(long)]
    exploratory: bool,
    #[arg(long, default_value_t = DEFAULT_STABILITY)]
    stability: f64,
    #[arg(long)]
    ceiling: Option<f64>,
    /// Report path; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ReportOp {
    /// Pairwise ratios among H^M, H^S, H^s, P and Q for one input.
    FiveSpace {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Errors of σ_n f and s_n f along a schedule.
    Fejer {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        input: PathBuf,
        /// Sorted orders; defaults to powers of two up to the grid size.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<usize>>,
    },
    /// Randomised atom campaign.
    Atoms {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        t_star: f64,
        #[arg(long, default_value = "gaussian")]
        law: String,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = if matches!(error, Error::Hypothesis(_)) {
            2
        } else {
            1
        };
        Failure { code, error }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Hypothesis(_) => "hypothesis",
        Error::Io(_) => "io",
        Error::Json(_) | Error::Csv(_) => "format",
        Error::TrialFailed { .. } => "trial-failed",
        _ => "input",
    }
}

fn emit(json: bool, value: serde_json::Value, text: String) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("json value serialises")
        );
    } else {
        print!("{text}");
    }
}

fn read(path: &Path) -> Result<SampledFunction, Error> {
    SampledFunction::read_path(path)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let json = cli.json;
    match cli.command {
        Command::Norm { phi, input } => {
            let phi = builtin(&phi)?;
            let f = read(&input)?;
            let norm = luxemburg_norm(&phi, &f)?;
            emit(
                json,
                json!({ "phi": phi.label(), "norm": norm }),
                format!("{norm}\n"),
            );
        }
        Command::Decompose {
            kind,
            phi,
            input,
            out,
            t_star,
        } => {
            let kind: CampaignKind = kind.parse()?;
            let phi = builtin(&phi)?;
            let m = martingale_of(&read(&input)?, true);
            let dec = decompose(&m, &phi, kind, t_star)?;
            let text = dec.to_json_string();
            match out {
                Some(p) => {
                    std::fs::write(&p, &text).map_err(Error::from)?;
                    let summary = json!({ "atoms": dec.triples.len(), "atomic_norm": dec.atomic_norm()?, "out": p });
                    emit(
                        json,
                        summary,
                        format!("{} atoms written to {}\n", dec.triples.len(), p.display()),
                    );
                }
                None => println!("{text}"),
            }
        }
        Command::Walsh { op } => match op {
            WalshOp::Coeffs(a) => {
                let s = analyze(&read(&a.input)?);
                if json {
                    println!("{}", s.to_json_string());
                } else {
                    print!("{}", s.to_csv_string());
                }
            }
            WalshOp::PartialSum(a) => print_function(json, &partial_sum(&read(&a.input)?, a.n)),
            WalshOp::Fejer(a) => print_function(json, &fejer_mean(&read(&a.input)?, a.n)?),
            WalshOp::Maximal(a) => print_function(json, &maximal_fejer(&read(&a.input)?)),
        },
        Command::Verify(v) => {
            let inequality: Inequality = v.name.parse()?;
            let mut config =
                ExperimentConfig::new(inequality, &v.phi, v.resolutions, v.trials, v.seed);
            config.r = v.r;
            config.law = v.law.parse::<Law>()?;
            config.exploratory = v.exploratory;
            config.stability = v.stability;
            config.ceiling = v.ceiling;
            let report = verify(&config)?;
            let as_json = json
                || v.out
                    .as_ref()
                    .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
            let text = if as_json {
                report.to_json_string() + "\n"
            } else {
                report.to_csv_string()
            };
            write_or_print(v.out.as_deref(), &text)?;
            if !report.pass {
                return Ok(2);
            }
        }
        Command::Report { op } => match op {
            ReportOp::FiveSpace { phi, input } => {
                let phi = builtin(&phi)?;
                let m = martingale_of(&read(&input)?, true);
                let rep = five_space_report(&m, &phi)?;
                let mut text = String::from("left,right,ratio\n");
                for r in &rep.ratios {
                    text.push_str(&format!("{},{},{:?}\n", r.left, r.right, r.ratio));
                }
                emit(json, serde_json::to_value(&rep).map_err(Error::from)?, text);
            }
            ReportOp::Fejer {
                phi,
                input,
                schedule,
            } => {
                let phi = builtin(&phi)?;
                let f = read(&input)?;
                let schedule = schedule
                    .unwrap_or_else(|| (0..=f.grid().resolution()).map(|k| 1usize << k).collect());
                let rows = fejer_convergence(&f, &phi, &schedule)?;
                let mut text = String::from("n,sigma_error,partial_error\n");
                for r in &rows {
                    text.push_str(&format!(
                        "{},{:?},{:?}\n",
                        r.n, r.sigma_error, r.partial_error
                    ));
                }
                emit(
                    json,
                    serde_json::to_value(&rows).map_err(Error::from)?,
                    text,
                );
            }
            ReportOp::Atoms {
                kind,
                phi,
                resolution,
                trials,
                seed,
                r,
                t_star,
                law,
            } => {
                let config = AtomCampaignConfig {
                    kind: kind.parse()?,
                    resolution,
                    trials,
                    seed,
                    r,
                    t_star,
                    law: law.parse()?,
                };
                let rep = atom_campaign(&config, &builtin(&phi)?)?;
                let text = format!(
                    "trials={} skipped={} atoms={} min_norm_ratio={:?} max_norm_ratio={:?} max_fejer_atom_ratio={:?}\n",
                    trials, rep.skipped, rep.atoms, rep.min_norm_ratio, rep.max_norm_ratio, rep.max_fejer_atom_ratio
                );
                emit(json, serde_json::to_value(&rep).map_err(Error::from)?, text);
            }
        },
    }
    Ok(0)
}

fn print_function(json: bool, f: &SampledFunction) {
    if json {
        println!("{}", f.to_json_string());
    } else {
        print!("{}", f.to_csv_string());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code == 1 {
                eprintln!("\n{GRAMMAR}");
            }
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            if json {
                let detail = match &error {
                    Error::Hypothesis(report) => {
                        serde_json::from_str(report).unwrap_or(json!(report))
                    }
                    other => json!(other.to_string()),
                };
                let value = json!({ "error": error_kind(&error), "message": error.to_string(), "detail": detail, "exit_code": code });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&value).expect("json value serialises")
                );
            } else {
                if let Error::Hypothesis(report) = &error {
                    eprintln!("error: hypothesis check failed in strict mode (use --exploratory to run anyway)");
                    println!("{report}");
                } else {
                    eprintln!("error: {error}");
                }
                if matches!(error, Error::Parse { .. }) {
                    eprintln!("\n{GRAMMAR}");
                }
            }
            ExitCode::from(code)
        }
    }
}
