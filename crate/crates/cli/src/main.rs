mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use testvec::Error;

use commands::Outcome;
use config::RunConfig;

const REPORT_SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "testvec", version, about = "Test vectors for trilinear forms on GL2(Q_p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed forms for gamma-translates of new vectors, and coset identities.
    VerifyLemmas {
        #[arg(long)]
        config: PathBuf,
    },
    /// Value of the normalized form on `gamma^a v1 (x) gamma^b v2 (x) gamma^c v3`.
    EvalForm {
        #[arg(long)]
        config: PathBuf,
        /// Exponents `a,b,c`.
        #[arg(long, allow_hyphen_values = true)]
        tensor: String,
    },
    /// Full check of one theorem case for the configured triple.
    VerifyTheorem {
        #[arg(long)]
        config: PathBuf,
        /// vt-00n, vt-01sc-a, vt-01sc-b, equal-conductor, reducible-i, reducible-ii, reducible-iii-a.
        #[arg(long)]
        case: String,
    },
    /// Paths on the Bruhat-Tits tree, written as Graphviz.
    Tree {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyLemmas { .. } => "verify-lemmas",
            Command::EvalForm { .. } => "eval-form",
            Command::VerifyTheorem { .. } => "verify-theorem",
            Command::Tree { .. } => "tree",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::VerifyLemmas { config }
            | Command::EvalForm { config, .. }
            | Command::VerifyTheorem { config, .. }
            | Command::Tree { config, .. } => config,
        }
    }

    fn run(&self, cfg: &RunConfig) -> Result<Outcome, Error> {
        match self {
            Command::VerifyLemmas { .. } => commands::verify_lemmas(cfg),
            Command::EvalForm { tensor, .. } => commands::eval_form(cfg, tensor),
            Command::VerifyTheorem { case, .. } => commands::verify_case(cfg, case),
            Command::Tree { out, .. } => commands::tree(cfg, out),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Budget { .. } => "budget",
        Error::Config(_) => "config",
        Error::Unsupported(_) | Error::Underdetermined(_) | Error::CaseMismatch(_) => "out-of-scope",
        Error::PrecisionUnderflow { .. } | Error::Precision(_) | Error::NotRepresentable { .. } | Error::LevelOverflow { .. } => {
            "precision"
        }
        _ => "invalid-input",
    }
}

fn conventions(cfg: Option<&RunConfig>) -> Value {
    json!({
        "haar_gl2": "vol(K) = 1",
        "haar_units": "vol(Z_p^x) = 1",
        "haar_torus": "d^x a d^x d with vol(Z_p^x) = 1 on each factor",
        "vol_j": "vol(J_n) = p^n / |GL2(Z/p^n)|",
        "normalization": "induction is normalized by |a/d|^(1/2)",
        "additive_character": "psi(x) = exp(2 pi i {x}_p), trivial on Z_p and not on p^-1 Z_p",
        "tolerance": cfg.map(|c| c.tol),
    })
}

fn emit(report: &Value, target: Option<&Path>) {
    let text = serde_json::to_string_pretty(report).expect("json");
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: cannot write report {}: {e}", path.display());
            }
        }
        None => println!("{text}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = cli.command.name();
    let cfg = RunConfig::load(cli.command.config());
    let outcome = cfg.as_ref().map_err(Clone::clone).and_then(|c| cli.command.run(c));
    let cfg = cfg.ok();
    let target = cfg.as_ref().and_then(|c| c.report.as_deref());
    let mut report = json!({
        "schema": REPORT_SCHEMA,
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.as_ref().map(|c| c.seed),
        "config": cfg,
        "conventions": conventions(cfg.as_ref()),
    });
    let code = match outcome {
        Ok(Outcome { result, pass }) => {
            report["pass"] = json!(pass);
            report["result"] = result;
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("{command}: check failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            report["pass"] = json!(false);
            report["error"] = json!({ "kind": error_kind(&e), "message": e.to_string() });
            ExitCode::from(2)
        }
    };
    report["elapsed_ms"] = json!(start.elapsed().as_millis() as u64);
    emit(&report, target);
    code
}
