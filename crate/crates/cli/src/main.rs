use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use secdb_cli::scenario::parse_scenario;
use secdb_cli::session::{pdp_by_name, run_scenario, Session};
use secdb_core::attacker::{derive, secure_data_oracle, DeriveConfig};
use secdb_core::rc::Name;

#[derive(Parser)]
#[command(
    name = "secdb",
    about = "Scenario runner, REPL, and attacker oracle for the secdb access-control engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and print its trace.
    Run {
        scenario: PathBuf,
        /// Decision point: f, f_int, f_conf, or allow-all.
        #[arg(long, default_value = "f")]
        pdp: String,
        /// Also write the trace to a file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Interactive session over a scenario's schema and script.
    Repl {
        scenario: PathBuf,
        #[arg(long, default_value = "f")]
        pdp: String,
    },
    /// Run a scenario, derive the user's judgments, and check each one
    /// against the brute-force security oracle.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        user: String,
        /// Decision point the run executes under.
        #[arg(long, default_value = "allow-all")]
        pdp: String,
        /// Cap on the number of enumerable tuple slots.
        #[arg(long, default_value_t = 22)]
        domain_cap: u32,
        /// Judgment budget for the derivation engine.
        #[arg(long, default_value_t = 20000)]
        budget: usize,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            pdp,
            trace,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("{}: {e}", scenario.display()))?;
            let parsed = parse_scenario(&text).map_err(|e| e.to_string())?;
            let pdp = pdp_by_name(&pdp).ok_or_else(|| format!("unknown pdp '{pdp}'"))?;
            let outcome = run_scenario(&parsed, pdp).map_err(|e| e.to_string())?;
            let mut rendered = String::new();
            for r in &outcome.records {
                rendered.push_str(&r.to_string());
                rendered.push('\n');
            }
            print!("{rendered}");
            if let Some(path) = trace {
                std::fs::write(&path, rendered).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            if outcome.violations.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for v in &outcome.violations {
                    eprintln!("expectation violated: {v}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Repl { scenario, pdp } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("{}: {e}", scenario.display()))?;
            let parsed = parse_scenario(&text).map_err(|e| e.to_string())?;
            let pdp = pdp_by_name(&pdp).ok_or_else(|| format!("unknown pdp '{pdp}'"))?;
            let mut session = Session::from_scenario(&parsed, pdp).map_err(|e| e.to_string())?;
            // Preload the scenario's script.
            for step in &parsed.steps {
                session
                    .submit(&step.user, &step.statement, &step.statement.to_string())
                    .map_err(|e| e.to_string())?;
            }
            let stdin = std::io::stdin();
            let stdout = std::io::stdout();
            secdb_cli::repl::repl(session, &mut stdin.lock(), &mut stdout.lock())
                .map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            scenario,
            user,
            pdp,
            domain_cap,
            budget,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("{}: {e}", scenario.display()))?;
            let parsed = parse_scenario(&text).map_err(|e| e.to_string())?;
            let pdp = pdp_by_name(&pdp).ok_or_else(|| format!("unknown pdp '{pdp}'"))?;
            let outcome = run_scenario(&parsed, pdp).map_err(|e| e.to_string())?;
            let attacker = Name::from(user.as_str());
            let cfg = DeriveConfig {
                budget,
                ..Default::default()
            };
            let derivation = derive(&outcome.run, &attacker, cfg);
            let mut insecure = 0usize;
            let mut total = 0usize;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for j in derivation.judgments() {
                total += 1;
                let verdict =
                    secure_data_oracle(&outcome.run, j.pos, &attacker, &j.sentence, domain_cap)
                        .map_err(|e| e.to_string())?;
                if !verdict {
                    insecure += 1;
                }
                writeln!(
                    out,
                    "{}, {} |- {} : {}",
                    user,
                    j.pos,
                    j.sentence,
                    if verdict { "secure" } else { "INSECURE" }
                )
                .map_err(|e| e.to_string())?;
            }
            if derivation.exhausted {
                writeln!(
                    out,
                    "note: judgment budget exhausted; the set is incomplete"
                )
                .map_err(|e| e.to_string())?;
            }
            writeln!(out, "{total} judgments, {insecure} insecure").map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
