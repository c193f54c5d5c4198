use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stratasheaf::torusquot::DEFAULT_GROUP_CAP;
use stratasheaf_cli::commands::{cmd_export, COUNT_FAMILIES};
use stratasheaf_cli::{cmd_classify, cmd_count, cmd_torus, cmd_validate, ClassifyOptions, CliError, CountRequest, Input, Outcome};

#[derive(Parser)]
#[command(name = "stratasheaf", version, about = "Classify locally projective crepant resolutions of stratified models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Path to a JSON document.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    model: Option<PathBuf>,
    /// Built-in model or group, e.g. `bn-wreath:3` or `pgl3`.
    #[arg(long)]
    builtin: Option<String>,
}

impl Source {
    fn input(&self) -> Input {
        match (&self.model, &self.builtin) {
            (Some(p), _) => Input::File(p.clone()),
            (None, Some(b)) => Input::Builtin(b.clone()),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Count global sections and give a projectivity verdict for each.
    Classify {
        #[command(flatten)]
        source: Source,
        /// Print every section with its verdict and witness.
        #[arg(long)]
        list_sections: bool,
        /// Skip per-section work when there are more sections than this.
        #[arg(long, default_value_t = 10_000)]
        max_list: usize,
        #[arg(long)]
        json: bool,
    },
    /// Fixed points, orbits and resolvability for a finite group on a torus.
    Torus {
        #[command(flatten)]
        source: Source,
        /// Largest group the closure may produce.
        #[arg(long, env = "STRATASHEAF_GROUP_CAP", default_value_t = DEFAULT_GROUP_CAP)]
        group_cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Closed-form resolution counts: bellamy, sym-duval, wreath-torus.
    Count {
        family: String,
        /// du Val type for `bellamy`, e.g. E6.
        #[arg(long = "type")]
        ty: Option<String>,
        /// Comma-separated du Val types for `sym-duval`.
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        /// Order of the cyclic group for `wreath-torus`.
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        json: bool,
    },
    /// Check every structural invariant of a model.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        json: bool,
    },
    /// Print the canonical JSON document of a model.
    Export {
        #[command(flatten)]
        source: Source,
    },
}

fn count_request(family: &str, ty: Option<String>, types: Vec<String>, m: Option<u32>, n: u64) -> Result<CountRequest, CliError> {
    let missing = |what: &str| CliError::Usage(format!("{family} needs --{what}"));
    match family {
        "bellamy" => Ok(CountRequest::Bellamy {
            ty: ty.ok_or_else(|| missing("type"))?,
            n,
        }),
        "sym-duval" => Ok(CountRequest::SymDuval { types, n }),
        "wreath-torus" => Ok(CountRequest::WreathTorus {
            m: m.ok_or_else(|| missing("m"))?,
            n,
        }),
        other => Err(CliError::Usage(format!(
            "unknown count family {other:?}; known: {}",
            COUNT_FAMILIES.join(", ")
        ))),
    }
}

fn emit(name: &str, json: bool, result: Result<Outcome, CliError>) -> ExitCode {
    match result {
        Ok(outcome) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&outcome.report).expect("json"));
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&e.to_json(name)).expect("json"));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify {
            source,
            list_sections,
            max_list,
            json,
        } => emit(
            "classify",
            json,
            cmd_classify(&source.input(), ClassifyOptions { list_sections, max_list }),
        ),
        Command::Torus { source, group_cap, json } => emit("torus", json, cmd_torus(&source.input(), group_cap)),
        Command::Count {
            family,
            ty,
            types,
            m,
            n,
            json,
        } => emit("count", json, count_request(&family, ty, types, m, n).and_then(|r| cmd_count(&r))),
        Command::Validate { source, json } => emit("validate", json, cmd_validate(&source.input())),
        Command::Export { source } => match cmd_export(&source.input()) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
