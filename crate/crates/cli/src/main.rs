use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reptrace::render::ProsOrder;
use reptrace_cli::documents::ModelChoice;
use reptrace_cli::{
    cmd_assess, cmd_demo, cmd_explain, cmd_render, cmd_simulate, render, seed_override, to_json, CliError, SEED_ENV,
};

/// Reputation assessment (FIRE, TRAVOS) with explanations.
///
/// Exit codes: 0 ok, 2 schema or validation error, 3 I/O error,
/// 4 preferred provider does not outrank the other, 5 self-check mismatch.
#[derive(Parser)]
#[command(name = "reptrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Descending,
    Ascending,
}

impl From<Order> for ProsOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Descending => ProsOrder::Descending,
            Order::Ascending => ProsOrder::Ascending,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the per-agent stores.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Rank every provider from one agent's point of view.
    Assess {
        stores: PathBuf,
        #[arg(long, value_enum, default_value = "fire")]
        model: ModelChoice,
        #[arg(long)]
        assessor: String,
    },
    /// Explain why one provider outranks another.
    Explain {
        stores: PathBuf,
        #[arg(long, value_enum, default_value = "fire")]
        model: ModelChoice,
        #[arg(long)]
        assessor: String,
        #[arg(long)]
        preferred: String,
        #[arg(long)]
        other: String,
        /// Print rendered text instead of JSON.
        #[arg(long)]
        text: bool,
        #[arg(long, value_enum, default_value = "descending")]
        pros_order: Order,
    },
    /// Render a saved explanation document as text.
    Render {
        explanation: PathBuf,
        #[arg(long, value_enum, default_value = "descending")]
        pros_order: Order,
    },
    /// Replay the built-in running example and check it.
    Demo {
        #[arg(long, required = true)]
        table4: bool,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let seed = seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
            cmd_simulate(&scenario, &out, seed)?;
            Ok(String::new())
        }
        Command::Assess {
            stores,
            model,
            assessor,
        } => Ok(to_json(&cmd_assess(&stores, model, &assessor)?)),
        Command::Explain {
            stores,
            model,
            assessor,
            preferred,
            other,
            text,
            pros_order,
        } => {
            let doc = cmd_explain(&stores, model, &assessor, &preferred, &other)?;
            if text {
                Ok(render(&doc.explanation, pros_order.into())? + "\n")
            } else {
                Ok(to_json(&doc))
            }
        }
        Command::Render {
            explanation,
            pros_order,
        } => Ok(cmd_render(&explanation, pros_order.into())? + "\n"),
        Command::Demo { .. } => cmd_demo(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("reptrace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
