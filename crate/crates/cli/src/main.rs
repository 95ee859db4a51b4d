mod args;
mod commands;

use clap::{CommandFactory, Parser};
use tracing_subscriber::EnvFilter;

use args::{Cli, Command};
use commands::CliError;

fn main() {
    let cli = Cli::parse();
    let default = if cli.verbose { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default)))
        .init();

    let result = match &cli.command {
        Command::Layout(a) => commands::layout(a, cli.print_config),
        Command::Eval(a) => commands::eval(a, cli.print_config),
        Command::Serve(a) => commands::serve(a, cli.print_config),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        if let CliError::UnknownAlgorithm(_) = e {
            let known: Vec<&str> = marll_core::eval::Algorithm::ALL.iter().map(|a| a.id()).collect();
            eprintln!("known algorithms: {}", known.join(", "));
            eprintln!("\n{}", Cli::command().render_usage());
        }
        std::process::exit(e.exit_code());
    }
}
