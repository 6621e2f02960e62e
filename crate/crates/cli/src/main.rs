//! Command-line driver for the equilibrium-class toolkit.
//!
//! Exit status: 0 on success, 1 on a domain error (non-generic body,
//! unreachable bracket, ...), 2 on usage errors (from the parser).
//! `PEBBLE_LOG=info|debug` enables progress output on stderr.

mod commands;
mod logging;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pebble", version, about = "Equilibrium classes of convex bodies: graphs, flows, bifurcations")]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for interface stability; every sampling scheme in the
    /// toolkit is deterministic, so the seed changes nothing.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a convex body given as JSON.
    Classify(commands::classify::Args),
    /// Enumerate embedded classes and build the transition metagraph.
    Metagraph(commands::metagraph::Args),
    /// The planar codimension-2 normal form: scans and bifurcation curves.
    #[command(subcommand)]
    Normalform(commands::normalform::Cmd),
    /// Two-parameter truncation families on cut spheres.
    #[command(subcommand)]
    Truncate(commands::truncate::Cmd),
    /// Check the twin-splitting triangle property over all secondary edges.
    VerifyLemma(commands::verify_lemma::Args),
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let result = match cli.command {
        Command::Classify(a) => commands::classify::run(a),
        Command::Metagraph(a) => commands::metagraph::run(a),
        Command::Normalform(c) => commands::normalform::run(c),
        Command::Truncate(c) => commands::truncate::run(c),
        Command::VerifyLemma(a) => commands::verify_lemma::run(a),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
