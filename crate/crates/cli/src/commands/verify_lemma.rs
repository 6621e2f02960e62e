use crate::logging;
use pebble_graph::metagraph::{build_edges, enumerate, verify_lemma};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Largest sink-plus-source count to enumerate.
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 10_000_000)]
    budget: usize,
    /// Write the verification report (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    logging::info(format!("enumerating to S+U = {}", args.max_n));
    let mg = build_edges(enumerate(args.max_n, args.budget)?, args.max_n);
    let report = verify_lemma(&mg);
    println!(
        "secondary edges: {}  verified triangles: {}  embedding-only slides: {}  failures: {}",
        report.secondary_edges,
        report.verified,
        report.isomorphic_slides,
        report.failures.len()
    );
    for f in report.failures.iter().take(20) {
        println!("  FAIL {} -- {}: {}", f.side_b, f.side_c, f.reason);
    }
    if let Some(path) = args.out {
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
        logging::info(format!("wrote {}", path.display()));
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        anyhow::bail!("{} secondary edges missing their triangle", report.failures.len())
    }
}
