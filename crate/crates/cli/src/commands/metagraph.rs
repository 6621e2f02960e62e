use crate::logging;
use pebble_graph::io::{metagraph_dot, to_json};
use pebble_graph::metagraph::{build_edges, enumerate};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Largest sink-plus-source count to enumerate.
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    /// Cap on the number of classes before giving up.
    #[arg(long, default_value_t = 10_000_000)]
    budget: usize,
    /// Write the metagraph (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a DOT rendering here (thin = saddle-node, thick =
    /// saddle-saddle, dashed = embedding-only).
    #[arg(long)]
    dot: Option<PathBuf>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    if args.max_n < 2 {
        anyhow::bail!("--max-n must be at least 2");
    }
    logging::info(format!("enumerating classes with S+U <= {}", args.max_n));
    let vertices = enumerate(args.max_n, args.budget)?;
    logging::info(format!("{} classes; building edges", vertices.len()));
    let mg = build_edges(vertices, args.max_n);
    let (mut p, mut s, mut t) = (0, 0, 0);
    for e in &mg.edges {
        match e.kind {
            pebble_graph::metagraph::EdgeKind::Primary => p += 1,
            pebble_graph::metagraph::EdgeKind::Secondary => s += 1,
            pebble_graph::metagraph::EdgeKind::Tertiary => t += 1,
        }
    }
    println!(
        "vertices: {}  edges: {} saddle-node, {} saddle-saddle, {} embedding-only  triangles: {}",
        mg.vertices.len(),
        p,
        s,
        t,
        mg.faces.len()
    );
    if let Some(path) = args.out {
        let record = serde_json::json!({
            "max_total": mg.max_total,
            "vertices": mg.vertices.iter().map(|v| {
                serde_json::json!({
                    "key": v.key.to_string(),
                    "secondary": v.secondary.to_string(),
                    "class": { "sinks": v.class.sinks, "sources": v.class.sources },
                    "graph": to_json(&v.map),
                })
            }).collect::<Vec<_>>(),
            "edges": mg.edges,
            "faces": mg.faces,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&record)?)?;
        logging::info(format!("wrote {}", path.display()));
    }
    if let Some(path) = args.dot {
        std::fs::write(&path, metagraph_dot(&mg))?;
        logging::info(format!("wrote {}", path.display()));
    }
    Ok(())
}
