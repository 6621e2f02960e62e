use crate::logging;
use anyhow::Context;
use pebble_dynamics::body::BodySpec;
use pebble_dynamics::flow::classify;
use pebble_graph::io::to_json;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Body specification (JSON).
    #[arg(long)]
    body: PathBuf,
    /// Write the full classification record (JSON) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write separatrix polylines (CSV: separatrix,point,x,y,z) here.
    #[arg(long)]
    separatrices: Option<PathBuf>,
    #[command(flatten)]
    tol: super::FlowTolerances,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.body)
        .with_context(|| format!("reading {}", args.body.display()))?;
    let spec: BodySpec = serde_json::from_str(&text).context("parsing the body spec")?;
    let opts = args.tol.options()?;
    logging::info("classifying body");
    let cls = classify(&spec, &opts)?;
    println!("class: {}", cls.class);
    println!("secondary: {}", cls.keys.secondary);
    println!("tertiary: {}", cls.keys.tertiary);
    if let Some(path) = args.out {
        let record = serde_json::json!({
            "class": { "sinks": cls.class.sinks, "sources": cls.class.sources,
                        "saddles": cls.class.saddles() },
            "reference": cls.reference,
            "secondary_key": cls.keys.secondary.to_string(),
            "tertiary_key": cls.keys.tertiary.to_string(),
            "critical_points": cls.complex.critical_points,
            "primary_graph": to_json(&cls.q3),
            "quasi_dual_graph": to_json(&cls.q2),
        });
        std::fs::write(&path, serde_json::to_string_pretty(&record)?)?;
        logging::info(format!("wrote {}", path.display()));
    }
    if let Some(path) = args.separatrices {
        let mut csv = String::from("separatrix,point,x,y,z\n");
        for (i, sep) in cls.complex.separatrices.iter().enumerate() {
            for (j, p) in sep.points.iter().enumerate() {
                csv.push_str(&format!("{i},{j},{},{},{}\n", p[0], p[1], p[2]));
            }
        }
        std::fs::write(&path, csv)?;
        logging::info(format!("wrote {}", path.display()));
    }
    Ok(())
}
