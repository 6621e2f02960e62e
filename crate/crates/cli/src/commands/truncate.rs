use crate::logging;
use anyhow::Context;
use pebble_dynamics::body::BodySpec;
use pebble_dynamics::truncation::{plan_family, standard_lab_body, sweep, CellLabel};
use std::path::PathBuf;

#[derive(clap::Subcommand)]
pub enum Cmd {
    /// Sweep the two-parameter family and emit the per-cell class map.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
pub struct SweepArgs {
    /// Body specification (JSON); must be a cut sphere whose sink carries a
    /// spherical neighborhood. Defaults to the stock laboratory body.
    #[arg(long)]
    body: Option<PathBuf>,
    /// Sink to split: an index from the classification, or `auto`.
    #[arg(long, default_value = "auto")]
    sink: String,
    /// Arc distance of the family circle centers from the sink.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Cone angle override (radians); planned from the separatrix window
    /// when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Grid points per parameter.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Pin the center of mass of every member with the balance cut.
    #[arg(long)]
    compensate: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tol: super::FlowTolerances,
}

pub fn run(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Sweep(a) => {
            let body: BodySpec = match &a.body {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing the body spec")?
                }
                None => standard_lab_body(),
            };
            let sink = match a.sink.as_str() {
                "auto" => None,
                s => Some(s.parse::<usize>().context("--sink must be an index or auto")?),
            };
            if a.grid < 3 {
                anyhow::bail!("--grid must be at least 3");
            }
            let opts = a.tol.options()?;
            let plan = plan_family(&body, sink, a.theta, a.alpha, &opts)?;
            logging::info(format!(
                "family: tau={:.4} cone={:.4} d_A={:.4e} d_BC={:.4e} phi=[{:.4},{:.4}]",
                plan.tau,
                plan.cone_angle,
                plan.d_a,
                plan.d_bc,
                plan.phi_range.0,
                plan.phi_range.1
            ));
            let result = sweep(&plan, a.grid, a.grid, a.compensate, &opts)?;
            let mut csv = String::from("d,phi,label,sinks,sources,secondary_key,flags\n");
            for c in &result.cells {
                let label = match c.label {
                    CellLabel::A => "A",
                    CellLabel::B => "B",
                    CellLabel::C => "C",
                    CellLabel::Degenerate => "degenerate",
                    CellLabel::Other => "other",
                };
                let key = c
                    .secondary
                    .as_ref()
                    .map(|k| k.to_string())
                    .unwrap_or_default();
                let flags = if c.near_heteroclinic { "near-heteroclinic" } else { "" };
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.d, c.phi, label, c.sinks, c.sources, key, flags
                ));
            }
            std::fs::write(&a.out, csv)?;
            println!(
                "saddle-node depth: {:?} (plan {:.6e}); saddle-saddle curve samples: {:?}",
                result.d_a_estimates, plan.d_a, result.phi_bc_estimates
            );
            logging::info(format!("wrote {}", a.out.display()));
            Ok(())
        }
    }
}
