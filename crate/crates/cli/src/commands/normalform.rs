use crate::logging;
use pebble_dynamics::normal_form::{
    alpha_star, classify_region, heteroclinic_curve, relevant_fixed_points, saddle_node_curve,
    NormalFormParams, RegionLabel,
};
use std::path::PathBuf;

#[derive(clap::Subcommand)]
pub enum Cmd {
    /// Label every point of a parameter grid with its phase-portrait region.
    Scan(ScanArgs),
    /// Tabulate the saddle-node and heteroclinic curves over a mu2 range.
    Curves(CurvesArgs),
}

#[derive(clap::Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = alpha_star())]
    alpha: f64,
    /// Half-width of the scanned box around the origin.
    #[arg(long = "box", default_value_t = 0.3)]
    half_box: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 601)]
    grid: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct CurvesArgs {
    #[arg(long, default_value_t = alpha_star())]
    alpha: f64,
    /// Single mu2 value to print.
    #[arg(long, conflicts_with = "mu2_range")]
    mu2: Option<f64>,
    /// Range lo:hi:steps for the CSV table.
    #[arg(long, value_parser = parse_range)]
    mu2_range: Option<(f64, f64, usize)>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:steps".into());
    }
    let lo: f64 = parts[0].parse().map_err(|_| "bad lo")?;
    let hi: f64 = parts[1].parse().map_err(|_| "bad hi")?;
    let n: usize = parts[2].parse().map_err(|_| "bad steps")?;
    if n < 2 {
        return Err("need at least 2 steps".into());
    }
    Ok((lo, hi, n))
}

fn label_str(l: RegionLabel) -> &'static str {
    match l {
        RegionLabel::NoUpperPair => "no-upper-pair",
        RegionLabel::SaddlesUnconnectedLeft => "saddles-unconnected-left",
        RegionLabel::SaddlesUnconnectedRight => "saddles-unconnected-right",
        RegionLabel::OnSaddleNodeCurve => "on-saddle-node-curve",
        RegionLabel::OnHeteroclinicCurve => "on-heteroclinic-curve",
        RegionLabel::Codim2Origin => "codim-2-origin",
    }
}

pub fn run(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Scan(a) => {
            if a.grid < 2 || a.half_box <= 0.0 {
                anyhow::bail!("grid must have at least 2 points and the box positive size");
            }
            logging::info(format!("scanning {}x{} grid", a.grid, a.grid));
            let rows = pebble_dynamics::normal_form::scan(a.alpha, a.half_box, a.grid);
            let mut csv = String::from("mu1,mu2,label,fixed_points\n");
            for r in rows {
                match r {
                    Ok(s) => csv.push_str(&format!(
                        "{},{},{},{}\n",
                        s.mu1,
                        s.mu2,
                        label_str(s.label),
                        s.fixed_points
                    )),
                    Err((mu1, mu2, _)) => {
                        csv.push_str(&format!("{mu1},{mu2},ambiguous,0\n"));
                    }
                }
            }
            std::fs::write(&a.out, csv)?;
            logging::info(format!("wrote {}", a.out.display()));
            Ok(())
        }
        Cmd::Curves(a) => {
            let rows: Vec<f64> = match (a.mu2, a.mu2_range) {
                (Some(v), _) => vec![v],
                (None, Some((lo, hi, n))) => (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect(),
                (None, None) => anyhow::bail!("give --mu2 or --mu2-range"),
            };
            let mut csv = String::from("mu2,saddle_node_mu1,heteroclinic_mu1\n");
            for mu2 in rows {
                let f1 = saddle_node_curve(mu2, a.alpha)?;
                let f2 = heteroclinic_curve(mu2, a.alpha)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                println!("mu2={mu2}: saddle-node mu1={f1:.6e} heteroclinic mu1={f2}");
                csv.push_str(&format!("{mu2},{f1},{f2}\n"));
            }
            if let Some(path) = a.out {
                std::fs::write(&path, csv)?;
                logging::info(format!("wrote {}", path.display()));
            }
            Ok(())
        }
    }
}

/// Used by the scan CSV check in tests: count of fixed points at a sample.
#[allow(dead_code)]
pub fn sample_count(mu1: f64, mu2: f64, alpha: f64) -> usize {
    relevant_fixed_points(&NormalFormParams { mu1, mu2, alpha }).len()
}

#[allow(dead_code)]
pub fn region_of(mu1: f64, mu2: f64, alpha: f64) -> anyhow::Result<RegionLabel> {
    Ok(classify_region(&NormalFormParams { mu1, mu2, alpha })?.label)
}
