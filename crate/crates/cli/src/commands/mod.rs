pub mod classify;
pub mod metagraph;
pub mod normalform;
pub mod truncate;
pub mod verify_lemma;

use pebble_dynamics::flow::FlowOptions;

/// Tolerance overrides shared by the flow-based subcommands.
#[derive(clap::Args, Clone, Copy)]
pub struct FlowTolerances {
    /// Gradient norm below which a point counts as critical.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_grad: f64,
    /// Distance to another saddle that flags a near saddle-saddle passage.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_het: f64,
    /// Eigenvalue magnitude below which a critical point is degenerate.
    #[arg(long, default_value_t = 1e-7)]
    pub tol_degenerate: f64,
}

impl FlowTolerances {
    pub fn options(&self) -> anyhow::Result<FlowOptions> {
        if self.tol_grad <= 0.0 || self.tol_het <= 0.0 || self.tol_degenerate <= 0.0 {
            anyhow::bail!("tolerances must be positive");
        }
        Ok(FlowOptions {
            tol_grad: self.tol_grad,
            tol_het: self.tol_het,
            tol_degenerate: self.tol_degenerate,
            ..FlowOptions::default()
        })
    }
}
