//! Prints the final class probabilities of one reference run.
//!
//! cargo run --release -p cloudchamber --example final_probabilities -- 8 100

use std::time::Instant;

use cloudchamber::{BoundaryMode, Preset, RunOptions, Simulation, SolveConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let rho: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100.0);

    let start = Instant::now();
    let scenario = Preset::new(0.1, n).with_rho(rho).scenario()?;
    let sim = Simulation::new(scenario, BoundaryMode::Verbatim, SolveConfig::default())?;
    let setup = start.elapsed();
    let record = sim.run(RunOptions::default(), &mut [])?;
    let c = record.final_classes();
    println!("N = {n}, rho = {rho}");
    println!("  LRC (one side)  {:.12}", c.lrc_one_side());
    println!("  one spin        {:.12}", c.one_spin);
    println!("  unchanged       {:.12}", c.unchanged);
    println!("  multiple tracks {:.3e}", c.multiple_tracks);
    println!(
        "  2 LRC + OS + UC {:.12}",
        c.two_lrc() + c.one_spin + c.unchanged
    );
    println!("  setup {:.2?}, total {:.2?}", setup, start.elapsed());
    Ok(())
}
