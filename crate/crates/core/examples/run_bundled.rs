//! Runs every bundled scenario and prints its metrics.

use handswarm::scenario::{run_scenario, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "scenarios".into());
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    paths.sort();
    for p in paths.iter().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        let s = Scenario::load(p)?;
        let start = std::time::Instant::now();
        let m = run_scenario(&s, std::io::sink())?;
        println!(
            "{:<16} dur {:>6.2}s avgv {:.2} maxv {:.3} avg_err {:.3} max_err {:.3} coll {} done {} cmds {:?} [{:.2}s]",
            m.scenario,
            m.duration_s,
            m.avg_velocity,
            m.max_velocity,
            m.avg_spacing_error,
            m.max_spacing_error,
            m.collisions,
            m.completed,
            m.commands,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
