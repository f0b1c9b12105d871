#![allow(dead_code)]

use bdglab::config::RunConfig;

pub const SIDE_2PI: f64 = 2.5066282746310002;

/// Square cell of area 2π with the given grid and extra TOML lines.
pub fn config(grid: usize, extra: &str) -> RunConfig {
    let text = format!(
        "grid = {grid}\n[lattice]\nomega1 = [{SIDE_2PI}, 0.0]\nomega2 = [0.0, {SIDE_2PI}]\n[thermo]\nt = 0.1\nmu = 2.0\n{extra}"
    );
    RunConfig::from_toml_str(&text, &[]).unwrap()
}

pub fn with(cfg: &RunConfig, overrides: &[&str]) -> RunConfig {
    let text = cfg.to_toml_string().unwrap();
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::from_toml_str(&text, &o).unwrap()
}

pub fn json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
