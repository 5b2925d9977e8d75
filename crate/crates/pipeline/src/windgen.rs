use std::path::Path;

use lfgp::{synthesize_turbulence, TurbulenceField};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result, Stage};
use crate::io::{read_table, write_table, Table};

pub const WIND_U_FILE: &str = "wind_u.csv";
pub const WIND_W_FILE: &str = "wind_w.csv";

fn node_list(nodes: &[f64]) -> String {
    nodes.iter().map(|x| crate::io::fmt_f64(*x)).collect::<Vec<_>>().join(" ")
}

fn parse_nodes(stage: Stage, path: &Path, table: &Table) -> Result<Vec<f64>> {
    let bad = || PipelineError::new(stage, crate::error::ErrorKind::Io, format!("{}: bad `nodes` header", path.display()));
    let text = table.meta("nodes").ok_or_else(bad)?;
    text.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// Synthesizes the turbulence field and writes one table per component.
pub fn windgen(cfg: &RunConfig, out: &Path) -> Result<TurbulenceField<f64>> {
    let wc = cfg.wind_config().map_err(|e| PipelineError { stage: Stage::Windgen, ..e })?;
    let seed = cfg.seeds().wind;
    let field = synthesize_turbulence(&wc, seed).map_err(|e| PipelineError::from_core(Stage::Windgen, e))?;
    write_turbulence(&field, seed, out)?;
    Ok(field)
}

pub fn write_turbulence(field: &TurbulenceField<f64>, seed: u64, out: &Path) -> Result<()> {
    for (file, comp, series) in [(WIND_U_FILE, "u", &field.u), (WIND_W_FILE, "w", &field.w)] {
        let first = &series[0];
        let mut t = Table::new(first.t0, first.dt)
            .with_meta("quantity", format!("turbulence component {comp}"))
            .with_meta("units", "m/s (time in s, node positions in m)")
            .with_meta("mean_speed", crate::io::fmt_f64(field.mean_speed))
            .with_meta("seed", seed)
            .with_meta("nodes", node_list(&field.nodes));
        for (i, s) in series.iter().enumerate() {
            t.push_series(&format!("node{i}"), s);
        }
        write_table(Stage::Windgen, &out.join(file), &t)?;
    }
    Ok(())
}

/// Reads a field written by [`windgen`].
pub fn read_turbulence(stage: Stage, dir: &Path) -> Result<TurbulenceField<f64>> {
    let pu = dir.join(WIND_U_FILE);
    let pw = dir.join(WIND_W_FILE);
    let tu = read_table(stage, &pu)?;
    let tw = read_table(stage, &pw)?;
    let nodes = parse_nodes(stage, &pu, &tu)?;
    let bad = |msg: &str| PipelineError::config(stage, format!("{}: {msg}", dir.display()));
    if parse_nodes(stage, &pw, &tw)? != nodes || tu.columns.len() != nodes.len() || tw.columns.len() != nodes.len() {
        return Err(bad("u and w tables disagree on the node grid"));
    }
    if tu.dt != tw.dt || tu.t0 != tw.t0 || tu.n_rows() != tw.n_rows() {
        return Err(bad("u and w tables disagree on the time grid"));
    }
    let mean_speed: f64 = tu
        .meta("mean_speed")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing mean_speed header"))?;
    let to_series = |t: &Table| {
        t.names
            .iter()
            .map(|n| t.series(n).expect("column exists"))
            .collect::<Vec<_>>()
    };
    Ok(TurbulenceField {
        mean_speed,
        nodes,
        u: to_series(&tu),
        w: to_series(&tw),
    })
}
