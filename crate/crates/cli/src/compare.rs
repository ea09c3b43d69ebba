use crate::config::{Engine, ExperimentConfig, Parameters};
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sflow_core::flow::{cp_integral_flow, crossing_flow, doubled_flow, index_pup, FlowPath};
use sflow_core::triples::{double_up, SpectralTripleRep};
use sflow_core::zeta::ResidueEngine;
use std::collections::BTreeMap;
use std::time::Instant;

const POWER: &str = "u^w";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    pub engine: Engine,
    pub w: i32,
    pub value: f64,
    pub error_estimate: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub rows: Vec<Row>,
    /// Largest normalized spread across engines, per w.
    pub spread: BTreeMap<i32, f64>,
    pub tolerance: f64,
    pub passed: bool,
}

fn run_engine(t: &SpectralTripleRep, engine: Engine, p: &Parameters) -> Result<(f64, f64)> {
    let p_eff = p.p_eff.unwrap_or(t.p);
    Ok(match engine {
        Engine::Crossing => {
            let path = FlowPath::conjugation(t, POWER, p.steps)?;
            let r = crossing_flow(&path, &t.weights, p.edge_margin)?;
            (r.value, r.error_estimate)
        }
        Engine::Index => {
            let r = index_pup(t, POWER, p.edge_margin)?;
            (r.value, r.error_estimate)
        }
        Engine::Cp => {
            let r = cp_integral_flow(t, POWER, p.n)?;
            (r.value, r.error_estimate)
        }
        Engine::Doubled => {
            let r = doubled_flow(&double_up(t, POWER)?, p_eff, p.r)?;
            (r.value, r.error_estimate)
        }
        // The residue engines have no a-posteriori estimate; 0 is reported.
        Engine::Residue => (ResidueEngine::new(t).with_p(p_eff)?.sf_residue_cocycle(t, POWER)?, 0.0),
        Engine::ZetaSum => (ResidueEngine::new(t).with_p(p_eff)?.sf_zeta_sum_residue(t, POWER)?, 0.0),
        Engine::Lowdim => (ResidueEngine::new(t).with_p(p_eff)?.low_dim_flow(t, POWER)?, 0.0),
    })
}

/// Runs every (engine, w) cell. Cells may run in parallel; rows come back in (w, engine) order.
pub fn run_flow_compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let t = cfg.build_triple()?;
    cfg.validate(&t)?;
    let p = &cfg.parameters;
    let cells: Vec<(i32, Engine)> = p.w.iter().flat_map(|&w| cfg.engines.iter().map(move |&e| (w, e))).collect();
    let rows = cells
        .par_iter()
        .map(|&(w, engine)| -> Result<Row> {
            let start = Instant::now();
            let tw = t.clone().with_power(&p.generator, w, POWER)?;
            let (value, error_estimate) =
                run_engine(&tw, engine, p).with_context(|| format!("engine {} failed at w = {w}", engine.name()))?;
            let runtime_ms = if p.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            Ok(Row { engine, w, value, error_estimate, runtime_ms })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut spread = BTreeMap::new();
    for &w in &p.w {
        let vals: Vec<f64> = rows.iter().filter(|r| r.w == w).map(|r| r.value * r.engine.orientation()).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        spread.insert(w, hi - lo);
    }
    let tolerance = p.tolerances.pairwise;
    let passed = spread.values().all(|&s| s <= tolerance);
    Ok(Comparison { rows, spread, tolerance, passed })
}
