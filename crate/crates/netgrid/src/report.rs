//! JSON report of a compiled schedule and (optionally) a simulation run.

use serde::Serialize;

use crate::machine::SimMetrics;
use crate::sched::Schedule;

#[derive(Debug, Serialize)]
pub struct CoreReport {
    pub x: u32,
    pub y: u32,
    pub body_len: usize,
    pub compute: u32,
    pub sends: u32,
    pub state_moves: u32,
    pub nops: u32,
    pub epilogue_len: u32,
    pub sleep_len: u32,
    pub custom_functions: usize,
}

#[derive(Debug, Serialize)]
pub struct SimReport {
    pub vcycles: u64,
    pub total_cycles: u64,
    pub stalled_cycles: u64,
    pub exception_cycles: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub messages_delivered: u64,
    pub dropped_messages: u64,
    pub hazard_violations: u64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub design: String,
    pub grid_width: u32,
    pub grid_height: u32,
    pub vcycle_len: u32,
    pub total_sends: u32,
    pub cores: Vec<CoreReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimReport>,
}

pub fn report(s: &Schedule, m: Option<&SimMetrics>) -> Report {
    let cores = s
        .cores
        .iter()
        .zip(&s.stats)
        .enumerate()
        .map(|(ix, (plan, st))| CoreReport {
            x: ix as u32 % s.width,
            y: ix as u32 / s.width,
            body_len: plan.body.len(),
            compute: st.compute,
            sends: st.sends,
            state_moves: st.state_moves,
            nops: st.nops,
            epilogue_len: plan.epilogue_len,
            sleep_len: plan.sleep_len,
            custom_functions: plan.cfs.len(),
        })
        .collect();
    Report {
        design: s.name.clone(),
        grid_width: s.width,
        grid_height: s.height,
        vcycle_len: s.vcycle_len,
        total_sends: s.total_sends(),
        cores,
        sim: m.map(|m| SimReport {
            vcycles: m.vcycles,
            total_cycles: m.total_cycles,
            stalled_cycles: m.stalled_cycles,
            exception_cycles: m.exception_cycles,
            cache_hits: m.cache_hits,
            cache_misses: m.cache_misses,
            messages_delivered: m.messages_delivered,
            dropped_messages: m.dropped_messages,
            hazard_violations: m.hazard_violations,
        }),
    }
}

pub fn to_json(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("report serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::GridConfig;
    use crate::pipeline::{build_netlist, BuildOptions};

    #[test]
    fn serializes_schedule_and_sim() {
        let grid = GridConfig::new(2, 1);
        let sched = build_netlist(&crate::gen::counters(3, 8), &BuildOptions::new(grid)).unwrap();
        let out = crate::machine::simulate(&sched, &grid, 5).unwrap();
        let j = to_json(&report(&sched, Some(&out.metrics)));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["grid_width"], 2);
        assert_eq!(v["sim"]["vcycles"], 5);
        assert_eq!(v["cores"].as_array().unwrap().len(), 2);
    }
}
