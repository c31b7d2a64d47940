//! End-to-end compilation driver: netlist text in, static schedule out.

use crate::error::Result;
use crate::ir::{parse::parse_netlist_named, NetlistProgram};
use crate::lower::{build::lower_netlist, LowerProgram};
use crate::machine::GridConfig;
use crate::opt::OptConfig;
use crate::sched::{schedule, Schedule};
use crate::{cf, parallel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partitioner {
    /// Merge the cheapest process into the neighbor that adds the least
    /// cost, re-estimating after every merge.
    Balanced,
    /// Longest-processing-time bin packing by process cost.
    Lpt,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub grid: GridConfig,
    pub partitioner: Partitioner,
    /// Placement seed.
    pub seed: u64,
    pub custom_functions: bool,
    pub opt: OptConfig,
}

impl BuildOptions {
    pub fn new(grid: GridConfig) -> Self {
        BuildOptions {
            grid,
            partitioner: Partitioner::Balanced,
            seed: 0,
            custom_functions: true,
            opt: OptConfig::default(),
        }
    }
}

/// Compile a parsed-and-lowered program the rest of the way.
pub fn build_lowered(mut low: LowerProgram, opts: &BuildOptions) -> Result<Schedule> {
    crate::opt::optimize(&mut low, &opts.opt);
    let mut low = parallel::split(&low)?;
    let cores = opts.grid.cores() as usize;
    match opts.partitioner {
        Partitioner::Balanced => parallel::merge_balanced(&mut low, cores)?,
        Partitioner::Lpt => parallel::merge_lpt(&mut low, cores)?,
    }
    if opts.custom_functions {
        cf::synthesize(&mut low);
    }
    let placement = parallel::place_random(&low, opts.grid.width, opts.grid.height, opts.seed)?;
    schedule::compile(&low, &opts.grid, &placement)
}

/// Full pipeline from a parsed netlist.
pub fn build_netlist(net: &NetlistProgram, opts: &BuildOptions) -> Result<Schedule> {
    build_lowered(lower_netlist(net)?, opts)
}

/// Full pipeline from netlist source text.
pub fn build(src: &str, file: &str, opts: &BuildOptions) -> Result<Schedule> {
    build_netlist(&parse_netlist_named(src, file)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::ir::interp::interpret_netlist;
    use crate::machine::simulate;

    fn check(net: &NetlistProgram, grid: GridConfig, vcycles: u64) {
        let want = interpret_netlist(net, vcycles);
        let sched = build_netlist(net, &BuildOptions::new(grid)).unwrap();
        let out = simulate(&sched, &grid, vcycles).unwrap();
        assert_eq!(out.metrics.dropped_messages, 0);
        assert_eq!(out.metrics.hazard_violations, 0);
        assert_eq!(want.regs, out.trace.regs, "register traces differ");
        assert_eq!(want.displays, out.trace.displays);
        assert_eq!(want.stop, out.trace.stop);
    }

    #[test]
    fn counters_on_one_core() {
        check(&gen::counters(4, 13), GridConfig::new(1, 1), 20);
    }

    #[test]
    fn counters_on_two_by_two() {
        check(&gen::counters(8, 9), GridConfig::new(2, 2), 25);
    }

    #[test]
    fn fifo_with_global_memory() {
        check(&gen::fifo(256, true), GridConfig::new(2, 2), 40);
    }

    #[test]
    fn random_dag_with_displays() {
        let cfg = gen::DagConfig {
            instrs: 120,
            regs: 8,
            max_width: 48,
            mems: 1,
            logic_bias: false,
            displays: 2,
        };
        let net = gen::random_dag(3, &cfg);
        check(&net, GridConfig::new(2, 2), 30);
    }

    #[test]
    fn cycle_identity_holds() {
        let grid = GridConfig::new(2, 2);
        let sched = build_netlist(&gen::fifo(1024, true), &BuildOptions::new(grid)).unwrap();
        let out = simulate(&sched, &grid, 50).unwrap();
        let m = &out.metrics;
        assert_eq!(
            m.total_cycles,
            m.vcycles * m.vcycle_len + m.stalled_cycles + m.exception_cycles
        );
        assert!(m.stalled_cycles > 0, "global memory traffic must stall");
    }
}
