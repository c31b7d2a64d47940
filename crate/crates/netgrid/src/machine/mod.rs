//! The machine being targeted: a W x H grid of 16-bit cores joined by a
//! bufferless, uni-directional torus NoC, simulated cycle-accurately.

pub mod cache;
pub mod grid;
pub mod noc;

pub use cache::Cache;
pub use grid::{simulate, SimMetrics, SimOutcome};

/// Register file slots per core (each with a 17th overflow bit).
pub const REGISTER_FILE_SIZE: usize = 2048;
/// Instruction memory capacity per core.
pub const IMEM_CAPACITY: usize = 4096;
/// Scratchpad words per core.
pub const SCRATCHPAD_WORDS: usize = 16384;
/// Custom function slots per core.
pub const CF_SLOTS: usize = 32;
/// Payload bits carried per NoC message: 11 register bits + 16 data bits.
pub const NOC_PAYLOAD_BITS: u32 = 27;

/// Pipeline and network timing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineModel {
    /// Cycles between issuing an instruction and its result being readable.
    pub def_use_latency: u32,
    /// Cycles a message spends on each hop.
    pub hop_latency: u32,
}

impl Default for MachineModel {
    fn default() -> Self {
        MachineModel {
            def_use_latency: 9,
            hop_latency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    pub width: u32,
    pub height: u32,
    pub model: MachineModel,
    /// DRAM access latency in cycles (global stall per miss).
    pub dram_latency: u32,
    /// Extra stall cycles on a cache hit.
    pub cache_hit_latency: u32,
}

impl GridConfig {
    pub fn new(width: u32, height: u32) -> Self {
        GridConfig {
            width,
            height,
            model: MachineModel::default(),
            dram_latency: 100,
            cache_hit_latency: 0,
        }
    }

    pub fn cores(&self) -> u32 {
        self.width * self.height
    }
}
