//! Static scheduling: turns a partitioned, placed program into per-core
//! instruction streams with globally collision-free message timing, plus the
//! bootstream serialization of the result.

pub mod bootstream;
pub mod schedule;

use crate::lower::{CfTable, DisplayMeta};
use crate::machine::MachineModel;

pub use schedule::compile;

/// Machine register index (11 bits on the wire).
pub type MReg = u16;

pub use crate::lower::BinOp;

/// Post-allocation instruction; identical semantics to the lowered ISA but
/// over physical registers and resolved scratchpad bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MInstr {
    Bin { op: BinOp, d: MReg, a: MReg, b: MReg },
    Addc { d: MReg, a: MReg, b: MReg, c: MReg },
    Mux { d: MReg, p: MReg, a: MReg, b: MReg },
    Set { d: MReg, imm: u16 },
    Mov { d: MReg, a: MReg },
    Cust { d: MReg, fid: u8, args: [MReg; 4] },
    Lld { d: MReg, addr: MReg, base: u16 },
    Lst { addr: MReg, data: MReg, pred: MReg, base: u16 },
    Gld { d: MReg, a: [MReg; 3] },
    Gst { a: [MReg; 3], data: MReg, pred: MReg },
    /// Send the value of `rs` to register `rt` of core `dest` (row-major).
    Send { rt: MReg, rs: MReg, dest: u16 },
    Expect { a: MReg, b: MReg, eid: u16 },
    Nop,
}

/// One word of the register trace: where the host finds each state word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceWord {
    Const(u16),
    Reg { core: u32, reg: MReg },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReg {
    pub name: String,
    pub width: u32,
    pub words: Vec<TraceWord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorePlan {
    /// Compute-phase slots, one instruction per cycle, NOPs included.
    pub body: Vec<MInstr>,
    /// Messages applied as SETs after the body; one slot per inbound word.
    pub epilogue_len: u32,
    pub sleep_len: u32,
    pub cfs: Vec<CfTable>,
    pub reg_init: Vec<(MReg, u16)>,
    pub scratch_init: Vec<(u32, u16)>,
}

/// Per-core issue statistics for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreStats {
    pub compute: u32,
    pub sends: u32,
    pub state_moves: u32,
    pub nops: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub name: String,
    pub width: u32,
    pub height: u32,
    /// Compute cycles per vcycle (the vcycle path length).
    pub vcycle_len: u32,
    pub model: MachineModel,
    /// Row-major: core (x, y) is at index `y * width + x`.
    pub cores: Vec<CorePlan>,
    pub trace_regs: Vec<TraceReg>,
    pub displays: Vec<DisplayMeta>,
    /// Sparse initial DRAM contents (word address, value).
    pub global_init: Vec<(u64, u16)>,
    pub stats: Vec<CoreStats>,
}

impl Schedule {
    pub fn core_index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn total_sends(&self) -> u32 {
        self.stats.iter().map(|s| s.sends).sum()
    }
}
