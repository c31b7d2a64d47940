//! The netlist intermediate representation: unordered, SSA, arbitrary-width
//! instructions plus state elements (registers and memories).

pub mod dag;
pub mod interp;
pub mod parse;
pub mod print;

use num_bigint::BigUint;

pub use dag::{build_dag, DependenceDag};
pub use interp::{interpret_netlist, ExceptionRecord, StateTrace};
pub use parse::parse_netlist;
pub use print::print_netlist;

pub type WireId = u32;
pub type RegId = u32;
pub type MemId = u32;
pub type Width = u32;

pub const MAX_WIDTH: Width = 256;

/// Display-class exception ids carry this bit; stop-class ids do not.
/// Source eids must fit in the low 15 bits.
pub const EID_DISPLAY_BIT: u16 = 0x8000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateRegister {
    pub name: String,
    pub width: Width,
    pub init: BigUint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemKind {
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRegion {
    pub name: String,
    pub elem_width: Width,
    /// Element count; must be a power of two.
    pub depth: u64,
    pub kind: MemKind,
    /// Initial element values; elements past the end start at zero.
    pub init: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wire {
    pub name: String,
    pub width: Width,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Wire(WireId),
    /// Current value of a state register.
    Cur(RegId),
    Const { value: BigUint, width: Width },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Wire(WireId),
    /// Next value of a state register.
    RegNext(RegId),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetOp {
    And,
    Or,
    Xor,
    Not,
    Add,
    Sub,
    Shl,
    ShrL,
    ShrA,
    Eq,
    LtU,
    LtS,
    /// args: [pred, a, b]; result is `pred ? a : b`.
    Mux,
    /// Operands are listed least-significant first.
    Concat,
    /// `result = arg[offset +: width(dest)]`.
    Slice { offset: u32 },
    Load { mem: MemId },
    /// args: [addr, data, pred].
    Store { mem: MemId },
    /// Raises `eid` (stop class) when the two operands differ.
    Expect { eid: u16 },
    /// Emits the operand value with id `eid` every vcycle (display class).
    Display { eid: u16 },
    /// Plain copy; the only way to drive a register's next value.
    Mov,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetlistInstr {
    pub op: NetOp,
    pub dest: Dest,
    pub args: Vec<Operand>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetlistProgram {
    pub name: String,
    pub registers: Vec<StateRegister>,
    pub memories: Vec<MemoryRegion>,
    pub wires: Vec<Wire>,
    pub instrs: Vec<NetlistInstr>,
}

impl NetlistProgram {
    pub fn operand_width(&self, op: &Operand) -> Width {
        match op {
            Operand::Wire(w) => self.wires[*w as usize].width,
            Operand::Cur(r) => self.registers[*r as usize].width,
            Operand::Const { width, .. } => *width,
        }
    }

    pub fn dest_width(&self, d: &Dest) -> Option<Width> {
        match d {
            Dest::Wire(w) => Some(self.wires[*w as usize].width),
            Dest::RegNext(r) => Some(self.registers[*r as usize].width),
            Dest::None => None,
        }
    }

    /// Instruction indices that are sinks: next-register writes, stores,
    /// expects and displays.
    pub fn sink_instrs(&self) -> Vec<usize> {
        self.instrs
            .iter()
            .enumerate()
            .filter(|(_, i)| i.is_sink())
            .map(|(k, _)| k)
            .collect()
    }

    /// Index of the instruction defining each wire.
    pub fn wire_defs(&self) -> Vec<usize> {
        let mut defs = vec![usize::MAX; self.wires.len()];
        for (i, instr) in self.instrs.iter().enumerate() {
            if let Dest::Wire(w) = instr.dest {
                defs[w as usize] = i;
            }
        }
        defs
    }

    /// Registers that have a next-value driver. Registers without one hold
    /// their initial value forever.
    pub fn driven_regs(&self) -> Vec<bool> {
        let mut driven = vec![false; self.registers.len()];
        for instr in &self.instrs {
            if let Dest::RegNext(r) = instr.dest {
                driven[r as usize] = true;
            }
        }
        driven
    }
}

impl NetlistInstr {
    pub fn is_sink(&self) -> bool {
        matches!(self.dest, Dest::RegNext(_))
            || matches!(
                self.op,
                NetOp::Store { .. } | NetOp::Expect { .. } | NetOp::Display { .. }
            )
    }
}
