//! The 16-bit datapath IR. A `LowerProgram` is a set of processes, each an
//! ordered list of word-level instructions over SSA virtual registers. State
//! registers are split into 16-bit words; each word has a current-value vreg
//! (readable) and a next-value vreg (committed at the end of every vcycle).

pub mod build;
pub mod interp;
pub mod text;

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::ir::{MemId, MemKind, RegId, Width};

pub use build::lower_netlist;
pub use interp::interpret_lower;
pub use text::{parse_lower, print_lower};

pub type VReg = u32;
pub type ProcId = u32;

/// One 16-bit word of a state register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordKey {
    pub reg: RegId,
    pub word: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Sll,
    Srl,
    Sra,
    Seq,
    Sltu,
    Slts,
}

/// Word-level instruction. ADD/ADDC/SUB also write the destination's
/// overflow (carry) bit; every other write clears it. ADDC adds the overflow
/// bit of its third operand. Shift amounts use the low 4 bits of the second
/// operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LInstr {
    Bin {
        op: BinOp,
        d: VReg,
        a: VReg,
        b: VReg,
    },
    Addc {
        d: VReg,
        a: VReg,
        b: VReg,
        c: VReg,
    },
    /// d = p != 0 ? a : b
    Mux {
        d: VReg,
        p: VReg,
        a: VReg,
        b: VReg,
    },
    Set {
        d: VReg,
        imm: u16,
    },
    Mov {
        d: VReg,
        a: VReg,
    },
    /// Custom function application; `fid` indexes the process table.
    Cust {
        d: VReg,
        fid: u8,
        args: [VReg; 4],
    },
    /// Scratchpad load: word at `layout(mem) + off + value(addr)`.
    Lld {
        d: VReg,
        addr: VReg,
        mem: MemId,
        off: u16,
    },
    /// Predicated scratchpad store.
    Lst {
        addr: VReg,
        data: VReg,
        pred: VReg,
        mem: MemId,
        off: u16,
    },
    /// Privileged global load; 48-bit word address in a[0] (low) .. a[2].
    Gld {
        d: VReg,
        a: [VReg; 3],
    },
    /// Privileged predicated global store.
    Gst {
        a: [VReg; 3],
        data: VReg,
        pred: VReg,
    },
    /// Raises `eid` when the two operand values differ.
    Expect {
        a: VReg,
        b: VReg,
        eid: u16,
    },
    Nop,
}

impl LInstr {
    pub fn def(&self) -> Option<VReg> {
        match self {
            LInstr::Bin { d, .. }
            | LInstr::Addc { d, .. }
            | LInstr::Mux { d, .. }
            | LInstr::Set { d, .. }
            | LInstr::Mov { d, .. }
            | LInstr::Cust { d, .. }
            | LInstr::Lld { d, .. }
            | LInstr::Gld { d, .. } => Some(*d),
            _ => None,
        }
    }

    pub fn uses(&self) -> Vec<VReg> {
        match self {
            LInstr::Bin { a, b, .. } => vec![*a, *b],
            LInstr::Addc { a, b, c, .. } => vec![*a, *b, *c],
            LInstr::Mux { p, a, b, .. } => vec![*p, *a, *b],
            LInstr::Set { .. } | LInstr::Nop => vec![],
            LInstr::Mov { a, .. } => vec![*a],
            LInstr::Cust { args, .. } => args.to_vec(),
            LInstr::Lld { addr, .. } => vec![*addr],
            LInstr::Lst {
                addr, data, pred, ..
            } => vec![*addr, *data, *pred],
            LInstr::Gld { a, .. } => a.to_vec(),
            LInstr::Gst { a, data, pred } => vec![a[0], a[1], a[2], *data, *pred],
            LInstr::Expect { a, b, .. } => vec![*a, *b],
        }
    }

    /// Operand whose overflow bit is read (ADDC's carry-in).
    pub fn ovf_use(&self) -> Option<VReg> {
        match self {
            LInstr::Addc { c, .. } => Some(*c),
            _ => None,
        }
    }

    /// True for ops whose result carries a meaningful overflow bit.
    pub fn writes_ovf(&self) -> bool {
        matches!(
            self,
            LInstr::Addc { .. }
                | LInstr::Bin {
                    op: BinOp::Add | BinOp::Sub,
                    ..
                }
        )
    }

    pub fn has_effect(&self) -> bool {
        matches!(
            self,
            LInstr::Lst { .. } | LInstr::Gst { .. } | LInstr::Expect { .. }
        )
    }

    pub fn rename_uses(&mut self, f: &mut impl FnMut(VReg) -> VReg) {
        match self {
            LInstr::Bin { a, b, .. } => {
                *a = f(*a);
                *b = f(*b);
            }
            LInstr::Addc { a, b, c, .. } => {
                *a = f(*a);
                *b = f(*b);
                *c = f(*c);
            }
            LInstr::Mux { p, a, b, .. } => {
                *p = f(*p);
                *a = f(*a);
                *b = f(*b);
            }
            LInstr::Set { .. } | LInstr::Nop => {}
            LInstr::Mov { a, .. } => *a = f(*a),
            LInstr::Cust { args, .. } => {
                for x in args.iter_mut() {
                    *x = f(*x);
                }
            }
            LInstr::Lld { addr, .. } => *addr = f(*addr),
            LInstr::Lst {
                addr, data, pred, ..
            } => {
                *addr = f(*addr);
                *data = f(*data);
                *pred = f(*pred);
            }
            LInstr::Gld { a, .. } => {
                for x in a.iter_mut() {
                    *x = f(*x);
                }
            }
            LInstr::Gst { a, data, pred } => {
                for x in a.iter_mut() {
                    *x = f(*x);
                }
                *data = f(*data);
                *pred = f(*pred);
            }
            LInstr::Expect { a, b, .. } => {
                *a = f(*a);
                *b = f(*b);
            }
        }
    }

    pub fn set_def(&mut self, v: VReg) {
        match self {
            LInstr::Bin { d, .. }
            | LInstr::Addc { d, .. }
            | LInstr::Mux { d, .. }
            | LInstr::Set { d, .. }
            | LInstr::Mov { d, .. }
            | LInstr::Cust { d, .. }
            | LInstr::Lld { d, .. }
            | LInstr::Gld { d, .. } => *d = v,
            _ => {}
        }
    }

    /// Memory region touched, if any.
    pub fn mem(&self) -> Option<MemId> {
        match self {
            LInstr::Lld { mem, .. } | LInstr::Lst { mem, .. } => Some(*mem),
            _ => None,
        }
    }

    pub fn is_privileged(&self) -> bool {
        matches!(self, LInstr::Gld { .. } | LInstr::Gst { .. })
    }
}

/// A state word owned by a process: `cur` is readable all vcycle, the value
/// of `next` becomes `cur` at commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateWord {
    pub key: WordKey,
    pub cur: VReg,
    pub next: VReg,
    pub init: u16,
}

/// A state word owned by another process, delivered here at every commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImportWord {
    pub key: WordKey,
    pub vreg: VReg,
    pub init: u16,
    pub producer: ProcId,
}

/// One per-bit 4-input truth table per word lane; `table[k]` is the output
/// word when the lane inputs equal bit k of args a..d (k = a + 2b + 4c + 8d).
pub type CfTable = [u16; 16];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerProcess {
    pub id: ProcId,
    pub body: Vec<LInstr>,
    pub state: Vec<StateWord>,
    pub imports: Vec<ImportWord>,
    /// Local memory regions this process owns.
    pub mems: Vec<MemId>,
    pub cfs: Vec<CfTable>,
    pub next_vreg: VReg,
}

impl LowerProcess {
    pub fn fresh_vreg(&mut self) -> VReg {
        let v = self.next_vreg;
        self.next_vreg += 1;
        v
    }

    /// Vregs that must survive the whole vcycle: state cur and imports.
    pub fn persistent_vregs(&self) -> Vec<VReg> {
        self.state
            .iter()
            .map(|s| s.cur)
            .chain(self.imports.iter().map(|i| i.vreg))
            .collect()
    }

    pub fn count_non_nop(&self) -> usize {
        self.body
            .iter()
            .filter(|i| !matches!(i, LInstr::Nop))
            .count()
    }

    /// True if this process must be placed on the privileged core.
    pub fn is_privileged(&self) -> bool {
        self.body.iter().any(|i| i.is_privileged())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegMeta {
    pub name: String,
    pub width: Width,
    pub init: BigUint,
    /// Process owning this register's state words; `None` for undriven
    /// registers, which hold their initial value forever.
    pub owner: Option<ProcId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemMeta {
    pub name: String,
    pub elem_width: Width,
    pub depth: u64,
    pub kind: MemKind,
    pub init: Vec<BigUint>,
    /// Words per element, rounded to a power of two so indexing is a shift.
    pub stride: u32,
    /// Base word address for global regions.
    pub global_base: Option<u64>,
    pub owner: ProcId,
}

impl MemMeta {
    pub fn words_per_elem(&self) -> u32 {
        crate::bits::nwords(self.elem_width) as u32
    }

    pub fn total_words(&self) -> u64 {
        self.depth * self.stride as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisplayMeta {
    pub eid: u16,
    /// Global word address of the payload buffer.
    pub gaddr: u64,
    pub nwords: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerProgram {
    pub name: String,
    pub procs: Vec<LowerProcess>,
    pub regs: Vec<RegMeta>,
    pub mems: Vec<MemMeta>,
    pub displays: Vec<DisplayMeta>,
    /// Size of the global word address space actually used.
    pub global_words: u64,
}

impl LowerProgram {
    /// Map from state word key to owning process, for routing imports.
    pub fn owners(&self) -> HashMap<WordKey, ProcId> {
        let mut m = HashMap::new();
        for p in &self.procs {
            for s in &p.state {
                m.insert(s.key, p.id);
            }
        }
        m
    }

    pub fn proc(&self, id: ProcId) -> &LowerProcess {
        self.procs.iter().find(|p| p.id == id).unwrap()
    }

    /// (producer, key, consumer) triples for every cross-process word.
    pub fn comm_edges(&self) -> Vec<(ProcId, WordKey, ProcId)> {
        let mut out = Vec::new();
        for p in &self.procs {
            for im in &p.imports {
                out.push((im.producer, im.key, p.id));
            }
        }
        out
    }

    /// Words each process must send per vcycle (one per import elsewhere).
    pub fn send_counts(&self) -> HashMap<ProcId, usize> {
        let mut m: HashMap<ProcId, usize> = HashMap::new();
        for p in &self.procs {
            m.entry(p.id).or_default();
        }
        for (from, _, _) in self.comm_edges() {
            *m.entry(from).or_default() += 1;
        }
        m
    }

    pub fn total_sends(&self) -> usize {
        self.procs.iter().map(|p| p.imports.len()).sum()
    }
}
