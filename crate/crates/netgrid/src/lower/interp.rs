//! Reference interpreter for the lowered IR. Bodies run in order once per
//! vcycle; stores and state commits are buffered so a stop exception leaves
//! state exactly as it was at the start of the vcycle.

use std::collections::HashMap;

use num_bigint::BigUint;

use super::*;
use crate::bits::{from_words, to_words};
use crate::error::{Error, Result};
use crate::ir::{interp::ExceptionRecord, interp::StateTrace, EID_DISPLAY_BIT};
use crate::machine::SCRATCHPAD_WORDS;

/// 16-bit ALU shared by the interpreter and the machine simulator.
/// Returns (value, overflow). `c_ovf` is the carry-in for ADDC.
pub fn alu(op: BinOp, a: u16, b: u16) -> (u16, bool) {
    match op {
        BinOp::Add => {
            let s = a as u32 + b as u32;
            (s as u16, s > 0xffff)
        }
        BinOp::Sub => {
            let s = a as u32 + (!b) as u32 + 1;
            (s as u16, s > 0xffff)
        }
        BinOp::And => (a & b, false),
        BinOp::Or => (a | b, false),
        BinOp::Xor => (a ^ b, false),
        BinOp::Sll => (a << (b & 15), false),
        BinOp::Srl => (a >> (b & 15), false),
        BinOp::Sra => (((a as i16) >> (b & 15)) as u16, false),
        BinOp::Seq => ((a == b) as u16, false),
        BinOp::Sltu => ((a < b) as u16, false),
        BinOp::Slts => (((a as i16) < (b as i16)) as u16, false),
    }
}

pub fn addc(a: u16, b: u16, c_ovf: bool) -> (u16, bool) {
    let s = a as u32 + b as u32 + c_ovf as u32;
    (s as u16, s > 0xffff)
}

/// Apply a 4-input per-bit truth table.
pub fn eval_cust(table: &CfTable, args: [u16; 4]) -> u16 {
    let mut out = 0u16;
    for j in 0..16 {
        let k = ((args[0] >> j) & 1)
            | (((args[1] >> j) & 1) << 1)
            | (((args[2] >> j) & 1) << 2)
            | (((args[3] >> j) & 1) << 3);
        out |= ((table[k as usize] >> j) & 1) << j;
    }
    out
}

/// Scratchpad word offsets for each local region of a process, in region
/// order; the spill area is whatever remains.
pub fn scratch_layout(low: &LowerProgram, proc: &LowerProcess) -> Result<HashMap<MemId, u16>> {
    let mut base = 0u64;
    let mut out = HashMap::new();
    for &mid in &proc.mems {
        out.insert(mid, base as u16);
        base += low.mems[mid as usize].total_words();
        if base > SCRATCHPAD_WORDS as u64 {
            return Err(Error::Invalid(format!(
                "local regions of process {} exceed the scratchpad",
                proc.id
            )));
        }
    }
    Ok(out)
}

/// Words used by local regions; the rest of the scratchpad can hold spills.
pub fn scratch_used(low: &LowerProgram, proc: &LowerProcess) -> u64 {
    proc.mems
        .iter()
        .map(|&m| low.mems[m as usize].total_words())
        .sum()
}

struct ProcState {
    vregs: Vec<u16>,
    ovf: Vec<bool>,
    scratch: Vec<u16>,
    layout: HashMap<MemId, u16>,
}

pub struct LowerMachine<'a> {
    low: &'a LowerProgram,
    procs: Vec<ProcState>,
    global: Vec<u16>,
    /// key -> (proc index, state index)
    state_index: HashMap<WordKey, (usize, usize)>,
}

pub enum LowerStep {
    Ok(Vec<(u16, BigUint)>),
    Stop(u16),
}

impl<'a> LowerMachine<'a> {
    pub fn new(low: &'a LowerProgram) -> Result<Self> {
        let mut procs = Vec::new();
        for p in &low.procs {
            let layout = scratch_layout(low, p)?;
            let mut scratch = vec![0u16; SCRATCHPAD_WORDS];
            for &mid in &p.mems {
                let m = &low.mems[mid as usize];
                let base = layout[&mid] as usize;
                for (e, v) in m.init.iter().enumerate() {
                    let words = to_words(v, m.elem_width);
                    for (j, w) in words.iter().enumerate() {
                        scratch[base + e * m.stride as usize + j] = *w;
                    }
                }
            }
            let mut vregs = vec![0u16; p.next_vreg as usize];
            for s in &p.state {
                vregs[s.cur as usize] = s.init;
            }
            for im in &p.imports {
                vregs[im.vreg as usize] = im.init;
            }
            procs.push(ProcState {
                vregs,
                ovf: vec![false; p.next_vreg as usize],
                scratch,
                layout,
            });
        }

        let mut global = vec![0u16; low.global_words as usize];
        for m in &low.mems {
            if let Some(base) = m.global_base {
                for (e, v) in m.init.iter().enumerate() {
                    let words = to_words(v, m.elem_width);
                    for (j, w) in words.iter().enumerate() {
                        global[base as usize + e * m.stride as usize + j] = *w;
                    }
                }
            }
        }

        let mut state_index = HashMap::new();
        for (pi, p) in low.procs.iter().enumerate() {
            for (si, s) in p.state.iter().enumerate() {
                state_index.insert(s.key, (pi, si));
            }
        }

        Ok(LowerMachine {
            low,
            procs,
            global,
            state_index,
        })
    }

    pub fn step(&mut self) -> LowerStep {
        let mut lst: Vec<(usize, u16, u16)> = Vec::new(); // (proc, addr, data)
        let mut gst: Vec<(u64, u16)> = Vec::new();
        let mut fired: Vec<u16> = Vec::new();

        for (pi, p) in self.low.procs.iter().enumerate() {
            let st = &mut self.procs[pi];
            for instr in &p.body {
                match instr {
                    LInstr::Bin { op, d, a, b } => {
                        let (v, o) = alu(*op, st.vregs[*a as usize], st.vregs[*b as usize]);
                        st.vregs[*d as usize] = v;
                        st.ovf[*d as usize] = o;
                    }
                    LInstr::Addc { d, a, b, c } => {
                        let (v, o) = addc(
                            st.vregs[*a as usize],
                            st.vregs[*b as usize],
                            st.ovf[*c as usize],
                        );
                        st.vregs[*d as usize] = v;
                        st.ovf[*d as usize] = o;
                    }
                    LInstr::Mux { d, p, a, b } => {
                        st.vregs[*d as usize] = if st.vregs[*p as usize] != 0 {
                            st.vregs[*a as usize]
                        } else {
                            st.vregs[*b as usize]
                        };
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Set { d, imm } => {
                        st.vregs[*d as usize] = *imm;
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Mov { d, a } => {
                        st.vregs[*d as usize] = st.vregs[*a as usize];
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Cust { d, fid, args } => {
                        let vals = args.map(|r| st.vregs[r as usize]);
                        st.vregs[*d as usize] = eval_cust(&p.cfs[*fid as usize], vals);
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Lld { d, addr, mem, off } => {
                        let a = (st.layout[mem]
                            .wrapping_add(*off)
                            .wrapping_add(st.vregs[*addr as usize]))
                            as usize
                            % SCRATCHPAD_WORDS;
                        st.vregs[*d as usize] = st.scratch[a];
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Lst {
                        addr,
                        data,
                        pred,
                        mem,
                        off,
                    } => {
                        if st.vregs[*pred as usize] != 0 {
                            let a = (st.layout[mem]
                                .wrapping_add(*off)
                                .wrapping_add(st.vregs[*addr as usize]))
                                as usize
                                % SCRATCHPAD_WORDS;
                            lst.push((pi, a as u16, st.vregs[*data as usize]));
                        }
                    }
                    LInstr::Gld { d, a } => {
                        let addr = gaddr_of(st, a);
                        st.vregs[*d as usize] =
                            self.global.get(addr as usize).copied().unwrap_or(0);
                        st.ovf[*d as usize] = false;
                    }
                    LInstr::Gst { a, data, pred } => {
                        if st.vregs[*pred as usize] != 0 {
                            let addr = gaddr_of(st, a);
                            gst.push((addr, st.vregs[*data as usize]));
                        }
                    }
                    LInstr::Expect { a, b, eid } => {
                        if st.vregs[*a as usize] != st.vregs[*b as usize] {
                            fired.push(*eid);
                        }
                    }
                    LInstr::Nop => {}
                }
            }
        }

        if let Some(&stop) = fired.iter().filter(|e| **e & EID_DISPLAY_BIT == 0).min() {
            return LowerStep::Stop(stop);
        }

        for (pi, addr, data) in lst {
            self.procs[pi].scratch[addr as usize] = data;
        }
        for (addr, data) in gst {
            if (addr as usize) < self.global.len() {
                self.global[addr as usize] = data;
            }
        }

        // Atomic state commit, then import delivery.
        let mut new: Vec<Vec<u16>> = Vec::with_capacity(self.low.procs.len());
        for (pi, p) in self.low.procs.iter().enumerate() {
            new.push(
                p.state
                    .iter()
                    .map(|s| self.procs[pi].vregs[s.next as usize])
                    .collect(),
            );
        }
        for (pi, p) in self.low.procs.iter().enumerate() {
            for (si, s) in p.state.iter().enumerate() {
                self.procs[pi].vregs[s.cur as usize] = new[pi][si];
                self.procs[pi].ovf[s.cur as usize] = false;
            }
        }
        for (pi, p) in self.low.procs.iter().enumerate() {
            for im in &p.imports {
                let (opi, osi) = self.state_index[&im.key];
                self.procs[pi].vregs[im.vreg as usize] = new[opi][osi];
                self.procs[pi].ovf[im.vreg as usize] = false;
            }
        }

        let mut disp: Vec<(u16, BigUint)> = Vec::new();
        fired.sort_unstable();
        fired.dedup();
        for eid in fired {
            if let Some(d) = self.low.displays.iter().find(|d| d.eid == eid) {
                let words: Vec<u16> = (0..d.nwords)
                    .map(|j| self.global[(d.gaddr + j as u64) as usize])
                    .collect();
                disp.push((eid, from_words(&words)));
            }
        }
        LowerStep::Ok(disp)
    }

    /// Current register values in netlist register order.
    pub fn reg_snapshot(&self) -> Vec<BigUint> {
        self.low
            .regs
            .iter()
            .enumerate()
            .map(|(r, meta)| match meta.owner {
                None => meta.init.clone(),
                Some(_) => {
                    let n = crate::bits::nwords(meta.width);
                    let words: Vec<u16> = (0..n)
                        .map(|j| {
                            let (pi, si) = self.state_index[&WordKey {
                                reg: r as u32,
                                word: j as u16,
                            }];
                            let s = &self.low.procs[pi].state[si];
                            self.procs[pi].vregs[s.cur as usize]
                        })
                        .collect();
                    from_words(&words)
                }
            })
            .collect()
    }

    /// Final memory contents in netlist region order.
    pub fn mem_snapshot(&self) -> Vec<Vec<BigUint>> {
        self.low
            .mems
            .iter()
            .enumerate()
            .map(|(mi, m)| {
                (0..m.depth)
                    .map(|e| {
                        let nw = m.words_per_elem() as u64;
                        let words: Vec<u16> = (0..nw)
                            .map(|j| match m.global_base {
                                Some(base) => {
                                    self.global[(base + e * m.stride as u64 + j) as usize]
                                }
                                None => {
                                    let pi = self
                                        .low
                                        .procs
                                        .iter()
                                        .position(|p| p.mems.contains(&(mi as u32)))
                                        .unwrap();
                                    let base = self.procs[pi].layout[&(mi as u32)] as u64;
                                    self.procs[pi].scratch
                                        [(base + e * m.stride as u64 + j) as usize]
                                }
                            })
                            .collect();
                        from_words(&words)
                    })
                    .collect()
            })
            .collect()
    }
}

fn gaddr_of(st: &ProcState, a: &[VReg; 3]) -> u64 {
    (st.vregs[a[0] as usize] as u64)
        | ((st.vregs[a[1] as usize] as u64) << 16)
        | ((st.vregs[a[2] as usize] as u64) << 32)
}

pub fn interpret_lower(low: &LowerProgram, vcycles: u64) -> Result<StateTrace> {
    let mut m = LowerMachine::new(low)?;
    let mut trace = StateTrace {
        regs: Vec::new(),
        displays: Vec::new(),
        stop: None,
        vcycles: 0,
        mems: Vec::new(),
    };
    for v in 0..vcycles {
        match m.step() {
            LowerStep::Ok(disp) => {
                for (eid, val) in disp {
                    trace.displays.push((eid, v, val));
                }
                trace.regs.push(m.reg_snapshot());
                trace.vcycles += 1;
            }
            LowerStep::Stop(eid) => {
                trace.stop = Some(ExceptionRecord { eid, vcycle: v });
                break;
            }
        }
    }
    trace.mems = m.mem_snapshot();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{interpret_netlist, parse_netlist};
    use crate::lower::lower_netlist;

    fn check_equiv(src: &str, vcycles: u64) {
        let net = parse_netlist(src).unwrap();
        let want = interpret_netlist(&net, vcycles);
        let low = lower_netlist(&net).unwrap();
        let got = interpret_lower(&low, vcycles).unwrap();
        assert_eq!(want.regs, got.regs, "register traces differ");
        assert_eq!(want.displays, got.displays);
        assert_eq!(want.stop, got.stop);
        assert_eq!(want.mems, got.mems);
    }

    #[test]
    fn counter_equiv() {
        check_equiv(
            "design c\nreg count 4\nw0:4 = add count.cur, 1:4\ncount.next = mov w0\n",
            40,
        );
    }

    #[test]
    fn wide_arith_equiv() {
        check_equiv(
            "\
design w
reg a 40 init 0xfffffffffe
reg b 40 init 0x123456789a
s:40 = add a.cur, b.cur
d:40 = sub a.cur, b.cur
lt:1 = ltu a.cur, b.cur
lts0:1 = lts a.cur, b.cur
e:1 = eq a.cur, a.cur
n:40 = not a.cur
x:40 = mux lt, s, d
a.next = mov x
b.next = mov n
reg o 3
w3:3 = concat lt, lts0, e
o.next = mov w3
",
            64,
        );
    }

    #[test]
    fn shift_equiv() {
        check_equiv(
            "\
design s
reg a 20 init 0x81234
reg k 6 init 1
c1:20 = shl a.cur, 5:6
c2:20 = shrl a.cur, 17:6
c3:20 = shra a.cur, 3:6
d1:20 = shl a.cur, k.cur
d2:20 = shrl a.cur, k.cur
d3:20 = shra a.cur, k.cur
t1:20 = xor c1, c2
t2:20 = xor c3, d1
t3:20 = xor d2, d3
t4:20 = xor t1, t2
t5:20 = xor t4, t3
a.next = mov t5
k2:6 = add k.cur, 7:6
k.next = mov k2
",
            64,
        );
    }

    #[test]
    fn memory_equiv() {
        check_equiv(
            "\
design m
reg i 5
mem loc local 16 20 init 5 9
mem glob global 8 40
v:20 = load loc, i.cur
g:40 = load glob, i.cur
w:20 = add v, 3:20
store loc, i.cur, w, 1:1
gv:40 = concat w, v
store glob, i.cur, gv, 1:1
i2:5 = add i.cur, 1:5
i.next = mov i2
reg acc 40
a2:40 = xor acc.cur, g
acc.next = mov a2
",
            80,
        );
    }

    #[test]
    fn display_and_stop_equiv() {
        check_equiv(
            "\
design e
reg c 8
w:8 = add c.cur, 1:8
c.next = mov w
display c.cur, 4
expect0:1 = ltu c.cur, 10:8
expect expect0, 1:1, 3
",
            40,
        );
    }
}
