//! Lowers a netlist into a single `LowerProcess` over the 16-bit ISA.
//! Arbitrary-width values become little-endian vectors of word vregs; the
//! invariant is that the top word of every value is masked to its width.
//!
//! Body layout: all pure computation and loads in dependency order, then all
//! stores and expects in source order. That keeps every load of a region
//! ahead of every store to it, which is what lets the interpreter and the
//! machine apply stores without shadow copies.

use std::collections::HashMap;

use super::*;
use crate::bits::{nwords, to_words, top_word_mask};
use crate::error::{Error, Result};
use crate::ir::{self, Dest, MemKind, NetOp, NetlistProgram, Operand};

struct Builder<'a> {
    net: &'a NetlistProgram,
    mems: Vec<MemMeta>,
    body: Vec<LInstr>,
    next_vreg: VReg,
    consts: HashMap<u16, VReg>,
    wire_vals: Vec<Option<Vec<VReg>>>,
    reg_cur: Vec<Vec<VReg>>,
    reg_next: Vec<Option<Vec<VReg>>>,
    /// Deferred effect instructions, keyed by source instruction index so
    /// they can be appended in source order.
    effects: Vec<Vec<LInstr>>,
    displays: Vec<DisplayMeta>,
}

pub fn lower_netlist(net: &NetlistProgram) -> Result<LowerProgram> {
    // Lay out the global word address space: regions first, then one payload
    // buffer per display.
    let mut cursor = 0u64;
    let mut mems = Vec::new();
    for m in &net.memories {
        let stride = (nwords(m.elem_width) as u32).next_power_of_two();
        let global_base = match m.kind {
            MemKind::Global => {
                let b = cursor;
                cursor += m.depth * stride as u64;
                Some(b)
            }
            MemKind::Local => None,
        };
        mems.push(MemMeta {
            name: m.name.clone(),
            elem_width: m.elem_width,
            depth: m.depth,
            kind: m.kind,
            init: m.init.clone(),
            stride,
            global_base,
            owner: 0,
        });
    }
    if cursor >= 1 << 47 {
        return Err(Error::Invalid("global regions exceed the address space".into()));
    }

    let driven = net.driven_regs();
    let mut b = Builder {
        net,
        mems,
        body: Vec::new(),
        next_vreg: 0,
        consts: HashMap::new(),
        wire_vals: vec![None; net.wires.len()],
        reg_cur: Vec::new(),
        reg_next: vec![None; net.registers.len()],
        effects: vec![Vec::new(); net.instrs.len()],
        displays: Vec::new(),
    };

    // State current words come first so they exist before any body code.
    for (r, reg) in net.registers.iter().enumerate() {
        if driven[r] {
            let n = nwords(reg.width);
            let words: Vec<VReg> = (0..n).map(|_| b.fresh()).collect();
            b.reg_cur.push(words);
        } else {
            b.reg_cur.push(Vec::new());
        }
    }

    let mut cursor = cursor;
    for i in ir::parse::topo_order(net) {
        b.lower_instr(i, &mut cursor)?;
    }

    let mut body = std::mem::take(&mut b.body);
    for effs in std::mem::take(&mut b.effects) {
        body.extend(effs);
    }

    let mut state = Vec::new();
    let mut regs = Vec::new();
    for (r, reg) in net.registers.iter().enumerate() {
        let owner = if driven[r] { Some(0) } else { None };
        if driven[r] {
            let next = b.reg_next[r]
                .clone()
                .expect("driven register has a next value");
            let inits = to_words(&reg.init, reg.width);
            for j in 0..nwords(reg.width) {
                state.push(StateWord {
                    key: WordKey {
                        reg: r as u32,
                        word: j as u16,
                    },
                    cur: b.reg_cur[r][j],
                    next: next[j],
                    init: inits[j],
                });
            }
        }
        regs.push(RegMeta {
            name: reg.name.clone(),
            width: reg.width,
            init: reg.init.clone(),
            owner,
        });
    }

    let proc = LowerProcess {
        id: 0,
        body,
        state,
        imports: Vec::new(),
        mems: b
            .mems
            .iter()
            .enumerate()
            .filter(|(_, m)| m.kind == MemKind::Local)
            .map(|(i, _)| i as u32)
            .collect(),
        cfs: Vec::new(),
        next_vreg: b.next_vreg,
    };

    Ok(LowerProgram {
        name: net.name.clone(),
        procs: vec![proc],
        regs,
        mems: b.mems,
        displays: b.displays,
        global_words: cursor,
    })
}

impl<'a> Builder<'a> {
    fn fresh(&mut self) -> VReg {
        let v = self.next_vreg;
        self.next_vreg += 1;
        v
    }

    fn imm(&mut self, v: u16) -> VReg {
        if let Some(&r) = self.consts.get(&v) {
            return r;
        }
        let d = self.fresh();
        self.body.push(LInstr::Set { d, imm: v });
        self.consts.insert(v, d);
        d
    }

    fn bin(&mut self, op: BinOp, a: VReg, b: VReg) -> VReg {
        let d = self.fresh();
        self.body.push(LInstr::Bin { op, d, a, b });
        d
    }

    fn addc(&mut self, a: VReg, b: VReg, c: VReg) -> VReg {
        let d = self.fresh();
        self.body.push(LInstr::Addc { d, a, b, c });
        d
    }

    fn mux(&mut self, p: VReg, a: VReg, b: VReg) -> VReg {
        let d = self.fresh();
        self.body.push(LInstr::Mux { d, p, a, b });
        d
    }

    /// Words of an operand value, top word masked.
    fn val(&mut self, op: &Operand) -> Vec<VReg> {
        match op {
            Operand::Wire(w) => self.wire_vals[*w as usize]
                .clone()
                .expect("wires are lowered in dependency order"),
            Operand::Cur(r) => {
                let reg = &self.net.registers[*r as usize];
                if self.reg_cur[*r as usize].is_empty() {
                    // undriven: constant forever
                    to_words(&reg.init, reg.width)
                        .into_iter()
                        .map(|w| self.imm(w))
                        .collect()
                } else {
                    self.reg_cur[*r as usize].clone()
                }
            }
            Operand::Const { value, width } => to_words(value, *width)
                .into_iter()
                .map(|w| self.imm(w))
                .collect(),
        }
    }

    /// AND the top word down to `width` bits when needed.
    fn mask_top(&mut self, mut v: Vec<VReg>, width: u32) -> Vec<VReg> {
        let tm = top_word_mask(width);
        if tm != 0xffff {
            let m = self.imm(tm);
            let last = v.len() - 1;
            v[last] = self.bin(BinOp::And, v[last], m);
        }
        v
    }

    fn add_chain(&mut self, a: &[VReg], b: &[VReg], width: u32) -> Vec<VReg> {
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let d = if i == 0 {
                self.bin(BinOp::Add, a[0], b[0])
            } else {
                let prev = out[i - 1];
                self.addc(a[i], b[i], prev)
            };
            out.push(d);
        }
        self.mask_top(out, width)
    }

    /// a - b over the word chain; returns unmasked words. The overflow bit
    /// of the last word is the carry-out (1 when a >= b).
    fn sub_chain(&mut self, a: &[VReg], b: &[VReg]) -> Vec<VReg> {
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let d = if i == 0 {
                self.bin(BinOp::Sub, a[0], b[0])
            } else {
                let ones = self.imm(0xffff);
                let nb = self.bin(BinOp::Xor, b[i], ones);
                let prev = out[i - 1];
                self.addc(a[i], nb, prev)
            };
            out.push(d);
        }
        out
    }

    /// 1-bit "a < b" (unsigned) over equal-length word lists.
    fn ltu(&mut self, a: &[VReg], b: &[VReg]) -> VReg {
        let diff = self.sub_chain(a, b);
        let zero = self.imm(0);
        // materialize the final carry: 0 + 0 + ovf
        let carry = self.addc(zero, zero, *diff.last().unwrap());
        let one = self.imm(1);
        self.bin(BinOp::Xor, carry, one)
    }

    /// OR-reduce the per-word XORs; zero iff the values are equal.
    fn diff_word(&mut self, a: &[VReg], b: &[VReg]) -> VReg {
        let mut acc = self.bin(BinOp::Xor, a[0], b[0]);
        for i in 1..a.len() {
            let x = self.bin(BinOp::Xor, a[i], b[i]);
            acc = self.bin(BinOp::Or, acc, x);
        }
        acc
    }

    /// Left shift by a constant amount; result width = `width`.
    fn shl_const(&mut self, v: &[VReg], width: u32, k: u32) -> Vec<VReg> {
        let n = v.len();
        if k >= width {
            let z = self.imm(0);
            return vec![z; n];
        }
        let q = (k / 16) as usize;
        let r = k % 16;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i < q {
                out.push(self.imm(0));
            } else if r == 0 {
                out.push(v[i - q]);
            } else {
                let ra = self.imm(r as u16);
                let hi = self.bin(BinOp::Sll, v[i - q], ra);
                if i - q == 0 {
                    out.push(hi);
                } else {
                    let rb = self.imm((16 - r) as u16);
                    let lo = self.bin(BinOp::Srl, v[i - q - 1], rb);
                    out.push(self.bin(BinOp::Or, hi, lo));
                }
            }
        }
        self.mask_top(out, width)
    }

    /// Logical right shift by a constant amount.
    fn shr_const(&mut self, v: &[VReg], width: u32, k: u32) -> Vec<VReg> {
        let n = v.len();
        if k >= width {
            let z = self.imm(0);
            return vec![z; n];
        }
        let q = (k / 16) as usize;
        let r = k % 16;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i + q >= n {
                out.push(self.imm(0));
            } else if r == 0 {
                out.push(v[i + q]);
            } else {
                let ra = self.imm(r as u16);
                let lo = self.bin(BinOp::Srl, v[i + q], ra);
                if i + q + 1 < n {
                    let rb = self.imm((16 - r) as u16);
                    let hi = self.bin(BinOp::Sll, v[i + q + 1], rb);
                    out.push(self.bin(BinOp::Or, lo, hi));
                } else {
                    out.push(lo);
                }
            }
        }
        out
    }

    /// Sign-extend the top word to a full 16 bits and produce the all-sign
    /// fill word. Returns (extended words, fill).
    fn sign_extend(&mut self, v: &[VReg], width: u32) -> (Vec<VReg>, VReg) {
        let mut ext = v.to_vec();
        let wtop = width % 16;
        let last = ext.len() - 1;
        if wtop != 0 {
            let sh = self.imm(16 - wtop as u16);
            let up = self.bin(BinOp::Sll, ext[last], sh);
            ext[last] = self.bin(BinOp::Sra, up, sh);
        }
        let fifteen = self.imm(15);
        let fill = self.bin(BinOp::Sra, ext[last], fifteen);
        (ext, fill)
    }

    /// Arithmetic right shift by a constant amount.
    fn shra_const(&mut self, v: &[VReg], width: u32, k: u32) -> Vec<VReg> {
        let n = v.len();
        let (ext, fill) = self.sign_extend(v, width);
        let k = k.min(width);
        let q = (k / 16) as usize;
        let r = k % 16;
        let word = |i: usize| if i < n { ext[i] } else { fill };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if r == 0 {
                out.push(word(i + q));
            } else {
                let ra = self.imm(r as u16);
                let lo = self.bin(BinOp::Srl, word(i + q), ra);
                let rb = self.imm((16 - r) as u16);
                let hi = self.bin(BinOp::Sll, word(i + q + 1), rb);
                out.push(self.bin(BinOp::Or, lo, hi));
            }
        }
        self.mask_top(out, width)
    }

    /// Extract bit `k` of a multi-word value as a 0/1 word.
    fn bit(&mut self, v: &[VReg], k: u32) -> VReg {
        let w = v[(k / 16) as usize];
        let r = k % 16;
        let t = if r == 0 {
            w
        } else {
            let ra = self.imm(r as u16);
            self.bin(BinOp::Srl, w, ra)
        };
        let one = self.imm(1);
        self.bin(BinOp::And, t, one)
    }

    /// Barrel shifter for a runtime shift amount.
    fn shift_dyn(&mut self, op: &NetOp, v: &[VReg], width: u32, amt: &[VReg], amt_w: u32) -> Vec<VReg> {
        let stages = 32 - (width - 1).leading_zeros(); // ceil(log2(width)), width >= 2
        let stages = if width == 1 { 0 } else { stages };
        let mut cur = v.to_vec();
        for k in 0..stages.min(amt_w) {
            let sel = self.bit(amt, k);
            let shifted = match op {
                NetOp::Shl => self.shl_const(&cur, width, 1 << k),
                NetOp::ShrL => self.shr_const(&cur, width, 1 << k),
                NetOp::ShrA => self.shra_const(&cur, width, 1 << k),
                _ => unreachable!(),
            };
            cur = (0..cur.len())
                .map(|i| self.mux(sel, shifted[i], cur[i]))
                .collect();
        }
        // amounts >= width flush to the fill value
        let representable = amt_w >= 64 || (1u64 << amt_w) > width as u64;
        if representable {
            let wconst: Vec<VReg> = to_words(&width.into(), amt_w)
                .into_iter()
                .map(|w| self.imm(w))
                .collect();
            let in_range = self.ltu(amt, &wconst);
            let fill = match op {
                NetOp::ShrA => self.sign_extend(v, width).1,
                _ => self.imm(0),
            };
            let fill = if let NetOp::ShrA = op {
                // the fill must still respect the width mask
                let only = vec![fill; cur.len()];
                self.mask_top(only, width)
            } else {
                vec![fill; cur.len()]
            };
            cur = (0..cur.len())
                .map(|i| self.mux(in_range, cur[i], fill[i.min(fill.len() - 1)]))
                .collect();
        }
        cur
    }

    /// Index value (element number) for a memory access: `addr & (depth-1)`,
    /// as a little-endian word list of exactly the index width.
    fn mem_index(&mut self, addr: &[VReg], addr_w: u32, depth: u64) -> Vec<VReg> {
        if depth == 1 {
            return vec![self.imm(0)];
        }
        let idx_bits = depth.trailing_zeros();
        let n = nwords(idx_bits);
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            if j >= addr.len() {
                out.push(self.imm(0));
                continue;
            }
            let need_mask =
                j == n - 1 && addr_w > idx_bits && top_word_mask(idx_bits) != 0xffff;
            if need_mask {
                let m = self.imm(top_word_mask(idx_bits));
                out.push(self.bin(BinOp::And, addr[j], m));
            } else {
                out.push(addr[j]);
            }
        }
        out
    }

    /// The three 16-bit words of `base + (element_offset << 0)`, where
    /// `off` holds the word offset of the element and `base` is a constant.
    fn gaddr(&mut self, off: &[VReg], base: u64) -> [VReg; 3] {
        let bw = [
            (base & 0xffff) as u16,
            ((base >> 16) & 0xffff) as u16,
            ((base >> 32) & 0xffff) as u16,
        ];
        let zero = self.imm(0);
        let w = |j: usize| off.get(j).copied().unwrap_or(zero);
        let b0 = self.imm(bw[0]);
        let a0 = self.bin(BinOp::Add, w(0), b0);
        let b1 = self.imm(bw[1]);
        let a1 = self.addc(w(1), b1, a0);
        let b2 = self.imm(bw[2]);
        let a2 = self.addc(w(2), b2, a1);
        [a0, a1, a2]
    }

    fn lower_instr(&mut self, i: usize, global_cursor: &mut u64) -> Result<()> {
        let net = self.net;
        let instr = &net.instrs[i];
        let widths: Vec<u32> = instr.args.iter().map(|a| net.operand_width(a)).collect();
        let dw = net.dest_width(&instr.dest);

        let result: Option<Vec<VReg>> = match &instr.op {
            NetOp::And | NetOp::Or | NetOp::Xor => {
                let op = match instr.op {
                    NetOp::And => BinOp::And,
                    NetOp::Or => BinOp::Or,
                    _ => BinOp::Xor,
                };
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                Some((0..a.len()).map(|j| self.bin(op, a[j], b[j])).collect())
            }
            NetOp::Not => {
                let a = self.val(&instr.args[0]);
                let w = widths[0];
                let n = a.len();
                Some(
                    (0..n)
                        .map(|j| {
                            let m = if j == n - 1 { top_word_mask(w) } else { 0xffff };
                            let mv = self.imm(m);
                            self.bin(BinOp::Xor, a[j], mv)
                        })
                        .collect(),
                )
            }
            NetOp::Add => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                Some(self.add_chain(&a, &b, widths[0]))
            }
            NetOp::Sub => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                let d = self.sub_chain(&a, &b);
                Some(self.mask_top(d, widths[0]))
            }
            NetOp::Shl | NetOp::ShrL | NetOp::ShrA => {
                let a = self.val(&instr.args[0]);
                let w = widths[0];
                if let Operand::Const { value, .. } = &instr.args[1] {
                    let k = u32::try_from(value).unwrap_or(u32::MAX).min(w + 16);
                    Some(match instr.op {
                        NetOp::Shl => self.shl_const(&a, w, k),
                        NetOp::ShrL => self.shr_const(&a, w, k),
                        _ => self.shra_const(&a, w, k),
                    })
                } else {
                    let amt = self.val(&instr.args[1]);
                    Some(self.shift_dyn(&instr.op, &a, w, &amt, widths[1]))
                }
            }
            NetOp::Eq => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                if a.len() == 1 {
                    Some(vec![self.bin(BinOp::Seq, a[0], b[0])])
                } else {
                    let d = self.diff_word(&a, &b);
                    let z = self.imm(0);
                    Some(vec![self.bin(BinOp::Seq, d, z)])
                }
            }
            NetOp::LtU => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                if a.len() == 1 {
                    Some(vec![self.bin(BinOp::Sltu, a[0], b[0])])
                } else {
                    Some(vec![self.ltu(&a, &b)])
                }
            }
            NetOp::LtS => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                let w = widths[0];
                if a.len() == 1 && w == 16 {
                    Some(vec![self.bin(BinOp::Slts, a[0], b[0])])
                } else {
                    // flip sign bits, compare unsigned
                    let sm = self.imm(1u16 << ((w - 1) % 16));
                    let mut af = a.clone();
                    let mut bf = b.clone();
                    let last = a.len() - 1;
                    af[last] = self.bin(BinOp::Xor, a[last], sm);
                    bf[last] = self.bin(BinOp::Xor, b[last], sm);
                    if a.len() == 1 {
                        Some(vec![self.bin(BinOp::Sltu, af[0], bf[0])])
                    } else {
                        Some(vec![self.ltu(&af, &bf)])
                    }
                }
            }
            NetOp::Mux => {
                let p = self.val(&instr.args[0])[0];
                let a = self.val(&instr.args[1]);
                let b = self.val(&instr.args[2]);
                Some((0..a.len()).map(|j| self.mux(p, a[j], b[j])).collect())
            }
            NetOp::Concat => {
                let total: u32 = widths.iter().sum();
                let n = nwords(total);
                let mut acc: Vec<Option<VReg>> = vec![None; n];
                let mut off = 0u32;
                for (ai, arg) in instr.args.iter().enumerate() {
                    let v = self.val(arg);
                    let w = widths[ai];
                    let q = (off / 16) as usize;
                    let r = off % 16;
                    for (j, &word) in v.iter().enumerate() {
                        let lo = if r == 0 {
                            word
                        } else {
                            let ra = self.imm(r as u16);
                            self.bin(BinOp::Sll, word, ra)
                        };
                        or_into(self, &mut acc, q + j, lo);
                        if r != 0 && q + j + 1 < n {
                            // bits spilling into the next word
                            let rb = self.imm((16 - r) as u16);
                            let hi = self.bin(BinOp::Srl, word, rb);
                            or_into(self, &mut acc, q + j + 1, hi);
                        }
                    }
                    off += w;
                }
                Some(
                    acc.into_iter()
                        .map(|x| x.unwrap_or_else(|| self.imm(0)))
                        .collect(),
                )
            }
            NetOp::Slice { offset } => {
                let a = self.val(&instr.args[0]);
                let w = widths[0];
                let dw = dw.unwrap();
                let shifted = self.shr_const(&a, w, *offset);
                let v = shifted[..nwords(dw)].to_vec();
                Some(self.mask_top(v, dw))
            }
            NetOp::Mov => Some(self.val(&instr.args[0])),
            NetOp::Load { mem } => {
                let m = self.mems[*mem as usize].clone();
                let addr = self.val(&instr.args[0]);
                let idx = self.mem_index(&addr, widths[0], m.depth);
                let nw = nwords(m.elem_width);
                match m.kind {
                    MemKind::Local => {
                        let sh = if m.stride > 1 {
                            let s = self.imm(m.stride.trailing_zeros() as u16);
                            self.bin(BinOp::Sll, idx[0], s)
                        } else {
                            idx[0]
                        };
                        Some(
                            (0..nw)
                                .map(|j| {
                                    let d = self.fresh();
                                    self.body.push(LInstr::Lld {
                                        d,
                                        addr: sh,
                                        mem: *mem,
                                        off: j as u16,
                                    });
                                    d
                                })
                                .collect(),
                        )
                    }
                    MemKind::Global => {
                        let s = m.stride.trailing_zeros();
                        let idx_bits = m.depth.trailing_zeros().max(1);
                        let off = self.shl_const_words(&idx, idx_bits + s, s);
                        let base = m.global_base.unwrap();
                        Some(
                            (0..nw)
                                .map(|j| {
                                    let a = self.gaddr(&off, base + j as u64);
                                    let d = self.fresh();
                                    self.body.push(LInstr::Gld { d, a });
                                    d
                                })
                                .collect(),
                        )
                    }
                }
            }
            NetOp::Store { mem } => {
                let m = self.mems[*mem as usize].clone();
                let addr = self.val(&instr.args[0]);
                let data = self.val(&instr.args[1]);
                let pred = self.val(&instr.args[2])[0];
                let idx = self.mem_index(&addr, widths[0], m.depth);
                match m.kind {
                    MemKind::Local => {
                        let sh = if m.stride > 1 {
                            let s = self.imm(m.stride.trailing_zeros() as u16);
                            self.bin(BinOp::Sll, idx[0], s)
                        } else {
                            idx[0]
                        };
                        for (j, &dword) in data.iter().enumerate() {
                            self.effects[i].push(LInstr::Lst {
                                addr: sh,
                                data: dword,
                                pred,
                                mem: *mem,
                                off: j as u16,
                            });
                        }
                    }
                    MemKind::Global => {
                        let s = m.stride.trailing_zeros();
                        let idx_bits = m.depth.trailing_zeros().max(1);
                        let off = self.shl_const_words(&idx, idx_bits + s, s);
                        let base = m.global_base.unwrap();
                        for (j, &dword) in data.iter().enumerate() {
                            let a = self.gaddr(&off, base + j as u64);
                            self.effects[i].push(LInstr::Gst {
                                a,
                                data: dword,
                                pred,
                            });
                        }
                    }
                }
                None
            }
            NetOp::Expect { eid } => {
                let a = self.val(&instr.args[0]);
                let b = self.val(&instr.args[1]);
                let (x, y) = if a.len() == 1 {
                    (a[0], b[0])
                } else {
                    let d = self.diff_word(&a, &b);
                    (d, self.imm(0))
                };
                self.effects[i].push(LInstr::Expect { a: x, b: y, eid: *eid });
                None
            }
            NetOp::Display { eid } => {
                let v = self.val(&instr.args[0]);
                let gaddr = *global_cursor;
                *global_cursor += v.len() as u64;
                self.displays.push(DisplayMeta {
                    eid: *eid,
                    gaddr,
                    nwords: v.len() as u16,
                });
                let one = self.imm(1);
                let zero = self.imm(0);
                for (j, &word) in v.iter().enumerate() {
                    let a = self.const_gaddr(gaddr + j as u64);
                    self.effects[i].push(LInstr::Gst {
                        a,
                        data: word,
                        pred: one,
                    });
                }
                self.effects[i].push(LInstr::Expect {
                    a: zero,
                    b: one,
                    eid: *eid,
                });
                None
            }
        };

        match instr.dest {
            Dest::Wire(w) => self.wire_vals[w as usize] = result,
            Dest::RegNext(r) => self.reg_next[r as usize] = result,
            Dest::None => {}
        }
        Ok(())
    }

    /// Like `shl_const` but width-aware for address math (the value list may
    /// need to grow to hold the shifted result).
    fn shl_const_words(&mut self, v: &[VReg], out_width: u32, k: u32) -> Vec<VReg> {
        let mut padded = v.to_vec();
        while padded.len() < nwords(out_width) {
            padded.push(self.imm(0));
        }
        if k == 0 {
            return padded;
        }
        self.shl_const(&padded, out_width, k)
    }

    fn const_gaddr(&mut self, addr: u64) -> [VReg; 3] {
        [
            self.imm((addr & 0xffff) as u16),
            self.imm(((addr >> 16) & 0xffff) as u16),
            self.imm(((addr >> 32) & 0xffff) as u16),
        ]
    }
}

fn or_into(b: &mut Builder, acc: &mut [Option<VReg>], idx: usize, v: VReg) {
    acc[idx] = Some(match acc[idx] {
        None => v,
        Some(prev) => b.bin(BinOp::Or, prev, v),
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_netlist;

    #[test]
    fn counter_lowers_to_one_proc() {
        let net =
            parse_netlist("design c\nreg count 4\nw0:4 = add count.cur, 1:4\ncount.next = mov w0\n")
                .unwrap();
        let low = lower_netlist(&net).unwrap();
        assert_eq!(low.procs.len(), 1);
        assert_eq!(low.procs[0].state.len(), 1);
        assert_eq!(low.regs[0].owner, Some(0));
    }

    #[test]
    fn wide_register_splits_into_words() {
        let net = parse_netlist(
            "design w\nreg r 40\nw0:40 = add r.cur, 1:40\nr.next = mov w0\n",
        )
        .unwrap();
        let low = lower_netlist(&net).unwrap();
        assert_eq!(low.procs[0].state.len(), 3);
        let keys: Vec<u16> = low.procs[0].state.iter().map(|s| s.key.word).collect();
        assert_eq!(keys, vec![0, 1, 2]);
    }

    #[test]
    fn global_memory_gets_address_space() {
        let net = parse_netlist(
            "\
design g
reg i 8
mem m global 256 20
v:20 = load m, i.cur
reg acc 20
acc.next = mov v
i2:8 = add i.cur, 1:8
i.next = mov i2
",
        )
        .unwrap();
        let low = lower_netlist(&net).unwrap();
        let m = &low.mems[0];
        assert_eq!(m.stride, 2);
        assert_eq!(m.global_base, Some(0));
        assert_eq!(low.global_words, 512);
        assert!(low.procs[0].body.iter().any(|i| matches!(i, LInstr::Gld { .. })));
    }
}
