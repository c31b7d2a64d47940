//! Word-level cleanup passes: constant folding, common subexpression
//! elimination, dead code elimination. All three respect the overflow bit:
//! an instruction whose destination's overflow is consumed by an ADDC is
//! only rewritten when the replacement produces the same overflow.

use std::collections::{HashMap, HashSet};

use crate::lower::interp::{addc, alu, eval_cust};
use crate::lower::{BinOp, LInstr, LowerProcess, LowerProgram, VReg};

#[derive(Debug, Clone, Copy)]
pub struct OptConfig {
    pub fold: bool,
    pub cse: bool,
    pub dce: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            fold: true,
            cse: true,
            dce: true,
        }
    }
}

pub fn optimize(low: &mut LowerProgram, cfg: &OptConfig) {
    for p in &mut low.procs {
        optimize_proc(p, cfg);
    }
}

pub fn optimize_proc(p: &mut LowerProcess, cfg: &OptConfig) {
    for _ in 0..10 {
        let mut changed = false;
        if cfg.fold {
            changed |= fold(p);
        }
        if cfg.cse {
            changed |= cse(p);
        }
        if cfg.dce {
            changed |= dce(p);
        }
        if !changed {
            break;
        }
    }
}

/// Vregs whose overflow bit is consumed somewhere in the body.
fn ovf_read(p: &LowerProcess) -> HashSet<VReg> {
    p.body.iter().filter_map(|i| i.ovf_use()).collect()
}

/// Rewrite every use (and state next pointer) through the alias map.
fn apply_aliases(p: &mut LowerProcess, alias: &HashMap<VReg, VReg>) {
    if alias.is_empty() {
        return;
    }
    let resolve = |mut v: VReg| {
        while let Some(&n) = alias.get(&v) {
            v = n;
        }
        v
    };
    for instr in &mut p.body {
        instr.rename_uses(&mut |v| resolve(v));
    }
    for s in &mut p.state {
        s.next = resolve(s.next);
    }
}

fn fold(p: &mut LowerProcess) -> bool {
    let ovf_used = ovf_read(p);
    // value and overflow for vregs known at compile time
    let mut known: HashMap<VReg, (u16, bool)> = HashMap::new();
    let mut alias: HashMap<VReg, VReg> = HashMap::new();
    let mut changed = false;

    let body = std::mem::take(&mut p.body);
    let mut out = Vec::with_capacity(body.len());
    for mut instr in body {
        instr.rename_uses(&mut |mut v| {
            while let Some(&n) = alias.get(&v) {
                v = n;
            }
            v
        });
        let k = |v: VReg, known: &HashMap<VReg, (u16, bool)>| known.get(&v).copied();
        let mut replace: Option<LInstr> = None;
        let mut make_alias: Option<(VReg, VReg)> = None;
        match &instr {
            LInstr::Set { d, imm } => {
                known.insert(*d, (*imm, false));
            }
            LInstr::Bin { op, d, a, b } => {
                let (ka, kb) = (k(*a, &known), k(*b, &known));
                if let (Some((va, _)), Some((vb, _))) = (ka, kb) {
                    let (v, o) = alu(*op, va, vb);
                    if !o || !ovf_used.contains(d) {
                        replace = Some(LInstr::Set { d: *d, imm: v });
                        known.insert(*d, (v, o));
                    }
                } else if !ovf_used.contains(d) {
                    // identity / absorbing forms
                    let ident = match (op, ka, kb) {
                        (BinOp::And, _, Some((0xffff, _))) => Some(Ok(*a)),
                        (BinOp::And, Some((0xffff, _)), _) => Some(Ok(*b)),
                        (BinOp::And, _, Some((0, _))) | (BinOp::And, Some((0, _)), _) => {
                            Some(Err(0))
                        }
                        (BinOp::Or, _, Some((0, _))) | (BinOp::Xor, _, Some((0, _))) => {
                            Some(Ok(*a))
                        }
                        (BinOp::Or, Some((0, _)), _) | (BinOp::Xor, Some((0, _)), _) => {
                            Some(Ok(*b))
                        }
                        (BinOp::Or, _, Some((0xffff, _))) | (BinOp::Or, Some((0xffff, _)), _) => {
                            Some(Err(0xffff))
                        }
                        (BinOp::Add, _, Some((0, _))) => Some(Ok(*a)),
                        (BinOp::Add, Some((0, _)), _) => Some(Ok(*b)),
                        (BinOp::Sub, _, Some((0, _))) => Some(Ok(*a)),
                        (BinOp::Sll | BinOp::Srl | BinOp::Sra, _, Some((sh, _)))
                            if sh & 15 == 0 =>
                        {
                            Some(Ok(*a))
                        }
                        _ => None,
                    };
                    match ident {
                        Some(Ok(src)) => make_alias = Some((*d, src)),
                        Some(Err(imm)) => {
                            replace = Some(LInstr::Set { d: *d, imm });
                            known.insert(*d, (imm, false));
                        }
                        None => {}
                    }
                }
            }
            LInstr::Addc { d, a, b, c } => {
                match (k(*a, &known), k(*b, &known), k(*c, &known)) {
                    (Some((va, _)), Some((vb, _)), Some((_, vc))) => {
                        let (v, o) = addc(va, vb, vc);
                        if !o || !ovf_used.contains(d) {
                            replace = Some(LInstr::Set { d: *d, imm: v });
                            known.insert(*d, (v, o));
                        }
                    }
                    (_, _, Some((_, false))) => {
                        // carry-in statically zero: plain ADD
                        replace = Some(LInstr::Bin {
                            op: BinOp::Add,
                            d: *d,
                            a: *a,
                            b: *b,
                        });
                    }
                    _ => {}
                }
            }
            LInstr::Mux { d, p: pr, a, b } => {
                if let Some((vp, _)) = k(*pr, &known) {
                    make_alias = Some((*d, if vp != 0 { *a } else { *b }));
                } else if a == b {
                    make_alias = Some((*d, *a));
                }
            }
            LInstr::Mov { d, a } => {
                make_alias = Some((*d, *a));
            }
            LInstr::Cust { d, fid, args } => {
                let vals: Option<Vec<u16>> =
                    args.iter().map(|&r| k(r, &known).map(|(v, _)| v)).collect();
                if let Some(vals) = vals {
                    let v = eval_cust(&p.cfs[*fid as usize], [vals[0], vals[1], vals[2], vals[3]]);
                    replace = Some(LInstr::Set { d: *d, imm: v });
                    known.insert(*d, (v, false));
                }
            }
            _ => {}
        }
        if let Some((d, src)) = make_alias {
            if ovf_used.contains(&d) {
                // must preserve the cleared overflow bit: keep the instr
                out.push(instr);
            } else {
                if let Some(v) = known.get(&src).copied() {
                    known.insert(d, v);
                }
                alias.insert(d, src);
                changed = true;
            }
        } else if let Some(r) = replace {
            changed = changed || r != instr;
            out.push(r);
        } else {
            out.push(instr);
        }
    }
    p.body = out;
    apply_aliases(p, &alias);
    changed
}

/// Structural key for value-producing instructions. Commutative operand
/// pairs are sorted so `add a,b` and `add b,a` unify.
fn cse_key(instr: &LInstr) -> Option<(u8, u64, u64, u64, u64)> {
    let pair = |a: VReg, b: VReg, comm: bool| -> (u64, u64) {
        if comm && b < a {
            (b as u64, a as u64)
        } else {
            (a as u64, b as u64)
        }
    };
    Some(match instr {
        LInstr::Set { imm, .. } => (0, *imm as u64, 0, 0, 0),
        LInstr::Bin { op, a, b, .. } => {
            let comm = matches!(
                op,
                BinOp::Add | BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Seq
            );
            let (x, y) = pair(*a, *b, comm);
            (1, *op as u64, x, y, 0)
        }
        LInstr::Addc { a, b, c, .. } => {
            let (x, y) = pair(*a, *b, true);
            (2, x, y, *c as u64, 0)
        }
        LInstr::Mux { p, a, b, .. } => (3, *p as u64, *a as u64, *b as u64, 0),
        LInstr::Cust { fid, args, .. } => (
            4,
            *fid as u64,
            args[0] as u64 | ((args[1] as u64) << 32),
            args[2] as u64 | ((args[3] as u64) << 32),
            0,
        ),
        // loads of a region always precede stores to it, so equal loads
        // observe equal memory
        LInstr::Lld { addr, mem, off, .. } => (5, *addr as u64, *mem as u64, *off as u64, 0),
        LInstr::Gld { a, .. } => (6, a[0] as u64, a[1] as u64, a[2] as u64, 0),
        _ => return None,
    })
}

fn cse(p: &mut LowerProcess) -> bool {
    let ovf_used = ovf_read(p);
    let mut seen: HashMap<(u8, u64, u64, u64, u64), VReg> = HashMap::new();
    let mut alias: HashMap<VReg, VReg> = HashMap::new();
    let mut changed = false;

    let body = std::mem::take(&mut p.body);
    let mut out = Vec::with_capacity(body.len());
    for mut instr in body {
        instr.rename_uses(&mut |mut v| {
            while let Some(&n) = alias.get(&v) {
                v = n;
            }
            v
        });
        if let (Some(key), Some(d)) = (cse_key(&instr), instr.def()) {
            if let Some(&prev) = seen.get(&key) {
                // identical op: same value and same overflow, safe even
                // when the overflow bit is consumed
                let _ = &ovf_used;
                alias.insert(d, prev);
                changed = true;
                continue;
            }
            seen.insert(key, d);
        }
        out.push(instr);
    }
    p.body = out;
    apply_aliases(p, &alias);
    changed
}

fn dce(p: &mut LowerProcess) -> bool {
    let mut live: HashSet<VReg> = p.state.iter().map(|s| s.next).collect();
    let mut keep = vec![false; p.body.len()];
    for (i, instr) in p.body.iter().enumerate().rev() {
        let needed = instr.has_effect() || instr.def().is_some_and(|d| live.contains(&d));
        if needed {
            keep[i] = true;
            for u in instr.uses() {
                live.insert(u);
            }
            if let Some(c) = instr.ovf_use() {
                live.insert(c);
            }
        }
    }
    let mut changed = false;
    let mut i = 0;
    p.body.retain(|_| {
        let k = keep[i];
        i += 1;
        if !k {
            changed = true;
        }
        k
    });
    let before = p.imports.len();
    p.imports
        .retain(|im| live.contains(&im.vreg) || p.state.iter().any(|s| s.next == im.vreg));
    changed || p.imports.len() != before
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_dag, DagConfig};
    use crate::ir::parse_netlist;
    use crate::lower::{interpret_lower, lower_netlist};

    fn opt_all(low: &mut LowerProgram) {
        optimize(low, &OptConfig::default());
    }

    #[test]
    fn folds_constant_chain() {
        let net = parse_netlist(
            "\
design f
reg r 16
a:16 = add 3:16, 4:16
b:16 = xor a, a
c:16 = or b, r.cur
r.next = mov c
",
        )
        .unwrap();
        let mut low = lower_netlist(&net).unwrap();
        opt_all(&mut low);
        // everything folds away: r.next = r.cur
        let p = &low.procs[0];
        assert_eq!(p.count_non_nop(), 0, "body: {:?}", p.body);
        assert_eq!(p.state[0].next, p.state[0].cur);
    }

    #[test]
    fn cse_unifies_commutative() {
        let net = parse_netlist(
            "\
design c
reg x 16
reg y 16
a:16 = add x.cur, y.cur
b:16 = add y.cur, x.cur
x.next = mov a
y.next = mov b
",
        )
        .unwrap();
        let mut low = lower_netlist(&net).unwrap();
        opt_all(&mut low);
        let p = &low.procs[0];
        assert_eq!(p.count_non_nop(), 1);
        assert_eq!(p.state[0].next, p.state[1].next);
    }

    #[test]
    fn never_increases_and_preserves_semantics() {
        for seed in 0..25 {
            let cfg = DagConfig {
                instrs: 60,
                regs: 6,
                mems: 1,
                ..DagConfig::default()
            };
            let net = random_dag(seed, &cfg);
            let low0 = lower_netlist(&net).unwrap();
            let mut low = low0.clone();
            opt_all(&mut low);
            assert!(
                low.procs[0].count_non_nop() <= low0.procs[0].count_non_nop(),
                "seed {seed}"
            );
            let a = interpret_lower(&low0, 24).unwrap();
            let b = interpret_lower(&low, 24).unwrap();
            assert_eq!(a.regs, b.regs, "seed {seed}");
            assert_eq!(a.mems, b.mems, "seed {seed}");
        }
    }

    #[test]
    fn idempotent() {
        let net = random_dag(3, &DagConfig::default());
        let mut low = lower_netlist(&net).unwrap();
        opt_all(&mut low);
        let once = low.clone();
        opt_all(&mut low);
        assert_eq!(once, low);
    }
}
