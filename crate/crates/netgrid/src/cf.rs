//! Custom-function synthesis: fuses cones of bitwise logic (AND/OR/XOR,
//! with constants absorbed) into single table-lookup instructions. Each
//! table has 16 entries of 16 bits: entry k is the output word when every
//! bit lane's four inputs equal the bits of k. A core holds at most 32
//! tables, so cones are grouped into permutation-canonical classes and the
//! highest-saving classes win the slots.

use std::collections::{HashMap, HashSet};

use crate::lower::{BinOp, CfTable, LInstr, LowerProcess, LowerProgram, VReg};
use crate::machine::CF_SLOTS;
use crate::opt;

/// All 24 permutations of the four table inputs.
fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut items = [0usize, 1, 2, 3];
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 4 {
        out.push(*items);
        return;
    }
    for i in k..4 {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Reorder table inputs: new input position i corresponds to old leaf p[i].
fn permute_table(t: &CfTable, p: &[usize; 4]) -> CfTable {
    let mut out = [0u16; 16];
    for (kp, slot) in out.iter_mut().enumerate() {
        let mut k = 0usize;
        for i in 0..4 {
            if kp >> i & 1 != 0 {
                k |= 1 << p[i];
            }
        }
        *slot = t[k];
    }
    out
}

/// Lexicographically smallest permuted table and the permutation reaching it.
fn canonicalize(t: &CfTable) -> (CfTable, [usize; 4]) {
    let mut best = (*t, [0usize, 1, 2, 3]);
    for p in permutations() {
        let cand = permute_table(t, &p);
        if cand < best.0 {
            best = (cand, p);
        }
    }
    best
}

fn is_logic(ins: &LInstr) -> bool {
    matches!(
        ins,
        LInstr::Bin {
            op: BinOp::And | BinOp::Or | BinOp::Xor,
            ..
        }
    )
}

#[derive(Clone)]
struct Cone {
    root: usize,
    /// Body indices of every fused instruction (root, interior logic, and
    /// absorbed SETs; SETs are shared and stay behind for DCE to judge).
    nodes: Vec<usize>,
    leaves: Vec<VReg>,
    /// Fused logic instructions replaced by the lookup (root included).
    savings: usize,
    table: CfTable,
}

/// Enumerate ≤4-leaf cuts rooted at each logic instruction.
fn enumerate_cones(p: &LowerProcess) -> Vec<Cone> {
    let def_of: HashMap<VReg, usize> = p
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, ins)| ins.def().map(|d| (d, i)))
        .collect();

    // cuts per body index: (leaves sorted, logic node set)
    let mut cuts: HashMap<usize, Vec<(Vec<VReg>, Vec<usize>)>> = HashMap::new();
    let mut cones = Vec::new();

    for (i, ins) in p.body.iter().enumerate() {
        if !is_logic(ins) {
            continue;
        }
        let (a, b) = match ins {
            LInstr::Bin { a, b, .. } => (*a, *b),
            _ => unreachable!(),
        };
        // candidate cuts of each operand: expand through logic and SETs,
        // otherwise the operand itself is a leaf
        let operand_cuts = |v: VReg| -> Vec<(Vec<VReg>, Vec<usize>)> {
            let mut out = Vec::new();
            match def_of.get(&v) {
                Some(&d) if is_logic(&p.body[d]) => {
                    if let Some(cs) = cuts.get(&d) {
                        for (ls, ns) in cs {
                            let mut ns = ns.clone();
                            ns.push(d);
                            out.push((ls.clone(), ns));
                        }
                    }
                }
                Some(&d) if matches!(p.body[d], LInstr::Set { .. }) => {
                    // absorbed constant: no leaf at all
                    out.push((Vec::new(), vec![d]));
                }
                _ => {}
            }
            out.push((vec![v], Vec::new()));
            out
        };
        let ca = operand_cuts(a);
        let cb = operand_cuts(b);
        let mut my_cuts: Vec<(Vec<VReg>, Vec<usize>)> = Vec::new();
        for (la, na) in &ca {
            for (lb, nb) in &cb {
                let mut leaves: Vec<VReg> = la.iter().chain(lb.iter()).copied().collect();
                leaves.sort_unstable();
                leaves.dedup();
                if leaves.len() > 4 {
                    continue;
                }
                let mut nodes: Vec<usize> = na.iter().chain(nb.iter()).copied().collect();
                nodes.sort_unstable();
                nodes.dedup();
                if !my_cuts.iter().any(|(l, n)| l == &leaves && n == &nodes) {
                    my_cuts.push((leaves, nodes));
                }
            }
        }
        my_cuts.truncate(24); // keep enumeration bounded
        for (leaves, nodes) in &my_cuts {
            let logic_count =
                1 + nodes.iter().filter(|&&n| is_logic(&p.body[n])).count();
            if logic_count >= 2 && !leaves.is_empty() {
                let mut all = nodes.clone();
                all.push(i);
                cones.push(Cone {
                    root: i,
                    nodes: all,
                    leaves: leaves.clone(),
                    savings: logic_count - 1,
                    table: [0; 16],
                });
            }
        }
        cuts.insert(i, my_cuts);
    }
    cones
}

/// Simulate the cone for all 16 leaf combinations to build its table.
fn cone_table(p: &LowerProcess, cone: &Cone) -> CfTable {
    let mut nodes = cone.nodes.clone();
    nodes.sort_unstable();
    let mut table = [0u16; 16];
    for (k, slot) in table.iter_mut().enumerate() {
        let mut vals: HashMap<VReg, u16> = HashMap::new();
        for (li, &leaf) in cone.leaves.iter().enumerate() {
            vals.insert(leaf, if k >> li & 1 != 0 { 0xffff } else { 0 });
        }
        for &n in &nodes {
            match &p.body[n] {
                LInstr::Set { d, imm } => {
                    vals.insert(*d, *imm);
                }
                LInstr::Bin { op, d, a, b } => {
                    let va = vals[a];
                    let vb = vals[b];
                    let v = match op {
                        BinOp::And => va & vb,
                        BinOp::Or => va | vb,
                        BinOp::Xor => va ^ vb,
                        _ => unreachable!(),
                    };
                    vals.insert(*d, v);
                }
                _ => unreachable!("cones contain only logic and constants"),
            }
        }
        let root_d = p.body[cone.root].def().unwrap();
        *slot = vals[&root_d];
    }
    table
}

/// Uses of each vreg across the body plus state-next references.
fn use_counts(p: &LowerProcess) -> HashMap<VReg, usize> {
    let mut m: HashMap<VReg, usize> = HashMap::new();
    for ins in &p.body {
        for u in ins.uses().into_iter().chain(ins.ovf_use()) {
            *m.entry(u).or_default() += 1;
        }
    }
    for s in &p.state {
        *m.entry(s.next).or_default() += 1;
    }
    m
}

/// Fuse logic cones in every process. Never increases the instruction
/// count: a cone is only rewritten when it strictly shrinks the body.
pub fn synthesize(low: &mut LowerProgram) {
    for p in &mut low.procs {
        synthesize_proc(p);
    }
    opt::optimize(
        low,
        &opt::OptConfig {
            fold: false,
            cse: false,
            dce: true,
        },
    );
}

fn synthesize_proc(p: &mut LowerProcess) {
    let budget = CF_SLOTS.saturating_sub(p.cfs.len());
    if budget == 0 {
        return;
    }
    let uses = use_counts(p);
    let mut cones = enumerate_cones(p);
    if cones.is_empty() {
        return;
    }

    // a cone is fusible only when its interior logic feeds nothing outside
    let fusible = |c: &Cone| -> bool {
        let inside: HashSet<usize> = c.nodes.iter().copied().collect();
        for &n in &c.nodes {
            if n == c.root || !is_logic(&p.body[n]) {
                continue;
            }
            let d = p.body[n].def().unwrap();
            let inside_uses: usize = c
                .nodes
                .iter()
                .filter(|&&m| m != n && p.body[m].uses().contains(&d))
                .count();
            if uses.get(&d).copied().unwrap_or(0) != inside_uses {
                return false;
            }
            let _ = &inside;
        }
        true
    };
    cones.retain(fusible);

    // best cone per root
    cones.sort_by(|a, b| {
        (b.savings, a.leaves.len(), a.root)
            .cmp(&(a.savings, b.leaves.len(), b.root))
            .then(std::cmp::Ordering::Equal)
    });
    let mut claimed: HashSet<usize> = HashSet::new();
    let mut chosen: Vec<Cone> = Vec::new();
    for mut c in cones {
        if c.nodes
            .iter()
            .any(|n| claimed.contains(n) && is_logic(&p.body[*n]))
        {
            continue;
        }
        c.table = cone_table(p, &c);
        for &n in &c.nodes {
            if is_logic(&p.body[n]) {
                claimed.insert(n);
            }
        }
        chosen.push(c);
    }
    if chosen.is_empty() {
        return;
    }

    // group by canonical class, keep the highest-saving classes
    let mut classes: HashMap<CfTable, (usize, Vec<usize>)> = HashMap::new();
    let mut canon: Vec<(CfTable, [usize; 4])> = Vec::new();
    for (ci, c) in chosen.iter().enumerate() {
        let mut padded = c.table;
        // inputs beyond the leaf count are don't-care: force the table to
        // ignore them so equal functions of fewer leaves share a class
        if c.leaves.len() < 4 {
            let live = c.leaves.len();
            for k in 0..16usize {
                padded[k] = c.table[k & ((1 << live) - 1)];
            }
        }
        let (ct, perm) = canonicalize(&padded);
        canon.push((ct, perm));
        let e = classes.entry(ct).or_insert((0, Vec::new()));
        e.0 += c.savings;
        e.1.push(ci);
    }
    let mut ranked: Vec<(&CfTable, &(usize, Vec<usize>))> = classes.iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.0.cmp(b.0)));
    ranked.truncate(budget);

    for (table, (_, cone_ids)) in ranked {
        let fid = p.cfs.len() as u8;
        p.cfs.push(*table);
        for &ci in cone_ids {
            let c = &chosen[ci];
            let (_, perm) = &canon[ci];
            // arg slot i of the canonical table reads original leaf perm[i]
            let leaf = |slot: usize| -> VReg {
                let orig = perm[slot];
                c.leaves.get(orig).copied().unwrap_or(c.leaves[0])
            };
            let d = p.body[c.root].def().unwrap();
            p.body[c.root] = LInstr::Cust {
                d,
                fid,
                args: [leaf(0), leaf(1), leaf(2), leaf(3)],
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_dag, DagConfig};
    use crate::ir::parse_netlist;
    use crate::lower::{interpret_lower, lower_netlist};
    use crate::opt::{optimize, OptConfig};

    fn prep(src: &str) -> LowerProgram {
        let net = parse_netlist(src).unwrap();
        let mut low = lower_netlist(&net).unwrap();
        optimize(&mut low, &OptConfig::default());
        low
    }

    #[test]
    fn chain_fuses_to_one_lookup() {
        let mut low = prep(
            "\
design chain
reg a 16
reg b 16
reg c 16
reg d 16
reg out 16
t1:16 = and a.cur, 0xf:16
t2:16 = or t1, b.cur
t3:16 = and c.cur, 0x3:16
t4:16 = or t2, t3
t5:16 = xor d.cur, 0x1:16
t6:16 = or t4, t5
out.next = mov t6
a.next = mov a.cur
b.next = mov b.cur
c.next = mov c.cur
d.next = mov d.cur
",
        );
        let before = low.procs[0].count_non_nop();
        synthesize(&mut low);
        let p = &low.procs[0];
        let custs = p
            .body
            .iter()
            .filter(|i| matches!(i, LInstr::Cust { .. }))
            .count();
        assert_eq!(custs, 1);
        assert!(p.count_non_nop() < before);

        // exhaustive oracle over the 16 input combinations: every bit lane
        // of the fused lookup must match the original expression
        let (fid, args_used) = p
            .body
            .iter()
            .find_map(|i| match i {
                LInstr::Cust { fid, args, .. } => Some((*fid, *args)),
                _ => None,
            })
            .unwrap();
        let _ = args_used;
        let table = p.cfs[fid as usize];
        for k in 0..16u16 {
            let a = if k & 1 != 0 { 0xffffu16 } else { 0 };
            let b = if k & 2 != 0 { 0xffffu16 } else { 0 };
            let c = if k & 4 != 0 { 0xffffu16 } else { 0 };
            let d = if k & 8 != 0 { 0xffffu16 } else { 0 };
            let want = (a & 0xf) | b | (c & 0x3) | (d ^ 0x1);
            // find the lane assignment by evaluating through eval_cust with
            // every permutation of (a,b,c,d) matching the chosen args
            let vals: Vec<u16> = args_used
                .iter()
                .map(|&v| {
                    // map arg vreg back to the register it reads
                    let s = p.state.iter().find(|s| s.cur == v).unwrap();
                    [a, b, c, d][s.key.reg as usize]
                })
                .collect();
            let got =
                crate::lower::interp::eval_cust(&table, [vals[0], vals[1], vals[2], vals[3]]);
            assert_eq!(got, want, "combination {k}");
        }
    }

    #[test]
    fn preserves_semantics_and_never_grows() {
        for seed in 40..60 {
            let cfg = DagConfig {
                instrs: 70,
                regs: 6,
                logic_bias: true,
                ..DagConfig::default()
            };
            let net = random_dag(seed, &cfg);
            let mut low = lower_netlist(&net).unwrap();
            optimize(&mut low, &OptConfig::default());
            let before = low.procs[0].count_non_nop();
            let base = interpret_lower(&low, 20).unwrap();
            synthesize(&mut low);
            assert!(
                low.procs[0].count_non_nop() <= before,
                "seed {seed}: {} -> {}",
                before,
                low.procs[0].count_non_nop()
            );
            let after = interpret_lower(&low, 20).unwrap();
            assert_eq!(base.regs, after.regs, "seed {seed}");
        }
    }

    #[test]
    fn respects_slot_budget() {
        let net = random_dag(99, &DagConfig {
            instrs: 400,
            regs: 12,
            logic_bias: true,
            ..DagConfig::default()
        });
        let mut low = lower_netlist(&net).unwrap();
        optimize(&mut low, &OptConfig::default());
        synthesize(&mut low);
        assert!(low.procs[0].cfs.len() <= CF_SLOTS);
    }
}
