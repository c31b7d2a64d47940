//! Partitioning: split a single lowered process into one process per sink
//! group, then merge groups back down to the core budget. Two mergers are
//! provided: a cost-balancing merger that prefers communicating neighbors,
//! and a classic longest-processing-time packer as the baseline.

use std::collections::{HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ir::{MemKind, EID_DISPLAY_BIT};
use crate::lower::{
    ImportWord, LInstr, LowerProcess, LowerProgram, ProcId, StateWord, VReg, WordKey,
};
use crate::opt::{self, OptConfig};

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Split the (single-process) program into one process per sink group.
/// Groups are forced together when they share a local memory region or when
/// they touch the global address space (which only the privileged core may
/// do). Pure logic feeding several groups is duplicated into each.
pub fn split(low: &LowerProgram) -> Result<LowerProgram> {
    if low.procs.len() != 1 {
        return Err(Error::Invalid("split expects a single process".into()));
    }
    let p = &low.procs[0];
    let def_of: HashMap<VReg, usize> = p
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, ins)| ins.def().map(|d| (i, d)))
        .map(|(i, d)| (d, i))
        .collect();

    // Sink units: (root vregs, effect instruction indices)
    struct Unit {
        roots: Vec<VReg>,
        effects: Vec<usize>,
        regs: Vec<u32>,
        display: bool,
    }
    let mut units: Vec<Unit> = Vec::new();

    // one unit per driven register (all its words)
    let mut reg_words: HashMap<u32, Vec<&StateWord>> = HashMap::new();
    for s in &p.state {
        reg_words.entry(s.key.reg).or_default().push(s);
    }
    let mut reg_ids: Vec<u32> = reg_words.keys().copied().collect();
    reg_ids.sort_unstable();
    for r in reg_ids {
        units.push(Unit {
            roots: reg_words[&r].iter().map(|s| s.next).collect(),
            effects: Vec::new(),
            regs: vec![r],
            display: false,
        });
    }
    // one unit per effect instruction
    for (i, ins) in p.body.iter().enumerate() {
        if ins.has_effect() {
            let display = matches!(ins, LInstr::Expect { eid, .. } if eid & EID_DISPLAY_BIT != 0)
                || ins.is_privileged();
            units.push(Unit {
                roots: ins.uses(),
                effects: vec![i],
                regs: Vec::new(),
                display,
            });
        }
    }

    // backward closure of each unit over the body
    let closure_of = |unit: &Unit| -> HashSet<usize> {
        let mut seen: HashSet<usize> = unit.effects.iter().copied().collect();
        let mut work: Vec<usize> = unit.effects.clone();
        let mut vregs: Vec<VReg> = unit.roots.clone();
        while let Some(v) = vregs.pop() {
            if let Some(&i) = def_of.get(&v) {
                if seen.insert(i) {
                    work.push(i);
                }
            }
        }
        while let Some(i) = work.pop() {
            let ins = &p.body[i];
            for u in ins.uses().into_iter().chain(ins.ovf_use()) {
                if let Some(&d) = def_of.get(&u) {
                    if seen.insert(d) {
                        work.push(d);
                    }
                }
            }
        }
        seen
    };
    let closures: Vec<HashSet<usize>> = units.iter().map(closure_of).collect();

    // union groups by shared memory region / privileged access
    let mut uf = UnionFind::new(units.len());
    let mut mem_home: HashMap<u32, usize> = HashMap::new();
    let mut priv_home: Option<usize> = None;
    for (ui, cl) in closures.iter().enumerate() {
        let mut privileged = units[ui].display;
        for &i in cl {
            let ins = &p.body[i];
            if let Some(m) = ins.mem() {
                match mem_home.get(&m) {
                    Some(&h) => uf.union(ui, h),
                    None => {
                        mem_home.insert(m, ui);
                    }
                }
            }
            privileged |= ins.is_privileged();
        }
        if privileged {
            match priv_home {
                Some(h) => uf.union(ui, h),
                None => priv_home = Some(ui),
            }
        }
    }

    // collect groups in a stable order
    let mut group_of_unit = vec![0usize; units.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group: HashMap<usize, usize> = HashMap::new();
    for ui in 0..units.len() {
        let r = uf.find(ui);
        let g = *root_to_group.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(ui);
        group_of_unit[ui] = g;
    }

    // who owns each register after the split
    let mut reg_owner: HashMap<u32, ProcId> = HashMap::new();
    for (ui, unit) in units.iter().enumerate() {
        for &r in &unit.regs {
            reg_owner.insert(r, group_of_unit[ui] as ProcId);
        }
    }
    let cur_key: HashMap<VReg, WordKey> = p.state.iter().map(|s| (s.cur, s.key)).collect();
    let init_of: HashMap<WordKey, u16> = p.state.iter().map(|s| (s.key, s.init)).collect();

    let mut procs = Vec::new();
    for (gi, unit_ids) in groups.iter().enumerate() {
        let mut instrs: Vec<usize> = unit_ids
            .iter()
            .flat_map(|&ui| closures[ui].iter().copied())
            .collect();
        instrs.sort_unstable();
        instrs.dedup();

        let mut np = LowerProcess {
            id: gi as ProcId,
            body: Vec::new(),
            state: Vec::new(),
            imports: Vec::new(),
            mems: Vec::new(),
            cfs: p.cfs.clone(),
            next_vreg: 0,
        };
        let mut map: HashMap<VReg, VReg> = HashMap::new();
        let mut import_map: HashMap<WordKey, VReg> = HashMap::new();
        // inputs first: owned state words and imports
        let owned_regs: Vec<u32> = {
            let mut v: Vec<u32> = unit_ids
                .iter()
                .flat_map(|&ui| units[ui].regs.iter().copied())
                .collect();
            v.sort_unstable();
            v
        };
        for &r in &owned_regs {
            for s in &reg_words[&r] {
                let cur = np.fresh_vreg();
                map.insert(s.cur, cur);
                np.state.push(StateWord {
                    key: s.key,
                    cur,
                    next: 0, // patched below
                    init: s.init,
                });
            }
        }
        // rename body, discovering imports as we go
        for &i in &instrs {
            let mut ins = p.body[i].clone();
            let resolve = |v: VReg,
                               map: &mut HashMap<VReg, VReg>,
                               np: &mut LowerProcess,
                               import_map: &mut HashMap<WordKey, VReg>|
             -> VReg {
                if let Some(&n) = map.get(&v) {
                    return n;
                }
                // unmapped use: must be another group's state word
                let key = *cur_key
                    .get(&v)
                    .expect("use without local def must be a state word");
                let nv = *import_map.entry(key).or_insert_with(|| {
                    let nv = np.fresh_vreg();
                    np.imports.push(ImportWord {
                        key,
                        vreg: nv,
                        init: init_of[&key],
                        producer: reg_owner[&key.reg],
                    });
                    nv
                });
                map.insert(v, nv);
                nv
            };
            ins.rename_uses(&mut |v| resolve(v, &mut map, &mut np, &mut import_map));
            if let Some(d) = ins.def() {
                let nd = np.fresh_vreg();
                map.insert(d, nd);
                ins.set_def(nd);
            }
            if let Some(m) = ins.mem() {
                if !np.mems.contains(&m) {
                    np.mems.push(m);
                }
            }
            np.body.push(ins);
        }
        // patch state next pointers (they may be cur/import/const vregs)
        for si in 0..np.state.len() {
            let key = np.state[si].key;
            let old_next = reg_words[&key.reg]
                .iter()
                .find(|s| s.key == key)
                .unwrap()
                .next;
            let nv = match map.get(&old_next) {
                Some(&n) => n,
                None => {
                    // next aliases a state word never otherwise referenced here
                    let k = *cur_key
                        .get(&old_next)
                        .expect("state next must resolve to a def or a state word");
                    if let Some(own) = np.state.iter().find(|s| s.key == k) {
                        own.cur
                    } else {
                        let nv = *import_map.entry(k).or_insert_with(|| {
                            let nv = np.next_vreg;
                            np.next_vreg += 1;
                            np.imports.push(ImportWord {
                                key: k,
                                vreg: nv,
                                init: init_of[&k],
                                producer: reg_owner[&k.reg],
                            });
                            nv
                        });
                        map.insert(old_next, nv);
                        nv
                    }
                }
            };
            np.state[si].next = nv;
        }
        np.mems.sort_unstable();
        procs.push(np);
    }

    let mut out = low.clone();
    out.procs = procs;
    fixup_owners(&mut out)?;
    Ok(out)
}

/// Recompute register and memory owners from the processes, and drop unused
/// custom-function tables.
fn fixup_owners(low: &mut LowerProgram) -> Result<()> {
    let owners = low.owners();
    for (r, meta) in low.regs.iter_mut().enumerate() {
        if meta.owner.is_some() {
            let key = WordKey {
                reg: r as u32,
                word: 0,
            };
            meta.owner = Some(*owners.get(&key).ok_or_else(|| {
                Error::Invalid(format!("register {} lost its owner", meta.name))
            })?);
        }
    }
    for (mi, meta) in low.mems.iter_mut().enumerate() {
        if meta.kind == MemKind::Local {
            if let Some(p) = low.procs.iter().find(|p| p.mems.contains(&(mi as u32))) {
                meta.owner = p.id;
            }
        } else if let Some(p) = low.procs.iter().find(|p| p.is_privileged()) {
            meta.owner = p.id;
        }
    }
    for p in &mut low.procs {
        compact_cfs(p);
    }
    Ok(())
}

/// Drop custom-function tables the body no longer references.
fn compact_cfs(p: &mut LowerProcess) {
    let mut used: Vec<bool> = vec![false; p.cfs.len()];
    for ins in &p.body {
        if let LInstr::Cust { fid, .. } = ins {
            used[*fid as usize] = true;
        }
    }
    let mut remap: HashMap<u8, u8> = HashMap::new();
    let mut next = 0u8;
    let cfs = std::mem::take(&mut p.cfs);
    p.cfs = cfs
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| {
            if used[i] {
                remap.insert(i as u8, next);
                next += 1;
                Some(t)
            } else {
                None
            }
        })
        .collect();
    for ins in &mut p.body {
        if let LInstr::Cust { fid, .. } = ins {
            *fid = remap[fid];
        }
    }
}

/// Instruction-count component plus one send per imported word elsewhere.
pub fn estimate_cost(low: &LowerProgram, id: ProcId) -> usize {
    let p = low.proc(id);
    let sends: usize = low
        .procs
        .iter()
        .filter(|q| q.id != id)
        .map(|q| q.imports.iter().filter(|im| im.producer == id).count())
        .sum();
    p.count_non_nop() + sends
}

fn merge_pair(low: &mut LowerProgram, keep: ProcId, other: ProcId) {
    let (keep, other) = (keep.min(other), keep.max(other));
    let qi = low.procs.iter().position(|p| p.id == other).unwrap();
    let q = low.procs.remove(qi);
    let pi = low.procs.iter().position(|p| p.id == keep).unwrap();
    let p = &mut low.procs[pi];

    let off = p.next_vreg;
    let fid_off = p.cfs.len() as u8;
    p.next_vreg += q.next_vreg;
    p.cfs.extend(q.cfs.iter().copied());
    for mut ins in q.body {
        ins.rename_uses(&mut |v| v + off);
        if let Some(d) = ins.def() {
            ins.set_def(d + off);
        }
        if let LInstr::Cust { fid, .. } = &mut ins {
            *fid += fid_off;
        }
        p.body.push(ins);
    }
    for s in q.state {
        p.state.push(StateWord {
            cur: s.cur + off,
            next: s.next + off,
            ..s
        });
    }
    for m in q.mems {
        if !p.mems.contains(&m) {
            p.mems.push(m);
        }
    }
    p.mems.sort_unstable();

    // internalize imports between the two halves, dedupe the rest
    let key_cur: HashMap<WordKey, VReg> = p.state.iter().map(|s| (s.key, s.cur)).collect();
    let mut alias: HashMap<VReg, VReg> = HashMap::new();
    let mut kept: HashMap<WordKey, VReg> = HashMap::new();
    let mut imports = Vec::new();
    let old_imports: Vec<ImportWord> = p
        .imports
        .drain(..)
        .chain(q.imports.into_iter().map(|im| ImportWord {
            vreg: im.vreg + off,
            ..im
        }))
        .collect();
    for im in old_imports {
        if let Some(&cur) = key_cur.get(&im.key) {
            alias.insert(im.vreg, cur);
        } else if let Some(&first) = kept.get(&im.key) {
            alias.insert(im.vreg, first);
        } else {
            kept.insert(im.key, im.vreg);
            imports.push(im);
        }
    }
    p.imports = imports;
    if !alias.is_empty() {
        let resolve = |mut v: VReg| {
            while let Some(&n) = alias.get(&v) {
                v = n;
            }
            v
        };
        for ins in &mut p.body {
            ins.rename_uses(&mut |v| resolve(v));
        }
        for s in &mut p.state {
            s.next = resolve(s.next);
        }
    }

    // everything that referenced `other` now points at `keep`
    for pr in &mut low.procs {
        for im in &mut pr.imports {
            if im.producer == other {
                im.producer = keep;
            }
        }
    }

    let pi = low.procs.iter().position(|p| p.id == keep).unwrap();
    opt::optimize_proc(
        &mut low.procs[pi],
        &OptConfig {
            fold: false,
            ..OptConfig::default()
        },
    );
}

/// Renumber processes densely and update every cross-reference.
fn renumber(low: &mut LowerProgram) -> Result<()> {
    let map: HashMap<ProcId, ProcId> = low
        .procs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id, i as ProcId))
        .collect();
    for p in &mut low.procs {
        p.id = map[&p.id];
        for im in &mut p.imports {
            im.producer = map[&im.producer];
        }
    }
    fixup_owners(low)
}

/// Pairs of processes that exchange at least one word.
fn neighbors(low: &LowerProgram, id: ProcId) -> Vec<ProcId> {
    let mut out = HashSet::new();
    for p in &low.procs {
        for im in &p.imports {
            if p.id == id && im.producer != id {
                out.insert(im.producer);
            }
            if im.producer == id && p.id != id {
                out.insert(p.id);
            }
        }
    }
    let mut v: Vec<ProcId> = out.into_iter().collect();
    v.sort_unstable();
    v
}

/// Cost-balancing merger: repeatedly merge the cheapest process into the
/// communicating neighbor that keeps the merged cost lowest. Keeps merging
/// past the core budget while doing so still lowers the maximum cost.
pub fn merge_balanced(low: &mut LowerProgram, max_cores: usize) -> Result<()> {
    loop {
        if low.procs.len() <= 1 {
            break;
        }
        let costs: HashMap<ProcId, usize> = low
            .procs
            .iter()
            .map(|p| (p.id, estimate_cost(low, p.id)))
            .collect();
        let max_cost = *costs.values().max().unwrap();
        let smallest = *costs
            .iter()
            .min_by_key(|(id, c)| (**c, **id))
            .map(|(id, _)| id)
            .unwrap();
        let mut cands = neighbors(low, smallest);
        cands.retain(|c| *c != smallest);
        if cands.is_empty() {
            cands = low
                .procs
                .iter()
                .map(|p| p.id)
                .filter(|id| *id != smallest)
                .collect();
        }
        // try each candidate on a copy, keep the cheapest result
        let mut best: Option<(usize, ProcId, LowerProgram)> = None;
        for c in cands {
            let mut trial = low.clone();
            merge_pair(&mut trial, smallest, c);
            let merged = smallest.min(c);
            let cost = estimate_cost(&trial, merged);
            if best.as_ref().map_or(true, |(bc, _, _)| cost < *bc) {
                best = Some((cost, c, trial));
            }
        }
        let (merged_cost, _, trial) = best.unwrap();
        if low.procs.len() <= max_cores && merged_cost >= max_cost {
            break; // within budget and no longer improving the bottleneck
        }
        *low = trial;
    }
    renumber(low)
}

/// Longest-processing-time baseline: sort by cost, always place into the
/// least-loaded bin, then merge each bin into one process.
pub fn merge_lpt(low: &mut LowerProgram, max_cores: usize) -> Result<()> {
    let bins = bin_lpt(
        &low.procs
            .iter()
            .map(|p| (p.id, estimate_cost(low, p.id)))
            .collect::<Vec<_>>(),
        max_cores,
    );
    for bin in bins {
        let keep = *bin.iter().min().unwrap();
        for id in bin {
            if id != keep {
                merge_pair(low, keep, id);
            }
        }
    }
    renumber(low)
}

/// LPT bin packing over (id, cost) items.
pub fn bin_lpt(items: &[(ProcId, usize)], bins: usize) -> Vec<Vec<ProcId>> {
    let n = bins.max(1).min(items.len().max(1));
    let mut sorted: Vec<(ProcId, usize)> = items.to_vec();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<(usize, Vec<ProcId>)> = vec![(0, Vec::new()); n];
    for (id, cost) in sorted {
        let slot = out
            .iter_mut()
            .min_by_key(|(load, _)| *load)
            .expect("at least one bin");
        slot.0 += cost;
        slot.1.push(id);
    }
    out.into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(_, v)| v)
        .collect()
}

/// Random placement of processes onto grid cores; a privileged process is
/// pinned to (0, 0). Returns core (x, y) per process id.
pub fn place_random(
    low: &LowerProgram,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<Vec<(u32, u32)>> {
    let cores = (width * height) as usize;
    if low.procs.len() > cores {
        return Err(Error::Invalid(format!(
            "{} processes do not fit on {}x{} cores",
            low.procs.len(),
            width,
            height
        )));
    }
    let mut slots: Vec<(u32, u32)> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|&c| c != (0, 0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    slots.shuffle(&mut rng);

    let mut out = vec![(0u32, 0u32); low.procs.len()];
    let mut free = slots.into_iter();
    let mut zero_taken = false;
    // a privileged process gets the corner
    for p in &low.procs {
        if p.is_privileged() {
            out[p.id as usize] = (0, 0);
            zero_taken = true;
        }
    }
    for p in &low.procs {
        if p.is_privileged() {
            continue;
        }
        out[p.id as usize] = if !zero_taken {
            zero_taken = true;
            (0, 0)
        } else {
            free.next().expect("enough cores")
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{counters, random_dag, DagConfig};
    use crate::lower::{interpret_lower, lower_netlist};
    use crate::opt::optimize;

    fn prep(net: &crate::ir::NetlistProgram) -> LowerProgram {
        let mut low = lower_netlist(net).unwrap();
        optimize(&mut low, &OptConfig::default());
        low
    }

    #[test]
    fn split_counters_one_proc_each() {
        let low = prep(&counters(5, 16));
        let s = split(&low).unwrap();
        assert_eq!(s.procs.len(), 5);
        assert_eq!(s.total_sends(), 0);
        for p in &s.procs {
            assert_eq!(p.state.len(), 1);
        }
    }

    #[test]
    fn split_preserves_semantics() {
        for seed in 0..15 {
            let cfg = DagConfig {
                instrs: 50,
                regs: 6,
                mems: 1,
                ..DagConfig::default()
            };
            let net = random_dag(seed, &cfg);
            let low = prep(&net);
            let s = split(&low).unwrap();
            let a = interpret_lower(&low, 20).unwrap();
            let b = interpret_lower(&s, 20).unwrap();
            assert_eq!(a.regs, b.regs, "seed {seed}");
            assert_eq!(a.mems, b.mems, "seed {seed}");
        }
    }

    #[test]
    fn merge_back_to_budget_preserves_semantics() {
        for seed in 20..30 {
            let cfg = DagConfig {
                instrs: 60,
                regs: 9,
                ..DagConfig::default()
            };
            let net = random_dag(seed, &cfg);
            let low = prep(&net);
            let mut bal = split(&low).unwrap();
            merge_balanced(&mut bal, 4).unwrap();
            assert!(bal.procs.len() <= 9);
            let mut lpt = split(&low).unwrap();
            merge_lpt(&mut lpt, 4).unwrap();
            assert!(lpt.procs.len() <= 4);
            let a = interpret_lower(&low, 20).unwrap();
            let b = interpret_lower(&bal, 20).unwrap();
            let c = interpret_lower(&lpt, 20).unwrap();
            assert_eq!(a.regs, b.regs, "balanced seed {seed}");
            assert_eq!(a.regs, c.regs, "lpt seed {seed}");
        }
    }

    #[test]
    fn lpt_packs_greedily() {
        // costs [5,4,3,3,3] into 2 bins: 5 then 4, then the 3s go to the
        // lighter bin each time -> {5,3} = 8 and {4,3,3} = 10
        let bins = bin_lpt(&[(0, 5), (1, 4), (2, 3), (3, 3), (4, 3)], 2);
        let loads: Vec<usize> = bins
            .iter()
            .map(|b| {
                b.iter()
                    .map(|id| [5usize, 4, 3, 3, 3][*id as usize])
                    .sum()
            })
            .collect();
        let mut sorted = loads.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![8, 10]);
    }

    #[test]
    fn privileged_pinned_to_corner() {
        let net = crate::gen::fifo(1 << 10, true);
        let low = prep(&net);
        let s = split(&low).unwrap();
        let placement = place_random(&s, 4, 4, 1).unwrap();
        let priv_proc = s.procs.iter().find(|p| p.is_privileged()).unwrap();
        assert_eq!(placement[priv_proc.id as usize], (0, 0));
    }
}
