//! List scheduling by global co-simulation of one vcycle. Every core picks,
//! cycle by cycle, the ready instruction with the longest remaining critical
//! path; SENDs additionally reserve their full link path and the arrival
//! port at the destination, so a legal schedule can never drop a message.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ir::MemKind;
use crate::lower::{
    interp::scratch_layout, LInstr, LowerProcess, LowerProgram, ProcId, VReg, WordKey,
};
use crate::machine::noc::{route, Link};
use crate::machine::{GridConfig, IMEM_CAPACITY, REGISTER_FILE_SIZE};
use crate::sched::*;

#[derive(Debug, Clone)]
enum NodeKind {
    Body(usize),
    /// Commit a state word: MOV cur <- next.
    Commit { cur: VReg, next: VReg },
    Send {
        rs: VReg,
        rt: MReg,
        dest_core: usize,
        dest_xy: (u32, u32),
    },
}

struct Node {
    kind: NodeKind,
    uses: Vec<VReg>,
    def: Option<VReg>,
    height: u64,
}

struct CoreSched<'a> {
    proc: &'a LowerProcess,
    xy: (u32, u32),
    nodes: Vec<Node>,
    succs: Vec<Vec<(usize, u32)>>,
    preds_left: Vec<usize>,
    earliest: Vec<u64>,
    /// nodes ready to run (all preds issued), by (height desc, id)
    avail: Vec<usize>,
    done: usize,
    persistent: HashMap<VReg, MReg>,
}

pub fn compile(
    low: &LowerProgram,
    grid: &GridConfig,
    placement: &[(u32, u32)],
) -> Result<Schedule> {
    let (w, h) = (grid.width, grid.height);
    if placement.len() != low.procs.len() {
        return Err(Error::Invalid("placement size mismatch".into()));
    }
    let mut seen = HashSet::new();
    for (p, &(x, y)) in low.procs.iter().zip(placement) {
        if x >= w || y >= h {
            return Err(Error::Invalid("placement outside the grid".into()));
        }
        if !seen.insert((x, y)) {
            return Err(Error::Invalid("two processes on one core".into()));
        }
        if p.is_privileged() && (x, y) != (0, 0) {
            return Err(Error::Invalid(
                "privileged process must sit on core (0, 0)".into(),
            ));
        }
    }

    // Pass 1: dedicated registers for state words and imports on every core.
    // Register 0 stays zero forever.
    let mut persistent: Vec<HashMap<VReg, MReg>> = Vec::new();
    let mut import_rt: HashMap<(ProcId, WordKey), MReg> = HashMap::new();
    for p in &low.procs {
        let mut map = HashMap::new();
        let mut next = 1 as MReg;
        for s in &p.state {
            map.insert(s.cur, next);
            next += 1;
        }
        for im in &p.imports {
            map.insert(im.vreg, next);
            import_rt.insert((p.id, im.key), next);
            next += 1;
        }
        if (next as usize) > REGISTER_FILE_SIZE {
            return Err(Error::Invalid(format!(
                "process {} needs {} persistent registers",
                p.id, next
            )));
        }
        persistent.push(map);
    }

    // Pass 2: build per-core dependence graphs.
    let model = grid.model;
    let def_use = model.def_use_latency as u64;
    let mut cores: Vec<CoreSched> = Vec::new();
    for (pi, p) in low.procs.iter().enumerate() {
        let mut nodes: Vec<Node> = Vec::new();
        for (bi, ins) in p.body.iter().enumerate() {
            if matches!(ins, LInstr::Nop) {
                continue;
            }
            let mut uses = ins.uses();
            if let Some(c) = ins.ovf_use() {
                uses.push(c);
            }
            nodes.push(Node {
                kind: NodeKind::Body(bi),
                uses,
                def: ins.def(),
                height: 0,
            });
        }
        for s in &p.state {
            if s.next != s.cur {
                nodes.push(Node {
                    kind: NodeKind::Commit {
                        cur: s.cur,
                        next: s.next,
                    },
                    uses: vec![s.next],
                    def: Some(s.cur),
                    height: 0,
                });
            }
        }
        // exports: one send per word another process imports from us
        for q in &low.procs {
            if q.id == p.id {
                continue;
            }
            for im in &q.imports {
                if im.producer != p.id {
                    continue;
                }
                let s = p
                    .state
                    .iter()
                    .find(|s| s.key == im.key)
                    .ok_or_else(|| Error::Invalid("import of a word nobody owns".into()))?;
                let dest_xy = placement[q.id as usize];
                nodes.push(Node {
                    kind: NodeKind::Send {
                        rs: s.next,
                        rt: import_rt[&(q.id, im.key)],
                        dest_core: (dest_xy.1 * w + dest_xy.0) as usize,
                        dest_xy,
                    },
                    uses: vec![s.next],
                    def: None,
                    height: 0,
                });
            }
        }

        let def_node: HashMap<VReg, usize> = nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.def.map(|d| (d, i)))
            .collect();
        // commit nodes write persistent regs that others read; body defs are
        // SSA temps, so def_node holds both but readers of `cur` want the
        // value from the last vcycle, not this one
        let commit_of: HashMap<VReg, usize> = nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.kind {
                NodeKind::Commit { cur, .. } => Some((cur, i)),
                _ => None,
            })
            .collect();

        let mut succs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); nodes.len()];
        let mut preds_left = vec![0usize; nodes.len()];
        let add_edge = |succs: &mut Vec<Vec<(usize, u32)>>,
                            preds: &mut Vec<usize>,
                            a: usize,
                            b: usize,
                            lat: u32| {
            if a != b {
                succs[a].push((b, lat));
                preds[b] += 1;
            }
        };
        for (i, n) in nodes.iter().enumerate() {
            for &u in &n.uses {
                if let Some(&c) = commit_of.get(&u) {
                    // reading a committed register: must issue no later than
                    // the commit that overwrites it (same cycle reads old)
                    add_edge(&mut succs, &mut preds_left, i, c, 0);
                } else if let Some(&d) = def_node.get(&u) {
                    add_edge(&mut succs, &mut preds_left, d, i, def_use as u32);
                }
            }
        }
        // memory and privileged-access ordering follows body order
        let mut last_mem: HashMap<u32, usize> = HashMap::new();
        let mut last_priv: Option<usize> = None;
        for (i, n) in nodes.iter().enumerate() {
            let NodeKind::Body(bi) = n.kind else { continue };
            let ins = &p.body[bi];
            if let Some(m) = ins.mem() {
                if let Some(&prev) = last_mem.get(&m) {
                    add_edge(&mut succs, &mut preds_left, prev, i, 1);
                }
                last_mem.insert(m, i);
            }
            if ins.is_privileged() {
                if let Some(prev) = last_priv {
                    add_edge(&mut succs, &mut preds_left, prev, i, 1);
                }
                last_priv = Some(i);
            }
        }

        // critical-path heights; node order is topological (defs precede
        // uses, commits and sends come last) so one reverse sweep settles,
        // and the loop only guards against that assumption breaking
        let mut height = vec![1u64; nodes.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for i in (0..nodes.len()).rev() {
                for &(s, lat) in &succs[i] {
                    let cand = height[s] + lat as u64 + 1;
                    if cand > height[i] {
                        height[i] = cand;
                        changed = true;
                    }
                }
            }
        }
        for (i, n) in nodes.iter_mut().enumerate() {
            n.height = height[i];
        }

        let earliest = vec![0u64; nodes.len()];
        let avail = (0..nodes.len()).filter(|&i| preds_left[i] == 0).collect();
        cores.push(CoreSched {
            proc: p,
            xy: placement[pi],
            nodes,
            succs,
            preds_left,
            earliest,
            avail,
            done: 0,
            persistent: persistent[pi].clone(),
        });
    }

    // Pass 3: global co-simulation with link reservations.
    let hop = model.hop_latency as u64;
    let mut link_busy: HashSet<(Link, u64)> = HashSet::new();
    let mut port_busy: HashSet<(usize, u64)> = HashSet::new();
    let mut arrivals_at: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut t: u64 = 0;
    let mut slots: Vec<Vec<(u64, usize)>> = vec![Vec::new(); cores.len()]; // (cycle, node)
    loop {
        let all_done = cores.iter().all(|c| c.done == c.nodes.len());
        if all_done {
            break;
        }
        if t > 1_000_000 {
            return Err(Error::Invalid("schedule did not converge".into()));
        }
        for ci in 0..cores.len() {
            let core = &mut cores[ci];
            if core.done == core.nodes.len() {
                continue;
            }
            // candidates ready at cycle t, best critical path first
            let mut cands: Vec<usize> = core
                .avail
                .iter()
                .copied()
                .filter(|&n| core.earliest[n] <= t)
                .collect();
            cands.sort_by_key(|&n| (std::cmp::Reverse(core.nodes[n].height), n));
            let mut chosen = None;
            for n in cands {
                if let NodeKind::Send {
                    dest_core, dest_xy, ..
                } = core.nodes[n].kind
                {
                    let links = route(w, h, core.xy, dest_xy);
                    let arrive = t + links.len() as u64 * hop;
                    let free = !port_busy.contains(&(dest_core, arrive))
                        && links.iter().enumerate().all(|(k, l)| {
                            (0..hop).all(|d| !link_busy.contains(&(*l, t + k as u64 * hop + d)))
                        });
                    if !free {
                        continue;
                    }
                    for (k, l) in links.iter().enumerate() {
                        for d in 0..hop {
                            link_busy.insert((*l, t + k as u64 * hop + d));
                        }
                    }
                    port_busy.insert((dest_core, arrive));
                    arrivals_at.entry(dest_core).or_default().push(arrive);
                    chosen = Some(n);
                    break;
                }
                chosen = Some(n);
                break;
            }
            if let Some(n) = chosen {
                core.avail.retain(|&x| x != n);
                core.done += 1;
                slots[ci].push((t, n));
                let succ: Vec<(usize, u32)> = core.succs[n].clone();
                for (s, lat) in succ {
                    core.earliest[s] = core.earliest[s].max(t + lat as u64);
                    core.preds_left[s] -= 1;
                    if core.preds_left[s] == 0 {
                        core.avail.push(s);
                    }
                }
            }
        }
        t += 1;
    }

    // Pass 4: per-core epilogue and the global vcycle length.
    let ncores = (w * h) as usize;
    let mut ep_start = vec![0u64; ncores];
    let mut ep_len = vec![0u64; ncores];
    let mut last_persist = vec![None::<u64>; ncores];
    for (ci, core) in cores.iter().enumerate() {
        let ix = (core.xy.1 * w + core.xy.0) as usize;
        let drain = slots[ci].iter().map(|&(t, _)| t + 1).max().unwrap_or(0);
        let arr = arrivals_at.get(&ix).map(|v| v.as_slice()).unwrap_or(&[]);
        let last_arr = arr.iter().copied().max();
        ep_start[ix] = drain.max(last_arr.map_or(0, |a| a + 1));
        ep_len[ix] = arr.len() as u64;
        let mut lastw = None::<u64>;
        for &(tt, n) in &slots[ci] {
            if matches!(core.nodes[n].kind, NodeKind::Commit { .. }) {
                lastw = Some(lastw.map_or(tt, |x: u64| x.max(tt)));
            }
        }
        if ep_len[ix] > 0 {
            let last_set = ep_start[ix] + ep_len[ix] - 1;
            lastw = Some(lastw.map_or(last_set, |x| x.max(last_set)));
        }
        last_persist[ix] = lastw;
    }
    let mut vlen = 1u64;
    for ix in 0..ncores {
        vlen = vlen.max(ep_start[ix] + ep_len[ix]);
        if let Some(lw) = last_persist[ix] {
            vlen = vlen.max(lw + def_use);
        }
    }

    // Pass 5: physical registers for temporaries, then emit the bodies.
    let mut plans: Vec<CorePlan> = (0..ncores).map(|_| CorePlan::default()).collect();
    let mut stats = vec![CoreStats::default(); ncores];
    for (ci, core) in cores.iter().enumerate() {
        let ix = (core.xy.1 * w + core.xy.0) as usize;
        let p = core.proc;
        let base_reg = core.persistent.len() as MReg + 1;

        // temp live ranges in issue time
        let mut def_at: HashMap<VReg, u64> = HashMap::new();
        let mut last_use: HashMap<VReg, u64> = HashMap::new();
        for &(tt, n) in &slots[ci] {
            let node = &core.nodes[n];
            if let Some(d) = node.def {
                if !core.persistent.contains_key(&d) {
                    def_at.insert(d, tt);
                }
            }
            for &u in &node.uses {
                if !core.persistent.contains_key(&u) {
                    let e = last_use.entry(u).or_insert(tt);
                    *e = (*e).max(tt);
                }
            }
        }
        let mut temps: Vec<(u64, VReg)> = def_at.iter().map(|(&v, &t)| (t, v)).collect();
        temps.sort_unstable();
        let mut free: Vec<MReg> = Vec::new();
        let mut next_reg = base_reg;
        let mut in_use: Vec<(u64, MReg)> = Vec::new(); // (last_use, reg)
        let mut assign: HashMap<VReg, MReg> = HashMap::new();
        for (tdef, v) in temps {
            in_use.retain(|&(lu, r)| {
                if lu < tdef {
                    free.push(r);
                    false
                } else {
                    true
                }
            });
            free.sort_unstable_by(|a, b| b.cmp(a));
            let r = free.pop().unwrap_or_else(|| {
                let r = next_reg;
                next_reg += 1;
                r
            });
            let lu = last_use.get(&v).copied().unwrap_or(tdef);
            in_use.push((lu, r));
            assign.insert(v, r);
        }
        if (next_reg as usize) > REGISTER_FILE_SIZE {
            return Err(Error::Invalid(format!(
                "core ({}, {}) needs {} registers",
                core.xy.0, core.xy.1, next_reg
            )));
        }
        let reg_of = |v: VReg| -> MReg {
            core.persistent
                .get(&v)
                .copied()
                .or_else(|| assign.get(&v).copied())
                .expect("every vreg is persistent or a scheduled temp")
        };

        let layout = scratch_layout(low, p)?;
        let body_len = ep_start[ix] as usize;
        if body_len > IMEM_CAPACITY {
            return Err(Error::Invalid(format!(
                "core ({}, {}) body of {} exceeds the instruction memory",
                core.xy.0, core.xy.1, body_len
            )));
        }
        let mut body = vec![MInstr::Nop; body_len];
        for &(tt, n) in &slots[ci] {
            let m = match &core.nodes[n].kind {
                NodeKind::Body(bi) => {
                    stats[ix].compute += 1;
                    lower_to_m(&p.body[*bi], &reg_of, &layout, low)
                }
                NodeKind::Commit { cur, next } => {
                    stats[ix].state_moves += 1;
                    MInstr::Mov {
                        d: reg_of(*cur),
                        a: reg_of(*next),
                    }
                }
                NodeKind::Send { rs, rt, dest_core, .. } => {
                    stats[ix].sends += 1;
                    MInstr::Send {
                        rt: *rt,
                        rs: reg_of(*rs),
                        dest: *dest_core as u16,
                    }
                }
            };
            body[tt as usize] = m;
        }
        stats[ix].nops = body
            .iter()
            .filter(|m| matches!(m, MInstr::Nop))
            .count() as u32;

        // initial register file and scratchpad images
        let mut reg_init = vec![(0 as MReg, 0u16)];
        for s in &p.state {
            reg_init.push((core.persistent[&s.cur], s.init));
        }
        for im in &p.imports {
            reg_init.push((core.persistent[&im.vreg], im.init));
        }
        let mut scratch_init = Vec::new();
        for &mid in &p.mems {
            let m = &low.mems[mid as usize];
            let base = layout[&mid] as u32;
            for (e, v) in m.init.iter().enumerate() {
                for (j, word) in crate::bits::to_words(v, m.elem_width).iter().enumerate() {
                    if *word != 0 {
                        scratch_init
                            .push((base + e as u32 * m.stride + j as u32, *word));
                    }
                }
            }
        }

        plans[ix] = CorePlan {
            body,
            epilogue_len: ep_len[ix] as u32,
            sleep_len: (vlen - ep_start[ix] - ep_len[ix]) as u32,
            cfs: p.cfs.clone(),
            reg_init,
            scratch_init,
        };
    }
    // idle cores sleep through the whole vcycle
    for (ix, plan) in plans.iter_mut().enumerate() {
        if cores.iter().all(|c| (c.xy.1 * w + c.xy.0) as usize != ix) {
            plan.sleep_len = vlen as u32;
        }
    }

    // trace map: where the host finds every register's words
    let mut trace_regs = Vec::new();
    for (r, meta) in low.regs.iter().enumerate() {
        let n = crate::bits::nwords(meta.width);
        let words = match meta.owner {
            None => crate::bits::to_words(&meta.init, meta.width)
                .into_iter()
                .map(TraceWord::Const)
                .collect(),
            Some(owner) => {
                let ci = low.procs.iter().position(|p| p.id == owner).unwrap();
                let core = &cores[ci];
                (0..n)
                    .map(|j| {
                        let key = WordKey {
                            reg: r as u32,
                            word: j as u16,
                        };
                        let s = core.proc.state.iter().find(|s| s.key == key).unwrap();
                        TraceWord::Reg {
                            core: core.xy.1 * w + core.xy.0,
                            reg: core.persistent[&s.cur],
                        }
                    })
                    .collect()
            }
        };
        trace_regs.push(TraceReg {
            name: meta.name.clone(),
            width: meta.width,
            words,
        });
    }

    let mut global_init = Vec::new();
    for m in &low.mems {
        if m.kind != MemKind::Global {
            continue;
        }
        let base = m.global_base.unwrap();
        for (e, v) in m.init.iter().enumerate() {
            for (j, word) in crate::bits::to_words(v, m.elem_width).iter().enumerate() {
                if *word != 0 {
                    global_init.push((base + e as u64 * m.stride as u64 + j as u64, *word));
                }
            }
        }
    }

    Ok(Schedule {
        name: low.name.clone(),
        width: w,
        height: h,
        vcycle_len: vlen as u32,
        model,
        cores: plans,
        trace_regs,
        displays: low.displays.clone(),
        global_init,
        stats,
    })
}

fn lower_to_m(
    ins: &LInstr,
    reg_of: &dyn Fn(VReg) -> MReg,
    layout: &HashMap<u32, u16>,
    _low: &LowerProgram,
) -> MInstr {
    match ins {
        LInstr::Bin { op, d, a, b } => MInstr::Bin {
            op: *op,
            d: reg_of(*d),
            a: reg_of(*a),
            b: reg_of(*b),
        },
        LInstr::Addc { d, a, b, c } => MInstr::Addc {
            d: reg_of(*d),
            a: reg_of(*a),
            b: reg_of(*b),
            c: reg_of(*c),
        },
        LInstr::Mux { d, p, a, b } => MInstr::Mux {
            d: reg_of(*d),
            p: reg_of(*p),
            a: reg_of(*a),
            b: reg_of(*b),
        },
        LInstr::Set { d, imm } => MInstr::Set {
            d: reg_of(*d),
            imm: *imm,
        },
        LInstr::Mov { d, a } => MInstr::Mov {
            d: reg_of(*d),
            a: reg_of(*a),
        },
        LInstr::Cust { d, fid, args } => MInstr::Cust {
            d: reg_of(*d),
            fid: *fid,
            args: args.map(&reg_of),
        },
        LInstr::Lld { d, addr, mem, off } => MInstr::Lld {
            d: reg_of(*d),
            addr: reg_of(*addr),
            base: layout[mem] + off,
        },
        LInstr::Lst {
            addr,
            data,
            pred,
            mem,
            off,
        } => MInstr::Lst {
            addr: reg_of(*addr),
            data: reg_of(*data),
            pred: reg_of(*pred),
            base: layout[mem] + off,
        },
        LInstr::Gld { d, a } => MInstr::Gld {
            d: reg_of(*d),
            a: a.map(&reg_of),
        },
        LInstr::Gst { a, data, pred } => MInstr::Gst {
            a: a.map(&reg_of),
            data: reg_of(*data),
            pred: reg_of(*pred),
        },
        LInstr::Expect { a, b, eid } => MInstr::Expect {
            a: reg_of(*a),
            b: reg_of(*b),
            eid: *eid,
        },
        LInstr::Nop => MInstr::Nop,
    }
}
