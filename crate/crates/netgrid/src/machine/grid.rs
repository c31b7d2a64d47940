//! Cycle-accurate grid simulator. Executes a static schedule slot by slot,
//! checking the contract as it goes: every register read must be outside the
//! def-use window of the last write, and no two messages may ever contend
//! for a link or an ejection port. Cache misses stall the entire grid, which
//! is what keeps the static schedule valid in the presence of DRAM.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::bits::from_words;
use crate::error::{Error, Result};
use crate::ir::interp::{ExceptionRecord, StateTrace};
use crate::ir::EID_DISPLAY_BIT;
use crate::lower::interp::{addc, alu, eval_cust};
use crate::machine::cache::Cache;
use crate::machine::noc::route;
use crate::machine::{GridConfig, REGISTER_FILE_SIZE, SCRATCHPAD_WORDS};
use crate::sched::{MInstr, Schedule, TraceWord};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimMetrics {
    /// Vcycles executed, including a final one halted by a stop exception.
    pub vcycles: u64,
    pub vcycle_len: u64,
    pub total_cycles: u64,
    pub stalled_cycles: u64,
    pub exception_cycles: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub messages_delivered: u64,
    /// Contract violations; always zero for a well-formed schedule.
    pub dropped_messages: u64,
    pub hazard_violations: u64,
}

#[derive(Debug)]
pub struct SimOutcome {
    pub trace: StateTrace,
    pub metrics: SimMetrics,
}

struct Core {
    regs: Vec<u16>,
    ovf: Vec<bool>,
    /// Slot-clock time of the last write, for def-use window checks.
    wtime: Vec<i64>,
    scratch: Vec<u16>,
}

const NEVER: i64 = i64::MIN / 2;

pub fn simulate(s: &Schedule, cfg: &GridConfig, max_vcycles: u64) -> Result<SimOutcome> {
    if cfg.width != s.width || cfg.height != s.height {
        return Err(Error::Invalid("grid size does not match the schedule".into()));
    }
    let ncores = (s.width * s.height) as usize;
    let hop = s.model.hop_latency as u64;
    let def_use = s.model.def_use_latency as i64;
    let vlen = s.vcycle_len as u64;
    for (ix, plan) in s.cores.iter().enumerate() {
        let need = plan.body.len() as u64 + plan.epilogue_len as u64 + plan.sleep_len as u64;
        if need != vlen {
            return Err(Error::ScheduleBug(format!(
                "core {ix} fills {need} of {vlen} slots"
            )));
        }
    }

    let mut cores: Vec<Core> = s
        .cores
        .iter()
        .map(|plan| {
            let mut c = Core {
                regs: vec![0; REGISTER_FILE_SIZE],
                ovf: vec![false; REGISTER_FILE_SIZE],
                wtime: vec![NEVER; REGISTER_FILE_SIZE],
                scratch: vec![0; SCRATCHPAD_WORDS],
            };
            for &(r, v) in &plan.reg_init {
                c.regs[r as usize] = v;
            }
            for &(a, v) in &plan.scratch_init {
                c.scratch[a as usize] = v;
            }
            c
        })
        .collect();

    let mut dram: HashMap<u64, u16> = s.global_init.iter().copied().collect();
    let mut cache = Cache::new();
    let mut m = SimMetrics {
        vcycle_len: vlen,
        ..SimMetrics::default()
    };
    let mut trace = StateTrace {
        regs: Vec::new(),
        displays: Vec::new(),
        stop: None,
        vcycles: 0,
        mems: Vec::new(),
    };

    let coords = |ix: usize| (ix as u32 % s.width, ix as u32 / s.width);

    'run: for v in 0..max_vcycles {
        // NoC state for this vcycle; nothing is allowed to cross a boundary
        let mut link_used: HashMap<(crate::machine::noc::Link, u64), u32> = HashMap::new();
        // arrivals[core] -> (slot, rt, value), kept sorted by slot
        let mut arrivals: Vec<Vec<(u64, u16, u16)>> = vec![Vec::new(); ncores];
        let mut fired: Vec<u16> = Vec::new();
        m.vcycles += 1;

        for q in 0..vlen {
            let t = (v * vlen + q) as i64;
            for ci in 0..ncores {
                let plan = &s.cores[ci];
                let body_len = plan.body.len() as u64;
                if q >= body_len {
                    // epilogue: apply buffered messages, one SET per slot
                    let k = (q - body_len) as usize;
                    if q < body_len + plan.epilogue_len as u64 {
                        match arrivals[ci].get(k).copied() {
                            Some((_, rt, val)) => {
                                let c = &mut cores[ci];
                                c.regs[rt as usize] = val;
                                c.ovf[rt as usize] = false;
                                c.wtime[rt as usize] = t;
                            }
                            None => m.dropped_messages += 1,
                        }
                    }
                    continue;
                }

                // split borrows: sends read from one core and land in the
                // shared arrival buffers, so pull the fields we need first
                let instr = plan.body[q as usize].clone();
                let c = &mut cores[ci];
                let mut hazards = 0u64;
                macro_rules! rd {
                    ($r:expr) => {{
                        let r = $r as usize;
                        let w = c.wtime[r];
                        if w < t && t < w + def_use {
                            hazards += 1;
                        }
                        c.regs[r]
                    }};
                }
                macro_rules! wr {
                    ($r:expr, $v:expr, $o:expr) => {{
                        let r = $r as usize;
                        c.regs[r] = $v;
                        c.ovf[r] = $o;
                        c.wtime[r] = t;
                    }};
                }
                match instr {
                    MInstr::Nop => {}
                    MInstr::Bin { op, d, a, b } => {
                        let (x, o) = alu(op, rd!(a), rd!(b));
                        wr!(d, x, o);
                    }
                    MInstr::Addc { d, a, b, c: cc } => {
                        let carry = {
                            let r = cc as usize;
                            let w = c.wtime[r];
                            if w < t && t < w + def_use {
                                hazards += 1;
                            }
                            c.ovf[r]
                        };
                        let (x, o) = addc(rd!(a), rd!(b), carry);
                        wr!(d, x, o);
                    }
                    MInstr::Mux { d, p, a, b } => {
                        let x = if rd!(p) != 0 { rd!(a) } else { rd!(b) };
                        wr!(d, x, false);
                    }
                    MInstr::Set { d, imm } => wr!(d, imm, false),
                    MInstr::Mov { d, a } => {
                        let x = rd!(a);
                        wr!(d, x, false);
                    }
                    MInstr::Cust { d, fid, args } => {
                        let vals = [rd!(args[0]), rd!(args[1]), rd!(args[2]), rd!(args[3])];
                        let x = eval_cust(&plan.cfs[fid as usize], vals);
                        wr!(d, x, false);
                    }
                    MInstr::Lld { d, addr, base } => {
                        let a = (base.wrapping_add(rd!(addr))) as usize % SCRATCHPAD_WORDS;
                        let x = c.scratch[a];
                        wr!(d, x, false);
                    }
                    MInstr::Lst {
                        addr,
                        data,
                        pred,
                        base,
                    } => {
                        let x = rd!(data);
                        let a = (base.wrapping_add(rd!(addr))) as usize % SCRATCHPAD_WORDS;
                        if rd!(pred) != 0 {
                            c.scratch[a] = x;
                        }
                    }
                    MInstr::Gld { d, a } => {
                        let addr =
                            rd!(a[0]) as u64 | (rd!(a[1]) as u64) << 16 | (rd!(a[2]) as u64) << 32;
                        let (x, stall) = cache.read(addr, &mut dram, cfg);
                        m.stalled_cycles += stall;
                        wr!(d, x, false);
                    }
                    MInstr::Gst { a, data, pred } => {
                        let addr =
                            rd!(a[0]) as u64 | (rd!(a[1]) as u64) << 16 | (rd!(a[2]) as u64) << 32;
                        let x = rd!(data);
                        if rd!(pred) != 0 {
                            let stall = cache.write(addr, x, &mut dram, cfg);
                            m.stalled_cycles += stall;
                        }
                    }
                    MInstr::Expect { a, b, eid } => {
                        if rd!(a) != rd!(b) {
                            fired.push(eid);
                        }
                    }
                    MInstr::Send { rt, rs, dest } => {
                        let val = rd!(rs);
                        let dest = dest as usize;
                        let links = route(s.width, s.height, coords(ci), coords(dest));
                        let mut clean = true;
                        for (k, l) in links.iter().enumerate() {
                            for d in 0..hop {
                                let e = link_used.entry((*l, q + k as u64 * hop + d)).or_insert(0);
                                *e += 1;
                                if *e > 1 {
                                    clean = false;
                                }
                            }
                        }
                        let arrive = q + links.len() as u64 * hop;
                        let dest_body = s.cores[dest].body.len() as u64;
                        if arrivals[dest].iter().any(|&(sl, _, _)| sl == arrive) {
                            clean = false;
                        }
                        if arrive >= dest_body {
                            // lands after the destination started its
                            // epilogue: the static contract is broken
                            clean = false;
                        }
                        if clean {
                            m.messages_delivered += 1;
                            let pos = arrivals[dest]
                                .binary_search_by_key(&arrive, |&(sl, _, _)| sl)
                                .unwrap_err();
                            arrivals[dest].insert(pos, (arrive, rt, val));
                        } else {
                            m.dropped_messages += 1;
                        }
                    }
                }
                m.hazard_violations += hazards;
            }
            m.total_cycles += 1;
        }

        // end of vcycle: the host drains the exception queue
        fired.sort_unstable();
        fired.dedup();
        if let Some(&stop) = fired.iter().find(|e| **e & EID_DISPLAY_BIT == 0) {
            m.exception_cycles += cfg.dram_latency as u64;
            trace.stop = Some(ExceptionRecord {
                eid: stop,
                vcycle: v,
            });
            break 'run;
        }
        for &eid in &fired {
            if let Some(d) = s.displays.iter().find(|d| d.eid == eid) {
                let words: Vec<u16> = (0..d.nwords)
                    .map(|j| cache.peek(d.gaddr + j as u64, &dram))
                    .collect();
                m.exception_cycles += cfg.dram_latency as u64;
                trace.displays.push((eid, v, from_words(&words)));
            }
        }

        let snapshot: Vec<BigUint> = s
            .trace_regs
            .iter()
            .map(|tr| {
                let words: Vec<u16> = tr
                    .words
                    .iter()
                    .map(|w| match *w {
                        TraceWord::Const(v) => v,
                        TraceWord::Reg { core, reg } => cores[core as usize].regs[reg as usize],
                    })
                    .collect();
                from_words(&words)
            })
            .collect();
        trace.regs.push(snapshot);
        trace.vcycles += 1;
    }

    m.cache_hits = cache.hits;
    m.cache_misses = cache.misses;
    m.total_cycles += m.stalled_cycles + m.exception_cycles;
    Ok(SimOutcome { trace, metrics: m })
}
