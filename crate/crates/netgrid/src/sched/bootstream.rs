//! Bootstream serialization. The loader streams the image to the grid one
//! 16-bit word per cycle; each core's segment ends with a countdown chosen
//! so that every core leaves reset on the same cycle.

use crate::error::{Error, Result};
use crate::lower::DisplayMeta;
use crate::machine::MachineModel;
use crate::sched::{
    BinOp, CorePlan, CoreStats, MInstr, MReg, Schedule, TraceReg, TraceWord,
};

const MAGIC: [u16; 2] = [u16::from_le_bytes(*b"NG"), u16::from_le_bytes(*b"BS")];
const VERSION: u16 = 1;

struct W {
    words: Vec<u16>,
}

impl W {
    fn u16(&mut self, v: u16) {
        self.words.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.u16(v as u16);
        self.u16((v >> 16) as u16);
    }
    fn u48(&mut self, v: u64) {
        debug_assert!(v < 1 << 48);
        self.u16(v as u16);
        self.u16((v >> 16) as u16);
        self.u16((v >> 32) as u16);
    }
    fn str(&mut self, s: &str) {
        let b = s.as_bytes();
        self.u16(b.len() as u16);
        for ch in b.chunks(2) {
            self.u16(u16::from_le_bytes([ch[0], *ch.get(1).unwrap_or(&0)]));
        }
    }
}

struct R<'a> {
    words: &'a [u16],
    pos: usize,
}

impl<'a> R<'a> {
    fn u16(&mut self) -> Result<u16> {
        let v = *self
            .words
            .get(self.pos)
            .ok_or_else(|| Error::Bootstream("truncated stream".into()))?;
        self.pos += 1;
        Ok(v)
    }
    fn u32(&mut self) -> Result<u32> {
        let lo = self.u16()? as u32;
        Ok(lo | (self.u16()? as u32) << 16)
    }
    fn u48(&mut self) -> Result<u64> {
        let lo = self.u16()? as u64;
        let mid = self.u16()? as u64;
        Ok(lo | mid << 16 | (self.u16()? as u64) << 32)
    }
    fn str(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let mut bytes = Vec::with_capacity(len);
        for _ in 0..len.div_ceil(2) {
            let w = self.u16()?.to_le_bytes();
            bytes.push(w[0]);
            bytes.push(w[1]);
        }
        bytes.truncate(len);
        String::from_utf8(bytes).map_err(|_| Error::Bootstream("bad name encoding".into()))
    }
}

fn bin_code(op: BinOp) -> u8 {
    match op {
        BinOp::Add => 0,
        BinOp::Sub => 1,
        BinOp::And => 2,
        BinOp::Or => 3,
        BinOp::Xor => 4,
        BinOp::Sll => 5,
        BinOp::Srl => 6,
        BinOp::Sra => 7,
        BinOp::Seq => 8,
        BinOp::Sltu => 9,
        BinOp::Slts => 10,
    }
}

fn bin_decode(code: u8) -> Result<BinOp> {
    Ok(match code {
        0 => BinOp::Add,
        1 => BinOp::Sub,
        2 => BinOp::And,
        3 => BinOp::Or,
        4 => BinOp::Xor,
        5 => BinOp::Sll,
        6 => BinOp::Srl,
        7 => BinOp::Sra,
        8 => BinOp::Seq,
        9 => BinOp::Sltu,
        10 => BinOp::Slts,
        _ => return Err(Error::Bootstream(format!("bad alu op {code}"))),
    })
}

/// (opcode, aux, five operand fields)
fn encode_instr(m: &MInstr) -> (u8, u8, [u16; 5]) {
    match *m {
        MInstr::Nop => (0, 0, [0; 5]),
        MInstr::Bin { op, d, a, b } => (1, bin_code(op), [d, a, b, 0, 0]),
        MInstr::Addc { d, a, b, c } => (2, 0, [d, a, b, c, 0]),
        MInstr::Mux { d, p, a, b } => (3, 0, [d, p, a, b, 0]),
        MInstr::Set { d, imm } => (4, 0, [d, imm, 0, 0, 0]),
        MInstr::Mov { d, a } => (5, 0, [d, a, 0, 0, 0]),
        MInstr::Cust { d, fid, args } => (6, fid, [d, args[0], args[1], args[2], args[3]]),
        MInstr::Lld { d, addr, base } => (7, 0, [d, addr, base, 0, 0]),
        MInstr::Lst {
            addr,
            data,
            pred,
            base,
        } => (8, 0, [addr, data, pred, base, 0]),
        MInstr::Gld { d, a } => (9, 0, [d, a[0], a[1], a[2], 0]),
        MInstr::Gst { a, data, pred } => (10, 0, [a[0], a[1], a[2], data, pred]),
        MInstr::Send { rt, rs, dest } => (11, 0, [rt, rs, dest, 0, 0]),
        MInstr::Expect { a, b, eid } => (12, 0, [a, b, eid, 0, 0]),
    }
}

fn decode_instr(op: u8, aux: u8, f: [u16; 5]) -> Result<MInstr> {
    Ok(match op {
        0 => MInstr::Nop,
        1 => MInstr::Bin {
            op: bin_decode(aux)?,
            d: f[0],
            a: f[1],
            b: f[2],
        },
        2 => MInstr::Addc {
            d: f[0],
            a: f[1],
            b: f[2],
            c: f[3],
        },
        3 => MInstr::Mux {
            d: f[0],
            p: f[1],
            a: f[2],
            b: f[3],
        },
        4 => MInstr::Set { d: f[0], imm: f[1] },
        5 => MInstr::Mov { d: f[0], a: f[1] },
        6 => MInstr::Cust {
            d: f[0],
            fid: aux,
            args: [f[1], f[2], f[3], f[4]],
        },
        7 => MInstr::Lld {
            d: f[0],
            addr: f[1],
            base: f[2],
        },
        8 => MInstr::Lst {
            addr: f[0],
            data: f[1],
            pred: f[2],
            base: f[3],
        },
        9 => MInstr::Gld {
            d: f[0],
            a: [f[1], f[2], f[3]],
        },
        10 => MInstr::Gst {
            a: [f[0], f[1], f[2]],
            data: f[3],
            pred: f[4],
        },
        11 => MInstr::Send {
            rt: f[0],
            rs: f[1],
            dest: f[2],
        },
        12 => MInstr::Expect {
            a: f[0],
            b: f[1],
            eid: f[2],
        },
        _ => return Err(Error::Bootstream(format!("bad opcode {op}"))),
    })
}

pub fn encode(s: &Schedule) -> Vec<u8> {
    let mut w = W { words: Vec::new() };
    w.u16(MAGIC[0]);
    w.u16(MAGIC[1]);
    w.u16(VERSION);
    w.u16(s.width as u16);
    w.u16(s.height as u16);
    w.u32(s.vcycle_len);
    w.u16(s.model.def_use_latency as u16);
    w.u16(s.model.hop_latency as u16);
    w.str(&s.name);

    w.u16(s.displays.len() as u16);
    for d in &s.displays {
        w.u16(d.eid);
        w.u48(d.gaddr);
        w.u16(d.nwords);
    }

    w.u16(s.trace_regs.len() as u16);
    for t in &s.trace_regs {
        w.str(&t.name);
        w.u16(t.width as u16);
        w.u16(t.words.len() as u16);
        for word in &t.words {
            match *word {
                TraceWord::Const(v) => {
                    w.u16(0);
                    w.u16(v);
                }
                TraceWord::Reg { core, reg } => {
                    w.u16(1);
                    w.u32(core);
                    w.u16(reg);
                }
            }
        }
    }

    w.u32(s.global_init.len() as u32);
    for &(addr, val) in &s.global_init {
        w.u48(addr);
        w.u16(val);
    }

    // per-core segments; the countdown footer is patched once the final
    // stream length is known
    let mut countdown_pos = Vec::with_capacity(s.cores.len());
    for (core, st) in s.cores.iter().zip(&s.stats) {
        w.u16(core.body.len() as u16);
        for m in &core.body {
            let (op, aux, f) = encode_instr(m);
            w.u16(op as u16 | (aux as u16) << 8);
            for v in f {
                w.u16(v);
            }
        }
        w.u16(core.cfs.len() as u16);
        for cf in &core.cfs {
            for &v in cf.iter() {
                w.u16(v);
            }
        }
        w.u16(core.reg_init.len() as u16);
        for &(r, v) in &core.reg_init {
            w.u16(r);
            w.u16(v);
        }
        w.u32(core.scratch_init.len() as u32);
        for &(a, v) in &core.scratch_init {
            w.u32(a);
            w.u16(v);
        }
        w.u32(st.compute);
        w.u32(st.sends);
        w.u32(st.state_moves);
        w.u32(st.nops);
        w.u16(core.epilogue_len as u16);
        w.u32(core.sleep_len);
        countdown_pos.push(w.words.len());
        w.u32(0);
    }

    // a core receives its last word at stream position end-1 and begins the
    // countdown the following cycle: start = segment_end + countdown, which
    // must land every core on the same cycle (the total stream length)
    let total = w.words.len();
    for &pos in &countdown_pos {
        let seg_end = pos + 2;
        let cd = (total - seg_end) as u32;
        w.words[pos] = cd as u16;
        w.words[pos + 1] = (cd >> 16) as u16;
    }

    let mut bytes = Vec::with_capacity(w.words.len() * 2);
    for v in w.words {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn decode(bytes: &[u8]) -> Result<Schedule> {
    if bytes.len() % 2 != 0 {
        return Err(Error::Bootstream("odd byte count".into()));
    }
    let words: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    let total = words.len();
    let mut r = R {
        words: &words,
        pos: 0,
    };
    if [r.u16()?, r.u16()?] != MAGIC {
        return Err(Error::Bootstream("bad magic".into()));
    }
    if r.u16()? != VERSION {
        return Err(Error::Bootstream("unsupported version".into()));
    }
    let width = r.u16()? as u32;
    let height = r.u16()? as u32;
    let vcycle_len = r.u32()?;
    let model = MachineModel {
        def_use_latency: r.u16()? as u32,
        hop_latency: r.u16()? as u32,
    };
    let name = r.str()?;

    let ndisp = r.u16()?;
    let mut displays = Vec::with_capacity(ndisp as usize);
    for _ in 0..ndisp {
        displays.push(DisplayMeta {
            eid: r.u16()?,
            gaddr: r.u48()?,
            nwords: r.u16()?,
        });
    }

    let ntrace = r.u16()?;
    let mut trace_regs = Vec::with_capacity(ntrace as usize);
    for _ in 0..ntrace {
        let name = r.str()?;
        let width = r.u16()? as u32;
        let nw = r.u16()?;
        let mut tw = Vec::with_capacity(nw as usize);
        for _ in 0..nw {
            tw.push(match r.u16()? {
                0 => TraceWord::Const(r.u16()?),
                1 => TraceWord::Reg {
                    core: r.u32()?,
                    reg: r.u16()?,
                },
                t => return Err(Error::Bootstream(format!("bad trace word tag {t}"))),
            });
        }
        trace_regs.push(TraceReg {
            name,
            width,
            words: tw,
        });
    }

    let nglobal = r.u32()?;
    let mut global_init = Vec::with_capacity(nglobal as usize);
    for _ in 0..nglobal {
        let addr = r.u48()?;
        global_init.push((addr, r.u16()?));
    }

    let ncores = (width * height) as usize;
    let mut cores = Vec::with_capacity(ncores);
    let mut stats = Vec::with_capacity(ncores);
    let mut start_cycle = None;
    for _ in 0..ncores {
        let nbody = r.u16()? as usize;
        let mut body = Vec::with_capacity(nbody);
        for _ in 0..nbody {
            let opaux = r.u16()?;
            let f = [r.u16()?, r.u16()?, r.u16()?, r.u16()?, r.u16()?];
            body.push(decode_instr(opaux as u8, (opaux >> 8) as u8, f)?);
        }
        let ncf = r.u16()? as usize;
        let mut cfs = Vec::with_capacity(ncf);
        for _ in 0..ncf {
            let mut t = [0u16; 16];
            for v in t.iter_mut() {
                *v = r.u16()?;
            }
            cfs.push(t);
        }
        let nreg = r.u16()? as usize;
        let mut reg_init = Vec::with_capacity(nreg);
        for _ in 0..nreg {
            let rr = r.u16()?;
            reg_init.push((rr as MReg, r.u16()?));
        }
        let nscr = r.u32()? as usize;
        let mut scratch_init = Vec::with_capacity(nscr);
        for _ in 0..nscr {
            let a = r.u32()?;
            scratch_init.push((a, r.u16()?));
        }
        stats.push(CoreStats {
            compute: r.u32()?,
            sends: r.u32()?,
            state_moves: r.u32()?,
            nops: r.u32()?,
        });
        let epilogue_len = r.u16()? as u32;
        let sleep_len = r.u32()?;
        let cd = r.u32()? as usize;
        let start = r.pos + cd;
        match start_cycle {
            None => start_cycle = Some(start),
            Some(s) if s != start => {
                return Err(Error::Bootstream("cores would not start together".into()))
            }
            _ => {}
        }
        cores.push(CorePlan {
            body,
            epilogue_len,
            sleep_len,
            cfs,
            reg_init,
            scratch_init,
        });
    }
    if r.pos != total {
        return Err(Error::Bootstream("trailing words".into()));
    }
    if start_cycle.is_some_and(|s| s != total) {
        return Err(Error::Bootstream("countdowns disagree with stream end".into()));
    }

    Ok(Schedule {
        name,
        width,
        height,
        vcycle_len,
        model,
        cores,
        trace_regs,
        displays,
        global_init,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Schedule {
        Schedule {
            name: "t".into(),
            width: 2,
            height: 1,
            vcycle_len: 12,
            model: MachineModel::default(),
            cores: vec![
                CorePlan {
                    body: vec![
                        MInstr::Set { d: 1, imm: 7 },
                        MInstr::Nop,
                        MInstr::Send {
                            rt: 3,
                            rs: 1,
                            dest: 1,
                        },
                    ],
                    epilogue_len: 0,
                    sleep_len: 9,
                    cfs: vec![[0xaaaa; 16]],
                    reg_init: vec![(0, 0), (1, 7)],
                    scratch_init: vec![(5, 0x1234)],
                },
                CorePlan {
                    body: vec![MInstr::Bin {
                        op: BinOp::Add,
                        d: 2,
                        a: 3,
                        b: 3,
                    }],
                    epilogue_len: 1,
                    sleep_len: 10,
                    cfs: vec![],
                    reg_init: vec![(3, 0)],
                    scratch_init: vec![],
                },
            ],
            trace_regs: vec![TraceReg {
                name: "x".into(),
                width: 20,
                words: vec![
                    TraceWord::Reg { core: 1, reg: 2 },
                    TraceWord::Const(0xf),
                ],
            }],
            displays: vec![DisplayMeta {
                eid: 0x8003,
                gaddr: 0x12345,
                nwords: 2,
            }],
            global_init: vec![(0x10, 0xbeef)],
            stats: vec![
                CoreStats {
                    compute: 1,
                    sends: 1,
                    state_moves: 0,
                    nops: 1,
                },
                CoreStats {
                    compute: 1,
                    sends: 0,
                    state_moves: 0,
                    nops: 0,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = tiny();
        let bytes = encode(&s);
        let back = decode(&bytes).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn countdowns_align_start() {
        // decode() checks that every core's segment-end + countdown lands on
        // the same cycle; corrupting one countdown must fail
        let s = tiny();
        let mut bytes = encode(&s);
        let n = bytes.len();
        bytes[n - 4] ^= 1;
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn rejects_bad_magic() {
        let s = tiny();
        let mut bytes = encode(&s);
        bytes[0] ^= 0xff;
        assert!(decode(&bytes).is_err());
    }
}
