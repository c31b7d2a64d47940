//! Textual form of the lowered program (`.mlow`), for dumping intermediate
//! results and diffing passes. `parse_lower(print_lower(p)) == p`.

use num_bigint::BigUint;
use num_traits::Num;

use super::*;
use crate::error::{Error, Result};
use crate::ir::MemKind;

pub fn print_lower(low: &LowerProgram) -> String {
    let mut out = String::new();
    let ln = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    ln(&mut out, format!("program {}", low.name));
    ln(&mut out, format!("globalwords {}", low.global_words));
    for r in &low.regs {
        let owner = match r.owner {
            Some(p) => format!(" owner {p}"),
            None => String::new(),
        };
        ln(
            &mut out,
            format!("reg {} {} 0x{:x}{owner}", r.name, r.width, r.init),
        );
    }
    for m in &low.mems {
        let kind = match m.kind {
            MemKind::Local => "local",
            MemKind::Global => "global",
        };
        let base = match m.global_base {
            Some(b) => format!(" base {b}"),
            None => String::new(),
        };
        let mut line = format!(
            "mem {} {kind} {} {} stride {} owner {}{base}",
            m.name, m.depth, m.elem_width, m.stride, m.owner
        );
        if !m.init.is_empty() {
            line.push_str(" init");
            for v in &m.init {
                line.push_str(&format!(" 0x{v:x}"));
            }
        }
        ln(&mut out, line);
    }
    for d in &low.displays {
        ln(
            &mut out,
            format!("display {} {} {}", d.eid, d.gaddr, d.nwords),
        );
    }
    for p in &low.procs {
        ln(&mut out, format!("proc {} nextvreg {}", p.id, p.next_vreg));
        if !p.mems.is_empty() {
            let ids: Vec<String> = p.mems.iter().map(|m| m.to_string()).collect();
            ln(&mut out, format!("  mems {}", ids.join(" ")));
        }
        for cf in &p.cfs {
            let words: Vec<String> = cf.iter().map(|w| format!("{w:04x}")).collect();
            ln(&mut out, format!("  cf {}", words.join("")));
        }
        for s in &p.state {
            ln(
                &mut out,
                format!(
                    "  state {}.{} v{} v{} 0x{:x}",
                    s.key.reg, s.key.word, s.cur, s.next, s.init
                ),
            );
        }
        for im in &p.imports {
            ln(
                &mut out,
                format!(
                    "  import {}.{} v{} 0x{:x} from {}",
                    im.key.reg, im.key.word, im.vreg, im.init, im.producer
                ),
            );
        }
        for ins in &p.body {
            ln(&mut out, format!("  {}", print_instr(ins)));
        }
    }
    out
}

pub fn print_instr(ins: &LInstr) -> String {
    let bin_name = |op: BinOp| match op {
        BinOp::Add => "add",
        BinOp::Sub => "sub",
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Xor => "xor",
        BinOp::Sll => "sll",
        BinOp::Srl => "srl",
        BinOp::Sra => "sra",
        BinOp::Seq => "seq",
        BinOp::Sltu => "sltu",
        BinOp::Slts => "slts",
    };
    match ins {
        LInstr::Bin { op, d, a, b } => format!("v{d} = {} v{a}, v{b}", bin_name(*op)),
        LInstr::Addc { d, a, b, c } => format!("v{d} = addc v{a}, v{b}, v{c}"),
        LInstr::Mux { d, p, a, b } => format!("v{d} = mux v{p}, v{a}, v{b}"),
        LInstr::Set { d, imm } => format!("v{d} = set 0x{imm:x}"),
        LInstr::Mov { d, a } => format!("v{d} = mov v{a}"),
        LInstr::Cust { d, fid, args } => format!(
            "v{d} = cust {fid}, v{}, v{}, v{}, v{}",
            args[0], args[1], args[2], args[3]
        ),
        LInstr::Lld { d, addr, mem, off } => format!("v{d} = lld v{addr}, m{mem}+{off}"),
        LInstr::Lst {
            addr,
            data,
            pred,
            mem,
            off,
        } => format!("lst v{addr}, v{data}, v{pred}, m{mem}+{off}"),
        LInstr::Gld { d, a } => format!("v{d} = gld v{}, v{}, v{}", a[0], a[1], a[2]),
        LInstr::Gst { a, data, pred } => format!(
            "gst v{}, v{}, v{}, v{data}, v{pred}",
            a[0], a[1], a[2]
        ),
        LInstr::Expect { a, b, eid } => format!("expect v{a}, v{b}, {eid}"),
        LInstr::Nop => "nop".to_string(),
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::parse("<mlow>", line, 1, msg)
}

struct Toks<'a> {
    t: Vec<&'a str>,
    pos: usize,
    line: usize,
}

impl<'a> Toks<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let v = self
            .t
            .get(self.pos)
            .ok_or_else(|| err(self.line, "unexpected end of line"))?;
        self.pos += 1;
        Ok(v)
    }
    fn int<T: TryFrom<u64>>(&mut self) -> Result<T> {
        let s = self.next()?;
        let v = parse_u64(s).ok_or_else(|| err(self.line, format!("bad integer `{s}`")))?;
        T::try_from(v).map_err(|_| err(self.line, format!("integer `{s}` out of range")))
    }
    fn big(&mut self) -> Result<BigUint> {
        let s = self.next()?;
        let v = match s.strip_prefix("0x") {
            Some(h) => BigUint::from_str_radix(h, 16).ok(),
            None => BigUint::from_str_radix(s, 10).ok(),
        };
        v.ok_or_else(|| err(self.line, format!("bad value `{s}`")))
    }
    fn vreg(&mut self) -> Result<VReg> {
        let s = self.next()?;
        s.strip_prefix('v')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| err(self.line, format!("expected vreg, found `{s}`")))
    }
    fn keyword(&mut self, kw: &str) -> Result<()> {
        let s = self.next()?;
        if s == kw {
            Ok(())
        } else {
            Err(err(self.line, format!("expected `{kw}`, found `{s}`")))
        }
    }
    fn done(&self) -> bool {
        self.pos == self.t.len()
    }
}

fn parse_u64(s: &str) -> Option<u64> {
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16).ok(),
        None => s.parse().ok(),
    }
}

fn word_key(s: &str, line: usize) -> Result<WordKey> {
    let (r, w) = s
        .split_once('.')
        .ok_or_else(|| err(line, format!("expected reg.word, found `{s}`")))?;
    Ok(WordKey {
        reg: r.parse().map_err(|_| err(line, "bad register index"))?,
        word: w.parse().map_err(|_| err(line, "bad word index"))?,
    })
}

pub fn parse_lower(text: &str) -> Result<LowerProgram> {
    let mut low = LowerProgram {
        name: String::new(),
        procs: Vec::new(),
        regs: Vec::new(),
        mems: Vec::new(),
        displays: Vec::new(),
        global_words: 0,
    };
    let mut saw_program = false;
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let stripped = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = stripped
            .split([' ', '\t', ','])
            .filter(|t| !t.is_empty())
            .collect();
        if toks.is_empty() {
            continue;
        }
        let mut t = Toks { t: toks, pos: 0, line };
        let head = t.next()?;
        match head {
            "program" => {
                low.name = t.next()?.to_string();
                saw_program = true;
            }
            "globalwords" => low.global_words = t.int()?,
            "reg" => {
                let name = t.next()?.to_string();
                let width = t.int()?;
                let init = t.big()?;
                let owner = if t.done() {
                    None
                } else {
                    t.keyword("owner")?;
                    Some(t.int()?)
                };
                low.regs.push(RegMeta {
                    name,
                    width,
                    init,
                    owner,
                });
            }
            "mem" => {
                let name = t.next()?.to_string();
                let kind = match t.next()? {
                    "local" => MemKind::Local,
                    "global" => MemKind::Global,
                    other => return Err(err(line, format!("bad memory kind `{other}`"))),
                };
                let depth = t.int()?;
                let elem_width = t.int()?;
                t.keyword("stride")?;
                let stride = t.int()?;
                t.keyword("owner")?;
                let owner = t.int()?;
                let mut global_base = None;
                let mut init = Vec::new();
                while !t.done() {
                    match t.next()? {
                        "base" => global_base = Some(t.int()?),
                        "init" => {
                            while !t.done() {
                                init.push(t.big()?);
                            }
                        }
                        other => return Err(err(line, format!("unexpected `{other}`"))),
                    }
                }
                low.mems.push(MemMeta {
                    name,
                    elem_width,
                    depth,
                    kind,
                    init,
                    stride,
                    global_base,
                    owner,
                });
            }
            "display" => low.displays.push(DisplayMeta {
                eid: t.int()?,
                gaddr: t.int()?,
                nwords: t.int()?,
            }),
            "proc" => {
                let id = t.int()?;
                t.keyword("nextvreg")?;
                let next_vreg = t.int()?;
                low.procs.push(LowerProcess {
                    id,
                    body: Vec::new(),
                    state: Vec::new(),
                    imports: Vec::new(),
                    mems: Vec::new(),
                    cfs: Vec::new(),
                    next_vreg,
                });
            }
            _ => {
                let p = low
                    .procs
                    .last_mut()
                    .ok_or_else(|| err(line, "statement before any `proc`"))?;
                match head {
                    "mems" => {
                        while !t.done() {
                            p.mems.push(t.int()?);
                        }
                    }
                    "cf" => {
                        let hex = t.next()?;
                        if hex.len() != 64 {
                            return Err(err(line, "cf table must be 64 hex digits"));
                        }
                        let mut table = [0u16; 16];
                        for (i, chunk) in hex.as_bytes().chunks(4).enumerate() {
                            let s = std::str::from_utf8(chunk).unwrap();
                            table[i] = u16::from_str_radix(s, 16)
                                .map_err(|_| err(line, "bad cf table digits"))?;
                        }
                        p.cfs.push(table);
                    }
                    "state" => {
                        let key = word_key(t.next()?, line)?;
                        p.state.push(StateWord {
                            key,
                            cur: t.vreg()?,
                            next: t.vreg()?,
                            init: t.int()?,
                        });
                    }
                    "import" => {
                        let key = word_key(t.next()?, line)?;
                        let vreg = t.vreg()?;
                        let init = t.int()?;
                        t.keyword("from")?;
                        p.imports.push(ImportWord {
                            key,
                            vreg,
                            init,
                            producer: t.int()?,
                        });
                    }
                    _ => {
                        t.pos = 0;
                        p.body.push(parse_instr(&mut t)?);
                    }
                }
            }
        }
        if !t.done() {
            return Err(err(line, "trailing tokens"));
        }
    }
    if !saw_program {
        return Err(err(1, "missing `program` header"));
    }
    Ok(low)
}

fn parse_instr(t: &mut Toks) -> Result<LInstr> {
    let bin_op = |name: &str| -> Option<BinOp> {
        Some(match name {
            "add" => BinOp::Add,
            "sub" => BinOp::Sub,
            "and" => BinOp::And,
            "or" => BinOp::Or,
            "xor" => BinOp::Xor,
            "sll" => BinOp::Sll,
            "srl" => BinOp::Srl,
            "sra" => BinOp::Sra,
            "seq" => BinOp::Seq,
            "sltu" => BinOp::Sltu,
            "slts" => BinOp::Slts,
            _ => return None,
        })
    };
    let mem_ref = |s: &str, line: usize| -> Result<(MemId, u16)> {
        let body = s
            .strip_prefix('m')
            .ok_or_else(|| err(line, format!("expected memory ref, found `{s}`")))?;
        let (m, off) = body
            .split_once('+')
            .ok_or_else(|| err(line, "memory ref needs `+offset`"))?;
        Ok((
            m.parse().map_err(|_| err(line, "bad memory id"))?,
            off.parse().map_err(|_| err(line, "bad memory offset"))?,
        ))
    };

    let first = t.next()?;
    if let Some(rest) = first.strip_prefix('v') {
        // destination form: vN = op ...
        let d: VReg = rest
            .parse()
            .map_err(|_| err(t.line, format!("bad vreg `{first}`")))?;
        t.keyword("=")?;
        let op = t.next()?;
        return Ok(if let Some(b) = bin_op(op) {
            LInstr::Bin {
                op: b,
                d,
                a: t.vreg()?,
                b: t.vreg()?,
            }
        } else {
            match op {
                "addc" => LInstr::Addc {
                    d,
                    a: t.vreg()?,
                    b: t.vreg()?,
                    c: t.vreg()?,
                },
                "mux" => LInstr::Mux {
                    d,
                    p: t.vreg()?,
                    a: t.vreg()?,
                    b: t.vreg()?,
                },
                "set" => LInstr::Set { d, imm: t.int()? },
                "mov" => LInstr::Mov { d, a: t.vreg()? },
                "cust" => LInstr::Cust {
                    d,
                    fid: t.int()?,
                    args: [t.vreg()?, t.vreg()?, t.vreg()?, t.vreg()?],
                },
                "lld" => {
                    let addr = t.vreg()?;
                    let (mem, off) = mem_ref(t.next()?, t.line)?;
                    LInstr::Lld { d, addr, mem, off }
                }
                "gld" => LInstr::Gld {
                    d,
                    a: [t.vreg()?, t.vreg()?, t.vreg()?],
                },
                other => return Err(err(t.line, format!("unknown operation `{other}`"))),
            }
        });
    }
    Ok(match first {
        "lst" => {
            let addr = t.vreg()?;
            let data = t.vreg()?;
            let pred = t.vreg()?;
            let (mem, off) = mem_ref(t.next()?, t.line)?;
            LInstr::Lst {
                addr,
                data,
                pred,
                mem,
                off,
            }
        }
        "gst" => LInstr::Gst {
            a: [t.vreg()?, t.vreg()?, t.vreg()?],
            data: t.vreg()?,
            pred: t.vreg()?,
        },
        "expect" => LInstr::Expect {
            a: t.vreg()?,
            b: t.vreg()?,
            eid: t.int()?,
        },
        "nop" => LInstr::Nop,
        other => Err(err(t.line, format!("unknown statement `{other}`")))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::lower::build::lower_netlist;

    #[test]
    fn round_trip_fifo() {
        let low = lower_netlist(&gen::fifo(128, true)).unwrap();
        let text = print_lower(&low);
        let back = parse_lower(&text).unwrap();
        assert_eq!(low, back);
    }

    #[test]
    fn round_trip_after_partitioning() {
        let low = lower_netlist(&gen::counters(5, 11)).unwrap();
        let mut low = crate::parallel::split(&low).unwrap();
        crate::cf::synthesize(&mut low);
        let back = parse_lower(&print_lower(&low)).unwrap();
        assert_eq!(low, back);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lower("program p\nproc 0 nextvreg 3\n  v1 = bogus v2\n").is_err());
        assert!(parse_lower("program p\n  v1 = add v2, v3\n").is_err());
    }
}
