//! Parser for the `.mntl` netlist assembly format. See `docs/format.md` for
//! the grammar.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{Num, Zero};

use super::*;
use crate::error::{Error, Result};

struct Cursor<'a> {
    file: &'a str,
    line_no: usize,
    toks: Vec<(usize, &'a str)>, // (column, token)
    pos: usize,
}

/// Tokenize one line: identifiers/literals, plus `=` `,` `.` as punctuation.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut toks = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '=' || c == ',' || c == ':' {
            toks.push((i + 1, &line[i..i + 1]));
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() || c == '=' || c == ',' || c == ':' || c == '#' {
                break;
            }
            i += 1;
        }
        toks.push((start + 1, &line[start..i]));
    }
    toks
}

impl<'a> Cursor<'a> {
    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.file, self.line_no, col, msg)
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.0)
            .unwrap_or_else(|| self.toks.last().map(|t| t.0 + t.1.len()).unwrap_or(1))
    }

    fn next(&mut self) -> Option<&'a str> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expect_tok(&mut self, want: &str) -> Result<()> {
        let col = self.col();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(self.err(col, format!("expected `{want}`, found `{t}`"))),
            None => Err(self.err(col, format!("expected `{want}`"))),
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        let col = self.col();
        match self.next() {
            Some(t) if is_ident(t) => Ok(t),
            Some(t) => Err(self.err(col, format!("expected identifier, found `{t}`"))),
            None => Err(self.err(col, "expected identifier")),
        }
    }

    fn int(&mut self) -> Result<BigUint> {
        let col = self.col();
        match self.next() {
            Some(t) => parse_int(t).ok_or_else(|| self.err(col, format!("bad integer `{t}`"))),
            None => Err(self.err(col, "expected integer")),
        }
    }

    fn small_int(&mut self) -> Result<u64> {
        let col = self.col();
        let v = self.int()?;
        u64::try_from(&v).map_err(|_| self.err(col, "integer too large"))
    }

    fn done(&mut self) -> Result<()> {
        if self.pos < self.toks.len() {
            let col = self.col();
            Err(self.err(col, format!("unexpected `{}`", self.toks[self.pos].1)))
        } else {
            Ok(())
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut ch = s.chars();
    match ch.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    ch.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

fn parse_int(s: &str) -> Option<BigUint> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        BigUint::from_str_radix(hex, 16).ok()
    } else if let Some(bin) = s.strip_prefix("0b") {
        BigUint::from_str_radix(bin, 2).ok()
    } else {
        BigUint::from_str_radix(s, 10).ok()
    }
}

enum RawOperand {
    Name(String),        // wire or `reg` (bare register names are not allowed)
    Cur(String),         // reg.cur
    Const(BigUint, u32), // value:width
}

struct RawInstr {
    line: usize,
    op: String,
    op_col: usize,
    dest: RawDest,
    args: Vec<(usize, RawOperand)>,
    /// Trailing integer arguments (slice offset, eid).
    ints: Vec<(usize, BigUint)>,
    mem: Option<(usize, String)>,
}

enum RawDest {
    Wire(String, Width),
    RegNext(String),
    None,
}

pub fn parse_netlist(text: &str) -> Result<NetlistProgram> {
    parse_netlist_named(text, "<input>")
}

pub fn parse_netlist_named(text: &str, file: &str) -> Result<NetlistProgram> {
    let mut name = None;
    let mut registers: Vec<StateRegister> = Vec::new();
    let mut memories: Vec<MemoryRegion> = Vec::new();
    let mut raw: Vec<RawInstr> = Vec::new();
    let mut wires: Vec<Wire> = Vec::new();
    let mut wire_ids: HashMap<String, WireId> = HashMap::new();
    let mut reg_ids: HashMap<String, RegId> = HashMap::new();
    let mut mem_ids: HashMap<String, MemId> = HashMap::new();
    let mut next_written: HashMap<String, usize> = HashMap::new();

    for (ln, line) in text.lines().enumerate() {
        let toks = tokenize(line);
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor {
            file,
            line_no: ln + 1,
            toks,
            pos: 0,
        };
        match c.peek().unwrap() {
            "design" => {
                c.next();
                name = Some(c.ident()?.to_string());
                c.done()?;
            }
            "reg" => {
                c.next();
                let col = c.col();
                let rname = c.ident()?.to_string();
                let width = c.small_int()? as u32;
                if width == 0 || width > MAX_WIDTH {
                    return Err(c.err(col, format!("register width must be 1..={MAX_WIDTH}")));
                }
                let init = if c.peek() == Some("init") {
                    c.next();
                    c.int()?
                } else {
                    BigUint::zero()
                };
                if init > crate::bits::mask(width) {
                    return Err(c.err(col, format!("init value does not fit in {width} bits")));
                }
                c.done()?;
                if reg_ids.contains_key(&rname) {
                    return Err(c.err(col, format!("duplicate register `{rname}`")));
                }
                reg_ids.insert(rname.clone(), registers.len() as RegId);
                registers.push(StateRegister {
                    name: rname,
                    width,
                    init,
                });
            }
            "mem" => {
                c.next();
                let col = c.col();
                let mname = c.ident()?.to_string();
                let kind = match c.next() {
                    Some("local") => MemKind::Local,
                    Some("global") => MemKind::Global,
                    _ => return Err(c.err(col, "expected `local` or `global`")),
                };
                let depth = c.small_int()?;
                let elem_width = c.small_int()? as u32;
                if depth == 0 || !depth.is_power_of_two() {
                    return Err(c.err(col, "memory depth must be a power of two"));
                }
                if elem_width == 0 || elem_width > MAX_WIDTH {
                    return Err(c.err(col, format!("element width must be 1..={MAX_WIDTH}")));
                }
                let mut init = Vec::new();
                if c.peek() == Some("init") {
                    c.next();
                    while c.peek().is_some() {
                        let v = c.int()?;
                        if v > crate::bits::mask(elem_width) {
                            return Err(c.err(col, "init element does not fit"));
                        }
                        init.push(v);
                    }
                    if init.len() as u64 > depth {
                        return Err(c.err(col, "more init elements than memory depth"));
                    }
                }
                c.done()?;
                if mem_ids.contains_key(&mname) {
                    return Err(c.err(col, format!("duplicate memory `{mname}`")));
                }
                mem_ids.insert(mname.clone(), memories.len() as MemId);
                memories.push(MemoryRegion {
                    name: mname,
                    elem_width,
                    depth,
                    kind,
                    init,
                });
            }
            "store" | "expect" | "display" => {
                let op_col = c.col();
                let op = c.next().unwrap().to_string();
                let mut instr = RawInstr {
                    line: ln + 1,
                    op,
                    op_col,
                    dest: RawDest::None,
                    args: Vec::new(),
                    ints: Vec::new(),
                    mem: None,
                };
                parse_stmt_args(&mut c, &mut instr)?;
                raw.push(instr);
            }
            _ => {
                // `<dest> = <op> args...`
                let dcol = c.col();
                let dtok = c
                    .next()
                    .ok_or_else(|| c.err(dcol, "expected destination"))?
                    .to_string();
                let dest = if let Some(base) = dtok.strip_suffix(".next") {
                    if !is_ident(base) {
                        return Err(c.err(dcol, format!("bad destination `{dtok}`")));
                    }
                    RawDest::RegNext(base.to_string())
                } else if is_ident(&dtok) && c.peek() == Some(":") {
                    c.next();
                    let wcol = c.col();
                    let width = c.small_int()? as u32;
                    if width == 0 || width > MAX_WIDTH {
                        return Err(c.err(wcol, format!("wire width must be 1..={MAX_WIDTH}")));
                    }
                    RawDest::Wire(dtok, width)
                } else {
                    return Err(c.err(dcol, "expected `name:width` or `name.next` destination"));
                };
                c.expect_tok("=")?;
                let op_col = c.col();
                let op = c
                    .next()
                    .ok_or_else(|| c.err(op_col, "expected operation"))?
                    .to_string();
                let mut instr = RawInstr {
                    line: ln + 1,
                    op,
                    op_col,
                    dest,
                    args: Vec::new(),
                    ints: Vec::new(),
                    mem: None,
                };
                parse_expr_args(&mut c, &mut instr)?;
                // Register wire definitions now so unordered references resolve.
                if let RawDest::Wire(ref n, width) = instr.dest {
                    if wire_ids.contains_key(n) {
                        return Err(c.err(dcol, format!("duplicate definition of {n}")));
                    }
                    wire_ids.insert(n.clone(), wires.len() as WireId);
                    wires.push(Wire {
                        name: n.clone(),
                        width,
                    });
                } else if let RawDest::RegNext(ref n) = instr.dest {
                    if let Some(prev) = next_written.insert(n.clone(), ln + 1) {
                        return Err(c.err(
                            dcol,
                            format!("duplicate definition of {n}.next (previous at line {prev})"),
                        ));
                    }
                }
                raw.push(instr);
            }
        }
    }

    let name = name.ok_or_else(|| Error::parse(file, 1, 1, "missing `design <name>` line"))?;

    // Name clashes between wires and registers would make operands ambiguous.
    for w in &wires {
        if reg_ids.contains_key(&w.name) || mem_ids.contains_key(&w.name) {
            return Err(Error::Invalid(format!(
                "`{}` is both a wire and a register/memory name",
                w.name
            )));
        }
    }

    // Second pass: resolve operands and build instructions.
    let mut instrs = Vec::new();
    for r in raw {
        instrs.push(build_instr(
            file, &r, &wire_ids, &reg_ids, &mem_ids, &registers, &memories, &wires,
        )?);
    }

    let prog = NetlistProgram {
        name,
        registers,
        memories,
        wires,
        instrs,
    };
    validate(&prog, file)?;
    Ok(prog)
}

fn parse_operand(c: &mut Cursor) -> Result<(usize, RawOperand)> {
    let col = c.col();
    let tok = c
        .next()
        .ok_or_else(|| c.err(col, "expected operand"))?
        .to_string();
    if let Some(base) = tok.strip_suffix(".cur") {
        if is_ident(base) {
            return Ok((col, RawOperand::Cur(base.to_string())));
        }
        Err(c.err(col, format!("bad operand `{tok}`")))
    } else if is_ident(&tok) {
        Ok((col, RawOperand::Name(tok)))
    } else if let Some(v) = parse_int(&tok) {
        c.expect_tok(":")?;
        let wcol = c.col();
        let width = c.small_int()? as u32;
        if width == 0 || width > MAX_WIDTH {
            return Err(c.err(wcol, format!("constant width must be 1..={MAX_WIDTH}")));
        }
        if v > crate::bits::mask(width) {
            return Err(c.err(col, format!("constant does not fit in {width} bits")));
        }
        Ok((col, RawOperand::Const(v, width)))
    } else {
        Err(c.err(col, format!("bad operand `{tok}`")))
    }
}

/// Arguments of an expression op: comma-separated operands; `slice` takes a
/// final integer offset; `load` leads with a memory name.
fn parse_expr_args(c: &mut Cursor, instr: &mut RawInstr) -> Result<()> {
    if instr.op == "load" {
        let col = c.col();
        let m = c.ident()?.to_string();
        instr.mem = Some((col, m));
        c.expect_tok(",")?;
    }
    let mut first = true;
    while c.peek().is_some() {
        if !first {
            c.expect_tok(",")?;
        }
        first = false;
        // slice's trailing offset is a bare integer.
        let col = c.col();
        if instr.op == "slice" && c.peek().map(|t| parse_int(t).is_some()) == Some(true) {
            let v = c.int()?;
            instr.ints.push((col, v));
            continue;
        }
        instr.args.push(parse_operand(c)?);
    }
    c.done()
}

/// Statement ops: `store m, addr, data, pred` / `expect a, b, eid` /
/// `display v, eid`.
fn parse_stmt_args(c: &mut Cursor, instr: &mut RawInstr) -> Result<()> {
    if instr.op == "store" {
        let col = c.col();
        let m = c.ident()?.to_string();
        instr.mem = Some((col, m));
        c.expect_tok(",")?;
    }
    let n_ops = match instr.op.as_str() {
        "store" => 3,
        "expect" => 2,
        "display" => 1,
        _ => unreachable!(),
    };
    for i in 0..n_ops {
        if i > 0 {
            c.expect_tok(",")?;
        }
        instr.args.push(parse_operand(c)?);
    }
    if instr.op != "store" {
        c.expect_tok(",")?;
        let col = c.col();
        let eid = c.int()?;
        instr.ints.push((col, eid));
    }
    c.done()
}

#[allow(clippy::too_many_arguments)]
fn build_instr(
    file: &str,
    r: &RawInstr,
    wire_ids: &HashMap<String, WireId>,
    reg_ids: &HashMap<String, RegId>,
    mem_ids: &HashMap<String, MemId>,
    registers: &[StateRegister],
    memories: &[MemoryRegion],
    wires: &[Wire],
) -> Result<NetlistInstr> {
    let err = |col: usize, msg: String| Error::parse(file, r.line, col, msg);

    let mut args = Vec::new();
    for (col, a) in &r.args {
        args.push(match a {
            RawOperand::Name(n) => {
                if let Some(w) = wire_ids.get(n) {
                    Operand::Wire(*w)
                } else if reg_ids.contains_key(n) {
                    return Err(err(
                        *col,
                        format!("register `{n}` must be read as `{n}.cur`"),
                    ));
                } else {
                    return Err(err(*col, format!("undefined reference `{n}`")));
                }
            }
            RawOperand::Cur(n) => match reg_ids.get(n) {
                Some(id) => Operand::Cur(*id),
                None => return Err(err(*col, format!("undefined register `{n}`"))),
            },
            RawOperand::Const(v, w) => Operand::Const {
                value: v.clone(),
                width: *w,
            },
        });
    }

    let dest = match &r.dest {
        RawDest::Wire(n, _) => Dest::Wire(wire_ids[n]),
        RawDest::RegNext(n) => match reg_ids.get(n) {
            Some(id) => Dest::RegNext(*id),
            None => return Err(err(r.op_col, format!("undefined register `{n}`"))),
        },
        RawDest::None => Dest::None,
    };

    let mem = match &r.mem {
        Some((col, n)) => match mem_ids.get(n) {
            Some(id) => Some(*id),
            None => return Err(err(*col, format!("undefined memory `{n}`"))),
        },
        None => None,
    };

    let eid = |idx: usize| -> Result<u16> {
        let (col, v) = &r.ints[idx];
        let v = u64::try_from(v).map_err(|_| err(*col, "eid too large".into()))?;
        if v >= EID_DISPLAY_BIT as u64 {
            return Err(err(*col, format!("eid must be < {}", EID_DISPLAY_BIT)));
        }
        Ok(v as u16)
    };

    let op = match r.op.as_str() {
        "and" => NetOp::And,
        "or" => NetOp::Or,
        "xor" => NetOp::Xor,
        "not" => NetOp::Not,
        "add" => NetOp::Add,
        "sub" => NetOp::Sub,
        "shl" => NetOp::Shl,
        "shrl" => NetOp::ShrL,
        "shra" => NetOp::ShrA,
        "eq" => NetOp::Eq,
        "ltu" => NetOp::LtU,
        "lts" => NetOp::LtS,
        "mux" => NetOp::Mux,
        "concat" => NetOp::Concat,
        "mov" => NetOp::Mov,
        "slice" => {
            if r.ints.len() != 1 {
                return Err(err(r.op_col, "slice needs a trailing offset".into()));
            }
            let (col, v) = &r.ints[0];
            let offset =
                u32::try_from(v).map_err(|_| err(*col, "slice offset too large".into()))?;
            NetOp::Slice { offset }
        }
        "load" => NetOp::Load { mem: mem.unwrap() },
        "store" => NetOp::Store { mem: mem.unwrap() },
        "expect" => NetOp::Expect { eid: eid(0)? },
        "display" => NetOp::Display {
            eid: eid(0)? | EID_DISPLAY_BIT,
        },
        other => return Err(err(r.op_col, format!("unknown operation `{other}`"))),
    };

    let instr = NetlistInstr { op, dest, args };
    check_widths(file, r, &instr, registers, memories, wires)?;
    Ok(instr)
}

fn check_widths(
    file: &str,
    r: &RawInstr,
    instr: &NetlistInstr,
    registers: &[StateRegister],
    memories: &[MemoryRegion],
    wires: &[Wire],
) -> Result<()> {
    let err = |msg: String| Error::parse(file, r.line, r.op_col, msg);
    let w = |op: &Operand| match op {
        Operand::Wire(w) => wires[*w as usize].width,
        Operand::Cur(rg) => registers[*rg as usize].width,
        Operand::Const { width, .. } => *width,
    };
    let dw = match instr.dest {
        Dest::Wire(x) => Some(wires[x as usize].width),
        Dest::RegNext(x) => Some(registers[x as usize].width),
        Dest::None => None,
    };
    let nargs = |n: usize| -> Result<()> {
        if instr.args.len() != n {
            Err(err(format!(
                "`{}` expects {n} operands, got {}",
                r.op,
                instr.args.len()
            )))
        } else {
            Ok(())
        }
    };
    let same = |a: &Operand, b: &Operand| -> Result<Width> {
        if w(a) != w(b) {
            Err(err(format!(
                "operand width mismatch: {} vs {}",
                w(a),
                w(b)
            )))
        } else {
            Ok(w(a))
        }
    };
    let res = |want: Width| -> Result<()> {
        match dw {
            Some(got) if got == want => Ok(()),
            Some(got) => Err(err(format!("result width must be {want}, got {got}"))),
            None => Err(err("operation needs a destination".into())),
        }
    };

    match &instr.op {
        NetOp::And | NetOp::Or | NetOp::Xor | NetOp::Add | NetOp::Sub => {
            nargs(2)?;
            let ww = same(&instr.args[0], &instr.args[1])?;
            res(ww)
        }
        NetOp::Not | NetOp::Mov => {
            nargs(1)?;
            res(w(&instr.args[0]))
        }
        NetOp::Shl | NetOp::ShrL | NetOp::ShrA => {
            nargs(2)?;
            res(w(&instr.args[0]))
        }
        NetOp::Eq | NetOp::LtU | NetOp::LtS => {
            nargs(2)?;
            same(&instr.args[0], &instr.args[1])?;
            res(1)
        }
        NetOp::Mux => {
            nargs(3)?;
            if w(&instr.args[0]) != 1 {
                return Err(err("mux predicate must be 1 bit".into()));
            }
            let ww = same(&instr.args[1], &instr.args[2])?;
            res(ww)
        }
        NetOp::Concat => {
            if instr.args.is_empty() {
                return Err(err("concat needs at least one operand".into()));
            }
            let total: Width = instr.args.iter().map(w).sum();
            if total > MAX_WIDTH {
                return Err(err(format!("concat result exceeds {MAX_WIDTH} bits")));
            }
            res(total)
        }
        NetOp::Slice { offset } => {
            nargs(1)?;
            let src = w(&instr.args[0]);
            let want = dw.ok_or_else(|| err("slice needs a destination".into()))?;
            if offset + want > src {
                return Err(err(format!(
                    "slice [{offset} +: {want}] out of range for {src}-bit operand"
                )));
            }
            Ok(())
        }
        NetOp::Load { mem } => {
            nargs(1)?;
            res(memories[*mem as usize].elem_width)
        }
        NetOp::Store { mem } => {
            nargs(3)?;
            let m = &memories[*mem as usize];
            if w(&instr.args[1]) != m.elem_width {
                return Err(err(format!(
                    "store data must be {} bits, got {}",
                    m.elem_width,
                    w(&instr.args[1])
                )));
            }
            if w(&instr.args[2]) != 1 {
                return Err(err("store predicate must be 1 bit".into()));
            }
            Ok(())
        }
        NetOp::Expect { .. } => {
            nargs(2)?;
            same(&instr.args[0], &instr.args[1])?;
            Ok(())
        }
        NetOp::Display { .. } => nargs(1),
    }
}

/// Whole-program checks: every wire defined, the combinational graph acyclic.
fn validate(prog: &NetlistProgram, file: &str) -> Result<()> {
    let mut display_eids = std::collections::HashSet::new();
    for instr in &prog.instrs {
        if let NetOp::Display { eid } = instr.op {
            if !display_eids.insert(eid) {
                return Err(Error::Invalid(format!(
                    "duplicate display id {}",
                    eid & !EID_DISPLAY_BIT
                )));
            }
        }
    }

    let defs = prog.wire_defs();
    for (w, d) in defs.iter().enumerate() {
        if *d == usize::MAX {
            return Err(Error::Invalid(format!(
                "wire `{}` is never defined",
                prog.wires[w].name
            )));
        }
    }

    // Cycle check over the wire def-use graph (registers break cycles).
    // 0 = unvisited, 1 = on stack, 2 = done.
    let mut state = vec![0u8; prog.instrs.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..prog.instrs.len() {
        if state[start] != 0 {
            continue;
        }
        stack.push((start, 0));
        state[start] = 1;
        while let Some((i, arg)) = stack.pop() {
            let instr = &prog.instrs[i];
            if arg >= instr.args.len() {
                state[i] = 2;
                continue;
            }
            stack.push((i, arg + 1));
            if let Operand::Wire(wid) = instr.args[arg] {
                let d = defs[wid as usize];
                match state[d] {
                    0 => {
                        state[d] = 1;
                        stack.push((d, 0));
                    }
                    1 => {
                        return Err(Error::parse(
                            file,
                            0,
                            0,
                            format!(
                                "combinational cycle through wire `{}`",
                                prog.wires[wid as usize].name
                            ),
                        ));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

/// Topological order of instructions (wire dependencies respected).
pub fn topo_order(prog: &NetlistProgram) -> Vec<usize> {
    let defs = prog.wire_defs();
    let mut order = Vec::with_capacity(prog.instrs.len());
    let mut seen = vec![false; prog.instrs.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..prog.instrs.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push((start, 0));
        while let Some((i, arg)) = stack.pop() {
            let instr = &prog.instrs[i];
            if arg >= instr.args.len() {
                order.push(i);
                continue;
            }
            stack.push((i, arg + 1));
            if let Operand::Wire(wid) = instr.args[arg] {
                let d = defs[wid as usize];
                if !seen[d] {
                    seen[d] = true;
                    stack.push((d, 0));
                }
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = "\
design counter
reg count 4 init 0
w0:4 = add count.cur, 1:4
count.next = mov w0
";

    #[test]
    fn parse_counter() {
        let p = parse_netlist(COUNTER).unwrap();
        assert_eq!(p.registers.len(), 1);
        assert_eq!(p.instrs.len(), 2);
        assert_eq!(p.sink_instrs().len(), 1);
    }

    #[test]
    fn duplicate_wire() {
        let src = "\
design d
w:1 = mov 0:1
w:1 = mov 1:1
";
        let e = parse_netlist(src).unwrap_err();
        assert!(e.to_string().contains("duplicate definition of w"), "{e}");
    }

    #[test]
    fn combinational_cycle() {
        let src = "\
design d
a:1 = not b
b:1 = not a
";
        let e = parse_netlist(src).unwrap_err();
        assert!(e.to_string().contains("combinational cycle"), "{e}");
    }

    #[test]
    fn undefined_reference() {
        let src = "\
design d
a:1 = not ghost
";
        let e = parse_netlist(src).unwrap_err();
        assert!(e.to_string().contains("undefined reference"), "{e}");
    }

    #[test]
    fn width_mismatch() {
        let src = "\
design d
a:4 = mov 0:4
b:8 = mov 1:8
c:4 = add a, b
";
        let e = parse_netlist(src).unwrap_err();
        assert!(e.to_string().contains("width mismatch"), "{e}");
    }

    #[test]
    fn topo_respects_deps() {
        let src = "\
design d
reg r 4
b:4 = add a, a
a:4 = mov r.cur
r.next = mov b
";
        let p = parse_netlist(src).unwrap();
        let order = topo_order(&p);
        let pos = |i: usize| order.iter().position(|&x| x == i).unwrap();
        // instr 0 is `b = add a, a`, instr 1 is `a = mov r.cur`
        assert!(pos(1) < pos(0));
        assert_eq!(order.len(), 3);
    }
}
