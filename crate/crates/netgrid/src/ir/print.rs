//! Prints a netlist back into the textual form accepted by the parser.

use std::fmt::Write;

use super::*;

pub fn print_netlist(prog: &NetlistProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "design {}", prog.name);
    for r in &prog.registers {
        if r.init == num_traits::Zero::zero() {
            let _ = writeln!(out, "reg {} {}", r.name, r.width);
        } else {
            let _ = writeln!(out, "reg {} {} init 0x{:x}", r.name, r.width, r.init);
        }
    }
    for m in &prog.memories {
        let kind = match m.kind {
            MemKind::Local => "local",
            MemKind::Global => "global",
        };
        let _ = write!(out, "mem {} {} {} {}", m.name, kind, m.depth, m.elem_width);
        if !m.init.is_empty() {
            let _ = write!(out, " init");
            for v in &m.init {
                let _ = write!(out, " 0x{v:x}");
            }
        }
        out.push('\n');
    }
    for instr in &prog.instrs {
        let _ = writeln!(out, "{}", print_instr(prog, instr));
    }
    out
}

pub fn print_operand(prog: &NetlistProgram, op: &Operand) -> String {
    match op {
        Operand::Wire(w) => prog.wires[*w as usize].name.clone(),
        Operand::Cur(r) => format!("{}.cur", prog.registers[*r as usize].name),
        Operand::Const { value, width } => format!("0x{value:x}:{width}"),
    }
}

pub fn print_instr(prog: &NetlistProgram, instr: &NetlistInstr) -> String {
    let args: Vec<String> = instr
        .args
        .iter()
        .map(|a| print_operand(prog, a))
        .collect();
    let dest = match instr.dest {
        Dest::Wire(w) => {
            let wire = &prog.wires[w as usize];
            format!("{}:{} = ", wire.name, wire.width)
        }
        Dest::RegNext(r) => format!("{}.next = ", prog.registers[r as usize].name),
        Dest::None => String::new(),
    };
    match &instr.op {
        NetOp::Slice { offset } => format!("{dest}slice {}, {offset}", args[0]),
        NetOp::Load { mem } => format!(
            "{dest}load {}, {}",
            prog.memories[*mem as usize].name, args[0]
        ),
        NetOp::Store { mem } => format!(
            "store {}, {}, {}, {}",
            prog.memories[*mem as usize].name, args[0], args[1], args[2]
        ),
        NetOp::Expect { eid } => format!("expect {}, {}, {eid}", args[0], args[1]),
        NetOp::Display { eid } => format!("display {}, {}", args[0], eid & !EID_DISPLAY_BIT),
        op => {
            let name = match op {
                NetOp::And => "and",
                NetOp::Or => "or",
                NetOp::Xor => "xor",
                NetOp::Not => "not",
                NetOp::Add => "add",
                NetOp::Sub => "sub",
                NetOp::Shl => "shl",
                NetOp::ShrL => "shrl",
                NetOp::ShrA => "shra",
                NetOp::Eq => "eq",
                NetOp::LtU => "ltu",
                NetOp::LtS => "lts",
                NetOp::Mux => "mux",
                NetOp::Concat => "concat",
                NetOp::Mov => "mov",
                _ => unreachable!(),
            };
            format!("{dest}{name} {}", args.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_netlist;
    use super::*;

    #[test]
    fn round_trip() {
        let src = "\
design rt
reg r 20 init 0x1234
mem m local 8 16 init 1 2 3
a:20 = add r.cur, 0x7:20
b:1 = ltu a, r.cur
c:20 = mux b, a, r.cur
d:4 = slice c, 3
e:16 = load m, d
store m, d, e, b
expect d, d, 5
display e, 2
r.next = mov c
";
        let p1 = parse_netlist(src).unwrap();
        let text = print_netlist(&p1);
        let p2 = parse_netlist(&text).unwrap();
        assert_eq!(p1, p2);
    }
}
