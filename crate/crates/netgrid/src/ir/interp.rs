//! Reference interpreter for the netlist IR. One call to `step` evaluates a
//! full vcycle: all loads observe start-of-cycle memory, stores and register
//! writes commit atomically at the end.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::*;
use crate::bits::mask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExceptionRecord {
    pub eid: u16,
    pub vcycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTrace {
    /// Register values after each completed vcycle, indexed [vcycle][reg].
    pub regs: Vec<Vec<BigUint>>,
    /// (eid, vcycle, value) triples, ordered by vcycle then eid.
    pub displays: Vec<(u16, u64, BigUint)>,
    /// Stop-class exception that halted execution, if any.
    pub stop: Option<ExceptionRecord>,
    /// Completed (committed) vcycles.
    pub vcycles: u64,
    /// Final memory contents, indexed [mem][element].
    pub mems: Vec<Vec<BigUint>>,
}

pub struct NetlistState {
    pub regs: Vec<BigUint>,
    pub mems: Vec<Vec<BigUint>>,
}

impl NetlistState {
    pub fn new(prog: &NetlistProgram) -> Self {
        let regs = prog.registers.iter().map(|r| r.init.clone()).collect();
        let mems = prog
            .memories
            .iter()
            .map(|m| {
                let mut v = m.init.clone();
                v.resize(m.depth as usize, BigUint::zero());
                v
            })
            .collect();
        NetlistState { regs, mems }
    }
}

pub fn eval_op(op: &NetOp, args: &[(BigUint, Width)], dest_width: Width) -> BigUint {
    let m = mask(dest_width);
    let a = |i: usize| &args[i].0;
    let aw = |i: usize| args[i].1;
    match op {
        NetOp::And => a(0) & a(1),
        NetOp::Or => a(0) | a(1),
        NetOp::Xor => a(0) ^ a(1),
        NetOp::Not => a(0) ^ mask(aw(0)),
        NetOp::Add => (a(0) + a(1)) & m,
        NetOp::Sub => {
            let w = aw(0);
            // two's complement: a + ~b + 1, truncated
            ((a(0) + (a(1) ^ mask(w)) + 1u32) & mask(w)) & m
        }
        NetOp::Shl => {
            let sh = shift_amount(a(1));
            if sh >= dest_width as u64 {
                BigUint::zero()
            } else {
                (a(0) << sh) & m
            }
        }
        NetOp::ShrL => {
            let sh = shift_amount(a(1));
            if sh >= aw(0) as u64 {
                BigUint::zero()
            } else {
                a(0) >> sh
            }
        }
        NetOp::ShrA => {
            let w = aw(0);
            let sign = (a(0) >> (w - 1)) & BigUint::one();
            let sh = shift_amount(a(1)).min(w as u64);
            let mut v = a(0) >> sh;
            if sign == BigUint::one() {
                // fill vacated high bits with ones
                let fill = mask(w) ^ (mask(w) >> sh);
                v |= fill;
            }
            v & m
        }
        NetOp::Eq => bool_val(a(0) == a(1)),
        NetOp::LtU => bool_val(a(0) < a(1)),
        NetOp::LtS => {
            let w = aw(0);
            let flip = BigUint::one() << (w - 1);
            bool_val((a(0) ^ &flip) < (a(1) ^ &flip))
        }
        NetOp::Mux => {
            if a(0) == &BigUint::one() {
                a(1).clone()
            } else {
                a(2).clone()
            }
        }
        NetOp::Concat => {
            let mut v = BigUint::zero();
            let mut off = 0u32;
            for (val, w) in args {
                v |= val << off;
                off += w;
            }
            v
        }
        NetOp::Slice { offset } => (a(0) >> *offset) & m,
        NetOp::Mov => a(0).clone(),
        _ => unreachable!("eval_op on effectful op"),
    }
}

fn shift_amount(v: &BigUint) -> u64 {
    u64::try_from(v).unwrap_or(u64::MAX)
}

fn bool_val(b: bool) -> BigUint {
    if b {
        BigUint::one()
    } else {
        BigUint::zero()
    }
}

pub struct Stepper<'a> {
    prog: &'a NetlistProgram,
    order: Vec<usize>,
    pub state: NetlistState,
}

pub enum StepResult {
    /// Vcycle committed; display events emitted this cycle (sorted by eid).
    Ok(Vec<(u16, BigUint)>),
    /// Stop exception raised (lowest eid); state not committed.
    Stop(u16),
}

impl<'a> Stepper<'a> {
    pub fn new(prog: &'a NetlistProgram) -> Self {
        Stepper {
            prog,
            order: super::parse::topo_order(prog),
            state: NetlistState::new(prog),
        }
    }

    pub fn step(&mut self) -> StepResult {
        let prog = self.prog;
        let mut wire_vals: Vec<Option<BigUint>> = vec![None; prog.wires.len()];
        let mut reg_next: Vec<Option<BigUint>> = vec![None; prog.registers.len()];
        // Buffered (mem, index, value) stores in source order.
        let mut stores: Vec<(usize, u64, BigUint)> = Vec::new();
        let mut displays: Vec<(u16, BigUint)> = Vec::new();
        let mut stop: Option<u16> = None;

        for &i in &self.order {
            let instr = &prog.instrs[i];
            let args: Vec<(BigUint, Width)> = instr
                .args
                .iter()
                .map(|a| {
                    let v = match a {
                        Operand::Wire(w) => wire_vals[*w as usize].clone().unwrap(),
                        Operand::Cur(r) => self.state.regs[*r as usize].clone(),
                        Operand::Const { value, .. } => value.clone(),
                    };
                    (v, prog.operand_width(a))
                })
                .collect();
            let result = match &instr.op {
                NetOp::Load { mem } => {
                    let m = &prog.memories[*mem as usize];
                    let idx = index_of(&args[0].0, m.depth);
                    Some(self.state.mems[*mem as usize][idx as usize].clone())
                }
                NetOp::Store { mem } => {
                    if args[2].0 == BigUint::one() {
                        let m = &prog.memories[*mem as usize];
                        let idx = index_of(&args[0].0, m.depth);
                        stores.push((*mem as usize, idx, args[1].0.clone()));
                    }
                    None
                }
                NetOp::Expect { eid } => {
                    if args[0].0 != args[1].0 {
                        stop = Some(stop.map_or(*eid, |e| e.min(*eid)));
                    }
                    None
                }
                NetOp::Display { eid } => {
                    displays.push((*eid, args[0].0.clone()));
                    None
                }
                op => {
                    let dw = prog.dest_width(&instr.dest).unwrap();
                    Some(eval_op(op, &args, dw))
                }
            };
            match instr.dest {
                Dest::Wire(w) => wire_vals[w as usize] = result,
                Dest::RegNext(r) => reg_next[r as usize] = result,
                Dest::None => {}
            }
        }

        if let Some(eid) = stop {
            return StepResult::Stop(eid);
        }
        for (m, idx, v) in stores {
            self.state.mems[m][idx as usize] = v;
        }
        for (r, v) in reg_next.into_iter().enumerate() {
            if let Some(v) = v {
                self.state.regs[r] = v;
            }
        }
        displays.sort_by_key(|d| d.0);
        StepResult::Ok(displays)
    }
}

fn index_of(addr: &BigUint, depth: u64) -> u64 {
    u64::try_from(addr & BigUint::from(depth - 1)).unwrap()
}

/// Run `vcycles` vcycles (or until a stop exception) and record the trace.
pub fn interpret_netlist(prog: &NetlistProgram, vcycles: u64) -> StateTrace {
    let mut st = Stepper::new(prog);
    let mut trace = StateTrace {
        regs: Vec::new(),
        displays: Vec::new(),
        stop: None,
        vcycles: 0,
        mems: Vec::new(),
    };
    for v in 0..vcycles {
        match st.step() {
            StepResult::Ok(disp) => {
                for (eid, val) in disp {
                    trace.displays.push((eid, v, val));
                }
                trace.regs.push(st.state.regs.clone());
                trace.vcycles += 1;
            }
            StepResult::Stop(eid) => {
                trace.stop = Some(ExceptionRecord { eid, vcycle: v });
                break;
            }
        }
    }
    trace.mems = st.state.mems;
    trace
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_netlist;
    use super::*;

    fn run(src: &str, n: u64) -> StateTrace {
        interpret_netlist(&parse_netlist(src).unwrap(), n)
    }

    #[test]
    fn counter_counts() {
        let t = run(
            "design c\nreg count 4\nw0:4 = add count.cur, 1:4\ncount.next = mov w0\n",
            20,
        );
        assert_eq!(t.regs[0][0], BigUint::from(1u32));
        assert_eq!(t.regs[15][0], BigUint::from(0u32)); // wraps at 16
        assert_eq!(t.regs[19][0], BigUint::from(4u32));
    }

    #[test]
    fn sub_and_compares() {
        let t = run(
            "\
design d
reg a 8 init 5
reg b 8 init 9
d0:8 = sub a.cur, b.cur
lt:1 = ltu a.cur, b.cur
lts0:1 = lts 0xfe:8, 1:8
w:10 = concat d0, lt, lts0
reg out 10
out.next = mov w
",
            1,
        );
        // 5 - 9 = 0xfc; 5 <u 9 = 1; -2 <s 1 = 1
        assert_eq!(t.regs[0][2], BigUint::from(0x3fcu32));
    }

    #[test]
    fn shifts() {
        let t = run(
            "\
design d
reg r 8 init 0x90
a:8 = shl r.cur, 2:4
b:8 = shrl r.cur, 2:4
c:8 = shra r.cur, 2:4
e:8 = shra r.cur, 9:4
w:32 = concat a, b, c, e
reg out 32
out.next = mov w
",
            1,
        );
        let v = u64::try_from(&t.regs[0][1]).unwrap();
        assert_eq!(v & 0xff, 0x40); // 0x90 << 2
        assert_eq!((v >> 8) & 0xff, 0x24); // 0x90 >> 2
        assert_eq!((v >> 16) & 0xff, 0xe4); // arithmetic
        assert_eq!((v >> 24) & 0xff, 0xff); // over-shift keeps sign
    }

    #[test]
    fn memory_read_before_write() {
        // load sees the old value in the same vcycle the store updates it
        let t = run(
            "\
design d
reg i 3
mem m local 8 16 init 7
v:16 = load m, i.cur
w:16 = add v, 1:16
store m, i.cur, w, 1:1
reg acc 16
acc.next = mov v
i2:3 = add i.cur, 0:3
i.next = mov i2
",
            3,
        );
        // element 0 goes 7 -> 8 -> 9; acc sees pre-store values
        assert_eq!(t.regs[0][1], BigUint::from(7u32));
        assert_eq!(t.regs[1][1], BigUint::from(8u32));
        assert_eq!(t.regs[2][1], BigUint::from(9u32));
        assert_eq!(t.mems[0][0], BigUint::from(10u32));
    }

    #[test]
    fn stop_halts_without_commit() {
        let t = run(
            "\
design d
reg c 4
w:4 = add c.cur, 1:4
c.next = mov w
expect c.cur, 3:4, 7
",
            10,
        );
        // c:0,1,2 committed; vcycle 3 sees c==3? expect fires when operands
        // DIFFER, so it fires on vcycle 0 (c=0 != 3).
        assert_eq!(t.vcycles, 0);
        assert_eq!(t.stop, Some(ExceptionRecord { eid: 7, vcycle: 0 }));
    }

    #[test]
    fn display_logged_each_vcycle() {
        let t = run(
            "\
design d
reg c 4
w:4 = add c.cur, 1:4
c.next = mov w
display c.cur, 3
",
            2,
        );
        assert_eq!(
            t.displays,
            vec![
                (3 | EID_DISPLAY_BIT, 0, BigUint::from(0u32)),
                (3 | EID_DISPLAY_BIT, 1, BigUint::from(1u32)),
            ]
        );
    }
}
