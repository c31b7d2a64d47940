//! Built-in design generators: synthetic workloads for benchmarking and
//! randomized designs for differential testing. Everything is produced as
//! netlist text and run through the parser, so generated designs are always
//! well-formed by construction.

use std::fmt::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ir::{parse_netlist, NetlistProgram};

/// `k` independent counters of the given width.
pub fn counters(k: usize, width: u32) -> NetlistProgram {
    let mut s = String::from("design counters\n");
    for i in 0..k {
        let _ = writeln!(s, "reg c{i} {width}");
        let _ = writeln!(s, "w{i}:{width} = add c{i}.cur, 1:{width}");
        let _ = writeln!(s, "c{i}.next = mov w{i}");
    }
    parse_netlist(&s).expect("generated counters parse")
}

/// Sequential read-modify-write sweep over a `bytes`-sized memory of 16-bit
/// elements. Touches one element per vcycle in address order.
pub fn fifo(bytes: u64, global: bool) -> NetlistProgram {
    let depth = (bytes / 2).next_power_of_two().max(2);
    let w = depth.trailing_zeros();
    let kind = if global { "global" } else { "local" };
    let s = format!(
        "\
design fifo
reg ptr {w}
reg acc 16
mem m {kind} {depth} 16
v:16 = load m, ptr.cur
d:16 = add v, 1:16
store m, ptr.cur, d, 1:1
p:{w} = add ptr.cur, 1:{w}
ptr.next = mov p
a:16 = xor acc.cur, v
acc.next = mov a
"
    );
    parse_netlist(&s).expect("generated fifo parses")
}

/// Random-access read-modify-write over a `bytes`-sized memory of 16-bit
/// elements. Addresses come from a 128-bit xorshift generator built out of
/// netlist registers, so the access stream has no spatial locality.
pub fn ram(bytes: u64, global: bool) -> NetlistProgram {
    let depth = (bytes / 2).next_power_of_two().max(2);
    let w = depth.trailing_zeros();
    // the store address comes from the top of x (= the output from three
    // vcycles ago); a disjoint bit range keeps load and store lines
    // effectively independent
    let so = 32 - w;
    let kind = if global { "global" } else { "local" };
    let s = format!(
        "\
design ram
reg x 32 init 0x075bcd15
reg y 32 init 0x159a55e5
reg z 32 init 0x1f123bb5
reg w 32 init 0x05491333
reg acc 16
mem m {kind} {depth} 16
t1:32 = shl x.cur, 11:5
t:32 = xor x.cur, t1
x.next = mov y.cur
y.next = mov z.cur
z.next = mov w.cur
u1:32 = shrl w.cur, 19:5
u2:32 = xor w.cur, u1
u3:32 = shrl t, 8:5
u4:32 = xor t, u3
wn:32 = xor u2, u4
w.next = mov wn
raddr:{w} = slice w.cur, 0
v:16 = load m, raddr
d:16 = add v, 1:16
saddr:{w} = slice x.cur, {so}
store m, saddr, d, 1:1
a:16 = xor acc.cur, v
acc.next = mov a
"
    );
    parse_netlist(&s).expect("generated ram parses")
}

/// Reference model of the xorshift-128 stream used by `ram`, for tests.
pub struct XorShift128 {
    pub x: u32,
    pub y: u32,
    pub z: u32,
    pub w: u32,
}

impl Default for XorShift128 {
    fn default() -> Self {
        XorShift128 {
            x: 0x075bcd15,
            y: 0x159a55e5,
            z: 0x1f123bb5,
            w: 0x05491333,
        }
    }
}

impl XorShift128 {
    pub fn step(&mut self) -> u32 {
        let t = self.x ^ (self.x << 11);
        self.x = self.y;
        self.y = self.z;
        self.z = self.w;
        self.w = self.w ^ (self.w >> 19) ^ t ^ (t >> 8);
        self.w
    }
}

#[derive(Debug, Clone)]
pub struct DagConfig {
    /// Approximate number of operation instructions to generate.
    pub instrs: usize,
    pub regs: usize,
    pub max_width: u32,
    /// Local memories to thread through the design.
    pub mems: usize,
    /// Bias operator choice towards bitwise logic (and/or/xor/not).
    pub logic_bias: bool,
    pub displays: usize,
}

impl Default for DagConfig {
    fn default() -> Self {
        DagConfig {
            instrs: 60,
            regs: 6,
            max_width: 48,
            mems: 0,
            logic_bias: false,
            displays: 0,
        }
    }
}

/// A random closed design: every register is driven, every wire used where
/// widths allow, no stop exceptions. Deterministic in `seed`.
pub fn random_dag(seed: u64, cfg: &DagConfig) -> NetlistProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = format!("design rand{seed}\n");
    // (name, width) values readable so far
    let mut pool: Vec<(String, u32)> = Vec::new();
    let mut widths: Vec<u32> = Vec::new();

    for i in 0..cfg.regs {
        let w = rng.gen_range(1..=cfg.max_width);
        let init: u64 = rng.gen::<u64>() & ((1u128 << w.min(64)) - 1) as u64;
        let _ = writeln!(s, "reg r{i} {w} init 0x{init:x}");
        pool.push((format!("r{i}.cur"), w));
        widths.push(w);
    }
    let mut mem_depths = Vec::new();
    for i in 0..cfg.mems {
        let depth = 1u64 << rng.gen_range(2..=6);
        let w = rng.gen_range(1..=cfg.max_width);
        let _ = writeln!(s, "mem m{i} local {depth} {w}");
        mem_depths.push((depth, w));
    }

    let mut wid = 0usize;
    let ops_logic = ["and", "or", "xor", "not", "and", "or", "xor"];
    let ops_any = [
        "and", "or", "xor", "not", "add", "sub", "shl", "shrl", "shra", "eq", "ltu", "lts", "mux",
        "concat", "slice",
    ];

    // pick a pool value of the given width, or synthesize a constant
    fn operand(rng: &mut ChaCha8Rng, pool: &[(String, u32)], w: u32) -> String {
        let cands: Vec<&(String, u32)> = pool.iter().filter(|(_, pw)| *pw == w).collect();
        if !cands.is_empty() && rng.gen_bool(0.85) {
            cands[rng.gen_range(0..cands.len())].0.clone()
        } else {
            let v: u64 = rng.gen::<u64>() & ((1u128 << w.min(64)) - 1) as u64;
            format!("0x{v:x}:{w}")
        }
    }

    for _ in 0..cfg.instrs {
        let op = if cfg.logic_bias && rng.gen_bool(0.8) {
            ops_logic[rng.gen_range(0..ops_logic.len())]
        } else {
            ops_any[rng.gen_range(0..ops_any.len())]
        };
        let name = format!("w{wid}");
        wid += 1;
        // anchor on an existing pool value so the graph stays connected
        let (a, aw) = pool[rng.gen_range(0..pool.len())].clone();
        match op {
            "and" | "or" | "xor" | "add" | "sub" => {
                let b = operand(&mut rng, &pool, aw);
                let _ = writeln!(s, "{name}:{aw} = {op} {a}, {b}");
                pool.push((name, aw));
            }
            "not" => {
                let _ = writeln!(s, "{name}:{aw} = not {a}");
                pool.push((name, aw));
            }
            "shl" | "shrl" | "shra" => {
                let amt = if rng.gen_bool(0.6) {
                    format!("{}:8", rng.gen_range(0..=aw.min(70)))
                } else {
                    let w = rng.gen_range(1..=6);
                    operand(&mut rng, &pool, w)
                };
                let _ = writeln!(s, "{name}:{aw} = {op} {a}, {amt}");
                pool.push((name, aw));
            }
            "eq" | "ltu" | "lts" => {
                let b = operand(&mut rng, &pool, aw);
                let _ = writeln!(s, "{name}:1 = {op} {a}, {b}");
                pool.push((name, 1));
            }
            "mux" => {
                let p = operand(&mut rng, &pool, 1);
                let b = operand(&mut rng, &pool, aw);
                let _ = writeln!(s, "{name}:{aw} = mux {p}, {a}, {b}");
                pool.push((name, aw));
            }
            "concat" => {
                let (b, bw) = pool[rng.gen_range(0..pool.len())].clone();
                let total = aw + bw;
                if total <= 256 {
                    let _ = writeln!(s, "{name}:{total} = concat {a}, {b}");
                    pool.push((name, total));
                } else {
                    wid -= 1;
                }
            }
            "slice" => {
                let off = rng.gen_range(0..aw);
                let dw = rng.gen_range(1..=aw - off);
                let _ = writeln!(s, "{name}:{dw} = slice {a}, {off}");
                pool.push((name, dw));
            }
            _ => unreachable!(),
        }
    }

    // thread each memory through a load and a store
    for (i, (depth, w)) in mem_depths.iter().enumerate() {
        let ab = depth.trailing_zeros();
        let addr = operand(&mut rng, &pool, ab);
        let data = operand(&mut rng, &pool, *w);
        let pred = operand(&mut rng, &pool, 1);
        let name = format!("w{wid}");
        wid += 1;
        let _ = writeln!(s, "{name}:{w} = load m{i}, {addr}");
        pool.push((name, *w));
        let saddr = operand(&mut rng, &pool, ab);
        let _ = writeln!(s, "store m{i}, {saddr}, {data}, {pred}");
    }

    for d in 0..cfg.displays {
        let (v, _) = pool[rng.gen_range(0..pool.len())].clone();
        let _ = writeln!(s, "display {v}, {d}");
    }

    // close the loop: drive every register, adapting widths when needed
    for (i, &w) in widths.iter().enumerate() {
        // prefer a wire over a register so state actually evolves
        let wires: Vec<&(String, u32)> = pool
            .iter()
            .filter(|(n, pw)| *pw == w && !n.ends_with(".cur"))
            .collect();
        let src = if !wires.is_empty() {
            wires[rng.gen_range(0..wires.len())].0.clone()
        } else {
            // adapt the widest value available
            let (cand, cw) = pool
                .iter()
                .max_by_key(|(_, pw)| *pw)
                .cloned()
                .expect("pool is never empty");
            let name = format!("w{wid}");
            wid += 1;
            if cw >= w {
                let _ = writeln!(s, "{name}:{w} = slice {cand}, 0");
            } else {
                let _ = writeln!(s, "{name}:{w} = concat {cand}, 0x0:{}", w - cw);
            }
            pool.push((name.clone(), w));
            name
        };
        let _ = writeln!(s, "r{i}.next = mov {src}");
    }

    parse_netlist(&s).unwrap_or_else(|e| panic!("generated design must parse: {e}\n{s}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::interpret_netlist;
    use num_bigint::BigUint;

    #[test]
    fn counters_run() {
        let p = counters(3, 7);
        let t = interpret_netlist(&p, 130);
        assert_eq!(t.regs[129][0], BigUint::from(130u32 & 0x7f));
        assert_eq!(t.regs[129][2], BigUint::from(130u32 & 0x7f));
    }

    #[test]
    fn ram_addresses_match_reference() {
        // the load address each vcycle is the low bits of w.cur, i.e. the
        // xorshift output from the *previous* vcycle
        let p = ram(1 << 10, true);
        let t = interpret_netlist(&p, 20);
        let mut rf = XorShift128::default();
        // vcycle v loads at w.cur which after v commits equals stream value v
        for v in 0..19 {
            let expect = rf.step();
            let got = u64::try_from(&t.regs[v][3]).unwrap();
            assert_eq!(got, expect as u64, "vcycle {v}");
        }
    }

    #[test]
    fn fifo_sweeps() {
        let p = fifo(64, false); // 32 elements
        let t = interpret_netlist(&p, 32);
        // each element incremented exactly once
        for e in 0..32 {
            assert_eq!(t.mems[0][e], BigUint::from(1u32));
        }
    }

    #[test]
    fn random_dags_parse_and_run() {
        for seed in 0..30 {
            let cfg = DagConfig {
                instrs: 80,
                regs: 8,
                mems: 1,
                ..DagConfig::default()
            };
            let p = random_dag(seed, &cfg);
            let t = interpret_netlist(&p, 16);
            assert_eq!(t.vcycles, 16, "seed {seed}");
        }
    }

    #[test]
    fn random_dag_deterministic() {
        let cfg = DagConfig::default();
        let a = random_dag(7, &cfg);
        let b = random_dag(7, &cfg);
        assert_eq!(crate::ir::print_netlist(&a), crate::ir::print_netlist(&b));
    }
}
