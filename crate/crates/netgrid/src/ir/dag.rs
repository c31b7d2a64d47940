//! Dependence DAG over netlist instructions. Register reads break cycles:
//! a `.cur` read has no producer edge, so the per-vcycle graph is acyclic.

use super::*;

#[derive(Debug, Clone)]
pub struct DependenceDag {
    /// preds[i] = instruction indices whose wire results instruction i reads.
    pub preds: Vec<Vec<usize>>,
    pub succs: Vec<Vec<usize>>,
    /// Instructions with no wire inputs (read only registers and constants).
    pub sources: Vec<usize>,
    /// Instructions nothing depends on: state writes, stores, expects,
    /// displays, plus any dead wire defs.
    pub sinks: Vec<usize>,
    /// Valid topological order.
    pub topo: Vec<usize>,
    /// Longest path (in instructions) from each node to any sink, >= 1.
    pub height: Vec<u32>,
}

pub fn build_dag(prog: &NetlistProgram) -> DependenceDag {
    let defs = prog.wire_defs();
    let n = prog.instrs.len();
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for (i, instr) in prog.instrs.iter().enumerate() {
        for a in &instr.args {
            if let Operand::Wire(w) = a {
                let d = defs[*w as usize];
                if !preds[i].contains(&d) {
                    preds[i].push(d);
                    succs[d].push(i);
                }
            }
        }
    }
    let sources = (0..n).filter(|&i| preds[i].is_empty()).collect();
    let sinks = (0..n).filter(|&i| succs[i].is_empty()).collect();
    let topo = super::parse::topo_order(prog);
    let mut height = vec![1u32; n];
    for &i in topo.iter().rev() {
        for &s in &succs[i] {
            height[i] = height[i].max(height[s] + 1);
        }
    }
    DependenceDag {
        preds,
        succs,
        sources,
        sinks,
        topo,
        height,
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_netlist;
    use super::*;

    #[test]
    fn counter_shape() {
        let src = "\
design counter
reg count 4
w0:4 = add count.cur, 1:4
count.next = mov w0
";
        let p = parse_netlist(src).unwrap();
        let d = build_dag(&p);
        assert_eq!(d.sources, vec![0]);
        assert_eq!(d.sinks, vec![1]);
        assert_eq!(d.height[0], 2);
        assert_eq!(d.height[1], 1);
    }
}
