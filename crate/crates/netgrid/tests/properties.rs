//! Property tests over randomly generated designs: textual round-trips,
//! interpreter equivalence across lowering and partitioning, and pass
//! idempotence.

use proptest::prelude::*;

use netgrid::gen::{random_dag, DagConfig};
use netgrid::ir::{interp::interpret_netlist, parse_netlist, print_netlist, NetlistProgram};
use netgrid::lower::{build::lower_netlist, interp::interpret_lower, text};
use netgrid::opt::{optimize, OptConfig};

prop_compose! {
    fn design()(
        seed in 0u64..1 << 32,
        instrs in 10usize..120,
        regs in 2usize..10,
        max_width in prop::sample::select(vec![4u32, 8, 16, 17, 48]),
        mems in 0usize..3,
        logic_bias in any::<bool>(),
        displays in 0usize..3,
    ) -> NetlistProgram {
        random_dag(seed, &DagConfig { instrs, regs, max_width, mems, logic_bias, displays })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn netlist_text_round_trips(net in design()) {
        let text = print_netlist(&net);
        let back = parse_netlist(&text).expect("printed netlists parse");
        prop_assert_eq!(net, back);
    }

    #[test]
    fn lowering_preserves_semantics(net in design()) {
        let want = interpret_netlist(&net, 24);
        let low = lower_netlist(&net).unwrap();
        let got = interpret_lower(&low, 24).unwrap();
        prop_assert_eq!(&want.regs, &got.regs);
        prop_assert_eq!(&want.displays, &got.displays);
        prop_assert_eq!(&want.stop, &got.stop);
        prop_assert_eq!(&want.mems, &got.mems);
    }

    #[test]
    fn optimization_preserves_semantics_and_is_idempotent(net in design()) {
        let want = interpret_netlist(&net, 24);
        let mut low = lower_netlist(&net).unwrap();
        optimize(&mut low, &OptConfig::default());
        let got = interpret_lower(&low, 24).unwrap();
        prop_assert_eq!(&want.regs, &got.regs);
        prop_assert_eq!(&want.stop, &got.stop);

        let once = low.clone();
        optimize(&mut low, &OptConfig::default());
        prop_assert_eq!(once, low);
    }

    #[test]
    fn partitioning_preserves_semantics(net in design()) {
        let want = interpret_netlist(&net, 24);
        let mut low = lower_netlist(&net).unwrap();
        optimize(&mut low, &OptConfig::default());
        let mut low = netgrid::parallel::split(&low).unwrap();
        netgrid::parallel::merge_balanced(&mut low, 6).unwrap();
        netgrid::cf::synthesize(&mut low);
        let got = interpret_lower(&low, 24).unwrap();
        prop_assert_eq!(&want.regs, &got.regs);
        prop_assert_eq!(&want.displays, &got.displays);
        prop_assert_eq!(&want.stop, &got.stop);
    }

    #[test]
    fn lowered_text_round_trips(net in design()) {
        let low = lower_netlist(&net).unwrap();
        let back = text::parse_lower(&text::print_lower(&low)).unwrap();
        prop_assert_eq!(low, back);
    }
}
