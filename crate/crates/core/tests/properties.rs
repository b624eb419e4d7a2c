use proptest::prelude::*;

use rammatch::nfa::build_nfa;
use rammatch::regex_ast::print;
use rammatch::subseq::subsequence_naive;
use rammatch::{
    amatch, approx_dp_naive, edit_distance_4r, edit_distance_naive, parse, CompiledRegex, Engine,
    SubseqIndex,
};

fn regex() -> impl Strategy<Value = String> {
    let leaf = prop::sample::select(vec!["a", "b", "c", "\\*", "\\("]).prop_map(str::to_string);
    leaf.prop_recursive(5, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("{l}{r}")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}|{r})")),
            inner.prop_map(|r| format!("({r})*")),
        ]
    })
}

fn text(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(b"abc*(".to_vec()), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_print_round_trip(p in regex()) {
        let tree = parse(&p).unwrap();
        let printed = print(&tree);
        let again = parse(&printed).unwrap();
        prop_assert!(tree.same_structure(&again));
        prop_assert_eq!(print(&again), printed);
    }

    #[test]
    fn parser_total_on_arbitrary_bytes(bytes in prop::collection::vec(any::<u8>(), 0..40)) {
        if let Err(e) = parse(&bytes) {
            prop_assert!(e.offset <= bytes.len());
        }
    }

    #[test]
    fn tabulated_match_equals_simulation(p in regex(), q in text(16), k in prop::sample::select(vec![16u32, 24])) {
        let expected = build_nfa(&parse(&p).unwrap()).accepts_naive(&q);
        let re = CompiledRegex::new(&p, k).unwrap();
        prop_assert_eq!(re.is_match(&q), expected);
        prop_assert_eq!(re.trace(&q), re.nfa().trace_naive(&q));
    }

    #[test]
    fn approx_equals_recurrence(p in regex(), q in text(10), d in 0usize..4) {
        prop_assert_eq!(amatch(&p, &q, d, 16).unwrap(), approx_dp_naive(&p, &q, d).unwrap());
    }

    #[test]
    fn approx_at_zero_is_exact(p in regex(), q in text(10)) {
        let exact = build_nfa(&parse(&p).unwrap()).accepts_naive(&q);
        prop_assert_eq!(amatch(&p, &q, 0, 16).unwrap(), exact);
    }

    #[test]
    fn edit_distance_equals_wagner_fischer(
        s in prop::collection::vec(0u16..5, 0..60),
        t in prop::collection::vec(0u16..5, 0..60),
        k in prop::sample::select(vec![16u32, 24, 32]),
    ) {
        prop_assert_eq!(edit_distance_4r(&s, &t, k).unwrap(), edit_distance_naive(&s, &t));
    }

    #[test]
    fn edit_distance_is_a_metric(s in text(20), t in text(20), u in text(20)) {
        let d = |a: &[u8], b: &[u8]| edit_distance_4r(a, b, 16).unwrap();
        prop_assert_eq!(d(&s, &s), 0);
        prop_assert_eq!(d(&s, &t), d(&t, &s));
        prop_assert!(d(&s, &u) <= d(&s, &t) + d(&t, &u));
    }

    #[test]
    fn subsequence_engines_equal_scan(t in text(300), q in text(12)) {
        let expected = subsequence_naive(&t, &q);
        for engine in Engine::ALL {
            let idx = SubseqIndex::build(&t, engine);
            prop_assert_eq!(idx.query(&q), expected);
            let mut bytes = Vec::new();
            idx.write_to(&mut bytes).unwrap();
            let back = SubseqIndex::<u8>::read_from(bytes.as_slice()).unwrap();
            prop_assert_eq!(&back, &idx);
            prop_assert_eq!(back.text(), t.clone());
        }
    }
}
