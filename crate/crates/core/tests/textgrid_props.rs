use phonprep::textgrid::{
    diagnose_overlaps, merge_interval_tiers, parse_textgrid, rename_tier, stack_tiers, write_textgrid, Interval, IntervalTier,
    Point, PointTier, TextGrid, TextGridError, Tier,
};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => Just(String::new()),
        5 => "[A-Z]{1,6}",
        1 => "[a-z \"']{1,8}",
        1 => "[é ü ß 中 文]{1,4}",
    ]
}

/// A normalized tier over [0, xmax] built from sorted cut points (in microseconds).
fn tier(name: String, xmax_us: i64) -> impl Strategy<Value = IntervalTier> {
    (prop::collection::btree_set(1..xmax_us, 0..50), prop::collection::vec(label(), 51)).prop_map(move |(cuts, labels)| {
        let mut edges: Vec<i64> = std::iter::once(0).chain(cuts).chain(std::iter::once(xmax_us)).collect();
        edges.dedup();
        let intervals = edges
            .windows(2)
            .zip(labels)
            .map(|(w, l)| Interval::new(w[0] as f64 / 1e6, w[1] as f64 / 1e6, l).unwrap())
            .collect();
        IntervalTier::with_intervals(name.clone(), 0.0, xmax_us as f64 / 1e6, intervals)
    })
}

fn grid() -> impl Strategy<Value = TextGrid> {
    (1_000i64..30_000_000, 1usize..=5).prop_flat_map(|(xmax, n)| {
        let tiers: Vec<_> = (0..n).map(|i| tier(format!("tier{i}"), xmax)).collect();
        tiers.prop_map(move |ts| TextGrid::with_tiers(0.0, xmax as f64 / 1e6, ts.into_iter().map(Tier::from).collect()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(g in grid()) {
        let bytes = write_textgrid(&g).unwrap();
        let back = parse_textgrid(&bytes).unwrap();
        prop_assert!(back.approx_eq(&g, 1e-6));
        for t in back.interval_tiers() {
            prop_assert!(diagnose_overlaps(t).is_empty());
        }
        // a second pass is byte-stable
        prop_assert_eq!(write_textgrid(&back).unwrap(), bytes);
    }

    #[test]
    fn normalized_tiers_partition_their_span(g in grid()) {
        for t in g.normalized().unwrap().interval_tiers() {
            prop_assert_eq!(t.intervals.first().unwrap().xmin, t.xmin);
            prop_assert_eq!(t.intervals.last().unwrap().xmax, t.xmax);
            for w in t.intervals.windows(2) {
                prop_assert_eq!(w[0].xmax, w[1].xmin);
            }
        }
    }

    #[test]
    fn stacking_keeps_every_tier(a in grid(), b in grid()) {
        let s = stack_tiers(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(s.tiers.len(), a.tiers.len() + b.tiers.len());
        prop_assert_eq!(s.xmax, a.xmax.max(b.xmax));
        let labeled = |g: &TextGrid| g.interval_tiers().map(|t| t.labeled().count()).sum::<usize>();
        prop_assert_eq!(labeled(&s), labeled(&a) + labeled(&b));
    }

    #[test]
    fn merging_disjoint_tiers_keeps_labels(g in grid()) {
        // split tier 1 into even/odd labeled intervals, then merge back
        let t = g.tiers[0].as_interval().unwrap();
        let (even, odd): (Vec<_>, Vec<_>) = t.labeled().cloned().enumerate().partition(|(i, _)| i % 2 == 0);
        let strip = |v: Vec<(usize, Interval)>| v.into_iter().map(|(_, iv)| iv).collect();
        let parts = TextGrid::with_tiers(g.xmin, g.xmax, vec![
            IntervalTier::with_intervals("e", g.xmin, g.xmax, strip(even)).into(),
            IntervalTier::with_intervals("o", g.xmin, g.xmax, strip(odd)).into(),
        ]);
        let merged = merge_interval_tiers(&parts, &[1, 2], "m").unwrap();
        prop_assert_eq!(merged.tiers.len(), 1);
        let m = merged.interval_tier("m").unwrap();
        prop_assert_eq!(m.labeled().collect::<Vec<_>>(), t.labeled().collect::<Vec<_>>());
    }
}

#[test]
fn point_tiers_survive() {
    let g = TextGrid::with_tiers(
        0.0,
        2.0,
        vec![
            IntervalTier::with_intervals("w", 0.0, 2.0, vec![Interval::new(0.5, 1.0, "A").unwrap()]).into(),
            Tier::Point(PointTier {
                name: "p".into(),
                xmin: 0.0,
                xmax: 2.0,
                points: vec![Point { time: 0.75, mark: "burst".into() }],
            }),
        ],
    );
    let back = parse_textgrid(&write_textgrid(&g).unwrap()).unwrap();
    assert_eq!(back.tiers[1], g.tiers[1]);
    assert_eq!(back.interval_tier("w").unwrap().intervals.len(), 3);
}

#[test]
fn cascading_overlaps_found_pairwise() {
    let t = IntervalTier::with_intervals(
        "w",
        0.0,
        5.0,
        vec![
            Interval::new(0.0, 2.0, "A").unwrap(),
            Interval::new(1.0, 3.0, "B").unwrap(),
            Interval::new(2.5, 4.0, "C").unwrap(),
        ],
    );
    let found = diagnose_overlaps(&t);
    assert_eq!(found.len(), 2);
    assert!(matches!(t.normalized(), Err(TextGridError::Overlap { .. })));
}

#[test]
fn rename_by_position() {
    let g = TextGrid::with_tiers(0.0, 1.0, vec![IntervalTier::new("AutoVOT", 0.0, 1.0).into()]);
    let r = rename_tier(&g, 1, "P").unwrap();
    assert_eq!(r.tiers[0].name(), "P");
    assert!(matches!(rename_tier(&g, 2, "x"), Err(TextGridError::IndexOutOfRange { .. })));
}
