mod common;

use common::{assert_golden, fixture, knapsack};
use omt_milp::corpus::{self, check_fidelity, expected_node_map, ALL_CASES};
use omt_milp::emit::{emit_lp, emit_mps, parse_model, write_model};
use omt_milp::lowering::{lower_model, LowerOptions};

#[test]
fn knapsack_fixtures() {
    let model = knapsack();
    let doc = write_model(&model);
    assert_golden("knapsack.json", &doc);
    assert_eq!(parse_model(&fixture("knapsack.json")).unwrap(), model);
    let form = lower_model(&model, &LowerOptions::default()).unwrap();
    assert_golden("knapsack.lp", &emit_lp(&form).unwrap());
    assert_golden("knapsack.mps", &emit_mps(&form).unwrap());
}

#[test]
fn corpus_fixtures() {
    for case in ALL_CASES {
        let model = corpus::build(case, &case.default_scale()).unwrap();
        assert_golden(&format!("corpus/{case}.json"), &write_model(&model));
        assert_eq!(parse_model(&fixture(&format!("corpus/{case}.json"))).unwrap(), model, "{case}");

        let map = serde_json::to_string_pretty(expected_node_map(case)).unwrap() + "\n";
        assert_golden(&format!("corpus/{case}.node_map.json"), &map);
        let shipped: corpus::NodeMap = serde_json::from_str(&fixture(&format!("corpus/{case}.node_map.json"))).unwrap();
        let fixture_model = parse_model(&fixture(&format!("corpus/{case}.json"))).unwrap();
        let report = check_fidelity(case, &fixture_model);
        assert!(report.holds(), "{case}: {report:?}");
        let shipped_sets: Vec<_> = shipped.sets.keys().collect();
        let observed_sets: Vec<_> = report.observed.keys().collect();
        assert_eq!(shipped_sets, observed_sets, "{case}");
    }
}
