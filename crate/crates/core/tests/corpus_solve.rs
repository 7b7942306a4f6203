use std::time::Instant;

use omt_milp::corpus::{build_with_witness, ALL_CASES};
use omt_milp::oracle::{solve_by_enumeration, EnumerationLimits, SolveStatus};

#[test]
fn default_cases_solve() {
    let limits = EnumerationLimits { max_points: u128::MAX };
    for case in ALL_CASES {
        let built = build_with_witness(case, &case.default_scale()).unwrap();
        let start = Instant::now();
        let report = solve_by_enumeration(&built.model, &limits).unwrap();
        println!("{case}: {:?} value {:?} points {} in {:?}", report.status, report.objective_value.map(|v| v.to_string()), report.points_enumerated, start.elapsed());
        assert_eq!(report.status, SolveStatus::Optimal);
    }
}
