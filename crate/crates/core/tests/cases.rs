mod common;

use alc::netmodel::{build_incidence, read_case, BusKind};
use alc::olc::{solve_olc, OlcProblem, DEFAULT_TOLERANCE};

#[test]
fn ieee39_matches_published_parameters() {
    let net = read_case(&common::data("ieee39.json")).unwrap();
    assert_eq!(net.bus_count(), 39);
    assert_eq!(net.base_mva(), 100.0);
    for b in net.buses() {
        let generator = (29..=39).contains(&b.id);
        assert_eq!(b.kind == BusKind::Generator, generator, "bus {}", b.id);
        assert_eq!(b.damping, 1.0);
        if !generator {
            let theta = if b.id <= 5 { 1.0 } else { 5.0 };
            assert_eq!(b.theta, Some(theta), "bus {}", b.id);
            assert_eq!((b.d_min, b.d_max), (Some(-0.4), Some(0.4)), "bus {}", b.id);
        }
    }
    assert_eq!(net.generator_count(), 11);
    let inc = build_incidence(&net).unwrap();
    assert_eq!(inc.line_count(), 46);
    assert!(inc.warnings.is_empty(), "{:?}", inc.warnings);
}

#[test]
fn cheap_ieee39_loads_adjust_more() {
    let net = read_case(&common::data("ieee39.json")).unwrap();
    let mut prob = OlcProblem::from_network(net).unwrap();
    for id in [1, 6, 9, 16] {
        let i = prob.network.index_of(id).unwrap();
        prob.p_in[i] -= 1.0;
    }
    let sol = solve_olc(&prob, DEFAULT_TOLERANCE).unwrap();
    let ids: Vec<usize> = prob.network.buses().iter().map(|b| b.id).collect();
    let mean = |pred: &dyn Fn(usize) -> bool| {
        let v: Vec<f64> = ids
            .iter()
            .zip(&sol.d)
            .filter(|(id, _)| pred(**id))
            .map(|(_, d)| d.abs())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let cheap = mean(&|id| id <= 5);
    let dear = mean(&|id| (6..=28).contains(&id));
    // unclamped loads share one marginal cost, so |d| scales with 1/theta
    assert!((cheap / dear - 5.0).abs() < 1e-6, "{cheap} vs {dear}");
    assert!(sol.d.iter().all(|d| d.abs() < 0.4));
    let total: f64 = sol.d.iter().sum();
    assert!((total + 4.0).abs() < 1e-7);
}

#[test]
fn small_fixtures_have_expected_shape() {
    let two = read_case(&common::data("two_bus.json")).unwrap();
    assert_eq!((two.bus_count(), two.line_count(), two.generator_count()), (2, 1, 1));
    let area = read_case(&common::data("two_area.json")).unwrap();
    assert_eq!(area.areas().len(), 2);
    let inc = build_incidence(&area).unwrap();
    assert!(inc.internal.len() < inc.line_count());
}
