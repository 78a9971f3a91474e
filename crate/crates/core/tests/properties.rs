use std::collections::BTreeSet;

use chrono::NaiveDate;
use gvar_spill::calendar::{Window, YearMonth};
use gvar_spill::estimation::{estimate_arx, ArxEstimate, ArxSpec};
use gvar_spill::gvar::{assemble, solve_reduced_form, GvarSystem, DEFAULT_COND_BOUND};
use gvar_spill::ingest::{
    default_state_meta, read_activity_panel, read_declarations, write_activity_panel, write_declarations, ActivityPanel,
    CountyHits, DeclarationColumns, DeclarationRecord, EventGroup, IngestOptions, PanelColumns, Taxonomy,
};
use gvar_spill::irf::{compute_irf, ShockScenario};
use gvar_spill::shocks::{build_state_shocks, default_filter};
use gvar_spill::states::StateCode;
use gvar_spill::synth::synthetic_labels;
use gvar_spill::weights::{read_weights, write_weights, WeightScheme};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn code(s: &str) -> StateCode {
    s.parse().unwrap()
}

fn strengths(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.0f64..10.0, n * n).prop_map(move |v| {
        let mut b = DMatrix::from_vec(n, n, v);
        // keep every row linked
        for i in 0..n {
            b[(i, (i + 1) % n)] += 0.5;
        }
        b
    })
}

fn system(n: usize, coefs: &[f64], b: &DMatrix<f64>) -> GvarSystem {
    let scheme = WeightScheme::from_strengths("p", synthetic_labels(n).unwrap(), b).unwrap();
    let eqs: Vec<ArxEstimate> = (0..n)
        .map(|i| {
            let c = &coefs[i * 4..i * 4 + 4];
            ArxEstimate::from_coefficients(0.0, vec![c[0]], c[1], vec![c[2]], c[3], 1.0)
        })
        .collect();
    solve_reduced_form(assemble(&eqs, &scheme).unwrap(), DEFAULT_COND_BOUND).unwrap()
}

fn record(id: &str, state: &str, incident: &str, day: (i32, u32, u32), counties: CountyHits) -> DeclarationRecord {
    DeclarationRecord {
        declaration_id: id.into(),
        state: code(state),
        incident_type: incident.into(),
        group: Taxonomy::fema_default().group(incident),
        begin_date: NaiveDate::from_ymd_opt(day.0, day.1, day.2).unwrap(),
        end_date: None,
        counties,
    }
}

fn decl_strategy() -> impl Strategy<Value = DeclarationRecord> {
    let states = ["CT", "DE", "RI", "VT"];
    let incidents = ["Flood", "Severe Storm", "Hurricane", "Snowstorm", "Fire", "Biological"];
    (0..4usize, 0..6usize, 1..=12u32, 1..=28u32, prop::collection::btree_set(0..8u32, 1..5), any::<bool>(), 0..1000u32)
        .prop_map(move |(s, k, m, d, names, listed, id)| {
            let counties = if listed {
                CountyHits::listed(names.into_iter().map(|c| format!("County {c}")))
            } else {
                CountyHits::counted(names.len() as u32)
            };
            record(&format!("X-{id}"), states[s], incidents[k], (2010, m, d), counties)
        })
}

fn window() -> Window {
    Window::new(YearMonth::new(2010, 1).unwrap(), YearMonth::new(2010, 12).unwrap())
}

fn universe() -> Vec<StateCode> {
    ["CT", "DE", "RI", "VT"].iter().map(|s| code(s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weight_rows_sum_to_one_and_ignore_scale(b in strengths(5), k in 0.01f64..100.0) {
        let labels = synthetic_labels(5).unwrap();
        let w1 = WeightScheme::from_strengths("a", labels.clone(), &b).unwrap();
        let w2 = WeightScheme::from_strengths("a", labels, &(&b * k)).unwrap();
        for i in 0..5 {
            prop_assert!((w1.w.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert_eq!(w1.w[(i, i)], 0.0);
        }
        prop_assert!((&w1.w - &w2.w).amax() < 1e-12);
    }

    #[test]
    fn weights_round_trip_through_text(b in strengths(4)) {
        let w = WeightScheme::from_strengths("t", synthetic_labels(4).unwrap(), &b).unwrap();
        let mut buf = Vec::new();
        write_weights(&w, &mut buf).unwrap();
        let back = read_weights("t", buf.as_slice()).unwrap();
        prop_assert_eq!(back, w);
    }

    #[test]
    fn activity_panel_round_trips(values in prop::collection::vec(-1e3f64..1e3, 12 * 3)) {
        let states = vec![code("CT"), code("DE"), code("RI")];
        let dates = window().months();
        let panel = ActivityPanel::new(dates, states.clone(), DMatrix::from_vec(12, 3, values)).unwrap();
        let mut buf = Vec::new();
        write_activity_panel(&panel, &mut buf).unwrap();
        let opts = IngestOptions { delimiter: b',', universe: states, window: window() };
        let back = read_activity_panel(buf.as_slice(), &opts, &PanelColumns::default()).unwrap();
        prop_assert_eq!(back.value, panel);
    }

    #[test]
    fn declarations_round_trip(records in prop::collection::vec(decl_strategy(), 1..12)) {
        let opts = IngestOptions { delimiter: b',', universe: universe(), window: window() };
        let tax = Taxonomy::fema_default();
        let mut buf = Vec::new();
        write_declarations(&records, &mut buf, &DeclarationColumns::default()).unwrap();
        let once = read_declarations(buf.as_slice(), &opts, &DeclarationColumns::default(), &tax).unwrap().value;
        let mut again = Vec::new();
        write_declarations(&once, &mut again, &DeclarationColumns::default()).unwrap();
        let twice = read_declarations(again.as_slice(), &opts, &DeclarationColumns::default(), &tax).unwrap().value;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn adding_a_declaration_never_lowers_shocks(
        records in prop::collection::vec(decl_strategy(), 0..12),
        extra in decl_strategy(),
    ) {
        let meta = default_state_meta(&universe()).unwrap();
        let filter = default_filter();
        let base = build_state_shocks(&records, &meta, &filter, &window()).unwrap();
        let mut more = records.clone();
        more.push(extra);
        let grown = build_state_shocks(&more, &meta, &filter, &window()).unwrap();
        for (a, b) in base.intensity.iter().zip(grown.intensity.iter()) {
            prop_assert!(b >= a);
            prop_assert!((0.0..=1.0).contains(b));
        }
        for (a, b) in base.national.iter().zip(&grown.national) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn non_weather_groups_never_move_shocks(records in prop::collection::vec(decl_strategy(), 0..12)) {
        let meta = default_state_meta(&universe()).unwrap();
        let filter = default_filter();
        let weather: Vec<DeclarationRecord> = records.iter().filter(|r| r.group != EventGroup::NonWeather).cloned().collect();
        let a = build_state_shocks(&records, &meta, &filter, &window()).unwrap();
        let b = build_state_shocks(&weather, &meta, &filter, &window()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn irf_is_linear_in_the_scenario(
        b in strengths(4),
        coefs in prop::collection::vec(-0.25f64..0.25, 16),
        s1 in prop::collection::vec(0.0f64..1.0, 4),
        s2 in prop::collection::vec(0.0f64..1.0, 4),
        a in 0.0f64..1.0,
    ) {
        let sys = system(4, &coefs, &b);
        let v1 = DVector::from_vec(s1);
        let v2 = DVector::from_vec(s2);
        let mix = &v1 * a + &v2 * (1.0 - a);
        let irf = |v: &DVector<f64>| compute_irf(&sys, &ShockScenario::new(v.clone()).unwrap(), 24).unwrap();
        let (r1, r2, rm) = (irf(&v1), irf(&v2), irf(&mix));
        let combined = &r1.responses * a + &r2.responses * (1.0 - a);
        prop_assert!((&rm.responses - &combined).amax() <= 1e-12 * combined.amax().max(1.0));
        let cum = &r1.cumulated * a + &r2.cumulated * (1.0 - a);
        prop_assert!((&rm.cumulated - &cum).amax() <= 1e-11 * cum.amax().max(1.0));
    }

    #[test]
    fn theta_scales_inversely_with_the_shock(k in 0.1f64..10.0, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = 200;
        let s: Vec<f64> = (0..t).map(|_| if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 }).collect();
        let ys: Vec<f64> = (0..t).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut y = vec![0.0; t];
        for i in 1..t {
            y[i] = 0.4 * y[i - 1] + 0.3 * ys[i] - 0.5 * s[i] + rng.random::<f64>() - 0.5;
        }
        let spec = ArxSpec::new(1, 1);
        let base = estimate_arx(&y, &ys, &s, &spec).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| v * k).collect();
        let other = estimate_arx(&y, &ys, &scaled, &spec).unwrap();
        prop_assert!((other.theta * k - base.theta).abs() <= 1e-9 * base.theta.abs().max(1.0));
        prop_assert!((other.beta[0] - base.beta[0]).abs() <= 1e-9);
    }
}

#[test]
fn monotonicity_fixture_counts_distinct_counties_once() {
    let meta = default_state_meta(&universe()).unwrap();
    let a = record("A", "RI", "Flood", (2010, 3, 2), CountyHits::listed(["Kent".into(), "Bristol".into()]));
    let b = record("B", "RI", "Severe Storm", (2010, 3, 20), CountyHits::listed(["Kent".into()]));
    let panel = build_state_shocks(&[a, b], &meta, &default_filter(), &window()).unwrap();
    let ri = universe().iter().position(|s| *s == code("RI")).unwrap();
    assert_eq!(panel.intensity[(2, ri)], 2.0 / 5.0);
    let months: BTreeSet<usize> = (0..12).filter(|&t| panel.intensity[(t, ri)] > 0.0).collect();
    assert_eq!(months, BTreeSet::from([2]));
}
