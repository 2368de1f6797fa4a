//! Reports do not depend on record order, and seeded operations repeat.

use fairlens_core::engine::{
    awareness_check, compute_report, subsample, AwarenessConfig, Criterion, LabeledDataset, LabeledRecord,
    ReportConfig, SampleConfig, SliceFilter,
};
use fairlens_core::{ExtendedReal, Timestamp};
use proptest::prelude::*;

fn build(rows: &[(u8, u8, bool, f64)]) -> LabeledDataset {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, &(sex, race, y, score))| {
            LabeledRecord::new(format!("rec-{i:04}"), y)
                .with_score(score)
                .with_attr("sex", ["F", "M"][sex as usize % 2])
                .with_attr("race", ["a", "b", "c"][race as usize % 3])
                .with_attr("income", format!("{}", (score * 1000.0).round()))
        })
        .collect();
    LabeledDataset::new(
        "perm",
        records,
        vec!["sex".into(), "race".into()],
        vec!["income".into()],
        Timestamp::from_unix(1_700_000_000).unwrap(),
    )
    .unwrap()
}

fn reorder(d: &LabeledDataset, order: &[usize]) -> LabeledDataset {
    let records = order.iter().map(|&i| d.records()[i].clone()).collect();
    LabeledDataset::new(
        d.name(),
        records,
        d.protected_attributes().to_vec(),
        d.declared_features().to_vec(),
        d.created_at(),
    )
    .unwrap()
}

fn rows() -> impl Strategy<Value = Vec<(u8, u8, bool, f64)>> {
    prop::collection::vec((0u8..2, 0u8..3, any::<bool>(), 0.0f64..=1.0), 2..80)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_digest_ignores_record_order(rows in rows(), seed in any::<u64>()) {
        let d = build(&rows);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.reverse();
        order.rotate_left((seed % rows.len() as u64) as usize);
        let shuffled = reorder(&d, &order);
        let mut config = ReportConfig::new(
            vec![Criterion::DemographicParity, Criterion::EqualizedOdds, Criterion::Unawareness, Criterion::Awareness],
            vec!["sex".into(), "race".into()],
        );
        config.sample = Some(SampleConfig { fraction: 0.75, seed });
        let t = Timestamp::from_unix(1_700_000_500).unwrap();
        match (compute_report(&d, &config, t), compute_report(&shuffled, &config, t)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.digest().unwrap(), b.digest().unwrap()),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn subsample_is_order_invariant_and_sized(rows in rows(), seed in any::<u64>(), fraction in 0.0f64..=1.0) {
        let d = build(&rows);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.reverse();
        let a = subsample(&d, fraction, seed).unwrap();
        let b = subsample(&reorder(&d, &order), fraction, seed).unwrap();
        let ids = |d: &LabeledDataset| {
            let mut v: Vec<String> = d.records().iter().map(|r| r.record_id.clone()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(ids(&a), ids(&b));
        prop_assert_eq!(a.len(), (fraction * rows.len() as f64 + 1e-9).floor() as usize);
    }

    #[test]
    fn lipschitz_violations_iff_ratio_exceeds_bound(rows in rows(), bound in 0.0f64..3.0) {
        let d = build(&rows);
        let config = AwarenessConfig { lipschitz: bound, ..AwarenessConfig::default() };
        let r = awareness_check(&d, &SliceFilter::all(), &config).unwrap();
        let within = match r.max_ratio {
            ExtendedReal::Finite(m) => m <= bound + 1e-12,
            ExtendedReal::Infinite => false,
        };
        prop_assert_eq!(r.violations == 0, within);
        prop_assert_eq!(r.pairs_checked, (rows.len() * (rows.len() - 1) / 2) as u64);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let rows: Vec<_> = (0..60).map(|i| ((i % 2) as u8, (i % 3) as u8, i % 4 < 2, (i as f64) / 60.0)).collect();
    let d = build(&rows);
    let mut config = ReportConfig::new(vec![Criterion::EqualizedOpportunity], vec!["sex".into(), "race".into()]);
    config.sample = Some(SampleConfig { fraction: 0.5, seed: 11 });
    let t = Timestamp::from_unix(0).unwrap();
    let a = fairlens_core::canonical::to_canonical_bytes(&compute_report(&d, &config, t).unwrap()).unwrap();
    let b = fairlens_core::canonical::to_canonical_bytes(&compute_report(&d, &config, t).unwrap()).unwrap();
    assert_eq!(a, b);
}
