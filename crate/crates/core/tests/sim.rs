use bgsched::debt::{DebtKind, SnapPolicy};
use bgsched::sim::{compare_policies, run, ForecastSource, PolicyKind, SimConfig, SimMetrics};
use bgsched::trace::{synthesize_series, BinStats, IntensitySeries, SyntheticProfile};
use proptest::prelude::*;

fn bin(reads: u64, writes: u64, unique: f64) -> BinStats {
    let mut b = BinStats {
        total_iops: reads + writes,
        read_iops: reads,
        write_iops: writes,
        write_blocks: writes,
        unique_write_fraction: unique,
        ..BinStats::default()
    };
    b.refresh_read_ratio();
    b
}

fn series(bins: Vec<BinStats>) -> IntensitySeries {
    IntensitySeries {
        interval: 600.0,
        start_epoch: 0.0,
        bins,
    }
}

fn no_snaps(policy: PolicyKind) -> SimConfig {
    let mut c = SimConfig::default().with_policy(policy);
    c.debt.snap = SnapPolicy {
        luns: 0,
        ..SnapPolicy::default()
    };
    c
}

fn check_consistency(m: &SimMetrics) {
    let t = &m.totals;
    assert_eq!(t.debt_created, t.debt_processed + t.debt_outstanding);
    for r in &m.records {
        assert!(r.pool_used + r.debt_tied <= r.pool_total, "bin {}", r.bin);
        assert_eq!(r.c_fg + r.c_bg, 64);
    }
    let expect = if t.offered == 0 {
        0.0
    } else {
        100.0 * (t.queued_latency + t.queued_oor) as f64 / t.offered as f64
    };
    assert!((m.slo_violation_fraction - expect).abs() < 1e-12);
    let rows = m.records.len() - m.measured_from;
    assert_eq!(t.bins, rows);
}

#[test]
fn zero_load_is_idle() {
    let s = series(vec![BinStats::default(); 300]);
    for policy in [PolicyKind::Fixed, PolicyKind::Dynamic] {
        let m = run(
            &s,
            &SimConfig::default().with_policy(policy),
            &ForecastSource::TrainPrefix,
        )
        .unwrap();
        assert_eq!(m.totals.offered, 0);
        assert_eq!(m.slo_violation_fraction, 0.0);
        assert_eq!(m.totals.debt_created, 0);
        assert!(m.records.iter().all(|r| r.c_bg == 64 && r.cff == 0));
        check_consistency(&m);
    }
}

#[test]
fn full_fg_capacity_is_served_without_delay() {
    // 64 cores × 50 IOPS × 600 s per bin, all unique writes, no snapshots.
    let cap = 64 * 50 * 600;
    let s = series(vec![bin(cap / 2, cap / 2, 1.0); 300]);
    let m = run(
        &s,
        &no_snaps(PolicyKind::Fixed),
        &ForecastSource::TrainPrefix,
    )
    .unwrap();
    assert_eq!(m.totals.queued_latency + m.totals.queued_oor, 0);
    assert_eq!(m.totals.served, m.totals.offered);
    assert_eq!(m.totals.debt_created, 0);

    let over = series(vec![bin(cap / 2 + 1, cap / 2, 1.0); 300]);
    let m = run(
        &over,
        &no_snaps(PolicyKind::Fixed),
        &ForecastSource::TrainPrefix,
    )
    .unwrap();
    assert!(m.totals.queued_latency > 0);
    assert_eq!(m.totals.queued_oor, 0);
}

#[test]
fn backlog_is_served_when_capacity_frees() {
    let cap = 64 * 50 * 600;
    let mut bins = vec![bin(cap, 0, 1.0); 3];
    bins[0] = bin(cap + 5000, 0, 1.0);
    bins[1] = bin(cap - 5000, 0, 1.0);
    let m = run(
        &series(bins),
        &no_snaps(PolicyKind::Fixed),
        &ForecastSource::TrainPrefix,
    )
    .unwrap();
    assert_eq!(m.records[0].queued_latency, 5000);
    assert_eq!(m.records[0].backlog, 5000);
    assert_eq!(m.records[1].served, cap);
    assert_eq!(m.records[1].backlog, 0);
    assert_eq!(m.records[1].queued_latency, 0);
}

#[test]
fn full_pool_blocks_writes_as_out_of_space() {
    let mut cfg = no_snaps(PolicyKind::Fixed);
    cfg.pool_total_blocks = 1_000_000;
    cfg.initial_utilization = 0.9;
    let s = series(vec![bin(1000, 60_000, 1.0); 10]);
    let m = run(&s, &cfg, &ForecastSource::TrainPrefix).unwrap();
    assert!(m.totals.queued_oor > 0);
    assert!(m.records.iter().all(|r| r.pool_used <= r.pool_total));
    // Reads keep flowing while writes wait for space.
    assert!(m.records.iter().all(|r| r.served >= 1000 || r.offered == 0));
    check_consistency(&m);
}

#[test]
fn overwrites_create_and_drain_debt() {
    let s = series(vec![bin(10_000, 50_000, 0.4); 200]);
    let m = run(
        &s,
        &no_snaps(PolicyKind::Fixed),
        &ForecastSource::TrainPrefix,
    )
    .unwrap();
    assert_eq!(
        m.totals.debt_created_by_kind[&DebtKind::OverwriteGc],
        200 * 30_000
    );
    assert_eq!(m.totals.debt_created_by_kind[&DebtKind::SnapDelete], 0);
    assert!(m.totals.debt_processed > 0);
    check_consistency(&m);
}

#[test]
fn snapshot_holds_expire_into_debt() {
    let s = synthesize_series(&SyntheticProfile::vdi(2000.0, 3.0), 5).unwrap();
    let m = run(
        &s,
        &SimConfig::default().with_policy(PolicyKind::Fixed),
        &ForecastSource::TrainPrefix,
    )
    .unwrap();
    assert!(m.totals.debt_created_by_kind[&DebtKind::SnapDelete] > 0);
    check_consistency(&m);
}

#[test]
fn runs_are_deterministic() {
    let mut p = SyntheticProfile::vdi(5000.0, 4.0);
    p.noise = 0.1;
    let s = synthesize_series(&p, 11).unwrap();
    let cfg = SimConfig::default();
    let a = compare_policies(&s, &cfg, &ForecastSource::TrainPrefix).unwrap();
    let b = compare_policies(&s, &cfg, &ForecastSource::TrainPrefix).unwrap();
    assert_eq!(a, b);
    let sa = serde_json::to_string(&a.dynamic.summary(&cfg)).unwrap();
    let sb = serde_json::to_string(&b.dynamic.summary(&cfg)).unwrap();
    assert_eq!(sa, sb);
    check_consistency(&a.fixed);
    check_consistency(&a.dynamic);
}

#[test]
fn dynamic_needs_training_history() {
    let s = series(vec![BinStats::default(); 100]);
    let err = run(&s, &SimConfig::default(), &ForecastSource::TrainPrefix).unwrap_err();
    assert!(matches!(err, bgsched::Error::InsufficientHistory { .. }));
    let mut cfg = SimConfig::default();
    cfg.hw.interval = 300.0;
    assert!(matches!(
        run(&s, &cfg, &ForecastSource::TrainPrefix),
        Err(bgsched::Error::Config(_))
    ));
}

#[test]
fn warmup_exclusion_shrinks_the_window() {
    let s = synthesize_series(&SyntheticProfile::vdi(3000.0, 3.0), 1).unwrap();
    let cfg = SimConfig {
        exclude_warmup: true,
        ..SimConfig::default()
    };
    let m = run(&s, &cfg, &ForecastSource::TrainPrefix).unwrap();
    assert_eq!(m.measured_from, 288);
    assert_eq!(m.totals.bins, s.len() - 288);
    check_consistency(&m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn capacity_and_conservation_hold(
        loads in prop::collection::vec((0u64..1_200_000, 0u64..1_000_000, 0.0f64..=1.0), 1..120),
        util in 0.0f64..0.9,
        luns in 0u32..4,
        total in 2_000_000u64..50_000_000,
        fixed in any::<bool>(),
    ) {
        let s = series(loads.iter().map(|&(r, w, u)| bin(r, w, u)).collect());
        let mut cfg = SimConfig::default().with_policy(PolicyKind::Fixed);
        cfg.debt.snap.luns = luns;
        cfg.pool_total_blocks = total;
        cfg.initial_utilization = util;
        let m = if fixed {
            run(&s, &cfg, &ForecastSource::TrainPrefix).unwrap()
        } else {
            // Flat forecaster fitted on a synthetic history.
            let models = bgsched::forecast::ChannelModels::fit(
                &synthesize_series(&SyntheticProfile::flat(1000.0, 2.0), 0).unwrap(),
                &cfg.dynamic.forecast,
            ).unwrap();
            run(&s, &cfg.with_policy(PolicyKind::Dynamic), &ForecastSource::Models(models)).unwrap()
        };
        let t = &m.totals;
        prop_assert_eq!(t.debt_created, t.debt_processed + t.debt_outstanding);
        for r in &m.records {
            prop_assert!(r.pool_used + r.debt_tied <= r.pool_total);
            prop_assert_eq!(r.c_fg + r.c_bg, 64);
            prop_assert!(r.bg_ops <= r.bg_budget);
            // Work conservation: FG cores go idle only when nothing
            // eligible is waiting.
            if r.queued_latency > 0 {
                prop_assert_eq!(r.served, r.c_fg as u64 * 30_000);
            }
        }
        let served: u64 = m.records.iter().map(|r| r.served).sum();
        let left = m.records.last().unwrap().backlog;
        prop_assert_eq!(served + left, t.offered);
    }
}
