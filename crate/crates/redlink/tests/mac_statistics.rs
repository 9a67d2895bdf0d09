//! Long-run statistical properties of the MAC layer that need larger sample
//! sizes than the unit tests carry.

use redlink::mac::{ChannelConfig, DataLossModel};
use redlink::scenario::Scenario;
use redlink::sim::run_simulation;
use redlink::time::millis;
use redlink::traffic::{StreamConfig, StreamKind};

fn lossy_unicast(p_loss: f64, retry_limit: u32, count: u64, tc: u64) -> Scenario {
    let mut ch = ChannelConfig::new(165).unwrap();
    ch.retry_limit = retry_limit;
    ch.loss_model.data = DataLossModel::Bernoulli { p_loss };
    Scenario {
        name: "mac-stats".into(),
        seed: 31_337,
        duration_ms: ((count + 2) * tc) / millis(1) + 1,
        channels: vec![ch],
        ap: Default::default(),
        impairments: Default::default(),
        streams: vec![StreamConfig {
            kind: StreamKind::UnicastUp,
            tc,
            payload: 50,
            channels: vec![165],
            count: Some(count),
            start_phase: 0,
        }],
        loads: vec![],
        aci_experiment: None,
    }
}

/// With independent per-attempt losses p and retry budget r, delivery fails
/// only when all r+1 attempts lose the data frame: rate ~ p^(r+1). Checked at
/// p=0.1, r=3 -> 1e-4, within +/-50% relative at N=1e7.
#[test]
fn retry_failure_rate_follows_power_law() {
    let n = 10_000_000u64;
    let sc = lossy_unicast(0.1, 3, n, millis(1));
    let out = run_simulation(&sc).unwrap();
    let recs = &out.channel_records[&165];
    assert_eq!(recs.len(), n as usize);
    let failures = recs.iter().filter(|r| r.data_lost).count() as f64;
    let rate = failures / n as f64;
    let expected = 0.1f64.powi(4);
    assert!(
        rate >= expected * 0.5 && rate <= expected * 1.5,
        "failure rate {rate:.2e} outside +/-50% of {expected:.2e} ({failures} failures)"
    );
}

/// Two runs on separate threads share nothing and both reproduce the
/// single-threaded result.
#[test]
fn runs_are_self_contained_across_threads() {
    let sc = lossy_unicast(0.2, 2, 2_000, millis(1));
    let baseline = run_simulation(&sc).unwrap().channel_records;
    let (a, b) = std::thread::scope(|s| {
        let sc_a = sc.clone();
        let sc_b = sc.clone();
        let ha = s.spawn(move || run_simulation(&sc_a).unwrap().channel_records);
        let hb = s.spawn(move || run_simulation(&sc_b).unwrap().channel_records);
        (ha.join().unwrap(), hb.join().unwrap())
    });
    assert_eq!(a, baseline);
    assert_eq!(b, baseline);
}
