//! Statistics over latency traces: summaries, distribution curves, the
//! redundant-link composition law, and path-independence assessment.
//!
//! Latencies are nanoseconds internally; summary fields are reported in
//! milliseconds to line up with the usual table layout (mean, sigma, min,
//! percentiles, max, PLR [, PLR']). Lost packets never enter latency
//! statistics but always count toward loss ratios.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no samples provided")]
    Empty,
    #[error("curves must share a grid")]
    GridMismatch,
    #[error("degenerate composition: PLR1 * PLR2 = 1")]
    DegenerateComposition,
    #[error("loss ratio {0} outside [0,1]")]
    InvalidPlr(f64),
}

/// One per-packet latency observation; `latency_ns` is absent for losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencySample {
    pub seq: u64,
    pub latency_ns: Option<u64>,
}

/// Latency statistics block of one stream on one (possibly redundant) link.
/// All latency fields are `None` when nothing was delivered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub n_generated: u64,
    pub n_delivered: u64,
    pub mean_ms: Option<f64>,
    pub std_ms: Option<f64>,
    pub min_ms: Option<f64>,
    pub p50_ms: Option<f64>,
    pub p99_ms: Option<f64>,
    pub p99_9_ms: Option<f64>,
    pub p99_99_ms: Option<f64>,
    pub max_ms: Option<f64>,
    /// Packet loss ratio at the final recipient, percent.
    pub plr_pct: f64,
    /// Loss ratio as inferred from missing ACKs at the sender, percent;
    /// absent for unconfirmed traffic.
    pub plr_prime_pct: Option<f64>,
}

/// Nearest-rank percentile over an already sorted slice: the value at rank
/// ceil(p/100 * n), 1-indexed. Products that land on an integer up to float
/// noise (0.999 * 10000) must not ceil past it.
pub fn percentile_nearest_rank(sorted: &[u64], p: f64) -> u64 {
    assert!(!sorted.is_empty());
    let r = p / 100.0 * sorted.len() as f64;
    let rank = if (r - r.round()).abs() < 1e-9 {
        r.round()
    } else {
        r.ceil()
    }
    .max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

const NS_PER_MS: f64 = 1e6;

/// Summarize delivered latencies and loss counts. `plr_prime` comes from the
/// caller when ACK-based accounting exists (confirmed traffic only).
pub fn summarize(samples: &[LatencySample], plr_prime_pct: Option<f64>) -> StatsSummary {
    let n_generated = samples.len() as u64;
    let mut delivered: Vec<u64> = samples.iter().filter_map(|s| s.latency_ns).collect();
    delivered.sort_unstable();
    let n_delivered = delivered.len() as u64;
    let plr_pct = if n_generated == 0 {
        0.0
    } else {
        100.0 * (n_generated - n_delivered) as f64 / n_generated as f64
    };

    if delivered.is_empty() {
        return StatsSummary {
            n_generated,
            n_delivered,
            mean_ms: None,
            std_ms: None,
            min_ms: None,
            p50_ms: None,
            p99_ms: None,
            p99_9_ms: None,
            p99_99_ms: None,
            max_ms: None,
            plr_pct,
            plr_prime_pct,
        };
    }

    let n = delivered.len() as f64;
    let mean_ns = delivered.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = delivered
        .iter()
        .map(|&v| {
            let d = v as f64 - mean_ns;
            d * d
        })
        .sum::<f64>()
        / n;
    StatsSummary {
        n_generated,
        n_delivered,
        mean_ms: Some(mean_ns / NS_PER_MS),
        std_ms: Some(var.sqrt() / NS_PER_MS),
        min_ms: Some(delivered[0] as f64 / NS_PER_MS),
        p50_ms: Some(percentile_nearest_rank(&delivered, 50.0) as f64 / NS_PER_MS),
        p99_ms: Some(percentile_nearest_rank(&delivered, 99.0) as f64 / NS_PER_MS),
        p99_9_ms: Some(percentile_nearest_rank(&delivered, 99.9) as f64 / NS_PER_MS),
        p99_99_ms: Some(percentile_nearest_rank(&delivered, 99.99) as f64 / NS_PER_MS),
        max_ms: Some(*delivered.last().unwrap() as f64 / NS_PER_MS),
        plr_pct,
        plr_prime_pct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Ccdf,
    Pdf,
}

/// A distribution curve over a latency grid (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct DistCurve {
    pub kind: CurveKind,
    pub grid: Vec<u64>,
    pub values: Vec<f64>,
}

impl DistCurve {
    pub fn is_valid_ccdf(&self) -> bool {
        self.kind == CurveKind::Ccdf
            && self
                .values
                .iter()
                .all(|&v| (0.0..=1.0).contains(&v))
            && self.values.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Empirical CCDF on `grid`: fraction of delivered samples strictly greater
/// than each grid point.
pub fn ccdf(delivered_ns: &[u64], grid: &[u64]) -> Result<DistCurve, AnalysisError> {
    if delivered_ns.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut sorted = delivered_ns.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let values = grid
        .iter()
        .map(|&x| {
            // Count of samples > x via partition point.
            let above = sorted.len() - sorted.partition_point(|&v| v <= x);
            above as f64 / n
        })
        .collect();
    Ok(DistCurve {
        kind: CurveKind::Ccdf,
        grid: grid.to_vec(),
        values,
    })
}

/// Histogram-based PDF with fixed-width bins (density per ns; integrates to
/// one over the observed range). Default bin width 1 us resolves
/// backoff-slot-spaced peaks.
pub fn pdf(delivered_ns: &[u64], bin_width_ns: u64) -> Result<DistCurve, AnalysisError> {
    if delivered_ns.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let lo = *delivered_ns.iter().min().unwrap();
    let hi = *delivered_ns.iter().max().unwrap();
    let n_bins = ((hi - lo) / bin_width_ns + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    for &v in delivered_ns {
        counts[((v - lo) / bin_width_ns) as usize] += 1;
    }
    let n = delivered_ns.len() as f64;
    let grid = (0..n_bins)
        .map(|i| lo + i as u64 * bin_width_ns + bin_width_ns / 2)
        .collect();
    let values = counts
        .iter()
        .map(|&c| c as f64 / (n * bin_width_ns as f64))
        .collect();
    Ok(DistCurve {
        kind: CurveKind::Pdf,
        grid,
        values,
    })
}

/// Closed-form redundant-link CCDF estimate from two independent channels:
///
/// est = [PLR1 (1-PLR2) CCDF2 + PLR2 (1-PLR1) CCDF1
///        + (1-PLR1)(1-PLR2) CCDF1 CCDF2] / (1 - PLR1 PLR2)
pub fn compose_ccdf(
    ccdf1: &DistCurve,
    plr1: f64,
    ccdf2: &DistCurve,
    plr2: f64,
) -> Result<DistCurve, AnalysisError> {
    for plr in [plr1, plr2] {
        if !(0.0..=1.0).contains(&plr) {
            return Err(AnalysisError::InvalidPlr(plr));
        }
    }
    if ccdf1.grid != ccdf2.grid {
        return Err(AnalysisError::GridMismatch);
    }
    let denom = 1.0 - plr1 * plr2;
    if denom <= 0.0 {
        return Err(AnalysisError::DegenerateComposition);
    }
    let values = ccdf1
        .values
        .iter()
        .zip(&ccdf2.values)
        .map(|(&c1, &c2)| {
            (plr1 * (1.0 - plr2) * c2 + plr2 * (1.0 - plr1) * c1
                + (1.0 - plr1) * (1.0 - plr2) * c1 * c2)
                / denom
        })
        .collect();
    Ok(DistCurve {
        kind: CurveKind::Ccdf,
        grid: ccdf1.grid.clone(),
        values,
    })
}

/// Redundant-link loss estimate under path independence: the product of the
/// per-channel loss ratios (both as fractions).
pub fn compose_plr(plr1: f64, plr2: f64) -> f64 {
    plr1 * plr2
}

/// Supremum gap between two curves sharing a grid.
pub fn curve_distance(a: &DistCurve, b: &DistCurve) -> Result<f64, AnalysisError> {
    if a.grid != b.grid {
        return Err(AnalysisError::GridMismatch);
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(xs: &[u64], ys: &[u64]) -> Result<(f64, f64), AnalysisError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / n1 - j as f64 / n2).abs();
        d = d.max(gap);
    }
    let ne = n1 * n2 / (n1 + n2);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, ks_survival(lambda)))
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1}
/// exp(-2 k^2 lambda^2).
fn ks_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IndependenceVerdict {
    Independent,
    Dependent,
}

/// Operating thresholds for the independence verdict; tunable, defaults are
/// desk-scale operating points rather than calibrated constants.
#[derive(Debug, Clone, Copy)]
pub struct IndependenceThresholds {
    /// Max tolerated sup-gap between measured and estimated CCDF.
    pub ks_distance: f64,
    /// Max tolerated relative gap between measured and estimated PLR.
    pub plr_rel_gap: f64,
}

impl Default for IndependenceThresholds {
    fn default() -> Self {
        IndependenceThresholds {
            ks_distance: 0.01,
            plr_rel_gap: 0.10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub ks_distance: f64,
    pub plr_measured_pct: f64,
    pub plr_estimated_pct: f64,
    pub verdict: IndependenceVerdict,
}

/// Verdict rule: independent iff the CCDF gap stays under the distance
/// threshold and the measured loss agrees with the product estimate.
pub fn independence_verdict(
    ks_distance: f64,
    plr_measured: f64,
    plr_estimated: f64,
    thresholds: &IndependenceThresholds,
) -> IndependenceVerdict {
    let plr_gap_ok = if plr_estimated > 0.0 {
        (plr_measured - plr_estimated).abs() / plr_estimated <= thresholds.plr_rel_gap
    } else {
        // With a zero estimate any measured loss is a disagreement, but a
        // handful of packets among millions is sampling noise, not
        // dependence.
        plr_measured < 1e-6
    };
    if ks_distance < thresholds.ks_distance && plr_gap_ok {
        IndependenceVerdict::Independent
    } else {
        IndependenceVerdict::Dependent
    }
}

/// Compare a measured redundant-link CCDF (and PLR) against the
/// independence-based estimate.
pub fn independence_report(
    measured: &DistCurve,
    estimated: &DistCurve,
    plr_measured: f64,
    plr_estimated: f64,
    thresholds: &IndependenceThresholds,
) -> Result<IndependenceReport, AnalysisError> {
    let ks = curve_distance(measured, estimated)?;
    Ok(IndependenceReport {
        ks_distance: ks,
        plr_measured_pct: plr_measured * 100.0,
        plr_estimated_pct: plr_estimated * 100.0,
        verdict: independence_verdict(ks, plr_measured, plr_estimated, thresholds),
    })
}

/// Paired per-seq latencies of two channels plus the joint-tail excess at a
/// threshold: P(both > tau) / (P(ch1 > tau) * P(ch2 > tau)). Near one for
/// independent channels, far above one when a shared cause delays both
/// copies together.
#[derive(Debug, Clone)]
pub struct ScatterJoint {
    /// (latency ch_x, latency ch_y) for seqs delivered on both channels.
    pub points: Vec<(u64, u64)>,
    pub tau_ns: u64,
    pub joint_tail_excess: Option<f64>,
}

pub fn scatter_joint(
    pairs: &[(u64, u64)],
    tau_ns: u64,
) -> ScatterJoint {
    let n = pairs.len() as f64;
    let excess = if pairs.is_empty() {
        None
    } else {
        let p1 = pairs.iter().filter(|(x, _)| *x > tau_ns).count() as f64 / n;
        let p2 = pairs.iter().filter(|(_, y)| *y > tau_ns).count() as f64 / n;
        let joint = pairs
            .iter()
            .filter(|(x, y)| *x > tau_ns && *y > tau_ns)
            .count() as f64
            / n;
        if p1 > 0.0 && p2 > 0.0 {
            Some(joint / (p1 * p2))
        } else {
            None
        }
    };
    ScatterJoint {
        points: pairs.to_vec(),
        tau_ns,
        joint_tail_excess: excess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: u64) -> u64 {
        v * 1_000_000
    }

    #[test]
    fn nearest_rank_percentiles_on_1_to_100() {
        let samples: Vec<LatencySample> = (1..=100)
            .map(|i| LatencySample {
                seq: i,
                latency_ns: Some(ms(i)),
            })
            .collect();
        let s = summarize(&samples, None);
        assert_eq!(s.p99_ms, Some(99.0));
        assert_eq!(s.min_ms, Some(1.0));
        assert_eq!(s.max_ms, Some(100.0));
        assert_eq!(s.p50_ms, Some(50.0));
        assert_eq!(s.plr_pct, 0.0);
    }

    #[test]
    fn plr_counts_losses() {
        let mut samples: Vec<LatencySample> = (1..=999)
            .map(|i| LatencySample {
                seq: i,
                latency_ns: Some(ms(1)),
            })
            .collect();
        samples.push(LatencySample {
            seq: 1000,
            latency_ns: None,
        });
        let s = summarize(&samples, None);
        assert!((s.plr_pct - 0.1).abs() < 1e-12);
        assert_eq!(s.n_delivered, 999);
    }

    #[test]
    fn zero_delivered_keeps_plr_defined() {
        let samples = vec![
            LatencySample {
                seq: 1,
                latency_ns: None,
            },
            LatencySample {
                seq: 2,
                latency_ns: None,
            },
        ];
        let s = summarize(&samples, None);
        assert_eq!(s.mean_ms, None);
        assert_eq!(s.max_ms, None);
        assert_eq!(s.plr_pct, 100.0);
    }

    #[test]
    fn quantile_roundtrip_on_constructed_trace() {
        // Build a 10000-sample trace whose nearest-rank p99.9 sits exactly at
        // 18.457 ms, then check the summary reproduces it.
        let n = 10_000u64;
        let rank = (0.999 * n as f64).ceil() as u64; // 9990
        let mut samples = Vec::new();
        for i in 1..=n {
            let v = if i < rank {
                ms(1) + i * 1_000
            } else if i == rank {
                18_457_000
            } else {
                20_000_000 + i * 1_000
            };
            samples.push(LatencySample {
                seq: i,
                latency_ns: Some(v),
            });
        }
        let s = summarize(&samples, None);
        assert_eq!(s.p99_9_ms, Some(18.457));
    }

    #[test]
    fn ccdf_step_and_uniform() {
        // All samples equal: CCDF is 1 below and 0 at/above the value.
        let c = ccdf(&[ms(5), ms(5), ms(5)], &[ms(4), ms(5), ms(6)]).unwrap();
        assert_eq!(c.values, vec![1.0, 0.0, 0.0]);

        // Uniform [0, 1] ms: CCDF(0.5 ms) ~ 0.5 at n = 1e5.
        let mut rng = crate::rng::RngStreams::new(11);
        let samples: Vec<u64> = (0..100_000)
            .map(|_| rng.uniform("u", 0.0, 1_000_000.0).unwrap() as u64)
            .collect();
        let c = ccdf(&samples, &[500_000]).unwrap();
        assert!((c.values[0] - 0.5).abs() < 0.01);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let samples: Vec<u64> = (0..1000).map(|i| ms(1) + i * 10_000).collect();
        let p = pdf(&samples, 1_000).unwrap();
        let integral: f64 = p.values.iter().map(|v| v * 1_000.0).sum();
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compose_ccdf_worked_example() {
        let grid = vec![ms(1)];
        let c1 = DistCurve {
            kind: CurveKind::Ccdf,
            grid: grid.clone(),
            values: vec![0.5],
        };
        let c2 = c1.clone();
        // plr1=0.1, plr2=0.2, both CCDFs 0.5:
        // (0.1*0.8*0.5 + 0.2*0.9*0.5 + 0.9*0.8*0.25) / 0.98 = 0.31/0.98.
        let est = compose_ccdf(&c1, 0.1, &c2, 0.2).unwrap();
        assert!((est.values[0] - 0.31 / 0.98).abs() < 1e-12);
        assert!((est.values[0] - 0.3163).abs() < 5e-5);
    }

    #[test]
    fn compose_ccdf_zero_plr_reduces_to_product() {
        let grid: Vec<u64> = (0..50).map(ms).collect();
        let c1 = DistCurve {
            kind: CurveKind::Ccdf,
            grid: grid.clone(),
            values: (0..50).map(|i| 1.0 - i as f64 / 49.0).collect(),
        };
        let c2 = DistCurve {
            kind: CurveKind::Ccdf,
            grid: grid.clone(),
            values: (0..50).map(|i| (1.0 - i as f64 / 49.0).powi(2)).collect(),
        };
        let est = compose_ccdf(&c1, 0.0, &c2, 0.0).unwrap();
        for ((e, a), b) in est.values.iter().zip(&c1.values).zip(&c2.values) {
            assert!((e - a * b).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_ccdf_perfect_channel_dominates() {
        let grid = vec![ms(1), ms(2)];
        let c1 = DistCurve {
            kind: CurveKind::Ccdf,
            grid: grid.clone(),
            values: vec![0.9, 0.4],
        };
        let zero = DistCurve {
            kind: CurveKind::Ccdf,
            grid: grid.clone(),
            values: vec![0.0, 0.0],
        };
        let est = compose_ccdf(&c1, 0.3, &zero, 0.0).unwrap();
        assert_eq!(est.values, vec![0.0, 0.0]);
    }

    #[test]
    fn compose_plr_reference_values() {
        // 6.483% x 19.318% -> 1.2524%.
        let plr = compose_plr(0.06483, 0.19318);
        assert!((plr - 0.0125238594).abs() < 1e-12);
        assert_eq!(format!("{:.4}", plr * 100.0), "1.2524");
        // 5.574% x 5.477% -> 0.305%.
        assert_eq!(format!("{:.3}", compose_plr(0.05574, 0.05477) * 100.0), "0.305");
        // 6.131% x 0.000278% -> 0.000017%.
        assert_eq!(
            format!("{:.6}", compose_plr(0.06131, 0.00000278) * 100.0),
            "0.000017"
        );
    }

    #[test]
    fn degenerate_composition_is_an_error() {
        let c = DistCurve {
            kind: CurveKind::Ccdf,
            grid: vec![1],
            values: vec![0.5],
        };
        assert_eq!(
            compose_ccdf(&c, 1.0, &c, 1.0).unwrap_err(),
            AnalysisError::DegenerateComposition
        );
    }

    #[test]
    fn identical_curves_are_independent() {
        let c = DistCurve {
            kind: CurveKind::Ccdf,
            grid: vec![1, 2, 3],
            values: vec![0.9, 0.5, 0.1],
        };
        let rep =
            independence_report(&c, &c, 0.01, 0.01, &IndependenceThresholds::default()).unwrap();
        assert_eq!(rep.ks_distance, 0.0);
        assert_eq!(rep.verdict, IndependenceVerdict::Independent);
    }

    #[test]
    fn ks_two_sample_behaves() {
        let xs: Vec<u64> = (0..2000).map(|i| i * 10).collect();
        let ys: Vec<u64> = (0..2000).map(|i| i * 10 + 3).collect();
        let (d, p) = ks_two_sample(&xs, &ys).unwrap();
        assert!(d < 0.05);
        assert!(p > 0.01);

        let zs: Vec<u64> = (0..2000).map(|i| i * 10 + 5_000).collect();
        let (d2, p2) = ks_two_sample(&xs, &zs).unwrap();
        assert!(d2 > 0.2);
        assert!(p2 < 0.001);
    }

    #[test]
    fn identical_samples_ks_p_is_one() {
        let xs: Vec<u64> = vec![66_000; 500];
        let (d, p) = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn scatter_excess_near_one_for_independent_pairs() {
        let mut rng = crate::rng::RngStreams::new(5);
        let pairs: Vec<(u64, u64)> = (0..200_000)
            .map(|_| {
                (
                    rng.uniform("a", 0.0, 10_000_000.0).unwrap() as u64,
                    rng.uniform("b", 0.0, 10_000_000.0).unwrap() as u64,
                )
            })
            .collect();
        let sj = scatter_joint(&pairs, 5_000_000);
        let excess = sj.joint_tail_excess.unwrap();
        assert!((excess - 1.0).abs() < 0.05, "excess {excess}");
    }

    #[test]
    fn scatter_excess_blows_up_for_shared_cause() {
        // Identical latencies on both channels: joint tail = marginal tail.
        let pairs: Vec<(u64, u64)> = (0..10_000)
            .map(|i| {
                let v = if i % 100 == 0 { ms(10) } else { ms(1) };
                (v, v)
            })
            .collect();
        let sj = scatter_joint(&pairs, ms(5));
        assert!(sj.joint_tail_excess.unwrap() > 50.0);
    }

    proptest! {
        /// Percentile ordering holds for arbitrary delivered samples.
        #[test]
        fn percentile_monotonicity(values in proptest::collection::vec(0u64..10_000_000, 1..300)) {
            let samples: Vec<LatencySample> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| LatencySample { seq: i as u64, latency_ns: Some(v) })
                .collect();
            let s = summarize(&samples, None);
            let seq = [
                s.min_ms.unwrap(),
                s.p50_ms.unwrap(),
                s.p99_ms.unwrap(),
                s.p99_9_ms.unwrap(),
                s.p99_99_ms.unwrap(),
                s.max_ms.unwrap(),
            ];
            for w in seq.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        /// Composition of valid CCDFs is a valid CCDF.
        #[test]
        fn compose_preserves_ccdf_validity(
            raw1 in proptest::collection::vec(0.0f64..1.0, 2..40),
            raw2 in proptest::collection::vec(0.0f64..1.0, 2..40),
            plr1 in 0.0f64..0.99,
            plr2 in 0.0f64..0.99,
        ) {
            let n = raw1.len().min(raw2.len());
            let grid: Vec<u64> = (0..n as u64).collect();
            let mk = |raw: &[f64]| {
                let mut v: Vec<f64> = raw[..n].to_vec();
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                DistCurve { kind: CurveKind::Ccdf, grid: grid.clone(), values: v }
            };
            let c1 = mk(&raw1);
            let c2 = mk(&raw2);
            prop_assume!(c1.is_valid_ccdf() && c2.is_valid_ccdf());
            let est = compose_ccdf(&c1, plr1, &c2, plr2).unwrap();
            prop_assert!(est.is_valid_ccdf());
        }
    }
}
