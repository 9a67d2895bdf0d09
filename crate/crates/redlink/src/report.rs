//! File-level packaging: execute scenarios into trace files, analyze traces
//! into reports, compare runs.
//!
//! Everything written here is deterministic: integer timestamps come straight
//! from the trace, floats are formatted with fixed precision, and rows keep
//! seq order, so identical (config, seed) pairs produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    ccdf, compose_ccdf, compose_plr, curve_distance, independence_report, pdf, scatter_joint,
    summarize, AnalysisError, DistCurve, IndependenceThresholds, LatencySample, StatsSummary,
};
use crate::mac::{ChannelId, SetTag, TxRecord};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{run_simulation, SimError};
use crate::time::millis;
use crate::trace::{
    read_channel_trace, read_redundant_trace, write_channel_trace, write_redundant_trace,
    RedundantRow, TraceError,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Incompatible(String),
}

/// Files produced by one scenario run.
#[derive(Debug)]
pub struct RunArtifacts {
    pub channel_traces: BTreeMap<ChannelId, PathBuf>,
    pub redundant_trace: Option<PathBuf>,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub config_hash: String,
    pub config_file: String,
}

/// Execute a scenario and write trace files, a summary table, the resolved
/// config and a manifest into `out_dir`.
pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<RunArtifacts, ReportError> {
    fs::create_dir_all(out_dir)?;
    let out = run_simulation(sc)?;

    let mut channel_traces = BTreeMap::new();
    for (ch, records) in &out.channel_records {
        let path = out_dir.join(format!("trace_ch{ch}.csv"));
        fs::write(&path, write_channel_trace(records))?;
        channel_traces.insert(*ch, path);
    }

    let redundant_trace = match &out.redundant {
        Some(view) => {
            let path = out_dir.join("trace_redundant.csv");
            fs::write(&path, write_redundant_trace(view))?;
            Some(path)
        }
        None => None,
    };

    let mut summary_text = format!("scenario: {}\nseed: {}\n\n", sc.name, sc.seed);
    summary_text.push_str(&summary_table_for_records(&out.channel_records));
    if let Some(view) = &out.redundant {
        let samples: Vec<LatencySample> = view
            .redundant_samples()
            .into_iter()
            .map(|(seq, d)| LatencySample {
                seq,
                latency_ns: d,
            })
            .collect();
        let stats = summarize(&samples, None);
        summary_text.push('\n');
        summary_text.push_str(&format_summary_rows(&[("redundant (d)".to_string(), stats)]));
    }
    let summary = out_dir.join("summary.txt");
    fs::write(&summary, summary_text)?;

    let config_file = out_dir.join("config_resolved.toml");
    fs::write(&config_file, sc.to_toml_string())?;

    let manifest = Manifest {
        name: sc.name.clone(),
        seed: sc.seed,
        duration_ms: sc.duration_ms,
        config_hash: sc.config_hash(),
        config_file: "config_resolved.toml".into(),
    };
    let manifest_path = out_dir.join("manifest.toml");
    fs::write(
        &manifest_path,
        toml::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(RunArtifacts {
        channel_traces,
        redundant_trace,
        summary,
        manifest: manifest_path,
    })
}

/// Re-run a scenario from a manifest directory, verifying the config hash.
pub fn rerun_from_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunArtifacts, ReportError> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest = toml::from_str(&text)
        .map_err(|e| ReportError::Incompatible(format!("bad manifest: {e}")))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let config_text = fs::read_to_string(base.join(&manifest.config_file))?;
    let sc = Scenario::from_toml_str(&config_text)?;
    if sc.config_hash() != manifest.config_hash {
        return Err(ReportError::Incompatible(format!(
            "config hash mismatch: manifest {} vs resolved {}",
            manifest.config_hash,
            sc.config_hash()
        )));
    }
    run_scenario(&sc, out_dir)
}

// ---------------------------------------------------------------------------
// Per-trace statistics

/// d-based and d'-based samples extracted from one channel trace.
pub struct ChannelSamples {
    pub channel: ChannelId,
    /// End-to-end latency per seq (None = not delivered).
    pub d: Vec<LatencySample>,
    /// Link latency per seq for acked packets (None = no ACK seen).
    pub d_prime: Vec<LatencySample>,
    /// Confirmed traffic (ACK accounting meaningful)?
    pub confirmed: bool,
    pub tags: Vec<SetTag>,
}

impl ChannelSamples {
    pub fn from_records(channel: ChannelId, records: &[TxRecord]) -> Self {
        let confirmed = records.iter().any(|r| r.t_ack.is_some() || r.ack_lost);
        let d = records
            .iter()
            .map(|r| LatencySample {
                seq: r.seq,
                latency_ns: r.latency_d(),
            })
            .collect();
        // d' relies on the exact identity t_ack - SIFS - ACK = t_air_end.
        let d_prime = records
            .iter()
            .map(|r| LatencySample {
                seq: r.seq,
                latency_ns: r
                    .t_ack
                    .and(r.t_air_end)
                    .map(|end| end - r.t_gen),
            })
            .collect();
        let tags = records.iter().map(|r| r.tag).collect();
        ChannelSamples {
            channel,
            d,
            d_prime,
            confirmed,
            tags,
        }
    }

    pub fn plr_prime_pct(&self) -> Option<f64> {
        if !self.confirmed {
            return None;
        }
        let n = self.d_prime.len();
        if n == 0 {
            return None;
        }
        let no_ack = self
            .d_prime
            .iter()
            .filter(|s| s.latency_ns.is_none())
            .count();
        Some(100.0 * no_ack as f64 / n as f64)
    }

    fn has_tags(&self) -> bool {
        self.tags.iter().any(|t| *t != SetTag::Untagged)
    }

    fn subset(&self, tag: SetTag) -> (Vec<LatencySample>, Vec<LatencySample>) {
        let pick = |samples: &[LatencySample]| {
            samples
                .iter()
                .zip(&self.tags)
                .filter(|&(_, t)| *t == tag)
                .map(|(s, _)| *s)
                .collect::<Vec<_>>()
        };
        (pick(&self.d), pick(&self.d_prime))
    }
}

fn plr_prime_of(samples: &[LatencySample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    100.0 * samples.iter().filter(|s| s.latency_ns.is_none()).count() as f64
        / samples.len() as f64
}

// ---------------------------------------------------------------------------
// Summary tables

const TABLE_HEADER: &str = "stream                     n        mean     sigma    min      p50      p99      p99.9    p99.99   max      PLR%     PLR'%";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:<8.3}"),
        None => format!("{:<8}", "-"),
    }
}

fn format_summary_rows(rows: &[(String, StatsSummary)]) -> String {
    let mut out = String::new();
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for (label, s) in rows {
        let _ = writeln!(
            out,
            "{:<26} {:<8} {} {} {} {} {} {} {} {} {:<8.4} {}",
            label,
            s.n_generated,
            fmt_opt(s.mean_ms),
            fmt_opt(s.std_ms),
            fmt_opt(s.min_ms),
            fmt_opt(s.p50_ms),
            fmt_opt(s.p99_ms),
            fmt_opt(s.p99_9_ms),
            fmt_opt(s.p99_99_ms),
            fmt_opt(s.max_ms),
            s.plr_pct,
            match s.plr_prime_pct {
                Some(p) => format!("{p:<8.4}"),
                None => format!("{:<8}", "-"),
            }
        );
    }
    out
}

fn summary_rows_for_channel(samples: &ChannelSamples) -> Vec<(String, StatsSummary)> {
    let ch = samples.channel;
    let mut rows = Vec::new();
    if samples.has_tags() {
        for (tag, name) in [(SetTag::A, "A"), (SetTag::NotA, "nA")] {
            let (d, dp) = samples.subset(tag);
            if d.is_empty() {
                continue;
            }
            if samples.confirmed {
                rows.push((
                    format!("ch{ch} {name} (d')"),
                    summarize(&dp, Some(plr_prime_of(&dp))),
                ));
            }
            rows.push((format!("ch{ch} {name} (d)"), summarize(&d, None)));
        }
    } else {
        rows.push((
            format!("ch{ch} (d)"),
            summarize(&samples.d, samples.plr_prime_pct()),
        ));
        if samples.confirmed {
            rows.push((
                format!("ch{ch} (d')"),
                summarize(&samples.d_prime, samples.plr_prime_pct()),
            ));
        }
    }
    rows
}

fn summary_table_for_records(records: &BTreeMap<ChannelId, Vec<TxRecord>>) -> String {
    let mut rows = Vec::new();
    for (&ch, recs) in records {
        rows.extend(summary_rows_for_channel(&ChannelSamples::from_records(ch, recs)));
    }
    format_summary_rows(&rows)
}

// ---------------------------------------------------------------------------
// analyze

/// Report files written by [`analyze`].
#[derive(Debug)]
pub struct AnalyzeArtifacts {
    pub summary: PathBuf,
    pub files: Vec<PathBuf>,
}

fn write_curve_csv(path: &Path, curve: &DistCurve) -> Result<(), ReportError> {
    let mut text = String::from("latency_ms,value\n");
    for (x, v) in curve.grid.iter().zip(&curve.values) {
        let _ = writeln!(text, "{:.6},{:.9}", *x as f64 / 1e6, v);
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_latency_csv(path: &Path, samples: &[LatencySample]) -> Result<(), ReportError> {
    // Losses exported as the negative sentinel for plotting.
    let mut text = String::from("seq,latency_ms\n");
    for s in samples {
        match s.latency_ns {
            Some(v) => {
                let _ = writeln!(text, "{},{:.6}", s.seq, v as f64 / 1e6);
            }
            None => {
                let _ = writeln!(text, "{},-1", s.seq);
            }
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn delivered(samples: &[LatencySample]) -> Vec<u64> {
    samples.iter().filter_map(|s| s.latency_ns).collect()
}

/// Common evaluation grid: sorted unique delivered values from all inputs.
fn common_grid(sets: &[&[u64]]) -> Vec<u64> {
    let mut grid: Vec<u64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Analyze channel traces (plus an optional redundant-link trace) into report
/// files: summary table, per-channel CCDF/PDF/latency exports, and, when the
/// redundant link is present with exactly two channels, the independence
/// report with measured-vs-estimated CCDFs and the per-seq scatter.
pub fn analyze(
    channel_trace_paths: &[PathBuf],
    redundant_trace_path: Option<&Path>,
    out_dir: &Path,
    tau_ns: u64,
) -> Result<AnalyzeArtifacts, ReportError> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let mut channels: Vec<ChannelSamples> = Vec::new();
    let mut records_by_channel: BTreeMap<ChannelId, Vec<TxRecord>> = BTreeMap::new();
    for path in channel_trace_paths {
        let records = read_channel_trace(&fs::read_to_string(path)?)?;
        let ch = records[0].channel;
        channels.push(ChannelSamples::from_records(ch, &records));
        records_by_channel.insert(ch, records);
    }

    let mut summary_rows = Vec::new();
    for samples in &channels {
        summary_rows.extend(summary_rows_for_channel(samples));

        let ch = samples.channel;
        let d_delivered = delivered(&samples.d);
        if !d_delivered.is_empty() {
            let grid = common_grid(&[&d_delivered]);
            let curve = ccdf(&d_delivered, &grid)?;
            let p = out_dir.join(format!("ccdf_ch{ch}_d.csv"));
            write_curve_csv(&p, &curve)?;
            files.push(p);
            let hist = pdf(&d_delivered, 1_000)?;
            let p = out_dir.join(format!("pdf_ch{ch}_d.csv"));
            write_curve_csv(&p, &hist)?;
            files.push(p);
        }
        let p = out_dir.join(format!("latency_ch{ch}_d.csv"));
        write_latency_csv(&p, &samples.d)?;
        files.push(p);
        if samples.confirmed {
            let p = out_dir.join(format!("latency_ch{ch}_dprime.csv"));
            write_latency_csv(&p, &samples.d_prime)?;
            files.push(p);
            // Per-set PDFs make interference fingerprints visible.
            if samples.has_tags() {
                for (tag, name) in [(SetTag::A, "a"), (SetTag::NotA, "na")] {
                    let (_, dp) = samples.subset(tag);
                    let dp_del = delivered(&dp);
                    if !dp_del.is_empty() {
                        let hist = pdf(&dp_del, 1_000)?;
                        let p = out_dir.join(format!("pdf_ch{ch}_dprime_{name}.csv"));
                        write_curve_csv(&p, &hist)?;
                        files.push(p);
                    }
                }
            }
        }
    }

    // Redundant-link block.
    let mut redundant_rows: Option<Vec<RedundantRow>> = None;
    if let Some(path) = redundant_trace_path {
        redundant_rows = Some(read_redundant_trace(&fs::read_to_string(path)?)?);
    }
    if let Some(rows) = &redundant_rows {
        let samples: Vec<LatencySample> = rows
            .iter()
            .map(|r| LatencySample {
                seq: r.seq,
                latency_ns: r.latency_ns(),
            })
            .collect();
        summary_rows.push(("redundant (d)".to_string(), summarize(&samples, None)));

        let p = out_dir.join("latency_redundant.csv");
        write_latency_csv(&p, &samples)?;
        files.push(p);

        if channels.len() == 2 {
            let red_delivered = delivered(&samples);
            let d1 = delivered(&channels[0].d);
            let d2 = delivered(&channels[1].d);
            if !red_delivered.is_empty() && !d1.is_empty() && !d2.is_empty() {
                let grid = common_grid(&[&d1, &d2, &red_delivered]);
                let measured = ccdf(&red_delivered, &grid)?;
                let c1 = ccdf(&d1, &grid)?;
                let c2 = ccdf(&d2, &grid)?;
                let plr1 = 1.0 - d1.len() as f64 / channels[0].d.len() as f64;
                let plr2 = 1.0 - d2.len() as f64 / channels[1].d.len() as f64;
                let estimate = compose_ccdf(&c1, plr1, &c2, plr2)?;
                let plr_measured = 1.0 - red_delivered.len() as f64 / samples.len() as f64;
                let plr_estimated = compose_plr(plr1, plr2);
                let report = independence_report(
                    &measured,
                    &estimate,
                    plr_measured,
                    plr_estimated,
                    &IndependenceThresholds::default(),
                )?;

                let p = out_dir.join("ccdf_redundant_measured.csv");
                write_curve_csv(&p, &measured)?;
                files.push(p);
                let p = out_dir.join("ccdf_redundant_estimate.csv");
                write_curve_csv(&p, &estimate)?;
                files.push(p);

                // Per-seq scatter over seqs delivered on both channels.
                let by_seq = |samples: &[LatencySample]| {
                    samples
                        .iter()
                        .filter_map(|s| s.latency_ns.map(|v| (s.seq, v)))
                        .collect::<BTreeMap<u64, u64>>()
                };
                let m1 = by_seq(&channels[0].d);
                let m2 = by_seq(&channels[1].d);
                let pairs: Vec<(u64, u64)> = m1
                    .iter()
                    .filter_map(|(seq, &v1)| m2.get(seq).map(|&v2| (v1, v2)))
                    .collect();
                let sj = scatter_joint(&pairs, tau_ns);
                let mut text = format!(
                    "seq scatter: ch{} (x) vs ch{} (y)\nd_ch{}_ms,d_ch{}_ms\n",
                    channels[0].channel, channels[1].channel, channels[0].channel,
                    channels[1].channel
                );
                for (x, y) in &sj.points {
                    let _ = writeln!(text, "{:.6},{:.6}", *x as f64 / 1e6, *y as f64 / 1e6);
                }
                let p = out_dir.join("scatter.csv");
                fs::write(&p, text)?;
                files.push(p);

                let mut ind = String::new();
                let _ = writeln!(ind, "ks_distance: {:.6}", report.ks_distance);
                let _ = writeln!(ind, "plr_measured_pct: {:.6}", report.plr_measured_pct);
                let _ = writeln!(ind, "plr_estimated_pct: {:.6}", report.plr_estimated_pct);
                let _ = writeln!(
                    ind,
                    "joint_tail_excess(tau={:.3}ms): {}",
                    tau_ns as f64 / 1e6,
                    sj.joint_tail_excess
                        .map(|e| format!("{e:.3}"))
                        .unwrap_or_else(|| "-".into())
                );
                let _ = writeln!(ind, "verdict: {:?}", report.verdict);
                let p = out_dir.join("independence.txt");
                fs::write(&p, ind)?;
                files.push(p);
            }
        }
    }

    let summary = out_dir.join("analysis_summary.txt");
    fs::write(&summary, format_summary_rows(&summary_rows))?;
    Ok(AnalyzeArtifacts { summary, files })
}

// ---------------------------------------------------------------------------
// compare

/// Side-by-side statistics of two traces of the same stream kind, with
/// per-index deltas.
pub fn compare(trace_a: &Path, trace_b: &Path) -> Result<String, ReportError> {
    let rec_a = read_channel_trace(&fs::read_to_string(trace_a)?)?;
    let rec_b = read_channel_trace(&fs::read_to_string(trace_b)?)?;
    let a = ChannelSamples::from_records(rec_a[0].channel, &rec_a);
    let b = ChannelSamples::from_records(rec_b[0].channel, &rec_b);
    if a.confirmed != b.confirmed {
        return Err(ReportError::Incompatible(
            "cannot compare confirmed with unconfirmed traffic".into(),
        ));
    }
    let sa = summarize(&a.d, a.plr_prime_pct());
    let sb = summarize(&b.d, b.plr_prime_pct());

    let mut out = String::new();
    out.push_str(&format_summary_rows(&[
        (format!("A: ch{} (d)", a.channel), sa.clone()),
        (format!("B: ch{} (d)", b.channel), sb.clone()),
    ]));
    out.push('\n');
    out.push_str("deltas (B - A):\n");
    let delta = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => format!("{:+.3}", y - x),
        _ => "-".into(),
    };
    let _ = writeln!(out, "  mean_ms:   {}", delta(sa.mean_ms, sb.mean_ms));
    let _ = writeln!(out, "  p50_ms:    {}", delta(sa.p50_ms, sb.p50_ms));
    let _ = writeln!(out, "  p99_ms:    {}", delta(sa.p99_ms, sb.p99_ms));
    let _ = writeln!(out, "  p99.9_ms:  {}", delta(sa.p99_9_ms, sb.p99_9_ms));
    let _ = writeln!(out, "  p99.99_ms: {}", delta(sa.p99_99_ms, sb.p99_99_ms));
    let _ = writeln!(out, "  max_ms:    {}", delta(sa.max_ms, sb.max_ms));
    let _ = writeln!(out, "  PLR_pp:    {:+.4}", sb.plr_pct - sa.plr_pct);
    Ok(out)
}

/// Convenience wrapper used by tests and the CLI: measured redundant CCDF
/// versus the composition estimate for a finished run, straight from records.
pub fn redundancy_gap_from_records(
    records: &BTreeMap<ChannelId, Vec<TxRecord>>,
    redundant: &crate::prp::RedundantLinkView,
) -> Result<(f64, f64, f64), ReportError> {
    let ids: Vec<ChannelId> = records.keys().copied().collect();
    if ids.len() != 2 {
        return Err(ReportError::Incompatible(
            "redundancy gap needs exactly two channels".into(),
        ));
    }
    let get = |ch: ChannelId| {
        let recs = &records[&ch];
        let d: Vec<u64> = recs.iter().filter_map(|r| r.latency_d()).collect();
        let plr = 1.0 - d.len() as f64 / recs.len() as f64;
        (d, plr)
    };
    let (d1, plr1) = get(ids[0]);
    let (d2, plr2) = get(ids[1]);
    let red: Vec<u64> = redundant
        .redundant_samples()
        .into_iter()
        .filter_map(|(_, d)| d)
        .collect();
    let plr_red = 1.0 - red.len() as f64 / redundant.generated.len() as f64;
    let grid = common_grid(&[&d1, &d2, &red]);
    let measured = ccdf(&red, &grid)?;
    let estimate = compose_ccdf(&ccdf(&d1, &grid)?, plr1, &ccdf(&d2, &grid)?, plr2)?;
    let ks = curve_distance(&measured, &estimate)?;
    Ok((ks, plr_red, compose_plr(plr1, plr2)))
}

/// Duration helper shared by the CLI: override a scenario duration.
pub fn with_duration_ms(mut sc: Scenario, duration_ms: Option<u64>, seed: Option<u64>) -> Scenario {
    if let Some(d) = duration_ms {
        sc.duration_ms = d;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc
}

/// ns for a millisecond count (re-export for CLI convenience).
pub fn ms_to_ns(ms: u64) -> u64 {
    millis(ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::ChannelConfig;
    use crate::traffic::{StreamConfig, StreamKind};

    fn tiny_scenario() -> Scenario {
        Scenario {
            name: "tiny".into(),
            seed: 5,
            duration_ms: 2_000,
            channels: vec![
                ChannelConfig::new(1).unwrap(),
                ChannelConfig::new(165).unwrap(),
            ],
            ap: Default::default(),
            impairments: Default::default(),
            streams: vec![StreamConfig {
                kind: StreamKind::UnicastUp,
                tc: millis(10),
                payload: 50,
                channels: vec![1, 165],
                count: Some(100),
                start_phase: 0,
            }],
            loads: vec![],
            aci_experiment: None,
        }
    }

    #[test]
    fn run_writes_expected_files_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let sc = tiny_scenario();
        let a1 = run_scenario(&sc, &dir.path().join("run1")).unwrap();
        assert_eq!(a1.channel_traces.len(), 2);
        assert!(a1.redundant_trace.is_some());
        assert!(a1.summary.exists());

        // Manifest round-trip reproduces traces byte-for-byte.
        let a2 = rerun_from_manifest(&a1.manifest, &dir.path().join("run2")).unwrap();
        for ch in [1u16, 165] {
            let t1 = fs::read(&a1.channel_traces[&ch]).unwrap();
            let t2 = fs::read(&a2.channel_traces[&ch]).unwrap();
            assert_eq!(t1, t2);
        }
        let r1 = fs::read(a1.redundant_trace.as_ref().unwrap()).unwrap();
        let r2 = fs::read(a2.redundant_trace.as_ref().unwrap()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn analyze_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let sc = tiny_scenario();
        let run = run_scenario(&sc, &dir.path().join("run")).unwrap();
        let traces: Vec<PathBuf> = run.channel_traces.values().cloned().collect();
        let arts = analyze(
            &traces,
            run.redundant_trace.as_deref(),
            &dir.path().join("report"),
            5_000_000,
        )
        .unwrap();
        let summary = fs::read_to_string(&arts.summary).unwrap();
        assert!(summary.contains("ch1 (d)"), "{summary}");
        assert!(summary.contains("redundant (d)"), "{summary}");
        assert!(arts
            .files
            .iter()
            .any(|p| p.file_name().unwrap() == "independence.txt"));
    }

    #[test]
    fn analyze_emits_per_set_blocks_for_tagged_traces() {
        use crate::traffic::AciExperimentConfig;
        let dir = tempfile::tempdir().unwrap();
        let mut sc = tiny_scenario();
        sc.streams.clear();
        sc.channels = vec![
            ChannelConfig::new(165).unwrap(),
            ChannelConfig::new(161).unwrap(),
        ];
        sc.impairments.aci.enabled = true;
        sc.aci_experiment = Some(AciExperimentConfig {
            count: Some(40),
            tc: millis(10),
            ..AciExperimentConfig::default()
        });
        sc.duration_ms = 2_000;
        let run = run_scenario(&sc, &dir.path().join("run")).unwrap();
        let traces: Vec<PathBuf> = run.channel_traces.values().cloned().collect();
        assert_eq!(traces.len(), 1, "only the channel under test is measured");
        let arts = analyze(&traces, None, &dir.path().join("report"), 5_000_000).unwrap();
        let summary = fs::read_to_string(&arts.summary).unwrap();
        assert!(summary.contains("ch165 A (d')"), "{summary}");
        assert!(summary.contains("ch165 nA (d')"), "{summary}");
    }

    #[test]
    fn compare_rejects_mixed_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let sc = tiny_scenario();
        let mut mc = tiny_scenario();
        mc.streams[0].kind = StreamKind::MulticastDown;
        mc.streams[0].channels = vec![165];
        mc.channels.remove(0);
        let a = run_scenario(&sc, &dir.path().join("a")).unwrap();
        let b = run_scenario(&mc, &dir.path().join("b")).unwrap();
        let err = compare(&a.channel_traces[&165], &b.channel_traces[&165]).unwrap_err();
        assert!(err.to_string().contains("confirmed"), "{err}");
    }

    #[test]
    fn compare_identical_traces_zero_deltas() {
        let dir = tempfile::tempdir().unwrap();
        let sc = tiny_scenario();
        let a = run_scenario(&sc, &dir.path().join("a")).unwrap();
        let out = compare(&a.channel_traces[&165], &a.channel_traces[&165]).unwrap();
        assert!(out.contains("+0.000"), "{out}");
    }
}
