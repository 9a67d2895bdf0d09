//! Pluggable interference models: DTIM multicast buffering at the AP,
//! network-manager scan blackouts, AP internal forwarding stalls, and
//! adjacent-channel coupling between co-located adapters.

use serde::{Deserialize, Serialize};

use crate::mac::{Band, ChannelId, Interval};
use crate::time::{millis, secs, SimTime};

// ---------------------------------------------------------------------------
// DTIM

/// Beacon/DTIM gating of multicast frames at the AP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtimConfig {
    pub enabled: bool,
    /// Beacon interval in ns.
    pub t_beac: u64,
    /// DTIM period in beacons.
    pub p: u32,
    /// Phase of the first beacon in ns; drawn at random when omitted so the
    /// generator and the beacon schedule stay unsynchronized.
    pub beacon_offset: Option<u64>,
}

impl Default for DtimConfig {
    fn default() -> Self {
        DtimConfig {
            enabled: false,
            t_beac: millis(102) + 400_000, // 102.4 ms
            p: 1,
            beacon_offset: None,
        }
    }
}

impl DtimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.p < 1 {
            return Err("dtim.p must be >= 1".into());
        }
        if self.t_beac == 0 {
            return Err("dtim.t_beac must be positive".into());
        }
        Ok(())
    }
}

/// Beacon schedule with the DTIM countdown. Beacon k fires at
/// `offset + k*t_beac`; the count starts at p-1 on beacon 0, decrements on
/// every beacon, and is re-initialized to p-1 after reaching 0. Multicast
/// buffered at the AP is released at beacons whose count is 0.
#[derive(Debug, Clone)]
pub struct BeaconSchedule {
    pub t_beac: u64,
    pub p: u32,
    pub offset: u64,
}

impl BeaconSchedule {
    pub fn new(t_beac: u64, p: u32, offset: u64) -> Self {
        BeaconSchedule { t_beac, p, offset }
    }

    pub fn beacon_time(&self, k: u64) -> SimTime {
        SimTime(self.offset + k * self.t_beac)
    }

    /// DTIM count broadcast on beacon k.
    pub fn count_at(&self, k: u64) -> u32 {
        let p = self.p as u64;
        ((p - 1) - (k % p)) as u32
    }

    /// First beacon index at or after `t`.
    pub fn next_beacon_index(&self, t: SimTime) -> u64 {
        let t = t.as_nanos();
        if t <= self.offset {
            0
        } else {
            (t - self.offset).div_ceil(self.t_beac)
        }
    }

    /// First beacon instant at or after `t`, regardless of DTIM count.
    pub fn beacon_time_after(&self, t: SimTime) -> SimTime {
        self.beacon_time(self.next_beacon_index(t))
    }

    /// Release instant for a multicast frame reaching the AP at `t_arrival`:
    /// the first beacon at or after arrival whose DTIM count is 0.
    pub fn dtim_release_time(&self, t_arrival: SimTime) -> SimTime {
        let mut k = self.next_beacon_index(t_arrival);
        while self.count_at(k) != 0 {
            k += 1;
        }
        self.beacon_time(k)
    }
}

// ---------------------------------------------------------------------------
// Network manager scans

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmMulticastMode {
    /// Frames on air during a blackout are lost at the scanning station.
    Drop,
    /// The AP buffers frames arriving during a blackout and releases them
    /// after the first beacon past the blackout end.
    DtimBuffer,
}

/// Periodic all-channel scan by the host network manager.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmConfig {
    pub enabled: bool,
    /// Time between scan cycles in ns.
    pub scan_period: u64,
    /// Probe operations per scan (one per regulatory channel).
    pub n_probes: u32,
    /// Off-channel dwell per probe in ns.
    pub probe_dwell: u64,
    /// Gap between consecutive probes in ns (adapter back on its channel).
    pub probe_gap: u64,
    /// True reproduces the pathology: both adapters scan at the same
    /// instants. False displaces the second adapter by half a scan period.
    pub simultaneous_on_all_adapters: bool,
    pub multicast_mode: NmMulticastMode,
    /// Station-side transmit buffer during blackouts; overflow drops oldest.
    pub buffer_capacity: usize,
    /// In dtim-buffer mode, consecutive probes scanned back-to-back per
    /// buffered release.
    pub probes_per_release: u32,
    /// Start of the first scan cycle in ns; random when omitted.
    pub start_offset: Option<u64>,
}

impl Default for NmConfig {
    fn default() -> Self {
        NmConfig {
            enabled: false,
            scan_period: secs(120),
            n_probes: 13,
            probe_dwell: millis(60),
            probe_gap: millis(170),
            simultaneous_on_all_adapters: true,
            multicast_mode: NmMulticastMode::DtimBuffer,
            buffer_capacity: 64,
            probes_per_release: 2,
            start_offset: None,
        }
    }
}

impl NmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.probe_dwell == 0 || self.probe_gap == 0 {
            return Err("nm probe_dwell and probe_gap must be positive".into());
        }
        if self.n_probes == 0 {
            return Err("nm.n_probes must be >= 1".into());
        }
        if self.probes_per_release == 0 {
            return Err("nm.probes_per_release must be >= 1".into());
        }
        let span = self.n_probes as u64 * self.probe_dwell
            + (self.n_probes as u64 - 1) * self.probe_gap;
        if span >= self.scan_period {
            return Err(format!(
                "nm scan span {span} ns does not fit in scan_period {} ns",
                self.scan_period
            ));
        }
        if self.buffer_capacity == 0 {
            return Err("nm.buffer_capacity must be >= 1".into());
        }
        Ok(())
    }

    /// Total span of one scan, first probe start to last probe end.
    pub fn scan_span(&self) -> u64 {
        self.n_probes as u64 * self.probe_dwell + (self.n_probes as u64 - 1) * self.probe_gap
    }

    /// Offset of `adapter`'s scans relative to the base schedule.
    fn adapter_offset(&self, adapter: usize) -> u64 {
        if self.simultaneous_on_all_adapters {
            0
        } else {
            adapter as u64 * (self.scan_period / 2)
        }
    }

    /// Unicast blackout intervals for one adapter over `[0, run_length)`:
    /// `n_probes` dwells per cycle, spaced by `probe_gap`.
    pub fn blackout_intervals(
        &self,
        adapter: usize,
        start_offset: u64,
        run_length: SimTime,
    ) -> Vec<Interval> {
        let mut out = Vec::new();
        let base = start_offset + self.adapter_offset(adapter);
        let mut cycle = 0u64;
        loop {
            let cycle_start = base + cycle * self.scan_period;
            if cycle_start >= run_length.as_nanos() {
                break;
            }
            for i in 0..self.n_probes as u64 {
                let s = cycle_start + i * (self.probe_dwell + self.probe_gap);
                if s >= run_length.as_nanos() {
                    break;
                }
                out.push(Interval {
                    start: SimTime(s),
                    end: SimTime(s + self.probe_dwell),
                });
            }
            cycle += 1;
        }
        out
    }

    /// Multicast buffering windows: groups of `probes_per_release`
    /// consecutive channels scanned back-to-back (dwells merged), so a
    /// 13-probe scan yields 7 windows, the last covering a single dwell.
    pub fn multicast_buffer_windows(
        &self,
        adapter: usize,
        start_offset: u64,
        run_length: SimTime,
    ) -> Vec<Interval> {
        let mut out = Vec::new();
        let base = start_offset + self.adapter_offset(adapter);
        let group = self.probes_per_release as u64;
        let n_groups = (self.n_probes as u64).div_ceil(group);
        let mut cycle = 0u64;
        loop {
            let cycle_start = base + cycle * self.scan_period;
            if cycle_start >= run_length.as_nanos() {
                break;
            }
            for g in 0..n_groups {
                let first_probe = g * group;
                let probes_here = group.min(self.n_probes as u64 - first_probe);
                let s = cycle_start + first_probe * (self.probe_dwell + self.probe_gap);
                if s >= run_length.as_nanos() {
                    break;
                }
                out.push(Interval {
                    start: SimTime(s),
                    end: SimTime(s + probes_here * self.probe_dwell),
                });
            }
            cycle += 1;
        }
        out
    }
}

/// Pure form of the station-side unicast deferral: packets generated inside a
/// blackout are buffered FIFO and come due at the blackout end; overflow
/// drops the oldest buffered packet. Returns, per input time, either the
/// (possibly deferred) transmit-request time or `None` for dropped packets.
pub fn nm_apply_unicast(
    blackouts: &[Interval],
    gen_times: &[SimTime],
    capacity: usize,
) -> Vec<Option<SimTime>> {
    let mut out: Vec<Option<SimTime>> = Vec::with_capacity(gen_times.len());
    let mut buffered: Vec<usize> = Vec::new();
    let mut active: Option<Interval> = None;

    for (i, &t) in gen_times.iter().enumerate() {
        if let Some(iv) = active {
            if t >= iv.end {
                active = None;
            }
        }
        if active.is_none() {
            active = blackouts.iter().copied().find(|iv| iv.contains(t));
            buffered.clear();
        }
        match active {
            Some(iv) => {
                out.push(Some(iv.end));
                buffered.push(i);
                if buffered.len() > capacity {
                    let oldest = buffered.remove(0);
                    out[oldest] = None;
                }
            }
            None => out.push(Some(t)),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// AP internal stalls

/// Cyclic AP internal activity that stalls frame forwarding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApStallConfig {
    pub enabled: bool,
    /// Activity period in ns.
    pub period: u64,
    /// Worst-case stall in ns.
    pub max_stall: u64,
    /// One shared activity for both channels (single dual-band AP) versus
    /// independent per-AP activities.
    pub shared_across_channels: bool,
    /// Fixed window phase per AP; when omitted each cycle's window lands at a
    /// fresh random position inside its period (uncoordinated APs drift).
    pub phase_offset_per_ap: Option<u64>,
}

impl Default for ApStallConfig {
    fn default() -> Self {
        ApStallConfig {
            enabled: false,
            period: secs(10),
            max_stall: millis(20),
            shared_across_channels: false,
            phase_offset_per_ap: None,
        }
    }
}

impl ApStallConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_stall >= self.period {
            return Err("ap_stall.max_stall must be smaller than period".into());
        }
        Ok(())
    }
}

/// Fixed-phase stall delay: inside the window starting at
/// `k*period + phase`, the residual `window_end - t`; zero outside.
pub fn ap_stall_delay(t: SimTime, cfg: &ApStallConfig, phase: u64) -> u64 {
    if !cfg.enabled {
        return 0;
    }
    let t = t.as_nanos();
    if t < phase {
        return 0;
    }
    let into_cycle = (t - phase) % cfg.period;
    cfg.max_stall.saturating_sub(into_cycle)
}

/// Stall process with one window per cycle at a per-cycle position produced
/// by `phase_for_cycle` (shared mode passes both channels the same
/// positions).
pub fn stall_extra_at(
    t: SimTime,
    cfg: &ApStallConfig,
    mut phase_for_cycle: impl FnMut(u64) -> u64,
) -> u64 {
    if !cfg.enabled {
        return 0;
    }
    let cycle = t.as_nanos() / cfg.period;
    // A window placed late in the previous cycle can reach into this one.
    for c in [cycle.saturating_sub(1), cycle] {
        let start = c * cfg.period + phase_for_cycle(c);
        let end = start + cfg.max_stall;
        if t.as_nanos() >= start && t.as_nanos() < end {
            return end - t.as_nanos();
        }
    }
    0
}

// ---------------------------------------------------------------------------
// Adjacent-channel interference

/// Coupling between co-located adapters versus channel separation. Separation
/// classes are upper bounds on the channel-number distance within one band;
/// cross-band pairs never couple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AciConfig {
    pub enabled: bool,
    /// (max channel-number separation, coupling) rows, sorted ascending by
    /// separation, coupling non-increasing. Separations beyond the last row
    /// use the last row's coupling.
    pub coupling: Vec<(u16, f64)>,
    /// Probability that a coupled frame overlapping an expected ACK window
    /// corrupts the ACK, scaled by the pair's coupling.
    pub p_ack_corrupt_on_overlap: f64,
    /// Coupling at or above which carrier sense reads the coupled channel's
    /// data frames as busy.
    pub busy_sense_threshold: f64,
}

impl Default for AciConfig {
    fn default() -> Self {
        AciConfig {
            enabled: false,
            coupling: vec![(4, 1.0), (8, 0.9), (12, 0.5), (16, 0.3), (u16::MAX, 0.1)],
            p_ack_corrupt_on_overlap: 1.0,
            busy_sense_threshold: 0.2,
        }
    }
}

impl AciConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.coupling.is_empty() {
            return Err("aci.coupling must not be empty".into());
        }
        let mut last_sep = 0u16;
        let mut last_coupling = f64::INFINITY;
        for &(sep, c) in &self.coupling {
            if sep <= last_sep && last_sep != 0 {
                return Err("aci.coupling separations must be strictly increasing".into());
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("aci coupling {c} out of [0,1]"));
            }
            if c > last_coupling {
                return Err("aci.coupling must be non-increasing with separation".into());
            }
            last_sep = sep;
            last_coupling = c;
        }
        if !(0.0..=1.0).contains(&self.p_ack_corrupt_on_overlap) {
            return Err("aci.p_ack_corrupt_on_overlap out of [0,1]".into());
        }
        Ok(())
    }

    /// Coupling between two channels; zero when disabled, cross-band, or the
    /// same channel is asked about itself.
    pub fn coupling_between(
        &self,
        a: ChannelId,
        band_a: Band,
        b: ChannelId,
        band_b: Band,
    ) -> f64 {
        if !self.enabled || a == b || band_a != band_b {
            return 0.0;
        }
        let sep = a.abs_diff(b);
        for &(max_sep, c) in &self.coupling {
            if sep <= max_sep {
                return c;
            }
        }
        self.coupling.last().map(|&(_, c)| c).unwrap_or(0.0)
    }
}

/// One adapter's transmission request for the timeline-level coupling
/// computation.
#[derive(Debug, Clone, Copy)]
pub struct AciAdjustedTx {
    pub t_request: SimTime,
    pub air_start: SimTime,
    pub air_end: SimTime,
    pub deferred: bool,
}

/// Frame-delaying leg of the coupling model over explicit timelines: each
/// request on the measurement adapter defers past any interfering data frame
/// its transmission would overlap, then waits DIFS plus a drawn backoff.
/// Requests with nothing coupled on air go after DIFS alone.
pub fn aci_couple_requests(
    requests: &[SimTime],
    interferer_frames: &[Interval],
    coupling: f64,
    cfg: &AciConfig,
    airtime: u64,
    timing: crate::mac::DcfTiming,
    mut draw_backoff: impl FnMut(u32) -> u32,
) -> Vec<AciAdjustedTx> {
    let sense_busy = cfg.enabled && coupling >= cfg.busy_sense_threshold;
    requests
        .iter()
        .map(|&req| {
            let grant = crate::mac::dcf_grant(
                SimTime::ZERO,
                req,
                airtime,
                timing,
                |iv| {
                    if !sense_busy {
                        return None;
                    }
                    interferer_frames
                        .iter()
                        .filter(|f| f.overlaps(iv))
                        .map(|f| f.end)
                        .max()
                },
                &mut draw_backoff,
            );
            AciAdjustedTx {
                t_request: req,
                air_start: grant.air_start,
                air_end: grant.air_start + airtime,
                deferred: grant.deferred,
            }
        })
        .collect()
}

/// Bundle of all impairment blocks as they appear in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ImpairmentConfig {
    #[serde(default)]
    pub dtim: DtimConfig,
    #[serde(default)]
    pub nm: NmConfig,
    #[serde(default)]
    pub ap_stall: ApStallConfig,
    #[serde(default)]
    pub aci: AciConfig,
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.dtim.validate().map_err(|e| format!("dtim: {e}"))?;
        if self.nm.enabled {
            self.nm.validate().map_err(|e| format!("nm: {e}"))?;
        }
        if self.ap_stall.enabled {
            self.ap_stall
                .validate()
                .map_err(|e| format!("ap_stall: {e}"))?;
        }
        self.aci.validate().map_err(|e| format!("aci: {e}"))?;
        Ok(())
    }
}
