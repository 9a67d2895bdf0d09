//! Scenario execution: wires the generators, per-channel medium access,
//! impairments and the redundancy layer into one deterministic event run.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::engine::EventQueue;
use crate::impairments::{stall_extra_at, BeaconSchedule, NmMulticastMode};
use crate::mac::{
    ap_forward, dcf_grant, frame_airtime, ChannelId, DataLossModel, Interval, MediumState,
    SetTag, TxRecord, DATA_MAC_OVERHEAD_BYTES,
};
use crate::prp::{PrpError, RedundantLinkView};
use crate::rng::RngStreams;
use crate::scenario::Scenario;
use crate::time::{secs, SimTime};
use crate::traffic::{
    aci_experiment_schedule, cyclic_stream, AciScheduledPacket, BurstProcess, StreamKind,
};

/// Post-horizon slack: in-flight exchanges and buffered releases get this
/// long past the generation window before leftovers count as lost.
const GRACE_NS: u64 = secs(10);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("mac error: {0}")]
    Mac(#[from] crate::mac::MacError),
    #[error("prp error: {0}")]
    Prp(#[from] PrpError),
    #[error("schedule error: {0}")]
    Schedule(#[from] crate::engine::ScheduleError),
    #[error("rng error: {0}")]
    Rng(#[from] crate::rng::RngError),
}

/// Everything a run produces, ready for trace writing and analysis.
pub struct RunOutput {
    /// Per-channel transmission records, seq-ordered, for channels carrying
    /// measurement packets.
    pub channel_records: BTreeMap<ChannelId, Vec<TxRecord>>,
    /// First-copy-wins view when the stream spans several channels.
    pub redundant: Option<RedundantLinkView>,
    pub fired_events: u64,
}

// Event priorities: ties at one instant resolve in this order.
const PRIO_NM_DRAIN: u8 = 0;
const PRIO_ARRIVAL: u8 = 1;
const PRIO_BEACON: u8 = 2;
const PRIO_GEN: u8 = 3;
const PRIO_ACK: u8 = 4;
const PRIO_LOAD: u8 = 5;

#[derive(Debug)]
enum Ev {
    /// Generation tick of measurement packet `idx` (0-based).
    StreamTick { idx: usize },
    /// A downlink copy reaches the AP queue of channel `ch`.
    CopyAtAp { ch: usize, seq: u64 },
    /// Blackout over on `adapter`: drain its station-side buffer.
    NmDrain { adapter: usize },
    /// Beacon `k` on channel `ch`.
    Beacon { ch: usize, k: u64 },
    /// Release of NM-buffered multicast for buffer window `window`.
    NmRelease { ch: usize, window: usize },
    /// ACK window close for exchange `ex`.
    AckClose { ex: u64 },
    /// Next packet of interferer (`load`, `node`).
    LoadNext { proc_idx: usize },
    /// Experiment packet `idx` generation on the channel under test.
    AciTick { idx: usize },
    /// Raw interferer-leg transmission for experiment packet `idx`.
    AciInterferer { idx: usize },
}

/// Per-channel runtime state.
struct ChannelRt {
    cfg: crate::mac::ChannelConfig,
    medium: MediumState,
    /// Airtime of one measurement data frame on this channel.
    data_airtime: u64,
    ack_airtime: u64,
    /// (other channel index, coupling) for every coupled co-located channel.
    coupled: Vec<(usize, f64)>,
    /// Multicast frames parked at the AP awaiting a DTIM release.
    dtim_buffer: VecDeque<u64>,
    /// Multicast frames parked during NM scan windows, keyed by window index.
    nm_buffers: BTreeMap<usize, Vec<u64>>,
    backoff_label: String,
    data_loss_label: String,
    ge_label: String,
    ack_loss_label: String,
}

/// In-flight unicast exchange state.
struct Exchange {
    ch: usize,
    seq: u64,
    attempts: u32,
    first_air_start: SimTime,
    last_air_end: SimTime,
    delivered_air_end: Option<SimTime>,
    cur_data_ok: bool,
    cur_ack_draw_ok: bool,
}

struct Sim<'a> {
    sc: &'a Scenario,
    rng: RngStreams,
    queue: EventQueue<Ev>,
    chans: Vec<ChannelRt>,
    records: Vec<Vec<TxRecord>>,
    /// Whether records[ch][seq-1] has been finalized (loss accounting).
    finalized: Vec<Vec<bool>>,
    // Measurement stream state.
    stream_kind: Option<StreamKind>,
    gen_times: Vec<(u64, SimTime)>,
    /// Channel indices carrying the stream; adapter i = stream channel i.
    stream_chans: Vec<usize>,
    sta_buffers: Vec<VecDeque<u64>>,
    /// Blackout intervals per adapter (unicast deferral + multicast loss).
    blackouts: Vec<Vec<Interval>>,
    /// Merged scan windows per adapter (multicast buffering/away pattern).
    mc_windows: Vec<Vec<Interval>>,
    drain_scheduled: Vec<Option<SimTime>>,
    nm_release_scheduled: Vec<Vec<bool>>,
    beacons: Option<BeaconSchedule>,
    /// Per-AP, per-cycle stall window phases (single entry when shared).
    stall_phases: Vec<Vec<u64>>,
    // ACI experiment state.
    aci_sched: Vec<AciScheduledPacket>,
    aci_m_chan: usize,
    aci_i_chan: usize,
    aci_i_airtime: u64,
    exchanges: BTreeMap<u64, Exchange>,
    next_ex: u64,
    loads: Vec<BurstProcess>,
    load_payload_airtime: Vec<u64>,
    load_chan_idx: Vec<usize>,
    horizon: SimTime,
    duration: SimTime,
}

/// Execute a validated scenario.
pub fn run_simulation(sc: &Scenario) -> Result<RunOutput, SimError> {
    sc.validate()?;
    let mut sim = Sim::new(sc)?;
    sim.prime()?;
    let fired = sim.run();
    sim.finish(fired)
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario) -> Result<Self, SimError> {
        let duration = sc.duration();
        let horizon = duration + GRACE_NS;
        let mut rng = RngStreams::new(sc.seed);

        let stream = sc.streams.first();
        let stream_payload = stream.map(|s| s.payload).unwrap_or(50);

        let mut chans = Vec::new();
        for (i, cfg) in sc.channels.iter().enumerate() {
            let mut coupled = Vec::new();
            for (j, other) in sc.channels.iter().enumerate() {
                if i == j {
                    continue;
                }
                let c = sc.impairments.aci.coupling_between(
                    cfg.channel_number,
                    cfg.band,
                    other.channel_number,
                    other.band,
                );
                if c > 0.0 {
                    coupled.push((j, c));
                }
            }
            let payload = match &sc.aci_experiment {
                Some(aci) => aci.payload,
                None => stream_payload,
            };
            let id = cfg.channel_number;
            chans.push(ChannelRt {
                medium: MediumState::default(),
                data_airtime: frame_airtime(payload, DATA_MAC_OVERHEAD_BYTES, cfg.bitrate)?,
                ack_airtime: cfg.ack_airtime()?,
                coupled,
                dtim_buffer: VecDeque::new(),
                nm_buffers: BTreeMap::new(),
                backoff_label: format!("chan{id}.backoff"),
                data_loss_label: format!("chan{id}.data_loss"),
                ge_label: format!("chan{id}.ge_state"),
                ack_loss_label: format!("chan{id}.ack_loss"),
                cfg: cfg.clone(),
            });
        }

        let chan_index = |id: ChannelId| -> usize {
            sc.channels
                .iter()
                .position(|c| c.channel_number == id)
                .expect("validated channel reference")
        };

        // Measurement stream setup.
        let (stream_kind, gen_times, stream_chans) = match stream {
            Some(s) => {
                let gens = cyclic_stream(s, duration);
                let idxs: Vec<usize> = s.channels.iter().map(|&c| chan_index(c)).collect();
                (Some(s.kind), gens, idxs)
            }
            None => (None, Vec::new(), Vec::new()),
        };

        // NM schedules per adapter.
        let nm = &sc.impairments.nm;
        let n_adapters = stream_chans.len();
        let (blackouts, mc_windows) = if nm.enabled && n_adapters > 0 {
            let offset = match nm.start_offset {
                Some(o) => o,
                None => rng.uniform("nm.phase", 0.0, nm.scan_period as f64)? as u64,
            };
            let b = (0..n_adapters)
                .map(|a| nm.blackout_intervals(a, offset, horizon))
                .collect();
            let w = (0..n_adapters)
                .map(|a| nm.multicast_buffer_windows(a, offset, horizon))
                .collect();
            (b, w)
        } else {
            (vec![Vec::new(); n_adapters], vec![Vec::new(); n_adapters])
        };

        // Beacon schedule (downlink multicast gating).
        let dtim = &sc.impairments.dtim;
        let beacons = if stream_kind == Some(StreamKind::MulticastDown) {
            let offset = match dtim.beacon_offset {
                Some(o) => o,
                None => rng.uniform("dtim.phase", 0.0, dtim.t_beac as f64)? as u64,
            };
            Some(BeaconSchedule::new(dtim.t_beac, dtim.p, offset))
        } else {
            None
        };

        // Stall window phases, one per cycle, per AP (index 0 when shared).
        let stall = &sc.impairments.ap_stall;
        let stall_phases = if stall.enabled {
            let n_aps = if stall.shared_across_channels {
                1
            } else {
                sc.channels.len()
            };
            let cycles = (horizon.as_nanos() / stall.period + 2) as usize;
            (0..n_aps)
                .map(|ap| {
                    let label = format!("ap{ap}.stall");
                    (0..cycles)
                        .map(|_| match stall.phase_offset_per_ap {
                            Some(p) => p,
                            None => rng
                                .uniform(&label, 0.0, (stall.period - stall.max_stall) as f64)
                                .expect("valid bounds")
                                as u64,
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };

        // ACI experiment setup.
        let (aci_sched, aci_m_chan, aci_i_chan, aci_i_airtime) = match &sc.aci_experiment {
            Some(aci) => {
                let sched = aci_experiment_schedule(aci, duration);
                let m = chan_index(aci.channel_m);
                let i = chan_index(aci.channel_i);
                let i_air = frame_airtime(
                    aci.interferer_payload,
                    DATA_MAC_OVERHEAD_BYTES,
                    sc.channels[i].bitrate,
                )?;
                (sched, m, i, i_air)
            }
            None => (Vec::new(), 0, 0, 0),
        };

        // Background load processes.
        let mut loads = Vec::new();
        let mut load_payload_airtime = Vec::new();
        let mut load_chan_idx = Vec::new();
        for l in &sc.loads {
            let idx = chan_index(l.channel);
            let air = frame_airtime(l.payload, DATA_MAC_OVERHEAD_BYTES, sc.channels[idx].bitrate)?;
            for node in 0..l.n_nodes {
                loads.push(BurstProcess::new(l, node));
                load_payload_airtime.push(air);
                load_chan_idx.push(idx);
            }
        }

        let n_chans = sc.channels.len();
        let n_seqs = gen_times.len().max(aci_sched.len());
        let records = vec![Vec::with_capacity(n_seqs); n_chans];
        let finalized = vec![Vec::new(); n_chans];
        let nm_release_scheduled = mc_windows
            .iter()
            .map(|w| vec![false; w.len()])
            .collect();

        Ok(Sim {
            sc,
            rng,
            queue: EventQueue::new(),
            chans,
            records,
            finalized,
            stream_kind,
            gen_times,
            sta_buffers: vec![VecDeque::new(); n_adapters],
            drain_scheduled: vec![None; n_adapters],
            nm_release_scheduled,
            stream_chans,
            blackouts,
            mc_windows,
            beacons,
            stall_phases,
            aci_sched,
            aci_m_chan,
            aci_i_chan,
            aci_i_airtime,
            exchanges: BTreeMap::new(),
            next_ex: 0,
            loads,
            load_payload_airtime,
            load_chan_idx,
            horizon,
            duration,
        })
    }

    /// Schedule the first event of every chain.
    fn prime(&mut self) -> Result<(), SimError> {
        if !self.gen_times.is_empty() {
            let t0 = self.gen_times[0].1;
            self.queue.schedule(t0, PRIO_GEN, Ev::StreamTick { idx: 0 })?;
        }
        if !self.aci_sched.is_empty() {
            let first = self.aci_sched[0];
            self.queue
                .schedule(first.t_gen, PRIO_GEN, Ev::AciTick { idx: 0 })?;
            if let Some(t_i) = first.interferer_at {
                self.queue
                    .schedule(t_i, PRIO_ARRIVAL, Ev::AciInterferer { idx: 0 })?;
            }
        }
        if let Some(b) = &self.beacons {
            let t0 = b.beacon_time(0);
            if t0 <= self.horizon {
                for ch in self.stream_chans.clone() {
                    self.queue.schedule(t0, PRIO_BEACON, Ev::Beacon { ch, k: 0 })?;
                }
            }
        }
        for i in 0..self.loads.len() {
            let t = self.loads[i].next_request(&mut self.rng);
            if t < self.duration {
                self.queue
                    .schedule(t, PRIO_LOAD, Ev::LoadNext { proc_idx: i })?;
            }
        }
        Ok(())
    }

    fn run(&mut self) -> u64 {
        let mut fired = 0;
        while let Some((t, ev)) = self.queue.pop_until(SimTime(u64::MAX)) {
            self.handle(t, ev);
            fired += 1;
        }
        fired
    }

    fn handle(&mut self, t: SimTime, ev: Ev) {
        match ev {
            Ev::StreamTick { idx } => self.on_stream_tick(t, idx),
            Ev::CopyAtAp { ch, seq } => self.on_copy_at_ap(t, ch, seq),
            Ev::NmDrain { adapter } => self.on_nm_drain(t, adapter),
            Ev::Beacon { ch, k } => self.on_beacon(t, ch, k),
            Ev::NmRelease { ch, window } => self.on_nm_release(t, ch, window),
            Ev::AckClose { ex } => self.on_ack_close(t, ex),
            Ev::LoadNext { proc_idx } => self.on_load_next(t, proc_idx),
            Ev::AciTick { idx } => self.on_aci_tick(t, idx),
            Ev::AciInterferer { idx } => self.on_aci_interferer(t, idx),
        }
    }

    // -- measurement stream ------------------------------------------------

    fn on_stream_tick(&mut self, t: SimTime, idx: usize) {
        let (seq, t_gen) = self.gen_times[idx];
        debug_assert_eq!(t, t_gen);
        let kind = self.stream_kind.expect("stream tick without stream");
        for adapter in 0..self.stream_chans.len() {
            let ch = self.stream_chans[adapter];
            let mut rec = TxRecord::new(seq, self.chans[ch].cfg.channel_number, t_gen);
            rec.tag = SetTag::Untagged;
            self.records[ch].push(rec);
            self.finalized[ch].push(false);
            match kind {
                StreamKind::UnicastUp => self.uplink_ready(t_gen, ch, adapter, seq),
                StreamKind::MulticastDown => {
                    // Wired ingress: the copy reaches the AP after the
                    // forwarding delay (plus the dual-band surcharge on the
                    // 5 GHz radio of a single dual-band AP).
                    let t_ap = ap_forward(t_gen, &self.sc.ap, self.chans[ch].cfg.band, 0);
                    self.queue
                        .schedule(t_ap, PRIO_ARRIVAL, Ev::CopyAtAp { ch, seq })
                        .expect("future arrival");
                }
            }
        }
        if idx + 1 < self.gen_times.len() {
            let t_next = self.gen_times[idx + 1].1;
            self.queue
                .schedule(t_next, PRIO_GEN, Ev::StreamTick { idx: idx + 1 })
                .expect("ticks are ordered");
        }
    }

    /// Uplink copy wants the air; a scan blackout on its adapter buffers it.
    fn uplink_ready(&mut self, t: SimTime, ch: usize, adapter: usize, seq: u64) {
        if let Some(iv) = self.active_blackout(adapter, t) {
            self.sta_buffers[adapter].push_back(seq);
            if self.sta_buffers[adapter].len() > self.sc.impairments.nm.buffer_capacity {
                let oldest = self.sta_buffers[adapter].pop_front().unwrap();
                let rec = self.record_mut(ch, oldest);
                rec.data_lost = true;
                self.finalize(ch, oldest);
            }
            if self.drain_scheduled[adapter] != Some(iv.end) {
                self.drain_scheduled[adapter] = Some(iv.end);
                self.queue
                    .schedule(iv.end, PRIO_NM_DRAIN, Ev::NmDrain { adapter })
                    .expect("blackout end is ahead");
            }
            return;
        }
        self.start_unicast(t, ch, seq);
    }

    fn on_nm_drain(&mut self, t: SimTime, adapter: usize) {
        let ch = self.stream_chans[adapter];
        while let Some(seq) = self.sta_buffers[adapter].pop_front() {
            self.start_unicast(t, ch, seq);
        }
    }

    fn active_blackout(&self, adapter: usize, t: SimTime) -> Option<Interval> {
        let ivs = &self.blackouts[adapter];
        let i = ivs.partition_point(|iv| iv.end <= t);
        ivs.get(i).filter(|iv| iv.contains(t)).copied()
    }

    /// Does `iv` overlap any away-window of the receiving adapter?
    fn away_overlap(&self, adapter: usize, iv: &Interval) -> bool {
        if !self.sc.impairments.nm.enabled {
            return false;
        }
        let wins = &self.mc_windows[adapter];
        let i = wins.partition_point(|w| w.end <= iv.start);
        wins.get(i).map(|w| w.overlaps(iv)).unwrap_or(false)
    }

    // -- downlink multicast ------------------------------------------------

    fn on_copy_at_ap(&mut self, t: SimTime, ch: usize, seq: u64) {
        let nm = &self.sc.impairments.nm;
        let adapter = self.adapter_of(ch);
        if nm.enabled && nm.multicast_mode == NmMulticastMode::DtimBuffer {
            let wins = &self.mc_windows[adapter];
            let i = wins.partition_point(|w| w.end <= t);
            if let Some(w) = wins.get(i).filter(|w| w.contains(t)) {
                let release = self
                    .beacons
                    .as_ref()
                    .expect("multicast stream has beacons")
                    .beacon_time_after(w.end);
                self.chans[ch].nm_buffers.entry(i).or_default().push(seq);
                if !self.nm_release_scheduled[adapter][i] {
                    self.nm_release_scheduled[adapter][i] = true;
                    self.queue
                        .schedule(release, PRIO_BEACON, Ev::NmRelease { ch, window: i })
                        .expect("release after window end");
                }
                return;
            }
        }
        if self.sc.impairments.dtim.enabled {
            self.chans[ch].dtim_buffer.push_back(seq);
            return;
        }
        self.transmit_multicast(t, ch, seq);
    }

    fn on_beacon(&mut self, t: SimTime, ch: usize, k: u64) {
        let b = self.beacons.as_ref().expect("beacon without schedule");
        let release = b.count_at(k) == 0;
        let t_next = b.beacon_time(k + 1);
        if release {
            while let Some(seq) = self.chans[ch].dtim_buffer.pop_front() {
                self.transmit_multicast(t, ch, seq);
            }
        }
        if t_next <= self.horizon {
            self.queue
                .schedule(t_next, PRIO_BEACON, Ev::Beacon { ch, k: k + 1 })
                .expect("beacons are ordered");
        }
    }

    fn on_nm_release(&mut self, t: SimTime, ch: usize, window: usize) {
        if let Some(seqs) = self.chans[ch].nm_buffers.remove(&window) {
            for seq in seqs {
                self.transmit_multicast(t, ch, seq);
            }
        }
    }

    fn transmit_multicast(&mut self, t: SimTime, ch: usize, seq: u64) {
        let airtime = self.chans[ch].data_airtime;
        let grant = self.grant(t, ch, airtime, 0);
        let iv = Interval {
            start: grant.air_start,
            end: grant.air_start + airtime,
        };
        self.chans[ch].medium.commit_data(iv, iv.end, t);
        self.corrupt_coupled_acks(ch, &iv);

        let adapter = self.adapter_of(ch);
        let lost = self.draw_data_loss(ch) || self.away_overlap(adapter, &iv);
        let rec = self.record_mut(ch, seq);
        rec.t_air_start = Some(iv.start);
        rec.t_air_end = Some(iv.end);
        rec.retries = 0;
        if lost {
            rec.data_lost = true;
        } else {
            rec.t_eth = Some(iv.end);
        }
        self.finalize(ch, seq);
    }

    // -- unicast exchange --------------------------------------------------

    fn start_unicast(&mut self, t: SimTime, ch: usize, seq: u64) {
        self.next_ex += 1;
        let ex = self.next_ex;
        self.exchanges.insert(
            ex,
            Exchange {
                ch,
                seq,
                attempts: 0,
                first_air_start: SimTime::ZERO,
                last_air_end: SimTime::ZERO,
                delivered_air_end: None,
                cur_data_ok: false,
                cur_ack_draw_ok: false,
            },
        );
        self.attempt(t, ex);
    }

    fn attempt(&mut self, t: SimTime, ex: u64) {
        let (ch, seq, attempts) = {
            let e = &self.exchanges[&ex];
            (e.ch, e.seq, e.attempts)
        };
        let airtime = self.chans[ch].data_airtime;
        let cw = self.chans[ch].cfg.contention_window(attempts);
        let grant = self.grant(t, ch, airtime, cw);

        let iv = Interval {
            start: grant.air_start,
            end: grant.air_start + airtime,
        };
        let sifs = self.chans[ch].cfg.sifs;
        let ack_airtime = self.chans[ch].ack_airtime;
        let window = Interval {
            start: iv.end + sifs,
            end: iv.end + sifs + ack_airtime,
        };
        self.chans[ch].medium.commit_data(iv, window.end, t);
        self.corrupt_coupled_acks(ch, &iv);
        self.chans[ch].medium.register_pending_ack(ex, window);

        // A coupled frame already committed over my ACK window corrupts it.
        let mut corrupt_own = false;
        for (other, coupling) in self.chans[ch].coupled.clone() {
            if self.chans[other].medium.data_overlap_end(&window).is_some() {
                let p = self.sc.impairments.aci.p_ack_corrupt_on_overlap * coupling;
                if self.rng.bernoulli("aci.ack_corrupt", p) {
                    corrupt_own = true;
                }
            }
        }
        if corrupt_own {
            self.chans[ch].medium.mark_ack_corrupted(ex);
        }

        let data_ok = !self.draw_data_loss(ch);
        let ack_draw_ok = {
            let rng = &mut self.rng;
            let c = &self.chans[ch];
            !rng.bernoulli(&c.ack_loss_label, c.cfg.loss_model.p_ack_loss)
        };

        let deliver = {
            let e = self.exchanges.get_mut(&ex).unwrap();
            if e.attempts == 0 {
                e.first_air_start = iv.start;
            }
            e.last_air_end = iv.end;
            e.attempts += 1;
            e.cur_data_ok = data_ok;
            e.cur_ack_draw_ok = ack_draw_ok;
            if data_ok && e.delivered_air_end.is_none() {
                e.delivered_air_end = Some(iv.end);
                true
            } else {
                false
            }
        };
        if deliver {
            let stall = self.stall_extra(ch, iv.end);
            let t_eth = ap_forward(iv.end, &self.sc.ap, self.chans[ch].cfg.band, stall);
            self.record_mut(ch, seq).t_eth = Some(t_eth);
        }

        self.queue
            .schedule(window.end, PRIO_ACK, Ev::AckClose { ex })
            .expect("ack window is ahead");
    }

    fn on_ack_close(&mut self, t: SimTime, ex: u64) {
        let (ch, seq) = {
            let e = &self.exchanges[&ex];
            (e.ch, e.seq)
        };
        let corrupted = self.chans[ch].medium.resolve_pending_ack(ex);
        let e = &self.exchanges[&ex];
        let success = e.cur_data_ok && e.cur_ack_draw_ok && !corrupted;
        let retries_left = e.attempts <= self.chans[ch].cfg.retry_limit;

        if success {
            let e = self.exchanges.remove(&ex).unwrap();
            let rec = self.record_mut(ch, seq);
            rec.t_air_start = Some(e.first_air_start);
            rec.t_air_end = Some(e.last_air_end);
            rec.t_ack = Some(t);
            rec.retries = e.attempts - 1;
            self.finalize(ch, seq);
        } else if retries_left {
            self.attempt(t, ex);
        } else {
            let e = self.exchanges.remove(&ex).unwrap();
            let rec = self.record_mut(ch, seq);
            rec.t_air_start = Some(e.first_air_start);
            rec.t_air_end = Some(e.last_air_end);
            rec.retries = e.attempts - 1;
            if e.delivered_air_end.is_none() {
                rec.data_lost = true;
            } else {
                // Delivered, but the sender never saw an ACK.
                rec.ack_lost = true;
            }
            self.finalize(ch, seq);
        }
    }

    // -- ACI experiment ----------------------------------------------------

    fn on_aci_tick(&mut self, t: SimTime, idx: usize) {
        let pkt = self.aci_sched[idx];
        let ch = self.aci_m_chan;
        let mut rec = TxRecord::new(pkt.seq, self.chans[ch].cfg.channel_number, pkt.t_gen);
        rec.tag = if pkt.duplexed { SetTag::A } else { SetTag::NotA };
        self.records[ch].push(rec);
        self.finalized[ch].push(false);
        self.start_unicast(t, ch, pkt.seq);

        if idx + 1 < self.aci_sched.len() {
            let next = self.aci_sched[idx + 1];
            self.queue
                .schedule(next.t_gen, PRIO_GEN, Ev::AciTick { idx: idx + 1 })
                .expect("ticks are ordered");
            if let Some(t_i) = next.interferer_at {
                self.queue
                    .schedule(t_i, PRIO_ARRIVAL, Ev::AciInterferer { idx: idx + 1 })
                    .expect("lead shorter than period");
            }
        }
    }

    /// Interferer-leg transmission: goes on air at its displaced schedule
    /// time unless a coupled data frame overlaps, in which case it defers
    /// behind that frame plus DIFS and a drawn backoff.
    fn on_aci_interferer(&mut self, t: SimTime, _idx: usize) {
        let ch = self.aci_i_chan;
        let airtime = self.aci_i_airtime;
        let difs = self.chans[ch].cfg.difs();
        let slot = self.chans[ch].cfg.slot;
        let cw = self.chans[ch].cfg.cw_min;

        let mut t_cur = t.max(self.chans[ch].medium.busy_until());
        let mut deferred = t_cur > t;
        let iv = loop {
            let start = if deferred {
                let rng = &mut self.rng;
                let k = rng.uniform_u32(&self.chans[ch].backoff_label, 0, cw);
                t_cur + difs + k as u64 * slot
            } else {
                t_cur
            };
            let iv = Interval {
                start,
                end: start + airtime,
            };
            match self.coupled_overlap_end(ch, &iv) {
                Some(end) if end > t_cur => {
                    t_cur = end;
                    deferred = true;
                }
                _ => break iv,
            }
        };
        self.chans[ch].medium.commit_data(iv, iv.end, t);
        self.corrupt_coupled_acks(ch, &iv);
    }

    // -- background load ---------------------------------------------------

    fn on_load_next(&mut self, t: SimTime, proc_idx: usize) {
        let ch = self.load_chan_idx[proc_idx];
        let airtime = self.load_payload_airtime[proc_idx];
        let cw = self.chans[ch].cfg.cw_min;
        let grant = self.grant(t, ch, airtime, cw);
        self.chans[ch]
            .medium
            .commit_occupancy(grant.air_start + airtime);

        let t_next = self.loads[proc_idx].next_request(&mut self.rng);
        if t_next < self.duration {
            self.queue
                .schedule(t_next, PRIO_LOAD, Ev::LoadNext { proc_idx })
                .expect("load requests are ordered");
        }
    }

    // -- shared helpers ------------------------------------------------------

    fn adapter_of(&self, ch: usize) -> usize {
        self.stream_chans
            .iter()
            .position(|&c| c == ch)
            .unwrap_or(0)
    }

    fn record_mut(&mut self, ch: usize, seq: u64) -> &mut TxRecord {
        &mut self.records[ch][(seq - 1) as usize]
    }

    fn finalize(&mut self, ch: usize, seq: u64) {
        self.finalized[ch][(seq - 1) as usize] = true;
    }

    /// DCF grant on channel `ch` with coupled carrier sense.
    fn grant(&mut self, t: SimTime, ch: usize, airtime: u64, cw: u32) -> crate::mac::Grant {
        let threshold = self.sc.impairments.aci.busy_sense_threshold;
        let rng = &mut self.rng;
        let chans = &self.chans;
        let cfg = &chans[ch].cfg;
        let label = &chans[ch].backoff_label;
        let timing = crate::mac::DcfTiming {
            difs: cfg.difs(),
            slot: cfg.slot,
            cw,
        };
        dcf_grant(
            chans[ch].medium.busy_until(),
            t,
            airtime,
            timing,
            |iv| {
                chans[ch]
                    .coupled
                    .iter()
                    .filter(|&&(_, c)| c >= threshold)
                    .filter_map(|&(other, _)| chans[other].medium.data_overlap_end(iv))
                    .max()
            },
            |cw| rng.uniform_u32(label, 0, cw),
        )
    }

    fn coupled_overlap_end(&self, ch: usize, iv: &Interval) -> Option<SimTime> {
        let threshold = self.sc.impairments.aci.busy_sense_threshold;
        self.chans[ch]
            .coupled
            .iter()
            .filter(|&&(_, c)| c >= threshold)
            .filter_map(|&(other, _)| self.chans[other].medium.data_overlap_end(iv))
            .max()
    }

    /// My committed data frame may corrupt coupled channels' pending ACKs.
    fn corrupt_coupled_acks(&mut self, ch: usize, iv: &Interval) {
        for (other, coupling) in self.chans[ch].coupled.clone() {
            let victims = self.chans[other].medium.acks_overlapping(iv);
            for ex in victims {
                let p = self.sc.impairments.aci.p_ack_corrupt_on_overlap * coupling;
                if self.rng.bernoulli("aci.ack_corrupt", p) {
                    self.chans[other].medium.mark_ack_corrupted(ex);
                }
            }
        }
    }

    fn draw_data_loss(&mut self, ch: usize) -> bool {
        let rng = &mut self.rng;
        let c = &mut self.chans[ch];
        match c.cfg.loss_model.data {
            DataLossModel::Bernoulli { p_loss } => rng.bernoulli(&c.data_loss_label, p_loss),
            DataLossModel::GilbertElliott {
                p_gb,
                p_bg,
                p_loss_good,
                p_loss_bad,
            } => {
                // Transition once per attempt, then draw by state.
                let p_flip = if c.medium.ge.bad { p_bg } else { p_gb };
                if rng.bernoulli(&c.ge_label, p_flip) {
                    c.medium.ge.bad = !c.medium.ge.bad;
                }
                let p = if c.medium.ge.bad {
                    p_loss_bad
                } else {
                    p_loss_good
                };
                rng.bernoulli(&c.data_loss_label, p)
            }
        }
    }

    fn stall_extra(&mut self, ch: usize, t: SimTime) -> u64 {
        let stall = &self.sc.impairments.ap_stall;
        if !stall.enabled {
            return 0;
        }
        let ap = if stall.shared_across_channels { 0 } else { ch };
        let phases = &self.stall_phases[ap];
        stall_extra_at(t, stall, |cycle| phases[cycle as usize])
    }

    fn finish(mut self, fired: u64) -> Result<RunOutput, SimError> {
        // Anything still buffered after the horizon is a truncation loss.
        for ch in 0..self.chans.len() {
            let mut leftovers: Vec<u64> = self.chans[ch].dtim_buffer.drain(..).collect();
            leftovers.extend(
                std::mem::take(&mut self.chans[ch].nm_buffers)
                    .into_values()
                    .flatten(),
            );
            for seq in leftovers {
                let rec = self.record_mut(ch, seq);
                rec.data_lost = true;
                self.finalize(ch, seq);
            }
        }
        for (adapter, buf) in self.sta_buffers.iter_mut().enumerate() {
            let ch = self.stream_chans[adapter];
            let leftovers: Vec<u64> = buf.drain(..).collect();
            for seq in leftovers {
                self.records[ch][(seq - 1) as usize].data_lost = true;
                self.finalized[ch][(seq - 1) as usize] = true;
            }
        }
        debug_assert!(
            self.finalized.iter().all(|v| v.iter().all(|&f| f)),
            "every record must be finalized"
        );

        let mut channel_records = BTreeMap::new();
        for (i, recs) in self.records.into_iter().enumerate() {
            if !recs.is_empty() {
                channel_records.insert(self.sc.channels[i].channel_number, recs);
            }
        }

        let redundant = match self.sc.streams.first() {
            Some(s) if s.channels.len() >= 2 => Some(RedundantLinkView::from_records(
                s.channels.clone(),
                &channel_records,
            )?),
            _ => None,
        };

        Ok(RunOutput {
            channel_records,
            redundant,
            fired_events: fired,
        })
    }
}
