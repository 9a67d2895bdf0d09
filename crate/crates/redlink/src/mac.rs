//! Per-channel IEEE 802.11 DCF timing model: carrier sense, DIFS + backoff,
//! OFDM frame airtime, ACK exchanges, retransmissions and frame losses, plus
//! the AP forwarding step toward the wired port.
//!
//! Medium access is reservation-based: a transmission request is granted
//! atomically and reserves the channel through its whole exchange, so frames
//! on one channel serialize in request order. Basic access skips the random
//! backoff when the medium has been idle (DIFS only); any deferral — local
//! busy or a coupled adapter's frame on air — draws a fresh backoff.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{micros, SimTime};

pub type ChannelId = u16;

/// OFDM PHY constants shared by the 802.11a/g model: 20 us preamble+SIGNAL,
/// 4 us symbols, 16 SERVICE + 6 tail bits per PSDU.
pub const PHY_PREAMBLE_NS: u64 = micros(20);
pub const SYMBOL_NS: u64 = micros(4);
const SERVICE_AND_TAIL_BITS: u64 = 16 + 6;

/// MAC header + FCS bytes on a data frame.
pub const DATA_MAC_OVERHEAD_BYTES: u64 = 28;
/// ACK control frame length in bytes.
pub const ACK_BYTES: u64 = 14;

pub const SUPPORTED_BITRATES_MBPS: [u32; 8] = [6, 9, 12, 18, 24, 36, 48, 54];

#[derive(Debug, Error, PartialEq)]
pub enum MacError {
    #[error("unsupported bitrate {0} Mbit/s (valid: 6, 9, 12, 18, 24, 36, 48, 54)")]
    UnsupportedBitrate(u32),
    #[error("channel {0} is not a valid 2.4 GHz (1-13) or 5 GHz (36-165) channel")]
    InvalidChannel(ChannelId),
    #[error("channel {channel} does not belong to the {band:?} band")]
    ChannelBandMismatch { channel: ChannelId, band: Band },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "2.4GHz")]
    Ghz2_4,
    #[serde(rename = "5GHz")]
    Ghz5,
}

impl Band {
    /// Band implied by the channel numbering: 1..13 are 2.4 GHz, 36..165 are
    /// 5 GHz.
    pub fn for_channel(channel: ChannelId) -> Result<Band, MacError> {
        match channel {
            1..=13 => Ok(Band::Ghz2_4),
            36..=165 => Ok(Band::Ghz5),
            _ => Err(MacError::InvalidChannel(channel)),
        }
    }

    pub fn default_sifs_ns(self) -> u64 {
        match self {
            Band::Ghz2_4 => micros(10),
            Band::Ghz5 => micros(16),
        }
    }
}

/// Frame airtime for the simplified 802.11a/g OFDM PHY.
///
/// duration = preamble + symbol_time * ceil((16 + 8*(payload+overhead) + 6)
/// / bits_per_symbol), with bits_per_symbol = 4 * bitrate.
pub fn frame_airtime(
    payload_bytes: u64,
    mac_overhead_bytes: u64,
    bitrate_mbps: u32,
) -> Result<u64, MacError> {
    if !SUPPORTED_BITRATES_MBPS.contains(&bitrate_mbps) {
        return Err(MacError::UnsupportedBitrate(bitrate_mbps));
    }
    let bits = SERVICE_AND_TAIL_BITS + 8 * (payload_bytes + mac_overhead_bytes);
    let bits_per_symbol = 4 * bitrate_mbps as u64;
    let symbols = bits.div_ceil(bits_per_symbol);
    Ok(PHY_PREAMBLE_NS + symbols * SYMBOL_NS)
}

/// Per-frame loss process. Data frames and ACK frames draw independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataLossModel {
    Bernoulli {
        p_loss: f64,
    },
    GilbertElliott {
        p_gb: f64,
        p_bg: f64,
        p_loss_good: f64,
        p_loss_bad: f64,
    },
}

impl Default for DataLossModel {
    fn default() -> Self {
        DataLossModel::Bernoulli { p_loss: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    #[serde(flatten)]
    pub data: DataLossModel,
    /// Independent Bernoulli loss probability for ACK frames.
    #[serde(default)]
    pub p_ack_loss: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel {
            data: DataLossModel::default(),
            p_ack_loss: 0.0,
        }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<(), String> {
        let probs: Vec<(&str, f64)> = match &self.data {
            DataLossModel::Bernoulli { p_loss } => vec![("p_loss", *p_loss)],
            DataLossModel::GilbertElliott {
                p_gb,
                p_bg,
                p_loss_good,
                p_loss_bad,
            } => vec![
                ("p_gb", *p_gb),
                ("p_bg", *p_bg),
                ("p_loss_good", *p_loss_good),
                ("p_loss_bad", *p_loss_bad),
            ],
        };
        for (name, p) in probs.into_iter().chain([("p_ack_loss", self.p_ack_loss)]) {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0,1], got {p}"));
            }
        }
        Ok(())
    }
}

/// Gilbert-Elliott channel state, advanced once per data-frame attempt.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeState {
    pub bad: bool,
}

/// Static timing and loss configuration of one wireless channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub channel_number: ChannelId,
    /// Derived from the channel number when omitted.
    pub band: Band,
    /// Data bitrate in Mbit/s.
    pub bitrate: u32,
    /// ACK frame bitrate in Mbit/s.
    pub ack_bitrate: u32,
    /// Slot time in ns.
    pub slot: u64,
    /// SIFS in ns; DIFS is always sifs + 2*slot.
    pub sifs: u64,
    /// Minimum contention window in slots.
    pub cw_min: u32,
    /// Retransmission budget; 0 means one-shot frames.
    pub retry_limit: u32,
    #[serde(default)]
    pub loss_model: LossModel,
}

impl ChannelConfig {
    pub fn new(channel_number: ChannelId) -> Result<Self, MacError> {
        let band = Band::for_channel(channel_number)?;
        Ok(ChannelConfig {
            channel_number,
            band,
            bitrate: 54,
            ack_bitrate: 24,
            slot: micros(9),
            sifs: band.default_sifs_ns(),
            cw_min: 15,
            retry_limit: 7,
            loss_model: LossModel::default(),
        })
    }

    pub fn difs(&self) -> u64 {
        self.sifs + 2 * self.slot
    }

    pub fn ack_airtime(&self) -> Result<u64, MacError> {
        frame_airtime(0, ACK_BYTES, self.ack_bitrate)
    }

    /// Contention window in effect on attempt `retries_so_far` (0 = first
    /// transmission): CW = min(2^r * (cw_min+1) - 1, 1023).
    pub fn contention_window(&self, retries_so_far: u32) -> u32 {
        let doubled = (self.cw_min as u64 + 1) << retries_so_far.min(16);
        (doubled - 1).min(1023) as u32
    }

    pub fn validate(&self) -> Result<(), String> {
        let implied = Band::for_channel(self.channel_number)
            .map_err(|e| e.to_string())?;
        if implied != self.band {
            return Err(MacError::ChannelBandMismatch {
                channel: self.channel_number,
                band: self.band,
            }
            .to_string());
        }
        if !SUPPORTED_BITRATES_MBPS.contains(&self.bitrate) {
            return Err(MacError::UnsupportedBitrate(self.bitrate).to_string());
        }
        if !SUPPORTED_BITRATES_MBPS.contains(&self.ack_bitrate) {
            return Err(MacError::UnsupportedBitrate(self.ack_bitrate).to_string());
        }
        if self.slot == 0 || self.sifs == 0 {
            return Err("slot and sifs must be positive".into());
        }
        self.loss_model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApMode {
    TwoAps,
    OneDualBandAp,
}

/// Access-point forwarding model between the wireless and wired segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApConfig {
    pub mode: ApMode,
    /// Base forwarding delay in ns (not a measured constant; config-pinned).
    pub forward_delay_base: u64,
    /// Extra forwarding delay on the 5 GHz path when one dual-band AP
    /// manages both channels.
    pub dual_band_extra: u64,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            mode: ApMode::TwoAps,
            forward_delay_base: micros(150),
            dual_band_extra: micros(40),
        }
    }
}

/// Delivery timestamp on the wired port for a frame received by the AP at
/// `t_rx_at_ap`. `stall_extra` is the AP internal-activity delay in effect at
/// that instant (0 when the stall model is disabled).
pub fn ap_forward(
    t_rx_at_ap: SimTime,
    ap: &ApConfig,
    band: Band,
    stall_extra: u64,
) -> SimTime {
    let dual_extra = match (ap.mode, band) {
        (ApMode::OneDualBandAp, Band::Ghz5) => ap.dual_band_extra,
        _ => 0,
    };
    t_rx_at_ap + ap.forward_delay_base + dual_extra + stall_extra
}

/// Which experiment subset a packet belongs to (concurrent-on-both-channels
/// vs channel-under-test only). `None` outside interference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetTag {
    A,
    NotA,
    Untagged,
}

impl SetTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SetTag::A => "A",
            SetTag::NotA => "NA",
            SetTag::Untagged => "-",
        }
    }

    pub fn parse(s: &str) -> Option<SetTag> {
        match s {
            "A" => Some(SetTag::A),
            "NA" => Some(SetTag::NotA),
            "-" => Some(SetTag::Untagged),
            _ => None,
        }
    }
}

/// Outcome of one packet copy on one channel.
///
/// `t_air_start` is the first attempt's air start; `t_air_end` is the air end
/// of the acknowledged attempt when an ACK was received, otherwise of the
/// last attempt. Both are absent for copies dropped before reaching the air
/// (buffer overflow). `t_eth` is the delivery timestamp at the measurement
/// endpoint: the wired port for uplink traffic, the receiving station for
/// downlink traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub seq: u64,
    pub channel: ChannelId,
    pub tag: SetTag,
    pub t_gen: SimTime,
    pub t_air_start: Option<SimTime>,
    pub t_air_end: Option<SimTime>,
    pub t_ack: Option<SimTime>,
    pub t_eth: Option<SimTime>,
    pub retries: u32,
    pub data_lost: bool,
    pub ack_lost: bool,
}

impl TxRecord {
    pub fn new(seq: u64, channel: ChannelId, t_gen: SimTime) -> Self {
        TxRecord {
            seq,
            channel,
            tag: SetTag::Untagged,
            t_gen,
            t_air_start: None,
            t_air_end: None,
            t_ack: None,
            t_eth: None,
            retries: 0,
            data_lost: false,
            ack_lost: false,
        }
    }

    /// End-to-end latency in ns when delivered.
    pub fn latency_d(&self) -> Option<u64> {
        self.t_eth.map(|t| t - self.t_gen)
    }

    /// Link latency d' in ns, derived from the ACK timestamp by stripping the
    /// SIFS and ACK duration. Equals the acknowledged attempt's air end minus
    /// generation time.
    pub fn latency_d_prime(&self, sifs: u64, ack_airtime: u64) -> Option<u64> {
        self.t_ack.map(|t| t.as_nanos() - sifs - ack_airtime - self.t_gen.as_nanos())
    }
}

/// A committed frame-on-air interval, half-open `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: SimTime,
    pub end: SimTime,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

/// An expected ACK reception window awaiting resolution. A coupled adapter's
/// frame landing inside the window may corrupt the ACK before it resolves.
#[derive(Debug, Clone)]
struct PendingAck {
    exchange: u64,
    window: Interval,
    corrupted: bool,
}

/// Dynamic per-channel medium state.
#[derive(Debug, Default)]
pub struct MediumState {
    /// End of the latest committed exchange; requests serialize behind it.
    busy_until: SimTime,
    /// Committed data-frame air intervals still relevant for coupled sensing.
    data_frames: Vec<Interval>,
    pending_acks: Vec<PendingAck>,
    pub ge: GeState,
}

impl MediumState {
    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    /// Drop state that can no longer influence any future grant.
    pub fn prune(&mut self, now: SimTime) {
        self.data_frames.retain(|iv| iv.end > now);
        self.pending_acks.retain(|p| p.window.end > now);
    }

    /// Latest end among committed data frames overlapping `iv`.
    pub fn data_overlap_end(&self, iv: &Interval) -> Option<SimTime> {
        self.data_frames
            .iter()
            .filter(|f| f.overlaps(iv))
            .map(|f| f.end)
            .max()
    }

    /// Commit a data-frame air interval (visible to coupled carrier sense)
    /// and reserve the medium through `exchange_end`. `now` prunes frames
    /// that can no longer overlap any future prospective interval.
    pub fn commit_data(&mut self, iv: Interval, exchange_end: SimTime, now: SimTime) {
        self.data_frames.retain(|f| f.end > now);
        self.data_frames.push(iv);
        self.busy_until = self.busy_until.max(exchange_end);
    }

    /// Reserve the medium without exposing a coupled-sensible data frame
    /// (background stations are not co-located with the measurement node).
    pub fn commit_occupancy(&mut self, end: SimTime) {
        self.busy_until = self.busy_until.max(end);
    }

    pub fn register_pending_ack(&mut self, exchange: u64, window: Interval) {
        self.pending_acks.push(PendingAck {
            exchange,
            window,
            corrupted: false,
        });
    }

    /// Exchanges whose un-corrupted ACK windows overlap `iv` (corruption
    /// candidates for a coupled transmission).
    pub fn acks_overlapping(&self, iv: &Interval) -> Vec<u64> {
        self.pending_acks
            .iter()
            .filter(|p| !p.corrupted && p.window.overlaps(iv))
            .map(|p| p.exchange)
            .collect()
    }

    pub fn mark_ack_corrupted(&mut self, exchange: u64) {
        if let Some(p) = self.pending_acks.iter_mut().find(|p| p.exchange == exchange) {
            p.corrupted = true;
        }
    }

    /// Remove the pending ACK for `exchange`, reporting whether a coupled
    /// frame corrupted it.
    pub fn resolve_pending_ack(&mut self, exchange: u64) -> bool {
        let idx = self
            .pending_acks
            .iter()
            .position(|p| p.exchange == exchange);
        match idx {
            Some(i) => self.pending_acks.swap_remove(i).corrupted,
            None => false,
        }
    }
}

/// Result of a DCF medium grant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub air_start: SimTime,
    pub backoff_slots: u32,
    /// True when the request had to defer (local queue or coupled frame).
    pub deferred: bool,
}

/// Timing constants a grant needs from the channel config.
#[derive(Debug, Clone, Copy)]
pub struct DcfTiming {
    pub difs: u64,
    pub slot: u64,
    /// Contention-window upper bound for backoff draws.
    pub cw: u32,
}

impl ChannelConfig {
    pub fn dcf_timing(&self, retries_so_far: u32) -> DcfTiming {
        DcfTiming {
            difs: self.difs(),
            slot: self.slot,
            cw: self.contention_window(retries_so_far),
        }
    }
}

/// Compute the air start for a transmission requested at `t_request`.
///
/// Basic access: medium idle since the request and nothing coupled on air —
/// transmit after DIFS alone. Any deferral waits out the blocker, then DIFS
/// plus a random backoff drawn from `draw_backoff` (called with the
/// contention-window upper bound).
///
/// `coupled_frames` reports, for a prospective air interval, the latest end
/// among coupled-channel data frames overlapping it (carrier sense reads busy
/// only for data frames of co-located adapters, never for their ACKs).
pub fn dcf_grant(
    local_busy_until: SimTime,
    t_request: SimTime,
    airtime: u64,
    timing: DcfTiming,
    coupled_frames: impl Fn(&Interval) -> Option<SimTime>,
    mut draw_backoff: impl FnMut(u32) -> u32,
) -> Grant {
    let mut t = t_request.max(local_busy_until);
    let mut deferred = t > t_request;
    loop {
        let backoff_slots = if deferred { draw_backoff(timing.cw) } else { 0 };
        let air_start = t + timing.difs + backoff_slots as u64 * timing.slot;
        let prospective = Interval {
            start: air_start,
            end: air_start + airtime,
        };
        match coupled_frames(&prospective) {
            Some(end) if end > t => {
                t = end;
                deferred = true;
            }
            _ => {
                return Grant {
                    air_start,
                    backoff_slots,
                    deferred,
                };
            }
        }
    }
}
