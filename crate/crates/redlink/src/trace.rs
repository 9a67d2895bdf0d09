//! Trace file schemas.
//!
//! Channel trace, one row per (seq, channel):
//! `seq,channel,set_tag,t_gen_ns,t_air_start_ns,t_air_end_ns,t_ack_ns,t_eth_ns,retries,data_lost,ack_lost`
//! with absent timestamps encoded as `-1`, flags as `0/1`, and set_tag one of
//! `A`, `NA`, `-`.
//!
//! Redundant-link trace: `seq,accepted_channel,t_gen_ns,t_accept_ns,lost`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mac::{ChannelId, SetTag, TxRecord};
use crate::prp::RedundantLinkView;
use crate::time::SimTime;

pub const CHANNEL_TRACE_HEADER: &str =
    "seq,channel,set_tag,t_gen_ns,t_air_start_ns,t_air_end_ns,t_ack_ns,t_eth_ns,retries,data_lost,ack_lost";
pub const REDUNDANT_TRACE_HEADER: &str = "seq,accepted_channel,t_gen_ns,t_accept_ns,lost";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("trace is empty")]
    Empty,
}

fn opt_ns(t: Option<SimTime>) -> i64 {
    t.map(|v| v.as_nanos() as i64).unwrap_or(-1)
}

/// Serialize channel records to CSV text (rows in input order).
pub fn write_channel_trace(records: &[TxRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CHANNEL_TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seq,
            r.channel,
            r.tag.as_str(),
            r.t_gen.as_nanos(),
            opt_ns(r.t_air_start),
            opt_ns(r.t_air_end),
            opt_ns(r.t_ack),
            opt_ns(r.t_eth),
            r.retries,
            r.data_lost as u8,
            r.ack_lost as u8,
        );
    }
    out
}

fn parse_field<T: std::str::FromStr>(
    row: usize,
    field: &str,
    value: &str,
) -> Result<T, TraceError> {
    value.parse().map_err(|_| TraceError::Schema {
        row,
        message: format!("bad {field}: {value:?}"),
    })
}

fn parse_opt_ns(row: usize, field: &str, value: &str) -> Result<Option<SimTime>, TraceError> {
    let v: i64 = parse_field(row, field, value)?;
    if v < -1 {
        return Err(TraceError::Schema {
            row,
            message: format!("{field} must be >= -1, got {v}"),
        });
    }
    Ok((v >= 0).then_some(SimTime(v as u64)))
}

fn parse_flag(row: usize, field: &str, value: &str) -> Result<bool, TraceError> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(TraceError::Schema {
            row,
            message: format!("bad flag {field}: {value:?}"),
        }),
    }
}

/// Parse a channel trace, enforcing the schema row by row.
pub fn read_channel_trace(text: &str) -> Result<Vec<TxRecord>, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(TraceError::Empty)?;
    if header != CHANNEL_TRACE_HEADER {
        return Err(TraceError::Header(header.to_string()));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let row = i + 1; // 1-based, header is row 1
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(TraceError::Schema {
                row,
                message: format!("expected 11 fields, got {}", f.len()),
            });
        }
        let tag = SetTag::parse(f[2]).ok_or_else(|| TraceError::Schema {
            row,
            message: format!("bad set_tag: {:?}", f[2]),
        })?;
        let rec = TxRecord {
            seq: parse_field(row, "seq", f[0])?,
            channel: parse_field::<ChannelId>(row, "channel", f[1])?,
            tag,
            t_gen: SimTime(parse_field(row, "t_gen_ns", f[3])?),
            t_air_start: parse_opt_ns(row, "t_air_start_ns", f[4])?,
            t_air_end: parse_opt_ns(row, "t_air_end_ns", f[5])?,
            t_ack: parse_opt_ns(row, "t_ack_ns", f[6])?,
            t_eth: parse_opt_ns(row, "t_eth_ns", f[7])?,
            retries: parse_field(row, "retries", f[8])?,
            data_lost: parse_flag(row, "data_lost", f[9])?,
            ack_lost: parse_flag(row, "ack_lost", f[10])?,
        };
        out.push(rec);
    }
    if out.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(out)
}

/// One redundant-link trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RedundantRow {
    pub seq: u64,
    pub accepted_channel: Option<ChannelId>,
    pub t_gen: SimTime,
    pub t_accept: Option<SimTime>,
}

impl RedundantRow {
    pub fn lost(&self) -> bool {
        self.t_accept.is_none()
    }

    pub fn latency_ns(&self) -> Option<u64> {
        self.t_accept.map(|t| t - self.t_gen)
    }
}

pub fn write_redundant_trace(view: &RedundantLinkView) -> String {
    let mut out = String::new();
    out.push_str(REDUNDANT_TRACE_HEADER);
    out.push('\n');
    for (&seq, &t_gen) in &view.generated {
        match view.accepted.get(&seq) {
            Some(a) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},0",
                    seq,
                    a.channel,
                    t_gen.as_nanos(),
                    a.t_accept.as_nanos()
                );
            }
            None => {
                let _ = writeln!(out, "{},-1,{},-1,1", seq, t_gen.as_nanos());
            }
        }
    }
    out
}

pub fn read_redundant_trace(text: &str) -> Result<Vec<RedundantRow>, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(TraceError::Empty)?;
    if header != REDUNDANT_TRACE_HEADER {
        return Err(TraceError::Header(header.to_string()));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(TraceError::Schema {
                row,
                message: format!("expected 5 fields, got {}", f.len()),
            });
        }
        let ch: i64 = parse_field(row, "accepted_channel", f[1])?;
        let t_accept = parse_opt_ns(row, "t_accept_ns", f[3])?;
        let lost = parse_flag(row, "lost", f[4])?;
        if lost != t_accept.is_none() {
            return Err(TraceError::Schema {
                row,
                message: "lost flag inconsistent with t_accept_ns".into(),
            });
        }
        out.push(RedundantRow {
            seq: parse_field(row, "seq", f[0])?,
            accepted_channel: (ch >= 0).then_some(ch as ChannelId),
            t_gen: SimTime(parse_field(row, "t_gen_ns", f[2])?),
            t_accept,
        });
    }
    if out.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(out)
}
