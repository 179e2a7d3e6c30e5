//! Flow ingestion, dynamic feature extraction and predictability KPIs.

mod features;
mod kpi;
mod profile;

pub use features::{extract_dynamic_features, DynamicFeatures, ExtractionConfig, DYNAMIC_FEATURES};
pub use kpi::{compute_kpis, Kpi, KpiSeries};
pub use profile::{DeviceProfile, StaticProfile};

use std::cmp::Ordering;
use std::fs::File;
use std::io::Read;
use std::net::IpAddr;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Csv { line: u64, source: csv::Error },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("profile parse error: {0}")]
    ProfileParse(#[from] toml::de::Error),
    #[error("profile serialize error: {0}")]
    ProfileSerialize(#[from] toml::ser::Error),
    #[error("feature {0} is extracted from traffic and cannot be supplied in a static profile")]
    Conflict(String),
    #[error("feature {feature} is static or declared and cannot appear among dynamic values")]
    NotDynamic { feature: String },
    #[error("unknown feature code {0}")]
    UnknownFeature(String),
    #[error("invalid value {value} for {feature}: {message}")]
    InvalidValue {
        feature: String,
        value: f64,
        message: String,
    },
    #[error("invalid timestamp `{0}`")]
    Timestamp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Tcp,
    Udp,
    Other,
}

impl Protocol {
    /// Accepts IANA numbers (`6`, `17`) or names, case-insensitively.
    pub fn parse(s: &str) -> Option<Protocol> {
        let s = s.trim();
        if s.is_empty() {
            return None;
        }
        if let Ok(n) = s.parse::<u8>() {
            return Some(match n {
                6 => Protocol::Tcp,
                17 => Protocol::Udp,
                _ => Protocol::Other,
            });
        }
        Some(match s.to_ascii_lowercase().as_str() {
            "tcp" => Protocol::Tcp,
            "udp" => Protocol::Udp,
            _ => Protocol::Other,
        })
    }
}

/// One session, seen from the device's side.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub start_time: DateTime<Utc>,
    pub duration: f64,
    pub direction: Direction,
    pub peer_ip: IpAddr,
    pub device_port: u16,
    pub peer_port: u16,
    pub protocol: Protocol,
    pub packets: u64,
    pub bytes: u64,
}

impl FlowRecord {
    /// Total order used to make every computation independent of input order.
    pub(crate) fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.start_time
            .cmp(&other.start_time)
            .then(self.direction.cmp(&other.direction))
            .then(self.peer_ip.cmp(&other.peer_ip))
            .then(self.device_port.cmp(&other.device_port))
            .then(self.peer_port.cmp(&other.peer_port))
            .then(self.protocol.cmp(&other.protocol))
            .then(self.packets.cmp(&other.packets))
            .then(self.bytes.cmp(&other.bytes))
            .then(self.duration.total_cmp(&other.duration))
    }

    pub fn mean_packet_size(&self) -> f64 {
        self.bytes as f64 / self.packets as f64
    }
}

pub(crate) fn sorted(flows: &[FlowRecord]) -> Vec<&FlowRecord> {
    let mut v: Vec<&FlowRecord> = flows.iter().collect();
    v.sort_by(|a, b| a.canonical_cmp(b));
    v
}

/// Start of the wall-clock hour containing `t`, as hours since the epoch.
pub(crate) fn hour_index(t: &DateTime<Utc>) -> i64 {
    t.timestamp().div_euclid(3600)
}

/// Parses an ISO-8601 timestamp. Offsets are honoured; a bare timestamp is
/// taken as UTC.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, TrafficError> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    Err(TrafficError::Timestamp(s.to_string()))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

#[derive(Debug, Deserialize)]
struct RawFlow {
    start_time: String,
    duration_s: f64,
    src_ip: IpAddr,
    dst_ip: IpAddr,
    src_port: u16,
    dst_port: u16,
    protocol: String,
    packets: u64,
    bytes: u64,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedFlows {
    pub flows: Vec<FlowRecord>,
    /// Rows where neither endpoint is the device.
    pub skipped: usize,
}

/// Reads a flow CSV and orients each record relative to `device_ip`.
pub fn load_flows<R: Read>(reader: R, device_ip: IpAddr) -> Result<LoadedFlows, TrafficError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| TrafficError::Csv { line: 1, source })?
        .clone();
    let mut out = LoadedFlows::default();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|source| TrafficError::Csv {
                line: source.position().map_or(0, |p| p.line()),
                source,
            })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let raw: RawFlow = record
            .deserialize(Some(&headers))
            .map_err(|source| TrafficError::Csv { line, source })?;
        let bad = |message: String| TrafficError::Row { line, message };

        let start_time = parse_timestamp(&raw.start_time).map_err(|e| bad(e.to_string()))?;
        let protocol =
            Protocol::parse(&raw.protocol).ok_or_else(|| bad("empty protocol".into()))?;
        if raw.packets < 1 {
            return Err(bad("packets must be at least 1".into()));
        }
        if raw.bytes < raw.packets {
            return Err(bad(format!(
                "bytes ({}) below packets ({})",
                raw.bytes, raw.packets
            )));
        }
        if !(raw.duration_s >= 0.0 && raw.duration_s.is_finite()) {
            return Err(bad(format!("invalid duration {}", raw.duration_s)));
        }
        let (direction, peer_ip, device_port, peer_port) = if raw.src_ip == device_ip {
            (Direction::Outbound, raw.dst_ip, raw.src_port, raw.dst_port)
        } else if raw.dst_ip == device_ip {
            (Direction::Inbound, raw.src_ip, raw.dst_port, raw.src_port)
        } else {
            out.skipped += 1;
            continue;
        };
        out.flows.push(FlowRecord {
            start_time: truncate_micros(start_time),
            duration: raw.duration_s,
            direction,
            peer_ip,
            device_port,
            peer_port,
            protocol,
            packets: raw.packets,
            bytes: raw.bytes,
        });
    }
    Ok(out)
}

pub fn load_flows_path(
    path: impl AsRef<Path>,
    device_ip: IpAddr,
) -> Result<LoadedFlows, TrafficError> {
    load_flows(File::open(path)?, device_ip)
}

fn truncate_micros(t: DateTime<Utc>) -> DateTime<Utc> {
    let nanos = t.nanosecond() / 1000 * 1000;
    t.with_nanosecond(nanos).unwrap_or(t)
}

/// Median of a non-empty slice; even lengths give the midpoint.
pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "start_time,duration_s,src_ip,dst_ip,src_port,dst_port,protocol,packets,bytes\n";

    #[test]
    fn direction_from_device_ip() {
        let text = format!(
            "{HEADER}2021-03-01T10:00:00Z,1.5,10.0.0.2,1.1.1.1,5000,443,TCP,3,300\n\
             2021-03-01T10:00:01Z,0,8.8.8.8,10.0.0.2,53,5001,17,1,80\n\
             2021-03-01T10:00:02Z,0,8.8.8.8,9.9.9.9,53,5001,udp,1,80\n"
        );
        let dev: IpAddr = "10.0.0.2".parse().unwrap();
        let got = load_flows(text.as_bytes(), dev).unwrap();
        assert_eq!(got.flows.len(), 2);
        assert_eq!(got.skipped, 1);
        assert_eq!(got.flows[0].direction, Direction::Outbound);
        assert_eq!(got.flows[0].peer_port, 443);
        assert_eq!(got.flows[1].direction, Direction::Inbound);
        assert_eq!(got.flows[1].protocol, Protocol::Udp);
        assert_eq!(got.flows[1].device_port, 5001);
    }

    #[test]
    fn empty_file() {
        let got = load_flows(HEADER.as_bytes(), "10.0.0.2".parse().unwrap()).unwrap();
        assert!(got.flows.is_empty());
        let got = load_flows("".as_bytes(), "10.0.0.2".parse().unwrap()).unwrap();
        assert!(got.flows.is_empty());
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = format!(
            "{HEADER}2021-03-01T10:00:00Z,1,10.0.0.2,1.1.1.1,1,2,TCP,3,300\n\
             2021-03-01T10:00:00Z,1,10.0.0.2,1.1.1.1,1,2,TCP,3,2\n"
        );
        match load_flows(text.as_bytes(), "10.0.0.2".parse().unwrap()) {
            Err(TrafficError::Row { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}yesterday,1,10.0.0.2,1.1.1.1,1,2,TCP,3,300\n");
        assert!(matches!(
            load_flows(text.as_bytes(), "10.0.0.2".parse().unwrap()),
            Err(TrafficError::Row { line: 2, .. })
        ));
        let text = format!("{HEADER}2021-03-01T10:00:00Z,1,not-an-ip,1.1.1.1,1,2,TCP,3,300\n");
        assert!(matches!(
            load_flows(text.as_bytes(), "10.0.0.2".parse().unwrap()),
            Err(TrafficError::Csv { line: 2, .. })
        ));
    }

    #[test]
    fn timestamps() {
        let a = parse_timestamp("2021-03-01T10:00:00.123456Z").unwrap();
        let b = parse_timestamp("2021-03-01 10:00:00.123456").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_timestamp(&a), "2021-03-01T10:00:00.123456Z");
        let c = parse_timestamp("2021-03-01T12:00:00+02:00").unwrap();
        assert_eq!(hour_index(&c), hour_index(&a));
    }

    #[test]
    fn median_rule() {
        assert_eq!(median(&mut [10.0, 30.0]), Some(20.0));
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut []), None);
    }
}
