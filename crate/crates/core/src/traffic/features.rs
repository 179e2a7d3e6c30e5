use std::collections::BTreeSet;
use std::net::IpAddr;

use indexmap::IndexMap;

use super::{hour_index, median, sorted, Direction, FlowRecord, Protocol};

/// Dynamic feature codes in taxonomy order.
pub const DYNAMIC_FEATURES: [&str; 17] = [
    "CCOM", "IATI", "PCKI", "PCSI", "PCVI", "ENCI", "UDPI", "IATO", "PCKO", "PCSO", "PCVO", "ENCO",
    "UDPO", "DSIP", "DSPR", "WLPR", "SRIP",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// First local hour counted as night (inclusive).
    pub night_start_hour: u32,
    /// Local hour at which night ends (exclusive). May be below
    /// `night_start_hour` for windows that wrap past midnight.
    pub night_end_hour: u32,
    /// Device-local offset from UTC in minutes.
    pub utc_offset_minutes: i32,
    pub ccom_min_span_hours: f64,
    pub encrypted_ports: Vec<u16>,
    pub well_known_max_port: u16,
    pub wlpr_threshold: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            night_start_hour: 0,
            night_end_hour: 6,
            utc_offset_minutes: 0,
            ccom_min_span_hours: 24.0,
            encrypted_ports: vec![443, 8443],
            well_known_max_port: 1024,
            wlpr_threshold: 0.99,
        }
    }
}

impl ExtractionConfig {
    fn is_night(&self, hour_of_day: u32) -> bool {
        let (s, e) = (self.night_start_hour, self.night_end_hour);
        if s <= e {
            (s..e).contains(&hour_of_day)
        } else {
            hour_of_day >= s || hour_of_day < e
        }
    }
}

/// Extracted values plus a reason for every feature that could not be
/// computed. Both maps follow [`DYNAMIC_FEATURES`] order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynamicFeatures {
    pub values: IndexMap<String, f64>,
    pub missing: IndexMap<String, String>,
}

impl DynamicFeatures {
    pub fn get(&self, code: &str) -> Option<f64> {
        self.values.get(code).copied()
    }
}

fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::Inbound => "inbound",
        Direction::Outbound => "outbound",
    }
}

fn packet_share(flows: &[&FlowRecord], pred: impl Fn(&FlowRecord) -> bool) -> f64 {
    let total: u64 = flows.iter().map(|f| f.packets).sum();
    let hit: u64 = flows.iter().filter(|f| pred(f)).map(|f| f.packets).sum();
    hit as f64 / total as f64
}

fn per_direction(
    flows: &[&FlowRecord],
    dir: Direction,
    cfg: &ExtractionConfig,
) -> Vec<(&'static str, Result<f64, String>)> {
    let suffix = match dir {
        Direction::Inbound => 'I',
        Direction::Outbound => 'O',
    };
    let code = |p: &str| -> &'static str {
        DYNAMIC_FEATURES
            .iter()
            .find(|c| c.starts_with(p) && c.ends_with(suffix))
            .expect("dynamic feature code")
    };
    let label = direction_label(dir);
    let fs: Vec<&FlowRecord> = flows
        .iter()
        .copied()
        .filter(|f| f.direction == dir)
        .collect();
    let none = || Err(format!("no {label} sessions"));

    let iat = if fs.len() < 2 {
        Err(format!("fewer than 2 {label} sessions"))
    } else {
        let mut gaps: Vec<f64> = fs
            .windows(2)
            .map(|w| {
                (w[1].start_time - w[0].start_time)
                    .num_microseconds()
                    .unwrap_or(i64::MAX) as f64
                    / 1e6
            })
            .collect();
        Ok(median(&mut gaps).expect("non-empty"))
    };
    if fs.is_empty() {
        return ["IAT", "PCK", "PCS", "PCV", "ENC", "UDP"]
            .iter()
            .map(|p| (code(p), if *p == "IAT" { iat.clone() } else { none() }))
            .collect();
    }

    let mut pck: Vec<f64> = fs.iter().map(|f| f.packets as f64).collect();
    let pck = median(&mut pck).expect("non-empty");
    let bytes: u64 = fs.iter().map(|f| f.bytes).sum();
    let packets: u64 = fs.iter().map(|f| f.packets).sum();
    let pcs = bytes as f64 / fs.len() as f64;
    let overall = bytes as f64 / packets as f64;
    let var = fs
        .iter()
        .map(|f| {
            let d = f.mean_packet_size() - overall;
            f.packets as f64 * d * d
        })
        .sum::<f64>()
        / packets as f64;
    let enc = packet_share(&fs, |f| cfg.encrypted_ports.contains(&f.peer_port));
    let udp = packet_share(&fs, |f| f.protocol == Protocol::Udp);

    vec![
        (code("IAT"), iat),
        (code("PCK"), Ok(pck)),
        (code("PCS"), Ok(pcs)),
        (code("PCV"), Ok(var.sqrt())),
        (code("ENC"), Ok(enc)),
        (code("UDP"), Ok(udp)),
    ]
}

/// Unique-count series per wall-clock hour over the capture window, zero for
/// empty hours.
pub(crate) fn hourly_unique<K: Ord>(
    flows: &[&FlowRecord],
    first_hour: i64,
    hours: usize,
    keep: impl Fn(&FlowRecord) -> Option<K>,
) -> Vec<f64> {
    let mut buckets: Vec<BTreeSet<K>> = (0..hours).map(|_| BTreeSet::new()).collect();
    for f in flows {
        if let Some(k) = keep(f) {
            buckets[(hour_index(&f.start_time) - first_hour) as usize].insert(k);
        }
    }
    buckets.iter().map(|b| b.len() as f64).collect()
}

pub(crate) fn hour_window(flows: &[&FlowRecord]) -> Option<(i64, usize)> {
    let first = hour_index(&flows.first()?.start_time);
    let last = hour_index(&flows.last()?.start_time);
    Some((first, (last - first + 1) as usize))
}

fn ccom(flows: &[&FlowRecord], cfg: &ExtractionConfig) -> Result<f64, String> {
    let (first, last) = match (flows.first(), flows.last()) {
        (Some(a), Some(b)) => (a.start_time, b.start_time),
        _ => return Err("no sessions".into()),
    };
    let span_h = (last - first).num_seconds() as f64 / 3600.0;
    if span_h < cfg.ccom_min_span_hours {
        return Err(format!(
            "capture spans {span_h:.1} h; {:.0} h required",
            cfg.ccom_min_span_hours
        ));
    }
    let shift = i64::from(cfg.utc_offset_minutes) * 60;
    let local_hour = |f: &FlowRecord| (f.start_time.timestamp() + shift).div_euclid(3600);
    let h0 = local_hour(flows[0]);
    let hours = (local_hour(flows[flows.len() - 1]) - h0 + 1) as usize;
    let mut packets = vec![0u64; hours];
    for f in flows {
        packets[(local_hour(f) - h0) as usize] += f.packets;
    }
    let mut night = Vec::new();
    let mut day_max: Option<u64> = None;
    for (i, &p) in packets.iter().enumerate() {
        let hod = (h0 + i as i64).rem_euclid(24) as u32;
        if cfg.is_night(hod) {
            night.push(p as f64);
        } else {
            day_max = Some(day_max.map_or(p, |m| m.max(p)));
        }
    }
    let day_max = day_max.ok_or("no day hours in capture window")?;
    if night.is_empty() {
        return Err("no night hours in capture window".into());
    }
    let night_mean = night.iter().sum::<f64>() / night.len() as f64;
    if day_max == 0 {
        return if night_mean > 0.0 {
            Ok(1.0)
        } else {
            Err("no traffic in capture window".into())
        };
    }
    Ok((night_mean / day_max as f64).clamp(0.0, 1.0))
}

/// Computes every dynamic taxonomy feature from device-oriented flows.
pub fn extract_dynamic_features(flows: &[FlowRecord], cfg: &ExtractionConfig) -> DynamicFeatures {
    let fs = sorted(flows);
    let mut results: Vec<(&'static str, Result<f64, String>)> = Vec::new();
    results.push(("CCOM", ccom(&fs, cfg)));
    results.extend(per_direction(&fs, Direction::Inbound, cfg));
    results.extend(per_direction(&fs, Direction::Outbound, cfg));

    match hour_window(&fs) {
        Some((first, hours)) => {
            let out = |f: &FlowRecord| f.direction == Direction::Outbound;
            let mut dsip = hourly_unique(&fs, first, hours, |f| out(f).then_some(f.peer_ip));
            let mut dspr = hourly_unique(&fs, first, hours, |f| out(f).then_some(f.peer_port));
            let mut srip = hourly_unique::<IpAddr>(&fs, first, hours, |f| {
                (f.direction == Direction::Inbound).then_some(f.peer_ip)
            });
            results.push(("DSIP", Ok(median(&mut dsip).expect("non-empty"))));
            results.push(("DSPR", Ok(median(&mut dspr).expect("non-empty"))));
            let outbound: Vec<&FlowRecord> = fs.iter().copied().filter(|f| out(f)).collect();
            let wlpr = if outbound.is_empty() {
                Err("no outbound sessions".to_string())
            } else {
                let share = packet_share(&outbound, |f| f.peer_port <= cfg.well_known_max_port);
                Ok(if share >= cfg.wlpr_threshold {
                    1.0
                } else {
                    0.0
                })
            };
            results.push(("WLPR", wlpr));
            results.push(("SRIP", Ok(median(&mut srip).expect("non-empty"))));
        }
        None => {
            for c in ["DSIP", "DSPR", "WLPR", "SRIP"] {
                results.push((c, Err("no sessions".into())));
            }
        }
    }

    let mut out = DynamicFeatures::default();
    for code in DYNAMIC_FEATURES {
        let (_, r) = results
            .iter()
            .find(|(c, _)| *c == code)
            .expect("every feature computed");
        match r {
            Ok(v) => {
                out.values.insert(code.to_string(), *v);
            }
            Err(reason) => {
                out.missing.insert(code.to_string(), reason.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn flow(
        secs: i64,
        dir: Direction,
        peer: &str,
        port: u16,
        proto: Protocol,
        pk: u64,
        by: u64,
    ) -> FlowRecord {
        FlowRecord {
            start_time: Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap()
                + Duration::seconds(secs),
            duration: 1.0,
            direction: dir,
            peer_ip: peer.parse().unwrap(),
            device_port: 40000,
            peer_port: port,
            protocol: proto,
            packets: pk,
            bytes: by,
        }
    }

    #[test]
    fn packet_weighted_variability() {
        // Mean sizes 100 (1 packet) and 200 (3 packets): overall 175,
        // variance (1·75² + 3·25²)/4 = 1875.
        let fs = vec![
            flow(0, Direction::Outbound, "1.1.1.1", 80, Protocol::Tcp, 1, 100),
            flow(5, Direction::Outbound, "1.1.1.1", 80, Protocol::Tcp, 3, 600),
        ];
        let d = extract_dynamic_features(&fs, &ExtractionConfig::default());
        assert!((d.get("PCVO").unwrap() - 1875f64.sqrt()).abs() < 1e-12);
        assert_eq!(d.get("PCSO"), Some(350.0));
        assert_eq!(d.get("PCKO"), Some(2.0));
        assert_eq!(d.get("WLPR"), Some(1.0));
        assert!(d.missing.contains_key("PCKI"));
        assert!(d.missing.contains_key("CCOM"));
        assert_eq!(d.get("SRIP"), Some(0.0));
    }

    #[test]
    fn hourly_medians_count_empty_hours() {
        // Hour 0: two peers, hour 1: nothing, hour 2: one peer -> {2, 0, 1}.
        let fs = vec![
            flow(0, Direction::Outbound, "1.1.1.1", 80, Protocol::Tcp, 1, 60),
            flow(10, Direction::Outbound, "2.2.2.2", 80, Protocol::Tcp, 1, 60),
            flow(
                7300,
                Direction::Outbound,
                "1.1.1.1",
                80,
                Protocol::Tcp,
                1,
                60,
            ),
        ];
        let d = extract_dynamic_features(&fs, &ExtractionConfig::default());
        assert_eq!(d.get("DSIP"), Some(1.0));
        assert_eq!(d.get("DSPR"), Some(1.0));
    }

    #[test]
    fn ccom_night_over_day() {
        // 25 hours; 1 packet every night hour, 10 packets at noon.
        let mut fs = Vec::new();
        for h in 0..25 {
            let pk = if h == 12 {
                10
            } else if h % 24 < 6 {
                1
            } else {
                0
            };
            if pk > 0 {
                fs.push(flow(
                    h * 3600,
                    Direction::Outbound,
                    "1.1.1.1",
                    80,
                    Protocol::Tcp,
                    pk,
                    100,
                ));
            }
        }
        let d = extract_dynamic_features(&fs, &ExtractionConfig::default());
        assert!((d.get("CCOM").unwrap() - 0.1).abs() < 1e-12);

        // Shifting the device clock moves the night window.
        let cfg = ExtractionConfig {
            utc_offset_minutes: 6 * 60,
            ..Default::default()
        };
        let d = extract_dynamic_features(&fs, &cfg);
        assert_eq!(d.get("CCOM"), Some(0.0));
    }

    #[test]
    fn wrapping_night_window() {
        let cfg = ExtractionConfig {
            night_start_hour: 22,
            night_end_hour: 5,
            ..Default::default()
        };
        assert!(cfg.is_night(23) && cfg.is_night(0) && cfg.is_night(4));
        assert!(!cfg.is_night(5) && !cfg.is_night(21));
    }

    #[test]
    fn no_flows_all_missing() {
        let d = extract_dynamic_features(&[], &ExtractionConfig::default());
        assert!(d.values.is_empty());
        assert_eq!(d.missing.len(), DYNAMIC_FEATURES.len());
    }
}
