use super::features::{hour_window, hourly_unique};
use super::{sorted, Direction, FlowRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kpi {
    FlowIncomingPackets,
    HourlyFlows,
    HourlyUniqueDstIps,
    HourlyUniqueDstPorts,
}

impl Kpi {
    pub const ALL: [Kpi; 4] = [
        Kpi::FlowIncomingPackets,
        Kpi::HourlyFlows,
        Kpi::HourlyUniqueDstIps,
        Kpi::HourlyUniqueDstPorts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::FlowIncomingPackets => "flow_incoming_packets",
            Kpi::HourlyFlows => "hourly_flows",
            Kpi::HourlyUniqueDstIps => "hourly_unique_dst_ips",
            Kpi::HourlyUniqueDstPorts => "hourly_unique_dst_ports",
        }
    }
}

impl std::fmt::Display for Kpi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiSeries {
    pub kpi: Kpi,
    pub device: String,
    pub values: Vec<f64>,
}

/// The four predictability series, in [`Kpi::ALL`] order.
///
/// Hourly series cover every wall-clock hour from the first to the last flow,
/// with empty hours as 0. `flow_incoming_packets` is empty for a device that
/// never received a session.
pub fn compute_kpis(flows: &[FlowRecord], device: &str) -> Vec<KpiSeries> {
    let fs = sorted(flows);
    let outbound = |f: &FlowRecord| f.direction == Direction::Outbound;
    let incoming: Vec<f64> = fs
        .iter()
        .filter(|f| f.direction == Direction::Inbound)
        .map(|f| f.packets as f64)
        .collect();
    let (flows_h, ips_h, ports_h) = match hour_window(&fs) {
        Some((first, hours)) => {
            let mut counts = vec![0.0; hours];
            for f in fs.iter().filter(|f| outbound(f)) {
                counts[(super::hour_index(&f.start_time) - first) as usize] += 1.0;
            }
            (
                counts,
                hourly_unique(&fs, first, hours, |f| outbound(f).then_some(f.peer_ip)),
                hourly_unique(&fs, first, hours, |f| outbound(f).then_some(f.peer_port)),
            )
        }
        None => Default::default(),
    };
    [incoming, flows_h, ips_h, ports_h]
        .into_iter()
        .zip(Kpi::ALL)
        .map(|(values, kpi)| KpiSeries {
            kpi,
            device: device.to_string(),
            values,
        })
        .collect()
}
