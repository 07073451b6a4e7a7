use super::graph::KernelKind;
use super::mapping::UnitClass;
use super::sim::ScheduleTrace;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub name: String,
    pub class: String,
    pub busy: u64,
    /// Busy cycles weighted by the active fraction of the unit.
    pub active: f64,
    /// `busy / makespan`.
    pub occupancy: f64,
    /// `active / makespan`.
    pub utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub makespan: u64,
    pub units: Vec<UnitReport>,
    /// Mean utilization over the compute units that ran at least one kernel.
    pub aggregate: f64,
    /// Useful butterfly-stage work over the capacity of every NTTU and CU
    /// that ran a transform.
    pub ntt_datapath: f64,
    /// Unit-cycles spent in transforms and in MAC kernels.
    pub ntt_busy: u64,
    pub mac_busy: u64,
    pub kind_counts: BTreeMap<String, usize>,
}

/// Per-unit and aggregate utilization of a finished trace.
pub fn utilization_report(trace: &ScheduleTrace) -> UtilizationReport {
    let nu = trace.units.len();
    let mut busy = vec![0u64; nu];
    let mut active = vec![0f64; nu];
    let mut ran_ntt = vec![false; nu];
    let mut ntt_active = 0f64;
    let (mut ntt_busy, mut mac_busy) = (0u64, 0u64);
    for s in &trace.slices {
        let d = s.end - s.start;
        busy[s.unit] += d;
        active[s.unit] += s.active * d as f64;
        let kind = trace.node_kinds[s.node];
        let class = trace.units[s.unit].class;
        if kind.is_ntt() {
            ntt_busy += d;
            if matches!(class, UnitClass::Nttu | UnitClass::Cu) {
                ran_ntt[s.unit] = true;
                ntt_active += s.active * d as f64;
            }
        } else if kind == KernelKind::Mac {
            mac_busy += d;
        }
    }
    let span = trace.makespan;
    let frac = |x: f64| if span == 0 { 0.0 } else { x / span as f64 };
    let units: Vec<UnitReport> = trace
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| UnitReport {
            name: u.name.clone(),
            class: u.class.name().to_string(),
            busy: busy[i],
            active: active[i],
            occupancy: frac(busy[i] as f64),
            utilization: frac(active[i]),
        })
        .collect();
    let worked: Vec<f64> = units
        .iter()
        .zip(&trace.units)
        .filter(|(r, u)| r.busy > 0 && !u.class.is_channel())
        .map(|(r, _)| r.utilization)
        .collect();
    let aggregate = if worked.is_empty() {
        0.0
    } else {
        worked.iter().sum::<f64>() / worked.len() as f64
    };
    let ntt_units = ran_ntt.iter().filter(|&&b| b).count();
    let ntt_datapath = if ntt_units == 0 || span == 0 {
        0.0
    } else {
        ntt_active / (ntt_units as f64 * span as f64)
    };
    let mut kind_counts = BTreeMap::new();
    for k in &trace.node_kinds {
        *kind_counts.entry(k.name().to_string()).or_insert(0) += 1;
    }
    UtilizationReport {
        makespan: span,
        units,
        aggregate,
        ntt_datapath,
        ntt_busy,
        mac_busy,
        kind_counts,
    }
}

/// Formats with six significant digits, dropping trailing zeros.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { format!("{x}") };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.5e}");
    }
    if mag > 5 {
        let unit = 10f64.powi(mag - 5);
        return format!("{:.0}", (x / unit).round() * unit);
    }
    let decimals = (5 - mag) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One CSV row per kernel occupancy.
pub fn trace_csv(trace: &ScheduleTrace) -> String {
    let mut s = String::from("node,kind,scheme,label,executor,start,end,fill\n");
    for o in &trace.occupancies {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            o.node,
            trace.node_kinds[o.node],
            trace.node_schemes[o.node].name(),
            trace.node_labels[o.node],
            o.executor,
            o.start,
            o.end,
            o.fill
        );
    }
    s
}

/// One CSV row per unit.
pub fn units_csv(report: &UtilizationReport) -> String {
    let mut s = String::from("unit,class,busy,occupancy,utilization\n");
    for u in &report.units {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            u.name,
            u.class,
            u.busy,
            sig6(u.occupancy),
            sig6(u.utilization)
        );
    }
    s
}
