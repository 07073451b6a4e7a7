use super::config::HardwareConfig;
use super::graph::{KernelGraph, KernelKind, Scheme};
use super::mapping::{ExecKind, MappingPlan, Unit, UnitClass};
use crate::error::SimError;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// One kernel's stay on one unit. `active` is the fraction of the unit's
/// stages or columns doing useful work during the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSlice {
    pub unit: usize,
    pub node: usize,
    pub start: u64,
    pub end: u64,
    pub active: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occupancy {
    pub node: usize,
    pub executor: usize,
    pub start: u64,
    pub end: u64,
    pub fill: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleTrace {
    pub makespan: u64,
    /// Indexed by node id.
    pub occupancies: Vec<Occupancy>,
    pub slices: Vec<UnitSlice>,
    pub units: Vec<Unit>,
    pub node_kinds: Vec<KernelKind>,
    pub node_schemes: Vec<Scheme>,
    pub node_labels: Vec<&'static str>,
    pub freq_ghz: f64,
}

struct Cost {
    cycles: u64,
    fill: u64,
    slices: Vec<(usize, f64)>,
}

fn cost(node: &super::graph::KernelNode, kind: &ExecKind, plan: &MappingPlan, cfg: &HardwareConfig) -> Cost {
    let n = node.n.max(1);
    let count = node.count.max(1) as u64;
    match kind {
        ExecKind::NttPipe {
            nttu,
            cus,
            cu_columns,
            tp,
        } => {
            let k = n.trailing_zeros();
            let s = cfg.nttu_stages();
            let rest = k.saturating_sub(s);
            let per_pass = n.div_ceil(cfg.nttu_lanes()) as u64;
            let mut slices = vec![];
            let (passes, per, used) = if rest == 0 {
                slices.push((*nttu, k as f64 / s as f64));
                (1, per_pass, 0)
            } else if rest as usize <= *cu_columns {
                slices.push((*nttu, 1.0));
                let mut left = rest as usize;
                for &c in cus {
                    let x = plan.units[c].columns;
                    let take = left.min(x);
                    left -= take;
                    slices.push((c, take as f64 / x as f64));
                }
                (1, per_pass.max(n.div_ceil(cfg.cu_ntt_lanes()) as u64), rest as usize)
            } else {
                let passes = k.div_ceil(s) as u64;
                slices.push((*nttu, k as f64 / (passes as f64 * s as f64)));
                if let Some(t) = tp {
                    slices.push((*t, 1.0));
                }
                (passes, per_pass, 0)
            };
            // CUs of a pipe stay reserved even when bypassed
            for &c in cus {
                if !slices.iter().any(|&(u, _)| u == c) {
                    slices.push((c, 0.0));
                }
            }
            Cost {
                cycles: passes * per * count,
                fill: s as u64 + used as u64 + cfg.fill_extra,
                slices,
            }
        }
        ExecKind::MacGroup { cus, columns } => {
            let rate = cfg.cu_mac_rate(*columns) as u64;
            let deepest = cus.iter().map(|&c| plan.units[c].columns).max().unwrap_or(1) as u64;
            Cost {
                cycles: node.work.div_ceil(rate),
                fill: deepest + cfg.fill_extra,
                slices: cus.iter().map(|&c| (c, 1.0)).collect(),
            }
        }
        ExecKind::Single { unit } => {
            let class = plan.units[*unit].class;
            let (cycles, fill) = match class {
                UnitClass::Noc => {
                    let bytes = (node.work * cfg.word_bits as u64).div_ceil(8);
                    (bytes.div_ceil(cfg.noc_bytes_per_cycle), cfg.noc_latency)
                }
                UnitClass::Hbm => {
                    let bytes = (node.work * cfg.word_bits as u64).div_ceil(8);
                    (bytes.div_ceil(cfg.hbm_bytes_per_cycle), 0)
                }
                UnitClass::Ewe => (node.work.div_ceil(cfg.ewe_lanes as u64), 1 + cfg.fill_extra),
                _ => (node.work.div_ceil(cfg.lane_width as u64), 1 + cfg.fill_extra),
            };
            Cost {
                cycles,
                fill,
                slices: vec![(*unit, 1.0)],
            }
        }
    }
}

/// Non-preemptive list scheduling over the DAG.
///
/// At every event time the ready kernels are visited in id order. Each one
/// picks the candidate executor that would finish it soonest (lowest
/// executor index on ties) and starts if that executor is free, else waits. A kernel costs `ceil(work/throughput)` cycles
/// plus the executor's pipeline fill; the fill is hidden when the executor
/// streams straight on from its previous kernel.
pub fn simulate(graph: &KernelGraph, plan: &MappingPlan, config: &HardwareConfig) -> Result<ScheduleTrace, SimError> {
    graph.validate()?;
    let len = graph.len();
    if plan.candidates.len() != len {
        return Err(SimError::Unplanned(plan.candidates.len().min(len)));
    }
    if let Some(i) = plan.candidates.iter().position(|c| c.is_empty()) {
        return Err(SimError::Unplanned(i));
    }

    let mut succ: Vec<Vec<usize>> = vec![vec![]; len];
    let mut pending: Vec<usize> = vec![0; len];
    for node in &graph.nodes {
        let mut deps = node.deps.clone();
        deps.sort_unstable();
        deps.dedup();
        pending[node.id] = deps.len();
        for d in deps {
            succ[d].push(node.id);
        }
    }
    let mut ready: BTreeSet<usize> = (0..len).filter(|&i| pending[i] == 0).collect();
    let mut unit_free = vec![0u64; plan.units.len()];
    let mut last_end: Vec<Option<u64>> = vec![None; plan.executors.len()];
    let mut running: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut occupancies = vec![
        Occupancy {
            node: 0,
            executor: 0,
            start: 0,
            end: 0,
            fill: 0,
        };
        len
    ];
    let mut slices = Vec::new();
    let mut t = 0u64;
    let mut done = 0usize;

    while done < len {
        let mut started = vec![];
        for &id in ready.iter() {
            let node = &graph.nodes[id];
            // earliest finish over all candidates; start only if that
            // executor is free now, otherwise wait for it
            let mut best: Option<(u64, usize, Cost, u64, bool)> = None;
            for &e in &plan.candidates[id] {
                let c = cost(node, &plan.executors[e].kind, plan, config);
                let free_at = c.slices.iter().map(|&(u, _)| unit_free[u]).max().unwrap_or(0).max(t);
                let fill = if last_end[e] == Some(free_at) { 0 } else { c.fill };
                let finish = free_at + (c.cycles + fill).max(1);
                if best.as_ref().is_none_or(|b| (finish, e) < (b.0, b.1)) {
                    best = Some((finish, e, c, fill, free_at == t));
                }
            }
            let best = best
                .filter(|b| b.4)
                .map(|(finish, e, c, fill, _)| (finish - t, e, c, fill));
            if let Some((total, e, c, fill)) = best {
                let end = t + total;
                for &(u, active) in &c.slices {
                    unit_free[u] = end;
                    slices.push(UnitSlice {
                        unit: u,
                        node: id,
                        start: t,
                        end,
                        active,
                    });
                }
                last_end[e] = Some(end);
                occupancies[id] = Occupancy {
                    node: id,
                    executor: e,
                    start: t,
                    end,
                    fill,
                };
                running.push(Reverse((end, id)));
                started.push(id);
            }
        }
        for id in started {
            ready.remove(&id);
        }
        let Some(&Reverse((next, _))) = running.peek() else {
            return Err(SimError::Unplanned(ready.first().copied().unwrap_or(0)));
        };
        t = next;
        while let Some(&Reverse((end, id))) = running.peek() {
            if end != t {
                break;
            }
            running.pop();
            done += 1;
            for &s in &succ[id] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.insert(s);
                }
            }
        }
    }
    let makespan = occupancies.iter().map(|o| o.end).max().unwrap_or(0);
    Ok(ScheduleTrace {
        makespan,
        occupancies,
        slices,
        units: plan.units.clone(),
        node_kinds: graph.nodes.iter().map(|n| n.kind).collect(),
        node_schemes: graph.nodes.iter().map(|n| n.scheme).collect(),
        node_labels: graph.nodes.iter().map(|n| n.label).collect(),
        freq_ghz: config.freq_ghz,
    })
}

impl ScheduleTrace {
    pub fn seconds(&self) -> f64 {
        self.makespan as f64 / (self.freq_ghz * 1e9)
    }

    /// No unit holds two kernels at once and per-unit busy time equals the
    /// sum of its kernels' cycles.
    pub fn check_conservation(&self) -> bool {
        let mut per: Vec<Vec<(u64, u64)>> = vec![vec![]; self.units.len()];
        for s in &self.slices {
            if s.end < s.start || !(0.0..=1.0).contains(&s.active) {
                return false;
            }
            per[s.unit].push((s.start, s.end));
        }
        for (u, iv) in per.iter_mut().enumerate() {
            iv.sort_unstable();
            if iv.windows(2).any(|w| w[1].0 < w[0].1) {
                return false;
            }
            let busy: u64 = iv.iter().map(|(a, b)| b - a).sum();
            let kernels: u64 = self
                .slices
                .iter()
                .filter(|s| s.unit == u)
                .map(|s| {
                    let o = &self.occupancies[s.node];
                    o.end - o.start
                })
                .sum();
            if busy != kernels {
                return false;
            }
        }
        true
    }
}
