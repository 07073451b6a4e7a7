use super::config::HardwareConfig;
use super::graph::{KernelGraph, KernelKind, MacKind};
use crate::error::SimError;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NttStrategy {
    F1Like,
    FabLike,
    Trinity,
}

impl NttStrategy {
    pub const ALL: [NttStrategy; 3] = [NttStrategy::F1Like, NttStrategy::FabLike, NttStrategy::Trinity];

    pub fn name(self) -> &'static str {
        match self {
            NttStrategy::F1Like => "f1-like",
            NttStrategy::FabLike => "fab-like",
            NttStrategy::Trinity => "trinity",
        }
    }
}

impl fmt::Display for NttStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where one phase of a four-step transform runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhaseUnit {
    /// A fixed butterfly pipeline with this many stages and lanes.
    Pipeline {
        stages: u32,
        lanes: usize,
    },
    Nttu,
    /// CUs in NTT role, by index into the cluster's CU list.
    Cus(Vec<usize>),
}

/// How an `n`-point transform is laid out on one design, with its
/// stage-occupancy accounting in units of stage-passes over the data.
#[derive(Clone, Debug, PartialEq)]
pub struct NttMapping {
    pub strategy: NttStrategy,
    pub n: usize,
    pub phase1: PhaseUnit,
    pub phase1_stages: u32,
    pub phase2: Option<(PhaseUnit, u32)>,
    pub useful_stages: u32,
    pub occupied_stages: u32,
}

impl NttMapping {
    pub fn utilization(&self) -> f64 {
        self.useful_stages as f64 / self.occupied_stages as f64
    }
}

pub const MIN_NTT_LOG: u32 = 8;
pub const MAX_NTT_LOG: u32 = 16;

const F1_STAGES: u32 = 8;
const F1_LANES: usize = 256;
const FAB_LANES: usize = 2048;
const FAB_NATIVE_LOG: u32 = 8;

/// Smallest set of unused CUs whose columns cover `need`, preferring less
/// waste, then fewer units, then lower indices.
fn cover(columns: &[usize], used: &[bool], need: usize) -> Option<Vec<usize>> {
    let free: Vec<usize> = (0..columns.len()).filter(|&i| !used[i]).collect();
    if free.len() > 20 {
        // greedy fallback for very large inventories
        let mut pick = vec![];
        let mut sum = 0;
        for &i in &free {
            if sum >= need {
                break;
            }
            pick.push(i);
            sum += columns[i];
        }
        return (sum >= need).then_some(pick);
    }
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    for mask in 1u32..(1 << free.len()) {
        let set: Vec<usize> = (0..free.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| free[b])
            .collect();
        let sum: usize = set.iter().map(|&i| columns[i]).sum();
        if sum < need {
            continue;
        }
        let key = (sum - need, set.len(), set.clone());
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.map(|b| b.2)
}

/// Maps one `n`-point NTT with the given strategy and returns the layout and
/// its stage utilization (useful butterfly-stage work over occupied
/// stage-passes).
///
/// F1-like: a fixed 8-stage, 256-lane pipeline built around a two-pass
/// four-step schedule for its largest length; every transform takes both
/// passes and stages beyond `log2 n` sit idle.
///
/// FAB-like: one 2048-lane butterfly stage iterated `log2 n` times. Strides up
/// to 256 are served by its local shuffle; every stage beyond that needs an
/// extra reshuffle pass while the butterfly waits.
///
/// Trinity: `n = 2M` on one NTTU; up to `2M²` phase-1 on the NTTU and phase-2
/// on CUs covering the remaining stages; `4M²` both phases on the NTTU.
pub fn map_ntt(n: usize, config: &HardwareConfig, strategy: NttStrategy) -> Result<(NttMapping, f64), SimError> {
    if !n.is_power_of_two() || !(MIN_NTT_LOG..=MAX_NTT_LOG).contains(&n.trailing_zeros()) {
        return Err(SimError::UnsupportedSize(n));
    }
    let k = n.trailing_zeros();
    let m = match strategy {
        NttStrategy::F1Like => {
            let unit = PhaseUnit::Pipeline {
                stages: F1_STAGES,
                lanes: F1_LANES,
            };
            NttMapping {
                strategy,
                n,
                phase1: unit.clone(),
                phase1_stages: F1_STAGES.min(k),
                phase2: Some((unit, k.saturating_sub(F1_STAGES))),
                useful_stages: k,
                occupied_stages: 2 * F1_STAGES,
            }
        }
        NttStrategy::FabLike => NttMapping {
            strategy,
            n,
            phase1: PhaseUnit::Pipeline {
                stages: 1,
                lanes: FAB_LANES,
            },
            phase1_stages: k,
            phase2: None,
            useful_stages: k,
            occupied_stages: k + (k - FAB_NATIVE_LOG),
        },
        NttStrategy::Trinity => {
            let s = config.nttu_stages();
            if k < s || k > 2 * s {
                return Err(SimError::UnsupportedSize(n));
            }
            let rest = k - s;
            let cus = (rest > 0 && rest < s && config.cu_ntt)
                .then(|| cover(&config.cu_columns, &vec![false; config.cu_columns.len()], rest as usize))
                .flatten();
            match cus {
                _ if rest == 0 => NttMapping {
                    strategy,
                    n,
                    phase1: PhaseUnit::Nttu,
                    phase1_stages: s,
                    phase2: None,
                    useful_stages: k,
                    occupied_stages: s,
                },
                Some(set) => {
                    let cols: usize = set.iter().map(|&i| config.cu_columns[i]).sum();
                    NttMapping {
                        strategy,
                        n,
                        phase1: PhaseUnit::Nttu,
                        phase1_stages: s,
                        phase2: Some((PhaseUnit::Cus(set), rest)),
                        useful_stages: k,
                        occupied_stages: s + cols as u32,
                    }
                }
                None => NttMapping {
                    strategy,
                    n,
                    phase1: PhaseUnit::Nttu,
                    phase1_stages: s,
                    phase2: Some((PhaseUnit::Nttu, rest)),
                    useful_stages: k,
                    occupied_stages: 2 * s,
                },
            }
        }
    };
    let u = m.utilization();
    Ok((m, u))
}

/// Utilization of every strategy at every supported length.
pub fn ntt_utilization_sweep(config: &HardwareConfig) -> Vec<(NttStrategy, usize, f64)> {
    let mut rows = vec![];
    for s in NttStrategy::ALL {
        for k in MIN_NTT_LOG..=MAX_NTT_LOG {
            if let Ok((_, u)) = map_ntt(1 << k, config, s) {
                rows.push((s, 1usize << k, u));
            }
        }
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitClass {
    Nttu,
    Tp,
    Cu,
    AutoU,
    Rotator,
    Ewe,
    Vpu,
    Noc,
    Hbm,
}

impl UnitClass {
    pub fn name(self) -> &'static str {
        match self {
            UnitClass::Nttu => "nttu",
            UnitClass::Tp => "tp",
            UnitClass::Cu => "cu",
            UnitClass::AutoU => "autou",
            UnitClass::Rotator => "rotator",
            UnitClass::Ewe => "ewe",
            UnitClass::Vpu => "vpu",
            UnitClass::Noc => "noc",
            UnitClass::Hbm => "hbm",
        }
    }

    pub fn is_channel(self) -> bool {
        matches!(self, UnitClass::Noc | UnitClass::Hbm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Unit {
    /// `None` for the shared NoC and HBM channels.
    pub cluster: Option<usize>,
    pub class: UnitClass,
    /// CU columns; 0 for other units.
    pub columns: usize,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExecKind {
    /// Phase-1 on the NTTU, phase-2 on the listed CUs (in NTT role) or a second
    /// NTTU pass with the TP transposing in between.
    NttPipe {
        nttu: usize,
        cus: Vec<usize>,
        cu_columns: usize,
        tp: Option<usize>,
    },
    /// CUs in MAC role acting as one systolic group.
    MacGroup { cus: Vec<usize>, columns: usize },
    /// A single unit streaming at its lane width.
    Single { unit: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Executor {
    pub cluster: Option<usize>,
    pub kind: ExecKind,
}

impl Executor {
    /// Units held for the whole duration of a kernel (the TP of an NTT pipe is
    /// added per kernel when a second pass is needed).
    pub fn units(&self) -> Vec<usize> {
        match &self.kind {
            ExecKind::NttPipe { nttu, cus, .. } => {
                let mut v = vec![*nttu];
                v.extend(cus);
                v
            }
            ExecKind::MacGroup { cus, .. } => cus.clone(),
            ExecKind::Single { unit } => vec![*unit],
        }
    }
}

/// Units, executors and, per node, the executors allowed to run it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MappingPlan {
    pub units: Vec<Unit>,
    pub executors: Vec<Executor>,
    pub candidates: Vec<Vec<usize>>,
    pub ntt_len: Option<usize>,
}

impl MappingPlan {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn clusters(&self) -> usize {
        self.units.iter().filter_map(|u| u.cluster).max().map_or(0, |c| c + 1)
    }

    /// NTT pipes of one cluster.
    pub fn ntt_pipes(&self, cluster: usize) -> Vec<&Executor> {
        self.executors
            .iter()
            .filter(|e| e.cluster == Some(cluster) && matches!(e.kind, ExecKind::NttPipe { .. }))
            .collect()
    }
}

struct ClusterExecs {
    ntt: Vec<usize>,
    ip: Vec<usize>,
    bconv: Vec<usize>,
    tfhe_mac: Vec<usize>,
    ewe: usize,
    auto: usize,
    rotator: usize,
    vpu: usize,
    tp: Vec<usize>,
}

/// Assigns units to roles: transforms first (NTTUs, then CUs covering
/// phase-2), then the remaining CUs to MAC kernels. CKKS inner products get
/// a CU-2 pair and base conversions the other spare CUs, spilling onto the
/// pair when it is idle; TFHE MACs use all
/// spare CUs and the EWE. With no spare CUs MACs fall back to the EWE.
/// Streams are spread over clusters round-robin.
pub fn allocate_components(graph: &KernelGraph, config: &HardwareConfig) -> Result<MappingPlan, SimError> {
    config.validate()?;
    graph.validate()?;
    if graph.is_empty() {
        return Ok(MappingPlan::default());
    }
    let ntt_len = graph.max_ntt_len();
    if let Some(n) = ntt_len {
        let k = n.trailing_zeros();
        if !n.is_power_of_two() || k < 1 || k > 2 * config.nttu_stages() {
            return Err(SimError::UnsupportedSize(n));
        }
    }
    let has_ip = graph.nodes.iter().any(|n| n.mac == Some(MacKind::InnerProduct));

    let mut units = Vec::new();
    let mut executors = Vec::new();
    let add_unit = |units: &mut Vec<Unit>, cluster: Option<usize>, class: UnitClass, columns: usize, name: String| {
        units.push(Unit {
            cluster,
            class,
            columns,
            name,
        });
        units.len() - 1
    };
    let mut per_cluster = Vec::with_capacity(config.n_clusters);
    for c in 0..config.n_clusters {
        let nttus: Vec<usize> = (0..config.nttu_count)
            .map(|i| add_unit(&mut units, Some(c), UnitClass::Nttu, 0, format!("c{c}.nttu{i}")))
            .collect();
        let tps: Vec<usize> = (0..config.tp_count)
            .map(|i| add_unit(&mut units, Some(c), UnitClass::Tp, 0, format!("c{c}.tp{i}")))
            .collect();
        let cus: Vec<usize> = config
            .cu_columns
            .iter()
            .enumerate()
            .map(|(i, &x)| add_unit(&mut units, Some(c), UnitClass::Cu, x, format!("c{c}.cu{i}-{x}")))
            .collect();
        let autou = add_unit(&mut units, Some(c), UnitClass::AutoU, 0, format!("c{c}.autou"));
        let rotator = add_unit(&mut units, Some(c), UnitClass::Rotator, 0, format!("c{c}.rotator"));
        let ewe = add_unit(&mut units, Some(c), UnitClass::Ewe, 0, format!("c{c}.ewe"));
        let vpu = add_unit(&mut units, Some(c), UnitClass::Vpu, 0, format!("c{c}.vpu"));

        let mut used = vec![false; cus.len()];
        let mut ntt = vec![];
        let phase2 = ntt_len
            .map(|n| n.trailing_zeros().saturating_sub(config.nttu_stages()))
            .unwrap_or(0);
        for (i, &nttu) in nttus.iter().enumerate() {
            let mut set = vec![];
            if config.cu_ntt && phase2 > 0 && phase2 < config.nttu_stages() {
                if let Some(s) = cover(&config.cu_columns, &used, phase2 as usize) {
                    for &j in &s {
                        used[j] = true;
                    }
                    set = s;
                }
            }
            let cu_columns = set.iter().map(|&j| config.cu_columns[j]).sum();
            executors.push(Executor {
                cluster: Some(c),
                kind: ExecKind::NttPipe {
                    nttu,
                    cus: set.iter().map(|&j| cus[j]).collect(),
                    cu_columns,
                    tp: tps.get(i).copied(),
                },
            });
            ntt.push(executors.len() - 1);
        }

        let spare: Vec<usize> = (0..cus.len()).filter(|&j| !used[j]).collect();
        let group = |executors: &mut Vec<Executor>, set: &[usize]| {
            let columns = set.iter().map(|&j| config.cu_columns[j]).sum();
            executors.push(Executor {
                cluster: Some(c),
                kind: ExecKind::MacGroup {
                    cus: set.iter().map(|&j| cus[j]).collect(),
                    columns,
                },
            });
            executors.len() - 1
        };
        let (mut ip, mut bconv, mut tfhe_mac) = (vec![], vec![], vec![]);
        if config.cu_mac && !spare.is_empty() {
            if has_ip && spare.len() >= 2 {
                let twos: Vec<usize> = spare.iter().copied().filter(|&j| config.cu_columns[j] == 2).collect();
                let pair: Vec<usize> = if twos.len() >= 2 {
                    twos[..2].to_vec()
                } else {
                    spare[..2].to_vec()
                };
                let rest: Vec<usize> = spare.iter().copied().filter(|j| !pair.contains(j)).collect();
                let g_ip = group(&mut executors, &pair);
                ip.push(g_ip);
                if rest.is_empty() {
                    bconv.push(g_ip);
                } else {
                    bconv.push(group(&mut executors, &rest));
                }
                tfhe_mac = ip.iter().chain(&bconv).copied().collect();
                tfhe_mac.dedup();
            } else {
                let g = group(&mut executors, &spare);
                ip.push(g);
                bconv.push(g);
                tfhe_mac.push(g);
            }
        }
        let single = |executors: &mut Vec<Executor>, unit: usize| {
            executors.push(Executor {
                cluster: Some(c),
                kind: ExecKind::Single { unit },
            });
            executors.len() - 1
        };
        let ewe_x = single(&mut executors, ewe);
        let auto_x = single(&mut executors, autou);
        let rot_x = single(&mut executors, rotator);
        let vpu_x = single(&mut executors, vpu);
        let tp_x: Vec<usize> = tps.iter().map(|&t| single(&mut executors, t)).collect();
        if ip.is_empty() {
            ip.push(ewe_x);
            bconv.push(ewe_x);
        }
        tfhe_mac.push(ewe_x);
        per_cluster.push(ClusterExecs {
            ntt,
            ip,
            bconv,
            tfhe_mac,
            ewe: ewe_x,
            auto: auto_x,
            rotator: rot_x,
            vpu: vpu_x,
            tp: tp_x,
        });
    }
    let noc = add_unit(&mut units, None, UnitClass::Noc, 0, "noc".into());
    let hbm = add_unit(&mut units, None, UnitClass::Hbm, 0, "hbm".into());
    executors.push(Executor {
        cluster: None,
        kind: ExecKind::Single { unit: noc },
    });
    let noc_x = executors.len() - 1;
    executors.push(Executor {
        cluster: None,
        kind: ExecKind::Single { unit: hbm },
    });
    let hbm_x = executors.len() - 1;

    let candidates = graph
        .nodes
        .iter()
        .map(|node| {
            let e = &per_cluster[node.stream % config.n_clusters];
            match node.kind {
                KernelKind::Ntt | KernelKind::Intt => e.ntt.clone(),
                KernelKind::Mac => match node.mac {
                    Some(MacKind::InnerProduct) => e.ip.clone(),
                    Some(MacKind::BConv) => {
                        let mut v = e.bconv.clone();
                        for &x in &e.ip {
                            if !v.contains(&x) {
                                v.push(x);
                            }
                        }
                        v
                    }
                    _ => e.tfhe_mac.clone(),
                },
                KernelKind::Elementwise => vec![e.ewe],
                KernelKind::Auto => vec![e.auto],
                KernelKind::Rotate | KernelKind::SampleExtract => vec![e.rotator],
                KernelKind::Decompose | KernelKind::ModSwitch => vec![e.vpu],
                KernelKind::Transpose => {
                    if e.tp.is_empty() {
                        vec![e.ewe]
                    } else {
                        e.tp.clone()
                    }
                }
                KernelKind::NocTransfer => vec![noc_x],
                KernelKind::HbmTransfer => vec![hbm_x],
            }
        })
        .collect();
    Ok(MappingPlan {
        units,
        executors,
        candidates,
        ntt_len,
    })
}
