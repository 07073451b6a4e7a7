use super::config::HardwareConfig;
use super::graph::*;
use super::mapping::allocate_components;
use super::report::{utilization_report, UtilizationReport};
use super::sim::{simulate, ScheduleTrace};
use crate::error::SimError;

pub fn run(graph: &KernelGraph, config: &HardwareConfig) -> Result<(ScheduleTrace, UtilizationReport), SimError> {
    let plan = allocate_components(graph, config)?;
    let trace = simulate(graph, &plan, config)?;
    let report = utilization_report(&trace);
    Ok((trace, report))
}

/// `streams` independent bootstraps.
pub fn pbs_graph(shape: TfheShape, streams: usize) -> Result<KernelGraph, SimError> {
    let params = WorkloadParams {
        tfhe: shape,
        ..WorkloadParams::default()
    };
    let ops: Vec<OpDesc> = (0..streams).map(|s| OpDesc::new(FheOp::Pbs, 0).on_stream(s)).collect();
    build_kernel_graph(&ops, &params)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbsRun {
    pub bootstraps: usize,
    pub makespan: u64,
    pub per_second: f64,
    pub report: UtilizationReport,
}

/// Bootstrap throughput with `per_cluster` concurrent streams on every cluster.
pub fn pbs_throughput(shape: TfheShape, config: &HardwareConfig, per_cluster: usize) -> Result<PbsRun, SimError> {
    let total = per_cluster * config.n_clusters;
    let graph = pbs_graph(shape, total)?;
    let (trace, report) = run(&graph, config)?;
    Ok(PbsRun {
        bootstraps: total,
        makespan: trace.makespan,
        per_second: total as f64 / trace.seconds(),
        report,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputRow {
    pub set: &'static str,
    pub without_cu: PbsRun,
    pub with_cu: PbsRun,
    pub full: PbsRun,
}

impl ThroughputRow {
    pub fn cu_speedup(&self) -> f64 {
        self.with_cu.per_second / self.without_cu.per_second
    }

    pub fn utilization_gain(&self) -> f64 {
        self.with_cu.report.ntt_datapath / self.without_cu.report.ntt_datapath
    }

    pub fn cluster_scaling(&self) -> f64 {
        self.full.per_second / self.with_cu.per_second
    }
}

pub const PBS_SETS: [(&str, fn() -> TfheShape); 3] = [
    ("Set-I", TfheShape::set_i),
    ("Set-II", TfheShape::set_ii),
    ("Set-III", TfheShape::set_iii),
];

/// PBS throughput of one cluster with CUs barred from transforms, one
/// cluster with the default roles, and all clusters.
pub fn pbs_table(config: &HardwareConfig, per_cluster: usize) -> Result<Vec<ThroughputRow>, SimError> {
    let one = config.clone().with_clusters(1);
    PBS_SETS
        .iter()
        .map(|(name, f)| {
            let shape = f();
            Ok(ThroughputRow {
                set: name,
                without_cu: pbs_throughput(shape, &one.clone().without_cu_ntt(), per_cluster)?,
                with_cu: pbs_throughput(shape, &one, per_cluster)?,
                full: pbs_throughput(shape, config, per_cluster)?,
            })
        })
        .collect()
}

/// Hybrid key switching at the top level of an `L`-level chain.
pub fn keyswitch_breakdown(n: usize, levels: usize, dnum: usize) -> Result<Breakdown, SimError> {
    let params = WorkloadParams {
        ckks: CkksShape { n, levels, dnum },
        ..WorkloadParams::default()
    };
    let g = build_kernel_graph(&[OpDesc::new(FheOp::KeySwitch, levels)], &params)?;
    Ok(op_breakdown(&g))
}

pub fn pbs_breakdown(shape: TfheShape) -> Result<Breakdown, SimError> {
    Ok(op_breakdown(&pbs_graph(shape, 1)?))
}

/// Mean NTT share over the three bootstrapping sets.
pub fn pbs_breakdown_average() -> Result<f64, SimError> {
    let mut sum = 0.0;
    for (_, f) in PBS_SETS {
        sum += pbs_breakdown(f())?.ntt_fraction;
    }
    Ok(sum / PBS_SETS.len() as f64)
}

/// A multiply-rotate-accumulate chain per cluster, from level `levels` down
/// by `depth` rescales.
pub fn ckks_workload(shape: CkksShape, streams: usize, depth: usize) -> Result<KernelGraph, SimError> {
    let params = WorkloadParams {
        ckks: shape,
        ..WorkloadParams::default()
    };
    let mut ops = vec![];
    for s in 0..streams {
        let mut l = shape.levels;
        for _ in 0..depth.min(shape.levels) {
            ops.push(OpDesc::new(FheOp::HMult, l).on_stream(s));
            ops.push(OpDesc::new(FheOp::Rescale, l).on_stream(s));
            l -= 1;
            ops.push(OpDesc::new(FheOp::HRotate, l).on_stream(s));
            ops.push(OpDesc::new(FheOp::HAdd, l).on_stream(s));
        }
    }
    build_kernel_graph(&ops, &params)
}

/// Concurrent bootstraps per cluster used by the throughput scenarios; enough
/// to keep both transform pipelines fed.
pub const PBS_STREAMS_PER_CLUSTER: usize = 16;

/// Two independent multiply-rotate chains per cluster over twelve levels of
/// the default parameter set.
pub fn ckks_benchmark(config: &HardwareConfig) -> Result<(ScheduleTrace, UtilizationReport), SimError> {
    let shape = WorkloadParams::default().ckks;
    let graph = ckks_workload(shape, 2 * config.n_clusters, 12)?;
    run(&graph, config)
}
