use trinity_core::archsim::*;
use trinity_core::error::SimError;

fn params() -> WorkloadParams {
    WorkloadParams::default()
}

fn small_tfhe() -> TfheShape {
    TfheShape {
        n: 1024,
        n_lwe: 24,
        k: 1,
        l_b: 2,
        l_k: 4,
    }
}

#[test]
fn default_inventory_and_config_round_trip() {
    let c = HardwareConfig::default();
    assert_eq!(c.n_clusters, 4);
    assert_eq!(c.nttu_m, 128);
    assert_eq!(c.nttu_stages(), 8);
    assert_eq!(c.cu_rows, 128);
    assert_eq!(c.word_bits, 36);
    assert_eq!(c.hbm_stacks, 2);
    assert_eq!(c.hbm_bytes_per_cycle, 1000);
    assert_eq!(c.scratchpad_mib, 180);
    let mut cols = c.cu_columns.clone();
    cols.sort();
    assert_eq!(cols, vec![1, 2, 2, 2, 2, 3]);
    assert_eq!(c.cu_ntt_lanes(), 256);
    assert_eq!(c.cu_mac_rate(1), 128);
    assert_eq!(c.ewe_lanes, 512);

    assert_eq!(HardwareConfig::parse(&c.emit()).unwrap(), c);
    let t = HardwareConfig::parse("# tweak\nn_clusters = 2\ncu_columns = 4, 4\n").unwrap();
    assert_eq!(t.n_clusters, 2);
    assert_eq!(t.cu_columns, vec![4, 4]);
    assert!(matches!(HardwareConfig::parse("bogus = 1"), Err(SimError::Config(_))));
    assert!(matches!(HardwareConfig::parse("nttu_m = x"), Err(SimError::Config(_))));
    assert!(matches!(
        HardwareConfig::parse("n_clusters = 0"),
        Err(SimError::Config(_))
    ));
    assert!(matches!(HardwareConfig::parse("nttu_m"), Err(SimError::Config(_))));
}

#[test]
fn hadd_is_one_elementwise_node() {
    let g = build_kernel_graph(&[OpDesc::new(FheOp::HAdd, 3)], &params()).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g.nodes[0].kind, KernelKind::Elementwise);
    assert!(g.validate().is_ok());
}

#[test]
fn keyswitch_counts_follow_the_digit_loops() {
    let p = WorkloadParams {
        ckks: CkksShape {
            n: 1 << 16,
            levels: 23,
            dnum: 3,
        },
        ..params()
    };
    let l = 23;
    let g = build_kernel_graph(&[OpDesc::new(FheOp::KeySwitch, l)], &p).unwrap();
    let limbs = l + 1;
    let alpha = limbs.div_ceil(3);
    let beta = limbs.div_ceil(alpha);
    let ext = limbs + alpha;
    assert_eq!((alpha, beta), (8, 3));
    let digit_targets: usize = (0..beta).map(|i| ext - alpha.min(limbs - i * alpha)).sum();
    assert_eq!(g.count(KernelKind::Intt), limbs + 2 * alpha);
    assert_eq!(g.count(KernelKind::Ntt), digit_targets + 2 * limbs);
    assert_eq!(g.mac_count(MacKind::BConv), digit_targets + 2 * limbs);
    assert_eq!(g.mac_count(MacKind::InnerProduct), 2 * ext);
    assert_eq!(g.count(KernelKind::NocTransfer), beta + 2);
    assert_eq!(g.count(KernelKind::Elementwise), 2);
    assert_eq!(g.count(KernelKind::HbmTransfer), 0);

    // total MAC work: digit and ModDown base conversions plus the inner products
    let n = 1u64 << 16;
    let macs: u64 = g
        .nodes
        .iter()
        .filter(|x| x.kind == KernelKind::Mac)
        .map(|x| x.work)
        .sum();
    let want = (alpha * digit_targets + 2 * alpha * limbs + 2 * beta * ext) as u64 * n;
    assert_eq!(macs, want);

    let rot = build_kernel_graph(
        &[OpDesc::new(FheOp::HRotate, l), OpDesc::new(FheOp::HRotate, l - 1)],
        &p,
    )
    .unwrap();
    assert_eq!(rot.count(KernelKind::HbmTransfer), 1);
    assert_eq!(rot.count(KernelKind::Auto), 2);
}

#[test]
fn pbs_counts_follow_the_blind_rotation_loop() {
    let t = TfheShape::set_i();
    let g = pbs_graph(t, 1).unwrap();
    let k1 = t.k + 1;
    assert_eq!(g.count(KernelKind::Ntt), t.n_lwe * k1 * t.l_b);
    assert_eq!(g.count(KernelKind::Ntt), 2000);
    assert_eq!(g.count(KernelKind::Intt), t.n_lwe * k1);
    assert_eq!(g.mac_count(MacKind::ExternalProduct), t.n_lwe);
    assert_eq!(g.mac_count(MacKind::LweKeySwitch), t.l_k);
    assert_eq!(g.count(KernelKind::ModSwitch), 1);
    assert_eq!(g.count(KernelKind::SampleExtract), 1);
    assert!(g.nodes.iter().all(|n| n.scheme == Scheme::Tfhe));
}

#[test]
fn unknown_and_malformed_operations() {
    assert!(matches!(FheOp::from_name("bootstrap"), Err(SimError::UnsupportedOp(_))));
    assert_eq!(FheOp::from_name("HMult").unwrap(), FheOp::HMult);
    let p = params();
    assert!(build_kernel_graph(&[OpDesc::new(FheOp::Rescale, 0)], &p).is_err());
    assert!(build_kernel_graph(&[OpDesc::new(FheOp::HAdd, 99)], &p).is_err());
    assert!(build_kernel_graph(&[OpDesc::new(FheOp::CkksToLwes { n_slot: 3 }, 0)], &p).is_err());
    assert!(build_kernel_graph(&[OpDesc::new(FheOp::Ntt { n: 100 }, 0)], &p).is_err());
}

#[test]
fn conversion_graphs() {
    let p = WorkloadParams {
        ckks: CkksShape {
            n: 1 << 13,
            levels: 5,
            dnum: 2,
        },
        ..params()
    };
    let to = build_kernel_graph(&[OpDesc::new(FheOp::CkksToLwes { n_slot: 8 }, 0)], &p).unwrap();
    assert_eq!(to.count(KernelKind::SampleExtract), 1);
    let back = build_kernel_graph(&[OpDesc::new(FheOp::LwesToCkks { n_slot: 8 }, 1)], &p).unwrap();
    // 7 merges plus log2(N / n_slot) = 10 trace steps, one automorphism each
    assert_eq!(back.count(KernelKind::Auto), 7 + 10);
    assert!(back.nodes.iter().all(|n| n.scheme == Scheme::Conversion));
    assert!(back.validate().is_ok());
}

#[test]
fn breakdown_conventions() {
    let one = build_kernel_graph(&[OpDesc::new(FheOp::Ntt { n: 1024 }, 0)], &params()).unwrap();
    let b = op_breakdown(&one);
    assert_eq!((b.ntt_fraction, b.mac_fraction, b.other_fraction), (1.0, 0.0, 0.0));
    assert_eq!(b.ntt_mults, 512 * 10 + 2 * 1024);
    let empty = op_breakdown(&KernelGraph::new());
    assert_eq!(empty.ntt_fraction + empty.mac_fraction + empty.other_fraction, 0.0);

    let ks = keyswitch_breakdown(1 << 16, 23, 3).unwrap();
    assert!((ks.ntt_fraction - 0.592).abs() <= 0.05, "{}", ks.ntt_fraction);
    assert_eq!(ks.ntt_fraction + ks.mac_fraction + ks.other_fraction, 1.0);
    let pbs = pbs_breakdown_average().unwrap();
    assert!((pbs - 0.755).abs() <= 0.05, "{pbs}");
    for (_, f) in PBS_SETS {
        let b = pbs_breakdown(f()).unwrap();
        assert_eq!(b.ntt_fraction + b.mac_fraction + b.other_fraction, 1.0);
    }
}

#[test]
fn ntt_strategies() {
    let c = HardwareConfig::default();
    let util = |s, n| map_ntt(n, &c, s).unwrap().1;
    assert_eq!(util(NttStrategy::F1Like, 1 << 16), 1.0);
    assert_eq!(util(NttStrategy::FabLike, 1 << 8), 1.0);
    let mut gain = 0.0;
    for k in 8..=16 {
        let n = 1usize << k;
        let (f1, fab, tri) = (
            util(NttStrategy::F1Like, n),
            util(NttStrategy::FabLike, n),
            util(NttStrategy::Trinity, n),
        );
        assert!(tri >= f1.max(fab));
        assert!((0.0..=1.0).contains(&f1) && (0.0..=1.0).contains(&fab));
        if k > 8 {
            assert!(util(NttStrategy::F1Like, n / 2) <= f1);
            assert!(util(NttStrategy::FabLike, n / 2) >= fab);
        }
        if k < 16 {
            assert!(f1 < 1.0);
        }
        if k > 8 {
            assert!(fab < 1.0);
        }
        gain += tri / f1.max(fab);
    }
    assert!(gain / 9.0 >= 1.1);

    // phase split follows the NTTU size
    let (m, _) = map_ntt(256, &c, NttStrategy::Trinity).unwrap();
    assert!(m.phase2.is_none());
    let (m, _) = map_ntt(4096, &c, NttStrategy::Trinity).unwrap();
    assert!(matches!(m.phase2, Some((PhaseUnit::Cus(_), 4))));
    let (m, _) = map_ntt(1 << 16, &c, NttStrategy::Trinity).unwrap();
    assert_eq!(m.phase2, Some((PhaseUnit::Nttu, 8)));
    let (m, u) = map_ntt(4096, &c.clone().without_cu_ntt(), NttStrategy::Trinity).unwrap();
    assert_eq!(m.phase2, Some((PhaseUnit::Nttu, 4)));
    assert_eq!(u, 0.75);

    for n in [128, 1 << 17, 1000] {
        for s in NttStrategy::ALL {
            assert_eq!(map_ntt(n, &c, s).unwrap_err(), SimError::UnsupportedSize(n));
        }
    }
}

fn pipe_columns(plan: &MappingPlan, cluster: usize) -> Vec<Vec<usize>> {
    plan.ntt_pipes(cluster)
        .iter()
        .map(|e| match &e.kind {
            ExecKind::NttPipe { cus, .. } => cus.iter().map(|&u| plan.units[u].columns).collect(),
            _ => unreachable!(),
        })
        .collect()
}

#[test]
fn allocation_follows_ntt_first() {
    let c = HardwareConfig::default();
    let empty = allocate_components(&KernelGraph::new(), &c).unwrap();
    assert!(empty.is_empty() && empty.executors.is_empty());

    // CKKS: both phases on the NTTUs, inner products on a CU-2 pair
    let g = build_kernel_graph(&[OpDesc::new(FheOp::KeySwitch, 35)], &params()).unwrap();
    let plan = allocate_components(&g, &c).unwrap();
    assert_eq!(pipe_columns(&plan, 0), vec![Vec::<usize>::new(), vec![]]);
    let ip = g.nodes.iter().find(|n| n.mac == Some(MacKind::InnerProduct)).unwrap();
    for &e in &plan.candidates[ip.id] {
        match &plan.executors[e].kind {
            ExecKind::MacGroup { cus, columns } => {
                assert_eq!(*columns, 4);
                assert!(cus
                    .iter()
                    .all(|&u| plan.units[u].columns == 2 && plan.units[u].class == UnitClass::Cu));
            }
            other => panic!("inner product mapped to {other:?}"),
        }
    }

    // TFHE at N = 4096: NTTU + CU-1 + CU-3 and NTTU + two CU-2
    let t = TfheShape {
        n: 4096,
        ..small_tfhe()
    };
    let plan = allocate_components(&pbs_graph(t, 1).unwrap(), &c).unwrap();
    assert_eq!(pipe_columns(&plan, 0), vec![vec![1, 3], vec![2, 2]]);

    // Set-III: two pipelines each covering the three phase-2 stages
    let plan = allocate_components(&pbs_graph(TfheShape::set_iii(), 1).unwrap(), &c).unwrap();
    let cols = pipe_columns(&plan, 0);
    assert_eq!(cols.len(), 2);
    assert!(cols.iter().all(|p| p.iter().sum::<usize>() == 3));

    let plan = allocate_components(&pbs_graph(TfheShape::set_i(), 1).unwrap(), &c.clone().without_cu_ntt()).unwrap();
    assert_eq!(pipe_columns(&plan, 0), vec![Vec::<usize>::new(), vec![]]);
}

#[test]
fn single_ntt_timing() {
    let c = HardwareConfig::default().with_clusters(1);
    let g = build_kernel_graph(&[OpDesc::new(FheOp::Ntt { n: 256 }, 0)], &params()).unwrap();
    let (trace, rep) = run(&g, &c).unwrap();
    // one cycle of data plus an 8-stage pipeline fill and 4 cycles of slack
    assert_eq!(trace.makespan, 1 + 8 + 4);
    assert!(trace.check_conservation());
    assert!(rep.ntt_datapath > 0.99);

    let g = build_kernel_graph(&[OpDesc::new(FheOp::Ntt { n: 1 << 16 }, 0)], &params()).unwrap();
    let (trace, _) = run(&g, &c).unwrap();
    assert_eq!(trace.makespan, 2 * 256 + 12);
}

#[test]
fn schedules_are_deterministic_and_conserving() {
    let c = HardwareConfig::default();
    let g = ckks_workload(
        CkksShape {
            n: 1 << 13,
            levels: 5,
            dnum: 2,
        },
        3,
        2,
    )
    .unwrap();
    let (a, ra) = run(&g, &c).unwrap();
    let (b, rb) = run(&g, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(trace_csv(&a), trace_csv(&b));
    assert!(a.check_conservation());
    for u in &ra.units {
        assert!((0.0..=1.0).contains(&u.utilization) && u.utilization <= u.occupancy + 1e-12);
    }
    // every dependency finishes before its consumer starts
    for n in &g.nodes {
        for &d in &n.deps {
            assert!(a.occupancies[d].end <= a.occupancies[n.id].start);
        }
    }
}

#[test]
fn cluster_scaling() {
    let shape = small_tfhe();
    let mut last = u64::MAX;
    let streams = 8;
    for clusters in [1, 2, 4, 8] {
        let c = HardwareConfig::default().with_clusters(clusters);
        let (trace, _) = run(&pbs_graph(shape, streams).unwrap(), &c).unwrap();
        assert!(trace.makespan <= last, "{clusters} clusters");
        last = trace.makespan;
    }
    let one = pbs_throughput(shape, &HardwareConfig::default().with_clusters(1), 4).unwrap();
    let four = pbs_throughput(shape, &HardwareConfig::default(), 4).unwrap();
    assert_eq!(one.makespan, four.makespan);
    assert!((four.per_second / one.per_second - 4.0).abs() < 1e-12);
}

#[test]
fn reports() {
    let c = HardwareConfig::default();
    let (idle, rep) = run(&KernelGraph::new(), &c).unwrap();
    assert_eq!(idle.makespan, 0);
    assert_eq!(rep.aggregate, 0.0);
    assert!(rep.units.is_empty());

    let g = build_kernel_graph(&[OpDesc::new(FheOp::HAdd, 0)], &params()).unwrap();
    let (trace, rep) = run(&g, &c).unwrap();
    assert_eq!(rep.aggregate, 1.0);
    let ewe: Vec<_> = rep.units.iter().filter(|u| u.busy > 0).collect();
    assert_eq!(ewe.len(), 1);
    assert_eq!(ewe[0].utilization, 1.0);
    assert_eq!(trace_csv(&trace).lines().count(), 2);

    let (_, rep) = ckks_benchmark(&c).unwrap();
    assert!(rep.aggregate >= 0.48, "{}", rep.aggregate);
}

#[test]
fn mac_rate_override() {
    let g = pbs_graph(small_tfhe(), 2).unwrap();
    let base = HardwareConfig::default().with_clusters(1);
    let fast = HardwareConfig {
        cu_mac_per_row: 2,
        ..base.clone()
    };
    let (a, _) = run(&g, &base).unwrap();
    let (b, _) = run(&g, &fast).unwrap();
    assert!(b.makespan < a.makespan);
}

#[test]
fn sig6_formatting() {
    assert_eq!(sig6(0.0), "0");
    assert_eq!(sig6(0.592), "0.592");
    assert_eq!(sig6(150015.0), "150015");
    assert_eq!(sig6(1.0 / 3.0), "0.333333");
    assert_eq!(sig6(123456789.0), "123457000");
    assert_eq!(sig6(1e-7), "1.00000e-7");
    assert_eq!(sig6(-2.5), "-2.5");
}
