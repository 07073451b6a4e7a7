use crate::error::SimError;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelKind {
    Ntt,
    Intt,
    Mac,
    Auto,
    Elementwise,
    Transpose,
    Rotate,
    Decompose,
    ModSwitch,
    SampleExtract,
    NocTransfer,
    HbmTransfer,
}

impl KernelKind {
    pub const ALL: [KernelKind; 12] = [
        KernelKind::Ntt,
        KernelKind::Intt,
        KernelKind::Mac,
        KernelKind::Auto,
        KernelKind::Elementwise,
        KernelKind::Transpose,
        KernelKind::Rotate,
        KernelKind::Decompose,
        KernelKind::ModSwitch,
        KernelKind::SampleExtract,
        KernelKind::NocTransfer,
        KernelKind::HbmTransfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Ntt => "ntt",
            KernelKind::Intt => "intt",
            KernelKind::Mac => "mac",
            KernelKind::Auto => "auto",
            KernelKind::Elementwise => "elementwise",
            KernelKind::Transpose => "transpose",
            KernelKind::Rotate => "rotate",
            KernelKind::Decompose => "decompose",
            KernelKind::ModSwitch => "modswitch",
            KernelKind::SampleExtract => "sample_extract",
            KernelKind::NocTransfer => "noc",
            KernelKind::HbmTransfer => "hbm",
        }
    }

    pub fn is_ntt(self) -> bool {
        matches!(self, KernelKind::Ntt | KernelKind::Intt)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MacKind {
    BConv,
    InnerProduct,
    ExternalProduct,
    LweKeySwitch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Ckks,
    Tfhe,
    Conversion,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ckks => "ckks",
            Scheme::Tfhe => "tfhe",
            Scheme::Conversion => "conversion",
        }
    }
}

/// One kernel invocation.
///
/// `work` is in the unit the executing hardware streams: elements for
/// streaming kernels (`count·n` for transforms), multiply-accumulates for
/// MAC kernels and words for transfers. `mults` counts modular multiplies
/// for the work breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelNode {
    pub id: usize,
    pub kind: KernelKind,
    pub mac: Option<MacKind>,
    pub scheme: Scheme,
    pub n: usize,
    pub count: usize,
    pub work: u64,
    pub mults: u64,
    pub deps: Vec<usize>,
    pub stream: usize,
    pub label: &'static str,
}

/// Kernel DAG. Node ids equal their index and every dependency points to a
/// smaller id, so construction order is a topological order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelGraph {
    pub nodes: Vec<KernelNode>,
}

/// Twisting multiplies per transform: the negacyclic pre-twist plus the
/// inter-phase twist of the four-step split once `n` exceeds one 256-point pass.
pub fn ntt_mults(n: usize) -> u64 {
    let n64 = n as u64;
    let butterflies = n64 / 2 * n.trailing_zeros() as u64;
    let twist = if n > 256 { 2 * n64 } else { n64 };
    butterflies + twist
}

impl KernelGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i || node.deps.iter().any(|&d| d >= i) {
                return Err(SimError::Cycle(i));
            }
        }
        Ok(())
    }

    pub fn kind_counts(&self) -> BTreeMap<KernelKind, usize> {
        let mut m = BTreeMap::new();
        for node in &self.nodes {
            *m.entry(node.kind).or_insert(0) += 1;
        }
        m
    }

    pub fn count(&self, kind: KernelKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn mac_count(&self, mac: MacKind) -> usize {
        self.nodes.iter().filter(|n| n.mac == Some(mac)).count()
    }

    pub fn streams(&self) -> usize {
        self.nodes.iter().map(|n| n.stream + 1).max().unwrap_or(0)
    }

    pub fn max_ntt_len(&self) -> Option<usize> {
        self.nodes.iter().filter(|n| n.kind.is_ntt()).map(|n| n.n).max()
    }

    /// Appends another graph, shifting ids and stream numbers.
    pub fn append(&mut self, other: &KernelGraph, stream_offset: usize) {
        let base = self.nodes.len();
        for node in &other.nodes {
            let mut n = node.clone();
            n.id += base;
            n.stream += stream_offset;
            for d in &mut n.deps {
                *d += base;
            }
            self.nodes.push(n);
        }
    }
}

/// Shape of the CKKS instance a graph is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CkksShape {
    pub n: usize,
    pub levels: usize,
    pub dnum: usize,
}

impl CkksShape {
    pub fn alpha(&self) -> usize {
        (self.levels + 1).div_ceil(self.dnum)
    }

    pub fn beta(&self, level: usize) -> usize {
        (level + 1).div_ceil(self.alpha())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TfheShape {
    pub n: usize,
    pub n_lwe: usize,
    pub k: usize,
    pub l_b: usize,
    pub l_k: usize,
}

impl TfheShape {
    pub fn set_i() -> Self {
        TfheShape {
            n: 1024,
            n_lwe: 500,
            k: 1,
            l_b: 2,
            l_k: 4,
        }
    }

    pub fn set_ii() -> Self {
        TfheShape {
            n: 1024,
            n_lwe: 630,
            k: 1,
            l_b: 3,
            l_k: 4,
        }
    }

    pub fn set_iii() -> Self {
        TfheShape {
            n: 2048,
            n_lwe: 592,
            k: 1,
            l_b: 3,
            l_k: 4,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "set-i" | "set_i" | "seti" => Some(Self::set_i()),
            "set-ii" | "set_ii" | "setii" => Some(Self::set_ii()),
            "set-iii" | "set_iii" | "setiii" => Some(Self::set_iii()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkloadParams {
    pub ckks: CkksShape,
    pub tfhe: TfheShape,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            ckks: CkksShape {
                n: 1 << 16,
                levels: 35,
                dnum: 3,
            },
            tfhe: TfheShape::set_i(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FheOp {
    HAdd,
    PMult,
    HMult,
    Rescale,
    HRotate,
    KeySwitch,
    Pbs,
    TfheKeySwitch,
    CkksToLwes { n_slot: usize },
    LwesToCkks { n_slot: usize },
    Ntt { n: usize },
}

impl FheOp {
    pub fn from_name(name: &str) -> Result<Self, SimError> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "hadd" => FheOp::HAdd,
            "pmult" => FheOp::PMult,
            "hmult" => FheOp::HMult,
            "rescale" => FheOp::Rescale,
            "hrotate" => FheOp::HRotate,
            "keyswitch" => FheOp::KeySwitch,
            "pbs" => FheOp::Pbs,
            "tfhe-keyswitch" => FheOp::TfheKeySwitch,
            _ => return Err(SimError::UnsupportedOp(name.to_string())),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpDesc {
    pub op: FheOp,
    pub level: usize,
    pub stream: usize,
}

impl OpDesc {
    pub fn new(op: FheOp, level: usize) -> Self {
        OpDesc { op, level, stream: 0 }
    }

    pub fn on_stream(mut self, stream: usize) -> Self {
        self.stream = stream;
        self
    }
}

struct Builder<'a> {
    g: KernelGraph,
    p: &'a WorkloadParams,
    stream: usize,
    scheme: Scheme,
    rot_key_loaded: BTreeSet<usize>,
}

impl Builder<'_> {
    fn push(
        &mut self,
        kind: KernelKind,
        n: usize,
        count: usize,
        work: u64,
        mults: u64,
        deps: Vec<usize>,
        label: &'static str,
    ) -> usize {
        let id = self.g.nodes.len();
        self.g.nodes.push(KernelNode {
            id,
            kind,
            mac: None,
            scheme: self.scheme,
            n,
            count,
            work,
            mults,
            deps,
            stream: self.stream,
            label,
        });
        id
    }

    fn transform(&mut self, kind: KernelKind, n: usize, deps: Vec<usize>, label: &'static str) -> usize {
        self.push(kind, n, 1, n as u64, ntt_mults(n), deps, label)
    }

    fn transforms(
        &mut self,
        kind: KernelKind,
        n: usize,
        count: usize,
        deps: &[usize],
        label: &'static str,
    ) -> Vec<usize> {
        (0..count)
            .map(|_| self.transform(kind, n, deps.to_vec(), label))
            .collect()
    }

    fn mac(&mut self, mac: MacKind, n: usize, macs: u64, deps: Vec<usize>, label: &'static str) -> usize {
        let id = self.push(KernelKind::Mac, n, 1, macs, macs, deps, label);
        self.g.nodes[id].mac = Some(mac);
        id
    }

    fn ewise(&mut self, n: usize, elems: u64, mults: u64, deps: Vec<usize>, label: &'static str) -> usize {
        self.push(KernelKind::Elementwise, n, 1, elems, mults, deps, label)
    }

    /// Hybrid key switching of one polynomial at `level`, at limb
    /// granularity; returns the two ModDown outputs.
    fn keyswitch(&mut self, level: usize, input: &[usize], key_from_hbm: bool) -> Vec<usize> {
        let s = self.p.ckks;
        let n = s.n;
        let n64 = n as u64;
        let limbs = level + 1;
        let alpha = s.alpha();
        let special = alpha;
        let beta = s.beta(level);
        let ext = limbs + special;

        let key = key_from_hbm.then(|| {
            let words = 2 * (beta * ext * n) as u64;
            self.push(KernelKind::HbmTransfer, n, 1, words, 0, input.to_vec(), "evk_load")
        });
        let coeff = self.transforms(KernelKind::Intt, n, limbs, input, "ks_intt");

        // per extended limb j: the nodes producing digit i's value there
        let mut limb_src: Vec<Vec<usize>> = vec![vec![]; ext];
        for i in 0..beta {
            let lo = i * alpha;
            let a_i = alpha.min(limbs - lo);
            let own = coeff[lo..lo + a_i].to_vec();
            let words = (a_i * n) as u64;
            let layout = self.push(KernelKind::NocTransfer, n, a_i, words, 0, own, "ks_layout");
            for (j, src) in limb_src.iter_mut().enumerate() {
                if (lo..lo + a_i).contains(&j) {
                    src.extend_from_slice(input);
                    continue;
                }
                let bconv = self.mac(MacKind::BConv, n, a_i as u64 * n64, vec![layout], "ks_bconv");
                src.push(self.transform(KernelKind::Ntt, n, vec![bconv], "ks_ntt"));
            }
        }

        let mut out = Vec::with_capacity(2);
        for _ in 0..2 {
            let acc: Vec<usize> = limb_src
                .iter()
                .map(|src| {
                    let mut deps = src.clone();
                    deps.extend(key);
                    self.mac(MacKind::InnerProduct, n, beta as u64 * n64, deps, "ks_ip")
                })
                .collect();
            let low = (limbs..ext)
                .map(|j| self.transform(KernelKind::Intt, n, vec![acc[j]], "moddown_intt"))
                .collect::<Vec<_>>();
            let words = (special * n) as u64;
            let layout = self.push(KernelKind::NocTransfer, n, special, words, 0, low, "moddown_layout");
            let mut back = Vec::with_capacity(limbs);
            for &a in &acc[..limbs] {
                let bconv = self.mac(MacKind::BConv, n, special as u64 * n64, vec![layout], "moddown_bconv");
                back.push(self.transform(KernelKind::Ntt, n, vec![bconv], "moddown_ntt"));
                back.push(a);
            }
            let e = (limbs * n) as u64;
            out.push(self.ewise(n, e, e, back, "moddown_scale"));
        }
        out
    }

    fn rescale(&mut self, level: usize, input: &[usize]) -> Vec<usize> {
        let n = self.p.ckks.n;
        let mut out = Vec::new();
        for _ in 0..2 {
            let top = self.transform(KernelKind::Intt, n, input.to_vec(), "rescale_intt");
            let back = self.transforms(KernelKind::Ntt, n, level, &[top], "rescale_ntt");
            let e = (level * n) as u64;
            out.push(self.ewise(n, e, e, back, "rescale_scale"));
        }
        out
    }

    fn hrotate(&mut self, level: usize, input: &[usize], key_from_hbm: bool) -> Vec<usize> {
        let n = self.p.ckks.n;
        let e = (2 * (level + 1) * n) as u64;
        let auto = self.push(
            KernelKind::Auto,
            n,
            2 * (level + 1),
            e,
            0,
            input.to_vec(),
            "automorphism",
        );
        let ks = self.keyswitch(level, &[auto], key_from_hbm);
        vec![self.ewise(n, e / 2, 0, ks, "rotate_add")]
    }

    fn pbs(&mut self, input: &[usize]) -> Vec<usize> {
        let t = self.p.tfhe;
        let (n, k1) = (t.n, t.k + 1);
        let n64 = n as u64;
        let ms = self.push(
            KernelKind::ModSwitch,
            t.n_lwe + 1,
            1,
            (t.n_lwe + 1) as u64,
            0,
            input.to_vec(),
            "modswitch",
        );
        let mut acc = self.push(KernelKind::Rotate, n, k1, k1 as u64 * n64, 0, vec![ms], "acc_init");
        for _ in 0..t.n_lwe {
            let rot = self.push(KernelKind::Rotate, n, k1, k1 as u64 * n64, 0, vec![acc], "br_rotate");
            let dec = self.push(
                KernelKind::Decompose,
                n,
                k1,
                k1 as u64 * n64,
                0,
                vec![rot],
                "br_decompose",
            );
            let fwd = self.transforms(KernelKind::Ntt, n, k1 * t.l_b, &[dec], "br_ntt");
            let mac = self.mac(
                MacKind::ExternalProduct,
                n,
                (k1 * t.l_b * k1) as u64 * n64,
                fwd,
                "br_external_product",
            );
            let inv = self.transforms(KernelKind::Intt, n, k1, &[mac], "br_intt");
            acc = self.ewise(n, k1 as u64 * n64, 0, inv, "br_accumulate");
        }
        let kn = t.k * n;
        let ext = self.push(
            KernelKind::SampleExtract,
            n,
            1,
            (kn + 1) as u64,
            0,
            vec![acc],
            "sample_extract",
        );
        self.tfhe_keyswitch(&[ext])
    }

    fn tfhe_keyswitch(&mut self, input: &[usize]) -> Vec<usize> {
        let t = self.p.tfhe;
        let kn = (t.k * t.n) as u64;
        let dec = self.push(KernelKind::Decompose, t.n, 1, kn, 0, input.to_vec(), "ks_decompose");
        let macs = kn * (t.n_lwe + 1) as u64;
        (0..t.l_k)
            .map(|_| self.mac(MacKind::LweKeySwitch, t.n, macs, vec![dec], "lwe_keyswitch"))
            .collect()
    }

    fn ckks_to_lwes(&mut self, n_slot: usize, input: &[usize]) -> Vec<usize> {
        let n = self.p.ckks.n;
        let coeff = self.transforms(KernelKind::Intt, n, 2, input, "extract_intt");
        vec![self.push(
            KernelKind::SampleExtract,
            n,
            n_slot,
            (n_slot * (n + 1)) as u64,
            0,
            coeff,
            "sample_extract",
        )]
    }

    fn lwes_to_ckks(&mut self, n_slot: usize, input: &[usize]) -> Vec<usize> {
        let n = self.p.ckks.n;
        let level = 1;
        let limbs = level + 1;
        let e = (2 * limbs * n) as u64;
        let mut cts: Vec<usize> = (0..n_slot)
            .map(|_| {
                let emb = self.push(KernelKind::Rotate, n, 2, 2 * n as u64, 0, input.to_vec(), "ring_embed");
                let ev = self.transforms(KernelKind::Ntt, n, 2 * limbs, &[emb], "embed_ntt");
                self.ewise(n, e, e, ev, "embed_raise")
            })
            .collect();
        while cts.len() > 1 {
            let mut next = Vec::with_capacity(cts.len() / 2);
            for pair in cts.chunks(2) {
                let shifted = self.ewise(n, e, e, vec![pair[1]], "pack_monomial");
                let sum = self.ewise(n, 2 * e, 0, vec![pair[0], shifted], "pack_even_odd");
                let rot = self.hrotate(level, &[sum], false);
                next.push(self.ewise(n, e, 0, vec![rot[0], sum], "pack_merge"));
            }
            cts = next;
        }
        let mut cur = cts[0];
        let mut m = n;
        while m > n_slot {
            let rot = self.hrotate(level, &[cur], false);
            cur = self.ewise(n, e, 0, vec![rot[0], cur], "trace_add");
            m /= 2;
        }
        self.rescale(level, &[cur])
    }
}

fn check_pow2(n: usize, what: &str) -> Result<(), SimError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(SimError::UnsupportedOp(format!("{what} = {n} is not a power of two")));
    }
    Ok(())
}

/// Expands a sequence of FHE operations into kernels. Operations on the same
/// stream are chained; distinct streams are independent.
pub fn build_kernel_graph(ops: &[OpDesc], params: &WorkloadParams) -> Result<KernelGraph, SimError> {
    check_pow2(params.ckks.n, "CKKS N")?;
    check_pow2(params.tfhe.n, "TFHE N")?;
    if params.ckks.dnum == 0 || params.ckks.dnum > params.ckks.levels + 1 {
        return Err(SimError::UnsupportedOp(format!("dnum = {}", params.ckks.dnum)));
    }
    let mut b = Builder {
        g: KernelGraph::new(),
        p: params,
        stream: 0,
        scheme: Scheme::Ckks,
        rot_key_loaded: BTreeSet::new(),
    };
    let mut tails: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for op in ops {
        let level = op.level;
        let needs_level = !matches!(
            op.op,
            FheOp::Pbs | FheOp::TfheKeySwitch | FheOp::Ntt { .. } | FheOp::CkksToLwes { .. } | FheOp::LwesToCkks { .. }
        );
        if needs_level && level > params.ckks.levels {
            return Err(SimError::UnsupportedOp(format!(
                "level {level} above L = {}",
                params.ckks.levels
            )));
        }
        b.stream = op.stream;
        let input = tails.get(&op.stream).cloned().unwrap_or_default();
        let n = params.ckks.n;
        let e = ((level + 1) * n) as u64;
        b.scheme = match op.op {
            FheOp::Pbs | FheOp::TfheKeySwitch => Scheme::Tfhe,
            FheOp::CkksToLwes { .. } | FheOp::LwesToCkks { .. } => Scheme::Conversion,
            _ => Scheme::Ckks,
        };
        let out = match op.op {
            FheOp::HAdd => vec![b.ewise(n, 2 * e, 0, input, "hadd")],
            FheOp::PMult => vec![b.ewise(n, 2 * e, 2 * e, input, "pmult")],
            FheOp::HMult => {
                let tensor = b.ewise(n, 4 * e, 4 * e, input, "tensor");
                let ks = b.keyswitch(level, &[tensor], false);
                vec![b.ewise(n, 2 * e, 0, ks, "relin_add")]
            }
            FheOp::Rescale => {
                if level == 0 {
                    return Err(SimError::UnsupportedOp("rescale at level 0".into()));
                }
                b.rescale(level, &input)
            }
            FheOp::HRotate => {
                // one rotation key per stream, fetched on first use
                let fetch = b.rot_key_loaded.insert(op.stream);
                b.hrotate(level, &input, fetch)
            }
            FheOp::KeySwitch => b.keyswitch(level, &input, false),
            FheOp::Pbs => b.pbs(&input),
            FheOp::TfheKeySwitch => b.tfhe_keyswitch(&input),
            FheOp::CkksToLwes { n_slot } => {
                check_pow2(n_slot, "n_slot")?;
                if n_slot > n {
                    return Err(SimError::UnsupportedOp(format!("n_slot = {n_slot} above N")));
                }
                b.ckks_to_lwes(n_slot, &input)
            }
            FheOp::LwesToCkks { n_slot } => {
                check_pow2(n_slot, "n_slot")?;
                if n_slot > n {
                    return Err(SimError::UnsupportedOp(format!("n_slot = {n_slot} above N")));
                }
                b.lwes_to_ckks(n_slot, &input)
            }
            FheOp::Ntt { n } => {
                check_pow2(n, "NTT length")?;
                vec![b.transform(KernelKind::Ntt, n, input, "ntt")]
            }
        };
        tails.insert(op.stream, out);
    }
    Ok(b.g)
}

/// Shares of multiply work. The three fractions sum to one; an empty graph
/// or one without multiplies reports all zeros.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Breakdown {
    pub ntt_mults: u64,
    pub mac_mults: u64,
    pub other_mults: u64,
    pub ntt_fraction: f64,
    pub mac_fraction: f64,
    pub other_fraction: f64,
}

/// Splits modular-multiply work between transforms, MAC kernels and the rest.
///
/// A transform of length `n` costs `(n/2)·log2 n` butterflies plus the
/// twisting multiplies of [`ntt_mults`]; a MAC kernel costs one multiply per
/// multiply-accumulate; elementwise kernels count their multiplies only.
pub fn op_breakdown(graph: &KernelGraph) -> Breakdown {
    let (mut ntt, mut mac, mut other) = (0u64, 0u64, 0u64);
    for node in &graph.nodes {
        match node.kind {
            KernelKind::Ntt | KernelKind::Intt => ntt += node.mults,
            KernelKind::Mac => mac += node.mults,
            _ => other += node.mults,
        }
    }
    let total = ntt + mac + other;
    if total == 0 {
        return Breakdown {
            ntt_mults: 0,
            mac_mults: 0,
            other_mults: 0,
            ntt_fraction: 0.0,
            mac_fraction: 0.0,
            other_fraction: 0.0,
        };
    }
    let t = total as f64;
    let ntt_fraction = ntt as f64 / t;
    let mac_fraction = mac as f64 / t;
    Breakdown {
        ntt_mults: ntt,
        mac_mults: mac,
        other_mults: other,
        ntt_fraction,
        mac_fraction,
        // closes the sum exactly in floating point
        other_fraction: 1.0 - (ntt_fraction + mac_fraction),
    }
}
