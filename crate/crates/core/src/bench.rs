//! Benchmark scenarios and their pass/fail checks, shared by the `trinity`
//! binary and the acceptance suite. Every routine is a pure function of its
//! seed, so rerunning with the same arguments yields identical tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archsim::{
    keyswitch_breakdown, ntt_utilization_sweep, pbs_breakdown, pbs_table, run, sig6, trace_csv, FheOp, HardwareConfig,
    KernelGraph, NttStrategy, OpDesc, PBS_SETS, PBS_STREAMS_PER_CLUSTER,
};
use crate::ckks::{CkksContext, CkksParams, KeyMaterial, RlweCiphertext};
use crate::convert::ConversionContext;
use crate::error::BenchError;
use crate::modmath::find_ntt_prime;
use crate::polyring::{four_step_ntt, ntt_forward, ntt_inverse, ntt_mul, NttTables, RingPolynomial};
use crate::tfhe::{Lut, TfheContext, TfheParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Independent generator for trial `stream` under `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Rounds to the value `sig6` prints.
pub fn round6(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => sig6(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Result of one scenario: a table, its checks and headline numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutput {
    pub table: Table,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub params_hash: [u8; 32],
}

impl BenchOutput {
    fn new(table: Table, params_hash: [u8; 32]) -> Self {
        BenchOutput {
            table,
            checks: vec![],
            metrics: BTreeMap::new(),
            params_hash,
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.into(), round6(v));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self, command: &str, seed: u64) -> Summary {
        Summary {
            header: RunHeader {
                tool: "trinity".into(),
                version: VERSION.into(),
                command: command.into(),
                seed,
                params_hash: hex(&self.params_hash),
            },
            rows: self.table.rows.len(),
            passed: self.passed(),
            checks: self.checks.clone(),
            metrics: self.metrics.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub params_hash: String,
}

impl RunHeader {
    /// `# key=value` lines placed above a CSV body.
    pub fn comment(&self) -> String {
        format!(
            "# tool={} version={} command={} seed={} params_hash={}\n",
            self.tool, self.version, self.command, self.seed, self.params_hash
        )
    }
}

/// Hierarchical run summary; metrics are already rounded to six significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub header: RunHeader,
    pub rows: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))
    }
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn hash_text(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

fn schoolbook(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0i128; n];
    for i in 0..n {
        for j in 0..n {
            let p = a[i] as i128 * b[j] as i128;
            if i + j < n {
                out[i + j] += p;
            } else {
                out[i + j - n] -= p;
            }
        }
    }
    out.iter().map(|&x| x.rem_euclid(q as i128) as u64).collect()
}

fn random_poly(n: usize, q: crate::modmath::Modulus, rng: &mut ChaCha20Rng) -> Result<RingPolynomial, BenchError> {
    let c = (0..n).map(|_| rng.random_range(0..q.value())).collect();
    Ok(RingPolynomial::from_coeffs(c, q)?)
}

pub const KERNEL_SIZES: [usize; 4] = [8, 16, 64, 256];

/// Round trip and convolution against the quadratic schoolbook product.
pub fn kernel_checks(seed: u64, trials: usize) -> Result<BenchOutput, BenchError> {
    let mut table = Table::new(&["check", "n", "trials", "mismatches"]);
    let mut checks = vec![];
    let mut hasher = Sha256::new();
    for (i, &n) in KERNEL_SIZES.iter().enumerate() {
        let q = find_ntt_prime(36, 2 * n as u64)?;
        hasher.update(q.value().to_le_bytes());
        let t = NttTables::new(n, q)?;
        let mut rng = trial_rng(seed, i as u64);
        let (mut round, mut conv) = (0usize, 0usize);
        for _ in 0..trials {
            let a = random_poly(n, q, &mut rng)?;
            let b = random_poly(n, q, &mut rng)?;
            if ntt_inverse(&ntt_forward(&a, &t)?, &t)? != a {
                round += 1;
            }
            if ntt_mul(&a, &b, &t)?.coeffs() != schoolbook(a.coeffs(), b.coeffs(), q.value()) {
                conv += 1;
            }
        }
        table.push(vec!["round-trip".into(), n.into(), trials.into(), round.into()]);
        table.push(vec!["convolution".into(), n.into(), trials.into(), conv.into()]);
        checks.push(Check::new(
            &format!("ntt-round-trip-{n}"),
            round == 0,
            format!("{round}/{trials} mismatches"),
        ));
        checks.push(Check::new(
            &format!("convolution-{n}"),
            conv == 0,
            format!("{conv}/{trials} mismatches"),
        ));
    }
    let mut out = BenchOutput::new(table, hasher.finalize().into());
    out.checks = checks;
    Ok(out)
}

/// Four-step transform against the direct one for `2^8 ..= 2^max_log` (even exponents).
pub fn four_step_checks(seed: u64, max_log: u32) -> Result<BenchOutput, BenchError> {
    let mut table = Table::new(&["check", "n", "trials", "mismatches"]);
    let mut checks = vec![];
    let mut hasher = Sha256::new();
    for log in (8..=max_log).step_by(4) {
        let n = 1usize << log;
        let n1 = 1usize << (log / 2);
        let n2 = n / n1;
        let q = find_ntt_prime(36, 2 * n as u64)?;
        hasher.update(q.value().to_le_bytes());
        let t = NttTables::new(n, q)?;
        let (t1, t2) = (NttTables::new(n1, q)?, NttTables::new(n2, q)?);
        let mut rng = trial_rng(seed, 100 + log as u64);
        let p = random_poly(n, q, &mut rng)?;
        let equal = four_step_ntt(&p, &t1, &t2)? == ntt_forward(&p, &t)?;
        table.push(vec![
            "four-step".into(),
            n.into(),
            1usize.into(),
            usize::from(!equal).into(),
        ]);
        checks.push(Check::new(
            &format!("four-step-{n}"),
            equal,
            if equal { "exact" } else { "differs" },
        ));
    }
    let mut out = BenchOutput::new(table, hasher.finalize().into());
    out.checks = checks;
    Ok(out)
}

pub fn kernels(seed: u64) -> Result<BenchOutput, BenchError> {
    let mut out = kernel_checks(seed, 20)?;
    let four = four_step_checks(seed, 16)?;
    out.table.rows.extend(four.table.rows);
    out.checks.extend(four.checks);
    Ok(out)
}

pub const CKKS_TOLERANCE: f64 = 1.0 / 1024.0;
const ROTATIONS: [i64; 3] = [1, 3, -7];

struct Wire {
    ct: RlweCiphertext,
    vals: Vec<f64>,
    depth: usize,
}

fn same_shape(a: &RlweCiphertext, b: &RlweCiphertext) -> bool {
    a.level == b.level && ((a.scale - b.scale) / a.scale).abs() < 1e-9
}

/// One random circuit of multiplicative depth at most two; returns the op
/// trace and the relative error of the decoded output.
fn random_circuit(
    ctx: &CkksContext,
    keys: &KeyMaterial,
    rng: &mut ChaCha20Rng,
) -> Result<(String, usize, f64), BenchError> {
    let slots = ctx.params().slots();
    let top = ctx.params().levels();
    let d = ctx.params().scale();
    let mut wires = vec![];
    for _ in 0..2 {
        let vals: Vec<f64> = (0..slots).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pt = ctx.encode_real(&vals, top, d)?;
        let ct = ctx.encrypt_pk(&pt, &keys.public, rng)?;
        wires.push(Wire { ct, vals, depth: 0 });
    }
    let n_ops = rng.random_range(1..=4);
    let mut trace = vec![];
    for _ in 0..n_ops {
        let a = rng.random_range(0..wires.len());
        let partner = |a: usize, wires: &[Wire]| {
            (0..wires.len())
                .rev()
                .find(|&b| b != a && same_shape(&wires[a].ct, &wires[b].ct))
                .unwrap_or(a)
        };
        let kind = match rng.random_range(0..4) {
            1 | 2 if wires[a].depth >= 2 => 3,
            k => k,
        };
        let w = &wires[a];
        let next = match kind {
            0 => {
                let b = partner(a, &wires);
                trace.push(format!("hadd({a},{b})"));
                Wire {
                    ct: ctx.hadd(&w.ct, &wires[b].ct)?,
                    vals: w.vals.iter().zip(&wires[b].vals).map(|(x, y)| x + y).collect(),
                    depth: w.depth.max(wires[b].depth),
                }
            }
            1 => {
                let p: Vec<f64> = (0..slots).map(|_| rng.random_range(-1.0..1.0)).collect();
                let pt = ctx.encode_real(&p, w.ct.level, d)?;
                trace.push(format!("pmult({a})"));
                Wire {
                    ct: ctx.rescale(&ctx.pmult(&w.ct, &pt)?)?,
                    vals: w.vals.iter().zip(&p).map(|(x, y)| x * y).collect(),
                    depth: w.depth + 1,
                }
            }
            2 => {
                let b = partner(a, &wires);
                trace.push(format!("hmult({a},{b})"));
                Wire {
                    ct: ctx.rescale(&ctx.hmult(&w.ct, &wires[b].ct, &keys.relin)?)?,
                    vals: w.vals.iter().zip(&wires[b].vals).map(|(x, y)| x * y).collect(),
                    depth: w.depth.max(wires[b].depth) + 1,
                }
            }
            _ => {
                let r = ROTATIONS[rng.random_range(0..ROTATIONS.len())];
                trace.push(format!("hrotate({a},{r})"));
                let s = slots as i64;
                Wire {
                    ct: ctx.hrotate(&w.ct, r, &keys.rotations)?,
                    vals: (0..s).map(|j| w.vals[(j + r).rem_euclid(s) as usize]).collect(),
                    depth: w.depth,
                }
            }
        };
        wires.push(next);
    }
    let out = wires.last().expect("circuit has an output");
    let got = ctx.decode_real(&ctx.decrypt(&out.ct, &keys.secret)?);
    let peak = out.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = got.iter().zip(&out.vals).fold(0.0f64, |m, (g, w)| m.max((g - w).abs()));
    Ok((trace.join(" "), out.depth, err / peak.max(f64::MIN_POSITIVE)))
}

/// Random depth-two circuits checked against plaintext evaluation.
pub fn ckks_bench(params: CkksParams, seed: u64, circuits: usize) -> Result<BenchOutput, BenchError> {
    let hash = params.hash();
    let ctx = CkksContext::new(params)?;
    let keys = ctx.keygen(&mut trial_rng(seed, 0), &ROTATIONS);
    let mut table = Table::new(&["circuit", "ops", "depth", "rel_error"]);
    let mut worst = 0.0f64;
    let mut failed = 0;
    for i in 0..circuits {
        let (ops, depth, err) = random_circuit(&ctx, &keys, &mut trial_rng(seed, 1 + i as u64))?;
        worst = worst.max(err);
        if err.is_nan() || err >= CKKS_TOLERANCE {
            failed += 1;
        }
        table.push(vec![i.into(), ops.into(), depth.into(), err.into()]);
    }
    let mut out = BenchOutput::new(table, hash);
    out.checks.push(Check::new(
        "ckks-circuits",
        failed == 0 && circuits > 0,
        format!("{}/{circuits} within 2^-10, worst {}", circuits - failed, sig6(worst)),
    ));
    out.metric("worst_rel_error", worst);
    Ok(out)
}

pub const PBS_BITS: u32 = 2;

/// Identity-table bootstraps over `Z_{2^PBS_BITS}` and the NAND truth table.
pub fn tfhe_bench(params: TfheParams, seed: u64, trials: usize, nand_trials: usize) -> Result<BenchOutput, BenchError> {
    let params = params.with_plaintext_bits(PBS_BITS);
    let hash = params.hash();
    let ctx = TfheContext::new(params)?;
    let keys = ctx.keygen(&mut trial_rng(seed, 0));
    let tv = ctx.build_test_vector(&Lut::identity(PBS_BITS))?;
    let mut table = Table::new(&["test", "trial", "input", "output", "correct"]);
    let mut pbs_ok = 0;
    for i in 0..trials {
        let mut rng = trial_rng(seed, 1 + i as u64);
        let m = rng.random_range(0..1u64 << PBS_BITS);
        let c = ctx.lwe_encrypt(m, &keys.lwe, &mut rng);
        let got = ctx.lwe_decrypt(&ctx.pbs(&c, &tv, &keys.eval)?, &keys.lwe);
        pbs_ok += usize::from(got == m);
        table.push(vec![
            "pbs-identity".into(),
            i.into(),
            (m as usize).into(),
            (got as usize).into(),
            (got == m).into(),
        ]);
    }
    let mut nand_ok = 0;
    for i in 0..nand_trials {
        let mut rng = trial_rng(seed, 1 << 32 | i as u64);
        let (x, y) = ((i & 1) == 1, (i & 2) == 2);
        let cx = ctx.lwe_encrypt_bool(x, &keys.lwe, &mut rng);
        let cy = ctx.lwe_encrypt_bool(y, &keys.lwe, &mut rng);
        let got = ctx.lwe_decrypt_bool(&ctx.nand(&cx, &cy, &keys.eval)?, &keys.lwe);
        let want = !(x && y);
        nand_ok += usize::from(got == want);
        let input = format!("{}{}", u8::from(x), u8::from(y));
        table.push(vec![
            "nand".into(),
            i.into(),
            input.into(),
            usize::from(got).into(),
            (got == want).into(),
        ]);
    }
    let mut out = BenchOutput::new(table, hash);
    out.checks.push(Check::new(
        "pbs-identity",
        trials > 0 && pbs_ok * 1000 >= trials * 999,
        format!("{pbs_ok}/{trials} correct"),
    ));
    if nand_trials > 0 {
        out.checks.push(Check::new(
            "nand",
            nand_ok == nand_trials,
            format!("{nand_ok}/{nand_trials} correct"),
        ));
    }
    out.metric("pbs_success_rate", pbs_ok as f64 / trials.max(1) as f64);
    Ok(out)
}

pub const CONVERT_SLOTS: [usize; 3] = [2, 8, 32];

fn sparse_slots(n: usize, n_slot: usize, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
    let period = (n_slot / 2).max(1);
    let base: Vec<Complex64> = (0..period)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    (0..n / 2).map(|j| base[j % period]).collect()
}

/// CKKS → LWEs → CKKS on sparsely packed level-0 ciphertexts.
pub fn convert_bench(params: CkksParams, seed: u64, slots: &[usize]) -> Result<BenchOutput, BenchError> {
    let hash = params.hash();
    let mut table = Table::new(&["n_slot", "lwes", "rel_error"]);
    let mut checks = vec![];
    let mut worst = 0.0f64;
    for (i, &n_slot) in slots.iter().enumerate() {
        let mut rng = trial_rng(seed, i as u64);
        let ctx = CkksContext::new(params.clone())?;
        let sk = ctx.gen_secret(&mut rng);
        let conv = ConversionContext::new(ctx, n_slot, &sk, &mut rng)?;
        let ctx = conv.ckks();
        let values = sparse_slots(ctx.params().n(), n_slot, &mut rng);
        let pt = ctx.encode(&values, 0, ctx.params().scale())?;
        let ct = ctx.encrypt_sk(&pt, &sk, &mut rng)?;
        let back = conv.round_trip(&ct)?;
        let got = ctx.decode(&ctx.decrypt(&back, &sk)?);
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let err = values.iter().zip(&got).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / peak;
        worst = worst.max(err);
        table.push(vec![n_slot.into(), n_slot.into(), err.into()]);
        checks.push(Check::new(
            &format!("convert-{n_slot}"),
            err < CKKS_TOLERANCE,
            format!("relative error {}", sig6(err)),
        ));
    }
    let mut out = BenchOutput::new(table, hash);
    out.checks = checks;
    out.metric("worst_rel_error", worst);
    Ok(out)
}

pub const KEYSWITCH_NTT_TARGET: f64 = 0.592;
pub const PBS_NTT_TARGET: f64 = 0.755;
pub const BREAKDOWN_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakdownOp {
    KeySwitch,
    Pbs,
    All,
}

/// Work fractions per operation; `All` adds every bootstrapping set and their mean.
pub fn breakdown(op: BreakdownOp, n: usize, levels: usize, dnum: usize) -> Result<BenchOutput, BenchError> {
    let mut table = Table::new(&["op", "params", "ntt_fraction", "mac_fraction", "other_fraction"]);
    let mut out_checks = vec![];
    let mut metrics = vec![];
    if op != BreakdownOp::Pbs {
        let b = keyswitch_breakdown(n, levels, dnum)?;
        table.push(vec![
            "keyswitch".into(),
            format!("N={n} L={levels} dnum={dnum}").into(),
            b.ntt_fraction.into(),
            b.mac_fraction.into(),
            b.other_fraction.into(),
        ]);
        if (n, levels, dnum) == (1 << 16, 23, 3) {
            out_checks.push(Check::new(
                "keyswitch-ntt-share",
                (b.ntt_fraction - KEYSWITCH_NTT_TARGET).abs() <= BREAKDOWN_TOLERANCE,
                format!("{} vs 0.592 +- 0.05", sig6(b.ntt_fraction)),
            ));
        }
        metrics.push(("keyswitch_ntt_fraction", b.ntt_fraction));
    }
    if op != BreakdownOp::KeySwitch {
        let mut sum = 0.0;
        for (name, f) in PBS_SETS {
            let b = pbs_breakdown(f())?;
            sum += b.ntt_fraction;
            table.push(vec![
                "pbs".into(),
                name.into(),
                b.ntt_fraction.into(),
                b.mac_fraction.into(),
                b.other_fraction.into(),
            ]);
        }
        let mean = sum / PBS_SETS.len() as f64;
        out_checks.push(Check::new(
            "pbs-ntt-share",
            (mean - PBS_NTT_TARGET).abs() <= BREAKDOWN_TOLERANCE,
            format!("{} vs 0.755 +- 0.05", sig6(mean)),
        ));
        metrics.push(("pbs_ntt_fraction_mean", mean));
    }
    let mut out = BenchOutput::new(table, hash_text(&format!("breakdown {n} {levels} {dnum}")));
    out.checks = out_checks;
    for (k, v) in metrics {
        out.metric(k, v);
    }
    Ok(out)
}

/// Structural claims about the per-strategy utilization curves.
pub fn ntt_structure_checks(rows: &[(NttStrategy, usize, f64)]) -> Vec<Check> {
    let curve =
        |s: NttStrategy| -> Vec<(usize, f64)> { rows.iter().filter(|r| r.0 == s).map(|r| (r.1, r.2)).collect() };
    let (f1, fab, tri) = (
        curve(NttStrategy::F1Like),
        curve(NttStrategy::FabLike),
        curve(NttStrategy::Trinity),
    );
    let mut checks = vec![];
    let argmax = |c: &[(usize, f64)]| {
        c.iter()
            .fold((0, -1.0), |b, &(n, u)| if u > b.1 { (n, u) } else { b })
            .0
    };
    let f1_ok = !f1.is_empty() && argmax(&f1) == 1 << 16 && f1.windows(2).all(|w| w[0].1 <= w[1].1);
    checks.push(Check::new(
        "f1-peak-at-2^16",
        f1_ok,
        format!("peak at N={}", argmax(&f1)),
    ));
    let fab_ok = !fab.is_empty() && argmax(&fab) == 1 << 8 && fab.windows(2).all(|w| w[0].1 >= w[1].1);
    checks.push(Check::new(
        "fab-peak-at-2^8",
        fab_ok,
        format!("peak at N={}", argmax(&fab)),
    ));
    let mut dominates = tri.len() == f1.len() && tri.len() == fab.len() && !tri.is_empty();
    let mut gain = 0.0;
    for ((t, a), b) in tri.iter().zip(&f1).zip(&fab) {
        let best = a.1.max(b.1);
        dominates &= t.1 >= best;
        gain += t.1 / best;
    }
    let mean = gain / tri.len().max(1) as f64;
    checks.push(Check::new("trinity-dominates", dominates, "every N"));
    checks.push(Check::new(
        "trinity-mean-gain",
        mean >= 1.1,
        format!("{} (need >= 1.1)", sig6(mean)),
    ));
    checks
}

pub fn ntt_util(config: &HardwareConfig) -> Result<BenchOutput, BenchError> {
    config.validate()?;
    let rows = ntt_utilization_sweep(config);
    let mut table = Table::new(&["strategy", "n", "log_n", "utilization"]);
    for &(s, n, u) in &rows {
        table.push(vec![
            s.name().into(),
            n.into(),
            (n.trailing_zeros() as usize).into(),
            u.into(),
        ]);
    }
    let mut out = BenchOutput::new(table, hash_text(&config.emit()));
    out.checks = ntt_structure_checks(&rows);
    Ok(out)
}

pub const CU_SPEEDUP_RANGE: (f64, f64) = (1.5, 2.1);
pub const UTILIZATION_GAIN_TARGET: f64 = 1.45;
pub const UTILIZATION_GAIN_TOLERANCE: f64 = 0.15;

/// Bootstrap throughput with and without the flexible units, and at full cluster count.
pub fn throughput(config: &HardwareConfig) -> Result<BenchOutput, BenchError> {
    config.validate()?;
    let rows = pbs_table(config, PBS_STREAMS_PER_CLUSTER)?;
    let mut table = Table::new(&[
        "set",
        "pbs_per_s_without_cu",
        "pbs_per_s_with_cu",
        "pbs_per_s_full",
        "cu_speedup",
        "ntt_util_without_cu",
        "ntt_util_with_cu",
        "utilization_gain",
        "cluster_scaling",
    ]);
    let mut gains = 0.0;
    let mut checks = vec![];
    for r in &rows {
        table.push(vec![
            r.set.into(),
            r.without_cu.per_second.into(),
            r.with_cu.per_second.into(),
            r.full.per_second.into(),
            r.cu_speedup().into(),
            r.without_cu.report.ntt_datapath.into(),
            r.with_cu.report.ntt_datapath.into(),
            r.utilization_gain().into(),
            r.cluster_scaling().into(),
        ]);
        gains += r.utilization_gain();
        let clusters = config.n_clusters as f64;
        checks.push(Check::new(
            &format!("cluster-scaling-{}", r.set),
            r.full.makespan == r.with_cu.makespan && (r.cluster_scaling() - clusters).abs() < 1e-9,
            format!("{} vs {clusters}", sig6(r.cluster_scaling())),
        ));
        let s = r.cu_speedup();
        checks.push(Check::new(
            &format!("cu-speedup-{}", r.set),
            (CU_SPEEDUP_RANGE.0..=CU_SPEEDUP_RANGE.1).contains(&s),
            format!("{} in [1.5, 2.1]", sig6(s)),
        ));
    }
    let mean = gains / rows.len().max(1) as f64;
    checks.push(Check::new(
        "utilization-gain",
        (mean - UTILIZATION_GAIN_TARGET).abs() <= UTILIZATION_GAIN_TOLERANCE,
        format!("{} vs 1.45 +- 0.15", sig6(mean)),
    ));
    let mut out = BenchOutput::new(table, hash_text(&config.emit()));
    out.checks = checks;
    out.metric("utilization_gain_mean", mean);
    Ok(out)
}

/// Parses one `op@level` or `op@level:stream` item.
pub fn parse_op(item: &str) -> Result<OpDesc, BenchError> {
    let bad = || BenchError::Parse(format!("expected op@level[:stream], got {item:?}"));
    let (op, rest) = item.trim().split_once('@').ok_or_else(bad)?;
    let (level, stream) = match rest.split_once(':') {
        Some((l, s)) => (l, s.parse().map_err(|_| bad())?),
        None => (rest, 0),
    };
    let level = level.parse().map_err(|_| bad())?;
    Ok(OpDesc::new(FheOp::from_name(op)?, level).on_stream(stream))
}

/// Per-unit utilization of one scheduled graph, plus its occupancy trace as CSV.
pub fn simulate(graph: &KernelGraph, config: &HardwareConfig) -> Result<(BenchOutput, String), BenchError> {
    config.validate()?;
    let (trace, report) = run(graph, config)?;
    let mut table = Table::new(&["unit", "class", "busy", "occupancy", "utilization"]);
    for u in &report.units {
        table.push(vec![
            u.name.clone().into(),
            u.class.clone().into(),
            (u.busy as usize).into(),
            u.occupancy.into(),
            u.utilization.into(),
        ]);
    }
    let mut out = BenchOutput::new(table, hash_text(&config.emit()));
    out.metric("makespan_cycles", report.makespan as f64);
    out.metric("seconds", trace.seconds());
    out.metric("aggregate_utilization", report.aggregate);
    out.metric("ntt_datapath_utilization", report.ntt_datapath);
    out.metric("kernels", graph.len() as f64);
    Ok((out, trace_csv(&trace)))
}
