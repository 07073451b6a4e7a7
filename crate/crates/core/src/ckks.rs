//! Full-RNS CKKS over NTT-friendly primes.
//!
//! Ciphertexts are pairs `(b, a)` decrypting as `b + a·s`, stored limb-wise in
//! evaluation representation. The modulus chain is `q_0` (36 bits, holds the
//! final message), `q_1..q_L` (close to the scale Δ, consumed by rescaling),
//! and `α = ⌈(L+1)/dnum⌉` special primes `p_j` used by hybrid key switching.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use sha2::{Digest, Sha256};

use crate::error::{CkksError, RingError};
use crate::kernels::{self, Kernel};
use crate::modmath::{ntt_primes, Modulus, ModulusRole, Residue, RnsBasis};
use crate::polyring::{apply_galois, rotation_galois_element, NttTables, Representation, RingPolynomial};
use crate::sampling;

#[derive(Clone, Debug, PartialEq)]
pub struct CkksParams {
    n_poly: usize,
    levels: usize,
    dnum: usize,
    alpha: usize,
    scale_bits: u32,
    sigma: f64,
    ciphertext_basis: RnsBasis,
    special_basis: RnsBasis,
}

impl CkksParams {
    /// Generates the modulus chain deterministically: `q_0` is the largest
    /// 36-bit NTT prime, `q_1..q_L` the largest primes below `2^scale_bits`,
    /// and the special primes the next 36-bit primes after `q_0`.
    pub fn new(n_poly: usize, levels: usize, dnum: usize, scale_bits: u32) -> Result<Self, CkksError> {
        if !n_poly.is_power_of_two() || !(16..=1 << 17).contains(&n_poly) {
            return Err(CkksError::InvalidParams(format!("N = {n_poly}")));
        }
        if dnum == 0 || dnum > levels + 1 {
            return Err(CkksError::InvalidParams(format!(
                "dnum = {dnum} must lie in [1, L+1 = {}]",
                levels + 1
            )));
        }
        if !(20..=35).contains(&scale_bits) {
            return Err(CkksError::InvalidParams(format!("scale bits {scale_bits}")));
        }
        let two_n = 2 * n_poly as u64;
        let alpha = (levels + 1).div_ceil(dnum);
        let big = ntt_primes(36, two_n, 1 + alpha, &[])?;
        let mut qs = vec![big[0]];
        qs.extend(ntt_primes(scale_bits, two_n, levels, &big)?);
        let ciphertext_basis = RnsBasis::new(qs, ModulusRole::Ciphertext)?;
        let special_basis = RnsBasis::new(big[1..].to_vec(), ModulusRole::Special)?;
        Ok(Self {
            n_poly,
            levels,
            dnum,
            alpha,
            scale_bits,
            sigma: sampling::DEFAULT_SIGMA,
            ciphertext_basis,
            special_basis,
        })
    }

    /// Small parameters for tests: `N = 2^13`, `L = 5`, `dnum = 2`, `Δ = 2^30`.
    pub fn desk() -> Self {
        Self::new(1 << 13, 5, 2, 30).expect("desk parameters")
    }

    /// Full-size default: `N = 2^16`, `L = 35`, `dnum = 3`.
    pub fn default_set() -> Self {
        Self::new(1 << 16, 35, 3, 30).expect("default parameters")
    }

    pub fn n(&self) -> usize {
        self.n_poly
    }

    pub fn slots(&self) -> usize {
        self.n_poly / 2
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dnum(&self) -> usize {
        self.dnum
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Number of decomposition digits at level `l`.
    pub fn beta(&self, level: usize) -> usize {
        (level + 1).div_ceil(self.alpha)
    }

    pub fn scale(&self) -> f64 {
        (self.scale_bits as f64).exp2()
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Overrides the error standard deviation (0 gives noiseless encryption).
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn ciphertext_basis(&self) -> &RnsBasis {
        &self.ciphertext_basis
    }

    pub fn special_basis(&self) -> &RnsBasis {
        &self.special_basis
    }

    /// `q_0..q_L` followed by `p_0..p_{α-1}`.
    pub fn all_moduli(&self) -> Vec<Modulus> {
        let mut v = self.ciphertext_basis.moduli().to_vec();
        v.extend_from_slice(self.special_basis.moduli());
        v
    }

    /// SHA-256 over the defining values and every modulus.
    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"ckks");
        for v in [
            self.n_poly as u64,
            self.levels as u64,
            self.dnum as u64,
            self.scale_bits as u64,
        ] {
            h.update(v.to_le_bytes());
        }
        h.update(self.sigma.to_le_bytes());
        for m in self.all_moduli() {
            h.update(m.value().to_le_bytes());
        }
        h.finalize().into()
    }
}

/// A polynomial over several residue moduli, one [`RingPolynomial`] per limb.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsPolynomial {
    limbs: Vec<RingPolynomial>,
}

impl RnsPolynomial {
    pub fn new(limbs: Vec<RingPolynomial>) -> Result<Self, RingError> {
        let first = limbs.first().ok_or_else(|| RingError::ShapeError("no limbs".into()))?;
        if limbs.iter().any(|l| l.n() != first.n() || l.rep() != first.rep()) {
            return Err(RingError::ShapeError(
                "limbs disagree on length or representation".into(),
            ));
        }
        Ok(Self { limbs })
    }

    pub fn zero(n: usize, moduli: &[Modulus], rep: Representation) -> Self {
        Self {
            limbs: moduli.iter().map(|&m| RingPolynomial::zero(n, m, rep)).collect(),
        }
    }

    /// Reduces one signed integer polynomial into every modulus.
    pub fn from_signed(coeffs: &[i64], moduli: &[Modulus]) -> Self {
        Self {
            limbs: moduli
                .iter()
                .map(|&m| RingPolynomial::from_signed(coeffs, m).expect("valid length"))
                .collect(),
        }
    }

    pub fn limbs(&self) -> &[RingPolynomial] {
        &self.limbs
    }

    pub fn limbs_mut(&mut self) -> &mut [RingPolynomial] {
        &mut self.limbs
    }

    pub fn into_limbs(self) -> Vec<RingPolynomial> {
        self.limbs
    }

    pub fn n(&self) -> usize {
        self.limbs[0].n()
    }

    pub fn len(&self) -> usize {
        self.limbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn rep(&self) -> Representation {
        self.limbs[0].rep()
    }

    pub fn moduli(&self) -> Vec<Modulus> {
        self.limbs.iter().map(|l| *l.modulus()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|l| l.is_zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            limbs: self.limbs.iter().zip(&o.limbs).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            limbs: self.limbs.iter().zip(&o.limbs).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            limbs: self.limbs.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn pointwise_mul(&self, o: &Self) -> Self {
        Self {
            limbs: self
                .limbs
                .iter()
                .zip(&o.limbs)
                .map(|(a, b)| a.pointwise_mul(b))
                .collect(),
        }
    }

    /// Keeps the first `count` limbs.
    pub fn truncate(&mut self, count: usize) {
        self.limbs.truncate(count);
    }

    fn prefix(&self, count: usize) -> Self {
        Self {
            limbs: self.limbs[..count].to_vec(),
        }
    }
}

/// Fast basis conversion of coefficient-representation limbs over `C` to the
/// moduli `target`. The result may overshoot the exact CRT value by a small
/// multiple of `C`; no correction is applied.
pub fn bconv(src: &[RingPolynomial], target: &[Modulus]) -> Result<Vec<RingPolynomial>, CkksError> {
    convert_basis(src, target, false)
}

/// Basis conversion of the centered representative in `(-C/2, C/2]`. The
/// overshoot is removed with a floating-point estimate of the CRT quotient,
/// which can only be off by one `C` when the value sits next to `±C/2`.
pub fn bconv_centered(src: &[RingPolynomial], target: &[Modulus]) -> Result<Vec<RingPolynomial>, CkksError> {
    convert_basis(src, target, true)
}

fn convert_basis(src: &[RingPolynomial], target: &[Modulus], centered: bool) -> Result<Vec<RingPolynomial>, CkksError> {
    if src.iter().any(|p| p.rep() != Representation::Coefficient) {
        return Err(RingError::RepError {
            expected: Representation::Coefficient,
        }
        .into());
    }
    let n = src
        .first()
        .ok_or_else(|| CkksError::BasisMismatch("empty source basis".into()))?
        .n();
    kernels::record(Kernel::BConv, 1);
    let cs: Vec<Modulus> = src.iter().map(|p| *p.modulus()).collect();
    // y_i = [x_i · (C/c_i)^-1]_{c_i}
    let ys: Vec<Vec<Residue>> = src
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ci = cs[i];
            let mut hat = 1;
            for (k, c) in cs.iter().enumerate() {
                if k != i {
                    hat = ci.mul(hat, ci.reduce(c.value()));
                }
            }
            let w = ci.inv(hat)?;
            let ws = ci.shoup(w);
            Ok(p.coeffs().iter().map(|&x| ci.mul_shoup(x, w, ws)).collect())
        })
        .collect::<Result<_, CkksError>>()?;
    // Σ y_i / c_i = x / C + k, so rounding it gives the k that centers x.
    let quotients: Option<Vec<u64>> = centered.then(|| {
        (0..n)
            .map(|j| {
                let f: f64 = ys.iter().zip(&cs).map(|(y, c)| y[j] as f64 / c.value() as f64).sum();
                f.round() as u64
            })
            .collect()
    });
    target
        .iter()
        .map(|&d| {
            let weights: Vec<Residue> = (0..cs.len())
                .map(|i| {
                    cs.iter()
                        .enumerate()
                        .filter(|&(k, _)| k != i)
                        .fold(1, |acc, (_, c)| d.mul(acc, d.reduce(c.value())))
                })
                .collect();
            let mut out = vec![0u64; n];
            for (y, &w) in ys.iter().zip(&weights) {
                let ws = d.shoup(w);
                for (o, &yv) in out.iter_mut().zip(y) {
                    *o = d.add(*o, d.mul_shoup(d.reduce(yv), w, ws));
                }
            }
            if let Some(v) = &quotients {
                let c = cs.iter().fold(1, |acc, m| d.mul(acc, d.reduce(m.value())));
                let c_shoup = d.shoup(c);
                for (o, &k) in out.iter_mut().zip(v) {
                    *o = d.sub(*o, d.mul_shoup(d.reduce(k), c, c_shoup));
                }
            }
            Ok(RingPolynomial::from_coeffs(out, d)?)
        })
        .collect()
}

/// Ternary secret key, stored as signed coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    coeffs: Vec<i64>,
}

impl SecretKey {
    pub fn from_coeffs(coeffs: Vec<i64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }
}

/// `(b, a)` with `b = -a·s + e` over `q_0..q_L`, evaluation representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub b: RnsPolynomial,
    pub a: RnsPolynomial,
}

/// `dnum` rows `(b_i, a_i)` over `q_0..q_L, p_0..p_{α-1}` with
/// `b_i + a_i·s = e_i + P·[B_i]·s_src`, where `B_i ≡ 1` on digit `i`'s moduli
/// and `0` elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvaluationKey {
    pub rows: Vec<(RnsPolynomial, RnsPolynomial)>,
}

#[derive(Clone, Debug)]
pub struct KeyMaterial {
    pub secret: SecretKey,
    pub public: PublicKey,
    /// Switches `s²` to `s`.
    pub relin: EvaluationKey,
    /// Keyed by Galois element.
    pub rotations: BTreeMap<u64, EvaluationKey>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plaintext {
    pub poly: RnsPolynomial,
    pub level: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RlweCiphertext {
    pub b: RnsPolynomial,
    pub a: RnsPolynomial,
    pub level: usize,
    pub scale: f64,
}

fn scales_match(x: f64, y: f64) -> bool {
    ((x - y) / x).abs() < 1e-9
}

/// Parameters plus every precomputed table the scheme needs.
pub struct CkksContext {
    params: CkksParams,
    moduli: Vec<Modulus>,
    tables: Vec<NttTables>,
    /// `P^-1 mod q_k`.
    p_inv: Vec<Residue>,
    /// `P mod q_k`.
    p_mod: Vec<Residue>,
    /// Positions of `5^j mod 2N` for the slot ordering.
    rot_group: Vec<usize>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CkksContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CkksContext").field("params", &self.params).finish()
    }
}

impl CkksContext {
    pub fn new(params: CkksParams) -> Result<Self, CkksError> {
        let n = params.n();
        let moduli = params.all_moduli();
        let tables = moduli
            .iter()
            .map(|&m| NttTables::new(n, m))
            .collect::<Result<Vec<_>, _>>()?;
        let mut p_inv = Vec::new();
        let mut p_mod = Vec::new();
        for q in params.ciphertext_basis().moduli() {
            let p = params
                .special_basis()
                .moduli()
                .iter()
                .fold(1, |acc, pj| q.mul(acc, q.reduce(pj.value())));
            p_mod.push(p);
            p_inv.push(q.inv(p)?);
        }
        let two_n = 2 * n;
        let mut rot_group = Vec::with_capacity(n / 2);
        let mut g = 1usize;
        for _ in 0..n / 2 {
            rot_group.push(g);
            g = g * 5 % two_n;
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            fft_fwd: planner.plan_fft_forward(two_n),
            fft_inv: planner.plan_fft_inverse(two_n),
            params,
            moduli,
            tables,
            p_inv,
            p_mod,
            rot_group,
        })
    }

    pub fn params(&self) -> &CkksParams {
        &self.params
    }

    /// Tables for global modulus index `k` (`q`s first, then `p`s).
    pub fn tables(&self, k: usize) -> &NttTables {
        &self.tables[k]
    }

    fn q_moduli(&self, level: usize) -> &[Modulus] {
        &self.moduli[..=level]
    }

    fn special_range(&self) -> std::ops::Range<usize> {
        self.params.levels + 1..self.moduli.len()
    }

    fn check_level(&self, level: usize) -> Result<(), CkksError> {
        if level > self.params.levels {
            return Err(CkksError::LevelMismatch(level, self.params.levels));
        }
        Ok(())
    }

    /// NTTs every limb; limb `i` must use the modulus with global index `idx[i]`.
    fn forward_limbs(&self, p: &mut RnsPolynomial, idx: impl Iterator<Item = usize>) {
        for (limb, k) in p.limbs.iter_mut().zip(idx) {
            self.tables[k].to_evaluation(limb).expect("matching tables");
        }
    }

    fn inverse_limbs(&self, p: &mut RnsPolynomial, idx: impl Iterator<Item = usize>) {
        for (limb, k) in p.limbs.iter_mut().zip(idx) {
            self.tables[k].to_coefficient(limb).expect("matching tables");
        }
    }

    /// Limb-wise forward NTT over `q_0..q_l`.
    pub fn to_evaluation(&self, p: &mut RnsPolynomial) {
        self.forward_limbs(p, 0..);
    }

    /// Limb-wise inverse NTT over `q_0..q_l`.
    pub fn to_coefficient(&self, p: &mut RnsPolynomial) {
        self.inverse_limbs(p, 0..);
    }

    // ---- encoding -------------------------------------------------------

    /// Canonical-embedding encoding of up to `N/2` complex slots.
    pub fn encode(&self, values: &[Complex64], level: usize, scale: f64) -> Result<Plaintext, CkksError> {
        let n = self.params.n();
        if values.len() > n / 2 {
            return Err(CkksError::SlotOverflow {
                got: values.len(),
                max: n / 2,
            });
        }
        self.check_level(level)?;
        let two_n = 2 * n;
        let mut buf = vec![Complex64::new(0.0, 0.0); two_n];
        for (j, &z) in values.iter().enumerate() {
            let t = self.rot_group[j];
            buf[t] = z;
            buf[two_n - t] = z.conj();
        }
        self.fft_fwd.process(&mut buf);
        let coeffs: Vec<f64> = buf[..n].iter().map(|c| c.re / n as f64).collect();
        self.encode_coeffs(&coeffs, level, scale)
    }

    pub fn encode_real(&self, values: &[f64], level: usize, scale: f64) -> Result<Plaintext, CkksError> {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.encode(&v, level, scale)
    }

    /// Places `round(scale·c_k)` directly in coefficient `k` (coefficient encoding).
    pub fn encode_coeffs(&self, coeffs: &[f64], level: usize, scale: f64) -> Result<Plaintext, CkksError> {
        let n = self.params.n();
        if coeffs.len() > n {
            return Err(CkksError::SlotOverflow {
                got: coeffs.len(),
                max: n,
            });
        }
        self.check_level(level)?;
        let ints: Vec<i128> = coeffs.iter().map(|&c| (c * scale).round() as i128).collect();
        let limbs = self
            .q_moduli(level)
            .iter()
            .map(|&m| {
                let mut v = vec![0; n];
                for (o, &x) in v.iter_mut().zip(&ints) {
                    *o = m.reduce_i128(x);
                }
                RingPolynomial::from_coeffs(v, m).expect("reduced")
            })
            .collect();
        let mut poly = RnsPolynomial { limbs };
        self.to_evaluation(&mut poly);
        Ok(Plaintext { poly, level, scale })
    }

    /// Centered coefficients of a plaintext divided by its scale.
    pub fn decode_coeffs(&self, pt: &Plaintext) -> Vec<f64> {
        let mut poly = pt.poly.clone();
        if poly.rep() == Representation::Evaluation {
            self.to_coefficient(&mut poly);
        }
        let n = poly.n();
        if poly.len() == 1 {
            let m = *poly.limbs[0].modulus();
            return poly.limbs[0]
                .coeffs()
                .iter()
                .map(|&c| m.center(c) as f64 / pt.scale)
                .collect();
        }
        let basis = RnsBasis::new(poly.moduli(), ModulusRole::Ciphertext).expect("distinct moduli");
        let mut residues = vec![0; poly.len()];
        (0..n)
            .map(|i| {
                for (r, limb) in residues.iter_mut().zip(&poly.limbs) {
                    *r = limb.coeffs()[i];
                }
                let x = basis.crt_reconstruct_centered(&residues).expect("basis length");
                x.to_f64().unwrap_or(f64::NAN) / pt.scale
            })
            .collect()
    }

    /// Inverse of [`Self::encode`]; returns all `N/2` slots.
    pub fn decode(&self, pt: &Plaintext) -> Vec<Complex64> {
        let n = self.params.n();
        let coeffs = self.decode_coeffs(pt);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (b, &c) in buf.iter_mut().zip(&coeffs) {
            b.re = c;
        }
        self.fft_inv.process(&mut buf);
        self.rot_group.iter().map(|&t| buf[t]).collect()
    }

    pub fn decode_real(&self, pt: &Plaintext) -> Vec<f64> {
        self.decode(pt).into_iter().map(|z| z.re).collect()
    }

    // ---- keys -----------------------------------------------------------

    fn uniform_poly<R: Rng + ?Sized>(&self, idx: &[usize], rng: &mut R) -> RnsPolynomial {
        let n = self.params.n();
        RnsPolynomial {
            limbs: idx
                .iter()
                .map(|&k| {
                    let m = self.moduli[k];
                    RingPolynomial::new(sampling::uniform(n, &m, rng), m, Representation::Evaluation).expect("reduced")
                })
                .collect(),
        }
    }

    fn signed_eval(&self, coeffs: &[i64], idx: &[usize]) -> RnsPolynomial {
        let moduli: Vec<Modulus> = idx.iter().map(|&k| self.moduli[k]).collect();
        let mut p = RnsPolynomial::from_signed(coeffs, &moduli);
        self.forward_limbs(&mut p, idx.iter().copied());
        p
    }

    pub fn gen_secret<R: Rng + ?Sized>(&self, rng: &mut R) -> SecretKey {
        SecretKey {
            coeffs: sampling::ternary(self.params.n(), rng),
        }
    }

    pub fn gen_public<R: Rng + ?Sized>(&self, sk: &SecretKey, rng: &mut R) -> PublicKey {
        let idx: Vec<usize> = (0..=self.params.levels).collect();
        let s = self.signed_eval(&sk.coeffs, &idx);
        let a = self.uniform_poly(&idx, rng);
        let e = self.signed_eval(&sampling::gaussian(self.params.n(), self.params.sigma, rng), &idx);
        PublicKey {
            b: e.sub(&a.pointwise_mul(&s)),
            a,
        }
    }

    /// Key that switches a ciphertext component multiplying `s_src` to one under `sk`.
    pub fn gen_switching_key<R: Rng + ?Sized>(&self, s_src: &[i64], sk: &SecretKey, rng: &mut R) -> EvaluationKey {
        let idx: Vec<usize> = (0..self.moduli.len()).collect();
        let s = self.signed_eval(&sk.coeffs, &idx);
        let src = self.signed_eval(s_src, &idx);
        let alpha = self.params.alpha;
        let rows = (0..self.params.dnum)
            .map(|i| {
                let a = self.uniform_poly(&idx, rng);
                let e = self.signed_eval(&sampling::gaussian(self.params.n(), self.params.sigma, rng), &idx);
                let mut b = e.sub(&a.pointwise_mul(&s));
                let digit = i * alpha..((i + 1) * alpha).min(self.params.levels + 1);
                for k in digit {
                    let m = self.moduli[k];
                    let p = self.p_mod[k];
                    let ps = m.shoup(p);
                    let limb = b.limbs[k].coeffs_mut();
                    for (x, &v) in limb.iter_mut().zip(src.limbs[k].coeffs()) {
                        *x = m.add(*x, m.mul_shoup(v, p, ps));
                    }
                }
                (b, a)
            })
            .collect();
        EvaluationKey { rows }
    }

    /// Secret, public key, relinearization key, and one rotation key per step.
    pub fn keygen<R: Rng + ?Sized>(&self, rng: &mut R, rotations: &[i64]) -> KeyMaterial {
        let secret = self.gen_secret(rng);
        let public = self.gen_public(&secret, rng);
        let n = self.params.n();
        let s2 = negacyclic_square_small(&secret.coeffs);
        let relin = self.gen_switching_key(&s2, &secret, rng);
        let mut keys = KeyMaterial {
            secret,
            public,
            relin,
            rotations: BTreeMap::new(),
        };
        for &r in rotations {
            let g = rotation_galois_element(r, n);
            if g != 1 && !keys.rotations.contains_key(&g) {
                let k = self.gen_galois_key(g, &keys.secret, rng);
                keys.rotations.insert(g, k);
            }
        }
        keys
    }

    /// Key for `X → X^g`, switching from `σ_g(s)` back to `s`.
    pub fn gen_galois_key<R: Rng + ?Sized>(&self, g: u64, sk: &SecretKey, rng: &mut R) -> EvaluationKey {
        let src = galois_signed(&sk.coeffs, g);
        self.gen_switching_key(&src, sk, rng)
    }

    // ---- encryption -----------------------------------------------------

    pub fn encrypt_sk<R: Rng + ?Sized>(
        &self,
        pt: &Plaintext,
        sk: &SecretKey,
        rng: &mut R,
    ) -> Result<RlweCiphertext, CkksError> {
        self.check_level(pt.level)?;
        let idx: Vec<usize> = (0..=pt.level).collect();
        let s = self.signed_eval(&sk.coeffs, &idx);
        let a = self.uniform_poly(&idx, rng);
        let e = self.signed_eval(&sampling::gaussian(self.params.n(), self.params.sigma, rng), &idx);
        let b = e.sub(&a.pointwise_mul(&s)).add(&pt.poly);
        Ok(RlweCiphertext {
            b,
            a,
            level: pt.level,
            scale: pt.scale,
        })
    }

    pub fn encrypt_pk<R: Rng + ?Sized>(
        &self,
        pt: &Plaintext,
        pk: &PublicKey,
        rng: &mut R,
    ) -> Result<RlweCiphertext, CkksError> {
        self.check_level(pt.level)?;
        let idx: Vec<usize> = (0..=pt.level).collect();
        let n = self.params.n();
        let u = self.signed_eval(&sampling::ternary(n, rng), &idx);
        let e0 = self.signed_eval(&sampling::gaussian(n, self.params.sigma, rng), &idx);
        let e1 = self.signed_eval(&sampling::gaussian(n, self.params.sigma, rng), &idx);
        let cnt = pt.level + 1;
        Ok(RlweCiphertext {
            b: pk.b.prefix(cnt).pointwise_mul(&u).add(&e0).add(&pt.poly),
            a: pk.a.prefix(cnt).pointwise_mul(&u).add(&e1),
            level: pt.level,
            scale: pt.scale,
        })
    }

    /// Noiseless, maskless encryption `(b, a) = (m, 0)`.
    pub fn trivial_encrypt(&self, pt: &Plaintext) -> RlweCiphertext {
        RlweCiphertext {
            b: pt.poly.clone(),
            a: RnsPolynomial::zero(self.params.n(), self.q_moduli(pt.level), Representation::Evaluation),
            level: pt.level,
            scale: pt.scale,
        }
    }

    /// `b + a·s` at the ciphertext's level.
    pub fn decrypt(&self, ct: &RlweCiphertext, sk: &SecretKey) -> Result<Plaintext, CkksError> {
        if ct.b.len() != ct.level + 1 || ct.a.len() != ct.level + 1 {
            return Err(CkksError::LevelMismatch(ct.b.len(), ct.level + 1));
        }
        let idx: Vec<usize> = (0..=ct.level).collect();
        let s = self.signed_eval(&sk.coeffs, &idx);
        Ok(Plaintext {
            poly: ct.b.add(&ct.a.pointwise_mul(&s)),
            level: ct.level,
            scale: ct.scale,
        })
    }

    // ---- key switching --------------------------------------------------

    /// Hybrid key switching of a coefficient-representation polynomial `d`
    /// over `q_0..q_l`. Returns `(c0, c1)` in evaluation representation with
    /// `c0 + c1·s ≈ d·s_src`.
    pub fn hybrid_keyswitch(
        &self,
        d: &RnsPolynomial,
        evk: &EvaluationKey,
    ) -> Result<(RnsPolynomial, RnsPolynomial), CkksError> {
        if d.rep() != Representation::Coefficient {
            return Err(RingError::RepError {
                expected: Representation::Coefficient,
            }
            .into());
        }
        let l = d.len() - 1;
        self.check_level(l)?;
        let total = self.moduli.len();
        if evk.rows.len() != self.params.dnum || evk.rows.iter().any(|(b, a)| b.len() != total || a.len() != total) {
            return Err(CkksError::BasisMismatch(format!(
                "evaluation key needs {} rows over {total} moduli",
                self.params.dnum
            )));
        }
        let alpha = self.params.alpha;
        let beta = self.params.beta(l);
        let ext: Vec<usize> = (0..=l).chain(self.special_range()).collect();
        let n = self.params.n();
        let zero = || RnsPolynomial {
            limbs: ext
                .iter()
                .map(|&k| RingPolynomial::zero(n, self.moduli[k], Representation::Evaluation))
                .collect(),
        };
        let mut acc0 = zero();
        let mut acc1 = zero();
        for i in 0..beta {
            let digit = i * alpha..((i + 1) * alpha).min(l + 1);
            let others: Vec<usize> = ext.iter().copied().filter(|k| !digit.contains(k)).collect();
            let target: Vec<Modulus> = others.iter().map(|&k| self.moduli[k]).collect();
            let mut conv = bconv(&d.limbs[digit.clone()], &target)?.into_iter();
            let mut limbs = Vec::with_capacity(ext.len());
            for &k in &ext {
                let mut limb = if digit.contains(&k) {
                    d.limbs[k].clone()
                } else {
                    conv.next().expect("one converted limb per target")
                };
                self.tables[k].to_evaluation(&mut limb)?;
                limbs.push(limb);
            }
            kernels::record(Kernel::InnerProduct, 1);
            let (kb, ka) = &evk.rows[i];
            for (pos, &k) in ext.iter().enumerate() {
                acc0.limbs[pos].mul_acc(&limbs[pos], &kb.limbs[k]);
                acc1.limbs[pos].mul_acc(&limbs[pos], &ka.limbs[k]);
            }
        }
        Ok((self.mod_down(acc0, l)?, self.mod_down(acc1, l)?))
    }

    /// `(x − BConv_{P→Q}([x]_P)) · P^-1` over `q_0..q_l`.
    fn mod_down(&self, mut x: RnsPolynomial, l: usize) -> Result<RnsPolynomial, CkksError> {
        let mut p_part = RnsPolynomial {
            limbs: x.limbs.split_off(l + 1),
        };
        self.inverse_limbs(&mut p_part, self.special_range());
        let mut conv = RnsPolynomial {
            limbs: bconv_centered(&p_part.limbs, self.q_moduli(l))?,
        };
        self.forward_limbs(&mut conv, 0..);
        let mut out = x.sub(&conv);
        kernels::record(Kernel::ModMul, 1);
        for (k, limb) in out.limbs.iter_mut().enumerate() {
            let m = self.moduli[k];
            let w = self.p_inv[k];
            let ws = m.shoup(w);
            for c in limb.coeffs_mut() {
                *c = m.mul_shoup(*c, w, ws);
            }
        }
        Ok(out)
    }

    // ---- homomorphic operations -----------------------------------------

    fn check_pair(&self, x: &RlweCiphertext, y: &RlweCiphertext) -> Result<(), CkksError> {
        if x.level != y.level {
            return Err(CkksError::LevelMismatch(x.level, y.level));
        }
        if !scales_match(x.scale, y.scale) {
            return Err(CkksError::ScaleMismatch(x.scale, y.scale));
        }
        Ok(())
    }

    pub fn hadd(&self, x: &RlweCiphertext, y: &RlweCiphertext) -> Result<RlweCiphertext, CkksError> {
        self.check_pair(x, y)?;
        Ok(RlweCiphertext {
            b: x.b.add(&y.b),
            a: x.a.add(&y.a),
            level: x.level,
            scale: x.scale,
        })
    }

    pub fn hsub(&self, x: &RlweCiphertext, y: &RlweCiphertext) -> Result<RlweCiphertext, CkksError> {
        self.check_pair(x, y)?;
        Ok(RlweCiphertext {
            b: x.b.sub(&y.b),
            a: x.a.sub(&y.a),
            level: x.level,
            scale: x.scale,
        })
    }

    pub fn padd(&self, x: &RlweCiphertext, pt: &Plaintext) -> Result<RlweCiphertext, CkksError> {
        if x.level != pt.level {
            return Err(CkksError::LevelMismatch(x.level, pt.level));
        }
        if !scales_match(x.scale, pt.scale) {
            return Err(CkksError::ScaleMismatch(x.scale, pt.scale));
        }
        Ok(RlweCiphertext {
            b: x.b.add(&pt.poly),
            a: x.a.clone(),
            level: x.level,
            scale: x.scale,
        })
    }

    /// Plaintext product; the result's scale is the product of both scales.
    pub fn pmult(&self, x: &RlweCiphertext, pt: &Plaintext) -> Result<RlweCiphertext, CkksError> {
        if x.level != pt.level {
            return Err(CkksError::LevelMismatch(x.level, pt.level));
        }
        Ok(RlweCiphertext {
            b: x.b.pointwise_mul(&pt.poly),
            a: x.a.pointwise_mul(&pt.poly),
            level: x.level,
            scale: x.scale * pt.scale,
        })
    }

    /// Tensor product followed by relinearization; not rescaled.
    pub fn hmult(
        &self,
        x: &RlweCiphertext,
        y: &RlweCiphertext,
        relin: &EvaluationKey,
    ) -> Result<RlweCiphertext, CkksError> {
        self.check_pair(x, y)?;
        let d0 = x.b.pointwise_mul(&y.b);
        let d1 = x.a.pointwise_mul(&y.b).add(&y.a.pointwise_mul(&x.b));
        let mut d2 = x.a.pointwise_mul(&y.a);
        self.to_coefficient(&mut d2);
        let (k0, k1) = self.hybrid_keyswitch(&d2, relin)?;
        Ok(RlweCiphertext {
            b: d0.add(&k0),
            a: d1.add(&k1),
            level: x.level,
            scale: x.scale * y.scale,
        })
    }

    /// Slot `j` of the result holds slot `j + r` of the input.
    pub fn hrotate(
        &self,
        x: &RlweCiphertext,
        r: i64,
        keys: &BTreeMap<u64, EvaluationKey>,
    ) -> Result<RlweCiphertext, CkksError> {
        let g = rotation_galois_element(r, self.params.n());
        if g == 1 {
            return Ok(x.clone());
        }
        let key = keys.get(&g).ok_or(CkksError::KeyNotFound(g))?;
        self.apply_galois(x, g, key)
    }

    /// `X → X^g` on both components, then key switching of the `a` part.
    pub fn apply_galois(&self, x: &RlweCiphertext, g: u64, key: &EvaluationKey) -> Result<RlweCiphertext, CkksError> {
        let auto = |p: &RnsPolynomial| RnsPolynomial {
            limbs: p.limbs.iter().map(|l| apply_galois(l, g)).collect(),
        };
        let b = auto(&x.b);
        let mut a = auto(&x.a);
        if a.rep() == Representation::Evaluation {
            self.to_coefficient(&mut a);
        }
        let (k0, k1) = self.hybrid_keyswitch(&a, key)?;
        Ok(RlweCiphertext {
            b: b.add(&k0),
            a: k1,
            level: x.level,
            scale: x.scale,
        })
    }

    /// Exact RNS rescale by the top modulus `q_l`, rounding to nearest.
    pub fn rescale(&self, x: &RlweCiphertext) -> Result<RlweCiphertext, CkksError> {
        if x.level == 0 {
            return Err(CkksError::NoLevelsLeft);
        }
        let l = x.level;
        let ql = self.moduli[l];
        let b = self.rescale_poly(&x.b)?;
        let a = self.rescale_poly(&x.a)?;
        Ok(RlweCiphertext {
            b,
            a,
            level: l - 1,
            scale: x.scale / ql.value() as f64,
        })
    }

    /// `(x − [x]_{q_l}) · q_l^-1` limb-wise, for an evaluation-representation polynomial.
    pub fn rescale_poly(&self, x: &RnsPolynomial) -> Result<RnsPolynomial, CkksError> {
        let l = x.len() - 1;
        if l == 0 {
            return Err(CkksError::NoLevelsLeft);
        }
        let ql = self.moduli[l];
        let mut top = x.limbs[l].clone();
        let was_eval = top.rep() == Representation::Evaluation;
        if was_eval {
            self.tables[l].to_coefficient(&mut top)?;
        }
        let centered = top.centered();
        kernels::record(Kernel::ModAdd, 1);
        kernels::record(Kernel::ModMul, 1);
        let limbs = (0..l)
            .map(|k| {
                let m = self.moduli[k];
                let mut r = RingPolynomial::from_signed(&centered, m)?;
                if was_eval {
                    self.tables[k].to_evaluation(&mut r)?;
                }
                let w = m.inv(m.reduce(ql.value()))?;
                let ws = m.shoup(w);
                let mut out = x.limbs[k].clone();
                for (o, &t) in out.coeffs_mut().iter_mut().zip(r.coeffs()) {
                    *o = m.mul_shoup(m.sub(*o, t), w, ws);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, CkksError>>()?;
        Ok(RnsPolynomial { limbs })
    }

    /// Drops limbs down to `level` without changing the scale.
    pub fn mod_drop(&self, x: &RlweCiphertext, level: usize) -> Result<RlweCiphertext, CkksError> {
        if level > x.level {
            return Err(CkksError::LevelMismatch(level, x.level));
        }
        let mut y = x.clone();
        y.b.truncate(level + 1);
        y.a.truncate(level + 1);
        y.level = level;
        Ok(y)
    }
}

/// `s²` in `Z[X]/(X^N+1)` for a small signed polynomial (exact integer arithmetic).
fn negacyclic_square_small(s: &[i64]) -> Vec<i64> {
    let n = s.len();
    let nz: Vec<(usize, i64)> = s.iter().copied().enumerate().filter(|&(_, v)| v != 0).collect();
    let mut out = vec![0i64; n];
    for &(i, a) in &nz {
        for &(j, b) in &nz {
            let k = i + j;
            if k < n {
                out[k] += a * b;
            } else {
                out[k - n] -= a * b;
            }
        }
    }
    out
}

/// Signed substitution `X → X^g` on an integer polynomial.
pub fn galois_signed(s: &[i64], g: u64) -> Vec<i64> {
    let n = s.len() as u64;
    let mut out = vec![0i64; s.len()];
    for (i, &c) in s.iter().enumerate() {
        let e = (i as u64 * g) % (2 * n);
        if e < n {
            out[e as usize] += c;
        } else {
            out[(e - n) as usize] -= c;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small_ctx() -> CkksContext {
        CkksContext::new(CkksParams::new(1 << 10, 3, 2, 30).unwrap()).unwrap()
    }

    #[test]
    fn params_shape() {
        let p = CkksParams::desk();
        assert_eq!(p.alpha(), 3);
        assert_eq!(p.special_basis().len(), 3);
        assert_eq!(p.ciphertext_basis().len(), 6);
        let all = p.all_moduli();
        for (i, a) in all.iter().enumerate() {
            assert_eq!(a.value() % (2 << 13), 1);
            for b in &all[i + 1..] {
                assert_ne!(a.value(), b.value());
            }
        }
        assert_eq!(p.beta(5), 2);
        assert_eq!(p.beta(2), 1);
    }

    #[test]
    fn encode_round_trip() {
        let ctx = small_ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let v: Vec<Complex64> = (0..512)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let pt = ctx.encode(&v, 3, ctx.params().scale()).unwrap();
        let back = ctx.decode(&pt);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).norm() < 2f64.powi(-20));
        }
        assert!(matches!(
            ctx.encode(&vec![Complex64::new(0.0, 0.0); 513], 0, 1.0),
            Err(CkksError::SlotOverflow { .. })
        ));
    }

    #[test]
    fn centered_bconv_is_exact_for_signed_values() {
        let ctx = small_ctx();
        let q = ctx.params().ciphertext_basis().moduli()[..2].to_vec();
        let d = ctx.params().special_basis().moduli().to_vec();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let half = q[0].value() as i128 * q[1].value() as i128 / 2 - 1;
        let xs: Vec<i128> = (0..1024).map(|_| rng.random_range(-half..half)).collect();
        let src: Vec<RingPolynomial> = q
            .iter()
            .map(|&m| RingPolynomial::from_coeffs(xs.iter().map(|&x| m.reduce_i128(x)).collect(), m).unwrap())
            .collect();
        let out = bconv_centered(&src, &d).unwrap();
        for (limb, m) in out.iter().zip(&d) {
            for (&got, &x) in limb.coeffs().iter().zip(&xs) {
                assert_eq!(got, m.reduce_i128(x));
            }
        }
    }

    #[test]
    fn bconv_matches_crt_for_small_values() {
        let ctx = small_ctx();
        let q = ctx.params().ciphertext_basis().moduli()[..2].to_vec();
        let d = ctx.params().special_basis().moduli().to_vec();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let big_c = q[0].value() as i128 * q[1].value() as i128;
        let c = big_c / 4;
        let xs: Vec<i128> = (0..1024).map(|_| rng.random_range(0..c)).collect();
        let src: Vec<RingPolynomial> = q
            .iter()
            .map(|&m| RingPolynomial::from_coeffs(xs.iter().map(|&x| m.reduce_i128(x)).collect(), m).unwrap())
            .collect();
        let out = bconv(&src, &d).unwrap();
        for (limb, m) in out.iter().zip(&d) {
            for (&got, &x) in limb.coeffs().iter().zip(&xs) {
                let exact = m.reduce_i128(x);
                // overshoot is u·C for some u in [0, α)
                let cm = m.reduce_i128(big_c);
                let ok = (0..2).any(|u| m.add(exact, m.mul(u, cm)) == got);
                assert!(ok);
            }
        }
    }

    #[test]
    fn keyswitch_of_zero_is_zero() {
        let ctx = small_ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let keys = ctx.keygen(&mut rng, &[]);
        let d = RnsPolynomial::zero(1024, ctx.q_moduli(3), Representation::Coefficient);
        let (c0, c1) = ctx.hybrid_keyswitch(&d, &keys.relin).unwrap();
        assert!(c0.is_zero() && c1.is_zero());
    }

    #[test]
    fn rescale_bookkeeping() {
        let ctx = small_ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let keys = ctx.keygen(&mut rng, &[]);
        let d = ctx.params().scale();
        let pt = ctx.encode_real(&[0.5], 3, d * d).unwrap();
        let ct = ctx.encrypt_sk(&pt, &keys.secret, &mut rng).unwrap();
        let r = ctx.rescale(&ct).unwrap();
        assert_eq!(r.level, 2);
        assert_eq!(
            r.scale,
            d * d / ctx.params().ciphertext_basis().moduli()[3].value() as f64
        );
        let r2 = ctx.rescale(&r).unwrap();
        assert_eq!(r2.level, 1);
        let r0 = ctx.rescale(&ctx.rescale(&r2).unwrap());
        assert!(matches!(r0, Err(CkksError::NoLevelsLeft)));
    }

    #[test]
    fn trivial_encryption_is_exact() {
        let ctx = small_ctx();
        let pt = ctx.encode_real(&[0.25, -1.0], 2, ctx.params().scale()).unwrap();
        let ct = ctx.trivial_encrypt(&pt);
        assert_eq!(ct.b, pt.poly);
        let sk = SecretKey::from_coeffs(vec![1; 1024]);
        assert_eq!(ctx.decrypt(&ct, &sk).unwrap().poly, pt.poly);
    }
}
