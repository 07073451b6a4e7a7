//! TFHE over an NTT-friendly prime close to `2^32`.
//!
//! Phases follow `b − ⟨a, s⟩` for LWE and `B − Σ A_i·S_i` for GLWE. Two
//! plaintext encodings are provided:
//!
//! * padded: `m ∈ Z_{2^p}` maps to `m·Δ` with `Δ = q / 2^(p+1)`, leaving one
//!   padding bit so any lookup table can be bootstrapped;
//! * boolean: bit `b` maps to `±q/8`, the gate-bootstrapping convention, where
//!   tables must be negacyclic (`f(0) = ¬f(1)`).
//!
//! Blind rotation starts from `tv·X^(−b̃)` and multiplies by `X^(ã_i)` for each
//! set key bit, so the final accumulator is `tv·X^(−φ̃)` with `φ̃ = b̃ − Σ ã_i s_i`.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::TfheError;
use crate::kernels::{self, Kernel};
use crate::modmath::{find_ntt_prime, Modulus, Residue};
use crate::polyring::{decompose_with, rotate_into, Gadget, NttTables, Representation, RingPolynomial};
use crate::sampling;

#[derive(Clone, Debug, PartialEq)]
pub struct TfheParams {
    pub name: String,
    pub n_poly: usize,
    pub n_lwe: usize,
    pub glwe_dim: usize,
    pub modulus: Modulus,
    pub l_b: usize,
    pub log_base_b: u32,
    pub l_k: usize,
    pub log_base_k: u32,
    pub plaintext_bits: u32,
    /// Absolute standard deviation of LWE (and key-switching key) noise.
    pub sigma_lwe: f64,
    /// Absolute standard deviation of GLWE (and bootstrapping key) noise.
    pub sigma_glwe: f64,
}

/// Bits of the nominal ciphertext modulus `q = 2^32`.
pub const NOMINAL_Q_BITS: u32 = 32;

impl TfheParams {
    /// Parameters with the default decomposition bases: `log_base_b =
    /// ⌊log2 q / (l_b + 1)⌋` and a 4-level, 4-bit key-switching gadget.
    pub fn new(name: &str, n_poly: usize, n_lwe: usize, glwe_dim: usize, l_b: usize) -> Result<Self, TfheError> {
        if !n_poly.is_power_of_two() || !(16..=1 << 17).contains(&n_poly) {
            return Err(TfheError::InvalidParams(format!("N = {n_poly}")));
        }
        if n_lwe == 0 || glwe_dim == 0 || l_b == 0 {
            return Err(TfheError::InvalidParams("n_lwe, k and l_b must be positive".into()));
        }
        let modulus = find_ntt_prime(NOMINAL_Q_BITS, 2 * n_poly as u64)?;
        let q = modulus.value() as f64;
        Ok(Self {
            name: name.to_string(),
            n_poly,
            n_lwe,
            glwe_dim,
            modulus,
            l_b,
            log_base_b: NOMINAL_Q_BITS / (l_b as u32 + 1),
            l_k: 4,
            log_base_k: 4,
            plaintext_bits: 1,
            sigma_lwe: q * 2f64.powi(-17),
            sigma_glwe: q * 2f64.powi(-26),
        })
    }

    /// Set-I: `N = 1024, n_lwe = 500, k = 1, l_b = 2`.
    pub fn set_i() -> Self {
        Self::new("Set-I", 1024, 500, 1, 2).expect("Set-I")
    }

    /// Set-II: `N = 1024, n_lwe = 630, k = 1, l_b = 3`.
    pub fn set_ii() -> Self {
        Self::new("Set-II", 1024, 630, 1, 3).expect("Set-II")
    }

    /// Set-III: `N = 2048, n_lwe = 592, k = 1, l_b = 3`.
    pub fn set_iii() -> Self {
        Self::new("Set-III", 2048, 592, 1, 3).expect("Set-III")
    }

    /// Toy parameters for exhaustive checks: `N = 64, n_lwe = 4, k = 1`.
    pub fn toy() -> Self {
        Self::new("toy", 64, 4, 1, 2).expect("toy")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "seti" | "set1" | "i" | "1" => Some(Self::set_i()),
            "setii" | "set2" | "ii" | "2" => Some(Self::set_ii()),
            "setiii" | "set3" | "iii" | "3" => Some(Self::set_iii()),
            "toy" => Some(Self::toy()),
            _ => None,
        }
    }

    pub fn with_noise(mut self, sigma_lwe: f64, sigma_glwe: f64) -> Self {
        self.sigma_lwe = sigma_lwe;
        self.sigma_glwe = sigma_glwe;
        self
    }

    pub fn with_plaintext_bits(mut self, bits: u32) -> Self {
        self.plaintext_bits = bits;
        self
    }

    pub fn with_keyswitch_gadget(mut self, l_k: usize, log_base_k: u32) -> Self {
        self.l_k = l_k;
        self.log_base_k = log_base_k;
        self
    }

    pub fn q(&self) -> u64 {
        self.modulus.value()
    }

    /// Extracted LWE dimension `kN`.
    pub fn big_n(&self) -> usize {
        self.glwe_dim * self.n_poly
    }

    /// Padded encoding step `q / 2^(p+1)` (real-valued).
    pub fn delta(&self) -> f64 {
        self.q() as f64 / 2f64.powi(self.plaintext_bits as i32 + 1)
    }

    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"tfhe");
        for v in [
            self.n_poly as u64,
            self.n_lwe as u64,
            self.glwe_dim as u64,
            self.modulus.value(),
            self.l_b as u64,
            self.log_base_b as u64,
            self.l_k as u64,
            self.log_base_k as u64,
            self.plaintext_bits as u64,
        ] {
            h.update(v.to_le_bytes());
        }
        h.update(self.sigma_lwe.to_le_bytes());
        h.update(self.sigma_glwe.to_le_bytes());
        h.finalize().into()
    }
}

/// Binary LWE secret.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LweSecretKey {
    pub bits: Vec<i64>,
}

/// Binary GLWE secret, `k` polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlweSecretKey {
    pub polys: Vec<Vec<i64>>,
}

impl GlweSecretKey {
    /// The `kN`-dimensional LWE key that decrypts sample-extracted ciphertexts.
    pub fn extracted(&self) -> LweSecretKey {
        LweSecretKey {
            bits: self.polys.concat(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LweCiphertext {
    pub a: Vec<Residue>,
    pub b: Residue,
    pub modulus: Modulus,
}

impl LweCiphertext {
    pub fn zero(n: usize, modulus: Modulus) -> Self {
        Self {
            a: vec![0; n],
            b: 0,
            modulus,
        }
    }

    /// Noiseless ciphertext with zero mask and body `b`.
    pub fn trivial(n: usize, b: Residue, modulus: Modulus) -> Self {
        Self {
            a: vec![0; n],
            b: modulus.reduce(b),
            modulus,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn add(&self, o: &Self) -> Self {
        let m = self.modulus;
        Self {
            a: self.a.iter().zip(&o.a).map(|(&x, &y)| m.add(x, y)).collect(),
            b: m.add(self.b, o.b),
            modulus: m,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let m = self.modulus;
        Self {
            a: self.a.iter().zip(&o.a).map(|(&x, &y)| m.sub(x, y)).collect(),
            b: m.sub(self.b, o.b),
            modulus: m,
        }
    }

    pub fn neg(&self) -> Self {
        let m = self.modulus;
        Self {
            a: self.a.iter().map(|&x| m.neg(x)).collect(),
            b: m.neg(self.b),
            modulus: m,
        }
    }

    pub fn scalar_mul(&self, c: i64) -> Self {
        let m = self.modulus;
        let c = m.reduce_i64(c);
        Self {
            a: self.a.iter().map(|&x| m.mul(x, c)).collect(),
            b: m.mul(self.b, c),
            modulus: m,
        }
    }

    /// `b − ⟨a, s⟩`.
    pub fn phase(&self, key: &LweSecretKey) -> Residue {
        let m = self.modulus;
        let dot = self
            .a
            .iter()
            .zip(&key.bits)
            .fold(0, |acc, (&a, &s)| m.add(acc, m.mul(a, m.reduce_i64(s))));
        m.sub(self.b, dot)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlweCiphertext {
    pub masks: Vec<RingPolynomial>,
    pub body: RingPolynomial,
}

impl GlweCiphertext {
    pub fn zero(n: usize, k: usize, modulus: Modulus, rep: Representation) -> Self {
        Self {
            masks: vec![RingPolynomial::zero(n, modulus, rep); k],
            body: RingPolynomial::zero(n, modulus, rep),
        }
    }

    /// Noiseless, maskless encryption of `msg`.
    pub fn trivial(msg: RingPolynomial, k: usize) -> Self {
        Self {
            masks: vec![RingPolynomial::zero(msg.n(), *msg.modulus(), msg.rep()); k],
            body: msg,
        }
    }

    pub fn rep(&self) -> Representation {
        self.body.rep()
    }

    /// Masks followed by the body.
    pub fn components(&self) -> impl Iterator<Item = &RingPolynomial> {
        self.masks.iter().chain(std::iter::once(&self.body))
    }

    fn components_mut(&mut self) -> impl Iterator<Item = &mut RingPolynomial> {
        self.masks.iter_mut().chain(std::iter::once(&mut self.body))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            masks: self.masks.iter().zip(&o.masks).map(|(a, b)| a.add(b)).collect(),
            body: self.body.add(&o.body),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            masks: self.masks.iter().zip(&o.masks).map(|(a, b)| a.sub(b)).collect(),
            body: self.body.sub(&o.body),
        }
    }
}

/// `(k+1)·l_b` GLWE rows in evaluation representation, ordered component-major
/// and digit-minor: row `c·l_b + j` carries `μ·w_j` on component `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GgswCiphertext {
    pub rows: Vec<GlweCiphertext>,
}

#[derive(Clone, Debug)]
pub struct BootstrapKeys {
    pub bsk: Vec<GgswCiphertext>,
    /// `kN × l_k` LWE ciphertexts under the base key.
    pub ksk: Vec<Vec<LweCiphertext>>,
}

#[derive(Clone, Debug)]
pub struct TfheKeys {
    pub lwe: LweSecretKey,
    pub glwe: GlweSecretKey,
    pub eval: BootstrapKeys,
}

/// Lookup table for [`TfheContext::build_test_vector`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lut {
    /// Values for every message of the padded space `Z_{2^p}`.
    Padded(Vec<u64>),
    /// Outputs for input bits 0 and 1; must satisfy `f(0) ≠ f(1)`.
    Boolean([bool; 2]),
    /// Values over the full space `Z_{2^(p+1)}`; must be negacyclic.
    FullTorus(Vec<u64>),
}

impl Lut {
    pub fn identity(plaintext_bits: u32) -> Self {
        Lut::Padded((0..1u64 << plaintext_bits).collect())
    }
}

/// Rounds `x·2N/q` half away from zero into `[0, 2N)`.
pub fn mod_switch_value(x: Residue, q: u64, two_n: u64) -> u64 {
    let num = 2 * x as u128 * two_n as u128 + q as u128;
    ((num / (2 * q as u128)) % two_n as u128) as u64
}

/// A mod-switched LWE ciphertext with components in `[0, 2N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchedLwe {
    pub a: Vec<u64>,
    pub b: u64,
    pub two_n: u64,
}

impl SwitchedLwe {
    /// `b̃ − Σ ã_i s_i mod 2N`.
    pub fn phase(&self, key: &LweSecretKey) -> u64 {
        let t = self.two_n as i128;
        let dot: i128 = self.a.iter().zip(&key.bits).map(|(&a, &s)| a as i128 * s as i128).sum();
        (self.b as i128 - dot).rem_euclid(t) as u64
    }
}

pub struct TfheContext {
    params: TfheParams,
    tables: NttTables,
    gadget_b: Gadget,
    gadget_k: Gadget,
}

impl std::fmt::Debug for TfheContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TfheContext").field("params", &self.params).finish()
    }
}

impl TfheContext {
    pub fn new(params: TfheParams) -> Result<Self, TfheError> {
        let m = params.modulus;
        if !params.modulus.two_n().is_multiple_of(2 * params.n_poly as u64) {
            return Err(TfheError::InvalidParams("modulus is not NTT-friendly for 2N".into()));
        }
        let tables = NttTables::new(params.n_poly, m)?;
        let gadget_b = Gadget::new(m, params.l_b, params.log_base_b)?;
        let gadget_k = Gadget::new(m, params.l_k, params.log_base_k)?;
        Ok(Self {
            params,
            tables,
            gadget_b,
            gadget_k,
        })
    }

    pub fn params(&self) -> &TfheParams {
        &self.params
    }

    pub fn tables(&self) -> &NttTables {
        &self.tables
    }

    fn m(&self) -> Modulus {
        self.params.modulus
    }

    // ---- encoding -------------------------------------------------------

    pub fn encode(&self, m: u64) -> Residue {
        let space = 1u64 << (self.params.plaintext_bits + 1);
        let v = (m % space) as f64 * self.params.delta();
        self.m().reduce(v.round() as u64)
    }

    /// Nearest message in `Z_{2^(p+1)}` to a phase.
    pub fn decode(&self, phase: Residue) -> u64 {
        let space = 1u64 << (self.params.plaintext_bits + 1);
        let x = (phase as f64 / self.params.delta()).round() as u64;
        x % space
    }

    pub fn encode_bool(&self, bit: bool) -> Residue {
        let eighth = (self.params.q() as f64 / 8.0).round() as u64;
        if bit {
            eighth
        } else {
            self.m().neg(eighth)
        }
    }

    /// `true` iff the phase lies in the upper-half-torus window `[0, q/2)`.
    pub fn decode_bool(&self, phase: Residue) -> bool {
        phase < self.params.q() / 2
    }

    // ---- keys -----------------------------------------------------------

    pub fn gen_lwe_key<R: Rng + ?Sized>(&self, rng: &mut R) -> LweSecretKey {
        LweSecretKey {
            bits: sampling::binary(self.params.n_lwe, rng),
        }
    }

    pub fn gen_glwe_key<R: Rng + ?Sized>(&self, rng: &mut R) -> GlweSecretKey {
        GlweSecretKey {
            polys: (0..self.params.glwe_dim)
                .map(|_| sampling::binary(self.params.n_poly, rng))
                .collect(),
        }
    }

    pub fn keygen<R: Rng + ?Sized>(&self, rng: &mut R) -> TfheKeys {
        let lwe = self.gen_lwe_key(rng);
        let glwe = self.gen_glwe_key(rng);
        let eval = self.gen_bootstrap_keys(&lwe, &glwe, rng);
        TfheKeys { lwe, glwe, eval }
    }

    pub fn gen_bootstrap_keys<R: Rng + ?Sized>(
        &self,
        lwe: &LweSecretKey,
        glwe: &GlweSecretKey,
        rng: &mut R,
    ) -> BootstrapKeys {
        let bsk = lwe.bits.iter().map(|&s| self.ggsw_encrypt(s, glwe, rng)).collect();
        let ksk = self.gen_ksk(&glwe.extracted(), lwe, rng);
        BootstrapKeys { bsk, ksk }
    }

    /// `ksk[i][j]` encrypts `s_src[i]·w_j` under `dst`.
    pub fn gen_ksk<R: Rng + ?Sized>(
        &self,
        src: &LweSecretKey,
        dst: &LweSecretKey,
        rng: &mut R,
    ) -> Vec<Vec<LweCiphertext>> {
        let m = self.m();
        let weights = self.gadget_k.weights_mod();
        src.bits
            .iter()
            .map(|&s| {
                weights
                    .iter()
                    .map(|&w| self.lwe_encrypt_phase(m.mul(m.reduce_i64(s), w), dst, self.params.sigma_lwe, rng))
                    .collect()
            })
            .collect()
    }

    // ---- LWE ------------------------------------------------------------

    pub fn lwe_encrypt_phase<R: Rng + ?Sized>(
        &self,
        phase: Residue,
        key: &LweSecretKey,
        sigma: f64,
        rng: &mut R,
    ) -> LweCiphertext {
        let m = self.m();
        let a = sampling::uniform(key.bits.len(), &m, rng);
        let e = sampling::gaussian_one(sigma, rng);
        let mut c = LweCiphertext { a, b: 0, modulus: m };
        let dot = m.sub(0, c.phase(key));
        c.b = m.add(m.add(dot, phase), m.reduce_i64(e));
        c
    }

    /// Padded-encoding encryption of `msg ∈ Z_{2^p}`.
    pub fn lwe_encrypt<R: Rng + ?Sized>(&self, msg: u64, key: &LweSecretKey, rng: &mut R) -> LweCiphertext {
        self.lwe_encrypt_phase(self.encode(msg), key, self.params.sigma_lwe, rng)
    }

    pub fn lwe_encrypt_bool<R: Rng + ?Sized>(&self, bit: bool, key: &LweSecretKey, rng: &mut R) -> LweCiphertext {
        self.lwe_encrypt_phase(self.encode_bool(bit), key, self.params.sigma_lwe, rng)
    }

    pub fn lwe_decrypt(&self, c: &LweCiphertext, key: &LweSecretKey) -> u64 {
        self.decode(c.phase(key))
    }

    pub fn lwe_decrypt_bool(&self, c: &LweCiphertext, key: &LweSecretKey) -> bool {
        self.decode_bool(c.phase(key))
    }

    // ---- GLWE / GGSW ----------------------------------------------------

    /// Coefficient-representation GLWE encryption of `msg` with GLWE noise.
    pub fn glwe_encrypt<R: Rng + ?Sized>(
        &self,
        msg: &RingPolynomial,
        key: &GlweSecretKey,
        rng: &mut R,
    ) -> Result<GlweCiphertext, TfheError> {
        if msg.n() != self.params.n_poly {
            return Err(TfheError::DimensionMismatch {
                expected: self.params.n_poly,
                got: msg.n(),
            });
        }
        let mut c = self.glwe_encrypt_zero(key, rng);
        c.body.add_assign(msg);
        Ok(c)
    }

    fn glwe_encrypt_zero<R: Rng + ?Sized>(&self, key: &GlweSecretKey, rng: &mut R) -> GlweCiphertext {
        let m = self.m();
        let n = self.params.n_poly;
        let masks: Vec<RingPolynomial> = (0..self.params.glwe_dim)
            .map(|_| RingPolynomial::from_coeffs(sampling::uniform(n, &m, rng), m).expect("reduced"))
            .collect();
        let e = sampling::gaussian(n, self.params.sigma_glwe, rng);
        let mut body = RingPolynomial::from_signed(&e, m).expect("length");
        for (a, s) in masks.iter().zip(&key.polys) {
            body.add_assign(&self.poly_mul(a, s));
        }
        GlweCiphertext { masks, body }
    }

    fn poly_mul(&self, a: &RingPolynomial, s: &[i64]) -> RingPolynomial {
        let mut fa = a.clone();
        let mut fs = RingPolynomial::from_signed(s, self.m()).expect("length");
        self.tables.to_evaluation(&mut fa).expect("tables");
        self.tables.to_evaluation(&mut fs).expect("tables");
        let mut p = fa.pointwise_mul(&fs);
        self.tables.to_coefficient(&mut p).expect("tables");
        p
    }

    /// `B − Σ A_i·S_i` in coefficient representation.
    pub fn glwe_phase(&self, c: &GlweCiphertext, key: &GlweSecretKey) -> RingPolynomial {
        let mut c = c.clone();
        if c.rep() == Representation::Evaluation {
            for p in c.components_mut() {
                self.tables.to_coefficient(p).expect("tables");
            }
        }
        let mut out = c.body.clone();
        for (a, s) in c.masks.iter().zip(&key.polys) {
            out.sub_assign(&self.poly_mul(a, s));
        }
        out
    }

    /// GGSW encryption of the small integer `mu`.
    pub fn ggsw_encrypt<R: Rng + ?Sized>(&self, mu: i64, key: &GlweSecretKey, rng: &mut R) -> GgswCiphertext {
        let m = self.m();
        let k = self.params.glwe_dim;
        let weights = self.gadget_b.weights_mod();
        let mu = m.reduce_i64(mu);
        let mut rows = Vec::with_capacity((k + 1) * self.params.l_b);
        for c in 0..=k {
            for &w in &weights {
                let mut row = self.glwe_encrypt_zero(key, rng);
                let shift = m.mul(mu, w);
                {
                    let target = if c < k { &mut row.masks[c] } else { &mut row.body };
                    let coeffs = target.coeffs_mut();
                    coeffs[0] = m.add(coeffs[0], shift);
                }
                for p in row.components_mut() {
                    self.tables.to_evaluation(p).expect("tables");
                }
                rows.push(row);
            }
        }
        GgswCiphertext { rows }
    }

    // ---- bootstrapping pieces -------------------------------------------

    /// Digit-decompose every component, NTT the digits, multiply-accumulate
    /// against the GGSW rows, and iNTT the result.
    pub fn external_product(&self, glwe: &GlweCiphertext, ggsw: &GgswCiphertext) -> Result<GlweCiphertext, TfheError> {
        if glwe.rep() != Representation::Coefficient {
            return Err(crate::error::RingError::RepError {
                expected: Representation::Coefficient,
            }
            .into());
        }
        let k = self.params.glwe_dim;
        let l_b = self.params.l_b;
        if ggsw.rows.len() != (k + 1) * l_b || glwe.masks.len() != k {
            return Err(TfheError::DimensionMismatch {
                expected: (k + 1) * l_b,
                got: ggsw.rows.len(),
            });
        }
        let n = self.params.n_poly;
        let m = self.m();
        let mut scratch = Vec::new();
        let mut digits: Vec<RingPolynomial> = Vec::with_capacity((k + 1) * l_b);
        for comp in glwe.components() {
            for mut digit in decompose_with(comp, &self.gadget_b) {
                self.tables.forward_inplace(digit.coeffs_mut(), &mut scratch);
                digits.push(digit);
            }
        }
        // products are < 2^72 and there are at most a few dozen rows, so a u128
        // accumulator reduced once per coefficient cannot overflow
        let mut comps = Vec::with_capacity(k + 1);
        let mut sum = vec![0u128; n];
        for c in 0..=k {
            sum.iter_mut().for_each(|x| *x = 0);
            for (digit, row) in digits.iter().zip(&ggsw.rows) {
                let r = row.components().nth(c).expect("row width");
                for ((acc, &x), &y) in sum.iter_mut().zip(digit.coeffs()).zip(r.coeffs()) {
                    *acc += x as u128 * y as u128;
                }
            }
            let coeffs = sum.iter().map(|&x| m.reduce_wide(x)).collect();
            comps.push(RingPolynomial::new(coeffs, m, Representation::Evaluation)?);
        }
        let body = comps.pop().expect("k + 1 components");
        let acc = GlweCiphertext { masks: comps, body };
        kernels::record(Kernel::ExternalProductMac, 1);
        let mut out = acc;
        for p in out.components_mut() {
            self.tables.to_coefficient(p)?;
        }
        Ok(out)
    }

    pub fn mod_switch(&self, c: &LweCiphertext) -> SwitchedLwe {
        let q = self.params.q();
        let two_n = 2 * self.params.n_poly as u64;
        SwitchedLwe {
            a: c.a.iter().map(|&x| mod_switch_value(x, q, two_n)).collect(),
            b: mod_switch_value(c.b, q, two_n),
            two_n,
        }
    }

    fn rotate_glwe(&self, g: &GlweCiphertext, r: i64) -> GlweCiphertext {
        let m = self.m();
        let rot = |p: &RingPolynomial| {
            let mut out = vec![0; p.n()];
            rotate_into(p.coeffs(), r, &m, &mut out);
            RingPolynomial::from_coeffs(out, m).expect("reduced")
        };
        GlweCiphertext {
            masks: g.masks.iter().map(rot).collect(),
            body: rot(&g.body),
        }
    }

    /// `n_lwe` CMux steps starting from `tv·X^(−b̃)`.
    pub fn blind_rotate(
        &self,
        tv: &GlweCiphertext,
        c: &SwitchedLwe,
        bsk: &[GgswCiphertext],
    ) -> Result<GlweCiphertext, TfheError> {
        if c.a.len() != bsk.len() {
            return Err(TfheError::DimensionMismatch {
                expected: bsk.len(),
                got: c.a.len(),
            });
        }
        let mut acc = self.rotate_glwe(tv, -(c.b as i64));
        for (&ai, key) in c.a.iter().zip(bsk) {
            if ai == 0 {
                continue;
            }
            let mut tmp = self.rotate_glwe(&acc, ai as i64);
            for (t, a) in tmp.components_mut().zip(acc.components()) {
                t.sub_assign(a);
            }
            let prod = self.external_product(&tmp, key)?;
            for (a, p) in acc.components_mut().zip(prod.components()) {
                a.add_assign(p);
            }
        }
        Ok(acc)
    }

    /// LWE of dimension `kN` whose phase is coefficient `i` of the GLWE phase.
    pub fn sample_extract(&self, glwe: &GlweCiphertext, i: usize) -> Result<LweCiphertext, TfheError> {
        let n = self.params.n_poly;
        if i >= n {
            return Err(TfheError::IndexOutOfRange { index: i, n });
        }
        if glwe.rep() != Representation::Coefficient {
            return Err(crate::error::RingError::RepError {
                expected: Representation::Coefficient,
            }
            .into());
        }
        kernels::record(Kernel::SampleExtract, 1);
        let m = self.m();
        let mut a = Vec::with_capacity(glwe.masks.len() * n);
        for mask in &glwe.masks {
            let c = mask.coeffs();
            for j in 0..n {
                a.push(if j <= i { c[i - j] } else { m.neg(c[n + i - j]) });
            }
        }
        Ok(LweCiphertext {
            a,
            b: glwe.body.coeffs()[i],
            modulus: m,
        })
    }

    /// `(0, b') − Σ_i Σ_j a''_i[j]·ksk[i][j]`.
    pub fn keyswitch(&self, c: &LweCiphertext, ksk: &[Vec<LweCiphertext>]) -> Result<LweCiphertext, TfheError> {
        if c.a.len() != ksk.len() {
            return Err(TfheError::DimensionMismatch {
                expected: ksk.len(),
                got: c.a.len(),
            });
        }
        let m = self.m();
        let n_out = ksk.first().and_then(|r| r.first()).map_or(0, |x| x.dim());
        let mut acc_a = vec![0u64; n_out];
        let mut acc_b = 0u64;
        let mut digits = vec![0i64; self.params.l_k];
        kernels::record(Kernel::Decompose, 1);
        for (&ai, row) in c.a.iter().zip(ksk) {
            self.gadget_k.decompose_value(ai, &mut digits);
            for (&d, k) in digits.iter().zip(row) {
                if d == 0 {
                    continue;
                }
                let dm = m.reduce_i64(d);
                for (x, &y) in acc_a.iter_mut().zip(&k.a) {
                    *x = m.add(*x, m.mul(dm, y));
                }
                acc_b = m.add(acc_b, m.mul(dm, k.b));
            }
        }
        kernels::record(Kernel::ModMul, 1);
        Ok(LweCiphertext {
            a: acc_a.into_iter().map(|x| m.neg(x)).collect(),
            b: m.sub(c.b, acc_b),
            modulus: m,
        })
    }

    /// Trivial GLWE whose body encodes the table, with the half-window shift.
    pub fn build_test_vector(&self, lut: &Lut) -> Result<GlweCiphertext, TfheError> {
        let n = self.params.n_poly;
        let m = self.m();
        let p = self.params.plaintext_bits;
        let body: Vec<Residue> = match lut {
            Lut::Boolean([f0, f1]) => {
                if f0 == f1 {
                    return Err(TfheError::NegacyclicViolation(0));
                }
                vec![self.encode_bool(*f1); n]
            }
            Lut::Padded(vals) | Lut::FullTorus(vals) => {
                let half_space = 1usize << p;
                let full = matches!(lut, Lut::FullTorus(_));
                let expect = if full { 2 * half_space } else { half_space };
                if vals.len() != expect {
                    return Err(TfheError::InvalidParams(format!(
                        "table has {} entries, expected {expect}",
                        vals.len()
                    )));
                }
                if full {
                    let space = 2 * half_space as u64;
                    for x in 0..half_space {
                        if (vals[x] + vals[x + half_space]) % space != 0 {
                            return Err(TfheError::NegacyclicViolation(x as u64));
                        }
                    }
                }
                if n < 2 * half_space {
                    return Err(TfheError::InvalidParams("plaintext space too large for N".into()));
                }
                let boxw = n / half_space;
                let half = boxw / 2;
                (0..n)
                    .map(|j| {
                        if j + half < n {
                            self.encode(vals[(j + half) / boxw])
                        } else {
                            m.neg(self.encode(vals[0]))
                        }
                    })
                    .collect()
            }
        };
        let body = RingPolynomial::from_coeffs(body, m)?;
        Ok(GlweCiphertext::trivial(body, self.params.glwe_dim))
    }

    /// ModSwitch → BlindRotate → SampleExtract → KeySwitch.
    pub fn pbs(
        &self,
        c: &LweCiphertext,
        tv: &GlweCiphertext,
        keys: &BootstrapKeys,
    ) -> Result<LweCiphertext, TfheError> {
        if c.dim() != self.params.n_lwe {
            return Err(TfheError::DimensionMismatch {
                expected: self.params.n_lwe,
                got: c.dim(),
            });
        }
        let switched = self.mod_switch(c);
        let acc = self.blind_rotate(tv, &switched, &keys.bsk)?;
        let extracted = self.sample_extract(&acc, 0)?;
        self.keyswitch(&extracted, &keys.ksk)
    }

    /// Bootstrapped NAND on boolean-encoded inputs.
    pub fn nand(&self, x: &LweCiphertext, y: &LweCiphertext, keys: &BootstrapKeys) -> Result<LweCiphertext, TfheError> {
        let shift = LweCiphertext::trivial(x.dim(), self.encode_bool(true), self.m());
        let lin = shift.sub(x).sub(y);
        let tv = self.build_test_vector(&Lut::Boolean([false, true]))?;
        self.pbs(&lin, &tv, keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn mod_switch_edges() {
        let ctx = TfheContext::new(TfheParams::toy()).unwrap();
        let q = ctx.params().q();
        let z = ctx.mod_switch(&LweCiphertext::zero(4, ctx.params().modulus));
        assert!(z.a.iter().all(|&x| x == 0) && z.b == 0);
        assert_eq!(mod_switch_value(q / 2, q, 128), 64);
        assert_eq!(mod_switch_value(q - 1, q, 128), 0);
    }

    #[test]
    fn mod_switch_matches_rational_rounding() {
        let mut rng = ChaCha20Rng::seed_from_u64(40);
        let q = TfheParams::toy().q();
        for _ in 0..10_000 {
            let x = rng.random_range(0..q);
            // exact rational x·128/q, rounded half up
            let num = x as u128 * 128;
            let (quo, rem) = (num / q as u128, num % q as u128);
            let want = (quo + u128::from(2 * rem >= q as u128)) % 128;
            assert_eq!(mod_switch_value(x, q, 128) as u128, want);
        }
    }

    #[test]
    fn test_vector_shapes() {
        let ctx = TfheContext::new(TfheParams::toy().with_plaintext_bits(2)).unwrap();
        let tv = ctx.build_test_vector(&Lut::Padded(vec![3; 4])).unwrap();
        let head = tv.body.coeffs()[0];
        assert!(tv.body.coeffs()[..56].iter().all(|&x| x == head));
        assert!(matches!(
            ctx.build_test_vector(&Lut::FullTorus(vec![1, 2, 3, 4, 5, 6, 7, 0])),
            Err(TfheError::NegacyclicViolation(0))
        ));
        assert!(ctx
            .build_test_vector(&Lut::FullTorus(vec![1, 2, 3, 4, 7, 6, 5, 4]))
            .is_ok());
        assert!(matches!(
            ctx.build_test_vector(&Lut::Boolean([true, true])),
            Err(TfheError::NegacyclicViolation(_))
        ));
    }
}
