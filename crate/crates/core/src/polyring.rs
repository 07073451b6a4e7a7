//! Negacyclic polynomial arithmetic in `Z_q[X]/(X^N + 1)`.
//!
//! The forward transform is a constant-geometry (Pease) radix-2 NTT: every
//! stage reads `x[j]` and `x[j + N/2]` and writes `y[2j]`, `y[2j + 1]`, so the
//! access pattern is identical across stages. Negacyclic wrap-around is folded
//! in by pre-multiplying coefficient `j` by `ψ^j` (ψ a primitive `2N`-th root).
//!
//! Evaluation ordering: slot `i` of an evaluation-representation polynomial
//! holds `p(ψ^(2·brv(i) + 1))`, where `brv` reverses the `log2 N` index bits.
//! [`four_step_ntt`] produces the same ordering.

use crate::error::RingError;
use crate::kernels::{self, Kernel};
use crate::modmath::{Modulus, Residue};

/// Largest supported ring dimension.
pub const MAX_RING_DIM: usize = 1 << 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Representation {
    Coefficient,
    Evaluation,
}

#[inline]
pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// A polynomial of `R_q` with an explicit representation tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingPolynomial {
    coeffs: Vec<Residue>,
    modulus: Modulus,
    rep: Representation,
}

impl RingPolynomial {
    pub fn new(coeffs: Vec<Residue>, modulus: Modulus, rep: Representation) -> Result<Self, RingError> {
        let n = coeffs.len();
        if !n.is_power_of_two() || !(2..=MAX_RING_DIM).contains(&n) {
            return Err(RingError::ShapeError(format!(
                "ring dimension {n} is not a power of two in [2, 2^17]"
            )));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= modulus.value()) {
            return Err(RingError::ShapeError(format!(
                "coefficient {c} not reduced mod {}",
                modulus.value()
            )));
        }
        Ok(Self { coeffs, modulus, rep })
    }

    /// Coefficient-representation polynomial from reduced residues.
    pub fn from_coeffs(coeffs: Vec<Residue>, modulus: Modulus) -> Result<Self, RingError> {
        Self::new(coeffs, modulus, Representation::Coefficient)
    }

    pub fn from_signed(coeffs: &[i64], modulus: Modulus) -> Result<Self, RingError> {
        let c = coeffs.iter().map(|&x| modulus.reduce_i64(x)).collect();
        Self::from_coeffs(c, modulus)
    }

    pub fn zero(n: usize, modulus: Modulus, rep: Representation) -> Self {
        assert!(n.is_power_of_two() && n <= MAX_RING_DIM);
        Self {
            coeffs: vec![0; n],
            modulus,
            rep,
        }
    }

    /// The constant polynomial `c` in coefficient representation.
    pub fn constant(n: usize, c: Residue, modulus: Modulus) -> Self {
        let mut p = Self::zero(n, modulus, Representation::Coefficient);
        p.coeffs[0] = modulus.reduce(c);
        p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    #[inline]
    pub fn rep(&self) -> Representation {
        self.rep
    }

    #[inline]
    pub fn coeffs(&self) -> &[Residue] {
        &self.coeffs
    }

    /// Mutable access; callers must keep every entry reduced.
    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Residue] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Residue> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Coefficients lifted to `(-q/2, q/2]`.
    pub fn centered(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&c| self.modulus.center(c)).collect()
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.n(), other.n(), "ring dimension mismatch");
        assert_eq!(self.modulus, other.modulus, "modulus mismatch");
        assert_eq!(self.rep, other.rep, "representation mismatch");
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.check_compatible(other);
        kernels::record(Kernel::ModAdd, 1);
        let m = self.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = m.add(*a, b);
        }
    }

    pub fn sub_assign(&mut self, other: &Self) {
        self.check_compatible(other);
        kernels::record(Kernel::ModAdd, 1);
        let m = self.modulus;
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = m.sub(*a, b);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> Self {
        kernels::record(Kernel::ModAdd, 1);
        let m = self.modulus;
        Self {
            coeffs: self.coeffs.iter().map(|&a| m.neg(a)).collect(),
            modulus: m,
            rep: self.rep,
        }
    }

    pub fn scalar_mul(&self, c: Residue) -> Self {
        kernels::record(Kernel::ModMul, 1);
        let m = self.modulus;
        let c = m.reduce(c);
        let cs = m.shoup(c);
        Self {
            coeffs: self.coeffs.iter().map(|&a| m.mul_shoup(a, c, cs)).collect(),
            modulus: m,
            rep: self.rep,
        }
    }

    /// Slot-wise product; both operands must be in evaluation representation.
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        assert_eq!(self.rep, Representation::Evaluation);
        kernels::record(Kernel::ModMul, 1);
        let m = self.modulus;
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| m.mul(a, b))
                .collect(),
            modulus: m,
            rep: self.rep,
        }
    }

    /// `self += a ⊙ b` in evaluation representation.
    pub fn mul_acc(&mut self, a: &Self, b: &Self) {
        a.check_compatible(b);
        self.check_compatible(a);
        assert_eq!(self.rep, Representation::Evaluation);
        let m = self.modulus;
        for ((acc, &x), &y) in self.coeffs.iter_mut().zip(&a.coeffs).zip(&b.coeffs) {
            *acc = m.add(*acc, m.mul(x, y));
        }
    }
}

/// Precomputed constants for negacyclic NTTs of one length under one modulus.
#[derive(Clone, Debug)]
pub struct NttTables {
    modulus: Modulus,
    n: usize,
    log_n: u32,
    psi: Residue,
    omega: Residue,
    /// `ω^e` for `e < N/2`; stage `s`, butterfly `j` uses exponent `(j >> s) << s`.
    twiddles: Vec<Residue>,
    twiddles_shoup: Vec<Residue>,
    inv_twiddles: Vec<Residue>,
    inv_twiddles_shoup: Vec<Residue>,
    /// `ψ^j`, the negacyclic twisting factors.
    twist: Vec<Residue>,
    twist_shoup: Vec<Residue>,
    /// `ψ^-j · N^-1`.
    untwist: Vec<Residue>,
    untwist_shoup: Vec<Residue>,
    n_inv: Residue,
}

impl NttTables {
    pub fn new(n: usize, modulus: Modulus) -> Result<Self, RingError> {
        if !n.is_power_of_two() || !(2..=MAX_RING_DIM).contains(&n) {
            return Err(RingError::ShapeError(format!("unsupported NTT length {n}")));
        }
        let psi = modulus.root_of_unity(2 * n as u64)?;
        let psi_inv = modulus.inv(psi)?;
        let omega = modulus.mul(psi, psi);
        let omega_inv = modulus.mul(psi_inv, psi_inv);
        let n_inv = modulus.inv(n as u64)?;

        let powers = |base: Residue, count: usize| {
            let mut v = Vec::with_capacity(count);
            let mut x = 1;
            for _ in 0..count {
                v.push(x);
                x = modulus.mul(x, base);
            }
            v
        };
        let shoup = |v: &[Residue]| v.iter().map(|&w| modulus.shoup(w)).collect::<Vec<_>>();

        let twiddles = powers(omega, n / 2);
        let inv_twiddles = powers(omega_inv, n / 2);
        let twist = powers(psi, n);
        let untwist: Vec<_> = powers(psi_inv, n).into_iter().map(|x| modulus.mul(x, n_inv)).collect();
        Ok(Self {
            modulus,
            n,
            log_n: n.trailing_zeros(),
            psi,
            omega,
            twiddles_shoup: shoup(&twiddles),
            inv_twiddles_shoup: shoup(&inv_twiddles),
            twist_shoup: shoup(&twist),
            untwist_shoup: shoup(&untwist),
            twiddles,
            inv_twiddles,
            twist,
            untwist,
            n_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// Primitive `2N`-th root ψ.
    pub fn psi(&self) -> Residue {
        self.psi
    }

    /// Primitive `N`-th root ω = ψ².
    pub fn omega(&self) -> Residue {
        self.omega
    }

    pub fn n_inv(&self) -> Residue {
        self.n_inv
    }

    pub fn twiddles(&self) -> &[Residue] {
        &self.twiddles
    }

    pub fn inv_twiddles(&self) -> &[Residue] {
        &self.inv_twiddles
    }

    /// First item and common ratio of the negacyclic twisting sequence.
    pub fn twist_seed(&self) -> (Residue, Residue) {
        (1, self.psi)
    }

    fn check(&self, p: &RingPolynomial) -> Result<(), RingError> {
        if p.n() != self.n || p.modulus != self.modulus {
            return Err(RingError::TableMismatch {
                table_n: self.n,
                table_q: self.modulus.value(),
                poly_n: p.n(),
                poly_q: p.modulus.value(),
            });
        }
        Ok(())
    }

    /// Cyclic constant-geometry DFT, natural order in, bit-reversed order out.
    /// Intermediate values are kept lazily in `[0, 2q)`; the output is reduced.
    pub(crate) fn cyclic_forward(&self, data: &mut [Residue], scratch: &mut Vec<Residue>) {
        let n = self.n;
        let h = n / 2;
        let m = &self.modulus;
        let two_q = 2 * m.value();
        scratch.resize(n, 0);
        let mut src: &mut [Residue] = data;
        let mut dst: &mut [Residue] = scratch.as_mut_slice();
        for s in 0..self.log_n {
            let (lo, hi) = src.split_at(h);
            for (j, ((d, &a), &b)) in dst.chunks_exact_mut(2).zip(lo).zip(hi).enumerate() {
                let e = (j >> s) << s;
                let mut x = a + b;
                if x >= two_q {
                    x -= two_q;
                }
                d[0] = x;
                d[1] = m.mul_shoup_lazy(a + two_q - b, self.twiddles[e], self.twiddles_shoup[e]);
            }
            std::mem::swap(&mut src, &mut dst);
        }
        for x in src.iter_mut() {
            if *x >= m.value() {
                *x -= m.value();
            }
        }
        if self.log_n % 2 == 1 {
            // result currently lives in scratch
            dst.copy_from_slice(src);
        }
    }

    /// Inverse of [`Self::cyclic_forward`] without the `1/N` factor; output in `[0, 2q)`.
    pub(crate) fn cyclic_inverse_unscaled(&self, data: &mut [Residue], scratch: &mut Vec<Residue>) {
        let n = self.n;
        let h = n / 2;
        let m = &self.modulus;
        let two_q = 2 * m.value();
        scratch.resize(n, 0);
        let mut src: &mut [Residue] = data;
        let mut dst: &mut [Residue] = scratch.as_mut_slice();
        for s in (0..self.log_n).rev() {
            let (lo, hi) = dst.split_at_mut(h);
            for (j, ((pair, x), y)) in src.chunks_exact(2).zip(lo).zip(hi).enumerate() {
                let e = (j >> s) << s;
                let u = pair[0];
                let t = m.mul_shoup_lazy(pair[1], self.inv_twiddles[e], self.inv_twiddles_shoup[e]);
                let mut a = u + t;
                if a >= two_q {
                    a -= two_q;
                }
                let mut b = u + two_q - t;
                if b >= two_q {
                    b -= two_q;
                }
                *x = a;
                *y = b;
            }
            std::mem::swap(&mut src, &mut dst);
        }
        if self.log_n % 2 == 1 {
            dst.copy_from_slice(src);
        }
    }

    /// In-place forward negacyclic NTT of raw residues.
    pub fn forward_inplace(&self, data: &mut [Residue], scratch: &mut Vec<Residue>) {
        assert_eq!(data.len(), self.n);
        kernels::record(Kernel::Ntt, 1);
        let m = &self.modulus;
        for ((x, &w), &ws) in data.iter_mut().zip(&self.twist).zip(&self.twist_shoup) {
            *x = m.mul_shoup_lazy(*x, w, ws);
        }
        self.cyclic_forward(data, scratch);
    }

    /// In-place inverse negacyclic NTT of raw residues (includes `N^-1`).
    pub fn inverse_inplace(&self, data: &mut [Residue], scratch: &mut Vec<Residue>) {
        assert_eq!(data.len(), self.n);
        kernels::record(Kernel::Intt, 1);
        self.cyclic_inverse_unscaled(data, scratch);
        let m = &self.modulus;
        for ((x, &w), &ws) in data.iter_mut().zip(&self.untwist).zip(&self.untwist_shoup) {
            *x = m.mul_shoup(*x, w, ws);
        }
    }

    /// Converts `p` to evaluation representation in place (no-op if already there).
    pub fn to_evaluation(&self, p: &mut RingPolynomial) -> Result<(), RingError> {
        self.check(p)?;
        if p.rep == Representation::Coefficient {
            let mut scratch = Vec::new();
            self.forward_inplace(&mut p.coeffs, &mut scratch);
            p.rep = Representation::Evaluation;
        }
        Ok(())
    }

    /// Converts `p` to coefficient representation in place (no-op if already there).
    pub fn to_coefficient(&self, p: &mut RingPolynomial) -> Result<(), RingError> {
        self.check(p)?;
        if p.rep == Representation::Evaluation {
            let mut scratch = Vec::new();
            self.inverse_inplace(&mut p.coeffs, &mut scratch);
            p.rep = Representation::Coefficient;
        }
        Ok(())
    }
}

/// Forward negacyclic NTT; `p` must be in coefficient representation.
pub fn ntt_forward(p: &RingPolynomial, t: &NttTables) -> Result<RingPolynomial, RingError> {
    t.check(p)?;
    if p.rep != Representation::Coefficient {
        return Err(RingError::RepError {
            expected: Representation::Coefficient,
        });
    }
    let mut out = p.clone();
    t.to_evaluation(&mut out)?;
    Ok(out)
}

/// Inverse negacyclic NTT; `p` must be in evaluation representation.
pub fn ntt_inverse(p: &RingPolynomial, t: &NttTables) -> Result<RingPolynomial, RingError> {
    t.check(p)?;
    if p.rep != Representation::Evaluation {
        return Err(RingError::RepError {
            expected: Representation::Evaluation,
        });
    }
    let mut out = p.clone();
    t.to_coefficient(&mut out)?;
    Ok(out)
}

/// Negacyclic product through the NTT; both inputs in coefficient representation.
pub fn ntt_mul(a: &RingPolynomial, b: &RingPolynomial, t: &NttTables) -> Result<RingPolynomial, RingError> {
    let fa = ntt_forward(a, t)?;
    let fb = ntt_forward(b, t)?;
    ntt_inverse(&fa.pointwise_mul(&fb), t)
}

/// Generates `first, first·ratio, first·ratio², …` one item at a time, the way a
/// twisting unit is fed only a seed and a ratio instead of a table.
#[derive(Clone, Debug)]
pub struct TwistGenerator {
    current: Residue,
    ratio: Residue,
    ratio_shoup: Residue,
    modulus: Modulus,
}

impl TwistGenerator {
    pub fn new(first: Residue, ratio: Residue, modulus: Modulus) -> Self {
        Self {
            current: first,
            ratio,
            ratio_shoup: modulus.shoup(ratio),
            modulus,
        }
    }
}

impl Iterator for TwistGenerator {
    type Item = Residue;

    #[inline]
    fn next(&mut self) -> Option<Residue> {
        let out = self.current;
        self.current = self.modulus.mul_shoup(self.current, self.ratio, self.ratio_shoup);
        Some(out)
    }
}

/// How the inter-phase twisting factors of the four-step NTT are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwistMode {
    /// Geometric generation from (first item, common ratio).
    OnTheFly,
    /// Explicit `ω^(j2·k1)` powers, for cross-checking.
    Precomputed,
}

/// Four-step NTT: `N = N1·N2` split into a phase-1 NTT of length `N1`, a
/// twisting step, and a phase-2 NTT of length `N2`. Output ordering matches
/// [`ntt_forward`] exactly.
pub fn four_step_ntt(p: &RingPolynomial, t1: &NttTables, t2: &NttTables) -> Result<RingPolynomial, RingError> {
    four_step_ntt_with(p, t1, t2, TwistMode::OnTheFly)
}

pub fn four_step_ntt_with(
    p: &RingPolynomial,
    t1: &NttTables,
    t2: &NttTables,
    mode: TwistMode,
) -> Result<RingPolynomial, RingError> {
    let n = p.n();
    let (n1, n2) = (t1.n, t2.n);
    if n1 * n2 != n {
        return Err(RingError::ShapeError(format!("{n1} x {n2} does not factor N = {n}")));
    }
    let m = p.modulus;
    if t1.modulus != m || t2.modulus != m {
        return Err(RingError::ShapeError("four-step tables use a different modulus".into()));
    }
    if p.rep != Representation::Coefficient {
        return Err(RingError::RepError {
            expected: Representation::Coefficient,
        });
    }
    let psi = m.root_of_unity(2 * n as u64)?;
    let omega = m.mul(psi, psi);
    if m.pow(omega, n2 as u64) != t1.omega || m.pow(omega, n1 as u64) != t2.omega {
        return Err(RingError::ShapeError(
            "sub-transform roots inconsistent with the full-length root".into(),
        ));
    }
    kernels::record(Kernel::Ntt, 1);

    // negacyclic pre-twist ψ^j, generated from its seed
    let mut x: Vec<Residue> = p
        .coeffs
        .iter()
        .zip(TwistGenerator::new(1, psi, m))
        .map(|(&c, w)| m.mul(c, w))
        .collect();

    let log_n1 = n1.trailing_zeros();
    let log_n2 = n2.trailing_zeros();
    let mut scratch = Vec::new();
    let mut col = vec![0; n1];
    // a[k1 * n2 + j2] after phase 1
    let mut a = vec![0; n];
    for j2 in 0..n2 {
        for j1 in 0..n1 {
            col[j1] = x[n2 * j1 + j2];
        }
        t1.cyclic_forward(&mut col, &mut scratch);
        for (r, &v) in col.iter().enumerate() {
            a[bit_reverse(r, log_n1) * n2 + j2] = v;
        }
    }

    // twisting: a[k1][j2] *= ω^(j2·k1)
    let mut ratio = 1;
    for k1 in 0..n1 {
        let row = &mut a[k1 * n2..(k1 + 1) * n2];
        match mode {
            TwistMode::OnTheFly => {
                for (v, w) in row.iter_mut().zip(TwistGenerator::new(1, ratio, m)) {
                    *v = m.mul(*v, w);
                }
            }
            TwistMode::Precomputed => {
                for (j2, v) in row.iter_mut().enumerate() {
                    let e = (j2 as u64 * k1 as u64) % n as u64;
                    *v = m.mul(*v, m.pow(omega, e));
                }
            }
        }
        ratio = m.mul(ratio, omega);
    }

    // phase 2 along each row, then scatter to the bit-reversed output order
    let log_n = n.trailing_zeros();
    for k1 in 0..n1 {
        let row = &mut a[k1 * n2..(k1 + 1) * n2];
        t2.cyclic_forward(row, &mut scratch);
        for (r, &v) in row.iter().enumerate() {
            let k = k1 + n1 * bit_reverse(r, log_n2);
            x[bit_reverse(k, log_n)] = v;
        }
    }
    RingPolynomial::new(x, m, Representation::Evaluation)
}

/// Galois element `5^r mod 2N`; `r` may be negative.
pub fn rotation_galois_element(r: i64, n: usize) -> u64 {
    let two_n = 2 * n as u64;
    // 5 has order N/2 in Z_{2N}^*
    let order = (n / 2).max(1) as i64;
    let e = r.rem_euclid(order) as u64;
    let mut acc = 1u64;
    let mut b = 5 % two_n;
    let mut k = e;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * b % two_n;
        }
        b = b * b % two_n;
        k >>= 1;
    }
    acc
}

/// Applies `X → X^g` for odd `g`, in either representation.
pub fn apply_galois(p: &RingPolynomial, g: u64) -> RingPolynomial {
    let n = p.n();
    let two_n = 2 * n as u64;
    assert!(g % 2 == 1, "Galois element must be odd");
    let g = g % two_n;
    kernels::record(Kernel::Auto, 1);
    let m = p.modulus;
    let mut out = vec![0; n];
    match p.rep {
        Representation::Coefficient => {
            for (i, &c) in p.coeffs.iter().enumerate() {
                let e = (i as u64 * g) % two_n;
                if e < n as u64 {
                    out[e as usize] = c;
                } else {
                    out[(e - n as u64) as usize] = m.neg(c);
                }
            }
        }
        Representation::Evaluation => {
            let log_n = n.trailing_zeros();
            for (i, o) in out.iter_mut().enumerate() {
                let exp = 2 * bit_reverse(i, log_n) as u64 + 1;
                let src_exp = exp * g % two_n;
                let src = bit_reverse(((src_exp - 1) / 2) as usize, log_n);
                *o = p.coeffs[src];
            }
        }
    }
    RingPolynomial {
        coeffs: out,
        modulus: m,
        rep: p.rep,
    }
}

/// Automorphism `X → X^(5^r)`; in evaluation representation this is a pure
/// index permutation.
pub fn automorphism(p: &RingPolynomial, r: i64) -> RingPolynomial {
    apply_galois(p, rotation_galois_element(r, p.n()))
}

/// `p · X^r` with `X^N = -1`.
pub fn monomial_rotate(p: &RingPolynomial, r: i64) -> Result<RingPolynomial, RingError> {
    if p.rep != Representation::Coefficient {
        return Err(RingError::RepError {
            expected: Representation::Coefficient,
        });
    }
    let mut out = vec![0; p.n()];
    rotate_into(&p.coeffs, r, &p.modulus, &mut out);
    Ok(RingPolynomial {
        coeffs: out,
        modulus: p.modulus,
        rep: Representation::Coefficient,
    })
}

/// Raw-slice form of [`monomial_rotate`].
pub fn rotate_into(src: &[Residue], r: i64, m: &Modulus, out: &mut [Residue]) {
    let n = src.len();
    let two_n = 2 * n as i64;
    let r = r.rem_euclid(two_n) as usize;
    kernels::record(Kernel::Rotate, 1);
    for (i, &c) in src.iter().enumerate() {
        let e = i + r;
        let (idx, negate) = if e < n {
            (e, false)
        } else if e < 2 * n {
            (e - n, true)
        } else {
            (e - 2 * n, false)
        };
        out[idx] = if negate { m.neg(c) } else { c };
    }
}

/// Signed gadget decomposition parameters for one modulus.
///
/// A value `x` is first rounded to the nearest multiple of
/// `scale = round(q / B^levels)`, then the quotient is split into `levels`
/// signed base-`B` digits, most significant first. Every digit lies in
/// `[-B/2, B/2)` except the top one, which also absorbs the final carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gadget {
    modulus: Modulus,
    levels: usize,
    log_base: u32,
    scale: u64,
}

impl Gadget {
    pub fn new(modulus: Modulus, levels: usize, log_base: u32) -> Result<Self, RingError> {
        let total = levels as u64 * log_base as u64;
        if levels == 0 || log_base == 0 || total > modulus.bits() as u64 {
            return Err(RingError::DecompositionOverflow {
                levels,
                log_base,
                modulus_bits: modulus.bits(),
            });
        }
        let q = modulus.value() as u128;
        let bl = 1u128 << total;
        let scale = ((q + bl / 2) / bl).max(1) as u64;
        Ok(Self {
            modulus,
            levels,
            log_base,
            scale,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn log_base(&self) -> u32 {
        self.log_base
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// `scale · B^(levels-1-j)` as integers, `j = 0` most significant.
    pub fn weights(&self) -> Vec<u128> {
        (0..self.levels)
            .map(|j| (self.scale as u128) << (self.log_base as usize * (self.levels - 1 - j)))
            .collect()
    }

    /// Weights reduced mod q.
    pub fn weights_mod(&self) -> Vec<Residue> {
        let q = self.modulus.value() as u128;
        self.weights().into_iter().map(|w| (w % q) as u64).collect()
    }

    /// Writes the signed digits of residue `x` into `out` (most significant first).
    #[inline]
    pub fn decompose_value(&self, x: Residue, out: &mut [i64]) {
        debug_assert_eq!(out.len(), self.levels);
        let xc = self.modulus.center(x);
        let s = self.scale as i64;
        // round half away from zero
        let mut v = if xc >= 0 {
            (2 * xc + s) / (2 * s)
        } else {
            -((s - 2 * xc) / (2 * s))
        };
        let base = 1i64 << self.log_base;
        let half = base / 2;
        for j in (1..self.levels).rev() {
            let d = ((v + half) & (base - 1)) - half;
            out[j] = d;
            v = (v - d) >> self.log_base;
        }
        out[0] = v;
    }
}

/// Splits `p` into `levels` digit polynomials (most significant first) whose
/// weighted sum `Σ_j digit_j · B^(levels-1-j) · scale` approximates `p`.
pub fn digit_decompose(p: &RingPolynomial, levels: usize, log_base: u32) -> Result<Vec<RingPolynomial>, RingError> {
    if p.rep != Representation::Coefficient {
        return Err(RingError::RepError {
            expected: Representation::Coefficient,
        });
    }
    let g = Gadget::new(p.modulus, levels, log_base)?;
    Ok(decompose_with(p, &g))
}

pub fn decompose_with(p: &RingPolynomial, g: &Gadget) -> Vec<RingPolynomial> {
    kernels::record(Kernel::Decompose, 1);
    let n = p.n();
    let m = p.modulus;
    let mut out: Vec<Vec<Residue>> = vec![vec![0; n]; g.levels];
    let mut digits = vec![0i64; g.levels];
    for (i, &c) in p.coeffs.iter().enumerate() {
        g.decompose_value(c, &mut digits);
        for (j, &d) in digits.iter().enumerate() {
            out[j][i] = m.reduce_i64(d);
        }
    }
    out.into_iter()
        .map(|coeffs| RingPolynomial {
            coeffs,
            modulus: m,
            rep: Representation::Coefficient,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::find_ntt_prime;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// O(N²) negacyclic product, the independent oracle.
    fn schoolbook(a: &[u64], b: &[u64], m: &Modulus) -> Vec<u64> {
        let n = a.len();
        let mut out = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let prod = m.mul(a[i], b[j]);
                let k = i + j;
                if k < n {
                    out[k] = m.add(out[k], prod);
                } else {
                    out[k - n] = m.sub(out[k - n], prod);
                }
            }
        }
        out
    }

    fn random_poly(n: usize, m: Modulus, rng: &mut ChaCha20Rng) -> RingPolynomial {
        RingPolynomial::from_coeffs((0..n).map(|_| rng.random_range(0..m.value())).collect(), m).unwrap()
    }

    #[test]
    fn evaluation_points_follow_documented_order() {
        let m = Modulus::new(17, 16).unwrap();
        let t = NttTables::new(8, m).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let p = random_poly(8, m, &mut rng);
        let e = ntt_forward(&p, &t).unwrap();
        for i in 0..8 {
            let x = m.pow(t.psi(), 2 * bit_reverse(i, 3) as u64 + 1);
            let direct = p.coeffs().iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, x), c));
            assert_eq!(e.coeffs()[i], direct);
        }
    }

    #[test]
    fn trivial_transforms() {
        let m = Modulus::new(17, 16).unwrap();
        let t = NttTables::new(8, m).unwrap();
        let zero = RingPolynomial::zero(8, m, Representation::Coefficient);
        assert!(ntt_forward(&zero, &t).unwrap().is_zero());
        let c = RingPolynomial::constant(8, 5, m);
        assert_eq!(ntt_forward(&c, &t).unwrap().coeffs(), &[5; 8]);
        let ez = RingPolynomial::zero(8, m, Representation::Evaluation);
        assert!(ntt_inverse(&ez, &t).unwrap().is_zero());
        // evaluation vector of X maps back to X
        let x = RingPolynomial::from_coeffs(vec![0, 1, 0, 0, 0, 0, 0, 0], m).unwrap();
        let ex = ntt_forward(&x, &t).unwrap();
        assert_eq!(ntt_inverse(&ex, &t).unwrap(), x);
    }

    #[test]
    fn rep_and_table_errors() {
        let m = Modulus::new(17, 16).unwrap();
        let t = NttTables::new(8, m).unwrap();
        let e = RingPolynomial::zero(8, m, Representation::Evaluation);
        assert!(matches!(ntt_forward(&e, &t), Err(RingError::RepError { .. })));
        let p = RingPolynomial::zero(4, m, Representation::Coefficient);
        assert!(matches!(ntt_forward(&p, &t), Err(RingError::TableMismatch { .. })));
    }

    #[test]
    fn convolution_theorem_small() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for &n in &[8usize, 16, 64] {
            let m = find_ntt_prime(30, 2 * n as u64).unwrap();
            let t = NttTables::new(n, m).unwrap();
            let a = random_poly(n, m, &mut rng);
            let b = random_poly(n, m, &mut rng);
            let prod = ntt_mul(&a, &b, &t).unwrap();
            assert_eq!(prod.coeffs(), schoolbook(a.coeffs(), b.coeffs(), &m).as_slice());
        }
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let m = find_ntt_prime(36, 1 << 11).unwrap();
        let t = NttTables::new(1024, m).unwrap();
        let p = random_poly(1024, m, &mut rng);
        let s = random_poly(1024, m, &mut rng);
        let (a, b) = (rng.random_range(0..m.value()), rng.random_range(0..m.value()));
        let lhs = ntt_forward(&p.scalar_mul(a).add(&s.scalar_mul(b)), &t).unwrap();
        let rhs = ntt_forward(&p, &t)
            .unwrap()
            .scalar_mul(a)
            .add(&ntt_forward(&s, &t).unwrap().scalar_mul(b));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn four_step_matches_direct() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let m = find_ntt_prime(36, 1 << 12).unwrap();
        for (n1, n2) in [(16usize, 16usize), (4, 64), (64, 4), (2, 128)] {
            let n = n1 * n2;
            let t = NttTables::new(n, m).unwrap();
            let t1 = NttTables::new(n1, m).unwrap();
            let t2 = NttTables::new(n2, m).unwrap();
            let p = random_poly(n, m, &mut rng);
            let direct = ntt_forward(&p, &t).unwrap();
            assert_eq!(four_step_ntt(&p, &t1, &t2).unwrap(), direct);
            assert_eq!(
                four_step_ntt_with(&p, &t1, &t2, TwistMode::Precomputed).unwrap(),
                direct
            );
        }
        let t1 = NttTables::new(16, m).unwrap();
        let t2 = NttTables::new(8, m).unwrap();
        let p = random_poly(256, m, &mut rng);
        assert!(matches!(four_step_ntt(&p, &t1, &t2), Err(RingError::ShapeError(_))));
    }

    #[test]
    fn automorphism_coefficient_vs_evaluation() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let m = find_ntt_prime(30, 32).unwrap();
        let t = NttTables::new(16, m).unwrap();
        let p = random_poly(16, m, &mut rng);
        for r in [-3i64, 0, 1, 2, 5] {
            // substitution oracle: X^i -> X^(i·g) with X^N = -1
            let g = rotation_galois_element(r, 16);
            let mut expect = vec![0u64; 16];
            for (i, &c) in p.coeffs().iter().enumerate() {
                let e = (i as u64 * g) % 32;
                if e < 16 {
                    expect[e as usize] = m.add(expect[e as usize], c);
                } else {
                    expect[(e - 16) as usize] = m.sub(expect[(e - 16) as usize], c);
                }
            }
            let coef = automorphism(&p, r);
            assert_eq!(coef.coeffs(), expect.as_slice());
            let eval = automorphism(&ntt_forward(&p, &t).unwrap(), r);
            assert_eq!(ntt_inverse(&eval, &t).unwrap(), coef);
        }
        assert_eq!(automorphism(&p, 0), p);
        assert_eq!(automorphism(&automorphism(&p, 3), -3), p);
    }

    #[test]
    fn automorphism_is_ring_homomorphism() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let m = find_ntt_prime(30, 32).unwrap();
        let t = NttTables::new(16, m).unwrap();
        let a = random_poly(16, m, &mut rng);
        let b = random_poly(16, m, &mut rng);
        let ab = ntt_mul(&a, &b, &t).unwrap();
        for r in 1..4 {
            let lhs = automorphism(&ab, r);
            let rhs = ntt_mul(&automorphism(&a, r), &automorphism(&b, r), &t).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn monomial_rotation() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let m = find_ntt_prime(30, 64).unwrap();
        let p = random_poly(32, m, &mut rng);
        assert_eq!(monomial_rotate(&p, 0).unwrap(), p);
        assert_eq!(monomial_rotate(&p, 64).unwrap(), p);
        let one = RingPolynomial::constant(32, 1, m);
        let minus_one = RingPolynomial::constant(32, m.value() - 1, m);
        assert_eq!(monomial_rotate(&one, 32).unwrap(), minus_one);
        for r in [-70i64, -5, 1, 31, 33, 63] {
            let mut xr = vec![0u64; 32];
            let e = r.rem_euclid(64) as usize;
            if e < 32 {
                xr[e] = 1;
            } else {
                xr[e - 32] = m.value() - 1;
            }
            let expect = schoolbook(p.coeffs(), &xr, &m);
            let got = monomial_rotate(&p, r).unwrap();
            assert_eq!(got.coeffs(), expect.as_slice());
            assert_eq!(monomial_rotate(&got, -r).unwrap(), p);
        }
    }

    #[test]
    fn decomposition_edge_cases() {
        let m = find_ntt_prime(32, 128).unwrap();
        let zero = RingPolynomial::zero(64, m, Representation::Coefficient);
        for d in digit_decompose(&zero, 3, 8).unwrap() {
            assert!(d.is_zero());
        }
        assert!(matches!(
            digit_decompose(&zero, 5, 8),
            Err(RingError::DecompositionOverflow { .. })
        ));
        // exact multiples of the top weight decompose to a single digit
        let g = Gadget::new(m, 3, 8).unwrap();
        let top = g.weights()[0] as i128;
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let tops: Vec<i64> = (0..64).map(|_| rng.random_range(-100i64..100)).collect();
        let coeffs: Vec<i64> = tops.iter().map(|&d| (d as i128 * top) as i64).collect();
        let p = RingPolynomial::from_signed(&coeffs, m).unwrap();
        let digits = digit_decompose(&p, 3, 8).unwrap();
        assert_eq!(digits[0], RingPolynomial::from_signed(&tops, m).unwrap());
        assert!(digits[1].is_zero() && digits[2].is_zero());
    }
}
