//! Word-sized modular arithmetic, NTT-friendly prime search and RNS/CRT helpers.
//!
//! Every modulus handled here is a prime of at most 36 bits, so residues fit in a
//! `u64` and products fit comfortably in a `u128`. Reduction uses a Barrett
//! constant sized to the modulus bit length; multiplications by fixed
//! operands (twiddles, key constants) can use the Shoup form instead.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::ModMathError;

pub type Residue = u64;

/// Largest supported modulus width (the accelerator word size).
pub const MAX_MODULUS_BITS: u32 = 36;

/// Number of `c * two_n + 1` candidates inspected before giving up.
pub const PRIME_SEARCH_WINDOW: u64 = 1 << 22;

const ROOT_SEARCH_SEED: u64 = 0x7472_696e_6974_7921;

/// A prime modulus `value ≡ 1 (mod two_n)` with a primitive `two_n`-th root of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    value: u64,
    two_n: u64,
    primitive_root: u64,
    bits: u32,
    barrett_mu: u128,
    r64: u64,
}

impl Modulus {
    /// Validates `value` and derives a primitive `two_n`-th root deterministically.
    pub fn new(value: u64, two_n: u64) -> Result<Self, ModMathError> {
        if !(3..(1u64 << MAX_MODULUS_BITS) + 1).contains(&value) {
            return Err(ModMathError::InvalidModulus(value));
        }
        if !two_n.is_power_of_two() || two_n < 2 {
            return Err(ModMathError::InvalidArgument(format!(
                "two_n = {two_n} is not a power of two"
            )));
        }
        if !is_prime(value) || !(value - 1).is_multiple_of(two_n) {
            return Err(ModMathError::InvalidModulus(value));
        }
        let bits = 64 - value.leading_zeros();
        let barrett_mu = (1u128 << (2 * bits)) / value as u128;
        let mut m = Self {
            value,
            two_n,
            primitive_root: 0,
            bits,
            barrett_mu,
            r64: (u64::MAX % value + 1) % value,
        };
        m.primitive_root = m.find_primitive_root()?;
        Ok(m)
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn two_n(&self) -> u64 {
        self.two_n
    }

    #[inline]
    pub fn primitive_root(&self) -> u64 {
        self.primitive_root
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn find_primitive_root(&self) -> Result<u64, ModMathError> {
        let q = self.value;
        let exp = (q - 1) / self.two_n;
        let mut rng = ChaCha20Rng::seed_from_u64(ROOT_SEARCH_SEED ^ q);
        for _ in 0..4096 {
            let g = rng.random_range(2..q);
            let w = self.pow(g, exp);
            // order exactly two_n  <=>  w^(two_n/2) = -1
            if self.pow(w, self.two_n / 2) == q - 1 {
                return Ok(w);
            }
        }
        Err(ModMathError::SearchExhausted(format!(
            "no primitive {}-th root found mod {q}",
            self.two_n
        )))
    }

    /// A primitive root of unity of the given power-of-two order dividing `two_n`.
    pub fn root_of_unity(&self, order: u64) -> Result<u64, ModMathError> {
        if !order.is_power_of_two() || order > self.two_n {
            return Err(ModMathError::InvalidArgument(format!(
                "order {order} does not divide {}",
                self.two_n
            )));
        }
        Ok(self.pow(self.primitive_root, self.two_n / order))
    }

    /// Barrett reduction of a product of two residues (`x < value^2`).
    #[inline(always)]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let k = self.bits;
        let qh = ((x >> (k - 1)) * self.barrett_mu) >> (k + 1);
        let mut r = (x - qh * self.value as u128) as u64;
        while r >= self.value {
            r -= self.value;
        }
        r
    }

    /// Reduces an arbitrary `u128`, such as a sum of many residue products.
    #[inline]
    pub fn reduce_wide(&self, x: u128) -> u64 {
        let hi = self.reduce((x >> 64) as u64);
        let lo = self.reduce(x as u64);
        self.add(self.mul(hi, self.r64), lo)
    }

    /// Reduces an arbitrary `u64`.
    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x < self.value {
            x
        } else {
            x % self.value
        }
    }

    /// Reduces a signed integer into `[0, value)`.
    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.value as i64);
        r as u64
    }

    #[inline]
    pub fn reduce_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.value as i128) as u64
    }

    /// Centered lift into `(-value/2, value/2]`.
    #[inline]
    pub fn center(&self, x: u64) -> i64 {
        if x > self.value / 2 {
            x as i64 - self.value as i64
        } else {
            x as i64
        }
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.value && b < self.value);
        self.reduce_u128(a as u128 * b as u128)
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        let mut b = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u64) -> Result<u64, ModMathError> {
        mod_inv(a, self)
    }

    /// Precomputes `floor(w * 2^64 / value)` for [`Modulus::mul_shoup`].
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// Like [`Modulus::mul_shoup`] but leaves the result in `[0, 2·value)`.
    #[inline(always)]
    pub fn mul_shoup_lazy(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let qh = ((a as u128 * w_shoup as u128) >> 64) as u64;
        a.wrapping_mul(w).wrapping_sub(qh.wrapping_mul(self.value))
    }

    /// `a * w mod value` given `w_shoup = self.shoup(w)`; `a` may be any `u64`.
    #[inline(always)]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let qh = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(qh.wrapping_mul(self.value));
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }
}

/// `(a * b) mod m`, exact for 36-bit moduli.
#[inline]
pub fn mod_mul(a: Residue, b: Residue, m: &Modulus) -> Residue {
    m.mul(a, b)
}

/// Modular inverse via the extended Euclidean algorithm.
pub fn mod_inv(a: Residue, m: &Modulus) -> Result<Residue, ModMathError> {
    let a = m.reduce(a);
    if a == 0 {
        return Err(ModMathError::NoInverse {
            value: a,
            modulus: m.value(),
        });
    }
    let (mut old_r, mut r) = (a as i128, m.value() as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(ModMathError::NoInverse {
            value: a,
            modulus: m.value(),
        });
    }
    Ok(m.reduce_i128(old_s))
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The prime `p ≡ 1 (mod two_n)` closest to `2^bit_target` that still fits in
/// `bit_target` bits.
pub fn find_ntt_prime(bit_target: u32, two_n: u64) -> Result<Modulus, ModMathError> {
    let mut primes = NttPrimeIter::new(bit_target, two_n)?;
    primes
        .next()
        .ok_or_else(|| ModMathError::SearchExhausted(format!("bits={bit_target}, 2N={two_n}")))?
}

/// Walks the NTT-friendly primes below `2^bit_target` in order of decreasing value.
pub struct NttPrimeIter {
    two_n: u64,
    next_candidate: Option<u64>,
    inspected: u64,
}

impl NttPrimeIter {
    pub fn new(bit_target: u32, two_n: u64) -> Result<Self, ModMathError> {
        if !(2..=MAX_MODULUS_BITS).contains(&bit_target) {
            return Err(ModMathError::InvalidArgument(format!(
                "bit target {bit_target} outside [2, {MAX_MODULUS_BITS}]"
            )));
        }
        if !two_n.is_power_of_two() || two_n < 2 {
            return Err(ModMathError::InvalidArgument(format!(
                "two_n = {two_n} is not a power of two"
            )));
        }
        let top = (1u64 << bit_target) - 1;
        let next_candidate = if top > two_n {
            Some((top - 1) / two_n * two_n + 1)
        } else {
            None
        };
        Ok(Self {
            two_n,
            next_candidate,
            inspected: 0,
        })
    }
}

impl Iterator for NttPrimeIter {
    type Item = Result<Modulus, ModMathError>;

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(c) = self.next_candidate {
            if self.inspected >= PRIME_SEARCH_WINDOW {
                self.next_candidate = None;
                return Some(Err(ModMathError::SearchExhausted(format!(
                    "window of {PRIME_SEARCH_WINDOW} candidates exhausted (2N={})",
                    self.two_n
                ))));
            }
            self.inspected += 1;
            self.next_candidate = c.checked_sub(self.two_n).filter(|&x| x > 2);
            if is_prime(c) {
                return Some(Modulus::new(c, self.two_n));
            }
        }
        None
    }
}

/// `count` distinct NTT-friendly primes, largest first, skipping any in `exclude`.
pub fn ntt_primes(
    bit_target: u32,
    two_n: u64,
    count: usize,
    exclude: &[Modulus],
) -> Result<Vec<Modulus>, ModMathError> {
    let mut out = Vec::with_capacity(count);
    for m in NttPrimeIter::new(bit_target, two_n)? {
        let m = m?;
        if exclude.iter().any(|e| e.value() == m.value()) {
            continue;
        }
        out.push(m);
        if out.len() == count {
            return Ok(out);
        }
    }
    Err(ModMathError::SearchExhausted(format!(
        "only {} of {count} primes of {bit_target} bits with 2N={two_n}",
        out.len()
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulusRole {
    /// One of the `q_i` composing the ciphertext modulus.
    Ciphertext,
    /// One of the special primes `p_i` used during key switching.
    Special,
}

/// An ordered set of pairwise distinct primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsBasis {
    moduli: Vec<Modulus>,
    roles: Vec<ModulusRole>,
}

impl RnsBasis {
    pub fn new(moduli: Vec<Modulus>, role: ModulusRole) -> Result<Self, ModMathError> {
        let roles = vec![role; moduli.len()];
        Self::with_roles(moduli, roles)
    }

    pub fn with_roles(moduli: Vec<Modulus>, roles: Vec<ModulusRole>) -> Result<Self, ModMathError> {
        if moduli.len() != roles.len() {
            return Err(ModMathError::BasisMismatch {
                expected: moduli.len(),
                got: roles.len(),
            });
        }
        for (i, a) in moduli.iter().enumerate() {
            if moduli[..i].iter().any(|b| b.value() == a.value()) {
                return Err(ModMathError::InvalidArgument(format!(
                    "modulus {} repeated in basis",
                    a.value()
                )));
            }
        }
        Ok(Self { moduli, roles })
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn roles(&self) -> &[ModulusRole] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// Concatenation of two bases (e.g. `C_l ∪ P`).
    pub fn extend(&self, other: &RnsBasis) -> Result<RnsBasis, ModMathError> {
        let mut moduli = self.moduli.clone();
        moduli.extend_from_slice(&other.moduli);
        let mut roles = self.roles.clone();
        roles.extend_from_slice(&other.roles);
        Self::with_roles(moduli, roles)
    }

    /// The first `count` moduli.
    pub fn prefix(&self, count: usize) -> RnsBasis {
        Self {
            moduli: self.moduli[..count].to_vec(),
            roles: self.roles[..count].to_vec(),
        }
    }

    pub fn product(&self) -> BigUint {
        self.moduli.iter().fold(BigUint::one(), |acc, m| acc * m.value())
    }

    /// Residues of an arbitrary-precision integer.
    pub fn reduce(&self, x: &BigInt) -> Vec<Residue> {
        self.moduli
            .iter()
            .map(|m| {
                let r = x % BigInt::from(m.value());
                let r = if r.is_negative() { r + m.value() } else { r };
                r.to_u64_digits().1.first().copied().unwrap_or(0)
            })
            .collect()
    }

    /// Unique `x ∈ [0, ∏ moduli)` with the given residues.
    pub fn crt_reconstruct(&self, residues: &[Residue]) -> Result<BigUint, ModMathError> {
        if residues.len() != self.moduli.len() {
            return Err(ModMathError::BasisMismatch {
                expected: self.moduli.len(),
                got: residues.len(),
            });
        }
        let product = self.product();
        let mut acc = BigUint::zero();
        for (m, &r) in self.moduli.iter().zip(residues) {
            if r >= m.value() {
                return Err(ModMathError::InvalidArgument(format!(
                    "residue {r} not reduced mod {}",
                    m.value()
                )));
            }
            let hat = &product / m.value();
            let hat_mod = (&hat % m.value()).to_u64_digits().first().copied().unwrap_or(0);
            let coeff = m.mul(r, m.inv(hat_mod)?);
            acc += hat * coeff;
        }
        Ok(acc % product)
    }

    /// Centered reconstruction in `[-∏/2, ∏/2)`.
    pub fn crt_reconstruct_centered(&self, residues: &[Residue]) -> Result<BigInt, ModMathError> {
        let x = self.crt_reconstruct(residues)?;
        let product = self.product();
        let x = BigInt::from(x);
        let product = BigInt::from(product);
        if &x * 2 >= product {
            Ok(x - product)
        } else {
            Ok(x)
        }
    }
}

/// `crt_reconstruct` as a free function.
pub fn crt_reconstruct(residues: &[Residue], basis: &RnsBasis) -> Result<BigUint, ModMathError> {
    basis.crt_reconstruct(residues)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m17() -> Modulus {
        Modulus::new(17, 8).unwrap()
    }

    #[test]
    fn trivial_mod_mul() {
        assert_eq!(mod_mul(0, 5, &m17()), 0);
        assert_eq!(mod_mul(1, 13, &m17()), 13);
    }

    #[test]
    fn mod_mul_matches_bigint_on_36_bit_operands() {
        let m = find_ntt_prime(36, 1 << 17).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20_000 {
            let a = rng.random_range(0..m.value());
            let b = rng.random_range(0..m.value());
            let expect = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(m.value());
            assert_eq!(BigUint::from(mod_mul(a, b, &m)), expect);
        }
        // extremes
        let top = m.value() - 1;
        assert_eq!(mod_mul(top, top, &m), 1);
    }

    #[test]
    fn shoup_agrees_with_barrett() {
        let m = find_ntt_prime(36, 1 << 14).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let a = rng.random_range(0..m.value());
            let w = rng.random_range(0..m.value());
            assert_eq!(m.mul_shoup(a, w, m.shoup(w)), m.mul(a, w));
        }
    }

    #[test]
    fn inverse_small_cases() {
        assert_eq!(mod_inv(1, &m17()).unwrap(), 1);
        assert_eq!(mod_inv(2, &m17()).unwrap(), 9);
        assert!(matches!(mod_inv(0, &m17()), Err(ModMathError::NoInverse { .. })));
    }

    #[test]
    fn inverse_random() {
        let m = find_ntt_prime(33, 1 << 12).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = rng.random_range(1..m.value());
            assert_eq!(m.mul(a, mod_inv(a, &m).unwrap()), 1);
        }
    }

    /// Brute-force enumeration: every `c * two_n + 1` below `2^bits`, trial division.
    fn oracle_prime(bits: u32, two_n: u64) -> u64 {
        let trial = |n: u64| n > 1 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        let mut c = ((1u64 << bits) - 2) / two_n;
        loop {
            let p = c * two_n + 1;
            if trial(p) {
                return p;
            }
            c -= 1;
        }
    }

    #[test]
    fn find_prime_small() {
        let m = find_ntt_prime(5, 8).unwrap();
        assert_eq!(m.value(), 17);
        assert_eq!(oracle_prime(5, 8), 17);
    }

    #[test]
    fn find_prime_matches_enumeration() {
        for (bits, two_n) in [(20u32, 64u64), (32, 2048), (36, 1 << 17), (30, 1 << 14)] {
            let m = find_ntt_prime(bits, two_n).unwrap();
            assert_eq!(m.value(), oracle_prime(bits, two_n), "bits={bits}");
            assert_eq!(m.value() % two_n, 1);
            assert!(m.value() < 1u64 << bits);
        }
    }

    #[test]
    fn frozen_default_primes() {
        // frozen from the enumeration oracle above
        assert_eq!(find_ntt_prime(32, 2048).unwrap().value(), 4_294_957_057);
        assert_eq!(find_ntt_prime(36, 131_072).unwrap().value(), 68_718_428_161);
    }

    #[test]
    fn root_has_exact_order() {
        for (bits, two_n) in [(5u32, 8u64), (32, 2048), (36, 1 << 17)] {
            let m = find_ntt_prime(bits, two_n).unwrap();
            let w = m.primitive_root();
            assert_eq!(m.pow(w, two_n), 1);
            let mut k = two_n / 2;
            while k >= 1 {
                assert_ne!(m.pow(w, k), 1, "order divides {k}");
                k /= 2;
            }
            assert_eq!(m.pow(w, two_n / 2), m.value() - 1);
        }
    }

    #[test]
    fn search_exhausted_when_no_room() {
        assert!(find_ntt_prime(4, 64).is_err());
        assert!(find_ntt_prime(40, 64).is_err());
    }

    #[test]
    fn primes_are_distinct_and_descending() {
        let ps = ntt_primes(36, 1 << 14, 8, &[]).unwrap();
        for w in ps.windows(2) {
            assert!(w[0].value() > w[1].value());
        }
        let more = ntt_primes(36, 1 << 14, 2, &ps[..4]).unwrap();
        assert_eq!(more[0].value(), ps[4].value());
    }

    #[test]
    fn crt_examples() {
        let b = RnsBasis::new(
            vec![Modulus::new(17, 8).unwrap(), Modulus::new(97, 32).unwrap()],
            ModulusRole::Ciphertext,
        )
        .unwrap();
        assert_eq!(b.crt_reconstruct(&[0, 0]).unwrap(), BigUint::zero());
        assert_eq!(
            b.crt_reconstruct(&[1234 % 17, 1234 % 97]).unwrap(),
            BigUint::from(1234u32)
        );
        assert!(matches!(
            b.crt_reconstruct(&[1]),
            Err(ModMathError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn crt_random_five_moduli() {
        let b = RnsBasis::new(ntt_primes(36, 1 << 10, 5, &[]).unwrap(), ModulusRole::Ciphertext).unwrap();
        let prod = b.product();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..200 {
            let digits: Vec<u32> = (0..8).map(|_| rng.random()).collect();
            let x = BigUint::new(digits) % &prod;
            let r = b.reduce(&BigInt::from(x.clone()));
            assert_eq!(b.crt_reconstruct(&r).unwrap(), x);
        }
        let neg = BigInt::from(-123_456_789i64);
        assert_eq!(b.crt_reconstruct_centered(&b.reduce(&neg)).unwrap(), neg);
    }
}
