//! CKKS ↔ LWE conversion: coefficient extraction, ring embedding, LWE packing
//! and the field trace.
//!
//! Extracted LWE ciphertexts stay under the CKKS secret (as an `N`-dimensional
//! LWE key) and the level-0 modulus `q_0`, with phase convention `b − ⟨a, s⟩`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::ckks::{CkksContext, EvaluationKey, RlweCiphertext, RnsPolynomial, SecretKey};
use crate::error::{CkksError, ConvertError};
use crate::kernels::{self, Kernel};
use crate::modmath::Modulus;
use crate::polyring::{Representation, RingPolynomial};
use crate::tfhe::{LweCiphertext, LweSecretKey};

/// The LWE key under which [`ckks_to_lwes`] output decrypts.
pub fn lwe_key_from_ckks(sk: &SecretKey) -> LweSecretKey {
    LweSecretKey {
        bits: sk.coeffs().to_vec(),
    }
}

/// Galois elements `2^k + 1`, `k = 1..=log N`, used by packing and the trace.
pub fn conversion_galois_elements(n: usize) -> Vec<u64> {
    (1..=n.trailing_zeros()).map(|k| (1u64 << k) + 1).collect()
}

fn check_slots(n: usize, n_slot: usize) -> Result<(), ConvertError> {
    if n_slot > n {
        return Err(ConvertError::SlotOverflow { got: n_slot, n });
    }
    if n_slot == 0 || !n_slot.is_power_of_two() {
        return Err(ConvertError::ShapeError(format!(
            "n_slot = {n_slot} is not a power of two"
        )));
    }
    Ok(())
}

fn level0_modulus(ct: &RlweCiphertext) -> Result<Modulus, ConvertError> {
    if ct.level != 0 || ct.b.len() != 1 || ct.a.len() != 1 {
        return Err(ConvertError::NotSingleModulus(ct.level));
    }
    Ok(*ct.b.limbs()[0].modulus())
}

fn coeff_limb(ctx: &CkksContext, p: &RnsPolynomial) -> Vec<u64> {
    let mut p = p.clone();
    if p.rep() == Representation::Evaluation {
        ctx.to_coefficient(&mut p);
    }
    p.into_limbs().swap_remove(0).into_coeffs()
}

/// Extracts the `n_slot` coefficients at stride `N/n_slot` of a level-0
/// ciphertext; LWE `i` carries coefficient `i·N/n_slot`.
pub fn ckks_to_lwes(ctx: &CkksContext, ct: &RlweCiphertext, n_slot: usize) -> Result<Vec<LweCiphertext>, ConvertError> {
    let n = ctx.params().n();
    check_slots(n, n_slot)?;
    let m = level0_modulus(ct)?;
    let b = coeff_limb(ctx, &ct.b);
    let a = coeff_limb(ctx, &ct.a);
    let stride = n / n_slot;
    kernels::record(Kernel::SampleExtract, n_slot as u64);
    Ok((0..n_slot)
        .map(|t| {
            let i = t * stride;
            // b + (a·s)_i = b − Σ_j a'_j s_j
            let mask = (0..n)
                .map(|j| if j <= i { m.neg(a[i - j]) } else { a[n + i - j] })
                .collect();
            LweCiphertext {
                a: mask,
                b: b[i],
                modulus: m,
            }
        })
        .collect())
}

/// Embeds an `N`-dimensional LWE ciphertext as a level-0 RLWE ciphertext whose
/// constant coefficient carries the LWE phase.
pub fn ring_embed(ctx: &CkksContext, c: &LweCiphertext, scale: f64) -> Result<RlweCiphertext, ConvertError> {
    let n = ctx.params().n();
    if c.dim() != n {
        return Err(ConvertError::DimensionMismatch {
            expected: n,
            got: c.dim(),
        });
    }
    let m = c.modulus;
    let q0 = ctx.params().ciphertext_basis().moduli()[0];
    if m != q0 {
        return Err(CkksError::BasisMismatch(format!("LWE modulus {} is not q_0 = {}", m.value(), q0.value())).into());
    }
    let mut a = vec![0; n];
    a[0] = m.neg(c.a[0]);
    for j in 1..n {
        a[n - j] = c.a[j];
    }
    let mut bc = vec![0; n];
    bc[0] = c.b;
    let lift = |v: Vec<u64>| -> Result<RnsPolynomial, ConvertError> {
        let mut p = RnsPolynomial::new(vec![RingPolynomial::from_coeffs(v, m)?])?;
        ctx.to_evaluation(&mut p);
        Ok(p)
    };
    Ok(RlweCiphertext {
        b: lift(bc)?,
        a: lift(a)?,
        level: 0,
        scale,
    })
}

fn monomial(ctx: &CkksContext, level: usize, k: usize) -> RnsPolynomial {
    let n = ctx.params().n();
    let mut c = vec![0i64; n];
    c[k] = 1;
    let moduli = &ctx.params().ciphertext_basis().moduli()[..=level];
    let mut p = RnsPolynomial::from_signed(&c, moduli);
    ctx.to_evaluation(&mut p);
    p
}

fn mul_poly(ct: &RlweCiphertext, p: &RnsPolynomial) -> RlweCiphertext {
    RlweCiphertext {
        b: ct.b.pointwise_mul(p),
        a: ct.a.pointwise_mul(p),
        level: ct.level,
        scale: ct.scale,
    }
}

fn galois(
    ctx: &CkksContext,
    ct: &RlweCiphertext,
    g: u64,
    keys: &BTreeMap<u64, EvaluationKey>,
) -> Result<RlweCiphertext, ConvertError> {
    let key = keys.get(&g).ok_or(CkksError::KeyNotFound(g))?;
    Ok(ctx.apply_galois(ct, g, key)?)
}

/// Merges `2^ℓ` ciphertexts so that input `j`'s constant coefficient lands at
/// coefficient `j·N/2^ℓ`, multiplied by `2^ℓ`.
pub fn pack_lwes(
    ctx: &CkksContext,
    cts: &[RlweCiphertext],
    keys: &BTreeMap<u64, EvaluationKey>,
) -> Result<RlweCiphertext, ConvertError> {
    let count = cts.len();
    if count == 0 || !count.is_power_of_two() {
        return Err(ConvertError::ShapeError(format!(
            "{count} ciphertexts is not a power of two"
        )));
    }
    let n = ctx.params().n();
    check_slots(n, count)?;
    if count == 1 {
        return Ok(cts[0].clone());
    }
    let even: Vec<RlweCiphertext> = cts.iter().step_by(2).cloned().collect();
    let odd: Vec<RlweCiphertext> = cts.iter().skip(1).step_by(2).cloned().collect();
    let ct_even = pack_lwes(ctx, &even, keys)?;
    let ct_odd = pack_lwes(ctx, &odd, keys)?;
    let shifted = mul_poly(&ct_odd, &monomial(ctx, ct_odd.level, n / count));
    let sum = ctx.hadd(&ct_even, &shifted)?;
    let diff = ctx.hsub(&ct_even, &shifted)?;
    let rotated = galois(ctx, &diff, count as u64 + 1, keys)?;
    Ok(ctx.hadd(&sum, &rotated)?)
}

/// `log(N/n_slot)` rounds of `ct ← ct + σ_{2^k+1}(ct)`; keeps the stride
/// `N/n_slot` coefficients (times `N/n_slot`) and annihilates the rest.
pub fn field_trace(
    ctx: &CkksContext,
    ct: &RlweCiphertext,
    n_slot: usize,
    keys: &BTreeMap<u64, EvaluationKey>,
) -> Result<RlweCiphertext, ConvertError> {
    let n = ctx.params().n();
    check_slots(n, n_slot)?;
    let mut ct = ct.clone();
    let mut k = n.trailing_zeros();
    while k > n_slot.trailing_zeros() {
        let rotated = galois(ctx, &ct, (1u64 << k) + 1, keys)?;
        ct = ctx.hadd(&ct, &rotated)?;
        k -= 1;
    }
    Ok(ct)
}

/// Maps a level-0 ciphertext mod `q_0` to level 1 by multiplying with `q_1`;
/// the phase becomes `q_1·x mod q_0·q_1`.
fn raise_by_q1(ctx: &CkksContext, ct: &RlweCiphertext) -> Result<RlweCiphertext, ConvertError> {
    let moduli = ctx.params().ciphertext_basis().moduli();
    let (q0, q1) = (moduli[0], moduli[1]);
    let w = q0.reduce(q1.value());
    let lift = |p: &RnsPolynomial| -> Result<RnsPolynomial, ConvertError> {
        let low = p.limbs()[0].scalar_mul(w);
        let high = RingPolynomial::zero(p.n(), q1, low.rep());
        Ok(RnsPolynomial::new(vec![low, high])?)
    };
    Ok(RlweCiphertext {
        b: lift(&ct.b)?,
        a: lift(&ct.a)?,
        level: 1,
        scale: ct.scale * q1.value() as f64,
    })
}

/// Ring embedding, packing and trace. Each input is pre-multiplied by `N^-1`
/// so that the result's stride coefficients equal the input phases. When a
/// second modulus exists, packing runs one level up (inputs scaled by `q_1`)
/// and a final rescale divides the accumulated key-switching noise by `q_1`.
pub fn lwes_to_ckks(
    ctx: &CkksContext,
    cts: &[LweCiphertext],
    keys: &BTreeMap<u64, EvaluationKey>,
    scale: f64,
) -> Result<RlweCiphertext, ConvertError> {
    let n = ctx.params().n();
    check_slots(n, cts.len())?;
    let raise = ctx.params().levels() >= 1;
    let embedded = cts
        .iter()
        .map(|c| {
            let m = c.modulus;
            let n_inv = m.inv(m.reduce(n as u64)).map_err(CkksError::from)?;
            let pre = LweCiphertext {
                a: c.a.iter().map(|&x| m.mul(x, n_inv)).collect(),
                b: m.mul(c.b, n_inv),
                modulus: m,
            };
            let ct = ring_embed(ctx, &pre, scale)?;
            if raise {
                raise_by_q1(ctx, &ct)
            } else {
                Ok(ct)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let packed = pack_lwes(ctx, &embedded, keys)?;
    let traced = field_trace(ctx, &packed, cts.len(), keys)?;
    if raise {
        let mut out = ctx.rescale(&traced)?;
        out.scale = scale;
        Ok(out)
    } else {
        Ok(traced)
    }
}

/// A CKKS context bundled with the Galois keys conversion needs.
#[derive(Debug)]
pub struct ConversionContext {
    ckks: CkksContext,
    n_slot: usize,
    keys: BTreeMap<u64, EvaluationKey>,
}

impl ConversionContext {
    pub fn new<R: Rng + ?Sized>(
        ckks: CkksContext,
        n_slot: usize,
        sk: &SecretKey,
        rng: &mut R,
    ) -> Result<Self, ConvertError> {
        let n = ckks.params().n();
        check_slots(n, n_slot)?;
        let keys = conversion_galois_elements(n)
            .into_iter()
            .map(|g| (g, ckks.gen_galois_key(g, sk, rng)))
            .collect();
        Ok(Self { ckks, n_slot, keys })
    }

    pub fn ckks(&self) -> &CkksContext {
        &self.ckks
    }

    pub fn n_slot(&self) -> usize {
        self.n_slot
    }

    pub fn keys(&self) -> &BTreeMap<u64, EvaluationKey> {
        &self.keys
    }

    pub fn to_lwes(&self, ct: &RlweCiphertext) -> Result<Vec<LweCiphertext>, ConvertError> {
        ckks_to_lwes(&self.ckks, ct, self.n_slot)
    }

    pub fn to_ckks(&self, cts: &[LweCiphertext], scale: f64) -> Result<RlweCiphertext, ConvertError> {
        if cts.len() != self.n_slot {
            return Err(ConvertError::ShapeError(format!(
                "expected {} ciphertexts, got {}",
                self.n_slot,
                cts.len()
            )));
        }
        lwes_to_ckks(&self.ckks, cts, &self.keys, scale)
    }

    /// `lwes_to_ckks(ckks_to_lwes(ct))`.
    pub fn round_trip(&self, ct: &RlweCiphertext) -> Result<RlweCiphertext, ConvertError> {
        let lwes = self.to_lwes(ct)?;
        self.to_ckks(&lwes, ct.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckks::CkksParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn galois_elements_cover_all_levels() {
        assert_eq!(conversion_galois_elements(16), vec![3, 5, 9, 17]);
    }

    #[test]
    fn extract_then_embed_is_adjoint() {
        let ctx = CkksContext::new(CkksParams::new(16, 1, 1, 30).unwrap()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let sk = ctx.gen_secret(&mut rng);
        let lk = lwe_key_from_ckks(&sk);
        let pt = ctx.encode_coeffs(&[0.5; 16], 0, 1024.0).unwrap();
        let ct = ctx.encrypt_sk(&pt, &sk, &mut rng).unwrap();
        for c in ckks_to_lwes(&ctx, &ct, 16).unwrap() {
            let back = ring_embed(&ctx, &c, 1.0).unwrap();
            let again = ckks_to_lwes(&ctx, &back, 1).unwrap();
            assert_eq!(again[0].phase(&lk), c.phase(&lk));
        }
    }
}
