use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use trinity_core::error::TfheError;
use trinity_core::polyring::{Representation, RingPolynomial};
use trinity_core::tfhe::*;

fn toy() -> TfheContext {
    TfheContext::new(TfheParams::toy()).unwrap()
}

fn random_poly(ctx: &TfheContext, rng: &mut ChaCha20Rng) -> RingPolynomial {
    let m = ctx.params().modulus;
    RingPolynomial::from_coeffs(
        (0..ctx.params().n_poly)
            .map(|_| rng.random_range(0..m.value()))
            .collect(),
        m,
    )
    .unwrap()
}

/// Negacyclic `p · X^(-r)` computed directly from coefficients.
fn rotate_oracle(p: &[u64], r: i64, q: u64) -> Vec<u64> {
    let n = p.len() as i64;
    let mut out = vec![0u64; p.len()];
    for (i, &c) in p.iter().enumerate() {
        let e = (i as i64 - r).rem_euclid(2 * n);
        if e < n {
            out[e as usize] = c;
        } else {
            out[(e - n) as usize] = (q - c) % q;
        }
    }
    out
}

fn dist(x: u64, y: u64, q: u64) -> u64 {
    let d = x.abs_diff(y);
    d.min(q - d)
}

#[test]
fn lwe_round_trip_four_bits() {
    let ctx = TfheContext::new(TfheParams::set_i().with_plaintext_bits(4)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(50);
    let key = ctx.gen_lwe_key(&mut rng);
    for m in 0..16 {
        for _ in 0..100 {
            let c = ctx.lwe_encrypt(m, &key, &mut rng);
            assert_eq!(ctx.lwe_decrypt(&c, &key), m);
        }
    }
    for _ in 0..100 {
        let (a, b) = (rng.random_range(0..16), rng.random_range(0..16));
        let s = ctx
            .lwe_encrypt(a, &key, &mut rng)
            .add(&ctx.lwe_encrypt(b, &key, &mut rng));
        assert_eq!(ctx.lwe_decrypt(&s, &key), a + b);
    }
}

#[test]
fn zero_noise_phase_is_exact() {
    let ctx = TfheContext::new(TfheParams::toy().with_noise(0.0, 0.0).with_plaintext_bits(3)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(51);
    let key = ctx.gen_lwe_key(&mut rng);
    for m in 0..8 {
        let c = ctx.lwe_encrypt(m, &key, &mut rng);
        assert_eq!(c.phase(&key), ctx.encode(m));
    }
}

#[test]
fn external_product_selects_by_bit() {
    let ctx = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(52);
    let key = ctx.gen_glwe_key(&mut rng);
    let q = ctx.params().q();
    let m = ctx.params().modulus;
    let zero = GlweCiphertext::zero(64, 1, m, Representation::Coefficient);
    let g1 = ctx.ggsw_encrypt(1, &key, &mut rng);
    let g0 = ctx.ggsw_encrypt(0, &key, &mut rng);
    assert_eq!(ctx.external_product(&zero, &g1).unwrap(), zero);

    let msg = random_poly(&ctx, &mut rng);
    let glwe = ctx.glwe_encrypt(&msg, &key, &mut rng).unwrap();
    let one = ctx.glwe_phase(&ctx.external_product(&glwe, &g1).unwrap(), &key);
    let nil = ctx.glwe_phase(&ctx.external_product(&glwe, &g0).unwrap(), &key);
    // digit noise is about 2^18 at these parameters
    let bound = q >> 10;
    for i in 0..64 {
        assert!(dist(one.coeffs()[i], msg.coeffs()[i], q) < bound);
        assert!(dist(nil.coeffs()[i], 0, q) < bound);
    }
}

#[test]
fn external_product_prime_choice_only_perturbs_noise() {
    // two different NTT primes near 2^32 give the same decoded plaintext
    let mut outs = Vec::new();
    for bits in [32u32, 31] {
        let mut p = TfheParams::toy().with_plaintext_bits(3);
        p.modulus = trinity_core::modmath::find_ntt_prime(bits, 128).unwrap();
        let ctx = TfheContext::new(p).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        let key = ctx.gen_glwe_key(&mut rng);
        let msgs: Vec<u64> = (0..64).map(|i| (i * 5) % 8).collect();
        let enc: Vec<u64> = msgs.iter().map(|&x| ctx.encode(x)).collect();
        let msg = RingPolynomial::from_coeffs(enc, ctx.params().modulus).unwrap();
        let glwe = ctx.glwe_encrypt(&msg, &key, &mut rng).unwrap();
        let g1 = ctx.ggsw_encrypt(1, &key, &mut rng);
        let ph = ctx.glwe_phase(&ctx.external_product(&glwe, &g1).unwrap(), &key);
        outs.push(ph.coeffs().iter().map(|&x| ctx.decode(x)).collect::<Vec<_>>());
        assert_eq!(outs.last().unwrap(), &msgs);
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn sample_extract_matches_glwe_phase() {
    let ctx = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(54);
    let key = ctx.gen_glwe_key(&mut rng);
    let lwe_key = key.extracted();
    let msg = random_poly(&ctx, &mut rng);
    let glwe = ctx.glwe_encrypt(&msg, &key, &mut rng).unwrap();
    let ph = ctx.glwe_phase(&glwe, &key);
    for i in 0..64 {
        assert_eq!(ctx.sample_extract(&glwe, i).unwrap().phase(&lwe_key), ph.coeffs()[i]);
    }
    let triv = GlweCiphertext::trivial(msg.clone(), 1);
    for i in [0, 17, 63] {
        assert_eq!(ctx.sample_extract(&triv, i).unwrap().b, msg.coeffs()[i]);
    }
    let zero = GlweCiphertext::zero(64, 1, ctx.params().modulus, Representation::Coefficient);
    assert_eq!(ctx.sample_extract(&zero, 5).unwrap().phase(&lwe_key), 0);
    assert!(matches!(
        ctx.sample_extract(&glwe, 64),
        Err(TfheError::IndexOutOfRange { index: 64, n: 64 })
    ));
}

#[test]
fn blind_rotation_phase_identity_noiseless() {
    let ctx = TfheContext::new(TfheParams::toy().with_noise(0.0, 0.0)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(55);
    let keys = ctx.keygen(&mut rng);
    let q = ctx.params().q();
    let tv_poly = random_poly(&ctx, &mut rng);
    let tv = GlweCiphertext::trivial(tv_poly.clone(), 1);
    for _ in 0..20 {
        let c = SwitchedLwe {
            a: (0..4).map(|_| rng.random_range(0..128)).collect(),
            b: rng.random_range(0..128),
            two_n: 128,
        };
        let phi = c.phase(&keys.lwe) as i64;
        let acc = ctx.blind_rotate(&tv, &c, &keys.eval.bsk).unwrap();
        let got = ctx.glwe_phase(&acc, &keys.glwe);
        let want = rotate_oracle(tv_poly.coeffs(), phi, q);
        // noiseless keys: only gadget rounding remains, bounded by n_lwe·N·2^11
        for (g, w) in got.coeffs().iter().zip(&want) {
            assert!(dist(*g, *w, q) < 1 << 20);
        }
    }
    // ã = 0: every CMux is skipped, output is exactly ACC₀
    let c = SwitchedLwe {
        a: vec![0; 4],
        b: 9,
        two_n: 128,
    };
    let acc = ctx.blind_rotate(&tv, &c, &keys.eval.bsk).unwrap();
    assert_eq!(acc.body.coeffs(), rotate_oracle(tv_poly.coeffs(), 9, q).as_slice());
}

#[test]
fn blind_rotation_with_zero_keys_is_identity() {
    let ctx = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(56);
    let glwe = ctx.gen_glwe_key(&mut rng);
    let zero_key = LweSecretKey { bits: vec![0; 4] };
    let keys = ctx.gen_bootstrap_keys(&zero_key, &glwe, &mut rng);
    let q = ctx.params().q();
    let tv_poly = random_poly(&ctx, &mut rng);
    let tv = GlweCiphertext::trivial(tv_poly.clone(), 1);
    let c = SwitchedLwe {
        a: vec![3, 77, 1, 100],
        b: 5,
        two_n: 128,
    };
    let acc = ctx.glwe_phase(&ctx.blind_rotate(&tv, &c, &keys.bsk).unwrap(), &glwe);
    for (g, w) in acc.coeffs().iter().zip(rotate_oracle(tv_poly.coeffs(), 5, q)) {
        assert!(dist(*g, w, q) < q >> 8);
    }
}

#[test]
fn keyswitch_preserves_phase() {
    let ctx = TfheContext::new(TfheParams::set_i()).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(57);
    let lwe = ctx.gen_lwe_key(&mut rng);
    let glwe = ctx.gen_glwe_key(&mut rng);
    let src = glwe.extracted();
    let ksk = ctx.gen_ksk(&src, &lwe, &mut rng);
    let q = ctx.params().q();
    let zero_mask = LweCiphertext::trivial(1024, 12345, ctx.params().modulus);
    let out = ctx.keyswitch(&zero_mask, &ksk).unwrap();
    assert!(out.a.iter().all(|&x| x == 0) && out.b == 12345);
    for _ in 0..100 {
        let ph = rng.random_range(0..q);
        let c = ctx.lwe_encrypt_phase(ph, &src, 0.0, &mut rng);
        let out = ctx.keyswitch(&c, &ksk).unwrap();
        assert!(dist(out.phase(&lwe), ph, q) < q / 64);
    }
    // carry-free masks (every digit non-negative and small) make key switching additive
    let w = (q as f64 / 65536.0).round() as u64;
    let mk = |rng: &mut ChaCha20Rng| LweCiphertext {
        a: (0..1024).map(|_| rng.random_range(0..4u64) * w * 4369).collect(),
        b: rng.random_range(0..q),
        modulus: ctx.params().modulus,
    };
    let (c1, c2) = (mk(&mut rng), mk(&mut rng));
    let lhs = ctx.keyswitch(&c1.add(&c2), &ksk).unwrap();
    let rhs = ctx
        .keyswitch(&c1, &ksk)
        .unwrap()
        .add(&ctx.keyswitch(&c2, &ksk).unwrap());
    assert_eq!(lhs, rhs);
    assert!(ctx
        .keyswitch(&LweCiphertext::zero(5, ctx.params().modulus), &ksk)
        .is_err());
}

#[test]
fn pbs_constant_and_identity_toy() {
    let ctx = TfheContext::new(TfheParams::toy().with_plaintext_bits(2)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(58);
    let keys = ctx.keygen(&mut rng);
    let constant = ctx.build_test_vector(&Lut::Padded(vec![2; 4])).unwrap();
    let ident = ctx.build_test_vector(&Lut::identity(2)).unwrap();
    let square = ctx.build_test_vector(&Lut::Padded(vec![0, 1, 0, 1])).unwrap();
    for m in 0..4 {
        for _ in 0..10 {
            let c = ctx.lwe_encrypt(m, &keys.lwe, &mut rng);
            assert_eq!(
                ctx.lwe_decrypt(&ctx.pbs(&c, &constant, &keys.eval).unwrap(), &keys.lwe),
                2
            );
            assert_eq!(ctx.lwe_decrypt(&ctx.pbs(&c, &ident, &keys.eval).unwrap(), &keys.lwe), m);
            assert_eq!(
                ctx.lwe_decrypt(&ctx.pbs(&c, &square, &keys.eval).unwrap(), &keys.lwe),
                m % 2
            );
        }
    }
}

#[test]
fn pbs_window_alignment_noiseless() {
    let ctx = TfheContext::new(TfheParams::toy().with_noise(0.0, 0.0).with_plaintext_bits(2)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(59);
    let keys = ctx.keygen(&mut rng);
    let lut = vec![3, 0, 2, 1];
    let tv = ctx.build_test_vector(&Lut::Padded(lut.clone())).unwrap();
    for m in 0..4u64 {
        let c = ctx.lwe_encrypt(m, &keys.lwe, &mut rng);
        let out = ctx.pbs(&c, &tv, &keys.eval).unwrap();
        let want = ctx.encode(lut[m as usize]);
        assert!(dist(out.phase(&keys.lwe), want, ctx.params().q()) < ctx.params().q() >> 10);
    }
}

#[test]
fn boolean_pbs_and_nand_toy() {
    let ctx = toy();
    let mut rng = ChaCha20Rng::seed_from_u64(60);
    let keys = ctx.keygen(&mut rng);
    let ident = ctx.build_test_vector(&Lut::Boolean([false, true])).unwrap();
    let not = ctx.build_test_vector(&Lut::Boolean([true, false])).unwrap();
    for bit in [false, true] {
        let c = ctx.lwe_encrypt_bool(bit, &keys.lwe, &mut rng);
        assert_eq!(
            ctx.lwe_decrypt_bool(&ctx.pbs(&c, &ident, &keys.eval).unwrap(), &keys.lwe),
            bit
        );
        assert_eq!(
            ctx.lwe_decrypt_bool(&ctx.pbs(&c, &not, &keys.eval).unwrap(), &keys.lwe),
            !bit
        );
        for other in [false, true] {
            let d = ctx.lwe_encrypt_bool(other, &keys.lwe, &mut rng);
            let out = ctx.nand(&c, &d, &keys.eval).unwrap();
            assert_eq!(ctx.lwe_decrypt_bool(&out, &keys.lwe), !(bit && other));
        }
    }
}
