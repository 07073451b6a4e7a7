use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trinity_core::ckks::{CkksContext, CkksParams, EvaluationKey, Plaintext, RlweCiphertext, SecretKey};
use trinity_core::error::SerialError;
use trinity_core::polyring::RingPolynomial;
use trinity_core::serial::*;
use trinity_core::tfhe::*;

fn ckks() -> CkksContext {
    CkksContext::new(CkksParams::new(32, 2, 1, 30).unwrap()).unwrap()
}

#[test]
fn ckks_types_round_trip() {
    let ctx = ckks();
    let h = ctx.params().hash();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let keys = ctx.keygen(&mut rng, &[1]);
    let pt = ctx.encode_real(&[0.25, -3.0], 2, 2f64.powi(30)).unwrap();
    let ct = ctx.encrypt_sk(&pt, &keys.secret, &mut rng).unwrap();

    let bytes = ct.to_bytes(h);
    assert_eq!(&bytes[..4], b"TRFH");
    assert_eq!(RlweCiphertext::from_bytes(&bytes, Some(h)).unwrap(), ct);
    assert_eq!(Plaintext::from_bytes(&pt.to_bytes(h), Some(h)).unwrap(), pt);
    assert_eq!(
        SecretKey::from_bytes(&keys.secret.to_bytes(h), Some(h)).unwrap(),
        keys.secret
    );
    assert_eq!(
        EvaluationKey::from_bytes(&keys.relin.to_bytes(h), Some(h)).unwrap(),
        keys.relin
    );

    let low = ctx.rescale(&ct).unwrap();
    let back = RlweCiphertext::from_bytes(&low.to_bytes(h), None).unwrap();
    assert_eq!(back.level, 1);
    assert_eq!(back.scale, low.scale);
}

#[test]
fn tfhe_types_round_trip() {
    let ctx = TfheContext::new(TfheParams::toy()).unwrap();
    let h = ctx.params().hash();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let lwe_key = ctx.gen_lwe_key(&mut rng);
    let glwe_key = ctx.gen_glwe_key(&mut rng);
    let c = ctx.lwe_encrypt(1, &lwe_key, &mut rng);
    assert_eq!(LweCiphertext::from_bytes(&c.to_bytes(h), Some(h)).unwrap(), c);
    assert_eq!(
        LweSecretKey::from_bytes(&lwe_key.to_bytes(h), Some(h)).unwrap(),
        lwe_key
    );
    assert_eq!(
        GlweSecretKey::from_bytes(&glwe_key.to_bytes(h), Some(h)).unwrap(),
        glwe_key
    );

    let msg = RingPolynomial::from_signed(&[5; 64], ctx.params().modulus).unwrap();
    let g = ctx.glwe_encrypt(&msg, &glwe_key, &mut rng).unwrap();
    assert_eq!(GlweCiphertext::from_bytes(&g.to_bytes(h), Some(h)).unwrap(), g);
    let gg = ctx.ggsw_encrypt(1, &glwe_key, &mut rng);
    assert_eq!(GgswCiphertext::from_bytes(&gg.to_bytes(h), Some(h)).unwrap(), gg);
}

#[test]
fn header_checks() {
    let ctx = TfheContext::new(TfheParams::toy()).unwrap();
    let h = ctx.params().hash();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let key = ctx.gen_lwe_key(&mut rng);
    let bytes = ctx.lwe_encrypt(0, &key, &mut rng).to_bytes(h);

    assert!(matches!(
        LweSecretKey::from_bytes(&bytes, None),
        Err(SerialError::WrongType { expected: 19, got: 16 })
    ));
    assert!(matches!(
        LweCiphertext::from_bytes(&bytes, Some([0; 32])),
        Err(SerialError::ParamsMismatch)
    ));
    assert!(matches!(
        LweCiphertext::from_bytes(&bytes[..bytes.len() - 3], None),
        Err(SerialError::Truncated)
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        LweCiphertext::from_bytes(&bad, None),
        Err(SerialError::BadMagic)
    ));
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(
        LweCiphertext::from_bytes(&bad, None),
        Err(SerialError::UnsupportedVersion(9))
    ));
    let mut bad = bytes.clone();
    bad.push(0);
    assert!(matches!(
        LweCiphertext::from_bytes(&bad, None),
        Err(SerialError::Malformed(_))
    ));
    // residue ≥ q in the last slot
    let mut bad = bytes;
    let n = bad.len();
    bad[n - 8..].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(
        LweCiphertext::from_bytes(&bad, None),
        Err(SerialError::Malformed(_))
    ));
}

#[test]
fn layout_is_little_endian() {
    let c = Container {
        tag: 16,
        params_hash: [7; 32],
        level: 3,
        scale: 1.5,
        group: 1,
        arrays: vec![],
    };
    let b = c.to_bytes();
    assert_eq!(b.len(), 4 + 2 + 2 + 32 + 4 + 8 + 4 + 4);
    assert_eq!(&b[4..6], &[1, 0]);
    assert_eq!(&b[6..8], &[16, 0]);
    assert_eq!(&b[40..44], &[3, 0, 0, 0]);
    assert_eq!(&b[44..52], &1.5f64.to_le_bytes());
    assert_eq!(Container::from_bytes(&b).unwrap(), c);
}
