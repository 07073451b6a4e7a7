use std::ffi::{CStr, CString};
use std::ptr;

use trinity_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        trinity_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn ckks_round_trip_through_handles() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(trinity_ckks_context_new(64, 2, 1, 30, &mut ctx), TrinityStatus::Ok);
        assert_eq!(trinity_ckks_slots(ctx), 32);
        let mut keys = ptr::null_mut();
        let rot = [1i64];
        assert_eq!(
            trinity_ckks_keygen(ctx, 7, rot.as_ptr(), 1, &mut keys),
            TrinityStatus::Ok
        );

        let x: Vec<f64> = (0..32).map(|i| i as f64 / 64.0).collect();
        let y: Vec<f64> = (0..32).map(|i| 0.5 - i as f64 / 100.0).collect();
        let (mut cx, mut cy) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            trinity_ckks_encrypt(ctx, keys, x.as_ptr(), 32, 1, &mut cx),
            TrinityStatus::Ok
        );
        assert_eq!(
            trinity_ckks_encrypt(ctx, keys, y.as_ptr(), 32, 2, &mut cy),
            TrinityStatus::Ok
        );

        let (mut sum, mut prod, mut rot1) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(trinity_ckks_add(ctx, cx, cy, &mut sum), TrinityStatus::Ok);
        assert_eq!(trinity_ckks_mul(ctx, keys, cx, cy, &mut prod), TrinityStatus::Ok);
        assert_eq!(trinity_ckks_rotate(ctx, keys, cx, 1, &mut rot1), TrinityStatus::Ok);
        assert_eq!(trinity_ckks_ciphertext_level(prod), 1);

        let mut out = vec![0.0; 32];
        let close = |got: &[f64], want: &dyn Fn(usize) -> f64| (0..32).all(|i| (got[i] - want(i)).abs() < 1e-3);
        assert_eq!(
            trinity_ckks_decrypt(ctx, keys, sum, out.as_mut_ptr(), 32),
            TrinityStatus::Ok
        );
        assert!(close(&out, &|i| x[i] + y[i]));
        assert_eq!(
            trinity_ckks_decrypt(ctx, keys, prod, out.as_mut_ptr(), 32),
            TrinityStatus::Ok
        );
        assert!(close(&out, &|i| x[i] * y[i]));
        assert_eq!(
            trinity_ckks_decrypt(ctx, keys, rot1, out.as_mut_ptr(), 32),
            TrinityStatus::Ok
        );
        assert!(close(&out, &|i| x[(i + 1) % 32]));

        // levels differ after the rescale
        let mut bad = ptr::null_mut();
        assert_eq!(trinity_ckks_add(ctx, cx, prod, &mut bad), TrinityStatus::LevelMismatch);
        assert!(bad.is_null());
        assert!(last_error().contains("level mismatch"));
        assert_eq!(
            trinity_ckks_rotate(ctx, keys, cx, 2, &mut bad),
            TrinityStatus::KeyNotFound
        );

        for c in [cx, cy, sum, prod, rot1] {
            trinity_ckks_ciphertext_free(c);
        }
        trinity_ckks_keys_free(keys);
        trinity_ckks_context_free(ctx);
    }
}

#[test]
fn serialization_buffers() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(trinity_ckks_context_new(32, 1, 1, 30, &mut ctx), TrinityStatus::Ok);
        let mut keys = ptr::null_mut();
        assert_eq!(
            trinity_ckks_keygen(ctx, 3, ptr::null(), 0, &mut keys),
            TrinityStatus::Ok
        );
        let v = [0.25, -0.5];
        let mut ct = ptr::null_mut();
        assert_eq!(
            trinity_ckks_encrypt(ctx, keys, v.as_ptr(), 2, 9, &mut ct),
            TrinityStatus::Ok
        );

        let mut len = 0usize;
        assert_eq!(
            trinity_ckks_ciphertext_serialize(ctx, ct, ptr::null_mut(), 0, &mut len),
            TrinityStatus::BufferTooSmall
        );
        let mut buf = vec![0u8; len];
        assert_eq!(
            trinity_ckks_ciphertext_serialize(ctx, ct, buf.as_mut_ptr(), len, &mut len),
            TrinityStatus::Ok
        );
        assert_eq!(&buf[..4], b"TRFH");
        let mut back = ptr::null_mut();
        assert_eq!(
            trinity_ckks_ciphertext_deserialize(ctx, buf.as_ptr(), len, &mut back),
            TrinityStatus::Ok
        );
        let mut out = [0.0; 2];
        assert_eq!(
            trinity_ckks_decrypt(ctx, keys, back, out.as_mut_ptr(), 2),
            TrinityStatus::Ok
        );
        assert!((out[0] - 0.25).abs() < 1e-4 && (out[1] + 0.5).abs() < 1e-4);

        let mut other = ptr::null_mut();
        assert_eq!(trinity_ckks_context_new(64, 1, 1, 30, &mut other), TrinityStatus::Ok);
        let mut wrong = ptr::null_mut();
        assert_eq!(
            trinity_ckks_ciphertext_deserialize(other, buf.as_ptr(), len, &mut wrong),
            TrinityStatus::ParamsMismatch
        );
        assert_eq!(
            trinity_ckks_ciphertext_deserialize(ctx, buf.as_ptr(), 10, &mut wrong),
            TrinityStatus::Serialization
        );
        trinity_ckks_ciphertext_free(back);
        trinity_ckks_ciphertext_free(ct);
        trinity_ckks_keys_free(keys);
        trinity_ckks_context_free(ctx);
        trinity_ckks_context_free(other);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut ctx = ptr::null_mut();
        assert_eq!(
            trinity_ckks_context_new(100, 2, 1, 30, &mut ctx),
            TrinityStatus::InvalidParams
        );
        assert!(ctx.is_null());
        assert_eq!(
            trinity_ckks_context_new(64, 2, 1, 30, ptr::null_mut()),
            TrinityStatus::NullPointer
        );
        assert_eq!(trinity_ckks_slots(ptr::null()), 0);
        let mut keys = ptr::null_mut();
        assert_eq!(
            trinity_ckks_keygen(ptr::null(), 1, ptr::null(), 0, &mut keys),
            TrinityStatus::NullPointer
        );
        assert_eq!(last_error(), "context is null");

        let name = CString::new("Set-IV").unwrap();
        let mut t = ptr::null_mut();
        assert_eq!(
            trinity_tfhe_context_new(name.as_ptr(), 1, &mut t),
            TrinityStatus::InvalidParams
        );
        assert_eq!(
            trinity_tfhe_context_new(ptr::null(), 1, &mut t),
            TrinityStatus::NullPointer
        );

        let mut u = 0.0;
        assert_eq!(trinity_ntt_utilization(1 << 16, 0, &mut u), TrinityStatus::Ok);
        assert_eq!(u, 1.0);
        assert_eq!(trinity_ntt_utilization(1000, 0, &mut u), TrinityStatus::InvalidArgument);
        assert_eq!(trinity_ntt_utilization(256, 9, &mut u), TrinityStatus::InvalidArgument);
        assert_eq!(
            trinity_keyswitch_ntt_fraction(1 << 16, 23, 3, &mut u),
            TrinityStatus::Ok
        );
        assert!((u - 0.571429).abs() < 1e-6);

        // freeing null is a no-op
        trinity_ckks_context_free(ptr::null_mut());
        trinity_lwe_ciphertext_free(ptr::null_mut());

        let s = CStr::from_ptr(trinity_status_name(TrinityStatus::BufferTooSmall));
        assert_eq!(s.to_str().unwrap(), "buffer too small");
        assert_eq!(
            CStr::from_ptr(trinity_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}

#[test]
fn tfhe_gates_through_handles() {
    unsafe {
        let name = CString::new("Set-I").unwrap();
        let mut ctx = ptr::null_mut();
        assert_eq!(trinity_tfhe_context_new(name.as_ptr(), 2, &mut ctx), TrinityStatus::Ok);
        let mut keys = ptr::null_mut();
        assert_eq!(trinity_tfhe_keygen(ctx, 11, &mut keys), TrinityStatus::Ok);

        let table = [3u64, 2, 1, 0];
        for m in 0..4u64 {
            let (mut c, mut r) = (ptr::null_mut(), ptr::null_mut());
            assert_eq!(trinity_tfhe_encrypt(ctx, keys, m, 20 + m, &mut c), TrinityStatus::Ok);
            assert_eq!(
                trinity_tfhe_bootstrap(ctx, keys, c, table.as_ptr(), 4, &mut r),
                TrinityStatus::Ok
            );
            let mut got = 99;
            assert_eq!(trinity_tfhe_decrypt(ctx, keys, r, &mut got), TrinityStatus::Ok);
            assert_eq!(got, 3 - m);
            trinity_lwe_ciphertext_free(c);
            trinity_lwe_ciphertext_free(r);
        }
        let mut c = ptr::null_mut();
        assert_eq!(
            trinity_tfhe_encrypt(ctx, keys, 4, 1, &mut c),
            TrinityStatus::InvalidArgument
        );
        assert_eq!(trinity_tfhe_encrypt(ctx, keys, 1, 1, &mut c), TrinityStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(
            trinity_tfhe_bootstrap(ctx, keys, c, table.as_ptr(), 3, &mut r),
            TrinityStatus::InvalidArgument
        );
        trinity_lwe_ciphertext_free(c);
        trinity_tfhe_keys_free(keys);
        trinity_tfhe_context_free(ctx);

        let mut ctx = ptr::null_mut();
        assert_eq!(trinity_tfhe_context_new(name.as_ptr(), 1, &mut ctx), TrinityStatus::Ok);
        let mut keys = ptr::null_mut();
        assert_eq!(trinity_tfhe_keygen(ctx, 12, &mut keys), TrinityStatus::Ok);
        for (i, (a, b)) in [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .enumerate()
        {
            let (mut ca, mut cb, mut r) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
            assert_eq!(
                trinity_tfhe_encrypt_bool(ctx, keys, a, 2 * i as u64, &mut ca),
                TrinityStatus::Ok
            );
            assert_eq!(
                trinity_tfhe_encrypt_bool(ctx, keys, b, 2 * i as u64 + 1, &mut cb),
                TrinityStatus::Ok
            );
            assert_eq!(trinity_tfhe_nand(ctx, keys, ca, cb, &mut r), TrinityStatus::Ok);
            let mut bit = false;
            assert_eq!(trinity_tfhe_decrypt_bool(ctx, keys, r, &mut bit), TrinityStatus::Ok);
            assert_eq!(bit, !(a && b));
            for p in [ca, cb, r] {
                trinity_lwe_ciphertext_free(p);
            }
        }
        trinity_tfhe_keys_free(keys);
        trinity_tfhe_context_free(ctx);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/trinity.h")).unwrap();
    for name in [
        "TRINITY_STATUS_OK = 0",
        "TRINITY_STATUS_PANIC = 14",
        "typedef struct TrinityCkksContext TrinityCkksContext;",
        "trinity_ckks_encrypt(",
        "trinity_tfhe_bootstrap(",
        "trinity_last_error_message(char *buf, size_t cap)",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    // the header must be valid C when a compiler is around
    if let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-xc", "-"])
        .stdin(std::fs::File::open(concat!(env!("CARGO_MANIFEST_DIR"), "/include/trinity.h")).unwrap())
        .status()
    {
        assert!(status.success());
    }
}
