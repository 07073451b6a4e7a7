//! C interface to `trinity-core`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new`/producer call and released with the matching `*_free`. Every
//! fallible call returns a [`TrinityStatus`]; on failure the message is
//! available from [`trinity_last_error_message`] on the same thread.
//! Panics are caught and reported as `TRINITY_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use trinity_core::archsim::{keyswitch_breakdown, map_ntt, HardwareConfig, NttStrategy};
use trinity_core::ckks::{CkksContext, CkksParams, KeyMaterial, RlweCiphertext};
use trinity_core::error::{CkksError, SerialError, SimError, TfheError};
use trinity_core::serial::Encodable;
use trinity_core::tfhe::{Lut, LweCiphertext, TfheContext, TfheKeys, TfheParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrinityStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParams = 3,
    LevelMismatch = 4,
    ScaleMismatch = 5,
    NoLevelsLeft = 6,
    KeyNotFound = 7,
    SlotOverflow = 8,
    DimensionMismatch = 9,
    Serialization = 10,
    ParamsMismatch = 11,
    BufferTooSmall = 12,
    Internal = 13,
    Panic = 14,
}

pub struct TrinityCkksContext(CkksContext);
pub struct TrinityCkksKeys(KeyMaterial);
pub struct TrinityCkksCiphertext(RlweCiphertext);
pub struct TrinityTfheContext(TfheContext);
pub struct TrinityTfheKeys(TfheKeys);
pub struct TrinityLweCiphertext(LweCiphertext);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(TrinityStatus, String);

impl Failure {
    fn new(status: TrinityStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<CkksError> for Failure {
    fn from(e: CkksError) -> Self {
        let status = match e {
            CkksError::SlotOverflow { .. } => TrinityStatus::SlotOverflow,
            CkksError::LevelMismatch(..) => TrinityStatus::LevelMismatch,
            CkksError::ScaleMismatch(..) => TrinityStatus::ScaleMismatch,
            CkksError::NoLevelsLeft => TrinityStatus::NoLevelsLeft,
            CkksError::KeyNotFound(_) => TrinityStatus::KeyNotFound,
            CkksError::InvalidParams(_) => TrinityStatus::InvalidParams,
            _ => TrinityStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<TfheError> for Failure {
    fn from(e: TfheError) -> Self {
        let status = match e {
            TfheError::DimensionMismatch { .. } => TrinityStatus::DimensionMismatch,
            TfheError::InvalidParams(_) => TrinityStatus::InvalidParams,
            TfheError::NegacyclicViolation(_) | TfheError::IndexOutOfRange { .. } => TrinityStatus::InvalidArgument,
            _ => TrinityStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

impl From<SerialError> for Failure {
    fn from(e: SerialError) -> Self {
        let status = match e {
            SerialError::ParamsMismatch => TrinityStatus::ParamsMismatch,
            _ => TrinityStatus::Serialization,
        };
        Failure(status, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::UnsupportedSize(_) | SimError::UnsupportedOp(_) => TrinityStatus::InvalidArgument,
            _ => TrinityStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording any failure or panic for the calling thread.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TrinityStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TrinityStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            TrinityStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(TrinityStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(TrinityStatus::NullPointer, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(TrinityStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies `bytes` to `out` when it fits; `*len` always receives the full size.
unsafe fn write_bytes(bytes: &[u8], out: *mut u8, cap: usize, len: *mut usize) -> Result<(), Failure> {
    if len.is_null() {
        return Err(Failure::new(TrinityStatus::NullPointer, "length pointer is null"));
    }
    *len = bytes.len();
    if out.is_null() || cap < bytes.len() {
        return Err(Failure::new(
            TrinityStatus::BufferTooSmall,
            format!("need {} bytes, have {cap}", bytes.len()),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trinity_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn trinity_status_name(status: TrinityStatus) -> *const c_char {
    let s: &'static str = match status {
        TrinityStatus::Ok => "ok\0",
        TrinityStatus::NullPointer => "null pointer\0",
        TrinityStatus::InvalidArgument => "invalid argument\0",
        TrinityStatus::InvalidParams => "invalid parameters\0",
        TrinityStatus::LevelMismatch => "level mismatch\0",
        TrinityStatus::ScaleMismatch => "scale mismatch\0",
        TrinityStatus::NoLevelsLeft => "no levels left\0",
        TrinityStatus::KeyNotFound => "key not found\0",
        TrinityStatus::SlotOverflow => "slot overflow\0",
        TrinityStatus::DimensionMismatch => "dimension mismatch\0",
        TrinityStatus::Serialization => "serialization error\0",
        TrinityStatus::ParamsMismatch => "parameter mismatch\0",
        TrinityStatus::BufferTooSmall => "buffer too small\0",
        TrinityStatus::Internal => "internal error\0",
        TrinityStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `cap` bytes. Returns the untruncated length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn trinity_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_context_new(
    n: usize,
    levels: usize,
    dnum: usize,
    scale_bits: u32,
    out: *mut *mut TrinityCkksContext,
) -> TrinityStatus {
    guard(|| {
        let params = CkksParams::new(n, levels, dnum, scale_bits)?;
        put(out, TrinityCkksContext(CkksContext::new(params)?))
    })
}

/// Desk-scale parameters: `N = 2^13`, `L = 5`, `dnum = 2`, 30-bit scale.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_context_desk(out: *mut *mut TrinityCkksContext) -> TrinityStatus {
    guard(|| put(out, TrinityCkksContext(CkksContext::new(CkksParams::desk())?)))
}

/// # Safety
/// `ctx` must be null or come from a context constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_context_free(ctx: *mut TrinityCkksContext) {
    release(ctx)
}

/// Slot count, or 0 for a null context.
///
/// # Safety
/// `ctx` must be null or a live context.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_slots(ctx: *const TrinityCkksContext) -> usize {
    ctx.as_ref().map_or(0, |c| c.0.params().slots())
}

/// Keys for encryption, relinearization and the listed slot rotations.
///
/// # Safety
/// `ctx` must be live, `rotations` valid for `n_rotations` values and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_keygen(
    ctx: *const TrinityCkksContext,
    seed: u64,
    rotations: *const i64,
    n_rotations: usize,
    out: *mut *mut TrinityCkksKeys,
) -> TrinityStatus {
    guard(|| {
        let ctx = get(ctx, "context")?;
        let rot = slice(rotations, n_rotations, "rotations")?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        put(out, TrinityCkksKeys(ctx.0.keygen(&mut rng, rot)))
    })
}

/// # Safety
/// `keys` must be null or come from [`trinity_ckks_keygen`].
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_keys_free(keys: *mut TrinityCkksKeys) {
    release(keys)
}

/// Public-key encryption of real slot values at the top level and default scale.
///
/// # Safety
/// Handles must be live, `values` valid for `len` doubles, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_encrypt(
    ctx: *const TrinityCkksContext,
    keys: *const TrinityCkksKeys,
    values: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut TrinityCkksCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let v = slice(values, len, "values")?;
        let pt = ctx.encode_real(v, ctx.params().levels(), ctx.params().scale())?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        put(out, TrinityCkksCiphertext(ctx.encrypt_pk(&pt, &keys.public, &mut rng)?))
    })
}

/// Decrypts and writes the first `min(cap, slots)` real parts to `out`.
///
/// # Safety
/// Handles must be live and `out` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_decrypt(
    ctx: *const TrinityCkksContext,
    keys: *const TrinityCkksKeys,
    ct: *const TrinityCkksCiphertext,
    out: *mut f64,
    cap: usize,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let ct = &get(ct, "ciphertext")?.0;
        let vals = ctx.decode_real(&ctx.decrypt(ct, &keys.secret)?);
        if cap > 0 && out.is_null() {
            return Err(Failure::new(TrinityStatus::NullPointer, "output is null"));
        }
        let n = cap.min(vals.len());
        if n > 0 {
            ptr::copy_nonoverlapping(vals.as_ptr(), out, n);
        }
        Ok(())
    })
}

/// # Safety
/// `ct` must be null or a live ciphertext.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_ciphertext_level(ct: *const TrinityCkksCiphertext) -> usize {
    ct.as_ref().map_or(0, |c| c.0.level)
}

/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_add(
    ctx: *const TrinityCkksContext,
    a: *const TrinityCkksCiphertext,
    b: *const TrinityCkksCiphertext,
    out: *mut *mut TrinityCkksCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        put(out, TrinityCkksCiphertext(ctx.hadd(&get(a, "a")?.0, &get(b, "b")?.0)?))
    })
}

/// Product with relinearization followed by one rescale.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_mul(
    ctx: *const TrinityCkksContext,
    keys: *const TrinityCkksKeys,
    a: *const TrinityCkksCiphertext,
    b: *const TrinityCkksCiphertext,
    out: *mut *mut TrinityCkksCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let prod = ctx.hmult(&get(a, "a")?.0, &get(b, "b")?.0, &keys.relin)?;
        put(out, TrinityCkksCiphertext(ctx.rescale(&prod)?))
    })
}

/// Slot `j` of the result holds slot `j + r` of the input.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_rotate(
    ctx: *const TrinityCkksContext,
    keys: *const TrinityCkksKeys,
    a: *const TrinityCkksCiphertext,
    r: i64,
    out: *mut *mut TrinityCkksCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        put(
            out,
            TrinityCkksCiphertext(ctx.hrotate(&get(a, "a")?.0, r, &keys.rotations)?),
        )
    })
}

/// Writes the binary container; see [`write_bytes`] semantics for `len`.
///
/// # Safety
/// Handles must be live, `buf` null or valid for `cap` bytes, `len` valid.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_ciphertext_serialize(
    ctx: *const TrinityCkksContext,
    ct: *const TrinityCkksCiphertext,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> TrinityStatus {
    guard(|| {
        let hash = get(ctx, "context")?.0.params().hash();
        let bytes = get(ct, "ciphertext")?.0.to_bytes(hash);
        write_bytes(&bytes, buf, cap, len)
    })
}

/// # Safety
/// `ctx` must be live, `bytes` valid for `len` bytes, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_ciphertext_deserialize(
    ctx: *const TrinityCkksContext,
    bytes: *const u8,
    len: usize,
    out: *mut *mut TrinityCkksCiphertext,
) -> TrinityStatus {
    guard(|| {
        let hash = get(ctx, "context")?.0.params().hash();
        let b = slice(bytes, len, "bytes")?;
        put(out, TrinityCkksCiphertext(RlweCiphertext::from_bytes(b, Some(hash))?))
    })
}

/// # Safety
/// `ct` must be null or a ciphertext produced by this library.
#[no_mangle]
pub unsafe extern "C" fn trinity_ckks_ciphertext_free(ct: *mut TrinityCkksCiphertext) {
    release(ct)
}

/// `set` is one of `Set-I`, `Set-II`, `Set-III`; messages live in `Z_{2^plaintext_bits}`.
///
/// # Safety
/// `set` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_context_new(
    set: *const c_char,
    plaintext_bits: u32,
    out: *mut *mut TrinityTfheContext,
) -> TrinityStatus {
    guard(|| {
        if set.is_null() {
            return Err(Failure::new(TrinityStatus::NullPointer, "set name is null"));
        }
        let name = CStr::from_ptr(set)
            .to_str()
            .map_err(|_| Failure::new(TrinityStatus::InvalidArgument, "set name is not UTF-8"))?;
        let params = TfheParams::by_name(name)
            .ok_or_else(|| Failure::new(TrinityStatus::InvalidParams, format!("unknown parameter set {name:?}")))?;
        if !(1..=8).contains(&plaintext_bits) {
            return Err(Failure::new(
                TrinityStatus::InvalidParams,
                "plaintext bits must be in 1..=8",
            ));
        }
        put(
            out,
            TrinityTfheContext(TfheContext::new(params.with_plaintext_bits(plaintext_bits))?),
        )
    })
}

/// # Safety
/// `ctx` must be null or come from [`trinity_tfhe_context_new`].
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_context_free(ctx: *mut TrinityTfheContext) {
    release(ctx)
}

/// # Safety
/// `ctx` must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_keygen(
    ctx: *const TrinityTfheContext,
    seed: u64,
    out: *mut *mut TrinityTfheKeys,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        put(out, TrinityTfheKeys(ctx.keygen(&mut ChaCha20Rng::seed_from_u64(seed))))
    })
}

/// # Safety
/// `keys` must be null or come from [`trinity_tfhe_keygen`].
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_keys_free(keys: *mut TrinityTfheKeys) {
    release(keys)
}

/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_encrypt(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    msg: u64,
    seed: u64,
    out: *mut *mut TrinityLweCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        if msg >> ctx.params().plaintext_bits != 0 {
            return Err(Failure::new(
                TrinityStatus::InvalidArgument,
                "message outside the plaintext space",
            ));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        put(out, TrinityLweCiphertext(ctx.lwe_encrypt(msg, &keys.lwe, &mut rng)))
    })
}

/// Encrypts a bit in the encoding [`trinity_tfhe_nand`] expects.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_encrypt_bool(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    bit: bool,
    seed: u64,
    out: *mut *mut TrinityLweCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        put(
            out,
            TrinityLweCiphertext(ctx.lwe_encrypt_bool(bit, &keys.lwe, &mut rng)),
        )
    })
}

/// # Safety
/// Handles must be live and `msg` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_decrypt(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    ct: *const TrinityLweCiphertext,
    msg: *mut u64,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let ct = &get(ct, "ciphertext")?.0;
        if msg.is_null() {
            return Err(Failure::new(TrinityStatus::NullPointer, "output is null"));
        }
        *msg = ctx.lwe_decrypt(ct, &keys.lwe);
        Ok(())
    })
}

/// # Safety
/// Handles must be live and `bit` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_decrypt_bool(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    ct: *const TrinityLweCiphertext,
    bit: *mut bool,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let ct = &get(ct, "ciphertext")?.0;
        if bit.is_null() {
            return Err(Failure::new(TrinityStatus::NullPointer, "output is null"));
        }
        *bit = ctx.lwe_decrypt_bool(ct, &keys.lwe);
        Ok(())
    })
}

/// Programmable bootstrap evaluating `table[m]` for each message `m`; the
/// table holds `2^plaintext_bits` entries.
///
/// # Safety
/// Handles must be live, `table` valid for `len` values, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_bootstrap(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    ct: *const TrinityLweCiphertext,
    table: *const u64,
    len: usize,
    out: *mut *mut TrinityLweCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        let ct = &get(ct, "ciphertext")?.0;
        let t = slice(table, len, "table")?;
        if len != 1usize << ctx.params().plaintext_bits {
            return Err(Failure::new(
                TrinityStatus::InvalidArgument,
                format!("table needs {} entries", 1usize << ctx.params().plaintext_bits),
            ));
        }
        let tv = ctx.build_test_vector(&Lut::Padded(t.to_vec()))?;
        put(out, TrinityLweCiphertext(ctx.pbs(ct, &tv, &keys.eval)?))
    })
}

/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_tfhe_nand(
    ctx: *const TrinityTfheContext,
    keys: *const TrinityTfheKeys,
    a: *const TrinityLweCiphertext,
    b: *const TrinityLweCiphertext,
    out: *mut *mut TrinityLweCiphertext,
) -> TrinityStatus {
    guard(|| {
        let ctx = &get(ctx, "context")?.0;
        let keys = &get(keys, "keys")?.0;
        put(
            out,
            TrinityLweCiphertext(ctx.nand(&get(a, "a")?.0, &get(b, "b")?.0, &keys.eval)?),
        )
    })
}

/// # Safety
/// `ct` must be null or a ciphertext produced by this library.
#[no_mangle]
pub unsafe extern "C" fn trinity_lwe_ciphertext_free(ct: *mut TrinityLweCiphertext) {
    release(ct)
}

/// Transform-unit utilization of a length-`n` NTT under the default inventory.
/// `strategy`: 0 = F1-like, 1 = FAB-like, 2 = Trinity.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_ntt_utilization(n: usize, strategy: u32, out: *mut f64) -> TrinityStatus {
    guard(|| {
        let s = *NttStrategy::ALL
            .get(strategy as usize)
            .ok_or_else(|| Failure::new(TrinityStatus::InvalidArgument, format!("unknown strategy {strategy}")))?;
        let (_, u) = map_ntt(n, &HardwareConfig::default(), s)?;
        *out.as_mut()
            .ok_or_else(|| Failure::new(TrinityStatus::NullPointer, "output is null"))? = u;
        Ok(())
    })
}

/// Share of modular multiplies spent in transforms for one key switch.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn trinity_keyswitch_ntt_fraction(
    n: usize,
    levels: usize,
    dnum: usize,
    out: *mut f64,
) -> TrinityStatus {
    guard(|| {
        if dnum == 0 || levels == 0 {
            return Err(Failure::new(
                TrinityStatus::InvalidArgument,
                "levels and dnum must be positive",
            ));
        }
        let b = keyswitch_breakdown(n, levels, dnum)?;
        *out.as_mut()
            .ok_or_else(|| Failure::new(TrinityStatus::NullPointer, "output is null"))? = b.ntt_fraction;
        Ok(())
    })
}
