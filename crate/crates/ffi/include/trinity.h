#ifndef TRINITY_H
#define TRINITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TrinityStatus {
  TRINITY_STATUS_OK = 0,
  TRINITY_STATUS_NULL_POINTER = 1,
  TRINITY_STATUS_INVALID_ARGUMENT = 2,
  TRINITY_STATUS_INVALID_PARAMS = 3,
  TRINITY_STATUS_LEVEL_MISMATCH = 4,
  TRINITY_STATUS_SCALE_MISMATCH = 5,
  TRINITY_STATUS_NO_LEVELS_LEFT = 6,
  TRINITY_STATUS_KEY_NOT_FOUND = 7,
  TRINITY_STATUS_SLOT_OVERFLOW = 8,
  TRINITY_STATUS_DIMENSION_MISMATCH = 9,
  TRINITY_STATUS_SERIALIZATION = 10,
  TRINITY_STATUS_PARAMS_MISMATCH = 11,
  TRINITY_STATUS_BUFFER_TOO_SMALL = 12,
  TRINITY_STATUS_INTERNAL = 13,
  TRINITY_STATUS_PANIC = 14,
} TrinityStatus;

typedef struct TrinityCkksCiphertext TrinityCkksCiphertext;

typedef struct TrinityCkksContext TrinityCkksContext;

typedef struct TrinityCkksKeys TrinityCkksKeys;

typedef struct TrinityLweCiphertext TrinityLweCiphertext;

typedef struct TrinityTfheContext TrinityTfheContext;

typedef struct TrinityTfheKeys TrinityTfheKeys;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *trinity_version(void);

// Static NUL-terminated name of a status code.
const char *trinity_status_name(enum TrinityStatus status);

// Copies the last error message of this thread, NUL-terminated and
// truncated to `cap` bytes. Returns the untruncated length without the NUL.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t trinity_last_error_message(char *buf, size_t cap);

// # Safety
// `out` must be valid for one pointer write.
enum TrinityStatus trinity_ckks_context_new(size_t n,
                                            size_t levels,
                                            size_t dnum,
                                            uint32_t scale_bits,
                                            struct TrinityCkksContext **out);

// Desk-scale parameters: `N = 2^13`, `L = 5`, `dnum = 2`, 30-bit scale.
//
// # Safety
// `out` must be valid for one pointer write.
enum TrinityStatus trinity_ckks_context_desk(struct TrinityCkksContext **out);

// # Safety
// `ctx` must be null or come from a context constructor and not be used afterwards.
void trinity_ckks_context_free(struct TrinityCkksContext *ctx);

// Slot count, or 0 for a null context.
//
// # Safety
// `ctx` must be null or a live context.
size_t trinity_ckks_slots(const struct TrinityCkksContext *ctx);

// Keys for encryption, relinearization and the listed slot rotations.
//
// # Safety
// `ctx` must be live, `rotations` valid for `n_rotations` values and `out` for one write.
enum TrinityStatus trinity_ckks_keygen(const struct TrinityCkksContext *ctx,
                                       uint64_t seed,
                                       const int64_t *rotations,
                                       size_t n_rotations,
                                       struct TrinityCkksKeys **out);

// # Safety
// `keys` must be null or come from [`trinity_ckks_keygen`].
void trinity_ckks_keys_free(struct TrinityCkksKeys *keys);

// Public-key encryption of real slot values at the top level and default scale.
//
// # Safety
// Handles must be live, `values` valid for `len` doubles, `out` for one write.
enum TrinityStatus trinity_ckks_encrypt(const struct TrinityCkksContext *ctx,
                                        const struct TrinityCkksKeys *keys,
                                        const double *values,
                                        size_t len,
                                        uint64_t seed,
                                        struct TrinityCkksCiphertext **out);

// Decrypts and writes the first `min(cap, slots)` real parts to `out`.
//
// # Safety
// Handles must be live and `out` valid for `cap` doubles.
enum TrinityStatus trinity_ckks_decrypt(const struct TrinityCkksContext *ctx,
                                        const struct TrinityCkksKeys *keys,
                                        const struct TrinityCkksCiphertext *ct,
                                        double *out,
                                        size_t cap);

// # Safety
// `ct` must be null or a live ciphertext.
size_t trinity_ckks_ciphertext_level(const struct TrinityCkksCiphertext *ct);

// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_ckks_add(const struct TrinityCkksContext *ctx,
                                    const struct TrinityCkksCiphertext *a,
                                    const struct TrinityCkksCiphertext *b,
                                    struct TrinityCkksCiphertext **out);

// Product with relinearization followed by one rescale.
//
// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_ckks_mul(const struct TrinityCkksContext *ctx,
                                    const struct TrinityCkksKeys *keys,
                                    const struct TrinityCkksCiphertext *a,
                                    const struct TrinityCkksCiphertext *b,
                                    struct TrinityCkksCiphertext **out);

// Slot `j` of the result holds slot `j + r` of the input.
//
// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_ckks_rotate(const struct TrinityCkksContext *ctx,
                                       const struct TrinityCkksKeys *keys,
                                       const struct TrinityCkksCiphertext *a,
                                       int64_t r,
                                       struct TrinityCkksCiphertext **out);

// Writes the binary container; see [`write_bytes`] semantics for `len`.
//
// # Safety
// Handles must be live, `buf` null or valid for `cap` bytes, `len` valid.
enum TrinityStatus trinity_ckks_ciphertext_serialize(const struct TrinityCkksContext *ctx,
                                                     const struct TrinityCkksCiphertext *ct,
                                                     uint8_t *buf,
                                                     size_t cap,
                                                     size_t *len);

// # Safety
// `ctx` must be live, `bytes` valid for `len` bytes, `out` for one write.
enum TrinityStatus trinity_ckks_ciphertext_deserialize(const struct TrinityCkksContext *ctx,
                                                       const uint8_t *bytes,
                                                       size_t len,
                                                       struct TrinityCkksCiphertext **out);

// # Safety
// `ct` must be null or a ciphertext produced by this library.
void trinity_ckks_ciphertext_free(struct TrinityCkksCiphertext *ct);

// `set` is one of `Set-I`, `Set-II`, `Set-III`; messages live in `Z_{2^plaintext_bits}`.
//
// # Safety
// `set` must be a NUL-terminated string and `out` valid for one write.
enum TrinityStatus trinity_tfhe_context_new(const char *set,
                                            uint32_t plaintext_bits,
                                            struct TrinityTfheContext **out);

// # Safety
// `ctx` must be null or come from [`trinity_tfhe_context_new`].
void trinity_tfhe_context_free(struct TrinityTfheContext *ctx);

// # Safety
// `ctx` must be live and `out` valid for one write.
enum TrinityStatus trinity_tfhe_keygen(const struct TrinityTfheContext *ctx,
                                       uint64_t seed,
                                       struct TrinityTfheKeys **out);

// # Safety
// `keys` must be null or come from [`trinity_tfhe_keygen`].
void trinity_tfhe_keys_free(struct TrinityTfheKeys *keys);

// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_tfhe_encrypt(const struct TrinityTfheContext *ctx,
                                        const struct TrinityTfheKeys *keys,
                                        uint64_t msg,
                                        uint64_t seed,
                                        struct TrinityLweCiphertext **out);

// Encrypts a bit in the encoding [`trinity_tfhe_nand`] expects.
//
// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_tfhe_encrypt_bool(const struct TrinityTfheContext *ctx,
                                             const struct TrinityTfheKeys *keys,
                                             bool bit,
                                             uint64_t seed,
                                             struct TrinityLweCiphertext **out);

// # Safety
// Handles must be live and `msg` valid for one write.
enum TrinityStatus trinity_tfhe_decrypt(const struct TrinityTfheContext *ctx,
                                        const struct TrinityTfheKeys *keys,
                                        const struct TrinityLweCiphertext *ct,
                                        uint64_t *msg);

// # Safety
// Handles must be live and `bit` valid for one write.
enum TrinityStatus trinity_tfhe_decrypt_bool(const struct TrinityTfheContext *ctx,
                                             const struct TrinityTfheKeys *keys,
                                             const struct TrinityLweCiphertext *ct,
                                             bool *bit);

// Programmable bootstrap evaluating `table[m]` for each message `m`; the
// table holds `2^plaintext_bits` entries.
//
// # Safety
// Handles must be live, `table` valid for `len` values, `out` for one write.
enum TrinityStatus trinity_tfhe_bootstrap(const struct TrinityTfheContext *ctx,
                                          const struct TrinityTfheKeys *keys,
                                          const struct TrinityLweCiphertext *ct,
                                          const uint64_t *table,
                                          size_t len,
                                          struct TrinityLweCiphertext **out);

// # Safety
// Handles must be live and `out` valid for one write.
enum TrinityStatus trinity_tfhe_nand(const struct TrinityTfheContext *ctx,
                                     const struct TrinityTfheKeys *keys,
                                     const struct TrinityLweCiphertext *a,
                                     const struct TrinityLweCiphertext *b,
                                     struct TrinityLweCiphertext **out);

// # Safety
// `ct` must be null or a ciphertext produced by this library.
void trinity_lwe_ciphertext_free(struct TrinityLweCiphertext *ct);

// Transform-unit utilization of a length-`n` NTT under the default inventory.
// `strategy`: 0 = F1-like, 1 = FAB-like, 2 = Trinity.
//
// # Safety
// `out` must be valid for one write.
enum TrinityStatus trinity_ntt_utilization(size_t n, uint32_t strategy, double *out);

// Share of modular multiplies spent in transforms for one key switch.
//
// # Safety
// `out` must be valid for one write.
enum TrinityStatus trinity_keyswitch_ntt_fraction(size_t n,
                                                  size_t levels,
                                                  size_t dnum,
                                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRINITY_H */
