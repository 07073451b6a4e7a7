//! Versioned binary container for ciphertexts and keys.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "TRFH"
//! version    u16      currently 1
//! type tag   u16      see [`TypeTag`]
//! params     32 bytes SHA-256 parameter hash
//! level      u32
//! scale      f64      IEEE-754 bits
//! group      u32      arrays per polynomial group (e.g. limbs per RNS polynomial)
//! count      u32      number of arrays
//! arrays     count × { kind u8, modulus u64, two_n u64, len u32, len × u64 }
//! ```
//!
//! Array kinds: 0 coefficient polynomial, 1 evaluation polynomial, 2 plain
//! residues, 3 signed integers (two's complement, modulus fields zero).

use crate::ckks::{EvaluationKey, Plaintext, RlweCiphertext, RnsPolynomial, SecretKey};
use crate::error::SerialError;
use crate::modmath::Modulus;
use crate::polyring::{Representation, RingPolynomial};
use crate::tfhe::{GgswCiphertext, GlweCiphertext, GlweSecretKey, LweCiphertext, LweSecretKey};

pub const MAGIC: [u8; 4] = *b"TRFH";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum TypeTag {
    CkksCiphertext = 1,
    CkksPlaintext = 2,
    CkksSecretKey = 3,
    CkksEvaluationKey = 4,
    LweCiphertext = 16,
    GlweCiphertext = 17,
    GgswCiphertext = 18,
    LweSecretKey = 19,
    GlweSecretKey = 20,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ArrayKind {
    Coefficient = 0,
    Evaluation = 1,
    Residues = 2,
    Signed = 3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub kind: ArrayKind,
    pub modulus: Option<Modulus>,
    pub values: Vec<u64>,
}

impl Array {
    fn poly(p: &RingPolynomial) -> Self {
        Self {
            kind: match p.rep() {
                Representation::Coefficient => ArrayKind::Coefficient,
                Representation::Evaluation => ArrayKind::Evaluation,
            },
            modulus: Some(*p.modulus()),
            values: p.coeffs().to_vec(),
        }
    }

    fn signed(v: &[i64]) -> Self {
        Self {
            kind: ArrayKind::Signed,
            modulus: None,
            values: v.iter().map(|&x| x as u64).collect(),
        }
    }

    fn to_poly(&self) -> Result<RingPolynomial, SerialError> {
        let rep = match self.kind {
            ArrayKind::Coefficient => Representation::Coefficient,
            ArrayKind::Evaluation => Representation::Evaluation,
            _ => return Err(SerialError::Malformed("expected a polynomial array".into())),
        };
        let m = self
            .modulus
            .ok_or_else(|| SerialError::Malformed("polynomial without modulus".into()))?;
        RingPolynomial::new(self.values.clone(), m, rep).map_err(|e| SerialError::Malformed(e.to_string()))
    }

    fn to_signed(&self) -> Result<Vec<i64>, SerialError> {
        if self.kind != ArrayKind::Signed {
            return Err(SerialError::Malformed("expected a signed array".into()));
        }
        Ok(self.values.iter().map(|&x| x as i64).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub tag: u16,
    pub params_hash: [u8; 32],
    pub level: u32,
    pub scale: f64,
    pub group: u32,
    pub arrays: Vec<Array>,
}

impl Container {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.tag.to_le_bytes());
        out.extend_from_slice(&self.params_hash);
        out.extend_from_slice(&self.level.to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        out.extend_from_slice(&self.group.to_le_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            out.push(a.kind as u8);
            let (q, two_n) = a.modulus.map_or((0, 0), |m| (m.value(), m.two_n()));
            out.extend_from_slice(&q.to_le_bytes());
            out.extend_from_slice(&two_n.to_le_bytes());
            out.extend_from_slice(&(a.values.len() as u32).to_le_bytes());
            for v in &a.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SerialError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(SerialError::BadMagic);
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(SerialError::UnsupportedVersion(version));
        }
        let tag = r.u16()?;
        let params_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let level = r.u32()?;
        let scale = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let group = r.u32()?;
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let kind = match r.take(1)?[0] {
                0 => ArrayKind::Coefficient,
                1 => ArrayKind::Evaluation,
                2 => ArrayKind::Residues,
                3 => ArrayKind::Signed,
                k => return Err(SerialError::Malformed(format!("unknown array kind {k}"))),
            };
            let q = r.u64()?;
            let two_n = r.u64()?;
            let len = r.u32()? as usize;
            let modulus = if q == 0 {
                None
            } else {
                Some(Modulus::new(q, two_n).map_err(|e| SerialError::Malformed(e.to_string()))?)
            };
            if r.buf.len() - r.pos < len * 8 {
                return Err(SerialError::Truncated);
            }
            let values: Vec<u64> = (0..len).map(|_| r.u64()).collect::<Result<_, _>>()?;
            if let Some(m) = modulus {
                if values.iter().any(|&v| v >= m.value()) {
                    return Err(SerialError::Malformed("residue out of range".into()));
                }
            }
            arrays.push(Array { kind, modulus, values });
        }
        if r.pos != bytes.len() {
            return Err(SerialError::Malformed("trailing bytes".into()));
        }
        Ok(Self {
            tag,
            params_hash,
            level,
            scale,
            group,
            arrays,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SerialError> {
        let end = self.pos.checked_add(n).ok_or(SerialError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(SerialError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, SerialError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, SerialError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, SerialError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Types storable in a [`Container`].
pub trait Encodable: Sized {
    const TAG: TypeTag;

    fn encode_into(&self, params_hash: [u8; 32]) -> Container;

    fn decode_from(c: &Container) -> Result<Self, SerialError>;

    fn to_bytes(&self, params_hash: [u8; 32]) -> Vec<u8> {
        self.encode_into(params_hash).to_bytes()
    }

    /// Parses and checks the type tag and, if given, the parameter hash.
    fn from_bytes(bytes: &[u8], expected_hash: Option<[u8; 32]>) -> Result<Self, SerialError> {
        let c = Container::from_bytes(bytes)?;
        if c.tag != Self::TAG as u16 {
            return Err(SerialError::WrongType {
                expected: Self::TAG as u16,
                got: c.tag,
            });
        }
        if expected_hash.is_some_and(|h| h != c.params_hash) {
            return Err(SerialError::ParamsMismatch);
        }
        Self::decode_from(&c)
    }
}

fn container(
    tag: TypeTag,
    params_hash: [u8; 32],
    level: usize,
    scale: f64,
    group: usize,
    arrays: Vec<Array>,
) -> Container {
    Container {
        tag: tag as u16,
        params_hash,
        level: level as u32,
        scale,
        group: group as u32,
        arrays,
    }
}

fn rns_arrays(p: &RnsPolynomial) -> impl Iterator<Item = Array> + '_ {
    p.limbs().iter().map(Array::poly)
}

fn rns_groups(c: &Container) -> Result<Vec<RnsPolynomial>, SerialError> {
    let g = c.group as usize;
    if g == 0 || !c.arrays.len().is_multiple_of(g) {
        return Err(SerialError::Malformed(
            "array count is not a multiple of the group size".into(),
        ));
    }
    c.arrays
        .chunks(g)
        .map(|limbs| {
            let limbs = limbs.iter().map(Array::to_poly).collect::<Result<Vec<_>, _>>()?;
            RnsPolynomial::new(limbs).map_err(|e| SerialError::Malformed(e.to_string()))
        })
        .collect()
}

fn expect_count<T>(v: Vec<T>, n: usize) -> Result<Vec<T>, SerialError> {
    if v.len() != n {
        return Err(SerialError::Malformed(format!(
            "expected {n} groups, found {}",
            v.len()
        )));
    }
    Ok(v)
}

impl Encodable for RlweCiphertext {
    const TAG: TypeTag = TypeTag::CkksCiphertext;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        let arrays = rns_arrays(&self.b).chain(rns_arrays(&self.a)).collect();
        container(Self::TAG, h, self.level, self.scale, self.b.len(), arrays)
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let mut g = expect_count(rns_groups(c)?, 2)?;
        let a = g.pop().expect("two groups");
        let b = g.pop().expect("two groups");
        if b.len() != c.level as usize + 1 {
            return Err(SerialError::Malformed("limb count does not match level".into()));
        }
        Ok(Self {
            b,
            a,
            level: c.level as usize,
            scale: c.scale,
        })
    }
}

impl Encodable for Plaintext {
    const TAG: TypeTag = TypeTag::CkksPlaintext;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        container(
            Self::TAG,
            h,
            self.level,
            self.scale,
            self.poly.len(),
            rns_arrays(&self.poly).collect(),
        )
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let poly = expect_count(rns_groups(c)?, 1)?.pop().expect("one group");
        Ok(Self {
            poly,
            level: c.level as usize,
            scale: c.scale,
        })
    }
}

impl Encodable for SecretKey {
    const TAG: TypeTag = TypeTag::CkksSecretKey;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        container(Self::TAG, h, 0, 0.0, 1, vec![Array::signed(self.coeffs())])
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let [a] = c.arrays.as_slice() else {
            return Err(SerialError::Malformed("expected one array".into()));
        };
        Ok(SecretKey::from_coeffs(a.to_signed()?))
    }
}

impl Encodable for EvaluationKey {
    const TAG: TypeTag = TypeTag::CkksEvaluationKey;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        let group = self.rows.first().map_or(1, |(b, _)| b.len());
        let arrays = self
            .rows
            .iter()
            .flat_map(|(b, a)| rns_arrays(b).chain(rns_arrays(a)))
            .collect();
        container(Self::TAG, h, 0, 0.0, group, arrays)
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let g = rns_groups(c)?;
        if g.len() % 2 != 0 {
            return Err(SerialError::Malformed("odd number of key polynomials".into()));
        }
        let mut it = g.into_iter();
        let mut rows = Vec::new();
        while let (Some(b), Some(a)) = (it.next(), it.next()) {
            rows.push((b, a));
        }
        Ok(Self { rows })
    }
}

impl Encodable for LweCiphertext {
    const TAG: TypeTag = TypeTag::LweCiphertext;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        let mut values = self.a.clone();
        values.push(self.b);
        let arr = Array {
            kind: ArrayKind::Residues,
            modulus: Some(self.modulus),
            values,
        };
        container(Self::TAG, h, 0, 0.0, 1, vec![arr])
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let [arr] = c.arrays.as_slice() else {
            return Err(SerialError::Malformed("expected one array".into()));
        };
        let (Some(modulus), Some((&b, a))) = (arr.modulus, arr.values.split_last()) else {
            return Err(SerialError::Malformed("empty LWE array".into()));
        };
        Ok(Self {
            a: a.to_vec(),
            b,
            modulus,
        })
    }
}

fn glwe_arrays(g: &GlweCiphertext) -> impl Iterator<Item = Array> + '_ {
    g.components().map(Array::poly)
}

fn glwe_from(arrays: &[Array]) -> Result<GlweCiphertext, SerialError> {
    let mut polys = arrays.iter().map(Array::to_poly).collect::<Result<Vec<_>, _>>()?;
    let body = polys.pop().ok_or_else(|| SerialError::Malformed("empty GLWE".into()))?;
    Ok(GlweCiphertext { masks: polys, body })
}

impl Encodable for GlweCiphertext {
    const TAG: TypeTag = TypeTag::GlweCiphertext;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        container(Self::TAG, h, 0, 0.0, self.masks.len() + 1, glwe_arrays(self).collect())
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        glwe_from(&c.arrays)
    }
}

impl Encodable for GgswCiphertext {
    const TAG: TypeTag = TypeTag::GgswCiphertext;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        let group = self.rows.first().map_or(1, |r| r.masks.len() + 1);
        let arrays = self.rows.iter().flat_map(glwe_arrays).collect();
        container(Self::TAG, h, 0, 0.0, group, arrays)
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let g = c.group as usize;
        if g == 0 || !c.arrays.len().is_multiple_of(g) {
            return Err(SerialError::Malformed(
                "array count is not a multiple of the group size".into(),
            ));
        }
        Ok(Self {
            rows: c.arrays.chunks(g).map(glwe_from).collect::<Result<_, _>>()?,
        })
    }
}

impl Encodable for LweSecretKey {
    const TAG: TypeTag = TypeTag::LweSecretKey;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        container(Self::TAG, h, 0, 0.0, 1, vec![Array::signed(&self.bits)])
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        let [a] = c.arrays.as_slice() else {
            return Err(SerialError::Malformed("expected one array".into()));
        };
        Ok(Self { bits: a.to_signed()? })
    }
}

impl Encodable for GlweSecretKey {
    const TAG: TypeTag = TypeTag::GlweSecretKey;

    fn encode_into(&self, h: [u8; 32]) -> Container {
        container(
            Self::TAG,
            h,
            0,
            0.0,
            1,
            self.polys.iter().map(|p| Array::signed(p)).collect(),
        )
    }

    fn decode_from(c: &Container) -> Result<Self, SerialError> {
        Ok(Self {
            polys: c.arrays.iter().map(Array::to_signed).collect::<Result<_, _>>()?,
        })
    }
}
