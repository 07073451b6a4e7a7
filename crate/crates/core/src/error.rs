use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModMathError {
    #[error("{value} has no inverse modulo {modulus}")]
    NoInverse { value: u64, modulus: u64 },
    #[error("prime search exhausted: {0}")]
    SearchExhausted(String),
    #[error("basis mismatch: expected {expected} residues, got {got}")]
    BasisMismatch { expected: usize, got: usize },
    #[error("{0} is not a supported NTT-friendly prime")]
    InvalidModulus(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("NTT tables (n={table_n}, q={table_q}) do not match polynomial (n={poly_n}, q={poly_q})")]
    TableMismatch {
        table_n: usize,
        table_q: u64,
        poly_n: usize,
        poly_q: u64,
    },
    #[error("wrong representation: expected {expected:?}")]
    RepError { expected: crate::polyring::Representation },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("decomposition of {levels} x {log_base} bits exceeds the {modulus_bits}-bit modulus")]
    DecompositionOverflow {
        levels: usize,
        log_base: u32,
        modulus_bits: u32,
    },
    #[error(transparent)]
    ModMath(#[from] ModMathError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CkksError {
    #[error("{got} values exceed the {max} available slots")]
    SlotOverflow { got: usize, max: usize },
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("scale mismatch: {0} vs {1}")]
    ScaleMismatch(f64, f64),
    #[error("no levels left to rescale")]
    NoLevelsLeft,
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("no key for Galois element {0}")]
    KeyNotFound(u64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    ModMath(#[from] ModMathError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TfheError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("lookup table is not negacyclic over the full torus (x = {0})")]
    NegacyclicViolation(u64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    ModMath(#[from] ModMathError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvertError {
    #[error("{got} slots exceed ring dimension {n}")]
    SlotOverflow { got: usize, n: usize },
    #[error("LWE dimension {got} does not match ring dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("ciphertext must be at a single residue modulus (level 0), found level {0}")]
    NotSingleModulus(usize),
    #[error(transparent)]
    Ckks(#[from] CkksError),
    #[error(transparent)]
    Tfhe(#[from] TfheError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("unsupported operation: {0}")]
    UnsupportedOp(String),
    #[error("unsupported NTT size {0} (must be a power of two in [2^8, 2^16])")]
    UnsupportedSize(usize),
    #[error("kernel graph is not acyclic (node {0} depends on a later node)")]
    Cycle(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("plan does not cover node {0}")]
    Unplanned(usize),
}

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("unexpected type tag {got}, expected {expected}")]
    WrongType { expected: u16, got: u16 },
    #[error("parameter hash mismatch")]
    ParamsMismatch,
    #[error("truncated container")]
    Truncated,
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    ModMath(#[from] ModMathError),
    #[error(transparent)]
    Ckks(#[from] CkksError),
    #[error(transparent)]
    Tfhe(#[from] TfheError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad summary document: {0}")]
    Parse(String),
}
