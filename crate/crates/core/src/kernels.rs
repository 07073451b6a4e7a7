//! Per-thread instrumentation of primitive kernel invocations.
//!
//! Every scheme operation funnels its arithmetic through a handful of kernels
//! (NTT, BConv, IP, ModMul, ModAdd, Auto, plus the TFHE-side Rotate/Decompose
//! and external-product accumulation). Counting them lets tests assert which
//! kernels an operation is built from and lets the simulator cross-check the
//! kernel graphs it builds analytically.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kernel {
    Ntt,
    Intt,
    BConv,
    InnerProduct,
    ModMul,
    ModAdd,
    Auto,
    Rotate,
    Decompose,
    ExternalProductMac,
    SampleExtract,
}

impl Kernel {
    pub const ALL: [Kernel; 11] = [
        Kernel::Ntt,
        Kernel::Intt,
        Kernel::BConv,
        Kernel::InnerProduct,
        Kernel::ModMul,
        Kernel::ModAdd,
        Kernel::Auto,
        Kernel::Rotate,
        Kernel::Decompose,
        Kernel::ExternalProductMac,
        Kernel::SampleExtract,
    ];

    /// The six CKKS kernels (NTT counts both directions).
    pub fn is_ckks_kernel(self) -> bool {
        matches!(
            self,
            Kernel::Ntt
                | Kernel::Intt
                | Kernel::BConv
                | Kernel::InnerProduct
                | Kernel::ModMul
                | Kernel::ModAdd
                | Kernel::Auto
        )
    }
}

/// Invocation counts, one entry per kernel kind that fired.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCounts(pub BTreeMap<Kernel, u64>);

impl KernelCounts {
    pub fn get(&self, k: Kernel) -> u64 {
        self.0.get(&k).copied().unwrap_or(0)
    }

    pub fn kinds(&self) -> impl Iterator<Item = Kernel> + '_ {
        self.0.iter().filter(|(_, &v)| v > 0).map(|(&k, _)| k)
    }
}

thread_local! {
    static COUNTS: RefCell<BTreeMap<Kernel, u64>> = const { RefCell::new(BTreeMap::new()) };
}

#[inline]
pub fn record(kernel: Kernel, times: u64) {
    COUNTS.with(|c| *c.borrow_mut().entry(kernel).or_insert(0) += times);
}

pub fn reset() {
    COUNTS.with(|c| c.borrow_mut().clear());
}

pub fn snapshot() -> KernelCounts {
    COUNTS.with(|c| KernelCounts(c.borrow().clone()))
}

/// Runs `f` and returns the kernels it invoked on this thread.
pub fn count<R>(f: impl FnOnce() -> R) -> (R, KernelCounts) {
    let before = snapshot();
    let out = f();
    let after = snapshot();
    let mut diff = BTreeMap::new();
    for (k, v) in after.0 {
        let d = v - before.get(k);
        if d > 0 {
            diff.insert(k, d);
        }
    }
    (out, KernelCounts(diff))
}
