//! Homomorphic encryption kernels (RNS-CKKS, TFHE, scheme conversion) and a
//! cycle-level model of a multi-modal FHE accelerator.

pub mod archsim;
pub mod bench;
pub mod ckks;
pub mod convert;
pub mod error;
pub mod kernels;
pub mod modmath;
pub mod polyring;
pub mod sampling;
pub mod serial;
pub mod tfhe;
