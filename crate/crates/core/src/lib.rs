//! CBCSTI: a chaos-based block cipher for images.
//!
//! Pixel positions are scrambled with a 2D chaotic map (Arnold cat map or
//! Standard map), then every byte goes through an r-round substitution /
//! bit-permutation network whose round material is drawn from two PWLCM
//! orbits perturbed by maximal-length LFSRs. Four chaining modes (CBC, OFB,
//! CFB, CTR) are supported for each of the five variants A–E.
//!
//! Alongside the cipher, [`analysis`] provides the closed-form bit-error
//! propagation model for each chaining mode, a seeded binary symmetric
//! channel, and the usual image-encryption metrics (entropy, adjacent-pixel
//! correlation, NPCR, UACI, histogram uniformity).
//!
//! With the default `parallel` feature, data-parallel loops run on rayon;
//! without it every path runs sequentially and produces identical bytes.

pub mod analysis;
pub mod chaos;
pub mod cipher;
pub mod error;
pub mod image;
pub mod par;
pub mod permutation;
pub mod selftest;
pub mod spn;

pub use cipher::{
    decrypt_image, encrypt_image, CipherConfig, CipherText, Mode, PermMethod, SecretKey, Variant,
};
pub use error::{Error, Result};
pub use image::ImageBuffer;
