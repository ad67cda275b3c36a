//! Derivation of independent RNG seeds for every (repetition, fold, purpose).

/// What a derived seed is used for. Each purpose gets its own stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Folds = 1,
    Assignment = 2,
    Smote = 3,
    SolverShuffle = 4,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64` chained over base seed, repetition, fold and purpose.
///
/// Fold splits only depend on `(base, rep)`: pass `fold = 0` for [`Purpose::Folds`].
pub fn derive_seed(base: u64, rep: usize, fold: usize, purpose: Purpose) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ rep as u64);
    h = splitmix64(h ^ (fold as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ purpose as u64)
}
