//! Seed derivation for reproducible, non-overlapping random streams.
//!
//! All randomness in the crate flows through a single ladder: a user-supplied
//! root seed is combined with small integer tags (generation index, algorithm
//! id, run index) through a splitmix64-style finalizer. Equal inputs always
//! produce equal streams; distinct tag tuples produce statistically
//! independent ones.

/// splitmix64 finalizer. Bijective on u64, good avalanche behavior.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and one tag.
#[inline]
pub fn mix2(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Derive a child seed from a parent seed and two tags.
#[inline]
pub fn mix3(seed: u64, tag_a: u64, tag_b: u64) -> u64 {
    mix2(mix2(seed, tag_a), tag_b)
}
