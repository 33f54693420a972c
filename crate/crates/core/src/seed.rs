//! Deterministic seed derivation.
//!
//! All randomness in the toolkit flows from a single root seed through
//! `derive`: root -> component tag -> instance tags. Any sub-result can be
//! re-derived independently by replaying the same tag path.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a root seed with an ordered tag path into an independent stream seed.
pub fn derive(root: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(root);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t));
    }
    state
}

/// Component tags for the documented derivation tree.
pub mod component {
    pub const SYNTH: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const MODEL: u64 = 3;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_deterministic_and_tag_sensitive() {
        assert_eq!(derive(7, &[1, 2, 3]), derive(7, &[1, 2, 3]));
        assert_ne!(derive(7, &[1, 2, 3]), derive(7, &[1, 3, 2]));
        assert_ne!(derive(7, &[1, 2, 3]), derive(8, &[1, 2, 3]));
        assert_ne!(derive(7, &[]), derive(7, &[0]));
    }
}
