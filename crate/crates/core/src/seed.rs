//! Deterministic seed derivation.
//!
//! All randomness in a run flows from one root seed. Stage seeds are derived
//! by hashing the stage name (FNV-1a) into the root and mixing (SplitMix64);
//! samplers further derive one seed per fixed-size chunk so output is
//! deterministic regardless of how the work is split.

/// SplitMix64 mixing step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for a named pipeline stage.
pub fn stage_seed(root: u64, stage: &str) -> u64 {
    splitmix64(root ^ fnv1a64(stage.as_bytes()))
}

/// Seed for chunk `index` of a stage's sample stream.
pub fn chunk_seed(stage: u64, index: u64) -> u64 {
    splitmix64(stage ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        // frozen: these exact values are part of the reproducibility contract
        assert_eq!(fnv1a64(b"sample"), 0xF3D8_02FE_7A8B_A4C7);
        assert_eq!(splitmix64(1), 0x910A_2DEC_8902_5CC1);
        assert_eq!(stage_seed(7, "sample"), 0x1E0C_3977_341D_BEEB);
        assert_eq!(chunk_seed(stage_seed(7, "sample"), 0), 0x7F66_E469_5AB9_14F2);
    }

    #[test]
    fn stages_distinct() {
        let root = 0xDEAD_BEEF;
        let a = stage_seed(root, "generate");
        let b = stage_seed(root, "sample");
        let c = stage_seed(root, "tomography");
        assert!(a != b && b != c && a != c);
        assert_ne!(chunk_seed(a, 0), chunk_seed(a, 1));
    }
}
