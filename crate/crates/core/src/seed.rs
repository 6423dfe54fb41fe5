//! Seed mixing shared by the simulators.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of replicate `index` under `master`, independent of scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> =
            (0..10_000).map(|i| derive_seed(5, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(derive_seed(5, 0), derive_seed(6, 0));
    }
}
