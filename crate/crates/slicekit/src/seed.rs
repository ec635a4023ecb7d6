//! Deterministic sub-seed derivation.
//!
//! Every randomized phase of a run (clustering init, bucket permutation,
//! random grouping, workload reconstruction folds) draws its own seed from the
//! single root seed plus a fixed label, so phases stay independent and a run
//! is reproducible from the manifest alone.

/// Derive a phase seed from a root seed and a label.
///
/// FNV-1a over the label bytes folded into the root, then finalized with the
/// splitmix64 mixer. Stable across platforms and releases by construction.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

    let mut h = FNV_OFFSET ^ root;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
