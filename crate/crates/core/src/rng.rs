//! Portable seed derivation and PRNG.
//!
//! Both algorithms are part of the on-disk contract: golden perturbation
//! files produced by any implementation must agree bit for bit, so neither
//! may change. See `docs/formats.md` for the normative description and test
//! vectors.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-caption seed: FNV-1a over `master_seed (u64 LE) || len(id) (u32 LE) ||
/// id || len(tag) (u32 LE) || tag`, passed through [`mix64`].
pub fn derive_seed(master_seed: u64, caption_id: &str, kind_tag: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master_seed.to_le_bytes());
    h = fnv1a(h, &(caption_id.len() as u32).to_le_bytes());
    h = fnv1a(h, caption_id.as_bytes());
    h = fnv1a(h, &(kind_tag.len() as u32).to_le_bytes());
    h = fnv1a(h, kind_tag.as_bytes());
    mix64(h)
}

/// SplitMix64 (Steele, Lea, Flood).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `0..n` by rejection of the low `2^64 mod n` values.
    ///
    /// # Panics
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Fisher–Yates, walking from the last element down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Picks `min(m, n)` distinct indices of `0..n` (partial Fisher–Yates from
    /// the front), returned in ascending order.
    pub fn choose_indices(&mut self, n: usize, m: usize) -> Vec<usize> {
        let m = m.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool.sort_unstable();
        pool
    }
}
