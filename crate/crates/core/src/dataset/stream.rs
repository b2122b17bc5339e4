//! The seeded pseudorandom stream behind fold assignment and augmentation.
//!
//! SplitMix64 (Steele, Lea & Flood): the state advances by the golden-gamma
//! constant and each output is the state passed through a fixed 64-bit
//! finaliser. The algorithm is tiny and fully specified, so any language can
//! reproduce the same folds and augmentation draws bit-for-bit.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, used to fold tile ids into stream keys.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream for one augmentation draw: key = mix64(mix64(seed ^ fnv1a64(tile_id)) ^ draw_index).
    pub fn for_draw(seed: u64, tile_id: &str, draw_index: u64) -> Self {
        let key = mix64(mix64(seed ^ fnv1a64(tile_id.as_bytes())) ^ draw_index);
        SplitMix64::new(key)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..bound` by plain modulo reduction.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    /// Fisher-Yates, walking from the last slot down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
