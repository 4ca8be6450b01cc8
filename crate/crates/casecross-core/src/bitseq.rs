use alloc::vec::Vec;

/// A 0/1 sequence over flattened time steps, stored one bit per *block* of
/// consecutive steps.
///
/// Per-step processes use `block_len = 1`. Processes that broadcast one draw
/// across a block of steps (e.g. an hourly exposure shared by every second
/// within the hour) store one bit per block, so an 86 400-step trajectory
/// with hourly draws occupies a couple of machine words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSeq {
    words: Vec<u64>,
    len: u32,
    block_len: u32,
}

impl BitSeq {
    /// All-zero sequence of `len` steps with the given block length.
    pub fn zeros(len: u32, block_len: u32) -> Self {
        assert!(block_len >= 1, "block length must be at least 1");
        let bits = len.div_ceil(block_len) as usize;
        BitSeq { words: alloc::vec![0; bits.div_ceil(64)], len, block_len }
    }

    /// Reset in place, keeping the allocation.
    pub fn reset(&mut self, len: u32, block_len: u32) {
        assert!(block_len >= 1, "block length must be at least 1");
        let bits = len.div_ceil(block_len) as usize;
        self.words.clear();
        self.words.resize(bits.div_ceil(64), 0);
        self.len = len;
        self.block_len = block_len;
    }

    /// Number of steps covered.
    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Steps per stored bit.
    pub fn block_len(&self) -> u32 {
        self.block_len
    }

    /// Number of blocks (stored bits).
    pub fn n_blocks(&self) -> u32 {
        self.len.div_ceil(self.block_len)
    }

    /// Value at step `step`.
    #[inline]
    pub fn get(&self, step: u32) -> bool {
        debug_assert!(step < self.len);
        let bit = (step / self.block_len) as usize;
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    /// Value of block `block`.
    #[inline]
    pub fn get_block(&self, block: u32) -> bool {
        debug_assert!(block < self.n_blocks());
        self.words[block as usize / 64] >> (block % 64) & 1 == 1
    }

    /// Set the block containing `step` to 1.
    #[inline]
    pub fn set_step(&mut self, step: u32) {
        debug_assert!(step < self.len);
        let bit = (step / self.block_len) as usize;
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    /// Iterate per-step values.
    pub fn iter_steps(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |s| self.get(s))
    }

    /// Number of steps set to 1 among the first `upto` steps.
    pub fn count_ones_before(&self, upto: u32) -> u64 {
        let upto = upto.min(self.len);
        let full_blocks = upto / self.block_len;
        let mut ones = 0u64;
        for b in 0..full_blocks {
            if self.get_block(b) {
                ones += self.block_len as u64;
            }
        }
        let rem = upto % self.block_len;
        if rem > 0 && self.get_block(full_blocks) {
            ones += rem as u64;
        }
        ones
    }
}
