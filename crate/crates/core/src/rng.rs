//! Reproducible random streams.
//!
//! Every sampling session owns one `RandomStream`. A stream is a ChaCha8
//! generator keyed by a 64-bit seed and positioned on a 64-bit stream id,
//! so replica `k` of a run seeded with `s` always sees the same sequence
//! regardless of platform, thread count, or the order replicas execute in.
//!
//! Derived draws go through `rand` 0.8's `Standard` (53-bit floats in
//! `[0, 1)`) and `gen_range` (Lemire widening multiply for integers).

use rand::{Error, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RandomStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}
