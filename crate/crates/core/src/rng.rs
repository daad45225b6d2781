//! Seeded random substreams.
//!
//! Every realization draws from ChaCha8 keyed by the master seed, with the
//! stream id built from the realization index and a link tag. ChaCha output is
//! specified bit-exactly, so streams are identical across platforms and
//! independent of how realizations are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent draw families within one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    TxRis = 1,
    RisRx = 2,
    TxRx = 3,
    Phases = 4,
}

const STREAMS_PER_INDEX: u64 = 8;

pub fn substream(seed: u64, index: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_mul(STREAMS_PER_INDEX).wrapping_add(stream as u64));
    rng
}
