//! Counter-based random streams: one independent stream per trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream for `(seed, kind, point, trial)`; independent of scheduling order.
pub fn trial_rng(seed: u64, kind: &str, point: usize, trial: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update((point as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let d = h.finalize();
    let stream = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
