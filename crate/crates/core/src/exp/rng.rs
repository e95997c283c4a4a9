//! Named random streams derived from one master seed.
//!
//! `stream_seed(master, name) = splitmix64(master XOR fnv1a64(name))`, and
//! each stream is a ChaCha8 generator seeded with that value. Streams used by
//! a training run:
//!
//! | name              | consumer                                        |
//! |-------------------|-------------------------------------------------|
//! | `env`             | episode resets                                  |
//! | `central-init`    | central actor-critic initialization             |
//! | `local-init`      | shared local actor-critic initialization        |
//! | `central-policy`  | message sampling and central minibatch shuffles |
//! | `local-policy`    | action sampling and local minibatch shuffles    |
//! | `random-messages` | uniform messages in the random-message baseline |
//! | `eval-env`        | evaluation resets (from the evaluation seed)    |
//! | `eval-policy`     | evaluation sampling (from the evaluation seed)  |
//!
//! Because the environment has its own stream, every mode sees the same
//! sequence of start states under the same master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, name: &str) -> u64 {
    splitmix64(master ^ fnv1a64(name))
}

pub fn stream(master: u64, name: &str) -> RunRng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, name))
}
