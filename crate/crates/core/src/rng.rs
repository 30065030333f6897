//! Counter-based randomness.
//!
//! Every uniform is a pure function of a key derived from `(seed, replicate)`
//! and a position, computed with the Philox4x32-10 block function. Replicates
//! therefore never share generator state, and a Monte Carlo run gives the same
//! numbers regardless of how replicates are scheduled across threads.
//!
//! Within an urn step the positions are split into channels:
//!
//! * channel 0, indices 0, 1, 2, ...: choosing the component of the drawn ball
//!   and sampling inside it;
//! * channel `k >= 1`, index 0: the `k`-th `[0,1]` coordinate of a colour in a
//!   product space (level 1 is the innermost), and the uniform handed to a
//!   random kernel on a space with `k - 1` product levels.
//!
//! With this layout, a random urn on `S` and its lift on `S × [0,1]` consume
//! exactly the same numbers when run with the same key: the lifted chain reads
//! its new `[0,1]` coordinate where the base chain reads its kernel uniform.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Channel used by the sequential cursor, outside the range any step uses.
const SEQUENTIAL_CHANNEL: u32 = u32::MAX;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 block function with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The key of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(seed: u64, replicate: u64) -> Self {
        Self { seed, replicate }
    }

    // splitmix64 is a bijection, so distinct replicates under one seed always
    // get distinct Philox keys.
    fn philox_key(&self) -> [u32; 2] {
        let k = self.seed ^ splitmix64(self.replicate);
        [k as u32, (k >> 32) as u32]
    }

    /// The uniform in `[0,1)` at a position.
    pub fn uniform(&self, step: u64, channel: u32, index: u32) -> f64 {
        let block = self.block(step, channel, index / 2);
        let pair = if index % 2 == 0 {
            [block[0], block[1]]
        } else {
            [block[2], block[3]]
        };
        to_unit(((pair[1] as u64) << 32) | pair[0] as u64)
    }

    fn block(&self, step: u64, channel: u32, block: u32) -> [u32; 4] {
        philox4x32_10(
            [block, channel, step as u32, (step >> 32) as u32],
            self.philox_key(),
        )
    }
}

/// Anything that hands out uniforms for sampling from a measure.
pub trait UniformSource {
    /// Next uniform for component selection and within-component sampling.
    fn uniform(&mut self) -> f64;

    /// The uniform for the `[0,1]` coordinate at product level `level >= 1`.
    fn coordinate(&mut self, level: usize) -> f64;
}

/// A sequential stream: `(key, position)` determines each output.
#[derive(Debug, Clone)]
pub struct RandomnessStream {
    key: StreamKey,
    position: u64,
    buffered: Option<f64>,
}

impl RandomnessStream {
    pub fn new(seed: u64, replicate: u64) -> Self {
        Self::from_key(StreamKey::new(seed, replicate))
    }

    pub fn from_key(key: StreamKey) -> Self {
        Self {
            key,
            position: 0,
            buffered: None,
        }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Number of uniforms consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn next_uniform(&mut self) -> f64 {
        let pos = self.position;
        self.position += 1;
        if pos % 2 == 1 {
            if let Some(u) = self.buffered.take() {
                return u;
            }
        }
        let block_index = pos / 2;
        let block = philox4x32_10(
            [
                block_index as u32,
                SEQUENTIAL_CHANNEL,
                (block_index >> 32) as u32,
                0,
            ],
            self.key.philox_key(),
        );
        let first = to_unit(((block[1] as u64) << 32) | block[0] as u64);
        let second = to_unit(((block[3] as u64) << 32) | block[2] as u64);
        if pos % 2 == 0 {
            self.buffered = Some(second);
            first
        } else {
            second
        }
    }

    /// The per-step view used by the urn runner.
    pub fn at_step(&self, step: u64) -> StepDraws {
        StepDraws::new(self.key, step)
    }
}

impl UniformSource for RandomnessStream {
    fn uniform(&mut self) -> f64 {
        self.next_uniform()
    }

    fn coordinate(&mut self, _level: usize) -> f64 {
        self.next_uniform()
    }
}

/// Randomness of one urn step, laid out in channels.
#[derive(Debug, Clone)]
pub struct StepDraws {
    key: StreamKey,
    step: u64,
    next_index: u32,
}

impl StepDraws {
    pub fn new(key: StreamKey, step: u64) -> Self {
        Self {
            key,
            step,
            next_index: 0,
        }
    }

    /// The kernel uniform for a random kernel on a space with `depth` product
    /// levels.
    pub fn kernel_uniform(&self, depth: usize) -> f64 {
        self.key.uniform(self.step, depth as u32 + 1, 0)
    }
}

impl UniformSource for StepDraws {
    fn uniform(&mut self) -> f64 {
        let u = self.key.uniform(self.step, 0, self.next_index);
        self.next_index += 1;
        u
    }

    fn coordinate(&mut self, level: usize) -> f64 {
        debug_assert!(level >= 1);
        self.key.uniform(self.step, level as u32, 0)
    }
}

/// Split one uniform into `k` by dealing out the bits of its 53-bit expansion
/// round-robin. Each output keeps roughly `53 / k` bits.
pub fn split_uniform(u: f64, k: usize) -> crate::Result<Vec<f64>> {
    if !(1..=8).contains(&k) {
        return Err(crate::Error::SplitOutOfRange(k));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(crate::Error::UniformOutOfRange(u));
    }
    if k == 1 {
        return Ok(vec![u]);
    }
    const BITS: u32 = 53;
    let scaled = (u * (1u64 << BITS) as f64) as u64;
    let mantissa = scaled.min((1u64 << BITS) - 1);
    let mut acc = vec![0u64; k];
    let mut len = vec![0u32; k];
    for i in 0..BITS {
        let bit = (mantissa >> (BITS - 1 - i)) & 1;
        let s = (i as usize) % k;
        acc[s] = (acc[s] << 1) | bit;
        len[s] += 1;
    }
    Ok(acc
        .iter()
        .zip(&len)
        .map(|(&a, &l)| a as f64 / (1u64 << l) as f64)
        .collect())
}
