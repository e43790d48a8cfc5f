//! Counter-based, splittable random keys.
//!
//! A [`RandomKey`] is 128 bits of key material for the Threefry-2x64
//! block cipher (20 rounds). Every draw is the cipher applied to a counter
//! under that key, so draws are pure functions of `(key, length)` and the
//! key can be split or folded into new keys without any shared state.
//!
//! Counters carry a domain tag in their high word so that split children,
//! folded keys and raw draws never collide:
//!
//! | operation          | counter                  |
//! |--------------------|--------------------------|
//! | `split(n)[i]`      | `[i, SPLIT_DOMAIN]`      |
//! | `fold_in(data)`    | `[data, FOLD_DOMAIN]`    |
//! | i-th draw block    | `[i, DRAW_DOMAIN]`       |
//!
//! Since the cipher is a bijection on counters for a fixed key, children
//! of one key are pairwise distinct by construction.
//!
//! Root keys are expanded from a 64-bit seed by encrypting `[seed, 0]`
//! under the fixed key `[ROOT_KEY_0, ROOT_KEY_1]`.
//!
//! Uniforms take the top 53 bits of a 64-bit word. Normals use Box–Muller
//! on consecutive pairs of uniforms. Integers use Lemire's multiply-and-reject
//! method, which is exactly unbiased.

use thiserror::Error;

const SKEIN_PARITY: u64 = 0x1BD1_1BDA_A9FC_1A22;
const ROTATIONS: [u32; 8] = [16, 42, 12, 31, 16, 32, 24, 21];

const SPLIT_DOMAIN: u64 = 0x5350_4c49_5400_0001;
const FOLD_DOMAIN: u64 = 0x464f_4c44_0000_0002;
const DRAW_DOMAIN: u64 = 0x4452_4157_0000_0003;

const ROOT_KEY_0: u64 = 0x243F_6A88_85A3_08D3;
const ROOT_KEY_1: u64 = 0x1319_8A2E_0370_7344;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrngError {
    #[error("cannot split a key into zero children")]
    EmptySplit,
    #[error("empty integer range: minval {minval} >= maxval {maxval}")]
    EmptyRange { minval: i64, maxval: i64 },
}

/// Threefry-2x64 with 20 rounds.
pub fn threefry2x64(key: [u64; 2], counter: [u64; 2]) -> [u64; 2] {
    let ks = [key[0], key[1], SKEIN_PARITY ^ key[0] ^ key[1]];
    let mut x0 = counter[0].wrapping_add(ks[0]);
    let mut x1 = counter[1].wrapping_add(ks[1]);
    for round in 0..20 {
        x0 = x0.wrapping_add(x1);
        x1 = x1.rotate_left(ROTATIONS[round % 8]);
        x1 ^= x0;
        if round % 4 == 3 {
            let s = round / 4 + 1;
            x0 = x0.wrapping_add(ks[s % 3]);
            x1 = x1.wrapping_add(ks[(s + 1) % 3]).wrapping_add(s as u64);
        }
    }
    [x0, x1]
}

/// Identifier of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RandomKey([u64; 2]);

impl RandomKey {
    pub fn from_raw(state: [u64; 2]) -> Self {
        RandomKey(state)
    }

    /// Expands a 64-bit seed into a root key.
    pub fn from_seed(seed: u64) -> Self {
        RandomKey(threefry2x64([ROOT_KEY_0, ROOT_KEY_1], [seed, 0]))
    }

    pub fn raw(&self) -> [u64; 2] {
        self.0
    }

    /// `n` pairwise-distinct child keys.
    pub fn split(&self, n: usize) -> Result<Vec<RandomKey>, PrngError> {
        if n == 0 {
            return Err(PrngError::EmptySplit);
        }
        Ok((0..n as u64).map(|i| self.child(i)).collect())
    }

    /// The `i`-th element of `split(n)` for any `n > i`, without
    /// materializing the rest.
    pub fn child(&self, i: u64) -> RandomKey {
        RandomKey(threefry2x64(self.0, [i, SPLIT_DOMAIN]))
    }

    /// Derives a key from this one and an integer tag (e.g. a chain index).
    pub fn fold_in(&self, data: u64) -> RandomKey {
        RandomKey(threefry2x64(self.0, [data, FOLD_DOMAIN]))
    }

    fn bits(&self) -> Bits {
        Bits {
            key: self.0,
            block: 0,
            buf: [0; 2],
            pos: 2,
        }
    }

    /// `len` uniform draws on `[0, 1)`.
    pub fn uniform(&self, len: usize) -> Vec<f64> {
        let mut bits = self.bits();
        (0..len).map(|_| unit_f64(bits.next_u64())).collect()
    }

    pub fn uniform_scalar(&self) -> f64 {
        unit_f64(self.bits().next_u64())
    }

    /// `len` i.i.d. standard normal draws.
    pub fn normal(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut bits = self.bits();
        while out.len() < len {
            // 1 - u lies in (0, 1], keeping the logarithm finite.
            let u1 = 1.0 - unit_f64(bits.next_u64());
            let u2 = unit_f64(bits.next_u64());
            let radius = (-2.0 * u1.ln()).sqrt();
            let angle = std::f64::consts::TAU * u2;
            out.push(radius * angle.cos());
            if out.len() < len {
                out.push(radius * angle.sin());
            }
        }
        out
    }

    pub fn normal_scalar(&self) -> f64 {
        self.normal(1)[0]
    }

    /// Uniform integer on `{minval, ..., maxval - 1}`.
    pub fn randint(&self, minval: i64, maxval: i64) -> Result<i64, PrngError> {
        if minval >= maxval {
            return Err(PrngError::EmptyRange { minval, maxval });
        }
        let range = maxval.wrapping_sub(minval) as u64;
        let mut bits = self.bits();
        let offset = bounded(&mut bits, range);
        Ok(minval.wrapping_add(offset as i64))
    }
}

fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// Lemire's nearly-divisionless method with rejection.
fn bounded(bits: &mut Bits, range: u64) -> u64 {
    let mut m = bits.next_u64() as u128 * range as u128;
    let mut low = m as u64;
    if low < range {
        let threshold = range.wrapping_neg() % range;
        while low < threshold {
            m = bits.next_u64() as u128 * range as u128;
            low = m as u64;
        }
    }
    (m >> 64) as u64
}

/// Sequential 64-bit words from the draw domain of one key.
struct Bits {
    key: [u64; 2],
    block: u64,
    buf: [u64; 2],
    pos: usize,
}

impl Bits {
    fn next_u64(&mut self) -> u64 {
        if self.pos == 2 {
            self.buf = threefry2x64(self.key, [self.block, DRAW_DOMAIN]);
            self.block += 1;
            self.pos = 0;
        }
        let x = self.buf[self.pos];
        self.pos += 1;
        x
    }
}
