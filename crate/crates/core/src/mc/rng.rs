//! Philox2x64-10 counter-based generator. Every path owns a disjoint slice of
//! the counter space, so draws do not depend on scheduling.

use rand::RngCore;

const MUL: u64 = 0xD2B7_4407_B1CE_6E93;
const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

pub fn philox2x64(ctr: [u64; 2], key: u64) -> [u64; 2] {
    let [mut c0, mut c1] = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k = k.wrapping_add(WEYL);
        }
        let p = (c0 as u128) * (MUL as u128);
        let (hi, lo) = ((p >> 64) as u64, p as u64);
        c0 = hi ^ k ^ c1;
        c1 = lo;
    }
    [c0, c1]
}

/// Counter namespaces. The high byte of the second counter word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Ns {
    Stream = 1,
    Increment = 2,
    Midpoint = 3,
    Touch = 4,
    Deadline = 5,
    JumpPoint = 6,
}

const ID_MASK: u64 = (1 << 56) - 1;

#[inline]
fn counter(path: u64, ns: Ns, id: u64) -> [u64; 2] {
    debug_assert!(id <= ID_MASK);
    [path, ((ns as u64) << 56) | (id & ID_MASK)]
}

/// Random words addressed by `(seed, path, namespace, id)`.
#[inline]
pub(crate) fn keyed(seed: u64, path: u64, ns: Ns, id: u64) -> [u64; 2] {
    philox2x64(counter(path, ns, id), seed)
}

#[inline]
pub(crate) fn unit_open(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * TWO_POW_M53
}

#[inline]
pub(crate) fn keyed_uniform(seed: u64, path: u64, ns: Ns, id: u64) -> f64 {
    unit_open(keyed(seed, path, ns, id)[0])
}

/// Box-Muller on a single counter block.
#[inline]
pub(crate) fn keyed_normal_pair(seed: u64, path: u64, ns: Ns, id: u64) -> (f64, f64) {
    let [a, b] = keyed(seed, path, ns, id);
    let rad = (-2.0 * unit_open(a).ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * (b >> 11) as f64 * TWO_POW_M53).sin_cos();
    (rad * c, rad * s)
}

#[inline]
pub(crate) fn keyed_normal(seed: u64, path: u64, ns: Ns, id: u64) -> f64 {
    keyed_normal_pair(seed, path, ns, id).0
}

/// Sequential stream for one path, usable with `rand` distributions.
#[derive(Debug, Clone)]
pub struct PathRng {
    seed: u64,
    path: u64,
    block: u64,
    buf: [u64; 2],
    used: usize,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        PathRng {
            seed,
            path,
            block: 0,
            buf: [0; 2],
            used: 2,
        }
    }
}

impl RngCore for PathRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        if self.used == 2 {
            self.buf = keyed(self.seed, self.path, Ns::Stream, self.block);
            self.block += 1;
            self.used = 0;
        }
        let w = self.buf[self.used];
        self.used += 1;
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_answers() {
        assert_eq!(philox2x64([0, 0], 0), [0xca00a0459843d731, 0x66c24222c9a845b5]);
        assert_eq!(
            philox2x64([u64::MAX, u64::MAX], u64::MAX),
            [0x65b021d60cd8310f, 0x4d02f3222f86df20]
        );
        assert_eq!(
            philox2x64([0x243f6a8885a308d3, 0x13198a2e03707344], 0xa4093822299f31d0),
            [0x0a5e742c2997341c, 0xb0f883d38000de5d]
        );
    }

    #[test]
    fn streams_are_disjoint_and_repeatable() {
        let mut a = PathRng::new(7, 3);
        let mut b = PathRng::new(7, 3);
        let mut c = PathRng::new(7, 4);
        let xa: Vec<u64> = (0..9).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..9).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..9).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn keyed_normal_moments() {
        let n = 200_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..n {
            let z = keyed_normal(11, i, Ns::Midpoint, 5);
            s1 += z;
            s2 += z * z;
        }
        let m = s1 / n as f64;
        let v = s2 / n as f64 - m * m;
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 1.0).abs() < 0.015, "{v}");
    }

    #[test]
    fn keyed_pair_is_uncorrelated() {
        let n = 200_000u64;
        let mut s = 0.0;
        for i in 0..n {
            let (a, b) = keyed_normal_pair(3, i, Ns::Increment, 17);
            s += a * b;
        }
        assert!((s / n as f64).abs() < 0.01);
    }
}
