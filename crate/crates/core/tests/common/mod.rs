#![allow(dead_code)]

use parisian_core::{Kernel, Model, Tolerances};

pub fn cl() -> Model {
    Model::cramer_lundberg(1.5, 1.0, 1.0).unwrap()
}

pub fn bm() -> Model {
    Model::brownian(1.0, 1.0).unwrap()
}

pub fn models() -> [(&'static str, Model); 2] {
    [("cl", cl()), ("bm", bm())]
}

pub fn kernel(m: &Model, q: f64) -> Kernel {
    Kernel::new(m, q, &Tolerances::default()).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

const GL10: [(f64, f64); 5] = [
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_4),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
];

/// Composite 10-point Gauss-Legendre on `n` equal panels.
pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let c = a + (i as f64 + 0.5) * h;
        for &(x, w) in &GL10 {
            s += w * (f(c - 0.5 * h * x) + f(c + 0.5 * h * x));
        }
    }
    0.5 * h * s
}

/// Scale function of `mu t + sigma B_t` from its two exponential roots.
pub fn brownian_w(mu: f64, sigma: f64, q: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let d = (mu * mu + 2.0 * q * s2).sqrt();
    let (up, down) = ((-mu + d) / s2, (-mu - d) / s2);
    ((up * x).exp() - (down * x).exp()) / d
}

/// `W^(0)` of the compound Poisson model with premium 1.5, rate 1, Exp(1)
/// claims, by partial fractions of `1 / psi`: `psi(l) = l (1.5 l + 0.5) / (1 + l)`.
pub fn cl_w0(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        2.0 - 4.0 / 3.0 * (-x / 3.0).exp()
    }
}

pub fn normal_pdf(z: f64, mean: f64, var: f64) -> f64 {
    (-(z - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}
