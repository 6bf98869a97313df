//! Adaptive Gauss–Kronrod (10/21) integration with QUADPACK-style error
//! estimates and user breakpoints.

use crate::scalar::Scalar;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_059,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_114,
    0.562_757_134_668_604_683_339_000_099_272,
    0.433_395_394_129_247_190_799_265_943_165,
    0.294_392_862_701_460_198_131_126_603_103,
    0.148_874_338_981_631_210_884_826_001_129,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_244,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_325,
    0.123_491_976_262_065_851_077_715_644_920,
    0.134_709_217_311_473_325_928_054_001_771,
    0.142_775_938_577_060_080_797_094_273_138,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_389,
];

// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_657,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Scalar> QuadConfig<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        QuadConfig {
            abs_tol,
            rel_tol,
            max_intervals: 400,
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
    pub converged: bool,
}

impl<T: Scalar> Quad<T> {
    pub fn zero() -> Self {
        Quad {
            value: T::zero(),
            error: T::zero(),
            intervals: 0,
            converged: true,
        }
    }

    pub fn add(self, other: Quad<T>) -> Quad<T> {
        Quad {
            value: self.value + other.value,
            error: self.error + other.error,
            intervals: self.intervals + other.intervals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, s: T) -> Quad<T> {
        Quad {
            value: self.value * s,
            error: self.error * s.abs(),
            ..self
        }
    }
}

#[derive(Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    splittable: bool,
}

/// Single 21-point Kronrod panel. Returns (integral, error estimate).
pub fn gk21<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut resk = fc * T::lit(WGK[10]);
    let mut resg = T::zero();
    let mut resabs = resk.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        resk = resk + w * (f1 + f2);
        resabs = resabs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg = resg + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let reskh = resk * half;
    let mut resasc = T::lit(WGK[10]) * (fc - reskh).abs();
    for j in 0..10 {
        resasc = resasc + T::lit(WGK[j]) * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let habs = h.abs();
    let result = resk * h;
    resabs = resabs * habs;
    resasc = resasc * habs;
    let mut err = ((resk - resg) * h).abs();
    if resasc != T::zero() && err != T::zero() {
        let ratio = (T::lit(200.0) * err / resasc).powf(T::lit(1.5));
        err = resasc * ratio.min(T::one());
    }
    let eps50 = T::epsilon() * T::lit(50.0);
    if resabs > T::min_positive_value() / eps50 {
        err = err.max(eps50 * resabs);
    }
    (result, err)
}

fn panel<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let (value, error) = gk21(f, a, b);
    let mid = T::lit(0.5) * (a + b);
    let width = (b - a).abs();
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    let splittable = mid > a.min(b) && mid < a.max(b) && width > T::epsilon() * T::lit(100.0) * scale;
    Segment {
        a,
        b,
        value,
        error,
        splittable,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from one
/// panel per consecutive pair of breakpoints and bisecting the panel with the
/// largest error until the global tolerance is met.
pub fn integrate_with_breaks<T: Scalar, F: Fn(T) -> T>(f: F, points: &[T], cfg: &QuadConfig<T>) -> Quad<T> {
    let mut segs: Vec<Segment<T>> = Vec::with_capacity(cfg.max_intervals.max(points.len()));
    for w in points.windows(2) {
        if w[1] != w[0] {
            segs.push(panel(&f, w[0], w[1]));
        }
    }
    if segs.is_empty() {
        return Quad::zero();
    }
    loop {
        let value: T = segs.iter().map(|s| s.value).sum();
        let error: T = segs.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Quad {
                value,
                error,
                intervals: segs.len(),
                converged: false,
            };
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            return Quad {
                value,
                error,
                intervals: segs.len(),
                converged: true,
            };
        }
        let worst = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Quad {
                value,
                error,
                intervals: segs.len(),
                converged: false,
            };
        };
        if segs.len() >= cfg.max_intervals {
            return Quad {
                value,
                error,
                intervals: segs.len(),
                converged: false,
            };
        }
        let s = segs[i];
        let mid = T::lit(0.5) * (s.a + s.b);
        segs[i] = panel(&f, s.a, mid);
        segs.push(panel(&f, mid, s.b));
    }
}

pub fn integrate<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Quad<T> {
    integrate_with_breaks(f, &[a, b], cfg)
}

/// Sorts, clips to `[a, b]` and dedups interior breakpoints.
pub fn breakpoints<T: Scalar>(a: T, b: T, interior: &[T]) -> Vec<T> {
    let mut pts = Vec::with_capacity(interior.len() + 2);
    pts.push(a);
    let mut inner: Vec<T> = interior.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let (v, _) = gk21(&|x: f64| x.powi(20), 0.0, 1.0);
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let cfg = QuadConfig::new(1e-12, 1e-12);
        let q = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, &cfg);
        assert!(q.converged);
        assert!((q.value - 2.0).abs() < 1e-9, "{}", q.value);
    }

    #[test]
    fn breakpoint_at_discontinuity() {
        let cfg = QuadConfig::new(1e-13, 1e-13);
        let f = |x: f64| if x < 0.3 { 1.0 } else { x.exp() };
        let q = integrate_with_breaks(f, &breakpoints(0.0, 1.0, &[0.3]), &cfg);
        let exact = 0.3 + 1f64.exp() - 0.3f64.exp();
        assert!((q.value - exact).abs() < 1e-13);
        assert_eq!(q.intervals, 2);
    }

    #[test]
    fn single_precision() {
        let cfg = QuadConfig::new(1e-6f32, 1e-6);
        let q = integrate(|x: f32| x.cos(), 0.0, 1.0, &cfg);
        assert!((q.value - 1f32.sin()).abs() < 1e-6);
    }
}
