//! Globally adaptive Gauss–Kronrod (10/21) quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 200_000 }
    }
}

impl QuadOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        QuadOptions { abs_tol: tol, rel_tol: tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 21-point Kronrod evaluation with its embedded error estimate.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale);
    Segment { a, b, value, error }
}

/// Integrate `f` over `[points[0], points[last]]`, starting from the
/// subdivision given by `points` (strictly increasing, at least two entries).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: &QuadOptions,
    context: &'static str,
) -> Result<QuadResult> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap: BinaryHeap<Segment> =
        points.windows(2).filter(|w| w[1] > w[0]).map(|w| gk21(&f, w[0], w[1])).collect();

    let (mut value, mut error) = totals(&heap);
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            // final totals recomputed with compensation
            let (value, error) = totals(&heap);
            return Ok(QuadResult { value, error, intervals: heap.len() });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > opts.max_intervals || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (_, error) = totals(&heap);
            return Err(Error::QuadratureNotConverged { error, tolerance: target, context });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if error < 0.0 || heap.len().is_multiple_of(1024) {
            (value, error) = totals(&heap);
        }
    }
}

/// Compensated totals over all segments, so the result does not depend on
/// heap order beyond rounding of the Neumaier sum.
fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut v = NeumaierSum::default();
    let mut e = 0.0;
    for s in heap.iter() {
        v.add(s.value);
        e += s.error;
    }
    (v.value(), e)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, &[0.0, 2.0], &QuadOptions::default(), "poly").unwrap();
        assert_relative_eq!(r.value, 64.0 / 6.0 - 4.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_with_breakpoints() {
        // ∫_0^{20π} sin²(x) e^{-x/50} dx
        let pts: Vec<f64> = (0..=40).map(|k| k as f64 * std::f64::consts::PI / 2.0).collect();
        let r = integrate(|x| x.sin().powi(2) * (-x / 50.0).exp(), &pts, &QuadOptions::default(), "osc").unwrap();
        let c = 1.0 / 50.0;
        let b = 20.0 * std::f64::consts::PI;
        // ½∫e^{-cx}(1 - cos 2x)
        let exact = 0.5 * ((1.0 - (-c * b).exp()) / c - c * (1.0 - (-c * b).exp()) / (c * c + 4.0));
        assert_relative_eq!(r.value, exact, max_relative = 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_intervals: 4 };
        let e = integrate(|x: f64| x.abs().sqrt().recip(), &[1e-300, 1.0], &opts, "singular");
        assert!(matches!(e, Err(Error::QuadratureNotConverged { .. })));
    }
}
