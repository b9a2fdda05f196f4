//! Deterministic adaptive quadrature.
//!
//! One-dimensional integrals use a globally adaptive 7-point Gauss / 15-point
//! Kronrod pair with bisection of the worst interval. Double integrals over the
//! triangle `0 <= s2 <= s1 <= s` nest the 1-D rule. A brute-force midpoint
//! oracle is provided for verification.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Maximum bisection depth of any interval.
pub const MAX_DEPTH: u32 = 30;
/// Hard cap on integrand evaluations per call.
pub const MAX_EVALUATIONS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

struct RuleOutput {
    value: f64,
    error: f64,
    resabs: f64,
}

/// One application of the 15-point Kronrod rule with QUADPACK's error scaling.
fn gauss_kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<RuleOutput>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;
    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let abs_half = half.abs();
    let value = res_kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;

    let mut error = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }

    Ok(RuleOutput {
        value,
        error,
        resabs: res_abs,
    })
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
    depth: u32,
    // Creation order; breaks ties so the refinement sequence is reproducible.
    seq: u64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Globally adaptive integration of a fallible integrand.
fn adaptive<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let mut evaluations: u64 = 15;
    let first = gauss_kronrod(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Segment {
        a,
        b,
        value: first.value,
        error: first.error,
        resabs: first.resabs,
        depth: 0,
        seq,
    });

    loop {
        let total_error: f64 = heap.iter().map(|s| s.error).sum();
        let total_abs: f64 = heap.iter().map(|s| s.resabs).sum();
        // Each interval reports at least 50 eps |f| of error, so demanding
        // less than this floor would bisect forever without gaining accuracy.
        let floor = 100.0 * f64::EPSILON * total_abs;
        if total_error <= tol.max(floor) {
            break;
        }

        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let splittable = mid > worst.a && mid < worst.b;
        if worst.depth >= MAX_DEPTH || !splittable || evaluations + 30 > MAX_EVALUATIONS {
            let error_estimate = total_error;
            return Err(Error::NonConvergent {
                error_estimate,
                tol,
                evaluations,
            });
        }

        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let rule = gauss_kronrod(&mut f, lo, hi)?;
            seq += 1;
            heap.push(Segment {
                a: lo,
                b: hi,
                value: rule.value,
                error: rule.error,
                resabs: rule.resabs,
                depth: worst.depth + 1,
                seq,
            });
        }
        evaluations += 30;
    }

    // Sum in left-to-right order so the result does not depend on heap layout.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().map(|s| s.value).sum();
    let error_estimate = segments.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations,
    })
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// ```
/// let r = gravfringe::quadrature::integrate_1d(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
/// assert!((r.value - 2.0).abs() < 1e-12);
/// ```
pub fn integrate_1d<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    adaptive(|x| Ok(f(x)), a, b, tol)
}

/// Integrate `g(s1, s2)` over the triangle `0 <= s2 <= s1 <= s`.
pub fn integrate_triangle<G>(g: G, s: f64, tol: f64) -> Result<QuadResult>
where
    G: Fn(f64, f64) -> f64,
{
    integrate_triangle_with_edge(g, |_| 0.0, s, tol)
}

/// Integrate `edge(s1) + ∫_0^{s1} g(s1, s2) ds2` over `s1 ∈ [0, s]`.
///
/// Half the tolerance goes to the outer rule. Each inner integral gets
/// `tol / (2 s)`, so inner errors contribute at most `tol / 2` once
/// integrated over the outer range. Inner results are cached on the exact
/// bit pattern of `s1`.
pub fn integrate_triangle_with_edge<G, H>(g: G, edge: H, s: f64, tol: f64) -> Result<QuadResult>
where
    G: Fn(f64, f64) -> f64,
    H: Fn(f64) -> f64,
{
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "upper limit must be finite and non-negative, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 1,
        });
    }

    let inner_tol = tol / (2.0 * s);
    let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
    let inner_evaluations = RefCell::new(0u64);
    let worst_inner_error = RefCell::new(0.0f64);

    let outer = adaptive(
        |s1| {
            if let Some(&v) = cache.borrow().get(&s1.to_bits()) {
                return Ok(v + edge(s1));
            }
            let inner = adaptive(|s2| Ok(g(s1, s2)), 0.0, s1, inner_tol)?;
            *inner_evaluations.borrow_mut() += inner.evaluations;
            let mut worst = worst_inner_error.borrow_mut();
            *worst = worst.max(inner.error_estimate);
            if *inner_evaluations.borrow() > MAX_EVALUATIONS {
                return Err(Error::NonConvergent {
                    error_estimate: *worst,
                    tol,
                    evaluations: *inner_evaluations.borrow(),
                });
            }
            cache.borrow_mut().insert(s1.to_bits(), inner.value);
            Ok(inner.value + edge(s1))
        },
        0.0,
        s,
        0.5 * tol,
    )?;

    let inner_evaluations = inner_evaluations.into_inner();
    let worst_inner_error = worst_inner_error.into_inner();
    Ok(QuadResult {
        value: outer.value,
        error_estimate: outer.error_estimate + s * worst_inner_error,
        evaluations: outer.evaluations + inner_evaluations,
    })
}

/// Midpoint-rule value of `∫_0^s [edge(s1) + ∫_0^{s1} g ds2] ds1` on an
/// `m x m` grid of square cells.
///
/// Cells strictly below the diagonal use their centre. Diagonal cells are cut
/// in half and use the centroid of the lower triangle. Rows are summed in
/// parallel and reduced in index order.
fn midpoint_grid<G, H>(g: &G, edge: &H, s: f64, m: usize) -> f64
where
    G: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let h = s / m as f64;
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let s1 = (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            for j in 0..i {
                acc += g(s1, (j as f64 + 0.5) * h);
            }
            acc *= h * h;
            let diag = g((i as f64 + 2.0 / 3.0) * h, (i as f64 + 1.0 / 3.0) * h);
            acc + 0.5 * h * h * diag + h * edge(s1)
        })
        .collect();
    rows.iter().sum()
}

/// Number of grid rows whose triangle holds about `panels` cells.
fn rows_for_panels(panels: usize) -> usize {
    assert!(panels >= 10_000, "the oracle needs at least 10^4 panels");
    // m (m + 1) / 2 cells in the lower triangle.
    (((8.0 * panels as f64 + 1.0).sqrt() - 1.0) / 2.0).floor() as usize
}

/// Plain midpoint oracle for `∫∫_{0<=s2<=s1<=s} g` with about `panels` cells.
pub fn riemann_oracle<G>(g: G, s: f64, panels: usize) -> f64
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    midpoint_grid(&g, &|_| 0.0, s, rows_for_panels(panels))
}

/// Richardson-extrapolated midpoint oracle with an optional edge term.
///
/// The midpoint error has an `h^2` term from the square cells and an `h^3`
/// term from the staircase along the diagonal. Three grids with `m`, `m/2`
/// and `m/4` rows remove both. The finest grid holds about `panels` cells.
pub fn riemann_oracle_extrapolated<G, H>(g: G, edge: H, s: f64, panels: usize) -> f64
where
    G: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let m = rows_for_panels(panels) / 4 * 4;
    let fine = midpoint_grid(&g, &edge, s, m);
    let mid = midpoint_grid(&g, &edge, s, m / 2);
    let coarse = midpoint_grid(&g, &edge, s, m / 4);
    let r_fine = (4.0 * fine - mid) / 3.0;
    let r_coarse = (4.0 * mid - coarse) / 3.0;
    (8.0 * r_fine - r_coarse) / 7.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_over_half_period() {
        let r = integrate_1d(f64::sin, 0.0, PI, 1e-10).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        assert!(r.error_estimate >= 0.0 && r.evaluations > 0);
    }

    #[test]
    fn constant_is_exact() {
        let r = integrate_1d(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn constant_distance_kernel() {
        // sin^2(x + pi/2) + sin^2(x) = 1, so the integral is the interval length.
        let f = |x: f64| {
            let d = (x + PI / 2.0).sin().powi(2) + x.sin().powi(2);
            1.0 / (d * d.sqrt())
        };
        let r = integrate_1d(f, 0.0, 2.0 * PI, 1e-12).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        let r = integrate_1d(f64::exp, 1.5, 1.5, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_reversed_bounds_and_bad_tolerance() {
        assert!(integrate_1d(f64::sin, 1.0, 0.0, 1e-8).is_err());
        assert!(integrate_1d(f64::sin, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn peaked_integrand() {
        // Lorentzian of width 1e-3: needs deep refinement near the peak.
        let eps = 1e-3;
        let f = |x: f64| eps / PI / (x * x + eps * eps);
        let r = integrate_1d(f, -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 / PI * (1.0 / eps).atan();
        assert!((r.value - exact).abs() < 1e-10, "{} vs {}", r.value, exact);
    }

    #[test]
    fn singular_integrand_reports_nonconvergence() {
        let r = integrate_1d(|x: f64| 1.0 / x.abs().max(1e-300), -1.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn triangle_area_and_moment() {
        let s = 3.7;
        let area = integrate_triangle(|_, _| 1.0, s, 1e-12).unwrap();
        assert!((area.value - s * s / 2.0).abs() < 1e-12);
        let moment = integrate_triangle(|_, s2| s2, s, 1e-12).unwrap();
        assert!((moment.value - s.powi(3) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_with_edge() {
        let s = 2.0;
        let r = integrate_triangle_with_edge(|s1, s2| s1 * s2, f64::cos, s, 1e-12).unwrap();
        // ∫ s1^3/2 ds1 + sin(s)
        let exact = s.powi(4) / 8.0 + s.sin();
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn triangle_zero_extent() {
        let r = integrate_triangle(|_, _| 1.0, 0.0, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn oracle_area() {
        let s = 2.0;
        let v = riemann_oracle(|_, _| 1.0, s, 1_000_000);
        assert!((v - s * s / 2.0).abs() / (s * s / 2.0) < 1e-6);
    }

    #[test]
    fn oracle_is_second_order() {
        let g = |s1: f64, s2: f64| (s1 - 0.3 * s2).sin() * (0.5 * s2).exp();
        let exact = integrate_triangle(g, 2.0, 1e-13).unwrap().value;
        let e1 = (riemann_oracle(g, 2.0, 20_000) - exact).abs();
        // Four times the cells halves the cell width.
        let e2 = (riemann_oracle(g, 2.0, 80_000) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.15, "observed order {order}");
    }

    #[test]
    fn extrapolated_oracle_matches_adaptive() {
        let g = |s1: f64, s2: f64| (s1 - 0.3 * s2).sin() * (0.5 * s2).exp();
        let exact = integrate_triangle_with_edge(g, f64::cos, 5.0, 1e-13).unwrap().value;
        let oracle = riemann_oracle_extrapolated(g, f64::cos, 5.0, 1_000_000);
        assert!((oracle - exact).abs() < 1e-9, "{oracle} vs {exact}");
    }

    #[test]
    fn deterministic() {
        let g = |s1: f64, s2: f64| 1.0 / (1.5 + (s1 + s2).sin());
        let a = integrate_triangle(g, 10.0, 1e-10).unwrap();
        let b = integrate_triangle(g, 10.0, 1e-10).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }
}
