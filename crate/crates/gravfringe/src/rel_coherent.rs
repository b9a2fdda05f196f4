//! Relativistic coherent states of the trapped field.
//!
//! The one-dimensional wavefunction is the mode series
//!
//! ```text
//! psi(x, t) = sum_n c_n psi_n(x) [A_n e^{-i w_n t} - B_n e^{+i w_n t}] / (2 sqrt(w_n))
//! ```
//!
//! with `c_n = (alpha e^{i theta})^n / sqrt(n!)`, `A_n = sqrt(w_n/w_0) + sqrt(w_0/w_n)`
//! and `B_n = sqrt(w_n/w_0) - sqrt(w_0/w_n)`. Each coefficient also carries
//! `e^{-alpha²/2}` so that the nonrelativistic limit has unit norm; this is a
//! constant per component and drops out of every normalized density.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::trap_modes::{mode_frequency, mode_frequency_excess, scaled_value, HermiteRecurrence, TrapParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Amplitude, phase and axis of one coherent component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentSpec {
    pub alpha: f64,
    pub theta: f64,
    pub axis: Axis,
}

impl CoherentSpec {
    /// `alpha >= 0`; `theta` is reduced into `[0, 2π)`.
    pub fn new(alpha: f64, theta: f64, axis: Axis) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coherent amplitude must be finite and non-negative, got {alpha}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("phase must be finite, got {theta}")));
        }
        Ok(Self {
            alpha,
            theta: theta.rem_euclid(TAU),
            axis,
        })
    }

    /// Real, possibly negative amplitude; a negative value becomes phase π.
    pub fn real(alpha: f64, axis: Axis) -> Result<Self> {
        if alpha < 0.0 {
            Self::new(-alpha, PI, axis)
        } else {
            Self::new(alpha, 0.0, axis)
        }
    }
}

/// Number of retained modes and the tolerance it was chosen for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub n_max: usize,
    pub tail_tol: f64,
}

/// Smallest `n_max` any amplitude `alpha` may use.
pub fn truncation_floor(alpha: f64) -> usize {
    let lambda = alpha * alpha;
    (lambda + 10.0 * (lambda + 1.0).sqrt()).ceil() as usize
}

/// Bound on the relative density error from dropping all modes above `n_max`.
///
/// The dropped amplitudes `a_n = lambda^{n/2} e^{-lambda/2} / sqrt(n!)` decay at
/// least geometrically with ratio `sqrt(lambda / (n_max + 2))`, which bounds
/// their sum `l1`. Mode functions and mixing factors are bounded by the
/// ground-state scale, so the density changes by at most `2.2 l1 + l1²`
/// relative to it.
pub fn tail_bound(alpha: f64, n_max: usize) -> f64 {
    let lambda = alpha * alpha;
    if lambda == 0.0 {
        return 0.0;
    }
    let next = (n_max + 1) as f64;
    let ratio = (lambda / (next + 1.0)).sqrt();
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let first = (0.5 * next * lambda.ln() - 0.5 * ln_gamma(next + 1.0) - 0.5 * lambda).exp();
    let l1 = first / (1.0 - ratio);
    2.2 * l1 + l1 * l1
}

impl TruncationPolicy {
    pub fn new(n_max: usize, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "tail tolerance must lie in (0, 1e-6], got {tail_tol}"
            )));
        }
        Ok(Self { n_max, tail_tol })
    }

    /// Confirm the policy is adequate for amplitude `alpha`.
    pub fn check(&self, alpha: f64) -> Result<()> {
        let floor = truncation_floor(alpha);
        if self.n_max < floor {
            return Err(Error::InvalidParameter(format!(
                "n_max = {} is below the minimum {floor} for alpha = {alpha}",
                self.n_max
            )));
        }
        let bound = tail_bound(alpha, self.n_max);
        if bound > self.tail_tol {
            return Err(Error::TruncationUnconverged {
                n_max: self.n_max,
                tail_bound: bound,
                tail_tol: self.tail_tol,
            });
        }
        Ok(())
    }
}

/// `n_max = ceil(alpha² + c sqrt(alpha² + 1))`, raising `c` from 10 until
/// the tail bound meets `tail_tol`.
pub fn choose_truncation(alpha: f64, tail_tol: f64) -> Result<TruncationPolicy> {
    let alpha = alpha.abs();
    let lambda = alpha * alpha;
    let mut c = 10.0;
    loop {
        let n_max = (lambda + c * (lambda + 1.0).sqrt()).ceil() as usize;
        let policy = TruncationPolicy::new(n_max, tail_tol)?;
        if tail_bound(alpha, n_max) <= tail_tol {
            return Ok(policy);
        }
        c += 1.0;
    }
}

/// Per-mode complex coefficients at time `t`, excluding `psi_n(x)`.
fn mode_coefficients(spec: &CoherentSpec, t: f64, omega: f64, n_max: usize) -> Vec<Complex64> {
    let last = if spec.alpha == 0.0 { 0 } else { n_max };
    let w0 = mode_frequency(0, omega);
    let log_alpha = spec.alpha.ln();
    let half_norm = 0.5 * spec.alpha * spec.alpha;
    // Rest-mass phase e^{-it}, shared by every mode.
    let rest = Complex64::from_polar(1.0, -t);

    (0..=last)
        .map(|n| {
            let nf = n as f64;
            let log_mag = if n == 0 {
                -half_norm
            } else {
                nf * log_alpha - 0.5 * ln_gamma(nf + 1.0) - half_norm
            };
            let wn = mode_frequency(n as u64, omega);
            let r = (wn / w0).sqrt();
            let a = r + 1.0 / r;
            let b = r - 1.0 / r;
            let forward = rest * Complex64::from_polar(1.0, -mode_frequency_excess(n as u64, omega) * t);
            let time = a * forward - b * forward.conj();
            let phase = Complex64::from_polar(1.0, nf * spec.theta);
            phase * time * (log_mag.exp() / (2.0 * wn.sqrt()))
        })
        .collect()
}

/// Series sum at one point with the mode recurrence evaluated inline.
fn sum_at(coefficients: &[Complex64], omega: f64, x: f64) -> Complex64 {
    let mut rec = HermiteRecurrence::new(omega, x);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut cached_log = f64::NAN;
    let mut factor = 0.0;
    for (n, c) in coefficients.iter().enumerate() {
        if n > 0 {
            rec.advance();
        }
        let (mantissa, log_scale) = rec.scaled();
        if log_scale != cached_log {
            cached_log = log_scale;
            factor = log_scale.exp();
        }
        let value = if factor > 1e-290 {
            mantissa * factor
        } else {
            scaled_value(mantissa, log_scale)
        };
        acc += c * value;
    }
    acc
}

/// Complex amplitudes of one coherent component on `grid` at time `t`.
pub fn rcs_wavefunction(
    spec: &CoherentSpec,
    t: f64,
    grid: &[f64],
    params: &TrapParams,
    trunc: &TruncationPolicy,
) -> Result<Vec<Complex64>> {
    trunc.check(spec.alpha)?;
    let coefficients = mode_coefficients(spec, t, params.omega, trunc.n_max);
    let omega = params.omega;
    Ok(grid.par_iter().map(|&x| sum_at(&coefficients, omega, x)).collect())
}

/// Exact squared norm of the truncated series at time `t`.
pub fn rcs_norm_sq(spec: &CoherentSpec, t: f64, params: &TrapParams, trunc: &TruncationPolicy) -> Result<f64> {
    trunc.check(spec.alpha)?;
    Ok(mode_coefficients(spec, t, params.omega, trunc.n_max)
        .iter()
        .map(|c| c.norm_sqr())
        .sum())
}

/// Probability density on an ordered grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
    pub normalized: bool,
}

impl DensityProfile {
    /// Trapezoid-rule integral of `weight(x) * density`.
    fn weighted_integral(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (weight(x[0]) * v[0] + weight(x[1]) * v[1]))
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.weighted_integral(|_| 1.0)
    }

    /// Rescale to unit trapezoid integral.
    pub fn normalize(&mut self) {
        let total = self.integral();
        if total > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= total);
            self.normalized = true;
        }
    }

    /// Mean and variance of position under the normalized density.
    pub fn mean_variance(&self) -> (f64, f64) {
        let total = self.integral();
        let mean = self.weighted_integral(|x| x) / total;
        let var = self.weighted_integral(|x| (x - mean) * (x - mean)) / total;
        (mean, var)
    }

    /// CSV with header `x,density`, using shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", crate::format_float(*x), crate::format_float(*v)));
        }
        out
    }
}

/// Default grid: 2048 points over `±(sqrt(2/ω)|alpha| + 8/sqrt(ω))`.
pub fn default_grid(omega: f64, alpha: f64) -> Vec<f64> {
    let half = (2.0 / omega).sqrt() * alpha.abs() + 8.0 / omega.sqrt();
    uniform_grid(-half, half, 2048)
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// `|sum_j w_j psi_j(x, t)|²` for weighted coherent components.
pub fn superposition_density(
    components: &[(CoherentSpec, Complex64)],
    t: f64,
    grid: &[f64],
    params: &TrapParams,
    trunc: &TruncationPolicy,
    normalize: bool,
) -> Result<DensityProfile> {
    if components.is_empty() {
        return Err(Error::InvalidParameter(
            "superposition needs at least one component".into(),
        ));
    }
    let mut total = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (spec, weight) in components {
        let psi = rcs_wavefunction(spec, t, grid, params, trunc)?;
        for (acc, p) in total.iter_mut().zip(psi) {
            *acc += weight * p;
        }
    }
    let mut profile = DensityProfile {
        grid: grid.to_vec(),
        values: total.iter().map(|z| z.norm_sqr()).collect(),
        time: t,
        normalized: false,
    };
    if normalize {
        profile.normalize();
    }
    Ok(profile)
}

/// Oscillation frequency with the leading relativistic shift, `ω - ω² alpha²`.
///
/// Requires `ω alpha² < 1`.
pub fn corrected_frequency(params: &TrapParams, alpha: f64) -> f64 {
    let omega = params.omega;
    debug_assert!(omega * alpha * alpha < 1.0);
    omega - omega * omega * alpha * alpha
}

/// Time of the `index`-th crossing of the `±alpha` components at the trap
/// centre, for oscillation at angular frequency `frequency`.
pub fn centre_crossing_time(frequency: f64, index: usize) -> f64 {
    (0.5 * PI + PI * index as f64) / frequency
}

/// Centre of mass of a single normalized component on the default grid.
pub fn packet_centre(spec: &CoherentSpec, t: f64, params: &TrapParams, trunc: &TruncationPolicy) -> Result<f64> {
    let grid = default_grid(params.omega, spec.alpha);
    let profile = superposition_density(&[(*spec, Complex64::new(1.0, 0.0))], t, &grid, params, trunc, false)?;
    Ok(profile.mean_variance().0)
}

/// Position variance of the normalized single-component density at each time.
pub fn variance_series(
    spec: &CoherentSpec,
    times: &[f64],
    params: &TrapParams,
    trunc: &TruncationPolicy,
) -> Result<Vec<(f64, f64)>> {
    let horizon = 50.0 * TAU / params.omega;
    let grid = default_grid(params.omega, spec.alpha);
    times
        .iter()
        .map(|&t| {
            if t.is_nan() || t.abs() > horizon {
                return Err(Error::InvalidParameter(format!("t = {t} lies beyond 50 trap periods")));
            }
            let profile = superposition_density(&[(*spec, Complex64::new(1.0, 0.0))], t, &grid, params, trunc, false)?;
            Ok((t, profile.mean_variance().1))
        })
        .collect()
}

/// Position and value of a local extremum refined by a parabola through the
/// sample and its two neighbours.
fn refine_extremum(x: &[f64], v: &[f64], i: usize) -> (f64, f64) {
    let (ym, y0, yp) = (v[i - 1], v[i], v[i + 1]);
    let curvature = ym - 2.0 * y0 + yp;
    if curvature == 0.0 {
        return (x[i], y0);
    }
    let offset = 0.5 * (ym - yp) / curvature;
    let h = 0.5 * (x[i + 1] - x[i - 1]);
    (x[i] + offset * h, y0 - 0.25 * (ym - yp) * offset)
}

/// Fringe visibility `(I_max - I_min) / (I_max + I_min)` inside `window`.
///
/// `I_max` is the highest local maximum in the window and `I_min` the mean of
/// the local minima on either side of it.
pub fn extract_visibility(profile: &DensityProfile, window: (f64, f64)) -> Result<f64> {
    let (x, v) = (&profile.grid, &profile.values);
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] < window.0 || x[i] > window.1 {
            continue;
        }
        if v[i] > v[i - 1] && v[i] >= v[i + 1] {
            maxima.push((i, refine_extremum(x, v, i).1));
        } else if v[i] < v[i - 1] && v[i] <= v[i + 1] {
            minima.push((i, refine_extremum(x, v, i).1.max(0.0)));
        }
    }
    let found = maxima.len() + minima.len();
    if found < 3 {
        return Err(Error::InsufficientFringes { found });
    }

    let &(peak_index, peak) = maxima
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::InsufficientFringes { found })?;
    let left = minima.iter().rev().find(|m| m.0 < peak_index).map(|m| m.1);
    let right = minima.iter().find(|m| m.0 > peak_index).map(|m| m.1);
    let trough = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(m), None) | (None, Some(m)) => m,
        (None, None) => return Err(Error::InsufficientFringes { found }),
    };
    if peak + trough <= 0.0 {
        return Err(Error::InsufficientFringes { found });
    }
    Ok(((peak - trough) / (peak + trough)).clamp(0.0, 1.0))
}

/// Local maxima in the window that reach at least `fraction` of the largest.
pub fn count_fringes(profile: &DensityProfile, window: (f64, f64), fraction: f64) -> usize {
    let (x, v) = (&profile.grid, &profile.values);
    let peaks: Vec<f64> = (1..x.len().saturating_sub(1))
        .filter(|&i| x[i] >= window.0 && x[i] <= window.1 && v[i] > v[i - 1] && v[i] >= v[i + 1])
        .map(|i| v[i])
        .collect();
    let top = peaks.iter().cloned().fold(0.0, f64::max);
    peaks.iter().filter(|&&p| p >= fraction * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trap(omega: f64) -> TrapParams {
        TrapParams::new(omega, 0.0, 1).unwrap()
    }

    #[test]
    fn truncation_floor_for_vacuum() {
        let p = choose_truncation(0.0, 1e-8).unwrap();
        assert!(p.n_max >= 10);
        assert!(p.check(0.0).is_ok());
    }

    #[test]
    fn truncation_meets_tolerance() {
        for alpha in [0.5, 2.0, 5.0, 8.0, 12.0] {
            let p = choose_truncation(alpha, 1e-10).unwrap();
            assert!(p.n_max >= truncation_floor(alpha));
            assert!(tail_bound(alpha, p.n_max) <= 1e-10);
        }
    }

    #[test]
    fn truncation_rejects_loose_tolerance() {
        assert!(choose_truncation(1.0, 1e-3).is_err());
        assert!(TruncationPolicy::new(50, 0.0).is_err());
    }

    #[test]
    fn short_series_is_unconverged() {
        let policy = TruncationPolicy::new(truncation_floor(5.0), 1e-30).unwrap();
        let grid = [0.0];
        let spec = CoherentSpec::new(5.0, 0.0, Axis::X).unwrap();
        let r = rcs_wavefunction(&spec, 0.0, &grid, &trap(5e-4), &policy);
        assert!(matches!(r, Err(Error::TruncationUnconverged { .. })));
    }

    #[test]
    fn vacuum_is_ground_state_times_phase() {
        let params = trap(1e-3);
        let spec = CoherentSpec::new(0.0, 0.0, Axis::X).unwrap();
        let trunc = choose_truncation(0.0, 1e-10).unwrap();
        let grid = uniform_grid(-200.0, 200.0, 41);
        let w0 = mode_frequency(0, 1e-3);
        for t in [0.0, 17.3, 4.0e4] {
            let psi = rcs_wavefunction(&spec, t, &grid, &params, &trunc).unwrap();
            for (p, &x) in psi.iter().zip(&grid) {
                let ground = crate::trap_modes::hermite_fn(0, 1e-3, x);
                let ratio = p / ground;
                assert!((ratio.norm() - 1.0 / w0.sqrt()).abs() < 1e-13);
                assert!((ratio - Complex64::from_polar(1.0 / w0.sqrt(), -w0 * t)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn corrected_frequency_values() {
        let p = trap(5e-4);
        assert_eq!(corrected_frequency(&p, 0.0), 5e-4);
        assert!((corrected_frequency(&p, 5.0) - (5e-4 - 6.25e-6)).abs() < 1e-18);
    }

    #[test]
    fn spec_normalizes_phase() {
        let s = CoherentSpec::real(-3.0, Axis::Y).unwrap();
        assert_eq!(s.alpha, 3.0);
        assert!((s.theta - PI).abs() < 1e-15);
        assert!(CoherentSpec::new(-1.0, 0.0, Axis::X).is_err());
        let wrapped = CoherentSpec::new(1.0, -0.5, Axis::X).unwrap();
        assert!((wrapped.theta - (TAU - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn visibility_of_constructed_profiles() {
        let grid = uniform_grid(-10.0, 10.0, 4001);
        let modulated: Vec<f64> = grid
            .iter()
            .map(|x| (-x * x / 8.0).exp() * (1.0 + (3.0 * x).cos()))
            .collect();
        let profile = DensityProfile {
            grid: grid.clone(),
            values: modulated,
            time: 0.0,
            normalized: false,
        };
        let v = extract_visibility(&profile, (-4.0, 4.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "{v}");

        let half: Vec<f64> = grid
            .iter()
            .map(|x| (-x * x / 50.0).exp() * (1.0 + 0.5 * (3.0 * x).cos()))
            .collect();
        let profile = DensityProfile {
            grid: grid.clone(),
            values: half,
            time: 0.0,
            normalized: false,
        };
        let v = extract_visibility(&profile, (-4.0, 4.0)).unwrap();
        assert!((v - 0.5).abs() < 0.01, "{v}");

        let plain: Vec<f64> = grid.iter().map(|x| (-x * x / 8.0).exp()).collect();
        let profile = DensityProfile {
            grid,
            values: plain,
            time: 0.0,
            normalized: false,
        };
        assert!(matches!(
            extract_visibility(&profile, (-4.0, 4.0)),
            Err(Error::InsufficientFringes { .. })
        ));
    }

    #[test]
    fn profile_statistics() {
        let grid = uniform_grid(-20.0, 20.0, 4001);
        let values = grid.iter().map(|x| (-(x - 1.0) * (x - 1.0) / 2.0).exp()).collect();
        let mut profile = DensityProfile {
            grid,
            values,
            time: 0.0,
            normalized: false,
        };
        profile.normalize();
        assert!((profile.integral() - 1.0).abs() < 1e-12);
        let (m, v) = profile.mean_variance();
        assert!((m - 1.0).abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
        assert!(profile.to_csv().starts_with("x,density\n"));
    }
}
