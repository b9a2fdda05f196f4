//! Mode basis of a scalar field in a relativistic harmonic trap.
//!
//! All quantities are dimensionless: lengths in Compton wavelengths and the
//! trap frequency as `omega = ħω / mc²`. The functions here take the raw
//! `omega >= 0` so that the flat-space limit `omega = 0` stays reachable.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

/// Global physical context of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapParams {
    /// Trap frequency in units of the rest energy.
    pub omega: f64,
    /// Gravitational coupling.
    pub kappa: f64,
    /// Number of particles carried by each mass.
    pub n_particles: u32,
}

impl TrapParams {
    pub fn new(omega: f64, kappa: f64, n_particles: u32) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be non-negative and finite, got {kappa}"
            )));
        }
        if n_particles == 0 {
            return Err(Error::InvalidParameter("n_particles must be at least 1".into()));
        }
        Ok(Self {
            omega,
            kappa,
            n_particles,
        })
    }

    /// Prefactor `N² κ² / 32π` shared by every action correction.
    pub fn coupling(&self) -> f64 {
        let n = f64::from(self.n_particles);
        n * n * self.kappa * self.kappa / (32.0 * PI)
    }

    /// Human-readable warnings when leaving the weakly relativistic regime.
    /// These never reject a run.
    pub fn advisories(&self, alpha: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.omega.sqrt() > 0.1 {
            out.push(format!(
                "sqrt(omega) = {:.3} is not small; relativistic corrections are not perturbative",
                self.omega.sqrt()
            ));
        }
        if self.omega.sqrt() * alpha.abs() >= 1.0 {
            out.push(format!(
                "sqrt(omega)*|alpha| = {:.3} >= 1; outside the weakly relativistic regime",
                self.omega.sqrt() * alpha.abs()
            ));
        }
        out
    }
}

/// `omega_n - 1`, computed without cancellation.
pub fn mode_frequency_excess(n: u64, omega: f64) -> f64 {
    let shift = 2.0 * omega * (n as f64 + 1.5);
    shift / ((1.0 + shift).sqrt() + 1.0)
}

/// Eigenfrequency `omega_n = sqrt(1 + 2 omega (n + 3/2))` of the 1-D mode `n`.
pub fn mode_frequency(n: u64, omega: f64) -> f64 {
    (1.0 + 2.0 * omega * (n as f64 + 1.5)).sqrt()
}

/// Running evaluation of normalized oscillator eigenfunctions at one point.
///
/// Values are held as `mantissa * exp(log_scale)`. The mantissa is rescaled
/// by an exact power of two whenever it grows large, so neither the Gaussian
/// factor nor the growth of the recurrence can overflow or underflow.
#[derive(Debug, Clone)]
pub struct HermiteRecurrence {
    a: f64,
    n: usize,
    prev: f64,
    cur: f64,
    log_scale: f64,
}

const RESCALE_THRESHOLD: f64 = 1e150;
const RESCALE_EXPONENT: i32 = 500;

impl HermiteRecurrence {
    /// Start at `psi_0(x) = (omega/pi)^{1/4} exp(-omega x² / 2)`.
    pub fn new(omega: f64, x: f64) -> Self {
        Self {
            a: omega.sqrt() * x,
            n: 0,
            prev: 0.0,
            cur: 1.0,
            log_scale: 0.25 * (omega / PI).ln() - 0.5 * omega * x * x,
        }
    }

    /// Index of the function currently held.
    pub fn index(&self) -> usize {
        self.n
    }

    /// `(mantissa, log_scale)` of the current function.
    pub fn scaled(&self) -> (f64, f64) {
        (self.cur, self.log_scale)
    }

    /// Current function value.
    pub fn value(&self) -> f64 {
        scaled_value(self.cur, self.log_scale)
    }

    /// Advance from `psi_n` to `psi_{n+1}`.
    pub fn advance(&mut self) {
        let n = self.n as f64;
        let next = (2.0 / (n + 1.0)).sqrt() * self.a * self.cur - (n / (n + 1.0)).sqrt() * self.prev;
        self.prev = self.cur;
        self.cur = next;
        self.n += 1;
        if self.cur.abs() > RESCALE_THRESHOLD {
            let factor = 2f64.powi(-RESCALE_EXPONENT);
            self.cur *= factor;
            self.prev *= factor;
            self.log_scale += f64::from(RESCALE_EXPONENT) * LN_2;
        }
    }
}

/// `mantissa * exp(log_scale)` without intermediate overflow.
pub(crate) fn scaled_value(mantissa: f64, log_scale: f64) -> f64 {
    if mantissa == 0.0 {
        return 0.0;
    }
    mantissa.signum() * (mantissa.abs().ln() + log_scale).exp()
}

/// Normalized 1-D oscillator eigenfunction `psi_n(x)` with frequency `omega`.
///
/// Evaluated by the normalized three-term recurrence; never through Hermite
/// polynomials and factorials.
pub fn hermite_fn(n: usize, omega: f64, x: f64) -> f64 {
    let mut rec = HermiteRecurrence::new(omega, x);
    while rec.index() < n {
        rec.advance();
    }
    rec.value()
}

/// Bogoliubov mixing coefficients of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BogoliubovPair {
    pub mu: f64,
    pub nu: f64,
}

/// `mu = (omega_n + 1) / (2 sqrt(omega_n))`, `nu = (omega_n - 1) / (2 sqrt(omega_n))`.
pub fn bogoliubov(n: u64, omega: f64) -> BogoliubovPair {
    let excess = mode_frequency_excess(n, omega);
    let root = mode_frequency(n, omega).sqrt();
    BogoliubovPair {
        mu: (2.0 + excess) / (2.0 * root),
        nu: excess / (2.0 * root),
    }
}

/// Squeezing parameter `zeta_n = -log(omega_n) / 2`.
pub fn squeeze_param(n: u64, omega: f64) -> f64 {
    -0.25 * (2.0 * omega * (n as f64 + 1.5)).ln_1p()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // high-precision reference values
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_space_limit() {
        assert_eq!(mode_frequency(0, 0.0), 1.0);
        assert_eq!(mode_frequency_excess(7, 0.0), 0.0);
        assert_eq!(bogoliubov(123, 0.0), BogoliubovPair { mu: 1.0, nu: 0.0 });
        assert_eq!(squeeze_param(5, 0.0), 0.0);
    }

    #[test]
    fn ground_mode_frequency() {
        let w = 5e-4;
        assert!((mode_frequency(0, w) - (1.0 + 1.5e-3f64).sqrt()).abs() < 1e-15);
        let zeta = squeeze_param(0, w);
        assert!((zeta + 0.5 * (1.0 + 1.5e-3f64).sqrt().ln()).abs() < 1e-16);
    }

    #[test]
    fn frequencies_increase() {
        let w = 1e-3;
        let mut last = mode_frequency(0, w);
        for n in 1..=10_000 {
            let next = mode_frequency(n, w);
            assert!(next > last && next > 1.0);
            last = next;
        }
    }

    #[test]
    fn ground_state_peak_and_odd_parity() {
        let w = 2e-3;
        assert!((hermite_fn(0, w, 0.0) - (w / PI).powf(0.25)).abs() < 1e-16);
        assert_eq!(hermite_fn(1, w, 0.0), 0.0);
    }

    #[test]
    fn high_mode_near_turning_point() {
        // Reference values from a 60-digit evaluation of the same recurrence.
        let w: f64 = 1e-3;
        let x = (2.0 * 500.0 / w).sqrt();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(hermite_fn(500, w, x), 0.046_781_375_511_865_741_67) < 1e-9);
        assert!(rel(hermite_fn(500, w, x + 3.0 / w.sqrt()), 1.723_191_887_089_133_487e-14) < 1e-9);
        let x = (2.0 * 10_000.0 / w).sqrt();
        assert!(rel(hermite_fn(10_000, w, x), 0.035_438_186_464_083_757_57) < 1e-9);
    }

    #[test]
    fn far_tail_is_finite() {
        let w: f64 = 1e-3;
        let x = (2.0 * 10_000.0 / w).sqrt() + 10.0 / w.sqrt();
        let v = hermite_fn(10_000, w, x);
        assert!(v.is_finite() && v.abs() < 1.0);
    }

    #[test]
    fn large_mode_bogoliubov() {
        // 60-digit reference for n = 10^6, omega = 10^-3.
        let b = bogoliubov(1_000_000, 1e-3);
        assert!((b.mu - 3.418_878_730_675_367_182).abs() < 8.0 * f64::EPSILON * b.mu);
        assert!((b.nu - 3.269_362_594_614_493_030).abs() < 8.0 * f64::EPSILON * b.mu);
        let half_root = 0.5 * mode_frequency(1_000_000, 1e-3).sqrt();
        assert!((b.mu - half_root).abs() / half_root < 0.05);
        assert!((b.nu - half_root).abs() / half_root < 0.05);
    }

    #[test]
    fn squeeze_matches_mixing_ratio() {
        for n in [0u64, 3, 100, 10_000] {
            let w = 5e-4;
            let b = bogoliubov(n, w);
            let wn = mode_frequency(n, w);
            let ratio = mode_frequency_excess(n, w) / (wn + 1.0);
            assert!(((-squeeze_param(n, w)).tanh() - ratio).abs() < 1e-15);
            assert!((b.nu / b.mu - ratio).abs() < 1e-15);
        }
    }

    #[test]
    fn trap_params_validation() {
        assert!(TrapParams::new(0.0, 1.0, 1).is_err());
        assert!(TrapParams::new(1e-3, -1.0, 1).is_err());
        assert!(TrapParams::new(1e-3, 1.0, 0).is_err());
        let p = TrapParams::new(1e-3, 1e-3, 2).unwrap();
        assert!((p.coupling() - 4.0 * 1e-6 / (32.0 * PI)).abs() < 1e-22);
        assert!(p.advisories(5.0).is_empty());
        assert_eq!(p.advisories(40.0).len(), 1);
    }

    proptest! {
        #[test]
        fn bogoliubov_identity(n in 0u64..1_000_000, logw in -8.0f64..-1.0) {
            let w = 10f64.powf(logw);
            let b = bogoliubov(n, w);
            prop_assert!(b.mu >= 1.0 && b.nu >= 0.0);
            let defect = (b.mu * b.mu - b.nu * b.nu - 1.0).abs();
            prop_assert!(defect <= 8.0 * f64::EPSILON * b.mu * b.mu);
        }

        #[test]
        fn frequency_is_monotone(n in 0u64..10_000_000, logw in -8.0f64..-1.0) {
            let w = 10f64.powf(logw);
            prop_assert!(mode_frequency(n + 1, w) > mode_frequency(n, w));
        }

        #[test]
        fn recurrence_residual(n in 1usize..400, logw in -5.0f64..-2.0, u in -1.2f64..1.2) {
            let w = 10f64.powf(logw);
            let x = u * (2.0 * n as f64 / w).sqrt();
            let lo = hermite_fn(n - 1, w, x);
            let mid = hermite_fn(n, w, x);
            let hi = hermite_fn(n + 1, w, x);
            let k = n as f64;
            let predicted = (2.0 / (k + 1.0)).sqrt() * w.sqrt() * x * mid - (k / (k + 1.0)).sqrt() * lo;
            let scale = hi.abs().max(mid.abs()).max(lo.abs());
            prop_assert!((hi - predicted).abs() <= 1e-12 * scale);
        }

        #[test]
        fn parity(n in 0usize..200, x in -300.0f64..300.0) {
            let w = 1e-3;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(hermite_fn(n, w, -x), sign * hermite_fn(n, w, x));
        }
    }
}
