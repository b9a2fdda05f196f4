//! First-order gravitational corrections to the classical action of two
//! trapped masses, from Hamilton–Jacobi perturbation theory.
//!
//! Each mass moves on `X = sqrt(2γ)/ω · sin(s + β)` with `s` the rescaled
//! time. The squared separation of the two masses, in units of the orbit
//! amplitude, is `D(s) = sin²(β1 + s) + sin²(β2 + s)`. The corrections are
//! double integrals over the triangle `0 <= s2 <= s1 <= s` of kernels built
//! from `D`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, integrate_triangle_with_edge, QuadResult};
use crate::trap_modes::TrapParams;

/// Smallest squared separation accepted for a configuration.
const MIN_SEPARATION_SQ: f64 = 1e-12;

/// Rescaled Hamilton–Jacobi phase offsets `(ωβ1, ωβ2)` of one two-mass configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePair {
    pub beta1: f64,
    pub beta2: f64,
}

impl PhasePair {
    /// Rejects offsets for which the masses meet, i.e. `β1 - β2 ≡ 0 (mod π)`.
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        let pair = Self { beta1, beta2 };
        if !(beta1.is_finite() && beta2.is_finite()) || pair.min_separation_sq() < MIN_SEPARATION_SQ {
            return Err(Error::SingularConfiguration { beta1, beta2 });
        }
        Ok(pair)
    }

    pub fn swapped(&self) -> Self {
        Self {
            beta1: self.beta2,
            beta2: self.beta1,
        }
    }

    /// `D(s) = sin²(β1 + s) + sin²(β2 + s)`.
    pub fn separation_sq(&self, s: f64) -> f64 {
        let a = (self.beta1 + s).sin();
        let b = (self.beta2 + s).sin();
        a * a + b * b
    }

    /// Minimum of `D` over a period, `1 - |cos(β1 - β2)|`.
    pub fn min_separation_sq(&self) -> f64 {
        1.0 - (self.beta1 - self.beta2).cos().abs()
    }
}

/// Which form of the coupling function `f` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// One copy of each term; symmetric under exchange of the masses.
    #[default]
    Symmetric,
    /// Adds a second copy of `½ cos(2β2 + 2s1) sin(2β2 + 2s2)`.
    AsPrinted,
}

/// Placement of the `sin(2β1 + 2s1) - sin(2β2 + 2s1)` kernel of the
/// relativistic integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RelKernelPlacement {
    /// Under the inner integral, divided by `sqrt(D(s2))`.
    #[default]
    Inner,
    /// In the outer integral only, divided by `sqrt(D(s1))`.
    Outer,
}

/// Integrand variants and the absolute quadrature tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralOptions {
    pub coupling: CouplingForm,
    pub rel_kernel: RelKernelPlacement,
    pub tol: f64,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self {
            coupling: CouplingForm::Symmetric,
            rel_kernel: RelKernelPlacement::Inner,
            tol: 1e-10,
        }
    }
}

/// Action variable `γ = ω alpha²` of one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self(gamma))
    }

    pub fn from_coherent(omega: f64, alpha: f64) -> Result<Self> {
        Self::new(omega * alpha * alpha)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Newtonian-like and relativistic parts of the first-order action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionCorrection {
    pub nr: f64,
    pub rel: f64,
    pub s: f64,
}

impl ActionCorrection {
    pub fn total(&self) -> f64 {
        self.nr + self.rel
    }
}

/// Position and momentum on the unperturbed orbit.
///
/// `beta` is the unscaled offset, so the orbital phase is `ωt/h0 + ωβ`.
pub fn hj_trajectory(omega: f64, gamma: GammaParam, beta: f64, h0: f64, t: f64) -> (f64, f64) {
    let amplitude = (2.0 * gamma.value()).sqrt();
    let (sin, cos) = (omega * t / h0 + omega * beta).sin_cos();
    (amplitude / omega * sin, amplitude * cos)
}

/// Coupling function `f(β1, β2, s1, s2)` of the Newtonian-like integrand.
pub fn coupling_function(pair: &PhasePair, s1: f64, s2: f64, form: CouplingForm) -> f64 {
    let term = |b: f64| {
        let s_b2 = (b + s2).sin();
        (2.0 * b + 2.0 * s1).sin() * s_b2 * s_b2 + 0.5 * (2.0 * b + 2.0 * s1).cos() * (2.0 * b + 2.0 * s2).sin()
    };
    let mut f = term(pair.beta1) + term(pair.beta2);
    if form == CouplingForm::AsPrinted {
        f += 0.5 * (2.0 * pair.beta2 + 2.0 * s1).cos() * (2.0 * pair.beta2 + 2.0 * s2).sin();
    }
    f
}

fn inverse_cube_distance(pair: &PhasePair, s: f64) -> f64 {
    let d = pair.separation_sq(s);
    1.0 / (d * d.sqrt())
}

/// Inner integrand `f · D(s2)^{-3/2}` of the Newtonian-like integral.
pub fn integrand_nr(pair: &PhasePair, s1: f64, s2: f64, form: CouplingForm) -> f64 {
    coupling_function(pair, s1, s2, form) * inverse_cube_distance(pair, s2)
}

/// Outer-only term `1 / sqrt(D(s1))` of the Newtonian-like integral.
pub fn boundary_kernel(pair: &PhasePair, s1: f64) -> f64 {
    1.0 / pair.separation_sq(s1).sqrt()
}

/// Secular part of the relativistic integrand, carrying the `(s2 - s1)` factors.
pub fn integrand_rel_secular(pair: &PhasePair, s1: f64, s2: f64) -> f64 {
    let term = |b: f64| {
        let c = (b + s1).cos();
        (2.0 * b + 2.0 * s2).sin() * ((s2 - s1) * (2.0 * b + 2.0 * s1).sin() - c * c)
    };
    0.5 * (term(pair.beta1) + term(pair.beta2)) * inverse_cube_distance(pair, s2)
}

/// `(sin(2β1 + 2s1) - sin(2β2 + 2s1)) / sqrt(D(s_d))`.
pub fn rel_kernel(pair: &PhasePair, s1: f64, s_d: f64) -> f64 {
    ((2.0 * pair.beta1 + 2.0 * s1).sin() - (2.0 * pair.beta2 + 2.0 * s1).sin()) / pair.separation_sq(s_d).sqrt()
}

fn check_span(s: f64) -> Result<()> {
    if !(0.0..=100.0 * std::f64::consts::PI).contains(&s) {
        return Err(Error::InvalidParameter(format!("s must lie in [0, 100π], got {s}")));
    }
    Ok(())
}

/// Newtonian-like integral `∫_0^s [1/sqrt(D(s1)) + ∫_0^{s1} f D(s2)^{-3/2} ds2] ds1`.
pub fn i_nr(pair: &PhasePair, s: f64, opts: &IntegralOptions) -> Result<QuadResult> {
    check_span(s)?;
    let form = opts.coupling;
    integrate_triangle_with_edge(
        |s1, s2| integrand_nr(pair, s1, s2, form),
        |s1| boundary_kernel(pair, s1),
        s,
        opts.tol,
    )
}

/// Relativistic integral, with the final kernel placed per `opts.rel_kernel`.
pub fn i_rel(pair: &PhasePair, s: f64, opts: &IntegralOptions) -> Result<QuadResult> {
    check_span(s)?;
    match opts.rel_kernel {
        RelKernelPlacement::Inner => integrate_triangle_with_edge(
            |s1, s2| integrand_rel_secular(pair, s1, s2) + rel_kernel(pair, s1, s2),
            |_| 0.0,
            s,
            opts.tol,
        ),
        RelKernelPlacement::Outer => integrate_triangle_with_edge(
            |s1, s2| integrand_rel_secular(pair, s1, s2),
            |s1| rel_kernel(pair, s1, s1),
            s,
            opts.tol,
        ),
    }
}

/// `dI_nr/ds`: the outer integrand at `s1 = s`, from the fundamental theorem
/// of calculus rather than by differencing.
pub fn i_nr_rate(pair: &PhasePair, s: f64, opts: &IntegralOptions) -> Result<f64> {
    check_span(s)?;
    let form = opts.coupling;
    let inner = integrate_1d(|s2| integrand_nr(pair, s, s2, form), 0.0, s, opts.tol)?;
    Ok(boundary_kernel(pair, s) + inner.value)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

/// Full first-order correction at time `t`, with `s = ωt / sqrt(1 + 2γ)`.
pub fn delta_s1(
    params: &TrapParams,
    gamma: GammaParam,
    pair: &PhasePair,
    t: f64,
    opts: &IntegralOptions,
) -> Result<ActionCorrection> {
    check_time(t)?;
    let g = gamma.value();
    let h0 = (1.0 + 2.0 * g).sqrt();
    let s = params.omega * t / h0;
    let k = params.coupling();
    let root = (2.0 * g).sqrt();
    Ok(ActionCorrection {
        nr: k * h0 * h0 * h0 / root * i_nr(pair, s, opts)?.value,
        rel: k * root * h0 * i_rel(pair, s, opts)?.value,
        s,
    })
}

/// Leading and next-to-leading terms of the weakly relativistic expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakRelativistic {
    pub leading: f64,
    pub correction: f64,
}

impl WeakRelativistic {
    pub fn total(&self) -> f64 {
        self.leading + self.correction
    }
}

/// Expansion of [`delta_s1`] to next-to-leading order in `ωα²`.
///
/// With `σ = ωt` and `r = sqrt(2ω) alpha`:
/// `k [ I_nr(σ)/r + r (3/2 I_nr(σ) + I_rel(σ) - ½ σ I_nr'(σ)) ]`.
/// The last term comes from expanding the argument `σ / sqrt(1 + 2γ)`, so the
/// rate enters multiplied by `σ`.
pub fn delta_s1_wr_parts(
    params: &TrapParams,
    alpha: f64,
    pair: &PhasePair,
    t: f64,
    opts: &IntegralOptions,
) -> Result<WeakRelativistic> {
    check_time(t)?;
    let sigma = params.omega * t;
    let r = (2.0 * params.omega).sqrt() * alpha.abs();
    if r == 0.0 {
        return Err(Error::InvalidParameter("alpha must be non-zero".into()));
    }
    let k = params.coupling();
    let nr = i_nr(pair, sigma, opts)?.value;
    let rel = i_rel(pair, sigma, opts)?.value;
    let rate = i_nr_rate(pair, sigma, opts)?;
    Ok(WeakRelativistic {
        leading: k * nr / r,
        correction: k * r * (1.5 * nr + rel - 0.5 * sigma * rate),
    })
}

pub fn delta_s1_wr(params: &TrapParams, alpha: f64, pair: &PhasePair, t: f64, opts: &IntegralOptions) -> Result<f64> {
    Ok(delta_s1_wr_parts(params, alpha, pair, t, opts)?.total())
}

/// Nonrelativistic reference `k / sqrt(2γ) · I_nr(ωt)`.
pub fn newtonian_delta_s1(
    params: &TrapParams,
    gamma: GammaParam,
    pair: &PhasePair,
    t: f64,
    opts: &IntegralOptions,
) -> Result<f64> {
    check_time(t)?;
    let s = params.omega * t;
    Ok(params.coupling() / (2.0 * gamma.value()).sqrt() * i_nr(pair, s, opts)?.value)
}
