//! Four-branch cat-state experiment: crossing schedule, fringe phases and
//! visibility, and the centre-of-mass detection density.
//!
//! Mass 1 is in a superposition of components `1a` (phase 0) and `1b`
//! (phase π/4); mass 2 of `2a` (π/2) and `2b` (3π/4). Each of the four
//! branches `aa, ab, ba, bb` accumulates its own gravitational action.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::action_engine::{
    delta_s1, i_nr, i_nr_rate, i_rel, ActionCorrection, GammaParam, IntegralOptions, PhasePair,
};
use crate::error::{Error, Result};
use crate::rel_coherent::{
    corrected_frequency, extract_visibility, rcs_norm_sq, rcs_wavefunction, uniform_grid, Axis, CoherentSpec,
    DensityProfile, TruncationPolicy,
};
use crate::trap_modes::TrapParams;

/// Coherent phases of components `1a, 1b, 2a, 2b`.
pub const COMPONENT_THETAS: [f64; 4] = [0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4];

/// Default detector phase: the `1a`/`1b` overlap at `x = sqrt(2/ω) alpha cos(π/8)`.
pub const DEFAULT_DETECTOR_PHASE: f64 = FRAC_PI_8;

/// Largest `sqrt(2ω) alpha` accepted for an experiment.
pub const MAX_VELOCITY_PARAMETER: f64 = 0.5;

/// Everything that defines one run of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub trap: TrapParams,
    pub alpha: f64,
    pub crossing_count: usize,
    pub detector_phase: f64,
    pub integrals: IntegralOptions,
}

impl ExperimentConfig {
    pub fn new(trap: TrapParams, alpha: f64, crossing_count: usize) -> Result<Self> {
        let config = Self {
            trap,
            alpha,
            crossing_count,
            detector_phase: DEFAULT_DETECTOR_PHASE,
            integrals: IntegralOptions::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.crossing_count == 0 {
            return Err(Error::InvalidParameter("crossing_count must be at least 1".into()));
        }
        if !(self.detector_phase.is_finite() && self.detector_phase > 0.0 && self.detector_phase < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "detector_phase must lie in (0, π/2), got {}",
                self.detector_phase
            )));
        }
        if self.velocity_parameter() > MAX_VELOCITY_PARAMETER {
            return Err(Error::InvalidParameter(format!(
                "sqrt(2 omega) alpha = {} exceeds {MAX_VELOCITY_PARAMETER}",
                self.velocity_parameter()
            )));
        }
        Ok(())
    }

    /// `sqrt(2ω) alpha`, the peak velocity in units of c.
    pub fn velocity_parameter(&self) -> f64 {
        (2.0 * self.trap.omega).sqrt() * self.alpha
    }

    pub fn gamma(&self) -> Result<GammaParam> {
        GammaParam::from_coherent(self.trap.omega, self.alpha)
    }

    /// Warnings that do not block the run.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = self.trap.advisories(self.alpha);
        if self.velocity_parameter() > 0.3 {
            out.push(format!(
                "sqrt(2 omega) alpha = {:.3} > 0.3; the weakly relativistic expansion is loose",
                self.velocity_parameter()
            ));
        }
        out
    }

    /// Oscillation frequency including the leading relativistic shift.
    pub fn frequency(&self) -> f64 {
        corrected_frequency(&self.trap, self.alpha)
    }
}

/// Phase offsets of the four branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentPhases {
    pub aa: PhasePair,
    pub ab: PhasePair,
    pub ba: PhasePair,
    pub bb: PhasePair,
}

impl ComponentPhases {
    pub fn as_array(&self) -> [PhasePair; 4] {
        [self.aa, self.ab, self.ba, self.bb]
    }
}

/// Map coherent phases `[1a, 1b, 2a, 2b]` to offsets `ωβ = π/2 - θ`.
///
/// `X(0) ∝ cos θ` and `P(0) ∝ sin θ`, so `1a` starts at its turning point and
/// `2a` at the trap centre with maximal momentum.
pub fn component_phase_pairs(thetas: [f64; 4]) -> Result<ComponentPhases> {
    let supported = thetas.iter().zip(COMPONENT_THETAS).all(|(a, b)| (a - b).abs() < 1e-12);
    if !supported {
        return Err(Error::UnsupportedConfiguration(format!(
            "component phases must be [0, π/4, π/2, 3π/4], got {thetas:?}"
        )));
    }
    let beta = |theta: f64| FRAC_PI_2 - theta;
    let [t1a, t1b, t2a, t2b] = thetas;
    Ok(ComponentPhases {
        aa: PhasePair::new(beta(t1a), beta(t2a))?,
        ab: PhasePair::new(beta(t1a), beta(t2b))?,
        ba: PhasePair::new(beta(t1b), beta(t2a))?,
        bb: PhasePair::new(beta(t1b), beta(t2b))?,
    })
}

/// Phase offsets of the standard experiment.
pub fn experiment_pairs() -> ComponentPhases {
    component_phase_pairs(COMPONENT_THETAS).expect("the standard phases are supported")
}

/// Times `t_n` with `ω̃ t_n = detector_phase + π n`, for `n < crossing_count`.
///
/// Even `n` are on the `+cos(detector_phase)` side, odd `n` on the opposite side.
pub fn crossing_times(config: &ExperimentConfig) -> Vec<f64> {
    let frequency = config.frequency();
    (0..config.crossing_count)
        .map(|n| (config.detector_phase + PI * n as f64) / frequency)
        .collect()
}

/// Action corrections of the four branches at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchCorrections {
    pub aa: ActionCorrection,
    pub ab: ActionCorrection,
    pub ba: ActionCorrection,
    pub bb: ActionCorrection,
}

impl BranchCorrections {
    /// `δS_aa + δS_bb - δS_ab - δS_ba`.
    pub fn total_phase(&self) -> f64 {
        self.aa.total() + self.bb.total() - self.ab.total() - self.ba.total()
    }
}

pub fn branch_corrections(config: &ExperimentConfig, t: f64) -> Result<BranchCorrections> {
    let gamma = config.gamma()?;
    let pairs = experiment_pairs();
    let at = |pair: &PhasePair| delta_s1(&config.trap, gamma, pair, t, &config.integrals);
    Ok(BranchCorrections {
        aa: at(&pairs.aa)?,
        ab: at(&pairs.ab)?,
        ba: at(&pairs.ba)?,
        bb: at(&pairs.bb)?,
    })
}

/// Fringe phases `Φ1 = δS_aa - δS_ba` and `Φ2 = δS_ab - δS_bb`.
pub fn fringe_phases(c: &BranchCorrections) -> (f64, f64) {
    (c.aa.total() - c.ba.total(), c.ab.total() - c.bb.total())
}

/// `|e^{iΦ1} + e^{iΦ2}| / 2 = |cos((Φ1 - Φ2)/2)|`.
pub fn visibility_exact(phi1: f64, phi2: f64) -> f64 {
    (0.5 * (phi1 - phi2)).cos().abs()
}

/// Second-order expansion `1 - (δS_aa + δS_bb - δS_ab - δS_ba)² / 8`.
pub fn visibility_quadratic(c: &BranchCorrections) -> f64 {
    let x = c.total_phase();
    1.0 - x * x / 8.0
}

/// Branch-combined integrals `X_aa + X_bb - X_ab - X_ba` at `σ = ωt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralTotals {
    pub sigma: f64,
    pub i_nr: f64,
    pub i_rel: f64,
    /// `σ dI_nr/dσ`.
    pub rate_term: f64,
}

pub fn integral_totals(config: &ExperimentConfig, t: f64) -> Result<IntegralTotals> {
    let sigma = config.trap.omega * t;
    let opts = &config.integrals;
    let pairs = experiment_pairs();
    let signs = [1.0, -1.0, -1.0, 1.0];
    let mut totals = IntegralTotals {
        sigma,
        i_nr: 0.0,
        i_rel: 0.0,
        rate_term: 0.0,
    };
    for (pair, sign) in pairs.as_array().iter().zip(signs) {
        totals.i_nr += sign * i_nr(pair, sigma, opts)?.value;
        totals.i_rel += sign * i_rel(pair, sigma, opts)?.value;
        totals.rate_term += sign * sigma * i_nr_rate(pair, sigma, opts)?;
    }
    Ok(totals)
}

/// Weakly relativistic visibility and its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakVisibility {
    pub v_wr: f64,
    pub dv_rel: f64,
    /// `1 - V_wr`, kept separately because it can be far below `f64` resolution near 1.
    pub loss_wr: f64,
    /// Loss from the leading nonrelativistic term alone.
    pub loss_nr: f64,
}

/// `V_wr = 1 - k²/8 · I [(1/(2γ) + 3) I + 2 I_rel - σ I']` and
/// `ΔV_rel = -k²/8 · I [3 I + 2 I_rel - σ I']`, with `k = N² κ²/32π`.
pub fn visibility_wr(config: &ExperimentConfig, t: f64) -> Result<WeakVisibility> {
    weak_visibility(config, &integral_totals(config, t)?)
}

/// [`visibility_wr`] from integrals already computed.
pub fn weak_visibility(config: &ExperimentConfig, tot: &IntegralTotals) -> Result<WeakVisibility> {
    let gamma = config.gamma()?.value();
    let k = config.trap.coupling();
    let scale = k * k / 8.0 * tot.i_nr;
    let bracket_rel = 3.0 * tot.i_nr + 2.0 * tot.i_rel - tot.rate_term;
    let loss_nr = scale * tot.i_nr / (2.0 * gamma) + 0.0;
    let loss_rel = scale * bracket_rel;
    let loss_wr = loss_nr + loss_rel + 0.0;
    Ok(WeakVisibility {
        v_wr: 1.0 - loss_wr,
        dv_rel: -loss_rel + 0.0,
        loss_wr,
        loss_nr,
    })
}

/// One crossing of the visibility series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityEntry {
    pub n: usize,
    pub t: f64,
    pub v_exact: f64,
    pub v_quadratic: f64,
    pub v_wr: f64,
    pub dv_rel: f64,
    pub loss_wr: f64,
    pub loss_nr: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub total_phase: f64,
    pub totals: IntegralTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilitySeries {
    pub entries: Vec<VisibilityEntry>,
}

impl VisibilitySeries {
    /// CSV with header `n,t,V_exact,V_quadratic,V_wr,dV_rel`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t,V_exact,V_quadratic,V_wr,dV_rel\n");
        for e in &self.entries {
            let cells = [e.t, e.v_exact, e.v_quadratic, e.v_wr, e.dv_rel].map(crate::format_float);
            out.push_str(&format!("{},{}\n", e.n, cells.join(",")));
        }
        out
    }
}

/// Visibility at every crossing. Crossings are evaluated in parallel and
/// returned in index order.
pub fn visibility_series(config: &ExperimentConfig) -> Result<VisibilitySeries> {
    config.validate()?;
    let times = crossing_times(config);
    let entries = times
        .par_iter()
        .enumerate()
        .map(|(n, &t)| {
            let c = branch_corrections(config, t)?;
            let (phi1, phi2) = fringe_phases(&c);
            let totals = integral_totals(config, t)?;
            let wr = weak_visibility(config, &totals)?;
            Ok(VisibilityEntry {
                n,
                t,
                v_exact: visibility_exact(phi1, phi2),
                v_quadratic: visibility_quadratic(&c),
                v_wr: wr.v_wr,
                dv_rel: wr.dv_rel,
                loss_wr: wr.loss_wr,
                loss_nr: wr.loss_nr,
                phi1,
                phi2,
                total_phase: c.total_phase(),
                totals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VisibilitySeries { entries })
}

/// Index of the scheduled crossing nearest `t`, or an error if `t` is more
/// than `10^-3` of a period away from every crossing.
pub fn crossing_index(config: &ExperimentConfig, t: f64) -> Result<usize> {
    let frequency = config.frequency();
    let n = ((frequency * t - config.detector_phase) / PI).round().max(0.0);
    let scheduled = (config.detector_phase + PI * n) / frequency;
    let offset = (t - scheduled).abs() * frequency / TAU;
    if offset > 1e-3 {
        return Err(Error::NotACrossing { t, offset });
    }
    Ok(n as usize)
}

/// Detector position of crossing `n`: `±sqrt(2/ω) alpha cos(detector_phase)`.
pub fn crossing_position(config: &ExperimentConfig, n: usize) -> f64 {
    let side = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    side * (2.0 / config.trap.omega).sqrt() * config.alpha * config.detector_phase.cos()
}

/// Overlap factor `e^{-alpha²/√2}` multiplying the interference term.
pub fn overlap_factor(alpha: f64) -> f64 {
    (-alpha * alpha / SQRT_2).exp()
}

/// Centre-of-mass detection density
/// `|N|² |psi_1a(R)|² (1 + Re(e^{i sqrt(2ω) alpha R - alpha²/√2} (e^{iΦ1} + e^{iΦ2})))`
/// with `|N|² = 1/4` and `|psi_1a|²` the normalized density of component `1a`.
pub fn detection_density(
    config: &ExperimentConfig,
    t: f64,
    grid: &[f64],
    trunc: &TruncationPolicy,
) -> Result<DensityProfile> {
    crossing_index(config, t)?;
    if 2.0 * overlap_factor(config.alpha) > 1.0 {
        return Err(Error::UnsupportedConfiguration(format!(
            "alpha = {} makes the interference term exceed the background; the density would turn negative",
            config.alpha
        )));
    }
    let (phi1, phi2) = fringe_phases(&branch_corrections(config, t)?);
    let spec = CoherentSpec::new(config.alpha, COMPONENT_THETAS[0], Axis::X)?;
    let psi = rcs_wavefunction(&spec, t, grid, &config.trap, trunc)?;
    let norm = rcs_norm_sq(&spec, t, &config.trap, trunc)?;
    let k = config.velocity_parameter();
    let overlap = overlap_factor(config.alpha);
    let branches = Complex64::from_polar(1.0, phi1) + Complex64::from_polar(1.0, phi2);
    let values = grid
        .iter()
        .zip(&psi)
        .map(|(&r, p)| {
            let fringe = (Complex64::from_polar(overlap, k * r) * branches).re;
            0.25 * p.norm_sqr() / norm * (1.0 + fringe)
        })
        .collect();
    Ok(DensityProfile {
        grid: grid.to_vec(),
        values,
        time: t,
        normalized: false,
    })
}

/// Grid of `points` samples spanning three fringe periods either side of the
/// detector position of the crossing at `t`.
pub fn detector_grid(config: &ExperimentConfig, t: f64, points: usize) -> Result<Vec<f64>> {
    let n = crossing_index(config, t)?;
    let centre = crossing_position(config, n);
    let wavelength = TAU / config.velocity_parameter();
    Ok(uniform_grid(
        centre - 3.0 * wavelength,
        centre + 3.0 * wavelength,
        points,
    ))
}

/// Visibility read off the detection density.
///
/// The density is divided by its envelope `|psi_1a|²/4` to isolate the fringe
/// factor, whose contrast is then measured. The result is divided by the
/// contrast of the same construction without gravity, which removes the
/// overlap factor and makes it comparable to [`visibility_exact`].
pub fn density_visibility(config: &ExperimentConfig, t: f64, trunc: &TruncationPolicy) -> Result<f64> {
    let grid = detector_grid(config, t, 4096)?;
    let window = (grid[0], grid[grid.len() - 1]);
    let contrast = |cfg: &ExperimentConfig| -> Result<f64> {
        let profile = detection_density(cfg, t, &grid, trunc)?;
        let spec = CoherentSpec::new(cfg.alpha, 0.0, Axis::X)?;
        let psi = rcs_wavefunction(&spec, t, &grid, &cfg.trap, trunc)?;
        let norm = rcs_norm_sq(&spec, t, &cfg.trap, trunc)?;
        let fringe = DensityProfile {
            grid: grid.clone(),
            values: profile
                .values
                .iter()
                .zip(&psi)
                .map(|(v, p)| v / (0.25 * p.norm_sqr() / norm))
                .collect(),
            time: t,
            normalized: false,
        };
        extract_visibility(&fringe, window)
    };
    let mut free = *config;
    free.trap.kappa = 0.0;
    Ok((contrast(config)? / contrast(&free)?).min(1.0))
}
