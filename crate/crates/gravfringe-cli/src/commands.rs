use std::f64::consts::{SQRT_2, TAU};
use std::fmt::Write as _;

use gravfringe::action_engine::{
    boundary_kernel, delta_s1, delta_s1_wr, i_nr, i_rel, integrand_nr, integrand_rel_secular, newtonian_delta_s1,
    rel_kernel, IntegralOptions, PhasePair, RelKernelPlacement,
};
use gravfringe::format_float;
use gravfringe::quadrature::riemann_oracle_extrapolated;
use gravfringe::rel_coherent::{
    centre_crossing_time, choose_truncation, corrected_frequency, count_fringes, extract_visibility, packet_centre,
    superposition_density, uniform_grid, variance_series, Axis, CoherentSpec, DensityProfile, TruncationPolicy,
};
use gravfringe::visibility::{
    branch_corrections, crossing_times, experiment_pairs, visibility_series, weak_visibility, ExperimentConfig,
    IntegralTotals, VisibilitySeries,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Components, Format, RunConfig, Sampling};
use crate::error::{ensure, CliError};
use crate::report::{num, Report};
use crate::svg::{line_plot, Series};

const PAIR_NAMES: [&str; 4] = ["aa", "ab", "ba", "bb"];
/// Signs combining the four branches into the entangling phase.
const PAIR_SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

fn truncation(config: &RunConfig, alpha: f64) -> Result<TruncationPolicy, CliError> {
    Ok(choose_truncation(alpha, config.tail_tol)?)
}

fn density_grid(config: &RunConfig, omega: f64, alpha: f64) -> Vec<f64> {
    match (config.grid_min, config.grid_max) {
        (Some(lo), Some(hi)) => uniform_grid(lo, hi, config.grid_points),
        _ => {
            let half = (2.0 / omega).sqrt() * alpha + 8.0 / omega.sqrt();
            uniform_grid(-half, half, config.grid_points)
        }
    }
}

fn components(kind: Components, alpha: f64) -> Result<Vec<(CoherentSpec, Complex64)>, CliError> {
    let one = Complex64::new(1.0, 0.0);
    let plus = CoherentSpec::new(alpha, 0.0, Axis::X)?;
    Ok(match kind {
        Components::Single => vec![(plus, one)],
        Components::Pair => vec![
            (plus, one),
            (CoherentSpec::new(alpha, std::f64::consts::PI, Axis::X)?, one),
        ],
    })
}

fn profile_json(profile: &DensityProfile) -> Value {
    json!({ "t": profile.time, "normalized": profile.normalized, "x": profile.grid, "density": profile.values })
}

fn density_svg(title: &str, profile: &DensityProfile) -> String {
    let points = profile
        .grid
        .iter()
        .cloned()
        .zip(profile.values.iter().cloned())
        .collect();
    line_plot(
        title,
        "x (Compton units)",
        "density",
        &[Series {
            label: "density",
            points,
        }],
    )
}

/// Write a density profile in every requested format under `stem`.
fn emit_profile(
    report: &mut Report,
    config: &RunConfig,
    stem: &str,
    title: &str,
    profile: &DensityProfile,
) -> Result<(), CliError> {
    if config.wants(Format::Csv) {
        report.write(&format!("{stem}.csv"), &profile.to_csv())?;
    }
    if config.wants(Format::Json) {
        report.write_json(&format!("{stem}.json"), &profile_json(profile))?;
    }
    if config.wants(Format::Svg) {
        report.write(&format!("{stem}.svg"), &density_svg(title, profile))?;
    }
    Ok(())
}

/// Fringe visibility and count within three zero-point widths of the origin.
fn fringe_summary(profile: &DensityProfile, omega: f64) -> (Option<f64>, usize) {
    let w = 3.0 / omega.sqrt();
    let window = (-w, w);
    (
        extract_visibility(profile, window).ok(),
        count_fringes(profile, window, 0.01),
    )
}

fn check_normalized(profile: &DensityProfile) -> Result<(), CliError> {
    if profile.normalized {
        let integral = profile.integral();
        ensure((integral - 1.0).abs() <= 1e-6, || {
            format!("normalized profile integrates to {integral}")
        })?;
    }
    Ok(())
}

pub fn density(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let trap = config.trap()?;
    report.advise(trap.advisories(config.alpha));
    let trunc = truncation(config, config.alpha)?;
    let frequency = match config.density_sampling {
        Sampling::Corrected => corrected_frequency(&trap, config.alpha),
        Sampling::Uncorrected => trap.omega,
    };
    let times: Vec<f64> = if config.density_times.is_empty() {
        config
            .density_crossings
            .iter()
            .map(|&n| centre_crossing_time(frequency, n))
            .collect()
    } else {
        config.density_times.clone()
    };
    if times.is_empty() {
        return Err(CliError::Config("no density times or crossings requested".into()));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CliError::Config(format!(
            "density time {t} must be finite and non-negative"
        )));
    }
    let grid = density_grid(config, trap.omega, config.alpha);
    let comps = components(config.density_components, config.alpha)?;
    let plus = comps[0].0;
    let mut rows = Vec::new();
    for &t in &times {
        let profile = superposition_density(&comps, t, &grid, &trap, &trunc, config.normalize)?;
        check_normalized(&profile)?;
        emit_profile(
            report,
            config,
            &format!("density_{t:.6}"),
            &format!("density at t = {t:.6}"),
            &profile,
        )?;
        let (mean, variance) = profile.mean_variance();
        let centre = packet_centre(&plus, t, &trap, &trunc)?;
        let (visibility, fringes) = match config.density_components {
            Components::Pair => fringe_summary(&profile, trap.omega),
            Components::Single => (None, 0),
        };
        rows.push(json!({
            "t": t,
            "integral": profile.integral(),
            "mean": mean,
            "variance": variance,
            "component_centre": centre,
            "separation_widths": 2.0 * centre.abs() * trap.omega.sqrt(),
            "visibility": visibility,
            "fringes": fringes,
        }));
    }
    report.record("sampling_frequency", json!(frequency));
    report.record("n_max", json!(trunc.n_max));
    report.record("profiles", Value::Array(rows));
    Ok(())
}

/// Visibility table, its invariants, and the kernel-placement comparison.
fn visibility_core(
    config: &RunConfig,
    experiment: &ExperimentConfig,
    report: &mut Report,
) -> Result<VisibilitySeries, CliError> {
    report.advise(experiment.advisories());
    let series = visibility_series(experiment)?;
    for w in series.entries.windows(2) {
        ensure(w[1].t > w[0].t, || {
            format!("crossing times not increasing at n = {}", w[1].n)
        })?;
    }
    for e in &series.entries {
        ensure((0.0..=1.0).contains(&e.v_exact), || {
            format!("V_exact = {} at n = {}", e.v_exact, e.n)
        })?;
        ensure(e.v_quadratic <= 1.0, || {
            format!("V_quadratic = {} at n = {}", e.v_quadratic, e.n)
        })?;
    }

    if config.wants(Format::Csv) {
        report.write("visibility.csv", &series.to_csv())?;
        let mut losses = String::from("n,t,loss_wr,loss_nr,loss_rel,total_phase\n");
        for e in &series.entries {
            let cells = [e.t, e.loss_wr, e.loss_nr, -e.dv_rel, e.total_phase].map(format_float);
            let _ = writeln!(losses, "{},{}", e.n, cells.join(","));
        }
        report.write("visibility_losses.csv", &losses)?;
    }
    if config.wants(Format::Json) {
        report.write_json("visibility.json", &series)?;
    }
    if config.wants(Format::Svg) {
        let pick = |f: fn(&gravfringe::visibility::VisibilityEntry) -> f64| {
            series.entries.iter().map(|e| (e.n as f64, f(e))).collect::<Vec<_>>()
        };
        let svg = line_plot(
            "visibility loss 1 - V per crossing",
            "crossing n",
            "1 - V",
            &[
                Series {
                    label: "weakly relativistic",
                    points: pick(|e| e.loss_wr),
                },
                Series {
                    label: "nonrelativistic part",
                    points: pick(|e| e.loss_nr),
                },
                Series {
                    label: "quadratic (full action)",
                    points: pick(|e| e.total_phase * e.total_phase / 8.0),
                },
            ],
        );
        report.write("visibility.svg", &svg)?;
    }

    // The relativistic kernel placement is ambiguous; report both.
    let mut other = *experiment;
    other.integrals.rel_kernel = match experiment.integrals.rel_kernel {
        RelKernelPlacement::Inner => RelKernelPlacement::Outer,
        RelKernelPlacement::Outer => RelKernelPlacement::Inner,
    };
    let pairs = experiment_pairs().as_array();
    let comparison = series
        .entries
        .par_iter()
        .map(|e| -> Result<Value, CliError> {
            let mut alt_rel = 0.0;
            for (pair, sign) in pairs.iter().zip(PAIR_SIGNS) {
                alt_rel += sign * i_rel(pair, e.totals.sigma, &other.integrals)?.value;
            }
            let alt = weak_visibility(
                &other,
                &IntegralTotals {
                    i_rel: alt_rel,
                    ..e.totals
                },
            )?;
            let (inner, outer, dv_inner, dv_outer) = match experiment.integrals.rel_kernel {
                RelKernelPlacement::Inner => (e.totals.i_rel, alt_rel, e.dv_rel, alt.dv_rel),
                RelKernelPlacement::Outer => (alt_rel, e.totals.i_rel, alt.dv_rel, e.dv_rel),
            };
            Ok(json!({
                "n": e.n,
                "i_rel_total_inner": inner,
                "i_rel_total_outer": outer,
                "dv_rel_inner": dv_inner,
                "dv_rel_outer": dv_outer,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    report.record("rel_kernel_comparison", Value::Array(comparison));

    let entries = &series.entries;
    report.record(
        "shape",
        json!({
            "loss_wr_non_decreasing": entries.windows(2).all(|w| w[1].loss_wr >= w[0].loss_wr),
            "v_wr_non_increasing": entries.windows(2).all(|w| w[1].v_wr <= w[0].v_wr),
            "dv_rel_non_positive": entries.iter().all(|e| e.dv_rel <= 0.0),
            "v_quadratic_monotone": entries.windows(2).all(|w| w[1].v_quadratic <= w[0].v_quadratic + 1e-6),
        }),
    );

    if config.verify {
        verify_integrals(experiment, &series, report)?;
    }
    Ok(series)
}

/// Rows of the oracle grid for span `s`: spacing about 0.0075, at least 2000 rows.
fn oracle_panels(s: f64) -> usize {
    let rows = ((s / 0.0075).ceil() as usize).max(2000).div_ceil(4) * 4;
    rows * (rows + 1) / 2
}

fn verify_integrals(
    experiment: &ExperimentConfig,
    series: &VisibilitySeries,
    report: &mut Report,
) -> Result<(), CliError> {
    let entries = &series.entries;
    let picks: Vec<usize> = {
        let mut p = vec![0, entries.len() / 2, entries.len() - 1];
        p.dedup();
        p
    };
    let opts = experiment.integrals;
    let pairs = experiment_pairs().as_array();
    let jobs: Vec<(usize, usize)> = picks.iter().flat_map(|&i| (0..4).map(move |p| (i, p))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, p)| -> Result<(Value, f64), CliError> {
            let s = experiment.trap.omega * entries[i].t;
            let pair = pairs[p];
            let (nr, rel) = oracle_integrals(&pair, s, &opts);
            let a_nr = i_nr(&pair, s, &opts)?.value;
            let a_rel = i_rel(&pair, s, &opts)?.value;
            let scaled = |a: f64, o: f64| (a - o).abs() / o.abs().max(1.0);
            let worst = scaled(a_nr, nr).max(scaled(a_rel, rel));
            Ok((
                json!({
                    "n": entries[i].n,
                    "pair": PAIR_NAMES[p],
                    "s": s,
                    "i_nr_adaptive": a_nr,
                    "i_nr_oracle": nr,
                    "i_nr_delta": a_nr - nr,
                    "i_rel_adaptive": a_rel,
                    "i_rel_oracle": rel,
                    "i_rel_delta": a_rel - rel,
                }),
                worst,
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    report.record("oracle_deltas", Value::Array(rows.into_iter().map(|r| r.0).collect()));
    report.record("oracle_worst_scaled_delta", json!(worst));
    ensure(worst <= 1e-6, || {
        format!("adaptive and oracle integrals differ by {worst:e} (scaled)")
    })
}

fn oracle_integrals(pair: &PhasePair, s: f64, opts: &IntegralOptions) -> (f64, f64) {
    let panels = oracle_panels(s);
    let form = opts.coupling;
    let nr = riemann_oracle_extrapolated(
        |a, b| integrand_nr(pair, a, b, form),
        |a| boundary_kernel(pair, a),
        s,
        panels,
    );
    let rel = match opts.rel_kernel {
        RelKernelPlacement::Inner => riemann_oracle_extrapolated(
            |a, b| integrand_rel_secular(pair, a, b) + rel_kernel(pair, a, b),
            |_| 0.0,
            s,
            panels,
        ),
        RelKernelPlacement::Outer => riemann_oracle_extrapolated(
            |a, b| integrand_rel_secular(pair, a, b),
            |a| rel_kernel(pair, a, a),
            s,
            panels,
        ),
    };
    (nr, rel)
}

pub fn visibility(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let experiment = config.experiment()?;
    visibility_core(config, &experiment, report)?;
    Ok(())
}

pub fn action(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let experiment = config.experiment()?;
    report.advise(experiment.advisories());
    let gamma = experiment.gamma()?;
    let h0 = (1.0 + 2.0 * gamma.value()).sqrt();
    let opts = experiment.integrals;
    let inner = IntegralOptions {
        rel_kernel: RelKernelPlacement::Inner,
        ..opts
    };
    let outer = IntegralOptions {
        rel_kernel: RelKernelPlacement::Outer,
        ..opts
    };
    let pairs = experiment_pairs().as_array();
    let times = crossing_times(&experiment);
    let jobs: Vec<(usize, usize)> = (0..times.len()).flat_map(|n| (0..4).map(move |p| (n, p))).collect();
    let trap = experiment.trap;
    let rows = jobs
        .par_iter()
        .map(|&(n, p)| -> Result<[f64; 10], CliError> {
            let t = times[n];
            let pair = pairs[p];
            let s = trap.omega * t / h0;
            let full = delta_s1(&trap, gamma, &pair, t, &opts)?;
            Ok([
                t,
                s,
                i_nr(&pair, s, &opts)?.value,
                i_rel(&pair, s, &inner)?.value,
                i_rel(&pair, s, &outer)?.value,
                full.nr,
                full.rel,
                full.total(),
                delta_s1_wr(&trap, experiment.alpha, &pair, t, &opts)?,
                newtonian_delta_s1(&trap, gamma, &pair, t, &opts)?,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let header = "n,t,pair,s,I_nr,I_rel_inner,I_rel_outer,dS_nr,dS_rel,dS_total,dS_wr,dS_newtonian";
    if config.wants(Format::Csv) {
        let mut csv = format!("{header}\n");
        for (&(n, p), r) in jobs.iter().zip(&rows) {
            let _ = write!(csv, "{n},{},{}", format_float(r[0]), PAIR_NAMES[p]);
            for v in &r[1..] {
                let _ = write!(csv, ",{}", format_float(*v));
            }
            csv.push('\n');
        }
        report.write("action.csv", &csv)?;
    }
    if config.wants(Format::Json) {
        let keys: Vec<&str> = header.split(',').collect();
        let items: Vec<Value> = jobs
            .iter()
            .zip(&rows)
            .map(|(&(n, p), r)| {
                let mut m = serde_json::Map::new();
                m.insert("n".into(), json!(n));
                m.insert("t".into(), json!(r[0]));
                m.insert("pair".into(), json!(PAIR_NAMES[p]));
                for (k, v) in keys[3..].iter().zip(&r[1..]) {
                    m.insert((*k).into(), num(*v));
                }
                Value::Object(m)
            })
            .collect();
        report.write_json("action.json", &items)?;
    }
    if config.wants(Format::Svg) {
        let series: Vec<Series> = (0..4)
            .map(|p| Series {
                label: PAIR_NAMES[p],
                points: jobs
                    .iter()
                    .zip(&rows)
                    .filter(|(j, _)| j.1 == p)
                    .map(|(_, r)| (r[0], r[7]))
                    .collect(),
            })
            .collect();
        report.write(
            "action.svg",
            &line_plot("first-order action per branch", "t", "dS", &series),
        )?;
    }
    let kernel_gap = rows.iter().map(|r| (r[3] - r[4]).abs()).fold(0.0, f64::max);
    report.record("rel_kernel_max_abs_difference", json!(kernel_gap));
    report.record("gamma", json!(gamma.value()));
    Ok(())
}

/// Packet centre and orbital phase, the latter from a centred difference of the centre.
fn centre_and_phase(
    spec: &CoherentSpec,
    t: f64,
    trap: &gravfringe::trap_modes::TrapParams,
    trunc: &TruncationPolicy,
) -> Result<(f64, f64), CliError> {
    let x = packet_centre(spec, t, trap, trunc)?;
    let dt = 1e-3 * TAU / trap.omega;
    let v = (packet_centre(spec, t + dt, trap, trunc)? - packet_centre(spec, (t - dt).max(0.0), trap, trunc)?)
        / (t + dt - (t - dt).max(0.0));
    Ok((x, (-v / trap.omega).atan2(x) + 0.0))
}

/// Slope, intercept and R² of a least-squares line; R² is undefined for constant data.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, Option<f64>) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, None);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { Some(sxy * sxy / (sxx * syy)) } else { None };
    (slope, my - slope * mx, r2)
}

pub fn freq_check(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let trap = config.trap()?;
    report.advise(trap.advisories(config.alpha));
    if config.freq_periods == 0 || config.freq_periods > 50 {
        return Err(CliError::Config(format!(
            "freq_periods must lie in 1..=50, got {}",
            config.freq_periods
        )));
    }
    let trunc = truncation(config, config.alpha)?;
    let spec = CoherentSpec::new(config.alpha, 0.0, Axis::X)?;
    let corrected = corrected_frequency(&trap, config.alpha);
    let width = 1.0 / trap.omega.sqrt();
    let x0 = packet_centre(&spec, 0.0, &trap, &trunc)?;
    let rows = (1..=config.freq_periods)
        .into_par_iter()
        .map(|k| -> Result<[f64; 8], CliError> {
            let t_u = TAU * k as f64 / trap.omega;
            let t_c = TAU * k as f64 / corrected;
            let (x_u, phase_u) = centre_and_phase(&spec, t_u, &trap, &trunc)?;
            let (x_c, phase_c) = centre_and_phase(&spec, t_c, &trap, &trunc)?;
            Ok([
                k as f64,
                t_u,
                (x_u - x0).abs() / width,
                phase_u,
                SQRT_2 * config.alpha * phase_u.abs(),
                t_c,
                (x_c - x0).abs() / width,
                phase_c,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let header = "k,t_uncorrected,drift_uncorrected,phase_uncorrected,arc_drift_uncorrected,t_corrected,drift_corrected,phase_corrected";
    if config.wants(Format::Csv) {
        let mut csv = format!("{header}\n");
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i == 0 {
                        format!("{}", *v as usize)
                    } else {
                        format_float(*v)
                    }
                })
                .collect();
            let _ = writeln!(csv, "{}", cells.join(","));
        }
        report.write("freq_check.csv", &csv)?;
    }
    if config.wants(Format::Json) {
        let keys: Vec<&str> = header.split(',').collect();
        let items: Vec<Value> = rows
            .iter()
            .map(|r| Value::Object(keys.iter().zip(r).map(|(k, v)| ((*k).to_string(), num(*v))).collect()))
            .collect();
        report.write_json("freq_check.json", &items)?;
    }
    if config.wants(Format::Svg) {
        let svg = line_plot(
            "packet-centre drift at full periods",
            "period k",
            "drift (zero-point widths)",
            &[
                Series {
                    label: "uncorrected, arc length",
                    points: rows.iter().map(|r| (r[0], r[4])).collect(),
                },
                Series {
                    label: "corrected, centre",
                    points: rows.iter().map(|r| (r[0], r[6])).collect(),
                },
            ],
        );
        report.write("freq_check.svg", &svg)?;
    }
    let (slope, intercept, r2) = linear_fit(&rows.iter().map(|r| (r[0], r[4])).collect::<Vec<_>>());
    let max_corrected = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    report.record("corrected_frequency", json!(corrected));
    report.record(
        "uncorrected_fit",
        json!({ "slope": slope, "intercept": intercept, "r_squared": r2.map(num) }),
    );
    report.record("max_corrected_drift", json!(max_corrected));
    report.record("corrected_drift_below_0_05", json!(max_corrected < 0.05));
    Ok(())
}

/// Entangling phase `aa + bb - ab - ba` of the Newtonian reference.
fn newtonian_total(experiment: &ExperimentConfig, t: f64) -> Result<f64, CliError> {
    let gamma = experiment.gamma()?;
    let pairs = experiment_pairs().as_array();
    let mut total = 0.0;
    for (pair, sign) in pairs.iter().zip(PAIR_SIGNS) {
        total += sign * newtonian_delta_s1(&experiment.trap, gamma, pair, t, &experiment.integrals)?;
    }
    Ok(total)
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::NAN
    } else {
        a / b
    }
}

pub fn compare_nrqm(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let experiment = config.experiment()?;
    report.advise(experiment.advisories());
    let times = crossing_times(&experiment);
    let rows = times
        .par_iter()
        .map(|&t| -> Result<[f64; 6], CliError> {
            let rel = branch_corrections(&experiment, t)?.total_phase();
            let newton = newtonian_total(&experiment, t)?;
            Ok([
                t,
                rel,
                newton,
                ratio(rel, newton),
                rel * rel / 8.0,
                newton * newton / 8.0,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut sweep = Vec::new();
    for &omega in &config.sweep_omegas {
        let mut c = config.clone();
        c.omega = omega;
        let e = c.experiment()?;
        let t = *crossing_times(&e).last().expect("crossing_count is at least 1");
        let rel = branch_corrections(&e, t)?.total_phase();
        let newton = newtonian_total(&e, t)?;
        sweep.push([omega, e.velocity_parameter(), t, rel, newton, ratio(rel, newton)]);
    }

    let header = "n,t,phase_rel,phase_newtonian,ratio,loss_rel,loss_newtonian,V_rel,V_newtonian";
    let sweep_header = "omega,velocity_parameter,t,phase_rel,phase_newtonian,ratio";
    if config.wants(Format::Csv) {
        let mut csv = format!("{header}\n");
        for (n, r) in rows.iter().enumerate() {
            let cells = [r[0], r[1], r[2], r[3], r[4], r[5], 1.0 - r[4], 1.0 - r[5]].map(format_float);
            let _ = writeln!(csv, "{n},{}", cells.join(","));
        }
        report.write("compare_nrqm.csv", &csv)?;
        let mut csv = format!("{sweep_header}\n");
        for r in &sweep {
            let cells: Vec<String> = r.iter().map(|v| format_float(*v)).collect();
            let _ = writeln!(csv, "{}", cells.join(","));
        }
        report.write("compare_nrqm_sweep.csv", &csv)?;
    }
    if config.wants(Format::Json) {
        let items: Vec<Value> = rows
            .iter()
            .enumerate()
            .map(|(n, r)| {
                json!({ "n": n, "t": r[0], "phase_rel": r[1], "phase_newtonian": r[2], "ratio": num(r[3]),
                        "loss_rel": r[4], "loss_newtonian": r[5] })
            })
            .collect();
        let swept: Vec<Value> = sweep
            .iter()
            .map(|r| {
                json!({ "omega": r[0], "velocity_parameter": r[1], "t": r[2], "phase_rel": r[3],
                             "phase_newtonian": r[4], "ratio": num(r[5]) })
            })
            .collect();
        report.write_json("compare_nrqm.json", &json!({ "crossings": items, "sweep": swept }))?;
    }
    if config.wants(Format::Svg) {
        let svg = line_plot(
            "visibility loss: relativistic against Newtonian",
            "crossing n",
            "1 - V",
            &[
                Series {
                    label: "relativistic",
                    points: rows.iter().enumerate().map(|(n, r)| (n as f64, r[4])).collect(),
                },
                Series {
                    label: "Newtonian",
                    points: rows.iter().enumerate().map(|(n, r)| (n as f64, r[5])).collect(),
                },
            ],
        );
        report.write("compare_nrqm.svg", &svg)?;
    }
    report.record(
        "relativistic_loss_at_least_newtonian",
        json!(rows.iter().all(|r| r[4] >= r[5])),
    );
    Ok(())
}

/// Parameters of the wave-packet figure.
pub const FIG2_OMEGA: f64 = 5e-4;
pub const FIG2_ALPHA: f64 = 5.0;

pub fn reproduce_fig2(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let trap = config.trap()?;
    report.advise(trap.advisories(config.alpha));
    let trunc = truncation(config, config.alpha)?;
    let grid = density_grid(config, trap.omega, config.alpha);
    let comps = components(Components::Pair, config.alpha)?;
    let plus = comps[0].0;
    let corrected = corrected_frequency(&trap, config.alpha);
    let width = 1.0 / trap.omega.sqrt();

    let panels = [
        ("fig2a", "first corrected crossing", centre_crossing_time(corrected, 0)),
        (
            "fig2b",
            "10th crossing, uncorrected period",
            centre_crossing_time(trap.omega, 9),
        ),
        (
            "fig2c",
            "10th crossing, corrected period",
            centre_crossing_time(corrected, 9),
        ),
    ];
    let mut summary = serde_json::Map::new();
    for (stem, title, t) in panels {
        let profile = superposition_density(&comps, t, &grid, &trap, &trunc, config.normalize)?;
        check_normalized(&profile)?;
        emit_profile(report, config, stem, title, &profile)?;
        let (visibility, fringes) = fringe_summary(&profile, trap.omega);
        let centre = packet_centre(&plus, t, &trap, &trunc)?;
        summary.insert(
            stem.into(),
            json!({
                "t": t,
                "visibility": visibility,
                "fringes": fringes,
                "separation_widths": 2.0 * centre.abs() / width,
            }),
        );
    }

    // Drift at the corrected full periods spanned by ten crossings.
    let x0 = packet_centre(&plus, 0.0, &trap, &trunc)?;
    let drifts = (1..=5)
        .map(|k| Ok((packet_centre(&plus, TAU * k as f64 / corrected, &trap, &trunc)? - x0).abs() / width))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let variances = variance_series(&plus, &[0.0, panels[2].2], &trap, &trunc)?;
    summary.insert("corrected_drift_widths".into(), json!(drifts));
    summary.insert("variance_initial".into(), json!(variances[0].1));
    summary.insert("variance_at_fig2c".into(), json!(variances[1].1));
    report.record("fig2", Value::Object(summary));
    Ok(())
}

/// Parameters of the visibility figure: `sqrt(2ω) alpha = 0.1`.
pub const FIG3_OMEGA: f64 = 2.5e-3;
pub const FIG3_ALPHA: f64 = std::f64::consts::SQRT_2;
pub const FIG3_KAPPA: f64 = 1e-3;
pub const FIG3_CROSSINGS: usize = 15;

pub fn reproduce_fig3(config: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    visibility(config, report)
}
