use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use hillstab::duffing::{self, DuffingParams, Forcing};
use hillstab::evolution::{self, ModalState, WaveForcing, WaveParams};
use hillstab::hill::{
    certify, legacy_thresholds, stability_threshold, Certificate, PhaseState, SystemParams,
};
use hillstab::propagator::{
    self, fit_exponential, CoefficientSignal, ExpFit, SimOptions, DEFAULT_FIT_WINDOW,
};
use hillstab::resonance::{self, ResonantSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{required, Config};

/// What the process should report besides success.
pub enum Status {
    Done,
    /// `--assert-stable` was given and the criterion failed.
    Uncertified(String),
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> hillstab::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn print_certificate(p: &SystemParams<f64>, cert: &Certificate<f64>) -> Result<()> {
    let threshold = stability_threshold(p.b, p.c)?;
    let (strong, weak) = legacy_thresholds(p.b, p.c)?;
    println!("b = {}, c = {}, C = {}", p.b, p.c, p.ceiling);
    println!(
        "criterion C < c·max{{c, 2√b}} = {threshold}: {} (margin {})",
        cert.holds_main, cert.margin
    );
    println!("criterion C < c√b = {strong}: {}", cert.holds_fh2_strong);
    println!(
        "criterion C ≤ c²/4 + c√(b + c²/16) = {weak}: {}",
        cert.holds_fh2_weak
    );
    match cert.chosen_form {
        Some(form) => println!("decay rate δ = {} via form {form:?}", cert.delta),
        None => println!("decay rate δ = 0 (no form applies)"),
    }
    Ok(())
}

fn certificate_json(p: &SystemParams<f64>, cert: &Certificate<f64>) -> Result<serde_json::Value> {
    let (strong, weak) = legacy_thresholds(p.b, p.c)?;
    Ok(json!({
        "params": p,
        "threshold": stability_threshold(p.b, p.c)?,
        "legacy_thresholds": { "strong": strong, "weak": weak },
        "certificate": cert,
    }))
}

fn describe_fit(fit: &ExpFit<f64>) -> String {
    if fit.underflow {
        "gap reached zero, no log fit".into()
    } else {
        format!("fitted rate {}", fit.rate)
    }
}

fn assert_outcome(assert: bool, ok: bool, what: impl FnOnce() -> String) -> Status {
    if assert && !ok {
        Status::Uncertified(what())
    } else {
        Status::Done
    }
}

fn hill_params(
    cfg: &mut Config,
    b: Option<f64>,
    c: Option<f64>,
    ceiling: Option<f64>,
) -> Result<SystemParams<f64>> {
    let b = required(cfg.f64(b, "b")?, "b")?;
    let c = required(cfg.f64(c, "c")?, "c")?;
    let ceiling = required(cfg.f64(ceiling, "C")?, "C")?;
    Ok(SystemParams::new(b, c, ceiling)?)
}

#[derive(Args, Debug, Default)]
pub struct CertifyArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Ceiling of the coefficient a(t).
    #[arg(long = "C")]
    pub ceiling: Option<f64>,
    /// Write the certificate as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Exit with status 2 unless the criterion holds.
    #[arg(long)]
    pub assert_stable: bool,
}

pub fn certify_cmd(args: CertifyArgs, cfg: &mut Config) -> Result<Status> {
    let p = hill_params(cfg, args.b, args.c, args.ceiling)?;
    let json_path = cfg.path(args.json, "json")?;
    let assert = cfg.flag(args.assert_stable, "assert_stable")?;
    cfg.finish()?;

    let cert = certify(&p);
    print_certificate(&p, &cert)?;
    if let Some(path) = json_path {
        write_json(&path, &certificate_json(&p, &cert)?)?;
    }
    Ok(assert_outcome(assert, cert.holds_main, || {
        format!("C = {} does not satisfy C < c·max{{c, 2√b}}", p.ceiling)
    }))
}

#[derive(Args, Debug, Default)]
pub struct SimulateHillArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long = "C")]
    pub ceiling: Option<f64>,
    /// Piece start times of a(t), beginning with the origin.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub breakpoints: Option<Vec<f64>>,
    /// Piece values of a(t); without them a random signal is drawn.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Option<Vec<f64>>,
    /// Repeat the pieces with this period.
    #[arg(long)]
    pub period: Option<f64>,
    /// Number of pieces of the random signal [default: 20].
    #[arg(long)]
    pub pieces: Option<usize>,
    /// Seed of the random signal [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub u0: Option<f64>,
    /// [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    /// [default: 20]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// exact or rk4 [default: exact].
    #[arg(long)]
    pub method: Option<String>,
    /// RK4 step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Sample spacing of the exact propagator [default: t_end/2000].
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Trajectory CSV (t,u,v,F,G).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Trajectory JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub assert_stable: bool,
}

pub fn simulate_hill_cmd(args: SimulateHillArgs, cfg: &mut Config) -> Result<Status> {
    let p = hill_params(cfg, args.b, args.c, args.ceiling)?;
    let breakpoints = cfg.f64_list(args.breakpoints, "breakpoints")?;
    let values = cfg.f64_list(args.values, "values")?;
    let period = cfg.f64(args.period, "period")?;
    let pieces = cfg.usize(args.pieces, "pieces")?.unwrap_or(20);
    let seed = cfg.u64(args.seed, "seed")?.unwrap_or(0);
    let u0 = cfg.f64(args.u0, "u0")?.unwrap_or(1.0);
    let v0 = cfg.f64(args.v0, "v0")?.unwrap_or(0.0);
    let t_end = cfg.f64(args.t_end, "t_end")?.unwrap_or(20.0);
    let method = cfg
        .string(args.method, "method")?
        .unwrap_or_else(|| "exact".into());
    let h = cfg.f64(args.h, "h")?;
    let sample_dt = cfg.f64(args.sample_dt, "sample_dt")?;
    let csv_path = cfg.path(args.csv, "csv")?;
    let json_path = cfg.path(args.json, "json")?;
    let assert = cfg.flag(args.assert_stable, "assert_stable")?;
    cfg.finish()?;

    let signal = match (values, breakpoints) {
        (Some(values), breakpoints) => {
            let breakpoints = match breakpoints {
                Some(b) => b,
                None if values.len() == 1 => vec![0.0],
                None => bail!(
                    "parameter `breakpoints` is required when `values` has more than one entry"
                ),
            };
            CoefficientSignal::new(breakpoints, values, period)?
        }
        (None, Some(_)) => bail!("parameter `breakpoints` given without `values`"),
        (None, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            CoefficientSignal::random(&mut rng, pieces, t_end, 0.0, p.ceiling)
        }
    };
    let state0 = PhaseState::origin(u0, v0);
    let traj = match method.as_str() {
        "exact" => propagator::propagate_sampled(
            &p,
            &signal,
            &state0,
            t_end,
            Some(sample_dt.unwrap_or(t_end / 2000.0)),
        )?,
        "rk4" => propagator::simulate_hill_rk4(&p, &signal, &state0, t_end, h)?,
        other => bail!("parameter `method`: expected `exact` or `rk4`, got `{other}`"),
    };

    let cert = certify(&p);
    print_certificate(&p, &cert)?;
    let last = traj.last().expect("trajectory has samples");
    println!(
        "{} samples, method {method}; state at t = {}: u = {}, u' = {}",
        traj.len(),
        last.t,
        last.u,
        last.v
    );
    if traj.len() >= 10 {
        let fit = fit_exponential(&traj, DEFAULT_FIT_WINDOW)?;
        println!(
            "fitted decay rate of u² + u'² over the trailing half: {}",
            fit.rate
        );
    }
    if let Some(path) = csv_path {
        write_csv_with(&path, |w| traj.write_csv(w))?;
    }
    if let Some(path) = json_path {
        let mut w = create(&path)?;
        w.write_all(traj.to_json()?.as_bytes())?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(assert_outcome(assert, cert.holds_main, || {
        format!("C = {} does not satisfy C < c·max{{c, 2√b}}", p.ceiling)
    }))
}

#[derive(Args, Debug, Default)]
pub struct ResonanceArgs {
    /// Fast frequency ω > 1.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Damping [default: 0.9·c₀].
    #[arg(long)]
    pub c: Option<f64>,
    /// [default: 20]
    #[arg(long)]
    pub periods: Option<usize>,
    /// Per-period states (k,t,u,v,factor).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub assert_stable: bool,
}

pub fn resonance_cmd(args: ResonanceArgs, cfg: &mut Config) -> Result<Status> {
    let omega = required(cfg.f64(args.omega, "omega")?, "omega")?;
    let c = cfg.f64(args.c, "c")?;
    let periods = cfg.usize(args.periods, "periods")?.unwrap_or(20);
    let csv_path = cfg.path(args.csv, "csv")?;
    let json_path = cfg.path(args.json, "json")?;
    let assert = cfg.flag(args.assert_stable, "assert_stable")?;
    cfg.finish()?;

    let sys = ResonantSystem::new(omega)?;
    let c = c.unwrap_or(0.9 * sys.c0);
    let rep = sys.verify_unbounded(c, periods)?;
    let p = sys.params(c)?;
    println!(
        "ω = {omega}, period T = {}, c₀ = {}, C = {}, b = 1 + c²/4 = {}",
        sys.period, sys.c0, sys.ceiling, p.b
    );
    println!(
        "c = {c}: predicted growth factor per period ω·exp(−cT/2) = {}",
        rep.predicted_factor
    );
    println!(
        "measured over {periods} periods: max |factor − predicted| = {:e}",
        rep.max_factor_error
    );
    println!(
        "|x(0)| = {}, |x({periods}T)| = {} ({})",
        rep.initial_norm,
        rep.final_norm,
        if rep.grows() {
            "growing"
        } else {
            "not growing"
        }
    );
    println!("criterion certifies stability: {}", rep.certified_stable);
    if let Some(path) = csv_path {
        write_csv_with(&path, |w| rep.write_csv(w))?;
    }
    if let Some(path) = json_path {
        write_json(&path, &serde_json::to_value(&rep)?)?;
    }
    Ok(assert_outcome(assert, rep.certified_stable, || {
        format!("c = {c} with C = {} is not certified", sys.ceiling)
    }))
}

#[derive(Args, Debug, Default)]
pub struct DuffingArgs {
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Nonlinearity coefficient [default: 1].
    #[arg(long)]
    pub a: Option<f64>,
    /// Nonlinearity exponent [default: 2].
    #[arg(long)]
    pub p: Option<f64>,
    /// Forcing amplitude·cos(frequency·t + phase) [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub frequency: Option<f64>,
    /// [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub phase: Option<f64>,
    /// First solution [default: 1, 0].
    #[arg(long, allow_negative_numbers = true)]
    pub u0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    /// Second solution [default: drawn from the seed in [−2, 2]²].
    #[arg(long, allow_negative_numbers = true)]
    pub u1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v1: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: 50]
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Gap series (t,gap,log_gap).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Exit with status 2 unless the forcing is below the convergence threshold.
    #[arg(long)]
    pub assert_stable: bool,
}

pub fn duffing_cmd(args: DuffingArgs, cfg: &mut Config) -> Result<Status> {
    let b = required(cfg.f64(args.b, "b")?, "b")?;
    let c = required(cfg.f64(args.c, "c")?, "c")?;
    let a = cfg.f64(args.a, "a")?.unwrap_or(1.0);
    let p = cfg.f64(args.p, "p")?.unwrap_or(2.0);
    let amplitude = cfg.f64(args.amplitude, "amplitude")?.unwrap_or(0.0);
    let frequency = cfg.f64(args.frequency, "frequency")?.unwrap_or(1.0);
    let phase = cfg.f64(args.phase, "phase")?.unwrap_or(0.0);
    let u0 = cfg.f64(args.u0, "u0")?.unwrap_or(1.0);
    let v0 = cfg.f64(args.v0, "v0")?.unwrap_or(0.0);
    let u1 = cfg.f64(args.u1, "u1")?;
    let v1 = cfg.f64(args.v1, "v1")?;
    let seed = cfg.u64(args.seed, "seed")?.unwrap_or(0);
    let t_end = cfg.f64(args.t_end, "t_end")?.unwrap_or(50.0);
    let h = cfg.f64(args.h, "h")?;
    let csv_path = cfg.path(args.csv, "csv")?;
    let json_path = cfg.path(args.json, "json")?;
    let assert = cfg.flag(args.assert_stable, "assert_stable")?;
    cfg.finish()?;

    let dp = DuffingParams::new(b, c, a, p)?;
    let forcing = Forcing::cosine(amplitude, frequency, phase);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let second = (
        u1.unwrap_or_else(|| rng.gen_range(-2.0..=2.0)),
        v1.unwrap_or_else(|| rng.gen_range(-2.0..=2.0)),
    );
    let threshold = duffing::convergence_threshold(&dp);
    let bound = duffing::verify_ultimate_bound(&dp, &forcing, (u0, v0), t_end, h)?;
    let run = duffing::simulate_pair(
        &dp,
        &forcing,
        (u0, v0),
        second,
        t_end,
        SimOptions {
            h,
            ..SimOptions::default()
        },
    )?;

    println!(
        "g(u) = {b}·u + {a}·|u|^{p}·u, c = {c}, forcing {amplitude}·cos({frequency}·t + {phase})"
    );
    println!(
        "ultimate bound max{{2/(c√b), 1/b}}·|f| = {}; trailing max|u| = {} ({})",
        bound.bound,
        bound.trailing_max,
        if bound.holds { "holds" } else { "exceeded" }
    );
    println!(
        "convergence threshold on |f|: {threshold} ({})",
        if amplitude.abs() < threshold {
            "below"
        } else {
            "not below"
        }
    );
    println!(
        "pair ({u0}, {v0}) / ({}, {}): gap {} → {}, {}",
        second.0,
        second.1,
        run.gap.gaps[0],
        run.gap.gaps.last().expect("nonempty gap series"),
        describe_fit(&run.gap_fit)
    );
    println!(
        "observed amplitude {} gives A = {}, certified Hill rate {}",
        run.observed_amplitude, run.difference_ceiling, run.certified_rate
    );
    if let Some(path) = csv_path {
        write_csv_with(&path, |w| run.gap.write_csv(w))?;
    }
    if let Some(path) = json_path {
        write_json(
            &path,
            &json!({
                "params": dp,
                "forcing": forcing,
                "second_state": [second.0, second.1],
                "convergence_threshold": threshold,
                "ultimate_bound": bound,
                "gap_fit": run.gap_fit,
                "step": run.step,
                "observed_amplitude": run.observed_amplitude,
                "difference_ceiling": run.difference_ceiling,
                "certified_rate": run.certified_rate,
                "final_gap": run.gap.gaps.last(),
            }),
        )?;
    }
    Ok(assert_outcome(assert, amplitude.abs() < threshold, || {
        format!("forcing amplitude {amplitude} is not below the convergence threshold {threshold}")
    }))
}

/// Sine coefficients of `x(1 − x)` on `n` modes.
fn parabola_profile(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            if k % 2 == 1 {
                1.0 / (k as f64).powi(3)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Args, Debug, Default)]
pub struct WaveArgs {
    /// Galerkin modes [default: 32].
    #[arg(long)]
    pub n_modes: Option<usize>,
    /// Cubic coefficient [default: 1].
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Forcing amplitude, i.e. sup |f(t)|_H [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub frequency: Option<f64>,
    /// Sine coefficients of the forcing profile [default: those of x(1 − x)].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub profile: Option<Vec<f64>>,
    /// [default: 10]
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Evaluate the cubic term on the padded 3N + 2 grid.
    #[arg(long)]
    pub dealias: bool,
    /// Seed for the two random smooth initial states [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Position amplitude r of q_n = r·ξ/n³ [default: 1].
    #[arg(long)]
    pub r: Option<f64>,
    /// Velocity amplitude s of q̇_n = s·ζ/n² [default: 1].
    #[arg(long)]
    pub s: Option<f64>,
    /// [default: 4000]
    #[arg(long)]
    pub max_samples: Option<usize>,
    /// Gap series (t,energy,gap,phi_gap).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// First solution with per-mode amplitudes (t,energy,q1..qN).
    #[arg(long)]
    pub modes_csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Exit with status 2 unless the forcing is below the synchronization threshold.
    #[arg(long)]
    pub assert_stable: bool,
}

pub fn wave_cmd(args: WaveArgs, cfg: &mut Config) -> Result<Status> {
    let n = cfg.usize(args.n_modes, "n_modes")?.unwrap_or(32);
    let k = cfg.f64(args.k, "k")?.unwrap_or(1.0);
    let c = required(cfg.f64(args.c, "c")?, "c")?;
    let amplitude = cfg.f64(args.amplitude, "amplitude")?.unwrap_or(0.0);
    let frequency = cfg.f64(args.frequency, "frequency")?.unwrap_or(1.0);
    let profile = cfg.f64_list(args.profile, "profile")?;
    let t_end = cfg.f64(args.t_end, "t_end")?.unwrap_or(10.0);
    let h = cfg.f64(args.h, "h")?;
    let dealias = cfg.flag(args.dealias, "dealias")?;
    let seed = cfg.u64(args.seed, "seed")?.unwrap_or(0);
    let r = cfg.f64(args.r, "r")?.unwrap_or(1.0);
    let s = cfg.f64(args.s, "s")?.unwrap_or(1.0);
    let max_samples = cfg.usize(args.max_samples, "max_samples")?.unwrap_or(4000);
    let csv_path = cfg.path(args.csv, "csv")?;
    let modes_path = cfg.path(args.modes_csv, "modes_csv")?;
    let json_path = cfg.path(args.json, "json")?;
    let assert = cfg.flag(args.assert_stable, "assert_stable")?;
    cfg.finish()?;

    let params = WaveParams::new(n, k, c)?.dealiased(dealias);
    let forcing = WaveForcing::new(
        profile.unwrap_or_else(|| parabola_profile(n)),
        amplitude,
        frequency,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = ModalState::random_smooth(&mut rng, n, r, s);
    let v0 = ModalState::random_smooth(&mut rng, n, r, s);
    let opts = SimOptions { h, max_samples };
    let rep = evolution::wave_sync_experiment(&params, &forcing, &u0, &v0, t_end, opts)?;

    println!(
        "N = {n} modes, k = {k}, c = {c}, |f|²_H ≤ {}, step {}",
        rep.forcing_bound_sq, rep.step
    );
    println!(
        "synchronization threshold on |f|²_H: {} ({})",
        rep.sync_threshold,
        if rep.below_sync_threshold() {
            "below"
        } else {
            "not below"
        }
    );
    println!(
        "ultimate bound on ‖u_x‖²: {}; trailing max ‖u_x‖² = {}",
        rep.ultimate_bound, rep.trailing_v_norm_sq
    );
    println!(
        "k·(3/π)·max‖u_x‖² = {} vs c√(π² + c²/4) − c²/2 = {}",
        rep.lipschitz_coefficient, rep.lipschitz_threshold
    );
    println!(
        "energy-norm gap {} → {}, {}",
        rep.gaps[0],
        rep.gaps.last().expect("nonempty gap series"),
        describe_fit(&rep.gap_fit)
    );
    println!(
        "energy identity residual {:e} per unit time",
        rep.energy_residual
    );
    if let Some(path) = csv_path {
        write_csv_with(&path, |w| rep.write_csv(w))?;
    }
    if let Some(path) = modes_path {
        let run = evolution::simulate_wave(
            &params,
            &forcing,
            &u0,
            t_end,
            SimOptions {
                h: Some(rep.step),
                max_samples,
            },
        )?;
        write_csv_with(&path, |w| run.write_csv(w, true))?;
    }
    if let Some(path) = json_path {
        write_json(
            &path,
            &json!({
                "params": params,
                "forcing": forcing,
                "initial_states": [u0, v0],
                "sync_threshold": rep.sync_threshold,
                "forcing_bound_sq": rep.forcing_bound_sq,
                "ultimate_bound": rep.ultimate_bound,
                "trailing_v_norm_sq": rep.trailing_v_norm_sq,
                "lipschitz_coefficient": rep.lipschitz_coefficient,
                "lipschitz_threshold": rep.lipschitz_threshold,
                "gap_fit": rep.gap_fit,
                "energy_residual": rep.energy_residual,
                "step": rep.step,
            }),
        )?;
    }
    Ok(assert_outcome(assert, rep.below_sync_threshold(), || {
        format!(
            "|f|²_H = {} is not below the synchronization threshold {}",
            rep.forcing_bound_sq, rep.sync_threshold
        )
    }))
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// sharpness, resonance or certify.
    #[arg(long)]
    pub kind: Option<String>,
    /// sharpness: values of h = ω − 1 [default: 10 points from 1e-1 to 1e-4].
    #[arg(long = "h", value_delimiter = ',')]
    pub hs: Option<Vec<f64>>,
    /// resonance: frequencies ω.
    #[arg(long = "omega", value_delimiter = ',')]
    pub omegas: Option<Vec<f64>>,
    /// resonance: damping as a fraction of c₀ [default: 0.9].
    #[arg(long)]
    pub c_frac: Option<f64>,
    /// resonance: [default: 20]
    #[arg(long)]
    pub periods: Option<usize>,
    /// resonance: directory for per-ω CSVs and summary.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// certify: grid values of b.
    #[arg(long = "b", value_delimiter = ',')]
    pub bs: Option<Vec<f64>>,
    /// certify: grid values of c.
    #[arg(long = "c", value_delimiter = ',')]
    pub cs: Option<Vec<f64>>,
    /// certify: grid values of C.
    #[arg(long = "C", value_delimiter = ',')]
    pub ceilings: Option<Vec<f64>>,
    /// sharpness and certify: output CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Thread pool honouring `HILLSTAB_THREADS`.
fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HILLSTAB_THREADS") {
        let n: usize =
            v.parse().ok().filter(|&n| n > 0).with_context(|| {
                format!("HILLSTAB_THREADS must be a positive integer, got `{v}`")
            })?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

pub fn sweep_cmd(args: SweepArgs, cfg: &mut Config) -> Result<Status> {
    let kind = required(cfg.string(args.kind, "kind")?, "kind")?;
    match kind.as_str() {
        "sharpness" => {
            let hs = cfg.f64_list(args.hs, "h")?;
            let csv_path = cfg.path(args.csv, "csv")?;
            cfg.finish()?;
            let hs =
                hs.unwrap_or_else(|| (0..10).map(|i| 10f64.powf(-1.0 - i as f64 / 3.0)).collect());
            let rows = resonance::sharpness_sweep(&hs)?;
            for r in &rows {
                println!(
                    "h = {:e}: ω = {}, c₀ = {}, C = {}, C/(c₀√b) = {}",
                    r.h, r.omega, r.c0, r.ceiling, r.ratio
                );
            }
            if let Some(path) = csv_path {
                write_csv_with(&path, |w| resonance::write_sweep_csv(&rows, w))?;
            }
        }
        "resonance" => {
            let omegas = required(cfg.f64_list(args.omegas, "omega")?, "omega")?;
            let c_frac = cfg.f64(args.c_frac, "c_frac")?.unwrap_or(0.9);
            let periods = cfg.usize(args.periods, "periods")?.unwrap_or(20);
            let out_dir = required(cfg.path(args.out_dir, "out_dir")?, "out_dir")?;
            cfg.finish()?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let reports = pool()?.install(|| {
                omegas
                    .par_iter()
                    .enumerate()
                    .map(|(i, &omega)| -> Result<_> {
                        let sys = ResonantSystem::new(omega)?;
                        let rep = sys.verify_unbounded(c_frac * sys.c0, periods)?;
                        write_csv_with(&out_dir.join(format!("resonance_{i}.csv")), |w| {
                            rep.write_csv(w)
                        })?;
                        Ok(rep)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut w = csv::Writer::from_writer(create(&out_dir.join("summary.csv"))?);
            w.write_record([
                "index",
                "omega",
                "c0",
                "c",
                "predicted_factor",
                "max_factor_error",
                "final_over_initial",
            ])?;
            for (i, r) in reports.iter().enumerate() {
                println!(
                    "ω = {}: c = {}, factor {}, |x(nT)|/|x(0)| = {}",
                    r.omega,
                    r.c,
                    r.predicted_factor,
                    r.final_norm / r.initial_norm
                );
                w.write_record([
                    i.to_string(),
                    r.omega.to_string(),
                    r.c0.to_string(),
                    r.c.to_string(),
                    r.predicted_factor.to_string(),
                    r.max_factor_error.to_string(),
                    (r.final_norm / r.initial_norm).to_string(),
                ])?;
            }
            w.flush()?;
        }
        "certify" => {
            let bs = required(cfg.f64_list(args.bs, "b")?, "b")?;
            let cs = required(cfg.f64_list(args.cs, "c")?, "c")?;
            let ceilings = required(cfg.f64_list(args.ceilings, "C")?, "C")?;
            let csv_path = required(cfg.path(args.csv, "csv")?, "csv")?;
            cfg.finish()?;
            let mut grid = Vec::with_capacity(bs.len() * cs.len() * ceilings.len());
            for &b in &bs {
                for &c in &cs {
                    grid.extend(ceilings.iter().map(|&cc| (b, c, cc)));
                }
            }
            let rows = pool()?.install(|| {
                grid.par_iter()
                    .map(|&(b, c, cc)| -> Result<_> {
                        let p = SystemParams::new(b, c, cc)?;
                        Ok((p, stability_threshold(b, c)?, certify(&p)))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut w = csv::Writer::from_writer(create(&csv_path)?);
            w.write_record([
                "b",
                "c",
                "C",
                "threshold",
                "holds_main",
                "holds_strong",
                "holds_weak",
                "delta",
                "form",
            ])?;
            let mut certified = 0;
            for (p, threshold, cert) in &rows {
                certified += usize::from(cert.holds_main);
                w.write_record([
                    p.b.to_string(),
                    p.c.to_string(),
                    p.ceiling.to_string(),
                    threshold.to_string(),
                    cert.holds_main.to_string(),
                    cert.holds_fh2_strong.to_string(),
                    cert.holds_fh2_weak.to_string(),
                    cert.delta.to_string(),
                    cert.chosen_form.map_or(String::new(), |f| format!("{f:?}")),
                ])?;
            }
            w.flush()?;
            println!("{} grid points, {certified} certified", rows.len());
        }
        other => {
            bail!("parameter `kind`: expected `sharpness`, `resonance` or `certify`, got `{other}`")
        }
    }
    Ok(Status::Done)
}
