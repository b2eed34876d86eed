//! Figure scenarios: exact vs effective vs rotating-wave comparisons,
//! detuning scans and the drive-frequency scaling study.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_driven_at, propagate_static, rwa_baseline, uniform_grid, PropagationSettings,
    Trajectory,
};
use crate::effective::{map_frame, EffectivePicture, FrameDirection, HarmonicSystem};
use crate::error::{Error, Result};
use crate::hilbert::{Operator, StateVector};
use crate::models::{self, angular, FiveLevelParams, FourLevelParams, TwoIonParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    FourLevel(FourLevelParams),
    FiveLevel(FiveLevelParams),
    TwoIon(TwoIonParams),
}

impl ModelParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelParams::FourLevel(_) => "four_level",
            ModelParams::FiveLevel(_) => "five_level",
            ModelParams::TwoIon(_) => "two_ion",
        }
    }

    pub fn base(&self) -> &FourLevelParams {
        match self {
            ModelParams::FourLevel(p) => p,
            ModelParams::FiveLevel(p) => &p.base,
            ModelParams::TwoIon(p) => &p.base,
        }
    }

    pub fn base_mut(&mut self) -> &mut FourLevelParams {
        match self {
            ModelParams::FourLevel(p) => p,
            ModelParams::FiveLevel(p) => &mut p.base,
            ModelParams::TwoIon(p) => &mut p.base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::FourLevel(p) => p.validate(),
            ModelParams::FiveLevel(p) => p.validate(),
            ModelParams::TwoIon(p) => p.validate(),
        }
    }

    pub fn build(&self) -> Result<HarmonicSystem> {
        match self {
            ModelParams::FourLevel(p) => models::build_four_level(p),
            ModelParams::FiveLevel(p) => models::build_five_level(p),
            ModelParams::TwoIon(p) => models::build_two_ion(p),
        }
    }

    pub fn closed_heff(&self) -> Operator {
        match self {
            ModelParams::FourLevel(p) => models::closed_heff_four_level(p),
            ModelParams::FiveLevel(p) => models::closed_heff_five_level(p),
            ModelParams::TwoIon(p) => models::closed_heff_two_ion(p),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            ModelParams::FourLevel(_) => models::single_ion_labels(4),
            ModelParams::FiveLevel(_) => models::single_ion_labels(5),
            ModelParams::TwoIon(_) => models::two_ion_labels(),
        }
    }

    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        match self {
            ModelParams::FourLevel(p) => p.named_values(),
            ModelParams::FiveLevel(p) => p.named_values(),
            ModelParams::TwoIon(p) => p.named_values(),
        }
    }
}

/// One comparison protocol: model, initial basis state, sampling, and the
/// states whose populations are scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub model: ModelParams,
    pub initial_state: String,
    /// us
    pub t_end: f64,
    /// us
    pub sample_dt: f64,
    pub micromotion_map: bool,
    pub monitored: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
}

fn label_index(labels: &[String], label: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .map(|k| k + 1)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown basis state `{label}`; expected one of {labels:?}"
            ))
        })
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let labels = self.model.labels();
        label_index(&labels, &self.initial_state)?;
        for m in &self.monitored {
            label_index(&labels, m)?;
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return Err(Error::Config(format!(
                "sample_dt must be positive, got {}",
                self.sample_dt
            )));
        }
        Ok(())
    }

    pub fn initial_index(&self) -> Result<usize> {
        label_index(&self.model.labels(), &self.initial_state)
    }

    pub fn monitored_indices(&self) -> Result<Vec<usize>> {
        let labels = self.model.labels();
        self.monitored
            .iter()
            .map(|m| label_index(&labels, m))
            .collect()
    }

    pub fn settings(&self) -> PropagationSettings {
        PropagationSettings {
            sample_dt: self.sample_dt,
            ..PropagationSettings::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5a,
    Fig5b,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5a,
        Preset::Fig5b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5a => "fig5a",
            Preset::Fig5b => "fig5b",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig2 => "four-level ladder, P1 and P3 over 1 us",
            Preset::Fig3 => "four-level ladder, P1 and P3 at 0.5 us versus Delta2",
            Preset::Fig4 => "five-level scheme, Rabi oscillation 2 <-> 3",
            Preset::Fig5a => "two ions, exchange |2_1 3_2> <-> |3_1 2_2>",
            Preset::Fig5b => "two ions, residual transfer |3_1 4_2> -> |4_1 3_2>",
        }
    }

    pub fn config(self) -> ScenarioConfig {
        let fig2 = FourLevelParams {
            nu_omega1: 2.0,
            nu_omega2: 2.0,
            nu_delta2: 2.0,
            nu_delta3: 2.0,
            nu_delta4: 1.0,
            nu_quad: 12.0,
            nu_trap: 20.0,
        };
        let fig5 = TwoIonParams {
            base: FourLevelParams {
                nu_omega1: 0.0,
                nu_omega2: 2.0,
                nu_delta2: 1.0,
                nu_delta3: 0.0,
                nu_delta4: 0.0,
                nu_quad: 8.0,
                nu_trap: 30.0,
            },
            nu_lambda: 7.0,
        };
        let fig5_assumption =
            "Omega1 = 0 and Delta3 = Delta4 = 0 (not given for the two-ion figure)".to_string();
        let ion_pair = |a, b| models::two_ion_label(a, b);
        match self {
            Preset::Fig2 => ScenarioConfig {
                model: ModelParams::FourLevel(fig2),
                initial_state: "1".into(),
                t_end: 1.0,
                sample_dt: 1e-3,
                micromotion_map: true,
                monitored: vec!["1".into(), "3".into()],
                assumptions: vec!["initial state |1> (not given for the four-level figure)".into()],
            },
            Preset::Fig3 => ScenarioConfig {
                t_end: 0.5,
                assumptions: vec![
                    "initial state |1> (not given for the four-level figure)".into(),
                    "Delta2 scanned alone; Delta3 held at 2 MHz".into(),
                ],
                ..Preset::Fig2.config()
            },
            Preset::Fig4 => ScenarioConfig {
                model: ModelParams::FiveLevel(FiveLevelParams {
                    base: FourLevelParams {
                        nu_omega1: 0.0,
                        nu_omega2: 2.0,
                        nu_delta2: 0.0,
                        nu_delta3: 0.0,
                        nu_delta4: 0.0,
                        nu_quad: 12.0,
                        nu_trap: 20.0,
                    },
                    nu_delta5: 0.0,
                    nu_quad_bar: 4.0,
                }),
                initial_state: "2".into(),
                t_end: 1.0,
                sample_dt: 1e-3,
                micromotion_map: true,
                monitored: vec!["3".into()],
                assumptions: vec!["Delta5 = 0 (not given for the five-level figure)".into()],
            },
            Preset::Fig5a => ScenarioConfig {
                model: ModelParams::TwoIon(fig5),
                initial_state: ion_pair(2, 3),
                t_end: 0.5,
                sample_dt: 1e-3,
                micromotion_map: true,
                monitored: vec![ion_pair(2, 3), ion_pair(3, 2)],
                assumptions: vec![fig5_assumption],
            },
            Preset::Fig5b => ScenarioConfig {
                model: ModelParams::TwoIon(fig5),
                initial_state: ion_pair(3, 4),
                t_end: 2.2,
                sample_dt: 1e-3,
                micromotion_map: true,
                monitored: vec![ion_pair(3, 4), ion_pair(4, 3)],
                assumptions: vec![fig5_assumption],
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    Ok(name.parse::<Preset>()?.config())
}

/// Deviation of one monitored population from the exact trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateDeviation {
    pub label: String,
    /// Pointwise maximum over the sample grid.
    pub max_abs: f64,
    /// Maximum after averaging both series over one drive period.
    pub period_averaged: f64,
    /// The state is touched by the quadrupole drive and carries micromotion.
    pub driven: bool,
}

impl StateDeviation {
    /// Period-averaged for driven states, pointwise otherwise.
    pub fn gated(&self) -> f64 {
        if self.driven {
            self.period_averaged
        } else {
            self.max_abs
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedParameter {
    pub name: String,
    pub nu_mhz: f64,
    pub angular_rad_per_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub model: String,
    pub parameters: Vec<ResolvedParameter>,
    pub assumptions: Vec<String>,
    pub initial_state: String,
    pub micromotion_map: bool,
    pub t_end_us: f64,
    pub sample_dt_us: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step_fraction: f64,
    pub exact_max_norm_drift: f64,
}

#[derive(Clone, Debug)]
pub struct ComparisonResult {
    pub labels: Vec<String>,
    pub exact: Trajectory,
    pub effective: Trajectory,
    pub rwa: Trajectory,
    pub dev_effective: Vec<StateDeviation>,
    pub dev_rwa: Vec<StateDeviation>,
    pub metadata: Metadata,
}

impl ComparisonResult {
    pub fn dev_effective_of(&self, label: &str) -> Option<&StateDeviation> {
        self.dev_effective.iter().find(|d| d.label == label)
    }

    pub fn dev_rwa_of(&self, label: &str) -> Option<&StateDeviation> {
        self.dev_rwa.iter().find(|d| d.label == label)
    }

    /// Populations of the labelled state in the three trajectories.
    pub fn series(&self, label: &str) -> Option<[Vec<f64>; 3]> {
        let i = self.labels.iter().position(|l| l == label)? + 1;
        Some([
            self.exact.series(i),
            self.effective.series(i),
            self.rwa.series(i),
        ])
    }
}

pub fn resolved_parameters(model: &ModelParams) -> Vec<ResolvedParameter> {
    model
        .named_values()
        .into_iter()
        .map(|(name, nu)| ResolvedParameter {
            name: name.to_string(),
            nu_mhz: nu,
            angular_rad_per_us: angular(nu),
        })
        .collect()
}

/// Effective-picture trajectory; with `micromotion_map` the initial state is
/// moved into the effective frame and every sample is moved back.
pub fn effective_trajectory(
    sys: &HarmonicSystem,
    psi0: &StateVector,
    times: &[f64],
    micromotion_map: bool,
) -> Result<Trajectory> {
    let pic = EffectivePicture::new(sys);
    if !micromotion_map {
        return propagate_static(&pic.h_eff, psi0, times);
    }
    let start = map_frame(&pic, sys.omega(), psi0, 0.0, FrameDirection::LabToEffective)?;
    let in_frame = propagate_static(&pic.h_eff, &start, times)?;
    let states = in_frame.states.expect("static propagation keeps states");
    let lab: Vec<StateVector> = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| map_frame(&pic, sys.omega(), s, t, FrameDirection::EffectiveToLab))
        .collect::<Result<_>>()?;
    let populations: Vec<Vec<f64>> = lab.iter().map(StateVector::populations).collect();
    let max_norm_drift = lab
        .iter()
        .map(|s| (1.0 - s.norm_squared()).abs())
        .fold(0.0, f64::max);
    Ok(Trajectory {
        times: times.to_vec(),
        populations,
        states: Some(lab),
        max_norm_drift,
    })
}

/// Mean of every run of `window` consecutive samples.
pub fn sliding_mean(x: &[f64], window: usize) -> Vec<f64> {
    let window = window.clamp(1, x.len().max(1));
    if x.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(x.len() + 1 - window);
    let mut acc: f64 = x[..window].iter().sum();
    out.push(acc / window as f64);
    for k in window..x.len() {
        acc += x[k] - x[k - window];
        out.push(acc / window as f64);
    }
    out
}

/// Number of grid samples spanning one drive period.
pub fn period_window(period: f64, times: &[f64]) -> usize {
    if times.len() < 2 {
        return 1;
    }
    let dt = times[1] - times[0];
    ((period / dt).round() as usize).max(1)
}

pub fn max_abs_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn deviations(
    labels: &[String],
    monitored: &[usize],
    driven: &[bool],
    reference: &Trajectory,
    other: &Trajectory,
    window: usize,
) -> Vec<StateDeviation> {
    monitored
        .iter()
        .map(|&i| {
            let a = reference.series(i);
            let b = other.series(i);
            StateDeviation {
                label: labels[i - 1].clone(),
                max_abs: max_abs_deviation(&a, &b),
                period_averaged: max_abs_deviation(
                    &sliding_mean(&a, window),
                    &sliding_mean(&b, window),
                ),
                driven: driven[i - 1],
            }
        })
        .collect()
}

/// Basis states with nonzero support in the drive amplitude.
pub fn driven_states(sys: &HarmonicSystem) -> Vec<bool> {
    let v = sys.v();
    (1..=v.dim())
        .map(|i| (1..=v.dim()).any(|j| v.entry(i, j).norm() > 0.0))
        .collect()
}

struct Runs {
    sys: HarmonicSystem,
    exact: Trajectory,
    effective: Trajectory,
    rwa: Trajectory,
}

fn simulate(
    cfg: &ScenarioConfig,
    times: &[f64],
    settings: &PropagationSettings,
    with_rwa: bool,
) -> Result<Runs> {
    cfg.validate()?;
    let sys = cfg.model.build()?;
    let psi0 = StateVector::basis(cfg.initial_index()?, sys.dim())?;
    let exact = propagate_driven_at(&sys, None, &psi0, times, settings)?;
    let effective = effective_trajectory(&sys, &psi0, times, cfg.micromotion_map)?;
    let rwa = if with_rwa {
        rwa_baseline(&sys, None, &psi0, times)?
    } else {
        Trajectory {
            times: Vec::new(),
            populations: Vec::new(),
            states: None,
            max_norm_drift: 0.0,
        }
    };
    Ok(Runs {
        sys,
        exact,
        effective,
        rwa,
    })
}

pub fn run_comparison(cfg: &ScenarioConfig) -> Result<ComparisonResult> {
    run_comparison_with(cfg, &cfg.settings())
}

/// Exact, effective and rotating-wave runs on the shared `sample_dt` grid.
/// `settings.sample_dt` is overridden by the scenario's.
pub fn run_comparison_with(
    cfg: &ScenarioConfig,
    settings: &PropagationSettings,
) -> Result<ComparisonResult> {
    let settings = PropagationSettings {
        sample_dt: cfg.sample_dt,
        ..*settings
    };
    cfg.validate()?;
    let times = uniform_grid(cfg.t_end, cfg.sample_dt)?;
    let runs = simulate(cfg, &times, &settings, true)?;
    let labels = cfg.model.labels();
    let monitored = cfg.monitored_indices()?;
    let driven = driven_states(&runs.sys);
    let window = period_window(runs.sys.period(), &times);
    let dev_effective = deviations(
        &labels,
        &monitored,
        &driven,
        &runs.exact,
        &runs.effective,
        window,
    );
    let dev_rwa = deviations(&labels, &monitored, &driven, &runs.exact, &runs.rwa, window);
    let metadata = Metadata {
        model: cfg.model.kind().to_string(),
        parameters: resolved_parameters(&cfg.model),
        assumptions: cfg.assumptions.clone(),
        initial_state: cfg.initial_state.clone(),
        micromotion_map: cfg.micromotion_map,
        t_end_us: cfg.t_end,
        sample_dt_us: cfg.sample_dt,
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        max_step_fraction: settings.max_step_fraction,
        exact_max_norm_drift: runs.exact.max_norm_drift,
    };
    Ok(ComparisonResult {
        labels,
        exact: runs.exact,
        effective: runs.effective,
        rwa: runs.rwa,
        dev_effective,
        dev_rwa,
        metadata,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub nu_delta2: f64,
    pub p1_exact: f64,
    pub p1_eff: f64,
    pub p1_rwa: f64,
    pub p3_exact: f64,
    pub p3_eff: f64,
}

/// Default detuning grid in MHz: [-5, 5], 201 points.
pub fn default_detuning_grid() -> Vec<f64> {
    linspace(-5.0, 5.0, 201)
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Populations of levels 1 and 3 at `t_obs` for each `Delta2` in the grid.
pub fn run_detuning_scan(
    cfg: &ScenarioConfig,
    nu_delta2_grid: &[f64],
    t_obs: f64,
) -> Result<Vec<ScanRow>> {
    run_detuning_scan_with(cfg, nu_delta2_grid, t_obs, &cfg.settings())
}

pub fn run_detuning_scan_with(
    cfg: &ScenarioConfig,
    nu_delta2_grid: &[f64],
    t_obs: f64,
    settings: &PropagationSettings,
) -> Result<Vec<ScanRow>> {
    if nu_delta2_grid.is_empty() {
        return Err(Error::Config("detuning grid is empty".into()));
    }
    if !(t_obs.is_finite() && t_obs > 0.0) {
        return Err(Error::Config(format!(
            "observation time must be positive, got {t_obs}"
        )));
    }
    let labels = cfg.model.labels();
    let i1 = label_index(&labels, "1")?;
    let i3 = label_index(&labels, "3")?;
    let mut grid = nu_delta2_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let times = [0.0, t_obs];
    grid.par_iter()
        .map(|&d2| {
            let mut point = cfg.clone();
            point.model.base_mut().nu_delta2 = d2;
            let runs = simulate(&point, &times, settings, true)?;
            let last = |tr: &Trajectory, i: usize| tr.last_populations()[i - 1];
            Ok(ScanRow {
                nu_delta2: d2,
                p1_exact: last(&runs.exact, i1),
                p1_eff: last(&runs.effective, i1),
                p1_rwa: last(&runs.rwa, i1),
                p3_exact: last(&runs.exact, i3),
                p3_eff: last(&runs.effective, i3),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub nu_trap: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingResult {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln D` against `ln nu_trap`.
    pub slope: f64,
}

/// Integer multiples of the drive period up to `t_end`.
pub fn stroboscopic_times(nu_trap: f64, t_end: f64) -> Vec<f64> {
    let n = (t_end * nu_trap + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 / nu_trap).collect()
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run_omega_scaling(base: &ScenarioConfig, nu_trap_list: &[f64]) -> Result<ScalingResult> {
    run_omega_scaling_with(base, nu_trap_list, &base.settings())
}

/// For each trap frequency, the largest monitored-population deviation
/// between exact and frame-mapped effective dynamics at stroboscopic times.
pub fn run_omega_scaling_with(
    base: &ScenarioConfig,
    nu_trap_list: &[f64],
    settings: &PropagationSettings,
) -> Result<ScalingResult> {
    if nu_trap_list.len() < 4 {
        return Err(Error::Config(
            "scaling study needs at least 4 trap frequencies".into(),
        ));
    }
    if nu_trap_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "trap frequencies must be strictly ascending".into(),
        ));
    }
    if !base.micromotion_map {
        return Err(Error::Config(
            "scaling study requires micromotion_map = true".into(),
        ));
    }
    let monitored = base.monitored_indices()?;
    let rows: Vec<ScalingRow> = nu_trap_list
        .par_iter()
        .map(|&nu| {
            let mut cfg = base.clone();
            cfg.model.base_mut().nu_trap = nu;
            let times = stroboscopic_times(nu, cfg.t_end);
            let runs = simulate(&cfg, &times, settings, false)?;
            let deviation = monitored
                .iter()
                .map(|&i| max_abs_deviation(&runs.exact.series(i), &runs.effective.series(i)))
                .fold(0.0, f64::max);
            Ok(ScalingRow {
                nu_trap: nu,
                deviation,
            })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.nu_trap).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    Ok(ScalingResult {
        slope: loglog_slope(&x, &y),
        rows,
    })
}
