//! Schrödinger propagation: adaptive Runge-Kutta for the driven Hamiltonian,
//! eigendecomposition for static ones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::effective::HarmonicSystem;
use crate::error::{Error, Result};
use crate::hilbert::{HermitianEigen, Operator, StateVector};
use crate::integrator::{DormandPrince, StepControl};

/// Norm drift beyond this aborts a propagation.
pub const NORM_FAILURE_LIMIT: f64 = 1e-6;

/// Norm drift a healthy propagation stays under.
pub const NORM_DRIFT_BUDGET: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step cap as a fraction of the drive period.
    pub max_step_fraction: f64,
    /// Sample spacing in us.
    pub sample_dt: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step_fraction: 1.0 / 40.0,
            sample_dt: 1e-3,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.rel_tol,
            self.abs_tol,
            self.max_step_fraction,
            self.sample_dt,
        ]
        .iter()
        .all(|x| x.is_finite() && *x > 0.0);
        if !positive {
            return Err(Error::Argument(format!(
                "propagation settings must be positive: {self:?}"
            )));
        }
        if self.max_step_fraction > 0.1 {
            return Err(Error::Argument(format!(
                "max_step_fraction {} exceeds 1/10 of the drive period",
                self.max_step_fraction
            )));
        }
        Ok(())
    }
}

/// Sampled populations (and states) on an ascending time grid in us.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub states: Option<Vec<StateVector>>,
    /// `max_t |1 - <psi|psi>|` over the samples.
    pub max_norm_drift: f64,
}

impl Trajectory {
    fn from_states(times: Vec<f64>, states: Vec<StateVector>) -> Self {
        let populations: Vec<Vec<f64>> = states.iter().map(StateVector::populations).collect();
        let max_norm_drift = states
            .iter()
            .map(|s| (1.0 - s.norm_squared()).abs())
            .fold(0.0, f64::max);
        Self {
            times,
            populations,
            states: Some(states),
            max_norm_drift,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.populations.first().map_or(0, Vec::len)
    }

    /// Population of basis state `i` (1-based) over time.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[i - 1]).collect()
    }

    pub fn last_populations(&self) -> &[f64] {
        self.populations.last().map_or(&[], Vec::as_slice)
    }
}

/// `0, dt, 2dt, ...` up to `t_end`; `t_end` is appended when it is not on the grid.
pub fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Argument(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!(
            "sample spacing must be positive, got {dt}"
        )));
    }
    let n = (t_end / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let last = *times.last().unwrap();
    if t_end - last > 1e-9 * dt {
        times.push(t_end);
    }
    Ok(times)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Argument("empty time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument(
            "time grid must be ascending and start at t >= 0".into(),
        ));
    }
    Ok(())
}

struct DrivenRhs {
    static_part: DMatrix<C64>,
    drive: DMatrix<C64>,
    omega: f64,
}

impl DrivenRhs {
    fn new(sys: &HarmonicSystem, extra: Option<&Operator>) -> Result<Self> {
        let mut static_part = sys.h0().matrix().clone();
        if let Some(extra) = extra {
            if extra.dim() != sys.dim() {
                return Err(Error::DimensionMismatch {
                    left: sys.dim(),
                    right: extra.dim(),
                });
            }
            extra.require_hermitian("extra static term")?;
            static_part += extra.matrix();
        }
        let minus_i = C64::new(0.0, -1.0);
        Ok(Self {
            static_part: static_part * minus_i,
            drive: sys.v().matrix() * (minus_i * 2.0),
            omega: sys.omega(),
        })
    }

    fn eval(&self, t: f64, y: &DVector<C64>) -> DVector<C64> {
        let c = C64::new((self.omega * t).cos(), 0.0);
        let mut out = &self.static_part * y;
        out.gemv(c, &self.drive, y, C64::new(1.0, 0.0));
        out
    }

    fn norm_bound(&self) -> f64 {
        let inf = |m: &DMatrix<C64>| {
            m.row_iter()
                .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        inf(&self.static_part) + inf(&self.drive)
    }
}

type Rhs = DVector<C64>;

fn driven_integrator(
    sys: &HarmonicSystem,
    extra: Option<&Operator>,
    settings: &PropagationSettings,
) -> Result<DormandPrince<impl FnMut(f64, &Rhs) -> Rhs>> {
    settings.validate()?;
    let rhs = DrivenRhs::new(sys, extra)?;
    let max_step = settings.max_step_fraction * sys.period();
    let h_initial = (1e-2 / (1.0 + rhs.norm_bound())).min(max_step);
    let ctrl = StepControl {
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        max_step,
    };
    Ok(DormandPrince::new(
        move |t, y: &DVector<C64>| rhs.eval(t, y),
        ctrl,
        h_initial,
    ))
}

fn check_drift(state: &StateVector, t: f64) -> Result<()> {
    let drift = (1.0 - state.norm_squared()).abs();
    if drift > NORM_FAILURE_LIMIT {
        return Err(Error::NormDrift {
            drift,
            time: t,
            limit: NORM_FAILURE_LIMIT,
        });
    }
    Ok(())
}

/// Integrates `i d/dt psi = [H0 + extra + 2 v cos(wt)] psi` from `t = 0`,
/// sampling on the uniform `settings.sample_dt` grid up to `t_end`.
pub fn propagate_driven(
    sys: &HarmonicSystem,
    extra_static: Option<&Operator>,
    psi0: &StateVector,
    t_end: f64,
    settings: &PropagationSettings,
) -> Result<Trajectory> {
    let times = uniform_grid(t_end, settings.sample_dt)?;
    propagate_driven_at(sys, extra_static, psi0, &times, settings)
}

/// As [`propagate_driven`] but sampling at arbitrary ascending times
/// (`settings.sample_dt` is ignored).
pub fn propagate_driven_at(
    sys: &HarmonicSystem,
    extra_static: Option<&Operator>,
    psi0: &StateVector,
    times: &[f64],
    settings: &PropagationSettings,
) -> Result<Trajectory> {
    if psi0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: sys.dim(),
            right: psi0.dim(),
        });
    }
    check_times(times)?;
    let mut dp = driven_integrator(sys, extra_static, settings)?;
    let mut t = 0.0;
    let mut y = psi0.amplitudes().clone();
    let mut states = Vec::with_capacity(times.len());
    for &ts in times {
        y = dp.advance(t, y, ts);
        t = ts;
        let s = StateVector::from_evolved(y.clone());
        check_drift(&s, t)?;
        states.push(s);
    }
    Ok(Trajectory::from_states(times.to_vec(), states))
}

/// Evolves a state under the driven Hamiltonian from `t_from` to `t_to`;
/// `t_to < t_from` integrates backwards.
pub fn evolve_driven(
    sys: &HarmonicSystem,
    extra_static: Option<&Operator>,
    psi: &StateVector,
    t_from: f64,
    t_to: f64,
    settings: &PropagationSettings,
) -> Result<StateVector> {
    if psi.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: sys.dim(),
            right: psi.dim(),
        });
    }
    let mut dp = driven_integrator(sys, extra_static, settings)?;
    let out = StateVector::from_evolved(dp.advance(t_from, psi.amplitudes().clone(), t_to));
    check_drift(&out, t_to)?;
    Ok(out)
}

/// Exact evolution under a time-independent Hermitian `h`.
pub fn propagate_static(h: &Operator, psi0: &StateVector, times: &[f64]) -> Result<Trajectory> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: psi0.dim(),
        });
    }
    check_times(times)?;
    let eig = HermitianEigen::new(h)?;
    let coeffs = eig.vectors.adjoint() * psi0.amplitudes();
    let states = times
        .iter()
        .map(|&t| {
            let phased = DVector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(&eig.values)
                    .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
            );
            StateVector::from_evolved(&eig.vectors * phased)
        })
        .collect();
    Ok(Trajectory::from_states(times.to_vec(), states))
}

/// Rotating-wave baseline: the oscillating term is dropped, leaving `H0 + extra`.
pub fn rwa_baseline(
    sys: &HarmonicSystem,
    extra_static: Option<&Operator>,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Trajectory> {
    let h = match extra_static {
        Some(extra) => sys.h0().try_add(extra)?,
        None => sys.h0().clone(),
    };
    propagate_static(&h, psi0, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{hc_pair, ketbra};

    fn settings() -> PropagationSettings {
        PropagationSettings::default()
    }

    #[test]
    fn grid_has_expected_points() {
        let g = uniform_grid(1.0, 1e-3).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], 0.0);
        assert!((g[1000] - 1.0).abs() < 1e-15);
        let g = uniform_grid(0.25, 0.1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(*g.last().unwrap(), 0.25);
    }

    #[test]
    fn settings_validation() {
        assert!(settings().validate().is_ok());
        let bad = PropagationSettings {
            max_step_fraction: 0.2,
            ..settings()
        };
        assert!(bad.validate().is_err());
        let bad = PropagationSettings {
            rel_tol: 0.0,
            ..settings()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stationary_states_without_drive() {
        let h0 = ketbra(1, 1, 3).unwrap().scale(5.0) + ketbra(2, 2, 3).unwrap().scale(-2.0);
        let sys = HarmonicSystem::new(h0, Operator::zeros(3), 40.0).unwrap();
        let psi0 = StateVector::basis(2, 3).unwrap();
        let tr = propagate_driven(&sys, None, &psi0, 0.3, &settings()).unwrap();
        for p in &tr.populations {
            assert!((p[1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_rabi_formula() {
        let rabi = 7.0;
        let h0 = hc_pair(1, 2, 2).unwrap().scale(rabi);
        let sys = HarmonicSystem::new(h0, Operator::zeros(2), 100.0).unwrap();
        let psi0 = StateVector::basis(1, 2).unwrap();
        let tr = propagate_driven(&sys, None, &psi0, 0.5, &settings()).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.populations) {
            assert!((p[1] - (rabi * t).sin().powi(2)).abs() < 1e-8);
        }
        assert!(tr.max_norm_drift <= NORM_DRIFT_BUDGET);
    }

    #[test]
    fn static_zero_hamiltonian() {
        let psi0 = StateVector::basis(2, 3).unwrap();
        let tr = propagate_static(&Operator::zeros(3), &psi0, &[0.0, 0.5, 1.0]).unwrap();
        for s in tr.states.as_ref().unwrap() {
            assert!(s.max_abs_diff(&psi0) < 1e-15);
        }
    }

    #[test]
    fn static_diagonal_keeps_populations() {
        let h = ketbra(1, 1, 2).unwrap().scale(3.0) + ketbra(2, 2, 2).unwrap().scale(-1.0);
        let s = 0.5f64.sqrt();
        let psi0 =
            StateVector::new(DVector::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, s)])).unwrap();
        let tr = propagate_static(&h, &psi0, &uniform_grid(1.0, 0.1).unwrap()).unwrap();
        for p in &tr.populations {
            assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn static_rejects_non_hermitian() {
        let psi0 = StateVector::basis(1, 2).unwrap();
        assert!(propagate_static(&ketbra(1, 2, 2).unwrap(), &psi0, &[0.0]).is_err());
    }

    #[test]
    fn rwa_without_drive_matches_static() {
        let h0 = hc_pair(1, 2, 3).unwrap().scale(2.0) + ketbra(3, 3, 3).unwrap();
        let sys = HarmonicSystem::new(h0.clone(), hc_pair(2, 3, 3).unwrap(), 30.0).unwrap();
        let psi0 = StateVector::basis(1, 3).unwrap();
        let times = uniform_grid(1.0, 0.01).unwrap();
        let a = rwa_baseline(&sys.with_scaled_drive(0.0), None, &psi0, &times).unwrap();
        let b = propagate_static(&h0, &psi0, &times).unwrap();
        assert_eq!(a.populations, b.populations);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let sys = HarmonicSystem::new(Operator::zeros(2), Operator::zeros(2), 1.0).unwrap();
        let psi0 = StateVector::basis(1, 3).unwrap();
        assert!(propagate_driven(&sys, None, &psi0, 1.0, &settings()).is_err());
        let psi0 = StateVector::basis(1, 2).unwrap();
        assert!(
            propagate_driven(&sys, Some(&Operator::zeros(3)), &psi0, 1.0, &settings()).is_err()
        );
    }

    #[test]
    fn loose_tolerances_trip_norm_failure() {
        let h0 = hc_pair(1, 2, 2).unwrap().scale(50.0);
        let sys = HarmonicSystem::new(h0, hc_pair(1, 2, 2).unwrap().scale(40.0), 1.0).unwrap();
        let psi0 = StateVector::basis(1, 2).unwrap();
        let sloppy = PropagationSettings {
            rel_tol: 1.0,
            abs_tol: 1.0,
            max_step_fraction: 0.1,
            sample_dt: 0.5,
        };
        let err = propagate_driven(&sys, None, &psi0, 50.0, &sloppy).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }
}
