//! Level schemes of a trapped Rydberg ion under the trap's quadrupole drive,
//! plus the closed-form effective Hamiltonians used as independent checks.
//!
//! Parameters are ordinary frequencies in MHz (`nu = Omega / 2pi`); the
//! builders convert to angular units (rad/us) exactly once.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::effective::HarmonicSystem;
use crate::error::{Error, Result};
use crate::hilbert::{hc_pair, ketbra, tensor_product, Operator};

/// MHz to rad/us.
pub fn angular(nu_mhz: f64) -> f64 {
    2.0 * PI * nu_mhz
}

/// Single manifold: ladder 1-2-3 driven by two lasers, quadrupole coupling 2-4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourLevelParams {
    pub nu_omega1: f64,
    pub nu_omega2: f64,
    pub nu_delta2: f64,
    pub nu_delta3: f64,
    pub nu_delta4: f64,
    pub nu_quad: f64,
    pub nu_trap: f64,
}

/// Two manifolds: adds level 5 and the quadrupole coupling 3-5.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiveLevelParams {
    #[serde(flatten)]
    pub base: FourLevelParams,
    pub nu_delta5: f64,
    pub nu_quad_bar: f64,
}

/// Two identical ions with dipole-dipole exchange between |2 3> and |3 2>.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoIonParams {
    #[serde(flatten)]
    pub base: FourLevelParams,
    pub nu_lambda: f64,
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Config(format!("{name} must be finite, got {x}")));
    }
    Ok(())
}

impl FourLevelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in self.named_values() {
            check_finite(name, x)?;
        }
        if self.nu_trap <= 0.0 {
            return Err(Error::Config(format!(
                "nu_trap must be positive, got {}",
                self.nu_trap
            )));
        }
        Ok(())
    }

    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("nu_omega1", self.nu_omega1),
            ("nu_omega2", self.nu_omega2),
            ("nu_delta2", self.nu_delta2),
            ("nu_delta3", self.nu_delta3),
            ("nu_delta4", self.nu_delta4),
            ("nu_quad", self.nu_quad),
            ("nu_trap", self.nu_trap),
        ]
    }

    /// `W^2 / (2 w^2)`, the Stark-shift ratio.
    pub fn shift_ratio(&self) -> f64 {
        (self.nu_quad / self.nu_trap).powi(2) / 2.0
    }

    /// `1 - W^2 / (4 w^2)`, the laser Rabi-frequency rescaling.
    pub fn rabi_rescale(&self) -> f64 {
        1.0 - (self.nu_quad / self.nu_trap).powi(2) / 4.0
    }

    /// Primed detunings `(D2', D4')` in MHz.
    pub fn shifted_delta2_delta4(&self) -> (f64, f64) {
        let shift = self.shift_ratio() * (self.nu_delta2 - self.nu_delta4);
        (self.nu_delta2 - shift, self.nu_delta4 + shift)
    }
}

impl FiveLevelParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_finite("nu_delta5", self.nu_delta5)?;
        check_finite("nu_quad_bar", self.nu_quad_bar)
    }

    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = self.base.named_values();
        v.push(("nu_delta5", self.nu_delta5));
        v.push(("nu_quad_bar", self.nu_quad_bar));
        v
    }

    /// Primed detunings `(D3', D5')` in MHz.
    pub fn shifted_delta3_delta5(&self) -> (f64, f64) {
        let ratio = (self.nu_quad_bar / self.base.nu_trap).powi(2) / 2.0;
        let shift = ratio * (self.base.nu_delta3 - self.nu_delta5);
        (self.base.nu_delta3 - shift, self.nu_delta5 + shift)
    }

    /// Effective 1-2 coupling in MHz.
    pub fn omega1_eff(&self) -> f64 {
        self.base.nu_omega1 * self.base.rabi_rescale()
    }

    /// Effective 2-3 coupling in MHz.
    pub fn omega2_eff(&self) -> f64 {
        let w = self.base.nu_trap;
        let q = self.base.nu_quad;
        let qb = self.nu_quad_bar;
        self.base.nu_omega2 * (1.0 - q * q / (4.0 * w * w) - qb * qb / (4.0 * w * w))
    }

    /// Effective 4-5 coupling in MHz, mediated by 4-2-3-5.
    pub fn omega3_eff(&self) -> f64 {
        let w = self.base.nu_trap;
        self.base.nu_quad * self.nu_quad_bar * self.base.nu_omega2 / (2.0 * w * w)
    }
}

impl TwoIonParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_finite("nu_lambda", self.nu_lambda)
    }

    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = self.base.named_values();
        v.push(("nu_lambda", self.nu_lambda));
        v
    }

    /// Rescaled exchange `lambda (1 - W^2 / 2w^2)` in MHz.
    pub fn lambda_eff(&self) -> f64 {
        self.nu_lambda * (1.0 - self.base.shift_ratio())
    }

    /// Induced |3 4> <-> |4 3> coupling `lambda W^2 / 2w^2` in MHz.
    pub fn residual_coupling(&self) -> f64 {
        self.nu_lambda * self.base.shift_ratio()
    }
}

pub fn single_ion_labels(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| i.to_string()).collect()
}

/// Labels `"a_1 b_2"`: ion 1 in level a, ion 2 in level b.
pub fn two_ion_labels() -> Vec<String> {
    let mut out = Vec::with_capacity(16);
    for a in 1..=4 {
        for b in 1..=4 {
            out.push(two_ion_label(a, b));
        }
    }
    out
}

pub fn two_ion_label(level1: usize, level2: usize) -> String {
    format!("{level1}_1 {level2}_2")
}

/// 1-based composite index with ion 1 as the slow index.
pub fn two_ion_index(level1: usize, level2: usize) -> usize {
    4 * (level1 - 1) + (level2 - 1) + 1
}

fn op(i: usize, j: usize, dim: usize) -> Operator {
    ketbra(i, j, dim).expect("level index within model dimension")
}

fn pair(i: usize, j: usize, dim: usize) -> Operator {
    hc_pair(i, j, dim).expect("level index within model dimension")
}

fn label(op: Operator, labels: Vec<String>) -> Operator {
    op.with_labels(labels)
        .expect("label count matches model dimension")
}

/// Laser part `D2|2><2| + D3|3><3| + D4|4><4| + (W1|1><2| + W2|2><3| + H.c.)`
/// embedded in `dim` levels, in MHz.
fn ladder_h0_mhz(p: &FourLevelParams, dim: usize) -> Operator {
    op(2, 2, dim).scale(p.nu_delta2)
        + op(3, 3, dim).scale(p.nu_delta3)
        + op(4, 4, dim).scale(p.nu_delta4)
        + pair(1, 2, dim).scale(p.nu_omega1)
        + pair(2, 3, dim).scale(p.nu_omega2)
}

fn four_level_parts(p: &FourLevelParams) -> (Operator, Operator) {
    let h0 = ladder_h0_mhz(p, 4).scale(2.0 * PI);
    let v = pair(2, 4, 4).scale(angular(p.nu_quad) / 2.0);
    (h0, v)
}

pub fn build_four_level(p: &FourLevelParams) -> Result<HarmonicSystem> {
    p.validate()?;
    let (h0, v) = four_level_parts(p);
    let labels = single_ion_labels(4);
    HarmonicSystem::new(
        label(h0, labels.clone()),
        label(v, labels),
        angular(p.nu_trap),
    )
}

/// Closed-form effective Hamiltonian of the four-level model (rad/us).
pub fn closed_heff_four_level(p: &FourLevelParams) -> Operator {
    let (d2, d4) = p.shifted_delta2_delta4();
    let f = p.rabi_rescale();
    let h = op(2, 2, 4).scale(d2)
        + op(3, 3, 4).scale(p.nu_delta3)
        + op(4, 4, 4).scale(d4)
        + (pair(1, 2, 4).scale(p.nu_omega1) + pair(2, 3, 4).scale(p.nu_omega2)).scale(f);
    label(h.scale(2.0 * PI), single_ion_labels(4))
}

pub fn build_five_level(p: &FiveLevelParams) -> Result<HarmonicSystem> {
    p.validate()?;
    let h0 = (ladder_h0_mhz(&p.base, 5) + op(5, 5, 5).scale(p.nu_delta5)).scale(2.0 * PI);
    let v = pair(2, 4, 5).scale(angular(p.base.nu_quad) / 2.0)
        + pair(3, 5, 5).scale(angular(p.nu_quad_bar) / 2.0);
    let labels = single_ion_labels(5);
    HarmonicSystem::new(
        label(h0, labels.clone()),
        label(v, labels),
        angular(p.base.nu_trap),
    )
}

/// Closed-form effective Hamiltonian of the five-level model: two decoupled
/// ladders, {4, 5} and {1, 2, 3}.
pub fn closed_heff_five_level(p: &FiveLevelParams) -> Operator {
    let (d2, d4) = p.base.shifted_delta2_delta4();
    let (d3, d5) = p.shifted_delta3_delta5();
    let upper = op(4, 4, 5).scale(d4) + op(5, 5, 5).scale(d5) + pair(4, 5, 5).scale(p.omega3_eff());
    let lower = op(2, 2, 5).scale(d2)
        + op(3, 3, 5).scale(d3)
        + pair(1, 2, 5).scale(p.omega1_eff())
        + pair(2, 3, 5).scale(p.omega2_eff());
    label((upper + lower).scale(2.0 * PI), single_ion_labels(5))
}

fn lift_two_ion(single: &Operator) -> Operator {
    let id = Operator::identity(4);
    tensor_product(single, &id) + tensor_product(&id, single)
}

/// `|a_1 b_2><c_1 d_2| + H.c.` on the two-ion space.
fn two_ion_pair(a: (usize, usize), b: (usize, usize)) -> Operator {
    pair(two_ion_index(a.0, a.1), two_ion_index(b.0, b.1), 16)
}

/// Static part including the exchange term, and the summed drive; rad/us.
pub fn build_two_ion(p: &TwoIonParams) -> Result<HarmonicSystem> {
    p.validate()?;
    let (h1, v1) = four_level_parts(&p.base);
    let exchange = two_ion_pair((2, 3), (3, 2)).scale(angular(p.nu_lambda));
    let h0 = lift_two_ion(&h1) + exchange;
    let v = lift_two_ion(&v1);
    let labels = two_ion_labels();
    HarmonicSystem::new(
        label(h0, labels.clone()),
        label(v, labels),
        angular(p.base.nu_trap),
    )
}

/// Closed-form two-ion effective Hamiltonian. `D3' = D3` here: the drive has
/// no support on level 3 in this model.
pub fn closed_heff_two_ion(p: &TwoIonParams) -> Operator {
    let h = lift_two_ion(&closed_heff_four_level(&p.base))
        + two_ion_pair((2, 3), (3, 2)).scale(angular(p.lambda_eff()))
        + two_ion_pair((3, 4), (4, 3)).scale(angular(p.residual_coupling()));
    label(h, two_ion_labels())
}

/// Exchanges the two ions: `|a b> -> |b a>`.
pub fn ion_swap() -> Operator {
    let mut s = Operator::zeros(16);
    for a in 1..=4 {
        for b in 1..=4 {
            s += &op(two_ion_index(b, a), two_ion_index(a, b), 16);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::effective_hamiltonian;
    use crate::hilbert::commutator;

    const TAU: f64 = 2.0 * PI;

    pub(crate) fn fig2() -> FourLevelParams {
        FourLevelParams {
            nu_omega1: 2.0,
            nu_omega2: 2.0,
            nu_delta2: 2.0,
            nu_delta3: 2.0,
            nu_delta4: 1.0,
            nu_quad: 12.0,
            nu_trap: 20.0,
        }
    }

    fn fig4() -> FiveLevelParams {
        FiveLevelParams {
            base: FourLevelParams {
                nu_omega2: 2.0,
                nu_quad: 12.0,
                nu_trap: 20.0,
                ..Default::default()
            },
            nu_delta5: 0.0,
            nu_quad_bar: 4.0,
        }
    }

    fn fig5() -> TwoIonParams {
        TwoIonParams {
            base: FourLevelParams {
                nu_omega2: 2.0,
                nu_delta2: 1.0,
                nu_quad: 8.0,
                nu_trap: 30.0,
                ..Default::default()
            },
            nu_lambda: 7.0,
        }
    }

    #[test]
    fn zero_parameters_give_zero_operators() {
        let p = FourLevelParams {
            nu_trap: 1.0,
            ..Default::default()
        };
        let sys = build_four_level(&p).unwrap();
        assert_eq!(sys.h0().max_abs(), 0.0);
        assert_eq!(sys.v().max_abs(), 0.0);
    }

    #[test]
    fn fig2_matrix_elements() {
        let sys = build_four_level(&fig2()).unwrap();
        assert_eq!(sys.dim(), 4);
        assert!((sys.v().entry(2, 4).re / TAU - 6.0).abs() < 1e-14);
        assert!((sys.h0().entry(1, 2).re / TAU - 2.0).abs() < 1e-14);
        assert!(sys.h0().hermiticity_deviation() <= 1e-14);
        assert!(sys.v().hermiticity_deviation() <= 1e-14);
        assert_eq!(sys.h0().labels().unwrap(), ["1", "2", "3", "4"]);
    }

    #[test]
    fn nonpositive_trap_frequency_rejected() {
        let p = FourLevelParams {
            nu_trap: 0.0,
            ..fig2()
        };
        assert!(matches!(build_four_level(&p), Err(Error::Config(_))));
        let p = FourLevelParams {
            nu_quad: f64::NAN,
            ..fig2()
        };
        assert!(build_four_level(&p).is_err());
    }

    #[test]
    fn fig2_closed_form_values() {
        let p = fig2();
        assert!((p.rabi_rescale() - 0.91).abs() < 1e-12);
        let (d2, d4) = p.shifted_delta2_delta4();
        assert!((d2 - 1.82).abs() < 1e-12 * 1.82);
        assert!((d4 - 1.18).abs() < 1e-12 * 1.18);
        let h = closed_heff_four_level(&p);
        assert!((h.entry(1, 2).re / TAU - 1.82).abs() < 1e-12);
    }

    #[test]
    fn closed_four_level_without_drive_is_h0() {
        let p = FourLevelParams {
            nu_quad: 0.0,
            ..fig2()
        };
        let sys = build_four_level(&p).unwrap();
        assert!(closed_heff_four_level(&p).max_abs_diff(sys.h0()) == 0.0);
    }

    #[test]
    fn degenerate_levels_have_no_shift() {
        let p = FourLevelParams {
            nu_delta2: 3.0,
            nu_delta4: 3.0,
            ..fig2()
        };
        assert_eq!(p.shifted_delta2_delta4(), (3.0, 3.0));
    }

    #[test]
    fn five_level_embeds_four_level_drive() {
        let p = FiveLevelParams {
            nu_quad_bar: 0.0,
            ..fig4()
        };
        let five = build_five_level(&p).unwrap();
        let four = build_four_level(&p.base).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                assert_eq!(five.v().entry(i, j), four.v().entry(i, j));
            }
        }
        for k in 1..=5 {
            assert_eq!(five.v().entry(5, k).norm(), 0.0);
        }
    }

    #[test]
    fn fig4_values() {
        let p = fig4();
        let sys = build_five_level(&p).unwrap();
        assert!((sys.v().entry(3, 5).re / TAU - 2.0).abs() < 1e-14);
        assert!(sys.h0().hermiticity_deviation() <= 1e-14);
        assert!(sys.v().hermiticity_deviation() <= 1e-14);
        // 2 (1 - 144/1600 - 16/1600) and 12*4*2 / (2*400)
        assert!((p.omega2_eff() - 1.8).abs() < 1e-12 * 1.8);
        assert!((p.omega3_eff() - 0.12).abs() < 1e-12 * 0.12);
        let h = closed_heff_five_level(&p);
        for k in 2..=5 {
            assert_eq!(h.entry(k, k).norm(), 0.0);
        }
    }

    #[test]
    fn five_level_without_second_drive_reduces() {
        let p = FiveLevelParams {
            nu_quad_bar: 0.0,
            nu_delta5: 0.7,
            ..fig4()
        };
        let p = FiveLevelParams { base: fig2(), ..p };
        let h5 = closed_heff_five_level(&p);
        let h4 = closed_heff_four_level(&p.base);
        for i in 1..=3 {
            for j in 1..=3 {
                assert!((h5.entry(i, j) - h4.entry(i, j)).norm() < 1e-14);
            }
        }
        assert_eq!(p.omega3_eff(), 0.0);
    }

    #[test]
    fn five_level_ladders_decouple() {
        let h = closed_heff_five_level(&fig4());
        for i in 1..=3 {
            for j in 4..=5 {
                assert_eq!(h.entry(i, j).norm(), 0.0);
                assert_eq!(h.entry(j, i).norm(), 0.0);
            }
        }
    }

    #[test]
    fn two_ion_without_coupling_is_sum_of_copies() {
        let p = TwoIonParams {
            nu_lambda: 0.0,
            base: FourLevelParams {
                nu_quad: 0.0,
                ..fig5().base
            },
        };
        let sys = build_two_ion(&p).unwrap();
        let single = build_four_level(&p.base).unwrap();
        let id = Operator::identity(4);
        let sum = tensor_product(single.h0(), &id) + tensor_product(&id, single.h0());
        assert_eq!(sys.h0().max_abs_diff(&sum), 0.0);
        assert_eq!(sys.v().max_abs(), 0.0);
    }

    #[test]
    fn fig5_exchange_element() {
        let sys = build_two_ion(&fig5()).unwrap();
        let a = two_ion_index(2, 3);
        let b = two_ion_index(3, 2);
        assert!((sys.h0().entry(a, b).re / TAU - 7.0).abs() < 1e-14);
        assert_eq!(sys.dim(), 16);
        assert_eq!(sys.v().nonzero_count(), 16);
        assert_eq!(sys.h0().labels().unwrap()[a - 1], "2_1 3_2");
    }

    #[test]
    fn exchange_only_between_2_3_and_3_2() {
        let p = fig5();
        let with = build_two_ion(&p).unwrap();
        let without = build_two_ion(&TwoIonParams {
            nu_lambda: 0.0,
            ..p
        })
        .unwrap();
        let diff = with.h0() - without.h0();
        assert_eq!(diff.nonzero_count(), 2);
    }

    #[test]
    fn fig5_closed_form_values() {
        let p = fig5();
        // 7 (1 - 64/1800) and 7 * 64/1800
        assert!((p.lambda_eff() - 6.751_111_111_111_111).abs() < 1e-12 * 6.75);
        assert!((p.residual_coupling() - 0.248_888_888_888_888_9).abs() < 1e-12 * 0.25);
        let h = closed_heff_two_ion(&p);
        let e = h.entry(two_ion_index(2, 3), two_ion_index(3, 2)).re / TAU;
        assert!((e - 6.751_111_111_111_111).abs() < 1e-12);
        let r = h.entry(two_ion_index(3, 4), two_ion_index(4, 3)).re / TAU;
        assert!((r - 0.248_888_888_888_888_9).abs() < 1e-12);
        // Omega2 element of ion 1 with ion 2 in |1>: 2 (1 - 64/3600)
        let o2 = h.entry(two_ion_index(2, 1), two_ion_index(3, 1)).re / TAU;
        assert!((o2 - 2.0 * 0.982_222_222_222_222_2).abs() < 1e-12);
    }

    #[test]
    fn two_ion_closed_without_drive_is_h0() {
        let p = TwoIonParams {
            base: FourLevelParams {
                nu_quad: 0.0,
                ..fig5().base
            },
            ..fig5()
        };
        let sys = build_two_ion(&p).unwrap();
        assert!(closed_heff_two_ion(&p).max_abs_diff(sys.h0()) < 1e-14);
    }

    #[test]
    fn swap_commutes_with_two_ion_operators() {
        let sys = build_two_ion(&fig5()).unwrap();
        let s = ion_swap();
        assert!(commutator(&s, sys.h0()).unwrap().max_abs() < 1e-12);
        assert!(commutator(&s, sys.v()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn figure_engine_matches_closed_forms() {
        let sys = build_four_level(&fig2()).unwrap();
        assert!(effective_hamiltonian(&sys).max_abs_diff(&closed_heff_four_level(&fig2())) < 1e-12);
        let sys = build_five_level(&fig4()).unwrap();
        assert!(effective_hamiltonian(&sys).max_abs_diff(&closed_heff_five_level(&fig4())) < 1e-12);
        let sys = build_two_ion(&fig5()).unwrap();
        assert!(effective_hamiltonian(&sys).max_abs_diff(&closed_heff_two_ion(&fig5())) < 1e-12);
    }

    #[test]
    fn params_json_keys_are_flat() {
        let json = serde_json::to_value(fig4()).unwrap();
        let obj = json.as_object().unwrap();
        assert!(obj.contains_key("nu_quad_bar"));
        assert!(obj.contains_key("nu_omega2"));
        assert!(!obj.contains_key("base"));
        let back: FiveLevelParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, fig4());
    }
}
