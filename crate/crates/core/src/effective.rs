//! Effective picture of a harmonically driven Hamiltonian.
//!
//! For `H(t) = H0 + v e^{iwt} + v^dag e^{-iwt}` with Hermitian `v`, the frame
//! `|psi~> = exp(iK(t)) |psi>` with
//!
//! ```text
//! K(t) = (2v/w) sin(wt) - (2i/w^2) [v, H0] cos(wt)
//! ```
//!
//! removes the drive up to `O(w^-4)` in the Hamiltonian, leaving
//! `H_eff = H0 + [[v, H0], v] / w^2`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{commutator, expi_hermitian, Operator, StateVector};

/// `H(t) = H0 + 2 v cos(omega t)`; energies and `omega` in rad/us.
#[derive(Clone, Debug)]
pub struct HarmonicSystem {
    h0: Operator,
    v: Operator,
    omega: f64,
}

impl HarmonicSystem {
    pub fn new(h0: Operator, v: Operator, omega: f64) -> Result<Self> {
        if h0.dim() != v.dim() {
            return Err(Error::DimensionMismatch {
                left: h0.dim(),
                right: v.dim(),
            });
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Argument(format!(
                "drive frequency must be positive, got {omega}"
            )));
        }
        h0.require_hermitian("static Hamiltonian H0")?;
        // The micromotion generator below is only valid for Hermitian v.
        v.require_hermitian("drive amplitude v")?;
        Ok(Self { h0, v, omega })
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn v(&self) -> &Operator {
        &self.v
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// `H(t)` including the oscillating term.
    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        &self.h0 + &self.v.scale(2.0 * (self.omega * t).cos())
    }

    /// Same system with `v` multiplied by a real factor.
    pub fn with_scaled_drive(&self, s: f64) -> Self {
        Self {
            h0: self.h0.clone(),
            v: self.v.scale(s),
            omega: self.omega,
        }
    }

    /// Same system with an extra static term folded into `H0`.
    pub fn with_extra_static(&self, extra: &Operator) -> Result<Self> {
        Self::new(self.h0.try_add(extra)?, self.v.clone(), self.omega)
    }
}

/// Time-independent effective Hamiltonian together with the two amplitudes of
/// the micromotion generator.
#[derive(Clone, Debug)]
pub struct EffectivePicture {
    pub h_eff: Operator,
    /// Coefficient of `sin(wt)` in `K(t)`: `2v/w`.
    pub k1_amp: Operator,
    /// Coefficient of `cos(wt)` in `K(t)`: `-2i[v, H0]/w^2`.
    pub k2_amp: Operator,
}

impl EffectivePicture {
    pub fn new(sys: &HarmonicSystem) -> Self {
        let w2 = sys.omega * sys.omega;
        let comm = commutator(&sys.v, &sys.h0).expect("dimensions checked at construction");
        let double = commutator(&comm, &sys.v).expect("dimensions checked at construction");
        Self {
            h_eff: &sys.h0 + &double.scale(1.0 / w2),
            k1_amp: sys.v.scale(2.0 / sys.omega),
            k2_amp: comm.scale_complex(C64::new(0.0, -2.0 / w2)),
        }
    }

    /// `K(t)` for drive frequency `omega`.
    pub fn generator(&self, omega: f64, t: f64) -> Operator {
        let phase = omega * t;
        &self.k1_amp.scale(phase.sin()) + &self.k2_amp.scale(phase.cos())
    }
}

/// `H0 + [[v, H0], v] / w^2`.
pub fn effective_hamiltonian(sys: &HarmonicSystem) -> Operator {
    EffectivePicture::new(sys).h_eff
}

/// `K(t)` truncated after the `w^-2` term.
pub fn micromotion_generator(sys: &HarmonicSystem, t: f64) -> Operator {
    EffectivePicture::new(sys).generator(sys.omega, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameDirection {
    LabToEffective,
    EffectiveToLab,
}

/// Applies `exp(iK(t))` (lab to effective) or its inverse.
pub fn map_frame(
    pic: &EffectivePicture,
    omega: f64,
    psi: &StateVector,
    t: f64,
    direction: FrameDirection,
) -> Result<StateVector> {
    if psi.dim() != pic.h_eff.dim() {
        return Err(Error::DimensionMismatch {
            left: pic.h_eff.dim(),
            right: psi.dim(),
        });
    }
    let sign = match direction {
        FrameDirection::LabToEffective => 1.0,
        FrameDirection::EffectiveToLab => -1.0,
    };
    let u = expi_hermitian(&pic.generator(omega, t), sign)?;
    Ok(StateVector::from_evolved(u.apply(psi)?))
}
