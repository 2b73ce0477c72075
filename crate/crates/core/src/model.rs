//! Reservoir and classifier configuration types.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::basis;
use crate::error::{QdcError, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix};

/// Couplings above this value leave the weak-coupling regime the model assumes.
pub const WEAK_COUPLING_BOUND: f64 = 0.1;

/// Polar and azimuthal angles (radians) of a pure qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

impl BlochAngles {
    /// `theta` must lie in `[0, π]`; `phi` is reduced modulo 2π.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(QdcError::Config(format!(
                "Bloch angles must be finite, got theta={theta}, phi={phi}"
            )));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(QdcError::Config(format!(
                "theta={theta} rad lies outside [0, π]"
            )));
        }
        Ok(Self {
            theta,
            phi: wrap_angle(phi),
        })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Angles reached by unconstrained parameter updates. Only finiteness is required;
    /// polar angles outside `[0, π]` are kept as they are.
    pub(crate) fn from_raw(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(QdcError::Config(format!(
                "Bloch angles must be finite, got theta={theta}, phi={phi}"
            )));
        }
        Ok(Self {
            theta,
            phi: wrap_angle(phi),
        })
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// One information reservoir: the state of its (identical, memoryless) units and
/// the coupling strength to the target qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub bloch: BlochAngles,
    g: f64,
}

impl ReservoirSpec {
    pub fn new(bloch: BlochAngles, g: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(QdcError::Config(format!(
                "coupling must be finite and non-negative, got {g}"
            )));
        }
        let spec = Self { bloch, g };
        if !spec.is_weak_coupling() {
            log::warn!("coupling g={g} exceeds the weak-coupling bound {WEAK_COUPLING_BOUND}");
        }
        Ok(spec)
    }

    #[inline]
    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn is_weak_coupling(&self) -> bool {
        self.g <= WEAK_COUPLING_BOUND
    }

    /// Same reservoir state, different coupling.
    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.bloch, g)
    }
}

/// Complete classifier model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    reservoirs: Vec<ReservoirSpec>,
    tau: f64,
    r: f64,
    target_init: DensityMatrix,
}

impl ClassifierConfig {
    pub fn new(
        reservoirs: Vec<ReservoirSpec>,
        tau: f64,
        r: f64,
        target_init: DensityMatrix,
    ) -> Result<Self> {
        if reservoirs.is_empty() {
            return Err(QdcError::Config("at least one reservoir is required".into()));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(QdcError::Config(format!("tau must be positive, got {tau}")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(QdcError::Config(format!("r must be positive, got {r}")));
        }
        if target_init.dim() != 2 {
            return Err(QdcError::Dimension(format!(
                "target state must be 2x2, got dimension {}",
                target_init.dim()
            )));
        }
        target_init.validate()?;
        Ok(Self {
            reservoirs,
            tau,
            r,
            target_init,
        })
    }

    /// Target starting in |+⟩.
    pub fn with_plus_target(reservoirs: Vec<ReservoirSpec>, tau: f64, r: f64) -> Result<Self> {
        Self::new(
            reservoirs,
            tau,
            r,
            DensityMatrix::from_matrix_unchecked(basis::plus()),
        )
    }

    pub fn reservoirs(&self) -> &[ReservoirSpec] {
        &self.reservoirs
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn target_init(&self) -> &DensityMatrix {
        &self.target_init
    }

    pub fn with_reservoirs(&self, reservoirs: Vec<ReservoirSpec>) -> Result<Self> {
        Self::new(reservoirs, self.tau, self.r, self.target_init.clone())
    }

    pub fn with_target(&self, target_init: DensityMatrix) -> Result<Self> {
        Self::new(self.reservoirs.clone(), self.tau, self.r, target_init)
    }

    /// Overwrites every coupling, keeping the reservoir states.
    pub fn with_couplings(&self, couplings: &[f64]) -> Result<Self> {
        if couplings.len() != self.reservoirs.len() {
            return Err(QdcError::Dimension(format!(
                "{} couplings for {} reservoirs",
                couplings.len(),
                self.reservoirs.len()
            )));
        }
        let reservoirs = self
            .reservoirs
            .iter()
            .zip(couplings)
            .map(|(res, &g)| res.with_g(g))
            .collect::<Result<Vec<_>>>()?;
        self.with_reservoirs(reservoirs)
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.reservoirs.iter().map(|r| r.g()).collect()
    }
}

/// Pauli observable used as the classifier readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliObservable {
    Z,
    Y,
}

impl PauliObservable {
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            PauliObservable::Z => basis::sigma_z(),
            PauliObservable::Y => basis::sigma_y(),
        }
    }
}

impl fmt::Display for PauliObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PauliObservable::Z => f.write_str("z"),
            PauliObservable::Y => f.write_str("y"),
        }
    }
}

/// Pure-state density matrix
/// `[[(1+cosθ)/2, e^{−iφ}sinθ/2], [e^{iφ}sinθ/2, (1−cosθ)/2]]`.
pub fn bloch_density(b: BlochAngles) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(bloch_matrix(b))
}

pub(crate) fn bloch_matrix(b: BlochAngles) -> ComplexMatrix {
    let e = reservoir_expectations(b);
    let p_e = Complex64::new((1.0 + e.sz) / 2.0, 0.0);
    let p_g = Complex64::new((1.0 - e.sz) / 2.0, 0.0);
    ComplexMatrix::new(2, 2, vec![p_e, e.s_minus, e.s_plus, p_g]).expect("2x2")
}

/// Single-unit expectations identified with the matrix elements of [`bloch_density`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirExpectations {
    /// ⟨σz⟩ = cosθ
    pub sz: f64,
    /// ⟨σ⁺⟩ = e^{iφ} sinθ / 2 (lower-left element)
    pub s_plus: Complex64,
    /// ⟨σ⁻⟩ = e^{−iφ} sinθ / 2 (upper-right element)
    pub s_minus: Complex64,
}

pub fn reservoir_expectations(b: BlochAngles) -> ReservoirExpectations {
    let half_sin = 0.5 * b.theta.sin();
    ReservoirExpectations {
        sz: b.theta.cos(),
        s_plus: Complex64::from_polar(half_sin, b.phi),
        s_minus: Complex64::from_polar(half_sin, -b.phi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expect;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn poles() {
        let north = bloch_density(BlochAngles::new(0.0, 0.0).unwrap());
        assert!(north.matrix().max_abs_diff(&basis::excited()) < 1e-15);
        let south = bloch_density(BlochAngles::new(PI, 0.0).unwrap());
        assert!(south.matrix().max_abs_diff(&basis::ground()) < 1e-15);
    }

    #[test]
    fn equator_is_plus_state() {
        let plus = bloch_density(BlochAngles::new(PI / 2.0, 0.0).unwrap());
        assert!(plus.matrix().max_abs_diff(&basis::plus()) < 1e-15);
    }

    #[test]
    fn angle_validation() {
        assert!(BlochAngles::new(-0.1, 0.0).is_err());
        assert!(BlochAngles::new(PI + 1e-9, 0.0).is_err());
        assert!(BlochAngles::new(f64::NAN, 0.0).is_err());
        assert!(BlochAngles::new(1.0, f64::INFINITY).is_err());
        let b = BlochAngles::new(1.0, -PI / 2.0).unwrap();
        assert_abs_diff_eq!(b.phi(), 1.5 * PI, epsilon = 1e-15);
        let b = BlochAngles::new(1.0, 5.0 * PI).unwrap();
        assert_abs_diff_eq!(b.phi(), PI, epsilon = 1e-14);
        assert_eq!(wrap_angle(-1e-300), 0.0);
    }

    #[test]
    fn expectations_examples() {
        let n = reservoir_expectations(BlochAngles::new(0.0, 1.234).unwrap());
        assert_eq!(n.sz, 1.0);
        assert_abs_diff_eq!(n.s_plus.norm(), 0.0);
        assert_abs_diff_eq!(n.s_minus.norm(), 0.0);

        let eq = reservoir_expectations(BlochAngles::new(PI / 2.0, 0.0).unwrap());
        assert_abs_diff_eq!(eq.sz, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(eq.s_minus.re, 0.5);
        assert_abs_diff_eq!(eq.s_plus.re, 0.5);

        let b = BlochAngles::from_degrees(60.0, 340.0).unwrap();
        let e = reservoir_expectations(b);
        assert_abs_diff_eq!(e.sz, 0.5, epsilon = 1e-15);
        let amp = 3f64.sqrt() / 4.0;
        let phi = 340f64.to_radians();
        assert_abs_diff_eq!(e.s_minus.re, amp * phi.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.s_minus.im, -amp * phi.sin(), epsilon = 1e-15);
    }

    #[test]
    fn coupling_validation() {
        let b = BlochAngles::new(0.0, 0.0).unwrap();
        assert!(ReservoirSpec::new(b, -1e-3).is_err());
        assert!(ReservoirSpec::new(b, f64::NAN).is_err());
        let strong = ReservoirSpec::new(b, 0.5).unwrap();
        assert!(!strong.is_weak_coupling());
        assert!(ReservoirSpec::new(b, 0.01).unwrap().is_weak_coupling());
    }

    #[test]
    fn config_validation() {
        let res = vec![ReservoirSpec::new(BlochAngles::new(0.0, 0.0).unwrap(), 0.01).unwrap()];
        assert!(ClassifierConfig::with_plus_target(vec![], 3.0, 0.36).is_err());
        assert!(ClassifierConfig::with_plus_target(res.clone(), 0.0, 0.36).is_err());
        assert!(ClassifierConfig::with_plus_target(res.clone(), 3.0, -1.0).is_err());
        let four = DensityMatrix::maximally_mixed(4);
        assert!(ClassifierConfig::new(res.clone(), 3.0, 0.36, four).is_err());
        let cfg = ClassifierConfig::with_plus_target(res, 3.0, 0.36).unwrap();
        assert!(cfg.with_couplings(&[0.1, 0.2]).is_err());
        assert_eq!(cfg.with_couplings(&[0.02]).unwrap().couplings(), vec![0.02]);
    }

    proptest! {
        #[test]
        fn bloch_density_invariants(theta in 0.0..=PI, phi in 0.0..TAU) {
            let b = BlochAngles::new(theta, phi).unwrap();
            let rho = bloch_density(b);
            rho.validate().unwrap();
            prop_assert!((expect(&rho, &basis::sigma_z()).unwrap() - theta.cos()).abs() <= 1e-12);
            prop_assert!((expect(&rho, &basis::sigma_y()).unwrap() - theta.sin() * phi.sin()).abs() <= 1e-12);
            prop_assert!((rho.purity() - 1.0).abs() <= 1e-12);
            let sq = rho.matrix().matmul(rho.matrix()).unwrap();
            prop_assert!(sq.max_abs_diff(rho.matrix()) <= 1e-12);

            let e = reservoir_expectations(b);
            let m = rho.matrix();
            prop_assert!((m.get(0, 0).re - m.get(1, 1).re - e.sz).abs() <= 1e-12);
            prop_assert!((m.get(0, 1) - e.s_minus).norm() <= 1e-12);
            prop_assert!((m.get(1, 0) - e.s_plus).norm() <= 1e-12);
        }
    }
}
