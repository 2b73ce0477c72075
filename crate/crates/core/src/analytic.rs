//! Closed-form steady state of the target qubit and the binary decision rule.
//!
//! Populations are the g²-weighted average of the reservoir populations. The
//! steady coherence is `ρ_eg = i·γ·⟨σz⟩ss` with `γ = rτ Σ g_i ⟨σ⁻⟩_i`, which
//! gives `⟨σy⟩ss = −rτ (Σ g_i sinθ_i cosφ_i)(Σ g_j² cosθ_j)/Σ g_j²`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QdcError, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, PSD_TOL};
use crate::model::{reservoir_expectations, ClassifierConfig, PauliObservable, ReservoirSpec};

/// Binary classifier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Zero => 0,
            Label::One => 1,
        }
    }
}

/// Label 0 when the readout is `≥ 0`, label 1 otherwise.
pub fn classify(value: f64) -> Label {
    if value >= 0.0 {
        Label::Zero
    } else {
        Label::One
    }
}

fn coupling_norm(reservoirs: &[ReservoirSpec]) -> Result<f64> {
    let total: f64 = reservoirs.iter().map(|r| r.g() * r.g()).sum();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(QdcError::Undefined(
            "steady state is undefined when every coupling is zero".into(),
        ))
    }
}

/// Steady ⟨σz⟩: `Σ g_i² cosθ_i / Σ g_i²`.
pub fn steady_sz(reservoirs: &[ReservoirSpec]) -> Result<f64> {
    let norm = coupling_norm(reservoirs)?;
    let weighted: f64 = reservoirs
        .iter()
        .map(|r| r.g() * r.g() * r.bloch.theta().cos())
        .sum();
    Ok(weighted / norm)
}

/// Coherence factor `γ = rτ Σ g_i ⟨σ⁻⟩_i`.
pub fn coherence_factor(config: &ClassifierConfig) -> Complex64 {
    let sum: Complex64 = config
        .reservoirs()
        .iter()
        .map(|r| reservoir_expectations(r.bloch).s_minus * r.g())
        .sum();
    sum * (config.r() * config.tau())
}

/// Steady ⟨σy⟩ for any number of reservoirs, as (coherence factor) × (magnetization factor).
pub fn steady_sy(config: &ClassifierConfig) -> Result<f64> {
    let sz = steady_sz(config.reservoirs())?;
    // γ⁻ + γ⁺ = 2 Re γ⁻ = rτ Σ g_i sinθ_i cosφ_i
    let gamma_sum: f64 = config
        .reservoirs()
        .iter()
        .map(|r| r.g() * r.bloch.theta().sin() * r.bloch.phi().cos())
        .sum::<f64>()
        * config.r()
        * config.tau();
    Ok(-gamma_sum * sz)
}

/// Term-by-term two-reservoir expansion of the steady ⟨σy⟩; kept as an
/// independent check on [`steady_sy`].
pub fn steady_sy_two_reservoirs(config: &ClassifierConfig) -> Result<f64> {
    let [r1, r2] = config.reservoirs() else {
        return Err(QdcError::Config(format!(
            "two-reservoir expansion needs exactly 2 reservoirs, got {}",
            config.reservoirs().len()
        )));
    };
    let (g1, g2) = (r1.g(), r2.g());
    let denom = g1 * g1 + g2 * g2;
    if denom <= 0.0 {
        return Err(QdcError::Undefined("all couplings are zero".into()));
    }
    let (s1, c1, cp1) = (
        r1.bloch.theta().sin(),
        r1.bloch.theta().cos(),
        r1.bloch.phi().cos(),
    );
    let (s2, c2, cp2) = (
        r2.bloch.theta().sin(),
        r2.bloch.theta().cos(),
        r2.bloch.phi().cos(),
    );
    let numer = g1.powi(3) * s1 * c1 * cp1
        + g1 * g2 * g2 * s1 * c2 * cp1
        + g1 * g1 * g2 * c1 * s2 * cp2
        + g2.powi(3) * s2 * c2 * cp2;
    Ok(-config.r() * config.tau() * numer / denom)
}

/// Closed-form steady density matrix of the target qubit.
///
/// The coherence term is perturbative in `rτ`; a configuration whose coherence
/// pushes the state out of the positive cone is reported as `Undefined`.
pub fn steady_rho(config: &ClassifierConfig) -> Result<DensityMatrix> {
    let reservoirs = config.reservoirs();
    let norm = coupling_norm(reservoirs)?;
    let (mut p_e, mut p_g) = (0.0, 0.0);
    for r in reservoirs {
        let sz = r.bloch.theta().cos();
        let w = r.g() * r.g();
        p_e += w * 0.5 * (1.0 + sz);
        p_g += w * 0.5 * (1.0 - sz);
    }
    p_e /= norm;
    p_g /= norm;
    let coherence = Complex64::i() * coherence_factor(config) * (p_e - p_g);

    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(p_e, 0.0),
            coherence,
            coherence.conj(),
            Complex64::new(p_g, 0.0),
        ],
    )?;
    let rho = DensityMatrix::from_matrix_unchecked_lenient(m);
    let min_eig = rho.min_eigenvalue();
    if min_eig < -PSD_TOL {
        return Err(QdcError::Undefined(format!(
            "steady coherence |ρ_eg|={:.3e} exceeds the population bound; \
             smallest eigenvalue {min_eig:.3e} (reduce r·τ)",
            coherence.norm()
        )));
    }
    Ok(rho)
}

/// Steady readout of both observables plus the decision taken on `decide_on`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyReadout {
    pub sz: f64,
    pub sy: f64,
    pub decision: Label,
}

pub fn steady_readout(config: &ClassifierConfig, decide_on: PauliObservable) -> Result<SteadyReadout> {
    let sz = steady_sz(config.reservoirs())?;
    let sy = steady_sy(config)?;
    let decision = classify(match decide_on {
        PauliObservable::Z => sz,
        PauliObservable::Y => sy,
    });
    Ok(SteadyReadout { sz, sy, decision })
}
