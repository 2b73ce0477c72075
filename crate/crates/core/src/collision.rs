//! Repeated-interaction (collision model) evolution of the target qubit.
//!
//! Each round the target meets one fresh unit from every reservoir under the
//! exchange Hamiltonian `H = Σ_i g_i (σ₀⁺σ_i⁻ + σ₀⁻σ_i⁺)` for a time `τ`; the
//! units are then traced out. All qubits are resonant, so the evolution is
//! carried out in the interaction picture with `H` alone.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis;
use crate::error::{QdcError, Result};
use crate::linalg::{
    self, herm_expm, kron_all, kron_into, matmul_adjoint_into, matmul_into, partial_trace_into,
    trace_distance_2x2, ComplexMatrix, DensityMatrix,
};
use crate::model::{bloch_matrix, reservoir_expectations, ClassifierConfig, ReservoirSpec};

/// Largest joint Hilbert-space dimension the simulator will build by default (12 qubits).
pub const DEFAULT_MAX_DIM: usize = 1 << 12;

/// How reservoirs are coupled in each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CollisionMode {
    /// One unit from every reservoir, all coupled at once.
    Joint,
    /// A single reservoir per round, drawn with probability `g_i² / Σ g_j²`.
    Mixture,
}

/// Phase relation between the reservoir units and the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReservoirPhase {
    /// Every unit arrives with the same phase `φ` relative to the target frame.
    Locked,
    /// Every unit arrives with a uniformly random phase; the round map is the
    /// phase average, i.e. units act through their populations only.
    Averaged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSettings {
    pub max_collisions: usize,
    /// Bound on the trace distance between the last state and the fixed point.
    pub steady_tol: f64,
    pub record_stride: usize,
    pub max_dim: usize,
    pub mode: CollisionMode,
    pub phase: ReservoirPhase,
    /// Only used by [`CollisionMode::Mixture`].
    pub seed: u64,
}

impl Default for CollisionSettings {
    fn default() -> Self {
        Self {
            max_collisions: 200_000,
            steady_tol: 1e-9,
            record_stride: 100,
            max_dim: DEFAULT_MAX_DIM,
            mode: CollisionMode::Joint,
            phase: ReservoirPhase::Locked,
            seed: 0,
        }
    }
}

impl CollisionSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_collisions == 0 {
            return Err(QdcError::Config("max_collisions must be at least 1".into()));
        }
        if !(self.steady_tol.is_finite() && self.steady_tol > 0.0) {
            return Err(QdcError::Config(format!(
                "steady_tol must be positive, got {}",
                self.steady_tol
            )));
        }
        if self.record_stride == 0 {
            return Err(QdcError::Config("record_stride must be at least 1".into()));
        }
        if self.max_dim < 4 {
            return Err(QdcError::Config(format!(
                "max_dim {} cannot hold a target and one reservoir unit",
                self.max_dim
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub collision: usize,
    pub sz: f64,
    pub sy: f64,
    pub trace_distance_step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyRun {
    pub steady: DensityMatrix,
    pub collisions_used: usize,
    pub converged: bool,
    pub trajectory: Trajectory,
}

impl SteadyRun {
    pub fn sz(&self) -> f64 {
        sz_of(self.steady.matrix())
    }

    pub fn sy(&self) -> f64 {
        sy_of(self.steady.matrix())
    }
}

#[inline]
fn sz_of(m: &ComplexMatrix) -> f64 {
    m.get(0, 0).re - m.get(1, 1).re
}

#[inline]
fn sy_of(m: &ComplexMatrix) -> f64 {
    // Tr(ρσy) = −2 Im ρ_eg
    -2.0 * m.get(0, 1).im
}

fn qubit_count_dim(qubits: usize, max_dim: usize) -> Result<usize> {
    if qubits >= usize::BITS as usize - 1 || (1usize << qubits) > max_dim {
        return Err(QdcError::Config(format!(
            "{qubits} qubits exceed the simulator dimension cap {max_dim}"
        )));
    }
    Ok(1usize << qubits)
}

/// Interaction Hamiltonian on `target ⊗ unit_1 ⊗ … ⊗ unit_N`, with the default dimension cap.
pub fn build_hamiltonian(config: &ClassifierConfig) -> Result<ComplexMatrix> {
    build_hamiltonian_capped(config, DEFAULT_MAX_DIM)
}

pub fn build_hamiltonian_capped(config: &ClassifierConfig, max_dim: usize) -> Result<ComplexMatrix> {
    let couplings = config.couplings();
    let dim = qubit_count_dim(couplings.len() + 1, max_dim)?;
    exchange_hamiltonian(&couplings, dim)
}

fn exchange_hamiltonian(couplings: &[f64], dim: usize) -> Result<ComplexMatrix> {
    let sites = couplings.len() + 1;
    let (id, sp, sm) = (basis::identity(), basis::sigma_plus(), basis::sigma_minus());
    let mut h = ComplexMatrix::zeros(dim, dim);
    for (i, &g) in couplings.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let mut factors = vec![&id; sites];
        factors[0] = &sp;
        factors[i + 1] = &sm;
        let raise = kron_all(factors.iter().copied());
        let exchange = raise.add(&raise.adjoint())?;
        h = h.add(&exchange.scale(Complex64::new(g, 0.0)))?;
    }
    Ok(h)
}

fn unit_state(reservoir: &ReservoirSpec, phase: ReservoirPhase) -> ComplexMatrix {
    match phase {
        ReservoirPhase::Locked => bloch_matrix(reservoir.bloch),
        ReservoirPhase::Averaged => {
            let sz = reservoir_expectations(reservoir.bloch).sz;
            ComplexMatrix::from_diagonal(&[
                Complex64::new(0.5 * (1.0 + sz), 0.0),
                Complex64::new(0.5 * (1.0 - sz), 0.0),
            ])
        }
    }
}

/// One collision: `Tr_units[u · (target ⊗ ρ_1 ⊗ … ⊗ ρ_N) · u†]` with locked-phase units.
pub fn collision_step(
    target: &DensityMatrix,
    config: &ClassifierConfig,
    u: &ComplexMatrix,
) -> Result<DensityMatrix> {
    if target.dim() != 2 {
        return Err(QdcError::Dimension(format!(
            "target must be a qubit, got dimension {}",
            target.dim()
        )));
    }
    let units: Vec<ComplexMatrix> = config
        .reservoirs()
        .iter()
        .map(|r| unit_state(r, ReservoirPhase::Locked))
        .collect();
    let ancillas = kron_all(&units);
    if !u.is_square() || u.rows() != 2 * ancillas.rows() {
        return Err(QdcError::Dimension(format!(
            "propagator is {}x{}, joint state is {}x{}",
            u.rows(),
            u.cols(),
            2 * ancillas.rows(),
            2 * ancillas.rows()
        )));
    }
    let mut ws = Workspace::new(u.rows());
    let out = apply_unitary(u, &ancillas, target.matrix(), &mut ws);
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

struct Workspace {
    joint: ComplexMatrix,
    left: ComplexMatrix,
    evolved: ComplexMatrix,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            joint: ComplexMatrix::zeros(dim, dim),
            left: ComplexMatrix::zeros(dim, dim),
            evolved: ComplexMatrix::zeros(dim, dim),
        }
    }
}

fn apply_unitary(
    u: &ComplexMatrix,
    ancillas: &ComplexMatrix,
    target: &ComplexMatrix,
    ws: &mut Workspace,
) -> ComplexMatrix {
    kron_into(target, ancillas, &mut ws.joint);
    matmul_into(u, &ws.joint, &mut ws.left);
    matmul_adjoint_into(&ws.left, u, &mut ws.evolved);
    let mut out = ComplexMatrix::zeros(2, 2);
    partial_trace_into(&ws.evolved, &[2, ancillas.rows()], 0, &mut out);
    out
}

/// A single round map: a fixed unitary acting with a fixed product of units.
struct Interaction {
    unitary: ComplexMatrix,
    ancillas: ComplexMatrix,
}

/// The precomputed per-round map of a configuration.
pub struct CollisionChannel {
    interactions: Vec<Interaction>,
    /// Selection probabilities; a single entry of 1 for the joint mode.
    probabilities: Vec<f64>,
    sampler: Option<WeightedIndex<f64>>,
}

impl CollisionChannel {
    pub fn new(config: &ClassifierConfig, settings: &CollisionSettings) -> Result<Self> {
        settings.validate()?;
        let reservoirs = config.reservoirs();
        match settings.mode {
            CollisionMode::Joint => {
                let h = build_hamiltonian_capped(config, settings.max_dim)?;
                let unitary = herm_expm(&h, config.tau())?;
                let units: Vec<_> = reservoirs
                    .iter()
                    .map(|r| unit_state(r, settings.phase))
                    .collect();
                Ok(Self {
                    interactions: vec![Interaction {
                        unitary,
                        ancillas: kron_all(&units),
                    }],
                    probabilities: vec![1.0],
                    sampler: None,
                })
            }
            CollisionMode::Mixture => {
                let weights: Vec<f64> = reservoirs.iter().map(|r| r.g() * r.g()).collect();
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Err(QdcError::Undefined(
                        "mixture mode needs at least one non-zero coupling".into(),
                    ));
                }
                let interactions = reservoirs
                    .iter()
                    .map(|r| {
                        let h = exchange_hamiltonian(&[r.g()], 4)?;
                        Ok(Interaction {
                            unitary: herm_expm(&h, config.tau())?,
                            ancillas: unit_state(r, settings.phase),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sampler = WeightedIndex::new(&weights)
                    .map_err(|e| QdcError::Config(format!("reservoir weights: {e}")))?;
                Ok(Self {
                    interactions,
                    probabilities: weights.iter().map(|w| w / total).collect(),
                    sampler: Some(sampler),
                })
            }
        }
    }

    fn workspace(&self) -> Workspace {
        Workspace::new(self.interactions[0].unitary.rows())
    }

    /// Ensemble-averaged round map, linear in `x` (needs not be a state).
    fn apply_mean(&self, x: &ComplexMatrix, ws: &mut Vec<Workspace>) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(2, 2);
        for ((inter, &p), w) in self.interactions.iter().zip(&self.probabilities).zip(ws) {
            let y = apply_unitary(&inter.unitary, &inter.ancillas, x, w);
            out = out
                .add(&y.scale(Complex64::new(p, 0.0)))
                .expect("2x2 operands");
        }
        out
    }

    fn workspaces(&self) -> Vec<Workspace> {
        self.interactions
            .iter()
            .map(|i| Workspace::new(i.unitary.rows()))
            .collect()
    }

    /// Bloch-vector form `r ↦ M r + c` of the averaged round map.
    fn affine_form(&self) -> (Matrix3<f64>, Vector3<f64>) {
        let paulis = [basis::sigma_x(), basis::sigma_y(), basis::sigma_z()];
        let mut ws = self.workspaces();
        let bloch = |m: &ComplexMatrix| -> Vector3<f64> {
            Vector3::from_iterator(paulis.iter().map(|p| {
                let mut tr = Complex64::new(0.0, 0.0);
                for i in 0..2 {
                    for j in 0..2 {
                        tr += m.get(i, j) * p.get(j, i);
                    }
                }
                tr.re
            }))
        };
        let image_of_half_identity = self.apply_mean(
            &ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0)),
            &mut ws,
        );
        let offset = bloch(&image_of_half_identity);
        let mut linear = Matrix3::zeros();
        for (k, p) in paulis.iter().enumerate() {
            let image = self.apply_mean(&p.scale(Complex64::new(0.5, 0.0)), &mut ws);
            linear.set_column(k, &bloch(&image));
        }
        (linear, offset)
    }

    /// `‖(I − M)⁻¹‖₂`: converts a one-round step size into a bound on the distance to the fixed point.
    /// Infinite when the averaged map has no unique fixed point.
    pub fn fixed_point_gain(&self) -> f64 {
        let (m, _) = self.affine_form();
        match (Matrix3::identity() - m).try_inverse() {
            Some(inv) => inv.singular_values().max(),
            None => f64::INFINITY,
        }
    }

    /// Exact fixed point of the averaged round map, from a 3×3 linear solve.
    pub fn fixed_point(&self) -> Result<DensityMatrix> {
        let (m, c) = self.affine_form();
        let r = (Matrix3::identity() - m)
            .lu()
            .solve(&c)
            .ok_or_else(|| QdcError::Undefined("round map has no unique fixed point".into()))?;
        let half = 0.5;
        let rho = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(half * (1.0 + r[2]), 0.0),
                Complex64::new(half * r[0], -half * r[1]),
                Complex64::new(half * r[0], half * r[1]),
                Complex64::new(half * (1.0 - r[2]), 0.0),
            ],
        )?;
        DensityMatrix::new(rho)
    }
}

/// Repeats collisions until the state is within `steady_tol` (trace distance) of the
/// fixed point, or `max_collisions` is reached.
///
/// Convergence is certified with the bound `D(ρ_n, ρ*) ≤ ‖(I−M)⁻¹‖ · D(ρ_{n+1}, ρ_n)`,
/// where `M` is the linear part of the round map on Bloch vectors.
pub fn evolve_to_steady(config: &ClassifierConfig, settings: &CollisionSettings) -> Result<SteadyRun> {
    let channel = CollisionChannel::new(config, settings)?;
    let gain = channel.fixed_point_gain().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut ws = channel.workspace();

    let mut state = config.target_init().matrix().clone();
    let mut samples = vec![TrajectorySample {
        collision: 0,
        sz: sz_of(&state),
        sy: sy_of(&state),
        trace_distance_step: 0.0,
    }];
    let mut converged = false;
    let mut used = 0;
    for n in 1..=settings.max_collisions {
        let inter = match &channel.sampler {
            Some(sampler) => &channel.interactions[sampler.sample(&mut rng)],
            None => &channel.interactions[0],
        };
        let next = apply_unitary(&inter.unitary, &inter.ancillas, &state, &mut ws);
        let step = trace_distance_2x2(&next, &state);
        debug_assert!(
            DensityMatrix::new(next.clone()).is_ok(),
            "collision {n} left the state space"
        );
        state = next;
        used = n;
        let done = step == 0.0 || gain * step < settings.steady_tol;
        if n % settings.record_stride == 0 || done || n == settings.max_collisions {
            samples.push(TrajectorySample {
                collision: n,
                sz: sz_of(&state),
                sy: sy_of(&state),
                trace_distance_step: step,
            });
        }
        if done {
            converged = true;
            break;
        }
    }
    Ok(SteadyRun {
        steady: DensityMatrix::from_matrix_unchecked(state),
        collisions_used: used,
        converged,
        trajectory: Trajectory { samples },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta_g_fraction: f64,
    pub steady_sz: f64,
    pub collisions_used: usize,
    pub converged: bool,
}

/// Steady ⟨σz⟩ for two reservoirs with couplings `g/2 − Δ·g` and `g/2 + Δ·g`, one point per `Δ`.
/// Points are evaluated in parallel and returned in grid order.
pub fn magnetization_sweep(
    g_total: f64,
    delta_grid: &[f64],
    base_config: &ClassifierConfig,
    settings: &CollisionSettings,
) -> Result<Vec<SweepPoint>> {
    if base_config.reservoirs().len() != 2 {
        return Err(QdcError::Config(format!(
            "coupling sweep needs exactly 2 reservoirs, got {}",
            base_config.reservoirs().len()
        )));
    }
    if !(g_total.is_finite() && g_total > 0.0) {
        return Err(QdcError::Config(format!(
            "total coupling must be positive, got {g_total}"
        )));
    }
    if let Some(bad) = delta_grid
        .iter()
        .find(|d| !d.is_finite() || d.abs() > 0.5)
    {
        return Err(QdcError::Config(format!(
            "coupling offset fraction {bad} outside [-0.5, 0.5]"
        )));
    }
    settings.validate()?;
    delta_grid
        .par_iter()
        .map(|&delta| {
            let g1 = (0.5 * g_total - delta * g_total).max(0.0);
            let g2 = (0.5 * g_total + delta * g_total).max(0.0);
            let cfg = base_config.with_couplings(&[g1, g2])?;
            let run = evolve_to_steady(&cfg, settings)?;
            Ok(SweepPoint {
                delta_g_fraction: delta,
                steady_sz: run.sz(),
                collisions_used: run.collisions_used,
                converged: run.converged,
            })
        })
        .collect()
}

/// Evenly spaced grid of `points` values over `[lo, hi]`, endpoints exact.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|k| {
                if k == points - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

/// Simulated trace distance between two runs' steady states.
pub fn steady_distance(a: &SteadyRun, b: &SteadyRun) -> f64 {
    linalg::trace_distance(&a.steady, &b.steady).unwrap_or(f64::INFINITY)
}
