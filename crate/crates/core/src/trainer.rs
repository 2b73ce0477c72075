//! Gradient-descent training of the classifier on its steady-state readout.
//!
//! One parameter family (couplings, polar angles or azimuths) is trained at a
//! time against `C = ½(desired − actual)²`. Couplings and polar angles are read
//! out through ⟨σz⟩, azimuths through ⟨σy⟩.

use serde::Serialize;

use crate::analytic::{steady_sy, steady_sz};
use crate::error::{QdcError, Result};
use crate::model::{wrap_angle, BlochAngles, ClassifierConfig, PauliObservable, ReservoirSpec};

/// Default central-difference step for couplings.
pub const FD_STEP_COUPLING: f64 = 1e-7;
/// Default central-difference step for angles (radians).
pub const FD_STEP_ANGLE: f64 = 1e-5;
/// A run is declared diverged once its cost exceeds this multiple of the initial cost.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TrainableParam {
    CouplingG,
    Theta,
    Phi,
}

impl TrainableParam {
    pub fn observable(self) -> PauliObservable {
        match self {
            TrainableParam::CouplingG | TrainableParam::Theta => PauliObservable::Z,
            TrainableParam::Phi => PauliObservable::Y,
        }
    }

    pub fn fd_step(self) -> f64 {
        match self {
            TrainableParam::CouplingG => FD_STEP_COUPLING,
            TrainableParam::Theta | TrainableParam::Phi => FD_STEP_ANGLE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainableParam::CouplingG => "g",
            TrainableParam::Theta => "theta",
            TrainableParam::Phi => "phi",
        }
    }
}

impl std::str::FromStr for TrainableParam {
    type Err = QdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g" => Ok(TrainableParam::CouplingG),
            "theta" => Ok(TrainableParam::Theta),
            "phi" => Ok(TrainableParam::Phi),
            other => Err(QdcError::Config(format!(
                "unknown parameter family '{other}' (expected g, theta or phi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    /// Learning rate; zero is accepted and leaves the parameters untouched.
    pub eta: f64,
    pub max_episodes: usize,
    pub cost_tol: f64,
    pub desired: f64,
}

impl TrainSettings {
    pub fn new(eta: f64, desired: f64) -> Self {
        Self {
            eta,
            max_episodes: 10_000,
            cost_tol: 1e-10,
            desired,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(QdcError::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.eta
            )));
        }
        if self.max_episodes == 0 {
            return Err(QdcError::Config("max_episodes must be at least 1".into()));
        }
        if !(self.cost_tol.is_finite() && self.cost_tol > 0.0) {
            return Err(QdcError::Config(format!(
                "cost_tol must be positive, got {}",
                self.cost_tol
            )));
        }
        if !(-1.0..=1.0).contains(&self.desired) {
            return Err(QdcError::Config(format!(
                "desired expectation {} outside [-1, 1]",
                self.desired
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRecord {
    pub episode: usize,
    pub params: Vec<f64>,
    pub actual: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrainStatus {
    Converged,
    MaxEpisodes,
    Diverged,
}

impl TrainStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainStatus::Converged => "converged",
            TrainStatus::MaxEpisodes => "max_episodes",
            TrainStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrainEvent {
    /// An update drove coupling `index` below zero; it was clamped to zero.
    CouplingClamped { episode: usize, index: usize, attempted: f64 },
    /// Polar angle `index` left `[0, π]`.
    ThetaOutOfRange { episode: usize, index: usize, value: f64 },
    /// The run stopped early; the reason is given.
    Stopped { episode: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub param: TrainableParam,
    pub records: Vec<TrainRecord>,
    pub status: TrainStatus,
    pub events: Vec<TrainEvent>,
    /// Episodes whose cost exceeded the previous episode's cost.
    pub cost_increases: usize,
}

impl TrainOutcome {
    pub fn last(&self) -> &TrainRecord {
        self.records.last().expect("at least the initial record")
    }

    /// True when the cost trace went up at least once, i.e. an update jumped past the minimum.
    pub fn overshoot(&self) -> bool {
        self.cost_increases > 0
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost)
    }
}

/// `½(desired − actual)²`.
#[inline]
pub fn cost(desired: f64, actual: f64) -> f64 {
    let r = desired - actual;
    0.5 * r * r
}

fn two_reservoirs(reservoirs: &[ReservoirSpec]) -> Result<(ReservoirSpec, ReservoirSpec, f64)> {
    let [a, b] = reservoirs else {
        return Err(QdcError::Config(format!(
            "closed-form gradients need exactly 2 reservoirs, got {}",
            reservoirs.len()
        )));
    };
    let denom = a.g() * a.g() + b.g() * b.g();
    if denom <= 0.0 {
        return Err(QdcError::Undefined(
            "gradient undefined when both couplings are zero".into(),
        ));
    }
    Ok((*a, *b, denom))
}

/// `(∂C/∂g₁, ∂C/∂g₂)` for two reservoirs read out through ⟨σz⟩.
pub fn grad_g(reservoirs: &[ReservoirSpec], desired: f64) -> Result<[f64; 2]> {
    let (r1, r2, s) = two_reservoirs(reservoirs)?;
    let (g1, g2) = (r1.g(), r2.g());
    let (m1, m2) = (r1.bloch.theta().cos(), r2.bloch.theta().cos());
    let weighted = g1 * g1 * m1 + g2 * g2 * m2;
    let actual = steady_sz(reservoirs)?;
    let s2 = s * s;
    let da_dg1 = (2.0 * g1 * m1 * s - 2.0 * g1 * weighted) / s2;
    let da_dg2 = (2.0 * g2 * m2 * s - 2.0 * g2 * weighted) / s2;
    let residual = desired - actual;
    Ok([residual * -da_dg1, residual * -da_dg2])
}

/// `(∂C/∂θ₁, ∂C/∂θ₂)` for two reservoirs read out through ⟨σz⟩.
pub fn grad_theta(reservoirs: &[ReservoirSpec], desired: f64) -> Result<[f64; 2]> {
    let (r1, r2, s) = two_reservoirs(reservoirs)?;
    let (g1, g2) = (r1.g(), r2.g());
    let (t1, t2) = (r1.bloch.theta(), r2.bloch.theta());
    let actual = steady_sz(reservoirs)?;
    let da_dt1 = -g1 * g1 * t1.sin() / s;
    let da_dt2 = -g2 * g2 * t2.sin() / s;
    let residual = desired - actual;
    Ok([residual * -da_dt1, residual * -da_dt2])
}

/// `(∂C/∂φ₁, ∂C/∂φ₂)` for two reservoirs read out through ⟨σy⟩.
pub fn grad_phi(config: &ClassifierConfig, desired: f64) -> Result<[f64; 2]> {
    let (r1, r2, s) = two_reservoirs(config.reservoirs())?;
    let rt = config.r() * config.tau();
    let (g1, g2) = (r1.g(), r2.g());
    let (s1, c1) = (r1.bloch.theta().sin(), r1.bloch.theta().cos());
    let (s2, c2) = (r2.bloch.theta().sin(), r2.bloch.theta().cos());
    let (p1, p2) = (r1.bloch.phi(), r2.bloch.phi());
    let actual = steady_sy(config)?;
    let da_dp1 = rt * (g1.powi(3) * s1 * c1 * p1.sin() + g1 * g2 * g2 * s1 * c2 * p1.sin()) / s;
    let da_dp2 = rt * (g1 * g1 * g2 * c1 * s2 * p2.sin() + g2.powi(3) * s2 * c2 * p2.sin()) / s;
    let residual = desired - actual;
    Ok([residual * -da_dp1, residual * -da_dp2])
}

/// Central differences `(f(x + h·e_i) − f(x − h·e_i)) / 2h`.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Current values of the trained family, one per reservoir.
pub fn params_of(config: &ClassifierConfig, param: TrainableParam) -> Vec<f64> {
    config
        .reservoirs()
        .iter()
        .map(|r| match param {
            TrainableParam::CouplingG => r.g(),
            TrainableParam::Theta => r.bloch.theta(),
            TrainableParam::Phi => r.bloch.phi(),
        })
        .collect()
}

/// Copy of `config` with the trained family replaced by `values`.
///
/// Polar angles are taken as given, even outside `[0, π]`.
pub fn with_params(
    config: &ClassifierConfig,
    param: TrainableParam,
    values: &[f64],
) -> Result<ClassifierConfig> {
    if values.len() != config.reservoirs().len() {
        return Err(QdcError::Dimension(format!(
            "{} values for {} reservoirs",
            values.len(),
            config.reservoirs().len()
        )));
    }
    let reservoirs = config
        .reservoirs()
        .iter()
        .zip(values)
        .map(|(r, &v)| match param {
            TrainableParam::CouplingG => r.with_g(v),
            TrainableParam::Theta => {
                ReservoirSpec::new(BlochAngles::from_raw(v, r.bloch.phi())?, r.g())
            }
            TrainableParam::Phi => {
                ReservoirSpec::new(BlochAngles::from_raw(r.bloch.theta(), v)?, r.g())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    config.with_reservoirs(reservoirs)
}

/// Steady readout used as the "actual" value for a parameter family.
pub fn actual_value(config: &ClassifierConfig, param: TrainableParam) -> Result<f64> {
    match param.observable() {
        PauliObservable::Z => steady_sz(config.reservoirs()),
        PauliObservable::Y => steady_sy(config),
    }
}

/// Cost as a function of the trained family's values, others held at `config`.
///
/// Couplings are not clamped here, so the function is smooth through `g = 0`.
pub fn cost_at(
    config: &ClassifierConfig,
    param: TrainableParam,
    desired: f64,
    values: &[f64],
) -> Result<f64> {
    let probe = match param {
        // cost depends on g only through g², so evaluate at |g|
        TrainableParam::CouplingG => {
            let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
            with_params(config, param, &abs)?
        }
        _ => with_params(config, param, values)?,
    };
    Ok(cost(desired, actual_value(&probe, param)?))
}

/// Closed-form gradient for two reservoirs, central differences otherwise.
pub fn gradient(config: &ClassifierConfig, param: TrainableParam, desired: f64) -> Result<Vec<f64>> {
    if config.reservoirs().len() == 2 {
        let g = match param {
            TrainableParam::CouplingG => grad_g(config.reservoirs(), desired)?,
            TrainableParam::Theta => grad_theta(config.reservoirs(), desired)?,
            TrainableParam::Phi => grad_phi(config, desired)?,
        };
        return Ok(g.to_vec());
    }
    let x = params_of(config, param);
    let mut failure = None;
    let grad = finite_diff_grad(
        |v| match cost_at(config, param, desired, v) {
            Ok(c) => c,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &x,
        param.fd_step(),
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(grad),
    }
}

/// Gradient descent `ν ← ν − η ∂C/∂ν` on one parameter family.
///
/// Stops on `cost ≤ cost_tol` (converged), after `max_episodes` updates, or when
/// the run diverges (cost above ten times its initial value, non-finite values,
/// or an undefined steady state).
pub fn gd_train(
    config: &ClassifierConfig,
    param: TrainableParam,
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    settings.validate()?;
    let mut current = config.clone();
    let mut records: Vec<TrainRecord> = Vec::new();
    let mut events = Vec::new();
    let mut cost_increases = 0;
    let mut initial_cost = None;

    let status = 'train: {
        for episode in 0..=settings.max_episodes {
            let actual = match actual_value(&current, param) {
                Ok(a) => a,
                Err(e) => {
                    events.push(TrainEvent::Stopped {
                        episode,
                        reason: e.to_string(),
                    });
                    break 'train TrainStatus::Diverged;
                }
            };
            let c = cost(settings.desired, actual);
            if let Some(prev) = records.last() {
                if c > prev.cost {
                    cost_increases += 1;
                }
            }
            records.push(TrainRecord {
                episode,
                params: params_of(&current, param),
                actual,
                cost: c,
            });
            let c0 = *initial_cost.get_or_insert(c);
            if !c.is_finite() {
                break 'train TrainStatus::Diverged;
            }
            if c <= settings.cost_tol {
                break 'train TrainStatus::Converged;
            }
            if c > DIVERGENCE_FACTOR * c0 {
                events.push(TrainEvent::Stopped {
                    episode,
                    reason: format!("cost {c:e} exceeds {DIVERGENCE_FACTOR}x initial cost {c0:e}"),
                });
                break 'train TrainStatus::Diverged;
            }
            if episode == settings.max_episodes {
                break 'train TrainStatus::MaxEpisodes;
            }

            let grad = gradient(&current, param, settings.desired)?;
            let mut next: Vec<f64> = params_of(&current, param)
                .iter()
                .zip(&grad)
                .map(|(v, d)| v - settings.eta * d)
                .collect();
            if next.iter().any(|v| !v.is_finite()) {
                events.push(TrainEvent::Stopped {
                    episode,
                    reason: "parameter update is not finite".into(),
                });
                break 'train TrainStatus::Diverged;
            }
            match param {
                TrainableParam::CouplingG => {
                    for (index, v) in next.iter_mut().enumerate() {
                        if *v < 0.0 {
                            events.push(TrainEvent::CouplingClamped {
                                episode: episode + 1,
                                index,
                                attempted: *v,
                            });
                            *v = 0.0;
                        }
                    }
                }
                TrainableParam::Theta => {
                    let before = params_of(&current, param);
                    for (index, (&v, &old)) in next.iter().zip(&before).enumerate() {
                        let inside = |t: f64| (0.0..=std::f64::consts::PI).contains(&t);
                        if !inside(v) && inside(old) {
                            log::warn!("theta_{} left [0, π] at episode {}", index + 1, episode + 1);
                            events.push(TrainEvent::ThetaOutOfRange {
                                episode: episode + 1,
                                index,
                                value: v,
                            });
                        }
                    }
                }
                TrainableParam::Phi => next.iter_mut().for_each(|v| *v = wrap_angle(*v)),
            }
            current = with_params(&current, param, &next)?;
        }
        unreachable!("loop always breaks at max_episodes")
    };

    Ok(TrainOutcome {
        param,
        records,
        status,
        events,
        cost_increases,
    })
}
