//! Flat `key = value` experiment files.
//!
//! One assignment per line, `#` starts a comment. Reservoirs are numbered blocks
//! (`reservoir.1.theta`, `reservoir.2.g`, ...) and must be contiguous from 1.
//! Angles are in degrees here and converted to radians when the typed configs are built.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::collision::{CollisionMode, CollisionSettings, ReservoirPhase};
use crate::model::{bloch_density, BlochAngles, ClassifierConfig, ReservoirSpec};
use crate::trainer::{TrainSettings, TrainableParam};
use crate::{QdcError, Result};

pub const DEFAULT_TAU: f64 = 3.0;
pub const DEFAULT_R: f64 = 0.36;
pub const DEFAULT_FIG1_G: f64 = 0.01;
pub const DEFAULT_FIG1_POINTS: usize = 21;
/// Surfaces above this many grid points are refused.
pub const MAX_SURFACE_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReservoirEntry {
    pub theta_deg: Option<f64>,
    /// Alternative to `theta_deg`: the reservoir's `⟨σz⟩`, i.e. `cos θ`.
    pub sz: Option<f64>,
    pub phi_deg: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(QdcError::Config(format!("{name}: need at least 2 steps, got {}", self.steps)));
        }
        if !(self.min < self.max) {
            return Err(QdcError::Config(format!(
                "{name}: min {} must be below max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        crate::collision::linear_grid(self.min, self.max, self.steps)
    }
}

/// Cost-surface grid over one parameter family of a two-reservoir classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub param: TrainableParam,
    pub axis1: AxisRange,
    pub axis2: AxisRange,
}

impl SurfaceGrid {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate("surface.axis1")?;
        self.axis2.validate("surface.axis2")?;
        match self.axis1.steps.checked_mul(self.axis2.steps) {
            Some(n) if n <= MAX_SURFACE_POINTS => Ok(()),
            _ => Err(QdcError::Config(format!(
                "surface grid {}x{} exceeds {MAX_SURFACE_POINTS} points",
                self.axis1.steps, self.axis2.steps
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub tau: Option<f64>,
    pub r: Option<f64>,
    pub target_theta_deg: Option<f64>,
    pub target_phi_deg: Option<f64>,
    pub seed: Option<u64>,
    pub reservoirs: Vec<ReservoirEntry>,

    pub max_collisions: Option<usize>,
    pub steady_tol: Option<f64>,
    pub record_stride: Option<usize>,
    pub max_dim: Option<usize>,
    pub mode: Option<CollisionMode>,
    pub phase: Option<ReservoirPhase>,

    pub train_param: Option<TrainableParam>,
    pub eta: Option<Vec<f64>>,
    pub desired: Option<f64>,
    pub max_episodes: Option<usize>,
    pub cost_tol: Option<f64>,

    pub fig1_g: Option<f64>,
    pub fig1_points: Option<usize>,

    pub surface_param: Option<TrainableParam>,
    pub surface_axis1: Option<AxisRange>,
    pub surface_axis2: Option<AxisRange>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| QdcError::Config(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(QdcError::Config(format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| QdcError::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(QdcError::Config(format!("{key}: empty entry in list '{v}'")));
    }
    items.into_iter().map(|s| parse_f64(key, s)).collect()
}

fn parse_axis(key: &str, v: &str) -> Result<AxisRange> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(QdcError::Config(format!("{key}: expected 'min, max, steps', got '{v}'")));
    };
    Ok(AxisRange {
        min: parse_f64(key, lo)?,
        max: parse_f64(key, hi)?,
        steps: parse_usize(key, steps)?,
    })
}

fn parse_mode(key: &str, v: &str) -> Result<CollisionMode> {
    match v {
        "joint" => Ok(CollisionMode::Joint),
        "mixture" => Ok(CollisionMode::Mixture),
        _ => Err(QdcError::Config(format!("{key}: expected joint or mixture, got '{v}'"))),
    }
}

fn parse_phase(key: &str, v: &str) -> Result<ReservoirPhase> {
    match v {
        "locked" => Ok(ReservoirPhase::Locked),
        "averaged" => Ok(ReservoirPhase::Averaged),
        _ => Err(QdcError::Config(format!("{key}: expected locked or averaged, got '{v}'"))),
    }
}

pub(crate) fn mode_name(m: CollisionMode) -> &'static str {
    match m {
        CollisionMode::Joint => "joint",
        CollisionMode::Mixture => "mixture",
    }
}

pub(crate) fn phase_name(p: ReservoirPhase) -> &'static str {
    match p {
        ReservoirPhase::Locked => "locked",
        ReservoirPhase::Averaged => "averaged",
    }
}

fn set<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<()> {
    if slot.is_some() {
        return Err(QdcError::Config(format!("duplicate key '{key}'")));
    }
    *slot = Some(value);
    Ok(())
}

impl FromStr for ExperimentConfig {
    type Err = QdcError;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut reservoirs: BTreeMap<usize, ReservoirEntry> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: QdcError| match e {
                QdcError::Config(m) => QdcError::Config(format!("line {}: {m}", lineno + 1)),
                other => other,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(at(QdcError::Config(format!("expected 'key = value', got '{line}'"))));
            };
            cfg.assign(key.trim(), value.trim(), &mut reservoirs).map_err(at)?;
        }
        for (expected, (&n, entry)) in (1..).zip(&reservoirs) {
            if n != expected {
                return Err(QdcError::Config(format!(
                    "reservoir blocks must be numbered 1..N without gaps; missing reservoir.{expected}"
                )));
            }
            if entry.theta_deg.is_some() && entry.sz.is_some() {
                return Err(QdcError::Config(format!(
                    "reservoir.{n}: give either theta or sz, not both"
                )));
            }
        }
        cfg.reservoirs = reservoirs.into_values().collect();
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    fn assign(
        &mut self,
        key: &str,
        v: &str,
        reservoirs: &mut BTreeMap<usize, ReservoirEntry>,
    ) -> Result<()> {
        if let Some(rest) = key.strip_prefix("reservoir.") {
            let Some((idx, field)) = rest.split_once('.') else {
                return Err(QdcError::Config(format!("unknown key '{key}'")));
            };
            let n: usize = idx
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| QdcError::Config(format!("{key}: reservoir index must be 1 or more")))?;
            let entry = reservoirs.entry(n).or_default();
            return match field {
                "theta" => set(&mut entry.theta_deg, key, parse_f64(key, v)?),
                "sz" => set(&mut entry.sz, key, parse_f64(key, v)?),
                "phi" => set(&mut entry.phi_deg, key, parse_f64(key, v)?),
                "g" => set(&mut entry.g, key, parse_f64(key, v)?),
                _ => Err(QdcError::Config(format!("unknown key '{key}'"))),
            };
        }
        match key {
            "tau" => set(&mut self.tau, key, parse_f64(key, v)?),
            "r" => set(&mut self.r, key, parse_f64(key, v)?),
            "target.theta" => set(&mut self.target_theta_deg, key, parse_f64(key, v)?),
            "target.phi" => set(&mut self.target_phi_deg, key, parse_f64(key, v)?),
            "seed" => set(
                &mut self.seed,
                key,
                v.parse()
                    .map_err(|_| QdcError::Config(format!("{key}: '{v}' is not a u64")))?,
            ),
            "collision.max_collisions" => set(&mut self.max_collisions, key, parse_usize(key, v)?),
            "collision.steady_tol" => set(&mut self.steady_tol, key, parse_f64(key, v)?),
            "collision.record_stride" => set(&mut self.record_stride, key, parse_usize(key, v)?),
            "collision.max_dim" => set(&mut self.max_dim, key, parse_usize(key, v)?),
            "collision.mode" => set(&mut self.mode, key, parse_mode(key, v)?),
            "collision.phase" => set(&mut self.phase, key, parse_phase(key, v)?),
            "train.param" => set(&mut self.train_param, key, v.parse()?),
            "train.eta" => set(&mut self.eta, key, parse_list(key, v)?),
            "train.desired" => set(&mut self.desired, key, parse_f64(key, v)?),
            "train.max_episodes" => set(&mut self.max_episodes, key, parse_usize(key, v)?),
            "train.cost_tol" => set(&mut self.cost_tol, key, parse_f64(key, v)?),
            "fig1.g" => set(&mut self.fig1_g, key, parse_f64(key, v)?),
            "fig1.points" => set(&mut self.fig1_points, key, parse_usize(key, v)?),
            "surface.param" => set(&mut self.surface_param, key, v.parse()?),
            "surface.axis1" => set(&mut self.surface_axis1, key, parse_axis(key, v)?),
            "surface.axis2" => set(&mut self.surface_axis2, key, parse_axis(key, v)?),
            _ => Err(QdcError::Config(format!("unknown key '{key}'"))),
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        let num = |x: f64| format!("{x:?}");
        if let Some(x) = self.tau {
            put("tau", num(x));
        }
        if let Some(x) = self.r {
            put("r", num(x));
        }
        if let Some(x) = self.target_theta_deg {
            put("target.theta", num(x));
        }
        if let Some(x) = self.target_phi_deg {
            put("target.phi", num(x));
        }
        if let Some(s) = self.seed {
            put("seed", s.to_string());
        }
        for (i, e) in self.reservoirs.iter().enumerate() {
            let n = i + 1;
            if let Some(x) = e.theta_deg {
                put(&format!("reservoir.{n}.theta"), num(x));
            }
            if let Some(x) = e.sz {
                put(&format!("reservoir.{n}.sz"), num(x));
            }
            if let Some(x) = e.phi_deg {
                put(&format!("reservoir.{n}.phi"), num(x));
            }
            if let Some(x) = e.g {
                put(&format!("reservoir.{n}.g"), num(x));
            }
        }
        if let Some(x) = self.max_collisions {
            put("collision.max_collisions", x.to_string());
        }
        if let Some(x) = self.steady_tol {
            put("collision.steady_tol", num(x));
        }
        if let Some(x) = self.record_stride {
            put("collision.record_stride", x.to_string());
        }
        if let Some(x) = self.max_dim {
            put("collision.max_dim", x.to_string());
        }
        if let Some(m) = self.mode {
            put("collision.mode", mode_name(m).into());
        }
        if let Some(p) = self.phase {
            put("collision.phase", phase_name(p).into());
        }
        if let Some(p) = self.train_param {
            put("train.param", p.name().into());
        }
        if let Some(list) = &self.eta {
            put("train.eta", list.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "));
        }
        if let Some(x) = self.desired {
            put("train.desired", num(x));
        }
        if let Some(x) = self.max_episodes {
            put("train.max_episodes", x.to_string());
        }
        if let Some(x) = self.cost_tol {
            put("train.cost_tol", num(x));
        }
        if let Some(x) = self.fig1_g {
            put("fig1.g", num(x));
        }
        if let Some(x) = self.fig1_points {
            put("fig1.points", x.to_string());
        }
        if let Some(p) = self.surface_param {
            put("surface.param", p.name().into());
        }
        let axis = |a: AxisRange| format!("{}, {}, {}", num(a.min), num(a.max), a.steps);
        if let Some(a) = self.surface_axis1 {
            put("surface.axis1", axis(a));
        }
        if let Some(a) = self.surface_axis2 {
            put("surface.axis2", axis(a));
        }
        out
    }

    fn reservoir_specs(&self) -> Result<Vec<ReservoirSpec>> {
        if self.reservoirs.is_empty() {
            return Err(QdcError::Config("no reservoir blocks (reservoir.1.*) given".into()));
        }
        self.reservoirs
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let n = i + 1;
                let theta = match (e.theta_deg, e.sz) {
                    (Some(t), None) => t.to_radians(),
                    (None, Some(sz)) if (-1.0..=1.0).contains(&sz) => sz.acos(),
                    (None, Some(sz)) => {
                        return Err(QdcError::Config(format!(
                            "reservoir.{n}.sz = {sz} outside [-1, 1]"
                        )))
                    }
                    (None, None) => {
                        return Err(QdcError::Config(format!("reservoir.{n}: theta or sz required")))
                    }
                    (Some(_), Some(_)) => {
                        return Err(QdcError::Config(format!(
                            "reservoir.{n}: give either theta or sz, not both"
                        )))
                    }
                };
                let g = e
                    .g
                    .ok_or_else(|| QdcError::Config(format!("reservoir.{n}.g required")))?;
                let phi = e.phi_deg.unwrap_or(0.0).to_radians();
                let bloch = BlochAngles::new(theta, phi)
                    .map_err(|err| QdcError::Config(format!("reservoir.{n}: {err}")))?;
                ReservoirSpec::new(bloch, g)
                    .map_err(|err| QdcError::Config(format!("reservoir.{n}: {err}")))
            })
            .collect()
    }

    /// Classifier with the configured reservoirs; target defaults to |+⟩.
    pub fn classifier(&self) -> Result<ClassifierConfig> {
        self.classifier_with(self.reservoir_specs()?)
    }

    fn classifier_with(&self, reservoirs: Vec<ReservoirSpec>) -> Result<ClassifierConfig> {
        let target = BlochAngles::new(
            self.target_theta_deg.unwrap_or(90.0).to_radians(),
            self.target_phi_deg.unwrap_or(0.0).to_radians(),
        )
        .map_err(|e| QdcError::Config(format!("target: {e}")))?;
        ClassifierConfig::new(
            reservoirs,
            self.tau.unwrap_or(DEFAULT_TAU),
            self.r.unwrap_or(DEFAULT_R),
            bloch_density(target),
        )
    }

    /// Two-reservoir classifier for the coupling sweep. Without reservoir blocks the
    /// reservoirs sit at the poles, `|e⟩` first.
    pub fn sweep_classifier(&self) -> Result<ClassifierConfig> {
        let g_half = 0.5 * self.fig1_total_coupling();
        let reservoirs = if self.reservoirs.is_empty() {
            vec![
                ReservoirSpec::new(BlochAngles::new(0.0, 0.0)?, g_half)?,
                ReservoirSpec::new(BlochAngles::new(std::f64::consts::PI, 0.0)?, g_half)?,
            ]
        } else {
            let mut specs = Vec::with_capacity(self.reservoirs.len());
            for (i, e) in self.reservoirs.iter().enumerate() {
                let mut e = e.clone();
                e.g.get_or_insert(g_half);
                let one = ExperimentConfig {
                    reservoirs: vec![e],
                    ..Default::default()
                };
                let spec = one.reservoir_specs().map_err(|err| match err {
                    QdcError::Config(m) => {
                        QdcError::Config(m.replace("reservoir.1", &format!("reservoir.{}", i + 1)))
                    }
                    other => other,
                })?;
                specs.extend(spec);
            }
            specs
        };
        if reservoirs.len() != 2 {
            return Err(QdcError::Config(format!(
                "fig1 needs exactly 2 reservoirs, got {}",
                reservoirs.len()
            )));
        }
        self.classifier_with(reservoirs)
    }

    pub fn fig1_total_coupling(&self) -> f64 {
        self.fig1_g.unwrap_or(DEFAULT_FIG1_G)
    }

    pub fn fig1_points(&self) -> usize {
        self.fig1_points.unwrap_or(DEFAULT_FIG1_POINTS)
    }

    pub fn collision_settings(&self, seed: Option<u64>) -> Result<CollisionSettings> {
        let d = CollisionSettings::default();
        let s = CollisionSettings {
            max_collisions: self.max_collisions.unwrap_or(d.max_collisions),
            steady_tol: self.steady_tol.unwrap_or(d.steady_tol),
            record_stride: self.record_stride.unwrap_or(d.record_stride),
            max_dim: self.max_dim.unwrap_or(d.max_dim),
            mode: self.mode.unwrap_or(d.mode),
            phase: self.phase.unwrap_or(d.phase),
            seed: seed.or(self.seed).unwrap_or(d.seed),
        };
        s.validate()?;
        Ok(s)
    }

    /// Learning rates, command-line list first.
    pub fn etas(&self, overridden: Option<&[f64]>) -> Result<Vec<f64>> {
        let list = match overridden {
            Some(l) => l.to_vec(),
            None => self.eta.clone().ok_or_else(|| {
                QdcError::Config("no learning rate: set train.eta or pass --eta".into())
            })?,
        };
        if list.is_empty() {
            return Err(QdcError::Config("empty learning-rate list".into()));
        }
        Ok(list)
    }

    pub fn train_settings(&self, eta: f64) -> Result<TrainSettings> {
        let desired = self
            .desired
            .ok_or_else(|| QdcError::Config("train.desired required".into()))?;
        let mut s = TrainSettings::new(eta, desired);
        if let Some(m) = self.max_episodes {
            s.max_episodes = m;
        }
        if let Some(t) = self.cost_tol {
            s.cost_tol = t;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn train_param(&self, overridden: Option<TrainableParam>) -> Result<TrainableParam> {
        overridden
            .or(self.train_param)
            .ok_or_else(|| QdcError::Config("no parameter family: set train.param or pass --param".into()))
    }

    pub fn surface_grid(&self, overridden: Option<TrainableParam>) -> Result<SurfaceGrid> {
        let param = overridden
            .or(self.surface_param)
            .or(self.train_param)
            .ok_or_else(|| {
                QdcError::Config("no parameter family: set surface.param or pass --param".into())
            })?;
        let axis1 = self
            .surface_axis1
            .ok_or_else(|| QdcError::Config("surface.axis1 required".into()))?;
        let axis2 = self
            .surface_axis2
            .ok_or_else(|| QdcError::Config("surface.axis2 required".into()))?;
        let grid = SurfaceGrid { param, axis1, axis2 };
        grid.validate()?;
        Ok(grid)
    }
}
