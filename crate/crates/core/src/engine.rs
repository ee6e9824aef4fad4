//! The weighted progressive-iterative fairing loop.
//!
//! Every iteration moves each active control point by
//!
//! ```text
//! P_i[k+1] = P_i[k] + mu_i * ((1 - w_i) * (P_i - P_i[k]) - w_i * eta_i[k])
//! eta_i[k] = Σ_l d_il P_l[k]
//! ```
//!
//! where `P_i` is the original point, `w_i` its fairing weight and
//! `mu_i = 1 / Σ_j |a_ij|` the normalisation taken from the row of
//! `A = I - W + W D`. The fixed point solves `A P[∞] = (I - W) P`.
//!
//! Weights below the per-row bound `min(1/2, 1 / (2 m max_j |d_ij|))`, with
//! `m` the number of possible off-diagonal neighbours of a row, make `A`
//! strictly diagonally dominant and `||I - ΛA||_∞ < 1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::metrics::{relative_energy, relative_iter_deviation, rmse_deviation, MetricsRecord};
use crate::{ControlPoints, Error, FunctionalKind, Geometry, GramMatrix, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 800;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Out-of-bound weights are clamped to this fraction of the bound.
pub const CLAMP_FACTOR: f64 = 0.99;

/// What to do with a weight at or above its convergence bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPolicy {
    /// Clamp to [`CLAMP_FACTOR`] times the bound and record a warning.
    #[default]
    Clamp,
    /// Reject the configuration.
    Strict,
    /// Keep the weight and record a warning. The iteration still converges
    /// for uniform weights in `(0, 1)` but the diagonal dominance guarantee
    /// no longer holds.
    Permissive,
}

impl std::str::FromStr for WeightPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(WeightPolicy::Clamp),
            "strict" => Ok(WeightPolicy::Strict),
            "permissive" => Ok(WeightPolicy::Permissive),
            other => Err(Error::InvalidArgument(format!(
                "unknown weight policy `{other}` (expected clamp, strict or permissive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairingConfig {
    pub kind: FunctionalKind,
    /// One weight per control point, each in `(0, 1)`.
    pub weights: Vec<f64>,
    /// Only these points move; all others stay at their original position.
    pub active_set: Option<Vec<usize>>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub policy: WeightPolicy,
}

impl FairingConfig {
    pub fn new(kind: FunctionalKind, weights: Vec<f64>) -> Self {
        Self {
            kind,
            weights,
            active_set: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            policy: WeightPolicy::Clamp,
        }
    }

    pub fn uniform(kind: FunctionalKind, count: usize, weight: f64) -> Self {
        Self::new(kind, vec![weight; count])
    }

    pub fn with_active_set(mut self, active: Vec<usize>) -> Self {
        self.active_set = Some(active);
        self
    }

    pub fn with_max_iterations(mut self, k: usize) -> Self {
        self.max_iterations = k;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_policy(mut self, policy: WeightPolicy) -> Self {
        self.policy = policy;
        self
    }
}

/// A weight that exceeded its convergence bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightWarning {
    pub index: usize,
    pub requested: f64,
    pub bound: f64,
    pub applied: f64,
}

impl fmt::Display for WeightWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.applied == self.requested {
            write!(
                f,
                "weight {:e} at point {} exceeds the convergence bound {:e}",
                self.requested, self.index, self.bound
            )
        } else {
            write!(
                f,
                "weight {:e} at point {} exceeds the convergence bound {:e}; clamped to {:e}",
                self.requested, self.index, self.bound, self.applied
            )
        }
    }
}

/// Per-row weight bounds `min(1/2, 1 / (2 m max_j |d_ij|))` where `m` is
/// the number of off-diagonal entries a row can hold (`2p` for curves,
/// `(2p+1)(2q+1) - 1` for surfaces).
pub fn weight_upper_bound(d: &GramMatrix) -> Vec<f64> {
    let m = d.stencil().neighbor_count().max(1) as f64;
    (0..d.size())
        .map(|i| {
            let row_max = d.max_abs_in_row(i);
            if row_max > 0.0 {
                (1.0 / (2.0 * m * row_max)).min(0.5)
            } else {
                0.5
            }
        })
        .collect()
}

/// Validates weights and applies `policy` to those at or above their bound.
pub fn resolve_weights(
    d: &GramMatrix,
    weights: &[f64],
    policy: WeightPolicy,
) -> Result<(Vec<f64>, Vec<WeightWarning>)> {
    d.check_len(weights.len())?;
    check_open_unit(weights)?;
    let bounds = weight_upper_bound(d);
    let mut applied = weights.to_vec();
    let mut warnings = Vec::new();
    for (i, (w, b)) in applied.iter_mut().zip(&bounds).enumerate() {
        if *w < *b {
            continue;
        }
        match policy {
            WeightPolicy::Strict => {
                return Err(Error::InvalidWeight {
                    index: i,
                    value: *w,
                    reason: format!("not below the convergence bound {b:e}"),
                })
            }
            WeightPolicy::Clamp => {
                let requested = *w;
                *w = CLAMP_FACTOR * b;
                warnings.push(WeightWarning {
                    index: i,
                    requested,
                    bound: *b,
                    applied: *w,
                });
            }
            WeightPolicy::Permissive => warnings.push(WeightWarning {
                index: i,
                requested: *w,
                bound: *b,
                applied: *w,
            }),
        }
    }
    Ok((applied, warnings))
}

fn check_open_unit(weights: &[f64]) -> Result<()> {
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::InvalidWeight {
                index: i,
                value: w,
                reason: "fairing weights must lie strictly between 0 and 1".into(),
            });
        }
    }
    Ok(())
}

/// `A = I - W + W D` together with the normalisation weights `mu`.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    gram: Arc<GramMatrix>,
    omega: Vec<f64>,
    mu: Vec<f64>,
}

/// Builds the iteration system for the given weights. Weights must be in
/// `(0, 1)`; bounds are not enforced here, see [`resolve_weights`].
pub fn build_system(d: Arc<GramMatrix>, omega: &[f64]) -> Result<SystemMatrix> {
    d.check_len(omega.len())?;
    check_open_unit(omega)?;
    let mut sys = SystemMatrix {
        gram: d,
        omega: omega.to_vec(),
        mu: Vec::new(),
    };
    sys.mu = (0..omega.len()).map(|i| 1.0 / sys.row_abs_sum(i)).collect();
    Ok(sys)
}

impl SystemMatrix {
    pub fn size(&self) -> usize {
        self.omega.len()
    }

    pub fn gram(&self) -> &Arc<GramMatrix> {
        &self.gram
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `a_ij = (1 - w_i) [i = j] + w_i d_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let w = self.omega[i];
        w * self.gram.get(i, j) + if i == j { 1.0 - w } else { 0.0 }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.gram.row_support(i).map(move |j| (j, self.entry(i, j)))
    }

    pub fn row_abs_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, a)| a.abs()).sum()
    }

    /// `||I - ΛA||_∞`.
    pub fn iteration_norm(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                self.row(i)
                    .map(|(j, a)| {
                        let m = self.mu[i] * a;
                        if i == j {
                            (1.0 - m).abs()
                        } else {
                            m.abs()
                        }
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        (0..self.size()).all(|i| {
            let off: f64 = self.row(i).filter(|&(j, _)| j != i).map(|(_, a)| a.abs()).sum();
            self.entry(i, i) > off
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// `A · x`.
    pub fn apply(&self, x: &ControlPoints) -> Result<ControlPoints> {
        self.gram.check_len(x.len())?;
        let mut out = ControlPoints::zeros(x.dim(), x.len());
        for i in 0..self.size() {
            let row = out.point_mut(i);
            for (j, a) in self.row(i) {
                for (o, v) in row.iter_mut().zip(x.point(j)) {
                    *o += a * v;
                }
            }
        }
        Ok(out)
    }
}

/// `max_coord ||A x - (I - W) P||_∞`.
pub fn fixed_point_residual(points: &ControlPoints, sys: &SystemMatrix, original: &ControlPoints) -> Result<f64> {
    points.check_same_shape(original)?;
    let ax = sys.apply(points)?;
    let mut worst = 0.0f64;
    for i in 0..points.len() {
        let w = sys.omega[i];
        for (a, p) in ax.point(i).iter().zip(original.point(i)) {
            worst = worst.max((a - (1.0 - w) * p).abs());
        }
    }
    Ok(worst)
}

/// Control points at iteration `k` alongside the originals.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub current: ControlPoints,
    pub original: ControlPoints,
}

impl IterationState {
    pub fn new(original: ControlPoints) -> Self {
        Self {
            k: 0,
            current: original.clone(),
            original,
        }
    }
}

/// One iteration. Points outside `active` (when given) are set to their
/// original positions.
pub fn fair_step(state: &IterationState, sys: &SystemMatrix, active: Option<&[usize]>) -> Result<IterationState> {
    state.current.check_same_shape(&state.original)?;
    sys.gram.check_len(state.current.len())?;
    let mut next = match active {
        Some(_) => state.original.clone(),
        None => state.current.clone(),
    };
    let mut update = |i: usize| {
        let eta = sys.gram.apply_row(i, &state.current);
        let (w, mu) = (sys.omega[i], sys.mu[i]);
        let cur = state.current.point(i);
        let orig = state.original.point(i);
        for (c, out) in next.point_mut(i).iter_mut().enumerate() {
            let delta = orig[c] - cur[c];
            *out = cur[c] + mu * ((1.0 - w) * delta - w * eta[c]);
        }
    };
    match active {
        Some(idx) => idx.iter().for_each(|&i| update(i)),
        None => (0..state.current.len()).for_each(update),
    }
    Ok(IterationState {
        k: state.k + 1,
        current: next,
        original: state.original.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// `|E_iter[k+1] - E_iter[k]|` fell below the tolerance.
    Converged,
    /// The first step did not move any point.
    FixedPoint,
    /// The iteration budget ran out.
    IterationCap,
    Cancelled,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        matches!(self, StopReason::Converged | StopReason::FixedPoint)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::FixedPoint => "fixed-point",
            StopReason::IterationCap => "iteration-cap",
            StopReason::Cancelled => "cancelled",
        })
    }
}

/// Result of a complete fairing run.
#[derive(Debug, Clone, PartialEq)]
pub struct FairingRun {
    pub geometry: Geometry,
    pub trace: Vec<MetricsRecord>,
    pub stop: StopReason,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub warnings: Vec<WeightWarning>,
    pub active_set: Option<Vec<usize>>,
}

/// A resumable fairing run. Weights and the active set may change between
/// iterations; the system matrix is rebuilt lazily when they do.
#[derive(Debug, Clone)]
pub struct FairingProcess {
    original: Geometry,
    kind: FunctionalKind,
    gram: Arc<GramMatrix>,
    policy: WeightPolicy,
    requested_weights: Vec<f64>,
    applied_weights: Vec<f64>,
    warnings: Vec<WeightWarning>,
    system: Option<SystemMatrix>,
    active: Option<Vec<usize>>,
    state: IterationState,
    tolerance: f64,
    last_e_iter: Option<f64>,
    initial_energy: f64,
    trace: Vec<MetricsRecord>,
    stop: Option<StopReason>,
}

impl FairingProcess {
    pub fn new(geometry: &Geometry, config: &FairingConfig) -> Result<Self> {
        let gram = Arc::new(geometry.gram(config.kind)?);
        Self::with_gram(geometry, config, gram)
    }

    /// Reuses a precomputed Gram matrix for `config.kind`.
    pub fn with_gram(geometry: &Geometry, config: &FairingConfig, gram: Arc<GramMatrix>) -> Result<Self> {
        geometry.check_kind(config.kind)?;
        gram.check_len(geometry.len())?;
        if config.tolerance.is_nan() || config.tolerance < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be non-negative, got {}",
                config.tolerance
            )));
        }
        let active = config
            .active_set
            .as_deref()
            .map(|a| normalize_active(a, geometry.len()))
            .transpose()?;
        let (applied, warnings) = resolve_weights(&gram, &config.weights, config.policy)?;
        let original = geometry.points().clone();
        let initial_energy = gram.quadratic_form(&original)?;
        let mut process = Self {
            original: geometry.clone(),
            kind: config.kind,
            gram,
            policy: config.policy,
            requested_weights: config.weights.clone(),
            applied_weights: applied,
            warnings,
            system: None,
            active,
            state: IterationState::new(original),
            tolerance: config.tolerance,
            last_e_iter: None,
            initial_energy,
            trace: Vec::new(),
            stop: None,
        };
        let first = process.record(None)?;
        process.trace.push(first);
        Ok(process)
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn gram(&self) -> &Arc<GramMatrix> {
        &self.gram
    }

    pub fn iteration(&self) -> usize {
        self.state.k
    }

    pub fn state(&self) -> &IterationState {
        &self.state
    }

    pub fn original(&self) -> &Geometry {
        &self.original
    }

    pub fn current_geometry(&self) -> Result<Geometry> {
        self.original.with_points(self.state.current.clone())
    }

    pub fn trace(&self) -> &[MetricsRecord] {
        &self.trace
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn weights(&self) -> &[f64] {
        &self.applied_weights
    }

    pub fn requested_weights(&self) -> &[f64] {
        &self.requested_weights
    }

    pub fn warnings(&self) -> &[WeightWarning] {
        &self.warnings
    }

    pub fn active_set(&self) -> Option<&[usize]> {
        self.active.as_deref()
    }

    pub fn policy(&self) -> WeightPolicy {
        self.policy
    }

    /// Changes the policy and re-resolves the requested weights under it.
    pub fn set_policy(&mut self, policy: WeightPolicy) -> Result<()> {
        let previous = std::mem::replace(&mut self.policy, policy);
        let requested = self.requested_weights.clone();
        self.set_weights(&requested).inspect_err(|_| self.policy = previous)
    }

    pub fn set_tolerance(&mut self, tol: f64) {
        self.tolerance = tol;
    }

    /// Replaces the weights; clears a previous convergence verdict.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        let (applied, warnings) = resolve_weights(&self.gram, weights, self.policy)?;
        if applied != self.applied_weights {
            self.system = None;
        }
        self.requested_weights = weights.to_vec();
        self.applied_weights = applied;
        self.warnings = warnings;
        self.stop = None;
        Ok(())
    }

    /// Replaces the active set. Points leaving it return to their original
    /// position on the next step.
    pub fn set_active_set(&mut self, active: Option<Vec<usize>>) -> Result<()> {
        let active = active
            .as_deref()
            .map(|a| normalize_active(a, self.state.current.len()))
            .transpose()?;
        if active != self.active {
            self.stop = None;
        }
        self.active = active;
        Ok(())
    }

    /// The system for the current weights.
    pub fn system(&mut self) -> Result<&SystemMatrix> {
        if self.system.is_none() {
            self.system = Some(build_system(self.gram.clone(), &self.applied_weights)?);
        }
        Ok(self.system.as_ref().expect("just built"))
    }

    /// Performs one iteration and evaluates the stopping rule. Returns the
    /// stop reason if the rule fired.
    pub fn step(&mut self) -> Result<Option<StopReason>> {
        self.system()?;
        let sys = self.system.as_ref().expect("built above");
        let next = fair_step(&self.state, sys, self.active.as_deref())?;
        let e_iter = relative_iter_deviation(
            &next.current,
            &self.state.current,
            &self.state.original,
            self.active.as_deref(),
        )?;
        self.state = next;
        let record = self.record(e_iter)?;
        self.trace.push(record);
        let stop = match (e_iter, self.last_e_iter) {
            (None, _) => Some(StopReason::FixedPoint),
            (Some(e), Some(prev)) if (e - prev).abs() < self.tolerance => Some(StopReason::Converged),
            _ => None,
        };
        self.last_e_iter = e_iter;
        self.stop = stop;
        Ok(stop)
    }

    /// Steps until the stopping rule fires or `max_steps` more iterations
    /// have been performed.
    pub fn run(&mut self, max_steps: usize) -> Result<StopReason> {
        self.run_until(max_steps, || false)
    }

    /// Like [`Self::run`], polling `cancelled` before every iteration.
    pub fn run_until(&mut self, max_steps: usize, cancelled: impl Fn() -> bool) -> Result<StopReason> {
        for _ in 0..max_steps {
            if cancelled() {
                self.stop = Some(StopReason::Cancelled);
                return Ok(StopReason::Cancelled);
            }
            if let Some(stop) = self.step()? {
                return Ok(stop);
            }
        }
        self.stop = Some(StopReason::IterationCap);
        Ok(StopReason::IterationCap)
    }

    pub fn finish(self) -> Result<FairingRun> {
        let geometry = self.current_geometry()?;
        Ok(FairingRun {
            geometry,
            iterations: self.state.k,
            trace: self.trace,
            stop: self.stop.unwrap_or(StopReason::IterationCap),
            weights: self.applied_weights,
            warnings: self.warnings,
            active_set: self.active,
        })
    }

    fn record(&self, e_iter: Option<f64>) -> Result<MetricsRecord> {
        let e_abs = self.gram.quadratic_form(&self.state.current)?;
        Ok(MetricsRecord {
            k: self.state.k,
            e_dev: rmse_deviation(&self.state.current, &self.state.original)?,
            e_iter,
            e_abs,
            e_rel: relative_energy(e_abs, self.initial_energy),
        })
    }
}

fn normalize_active(active: &[usize], n: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = active.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!(
            "active index {bad} out of range for {n} control points"
        )));
    }
    let mut a = active.to_vec();
    a.sort_unstable();
    a.dedup();
    Ok(a)
}

/// Runs the iteration until the stopping rule fires or
/// `config.max_iterations` iterations have been performed.
pub fn fair(geometry: &Geometry, config: &FairingConfig) -> Result<FairingRun> {
    let mut process = FairingProcess::new(geometry, config)?;
    process.run(config.max_iterations)?;
    process.finish()
}
