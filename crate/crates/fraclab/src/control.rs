//! HUM synthesis of low-frequency boundary null controls and the
//! Lebeau–Robbiano frequency-wise iteration.
//!
//! The minimizer of the quadratic control functional is characterized by the
//! Euler–Lagrange system `G c = -d`, where `G` is the heat boundary Gramian
//! with the duality constant applied, `d_j = e^{-λ_j T} u_{0,j}`, and the
//! control is the boundary trace of the optimal adjoint state,
//! `f(x,t) = Σ_j c_j t_j(x) e^{-λ_j (T-t)}` on `∂Ω⁺`. The Gramian is
//! exponentially ill-conditioned in `J`, so the solve runs in double-double
//! precision with a relative spectral cutoff; truncated directions are
//! reported, never silently dropped.
//!
//! The iteration alternates such controls on the eigenvalue-thresholded
//! spaces `λ ≤ 2^{2j}` with free-decay segments on the shrinking partition
//! `τ_j = γ_LR 2^{-2j/3}`, driving the whole tracked spectrum to zero when
//! the dissipation outruns the cost growth.

use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::heat::{self, ModalHeatState};
use crate::linalg::{self, AffineFit};
use crate::operator::{duality_constant, BoundaryPoint};
use crate::spectral::SpectralModel;

/// Closed-form boundary control
/// `f(x,t) = Σ_j c_j t_j(x) e^{-λ_j (t1 - t)}`, `x ∈ ∂Ω⁺`, `t ∈ [t0, t1]`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ControlSignal {
    pub coefficients: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Trace rows per plus-boundary point, aligned with `coefficients`.
    pub boundary: Vec<(BoundaryPoint, Vec<f64>)>,
    pub t0: f64,
    pub t1: f64,
}

impl ControlSignal {
    pub fn from_coefficients(
        model: &SpectralModel,
        coefficients: Vec<f64>,
        t0: f64,
        t1: f64,
    ) -> ControlSignal {
        let j = coefficients.len();
        let boundary = model
            .plus_boundary_with_traces()
            .into_iter()
            .map(|(bp, p)| (bp, (0..j).map(|m| model.trace(p, m)).collect()))
            .collect();
        ControlSignal {
            eigenvalues: model.lambda()[..j].to_vec(),
            coefficients,
            boundary,
            t0,
            t1,
        }
    }

    pub fn zero(model: &SpectralModel, t0: f64, t1: f64) -> ControlSignal {
        ControlSignal::from_coefficients(model, Vec::new(), t0, t1)
    }

    pub fn scaled(&self, alpha: f64) -> ControlSignal {
        let mut out = self.clone();
        for c in &mut out.coefficients {
            *c *= alpha;
        }
        out
    }

    /// Trace of mode `i` at the boundary point `bp` (must be one of the
    /// stored plus-boundary points).
    pub fn trace_at(&self, bp: BoundaryPoint, i: usize) -> f64 {
        self.boundary
            .iter()
            .find(|(p, _)| p.coordinate == bp.coordinate)
            .map(|(_, row)| row[i])
            .unwrap_or(0.0)
    }

    /// Pointwise value at boundary point index `b` and time `t`.
    pub fn value(&self, b: usize, t: f64) -> f64 {
        let (_, row) = &self.boundary[b];
        self.coefficients
            .iter()
            .zip(&self.eigenvalues)
            .zip(row)
            .map(|((c, l), tr)| c * tr * (-l * (self.t1 - t)).exp())
            .sum()
    }

    /// `L²(∂Ω⁺ × [t0,t1])` norm, closed form with compensated accumulation:
    /// `‖f‖² = Σ_x Σ_{ik} c_i c_k t_i t_k (1 - e^{-(λ_i+λ_k)τ})/(λ_i+λ_k)`.
    pub fn norm_l2(&self) -> f64 {
        let tau = self.t1 - self.t0;
        let mut acc = Dd::ZERO;
        for (_, row) in &self.boundary {
            for (i, &ci) in self.coefficients.iter().enumerate() {
                for (k, &ck) in self.coefficients.iter().enumerate() {
                    let lik = self.eigenvalues[i] + self.eigenvalues[k];
                    let w = -(-lik * tau).exp_m1() / lik;
                    acc = acc + Dd::from_f64(ci * ck * row[i] * row[k] * w);
                }
            }
        }
        acc.to_f64().max(0.0).sqrt()
    }
}

// ---------------------------------------------------------------------------
// HUM solve
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct HumDiagnostics {
    pub condition: f64,
    pub sigma_max: f64,
    pub sigma_min_kept: f64,
    /// Directions below the relative cutoff, excluded from the inverse.
    pub truncated: usize,
    pub kept: usize,
    pub predicted_cost: f64,
}

pub const DEFAULT_RCOND: f64 = 1e-12;

/// Minimal-norm control steering the `modes`-dimensional projection of `u0`
/// to zero at time `horizon`.
///
/// Solves the Euler–Lagrange system by double-double Jacobi
/// eigendecomposition with relative spectral cutoff `rcond`.
pub fn hum_solve(
    model: &SpectralModel,
    modes: usize,
    horizon: f64,
    u0: &ModalHeatState,
    rcond: f64,
) -> Result<(ControlSignal, HumDiagnostics)> {
    if modes == 0 {
        return Ok((
            ControlSignal::zero(model, 0.0, horizon),
            HumDiagnostics {
                condition: 0.0,
                sigma_max: 0.0,
                sigma_min_kept: 0.0,
                truncated: 0,
                kept: 0,
                predicted_cost: 0.0,
            },
        ));
    }
    let gram = heat::heat_obs_gramian(model, modes, horizon, false, true)?;
    let lam = model.lambda();
    let (sig, vecs) = linalg::jacobi_eigen_dd(&gram.matrix);
    let sig_max = sig[modes - 1].to_f64();
    if !(sig_max > 0.0) {
        return Err(Error::Unobservable { truncated: modes });
    }
    let cutoff = Dd::from_f64(rcond * sig_max);
    let d: Vec<f64> = (0..modes)
        .map(|j| {
            let uj = if j < u0.coeffs.len() { u0.coeffs[j] } else { 0.0 };
            uj * (-lam[j] * horizon).exp()
        })
        .collect();
    let mut c = vec![Dd::ZERO; modes];
    let mut kept = 0usize;
    let mut sig_min_kept = f64::INFINITY;
    for k in (0..modes).rev() {
        if sig[k] < cutoff || sig[k].to_f64() <= 0.0 {
            break;
        }
        kept += 1;
        sig_min_kept = sig[k].to_f64();
        // projection of -d on the eigenvector, in double-double
        let mut proj = Dd::ZERO;
        for (i, &di) in d.iter().enumerate() {
            proj = proj + vecs[k][i] * Dd::from_f64(di);
        }
        let scale = -proj / sig[k];
        for i in 0..modes {
            c[i] = c[i] + scale * vecs[k][i];
        }
    }
    if kept == 0 {
        return Err(Error::Unobservable { truncated: modes });
    }
    // predicted cost ||f||² = cᵀ G c / A(s), from the dd coefficients
    let mut cost2 = Dd::ZERO;
    for i in 0..modes {
        let mut row = Dd::ZERO;
        for j in 0..modes {
            row = row + Dd::from_f64(gram.matrix[(i, j)]) * c[j];
        }
        cost2 = cost2 + c[i] * row;
    }
    let predicted_cost = (cost2.to_f64() / duality_constant(model.s)).max(0.0).sqrt();
    let coefficients: Vec<f64> = c.iter().map(|v| v.to_f64()).collect();
    let signal = ControlSignal::from_coefficients(model, coefficients, 0.0, horizon);
    Ok((
        signal,
        HumDiagnostics {
            condition: sig_max / sig_min_kept,
            sigma_max: sig_max,
            sigma_min_kept: sig_min_kept,
            truncated: modes - kept,
            kept,
            predicted_cost,
        },
    ))
}

/// Closed-loop check of a control: final values of the low modes (the
/// controlled projection) and the spillover onto the tracked tail.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProjectionCheck {
    /// `max_{j≤J} |u_j(T)|`.
    pub max_low_residual: f64,
    pub low_final: Vec<f64>,
    /// `u_j(T)` for `J < j ≤ M`; generically nonzero.
    pub spillover: Vec<f64>,
}

pub fn verify_projection(
    model: &SpectralModel,
    u0: &ModalHeatState,
    control: &ControlSignal,
    modes: usize,
    horizon: f64,
    tracked: usize,
) -> Result<ProjectionCheck> {
    if (control.t1 - control.t0 - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Domain("control span does not match the horizon".into()));
    }
    let final_state =
        heat::propagate_controlled(model, u0, control, (control.t0, control.t1), tracked)?;
    let low_final = final_state.coeffs[..modes].to_vec();
    let max_low_residual = low_final.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ProjectionCheck {
        max_low_residual,
        low_final,
        spillover: final_state.coeffs[modes..].to_vec(),
    })
}

// ---------------------------------------------------------------------------
// cost scaling in the horizon
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct CostReport {
    pub modes: usize,
    pub horizons: Vec<f64>,
    pub costs: Vec<f64>,
    pub decreasing_in_horizon: bool,
    /// Fit of `log(‖f‖² T)` against `1/T`.
    pub fit: AffineFit,
}

/// Measure `‖f‖` across a horizon grid and fit the short-time blow-up law.
pub fn cost_check(
    model: &SpectralModel,
    modes: usize,
    horizons: &[f64],
    u0: &ModalHeatState,
) -> Result<CostReport> {
    if horizons.len() < 3 {
        return Err(Error::Domain("cost fit needs at least 3 horizons".into()));
    }
    let mut costs = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let (f, _) = hum_solve(model, modes, t, u0, DEFAULT_RCOND)?;
        costs.push(f.norm_l2());
    }
    let decreasing = costs.windows(2).all(|w| w[1] <= w[0]);
    let x: Vec<f64> = horizons.iter().map(|t| 1.0 / t).collect();
    let y: Vec<f64> = costs
        .iter()
        .zip(horizons)
        .map(|(c, t)| (c * c * t).max(1e-300).ln())
        .collect();
    let fit = linalg::fit_affine(&x, &y);
    Ok(CostReport {
        modes,
        horizons: horizons.to_vec(),
        costs,
        decreasing_in_horizon: decreasing,
        fit,
    })
}

// ---------------------------------------------------------------------------
// Lebeau–Robbiano schedule and iteration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct LrStage {
    pub index: usize,
    pub start: f64,
    /// Control segment length `τ_j`; the stage occupies `[a_j, a_j + 2τ_j]`.
    pub control_len: f64,
    /// Eigenvalue threshold `2^{2j}` of the controlled space.
    pub threshold: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct LrSchedule {
    pub stages: Vec<LrStage>,
    pub gamma_lr: f64,
    pub horizon: f64,
    /// Free-decay remainder `T - 2 Σ τ_j` left by the finite stage count.
    pub tail: f64,
}

/// Geometric time partition `τ_j = γ_LR 2^{-2j/3}` with
/// `γ_LR = T (1 - 2^{-2/3}) / 2`, so the full infinite sum closes the
/// horizon exactly: `2 Σ_j τ_j = T`.
pub fn lr_schedule(horizon: f64, stage_count: usize) -> Result<LrSchedule> {
    if horizon <= 0.0 || stage_count == 0 {
        return Err(Error::Domain("need positive horizon and at least one stage".into()));
    }
    let ratio = (2.0f64).powf(-2.0 / 3.0);
    let gamma_lr = horizon * (1.0 - ratio) / 2.0;
    let mut stages = Vec::with_capacity(stage_count);
    let mut start = 0.0;
    for j in 0..stage_count {
        let tau = gamma_lr * (2.0f64).powf(-2.0 * j as f64 / 3.0);
        stages.push(LrStage {
            index: j,
            start,
            control_len: tau,
            threshold: (2.0f64).powi(2 * j as i32),
        });
        start += 2.0 * tau;
    }
    Ok(LrSchedule {
        stages,
        gamma_lr,
        horizon,
        tail: horizon - start,
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StageRecord {
    pub index: usize,
    pub threshold: f64,
    /// Modes with `λ ≤ threshold` (the controlled space dimension).
    pub active_modes: usize,
    pub pre_norm: f64,
    pub post_control_norm: f64,
    pub post_decay_norm: f64,
    pub cost: f64,
    /// Residual of the controlled projection right after the control segment.
    pub projection_residual: f64,
    pub truncated_directions: usize,
    /// Set when the Gramian was unobservable and the stage fell back to decay.
    pub skipped: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CostLedger {
    pub stages: Vec<StageRecord>,
    /// Root-sum-square of stage costs.
    pub total_cost: f64,
    pub initial_norm: f64,
    pub terminal_norm: f64,
    /// Stage index where the threshold first covered every tracked mode.
    pub early_termination: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct LrRun {
    pub schedule: LrSchedule,
    pub controls: Vec<Option<ControlSignal>>,
    pub ledger: CostLedger,
    pub terminal: ModalHeatState,
}

/// Run the frequency-wise iteration: per stage, a HUM control annihilating
/// the eigenvalue-thresholded projection over `[a_j, a_j + τ_j]`, then free
/// decay over `[a_j + τ_j, a_{j+1}]`; after the last stage the remaining
/// tail decays freely. Once the threshold covers the whole tracked window
/// the model's spectrum is exhausted (finite-dimensional early termination)
/// and later stages are pure decay.
pub fn lr_control(
    model: &SpectralModel,
    u0: &ModalHeatState,
    horizon: f64,
    stage_count: usize,
    tracked: usize,
    rcond: f64,
) -> Result<LrRun> {
    if tracked > model.count() {
        return Err(Error::Domain(format!(
            "tracked window {tracked} exceeds basis size {}",
            model.count()
        )));
    }
    let schedule = lr_schedule(horizon, stage_count)?;
    let lam = model.lambda();
    let mut state = ModalHeatState {
        coeffs: {
            let mut c = u0.coeffs.clone();
            c.resize(tracked, 0.0);
            c
        },
        time: 0.0,
    };
    let initial_norm = state.norm();
    let mut controls: Vec<Option<ControlSignal>> = Vec::with_capacity(stage_count);
    let mut records = Vec::with_capacity(stage_count);
    let mut early_termination = None;
    let mut cost2_total = Dd::ZERO;
    for stage in &schedule.stages {
        let tau = stage.control_len;
        let active = lam[..tracked]
            .iter()
            .take_while(|&&l| l <= stage.threshold)
            .count();
        if early_termination.is_none() && active == tracked {
            early_termination = Some(stage.index);
        }
        let pre_norm = state.norm();
        let mut skipped = false;
        let mut cost = 0.0;
        let mut truncated = 0usize;
        let mut projection_residual = 0.0;
        if active > 0 {
            let data = ModalHeatState::new(state.coeffs[..active].to_vec())?;
            match hum_solve(model, active, tau, &data, rcond) {
                Ok((f, diag)) => {
                    let shifted = ControlSignal {
                        t0: stage.start,
                        t1: stage.start + tau,
                        ..f.clone()
                    };
                    state = heat::propagate_controlled(
                        model,
                        &state,
                        &shifted,
                        (stage.start, stage.start + tau),
                        tracked,
                    )?;
                    projection_residual = state.coeffs[..active]
                        .iter()
                        .fold(0.0f64, |m, v| m.max(v.abs()));
                    cost = f.norm_l2();
                    truncated = diag.truncated;
                    cost2_total = cost2_total + Dd::from_f64(cost) * Dd::from_f64(cost);
                    controls.push(Some(shifted));
                }
                Err(Error::Unobservable { truncated: t }) => {
                    skipped = true;
                    truncated = t;
                    state = heat::evolve_heat(&state, lam, tau);
                    controls.push(None);
                }
                Err(e) => return Err(e),
            }
        } else {
            state = heat::evolve_heat(&state, lam, tau);
            controls.push(None);
        }
        let post_control_norm = state.norm();
        state = heat::evolve_heat(&state, lam, tau);
        records.push(StageRecord {
            index: stage.index,
            threshold: stage.threshold,
            active_modes: active,
            pre_norm,
            post_control_norm,
            post_decay_norm: state.norm(),
            cost,
            projection_residual,
            truncated_directions: truncated,
            skipped,
        });
    }
    if schedule.tail > 0.0 {
        state = heat::evolve_heat(&state, lam, schedule.tail);
    }
    let ledger = CostLedger {
        stages: records,
        total_cost: cost2_total.to_f64().max(0.0).sqrt(),
        initial_norm,
        terminal_norm: state.norm(),
        early_termination,
    };
    Ok(LrRun { schedule, controls, ledger, terminal: state })
}

// ---------------------------------------------------------------------------
// minimal-norm certificate
// ---------------------------------------------------------------------------

/// Check the minimal-norm property of a HUM control against perturbations
/// from a richer exponential family: any `g` whose pairings with the first
/// `modes` adjoint solutions vanish leaves the constraint intact, and
/// `‖f+g‖ ≥ ‖f‖` must hold. Returns the worst margin
/// `min_g (‖f+g‖ - ‖f‖)` over the supplied kernel samples.
pub fn minimal_norm_margin(
    model: &SpectralModel,
    control: &ControlSignal,
    modes: usize,
    extra_modes: usize,
    samples: &[Vec<f64>],
) -> Result<f64> {
    let family = modes + extra_modes;
    if family > model.count() {
        return Err(Error::Domain("perturbation family exceeds basis".into()));
    }
    let horizon = control.t1 - control.t0;
    // extended Gram matrix of the exponential family on the plus boundary
    let lam = model.lambda();
    let pts = model.plus_boundary_with_traces();
    let gram = |i: usize, k: usize| -> f64 {
        let lik = lam[i] + lam[k];
        let w = -(-lik * horizon).exp_m1() / lik;
        let mut tt = 0.0;
        for &(_, p) in &pts {
            tt += model.trace(p, i) * model.trace(p, k);
        }
        tt * w
    };
    // constraint matrix rows: pairings of family members with the first
    // `modes` adjoint traces; kernel vectors must annihilate them
    let mut worst = f64::INFINITY;
    let norm_f = control.norm_l2();
    for sample in samples {
        if sample.len() != family {
            return Err(Error::Domain("kernel sample of wrong length".into()));
        }
        // project the sample onto the constraint kernel: subtract the
        // component seen by each constrained row via Gram-Schmidt against
        // the rows of the (modes × family) constraint matrix
        let mut rows: Vec<Vec<f64>> = (0..modes)
            .map(|i| (0..family).map(|k| gram(i, k)).collect())
            .collect();
        // orthonormalize rows in the Euclidean sense
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for row in rows.drain(..) {
            let mut v = row;
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
            let n: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-13 {
                for vi in &mut v {
                    *vi /= n;
                }
                basis.push(v);
            }
        }
        let mut g = sample.clone();
        for b in &basis {
            let dot: f64 = g.iter().zip(b).map(|(a, c)| a * c).sum();
            for (gi, bi) in g.iter_mut().zip(b) {
                *gi -= dot * bi;
            }
        }
        // ‖f+g‖² with the combined coefficient vector over the family
        let mut combined = vec![0.0; family];
        combined[..control.coefficients.len()].copy_from_slice(&control.coefficients);
        for (ci, gi) in combined.iter_mut().zip(&g) {
            *ci += gi;
        }
        let mut acc = Dd::ZERO;
        for (i, &ci) in combined.iter().enumerate() {
            for (k, &ck) in combined.iter().enumerate() {
                acc = acc + Dd::from_f64(ci * ck * gram(i, k));
            }
        }
        let norm_fg = acc.to_f64().max(0.0).sqrt();
        worst = worst.min(norm_fg - norm_f);
    }
    Ok(worst)
}

/// Compensated root-sum-square of stage costs, for the ledger identity.
pub fn root_sum_square(costs: &[f64]) -> f64 {
    let squares: Vec<f64> = costs.iter().map(|c| c * c).collect();
    dd::sum(&squares).to_f64().max(0.0).sqrt()
}
