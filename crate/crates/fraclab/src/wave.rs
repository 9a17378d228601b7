//! Modal dynamics of the fractional wave equation and its boundary
//! observability.
//!
//! A low-frequency solution `p(x,t) = Σ_{j≤J} p_j(t) φ_j(x)` has coefficients
//! obeying `p_j'' + λ_j p_j = 0`, so propagation is exact trigonometry. The
//! observed quantity is the weighted boundary energy
//! `Σ_{x∈∂Ω⁺} (x·ν) ∫_0^T |Σ_j p_j(t) t_j(x)|² dt`, assembled in closed form
//! as a quadratic form in the initial data `(a, b)`. Its smallest eigenvalue
//! against the energy metric is the observability constant `κ(T, J)`; the
//! empirical minimal time `T0(J)` is where `κ(T,J)/T` first clears a relative
//! threshold.

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::{self, AffineFit};
use crate::operator::FracOrder;
use crate::spectral::SpectralModel;

/// Position/velocity coefficients of a finite-mode wave solution.
#[derive(Clone, Debug)]
pub struct ModalWaveState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub time: f64,
}

impl ModalWaveState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Result<ModalWaveState> {
        if position.len() != velocity.len() {
            return Err(Error::Domain("position/velocity length mismatch".into()));
        }
        if position.iter().chain(&velocity).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite modal coefficient".into()));
        }
        Ok(ModalWaveState { position, velocity, time: 0.0 })
    }

    pub fn mode_count(&self) -> usize {
        self.position.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WaveEnergy {
    pub kinetic: f64,
    pub fractional: f64,
    pub total: f64,
}

/// Exact modal propagation by duration `t`:
/// `a_j ← a_j cos(ω_j t) + b_j sin(ω_j t)/ω_j`,
/// `b_j ← -a_j ω_j sin(ω_j t) + b_j cos(ω_j t)`, `ω_j = √λ_j`.
pub fn evolve_wave(state: &ModalWaveState, lambda: &[f64], t: f64) -> ModalWaveState {
    assert!(t >= 0.0, "wave evolution runs forward");
    let j = state.mode_count();
    let mut position = Vec::with_capacity(j);
    let mut velocity = Vec::with_capacity(j);
    for i in 0..j {
        let w = lambda[i].sqrt();
        let (sin, cos) = (w * t).sin_cos();
        position.push(state.position[i] * cos + state.velocity[i] * sin / w);
        velocity.push(-state.position[i] * w * sin + state.velocity[i] * cos);
    }
    ModalWaveState { position, velocity, time: state.time + t }
}

/// `E_s = ½ Σ b_j² + ½ Σ λ_j a_j²` (kinetic + fractional energy, using
/// mass-orthonormality and the Rayleigh identity).
pub fn wave_energy(state: &ModalWaveState, lambda: &[f64]) -> WaveEnergy {
    let kinetic = 0.5 * state.velocity.iter().map(|b| b * b).sum::<f64>();
    let fractional = 0.5
        * state
            .position
            .iter()
            .zip(lambda)
            .map(|(a, l)| l * a * a)
            .sum::<f64>();
    WaveEnergy { kinetic, fractional, total: kinetic + fractional }
}

// ---------------------------------------------------------------------------
// closed-form time integrals of trigonometric products
// ---------------------------------------------------------------------------

/// `sin(a T)/a`, stable as `a → 0`.
fn sin_over(a: f64, t: f64) -> f64 {
    let x = a * t;
    if x.abs() < 1e-4 {
        t * (1.0 - x * x / 6.0 * (1.0 - x * x / 20.0))
    } else {
        x.sin() / a
    }
}

/// `(1 - cos(a T))/a`, stable as `a → 0`.
fn vers_over(a: f64, t: f64) -> f64 {
    let x = a * t;
    if x.abs() < 1e-4 {
        a * t * t * 0.5 * (1.0 - x * x / 12.0 * (1.0 - x * x / 30.0))
    } else {
        (1.0 - x.cos()) / a
    }
}

/// `∫_0^T cos(ωi t) cos(ωj t) dt`.
pub fn int_cos_cos(wi: f64, wj: f64, t: f64) -> f64 {
    0.5 * (sin_over(wi - wj, t) + sin_over(wi + wj, t))
}

/// `∫_0^T sin(ωi t) sin(ωj t) dt`.
pub fn int_sin_sin(wi: f64, wj: f64, t: f64) -> f64 {
    0.5 * (sin_over(wi - wj, t) - sin_over(wi + wj, t))
}

/// `∫_0^T cos(ωi t) sin(ωj t) dt`.
pub fn int_cos_sin(wi: f64, wj: f64, t: f64) -> f64 {
    0.5 * (vers_over(wi + wj, t) + vers_over(wj - wi, t))
}

/// `∫_0^T p_i(t) p_j(t) dt` for modal solutions with data `(a_i, b_i)`,
/// `(a_j, b_j)`: the bilinear form in the four coefficients.
fn int_mode_product(
    wi: f64,
    wj: f64,
    t: f64,
    ai: f64,
    bi: f64,
    aj: f64,
    bj: f64,
) -> f64 {
    let icc = int_cos_cos(wi, wj, t);
    let iss = int_sin_sin(wi, wj, t);
    let ics = int_cos_sin(wi, wj, t); // cos(wi) sin(wj)
    let isc = int_cos_sin(wj, wi, t); // cos(wj) sin(wi)
    ai * aj * icc + ai * (bj / wj) * ics + (bi / wi) * aj * isc + (bi / wi) * (bj / wj) * iss
}

// ---------------------------------------------------------------------------
// observability Gramian
// ---------------------------------------------------------------------------

/// Which boundary points the observation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BoundarySet {
    /// Points with `x·ν > 0`.
    Plus,
    /// Points with `x·ν ≤ 0`.
    Minus,
    /// The whole boundary.
    Full,
}

/// Boundary observation as a quadratic form on `(a, b) ∈ R^{2J}`.
#[derive(Clone, Debug)]
pub struct ObservabilityGramian {
    pub modes: usize,
    pub horizon: f64,
    /// Symmetric PSD `2J × 2J` matrix in the ordering `(a_1..a_J, b_1..b_J)`.
    pub matrix: DMatrix<f64>,
    pub weighted: bool,
    pub boundary_set: BoundarySet,
}

impl ObservabilityGramian {
    /// `J×J` block coupling position coefficients.
    pub fn position_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.modes, self.modes)).into()
    }

    /// `J×J` block coupling velocity coefficients.
    pub fn velocity_block(&self) -> DMatrix<f64> {
        self.matrix.view((self.modes, self.modes), (self.modes, self.modes)).into()
    }

    /// `J×J` position/velocity cross block.
    pub fn cross_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, self.modes), (self.modes, self.modes)).into()
    }

    /// Evaluate the form on a state directly from the closed-form time
    /// integrals (independent of the assembled matrix).
    pub fn evaluate_direct(&self, model: &SpectralModel, state: &ModalWaveState) -> f64 {
        boundary_observation(
            model,
            state,
            self.horizon,
            self.boundary_set,
            self.weighted,
        )
    }

    pub fn quadratic_form(&self, state: &ModalWaveState) -> f64 {
        let j = self.modes;
        let mut z = Vec::with_capacity(2 * j);
        z.extend_from_slice(&state.position);
        z.extend_from_slice(&state.velocity);
        let zv = nalgebra::DVector::from_vec(z);
        (zv.transpose() * &self.matrix * zv)[0]
    }
}

fn boundary_points(model: &SpectralModel, set: BoundarySet) -> Vec<(f64, usize)> {
    model
        .boundary_with_traces()
        .into_iter()
        .filter(|(b, _)| match set {
            BoundarySet::Plus => b.weight() > 0.0,
            BoundarySet::Minus => b.weight() <= 0.0,
            BoundarySet::Full => true,
        })
        .map(|(b, i)| (b.weight(), i))
        .collect()
}

/// Direct evaluation of the boundary observation functional
/// `Σ_x w(x) ∫_0^T (Σ_j t_j(x) p_j(t))² dt` with closed-form time integrals.
pub fn boundary_observation(
    model: &SpectralModel,
    state: &ModalWaveState,
    horizon: f64,
    set: BoundarySet,
    weighted: bool,
) -> f64 {
    let j = state.mode_count();
    let lam = model.lambda();
    let mut total = 0.0;
    for (weight, p) in boundary_points(model, set) {
        let w = if weighted { weight } else { 1.0 };
        if w == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for i in 0..j {
            for k in 0..j {
                let prod = int_mode_product(
                    lam[i].sqrt(),
                    lam[k].sqrt(),
                    horizon,
                    state.position[i],
                    state.velocity[i],
                    state.position[k],
                    state.velocity[k],
                );
                acc += model.trace(p, i) * model.trace(p, k) * prod;
            }
        }
        total += w * acc;
    }
    total
}

/// Assemble the boundary-observation Gramian on the first `modes` modes.
pub fn wave_obs_gramian(
    model: &SpectralModel,
    modes: usize,
    horizon: f64,
    set: BoundarySet,
    weighted: bool,
) -> Result<ObservabilityGramian> {
    if modes > model.count() {
        return Err(Error::Domain(format!(
            "gramian on {modes} modes exceeds basis size {}",
            model.count()
        )));
    }
    if horizon < 0.0 {
        return Err(Error::Domain("negative horizon".into()));
    }
    let lam = model.lambda();
    let pts = boundary_points(model, set);
    // entries are independent; parallel assembly over the flattened index
    let entries = crate::par::map_indexed(modes * modes, |flat| {
        let i = flat / modes;
        let k = flat % modes;
        let wi = lam[i].sqrt();
        let wk = lam[k].sqrt();
        let icc = int_cos_cos(wi, wk, horizon);
        let iss = int_sin_sin(wi, wk, horizon) / (wi * wk);
        let ics = int_cos_sin(wi, wk, horizon) / wk;
        let mut tt = 0.0;
        for &(weight, p) in &pts {
            let w = if weighted { weight } else { 1.0 };
            tt += w * model.trace(p, i) * model.trace(p, k);
        }
        (tt * icc, tt * iss, tt * ics)
    });
    let mut g = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        for k in 0..modes {
            let (cc, ss, cs) = entries[i * modes + k];
            g[(i, k)] = cc;
            g[(modes + i, modes + k)] = ss;
            g[(i, modes + k)] = cs;
            g[(modes + k, i)] = cs;
        }
    }
    // enforce exact symmetry against roundoff in the trace products
    for i in 0..2 * modes {
        for k in (i + 1)..2 * modes {
            let v = 0.5 * (g[(i, k)] + g[(k, i)]);
            g[(i, k)] = v;
            g[(k, i)] = v;
        }
    }
    Ok(ObservabilityGramian {
        modes,
        horizon,
        matrix: g,
        weighted,
        boundary_set: set,
    })
}

/// Observability constant `κ(T, J)`: minimum of the boundary form over
/// states of unit energy, i.e. the smallest eigenvalue of the Gramian
/// against the energy metric `diag(λ_j/2, 1/2)`. Clamped at zero (the form
/// is PSD; tiny negative values are eigensolver roundoff).
pub fn obs_constant_wave(gram: &ObservabilityGramian, lambda: &[f64]) -> Result<f64> {
    let j = gram.modes;
    let mut scaled = gram.matrix.clone();
    let inv_sqrt: Vec<f64> = (0..2 * j)
        .map(|i| {
            if i < j {
                (lambda[i] / 2.0).sqrt().recip()
            } else {
                (0.5f64).sqrt().recip()
            }
        })
        .collect();
    for r in 0..2 * j {
        for c in 0..2 * j {
            scaled[(r, c)] *= inv_sqrt[r] * inv_sqrt[c];
        }
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(scaled);
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Eigen("non-finite eigenvalue in observability pencil".into()));
    }
    Ok(min.max(0.0))
}

// ---------------------------------------------------------------------------
// empirical minimal observability time
// ---------------------------------------------------------------------------

/// Exponent `γ(s)` of the minimal-time law `T0(J) = C λ_J^γ` (N = 1 unless
/// stated): `1-s` on `(1/2,1)`, `1` at `s = 1/2`, `1 + α(s)/2` on `[1/4,1/2)`,
/// `N/s + 1` on `(0,1/4)`.
pub fn gamma_exponent(s: FracOrder, n_dim: u32) -> f64 {
    let sv = s.value();
    if sv > 0.5 {
        1.0 - sv
    } else if sv == 0.5 {
        1.0
    } else if sv >= 0.25 {
        1.0 + alpha_exponent(s).expect("alpha defined on [1/4,1/2)") / 2.0
    } else {
        n_dim as f64 / sv + 1.0
    }
}

/// Interpolation exponent `α(s)`: `1/s - 3` on `[1/4,1/3)`, `1 - 1/(3s)` on
/// `[1/3,1/2)`.
pub fn alpha_exponent(s: FracOrder) -> Result<f64> {
    let sv = s.value();
    if !(0.25..0.5).contains(&sv) {
        return Err(Error::Domain(format!("alpha(s) defined on [1/4,1/2), got {sv}")));
    }
    Ok(if sv < 1.0 / 3.0 {
        1.0 / sv - 3.0
    } else {
        1.0 - 1.0 / (3.0 * sv)
    })
}

pub const DEFAULT_T0_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, serde::Serialize)]
pub struct T0Entry {
    pub modes: usize,
    pub lambda_max: f64,
    /// `None` when the detector never fires inside the grid.
    pub t0: Option<f64>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct T0Estimate {
    pub entries: Vec<T0Entry>,
    /// Fit of `log T0` vs `log λ_J` over the detected entries.
    pub gamma_fit: Option<AffineFit>,
    /// Exponent from the minimal-time law for this `s`, for comparison.
    pub gamma_reference: f64,
    pub threshold: f64,
}

/// Empirical minimal time: the first grid `T` where the normalized rate
/// `κ(T,J)/T` reaches `threshold × max_T' κ(T',J)/T'`. Scale-invariant under
/// trace rescaling.
pub fn estimate_t0(
    model: &SpectralModel,
    j_list: &[usize],
    t_grid: &[f64],
    threshold: f64,
) -> Result<T0Estimate> {
    if threshold <= 0.0 {
        return Err(Error::Domain("threshold must be positive".into()));
    }
    let mut entries = Vec::with_capacity(j_list.len());
    for &j in j_list {
        let mut rates = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let gram = wave_obs_gramian(model, j, t, BoundarySet::Plus, true)?;
            let kappa = obs_constant_wave(&gram, model.lambda())?;
            rates.push(kappa / t);
        }
        let peak = rates.iter().cloned().fold(0.0f64, f64::max);
        let t0 = rates
            .iter()
            .position(|&r| r >= threshold * peak && peak > 0.0)
            .map(|idx| t_grid[idx]);
        entries.push(T0Entry {
            modes: j,
            lambda_max: model.lambda()[j - 1],
            t0,
        });
    }
    let detected: Vec<(f64, f64)> = entries
        .iter()
        .filter_map(|e| e.t0.map(|t| (e.lambda_max.ln(), t.ln())))
        .collect();
    let gamma_fit = if detected.len() >= 2 {
        let x: Vec<f64> = detected.iter().map(|p| p.0).collect();
        let y: Vec<f64> = detected.iter().map(|p| p.1).collect();
        Some(linalg::fit_affine(&x, &y))
    } else {
        None
    };
    Ok(T0Estimate {
        entries,
        gamma_fit,
        gamma_reference: gamma_exponent(model.s, 1),
        threshold,
    })
}

// ---------------------------------------------------------------------------
// multiplier and equipartition identities
// ---------------------------------------------------------------------------

/// Relative residual of the multiplier (Pohozaev-type) identity
///
/// ```text
/// Γ(1+s)²/2 · Σ_{x∈∂Ω} (x·ν) ∫_0^T |p/ρ^s|² dt
///   = s T E_s(0) + [∫ p_t (x·∂_x p + (1-s)/2 · p) dx]_0^T
/// ```
///
/// The boundary side uses the fitted traces and exact time integrals; the
/// bracket reconstructs nodal fields and differentiates by central
/// differences, so the residual measures pure discretization error.
pub fn pohozaev_residual(
    model: &SpectralModel,
    state0: &ModalWaveState,
    horizon: f64,
) -> Result<f64> {
    let j = state0.mode_count();
    if j > model.count() {
        return Err(Error::Domain("state has more modes than the basis".into()));
    }
    let s = model.s.value();
    let lam = model.lambda();
    let g = gamma(1.0 + s);
    let lhs = 0.5
        * g
        * g
        * boundary_observation(model, state0, horizon, BoundarySet::Full, true);
    let energy = wave_energy(state0, lam).total;

    let bracket = |state: &ModalWaveState| -> f64 {
        let n = model.mesh.n;
        let h = model.mesh.h;
        let mut p = vec![0.0; n];
        let mut pt = vec![0.0; n];
        for i in 0..n {
            for m in 0..j {
                p[i] += state.position[m] * model.basis.eigenvectors[(i, m)];
                pt[i] += state.velocity[m] * model.basis.eigenvectors[(i, m)];
            }
        }
        // multiplier field x·∂_x p + (1-s)/2 p at the nodes
        let mut mult = vec![0.0; n];
        for i in 0..n {
            let dp = if i == 0 {
                (p[1] - p[0]) / h
            } else if i == n - 1 {
                (p[n - 1] - p[n - 2]) / h
            } else {
                (p[i + 1] - p[i - 1]) / (2.0 * h)
            };
            mult[i] = model.mesh.nodes[i] * dp + 0.5 * (1.0 - s) * p[i];
        }
        // ∫ p_t · mult dx for piecewise-linear nodal fields
        let bm = model.mesh.h; // trapezoidal weight equals h on interior nodes
        let _ = bm;
        let bmv = crate::linalg::TridiagSpd {
            diag: vec![2.0 * h / 3.0; n],
            off: vec![h / 6.0; n - 1],
        }
        .matvec(&mult);
        pt.iter().zip(&bmv).map(|(a, b)| a * b).sum()
    };

    let state_t = evolve_wave(state0, lam, horizon);
    let rhs = s * horizon * energy + bracket(&state_t) - bracket(state0);
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / scale)
}

/// Residual of the equipartition identity
/// `-∫∫ |p_t|² + ∫∫ |∇^s p|² + [∫ p_t p]_0^T = 0`,
/// evaluated mode-by-mode with exact time integrals and normalized by
/// `E_s(0) · T`. Purely modal, no mesh dependence.
pub fn equipartition_residual(state0: &ModalWaveState, lambda: &[f64], horizon: f64) -> f64 {
    let j = state0.mode_count();
    let mut kinetic_time = 0.0; // ∫0^T Σ p_j'(t)² dt
    let mut fractional_time = 0.0; // ∫0^T Σ λ_j p_j(t)² dt
    let mut boundary = 0.0; // [Σ p_j' p_j]_0^T
    for i in 0..j {
        let w = lambda[i].sqrt();
        let a = state0.position[i];
        let b = state0.velocity[i];
        // p = a cos + (b/w) sin ; p' = -a w sin + b cos
        let icc = int_cos_cos(w, w, horizon);
        let iss = int_sin_sin(w, w, horizon);
        let ics = int_cos_sin(w, w, horizon);
        kinetic_time += a * a * w * w * iss - 2.0 * a * b * w * ics + b * b * icc;
        fractional_time +=
            lambda[i] * (a * a * icc + 2.0 * a * (b / w) * ics + (b / w) * (b / w) * iss);
        let (sin, cos) = (w * horizon).sin_cos();
        let p = a * cos + b / w * sin;
        let pt = -a * w * sin + b * cos;
        boundary += p * pt - a * b;
    }
    let energy = wave_energy(state0, lambda).total;
    if energy == 0.0 {
        return 0.0;
    }
    (-kinetic_time + fractional_time + boundary).abs() / (energy * horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_operator, FracOrder, IntervalDomain, Mesh};
    use crate::spectral::{SpectralModel, DEFAULT_FIT_NODES};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn model(s: f64, a: f64, b: f64, n: usize, m: usize) -> SpectralModel {
        let domain = IntervalDomain::new(a, b).unwrap();
        let mesh = Mesh::uniform(domain, n).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(s).unwrap()).unwrap();
        SpectralModel::build(&op, m, DEFAULT_FIT_NODES).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, j: usize) -> ModalWaveState {
        let a: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ModalWaveState::new(a, b).unwrap()
    }

    #[test]
    fn single_mode_full_and_quarter_period() {
        let lam = [4.0];
        let s0 = ModalWaveState::new(vec![1.0], vec![0.0]).unwrap();
        let full = evolve_wave(&s0, &lam, 2.0 * std::f64::consts::PI / 2.0);
        assert!((full.position[0] - 1.0).abs() < 1e-12);
        assert!(full.velocity[0].abs() < 1e-12);
        let s1 = ModalWaveState::new(vec![0.0], vec![1.0]).unwrap();
        let quarter = evolve_wave(&s1, &lam, std::f64::consts::PI / (2.0 * 2.0));
        assert!((quarter.position[0] - 0.5).abs() < 1e-12); // 1/sqrt(lam) = 1/2
        assert!(quarter.velocity[0].abs() < 1e-12);
    }

    #[test]
    fn energy_conserved_over_random_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let lam: Vec<f64> = (1..=6).map(|j| (j as f64) * 2.3 + 0.7).collect();
        let state = random_state(&mut rng, 6);
        let e0 = wave_energy(&state, &lam).total;
        let mut cur = state;
        for _ in 0..50 {
            let dt = rng.gen_range(0.0..2.0);
            cur = evolve_wave(&cur, &lam, dt);
            let e = wave_energy(&cur, &lam).total;
            assert!((e - e0).abs() <= 1e-12 * e0, "drift {:.3e}", (e - e0).abs() / e0);
        }
    }

    #[test]
    fn energy_of_zero_and_single_mode() {
        let lam = [3.0, 5.0];
        let zero = ModalWaveState::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(wave_energy(&zero, &lam).total, 0.0);
        let single = ModalWaveState::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let e = wave_energy(&single, &lam);
        assert!((e.total - 1.5).abs() < 1e-15); // λ1/2
        assert_eq!(e.kinetic, 0.0);
    }

    #[test]
    fn equipartition_residual_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lam: Vec<f64> = (1..=8).map(|j| (j as f64).powf(1.5) * 3.0).collect();
        // single mode, several horizons
        for &t in &[0.3, 1.0, 3.7, 11.0] {
            let s = ModalWaveState::new(vec![1.2, 0., 0., 0., 0., 0., 0., 0.], vec![0.0; 8]).unwrap();
            assert!(equipartition_residual(&s, &lam, t) <= 1e-10);
        }
        // random J = 8 state
        let state = random_state(&mut rng, 8);
        assert!(equipartition_residual(&state, &lam, 3.7) <= 1e-9);
        // zero state
        let zero = ModalWaveState::new(vec![0.0; 8], vec![0.0; 8]).unwrap();
        assert_eq!(equipartition_residual(&zero, &lam, 3.7), 0.0);
    }

    #[test]
    fn gramian_matches_direct_evaluation() {
        let md = model(0.75, 0.0, 1.0, 192, 6);
        let gram = wave_obs_gramian(&md, 6, 2.5, BoundarySet::Plus, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let state = random_state(&mut rng, 6);
            let via_matrix = gram.quadratic_form(&state);
            let direct = gram.evaluate_direct(&md, &state);
            let rel = (via_matrix - direct).abs() / direct.abs().max(1e-300);
            assert!(rel < 1e-10, "rel={rel:.3e}");
        }
    }

    #[test]
    fn gramian_zero_horizon_and_monotone_in_horizon() {
        let md = model(0.6, 0.0, 1.0, 160, 4);
        let g0 = wave_obs_gramian(&md, 4, 0.0, BoundarySet::Plus, true).unwrap();
        assert!(g0.matrix.iter().all(|v| v.abs() < 1e-14));
        let g1 = wave_obs_gramian(&md, 4, 1.5, BoundarySet::Plus, true).unwrap();
        let g2 = wave_obs_gramian(&md, 4, 3.0, BoundarySet::Plus, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = random_state(&mut rng, 4);
            assert!(g2.quadratic_form(&z) >= g1.quadratic_form(&z) - 1e-12);
        }
    }

    #[test]
    fn gramian_psd() {
        let md = model(0.75, -1.0, 1.0, 160, 5);
        let gram = wave_obs_gramian(&md, 5, 4.0, BoundarySet::Plus, true).unwrap();
        let eig = nalgebra::linalg::SymmetricEigen::new(gram.matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        assert!(min >= -1e-12 * max, "min={min:.3e} max={max:.3e}");
    }

    #[test]
    fn kappa_monotone_in_modes_and_horizon() {
        let md = model(0.75, 0.0, 1.0, 256, 9);
        let lam = md.lambda();
        let ts = [0.5, 1.0, 2.0, 5.0, 12.0];
        for &t in &ts {
            let mut prev = f64::INFINITY;
            for j in [2usize, 4, 8] {
                let g = wave_obs_gramian(&md, j, t, BoundarySet::Plus, true).unwrap();
                let k = obs_constant_wave(&g, lam).unwrap();
                assert!(k <= prev * (1.0 + 1e-9) + 1e-14, "t={t} j={j}");
                prev = k;
            }
        }
        for j in [2usize, 4] {
            let mut prev = -1.0;
            for &t in &ts {
                let g = wave_obs_gramian(&md, j, t, BoundarySet::Plus, true).unwrap();
                let k = obs_constant_wave(&g, lam).unwrap();
                assert!(k >= prev * (1.0 - 1e-9) - 1e-14, "j={j} t={t}");
                prev = k;
            }
        }
    }

    #[test]
    fn kappa_positive_single_mode_large_horizon() {
        let md = model(0.75, 0.0, 1.0, 192, 2);
        let g = wave_obs_gramian(&md, 1, 20.0, BoundarySet::Plus, true).unwrap();
        let k = obs_constant_wave(&g, md.lambda()).unwrap();
        assert!(k > 0.0);
    }

    #[test]
    fn gamma_and_alpha_lookup_tables() {
        let f = |s: f64| FracOrder::new(s).unwrap();
        assert!((gamma_exponent(f(0.75), 1) - 0.25).abs() < 1e-15);
        assert!((gamma_exponent(f(0.5), 1) - 1.0).abs() < 1e-15);
        assert!((gamma_exponent(f(0.3), 1) - 7.0 / 6.0).abs() < 1e-12);
        assert!((gamma_exponent(f(0.2), 1) - 6.0).abs() < 1e-12);
        assert!((alpha_exponent(f(0.25)).unwrap() - 1.0).abs() < 1e-15);
        assert!((alpha_exponent(f(0.4)).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!(alpha_exponent(f(0.6)).is_err());
    }

    #[test]
    fn t0_estimate_nondecreasing_in_modes() {
        let md = model(0.75, 0.0, 1.0, 320, 16);
        let grid = crate::linalg::geomspace(0.1, 20.0, 24);
        let est = estimate_t0(&md, &[2, 4, 8, 16], &grid, DEFAULT_T0_THRESHOLD).unwrap();
        let t0s: Vec<f64> = est.entries.iter().map(|e| e.t0.expect("detected")).collect();
        for w in t0s.windows(2) {
            assert!(w[1] >= w[0], "t0 sequence {t0s:?}");
        }
        assert!(est.gamma_fit.is_some());
    }

    #[test]
    fn pohozaev_residual_small_and_shrinking() {
        // J=1, s=0.5 on (-1,1), T=4: residual ≤ 5e-2 and decreasing in n
        let mut prev = f64::INFINITY;
        for n in [128usize, 256, 512] {
            let md = model(0.5, -1.0, 1.0, n, 1);
            let state = ModalWaveState::new(vec![1.0], vec![0.0]).unwrap();
            let r = pohozaev_residual(&md, &state, 4.0).unwrap();
            assert!(r <= 5e-2, "n={n} r={r:.3e}");
            assert!(r < prev, "n={n}: {r:.3e} !< {prev:.3e}");
            prev = r;
        }
    }

    #[test]
    fn pohozaev_zero_state_and_quadratic_scaling() {
        let md = model(0.6, -1.0, 1.0, 128, 2);
        let zero = ModalWaveState::new(vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(pohozaev_residual(&md, &zero, 2.0).unwrap(), 0.0);
        // doubling (a,b) scales both sides by 4: relative residual unchanged
        let s1 = ModalWaveState::new(vec![0.8, -0.1], vec![0.2, 0.4]).unwrap();
        let s2 = ModalWaveState::new(vec![1.6, -0.2], vec![0.4, 0.8]).unwrap();
        let r1 = pohozaev_residual(&md, &s1, 2.0).unwrap();
        let r2 = pohozaev_residual(&md, &s2, 2.0).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn trig_integrals_against_quadrature() {
        let cases = [(1.3, 2.9, 1.7), (2.0, 2.0, 3.1), (0.3, 14.0, 0.9)];
        for (wi, wj, t) in cases {
            let (num, _) = crate::quad::integrate(|x| (wi * x).cos() * (wj * x).cos(), 0.0, t, 1e-13);
            assert!((int_cos_cos(wi, wj, t) - num).abs() < 1e-11);
            let (num, _) = crate::quad::integrate(|x| (wi * x).sin() * (wj * x).sin(), 0.0, t, 1e-13);
            assert!((int_sin_sin(wi, wj, t) - num).abs() < 1e-11);
            let (num, _) = crate::quad::integrate(|x| (wi * x).cos() * (wj * x).sin(), 0.0, t, 1e-13);
            assert!((int_cos_sin(wi, wj, t) - num).abs() < 1e-11);
        }
        // near-resonant pair exercises the series fallback
        let (num, _) = crate::quad::integrate(|x| (2.0 * x).cos() * ((2.0 + 1e-9) * x).cos(), 0.0, 5.0, 1e-13);
        assert!((int_cos_cos(2.0, 2.0 + 1e-9, 5.0) - num).abs() < 1e-10);
    }
}
