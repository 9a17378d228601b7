//! Modal dynamics of the fractional heat equation, heat observability, and
//! the transposition propagator for boundary-controlled trajectories.
//!
//! Free trajectories decay mode-by-mode, `u_j(t) = u_j(0) e^{-λ_j t}`.
//! Boundary-controlled trajectories are *defined* through the transposition
//! identity: pairing the controlled solution with any adjoint state `v`
//! (backward heat flow from data `v_T`) gives
//!
//! ```text
//! ∫ u(T) v_T dx = ∫ u_0 v(·,0) dx + A(s) ∫_0^T ∫_{∂Ω⁺} f · (v/ρ^s) dσ dt,
//! ```
//!
//! with `A(s) = Γ(s)Γ(1+s)`. Testing against `v_T = φ_j` yields the modal
//! update implemented here; no boundary-layer discretization of the
//! `ρ^{s-1}` blow-up is ever needed.

use nalgebra::DMatrix;

use crate::control::ControlSignal;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::linalg::{self, AffineFit};
use crate::operator::duality_constant;
use crate::spectral::SpectralModel;

pub use crate::operator::duality_constant as transposition_constant;

/// Modal coefficients of a heat trajectory at a given time.
#[derive(Clone, Debug)]
pub struct ModalHeatState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl ModalHeatState {
    pub fn new(coeffs: Vec<f64>) -> Result<ModalHeatState> {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite modal coefficient".into()));
        }
        Ok(ModalHeatState { coeffs, time: 0.0 })
    }

    pub fn mode_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Exact modal decay by `dt ≥ 0`.
pub fn evolve_heat(state: &ModalHeatState, lambda: &[f64], dt: f64) -> ModalHeatState {
    assert!(dt >= 0.0, "heat flow runs forward");
    ModalHeatState {
        coeffs: state
            .coeffs
            .iter()
            .zip(lambda)
            .map(|(u, l)| u * (-l * dt).exp())
            .collect(),
        time: state.time + dt,
    }
}

// ---------------------------------------------------------------------------
// heat observability Gramian
// ---------------------------------------------------------------------------

/// Boundary Gramian of the backward heat flow over `[0, T]`:
/// `G_ij = c · Σ_x w(x) t_i(x) t_j(x) (1 - e^{-(λ_i+λ_j)T}) / (λ_i+λ_j)`.
#[derive(Clone, Debug)]
pub struct HeatGramian {
    pub matrix: DMatrix<f64>,
    pub horizon: f64,
    pub weighted: bool,
    /// Whether the duality constant `A(s)` multiplies the entries.
    pub with_constant: bool,
}

/// Closed-form heat Gramian on the first `modes` modes over the plus
/// boundary. `weighted` applies the multiplier weight `x·ν`; `with_constant`
/// multiplies by `A(s) = Γ(s)Γ(1+s)` (the control functional normalization).
pub fn heat_obs_gramian(
    model: &SpectralModel,
    modes: usize,
    horizon: f64,
    weighted: bool,
    with_constant: bool,
) -> Result<HeatGramian> {
    if modes > model.count() {
        return Err(Error::Domain(format!(
            "gramian on {modes} modes exceeds basis size {}",
            model.count()
        )));
    }
    if horizon <= 0.0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let lam = model.lambda();
    let constant = if with_constant { duality_constant(model.s) } else { 1.0 };
    let pts = model.plus_boundary_with_traces();
    let entries = crate::par::map_indexed(modes * modes, |flat| {
        let i = flat / modes;
        let j = flat % modes;
        let lij = lam[i] + lam[j];
        let time_factor = -(-lij * horizon).exp_m1() / lij;
        let mut tt = 0.0;
        for &(bp, p) in &pts {
            let w = if weighted { bp.weight() } else { 1.0 };
            tt += w * model.trace(p, i) * model.trace(p, j);
        }
        constant * tt * time_factor
    });
    let mut g = DMatrix::zeros(modes, modes);
    for i in 0..modes {
        for j in 0..modes {
            g[(i, j)] = entries[i * modes + j];
        }
    }
    for i in 0..modes {
        for j in (i + 1)..modes {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(HeatGramian { matrix: g, horizon, weighted, with_constant })
}

// ---------------------------------------------------------------------------
// heat observability constant and its short-time blow-up
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct HeatObsPoint {
    pub horizon: f64,
    pub kappa: f64,
    /// Set when the constant fell below the floating-point floor or the
    /// Gramian spectrum could not be resolved even in extended precision.
    pub saturated: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct HeatObsCurve {
    pub modes: usize,
    pub entries: Vec<HeatObsPoint>,
    /// Affine fit of `log(1/κ)` against `1/T` over unsaturated entries.
    pub blow_up_fit: Option<AffineFit>,
}

const KAPPA_FLOOR: f64 = 1e-300;
const DD_RESOLUTION: f64 = 1e-28;

/// Observability constant of the forward heat flow, normalized by the final
/// state: `κ_heat(T,J) = min_{‖q(T)‖=1} ∫_0^T ∫_{∂Ω⁺} (x·ν) |q/ρ^s|²`.
///
/// Computed through the inverse form `κ = 1/λ_max(D⁻¹ G⁻¹ D⁻¹)` with
/// `D = diag(e^{λ_j T})`, which stays representable when the direct matrix
/// `D G D` (norm ~ `e^{2λ_J T}`) does not. `G⁻¹` is formed from a
/// double-double Jacobi eigendecomposition.
pub fn obs_constant_heat(model: &SpectralModel, modes: usize, horizon: f64) -> Result<HeatObsPoint> {
    let gram = heat_obs_gramian(model, modes, horizon, true, false)?;
    let lam = model.lambda();
    let (sig, vecs) = linalg::jacobi_eigen_dd(&gram.matrix);
    let sig_max = sig[modes - 1].to_f64();
    let sig_min = sig[0].to_f64();
    if !(sig_min > 0.0) || sig_min < DD_RESOLUTION * sig_max {
        return Ok(HeatObsPoint { horizon, kappa: 0.0, saturated: true });
    }
    // H = D^{-1} V Σ^{-1} V^T D^{-1}, assembled in double-double
    let decay: Vec<Dd> = (0..modes)
        .map(|j| (Dd::from_f64(-lam[j]) * Dd::from_f64(horizon)).exp())
        .collect();
    let mut h = DMatrix::zeros(modes, modes);
    for i in 0..modes {
        for j in i..modes {
            let mut acc = Dd::ZERO;
            for k in 0..modes {
                acc = acc + vecs[k][i] * vecs[k][j] / sig[k];
            }
            let v = (decay[i] * acc * decay[j]).to_f64();
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Ok(HeatObsPoint { horizon, kappa: 0.0, saturated: true });
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !(lam_max > 0.0) || !lam_max.is_finite() {
        return Ok(HeatObsPoint { horizon, kappa: 0.0, saturated: true });
    }
    let kappa = 1.0 / lam_max;
    Ok(HeatObsPoint {
        horizon,
        kappa,
        saturated: kappa < KAPPA_FLOOR,
    })
}

/// `κ_heat` over a horizon grid plus the `exp(C/T)` blow-up fit.
pub fn heat_obs_curve(model: &SpectralModel, modes: usize, t_grid: &[f64]) -> Result<HeatObsCurve> {
    let mut entries = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        entries.push(obs_constant_heat(model, modes, t)?);
    }
    let usable: Vec<&HeatObsPoint> = entries.iter().filter(|e| !e.saturated).collect();
    let blow_up_fit = if usable.len() >= 3 {
        let x: Vec<f64> = usable.iter().map(|e| 1.0 / e.horizon).collect();
        let y: Vec<f64> = usable.iter().map(|e| (1.0 / e.kappa).ln()).collect();
        Some(linalg::fit_affine(&x, &y))
    } else {
        None
    };
    Ok(HeatObsCurve { modes, entries, blow_up_fit })
}

// ---------------------------------------------------------------------------
// transposition propagator
// ---------------------------------------------------------------------------

/// Propagate a boundary-controlled trajectory over `[t0, t1]`, tracking the
/// first `tracked` modes:
///
/// `u_j(t1) = e^{-λ_j (t1-t0)} u_j(t0)
///            + A(s) Σ_{x∈∂Ω⁺} t_j(x) ∫_{t0}^{t1} f(x,t) e^{-λ_j (t1-t)} dt`.
///
/// For the exponential control family the time integral is closed form; the
/// per-mode accumulation is compensated (double-double) so that closed-loop
/// residuals reflect the control itself, not the bookkeeping.
pub fn propagate_controlled(
    model: &SpectralModel,
    state: &ModalHeatState,
    control: &ControlSignal,
    interval: (f64, f64),
    tracked: usize,
) -> Result<ModalHeatState> {
    let (t0, t1) = interval;
    if t1 < t0 {
        return Err(Error::Domain("propagation interval reversed".into()));
    }
    if tracked > model.count() {
        return Err(Error::Domain("tracked window exceeds basis size".into()));
    }
    if (control.t0 - t0).abs() > 1e-12 || (control.t1 - t1).abs() > 1e-12 {
        return Err(Error::Domain(
            "control horizon does not match the propagation interval".into(),
        ));
    }
    let lam = model.lambda();
    let a_s = duality_constant(model.s);
    let dt = t1 - t0;
    let pts = model.plus_boundary_with_traces();
    let mut coeffs = Vec::with_capacity(tracked);
    for j in 0..tracked {
        let decay = (-lam[j] * dt).exp();
        let mut acc = Dd::from_f64(if j < state.coeffs.len() {
            state.coeffs[j] * decay
        } else {
            0.0
        });
        for &(bp, p) in &pts {
            let tj = model.trace(p, j);
            for (i, &ci) in control.coefficients.iter().enumerate() {
                let li = control.eigenvalues[i];
                let ti = control.trace_at(bp, i);
                // ∫_{t0}^{t1} e^{-λ_i (t1-t)} e^{-λ_j (t1-t)} dt
                let lij = li + lam[j];
                let w = -(-lij * dt).exp_m1() / lij;
                acc = acc + Dd::from_f64(a_s * tj * ci * ti * w);
            }
        }
        coeffs.push(acc.to_f64());
    }
    Ok(ModalHeatState { coeffs, time: state.time + dt })
}

/// Propagate through a list of consecutive control pieces, free-decaying
/// across gaps and after the last piece, up to total time `horizon`.
pub fn propagate_piecewise(
    model: &SpectralModel,
    state: &ModalHeatState,
    controls: &[ControlSignal],
    horizon: f64,
    tracked: usize,
) -> Result<ModalHeatState> {
    let lam = model.lambda();
    let mut cur = ModalHeatState {
        coeffs: {
            let mut c = state.coeffs.clone();
            c.resize(tracked, 0.0);
            c
        },
        time: state.time,
    };
    let start = state.time;
    let mut t = 0.0; // relative clock
    for piece in controls {
        if piece.t0 > t + 1e-14 {
            cur = evolve_heat(&cur, lam, piece.t0 - t);
        }
        cur = propagate_controlled(model, &cur, piece, (piece.t0, piece.t1), tracked)?;
        t = piece.t1;
    }
    if horizon > t {
        cur = evolve_heat(&cur, lam, horizon - t);
    }
    cur.time = start + horizon;
    Ok(cur)
}

/// Residual of the transposition identity for one adjoint datum `v_T`
/// (coefficients on the first `J` modes):
///
/// `A(s) ∫∫ f (v/ρ^s) + ∫ u0 v(0) - ∫ u(T) v_T`, normalized by the largest
/// term. All three pieces are independent closed forms.
pub fn transposition_residual(
    model: &SpectralModel,
    u0: &ModalHeatState,
    control: &ControlSignal,
    horizon: f64,
    v_t: &[f64],
    tracked: usize,
) -> Result<f64> {
    let lam = model.lambda();
    let a_s = duality_constant(model.s);
    let j = v_t.len();
    // boundary pairing A(s) Σ_x Σ_i Σ_k c_i t_i(x) vT_k t_k(x) ∫ e^{-λ_i(T-t)} e^{-λ_k(T-t)}
    let mut pairing = Dd::ZERO;
    for &(bp, p) in &model.plus_boundary_with_traces() {
        for (i, &ci) in control.coefficients.iter().enumerate() {
            let li = control.eigenvalues[i];
            let ti = control.trace_at(bp, i);
            for (k, &vk) in v_t.iter().enumerate().take(j) {
                let lik = li + lam[k];
                let w = -(-lik * horizon).exp_m1() / lik;
                pairing = pairing + Dd::from_f64(a_s * ci * ti * vk * model.trace(p, k) * w);
            }
        }
    }
    // ∫ u0 v(·,0) = Σ_k u0_k vT_k e^{-λ_k T}
    let mut initial = Dd::ZERO;
    for (k, &vk) in v_t.iter().enumerate() {
        if k < u0.coeffs.len() {
            initial = initial + Dd::from_f64(u0.coeffs[k] * vk * (-lam[k] * horizon).exp());
        }
    }
    // ∫ u(T) v_T, with u(T) from the propagator
    let u_t = propagate_controlled(model, u0, control, (control.t0, control.t1), tracked.max(j))?;
    let mut terminal = Dd::ZERO;
    for (k, &vk) in v_t.iter().enumerate() {
        terminal = terminal + Dd::from_f64(u_t.coeffs[k] * vk);
    }
    let residual = (pairing + initial - terminal).to_f64().abs();
    let scale = pairing
        .to_f64()
        .abs()
        .max(initial.to_f64().abs())
        .max(terminal.to_f64().abs())
        .max(u0.norm() * norm_slice(v_t));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(residual / scale)
}

fn norm_slice(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Tail bound `Σ_{j>M} e^{-2 λ_j τ}` for the untracked modes, using the
/// fitted eigenvalue growth law to extrapolate beyond the basis.
pub fn truncation_tail_bound(model: &SpectralModel, tracked: usize, tau: f64) -> f64 {
    let lam = model.lambda();
    let m = model.count();
    let mut tail = 0.0;
    for l in lam.iter().skip(tracked) {
        tail += (-2.0 * l * tau).exp();
    }
    if m >= 8 {
        // extrapolate with the empirical growth λ_j ≈ c j^p
        let x: Vec<f64> = (m / 2..m).map(|j| ((j + 1) as f64).ln()).collect();
        let y: Vec<f64> = (m / 2..m).map(|j| lam[j].ln()).collect();
        let fit = linalg::fit_affine(&x, &y);
        let mut j = m + 1;
        loop {
            let lj = (fit.intercept + fit.slope * (j as f64).ln()).exp();
            let term = (-2.0 * lj * tau).exp();
            tail += term;
            if term < 1e-300 || j > m + 100_000 {
                break;
            }
            j += 1;
        }
    }
    tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_operator, FracOrder, IntervalDomain, Mesh};
    use crate::spectral::{SpectralModel, DEFAULT_FIT_NODES};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn model(s: f64, n: usize, m: usize) -> SpectralModel {
        let domain = IntervalDomain::new(0.0, 1.0).unwrap();
        let mesh = Mesh::uniform(domain, n).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(s).unwrap()).unwrap();
        SpectralModel::build(&op, m, DEFAULT_FIT_NODES).unwrap()
    }

    #[test]
    fn duality_constant_values() {
        // Γ(1/2)Γ(3/2) = π/2 by hand; near s=1 the constant tends to 1
        let half = duality_constant(FracOrder::new(0.5).unwrap());
        assert!((half - std::f64::consts::PI / 2.0).abs() < 1e-14);
        let near_one = duality_constant(FracOrder::new(0.999).unwrap());
        assert!((near_one - 1.0).abs() <= 5e-3, "{near_one}");
        // frozen 40-digit value
        assert!((near_one - 1.000_155_588_834_886_6).abs() < 1e-12);
        let again = duality_constant(FracOrder::new(0.5).unwrap());
        assert_eq!(half.to_bits(), again.to_bits());
    }

    #[test]
    fn heat_decay_basics() {
        let lam = [2.0, 5.0];
        let s0 = ModalHeatState::new(vec![1.0, -0.5]).unwrap();
        let same = evolve_heat(&s0, &lam, 0.0);
        assert_eq!(same.coeffs, s0.coeffs);
        let halved = evolve_heat(&s0, &lam, (2.0f64).ln() / 2.0);
        assert!((halved.coeffs[0] - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let st = ModalHeatState::new(u).unwrap();
            let early = evolve_heat(&st, &lam, 0.3);
            let late = evolve_heat(&st, &lam, 0.9);
            assert!(late.norm() <= early.norm());
        }
    }

    #[test]
    fn gramian_closed_form_matches_quadrature() {
        let md = model(0.75, 160, 6);
        let horizon = 0.8;
        let g = heat_obs_gramian(&md, 6, horizon, true, false).unwrap();
        let lam = md.lambda();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let i = rng.gen_range(0..6);
            let j = rng.gen_range(0..6);
            let (pt, p) = md.plus_boundary_with_traces()[0];
            let ti = md.trace(p, i);
            let tj = md.trace(p, j);
            let (num, _) = crate::quad::integrate(
                |t| (-(lam[i] + lam[j]) * (horizon - t)).exp(),
                0.0,
                horizon,
                1e-12,
            );
            let expected = pt.weight() * ti * tj * num;
            let rel = (g.matrix[(i, j)] - expected).abs() / expected.abs();
            assert!(rel < 1e-9, "({i},{j}): rel={rel:.3e}");
        }
    }

    #[test]
    fn gramian_vanishes_at_small_horizon_and_is_psd() {
        let md = model(0.6, 160, 5);
        let g = heat_obs_gramian(&md, 5, 1e-9, true, false).unwrap();
        assert!(g.matrix.iter().all(|v| v.abs() < 1e-8));
        let g2 = heat_obs_gramian(&md, 5, 1.0, true, false).unwrap();
        let eig = nalgebra::linalg::SymmetricEigen::new(g2.matrix.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        assert!(min >= -1e-12 * max);
    }

    #[test]
    fn kappa_heat_monotonicities() {
        let md = model(0.75, 256, 9);
        let ts = [0.1, 0.2, 0.4];
        for &t in &ts {
            let k2 = obs_constant_heat(&md, 2, t).unwrap().kappa;
            let k4 = obs_constant_heat(&md, 4, t).unwrap().kappa;
            let k8 = obs_constant_heat(&md, 8, t).unwrap().kappa;
            assert!(k4 <= k2 * (1.0 + 1e-9), "t={t}");
            assert!(k8 <= k4 * (1.0 + 1e-9), "t={t}");
        }
        for j in [2usize, 4, 8] {
            let mut prev = 0.0;
            for &t in &ts {
                let k = obs_constant_heat(&md, j, t).unwrap().kappa;
                assert!(k >= prev * (1.0 - 1e-9), "j={j} t={t}");
                prev = k;
            }
        }
    }

    #[test]
    fn blow_up_fit_quality() {
        let md = model(0.75, 256, 8);
        let grid = crate::linalg::geomspace(0.05, 0.5, 12);
        let curve = heat_obs_curve(&md, 8, &grid).unwrap();
        let fit = curve.blow_up_fit.expect("enough unsaturated points");
        assert!(fit.r_squared >= 0.95, "R2={:.4}", fit.r_squared);
        assert!(fit.slope > 0.0);
    }

    #[test]
    fn free_decay_matches_evolve_heat() {
        let md = model(0.6, 128, 6);
        let u0 = ModalHeatState::new(vec![1.0, -0.3, 0.2, 0.0, 0.5, -0.1]).unwrap();
        let zero = crate::control::ControlSignal::zero(&md, 0.0, 0.7);
        let via_ctrl = propagate_controlled(&md, &u0, &zero, (0.0, 0.7), 6).unwrap();
        let free = evolve_heat(&u0, md.lambda(), 0.7);
        for k in 0..6 {
            assert_eq!(via_ctrl.coeffs[k].to_bits(), free.coeffs[k].to_bits());
        }
    }

    #[test]
    fn propagator_is_affine_in_data_and_control() {
        let md = model(0.75, 128, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u0 = ModalHeatState::new((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let coeffs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = crate::control::ControlSignal::from_coefficients(&md, coeffs, 0.0, 0.9);
        let alpha = 1.7;
        let scaled_u0 = ModalHeatState::new(u0.coeffs.iter().map(|v| alpha * v).collect()).unwrap();
        let scaled_f = f.scaled(alpha);
        let base = propagate_controlled(&md, &u0, &f, (0.0, 0.9), 5).unwrap();
        let scaled = propagate_controlled(&md, &scaled_u0, &scaled_f, (0.0, 0.9), 5).unwrap();
        for k in 0..5 {
            assert!(
                (scaled.coeffs[k] - alpha * base.coeffs[k]).abs() <= 1e-12 * base.norm().max(1.0),
                "mode {k}"
            );
        }
    }

    #[test]
    fn transposition_identity_closes() {
        let md = model(0.75, 192, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u0 = ModalHeatState::new((0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = crate::control::ControlSignal::from_coefficients(&md, coeffs, 0.0, 0.6);
        for _ in 0..5 {
            let v_t: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = transposition_residual(&md, &u0, &f, 0.6, &v_t, 8).unwrap();
            assert!(r <= 1e-9, "residual {r:.3e}");
        }
    }

    #[test]
    fn norm_decay_closed_form() {
        let md = model(0.6, 128, 4);
        let u0 = ModalHeatState::new(vec![0.4, -1.0, 0.7, 0.2]).unwrap();
        let t = 0.43;
        let evolved = evolve_heat(&u0, md.lambda(), t);
        let direct: f64 = u0
            .coeffs
            .iter()
            .zip(md.lambda())
            .map(|(u, l)| u * u * (-2.0 * l * t).exp())
            .sum::<f64>()
            .sqrt();
        assert!((evolved.norm() - direct).abs() < 1e-15 * direct.max(1.0));
    }
}
