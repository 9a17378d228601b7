//! Generalized eigenproblem of the discrete pair `(A, B)` and the fractional
//! boundary traces of its eigenfunctions.
//!
//! Eigenfunctions are mass-normalized, `∫ φ_j² = 1`, so the Rayleigh quotient
//! identity `∫ |∇^s φ_j|² = φ_jᵀ A φ_j = λ_j` holds. The boundary trace
//! `t_j(x) = (φ_j/ρ^s)(x)` is finite and generically nonzero at each endpoint;
//! it is recovered from nodal values by a least-squares fit of the local model
//! `φ(x) ≈ t·ρ^s (1 + c·ρ)` over the nodes nearest the boundary point.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, generalized_symmetric_eigen};
use crate::operator::{BoundaryPoint, FracOrder, IntervalDomain, Mesh, OperatorPair};

/// Provenance of a computed basis.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BasisMeta {
    pub s: f64,
    pub domain: (f64, f64),
    pub mesh_id: String,
    pub n: usize,
}

/// First `M` eigenpairs of `(A, B)`, ascending, mass-orthonormal.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// `n × M`; column `j` holds the nodal values of `φ_{j+1}`.
    pub eigenvectors: DMatrix<f64>,
    pub meta: BasisMeta,
}

impl SpectralBasis {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Solve for the first `m` eigenpairs and enforce the basis invariants.
pub fn solve_eigens(op: &OperatorPair, m: usize) -> Result<SpectralBasis> {
    if m > op.mesh.n {
        return Err(Error::Eigen(format!(
            "requested {m} modes on a mesh with {} unknowns",
            op.mesh.n
        )));
    }
    let (values, vectors) = generalized_symmetric_eigen(&op.stiffness, &op.mass, m)?;
    if values[0] <= 0.0 {
        return Err(Error::Eigen(format!(
            "pencil not positive definite: smallest eigenvalue {:.6e}",
            values[0]
        )));
    }
    // residual check ||A φ - λ B φ|| <= 1e-9 λ ||φ||
    for (k, &lam) in values.iter().enumerate() {
        let phi = vectors.column(k);
        let aphi = &op.stiffness * phi;
        let bphi = op.mass.matvec(phi.as_slice());
        let mut res2 = 0.0;
        for i in 0..op.mesh.n {
            let r = aphi[i] - lam * bphi[i];
            res2 += r * r;
        }
        let limit = 1e-9 * lam * phi.norm();
        if res2.sqrt() > limit {
            return Err(Error::Eigen(format!(
                "eigenpair {k}: residual {:.3e} exceeds {limit:.3e} (λ={lam:.6e})",
                res2.sqrt()
            )));
        }
    }
    Ok(SpectralBasis {
        eigenvalues: values,
        eigenvectors: vectors,
        meta: BasisMeta {
            s: op.s.value(),
            domain: (op.domain.left, op.domain.right),
            mesh_id: op.mesh.id(),
            n: op.mesh.n,
        },
    })
}

/// One fitted trace value with its diagnostics.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TraceFit {
    pub value: f64,
    /// Relative RMS misfit of the two-parameter boundary model.
    pub residual: f64,
    pub condition: f64,
}

/// Traces of every basis function at one boundary point.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoundaryTraces {
    pub point: BoundaryPoint,
    pub fits: Vec<TraceFit>,
}

/// Fractional boundary traces `t_j(x) ≈ (φ_j/ρ^s)(x)` for `x ∈ ∂Ω`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TraceSet {
    pub per_point: Vec<BoundaryTraces>,
    pub fit_nodes: usize,
}

impl TraceSet {
    /// Trace of mode `j` (0-based) at boundary point index `p` (0 = left).
    pub fn value(&self, p: usize, j: usize) -> f64 {
        self.per_point[p].fits[j].value
    }
}

pub const DEFAULT_FIT_NODES: usize = 4;
const FIT_CONDITION_LIMIT: f64 = 1e8;

/// Least-squares boundary-trace extraction over the `k_nodes` nodes nearest
/// each endpoint. Model: `φ ≈ t ρ^s + d ρ^{s+1}`, first-order correction for
/// the Hölder continuity of `φ/ρ^s` up to the boundary.
pub fn boundary_traces(
    basis: &SpectralBasis,
    mesh: &Mesh,
    domain: IntervalDomain,
    k_nodes: usize,
) -> Result<TraceSet> {
    if k_nodes < 3 {
        return Err(Error::Domain(format!("trace fit needs k >= 3 nodes, got {k_nodes}")));
    }
    if k_nodes > mesh.n {
        return Err(Error::Domain("more fit nodes than mesh nodes".into()));
    }
    let s = basis.meta.s;
    let mut per_point = Vec::with_capacity(2);
    for bp in domain.boundary() {
        // nodes nearest this endpoint are consecutive
        let idx: Vec<usize> = if bp.coordinate == domain.left {
            (0..k_nodes).collect()
        } else {
            ((mesh.n - k_nodes)..mesh.n).rev().collect()
        };
        let rho: Vec<f64> = idx.iter().map(|&i| (mesh.nodes[i] - bp.coordinate).abs()).collect();
        // two-column design matrix [ρ^s, ρ^{s+1}]
        let col0: Vec<f64> = rho.iter().map(|&r| r.powf(s)).collect();
        let col1: Vec<f64> = rho.iter().map(|&r| r.powf(s + 1.0)).collect();
        let g00: f64 = col0.iter().map(|v| v * v).sum();
        let g01: f64 = col0.iter().zip(&col1).map(|(u, v)| u * v).sum();
        let g11: f64 = col1.iter().map(|v| v * v).sum();
        // singular values of the design matrix from its 2x2 Gram
        let tr = g00 + g11;
        let det = g00 * g11 - g01 * g01;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let sig_max = (tr / 2.0 + disc).sqrt();
        let sig_min = (tr / 2.0 - disc).max(0.0).sqrt();
        let condition = if sig_min > 0.0 { sig_max / sig_min } else { f64::INFINITY };
        if condition > FIT_CONDITION_LIMIT {
            return Err(Error::IllConditionedFit {
                cond: condition,
                limit: FIT_CONDITION_LIMIT,
            });
        }
        let mut fits = Vec::with_capacity(basis.count());
        for j in 0..basis.count() {
            let y: Vec<f64> = idx.iter().map(|&i| basis.eigenvectors[(i, j)]).collect();
            let b0: f64 = col0.iter().zip(&y).map(|(u, v)| u * v).sum();
            let b1: f64 = col1.iter().zip(&y).map(|(u, v)| u * v).sum();
            let t = (g11 * b0 - g01 * b1) / det;
            let d = (g00 * b1 - g01 * b0) / det;
            let mut miss = 0.0;
            let mut norm = 0.0;
            for ((&c0, &c1), &yv) in col0.iter().zip(&col1).zip(&y) {
                let p = t * c0 + d * c1;
                miss += (yv - p) * (yv - p);
                norm += yv * yv;
            }
            let residual = if norm > 0.0 { (miss / norm).sqrt() } else { 0.0 };
            fits.push(TraceFit { value: t, residual, condition });
        }
        per_point.push(BoundaryTraces { point: bp, fits });
    }
    Ok(TraceSet { per_point, fit_nodes: k_nodes })
}

/// Basis, traces, and the geometry they were computed on, bundled for the
/// downstream wave/heat/control modules.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub basis: SpectralBasis,
    pub traces: TraceSet,
    pub domain: IntervalDomain,
    pub mesh: Mesh,
    pub s: FracOrder,
}

impl SpectralModel {
    pub fn build(op: &OperatorPair, m: usize, k_nodes: usize) -> Result<SpectralModel> {
        let basis = solve_eigens(op, m)?;
        let traces = boundary_traces(&basis, &op.mesh, op.domain, k_nodes)?;
        Ok(SpectralModel {
            basis,
            traces,
            domain: op.domain,
            mesh: op.mesh.clone(),
            s: op.s,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.basis.eigenvalues
    }

    pub fn count(&self) -> usize {
        self.basis.count()
    }

    /// All boundary points paired with their trace-set index (0 = left).
    pub fn boundary_with_traces(&self) -> Vec<(BoundaryPoint, usize)> {
        self.domain
            .boundary()
            .into_iter()
            .enumerate()
            .map(|(i, b)| (b, i))
            .collect()
    }

    /// Plus-boundary points (where `x·ν > 0`) with trace indices.
    pub fn plus_boundary_with_traces(&self) -> Vec<(BoundaryPoint, usize)> {
        self.boundary_with_traces()
            .into_iter()
            .filter(|(b, _)| b.weight() > 0.0)
            .collect()
    }

    pub fn trace(&self, point_idx: usize, mode: usize) -> f64 {
        self.traces.value(point_idx, mode)
    }
}

// ---------------------------------------------------------------------------
// eigenfunction-growth diagnostics
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct GrowthFit {
    pub quantity: &'static str,
    pub fitted_slope: f64,
    /// Exponent bound claimed for this quantity, when the current `s` is in
    /// the range where the bound applies.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RegularityReport {
    pub s: f64,
    pub modes_used: usize,
    pub fits: Vec<GrowthFit>,
}

const SLOPE_MARGIN: f64 = 0.15;

/// Fit eigenfunction-growth exponents against their regularity bounds:
/// the gradient-energy ratio `∫|∇φ_j|² / ∫|∇^s φ_j|²` (bound `2(1-s)` for
/// `s > 1/2`), the sup norm (bound `N/4s` for `s < 1/4`, `N = 1`), and the
/// gradient `L¹` norm (bound `N/4s + 1` for `s < 1/4`).
///
/// Diagnostic only: out-of-bound slopes are reported, never fatal.
pub fn regularity_diagnostics(
    basis: &SpectralBasis,
    _op: &OperatorPair,
    mesh: &Mesh,
) -> Result<RegularityReport> {
    let m = basis.count();
    if m < 20 {
        return Err(Error::Domain(format!("diagnostics need >= 20 modes, got {m}")));
    }
    let s = basis.meta.s;
    let h = mesh.h;
    let n = mesh.n;
    let mut grad_ratio = Vec::with_capacity(m);
    let mut sup = Vec::with_capacity(m);
    let mut grad_l1 = Vec::with_capacity(m);
    for j in 0..m {
        let phi = basis.eigenvectors.column(j);
        let mut g2 = 0.0;
        let mut g1 = 0.0;
        let mut mx = 0.0f64;
        for i in 0..n {
            // central differences inside, one-sided at the first/last node
            let d = if i == 0 {
                (phi[1] - phi[0]) / h
            } else if i == n - 1 {
                (phi[n - 1] - phi[n - 2]) / h
            } else {
                (phi[i + 1] - phi[i - 1]) / (2.0 * h)
            };
            g2 += d * d * h;
            g1 += d.abs() * h;
            mx = mx.max(phi[i].abs());
        }
        grad_ratio.push(g2 / basis.eigenvalues[j]);
        sup.push(mx);
        grad_l1.push(g1);
    }
    let log_lam: Vec<f64> = basis.eigenvalues.iter().map(|l| l.ln()).collect();
    // drop the first few modes; these are asymptotic statements
    let lo = 4usize;
    let fit_of = |q: &[f64]| {
        let x: Vec<f64> = log_lam[lo..].to_vec();
        let y: Vec<f64> = q[lo..].iter().map(|v| v.ln()).collect();
        linalg::fit_affine(&x, &y).slope
    };
    let mk = |quantity: &'static str, slope: f64, bound: Option<f64>| GrowthFit {
        quantity,
        fitted_slope: slope,
        bound,
        within_bound: bound.map(|b| slope <= b + SLOPE_MARGIN),
    };
    let fits = vec![
        mk(
            "grad_energy_ratio",
            fit_of(&grad_ratio),
            (s > 0.5).then(|| 2.0 * (1.0 - s)),
        ),
        mk("sup_norm", fit_of(&sup), (s < 0.25).then(|| 1.0 / (4.0 * s))),
        mk(
            "grad_l1",
            fit_of(&grad_l1),
            (s < 0.25).then(|| 1.0 / (4.0 * s) + 1.0),
        ),
    ];
    Ok(RegularityReport { s, modes_used: m, fits })
}

// ---------------------------------------------------------------------------
// versioned export container
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
pub struct BasisExport<'a> {
    pub schema: u32,
    pub meta: &'a BasisMeta,
    pub eigenvalues: &'a [f64],
    pub traces: &'a TraceSet,
    /// Nodal values, one row per mode.
    pub nodal_values: Vec<Vec<f64>>,
}

pub const BASIS_SCHEMA_VERSION: u32 = 1;

impl SpectralModel {
    pub fn export(&self) -> BasisExport<'_> {
        let m = self.count();
        let nodal_values = (0..m)
            .map(|j| self.basis.eigenvectors.column(j).iter().copied().collect())
            .collect();
        BasisExport {
            schema: BASIS_SCHEMA_VERSION,
            meta: &self.basis.meta,
            eigenvalues: &self.basis.eigenvalues,
            traces: &self.traces,
            nodal_values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_operator, FracOrder, IntervalDomain, Mesh};

    fn model(s: f64, a: f64, b: f64, n: usize, m: usize) -> SpectralModel {
        let domain = IntervalDomain::new(a, b).unwrap();
        let mesh = Mesh::uniform(domain, n).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(s).unwrap()).unwrap();
        SpectralModel::build(&op, m, DEFAULT_FIT_NODES).unwrap()
    }

    #[test]
    fn eigenvalues_positive_and_increasing() {
        let md = model(0.5, -1.0, 1.0, 128, 10);
        let lam = md.lambda();
        assert!(lam[0] > 0.0);
        for w in lam.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn mass_orthonormality_and_rayleigh_identity() {
        let domain = IntervalDomain::new(0.0, 1.0).unwrap();
        let mesh = Mesh::uniform(domain, 192).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(0.7).unwrap()).unwrap();
        let basis = solve_eigens(&op, 12).unwrap();
        for i in 0..12 {
            let vi = basis.eigenvectors.column(i);
            let bvi = op.mass.matvec(vi.as_slice());
            for j in 0..12 {
                let vj = basis.eigenvectors.column(j);
                let dot: f64 = vj.iter().zip(&bvi).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({i},{j}) -> {dot}");
            }
            let avi = &op.stiffness * vi;
            let rayleigh: f64 = vi.iter().zip(avi.iter()).map(|(a, b)| a * b).sum();
            let rel = (rayleigh - basis.eigenvalues[i]).abs() / basis.eigenvalues[i];
            assert!(rel < 1e-10, "mode {i}: rayleigh error {rel:.3e}");
        }
    }

    #[test]
    fn weyl_exponent_matches_2s() {
        // λ_j ~ C j^{2s} in one dimension; slope over j in [10, 40]
        for &s in &[0.25, 0.5, 0.75] {
            let md = model(s, 0.0, 1.0, 320, 45);
            let x: Vec<f64> = (10..=40).map(|j| (j as f64).ln()).collect();
            let y: Vec<f64> = (10..=40).map(|j| md.lambda()[j - 1].ln()).collect();
            let fit = crate::linalg::fit_affine(&x, &y);
            assert!(
                (fit.slope - 2.0 * s).abs() <= 0.1,
                "s={s}: slope {:.4} vs {}",
                fit.slope,
                2.0 * s
            );
        }
    }

    #[test]
    fn eigenvalue_self_convergence_under_refinement() {
        let coarse = model(0.6, 0.0, 1.0, 256, 10);
        let fine = model(0.6, 0.0, 1.0, 512, 10);
        for j in 0..10 {
            let rel = (fine.lambda()[j] - coarse.lambda()[j]).abs() / coarse.lambda()[j];
            assert!(rel <= 0.01, "j={j} rel={rel:.4e}");
        }
    }

    #[test]
    fn traces_scale_linearly_with_eigenvector() {
        let md = model(0.6, 0.0, 1.0, 128, 4);
        let mut scaled = md.basis.clone();
        let alpha = 2.5;
        scaled.eigenvectors *= alpha;
        let t0 = &md.traces;
        let t1 = boundary_traces(&scaled, &md.mesh, md.domain, DEFAULT_FIT_NODES).unwrap();
        for p in 0..2 {
            for j in 0..4 {
                let ratio = t1.value(p, j) / t0.value(p, j);
                assert!((ratio - alpha).abs() < 1e-12, "p={p} j={j} ratio={ratio}");
            }
        }
    }

    #[test]
    fn trace_cauchy_sequence_under_refinement() {
        // successive gap shrinks by >= 1.5 x
        let mut vals = Vec::new();
        for n in [256usize, 512, 1024] {
            let md = model(0.5, 0.0, 1.0, n, 1);
            vals.push(md.trace(1, 0).abs());
        }
        let g1 = (vals[1] - vals[0]).abs();
        let g2 = (vals[2] - vals[1]).abs();
        assert!(g1 / g2 >= 1.5, "gap ratio {:.3}", g1 / g2);
    }

    #[test]
    fn reflection_symmetry_of_traces() {
        // on (-1,1), |t_j(-1)| = |t_j(1)| for every mode
        let md = model(0.75, -1.0, 1.0, 512, 8);
        for j in 0..8 {
            let l = md.trace(0, j).abs();
            let r = md.trace(1, j).abs();
            assert!((l - r).abs() / r < 1e-3, "j={j}: {l} vs {r}");
        }
    }

    #[test]
    fn trace_matches_multiplier_identity() {
        // stationary multiplier identity: Σ_{x∈∂Ω} (x·ν) t_j(x)² = 2 s λ_j / Γ(1+s)²
        // on (0,1) only the right endpoint carries weight
        use statrs::function::gamma::gamma;
        for &s in &[0.6, 0.75, 0.9] {
            let md = model(s, 0.0, 1.0, 512, 6);
            let g2 = gamma(1.0 + s) * gamma(1.0 + s);
            for j in 0..6 {
                let lhs = md.trace(1, j) * md.trace(1, j);
                let rhs = 2.0 * s * md.lambda()[j] / g2;
                let rel = (lhs - rhs).abs() / rhs;
                assert!(rel < 0.03, "s={s} j={j}: rel={rel:.4}");
            }
        }
    }

    #[test]
    fn trace_stability_under_fit_width() {
        // K vs K+2 nodes at n=1024: ≤ 1e-2 relative on the control-range grid
        // s ∈ {0.6, 0.75, 0.9} (smaller s is dominated by the boundary-layer
        // error of the P1 space and is reported, not asserted)
        for &s in &[0.6, 0.75, 0.9] {
            let domain = IntervalDomain::new(0.0, 1.0).unwrap();
            let mesh = Mesh::uniform(domain, 1024).unwrap();
            let op = assemble_operator(domain, &mesh, FracOrder::new(s).unwrap()).unwrap();
            let basis = solve_eigens(&op, 8).unwrap();
            let t4 = boundary_traces(&basis, &mesh, domain, 4).unwrap();
            let t6 = boundary_traces(&basis, &mesh, domain, 6).unwrap();
            for j in 0..8 {
                let a = t4.value(1, j);
                let b = t6.value(1, j);
                let rel = (a - b).abs() / a.abs();
                assert!(rel <= 1e-2, "s={s} j={j}: K-sensitivity {rel:.4e}");
            }
        }
    }

    #[test]
    fn regularity_slopes_within_bounds() {
        let domain = IntervalDomain::new(0.0, 1.0).unwrap();
        let mesh = Mesh::uniform(domain, 512).unwrap();
        // s = 0.75: gradient-energy ratio slope <= 2(1-s) + 0.15
        let op = assemble_operator(domain, &mesh, FracOrder::new(0.75).unwrap()).unwrap();
        let basis = solve_eigens(&op, 24).unwrap();
        let rep = regularity_diagnostics(&basis, &op, &mesh).unwrap();
        let grad = rep.fits.iter().find(|f| f.quantity == "grad_energy_ratio").unwrap();
        assert_eq!(grad.within_bound, Some(true), "slope={}", grad.fitted_slope);
        // s = 0.2: sup-norm slope <= 1/(4s) + 0.15
        let op2 = assemble_operator(domain, &mesh, FracOrder::new(0.2).unwrap()).unwrap();
        let basis2 = solve_eigens(&op2, 24).unwrap();
        let rep2 = regularity_diagnostics(&basis2, &op2, &mesh).unwrap();
        let sup = rep2.fits.iter().find(|f| f.quantity == "sup_norm").unwrap();
        assert_eq!(sup.within_bound, Some(true), "slope={}", sup.fitted_slope);
    }

    #[test]
    fn regularity_slopes_invariant_under_rescaling() {
        let domain = IntervalDomain::new(0.0, 1.0).unwrap();
        let mesh = Mesh::uniform(domain, 256).unwrap();
        let op = assemble_operator(domain, &mesh, FracOrder::new(0.6).unwrap()).unwrap();
        let basis = solve_eigens(&op, 22).unwrap();
        let rep = regularity_diagnostics(&basis, &op, &mesh).unwrap();
        let mut scaled = basis.clone();
        scaled.eigenvectors *= 2.0;
        let rep2 = regularity_diagnostics(&scaled, &op, &mesh).unwrap();
        for (a, b) in rep.fits.iter().zip(&rep2.fits) {
            assert!((a.fitted_slope - b.fitted_slope).abs() < 1e-9);
        }
    }
}
