//! Experiment pipelines: one per configuration kind, each producing CSV/JSON
//! artifacts plus a list of named pass/fail checks.

use fraclab::control::{self, ControlSignal};
use fraclab::heat::{self, ModalHeatState};
use fraclab::linalg::{fit_affine, geomspace};
use fraclab::operator::{self, FracOrder, IntervalDomain, Mesh, OperatorPair};
use fraclab::spectral::{self, SpectralModel};
use fraclab::transmute::{self, KernelSpec};
use fraclab::wave::{self, BoundarySet, ModalWaveState};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::artifacts::{ArtifactSink, CsvCell};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::Check;

type F = CsvCell;

pub fn run_pipeline(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    match cfg.kind {
        ExperimentKind::Assemble => assemble(cfg, sink),
        ExperimentKind::Spectrum => spectrum(cfg, sink),
        ExperimentKind::WaveObs => wave_obs(cfg, sink),
        ExperimentKind::HeatObs => heat_obs(cfg, sink),
        ExperimentKind::Transmute => transmute_run(cfg, sink),
        ExperimentKind::Hum => hum(cfg, sink),
        ExperimentKind::Lr => lr(cfg, sink),
        ExperimentKind::FullReport => {
            let report = crate::report::aggregate(&cfg.input_dirs)?;
            sink.write_json("report.json", &report)?;
            sink.write_bytes("report.txt", crate::report::render_text(&report).as_bytes())?;
            Ok(vec![Check::new(
                "aggregate-all-pass",
                report.all_passed,
                format!("{} runs aggregated", report.runs.len()),
            )])
        }
    }
}

fn build_operator(cfg: &ExperimentConfig) -> fraclab::Result<OperatorPair> {
    let [a, b] = cfg.domain();
    let domain = IntervalDomain::new(a, b)?;
    let mesh = Mesh::uniform(domain, cfg.n())?;
    operator::assemble_operator(domain, &mesh, FracOrder::new(cfg.s())?)
}

fn build_model(cfg: &ExperimentConfig, modes: usize) -> fraclab::Result<SpectralModel> {
    let op = build_operator(cfg)?;
    SpectralModel::build(&op, modes, cfg.fit_nodes())
}

// ---------------------------------------------------------------------------

fn assemble(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let op = build_operator(cfg)?;
    let mut container = Vec::new();
    op.write_container(&mut container)?;
    sink.write_bytes("operator.txt", &container)?;

    // oracle probe on the interpolated profile ((b-x)(x-a) scaled)^s
    let [a, b] = cfg.domain();
    let s = cfg.s();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let profile = move |x: f64| {
        let xi = (x - mid) / half;
        (1.0 - xi * xi).max(0.0).powf(s)
    };
    let u: Vec<f64> = op.mesh.nodes.iter().map(|&x| profile(x)).collect();
    let applied = op.apply(&u)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..10 {
        let xi_target = -0.45 + 0.1 * k as f64;
        let x_target = mid + half * xi_target;
        let idx = ((x_target - a) / op.mesh.h).round() as usize - 1;
        let idx = idx.min(op.mesh.n - 1);
        let x = op.mesh.nodes[idx];
        let oracle = operator::pointwise_fraclap(profile, (a, b), x, op.s, 1e-8)?;
        let rel = (applied[idx] - oracle).abs() / oracle.abs();
        worst = worst.max(rel);
        rows.push(vec![F::F(x), F::F(applied[idx]), F::F(oracle), F::F(rel)]);
    }
    sink.write_csv("oracle_check.csv", "x,applied,oracle,rel_err", &rows)?;
    sink.write_json(
        "assembly_info.json",
        &serde_json::json!({
            "scheme_version": operator::OPERATOR_SCHEME_VERSION,
            "n": op.mesh.n,
            "h": op.mesh.h,
            "domain": [a, b],
            "s": s,
            "oracle_max_rel_err": worst,
        }),
    )?;
    Ok(vec![Check::new(
        "operator-oracle-agreement",
        worst <= 0.02,
        format!("max relative error {worst:.3e} over 10 interior probes"),
    )])
}

// ---------------------------------------------------------------------------

fn spectrum(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let op = build_operator(cfg)?;
    let model = SpectralModel::build(&op, cfg.modes(), cfg.fit_nodes())?;
    let lam = model.lambda();
    let rows: Vec<Vec<F>> = lam
        .iter()
        .enumerate()
        .map(|(j, &l)| vec![F::I(j as i64 + 1), F::F(l)])
        .collect();
    sink.write_csv("eigenvalues.csv", "j,lambda", &rows)?;

    let mut trows = Vec::new();
    for (p, bt) in model.traces.per_point.iter().enumerate() {
        for (j, fit) in bt.fits.iter().enumerate() {
            trows.push(vec![
                F::I(j as i64 + 1),
                F::I(p as i64),
                F::F(bt.point.coordinate),
                F::F(fit.value),
                F::F(fit.residual),
                F::F(fit.condition),
            ]);
        }
    }
    sink.write_csv("traces.csv", "j,point,coordinate,trace,fit_residual,condition", &trows)?;

    // Weyl exponent over j in [10, 40] (clipped to the basis)
    let hi = cfg.modes().min(40);
    let lo = 10.min(hi.saturating_sub(5)).max(2);
    let x: Vec<f64> = (lo..=hi).map(|j| (j as f64).ln()).collect();
    let y: Vec<f64> = (lo..=hi).map(|j| lam[j - 1].ln()).collect();
    let fit = fit_affine(&x, &y);
    let expected = 2.0 * cfg.s();
    let within = (fit.slope - expected).abs() <= 0.1;
    sink.write_json(
        "weyl_fit.json",
        &serde_json::json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "expected": expected,
            "window": [lo, hi],
            "within_tolerance": within,
        }),
    )?;
    let mut checks = vec![Check::new(
        "weyl-exponent",
        within,
        format!("slope {:.4} vs 2s = {expected}", fit.slope),
    )];
    if cfg.modes() >= 20 {
        let rep = spectral::regularity_diagnostics(&model.basis, &op, &model.mesh)?;
        sink.write_json("regularity.json", &rep)?;
        for f in &rep.fits {
            if let (Some(bound), Some(ok)) = (f.bound, f.within_bound) {
                checks.push(Check::new(
                    format!("regularity-{}", f.quantity),
                    ok,
                    format!("slope {:.3} vs bound {bound:.3} + 0.15", f.fitted_slope),
                ));
            }
        }
    }
    sink.write_json("basis.json", &model.export())?;
    Ok(checks)
}

// ---------------------------------------------------------------------------

fn wave_obs(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let j_list = cfg.j_list();
    let max_j = *j_list.iter().max().unwrap();
    let model = build_model(cfg, cfg.modes().max(max_j))?;
    let lam = model.lambda();
    let grid = cfg
        .params
        .horizon_grid
        .as_ref()
        .map(|g| g.materialize())
        .unwrap_or_else(|| geomspace(0.1, 20.0, 24));

    let mut rows = Vec::new();
    let mut kappa_table = vec![vec![0.0f64; grid.len()]; j_list.len()];
    for (ji, &j) in j_list.iter().enumerate() {
        for (ti, &t) in grid.iter().enumerate() {
            let gram = wave::wave_obs_gramian(&model, j, t, BoundarySet::Plus, true)?;
            let kappa = wave::obs_constant_wave(&gram, lam)?;
            kappa_table[ji][ti] = kappa;
            rows.push(vec![
                F::F(cfg.s()),
                F::I(cfg.n() as i64),
                F::I(j as i64),
                F::F(t),
                F::B(true),
                F::S("plus".into()),
                F::F(kappa),
            ]);
        }
    }
    sink.write_csv("kappa_wave.csv", "s,n,J,T,weighted,boundary,kappa", &rows)?;

    let est = wave::estimate_t0(&model, &j_list, &grid, cfg.t0_threshold())?;
    let trows: Vec<Vec<F>> = est
        .entries
        .iter()
        .map(|e| {
            vec![
                F::I(e.modes as i64),
                F::F(e.lambda_max),
                match e.t0 {
                    Some(t) => F::F(t),
                    None => F::S("not-observed".into()),
                },
            ]
        })
        .collect();
    sink.write_csv("t0_emp.csv", "J,lambda_J,T0", &trows)?;
    sink.write_json(
        "gamma_fit.json",
        &serde_json::json!({
            "gamma_hat": est.gamma_fit.as_ref().map(|f| f.slope),
            "r_squared": est.gamma_fit.as_ref().map(|f| f.r_squared),
            "gamma_reference": est.gamma_reference,
            "tolerance": 0.15,
            "comparison_is_exploratory": true,
        }),
    )?;

    // identity spot checks on seeded random states
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jq = cfg.j().min(4).min(model.count());
    let mut equi_max = 0.0f64;
    for _ in 0..cfg.draws() {
        let a: Vec<f64> = (0..jq).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..jq).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let st = ModalWaveState::new(a, b)?;
        equi_max = equi_max.max(wave::equipartition_residual(&st, lam, cfg.horizon()));
    }
    let mut pz_coeffs = vec![0.0; jq];
    pz_coeffs[0] = 1.0;
    let pz_state = ModalWaveState::new(pz_coeffs, vec![0.0; jq])?;
    let pohozaev = wave::pohozaev_residual(&model, &pz_state, 4.0)?;
    sink.write_json(
        "identity_checks.json",
        &serde_json::json!({
            "equipartition_max_residual": equi_max,
            "pohozaev_residual": pohozaev,
            "pohozaev_state_modes": jq,
        }),
    )?;

    let mut checks = Vec::new();
    // κ monotone: nonincreasing in J, nondecreasing in T
    let mut mono_j = true;
    let mut mono_t = true;
    for ti in 0..grid.len() {
        for ji in 1..j_list.len() {
            if kappa_table[ji][ti] > kappa_table[ji - 1][ti] * (1.0 + 1e-9) + 1e-14 {
                mono_j = false;
            }
        }
    }
    for ji in 0..j_list.len() {
        for ti in 1..grid.len() {
            if kappa_table[ji][ti] < kappa_table[ji][ti - 1] * (1.0 - 1e-9) - 1e-14 {
                mono_t = false;
            }
        }
    }
    checks.push(Check::new("kappa-monotone-in-modes", mono_j, "nonincreasing in J"));
    checks.push(Check::new("kappa-monotone-in-horizon", mono_t, "nondecreasing in T"));
    let t0s: Vec<Option<f64>> = est.entries.iter().map(|e| e.t0).collect();
    let t0_mono = t0s.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b >= a,
        _ => true,
    });
    checks.push(Check::new(
        "t0-nondecreasing",
        t0_mono && t0s.iter().all(|t| t.is_some()),
        format!("{t0s:?}"),
    ));
    checks.push(Check::new(
        "equipartition-residual",
        equi_max <= 1e-9,
        format!("max {equi_max:.3e}"),
    ));
    checks.push(Check::new(
        "pohozaev-residual",
        pohozaev <= 5e-2,
        format!("{pohozaev:.3e}"),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------------------

fn heat_obs(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let j = cfg.j();
    let model = build_model(cfg, j)?;
    let grid = cfg
        .params
        .horizon_grid
        .as_ref()
        .map(|g| g.materialize())
        .unwrap_or_else(|| geomspace(0.05, 0.5, 12));
    let curve = heat::heat_obs_curve(&model, j, &grid)?;
    let rows: Vec<Vec<F>> = curve
        .entries
        .iter()
        .map(|e| vec![F::F(e.horizon), F::F(e.kappa), F::B(e.saturated)])
        .collect();
    sink.write_csv("kappa_heat.csv", "T,kappa,saturated", &rows)?;
    sink.write_json(
        "blowup_fit.json",
        &serde_json::json!({
            "fit": curve.blow_up_fit,
            "modes": j,
            "unsaturated_points": curve.entries.iter().filter(|e| !e.saturated).count(),
        }),
    )?;
    let usable: Vec<&heat::HeatObsPoint> = curve.entries.iter().filter(|e| !e.saturated).collect();
    let mono = usable.windows(2).all(|w| w[1].kappa >= w[0].kappa * (1.0 - 1e-9));
    let fit_ok = curve.blow_up_fit.as_ref().map(|f| f.r_squared >= 0.95).unwrap_or(false);
    Ok(vec![
        Check::new("kappa-heat-monotone", mono, "nondecreasing in T"),
        Check::new(
            "blowup-fit",
            fit_ok,
            format!(
                "R² = {:?}",
                curve.blow_up_fit.as_ref().map(|f| f.r_squared)
            ),
        ),
    ])
}

// ---------------------------------------------------------------------------

fn transmute_run(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let j = cfg.j().min(8);
    let model = build_model(cfg, cfg.modes().max(j))?;
    // empirical minimal wave time fixes the strip half-width
    let grid = geomspace(0.1, 20.0, 24);
    let est = wave::estimate_t0(&model, &[j], &grid, cfg.t0_threshold())?;
    let l = est.entries[0]
        .t0
        .ok_or_else(|| fraclab::Error::Domain("minimal time not observed within grid".into()))?;
    let horizon = cfg.horizon();
    let spec = KernelSpec::new(horizon, l, cfg.beta_factor() * l * l, cfg.series_order())?;

    // kernel table on a 21 x time_grid lattice
    let mut rows = Vec::new();
    for it in 0..spec.time_grid.len() {
        let t = spec.time_grid[it];
        let derivs = transmute::kernel_derivatives(&spec, t, spec.series_order)?;
        for iz in 0..21 {
            let z = -l + 2.0 * l * iz as f64 / 20.0;
            let kv = transmute::kernel_eval_with(&spec, &derivs, z);
            rows.push(vec![F::F(z), F::F(t), F::F(kv.value), F::F(kv.tail_bound)]);
        }
    }
    sink.write_csv("kernel_table.csv", "zeta,t,k,tail_bound", &rows)?;

    // residuals on the half-width interior grid
    let zg: Vec<f64> = (0..17).map(|i| -0.5 * l + l * i as f64 / 16.0).collect();
    let tg: Vec<f64> = (1..16).map(|i| horizon * i as f64 / 16.0).collect();
    let residual = transmute::kernel_pde_residual(&spec, &zg, &tg)?;
    // pointwise bound over the admissible δ sweep
    let mut bound_ok = true;
    for &delta in &[0.5, 0.7, 0.9] {
        let (lo, hi) = spec.admissible_delta();
        if delta <= lo || delta >= hi {
            continue;
        }
        for iz in 0..20 {
            let z = -l + 2.0 * l * (iz as f64 + 0.5) / 20.0;
            for it in 0..20 {
                let t = horizon * (it as f64 + 0.5) / 20.0;
                let k = transmute::kernel_eval(&spec, z, t)?.value.abs();
                if k > transmute::kernel_bound(&spec, z, t, delta) * (1.0 + 1e-9) + 1e-300 {
                    bound_ok = false;
                }
            }
        }
    }
    sink.write_json(
        "kernel_residual.json",
        &serde_json::json!({
            "analytic": residual.analytic,
            "finite_difference": residual.finite_difference,
            "series_order": spec.series_order,
            "bound_holds": bound_ok,
            "half_width": l,
            "beta": spec.beta,
        }),
    )?;

    // transfer chain on seeded random low-frequency data
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<Vec<f64>> = (0..cfg.draws())
        .map(|_| (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let report = transmute::transfer_demo(&model, j, &spec, &data)?;
    sink.write_json("transfer_chain.json", &report)?;

    // β sweep of the final chain constant
    let factors = [2.1, 3.0, 5.0];
    let mut consts = Vec::new();
    for &f in &factors {
        let sp = KernelSpec::new(horizon, l, f * l * l, cfg.series_order())?;
        consts.push(transmute::chain_constant_ln(&model, &sp));
    }
    let sweep_mono = consts.windows(2).all(|w| w[1] > w[0]);
    sink.write_json(
        "beta_sweep.json",
        &serde_json::json!({
            "beta_factors": factors,
            "chain_constant_ln": consts,
            "monotone_increasing": sweep_mono,
        }),
    )?;

    // one transmuted trajectory with its wave-equation residual
    let q0 = ModalHeatState::new({
        let mut c = vec![0.0; j];
        c[0] = 1.0;
        c
    })?;
    let zeta_grid: Vec<f64> = (0..9).map(|i| 0.5 * l * i as f64 / 8.0).collect();
    let sol = transmute::transmuted_solution(&model, &q0, &spec, &zeta_grid)?;
    let ode_max = sol.modes.iter().map(|m| m.ode_residual).fold(0.0f64, f64::max);
    sink.write_json("transmuted_modes.json", &sol)?;

    Ok(vec![
        Check::new(
            "kernel-analytic-residual",
            residual.analytic <= 1e-10,
            format!("{:.3e} at order {}", residual.analytic, spec.series_order),
        ),
        Check::new("kernel-bound", bound_ok, "pointwise bound over δ sweep"),
        Check::new("transfer-chain", report.all_hold, format!("{} cases", report.cases.len())),
        Check::new("beta-sweep-monotone", sweep_mono, format!("{consts:?}")),
        Check::new(
            "transmuted-wave-residual",
            ode_max <= 1e-6,
            format!("max relative ODE residual {ode_max:.3e}"),
        ),
    ])
}

// ---------------------------------------------------------------------------

fn hum(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let j = cfg.j();
    let tracked = cfg.tracked(j).min(cfg.n());
    let model = build_model(cfg, tracked.max(j))?;
    let horizon = cfg.horizon();
    let u0 = ModalHeatState::new(cfg.u0(j))?;
    let (signal, diag) = control::hum_solve(&model, j, horizon, &u0, cfg.rcond())?;
    sink.write_json("control_coeffs.json", &signal)?;

    // uniform time samples
    let dt = cfg.params.sample_dt.unwrap_or(horizon / 200.0);
    let steps = (horizon / dt).round() as usize;
    let mut rows = Vec::new();
    for k in 0..=steps {
        let t = (k as f64 * dt).min(horizon);
        let mut row = vec![F::F(t)];
        for b in 0..signal.boundary.len() {
            row.push(F::F(signal.value(b, t)));
        }
        rows.push(row);
    }
    let header = std::iter::once("t".to_string())
        .chain(
            signal
                .boundary
                .iter()
                .map(|(bp, _)| format!("f_at_{}", bp.coordinate)),
        )
        .collect::<Vec<_>>()
        .join(",");
    sink.write_csv("control_samples.csv", &header, &rows)?;

    let check = control::verify_projection(&model, &u0, &signal, j, horizon, tracked)?;
    let u0_norm = u0.norm();
    let proj_rel = check.max_low_residual / u0_norm.max(1e-300);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut duality_max = 0.0f64;
    for _ in 0..cfg.draws() {
        let v_t: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
        duality_max = duality_max
            .max(heat::transposition_residual(&model, &u0, &signal, horizon, &v_t, tracked)?);
    }
    let samples: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..(j + 4).min(model.count())).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let margin = control::minimal_norm_margin(&model, &signal, j, 4.min(model.count() - j), &samples)?;

    let cost_grid = cfg
        .params
        .horizon_grid
        .as_ref()
        .map(|g| g.materialize())
        .unwrap_or_else(|| geomspace(0.1 * horizon.max(1.0), horizon.max(1.0), 8));
    let cost_report = control::cost_check(&model, j, &cost_grid, &u0)?;

    sink.write_json(
        "hum_diagnostics.json",
        &serde_json::json!({
            "condition": diag.condition,
            "truncated_directions": diag.truncated,
            "predicted_cost": diag.predicted_cost,
            "measured_cost": signal.norm_l2(),
            "projection_residual_rel": proj_rel,
            "spillover_norm": check.spillover.iter().map(|v| v * v).sum::<f64>().sqrt(),
            "duality_max_residual": duality_max,
            "minimal_norm_margin": margin,
            "cost_report": cost_report,
        }),
    )?;

    Ok(vec![
        Check::new(
            "projection-residual",
            proj_rel <= 1e-8,
            format!("max_j |u_j(T)| / ‖u0‖ = {proj_rel:.3e}"),
        ),
        Check::new("duality-identity", duality_max <= 1e-9, format!("max {duality_max:.3e}")),
        Check::new(
            "minimal-norm",
            margin >= -1e-10 * signal.norm_l2().max(1e-300),
            format!("worst margin {margin:.3e}"),
        ),
        Check::new(
            "cost-decreasing",
            cost_report.decreasing_in_horizon,
            format!("{:?}", cost_report.costs),
        ),
        Check::new(
            "cost-blowup-fit",
            cost_report.fit.r_squared >= 0.9,
            format!("R² = {:.4}", cost_report.fit.r_squared),
        ),
    ])
}

// ---------------------------------------------------------------------------

fn lr(
    cfg: &ExperimentConfig,
    sink: &mut ArtifactSink,
) -> Result<Vec<Check>, Box<dyn std::error::Error>> {
    let tracked = cfg.params.tracked.unwrap_or(64).min(cfg.n());
    let model = build_model(cfg, tracked)?;
    let horizon = cfg.horizon();
    let u0 = ModalHeatState::new(cfg.u0(tracked.min(8)))?;
    let run = control::lr_control(&model, &u0, horizon, cfg.stages(), tracked, cfg.rcond())?;

    let srows: Vec<Vec<F>> = run
        .schedule
        .stages
        .iter()
        .zip(&run.ledger.stages)
        .map(|(st, rec)| {
            vec![
                F::I(st.index as i64),
                F::F(st.start),
                F::F(st.control_len),
                F::F(st.threshold),
                F::I(rec.active_modes as i64),
            ]
        })
        .collect();
    sink.write_csv("schedule.csv", "stage,start,tau,threshold,active_modes", &srows)?;
    sink.write_json("ledger.json", &run.ledger)?;
    sink.write_json("stage_controls.json", &run.controls)?;

    let ratio = run.ledger.terminal_norm / run.ledger.initial_norm.max(1e-300);
    // compose all stage controls into one propagation as a consistency check
    let pieces: Vec<ControlSignal> = run.controls.iter().flatten().cloned().collect();
    let replay = heat::propagate_piecewise(&model, &u0, &pieces, horizon, tracked)?;
    let compose_err = replay
        .coeffs
        .iter()
        .zip(&run.terminal.coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let norms: Vec<f64> = run.ledger.stages.iter().map(|r| r.post_decay_norm).collect();
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let costs: Vec<f64> = run.ledger.stages.iter().map(|r| r.cost).collect();
    let rss = control::root_sum_square(&costs);
    let cost_identity = (rss - run.ledger.total_cost).abs() <= 1e-12 * rss.max(1e-300);

    // cost trend over stages with nonzero controls (the diagnostic signal
    // for insufficient dissipation at small s)
    let active: Vec<f64> = costs.iter().copied().filter(|c| *c > 0.0).collect();
    let trend_slope = if active.len() >= 2 {
        let x: Vec<f64> = (0..active.len()).map(|i| i as f64).collect();
        let y: Vec<f64> = active.iter().map(|c| c.ln()).collect();
        fit_affine(&x, &y).slope
    } else {
        0.0
    };

    sink.write_json(
        "lr_summary.json",
        &serde_json::json!({
            "terminal_ratio": ratio,
            "stage_norms": norms,
            "stage_costs": costs,
            "total_cost": run.ledger.total_cost,
            "early_termination": run.ledger.early_termination,
            "composition_error": compose_err,
            "cost_trend_log_slope": trend_slope,
            "gamma_lr": run.schedule.gamma_lr,
            "tail": run.schedule.tail,
        }),
    )?;

    let mut checks = vec![
        Check::new("stage-norms-decreasing", decreasing, format!("{norms:?}")),
        Check::new(
            "cost-ledger-identity",
            cost_identity,
            format!("rss {rss:.6e} vs total {:.6e}", run.ledger.total_cost),
        ),
        Check::new(
            "stage-composition",
            compose_err <= 1e-10 * run.ledger.initial_norm.max(1e-300),
            format!("replay deviation {compose_err:.3e}"),
        ),
    ];
    if cfg.s() > 0.5 {
        checks.push(Check::new(
            "terminal-norm",
            ratio <= 1e-6,
            format!("‖u(T)‖/‖u0‖ = {ratio:.3e}"),
        ));
    } else {
        checks.push(Check::new(
            "cost-trend-increasing",
            active.len() >= 4 && trend_slope > 0.0 && active.last() > active.first(),
            format!("log-slope {trend_slope:.3} over {} active stages", active.len()),
        ));
    }
    Ok(checks)
}
