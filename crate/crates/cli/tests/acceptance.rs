//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the report reads top to bottom.

mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vela_core::johansen::{
    concentrate_matrix, concentrated_log_likelihood, critical_value, rank_test, solve_cointegration_eigenproblem,
    DeterministicCase, RankStatistic, SignificanceLevel,
};
use vela_core::mission::MissionConfig;
use vela_core::numerics::Matrix;
use vela_core::panel::Variable;
use vela_core::reference_data::load_reference_tables;
use vela_core::spec_search::{correlation_from_equations, Sign};
use vela_core::synthetic::{
    generate_vecm_data, monte_carlo_critical_values, replication_seed, run_recovery_study, SyntheticSpec,
};
use vela_core::unit_root::{adf_test, default_adf_lags, AdfDeterministic};
use vela_core::vecm::{
    estimate_vecm_matrix, fit_given_beta, stability_check, CointegratingEquation, VecmModel, Z_CRITICAL_5PCT,
};

use common::{stdout, vela, write_panel};

type Outcome = Result<String, String>;

const CASES: [DeterministicCase; 2] = [DeterministicCase::RestrictedConstant, DeterministicCase::UnrestrictedConstant];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mission_headline() -> Outcome {
    let start = Instant::now();
    let out = vela(&["mission", "--format", "json"]);
    let elapsed = start.elapsed();
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).map_err(|e| e.to_string())?;
    let t = &v["result"]["totals"];
    let pool = t["pool_busd"].as_f64().ok_or("no pool")?;
    let cost = t["cost_busd"].as_f64().ok_or("no cost")?;
    let margin = t["margin_fraction"].as_f64().ok_or("no margin")?;
    ensure((pool - 34.3).abs() < 0.05, || format!("pool {pool}"))?;
    ensure((cost - (8.0 * 2.8 + 7.0 * 0.3 + 0.5)).abs() < 1e-9, || format!("cost {cost}"))?;
    ensure((100.0 * margin - 27.1).abs() <= 0.2, || format!("margin {margin}"))?;
    ensure(t["launches"] == 8 && t["modules"] == 7, || format!("launches/modules {t}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    // the library agrees with the binary
    let plan = vela_core::mission::allocate(&MissionConfig::sample()).map_err(|e| e.to_string())?;
    ensure((plan.totals.pool_busd - pool).abs() < 1e-12, || "library pool differs".into())?;
    Ok(format!(
        "pool {pool:.3} B$, cost {cost:.1} B$, margin {:.2}%, {:.0} ms",
        100.0 * margin,
        elapsed.as_secs_f64() * 1e3
    ))
}

fn reference_fidelity() -> Outcome {
    let t = load_reference_tables().map_err(|e| e.to_string())?;
    let counts = (t.vehicles.len(), t.habitats.len(), t.mars_launches.len());
    ensure(counts == (7, 10, 15), || format!("row counts {counts:?}"))?;
    let sls = t.vehicles.iter().find(|v| v.name == "SLS Block 1").ok_or("SLS Block 1 missing")?;
    ensure(sls.cost_per_launch_musd == Some(2800.0), || format!("SLS cost {:?}", sls.cost_per_launch_musd))?;
    let kibo = t.habitats.iter().find(|h| h.module_name == "Kibo").ok_or("Kibo missing")?;
    ensure(kibo.mass_kg == 15900.0, || format!("Kibo {}", kibo.mass_kg))?;
    let tw = t.mars_launches.iter().find(|m| m.mission_name == "Tianwen-1").ok_or("Tianwen-1 missing")?;
    ensure(tw.payload_mass_kg == 5000.0, || format!("Tianwen-1 {}", tw.payload_mass_kg))?;
    Ok(format!("rows {counts:?}, SLS $2,800.0M, Kibo 15,900 kg, Tianwen-1 5,000 kg"))
}

fn selected_rank(data: &Matrix, case: DeterministicCase) -> Result<usize, String> {
    let m = concentrate_matrix(data, 1, case).map_err(|e| e.to_string())?;
    Ok(rank_test(&m, case, SignificanceLevel::Pct5).map_err(|e| e.to_string())?.selected_rank)
}

fn rank_validity() -> Outcome {
    let start = Instant::now();
    let reps = 200;
    let mut hits1 = 0;
    let mut hits0 = 0;
    for i in 0..reps {
        let spec = SyntheticSpec::reference_r1(400, replication_seed(3001, i));
        hits1 += usize::from(selected_rank(&generate_vecm_data(&spec), spec.case)? == 1);
        let walks = SyntheticSpec::random_walks(3, 0.0, 400, replication_seed(3002, i)).map_err(|e| e.to_string())?;
        hits0 += usize::from(selected_rank(&generate_vecm_data(&walks), walks.case)? == 0);
    }
    let (a1, a0) = (hits1 as f64 / reps as f64, hits0 as f64 / reps as f64);
    let elapsed = start.elapsed();
    ensure(a1 >= 0.80, || format!("rank 1 selected in {a1:.3}"))?;
    ensure(a0 >= 0.85, || format!("rank 0 selected in {a0:.3}"))?;
    ensure(elapsed.as_secs() < 120, || format!("took {elapsed:?}"))?;
    Ok(format!("rank 1 on r=1: {a1:.3}, rank 0 on walks: {a0:.3}, {:.1} s", elapsed.as_secs_f64()))
}

fn critical_values() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in CASES {
        for d in 1..=3 {
            let mc = monte_carlo_critical_values(d, case, 2000, 400, 20_211_014 + d as u64).map_err(|e| e.to_string())?;
            let table = critical_value(case, RankStatistic::Trace, SignificanceLevel::Pct5, d).ok_or("no table value")?;
            let rel = (mc.pct95 - table).abs() / table;
            ensure(rel <= 0.10, || {
                format!("{} p-r={d}: simulated {:.2} vs table {table:.2}", case.short_name(), mc.pct95)
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("largest relative deviation {:.1}%", 100.0 * worst))
}

fn beta_recovery() -> Outcome {
    let summary =
        run_recovery_study(&SyntheticSpec::reference_r1(500, 5005), 200).map_err(|e| e.to_string())?;
    ensure(summary.replications.len() == 200, || "wrong replication count".into())?;
    ensure(summary.beta_angle_median_deg < 5.0, || format!("median angle {}", summary.beta_angle_median_deg))?;
    Ok(format!("median angle {:.3} deg", summary.beta_angle_median_deg))
}

/// A random stable r = 1 system with `k − 1` lagged differences.
fn random_spec(rng: &mut ChaCha8Rng, seed: u64) -> SyntheticSpec {
    let p = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=3);
    let case = CASES[rng.gen_range(0..2)];
    let mut beta = vec![1.0];
    beta.extend((1..p).map(|_| rng.gen_range(-1.0..1.0)));
    if case == DeterministicCase::RestrictedConstant {
        beta.push(rng.gen_range(-2.0..2.0));
    }
    let mut alpha = vec![-0.3];
    alpha.extend((1..p).map(|_| rng.gen_range(-0.05..0.05)));
    let gamma = (1..k).map(|_| Matrix::identity(p).scale(0.2 / (k - 1) as f64)).collect();
    let mu = match case {
        DeterministicCase::RestrictedConstant => vec![0.0; p],
        DeterministicCase::UnrestrictedConstant => (0..p).map(|_| rng.gen_range(-0.1..0.1)).collect(),
    };
    let t_len = rng.gen_range(80..=200);
    SyntheticSpec::new(case, Matrix::column_vector(&alpha), Matrix::column_vector(&beta), gamma, mu, 1.0, t_len, seed)
        .expect("random system is stable")
}

/// Per-equation least squares built from scratch: regress each Δz on
/// `[β′z̃_{t−1}, Δz_{t−1}, …, Δz_{t−k+1}, 1?]` with nalgebra's SVD.
fn oracle_ols(data: &Matrix, k: usize, beta: &Matrix, case: DeterministicCase) -> Result<DMatrix<f64>, String> {
    let (n, p, r) = (data.rows(), data.cols(), beta.cols());
    let with_const = case == DeterministicCase::UnrestrictedConstant;
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for t in k..n {
        let mut x = Vec::new();
        for j in 0..r {
            let mut e = 0.0;
            for i in 0..p {
                e += beta[(i, j)] * data[(t - 1, i)];
            }
            if !with_const {
                e += beta[(p, j)];
            }
            x.push(e);
        }
        for lag in 1..k {
            x.extend((0..p).map(|i| data[(t - lag, i)] - data[(t - lag - 1, i)]));
        }
        if with_const {
            x.push(1.0);
        }
        rows.push(x);
        ys.push((0..p).map(|i| data[(t, i)] - data[(t - 1, i)]).collect::<Vec<_>>());
    }
    let ncols = rows[0].len();
    let x = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let svd = x.svd(true, true);
    let mut b = DMatrix::zeros(ncols, p);
    for eq in 0..p {
        let y = DVector::from_fn(ys.len(), |i, _| ys[i][eq]);
        let sol = svd.solve(&y, 1e-14).map_err(|e| e.to_string())?;
        b.set_column(eq, &sol);
    }
    Ok(b)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// α, Γ and μ of a model laid out like the regressor columns.
fn stacked_coefficients(model: &VecmModel) -> DMatrix<f64> {
    let (p, r) = (model.p(), model.r);
    let with_const = model.case == DeterministicCase::UnrestrictedConstant;
    let ncols = r + p * (model.k - 1) + usize::from(with_const);
    DMatrix::from_fn(ncols, p, |c, eq| {
        if c < r {
            model.alpha[(eq, c)]
        } else if c < r + p * (model.k - 1) {
            let lag = (c - r) / p;
            model.gamma[lag][(eq, (c - r) % p)]
        } else {
            model.mu[eq]
        }
    })
}

fn ols_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let mut worst: f64 = 0.0;
    for inst in 0..50 {
        let spec = random_spec(&mut rng, replication_seed(6006, inst));
        let data = generate_vecm_data(&spec);
        let k = spec.k();

        // conditional fit at the true β
        let fit = fit_given_beta(&data, k, &spec.beta_true, spec.case).map_err(|e| e.to_string())?;
        let oracle = oracle_ols(&data, k, &spec.beta_true, spec.case)?;
        ensure(
            fit.ols.coefficients.rows() == oracle.nrows() && fit.ols.coefficients.cols() == oracle.ncols(),
            || format!("instance {inst}: shape mismatch"),
        )?;
        for i in 0..oracle.nrows() {
            for j in 0..oracle.ncols() {
                let (a, b) = (fit.ols.coefficients[(i, j)], oracle[(i, j)]);
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
                ensure(close(a, b, 1e-8), || format!("instance {inst} true beta ({i},{j}): {a} vs {b}"))?;
            }
        }

        // the estimator's α, Γ, μ given its own β̂
        let vars = Variable::ALL[..spec.p].to_vec();
        let model = estimate_vecm_matrix(&data, &vars, k, 1, spec.case).map_err(|e| e.to_string())?;
        let oracle = oracle_ols(&data, k, &model.beta, spec.case)?;
        let got = stacked_coefficients(&model);
        for i in 0..oracle.nrows() {
            for j in 0..oracle.ncols() {
                let (a, b) = (got[(i, j)], oracle[(i, j)]);
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
                ensure(close(a, b, 1e-8), || format!("instance {inst} estimated beta ({i},{j}): {a} vs {b}"))?;
            }
        }
    }
    Ok(format!("50 instances, largest relative difference {worst:.1e}"))
}

fn likelihood_consistency() -> Outcome {
    let mut fits = 0;
    let mut worst: f64 = 0.0;
    let mut check = |data: &Matrix, k: usize, r: usize, case: DeterministicCase| -> Result<(), String> {
        let vars = Variable::ALL[..data.cols()].to_vec();
        let model = estimate_vecm_matrix(data, &vars, k, r, case).map_err(|e| e.to_string())?;
        let m = concentrate_matrix(data, k, case).map_err(|e| e.to_string())?;
        let eig = solve_cointegration_eigenproblem(&m).map_err(|e| e.to_string())?;
        let implied = concentrated_log_likelihood(&m, &eig.eigenvalues, r).map_err(|e| e.to_string())?;
        let diff = (model.loglik - implied).abs();
        worst = worst.max(diff);
        fits += 1;
        ensure(diff <= 1e-6, || format!("k={k} r={r}: {} vs {implied}", model.loglik))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7007);
    for inst in 0..50 {
        let spec = random_spec(&mut rng, replication_seed(7007, inst));
        let data = generate_vecm_data(&spec);
        for r in 1..spec.p {
            for k in 1..=3 {
                check(&data, k, r, spec.case)?;
            }
        }
    }
    for i in 0..50 {
        let data = generate_vecm_data(&SyntheticSpec::reference_r1(200, replication_seed(7008, i)));
        for case in CASES {
            check(&data, 1, 1, case)?;
            check(&data, 2, 2, case)?;
        }
    }
    Ok(format!("{fits} fits, largest difference {worst:.1e}"))
}

fn adf_size() -> Outcome {
    let reps = 2000;
    let lags = default_adf_lags(200).map_err(|e| e.to_string())?;
    let mut rejections = 0;
    for i in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(8008, i));
        let mut level = 0.0;
        let y: Vec<f64> = (0..200)
            .map(|_| {
                level += rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect();
        let res = adf_test(&y, lags, AdfDeterministic::Constant).map_err(|e| e.to_string())?;
        rejections += usize::from(res.reject_unit_root_at_5pct);
    }
    let rate = rejections as f64 / reps as f64;
    ensure((0.025..=0.075).contains(&rate), || format!("rejection rate {rate:.4}"))?;
    Ok(format!("rejection rate {:.2}% with {lags} lags", 100.0 * rate))
}

fn check_stable(model: &VecmModel, label: &str) -> Result<(), String> {
    let rep = stability_check(model).map_err(|e| e.to_string())?;
    let p = model.p();
    ensure(rep.unit_root_count == p - 1, || format!("{label}: {} unit roots for p={p}", rep.unit_root_count))?;
    let mut moduli = rep.moduli.clone();
    moduli.sort_by(|a, b| b.total_cmp(a));
    ensure(moduli[p - 1..].iter().all(|m| *m < 1.0), || format!("{label}: moduli {moduli:?}"))?;
    ensure(rep.stable, || format!("{label}: not stable"))
}

fn stability() -> Outcome {
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(9009);
    for inst in 0..50 {
        let spec = random_spec(&mut rng, replication_seed(9009, inst));
        let vars = Variable::ALL[..spec.p].to_vec();
        let truth = VecmModel::from_parameters(
            vars.clone(),
            spec.case,
            spec.alpha_true.clone(),
            spec.beta_true.clone(),
            spec.gamma_true.clone(),
            spec.mu_true.clone(),
        )
        .map_err(|e| e.to_string())?;
        check_stable(&truth, &format!("true model {inst}"))?;
        let data = generate_vecm_data(&spec.with_seed(replication_seed(9010, inst)));
        let fitted = estimate_vecm_matrix(&data, &vars, spec.k(), 1, spec.case).map_err(|e| e.to_string())?;
        check_stable(&fitted, &format!("fitted model {inst}"))?;
        checked += 2;
    }
    let reference = SyntheticSpec::reference_r1(400, 1);
    let degenerate = VecmModel::from_parameters(
        Variable::ALL[..3].to_vec(),
        reference.case,
        Matrix::zeros(3, 1),
        reference.beta_true.clone(),
        vec![],
        vec![0.0; 3],
    )
    .map_err(|e| e.to_string())?;
    let rep = stability_check(&degenerate).map_err(|e| e.to_string())?;
    ensure(!rep.stable, || "alpha = 0 reported stable".into())?;
    Ok(format!("{checked} models with p-1 unit roots, alpha = 0 has {} unit roots and is unstable", rep.unit_root_count))
}

fn equation(entries: &[(Variable, f64, f64)]) -> CointegratingEquation {
    let mut eq = CointegratingEquation {
        coefficients: BTreeMap::new(),
        intercept: 0.0,
        std_errors: BTreeMap::new(),
        z_scores: BTreeMap::new(),
        significant_at_5pct: BTreeMap::new(),
        intercept_z: None,
        included: entries.iter().map(|e| e.0).collect(),
    };
    for v in Variable::REGRESSORS {
        eq.coefficients.insert(v, 0.0);
        eq.std_errors.insert(v, None);
        eq.z_scores.insert(v, None);
        eq.significant_at_5pct.insert(v, None);
    }
    for &(v, c, z) in entries {
        eq.coefficients.insert(v, c);
        eq.std_errors.insert(v, Some(c / z));
        eq.z_scores.insert(v, Some(z));
        eq.significant_at_5pct.insert(v, Some(z.abs() >= Z_CRITICAL_5PCT));
    }
    eq
}

fn correlation_rules() -> Outcome {
    use Variable::*;
    let e1 = equation(&[(Gpc, 0.7, 3.1), (Rd, 0.5, 1.2), (Md, -0.4, -1.96), (Ed, 0.2, 1.959_999)]);
    let e2 = equation(&[(Gpc, -0.2, -1.0), (Rd, 0.3, 0.9), (Md, 0.1, 1.5), (Ed, -0.3, -1.5)]);
    let e3 = equation(&[(Gpc, 0.1, 3.1), (Rd, -0.6, -1.3)]);
    let rows = correlation_from_equations(&[(1, &e1), (2, &e2), (3, &e3)]);
    let get = |v: Variable| rows.iter().find(|e| e.variable == v).expect("every regressor has a row");

    let gpc = get(Gpc);
    ensure(gpc.sign == Sign::Positive && gpc.significant_at_5pct, || format!("gpc {gpc:?}"))?;
    ensure(gpc.source_spec == Some(1), || format!("|z| tie should keep spec 1: {gpc:?}"))?;
    ensure(gpc.conflict, || "gpc signs disagree across specs".into())?;

    let rd = get(Rd);
    ensure(rd.sign == Sign::Negative && !rd.significant_at_5pct, || format!("rd {rd:?}"))?;
    ensure(rd.source_spec == Some(3), || format!("rd source {rd:?}"))?;

    let md = get(Md);
    ensure(md.sign == Sign::Negative && md.significant_at_5pct, || format!("|z| = 1.96 is significant: {md:?}"))?;

    let ed = get(Ed);
    ensure(ed.sign == Sign::Positive && !ed.significant_at_5pct, || format!("|z| = 1.959999 is not: {ed:?}"))?;

    let sd = get(Sd);
    ensure(sd.sign == Sign::None && sd.source_spec.is_none(), || format!("absent sd {sd:?}"))?;
    Ok("larger |z| wins, ties keep the earlier spec, 1.96 significant, 1.959999 not, absent -> none".into())
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let panel = tmp.path().join("panel.csv");
    write_panel(&panel, &[("NASA", 11), ("ESA", 12)], 60);
    let panel = panel.to_string_lossy().into_owned();
    let mut files = 0;
    for (name, args) in [
        ("pipeline", vec!["pipeline", "--input", panel.as_str()]),
        ("mc-validate", vec!["mc-validate", "--seed", "42", "--reps", "400", "--recovery-reps", "50"]),
    ] {
        let mut runs = Vec::new();
        for run in 0..2 {
            let dir = tmp.path().join(format!("{name}-{run}"));
            let mut full = args.clone();
            let dir_s = dir.to_string_lossy().into_owned();
            full.extend(["--out-dir", dir_s.as_str()]);
            let out = vela(&full);
            ensure(out.status.success(), || format!("{name} exit {:?}", out.status.code()))?;
            runs.push((out.stdout, read_dir_bytes(&dir)));
        }
        ensure(runs[0].0 == runs[1].0, || format!("{name}: stdout differs"))?;
        ensure(!runs[0].1.is_empty(), || format!("{name}: no artifacts"))?;
        ensure(runs[0].1 == runs[1].1, || format!("{name}: artifacts differ"))?;
        files += runs[0].1.len();
    }
    Ok(format!("{files} artifacts and stdout identical across reruns"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("mission headline", mission_headline),
        ("reference data fidelity", reference_fidelity),
        ("rank test validity", rank_validity),
        ("critical value cross-check", critical_values),
        ("beta recovery", beta_recovery),
        ("OLS oracle equivalence", ols_oracle),
        ("likelihood consistency", likelihood_consistency),
        ("ADF size", adf_size),
        ("stability check", stability),
        ("correlation table rules", correlation_rules),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
