//! Specification search on simulated panels.

use vela_core::johansen::DeterministicCase;
use vela_core::numerics::Matrix;
use vela_core::panel::{AgencyId, LogLevelPanel, Variable};
use vela_core::spec_search::{enumerate_specifications, fit_specifications, search, SpecError};
use vela_core::synthetic::{generate_vecm_data, replication_seed, SyntheticSpec};

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

const RC: DeterministicCase = DeterministicCase::RestrictedConstant;

fn noise(t: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(t, p, |_, _| StandardNormal.sample(&mut rng))
}

fn cumsum(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 1..m.rows() {
        for j in 0..m.cols() {
            out[(i, j)] += out[(i - 1, j)];
        }
    }
    out
}

/// sb, gpc, md carry one relation; rd, ed, sd are independent random walks.
fn planted_panel(t: usize, seed: u64) -> LogLevelPanel {
    let z = generate_vecm_data(&SyntheticSpec::reference_r1(t, seed));
    let walks = cumsum(&noise(t, 3, seed ^ 0x5eed));
    LogLevelPanel::from_columns(
        AgencyId::Nasa,
        (0..t as i32).map(|y| 1900 + y).collect(),
        vec![
            (Variable::Sb, z.column(0)),
            (Variable::Gpc, z.column(1)),
            (Variable::Md, z.column(2)),
            (Variable::Rd, walks.column(0)),
            (Variable::Ed, walks.column(1)),
            (Variable::Sd, walks.column(2)),
        ],
    )
    .unwrap()
}

#[test]
fn planted_relation_survives() {
    let subset = vec![vec![Variable::Sb, Variable::Gpc, Variable::Md]];
    let survived = (0..100)
        .filter(|&i| {
            let panel = planted_panel(400, replication_seed(31, i));
            fit_specifications(&panel, &subset, &[1], RC).is_ok_and(|r| r.specs.len() == 1)
        })
        .count();
    println!("planted subset survived {survived}/100");
    assert!(survived >= 80);
}

#[test]
fn white_noise_mostly_has_no_survivors() {
    let subsets = enumerate_specifications(&Variable::ALL, 4).unwrap();
    let none = (0..40)
        .filter(|&i| {
            let panel = LogLevelPanel::from_matrix(AgencyId::Esa, 1950, &noise(100, 6, replication_seed(32, i))).unwrap();
            matches!(fit_specifications(&panel, &subsets, &[1, 2], RC), Err(SpecError::NoAdmissible { .. }))
        })
        .count();
    println!("white noise: no admissible spec in {none}/40");
    assert!(none > 20);
}

#[test]
fn duplicate_column_records_singularity() {
    let mut panel_cols = Vec::new();
    let base = planted_panel(200, 33);
    for v in Variable::ALL {
        let src = if v == Variable::Ed { Variable::Sd } else { v };
        panel_cols.push((v, base.series(src).unwrap().to_vec()));
    }
    let panel = LogLevelPanel::from_columns(AgencyId::Jaxa, base.years().to_vec(), panel_cols).unwrap();
    let report = search(&panel, &Variable::ALL, 4, &[1, 2], RC).unwrap();
    let both = |vars: &[Variable]| vars.contains(&Variable::Ed) && vars.contains(&Variable::Sd);
    assert!(report.specs.iter().all(|s| !both(&s.vars)));
    let dup_failures: Vec<_> = report.failures.iter().filter(|f| both(&f.vars)).collect();
    assert!(!dup_failures.is_empty());
    for f in &dup_failures {
        assert!(f.selected_rank.is_none(), "{f:?}");
        assert!(f.reason.contains("singular") || f.reason.contains("degenerate"), "{}", f.reason);
    }
    assert!(report
        .specs
        .iter()
        .any(|s| s.vars.contains(&Variable::Ed) != s.vars.contains(&Variable::Sd)));
}

#[test]
fn report_is_byte_identical_across_runs() {
    let panel = planted_panel(120, 34);
    let a = search(&panel, &Variable::ALL, 4, &[1, 2], RC).map(|r| serde_json::to_string(&r).unwrap());
    let b = search(&panel, &Variable::ALL, 4, &[1, 2], RC).map(|r| serde_json::to_string(&r).unwrap());
    assert_eq!(a, b);
}
