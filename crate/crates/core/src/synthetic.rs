//! Seeded VECM simulators and Monte Carlo harnesses used as ground truth.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::johansen::{
    concentrate_matrix, critical_value, rank_test, DeterministicCase, JohansenError, RankStatistic, SignificanceLevel,
};
use crate::numerics::{general_eigenvalues, lu_solve, symmetric_eigendecomposition, Matrix, NumericsError};
use crate::panel::Variable;
use crate::vecm::{companion_matrix, estimate_vecm_matrix, VecmError, VecmModel};

/// Identifies the innovation stream: ChaCha8 seeded from a u64, standard
/// normal draws by `rand_distr`, row-major per period.
pub const GENERATOR_ID: &str = "chacha8-stdnormal-v1";

pub const BURN_IN: usize = 50;

const BOOTSTRAP_RESAMPLES: usize = 200;
const ROOT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic specification: {0}")]
    InvalidSpec(String),
    #[error("invalid study settings: {0}")]
    InvalidStudy(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Vecm(#[from] VecmError),
    #[error(transparent)]
    Johansen(#[from] JohansenError),
    #[error("io: {0}")]
    Io(String),
}

/// splitmix64 finalizer applied to `base + index`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Data-generating VECM. Construct through [`SyntheticSpec::new`], which
/// checks the companion spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub r: usize,
    pub case: DeterministicCase,
    /// `p × r`.
    pub alpha_true: Matrix,
    /// `p × r`, or `(p + 1) × r` with the restricted constant last.
    pub beta_true: Matrix,
    pub gamma_true: Vec<Matrix>,
    pub mu_true: Vec<f64>,
    pub noise_scale: f64,
    #[serde(rename = "T")]
    pub t_len: usize,
    pub seed: u64,
    pub generator_id: String,
}

impl SyntheticSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        case: DeterministicCase,
        alpha_true: Matrix,
        beta_true: Matrix,
        gamma_true: Vec<Matrix>,
        mu_true: Vec<f64>,
        noise_scale: f64,
        t_len: usize,
        seed: u64,
    ) -> Result<Self, SyntheticError> {
        let spec = SyntheticSpec {
            p: alpha_true.rows(),
            r: alpha_true.cols(),
            case,
            alpha_true,
            beta_true,
            gamma_true,
            mu_true,
            noise_scale,
            t_len,
            seed,
            generator_id: GENERATOR_ID.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `p` independent random walks (`r = 0`) with optional drift.
    pub fn random_walks(p: usize, drift: f64, t_len: usize, seed: u64) -> Result<Self, SyntheticError> {
        let case = if drift == 0.0 {
            DeterministicCase::RestrictedConstant
        } else {
            DeterministicCase::UnrestrictedConstant
        };
        let p1 = p + usize::from(case == DeterministicCase::RestrictedConstant);
        Self::new(case, Matrix::zeros(p, 0), Matrix::zeros(p1, 0), vec![], vec![drift; p], 1.0, t_len, seed)
    }

    /// The reference r = 1 system: p = 3, β = (1, −2, 0.5), α = (−0.3, 0.1, 0.1),
    /// no short-run dynamics, restricted constant −1.
    pub fn reference_r1(t_len: usize, seed: u64) -> Self {
        Self::new(
            DeterministicCase::RestrictedConstant,
            Matrix::column_vector(&[-0.3, 0.1, 0.1]),
            Matrix::column_vector(&[1.0, -2.0, 0.5, -1.0]),
            vec![],
            vec![0.0; 3],
            1.0,
            t_len,
            seed,
        )
        .expect("reference system is valid")
    }

    pub fn k(&self) -> usize {
        self.gamma_true.len() + 1
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SyntheticSpec { seed, ..self.clone() }
    }

    fn p1(&self) -> usize {
        self.p + usize::from(self.case == DeterministicCase::RestrictedConstant)
    }

    fn as_model(&self) -> Result<VecmModel, SyntheticError> {
        let vars = (0..self.p).map(|i| Variable::ALL[i % Variable::ALL.len()]).collect();
        Ok(VecmModel::from_parameters(
            vars,
            self.case,
            self.alpha_true.clone(),
            self.beta_true.clone(),
            self.gamma_true.clone(),
            self.mu_true.clone(),
        )?)
    }

    /// Exactly `p − r` companion roots on the unit circle, the rest strictly inside.
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::InvalidSpec(m));
        if self.p == 0 || self.p > Variable::ALL.len() {
            return bad(format!("p = {} outside 1..=6", self.p));
        }
        if self.r >= self.p {
            return bad(format!("rank {} must be below p = {}", self.r, self.p));
        }
        if self.beta_true.rows() != self.p1() || self.beta_true.cols() != self.r {
            return bad(format!(
                "beta is {}x{}, expected {}x{}",
                self.beta_true.rows(),
                self.beta_true.cols(),
                self.p1(),
                self.r
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad("noise_scale must be finite and non-negative".into());
        }
        if self.case == DeterministicCase::RestrictedConstant && self.mu_true.iter().any(|m| *m != 0.0) {
            return bad("restricted-constant systems carry their constant in beta; mu must be zero".into());
        }
        let model = self.as_model()?;
        let eig = general_eigenvalues(&companion_matrix(&model))?;
        let moduli: Vec<f64> = eig.iter().map(|c| c.modulus()).collect();
        let units = eig
            .iter()
            .filter(|c| (c.re - 1.0).abs() <= ROOT_TOL && c.im.abs() <= ROOT_TOL)
            .count();
        let others_inside = moduli.iter().filter(|m| (*m - 1.0).abs() > ROOT_TOL).all(|m| *m < 1.0);
        if units != self.p - self.r || !others_inside {
            return bad(format!(
                "companion has {units} unit roots (expected {}) and moduli {moduli:?}",
                self.p - self.r
            ));
        }
        Ok(())
    }
}

/// Simulates `T` observations after discarding [`BURN_IN`] periods; the
/// recursion starts from zero levels.
pub fn generate_vecm_data(spec: &SyntheticSpec) -> Matrix {
    let p = spec.p;
    let k = spec.k();
    let total = spec.t_len + BURN_IN + k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut z = Matrix::zeros(total, p);
    let mut ect = vec![0.0; spec.r];
    for t in k..total {
        for (c, e) in ect.iter_mut().enumerate() {
            *e = (0..spec.beta_true.rows())
                .map(|i| spec.beta_true[(i, c)] * if i < p { z[(t - 1, i)] } else { 1.0 })
                .sum();
        }
        for i in 0..p {
            let mut dz = spec.mu_true[i];
            for (c, e) in ect.iter().enumerate() {
                dz += spec.alpha_true[(i, c)] * e;
            }
            for (lag, g) in spec.gamma_true.iter().enumerate() {
                for j in 0..p {
                    dz += g[(i, j)] * (z[(t - 1 - lag, j)] - z[(t - 2 - lag, j)]);
                }
            }
            let eps: f64 = rng.sample(StandardNormal);
            z[(t, i)] = z[(t - 1, i)] + dz + spec.noise_scale * eps;
        }
    }
    z.select_rows(total - spec.t_len..total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCriticalValues {
    pub p_minus_r: usize,
    pub case: DeterministicCase,
    pub reps: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
    pub seed: u64,
    pub generator_id: String,
    pub pct90: f64,
    pub pct95: f64,
    pub pct99: f64,
    pub se90: f64,
    pub se95: f64,
    pub se99: f64,
    /// Embedded 5% trace value for comparison.
    pub table95: Option<f64>,
}

impl McCriticalValues {
    /// Relative deviation of the simulated 95th percentile from the table.
    pub fn relative_error95(&self) -> Option<f64> {
        self.table95.map(|t| (self.pct95 - t).abs() / t)
    }
}

/// Drift used for the unrestricted-constant null, whose tables assume
/// trending levels.
pub const NULL_DRIFT: f64 = 1.0;

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Empirical 90/95/99 percentiles of the rank-0 trace statistic for
/// `p_minus_r` independent random walks, with bootstrap standard errors.
pub fn monte_carlo_critical_values(
    p_minus_r: usize,
    case: DeterministicCase,
    reps: usize,
    t_len: usize,
    seed: u64,
) -> Result<McCriticalValues, SyntheticError> {
    if p_minus_r == 0 || p_minus_r > 6 {
        return Err(SyntheticError::InvalidStudy(format!("p - r = {p_minus_r} outside 1..=6")));
    }
    if reps < 2 {
        return Err(SyntheticError::InvalidStudy("need at least two replications".into()));
    }
    let drift = match case {
        DeterministicCase::RestrictedConstant => 0.0,
        DeterministicCase::UnrestrictedConstant => NULL_DRIFT,
    };
    let base = SyntheticSpec::random_walks(p_minus_r, drift, t_len, seed)?;
    let stats = (0..reps)
        .into_par_iter()
        .map(|i| {
            let data = generate_vecm_data(&base.with_seed(replication_seed(seed, i as u64)));
            let m = concentrate_matrix(&data, 1, case)?;
            Ok(rank_test(&m, case, SignificanceLevel::Pct5)?.trace_stats[0])
        })
        .collect::<Result<Vec<f64>, SyntheticError>>()?;
    let mut sorted = stats.clone();
    sorted.sort_by(f64::total_cmp);
    let qs = [0.90, 0.95, 0.99];
    let point: Vec<f64> = qs.iter().map(|&q| percentile(&sorted, q)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(seed, u64::MAX));
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); 3];
    let mut sample = vec![0.0; reps];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for s in sample.iter_mut() {
            *s = stats[rng.gen_range(0..reps)];
        }
        sample.sort_by(f64::total_cmp);
        for (b, &q) in boot.iter_mut().zip(&qs) {
            b.push(percentile(&sample, q));
        }
    }
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok(McCriticalValues {
        p_minus_r,
        case,
        reps,
        t_len,
        seed,
        generator_id: GENERATOR_ID.to_string(),
        pct90: point[0],
        pct95: point[1],
        pct99: point[2],
        se90: sd(&boot[0]),
        se95: sd(&boot[1]),
        se99: sd(&boot[2]),
        table95: critical_value(case, RankStatistic::Trace, SignificanceLevel::Pct5, p_minus_r),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReplication {
    pub rep: usize,
    pub seed: u64,
    pub selected_rank: usize,
    pub beta_angle_deg: f64,
    pub alpha_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub reps: usize,
    pub true_rank: usize,
    pub rank_accuracy: f64,
    pub beta_angle_median_deg: f64,
    pub alpha_rmse: f64,
    pub seed: u64,
    pub generator_id: String,
    pub replications: Vec<RecoveryReplication>,
}

impl RecoverySummary {
    /// Per-replication statistics as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SyntheticError> {
        let mut w = csv::Writer::from_writer(out);
        for rep in &self.replications {
            w.serialize(rep).map_err(|e| SyntheticError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| SyntheticError::Io(e.to_string()))
    }
}

fn orthonormal_columns(m: &Matrix) -> Matrix {
    let mut q = m.clone();
    for j in 0..q.cols() {
        for prev in 0..j {
            let dot: f64 = (0..q.rows()).map(|i| q[(i, j)] * q[(i, prev)]).sum();
            for i in 0..q.rows() {
                q[(i, j)] -= dot * q[(i, prev)];
            }
        }
        let norm = (0..q.rows()).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
        for i in 0..q.rows() {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// Largest principal angle (degrees) between the column spaces of `a` and `b`.
pub fn subspace_angle_deg(a: &Matrix, b: &Matrix) -> Result<f64, SyntheticError> {
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    let c = qa.t_matmul(&qb);
    let eig = symmetric_eigendecomposition(&c.t_matmul(&c))?;
    let smallest = eig.eigenvalues.last().copied().unwrap_or(1.0).clamp(0.0, 1.0);
    Ok(smallest.sqrt().min(1.0).acos().to_degrees())
}

/// Identity-normalizes `β` on its top block and rescales `α` so `αβ′` is unchanged.
fn normalized_truth(spec: &SyntheticSpec) -> Result<Matrix, SyntheticError> {
    let r = spec.r;
    let top = spec.beta_true.select_rows(0..r);
    // β·top⁻¹ must exist for the estimator's normalization to be comparable.
    lu_solve(&top, &Matrix::identity(r))
        .map_err(|_| SyntheticError::InvalidSpec("beta cannot be normalized on its leading block".into()))?;
    Ok(spec.alpha_true.matmul(&top.transpose()))
}

/// Generate → rank test → estimate at the true rank → compare, repeated
/// over seeds derived from `spec.seed`.
pub fn run_recovery_study(spec: &SyntheticSpec, reps: usize) -> Result<RecoverySummary, SyntheticError> {
    if spec.r == 0 {
        return Err(SyntheticError::InvalidStudy("recovery needs a true rank of at least 1".into()));
    }
    if reps == 0 {
        return Err(SyntheticError::InvalidStudy("need at least one replication".into()));
    }
    let vars: Vec<Variable> = Variable::ALL[..spec.p].to_vec();
    let alpha_norm = normalized_truth(spec)?;
    let beta_levels_true = spec.beta_true.select_rows(0..spec.p);
    let replications = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(spec.seed, rep as u64);
            let data = generate_vecm_data(&spec.with_seed(seed));
            let m = concentrate_matrix(&data, spec.k(), spec.case)?;
            let selected_rank = rank_test(&m, spec.case, SignificanceLevel::Pct5)?.selected_rank;
            let model = estimate_vecm_matrix(&data, &vars, spec.k(), spec.r, spec.case)?;
            let beta_angle_deg = subspace_angle_deg(&model.beta.select_rows(0..spec.p), &beta_levels_true)?;
            let diff = model.alpha.sub(&alpha_norm);
            let n = (diff.rows() * diff.cols()) as f64;
            let alpha_rmse = (diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n).sqrt();
            Ok(RecoveryReplication {
                rep,
                seed,
                selected_rank,
                beta_angle_deg,
                alpha_rmse,
            })
        })
        .collect::<Result<Vec<_>, SyntheticError>>()?;

    let hits = replications.iter().filter(|r| r.selected_rank == spec.r).count();
    let mut angles: Vec<f64> = replications.iter().map(|r| r.beta_angle_deg).collect();
    angles.sort_by(f64::total_cmp);
    let median = if reps % 2 == 1 {
        angles[reps / 2]
    } else {
        0.5 * (angles[reps / 2 - 1] + angles[reps / 2])
    };
    let alpha_rmse =
        (replications.iter().map(|r| r.alpha_rmse * r.alpha_rmse).sum::<f64>() / reps as f64).sqrt();
    Ok(RecoverySummary {
        reps,
        true_rank: spec.r,
        rank_accuracy: hits as f64 / reps as f64,
        beta_angle_median_deg: median,
        alpha_rmse,
        seed: spec.seed,
        generator_id: spec.generator_id.clone(),
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unit_root::{adf_test, AdfDeterministic};

    #[test]
    fn seeds_are_mixed_and_stable() {
        assert_ne!(replication_seed(1, 0), replication_seed(0, 1).wrapping_add(1));
        assert_eq!(replication_seed(42, 7), replication_seed(42, 7));
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| replication_seed(9, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn noiseless_drift_is_linear() {
        let d = [0.1, -0.3];
        let mut spec = SyntheticSpec::random_walks(2, 0.5, 30, 1).unwrap();
        spec.mu_true = d.to_vec();
        spec.noise_scale = 0.0;
        let z = generate_vecm_data(&spec);
        for t in 1..30 {
            for i in 0..2 {
                assert!((z[(t, i)] - z[(0, i)] - t as f64 * d[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_path() {
        let spec = SyntheticSpec::reference_r1(100, 77);
        assert_eq!(generate_vecm_data(&spec), generate_vecm_data(&spec));
        assert_ne!(generate_vecm_data(&spec), generate_vecm_data(&spec.with_seed(78)));
    }

    #[test]
    fn invalid_spectra_rejected() {
        // α with the wrong sign pushes a root outside the unit circle.
        let explosive = SyntheticSpec::new(
            DeterministicCase::UnrestrictedConstant,
            Matrix::column_vector(&[0.3, 0.0]),
            Matrix::column_vector(&[1.0, -1.0]),
            vec![],
            vec![0.0; 2],
            1.0,
            100,
            1,
        );
        assert!(matches!(explosive, Err(SyntheticError::InvalidSpec(_))));
        // α orthogonal to β leaves every root at 1.
        let degenerate = SyntheticSpec::new(
            DeterministicCase::UnrestrictedConstant,
            Matrix::column_vector(&[1.0, 1.0]),
            Matrix::column_vector(&[1.0, -1.0]),
            vec![],
            vec![0.0; 2],
            1.0,
            100,
            1,
        );
        assert!(matches!(degenerate, Err(SyntheticError::InvalidSpec(_))));
    }

    #[test]
    fn equilibrium_error_is_stationary() {
        let spec = SyntheticSpec::reference_r1(400, 2024);
        let mut rejections = 0;
        for rep in 0..200 {
            let z = generate_vecm_data(&spec.with_seed(replication_seed(spec.seed, rep)));
            let ect: Vec<f64> = (0..z.rows())
                .map(|t| z[(t, 0)] - 2.0 * z[(t, 1)] + 0.5 * z[(t, 2)] - 1.0)
                .collect();
            if adf_test(&ect, 1, AdfDeterministic::Constant).unwrap().reject_unit_root_at_5pct {
                rejections += 1;
            }
        }
        assert!(rejections >= 180, "{rejections}/200");
    }

    #[test]
    fn subspace_angles() {
        let a = Matrix::column_vector(&[1.0, 0.0, 0.0]);
        let b = Matrix::column_vector(&[1.0, 1.0, 0.0]);
        assert!((subspace_angle_deg(&a, &b).unwrap() - 45.0).abs() < 1e-10);
        assert!(subspace_angle_deg(&a, &a.scale(-3.0)).unwrap() < 1e-6);
    }

    #[test]
    fn percentiles_ordered_and_se_scales() {
        let small = monte_carlo_critical_values(1, DeterministicCase::RestrictedConstant, 1000, 400, 5).unwrap();
        assert!(small.pct90 < small.pct95 && small.pct95 < small.pct99);
        let big = monte_carlo_critical_values(1, DeterministicCase::RestrictedConstant, 2000, 400, 5).unwrap();
        let ratio = small.se95 / big.se95;
        assert!(ratio > 1.0 && ratio < 2.2, "se ratio {ratio}");
    }

    #[test]
    fn near_noiseless_recovery() {
        // A drifting common trend dominates the vanishing noise, pinning β.
        let spec = SyntheticSpec::new(
            DeterministicCase::UnrestrictedConstant,
            Matrix::column_vector(&[-0.3, 0.1]),
            Matrix::column_vector(&[1.0, -2.0]),
            vec![],
            vec![0.05, 0.05],
            1e-8,
            100,
            3,
        )
        .unwrap();
        let summary = run_recovery_study(&spec, 20).unwrap();
        assert!(summary.beta_angle_median_deg < 0.1, "{}", summary.beta_angle_median_deg);
    }

    #[test]
    fn pure_noise_scaling_leaves_estimates_unchanged() {
        let unit = SyntheticSpec::reference_r1(100, 3);
        let mut tiny = unit.clone();
        tiny.noise_scale = 1e-8;
        tiny.beta_true[(3, 0)] = 0.0;
        let mut unit0 = unit;
        unit0.beta_true[(3, 0)] = 0.0;
        let a = run_recovery_study(&unit0, 5).unwrap();
        let b = run_recovery_study(&tiny, 5).unwrap();
        for (x, y) in a.replications.iter().zip(&b.replications) {
            assert!((x.beta_angle_deg - y.beta_angle_deg).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let summary = run_recovery_study(&SyntheticSpec::reference_r1(200, 4), 5).unwrap();
        let mut buf = Vec::new();
        summary.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rep,seed,selected_rank,beta_angle_deg,alpha_rmse"));
        assert_eq!(text.lines().count(), 6);
    }
}
