//! Experiment drivers: seeded generators with exact ground-truth spectra,
//! convergence logging for the splitting algorithms (backward error of the
//! tentative invariant subspace after every squaring iteration), pipeline
//! benchmarks, and deterministic CSV reporting.

use num_complex::Complex64;
use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::AnyMatrix;
use crate::jacobi::spectral_norm;
use crate::kernels::mul;
use crate::ledger::CostLedger;
use crate::matrix::{Matrix, Norm};
use crate::random::{derive_seed, haar_orthogonal, seeded_rng};
use crate::randurv::{grurv, Exponent, ProductSpec};
use crate::splitdc::{irs_observed, nonsym_strategy, rsvd_drive, split_select, StrategyConfig};
use crate::trevc::{separation_condition, trevc_blocked, trevc_residual};

/// Matrix family with exactly known spectrum.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// Real normal matrix; eigenvalue real/imaginary parts uniform in
    /// `[-half_width, half_width]` (conjugate pairs), hidden by a Haar
    /// orthogonal similarity.
    NormalRandomSpectrum { n: usize, half_width: f64 },
    /// Real parts pinned to `±delta`, imaginary parts uniform in
    /// `[-1.5, 1.5]`; orthogonal eigenvectors.
    NearAxis { n: usize, delta: f64 },
    /// Half the eigenvalues random with negative real part, the other half
    /// a single Jordan block at `center`.
    JordanMix {
        n: usize,
        center: f64,
        block_size: usize,
    },
    /// Symmetric `Q diag(lambda) Q^T` with a jittered, well-separated grid.
    ConstructedSym { n: usize },
    /// `U0 diag(sigma) V0^T` with well-separated singular values.
    ConstructedSvd { n: usize },
}

impl Generator {
    pub fn n(&self) -> usize {
        match *self {
            Generator::NormalRandomSpectrum { n, .. }
            | Generator::NearAxis { n, .. }
            | Generator::JordanMix { n, .. }
            | Generator::ConstructedSym { n }
            | Generator::ConstructedSvd { n } => n,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Generator::ConstructedSym { .. })
    }
}

/// Generated matrix together with its exact spectrum (eigenvalues, or
/// singular values on the real axis for `ConstructedSvd`).
#[derive(Clone, Debug)]
pub struct Generated {
    pub matrix: AnyMatrix,
    pub spectrum: Vec<Complex64>,
}

/// Build a real matrix with the requested spectrum. Deterministic in
/// `(generator, seed)`.
pub fn generate(generator: &Generator, seed: u64) -> Result<Generated> {
    let ledger = CostLedger::noop();
    match *generator {
        Generator::NormalRandomSpectrum { n, half_width } => {
            let mut rng = seeded_rng(derive_seed(seed, 1));
            let mut spectrum = Vec::with_capacity(n);
            let mut blocks: Vec<(f64, f64)> = Vec::new();
            let mut left = n;
            while left >= 2 {
                let a = (rng.gen::<f64>() * 2.0 - 1.0) * half_width;
                let b = (rng.gen::<f64>() * 2.0 - 1.0) * half_width;
                blocks.push((a, b));
                spectrum.push(Complex64::new(a, b));
                spectrum.push(Complex64::new(a, -b));
                left -= 2;
            }
            let real_tail = if left == 1 {
                let a = (rng.gen::<f64>() * 2.0 - 1.0) * half_width;
                spectrum.push(Complex64::new(a, 0.0));
                Some(a)
            } else {
                None
            };
            let d = block_diagonal(n, &blocks, real_tail);
            let q: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 2), &ledger);
            let a = mul(&mul(&q, &d), &q.transpose());
            Ok(Generated {
                matrix: AnyMatrix::Real(a),
                spectrum,
            })
        }
        Generator::NearAxis { n, delta } => {
            let mut rng = seeded_rng(derive_seed(seed, 3));
            let mut spectrum = Vec::with_capacity(n);
            let mut blocks = Vec::new();
            let mut left = n;
            while left >= 2 {
                let re = if rng.gen::<bool>() { delta } else { -delta };
                let im = (rng.gen::<f64>() * 2.0 - 1.0) * 1.5;
                blocks.push((re, im));
                spectrum.push(Complex64::new(re, im));
                spectrum.push(Complex64::new(re, -im));
                left -= 2;
            }
            let real_tail = if left == 1 {
                let re = if rng.gen::<bool>() { delta } else { -delta };
                spectrum.push(Complex64::new(re, 0.0));
                Some(re)
            } else {
                None
            };
            let d = block_diagonal(n, &blocks, real_tail);
            let q: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 4), &ledger);
            let a = mul(&mul(&q, &d), &q.transpose());
            Ok(Generated {
                matrix: AnyMatrix::Real(a),
                spectrum,
            })
        }
        Generator::JordanMix {
            n,
            center,
            block_size,
        } => {
            if block_size > n {
                return Err(Error::InvalidArgument(format!(
                    "jordan block size {block_size} exceeds n = {n}"
                )));
            }
            let free = n - block_size;
            let mut rng = seeded_rng(derive_seed(seed, 5));
            let mut spectrum = Vec::with_capacity(n);
            let mut blocks = Vec::new();
            let mut left = free;
            while left >= 2 {
                let re = -(0.1 + 1.4 * rng.gen::<f64>());
                let im = (rng.gen::<f64>() * 2.0 - 1.0) * 1.5;
                blocks.push((re, im));
                spectrum.push(Complex64::new(re, im));
                spectrum.push(Complex64::new(re, -im));
                left -= 2;
            }
            let real_tail = if left == 1 {
                let re = -(0.1 + 1.4 * rng.gen::<f64>());
                spectrum.push(Complex64::new(re, 0.0));
                Some(re)
            } else {
                None
            };
            let small = block_diagonal(free, &blocks, real_tail);
            let mut full = Matrix::zeros(n, n);
            full.set_block(0, 0, &small);
            for k in 0..block_size {
                full[(free + k, free + k)] = center;
                if k + 1 < block_size {
                    full[(free + k, free + k + 1)] = 1.0;
                }
                spectrum.push(Complex64::new(center, 0.0));
            }
            let q: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 6), &ledger);
            let a = mul(&mul(&q, &full), &q.transpose());
            Ok(Generated {
                matrix: AnyMatrix::Real(a),
                spectrum,
            })
        }
        Generator::ConstructedSym { n } => {
            let mut rng = seeded_rng(derive_seed(seed, 7));
            let lam: Vec<f64> = (0..n)
                .map(|i| {
                    let grid = -2.0 + 4.0 * i as f64 / n.max(1) as f64;
                    grid + 1.6 / n.max(1) as f64 * rng.gen::<f64>()
                })
                .collect();
            let q: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 8), &ledger);
            let a = mul(&mul(&q, &Matrix::diagonal(&lam)), &q.transpose());
            let a = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
            Ok(Generated {
                matrix: AnyMatrix::Real(a),
                spectrum: lam.iter().map(|&l| Complex64::new(l, 0.0)).collect(),
            })
        }
        Generator::ConstructedSvd { n } => {
            let mut rng = seeded_rng(derive_seed(seed, 9));
            let mut sig: Vec<f64> = (0..n)
                .map(|i| {
                    0.5 + 2.0 * i as f64 / n.max(1) as f64
                        + 0.8 / n.max(1) as f64 * rng.gen::<f64>()
                })
                .collect();
            sig.sort_by(|a, b| b.total_cmp(a));
            let u: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 10), &ledger);
            let v: Matrix<f64> = haar_orthogonal(n, derive_seed(seed, 11), &ledger);
            let a = mul(&mul(&u, &Matrix::diagonal(&sig)), &v.transpose());
            Ok(Generated {
                matrix: AnyMatrix::Real(a),
                spectrum: sig.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
            })
        }
    }
}

fn block_diagonal(n: usize, blocks: &[(f64, f64)], real_tail: Option<f64>) -> Matrix<f64> {
    let mut d = Matrix::zeros(n, n);
    let mut at = 0usize;
    for &(a, b) in blocks {
        d[(at, at)] = a;
        d[(at, at + 1)] = b;
        d[(at + 1, at)] = -b;
        d[(at + 1, at + 1)] = a;
        at += 2;
    }
    if let Some(a) = real_tail {
        d[(at, at)] = a;
    }
    d
}

/// Dense eigensolver algorithm to drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Rnep,
    Rsep,
    Rgnep,
    Rsvd,
    SbrEig,
    SbrSvd,
    Trevc,
}

impl Algorithm {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "rnep" => Algorithm::Rnep,
            "rsep" => Algorithm::Rsep,
            "rgnep" => Algorithm::Rgnep,
            "rsvd" => Algorithm::Rsvd,
            "sbr_eig" => Algorithm::SbrEig,
            "sbr_svd" => Algorithm::SbrSvd,
            "trevc" => Algorithm::Trevc,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown algorithm '{other}'"
                )))
            }
        })
    }
}

/// Parsed experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: Generator,
    pub algorithm: Algorithm,
    pub cfg: StrategyConfig,
    pub m_words: usize,
    pub seed: u64,
    /// Backward-error level that counts as converged in the logs.
    pub convergence_threshold: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    name: Option<String>,
    algorithm: String,
    generator: String,
    n: usize,
    #[serde(rename = "box")]
    box_half_width: Option<f64>,
    delta: Option<f64>,
    center: Option<f64>,
    block_size: Option<usize>,
    m: Option<usize>,
    seed: Option<u64>,
    tau: Option<f64>,
    maxit: Option<usize>,
    split_accept_tol: Option<f64>,
    base_case_size: Option<usize>,
    max_failed_splits: Option<usize>,
    convergence_threshold: Option<f64>,
}

impl ExperimentSpec {
    /// Parse the key/value experiment file format (TOML).
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("experiment file: {e}")))?;
        let algorithm = Algorithm::parse(&raw.algorithm)?;
        let n = raw.n;
        let generator = match raw.generator.as_str() {
            "normal_random_spectrum" => Generator::NormalRandomSpectrum {
                n,
                half_width: raw.box_half_width.unwrap_or(1.5),
            },
            "near_axis" => Generator::NearAxis {
                n,
                delta: raw.delta.unwrap_or(1e-10),
            },
            "jordan_mix" => Generator::JordanMix {
                n,
                center: raw.center.unwrap_or(0.1),
                block_size: raw.block_size.unwrap_or(n / 2),
            },
            "constructed_sym" => Generator::ConstructedSym { n },
            "constructed_svd" => Generator::ConstructedSvd { n },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown generator '{other}'"
                )))
            }
        };
        let seed = raw.seed.unwrap_or(0x5eed);
        let mut cfg = StrategyConfig::for_problem(n, seed);
        if let Some(v) = raw.tau {
            cfg.tau = v;
        }
        if let Some(v) = raw.maxit {
            cfg.maxit = v;
        }
        if let Some(v) = raw.split_accept_tol {
            cfg.split_accept_tol = v;
        }
        if let Some(v) = raw.base_case_size {
            cfg.base_case_size = v;
        }
        if let Some(v) = raw.max_failed_splits {
            cfg.max_failed_splits = v;
        }
        let spec = ExperimentSpec {
            name: raw.name.unwrap_or_else(|| "experiment".to_string()),
            generator,
            algorithm,
            cfg,
            m_words: raw.m.unwrap_or(crate::ledger::DEFAULT_FAST_MEMORY),
            seed,
            convergence_threshold: raw.convergence_threshold.unwrap_or(1e-10),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let sym_needed = matches!(self.algorithm, Algorithm::Rsep | Algorithm::SbrEig);
        if sym_needed && !self.generator.is_symmetric() {
            return Err(Error::InvalidArgument(
                "symmetric algorithms need the constructed_sym generator".into(),
            ));
        }
        if matches!(self.algorithm, Algorithm::Rsvd | Algorithm::SbrSvd)
            && !matches!(self.generator, Generator::ConstructedSvd { .. })
        {
            return Err(Error::InvalidArgument(
                "SVD algorithms need the constructed_svd generator".into(),
            ));
        }
        if matches!(self.algorithm, Algorithm::Rnep | Algorithm::Rgnep)
            && self.generator.is_symmetric()
        {
            return Err(Error::InvalidArgument(
                "nonsymmetric drivers expect a nonsymmetric generator".into(),
            ));
        }
        if self.generator.n() == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        Ok(())
    }
}

/// One convergence-log row.
#[derive(Clone, Copy, Debug)]
pub struct IterationRow {
    pub iteration: usize,
    pub backward_error: f64,
}

/// Result of a driven experiment.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub name: String,
    pub n: usize,
    pub iterations: Vec<IterationRow>,
    /// First iteration at which the backward error crossed the threshold.
    pub converged_at: Option<usize>,
    pub final_error: f64,
    /// Accuracy of the final answer against the generator's ground truth
    /// (pipeline algorithms only).
    pub truth_error: Option<f64>,
    pub leaves: usize,
    pub enclosures: usize,
    pub cost_csv: String,
}

impl ExperimentRun {
    /// `iteration,backward_error` rows, 17-significant-digit scientific.
    pub fn iterations_csv(&self) -> String {
        let mut out = String::from("iteration,backward_error\n");
        for row in &self.iterations {
            out.push_str(&format!(
                "{},{}\n",
                row.iteration,
                fmt_float(row.backward_error)
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("name,n,converged_at,final_error,truth_error,leaves,enclosures\n");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            self.name,
            self.n,
            self.converged_at.map_or(String::new(), |i| i.to_string()),
            fmt_float(self.final_error),
            self.truth_error.map_or(String::new(), fmt_float),
            self.leaves,
            self.enclosures
        ));
        out
    }
}

fn fmt_float(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Run the experiment described by `spec`. Deterministic: identical specs
/// (including seed) produce byte-identical CSV output.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRun> {
    spec.validate()?;
    let generated = generate(&spec.generator, spec.seed)?;
    let ledger = CostLedger::new(spec.m_words);
    let n = spec.generator.n();

    match spec.algorithm {
        Algorithm::Rnep | Algorithm::Rsep | Algorithm::Rgnep => {
            let a = real_of(&generated)?;
            let (iterations, converged_at, final_error) = convergence_log(&a, spec, &ledger)?;
            // For the hard Jordan case, also run the full strategy so the
            // enclosure outcome is visible in the summary.
            let (leaves, enclosures) = if matches!(spec.generator, Generator::JordanMix { .. }) {
                let tree = nonsym_strategy(&a.to_complex(), &spec.cfg, &ledger)?;
                (tree.leaf_count(), tree.enclosures().len())
            } else {
                (0, 0)
            };
            Ok(ExperimentRun {
                name: spec.name.clone(),
                n,
                iterations,
                converged_at,
                final_error,
                truth_error: None,
                leaves,
                enclosures,
                cost_csv: ledger.csv_report(n, 1),
            })
        }
        Algorithm::Rsvd => {
            let a = real_of(&generated)?;
            let r = rsvd_drive(&a, &spec.cfg, &ledger)?;
            let truth = sigma_error(&r.sigma, &generated.spectrum, &a);
            Ok(ExperimentRun {
                name: spec.name.clone(),
                n,
                iterations: Vec::new(),
                converged_at: None,
                final_error: truth,
                truth_error: Some(truth),
                leaves: r.tree.leaf_count(),
                enclosures: r.tree.enclosures().len(),
                cost_csv: ledger.csv_report(n, 1),
            })
        }
        Algorithm::SbrEig => {
            let a = real_of(&generated)?;
            let res = crate::sbr::sbr_sym_eig(&a, spec.m_words, false, &ledger)?;
            let mut truth: Vec<f64> = generated.spectrum.iter().map(|z| z.re).collect();
            truth.sort_by(f64::total_cmp);
            let scale = a.norm(Norm::Fro).max(1e-300);
            let err = res
                .values
                .iter()
                .zip(&truth)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                / scale;
            Ok(ExperimentRun {
                name: spec.name.clone(),
                n,
                iterations: Vec::new(),
                converged_at: None,
                final_error: err,
                truth_error: Some(err),
                leaves: 0,
                enclosures: 0,
                cost_csv: ledger.csv_report(n, 1),
            })
        }
        Algorithm::SbrSvd => {
            let a = real_of(&generated)?;
            let res = crate::sbr::sbr_svd(&a, spec.m_words, false, &ledger)?;
            let err = sigma_error(&res.sigma, &generated.spectrum, &a);
            Ok(ExperimentRun {
                name: spec.name.clone(),
                n,
                iterations: Vec::new(),
                converged_at: None,
                final_error: err,
                truth_error: Some(err),
                leaves: 0,
                enclosures: 0,
                cost_csv: ledger.csv_report(n, 1),
            })
        }
        Algorithm::Trevc => {
            // Separated upper triangular matrix with the generated spectrum
            // on the diagonal.
            let mut rng = seeded_rng(derive_seed(spec.seed, 21));
            let mut diag: Vec<f64> = generated.spectrum.iter().map(|z| z.re).collect();
            diag.sort_by(f64::total_cmp);
            let t = Matrix::from_fn(n, n, |i, j| {
                if i > j {
                    0.0
                } else if i == j {
                    diag[i]
                } else {
                    (rng.gen::<f64>() - 0.5) * 2.0
                }
            });
            let r = trevc_blocked(&t, &ledger)?;
            let resid = trevc_residual(&t, &r) / t.norm(Norm::Fro).max(1e-300);
            Ok(ExperimentRun {
                name: spec.name.clone(),
                n,
                iterations: Vec::new(),
                converged_at: None,
                final_error: resid / separation_condition(&t),
                truth_error: Some(resid),
                leaves: 0,
                enclosures: 0,
                cost_csv: ledger.csv_report(n, 1),
            })
        }
    }
}

fn real_of(g: &Generated) -> Result<Matrix<f64>> {
    match &g.matrix {
        AnyMatrix::Real(m) => Ok(m.clone()),
        AnyMatrix::Complex(_) => Err(Error::InvalidArgument("expected a real generator".into())),
    }
}

fn sigma_error(sigma: &[f64], truth: &[Complex64], a: &Matrix<f64>) -> f64 {
    let mut want: Vec<f64> = truth.iter().map(|z| z.re).collect();
    want.sort_by(|x, y| y.total_cmp(x));
    let scale = spectral_norm(a).max(1e-300);
    sigma
        .iter()
        .zip(&want)
        .map(|(s, w)| (s - w).abs())
        .fold(0.0f64, f64::max)
        / scale
}

/// Convergence log of one splitting step along the imaginary axis: the
/// line `Re(z) = 0` maps to the unit circle through the pencil
/// `(A + I, A - I)`; after every squaring iteration the tentative
/// deflating subspace is computed and the backward error
/// `||E_21||_2 / ||A||_2` at the metric-minimizing split is logged (the
/// split position itself is chosen with the cheap 1-norm metric).
pub fn convergence_log(
    a: &Matrix<f64>,
    spec: &ExperimentSpec,
    ledger: &CostLedger,
) -> Result<(Vec<IterationRow>, Option<usize>, f64)> {
    let n = a.rows();
    let mut a_tilde = a.clone();
    let mut b_tilde = a.clone();
    for i in 0..n {
        a_tilde[(i, i)] += 1.0;
        b_tilde[(i, i)] -= 1.0;
    }
    let norm_a = spectral_norm(a).max(1e-300);
    let mut rows = Vec::new();
    let mut converged_at = None;
    let mut final_error = f64::INFINITY;
    let mut cfg = spec.cfg.clone();
    cfg.tau = 0.0; // run to maxit so the whole trajectory is visible
    let threshold = spec.convergence_threshold;
    let seed = spec.seed;

    let _ = irs_observed(&a_tilde, &b_tilde, &cfg, ledger, |st| {
        let sum = st.a.add(st.b);
        let prod = ProductSpec::new(vec![
            (sum, Exponent::Minus),
            (st.a.clone(), Exponent::Plus),
        ])
        .expect("square factors");
        let q = match grurv(&prod, derive_seed(seed, 1000 + st.iteration as u64), ledger) {
            Ok(g) => g.u,
            Err(_) => return, // singular iterate: no subspace this round
        };
        let a_hat = mul(&mul(&q.transpose(), a), &q);
        let Ok((k, _)) = split_select(&a_hat, None) else {
            return;
        };
        let e21 = a_hat.block(k..n, 0..k);
        let backward = spectral_norm(&e21) / norm_a;
        rows.push(IterationRow {
            iteration: st.iteration,
            backward_error: backward,
        });
        final_error = backward;
        if converged_at.is_none() && backward <= threshold {
            converged_at = Some(st.iteration);
        }
    })?;
    Ok((rows, converged_at, final_error))
}

/// One row of the cost-report schema.
#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub phase: String,
    pub flops: u64,
    pub words: u64,
    pub messages: u64,
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

/// Parse a cost CSV produced by [`CostLedger::csv_report`].
pub fn parse_cost_csv(text: &str) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 7 fields, got {}", parts.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad {what}: {e}"),
            })
        };
        rows.push(CostRow {
            phase: parts[0].to_string(),
            flops: num(parts[1], "flops")?,
            words: num(parts[2], "words")?,
            messages: num(parts[3], "messages")?,
            m: num(parts[4], "M")? as usize,
            n: num(parts[5], "n")? as usize,
            p: num(parts[6], "P")? as usize,
        });
    }
    Ok(rows)
}

/// Merge per-run cost rows into one report (rows preserved in input
/// order): `phase,flops,words,messages,M,n,P`.
pub fn report_costs(runs: &[Vec<CostRow>]) -> String {
    let mut out = String::from("phase,flops,words,messages,M,n,P\n");
    for rows in runs {
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.phase, r.flops, r.words, r.messages, r.m, r.n, r.p
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_matrices_carry_their_spectrum() {
        let g = generate(&Generator::ConstructedSym { n: 8 }, 3).unwrap();
        let a = real_of(&g).unwrap();
        let (vals, _) = crate::jacobi::jacobi_sym_eig(&a).unwrap();
        let mut want: Vec<f64> = g.spectrum.iter().map(|z| z.re).collect();
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(&want) {
            assert!((v - w).abs() < 1e-12 * a.norm(Norm::Fro).max(1.0));
        }
    }

    #[test]
    fn normal_generator_is_normal() {
        let g = generate(
            &Generator::NormalRandomSpectrum {
                n: 9,
                half_width: 1.5,
            },
            11,
        )
        .unwrap();
        let a = real_of(&g).unwrap();
        let aat = mul(&a, &a.transpose());
        let ata = mul(&a.transpose(), &a);
        let dev = aat.sub(&ata).norm(Norm::Fro) / a.norm(Norm::Fro).powi(2).max(1e-300);
        assert!(dev < 1e-12, "not normal: {dev:.3e}");
        assert_eq!(g.spectrum.len(), 9);
    }

    #[test]
    fn jordan_mix_has_multiple_root_at_center() {
        // det(A - z I) must vanish to order block_size at the center:
        // |p(center + h)| scales like |h|^block_size.
        let g = generate(
            &Generator::JordanMix {
                n: 6,
                center: 0.1,
                block_size: 3,
            },
            5,
        )
        .unwrap();
        let a = real_of(&g).unwrap().to_complex();
        let det = |z: Complex64| {
            let n = a.rows();
            let mut lu = a.clone();
            for i in 0..n {
                lu[(i, i)] -= z;
            }
            let mut d = Complex64::new(1.0, 0.0);
            for k in 0..n {
                let mut piv = k;
                for i in (k + 1)..n {
                    if lu[(i, k)].norm() > lu[(piv, k)].norm() {
                        piv = i;
                    }
                }
                if lu[(piv, k)].norm() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                if piv != k {
                    for j in 0..n {
                        let t = lu[(k, j)];
                        lu[(k, j)] = lu[(piv, j)];
                        lu[(piv, j)] = t;
                    }
                    d = -d;
                }
                d *= lu[(k, k)];
                for i in (k + 1)..n {
                    let f = lu[(i, k)] / lu[(k, k)];
                    for j in (k + 1)..n {
                        let x = lu[(k, j)];
                        lu[(i, j)] -= f * x;
                    }
                }
            }
            d
        };
        let h1 = 1e-3;
        let h2 = 1e-4;
        let r = det(Complex64::new(0.1 + h1, 0.0)).norm()
            / det(Complex64::new(0.1 + h2, 0.0)).norm();
        let expect = (h1 / h2).powi(3);
        assert!(
            r / expect > 0.2 && r / expect < 5.0,
            "multiplicity scaling off: ratio {r:.3e}, expected ~{expect:.3e}"
        );
    }

    #[test]
    fn spec_parsing_and_validation() {
        let text = r#"
name = "demo"
algorithm = "rnep"
generator = "normal_random_spectrum"
n = 10
box = 1.5
seed = 7
m = 1024
"#;
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.generator.n(), 10);
        assert_eq!(spec.m_words, 1024);

        let bad = r#"
algorithm = "rsep"
generator = "normal_random_spectrum"
n = 10
"#;
        assert!(ExperimentSpec::parse(bad).is_err());
    }

    #[test]
    fn experiment_runs_are_deterministic() {
        let text = r#"
name = "det"
algorithm = "rnep"
generator = "normal_random_spectrum"
n = 12
seed = 9
maxit = 8
"#;
        let spec = ExperimentSpec::parse(text).unwrap();
        let r1 = run_experiment(&spec).unwrap();
        let r2 = run_experiment(&spec).unwrap();
        assert_eq!(r1.iterations_csv(), r2.iterations_csv());
        assert_eq!(r1.summary_csv(), r2.summary_csv());
        assert_eq!(r1.cost_csv, r2.cost_csv);
        assert!(!r1.iterations.is_empty());
    }

    #[test]
    fn cost_csv_roundtrip_and_merge() {
        assert_eq!(report_costs(&[]), "phase,flops,words,messages,M,n,P\n");
        let ledger = CostLedger::new(128);
        {
            let _p = ledger.phase("demo");
            ledger.record_raw(10, 2, 100);
        }
        let csv = ledger.csv_report(32, 1);
        let rows = parse_cost_csv(&csv).unwrap();
        assert_eq!(rows.len(), 2); // phase row + total row
        assert_eq!(rows[0].phase, "demo");
        let merged = report_costs(&[rows.clone(), rows]);
        assert_eq!(merged.lines().count(), 5);
    }

    #[test]
    fn sbr_pipeline_experiment_reports_truth_error() {
        let text = r#"
name = "sbr"
algorithm = "sbr_eig"
generator = "constructed_sym"
n = 24
m = 1024
seed = 3
"#;
        let spec = ExperimentSpec::parse(text).unwrap();
        let run = run_experiment(&spec).unwrap();
        assert!(run.truth_error.unwrap() < 1e-9);
        assert!(run.cost_csv.contains("sym_to_band"));
    }

    #[test]
    fn words_scale_cubically_between_runs() {
        // Two runs of the same spec at different n: total words grow like
        // n^3 (fixed M keeps the blocking identical; both sizes must be
        // well out of cache for the law to show).
        let mk = |n: usize| {
            let text = format!(
                "name = \"w{n}\"\nalgorithm = \"sbr_eig\"\ngenerator = \"constructed_sym\"\nn = {n}\nm = 256\nseed = 4\n"
            );
            let spec = ExperimentSpec::parse(&text).unwrap();
            let run = run_experiment(&spec).unwrap();
            let rows = parse_cost_csv(&run.cost_csv).unwrap();
            rows.into_iter()
                .find(|r| r.phase == "total")
                .map(|r| r.words as f64)
                .unwrap()
        };
        let w1 = mk(96);
        let w2 = mk(192);
        let ratio = w2 / w1;
        assert!(
            ratio > 5.0 && ratio < 13.0,
            "words ratio {ratio:.2} not in the cubic ballpark"
        );
    }
}
