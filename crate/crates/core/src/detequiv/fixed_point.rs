//! The resolvent fixed point `T(ρ, I, {S_j})`, its `δ` system and the
//! derivative quantities `δ'`, `T'`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{condition_number_real, eye, hermitize, hpd_inverse, trace_product, CMat};

#[derive(Debug, Clone)]
pub struct FixedPointProblem {
    /// `ρ > 0`
    pub rho: f64,
    /// Ambient dimension `I` used in the `1/I` normalizations.
    pub dim: usize,
    /// `S_1 … S_J`, Hermitian PSD `I × I`.
    pub signatures: Vec<CMat>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `max_k |δ_k^{(t)} − δ_k^{(t−1)}| / δ_k^{(t)}` drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-12, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub delta: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Relative residual after every iteration.
    pub history: Vec<f64>,
    pub t: CMat,
}

impl FixedPointProblem {
    pub fn new(rho: f64, dim: usize, signatures: Vec<CMat>) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {rho}")));
        }
        if let Some(s) = signatures.iter().find(|s| s.dim() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!("signature is {:?}, expected {dim}x{dim}", s.dim())));
        }
        Ok(FixedPointProblem { rho, dim, signatures })
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    /// `(1/I) tr S_k X` for every `k`, real part.
    fn normalized_traces(&self, x: &CMat) -> Vec<f64> {
        let inv = 1.0 / self.dim as f64;
        self.signatures.iter().map(|s| trace_product(&s.view(), &x.view()).re * inv).collect()
    }
}

/// `T = ((1/I) Σ_j S_j/(1+δ_j) + ρ I)^{-1}`.
pub fn build_t(problem: &FixedPointProblem, delta: &[f64]) -> Result<CMat> {
    if delta.len() != problem.len() {
        return Err(Error::DimensionMismatch(format!("{} deltas for {} signatures", delta.len(), problem.len())));
    }
    let inv = 1.0 / problem.dim as f64;
    let mut a = eye(problem.dim).mapv(|z| z * problem.rho);
    for (s, d) in problem.signatures.iter().zip(delta) {
        let w = inv / (1.0 + d);
        a.zip_mut_with(s, |acc, v| *acc += v * w);
    }
    hpd_inverse(&hermitize(&a.view()).view())
}

/// Iterates `δ_k ← (1/I) tr S_k T(δ)` from `δ^{(0)} = 1/ρ`.
pub fn fixed_point_deltas(problem: &FixedPointProblem, opts: &SolverOptions) -> Result<FixedPointSolution> {
    if problem.is_empty() {
        return Ok(FixedPointSolution {
            delta: Vec::new(),
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
            t: eye(problem.dim).mapv(|z| z / problem.rho),
        });
    }
    let mut delta = vec![1.0 / problem.rho; problem.len()];
    let mut history = Vec::new();
    for it in 1..=opts.max_iterations {
        let t = build_t(problem, &delta)?;
        let next = problem.normalized_traces(&t);
        let residual = next
            .iter()
            .zip(&delta)
            .map(|(n, o)| if *n > 0.0 { (n - o).abs() / n } else { (n - o).abs() })
            .fold(0.0, f64::max);
        history.push(residual);
        delta = next;
        if residual < opts.tolerance {
            let t = build_t(problem, &delta)?;
            return Ok(FixedPointSolution { delta, iterations: it, residual, history, t });
        }
    }
    let residual = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence { iterations: opts.max_iterations, residual })
}

#[derive(Debug, Clone)]
pub struct DeltaPrime {
    pub delta_prime: Vec<f64>,
    /// `[J]_{kj} = (1/I) tr S_k T S_j T / (I (1+δ_j)²)`
    pub j: Array2<f64>,
    /// `[v]_k = (1/I) tr S_k T F T`
    pub v: Vec<f64>,
    /// Condition number of `I_J − J`.
    pub condition: f64,
}

/// Products `S_j T` and the `J` matrix, shared by every `δ'` solve of one fixed point.
#[derive(Debug, Clone)]
pub struct SignatureProducts {
    pub st: Vec<CMat>,
    pub j: Array2<f64>,
    /// `(I_J − J)^{-1}`; `J` is at most a few dozen users wide.
    inv_ij: Array2<f64>,
    pub condition: f64,
}

impl SignatureProducts {
    pub fn new(problem: &FixedPointProblem, sol: &FixedPointSolution) -> Result<Self> {
        let inv = 1.0 / problem.dim as f64;
        let st: Vec<CMat> = problem.signatures.iter().map(|s| s.dot(&sol.t)).collect();
        let n = st.len();
        let mut j = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            for l in k..n {
                let tr = trace_product(&st[k].view(), &st[l].view()).re * inv;
                j[[k, l]] = tr * inv / (1.0 + sol.delta[l]).powi(2);
                j[[l, k]] = tr * inv / (1.0 + sol.delta[k]).powi(2);
            }
        }
        let mut ij = -j.clone();
        for k in 0..n {
            ij[[k, k]] += 1.0;
        }
        let condition = if n > 0 { condition_number_real(&ij)? } else { 1.0 };
        if !condition.is_finite() || condition > 1e14 {
            return Err(Error::SingularSystem);
        }
        let inv_ij = invert_small(&ij)?;
        Ok(SignatureProducts { st, j, inv_ij, condition })
    }

    /// `δ'` for a given `F`, from `v_k = (1/I) tr (S_k T) (F T)`.
    pub fn delta_primes(&self, problem: &FixedPointProblem, sol: &FixedPointSolution, f: &CMat) -> DeltaPrime {
        let ft = f.dot(&sol.t);
        let v = self.v_from(problem, &ft);
        self.solve(v)
    }

    /// `δ'` when `F = S_m`: `v` is then a column of the already known traces.
    pub fn delta_primes_for_signature(&self, problem: &FixedPointProblem, sol: &FixedPointSolution, m: usize) -> DeltaPrime {
        let v: Vec<f64> = (0..self.st.len())
            .map(|k| self.j[[k, m]] * problem.dim as f64 * (1.0 + sol.delta[m]).powi(2))
            .collect();
        self.solve(v)
    }

    fn v_from(&self, problem: &FixedPointProblem, ft: &CMat) -> Vec<f64> {
        let inv = 1.0 / problem.dim as f64;
        self.st.iter().map(|st| trace_product(&st.view(), &ft.view()).re * inv).collect()
    }

    fn solve(&self, v: Vec<f64>) -> DeltaPrime {
        let delta_prime = self.inv_ij.dot(&ndarray::Array1::from(v.clone())).to_vec();
        DeltaPrime { delta_prime, j: self.j.clone(), v, condition: self.condition }
    }
}

fn invert_small(a: &Array2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::Inverse;
    if a.is_empty() {
        return Ok(a.clone());
    }
    a.inv().map_err(|_| Error::SingularSystem)
}

/// `δ' = (I_J − J)^{-1} v`.
pub fn delta_primes(problem: &FixedPointProblem, sol: &FixedPointSolution, f: &CMat) -> Result<DeltaPrime> {
    Ok(SignatureProducts::new(problem, sol)?.delta_primes(problem, sol, f))
}

/// `T' = T F T + (1/I) T (Σ_j S_j δ'_j/(1+δ_j)²) T`.
pub fn build_t_prime(problem: &FixedPointProblem, sol: &FixedPointSolution, dp: &[f64], f: &CMat) -> CMat {
    let inv = 1.0 / problem.dim as f64;
    let mut inner = f.clone();
    for ((s, d), p) in problem.signatures.iter().zip(&sol.delta).zip(dp) {
        let w = inv * p / (1.0 + d).powi(2);
        inner.zip_mut_with(s, |acc, v| *acc += v * w);
    }
    let out = sol.t.dot(&inner).dot(&sol.t);
    hermitize(&out.view())
}

/// Identity-`F` shortcut, `T̄' = T'(F = I)`.
pub fn build_t_prime_identity(problem: &FixedPointProblem, sol: &FixedPointSolution, products: &SignatureProducts) -> (DeltaPrime, CMat) {
    let f = eye(problem.dim);
    let dp = products.delta_primes(problem, sol, &f);
    let t_prime = build_t_prime(problem, sol, &dp.delta_prime, &f);
    (dp, t_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_deviation, relative_frobenius_error, trace, C64};
    use crate::rng::{complex_normal, stream_rng, Stream};
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    fn identity_problem(n: usize) -> FixedPointProblem {
        FixedPointProblem::new(1.0, n, vec![eye(n); n]).unwrap()
    }

    fn random_psd(dim: usize, rank: usize, seed: u64) -> CMat {
        let mut rng = stream_rng(seed, Stream::Test, 21, 0);
        let x = CMat::from_shape_fn((dim, rank), |_| complex_normal(&mut rng));
        let s = x.dot(&x.t().mapv(|z| z.conj())).mapv(|z| z / rank as f64);
        hermitize(&s.view())
    }

    #[test]
    fn empty_problem() {
        let p = FixedPointProblem::new(2.0, 3, vec![]).unwrap();
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        assert!(sol.delta.is_empty());
        let half = eye(3).mapv(|z| z * 0.5);
        assert!(relative_frobenius_error(&sol.t.view(), &half.view()) < 1e-15);
        assert!(relative_frobenius_error(&build_t(&p, &[]).unwrap().view(), &half.view()) < 1e-15);
        let tp = build_t_prime(&p, &sol, &[], &eye(3));
        for i in 0..3 {
            assert!((tp[[i, i]].re - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_ratio_instance() {
        let n = 6;
        let p = identity_problem(n);
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        for d in &sol.delta {
            assert!((d - GOLDEN).abs() < 1e-10);
        }
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { GOLDEN } else { 0.0 };
                assert!((sol.t[[i, j]] - C64::new(e, 0.0)).norm() < 1e-10);
            }
        }
        let dp = delta_primes(&p, &sol, &eye(n)).unwrap();
        // δ' = δ² / (1 − δ²/(1+δ)²) = 1/√5
        let oracle = GOLDEN * GOLDEN / (1.0 - GOLDEN * GOLDEN / (1.0 + GOLDEN).powi(2));
        assert!((oracle - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        for d in &dp.delta_prime {
            assert!((d - oracle).abs() < 1e-8);
        }
        let tp = build_t_prime(&p, &sol, &dp.delta_prime, &eye(n));
        let expect = GOLDEN.powi(2) + GOLDEN.powi(2) * oracle / (1.0 + GOLDEN).powi(2);
        assert!((expect - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        for i in 0..n {
            assert!((tp[[i, i]].re - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn large_rho_asymptote() {
        let s: Vec<CMat> = (0..3).map(|k| random_psd(8, 3, k)).collect();
        let p = FixedPointProblem::new(1e6, 8, s.clone()).unwrap();
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        for (k, sk) in s.iter().enumerate() {
            let approx = trace(&sk.view()).re / (8.0 * 1e6);
            assert!((sol.delta[k] - approx).abs() / approx < 1e-3);
        }
    }

    #[test]
    fn zero_f_gives_zero_delta_prime() {
        let s: Vec<CMat> = (0..3).map(|k| random_psd(8, 4, 10 + k)).collect();
        let p = FixedPointProblem::new(0.5, 8, s).unwrap();
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        let dp = delta_primes(&p, &sol, &CMat::zeros((8, 8))).unwrap();
        assert!(dp.delta_prime.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn scalar_delta_prime_system() {
        // J = 1, S = F = I: δ' = v/(1 − J) with v = T², J = T²/(I(1+δ)²)
        for n in [4, 64, 512] {
            let p = FixedPointProblem::new(1.0, n, vec![eye(n)]).unwrap();
            let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
            let d = sol.delta[0];
            // δ = 1/(1/(n(1+δ)) + 1)
            assert!((d - 1.0 / (1.0 / (n as f64 * (1.0 + d)) + 1.0)).abs() < 1e-12);
            let t = d;
            let expect = t * t / (1.0 - t * t / (n as f64 * (1.0 + d).powi(2)));
            let dp = delta_primes(&p, &sol, &eye(n)).unwrap();
            assert!((dp.delta_prime[0] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn signature_shortcut_matches_the_general_path() {
        let s: Vec<CMat> = (0..4).map(|k| random_psd(10, 3, 30 + k)).collect();
        let p = FixedPointProblem::new(0.2, 10, s).unwrap();
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        let prod = SignatureProducts::new(&p, &sol).unwrap();
        for m in 0..4 {
            let a = prod.delta_primes_for_signature(&p, &sol, m);
            let b = prod.delta_primes(&p, &sol, &p.signatures[m]);
            for (x, y) in a.delta_prime.iter().zip(&b.delta_prime) {
                assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn residual_decreases_after_warmup() {
        let s: Vec<CMat> = (0..5).map(|k| random_psd(16, 4, 50 + k)).collect();
        let p = FixedPointProblem::new(0.05, 16, s).unwrap();
        let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
        for w in sol.history.windows(2).skip(3) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) || w[1] < 1e-13, "{:?}", sol.history);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let s: Vec<CMat> = (0..2).map(|k| random_psd(6, 2, 70 + k)).collect();
        let p = FixedPointProblem::new(1e-3, 6, s).unwrap();
        let r = fixed_point_deltas(&p, &SolverOptions { tolerance: 1e-12, max_iterations: 2 });
        assert!(matches!(r, Err(Error::NonConvergence { iterations: 2, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn self_consistency_and_scale_covariance(seed in 0u64..10_000, dim in 2usize..24, j in 1usize..6, a in 0.1f64..10.0) {
            let s: Vec<CMat> = (0..j).map(|k| random_psd(dim, 1 + (k % dim), seed * 31 + k as u64)).collect();
            let rho = 0.3;
            let p = FixedPointProblem::new(rho, dim, s.clone()).unwrap();
            let sol = fixed_point_deltas(&p, &SolverOptions::default()).unwrap();
            let check = p.normalized_traces(&sol.t);
            for (c, d) in check.iter().zip(&sol.delta) {
                prop_assert!((c - d).abs() <= 1e-10 * d.max(1.0));
                prop_assert!(*d > 0.0);
            }
            prop_assert!(hermitian_deviation(&sol.t.view()) < 1e-10);
            let scaled = FixedPointProblem::new(a * rho, dim, s.iter().map(|m| m.mapv(|z| z * a)).collect()).unwrap();
            let sol2 = fixed_point_deltas(&scaled, &SolverOptions::default()).unwrap();
            for (x, y) in sol.delta.iter().zip(&sol2.delta) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs());
            }
            let diff = (&sol2.t.mapv(|z| z * a) - &sol.t).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let scale = sol.t.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-9 * scale);
            let dp = delta_primes(&p, &sol, &eye(dim)).unwrap();
            let tp = build_t_prime(&p, &sol, &dp.delta_prime, &eye(dim));
            prop_assert!(hermitian_deviation(&tp.view()) < 1e-12 * scale * scale);
        }
    }
}
