//! Families of vectors with prescribed squared norms.
//!
//! [`schur_horn_synthesize`] realizes any `a ≺ μ` as a family whose frame
//! operator is `diag(μ)`. [`construct_minimizer`] uses it block by block in
//! the eigenbasis of `S` to produce a family `G` with
//! `λ(S - S_G) = δ(λ(S), a)↓`.

use crate::linalg::{herm_eig, herm_eigenvalues, rank_one_sum, CVector, HermitianMatrix, LinalgError, C64};
use crate::solver::{self, DeltaSolution, GfodInstance, SolverError};
use crate::vecmaj::{self, first_weak_violation, MAJORIZATION_TOL};

/// Relative tolerance on `‖g_i‖² = a_i`.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance, relative to `1 + ‖S‖_F`, for `S` to count as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("a family needs at least one vector")]
    Empty,
    #[error("vector {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, actual: usize },
    #[error("vector {index} has squared norm {actual}, expected {expected}")]
    NormMismatch { index: usize, expected: f64, actual: f64 },
    #[error("{which}[{index}] = {value} is not allowed")]
    InvalidEntry { which: &'static str, index: usize, value: f64 },
    #[error("a is not majorized by mu: partial sum {len} gives {lhs} > {rhs}")]
    PartialSum { len: usize, lhs: f64, rhs: f64 },
    #[error("a is not majorized by mu: totals {a_total} and {mu_total} differ")]
    TotalMismatch { a_total: f64, mu_total: f64 },
    #[error("mu has {nonzero} nonzero entries but only {k} vectors are available")]
    RankTooLarge { nonzero: usize, k: usize },
    #[error("S is not positive semidefinite: eigenvalue {0}")]
    NotPositive(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `k` vectors in `C^d` with their squared norms.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFamily {
    vectors: Vec<CVector>,
    norms_sq: Vec<f64>,
}

impl FrameFamily {
    /// Family whose norms are read off the vectors.
    pub fn new(vectors: Vec<CVector>) -> Result<Self, FrameError> {
        check_dims(&vectors)?;
        let norms_sq = vectors.iter().map(CVector::norm_sq).collect();
        Ok(FrameFamily { vectors, norms_sq })
    }

    /// Family with declared squared norms, checked to [`NORM_TOL`].
    pub fn with_norms(vectors: Vec<CVector>, norms_sq: Vec<f64>) -> Result<Self, FrameError> {
        check_dims(&vectors)?;
        if norms_sq.len() != vectors.len() {
            return Err(FrameError::DimensionMismatch {
                index: vectors.len().min(norms_sq.len()),
                expected: vectors.len(),
                actual: norms_sq.len(),
            });
        }
        for (index, (v, &expected)) in vectors.iter().zip(&norms_sq).enumerate() {
            let actual = v.norm_sq();
            if (actual - expected).abs() > NORM_TOL * expected.abs().max(1e-300) {
                return Err(FrameError::NormMismatch {
                    index,
                    expected,
                    actual,
                });
            }
        }
        Ok(FrameFamily { vectors, norms_sq })
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<CVector> {
        self.vectors
    }

    pub fn norms_sq(&self) -> &[f64] {
        &self.norms_sq
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    /// `S_G = Σ g_i g_i*`.
    pub fn frame_operator(&self) -> HermitianMatrix {
        frame_operator(self)
    }
}

fn check_dims(vectors: &[CVector]) -> Result<(), FrameError> {
    let first = vectors.first().ok_or(FrameError::Empty)?;
    let dim = first.dim();
    if dim == 0 {
        return Err(FrameError::Linalg(LinalgError::EmptyDimension));
    }
    for (index, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(FrameError::DimensionMismatch {
                index,
                expected: dim,
                actual: v.dim(),
            });
        }
        if !v.is_finite() {
            return Err(FrameError::Linalg(LinalgError::NonFinite { row: index, col: 0 }));
        }
    }
    Ok(())
}

pub fn frame_operator(fam: &FrameFamily) -> HermitianMatrix {
    rank_one_sum(fam.dim(), &fam.vectors).expect("family dimensions are checked on construction")
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub family: FrameFamily,
    /// Eigenvalues of `frame_operator`, non-increasing.
    pub achieved_spectrum: Vec<f64>,
    pub frame_operator: HermitianMatrix,
}

impl SynthesisResult {
    fn from_family(family: FrameFamily) -> Result<Self, FrameError> {
        let frame_operator = family.frame_operator();
        let achieved_spectrum = herm_eigenvalues(&frame_operator)?;
        Ok(SynthesisResult {
            family,
            achieved_spectrum,
            frame_operator,
        })
    }
}

/// A family in `C^d` with `‖g_i‖² = a_i` and frame operator `diag(μ)`.
///
/// Requires `a ≺ μ` (any order; `a > 0`, `μ ≥ 0`). When `k < d`, at most `k`
/// entries of `μ` may be nonzero. The `k x k` Gram matrix starts at
/// `diag(σ)` (σ = μ↓ padded or truncated to length `k`) and each plane
/// rotation moves mass from the last diagonal entry above its target to the
/// next one below, pinning one of them exactly. Vectors are the columns of
/// `diag(√σ) Q` for the accumulated rotation `Q`, so the frame operator is
/// `diag(σ)` by construction.
pub fn schur_horn_synthesize(mu: &[f64], a: &[f64]) -> Result<SynthesisResult, FrameError> {
    let (d, k) = (mu.len(), a.len());
    if d == 0 || k == 0 {
        return Err(FrameError::Empty);
    }
    let scale = 1.0
        + mu.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        + a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = MAJORIZATION_TOL * scale;
    for (index, &value) in a.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(FrameError::InvalidEntry { which: "a", index, value });
        }
    }
    for (index, &value) in mu.iter().enumerate() {
        if !(value >= -tol && value.is_finite()) {
            return Err(FrameError::InvalidEntry { which: "mu", index, value });
        }
    }
    let mu_perm = vecmaj::sort_down_permutation(mu);
    let a_perm = vecmaj::sort_down_permutation(a);
    let mu_sorted: Vec<f64> = mu_perm.iter().map(|&i| mu[i].max(0.0)).collect();
    let a_sorted: Vec<f64> = a_perm.iter().map(|&i| a[i]).collect();

    if k < d {
        let nonzero = mu_sorted.iter().filter(|&&x| x > tol).count();
        if nonzero > k {
            return Err(FrameError::RankTooLarge { nonzero, k });
        }
    }
    let sigma: Vec<f64> = (0..k).map(|i| mu_sorted.get(i).copied().unwrap_or(0.0)).collect();

    if let Some(v) = first_weak_violation(&a_sorted, &sigma, tol) {
        return Err(FrameError::PartialSum {
            len: v.len,
            lhs: v.lhs,
            rhs: v.rhs,
        });
    }
    let (a_total, mu_total) = (a_sorted.iter().sum::<f64>(), mu_sorted.iter().sum::<f64>());
    if (a_total - mu_total).abs() > tol {
        return Err(FrameError::TotalMismatch { a_total, mu_total });
    }

    let q = pinning_rotations(&sigma, &a_sorted);

    // Column i of diag(√σ) Q, placed back into the caller's coordinate order.
    let mut vectors = vec![CVector::zeros(d); k];
    for (i, &slot) in a_perm.iter().enumerate() {
        let mut v = CVector::zeros(d);
        for m in 0..k.min(d) {
            v.entries_mut()[mu_perm[m]] = C64::new(sigma[m].sqrt() * q[m][i], 0.0);
        }
        let norm = v.norm();
        if norm > 0.0 {
            v = v.scale(a_sorted[i].sqrt() / norm);
        }
        vectors[slot] = v;
    }
    SynthesisResult::from_family(FrameFamily::with_norms(vectors, a.to_vec())?)
}

/// Orthogonal `Q` (row-major) with `diag(Qᵀ diag(σ) Q) = target`.
///
/// Both vectors are non-increasing with `target ≺ σ`. The diagonal `x` is
/// tracked exactly: every step sets one entry to its target.
fn pinning_rotations(sigma: &[f64], target: &[f64]) -> Vec<Vec<f64>> {
    let k = sigma.len();
    let mut q: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut x = sigma.to_vec();
    for _ in 0..(2 * k) {
        let Some(j) = (0..k).rev().find(|&j| x[j] > target[j]) else {
            break;
        };
        let Some(l) = ((j + 1)..k).find(|&l| x[l] < target[l]) else {
            break;
        };
        let shift = (x[j] - target[j]).min(target[l] - x[l]);
        let t = x[j] - shift;

        // 2x2 principal block of the current Gram matrix.
        let gram = |p: usize, r: usize| -> f64 { (0..k).map(|m| sigma[m] * q[m][p] * q[m][r]).sum() };
        let (mjj, mll, mjl) = (x[j], x[l], gram(j, l));
        let mean = 0.5 * (mjj + mll);
        let half = 0.5 * (mjj - mll);
        // New (j,j) entry under columns (c e_j - s e_l, s e_j + c e_l):
        // mean + half cos 2θ - mjl sin 2θ = t.
        let radius = half.hypot(mjl);
        let phase = mjl.atan2(half);
        let cos_arg = ((t - mean) / radius).clamp(-1.0, 1.0);
        let theta = 0.5 * (cos_arg.acos() - phase);
        let (s, c) = theta.sin_cos();
        for row in q.iter_mut() {
            let (qj, ql) = (row[j], row[l]);
            row[j] = c * qj - s * ql;
            row[l] = s * qj + c * ql;
        }
        if shift == x[j] - target[j] {
            x[l] += shift;
            x[j] = target[j];
        } else {
            x[j] = t;
            x[l] = target[l];
        }
    }
    q
}

/// A minimizing family together with the solution it realizes.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub synthesis: SynthesisResult,
    pub solution: DeltaSolution,
    /// Eigenvalues of `S`, non-increasing (clamped at zero).
    pub lambda: Vec<f64>,
    /// `a_sorted[i] = a[a_perm[i]]`.
    pub a_perm: Vec<usize>,
    /// For each vector (caller order), the constant `c` with `(S - S_G) g = c g`.
    pub block_constants: Vec<f64>,
    /// `λ(S - S_G)`, non-increasing.
    pub residual_spectrum: Vec<f64>,
}

/// A global minimizer of `N(S - S_G)` over families with `‖g_i‖² = a_i`,
/// for every strictly convex unitarily invariant norm `N`.
///
/// Each block of the solution is synthesized separately in the eigenbasis
/// of `S`: head block `j` realizes `(λ_i - c_j)` with its own `a_i`, and the
/// tail realizes `((λ_i - c_q)^+)` with the remaining `a_i`. On the span of
/// block `j`, `S - S_G = c_j I`, so every vector is an eigenvector of the
/// residual.
pub fn construct_minimizer(s: &HermitianMatrix, a: &[f64]) -> Result<Minimizer, FrameError> {
    let eig = herm_eig(s)?;
    let d = s.dim();
    let floor = -PSD_TOL * (1.0 + s.frobenius_norm());
    if let Some(&low) = eig.eigenvalues.last() {
        if low < floor {
            return Err(FrameError::NotPositive(low));
        }
    }
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    let sorted = GfodInstance::from_unsorted(&lambda, a)?;
    let inst = &sorted.instance;
    let a_sorted = inst.a();
    let k = inst.k();
    let sol = solver::delta(inst)?;
    let n = d.min(k);

    let mut coords = vec![CVector::zeros(d); k];
    let mut constants = vec![0.0; k];
    let mut start = 0;
    let q = sol.q;
    for (j, &end) in sol.s[..q - 1].iter().enumerate() {
        let spectrum: Vec<f64> = lambda[start..end].iter().map(|l| l - sol.c[j]).collect();
        embed_block(&spectrum, &a_sorted[start..end], start, &mut coords)?;
        constants[start..end].fill(sol.c[j]);
        start = end;
    }
    let c_tail = sol.c[q - 1];
    let spectrum: Vec<f64> = lambda[start..n].iter().map(|l| (l - c_tail).max(0.0)).collect();
    embed_block(&spectrum, &a_sorted[start..], start, &mut coords)?;
    constants[start..].fill(c_tail);

    let mut vectors = vec![CVector::zeros(d); k];
    let mut block_constants = vec![0.0; k];
    for (i, y) in coords.into_iter().enumerate() {
        let v = CVector::combine(&eig.eigenvectors, y.entries());
        let slot = sorted.a_perm[i];
        vectors[slot] = v.scale(a_sorted[i].sqrt() / v.norm());
        block_constants[slot] = constants[i];
    }
    let family = FrameFamily::with_norms(vectors, a.to_vec())?;
    let synthesis = SynthesisResult::from_family(family)?;
    let residual_spectrum = herm_eigenvalues(&(s - &synthesis.frame_operator))?;
    Ok(Minimizer {
        synthesis,
        solution: sol,
        lambda,
        a_perm: sorted.a_perm,
        block_constants,
        residual_spectrum,
    })
}

/// Synthesizes one block into `coords[start..]`, supported on the
/// eigen-coordinates `start..start + spectrum.len()`.
fn embed_block(spectrum: &[f64], a: &[f64], start: usize, coords: &mut [CVector]) -> Result<(), FrameError> {
    let block = schur_horn_synthesize(spectrum, a)?;
    for (offset, v) in block.family.vectors().iter().enumerate() {
        let target = coords[start + offset].entries_mut();
        for (m, z) in v.entries().iter().enumerate() {
            target[start + m] = *z;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uinorms::UINormSpec;
    use crate::vecmaj::{majorizes, submajorizes_weak_tol};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn close(x: &[f64], y: &[f64], tol: f64) -> bool {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol)
    }

    fn e(dim: usize, i: usize, scale: f64) -> CVector {
        CVector::basis(dim, i).scale(scale)
    }

    #[test]
    fn frame_operator_examples() {
        let g = FrameFamily::new(vec![e(2, 0, 1.0), e(2, 0, 1.0)]).unwrap();
        assert_eq!(g.frame_operator(), HermitianMatrix::from_diagonal(&[2.0, 0.0]));
        let g = FrameFamily::new(vec![e(2, 0, 2f64.sqrt()), e(2, 1, 1.0)]).unwrap();
        let diff = &g.frame_operator() - &HermitianMatrix::from_diagonal(&[2.0, 1.0]);
        assert!(diff.frobenius_norm() < 1e-15);
        let v = CVector::new(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.25)]);
        let g = FrameFamily::new(vec![v.clone()]).unwrap();
        assert_eq!(g.frame_operator(), HermitianMatrix::outer(&v));
        assert!((g.frame_operator().trace() - v.norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn family_validation() {
        assert!(matches!(FrameFamily::new(vec![]), Err(FrameError::Empty)));
        assert!(matches!(
            FrameFamily::new(vec![e(2, 0, 1.0), e(3, 0, 1.0)]),
            Err(FrameError::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            FrameFamily::with_norms(vec![e(2, 0, 2.0)], vec![2.0]),
            Err(FrameError::NormMismatch { index: 0, .. })
        ));
    }

    fn check_synthesis(mu: &[f64], a: &[f64]) -> SynthesisResult {
        let res = schur_horn_synthesize(mu, a).unwrap();
        for (v, &ai) in res.family.vectors().iter().zip(a) {
            assert!((v.norm_sq() - ai).abs() <= 1e-10 * ai);
        }
        let expected = HermitianMatrix::from_diagonal(mu);
        assert!((&res.frame_operator - &expected).frobenius_norm() <= 1e-8, "{}", res.frame_operator);
        assert!(close(&res.achieved_spectrum, &vecmaj::sort_down(mu), 1e-8));
        let direct = rank_one_sum(mu.len(), res.family.vectors()).unwrap();
        assert!((&direct - &res.frame_operator).frobenius_norm() <= 1e-10);
        res
    }

    #[test]
    fn synthesis_examples() {
        check_synthesis(&[2.0, 0.0], &[1.0, 1.0]);
        let res = check_synthesis(&[2.0, 1.0], &[2.0, 1.0]);
        // Equality forces the diagonal Gram: g_1 ∥ e_1, g_2 ∥ e_2.
        let g = res.family.vectors();
        assert!((g[0][0].norm() - 2f64.sqrt()).abs() < 1e-12 && g[0][1].norm() < 1e-12);
        assert!((g[1][1].norm() - 1.0).abs() < 1e-12 && g[1][0].norm() < 1e-12);
        check_synthesis(&[3.0, 5.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0], &[3.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn synthesis_accepts_any_order_and_k_below_d() {
        check_synthesis(&[0.0, 1.0, 2.0], &[1.5, 1.5]);
        check_synthesis(&[1.0, 0.0, 3.0], &[0.5, 2.0, 1.5]);
        check_synthesis(&[4.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn synthesis_errors_name_the_failing_partial_sum() {
        let err = schur_horn_synthesize(&[2.0, 2.0, 1.0, 1.0], &[3.0, 1.0, 1.0, 1.0]).unwrap_err();
        assert_eq!(err, FrameError::PartialSum { len: 1, lhs: 3.0, rhs: 2.0 });
        assert!(matches!(
            schur_horn_synthesize(&[2.0, 1.0], &[1.0, 1.0]),
            Err(FrameError::TotalMismatch { .. })
        ));
        assert!(matches!(
            schur_horn_synthesize(&[1.0, 1.0, 1.0], &[2.0, 1.0]),
            Err(FrameError::RankTooLarge { nonzero: 3, k: 2 })
        ));
        assert!(matches!(
            schur_horn_synthesize(&[1.0, -0.5], &[0.5]),
            Err(FrameError::InvalidEntry { which: "mu", .. })
        ));
    }

    /// `a ≺ μ` built by T-transform mixing of `μ` padded to length `k`.
    fn majorized_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        loop {
            let d = rng.random_range(1..=10);
            let k = rng.random_range(1..=14);
            let rank = d.min(k);
            let mut mu: Vec<f64> = (0..d)
                .map(|i| if i < rank { rng.random_range(0.0..5.0) } else { 0.0 })
                .collect();
            if rng.random_bool(0.3) && rank > 1 {
                mu[rank - 1] = 0.0;
            }
            let mut a: Vec<f64> = (0..k).map(|i| mu.get(i).copied().unwrap_or(0.0)).collect();
            for _ in 0..(3 * k) {
                let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
                let t: f64 = rng.random_range(0.0..1.0);
                let (ai, aj) = (a[i], a[j]);
                a[i] = t * ai + (1.0 - t) * aj;
                a[j] = (1.0 - t) * ai + t * aj;
            }
            if a.iter().all(|&x| x > 1e-3) {
                return (mu, a);
            }
        }
    }

    #[test]
    fn synthesis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let (mu, a) = majorized_pair(&mut rng);
            check_synthesis(&mu, &a);
        }
    }

    fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
        let vs: Vec<CVector> = (0..dim)
            .map(|_| {
                CVector::new(
                    (0..dim)
                        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                        .collect(),
                )
            })
            .collect();
        rank_one_sum(dim, &vs[..rng.random_range(1..=dim)]).unwrap()
    }

    fn random_norms(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        (0..k).map(|_| rng.random_range(0.1..4.0)).collect()
    }

    fn check_minimizer(s: &HermitianMatrix, a: &[f64]) -> Minimizer {
        let m = construct_minimizer(s, a).unwrap();
        let expected = m.solution.delta_sorted();
        assert!(close(&m.residual_spectrum, &expected, 1e-8), "{:?} vs {:?}", m.residual_spectrum, expected);
        let residual = s - &m.synthesis.frame_operator;
        for (g, &c) in m.synthesis.family.vectors().iter().zip(&m.block_constants) {
            let r = &residual.mul_vec(g) - &g.scale(c);
            assert!(r.norm() <= 1e-7 * g.norm(), "eigen residual {}", r.norm());
        }
        for (g, &ai) in m.synthesis.family.vectors().iter().zip(a) {
            assert!((g.norm_sq() - ai).abs() <= 1e-10 * ai);
        }
        m
    }

    #[test]
    fn minimizer_examples() {
        check_minimizer(&HermitianMatrix::from_diagonal(&[3.0, 1.0]), &[1.0, 1.0]);
        let m = check_minimizer(&HermitianMatrix::from_diagonal(&[1.0, 0.0]), &[2.0, 1.0]);
        assert!(close(&m.residual_spectrum, &[-1.0, -1.0], 1e-12));
        let m = check_minimizer(&HermitianMatrix::from_diagonal(&[2.0, 2.0, 1.0, 1.0]), &[3.0, 1.0, 1.0, 1.0]);
        let third = 1.0 / 3.0;
        assert!(close(&m.residual_spectrum, &[third, third, third, -1.0], 1e-8));
        assert_eq!(m.block_constants[0], -1.0);
        // k < d, unsorted a
        check_minimizer(&HermitianMatrix::from_diagonal(&[1.0, 2.0, 1.0]), &[1.0]);
        check_minimizer(&HermitianMatrix::from_diagonal(&[5.0, 3.0, 2.0, 1.0]), &[4.0, 4.0]);
    }

    #[test]
    fn minimizer_rejects_indefinite_s() {
        assert!(matches!(
            construct_minimizer(&HermitianMatrix::from_diagonal(&[1.0, -1.0]), &[1.0]),
            Err(FrameError::NotPositive(_))
        ));
    }

    #[test]
    fn minimizers_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let norms = [
            UINormSpec::frobenius(),
            UINormSpec::schatten(1.5).unwrap(),
            UINormSpec::schatten(3.0).unwrap(),
            UINormSpec::ky_fan_plus_fro(1, 0.01).unwrap(),
        ];
        for _ in 0..60 {
            let d = rng.random_range(1..=6);
            let k = rng.random_range(1..=8);
            let s = random_psd(&mut rng, d);
            let a = random_norms(&mut rng, k);
            let m = check_minimizer(&s, &a);
            let inst = GfodInstance::from_unsorted(&m.lambda, &a).unwrap().instance;
            let residual = &s - &m.synthesis.frame_operator;
            for n in &norms {
                let best = solver::global_min_value(&inst, n).unwrap();
                assert!((n.evaluate(&residual).unwrap() - best).abs() <= 1e-8 * (1.0 + best));
            }
            assert!(majorizes(&a, &m.solution.mu));
        }
    }

    #[test]
    fn residual_of_any_family_dominates_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let d = rng.random_range(1..=5);
            let k = rng.random_range(1..=7);
            let s = random_psd(&mut rng, d);
            let a = random_norms(&mut rng, k);
            let lambda = herm_eigenvalues(&s).unwrap().iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
            let inst = GfodInstance::from_unsorted(&lambda, &a).unwrap().instance;
            let abs_delta: Vec<f64> = solver::delta(&inst).unwrap().delta.iter().map(|x| x.abs()).collect();
            for _ in 0..200 {
                let vectors: Vec<CVector> = a
                    .iter()
                    .map(|&ai| {
                        let v = CVector::new(
                            (0..d)
                                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                                .collect(),
                        );
                        v.scale(ai.sqrt() / v.norm())
                    })
                    .collect();
                let g = FrameFamily::new(vectors).unwrap();
                let res: Vec<f64> = herm_eigenvalues(&(&s - &g.frame_operator()))
                    .unwrap()
                    .iter()
                    .map(|x| x.abs())
                    .collect();
                assert!(submajorizes_weak_tol(&abs_delta, &res, 1e-9));
            }
        }
    }
}
