//! Riemannian descent for `Θ(G) = N(S - S_G)` on the product of spheres
//! `‖g_i‖² = a_i`, local-minimizer diagnostics, and the two explicit curves
//! that lower `Θ` at families whose eigen-structure is out of order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::frames::{FrameError, FrameFamily};
use crate::linalg::{herm_eig, herm_eigenvalues, CVector, HermitianMatrix, LinalgError, C64};
use crate::uinorms::{NormError, UINormSpec};
use crate::vecmaj;

/// Default clustering tolerance for [`structure_report`].
pub const CLUSTER_TOL: f64 = 1e-5;
/// Relative size below which an Armijo decrease is lost in rounding. In that
/// regime a step is accepted when the objective stays within
/// `ROUNDING_SLACK` and the gradient norm shrinks.
const ROUNDING_FLOOR: f64 = 1e-15;
/// Relative change in the objective indistinguishable from rounding.
pub const ROUNDING_SLACK: f64 = 16.0 * f64::EPSILON;
const MAX_BACKTRACKS: usize = 80;
/// Consecutive accepted steps lowering neither the objective nor the
/// gradient norm before giving up.
const MAX_FLAT_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DescentError {
    #[error("invalid descent configuration: {0}")]
    Config(String),
    #[error("S has dimension {s_dim} but the family lives in dimension {family_dim}")]
    DimensionMismatch { s_dim: usize, family_dim: usize },
    #[error("the escape pattern is absent: {0}")]
    PatternAbsent(String),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    /// Must be Schatten-p or Frobenius.
    pub norm: UINormSpec,
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    /// Stop once the Riemannian gradient norm is at most this.
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            norm: UINormSpec::frobenius(),
            max_iters: 20_000,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            grad_tol: 1e-8,
            seed: 0,
        }
    }
}

impl DescentConfig {
    pub fn with_norm(norm: UINormSpec) -> Self {
        DescentConfig {
            norm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DescentError> {
        let fail = |msg: &str| Err(DescentError::Config(msg.to_string()));
        if !self.norm.is_smooth() {
            return fail("descent needs a Schatten-p or Frobenius norm");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be positive");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return fail("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return fail("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return fail("armijo_shrink must lie in (0, 1)");
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return fail("grad_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DescentReport {
    pub seed: u64,
    pub final_family: FrameFamily,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// `λ(S - S_G)`, non-increasing.
    pub final_spectrum: Vec<f64>,
    pub iterations: usize,
    /// Riemannian gradient norm at the final family.
    pub grad_norm: f64,
    pub converged: bool,
    /// No accepted step raised the objective by more than rounding
    /// (`ROUNDING_SLACK` relative to `max(Θ, ‖S‖_F + Σ a_i)`).
    pub monotone: bool,
    /// Largest `|‖g_i‖² - a_i| / a_i` seen after any retraction.
    pub max_norm_defect: f64,
}

fn check_dims(g: &FrameFamily, s: &HermitianMatrix) -> Result<(), DescentError> {
    if g.dim() != s.dim() {
        return Err(DescentError::DimensionMismatch {
            s_dim: s.dim(),
            family_dim: g.dim(),
        });
    }
    Ok(())
}

fn residual(s: &HermitianMatrix, vectors: &[CVector]) -> HermitianMatrix {
    let mut x = s.clone();
    for v in vectors {
        x.add_outer(v, -1.0);
    }
    x
}

/// `Θ(G) = N(S - S_G)`.
pub fn objective(g: &FrameFamily, s: &HermitianMatrix, norm: &UINormSpec) -> Result<f64, DescentError> {
    check_dims(g, s)?;
    Ok(norm.evaluate(&residual(s, g.vectors()))?)
}

/// Gradient of `Θ` in the real metric `Re<x, y>` on each `C^d` factor:
/// component `i` is `-2 ∇N(S - S_G) g_i`. Zero at an exact fit.
pub fn euclidean_gradient(
    g: &FrameFamily,
    s: &HermitianMatrix,
    norm: &UINormSpec,
) -> Result<Vec<CVector>, DescentError> {
    check_dims(g, s)?;
    gradient_of(g.vectors(), s, norm)
}

fn gradient_of(vectors: &[CVector], s: &HermitianMatrix, norm: &UINormSpec) -> Result<Vec<CVector>, DescentError> {
    let x = residual(s, vectors);
    if !norm.is_smooth() {
        return Err(NormError::NotSmooth(norm.to_string()).into());
    }
    if x.frobenius_norm() == 0.0 {
        return Ok(vectors.iter().map(|v| CVector::zeros(v.dim())).collect());
    }
    let grad = norm.gradient(&x)?;
    Ok(vectors.iter().map(|v| grad.mul_vec(v).scale(-2.0)).collect())
}

/// Projection onto the tangent space: removes the radial part of each component.
fn project(vectors: &[CVector], norms_sq: &[f64], grad: &[CVector]) -> Vec<CVector> {
    vectors
        .iter()
        .zip(norms_sq)
        .zip(grad)
        .map(|((v, &a), e)| {
            let radial = e.real_inner(v) / a;
            e.axpy(C64::new(-radial, 0.0), v)
        })
        .collect()
}

pub fn riemannian_gradient(
    g: &FrameFamily,
    s: &HermitianMatrix,
    norm: &UINormSpec,
) -> Result<Vec<CVector>, DescentError> {
    let e = euclidean_gradient(g, s, norm)?;
    Ok(project(g.vectors(), g.norms_sq(), &e))
}

fn total_norm(vs: &[CVector]) -> f64 {
    vs.iter().map(CVector::norm_sq).sum::<f64>().sqrt()
}

fn total_inner(x: &[CVector], y: &[CVector]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p.real_inner(q)).sum()
}

fn retract(vectors: &[CVector], norms_sq: &[f64]) -> Vec<CVector> {
    vectors
        .iter()
        .zip(norms_sq)
        .map(|(v, &a)| v.scale(a.sqrt() / v.norm()))
        .collect()
}

/// Random family with independent standard complex Gaussian entries,
/// rescaled to `‖g_i‖² = a_i`.
pub fn random_family(dim: usize, a: &[f64], seed: u64) -> Result<FrameFamily, DescentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = a
        .iter()
        .map(|&ai| loop {
            let v = CVector::new(
                (0..dim)
                    .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect(),
            );
            let n = v.norm();
            if n > 0.0 {
                break v.scale(ai.sqrt() / n);
            }
        })
        .collect();
    Ok(FrameFamily::with_norms(vectors, a.to_vec())?)
}

/// Descent from a random start drawn from `config.seed`.
pub fn descend(s: &HermitianMatrix, a: &[f64], config: &DescentConfig) -> Result<DescentReport, DescentError> {
    config.validate()?;
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
        return Err(FrameError::InvalidEntry { which: "a", index, value }.into());
    }
    let start = random_family(s.dim(), a, config.seed)?;
    descend_from(s, start, config)
}

/// Retracted gradient descent with Barzilai–Borwein trial steps and Armijo
/// backtracking.
pub fn descend_from(
    s: &HermitianMatrix,
    start: FrameFamily,
    config: &DescentConfig,
) -> Result<DescentReport, DescentError> {
    config.validate()?;
    check_dims(&start, s)?;
    let norm = &config.norm;
    let a = start.norms_sq().to_vec();
    let mut x = start.into_vectors();
    let eval = |vs: &[CVector]| -> Result<f64, DescentError> { Ok(norm.evaluate(&residual(s, vs))?) };
    let rgrad = |vs: &[CVector]| -> Result<Vec<CVector>, DescentError> {
        Ok(project(vs, &a, &gradient_of(vs, s, norm)?))
    };

    let mut f = eval(&x)?;
    let initial_objective = f;
    // Rounding in S - S_G is relative to its terms, not to the (possibly small) result.
    let magnitude = s.frobenius_norm() + a.iter().sum::<f64>();
    let mut rg = rgrad(&x)?;
    let mut gn = total_norm(&rg);
    let mut prev: Option<(Vec<CVector>, Vec<CVector>)> = None;
    let mut iterations = 0;
    let mut converged = gn <= config.grad_tol;
    let mut monotone = true;
    let mut max_norm_defect: f64 = 0.0;
    let mut flat_steps = 0;

    while !converged && iterations < config.max_iters {
        let mut alpha = prev
            .as_ref()
            .and_then(|(xp, gp)| bb_step(&x, xp, &rg, gp, iterations))
            .unwrap_or(config.step_init);
        let g2 = gn * gn;
        let floor = f.abs().max(magnitude);
        let slack = ROUNDING_SLACK * floor;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<CVector> = x
                .iter()
                .zip(&rg)
                .map(|(v, d)| v.axpy(C64::new(-alpha, 0.0), d))
                .collect();
            let cand = retract(&trial, &a);
            let fc = eval(&cand)?;
            let required = config.armijo_c * alpha * g2;
            if fc <= f - required {
                accepted = Some((cand, fc, None));
                break;
            }
            if required <= ROUNDING_FLOOR * floor && fc <= f + slack {
                let rc = rgrad(&cand)?;
                if total_norm(&rc) < gn {
                    accepted = Some((cand, fc, Some(rc)));
                    break;
                }
            }
            alpha *= config.armijo_shrink;
        }
        let Some((cand, fc, rc)) = accepted else {
            log::debug!("seed {}: line search failed at iteration {iterations}", config.seed);
            break;
        };
        iterations += 1;
        monotone &= fc <= f + slack;
        for (v, &ai) in cand.iter().zip(&a) {
            max_norm_defect = max_norm_defect.max((v.norm_sq() - ai).abs() / ai);
        }
        let new_rg = match rc {
            Some(rc) => rc,
            None => rgrad(&cand)?,
        };
        let new_gn = total_norm(&new_rg);
        flat_steps = if fc < f || new_gn < gn { 0 } else { flat_steps + 1 };
        prev = Some((std::mem::replace(&mut x, cand), std::mem::replace(&mut rg, new_rg)));
        f = fc;
        gn = new_gn;
        converged = gn <= config.grad_tol;
        if flat_steps >= MAX_FLAT_STEPS {
            log::debug!("seed {}: no progress for {MAX_FLAT_STEPS} steps", config.seed);
            break;
        }
    }

    let final_spectrum = herm_eigenvalues(&residual(s, &x))?;
    Ok(DescentReport {
        seed: config.seed,
        final_family: FrameFamily::with_norms(x, a)?,
        initial_objective,
        final_objective: f,
        final_spectrum,
        iterations,
        grad_norm: gn,
        converged,
        monotone,
        max_norm_defect,
    })
}

/// Alternating Barzilai–Borwein step lengths from the last two iterates.
fn bb_step(x: &[CVector], xp: &[CVector], g: &[CVector], gp: &[CVector], iter: usize) -> Option<f64> {
    let sk: Vec<CVector> = x.iter().zip(xp).map(|(p, q)| p - q).collect();
    let yk: Vec<CVector> = g.iter().zip(gp).map(|(p, q)| p - q).collect();
    let sy = total_inner(&sk, &yk);
    if sy.is_nan() || sy <= 0.0 {
        return None;
    }
    let step = if iter.is_multiple_of(2) {
        total_inner(&sk, &sk) / sy
    } else {
        sy / total_inner(&yk, &yk)
    };
    (step.is_finite() && step > 0.0).then(|| step.clamp(1e-12, 1e12))
}

/// Independent descents, one per seed, run in parallel. Results come back
/// in the order of `seeds`.
pub fn multi_start(
    s: &HermitianMatrix,
    a: &[f64],
    config: &DescentConfig,
    seeds: &[u64],
) -> Vec<Result<DescentReport, DescentError>> {
    seeds
        .par_iter()
        .map(|&seed| descend(s, a, &DescentConfig { seed, ..*config }))
        .collect()
}

/// A basis diagonalizing both `S` and `S_G`, with `λ` non-increasing and,
/// inside each eigenspace of `S`, `μ` non-increasing.
#[derive(Debug, Clone)]
pub struct CommonEigenbasis {
    pub basis: Vec<CVector>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Largest off-diagonal entry of `S_G` in `basis`; zero when they commute.
    pub commute_defect: f64,
    /// `μ` is non-increasing across the whole basis.
    pub mu_sorted: bool,
}

pub fn common_eigenbasis(
    s: &HermitianMatrix,
    sg: &HermitianMatrix,
    tol: f64,
) -> Result<CommonEigenbasis, DescentError> {
    let eig = herm_eig(s)?;
    let d = s.dim();
    let mut basis = Vec::with_capacity(d);
    let mut start = 0;
    while start < d {
        let lead = eig.eigenvalues[start];
        let mut end = start + 1;
        while end < d && (lead - eig.eigenvalues[end]).abs() <= tol * (1.0 + lead.abs()) {
            end += 1;
        }
        let group = &eig.eigenvectors[start..end];
        let rows: Vec<Vec<C64>> = group
            .iter()
            .map(|va| group.iter().map(|vb| sg.mul_vec(vb).inner(va)).collect())
            .collect();
        let inner = herm_eig(&HermitianMatrix::from_rows_with_tol(rows, 1e-8 * (1.0 + sg.frobenius_norm()))?)?;
        for w in &inner.eigenvectors {
            basis.push(CVector::combine(group, w.entries()));
        }
        start = end;
    }
    let lambda: Vec<f64> = basis.iter().map(|v| s.mul_vec(v).real_inner(v)).collect();
    let images: Vec<CVector> = basis.iter().map(|v| sg.mul_vec(v)).collect();
    let mu: Vec<f64> = images.iter().zip(&basis).map(|(w, v)| w.real_inner(v)).collect();
    let mut commute_defect: f64 = 0.0;
    for (i, w) in images.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            if i != j {
                commute_defect = commute_defect.max(w.inner(v).norm());
            }
        }
    }
    let slack = tol * (1.0 + mu.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let mu_sorted = mu.windows(2).all(|w| w[0] >= w[1] - slack);
    Ok(CommonEigenbasis {
        basis,
        lambda,
        mu,
        commute_defect,
        mu_sorted,
    })
}

/// Eigen-structure of a (near-)critical family.
///
/// `j_sets[m]` lists the vectors whose Rayleigh quotient falls in cluster
/// `m`; `k_sets[m]` lists the common-eigenbasis positions `i < rank` with
/// `λ_i - μ_i` in that cluster. All indexes are 0-based.
#[derive(Debug, Clone)]
pub struct LocalMinStructure {
    /// Cluster means, increasing.
    pub eigenconstants: Vec<f64>,
    pub j_sets: Vec<Vec<usize>>,
    pub k_sets: Vec<Vec<usize>>,
    /// Basis positions below the rank whose `λ_i - μ_i` matches no cluster.
    pub unmatched: Vec<usize>,
    /// `‖(S - S_G) g_i - c g_i‖` for each vector's cluster constant `c`.
    pub residuals: Vec<f64>,
    /// Rank of `S_G`.
    pub rank: usize,
    pub basis: CommonEigenbasis,
    /// J-sets read in order of increasing constant enumerate `0..k`.
    pub j_consecutive: bool,
    /// K-sets read in order of increasing constant enumerate `0..rank`.
    pub k_consecutive: bool,
}

impl LocalMinStructure {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn consecutive(&self) -> bool {
        self.j_consecutive && self.k_consecutive && self.unmatched.is_empty()
    }

    /// Cluster index of each vector.
    pub fn cluster_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.residuals.len()];
        for (m, set) in self.j_sets.iter().enumerate() {
            for &i in set {
                out[i] = m;
            }
        }
        out
    }
}

fn is_enumeration(sets: &[Vec<usize>], len: usize) -> bool {
    sets.iter().flatten().copied().eq(0..len)
}

/// Clusters `⟨(S - S_G) g_i, g_i⟩ / a_i` and reads off the J- and K-sets.
/// Vectors are taken in the order given, which should have `a` non-increasing.
pub fn structure_report(
    g: &FrameFamily,
    s: &HermitianMatrix,
    cluster_tol: f64,
) -> Result<LocalMinStructure, DescentError> {
    check_dims(g, s)?;
    let x = residual(s, g.vectors());
    let images: Vec<CVector> = g.vectors().iter().map(|v| x.mul_vec(v)).collect();
    let rq: Vec<f64> = images
        .iter()
        .zip(g.vectors())
        .zip(g.norms_sq())
        .map(|((w, v), a)| w.real_inner(v) / a)
        .collect();

    let order = {
        let mut o: Vec<usize> = (0..rq.len()).collect();
        o.sort_by(|&i, &j| rq[i].total_cmp(&rq[j]));
        o
    };
    let mut j_sets: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &i in &order {
        if j_sets.is_empty() || rq[i] - last > cluster_tol * (1.0 + last.abs()) {
            j_sets.push(Vec::new());
        }
        j_sets.last_mut().expect("pushed above").push(i);
        last = rq[i];
    }
    for set in &mut j_sets {
        set.sort_unstable();
    }
    let eigenconstants: Vec<f64> = j_sets
        .iter()
        .map(|set| set.iter().map(|&i| rq[i]).sum::<f64>() / set.len() as f64)
        .collect();

    let mut residuals = vec![0.0; g.len()];
    for (m, set) in j_sets.iter().enumerate() {
        for &i in set {
            let v = &g.vectors()[i];
            residuals[i] = images[i].axpy(C64::new(-eigenconstants[m], 0.0), v).norm();
        }
    }

    let sg = g.frame_operator();
    let basis = common_eigenbasis(s, &sg, cluster_tol)?;
    let mu_scale = 1.0 + basis.mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank = basis.mu.iter().filter(|&&m| m > cluster_tol * mu_scale).count();
    let mut k_sets = vec![Vec::new(); eigenconstants.len()];
    let mut unmatched = Vec::new();
    for i in 0..rank {
        let delta = basis.lambda[i] - basis.mu[i];
        let nearest = eigenconstants
            .iter()
            .enumerate()
            .min_by(|(_, p), (_, q)| (delta - **p).abs().total_cmp(&(delta - **q).abs()));
        match nearest {
            Some((m, &c)) if (delta - c).abs() <= 10.0 * cluster_tol * (1.0 + c.abs()) => k_sets[m].push(i),
            _ => unmatched.push(i),
        }
    }
    let j_consecutive = is_enumeration(&j_sets, g.len());
    let k_consecutive = is_enumeration(&k_sets, rank) && basis.mu_sorted;
    Ok(LocalMinStructure {
        eigenconstants,
        j_sets,
        k_sets,
        unmatched,
        residuals,
        rank,
        basis,
        j_consecutive,
        k_consecutive,
    })
}

/// Finds `h ∈ J_i`, `l ∈ J_r` with `c_i < c_r` and `l < h`.
pub fn find_swap_violation(st: &LocalMinStructure) -> Option<(usize, usize)> {
    let cluster = st.cluster_of();
    let k = cluster.len();
    (0..k)
        .flat_map(|h| (0..h).map(move |l| (h, l)))
        .find(|&(h, l)| cluster[h] < cluster[l])
}

/// Finds `i ∈ K_e`, `j ∈ K_r` with `c_e < c_r` and `j < i`.
pub fn find_transfer_violation(st: &LocalMinStructure) -> Option<(usize, usize)> {
    let mut cluster = vec![None; st.rank];
    for (m, set) in st.k_sets.iter().enumerate() {
        for &i in set {
            cluster[i] = Some(m);
        }
    }
    (0..st.rank)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .find(|&(i, j)| matches!((cluster[i], cluster[j]), (Some(e), Some(r)) if e < r))
}

/// The swap curve: `g_h(t) = cos t g_h + sin t ‖g_h‖ w_l`,
/// `g_l(t) = cos γt g_l + sin γt ‖g_l‖ w_h`, all other vectors fixed.
#[derive(Debug, Clone)]
pub struct SwapCurve {
    base: FrameFamily,
    pub h: usize,
    pub l: usize,
    pub gamma: f64,
    /// Second derivative at `t = 0` of the squared Frobenius norm of the
    /// residual restricted to `span{g_h, g_l}`; negative by construction.
    pub second_derivative: f64,
    pub c_h: f64,
    pub c_l: f64,
}

impl SwapCurve {
    pub fn at(&self, t: f64) -> FrameFamily {
        let v = self.base.vectors();
        let (gh, gl) = (&v[self.h], &v[self.l]);
        let (nh, nl) = (gh.norm(), gl.norm());
        let (wh, wl) = (gh.scale(1.0 / nh), gl.scale(1.0 / nl));
        let mut out = v.to_vec();
        out[self.h] = &gh.scale(t.cos()) + &wl.scale(t.sin() * nh);
        out[self.l] = &gl.scale((self.gamma * t).cos()) + &wh.scale((self.gamma * t).sin() * nl);
        FrameFamily::with_norms(out, self.base.norms_sq().to_vec()).expect("rotation preserves norms")
    }
}

/// `m''_γ(0) = 4 c_i (a_h - a_l γ²) + 4 (a_h + a_l γ)² + 4 c_r (a_l γ² - a_h)`.
pub fn swap_second_derivative(gamma: f64, a_h: f64, a_l: f64, c_i: f64, c_r: f64) -> f64 {
    4.0 * c_i * (a_h - a_l * gamma * gamma)
        + 4.0 * (a_h + a_l * gamma).powi(2)
        + 4.0 * c_r * (a_l * gamma * gamma - a_h)
}

/// Builds the swap curve for `g_h ∈ J_i`, `g_l ∈ J_r` with `c_i < c_r` and
/// `l < h`. Both vectors must be eigenvectors of `S - S_G` (to `tol`,
/// relative to their norms). `γ` is the most negative point of
/// `m''_γ(0)` among `±2^e` (`e = -6..6`) and the parabola's vertex.
pub fn escape_swap(
    g: &FrameFamily,
    s: &HermitianMatrix,
    h: usize,
    l: usize,
    tol: f64,
) -> Result<SwapCurve, DescentError> {
    check_dims(g, s)?;
    let absent = |msg: String| Err(DescentError::PatternAbsent(msg));
    if h >= g.len() || l >= g.len() || l >= h {
        return absent(format!("need l < h < k, got h = {h}, l = {l}"));
    }
    let x = residual(s, g.vectors());
    let eigen_constant = |i: usize| -> Result<f64, DescentError> {
        let v = &g.vectors()[i];
        let w = x.mul_vec(v);
        let c = w.real_inner(v) / v.norm_sq();
        let res = w.axpy(C64::new(-c, 0.0), v).norm();
        if res > tol * v.norm() * (1.0 + c.abs()) {
            return Err(DescentError::PatternAbsent(format!(
                "g_{i} is not an eigenvector of the residual (defect {res:e})"
            )));
        }
        Ok(c)
    };
    let (c_i, c_r) = (eigen_constant(h)?, eigen_constant(l)?);
    if c_i >= c_r - tol * (1.0 + c_r.abs()) {
        return absent(format!("need c_h < c_l, got {c_i} and {c_r}"));
    }
    let (a_h, a_l) = (g.norms_sq()[h], g.norms_sq()[l]);
    let vertex = -a_h / (a_l + c_r - c_i);
    let candidates = (-6..=6)
        .flat_map(|e| [2f64.powi(e), -(2f64.powi(e))])
        .chain(std::iter::once(vertex));
    let (gamma, m2) = candidates
        .map(|gm| (gm, swap_second_derivative(gm, a_h, a_l, c_i, c_r)))
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("non-empty scan");
    if m2.is_nan() || m2 >= 0.0 {
        return absent(format!("no γ gives a negative second derivative (best {m2:e})"));
    }
    Ok(SwapCurve {
        base: g.clone(),
        h,
        l,
        gamma,
        second_derivative: m2,
        c_h: c_i,
        c_l: c_r,
    })
}

/// The transfer curve `G̃(t) = U(t)* V(t) G`, where
/// `V(t) = I + (√(1-t²) - 1) v_i v_i* + t v_j v_i*` and `U(t)` rotates the
/// `(v_j, v_i)` plane onto the eigenvectors of `S_{V(t)G}` there.
#[derive(Debug, Clone)]
pub struct TransferCurve {
    base: FrameFamily,
    v_i: CVector,
    v_j: CVector,
    pub i: usize,
    pub j: usize,
    pub mu_i: f64,
    pub mu_j: f64,
    pub delta_i: f64,
    pub delta_j: f64,
}

impl TransferCurve {
    /// `A(t)`, the frame operator of `V(t)G` on `(v_j, v_i)`: `[[p, q], [q, r]]`.
    pub fn plane_matrix(&self, t: f64) -> (f64, f64, f64) {
        let s = (1.0 - t * t).sqrt();
        (self.mu_j + t * t * self.mu_i, t * s * self.mu_i, s * s * self.mu_i)
    }

    /// Eigenvector angle of `A(t)`, continuous from `0` at `t = 0`.
    pub fn angle(&self, t: f64) -> f64 {
        let (p, q, r) = self.plane_matrix(t);
        0.5 * (2.0 * q).atan2(p - r)
    }

    /// `E(t) = L(t) - μ_j`, the eigenvalue moved from `v_i` to `v_j`.
    pub fn transfer(&self, t: f64) -> f64 {
        let (p, q, r) = self.plane_matrix(t);
        let mean = 0.5 * (p + r);
        mean + (0.5 * (p - r)).hypot(q) - self.mu_j
    }

    pub fn at(&self, t: f64) -> FrameFamily {
        let s = (1.0 - t * t).sqrt();
        let (sin, cos) = self.angle(t).sin_cos();
        let vectors = self
            .base
            .vectors()
            .iter()
            .map(|g| {
                let alpha = g.inner(&self.v_i);
                let beta = g.inner(&self.v_j);
                // V(t): the v_i coefficient shrinks to √(1-t²)α and tα moves to v_j.
                let (bj, bi) = (beta + alpha * t, alpha * s);
                // U(t)*: coordinates (b_j, b_i) -> Xᵀ (b_j, b_i).
                let (nj, ni) = (bj * cos + bi * sin, bi * cos - bj * sin);
                g.axpy(nj - beta, &self.v_j).axpy(ni - alpha, &self.v_i)
            })
            .collect();
        FrameFamily::new(vectors).expect("dimensions unchanged")
    }
}

/// Builds the transfer curve for common-eigenbasis positions `i ∈ K_e`,
/// `j ∈ K_r` with `c_e < c_r` and `j < i`.
///
/// Requires `S` and `S_G` to commute, `μ_i, μ_j > 0`, and every vector with
/// a `v_i` component to have none along `v_j`.
pub fn escape_transfer(
    g: &FrameFamily,
    s: &HermitianMatrix,
    i: usize,
    j: usize,
    tol: f64,
) -> Result<TransferCurve, DescentError> {
    check_dims(g, s)?;
    let absent = |msg: String| Err(DescentError::PatternAbsent(msg));
    let d = s.dim();
    if i >= d || j >= i {
        return absent(format!("need j < i < d, got i = {i}, j = {j}"));
    }
    let sg = g.frame_operator();
    let basis = common_eigenbasis(s, &sg, tol)?;
    let scale = 1.0 + s.frobenius_norm() + sg.frobenius_norm();
    if basis.commute_defect > tol * scale {
        return absent(format!("S and S_G do not commute (defect {:e})", basis.commute_defect));
    }
    let (mu_i, mu_j) = (basis.mu[i], basis.mu[j]);
    if mu_i <= tol * scale || mu_j <= tol * scale {
        return absent(format!("positions {i} and {j} must lie in the range of S_G"));
    }
    let (delta_i, delta_j) = (basis.lambda[i] - mu_i, basis.lambda[j] - mu_j);
    if delta_i >= delta_j - tol * scale {
        return absent(format!("need λ_i - μ_i < λ_j - μ_j, got {delta_i} and {delta_j}"));
    }
    let (v_i, v_j) = (basis.basis[i].clone(), basis.basis[j].clone());
    for (l, v) in g.vectors().iter().enumerate() {
        let (along_i, along_j) = (v.inner(&v_i).norm(), v.inner(&v_j).norm());
        if along_i > tol * scale && along_j > tol * scale {
            return absent(format!("g_{l} meets both v_{i} and v_{j}"));
        }
    }
    Ok(TransferCurve {
        base: g.clone(),
        v_i,
        v_j,
        i,
        j,
        mu_i,
        mu_j,
        delta_i,
        delta_j,
    })
}

/// Whether `λ(S - S_{G(t)}) ≺ λ(S - S_G)` with some strictly smaller
/// partial sum; returns the largest gap (positive when strict).
pub fn majorization_gain(s: &HermitianMatrix, before: &FrameFamily, after: &FrameFamily) -> Result<(bool, f64), DescentError> {
    let old = herm_eigenvalues(&residual(s, before.vectors()))?;
    let new = herm_eigenvalues(&residual(s, after.vectors()))?;
    let tol = 1e-12 * (1.0 + s.frobenius_norm());
    let gap = vecmaj::max_partial_sum_gap(&new, &old);
    Ok((vecmaj::majorizes_tol(&new, &old, tol) && gap > tol, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::construct_minimizer;
    use crate::solver::{delta, GfodInstance};

    fn e(dim: usize, i: usize, scale: f64) -> CVector {
        CVector::basis(dim, i).scale(scale)
    }

    fn close(x: &[f64], y: &[f64], tol: f64) -> bool {
        x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol)
    }

    fn fam(vs: Vec<CVector>) -> FrameFamily {
        FrameFamily::new(vs).unwrap()
    }

    #[test]
    fn objective_examples() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let g = fam(vec![e(2, 0, 1.0), e(2, 0, 1.0)]);
        let v = objective(&g, &s, &UINormSpec::frobenius()).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        let g = fam(vec![e(2, 0, 3f64.sqrt()), e(2, 1, 1.0)]);
        assert!(objective(&g, &s, &UINormSpec::frobenius()).unwrap() < 1e-15);
        let s = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        let g = fam(vec![e(2, 0, 2f64.sqrt()), e(2, 1, 1.0)]);
        let v = objective(&g, &s, &UINormSpec::schatten(3.0).unwrap()).unwrap();
        assert!((v - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let g = fam(vec![e(2, 0, 1.0)]);
        let grad = euclidean_gradient(&g, &s, &UINormSpec::frobenius()).unwrap();
        let expected = -4.0 / 5f64.sqrt();
        assert!((grad[0][0].re - expected).abs() < 1e-15 && grad[0][1].norm() == 0.0);
        let s = HermitianMatrix::from_diagonal(&[4.0, 1.0]);
        let exact = fam(vec![e(2, 0, 2.0), e(2, 1, 1.0)]);
        let grad = euclidean_gradient(&exact, &s, &UINormSpec::frobenius()).unwrap();
        assert!(grad.iter().all(|v| v.norm() == 0.0));
        assert!(euclidean_gradient(&g, &s, &UINormSpec::spectral()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for p in [1.5, 2.0, 3.0] {
            let norm = UINormSpec::schatten(p).unwrap();
            let s = HermitianMatrix::from_diagonal(&[4.0, 2.5, 1.0, 0.5]);
            let g = random_family(4, &[1.5, 1.0, 1.0, 0.7, 0.2], 5).unwrap();
            let grad = euclidean_gradient(&g, &s, &norm).unwrap();
            for _ in 0..20 {
                let dir: Vec<CVector> = (0..g.len())
                    .map(|_| {
                        CVector::new(
                            (0..4)
                                .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                                .collect(),
                        )
                    })
                    .collect();
                let h = 1e-6;
                let shifted = |sign: f64| {
                    let vs: Vec<CVector> = g
                        .vectors()
                        .iter()
                        .zip(&dir)
                        .map(|(v, d)| v.axpy(C64::new(sign * h, 0.0), d))
                        .collect();
                    objective(&fam(vs), &s, &norm).unwrap()
                };
                let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
                let an = total_inner(&grad, &dir);
                assert!((fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()), "p {p}: fd {fd} an {an}");
            }
        }
    }

    #[test]
    fn riemannian_gradient_is_tangent() {
        let s = HermitianMatrix::from_diagonal(&[2.0, 1.0, 0.5]);
        let g = random_family(3, &[1.0, 0.5], 7).unwrap();
        let rg = riemannian_gradient(&g, &s, &UINormSpec::schatten(3.0).unwrap()).unwrap();
        for (r, v) in rg.iter().zip(g.vectors()) {
            assert!(r.real_inner(v).abs() < 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        assert!(DescentConfig::default().validate().is_ok());
        assert!(DescentConfig::with_norm(UINormSpec::spectral()).validate().is_err());
        let bad = DescentConfig {
            armijo_c: 1.0,
            ..DescentConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn descent_reference_instances() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        for seed in 0..3 {
            let cfg = DescentConfig {
                seed,
                ..DescentConfig::default()
            };
            let rep = descend(&s, &[1.0, 1.0], &cfg).unwrap();
            assert!(rep.converged && rep.monotone);
            assert!(close(&rep.final_spectrum, &[1.0, 1.0], 1e-5), "{:?}", rep.final_spectrum);
            assert!(rep.max_norm_defect <= 1e-12);
        }
        let s = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        let cfg = DescentConfig::with_norm(UINormSpec::schatten(1.5).unwrap());
        let rep = descend(&s, &[2.0, 1.0], &cfg).unwrap();
        assert!(close(&rep.final_spectrum, &[-1.0, -1.0], 1e-5), "{:?}", rep.final_spectrum);

        let s = HermitianMatrix::from_diagonal(&[2.0, 2.0, 1.0, 1.0]);
        let third = 1.0 / 3.0;
        for p in [1.5, 2.0, 3.0] {
            let cfg = DescentConfig {
                seed: 3,
                ..DescentConfig::with_norm(UINormSpec::schatten(p).unwrap())
            };
            let rep = descend(&s, &[3.0, 1.0, 1.0, 1.0], &cfg).unwrap();
            assert!(rep.converged, "p {p}: grad {}", rep.grad_norm);
            assert!(close(&rep.final_spectrum, &[third, third, third, -1.0], 1e-4), "{:?}", rep.final_spectrum);
        }
    }

    #[test]
    fn multi_start_is_keyed_by_seed() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let cfg = DescentConfig::default();
        let runs = multi_start(&s, &[1.0, 1.0], &cfg, &[4, 9]);
        let single = descend(&s, &[1.0, 1.0], &DescentConfig { seed: 9, ..cfg }).unwrap();
        let second = runs[1].as_ref().unwrap();
        assert_eq!(second.seed, 9);
        assert_eq!(second.final_family, single.final_family);
    }

    #[test]
    fn structure_of_optimal_families() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let m = construct_minimizer(&s, &[1.0, 1.0]).unwrap();
        let st = structure_report(&m.synthesis.family, &s, CLUSTER_TOL).unwrap();
        assert_eq!(st.eigenconstants.len(), 1);
        assert!((st.eigenconstants[0] - 1.0).abs() < 1e-12);
        assert_eq!(st.j_sets, vec![vec![0, 1]]);
        assert!(st.max_residual() <= 1e-7 && st.consecutive());

        let s = HermitianMatrix::from_diagonal(&[2.0, 2.0, 1.0, 1.0]);
        let m = construct_minimizer(&s, &[3.0, 1.0, 1.0, 1.0]).unwrap();
        let st = structure_report(&m.synthesis.family, &s, CLUSTER_TOL).unwrap();
        assert!(close(&st.eigenconstants, &[-1.0, 1.0 / 3.0], 1e-10));
        assert_eq!(st.j_sets, vec![vec![0], vec![1, 2, 3]]);
        assert_eq!(st.k_sets, vec![vec![0], vec![1, 2, 3]]);
        assert!(st.max_residual() <= 1e-7 && st.consecutive());
    }

    #[test]
    fn structure_of_random_minimizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..40 {
            use rand::Rng;
            let d = rng.random_range(1..=5);
            let k = rng.random_range(1..=7);
            let diag: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..4.0)).collect();
            let mut a: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..3.0)).collect();
            a = vecmaj::sort_down(&a);
            let s = HermitianMatrix::from_diagonal(&diag);
            let m = construct_minimizer(&s, &a).unwrap();
            let st = structure_report(&m.synthesis.family, &s, CLUSTER_TOL).unwrap();
            assert!(st.max_residual() <= 1e-7);
            assert!(st.consecutive(), "{:?} {:?} {:?}", st.j_sets, st.k_sets, st.unmatched);
        }
    }

    /// `S = diag(3, 1)`, `G = {e_1, e_2}`: the vector with the larger
    /// constant comes first, and so does its eigen-position.
    fn two_dim_violation() -> (HermitianMatrix, FrameFamily) {
        (HermitianMatrix::from_diagonal(&[3.0, 1.0]), fam(vec![e(2, 0, 1.0), e(2, 1, 1.0)]))
    }

    #[test]
    fn swap_curve_lowers_the_objective() {
        let (s, g) = two_dim_violation();
        let st = structure_report(&g, &s, CLUSTER_TOL).unwrap();
        assert!(!st.consecutive());
        let (h, l) = find_swap_violation(&st).unwrap();
        assert_eq!((h, l), (1, 0));
        let curve = escape_swap(&g, &s, h, l, 1e-9).unwrap();
        assert_eq!(curve.at(0.0), g);
        assert!(curve.second_derivative < 0.0);
        for norm in [UINormSpec::frobenius(), UINormSpec::schatten(3.0).unwrap()] {
            let before = objective(&g, &s, &norm).unwrap();
            let after = objective(&curve.at(1e-2), &s, &norm).unwrap();
            assert!(after < before, "{norm}: {after} vs {before}");
        }
        let (strict, _) = majorization_gain(&s, &g, &curve.at(1e-2)).unwrap();
        assert!(strict);
        for (v, a) in curve.at(0.3).vectors().iter().zip(g.norms_sq()) {
            assert!((v.norm_sq() - a).abs() < 1e-14);
        }
    }

    #[test]
    fn swap_vertex_is_the_minimum() {
        let (a_h, a_l, c_i, c_r) = (0.7, 1.3, -0.4, 0.9);
        let vertex = -a_h / (a_l + c_r - c_i);
        let m = swap_second_derivative(vertex, a_h, a_l, c_i, c_r);
        for gm in [-3.0, -1.0, -0.1, 0.0, 0.2, 2.0] {
            assert!(swap_second_derivative(gm, a_h, a_l, c_i, c_r) >= m);
        }
    }

    #[test]
    fn transfer_curve_lowers_the_objective() {
        let (s, g) = two_dim_violation();
        let st = structure_report(&g, &s, CLUSTER_TOL).unwrap();
        let (i, j) = find_transfer_violation(&st).unwrap();
        assert_eq!((i, j), (1, 0));
        let curve = escape_transfer(&g, &s, i, j, 1e-9).unwrap();
        assert_eq!(curve.at(0.0), g);
        for t in [1e-3, 1e-2] {
            assert!((curve.transfer(t) - t).abs() < 1e-12);
            for norm in [UINormSpec::frobenius(), UINormSpec::schatten(3.0).unwrap()] {
                assert!(objective(&curve.at(t), &s, &norm).unwrap() < objective(&g, &s, &norm).unwrap());
            }
            let spec = herm_eigenvalues(&residual(&s, curve.at(t).vectors())).unwrap();
            assert!(close(&spec, &[2.0 - t, t], 1e-12));
        }
        assert!(majorization_gain(&s, &g, &curve.at(1e-2)).unwrap().0);
    }

    #[test]
    fn escape_preconditions() {
        let s = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let m = construct_minimizer(&s, &[1.0, 1.0]).unwrap();
        assert!(escape_swap(&m.synthesis.family, &s, 1, 0, 1e-9).is_err());
        let st = structure_report(&m.synthesis.family, &s, CLUSTER_TOL).unwrap();
        assert!(find_swap_violation(&st).is_none());
        assert!(find_transfer_violation(&st).is_none());
        let (s, g) = two_dim_violation();
        assert!(escape_swap(&g, &s, 0, 1, 1e-9).is_err());
        assert!(escape_transfer(&g, &s, 0, 1, 1e-9).is_err());
    }

    #[test]
    fn descent_matches_closed_form_for_k_below_d() {
        let s = HermitianMatrix::from_diagonal(&[2.0, 1.0, 1.0]);
        let rep = descend(&s, &[1.0], &DescentConfig::default()).unwrap();
        let expected = delta(&GfodInstance::new(vec![2.0, 1.0, 1.0], vec![1.0]).unwrap())
            .unwrap()
            .delta_sorted();
        assert!(close(&rep.final_spectrum, &expected, 1e-5));
    }
}
