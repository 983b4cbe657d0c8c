//! The optimal residual spectrum `δ(λ, a)`.
//!
//! Given a target spectrum `λ` (length `d`) and squared norms `a` (length
//! `k`), the minimizers of `N(S - S_G)` over families with `‖g_i‖² = a_i`
//! have residual spectrum `δ(λ, a)` for every strictly convex unitarily
//! invariant norm `N`. When `k ≥ d` the vector is built from a head of
//! averaged blocks followed by a water-filled tail, split at the minimal
//! co-feasible index. When `k < d` the problem is solved on the first `k`
//! eigenvalues and the rest of `λ` is appended unchanged.
//!
//! Index conventions: `r`, `s_j` and the arguments of [`AveragingTable::average`]
//! are 1-based counts, so block `j` covers the 0-based positions
//! `s_{j-1}..s_j`.

use crate::uinorms::UINormSpec;
use crate::vecmaj::{self, majorizes_tol, MAJORIZATION_TOL};

/// Relative tolerance for argmin ties and strictness checks.
pub const TIE_TOL: f64 = 1e-12;
/// Absolute-relative tolerance on the invariants reported with a solution.
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("{which} must be non-empty")]
    Empty { which: &'static str },
    #[error("{which}[{index}] is not finite")]
    NonFinite { which: &'static str, index: usize },
    #[error("{which} must be non-increasing, but entry {index} exceeds its predecessor")]
    NotSorted { which: &'static str, index: usize },
    #[error("lambda[{index}] = {value} is negative")]
    NegativeLambda { index: usize, value: f64 },
    #[error("a[{index}] = {value} must be positive")]
    NonPositiveNorm { index: usize, value: f64 },
    #[error("water-fill total must be positive and finite, got {0}")]
    WaterfillTotal(f64),
    #[error("water-fill needs a non-empty finite tail")]
    WaterfillTail,
    #[error("average P({j},{r}) is out of range for table length {len}")]
    AverageOutOfRange { j: usize, r: usize, len: usize },
    #[error("index r = {r} out of range, must be at most {max}")]
    IndexOutOfRange { r: usize, max: usize },
    #[error("operation requires k >= d, got k = {k}, d = {d}")]
    NeedsKAtLeastD { k: usize, d: usize },
    #[error("reduction requires k < d, got k = {k}, d = {d}")]
    NeedsKBelowD { k: usize, d: usize },
    #[error("index r = {0} is not co-feasible")]
    NotCofeasible(usize),
    #[error("no co-feasible index exists for this instance")]
    NoCofeasibleIndex,
    #[error("minimal co-feasible index {r} is not admissible (margin {margin:e})")]
    NotAdmissible { r: usize, margin: f64 },
    #[error("co-feasible admissible index is not unique: {0:?}")]
    NotUnique(Vec<usize>),
}

/// Target spectrum and squared norms, both sorted non-increasingly.
#[derive(Debug, Clone, PartialEq)]
pub struct GfodInstance {
    lambda: Vec<f64>,
    a: Vec<f64>,
}

/// An instance built from unsorted data, with the permutations applied.
/// `instance.lambda()[i] = raw_lambda[lambda_perm[i]]`, likewise for `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedInstance {
    pub instance: GfodInstance,
    pub lambda_perm: Vec<usize>,
    pub a_perm: Vec<usize>,
}

impl GfodInstance {
    pub fn new(lambda: Vec<f64>, a: Vec<f64>) -> Result<Self, SolverError> {
        check_entries("lambda", &lambda)?;
        check_entries("a", &a)?;
        if let Some((index, &value)) = lambda.iter().enumerate().find(|(_, &x)| x < 0.0) {
            return Err(SolverError::NegativeLambda { index, value });
        }
        if let Some((index, &value)) = a.iter().enumerate().find(|(_, &x)| x <= 0.0) {
            return Err(SolverError::NonPositiveNorm { index, value });
        }
        Ok(GfodInstance { lambda, a })
    }

    /// Sorts both vectors non-increasingly before validating.
    pub fn from_unsorted(lambda: &[f64], a: &[f64]) -> Result<SortedInstance, SolverError> {
        let lambda_perm = vecmaj::sort_down_permutation(lambda);
        let a_perm = vecmaj::sort_down_permutation(a);
        let instance = GfodInstance::new(
            lambda_perm.iter().map(|&i| lambda[i]).collect(),
            a_perm.iter().map(|&i| a[i]).collect(),
        )?;
        Ok(SortedInstance {
            instance,
            lambda_perm,
            a_perm,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// Magnitude used to scale absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.lambda[0].max(self.a[0])
    }

    fn tol(&self) -> f64 {
        MAJORIZATION_TOL * (1.0 + self.scale())
    }
}

fn check_entries(which: &'static str, x: &[f64]) -> Result<(), SolverError> {
    if x.is_empty() {
        return Err(SolverError::Empty { which });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite { which, index });
    }
    if let Some(index) = (1..x.len()).find(|&i| x[i] > x[i - 1]) {
        return Err(SolverError::NotSorted { which, index });
    }
    Ok(())
}

/// Prefix sums of `h_i = λ_i - a_i` over the first `min(k, d)` indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingTable {
    pub h: Vec<f64>,
    /// `prefix[j] = h_1 + ... + h_j`, `prefix[0] = 0`.
    pub prefix: Vec<f64>,
}

impl AveragingTable {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// `P(j, r)`: mean of `h_j..h_r`, 1-based and inclusive.
    pub fn average(&self, j: usize, r: usize) -> Result<f64, SolverError> {
        if j == 0 || j > r || r > self.len() {
            return Err(SolverError::AverageOutOfRange {
                j,
                r,
                len: self.len(),
            });
        }
        Ok((self.prefix[r] - self.prefix[j - 1]) / (r - j + 1) as f64)
    }
}

pub fn averages(inst: &GfodInstance) -> AveragingTable {
    let h: Vec<f64> = inst.lambda.iter().zip(&inst.a).map(|(l, a)| l - a).collect();
    let mut prefix = Vec::with_capacity(h.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in &h {
        acc += x;
        prefix.push(acc);
    }
    AveragingTable { h, prefix }
}

/// The unique `c < max(tail)` with `Σ (tail_i - c)^+ = total`.
///
/// Exact on the piecewise-linear left side: with the `m` largest entries
/// active, `c = (tail_1 + ... + tail_m - total) / m`, and the first `m`
/// whose `c` lies at or above the next breakpoint is the answer.
pub fn waterfill_c(tail: &[f64], total: f64) -> Result<f64, SolverError> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(SolverError::WaterfillTotal(total));
    }
    if tail.is_empty() || tail.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::WaterfillTail);
    }
    let sorted = vecmaj::sort_down(tail);
    let mut sum = 0.0;
    for m in 1..=sorted.len() {
        sum += sorted[m - 1];
        let c = (sum - total) / m as f64;
        if m == sorted.len() || c >= sorted[m] {
            return Ok(c);
        }
    }
    unreachable!("loop returns at m = len")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoFeasibility {
    pub r: usize,
    /// Water-fill constant of the tail.
    pub c: f64,
    pub cofeasible: bool,
    /// `((λ_i - c)^+)_{i > r}`.
    pub truncated_mu: Vec<f64>,
}

/// Whether the tail pair `(λ_{r+1..d}, a_{r+1..k})` is co-feasible.
pub fn check_cofeasible(inst: &GfodInstance, r: usize) -> Result<CoFeasibility, SolverError> {
    let (d, k) = (inst.d(), inst.k());
    if k < d {
        return Err(SolverError::NeedsKAtLeastD { k, d });
    }
    if r >= d {
        return Err(SolverError::IndexOutOfRange { r, max: d - 1 });
    }
    let tail = &inst.lambda[r..];
    let a_tail = &inst.a[r..];
    let c = waterfill_c(tail, a_tail.iter().sum())?;
    let truncated_mu: Vec<f64> = tail.iter().map(|l| (l - c).max(0.0)).collect();
    let cofeasible = c < tail[0] && majorizes_tol(a_tail, &truncated_mu, inst.tol());
    Ok(CoFeasibility {
        r,
        c,
        cofeasible,
        truncated_mu,
    })
}

/// Block ends `s_1 < ... < s_{q-1} = r` and constants `c_1, ..., c_{q-1}`
/// of the averaging recursion; empty for `r = 0`.
pub fn block_structure(
    inst: &GfodInstance,
    r: usize,
) -> Result<(Vec<usize>, Vec<f64>), SolverError> {
    let n = inst.d().min(inst.k());
    if r >= n {
        return Err(SolverError::IndexOutOfRange { r, max: n - 1 });
    }
    let table = averages(inst);
    let mut s = Vec::new();
    let mut c = Vec::new();
    let mut start = 0;
    while start < r {
        let values: Vec<f64> = ((start + 1)..=r)
            .map(|l| table.average(start + 1, l))
            .collect::<Result<_, _>>()?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let slack = TIE_TOL * (1.0 + min.abs());
        let offset = values
            .iter()
            .rposition(|&v| v <= min + slack)
            .expect("non-empty range");
        let end = start + 1 + offset;
        s.push(end);
        c.push(values[offset]);
        start = end;
    }
    Ok((s, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `r = 0`, or `c_{q-1} < c_q` up to the tie tolerance.
    pub admissible: bool,
    /// `c_q - c_{q-1}`; infinite for `r = 0`.
    pub margin: f64,
    /// The margin lies within the tie tolerance of zero.
    pub degenerate: bool,
}

pub fn is_admissible(inst: &GfodInstance, r: usize) -> Result<Admissibility, SolverError> {
    let cf = check_cofeasible(inst, r)?;
    if !cf.cofeasible {
        return Err(SolverError::NotCofeasible(r));
    }
    Ok(admissibility(inst, r, cf.c)?.0)
}

fn admissibility(
    inst: &GfodInstance,
    r: usize,
    c_tail: f64,
) -> Result<(Admissibility, Vec<usize>, Vec<f64>), SolverError> {
    let (s, c) = block_structure(inst, r)?;
    let adm = match c.last() {
        None => Admissibility {
            admissible: true,
            margin: f64::INFINITY,
            degenerate: false,
        },
        Some(&last) => {
            let margin = c_tail - last;
            let slack = TIE_TOL * (1.0 + last.abs().max(c_tail.abs()));
            Admissibility {
                admissible: margin > -slack,
                margin,
                degenerate: margin.abs() <= slack,
            }
        }
    };
    Ok((adm, s, c))
}

/// Result of the index search, with any degeneracy warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexChoice {
    pub r: usize,
    pub cofeasibility: CoFeasibility,
    pub admissibility: Admissibility,
    pub warnings: Vec<String>,
}

/// The smallest co-feasible index, which is also the unique admissible one.
/// With `exhaustive`, every index is scanned and uniqueness is asserted.
pub fn minimal_cofeasible_index(
    inst: &GfodInstance,
    exhaustive: bool,
) -> Result<IndexChoice, SolverError> {
    let mut chosen: Option<IndexChoice> = None;
    let mut strict_others = Vec::new();
    let mut warnings = Vec::new();
    for r in 0..inst.d() {
        let cf = check_cofeasible(inst, r)?;
        if !cf.cofeasible {
            continue;
        }
        let (adm, _, _) = admissibility(inst, r, cf.c)?;
        if chosen.is_none() {
            if !adm.admissible {
                return Err(SolverError::NotAdmissible {
                    r,
                    margin: adm.margin,
                });
            }
            if adm.degenerate {
                warnings.push(format!(
                    "degenerate instance: admissibility margin {:e} at r = {r}",
                    adm.margin
                ));
            }
            chosen = Some(IndexChoice {
                r,
                cofeasibility: cf,
                admissibility: adm,
                warnings: Vec::new(),
            });
            if !exhaustive {
                break;
            }
        } else if adm.admissible {
            if adm.degenerate {
                warnings.push(format!(
                    "degenerate instance: index {r} is co-feasible with admissibility margin {:e}",
                    adm.margin
                ));
            } else {
                strict_others.push(r);
            }
        }
    }
    let mut choice = chosen.ok_or(SolverError::NoCofeasibleIndex)?;
    if !strict_others.is_empty() {
        let mut all = vec![choice.r];
        all.extend(strict_others);
        return Err(SolverError::NotUnique(all));
    }
    choice.warnings = warnings;
    Ok(choice)
}

/// A `k < d` instance truncated to its first `k` eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedInstance {
    pub instance: GfodInstance,
    /// `λ_{k+1..d}`, appended unchanged to `δ`.
    pub tail: Vec<f64>,
}

pub fn reduce_to_k(inst: &GfodInstance) -> Result<ReducedInstance, SolverError> {
    let (d, k) = (inst.d(), inst.k());
    if k >= d {
        return Err(SolverError::NeedsKBelowD { k, d });
    }
    Ok(ReducedInstance {
        instance: GfodInstance {
            lambda: inst.lambda[..k].to_vec(),
            a: inst.a.clone(),
        },
        tail: inst.lambda[k..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdMode {
    /// `k ≥ d`: solved directly.
    Direct,
    /// `k < d`: solved on `λ_1..λ_k`, with `λ_{k+1..d}` appended.
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSolution {
    pub r_star: usize,
    pub q: usize,
    /// Block ends `s_1 < ... < s_q` (1-based counts; `s_0 = 0` implied).
    pub s: Vec<usize>,
    /// Block constants `c_1 < ... < c_q`.
    pub c: Vec<f64>,
    /// `δ`, aligned with the sorted `λ` (not itself sorted).
    pub delta: Vec<f64>,
    /// `λ - δ`.
    pub mu: Vec<f64>,
    pub kd_mode: KdMode,
    pub warnings: Vec<String>,
}

impl DeltaSolution {
    /// `δ` in non-increasing order: the residual spectrum of every minimizer.
    pub fn delta_sorted(&self) -> Vec<f64> {
        vecmaj::sort_down(&self.delta)
    }

    /// 0-based block index of each of the first `s_q` coordinates.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut start = 0;
        for (j, &end) in self.s.iter().enumerate() {
            out.extend(std::iter::repeat_n(j, end - start));
            start = end;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DeltaOptions {
    /// Scan every index and assert uniqueness of the admissible one.
    pub exhaustive: bool,
}

pub fn delta(inst: &GfodInstance) -> Result<DeltaSolution, SolverError> {
    delta_with(inst, DeltaOptions::default())
}

pub fn delta_with(inst: &GfodInstance, options: DeltaOptions) -> Result<DeltaSolution, SolverError> {
    if inst.k() < inst.d() {
        let reduced = reduce_to_k(inst)?;
        let mut sol = delta_direct(&reduced.instance, options)?;
        sol.delta.extend_from_slice(&reduced.tail);
        sol.mu = inst.lambda.iter().zip(&sol.delta).map(|(l, x)| l - x).collect();
        sol.kd_mode = KdMode::Reduced;
        return Ok(sol);
    }
    delta_direct(inst, options)
}

fn delta_direct(inst: &GfodInstance, options: DeltaOptions) -> Result<DeltaSolution, SolverError> {
    let choice = minimal_cofeasible_index(inst, options.exhaustive)?;
    let r = choice.r;
    let c_tail = choice.cofeasibility.c;
    let (mut s, mut c) = block_structure(inst, r)?;

    let lambda = &inst.lambda;
    let s_tail = (r..inst.d())
        .rfind(|&i| lambda[i] - c_tail > 0.0)
        .map_or(r + 1, |i| i + 1);

    let mut delta = Vec::with_capacity(inst.d());
    let mut start = 0;
    for (&end, &cj) in s.iter().zip(&c) {
        delta.extend(std::iter::repeat_n(cj, end - start));
        start = end;
    }
    delta.extend(lambda[r..].iter().map(|&l| l.min(c_tail)));

    s.push(s_tail);
    c.push(c_tail);
    let mu = lambda.iter().zip(&delta).map(|(l, x)| l - x).collect();
    Ok(DeltaSolution {
        r_star: r,
        q: s.len(),
        s,
        c,
        delta,
        mu,
        kd_mode: KdMode::Direct,
        warnings: choice.warnings,
    })
}

/// `N(diag(δ))`: the minimum of `N(S - S_G)` over all admissible families.
pub fn global_min_value(inst: &GfodInstance, norm: &UINormSpec) -> Result<f64, SolverError> {
    Ok(norm.evaluate_spectrum(&delta(inst)?.delta))
}

/// Measured residuals of the solution invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    /// `|Σδ - (Σλ - Σa)|`.
    pub trace_residual: f64,
    pub trace_ok: bool,
    /// Smallest gap `c_{j+1} - c_j`; infinite for a single block.
    pub min_block_gap: f64,
    pub blocks_increasing: bool,
    /// Largest `δ_i - min(c_q, λ_i)` over the solved head.
    pub head_bound_excess: f64,
    pub head_bound_ok: bool,
    /// Largest partial-sum excess of `a` over `μ`, and the total mismatch.
    pub majorization_excess: f64,
    pub majorization_ok: bool,
    /// Smallest entry of `μ`.
    pub mu_min: f64,
    /// Largest `|μ_i|` for `i > k` (zero when `k ≥ d`).
    pub mu_tail_max: f64,
    pub mu_ok: bool,
}

impl InvariantReport {
    pub fn all_ok(&self) -> bool {
        self.trace_ok && self.blocks_increasing && self.head_bound_ok && self.majorization_ok && self.mu_ok
    }
}

pub fn check_invariants(inst: &GfodInstance, sol: &DeltaSolution) -> InvariantReport {
    let tol = INVARIANT_TOL * (1.0 + inst.scale() * inst.d().max(inst.k()) as f64);
    let expected: f64 = inst.lambda.iter().sum::<f64>() - inst.a.iter().sum::<f64>();
    let trace_residual = (sol.delta.iter().sum::<f64>() - expected).abs();

    let min_block_gap = sol
        .c
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);

    let head = inst.d().min(inst.k());
    let c_q = *sol.c.last().expect("at least one block");
    let head_bound_excess = sol.delta[..head]
        .iter()
        .zip(&inst.lambda)
        .map(|(x, l)| x - c_q.min(*l))
        .fold(f64::NEG_INFINITY, f64::max);

    let majorization_excess = {
        let xs = vecmaj::sort_down(&inst.a);
        let ys = vecmaj::sort_down(&sol.mu);
        let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
        for (x, y) in xs.iter().zip(&ys) {
            lhs += x;
            rhs += y;
            worst = f64::max(worst, lhs - rhs);
        }
        let total = (xs.iter().sum::<f64>() - ys.iter().sum::<f64>()).abs();
        worst.max(total)
    };

    let mu_min = sol.mu.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_tail_max = sol.mu.iter().skip(inst.k()).fold(0.0f64, |m, x| m.max(x.abs()));

    InvariantReport {
        trace_residual,
        trace_ok: trace_residual <= tol,
        min_block_gap,
        blocks_increasing: min_block_gap > 0.0,
        head_bound_excess,
        head_bound_ok: head_bound_excess <= tol,
        majorization_excess,
        majorization_ok: majorization_excess <= tol,
        mu_min,
        mu_tail_max,
        mu_ok: mu_min >= -tol && mu_tail_max <= tol,
    }
}
