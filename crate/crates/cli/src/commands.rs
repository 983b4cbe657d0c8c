use gfod::descent::{self, DescentConfig, DescentError, DescentReport};
use gfod::frames::{construct_minimizer, FrameError};
use gfod::linalg::herm_eigenvalues;
use gfod::solver::{
    check_cofeasible, check_invariants, delta_with, global_min_value, is_admissible, reduce_to_k, DeltaOptions,
    KdMode, SolverError,
};
use gfod::{UINormSpec, C64};
use rayon::prelude::*;
use serde::Serialize;

use crate::json::{nums, vector, Num};
use crate::problem::{Prepared, Problem};
use crate::Failure;

/// Certificate thresholds for `synthesize`.
const EIGEN_RESIDUAL_TOL: f64 = 1e-7;
const NORM_TOL: f64 = 1e-10;
const SPECTRUM_TOL: f64 = 1e-8;

fn solver_failure(e: SolverError) -> Failure {
    match e {
        SolverError::Empty { .. }
        | SolverError::NonFinite { .. }
        | SolverError::NotSorted { .. }
        | SolverError::NegativeLambda { .. }
        | SolverError::NonPositiveNorm { .. }
        | SolverError::IndexOutOfRange { .. }
        | SolverError::NoCofeasibleIndex => Failure::Input(e.to_string()),
        _ => Failure::Numeric(e.to_string()),
    }
}

fn frame_failure(e: FrameError) -> Failure {
    match e {
        FrameError::Solver(e) => solver_failure(e),
        FrameError::Empty | FrameError::InvalidEntry { .. } | FrameError::NotPositive(_) => {
            Failure::Input(e.to_string())
        }
        _ => Failure::Numeric(e.to_string()),
    }
}

fn descent_failure(e: DescentError) -> Failure {
    match e {
        DescentError::Config(_) | DescentError::DimensionMismatch { .. } => Failure::Input(e.to_string()),
        DescentError::Frame(e) => frame_failure(e),
        _ => Failure::Numeric(e.to_string()),
    }
}

fn prepare(problem: &Problem) -> Result<Prepared, Failure> {
    problem.prepare().map_err(Failure::Input)
}

#[derive(Serialize)]
struct Permutation {
    lambda: Option<Vec<usize>>,
    a: Vec<usize>,
}

impl Permutation {
    fn of(prep: &Prepared) -> Self {
        Permutation {
            lambda: prep.lambda_perm.clone(),
            a: prep.a_perm.clone(),
        }
    }
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[derive(Serialize)]
struct Blocks {
    s: Vec<usize>,
    c: Vec<Num>,
}

#[derive(Serialize)]
struct Check<T> {
    ok: bool,
    residual: T,
}

#[derive(Serialize)]
struct Invariants {
    trace: Check<Num>,
    blocks_increasing: Check<Num>,
    head_bound: Check<Num>,
    majorization: Check<Num>,
    mu_nonnegative: Check<Num>,
}

#[derive(Serialize)]
struct NormValue {
    norm: String,
    value: Num,
}

#[derive(Serialize)]
struct SolutionFile {
    input_permutation: Permutation,
    lambda: Vec<Num>,
    a: Vec<Num>,
    r_star: usize,
    blocks: Blocks,
    delta: Vec<Num>,
    delta_sorted: Vec<Num>,
    mu: Vec<Num>,
    reduced: bool,
    global_min: Vec<NormValue>,
    invariants: Invariants,
    warnings: Vec<String>,
}

pub fn solve(problem: &Problem, norms: &[UINormSpec], exhaustive: bool) -> Result<String, Failure> {
    let prep = prepare(problem)?;
    let inst = &prep.instance;
    let sol = delta_with(inst, DeltaOptions { exhaustive }).map_err(solver_failure)?;
    let report = check_invariants(inst, &sol);
    let global_min = norms
        .iter()
        .map(|n| {
            Ok(NormValue {
                norm: n.to_string(),
                value: Num(global_min_value(inst, n).map_err(solver_failure)?),
            })
        })
        .collect::<Result<_, Failure>>()?;
    let out = SolutionFile {
        input_permutation: Permutation::of(&prep),
        lambda: nums(inst.lambda()),
        a: nums(inst.a()),
        r_star: sol.r_star,
        blocks: Blocks {
            s: sol.s.clone(),
            c: nums(&sol.c),
        },
        delta: nums(&sol.delta),
        delta_sorted: nums(&sol.delta_sorted()),
        mu: nums(&sol.mu),
        reduced: sol.kd_mode == KdMode::Reduced,
        global_min,
        invariants: Invariants {
            trace: Check {
                ok: report.trace_ok,
                residual: Num(report.trace_residual),
            },
            blocks_increasing: Check {
                ok: report.blocks_increasing,
                residual: Num(report.min_block_gap),
            },
            head_bound: Check {
                ok: report.head_bound_ok,
                residual: Num(report.head_bound_excess),
            },
            majorization: Check {
                ok: report.majorization_ok,
                residual: Num(report.majorization_excess),
            },
            mu_nonnegative: Check {
                ok: report.mu_ok,
                residual: Num(report.mu_min),
            },
        },
        warnings: sol.warnings.clone(),
    };
    if !report.all_ok() {
        return Err(Failure::Numeric("solution failed its invariant checks".into()));
    }
    serialize(&out)
}

#[derive(Serialize)]
struct Certificate {
    certified: bool,
    max_eigen_residual: Num,
    max_norm_defect: Num,
    spectrum_deviation: Num,
}

#[derive(Serialize)]
struct FrameFile {
    input_permutation: Permutation,
    vectors: Vec<Vec<[Num; 2]>>,
    norms_sq: Vec<Num>,
    block_constants: Vec<Num>,
    residual_spectrum: Vec<Num>,
    delta_sorted: Vec<Num>,
    certificate: Certificate,
}

pub fn synthesize(problem: &Problem) -> Result<String, Failure> {
    let prep = prepare(problem)?;
    let s = problem.matrix();
    let m = construct_minimizer(&s, &problem.a).map_err(frame_failure)?;
    let family = &m.synthesis.family;

    // Recompute everything from the vectors alone.
    let mut residual = s.clone();
    for v in family.vectors() {
        residual.add_outer(v, -1.0);
    }
    let spectrum = herm_eigenvalues(&residual).map_err(|e| Failure::Numeric(e.to_string()))?;
    let target = m.solution.delta_sorted();
    let scale = 1.0 + prep.instance.scale();
    let max_eigen_residual = family
        .vectors()
        .iter()
        .zip(&m.block_constants)
        .map(|(v, &c)| residual.mul_vec(v).axpy(C64::new(-c, 0.0), v).norm())
        .fold(0.0, f64::max);
    let max_norm_defect = family
        .vectors()
        .iter()
        .zip(&problem.a)
        .map(|(v, a)| (v.norm_sq() - a).abs())
        .fold(0.0, f64::max);
    let spectrum_deviation = max_abs_diff(&spectrum, &target);
    let certified = max_eigen_residual <= EIGEN_RESIDUAL_TOL * scale
        && max_norm_defect <= NORM_TOL * scale
        && spectrum_deviation <= SPECTRUM_TOL * scale;
    if !certified {
        return Err(Failure::Numeric(format!(
            "synthesized family failed its certificate (eigen residual {max_eigen_residual:e}, \
             norm defect {max_norm_defect:e}, spectrum deviation {spectrum_deviation:e})"
        )));
    }
    serialize(&FrameFile {
        input_permutation: Permutation::of(&prep),
        vectors: family.vectors().iter().map(vector).collect(),
        norms_sq: nums(family.norms_sq()),
        block_constants: nums(&m.block_constants),
        residual_spectrum: nums(&spectrum),
        delta_sorted: nums(&target),
        certificate: Certificate {
            certified,
            max_eigen_residual: Num(max_eigen_residual),
            max_norm_defect: Num(max_norm_defect),
            spectrum_deviation: Num(spectrum_deviation),
        },
    })
}

#[derive(Serialize)]
struct Trial {
    norm: String,
    seed: u64,
    converged: bool,
    monotone: bool,
    iterations: usize,
    grad_norm: Num,
    initial_objective: Num,
    final_objective: Num,
    final_spectrum: Vec<Num>,
    spectrum_deviation: Num,
}

#[derive(Serialize)]
struct Aggregate {
    trials: usize,
    converged: usize,
    all_monotone: bool,
    max_spectrum_deviation: Num,
    max_cross_norm_deviation: Num,
}

#[derive(Serialize)]
struct VerifyFile {
    input_permutation: Permutation,
    delta_sorted: Vec<Num>,
    aggregate: Aggregate,
    trials: Vec<Trial>,
}

pub struct VerifyOptions {
    pub norms: Vec<UINormSpec>,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
}

pub fn verify(problem: &Problem, opts: &VerifyOptions) -> Result<String, Failure> {
    let prep = prepare(problem)?;
    for norm in &opts.norms {
        if !norm.is_smooth() {
            return Err(Failure::Input(format!("verify supports Schatten-p and Frobenius norms only, got {norm}")));
        }
    }
    let target = gfod::delta(&prep.instance).map_err(solver_failure)?.delta_sorted();
    let s = problem.matrix();
    let jobs: Vec<(UINormSpec, u64)> = opts
        .norms
        .iter()
        .flat_map(|&n| (0..opts.trials as u64).map(move |t| (n, opts.seed.wrapping_add(t))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Failure::Numeric(e.to_string()))?;
    let reports: Vec<Result<DescentReport, DescentError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(norm, seed)| {
                let config = DescentConfig {
                    seed,
                    ..DescentConfig::with_norm(norm)
                };
                descent::descend(&s, &problem.a, &config)
            })
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>().map_err(descent_failure)?;

    let mut max_dev: f64 = 0.0;
    let mut trials = Vec::with_capacity(reports.len());
    for ((norm, _), r) in jobs.iter().zip(&reports) {
        let dev = max_abs_diff(&r.final_spectrum, &target);
        if r.converged {
            max_dev = max_dev.max(dev);
        }
        trials.push(Trial {
            norm: norm.to_string(),
            seed: r.seed,
            converged: r.converged,
            monotone: r.monotone,
            iterations: r.iterations,
            grad_norm: Num(r.grad_norm),
            initial_objective: Num(r.initial_objective),
            final_objective: Num(r.final_objective),
            final_spectrum: nums(&r.final_spectrum),
            spectrum_deviation: Num(dev),
        });
    }
    let mut cross: f64 = 0.0;
    for (i, ri) in reports.iter().enumerate() {
        for (j, rj) in reports.iter().enumerate().take(i) {
            if ri.converged && rj.converged && jobs[i].0 != jobs[j].0 {
                cross = cross.max(max_abs_diff(&ri.final_spectrum, &rj.final_spectrum));
            }
        }
    }
    serialize(&VerifyFile {
        input_permutation: Permutation::of(&prep),
        delta_sorted: nums(&target),
        aggregate: Aggregate {
            trials: reports.len(),
            converged: reports.iter().filter(|r| r.converged).count(),
            all_monotone: reports.iter().all(|r| r.monotone),
            max_spectrum_deviation: Num(max_dev),
            max_cross_norm_deviation: Num(cross),
        },
        trials,
    })
}

#[derive(Serialize)]
struct CheckFile {
    input_permutation: Permutation,
    index: usize,
    reduced: bool,
    cofeasible: bool,
    admissible: bool,
    degenerate: bool,
    margin: Option<Num>,
    c: Num,
    truncated_mu: Vec<Num>,
}

pub fn check(problem: &Problem, index: usize) -> Result<String, Failure> {
    let prep = prepare(problem)?;
    let reduced = prep.instance.k() < prep.instance.d();
    let inst = if reduced {
        reduce_to_k(&prep.instance).map_err(solver_failure)?.instance
    } else {
        prep.instance.clone()
    };
    let cf = check_cofeasible(&inst, index).map_err(solver_failure)?;
    let adm = if cf.cofeasible {
        Some(is_admissible(&inst, index).map_err(solver_failure)?)
    } else {
        None
    };
    serialize(&CheckFile {
        input_permutation: Permutation::of(&prep),
        index,
        reduced,
        cofeasible: cf.cofeasible,
        admissible: adm.is_some_and(|a| a.admissible),
        degenerate: adm.is_some_and(|a| a.degenerate),
        margin: adm.map(|a| Num(a.margin)),
        c: Num(cf.c),
        truncated_mu: nums(&cf.truncated_mu),
    })
}

fn serialize<T: Serialize>(value: &T) -> Result<String, Failure> {
    crate::json::to_string(value).map_err(|e| Failure::Numeric(e.to_string()))
}
