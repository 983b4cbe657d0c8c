//! Unitarily invariant norms on Hermitian matrices.
//!
//! Every norm here is a symmetric gauge function of the singular values, so
//! evaluation goes through [`singular_values`]. Gradients are offered only
//! for the smooth members (Schatten-p with `p > 1`, Frobenius); the composite
//! strictly convex norms are evaluation-only.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{herm_eig, singular_values, HermitianMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormError {
    #[error("Schatten exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("Ky Fan order must be at least 1")]
    InvalidKyFanOrder,
    #[error("Frobenius weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("gradient is only available for Schatten-p and Frobenius norms, not {0}")]
    NotSmooth(String),
    #[error("gradient is undefined at the zero matrix")]
    ZeroMatrix,
    #[error("cannot parse norm {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `(sum s_i^p)^(1/p)`, `p > 1`.
    SchattenP(f64),
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Sum of the `h` largest singular values.
    KyFan(usize),
    /// `KyFan(h) + eps * Frobenius`.
    KyFanPlusFro { h: usize, eps: f64 },
    /// `Spectral + eps * Frobenius`.
    SpectralPlusFro { eps: f64 },
}

/// A validated unitarily invariant norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UINormSpec {
    kind: NormKind,
}

impl UINormSpec {
    pub fn new(kind: NormKind) -> Result<Self, NormError> {
        let check_eps = |eps: f64| {
            if eps > 0.0 && eps.is_finite() {
                Ok(())
            } else {
                Err(NormError::InvalidWeight(eps))
            }
        };
        match kind {
            NormKind::SchattenP(p) if !(p > 1.0 && p.is_finite()) => {
                return Err(NormError::InvalidExponent(p))
            }
            NormKind::KyFan(0) | NormKind::KyFanPlusFro { h: 0, .. } => {
                return Err(NormError::InvalidKyFanOrder)
            }
            NormKind::KyFanPlusFro { eps, .. } | NormKind::SpectralPlusFro { eps } => check_eps(eps)?,
            _ => {}
        }
        Ok(UINormSpec { kind })
    }

    pub fn schatten(p: f64) -> Result<Self, NormError> {
        Self::new(NormKind::SchattenP(p))
    }

    pub fn frobenius() -> Self {
        UINormSpec {
            kind: NormKind::Frobenius,
        }
    }

    pub fn spectral() -> Self {
        UINormSpec {
            kind: NormKind::Spectral,
        }
    }

    pub fn ky_fan(h: usize) -> Result<Self, NormError> {
        Self::new(NormKind::KyFan(h))
    }

    pub fn ky_fan_plus_fro(h: usize, eps: f64) -> Result<Self, NormError> {
        Self::new(NormKind::KyFanPlusFro { h, eps })
    }

    pub fn spectral_plus_fro(eps: f64) -> Result<Self, NormError> {
        Self::new(NormKind::SpectralPlusFro { eps })
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn strictly_convex(&self) -> bool {
        matches!(
            self.kind,
            NormKind::SchattenP(_)
                | NormKind::Frobenius
                | NormKind::KyFanPlusFro { .. }
                | NormKind::SpectralPlusFro { .. }
        )
    }

    /// Whether [`UINormSpec::gradient`] is available.
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, NormKind::SchattenP(_) | NormKind::Frobenius)
    }

    /// Effective Schatten exponent of a smooth norm.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            NormKind::SchattenP(p) => Some(p),
            NormKind::Frobenius => Some(2.0),
            _ => None,
        }
    }

    pub fn evaluate(&self, a: &HermitianMatrix) -> Result<f64, NormError> {
        if self.kind == NormKind::Frobenius {
            return Ok(a.frobenius_norm());
        }
        Ok(self.evaluate_spectrum(&singular_values(a)?))
    }

    /// Norm of `diag(values)`. Signs and order of `values` are irrelevant.
    pub fn evaluate_spectrum(&self, values: &[f64]) -> f64 {
        let mut s: Vec<f64> = values.iter().map(|x| x.abs()).collect();
        s.sort_by(|x, y| y.total_cmp(x));
        match self.kind {
            NormKind::SchattenP(p) => schatten(&s, p),
            NormKind::Frobenius => schatten(&s, 2.0),
            NormKind::Spectral => s.first().copied().unwrap_or(0.0),
            NormKind::KyFan(h) => s.iter().take(h).sum(),
            NormKind::KyFanPlusFro { h, eps } => {
                s.iter().take(h).sum::<f64>() + eps * schatten(&s, 2.0)
            }
            NormKind::SpectralPlusFro { eps } => {
                s.first().copied().unwrap_or(0.0) + eps * schatten(&s, 2.0)
            }
        }
    }

    /// Gradient of a smooth norm at `a != 0`, as a Hermitian matrix `G` with
    /// `d/dt N(a + tH)|_0 = Re tr(G H)`.
    ///
    /// For Schatten-p this is `U diag(phi(lambda_i)) U*` with
    /// `phi(x) = sign(x) |x|^(p-1) / ||a||_p^(p-1)`.
    pub fn gradient(&self, a: &HermitianMatrix) -> Result<HermitianMatrix, NormError> {
        let p = match self.kind {
            NormKind::Frobenius => {
                let norm = a.frobenius_norm();
                if norm == 0.0 {
                    return Err(NormError::ZeroMatrix);
                }
                return Ok(a.scale(1.0 / norm));
            }
            NormKind::SchattenP(p) => p,
            _ => return Err(NormError::NotSmooth(self.to_string())),
        };
        let eig = herm_eig(a)?;
        let norm = schatten(&eig.eigenvalues, p);
        if norm == 0.0 {
            return Err(NormError::ZeroMatrix);
        }
        let mut g = HermitianMatrix::zeros(a.dim());
        for (&lam, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            // |x|^(p-1) / N^(p-1) = (|x|/N)^(p-1), which avoids overflow for large p.
            let weight = lam.signum() * (lam.abs() / norm).powf(p - 1.0);
            if lam != 0.0 {
                g.add_outer(v, weight);
            }
        }
        Ok(g)
    }
}

/// `(sum |x_i|^p)^(1/p)`, scaled by the largest entry to stay finite.
fn schatten(values: &[f64], p: f64) -> f64 {
    let top = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return 0.0;
    }
    let acc: f64 = values.iter().map(|x| (x.abs() / top).powf(p)).sum();
    top * acc.powf(1.0 / p)
}

impl fmt::Display for UINormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NormKind::SchattenP(p) => write!(f, "p{p}"),
            NormKind::Frobenius => write!(f, "fro"),
            NormKind::Spectral => write!(f, "spec"),
            NormKind::KyFan(h) => write!(f, "kyfan{h}"),
            NormKind::KyFanPlusFro { h, eps } => write!(f, "kyfan{h}+fro{eps}"),
            NormKind::SpectralPlusFro { eps } => write!(f, "spec+fro{eps}"),
        }
    }
}

/// Compact norm strings: `fro`, `spec`, `p1.5`, `kyfan3`, `kyfan3+fro0.01`,
/// `spec+fro1`.
impl FromStr for UINormSpec {
    type Err = NormError;

    fn from_str(input: &str) -> Result<Self, NormError> {
        let fail = |reason: &str| NormError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let text = input.trim().to_ascii_lowercase();
        let (base, extra) = match text.split_once('+') {
            Some((base, extra)) => (base, Some(extra)),
            None => (text.as_str(), None),
        };
        let eps = match extra {
            None => None,
            Some(rest) => {
                let w = rest
                    .strip_prefix("fro")
                    .ok_or_else(|| fail("only '+fro<eps>' composites are supported"))?;
                Some(w.parse::<f64>().map_err(|_| fail("bad Frobenius weight"))?)
            }
        };
        let kind = if base == "fro" {
            NormKind::Frobenius
        } else if base == "spec" {
            NormKind::Spectral
        } else if let Some(h) = base.strip_prefix("kyfan") {
            NormKind::KyFan(h.parse().map_err(|_| fail("bad Ky Fan order"))?)
        } else if let Some(p) = base.strip_prefix('p') {
            NormKind::SchattenP(p.parse().map_err(|_| fail("bad Schatten exponent"))?)
        } else {
            return Err(fail("unknown norm family"));
        };
        let kind = match (kind, eps) {
            (k, None) => k,
            (NormKind::KyFan(h), Some(eps)) => NormKind::KyFanPlusFro { h, eps },
            (NormKind::Spectral, Some(eps)) => NormKind::SpectralPlusFro { eps },
            _ => return Err(fail("'+fro' composites need a kyfan or spec base")),
        };
        UINormSpec::new(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::random_hermitian;
    use crate::linalg::{CVector, C64};
    use crate::vecmaj::submajorizes_weak;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<UINormSpec> {
        vec![
            UINormSpec::schatten(1.5).unwrap(),
            UINormSpec::schatten(3.0).unwrap(),
            UINormSpec::frobenius(),
            UINormSpec::spectral(),
            UINormSpec::ky_fan(2).unwrap(),
            UINormSpec::ky_fan_plus_fro(1, 0.01).unwrap(),
            UINormSpec::spectral_plus_fro(1.0).unwrap(),
        ]
    }

    /// Random unitary as a product of complex plane rotations.
    fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Vec<CVector> {
        let mut cols: Vec<CVector> = (0..dim).map(|i| CVector::basis(dim, i)).collect();
        for _ in 0..(3 * dim * dim) {
            let p = rng.random_range(0..dim);
            let q = rng.random_range(0..dim);
            if p == q {
                continue;
            }
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (c, s) = (theta.cos(), theta.sin());
            let ph = C64::from_polar(1.0, phi);
            for col in cols.iter_mut() {
                let e = col.entries_mut();
                let (xp, xq) = (e[p], e[q]);
                e[p] = xp * c - xq * s * ph.conj();
                e[q] = xp * s * ph + xq * c;
            }
        }
        cols
    }

    #[test]
    fn evaluation_examples() {
        let id = HermitianMatrix::from_diagonal(&[1.0, 1.0]);
        assert!((UINormSpec::frobenius().evaluate(&id).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let neg = HermitianMatrix::from_diagonal(&[-1.0, -1.0]);
        assert_eq!(UINormSpec::ky_fan(1).unwrap().evaluate(&neg).unwrap(), 1.0);

        // Spectral + Frobenius on (0, 1, 1) and (r, r, 1), r = sqrt(2)/2.
        let n = UINormSpec::spectral_plus_fro(1.0).unwrap();
        let r = 2f64.sqrt() / 2.0;
        let lhs = n.evaluate(&HermitianMatrix::from_diagonal(&[0.0, 1.0, 1.0])).unwrap();
        let rhs = n.evaluate(&HermitianMatrix::from_diagonal(&[r, r, 1.0])).unwrap();
        assert!((lhs - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((rhs - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        // Dropping the shared coordinate breaks the tie the other way.
        assert!((n.evaluate_spectrum(&[0.0, 1.0]) - 2.0).abs() < 1e-15);
        assert!((n.evaluate_spectrum(&[r, r]) - (r + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn schatten_three_of_minus_identity() {
        let n = UINormSpec::schatten(3.0).unwrap();
        let v = n.evaluate(&HermitianMatrix::from_diagonal(&[-1.0, -1.0])).unwrap();
        assert!((v - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(matches!(UINormSpec::schatten(1.0), Err(NormError::InvalidExponent(_))));
        assert!(matches!(UINormSpec::ky_fan(0), Err(NormError::InvalidKyFanOrder)));
        assert!(matches!(UINormSpec::spectral_plus_fro(0.0), Err(NormError::InvalidWeight(_))));
        assert!(UINormSpec::schatten(2.0).unwrap().strictly_convex());
        assert!(!UINormSpec::ky_fan(2).unwrap().strictly_convex());
        assert!(!UINormSpec::spectral().strictly_convex());
        assert!(UINormSpec::ky_fan_plus_fro(2, 0.1).unwrap().strictly_convex());
    }

    #[test]
    fn parse_round_trip() {
        for text in ["p2", "p1.5", "kyfan3+fro0.01", "spec+fro1", "fro", "spec", "kyfan2"] {
            let n: UINormSpec = text.parse().unwrap();
            assert_eq!(n.to_string(), text);
        }
        assert_eq!(
            "kyfan3+fro0.01".parse::<UINormSpec>().unwrap().kind(),
            NormKind::KyFanPlusFro { h: 3, eps: 0.01 }
        );
        for bad in ["p1", "p0.5", "q2", "fro+fro1", "kyfan0", "spec+fro-1", "p"] {
            assert!(bad.parse::<UINormSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn gradient_examples() {
        let a = HermitianMatrix::from_diagonal(&[3.0, 4.0]);
        let g = UINormSpec::frobenius().gradient(&a).unwrap();
        assert!((&g - &HermitianMatrix::from_diagonal(&[0.6, 0.8])).frobenius_norm() < 1e-15);
        assert!(matches!(
            UINormSpec::frobenius().gradient(&HermitianMatrix::zeros(2)),
            Err(NormError::ZeroMatrix)
        ));
        assert!(matches!(
            UINormSpec::spectral().gradient(&a),
            Err(NormError::NotSmooth(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = random_hermitian(&mut rng, 5);
            let gf = UINormSpec::frobenius().gradient(&a).unwrap();
            let g2 = UINormSpec::schatten(2.0).unwrap().gradient(&a).unwrap();
            assert!((&gf - &g2).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn schatten3_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = UINormSpec::schatten(3.0).unwrap();
        let a = random_hermitian(&mut rng, 4);
        let g = n.gradient(&a).unwrap();
        let h = 1e-6;
        for _ in 0..20 {
            let dir = random_hermitian(&mut rng, 4);
            let plus = n.evaluate(&(&a + &dir.scale(h))).unwrap();
            let minus = n.evaluate(&(&a - &dir.scale(h))).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            let an = g.trace_inner(&dir);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(fd.abs()), "fd {fd} an {an}");
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let dim = rng.random_range(1..=6);
            let a = random_hermitian(&mut rng, dim);
            let u = random_unitary(&mut rng, dim);
            let b = a.conjugate_by(&u).unwrap();
            for n in all_kinds() {
                let (x, y) = (n.evaluate(&a).unwrap(), n.evaluate(&b).unwrap());
                assert!((x - y).abs() <= 1e-10 * (1.0 + x), "{n}: {x} vs {y}");
            }
        }
    }

    /// Builds `x` with `|x| ≺_w |y|`: T-transform mixing then entrywise shrinking.
    fn dominated(rng: &mut ChaCha8Rng, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        let n = x.len();
        for _ in 0..n {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let t: f64 = rng.random();
            let (xi, xj) = (x[i], x[j]);
            x[i] = t * xi + (1.0 - t) * xj;
            x[j] = (1.0 - t) * xi + t * xj;
        }
        for v in x.iter_mut() {
            *v *= rng.random_range(0.0..=1.0);
        }
        x
    }

    fn conjugated_diag(rng: &mut ChaCha8Rng, diag: &[f64]) -> HermitianMatrix {
        let u = random_unitary(rng, diag.len());
        HermitianMatrix::from_diagonal(diag).conjugate_by(&u).unwrap()
    }

    #[test]
    fn monotone_under_weak_submajorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let dim = rng.random_range(1..=5);
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = dominated(&mut rng, &y);
            let a = conjugated_diag(&mut rng, &x);
            let b = conjugated_diag(&mut rng, &y);
            let (sa, sb) = (singular_values(&a).unwrap(), singular_values(&b).unwrap());
            assert!(submajorizes_weak(&sa, &sb));
            for n in all_kinds() {
                assert!(n.evaluate(&a).unwrap() <= n.evaluate(&b).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn strictly_convex_norms_separate_distinct_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let strict: Vec<UINormSpec> = all_kinds().into_iter().filter(|n| n.strictly_convex()).collect();
        let mut witnesses = 0;
        for _ in 0..10_000 {
            let dim = rng.random_range(1..=4);
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = dominated(&mut rng, &y);
            let sx: Vec<f64> = crate::vecmaj::sort_down(&x.iter().map(|v| v.abs()).collect::<Vec<_>>());
            let sy: Vec<f64> = crate::vecmaj::sort_down(&y.iter().map(|v| v.abs()).collect::<Vec<_>>());
            let gap = sx.iter().zip(&sy).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            if gap < 1e-6 {
                continue;
            }
            for n in &strict {
                let (nx, ny) = (n.evaluate_spectrum(&x), n.evaluate_spectrum(&y));
                if nx >= ny {
                    witnesses += 1;
                }
            }
        }
        assert_eq!(witnesses, 0);
    }

    #[test]
    fn triangle_and_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let dim = rng.random_range(1..=5);
            let a = random_hermitian(&mut rng, dim);
            let b = random_hermitian(&mut rng, dim);
            let t: f64 = rng.random_range(-4.0..4.0);
            for n in all_kinds() {
                let (na, nb) = (n.evaluate(&a).unwrap(), n.evaluate(&b).unwrap());
                assert!(n.evaluate(&(&a + &b)).unwrap() <= na + nb + 1e-10);
                let scaled = n.evaluate(&a.scale(t)).unwrap();
                assert!((scaled - t.abs() * na).abs() <= 1e-10 * (1.0 + scaled));
            }
        }
    }
}
