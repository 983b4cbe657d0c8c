//! Problem files: `{"lambda": [...], "a": [...]}` or `{"S": [[...]], "a": [...]}`.
//! Matrix entries are `[re, im]` pairs or bare reals.

use gfod::linalg::herm_eigenvalues;
use gfod::solver::SortedInstance;
use gfod::{GfodInstance, HermitianMatrix, C64};
use serde::Deserialize;
use serde_json::Value;

/// Tolerance on `S - S*` and on negative eigenvalues of `S`, relative to `1 + ‖S‖_F`.
pub const MATRIX_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    lambda: Option<Vec<f64>>,
    #[serde(rename = "S")]
    s: Option<Vec<Vec<Value>>>,
    a: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Target {
    Spectrum(Vec<f64>),
    Matrix(HermitianMatrix),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub target: Target,
    pub a: Vec<f64>,
}

/// A validated instance plus the permutations that sorted it. `lambda_perm`
/// is absent when the spectrum came from a matrix.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: GfodInstance,
    pub lambda_perm: Option<Vec<usize>>,
    pub a_perm: Vec<usize>,
}

fn entry(value: &Value, row: usize, col: usize) -> Result<C64, String> {
    let bad = || format!("S[{row}][{col}] must be a number or an [re, im] pair");
    match value {
        Value::Number(n) => n.as_f64().map(|re| C64::new(re, 0.0)).ok_or_else(bad),
        Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

impl Problem {
    pub fn parse(text: &str) -> Result<Problem, String> {
        let raw: RawProblem = serde_json::from_str(text).map_err(|e| format!("malformed problem file: {e}"))?;
        let target = match (raw.lambda, raw.s) {
            (Some(lambda), None) => Target::Spectrum(lambda),
            (None, Some(rows)) => {
                let rows = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| row.iter().enumerate().map(|(j, v)| entry(v, i, j)).collect())
                    .collect::<Result<Vec<Vec<C64>>, String>>()?;
                let scale = 1.0
                    + rows
                        .iter()
                        .flatten()
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                let s = HermitianMatrix::from_rows_with_tol(rows, MATRIX_TOL * scale).map_err(|e| format!("S: {e}"))?;
                if !s.is_finite() {
                    return Err("S has non-finite entries".into());
                }
                Target::Matrix(s)
            }
            (Some(_), Some(_)) => return Err("give exactly one of \"lambda\" and \"S\", not both".into()),
            (None, None) => return Err("missing \"lambda\" or \"S\"".into()),
        };
        Ok(Problem { target, a: raw.a })
    }

    /// `S` itself, or `diag(λ)` in the order given.
    pub fn matrix(&self) -> HermitianMatrix {
        match &self.target {
            Target::Spectrum(lambda) => HermitianMatrix::from_diagonal(lambda),
            Target::Matrix(s) => s.clone(),
        }
    }

    pub fn prepare(&self) -> Result<Prepared, String> {
        let (lambda, from_matrix) = match &self.target {
            Target::Spectrum(lambda) => (lambda.clone(), false),
            Target::Matrix(s) => {
                let floor = -MATRIX_TOL * (1.0 + s.frobenius_norm());
                let eig = herm_eigenvalues(s).map_err(|e| format!("S: {e}"))?;
                if let Some(&low) = eig.last().filter(|&&low| low < floor) {
                    return Err(format!("S must be positive semidefinite, smallest eigenvalue {low:e}"));
                }
                (eig.into_iter().map(|x| x.max(0.0)).collect(), true)
            }
        };
        let SortedInstance {
            instance,
            lambda_perm,
            a_perm,
        } = GfodInstance::from_unsorted(&lambda, &self.a).map_err(|e| e.to_string())?;
        Ok(Prepared {
            instance,
            lambda_perm: (!from_matrix).then_some(lambda_perm),
            a_perm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spectrum_and_sorts() {
        let p = Problem::parse(r#"{"lambda":[1,3],"a":[1,2]}"#).unwrap();
        let prep = p.prepare().unwrap();
        assert_eq!(prep.instance.lambda(), &[3.0, 1.0]);
        assert_eq!(prep.instance.a(), &[2.0, 1.0]);
        assert_eq!(prep.lambda_perm, Some(vec![1, 0]));
        assert_eq!(prep.a_perm, vec![1, 0]);
    }

    #[test]
    fn parses_matrix_with_mixed_entries() {
        let p = Problem::parse(r#"{"S":[[2,[0,1]],[[0,-1],2]],"a":[1]}"#).unwrap();
        let prep = p.prepare().unwrap();
        assert!((prep.instance.lambda()[0] - 3.0).abs() < 1e-12);
        assert!((prep.instance.lambda()[1] - 1.0).abs() < 1e-12);
        assert_eq!(prep.lambda_perm, None);
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            r#"{"a":[1]}"#,
            r#"{"lambda":[1],"S":[[1]],"a":[1]}"#,
            r#"{"lambda":[1],"a":[1],"extra":0}"#,
            r#"{"S":[[1,2],[0,1]],"a":[1]}"#,
            r#"{"S":[[1,"x"],[0,1]],"a":[1]}"#,
            r#"{"lambda":[1"#,
        ] {
            assert!(Problem::parse(text).is_err(), "{text}");
        }
        for text in [r#"{"lambda":[-1],"a":[1]}"#, r#"{"lambda":[1],"a":[0]}"#, r#"{"S":[[-1]],"a":[1]}"#] {
            assert!(Problem::parse(text).unwrap().prepare().is_err(), "{text}");
        }
    }
}
