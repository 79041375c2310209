//! Solves `(I − P) x = b` for the substochastic kernel `P` restricted to the
//! interior states of a truncated domain.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::exec::Execution;

use super::domain::{Successor, TruncatedDomain};

/// State count above which [`LinearMethod::Auto`] switches to Gauss–Seidel.
pub const DIRECT_STATE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearMethod {
    /// Sparse LU up to [`DIRECT_STATE_LIMIT`] states, Gauss–Seidel above.
    #[default]
    Auto,
    Direct,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: LinearMethod,
    /// Target for `‖b − (I − P)x‖∞ / max(1, ‖x‖∞)`.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub execution: Execution,
    /// When set, a scaled bracket wider than this is an error rather than a warning.
    pub max_gap: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: LinearMethod::Auto,
            tolerance: 1e-13,
            max_sweeps: 1_000_000,
            execution: Execution::default(),
            max_gap: None,
        }
    }
}

/// `I − P` in compressed rows, with `P` split into its diagonal and the rest.
#[derive(Debug, Clone)]
struct KernelMatrix {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    /// Off-diagonal entries of `P` (positive).
    vals: Vec<f64>,
}

impl KernelMatrix {
    fn new(domain: &TruncatedDomain, weights: &[f64]) -> Self {
        let n = domain.len();
        let mut diag = vec![1.0; n];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, d) in diag.iter_mut().enumerate() {
            for (s, &w) in domain.successors(i).iter().zip(weights) {
                if let Successor::Interior(j) = *s {
                    if j as usize == i {
                        *d -= w;
                    } else {
                        cols.push(j);
                        vals.push(w);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        KernelMatrix { diag, row_ptr, cols, vals }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&j| j as usize).zip(self.vals[r].iter().copied())
    }

    /// `b − (I − P)x`.
    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| b[i] - self.diag[i] * x[i] + self.row(i).map(|(j, w)| w * x[j]).sum::<f64>())
            .collect()
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let r = self.residual(x, b).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        r / x.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let n = self.len();
        let mut triplets = Vec::with_capacity(n + self.vals.len());
        for i in 0..n {
            triplets.push(Triplet::new(i, i, self.diag[i]));
            for (j, w) in self.row(i) {
                triplets.push(Triplet::new(i, j, -w));
            }
        }
        SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Domain(format!("sparse assembly failed: {e:?}")))
    }
}

/// A factored (or iteration-ready) kernel system, reusable across right-hand sides.
pub(crate) struct KernelSystem {
    matrix: KernelMatrix,
    lu: Option<Lu<usize, f64>>,
    options: SolveOptions,
}

impl KernelSystem {
    pub(crate) fn new(domain: &TruncatedDomain, weights: &[f64], options: &SolveOptions) -> Result<Self> {
        let matrix = KernelMatrix::new(domain, weights);
        let direct = match options.method {
            LinearMethod::Auto => matrix.len() <= DIRECT_STATE_LIMIT,
            LinearMethod::Direct => true,
            LinearMethod::GaussSeidel => false,
        };
        let lu = if direct {
            let a = matrix.to_faer()?;
            let lu = a.sp_lu().map_err(|e| Error::Domain(format!("sparse LU factorization failed: {e:?}")))?;
            Some(lu)
        } else {
            None
        };
        Ok(KernelSystem { matrix, lu, options: *options })
    }

    /// Solves one system per right-hand side, returning solutions and the worst
    /// relative residual.
    pub(crate) fn solve(&self, rhs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let n = self.matrix.len();
        let solutions = match &self.lu {
            Some(lu) => {
                let b = Mat::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
                let x = lu.solve(&b);
                let mut cols: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
                // One step of iterative refinement.
                let res: Vec<Vec<f64>> = cols.iter().zip(rhs).map(|(x, b)| self.matrix.residual(x, b)).collect();
                let d = lu.solve(&Mat::from_fn(n, rhs.len(), |i, j| res[j][i]));
                for (j, col) in cols.iter_mut().enumerate() {
                    for (i, v) in col.iter_mut().enumerate() {
                        *v += d[(i, j)];
                    }
                }
                cols
            }
            None => {
                let results = self
                    .options
                    .execution
                    .map_indexed(rhs.len(), |j| self.gauss_seidel(&rhs[j]));
                results.into_iter().collect::<Result<Vec<_>>>()?
            }
        };
        let residual = solutions
            .iter()
            .zip(rhs)
            .map(|(x, b)| self.matrix.relative_residual(x, b))
            .fold(0.0, f64::max);
        if !(residual <= self.options.tolerance) {
            return Err(Error::NonConvergence { what: "linear solve", iterations: 1, residual });
        }
        Ok((solutions, residual))
    }

    /// Symmetric Gauss–Seidel sweeps from a zero start.
    fn gauss_seidel(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = &self.matrix;
        let n = m.len();
        let mut x = vec![0.0; n];
        let update = |x: &mut Vec<f64>, i: usize| {
            let s: f64 = m.row(i).map(|(j, w)| w * x[j]).sum();
            x[i] = (b[i] + s) / m.diag[i];
        };
        let mut initial = None;
        for sweep in 0..self.options.max_sweeps {
            for i in 0..n {
                update(&mut x, i);
            }
            for i in (0..n).rev() {
                update(&mut x, i);
            }
            if sweep % 8 == 7 || sweep + 1 == self.options.max_sweeps {
                let res = m.relative_residual(&x, b);
                if res <= self.options.tolerance {
                    return Ok(x);
                }
                let first = *initial.get_or_insert(res);
                if !res.is_finite() || res > 1e6 * first.max(1e-300) {
                    return Err(Error::NonConvergence { what: "Gauss-Seidel (diverging)", iterations: sweep + 1, residual: res });
                }
            }
        }
        Err(Error::NonConvergence {
            what: "Gauss-Seidel",
            iterations: self.options.max_sweeps,
            residual: m.relative_residual(&x, b),
        })
    }
}
