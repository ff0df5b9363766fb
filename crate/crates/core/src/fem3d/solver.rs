//! Preconditioned conjugate gradients with kernel projection.

use nalgebra::DMatrix;

use super::dofmap::Kernel;
use super::sparse::{dot, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    #[default]
    Jacobi,
    /// Inverse of the small diagonal block of each node.
    BlockJacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `|b - A x| / |b|`.
    pub tol: f64,
    /// Defaults to `50 sqrt(n)`.
    pub max_iter: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, preconditioner: PreconditionerKind::Jacobi }
    }
}

impl SolverOptions {
    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(1))
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True residual at exit, relative to the projected right-hand side.
    pub rel_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    /// Turns an exhausted iteration budget into [`Error::NotConverged`].
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { residual: self.rel_residual, iterations: self.iterations })
        }
    }
}

#[derive(Debug, Clone)]
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    Block { dofs: Vec<Vec<usize>>, inverses: Vec<DMatrix<f64>> },
}

impl Preconditioner {
    pub fn jacobi(a: &CsrMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some(&bad) = d.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::Indefinite(bad));
        }
        Ok(Self::Jacobi(d.into_iter().map(|x| 1.0 / x).collect()))
    }

    pub fn block_jacobi(a: &CsrMatrix, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut inverses = Vec::with_capacity(blocks.len());
        for b in &blocks {
            let m = DMatrix::from_fn(b.len(), b.len(), |i, j| a.get(b[i], b[j]));
            let chol = m.clone().cholesky().ok_or_else(|| Error::Indefinite(m.diagonal().min()))?;
            inverses.push(chol.inverse());
        }
        Ok(Self::Block { dofs: blocks, inverses })
    }

    pub fn build(a: &CsrMatrix, kind: PreconditionerKind, blocks: impl FnOnce() -> Vec<Vec<usize>>) -> Result<Self> {
        match kind {
            PreconditionerKind::Jacobi => Self::jacobi(a),
            PreconditionerKind::BlockJacobi => Self::block_jacobi(a, blocks()),
        }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Jacobi(inv) => z.iter_mut().zip(r).zip(inv).for_each(|((z, r), d)| *z = r * d),
            Self::Block { dofs, inverses } => {
                for (b, inv) in dofs.iter().zip(inverses) {
                    for (i, &di) in b.iter().enumerate() {
                        z[di] = b.iter().enumerate().map(|(j, &dj)| inv[(i, j)] * r[dj]).sum();
                    }
                }
            }
        }
    }
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` whose null
/// space is `kernel`. The right-hand side and every preconditioned residual
/// are projected orthogonally to the kernel, so the iterate stays in its
/// complement.
pub fn cg(a: &CsrMatrix, b: &[f64], kernel: Kernel, pre: &Preconditioner, opts: &SolverOptions) -> Result<SolveReport> {
    let n = a.dim();
    let mut r = b.to_vec();
    kernel.project(&mut r);
    let b_norm = dot(&r, &r).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(SolveReport { x, iterations: 0, rel_residual: 0.0, converged: true });
    }
    let cap = opts.iteration_cap(n);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    kernel.project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Indefinite(pq));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        if dot(&r, &r).sqrt() <= opts.tol * b_norm {
            converged = true;
            break;
        }
        pre.apply(&r, &mut z);
        kernel.project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    kernel.project(&mut x);
    let mut res = b.to_vec();
    kernel.project(&mut res);
    let ax = a.mul(&x);
    res.iter_mut().zip(&ax).for_each(|(r, y)| *r -= y);
    let rel_residual = dot(&res, &res).sqrt() / b_norm;
    Ok(SolveReport { x, iterations, rel_residual, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_1d(10);
        let pre = Preconditioner::jacobi(&a).unwrap();
        let r = cg(&a, &[0.0; 10], Kernel::Trivial, &pre, &SolverOptions::default()).unwrap();
        assert!(r.x.iter().all(|&v| v == 0.0));
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn recovers_manufactured_solution() {
        let a = laplacian_1d(60);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.mul(&u);
        for kind in [PreconditionerKind::Jacobi, PreconditionerKind::BlockJacobi] {
            let pre = Preconditioner::build(&a, kind, || (0..20).map(|k| vec![3 * k, 3 * k + 1, 3 * k + 2]).collect())
                .unwrap();
            let opts = SolverOptions { tol: 1e-12, preconditioner: kind, ..Default::default() };
            let r = cg(&a, &b, Kernel::Trivial, &pre, &opts).unwrap().into_result().unwrap();
            assert!(r.rel_residual <= 1e-11);
            let err = u.iter().zip(&r.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{err}");
        }
    }

    #[test]
    fn indefinite_operator_is_reported() {
        let a = CsrMatrix::from_triplets(3, (0..3).map(|i| (i, i, -1.0)).collect());
        assert!(matches!(Preconditioner::jacobi(&a), Err(Error::Indefinite(_))));
        let pre = Preconditioner::Jacobi(vec![1.0; 3]);
        let r = cg(&a, &[1.0, 2.0, 3.0], Kernel::Trivial, &pre, &SolverOptions::default());
        assert!(matches!(r, Err(Error::Indefinite(_))));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = laplacian_1d(200);
        let pre = Preconditioner::jacobi(&a).unwrap();
        let opts = SolverOptions { max_iter: Some(3), ..Default::default() };
        let r = cg(&a, &vec![1.0; 200], Kernel::Trivial, &pre, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(matches!(r.into_result(), Err(Error::NotConverged { iterations: 3, .. })));
    }
}
