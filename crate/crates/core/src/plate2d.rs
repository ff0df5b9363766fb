//! The limit plate functional
//!
//! ```text
//! E0(w, v) = int_omega Q0(x', sym grad w, -grad^2 v) - int (f1 w1 + f2 w2 + f3 v)
//! ```
//!
//! on a rectangle with clamped edges, discretized on the node lattice of an
//! `mx x my` cell grid. `w` is bilinear; both strains are sampled at the 2x2
//! Gauss points of every cell. The Hessian of `v` is formed at nodes by
//! centered differences (9-point stencil for the mixed derivative) and
//! interpolated bilinearly to the Gauss points. Points outside the rectangle
//! are ghosts: a clamped edge reflects (`v_-1 = v_1`, with `v_0 = 0`), a free
//! edge extrapolates quadratically (`v_-1 = 3 v_0 - 3 v_1 + v_2`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::{PlateForm, BASIS_TAG, SQRT_2};
use crate::edges::{Edge, EdgeSet};
use crate::error::{Error, Result};
use crate::fem3d::sparse::{dot, CsrMatrix};
use crate::fem3d::{cg, Kernel, Preconditioner, SolveReport, SolverOptions, CONSTRAINED};

const GAUSS: f64 = 0.577_350_269_189_625_8;

/// Force densities on the nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Forces {
    Constant([f64; 3]),
    /// One `(f1, f2, f3)` per node, x fastest.
    Nodal(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateProblem {
    pub mx: usize,
    pub my: usize,
    pub lx: f64,
    pub ly: f64,
    /// One form for the whole plate or one per cell (x fastest).
    pub forms: Vec<Matrix6<f64>>,
    pub forces: Forces,
    pub clamped: EdgeSet,
}

impl PlateProblem {
    pub fn uniform(mx: usize, my: usize, form: &PlateForm, forces: [f64; 3], clamped: EdgeSet) -> Self {
        Self { mx, my, lx: 1.0, ly: 1.0, forms: vec![form.matrix], forces: Forces::Constant(forces), clamped }
    }

    pub fn node_count(&self) -> usize {
        (self.mx + 1) * (self.my + 1)
    }

    fn force(&self, node: usize) -> [f64; 3] {
        match &self.forces {
            Forces::Constant(f) => *f,
            Forces::Nodal(v) => v[node],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mx < 2 || self.my < 2 {
            return Err(Error::InvalidParameter(format!(
                "plate grid needs at least 2x2 cells, got {}x{}",
                self.mx, self.my
            )));
        }
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(Error::InvalidParameter("plate side lengths must be positive".into()));
        }
        if self.clamped.is_empty() {
            return Err(Error::InvalidParameter("the clamped boundary portion must be nonempty".into()));
        }
        if self.forms.len() != 1 && self.forms.len() != self.mx * self.my {
            return Err(Error::GridMismatch(format!(
                "{} forms for {} cells (expected 1 or one per cell)",
                self.forms.len(),
                self.mx * self.my
            )));
        }
        for (k, a) in self.forms.iter().enumerate() {
            let s = 0.5 * (a + a.transpose());
            let min = SymmetricEigen::new(s).eigenvalues.min();
            if !(min > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "plate form {k} is not positive definite (min eigenvalue {min:e})"
                )));
            }
        }
        if let Forces::Nodal(v) = &self.forces {
            if v.len() != self.node_count() {
                return Err(Error::GridMismatch(format!("{} nodal forces for {} nodes", v.len(), self.node_count())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlateSolution {
    pub mx: usize,
    pub my: usize,
    pub lx: f64,
    pub ly: f64,
    /// Per node, x fastest.
    pub w: Vec<[f64; 2]>,
    pub v: Vec<f64>,
    /// Minimum of the discrete functional `E0(w, v) - load`.
    pub energy: f64,
    /// `int (f1 w1 + f2 w2 + f3 v)`
    pub load: f64,
    pub report: SolveReport,
}

impl PlateSolution {
    pub fn node_position(&self, node: usize) -> (f64, f64) {
        let (i, j) = (node % (self.mx + 1), node / (self.mx + 1));
        (i as f64 * self.lx / self.mx as f64, j as f64 * self.ly / self.my as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# basis: {BASIS_TAG}\nx,y,w1,w2,v\n");
        for n in 0..self.v.len() {
            let (x, y) = self.node_position(n);
            let _ = writeln!(out, "{x},{y},{:.15e},{:.15e},{:.15e}", self.w[n][0], self.w[n][1], self.v[n]);
        }
        out
    }
}

/// Sparse linear functional on the free unknowns.
type Row = Vec<(usize, f64)>;

fn add_into(acc: &mut BTreeMap<usize, f64>, row: &[(usize, f64)], t: f64) {
    for &(d, c) in row {
        *acc.entry(d).or_insert(0.0) += t * c;
    }
}

/// The discrete functional: strain rows at Gauss points plus the load vector.
#[derive(Debug, Clone)]
pub struct PlateDiscretization {
    pub n_free: usize,
    /// Free index of `(node, slot)`; slots are `w1, w2, v`.
    pub dof_of: Vec<usize>,
    /// `(cell, weight, six strain rows)` per Gauss point.
    points: Vec<(usize, f64, [Row; 6])>,
    pub load: Vec<f64>,
}

impl PlateDiscretization {
    pub fn new(p: &PlateProblem) -> Result<Self> {
        p.validate()?;
        let (mx, my) = (p.mx, p.my);
        let nodes = p.node_count();
        let mut dof_of = vec![CONSTRAINED; 3 * nodes];
        let mut n_free = 0;
        for j in 0..=my {
            for i in 0..=mx {
                if !p.clamped.holds(i, j, mx, my) {
                    for s in 0..3 {
                        dof_of[3 * (i + (mx + 1) * j) + s] = n_free;
                        n_free += 1;
                    }
                }
            }
        }
        let (dx, dy) = (p.lx / mx as f64, p.ly / my as f64);
        let lattice = Lattice { mx, my, clamped: &p.clamped, dof_of: &dof_of };
        let hessian: Vec<[Row; 3]> = (0..nodes)
            .map(|n| {
                let (i, j) = ((n % (mx + 1)) as isize, (n / (mx + 1)) as isize);
                lattice.nodal_hessian(i, j, dx, dy)
            })
            .collect();

        let mut points = Vec::with_capacity(4 * mx * my);
        let weight = dx * dy / 4.0;
        for cy in 0..my {
            for cx in 0..mx {
                let corners = [(cx, cy), (cx + 1, cy), (cx, cy + 1), (cx + 1, cy + 1)];
                let node = |c: usize| corners[c].0 + (mx + 1) * corners[c].1;
                for q in 0..4 {
                    let (xi, eta) = (if q & 1 == 0 { -GAUSS } else { GAUSS }, if q & 2 == 0 { -GAUSS } else { GAUSS });
                    let sx = [-1.0, 1.0, -1.0, 1.0];
                    let sy = [-1.0, -1.0, 1.0, 1.0];
                    let shape: [f64; 4] = std::array::from_fn(|c| 0.25 * (1.0 + sx[c] * xi) * (1.0 + sy[c] * eta));
                    let gx: [f64; 4] = std::array::from_fn(|c| 0.25 * sx[c] * (1.0 + sy[c] * eta) * 2.0 / dx);
                    let gy: [f64; 4] = std::array::from_fn(|c| 0.25 * sy[c] * (1.0 + sx[c] * xi) * 2.0 / dy);

                    let mut rows: [BTreeMap<usize, f64>; 6] = Default::default();
                    for c in 0..4 {
                        let n = node(c);
                        let (d1, d2) = (dof_of[3 * n], dof_of[3 * n + 1]);
                        if d1 != CONSTRAINED {
                            *rows[0].entry(d1).or_insert(0.0) += gx[c];
                            *rows[2].entry(d1).or_insert(0.0) += SQRT_2 * 0.5 * gy[c];
                        }
                        if d2 != CONSTRAINED {
                            *rows[1].entry(d2).or_insert(0.0) += gy[c];
                            *rows[2].entry(d2).or_insert(0.0) += SQRT_2 * 0.5 * gx[c];
                        }
                        // M2 = -Hessian, Mandel (h11, h22, sqrt2 h12).
                        let h = &hessian[n];
                        add_into(&mut rows[3], &h[0], -shape[c]);
                        add_into(&mut rows[4], &h[1], -shape[c]);
                        add_into(&mut rows[5], &h[2], -SQRT_2 * shape[c]);
                    }
                    let rows: [Row; 6] = std::array::from_fn(|r| {
                        rows[r].iter().filter(|(_, c)| **c != 0.0).map(|(&d, &c)| (d, c)).collect()
                    });
                    points.push((cx + mx * cy, weight, rows));
                }
            }
        }
        let load = consistent_load(p, &dof_of, n_free);
        Ok(Self { n_free, dof_of, points, load })
    }

    /// `K = 2 sum_q w_q G_q^T A G_q`, so that `E(u) = 1/2 u^T K u`.
    pub fn stiffness(&self, p: &PlateProblem) -> CsrMatrix {
        let mut triplets = Vec::new();
        for (cell, w, rows) in &self.points {
            let a = p.forms.get(*cell).unwrap_or(&p.forms[0]);
            let mut local: Vec<usize> = rows.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
            local.sort_unstable();
            local.dedup();
            let mut g = DMatrix::zeros(6, local.len());
            for (r, row) in rows.iter().enumerate() {
                for &(d, c) in row {
                    g[(r, local.binary_search(&d).unwrap())] += c;
                }
            }
            let sym = 0.5 * (a + a.transpose());
            let k = g.transpose() * (DMatrix::from_iterator(6, 6, sym.iter().copied()) * &g) * (2.0 * w);
            for (x, &dx) in local.iter().enumerate() {
                for (y, &dy) in local.iter().enumerate() {
                    triplets.push((dx, dy, k[(x, y)]));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_free, triplets)
    }

    /// Mandel-pair strain `z_q` at every Gauss point.
    pub fn strains(&self, u: &[f64]) -> Vec<[f64; 6]> {
        self.points
            .iter()
            .map(|(_, _, rows)| std::array::from_fn(|r| rows[r].iter().map(|&(d, c)| c * u[d]).sum()))
            .collect()
    }

    /// `sum_q w_q z_q^T A z_q`
    pub fn energy(&self, p: &PlateProblem, u: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(self.strains(u))
            .map(|((cell, w, _), z)| {
                let a = p.forms.get(*cell).unwrap_or(&p.forms[0]);
                let z = nalgebra::Vector6::from(z);
                w * z.dot(&(a * z))
            })
            .sum()
    }

    /// `(sum_q w_q |z_q|^2)^(1/2)`
    pub fn strain_norm(&self, u: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(self.strains(u))
            .map(|((_, w, _), z)| w * z.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// `int f . N` with `f` interpolated bilinearly between nodes, by 2x2 Gauss
/// quadrature (exact for bilinear data).
fn consistent_load(p: &PlateProblem, dof_of: &[usize], n_free: usize) -> Vec<f64> {
    let (mx, my) = (p.mx, p.my);
    let weight = p.lx / mx as f64 * p.ly / my as f64 / 4.0;
    let mut load = vec![0.0; n_free];
    for cy in 0..my {
        for cx in 0..mx {
            let nodes =
                [cx + (mx + 1) * cy, cx + 1 + (mx + 1) * cy, cx + (mx + 1) * (cy + 1), cx + 1 + (mx + 1) * (cy + 1)];
            for q in 0..4 {
                let (xi, eta) = (if q & 1 == 0 { -GAUSS } else { GAUSS }, if q & 2 == 0 { -GAUSS } else { GAUSS });
                let shape = [
                    0.25 * (1.0 - xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 - eta),
                    0.25 * (1.0 - xi) * (1.0 + eta),
                    0.25 * (1.0 + xi) * (1.0 + eta),
                ];
                let mut f = [0.0; 3];
                for (c, &n) in nodes.iter().enumerate() {
                    let fc = p.force(n);
                    for s in 0..3 {
                        f[s] += shape[c] * fc[s];
                    }
                }
                for (c, &n) in nodes.iter().enumerate() {
                    for s in 0..3 {
                        let d = dof_of[3 * n + s];
                        if d != CONSTRAINED {
                            load[d] += weight * shape[c] * f[s];
                        }
                    }
                }
            }
        }
    }
    load
}

struct Lattice<'a> {
    mx: usize,
    my: usize,
    clamped: &'a EdgeSet,
    dof_of: &'a [usize],
}

impl Lattice<'_> {
    /// `v` at lattice point `(i, j)`, possibly a ghost, as a combination of
    /// free unknowns.
    fn v(&self, i: isize, j: isize) -> Row {
        let (mx, my) = (self.mx as isize, self.my as isize);
        let side = |e: Edge| self.clamped.contains(e);
        let combo = |pts: [(isize, isize, f64); 3]| {
            let mut acc = BTreeMap::new();
            for (a, b, t) in pts {
                add_into(&mut acc, &self.v(a, b), t);
            }
            acc.into_iter().collect::<Row>()
        };
        if i < 0 {
            return if side(Edge::Left) { self.v(-i, j) } else { combo([(0, j, 3.0), (1, j, -3.0), (2, j, 1.0)]) };
        }
        if i > mx {
            return if side(Edge::Right) {
                self.v(2 * mx - i, j)
            } else {
                combo([(mx, j, 3.0), (mx - 1, j, -3.0), (mx - 2, j, 1.0)])
            };
        }
        if j < 0 {
            return if side(Edge::Bottom) { self.v(i, -j) } else { combo([(i, 0, 3.0), (i, 1, -3.0), (i, 2, 1.0)]) };
        }
        if j > my {
            return if side(Edge::Top) {
                self.v(i, 2 * my - j)
            } else {
                combo([(i, my, 3.0), (i, my - 1, -3.0), (i, my - 2, 1.0)])
            };
        }
        let d = self.dof_of[3 * (i as usize + (self.mx + 1) * j as usize) + 2];
        if d == CONSTRAINED {
            Vec::new()
        } else {
            vec![(d, 1.0)]
        }
    }

    /// `(v_11, v_22, v_12)` at node `(i, j)` by centered differences.
    fn nodal_hessian(&self, i: isize, j: isize, dx: f64, dy: f64) -> [Row; 3] {
        let stencil = |pts: &[(isize, isize, f64)]| {
            let mut acc = BTreeMap::new();
            for &(a, b, t) in pts {
                add_into(&mut acc, &self.v(i + a, j + b), t);
            }
            acc.into_iter().filter(|(_, c)| *c != 0.0).collect::<Row>()
        };
        let (ix, iy, ixy) = (1.0 / (dx * dx), 1.0 / (dy * dy), 1.0 / (4.0 * dx * dy));
        [
            stencil(&[(-1, 0, ix), (0, 0, -2.0 * ix), (1, 0, ix)]),
            stencil(&[(0, -1, iy), (0, 0, -2.0 * iy), (0, 1, iy)]),
            stencil(&[(1, 1, ixy), (-1, -1, ixy), (1, -1, -ixy), (-1, 1, -ixy)]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateOptions {
    pub solver: SolverOptions,
}

impl Default for PlateOptions {
    fn default() -> Self {
        Self { solver: SolverOptions { tol: 1e-12, max_iter: None, ..Default::default() } }
    }
}

/// Iteration budget for the fourth-order system when none is given.
fn plate_cap(opts: &SolverOptions, n: usize) -> SolverOptions {
    SolverOptions { max_iter: Some(opts.max_iter.unwrap_or(20 * n + 100)), ..*opts }
}

fn solve_discrete(
    p: &PlateProblem,
    disc: &PlateDiscretization,
    opts: &PlateOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let k = disc.stiffness(p);
    let pre = Preconditioner::jacobi(&k)?;
    let report = cg(&k, &disc.load, Kernel::Trivial, &pre, &plate_cap(&opts.solver, disc.n_free))?.into_result()?;
    Ok((report.x.clone(), report))
}

/// Discrete minimizer of the limit functional.
pub fn minimize_plate(p: &PlateProblem, opts: &PlateOptions) -> Result<PlateSolution> {
    let disc = PlateDiscretization::new(p)?;
    let (u, report) = solve_discrete(p, &disc, opts)?;
    Ok(assemble_solution(p, &disc, &u, report))
}

fn assemble_solution(p: &PlateProblem, disc: &PlateDiscretization, u: &[f64], report: SolveReport) -> PlateSolution {
    let nodes = p.node_count();
    let get = |n: usize, s: usize| match disc.dof_of[3 * n + s] {
        CONSTRAINED => 0.0,
        d => u[d],
    };
    let load = dot(&disc.load, u);
    PlateSolution {
        mx: p.mx,
        my: p.my,
        lx: p.lx,
        ly: p.ly,
        w: (0..nodes).map(|n| [get(n, 0), get(n, 1)]).collect(),
        v: (0..nodes).map(|n| get(n, 2)).collect(),
        energy: disc.energy(p, u) - load,
        load,
        report,
    }
}

/// Minimizers of the original and of the perturbed problem with every form
/// replaced by `A - eta |A|_2 I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub eta: f64,
    pub min_0: f64,
    pub min_eta: f64,
    /// `|min_eta - min_0|`
    pub gap: f64,
    /// `(sum_q w_q |z_eta - z_0|^2)^(1/2)` over Gauss-point strains.
    pub strain_gap: f64,
}

/// Largest admissible `eta`: half the smallest ratio `lambda_min / |A|_2`.
pub fn max_perturbation(p: &PlateProblem) -> f64 {
    p.forms
        .iter()
        .map(|a| {
            let e = SymmetricEigen::new(0.5 * (a + a.transpose())).eigenvalues;
            0.5 * e.min() / e.amax()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn perturbed(p: &PlateProblem, eta: f64) -> PlateProblem {
    let mut q = p.clone();
    for a in q.forms.iter_mut() {
        let norm = SymmetricEigen::new(0.5 * (*a + a.transpose())).eigenvalues.amax();
        *a -= Matrix6::identity() * (eta * norm);
    }
    q
}

pub fn perturbation_stability(p: &PlateProblem, eta: f64, opts: &PlateOptions) -> Result<StabilityReport> {
    let limit = max_perturbation(p);
    if !(eta >= 0.0 && eta <= limit) {
        return Err(Error::InvalidParameter(format!(
            "perturbation eta = {eta} outside [0, {limit:e}] (half the relative coercivity of the forms)"
        )));
    }
    let disc = PlateDiscretization::new(p)?;
    let (u0, _) = solve_discrete(p, &disc, opts)?;
    let min_0 = disc.energy(p, &u0) - dot(&disc.load, &u0);
    if eta == 0.0 {
        return Ok(StabilityReport { eta, min_0, min_eta: min_0, gap: 0.0, strain_gap: 0.0 });
    }
    let q = perturbed(p, eta);
    let (ue, _) = solve_discrete(&q, &disc, opts)?;
    let min_eta = disc.energy(&q, &ue) - dot(&disc.load, &ue);
    let diff: Vec<f64> = ue.iter().zip(&u0).map(|(a, b)| a - b).collect();
    Ok(StabilityReport { eta, min_0, min_eta, gap: (min_eta - min_0).abs(), strain_gap: disc.strain_norm(&diff) })
}

/// Ratio of the gaps of two reports and the constant `max gap / eta`.
pub fn linearity(a: &StabilityReport, b: &StabilityReport) -> (f64, f64) {
    (a.gap / b.gap, (a.gap / a.eta).max(b.gap / b.eta))
}

/// Plate problem file. `form` is an inline 36-entry matrix, a list of them
/// (one per cell), or `{"file": path}` naming a form JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateProblemFile {
    pub mx: usize,
    pub my: usize,
    #[serde(default = "unit")]
    pub lx: f64,
    #[serde(default = "unit")]
    pub ly: f64,
    pub form: FormSpec,
    pub force: ForceSpec,
    pub clamped: Vec<Edge>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormSpec {
    Inline(Vec<f64>),
    PerCell(Vec<Vec<f64>>),
    File { file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForceSpec {
    Constant([f64; 3]),
    Nodal(Vec<[f64; 3]>),
}

impl PlateProblemFile {
    /// `resolve` loads the form named by a `{"file": ..}` reference.
    pub fn into_problem(self, resolve: impl Fn(&str) -> Result<PlateForm>) -> Result<PlateProblem> {
        let matrix = |v: &[f64]| PlateForm::from_row_major(v, crate::algebra::GammaTag::Limit).map(|f| f.matrix);
        let forms = match &self.form {
            FormSpec::Inline(v) => vec![matrix(v)?],
            FormSpec::PerCell(vs) => vs.iter().map(|v| matrix(v)).collect::<Result<_>>()?,
            FormSpec::File { file } => vec![resolve(file)?.matrix],
        };
        let forces = match self.force {
            ForceSpec::Constant(f) => Forces::Constant(f),
            ForceSpec::Nodal(v) => Forces::Nodal(v),
        };
        let p = PlateProblem {
            mx: self.mx,
            my: self.my,
            lx: self.lx,
            ly: self.ly,
            forms,
            forces,
            clamped: EdgeSet::new(self.clamped),
        };
        p.validate()?;
        Ok(p)
    }
}
