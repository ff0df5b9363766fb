//! Thin-domain diagnostics and the h-sweep against the limit plate.
//!
//! Fields live on the node lattice of `omega x I` ([`NodalField`]) and are
//! treated as their trilinear interpolants: x3 integrals are exact for
//! piecewise-linear columns, volume integrals use 2x2x2 Gauss points.

use std::fmt::Write as _;

use serde::Serialize;

use crate::algebra::{PhaseLibrary, PlateForm, BASIS_TAG};
use crate::cell::{homogenize, HomogenizeOptions};
use crate::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::fem3d::element::{gauss_points, shape_gradients, shape_values, HexGeometry};
use crate::fem3d::{
    solve_clamped, BodyForce, ClampedOptions, ElementKind, NodalField, PreconditionerKind, SolverOptions,
};
use crate::microstructure::{Domain, VoxelGrid};
use crate::plate2d::{minimize_plate, PlateOptions, PlateProblem};

/// `1 / int_I x3^2 dx3` for `I = [-1/2, 1/2]`.
pub const MOMENT_COEFFICIENT: f64 = 12.0;

/// `psi = mean + r ^ x3 e3 + residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrisoParts {
    /// `int_I psi dx3` per column, x fastest.
    pub mean: Vec<[f64; 3]>,
    /// `(r1, r2)` per column.
    pub rotation: Vec<[f64; 2]>,
    pub residual: NodalField,
    pub c_i: f64,
}

/// `(int_I a, int_I x3 a)` of the piecewise-linear column `a_k` on `nz` layers.
fn column_moments(f: &NodalField, i: usize, j: usize, comp: usize) -> (f64, f64) {
    let dz = 1.0 / f.nz as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for k in 0..f.nz {
        let (a, b) = (f.at(i, j, k)[comp], f.at(i, j, k + 1)[comp]);
        let (z0, z1) = (-0.5 + k as f64 * dz, -0.5 + (k + 1) as f64 * dz);
        m0 += 0.5 * dz * (a + b);
        m1 += dz * (a * (2.0 * z0 + z1) + b * (z0 + 2.0 * z1)) / 6.0;
    }
    (m0, m1)
}

impl GrisoParts {
    /// `mean + r ^ x3 e3` on the lattice.
    pub fn rigid_part(&self) -> NodalField {
        let f = &self.residual;
        f.map_nodes(|i, j, _, x3| {
            let c = i + (f.nx + 1) * j;
            let (m, r) = (self.mean[c], self.rotation[c]);
            [m[0] + r[1] * x3, m[1] - r[0] * x3, m[2]]
        })
    }
}

pub fn griso_decompose(psi: &NodalField) -> Result<GrisoParts> {
    if psi.nz < 2 {
        return Err(Error::InvalidParameter(format!("decomposition needs nz >= 2, got {}", psi.nz)));
    }
    let columns = (psi.nx + 1) * (psi.ny + 1);
    let mut mean = vec![[0.0; 3]; columns];
    let mut rotation = vec![[0.0; 2]; columns];
    for j in 0..=psi.ny {
        for i in 0..=psi.nx {
            let c = i + (psi.nx + 1) * j;
            let m: [(f64, f64); 3] = std::array::from_fn(|comp| column_moments(psi, i, j, comp));
            mean[c] = [m[0].0, m[1].0, m[2].0];
            // r = c_I int x3 (e3 ^ psi), e3 ^ psi = (-psi2, psi1, 0).
            rotation[c] = [-MOMENT_COEFFICIENT * m[1].1, MOMENT_COEFFICIENT * m[0].1];
        }
    }
    let mut parts = GrisoParts { mean, rotation, residual: psi.clone(), c_i: MOMENT_COEFFICIENT };
    let rigid = parts.rigid_part();
    for (r, g) in parts.residual.values.iter_mut().zip(&rigid.values) {
        for c in 0..3 {
            r[c] -= g[c];
        }
    }
    Ok(parts)
}

/// Residual moments `max |int psi_bar|` and `max |int x3 (e3 ^ psi_bar)|`
/// over all columns.
pub fn residual_moments(parts: &GrisoParts) -> (f64, f64) {
    let f = &parts.residual;
    let (mut m0, mut m1) = (0.0f64, 0.0f64);
    for j in 0..=f.ny {
        for i in 0..=f.nx {
            for c in 0..3 {
                let (a, b) = column_moments(f, i, j, c);
                m0 = m0.max(a.abs());
                if c < 2 {
                    m1 = m1.max(b.abs());
                }
            }
        }
    }
    (m0, m1)
}

/// Gauss-point sums of `|sym grad_h u|^2`, `|grad_h u|^2` and `|u|^2`.
fn norms(u: &NodalField, h: f64) -> (f64, f64, f64) {
    let (dx, dy, dz) = u.spacing();
    let g = HexGeometry { dx, dy, dz, scale: h };
    let points = gauss_points(&g);
    let tables: Vec<_> = points.iter().map(|(xi, w)| (shape_values(*xi), shape_gradients(&g, *xi), *w)).collect();
    let (mut sym, mut full, mut mass) = (0.0, 0.0, 0.0);
    for k in 0..u.nz {
        for j in 0..u.ny {
            for i in 0..u.nx {
                let nodal: [[f64; 3]; 8] = std::array::from_fn(|a| u.at(i + (a & 1), j + ((a >> 1) & 1), k + (a >> 2)));
                for (n, grads, w) in &tables {
                    let mut grad = [[0.0; 3]; 3];
                    let mut val = [0.0; 3];
                    for a in 0..8 {
                        for c in 0..3 {
                            val[c] += n[a] * nodal[a][c];
                            for d in 0..3 {
                                grad[c][d] += nodal[a][c] * grads[a][d];
                            }
                        }
                    }
                    for c in 0..3 {
                        mass += w * val[c] * val[c];
                        for d in 0..3 {
                            let s = 0.5 * (grad[c][d] + grad[d][c]);
                            sym += w * s * s;
                            full += w * grad[c][d] * grad[c][d];
                        }
                    }
                }
            }
        }
    }
    (sym, full, mass)
}

/// Left side over right side of the thin-domain Korn inequality:
///
/// ```text
/// ( |sym grad_h (mean + r ^ x3 e3)|^2 + |grad_h psi_bar|^2 + h^-2 |psi_bar|^2 ) / |sym grad_h psi|^2
/// ```
pub fn korn_ratio(psi: &NodalField, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let parts = griso_decompose(psi)?;
    let (denominator, _, _) = norms(psi, h);
    if !(denominator > 0.0) {
        return Err(Error::InvalidParameter("korn ratio: sym grad_h psi vanishes".into()));
    }
    let (rigid_sym, _, _) = norms(&parts.rigid_part(), h);
    let (_, bar_grad, bar_mass) = norms(&parts.residual, h);
    Ok((rigid_sym + bar_grad + bar_mass / (h * h)) / denominator)
}

/// Limit pair and corrector size of a 3D displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct KlExtraction {
    /// `int_I (u1, u2)` per column.
    pub w: Vec<[f64; 2]>,
    /// `h int_I u3` per column.
    pub v: Vec<f64>,
    /// `|(psi1, psi2, h psi3)|_L2` of `psi = u - (w - x3 grad v, v / h)`.
    pub corrector_norm: f64,
}

/// Nodal derivative along one lattice direction: centered inside,
/// second-order one-sided at the ends.
fn derivative(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step),
            _ if i == n - 1 => (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * step),
            _ => (values[i + 1] - values[i - 1]) / (2.0 * step),
        })
        .collect()
}

/// Nodal gradient of a column field on the `(nx+1) x (ny+1)` lattice.
pub fn lattice_gradient(v: &[f64], nx: usize, ny: usize, dx: f64, dy: f64) -> Vec<[f64; 2]> {
    let mut g = vec![[0.0; 2]; v.len()];
    for j in 0..=ny {
        let row: Vec<f64> = (0..=nx).map(|i| v[i + (nx + 1) * j]).collect();
        for (i, d) in derivative(&row, dx).into_iter().enumerate() {
            g[i + (nx + 1) * j][0] = d;
        }
    }
    for i in 0..=nx {
        let col: Vec<f64> = (0..=ny).map(|j| v[i + (nx + 1) * j]).collect();
        for (j, d) in derivative(&col, dy).into_iter().enumerate() {
            g[i + (nx + 1) * j][1] = d;
        }
    }
    g
}

pub fn extract_kl(u: &NodalField, h: f64) -> Result<KlExtraction> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    if u.nx < 2 || u.ny < 2 {
        return Err(Error::InvalidParameter("extraction needs at least 2x2 in-plane cells".into()));
    }
    let columns = (u.nx + 1) * (u.ny + 1);
    let mut w = vec![[0.0; 2]; columns];
    let mut v = vec![0.0; columns];
    for j in 0..=u.ny {
        for i in 0..=u.nx {
            let c = i + (u.nx + 1) * j;
            w[c] = [column_moments(u, i, j, 0).0, column_moments(u, i, j, 1).0];
            v[c] = h * column_moments(u, i, j, 2).0;
        }
    }
    let (dx, dy, _) = u.spacing();
    let grad_v = lattice_gradient(&v, u.nx, u.ny, dx, dy);
    let psi = u.map_nodes(|i, j, k, x3| {
        let c = i + (u.nx + 1) * j;
        let val = u.at(i, j, k);
        [val[0] - (w[c][0] - x3 * grad_v[c][0]), val[1] - (w[c][1] - x3 * grad_v[c][1]), h * val[2] - v[c]]
    });
    let (_, _, mass) = norms(&psi, 1.0);
    Ok(KlExtraction { w, v, corrector_norm: mass.sqrt() })
}

/// `L2(omega)` norm of the difference of two nodal column fields under the
/// bilinear interpolant (2x2 Gauss).
pub fn column_l2_distance(a: &[Vec<f64>], b: &[Vec<f64>], nx: usize, ny: usize, lx: f64, ly: f64) -> f64 {
    let g = 0.577_350_269_189_625_8;
    let w = lx / nx as f64 * ly / ny as f64 / 4.0;
    let mut sum = 0.0;
    for cy in 0..ny {
        for cx in 0..nx {
            let nodes =
                [cx + (nx + 1) * cy, cx + 1 + (nx + 1) * cy, cx + (nx + 1) * (cy + 1), cx + 1 + (nx + 1) * (cy + 1)];
            for q in 0..4 {
                let (xi, eta) = (if q & 1 == 0 { -g } else { g }, if q & 2 == 0 { -g } else { g });
                let shape = [
                    0.25 * (1.0 - xi) * (1.0 - eta),
                    0.25 * (1.0 + xi) * (1.0 - eta),
                    0.25 * (1.0 - xi) * (1.0 + eta),
                    0.25 * (1.0 + xi) * (1.0 + eta),
                ];
                for (fa, fb) in a.iter().zip(b) {
                    let d: f64 = nodes.iter().zip(&shape).map(|(&n, s)| s * (fa[n] - fb[n])).sum();
                    sum += w * d * d;
                }
            }
        }
    }
    sum.sqrt()
}

/// Material of the thin plate in the h-sweep.
#[derive(Debug, Clone)]
pub enum HarnessMaterial {
    /// Phase 0 of the library everywhere.
    Homogeneous(PhaseLibrary),
    /// Phase `layers[k]` in voxel layer `k`; the number of layers must equal
    /// the 3D `nz`.
    Layered { phases: PhaseLibrary, layers: Vec<u32> },
}

impl HarnessMaterial {
    fn phases(&self) -> &PhaseLibrary {
        match self {
            HarnessMaterial::Homogeneous(p) => p,
            HarnessMaterial::Layered { phases, .. } => phases,
        }
    }

    fn grid(&self, nx: usize, ny: usize, nz: usize, domain: Domain) -> Result<VoxelGrid> {
        match self {
            HarnessMaterial::Homogeneous(_) => VoxelGrid::uniform(nx, ny, nz, domain, 0),
            HarnessMaterial::Layered { layers, .. } => {
                if layers.len() != nz {
                    return Err(Error::GridMismatch(format!("{} layers for nz = {nz}", layers.len())));
                }
                VoxelGrid::from_fn(nx, ny, nz, domain, |_, _, k| layers[k])
            }
        }
    }

    /// The limit density: plane-stress reduction for one phase, a 2x2
    /// in-plane cell problem for layers (layered forms do not depend on gamma).
    pub fn limit_form(&self, nz: usize, opts: &HomogenizeOptions) -> Result<PlateForm> {
        match self {
            HarnessMaterial::Homogeneous(p) => PlateForm::homogeneous(p.tensor(0)?),
            HarnessMaterial::Layered { .. } => {
                let cell = self.grid(2, 2, nz, Domain::Cell)?;
                let mut f = homogenize(&cell, self.phases(), 1.0, opts)?.form;
                f.gamma = crate::algebra::GammaTag::Limit;
                Ok(f)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub material: HarnessMaterial,
    /// Decreasing thicknesses.
    pub hs: Vec<f64>,
    pub force: [f64; 3],
    pub clamped: EdgeSet,
    /// In-plane cells of both the 3D grid and the plate grid.
    pub resolution: [usize; 2],
    pub nz: usize,
    pub solver: SolverOptions,
    pub element: ElementKind,
    /// Overrides the limit density.
    pub limit_form: Option<PlateForm>,
    /// Upper threshold on the relative gap at the smallest h.
    pub gap_threshold: f64,
}

impl HarnessConfig {
    pub fn new(material: HarnessMaterial, hs: Vec<f64>, force: [f64; 3], clamped: EdgeSet) -> Self {
        Self {
            material,
            hs,
            force,
            clamped,
            resolution: [32, 32],
            nz: 8,
            solver: SolverOptions { tol: 1e-10, max_iter: None, preconditioner: PreconditionerKind::BlockJacobi },
            element: ElementKind::IncompatibleModes,
            limit_form: None,
            gap_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessValues {
    pub f_h: f64,
    pub rel_gap: f64,
    pub corrector_norm: f64,
    pub kl_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessRow {
    pub h: f64,
    pub result: std::result::Result<HarnessValues, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessSummary {
    pub gap_monotone: bool,
    pub final_gap_below_threshold: bool,
    pub corrector_monotone: bool,
    pub all_solved: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessTable {
    pub f0: f64,
    pub gap_threshold: f64,
    pub rows: Vec<HarnessRow>,
}

/// Decreasing, with exact zeros counted as decreasing.
fn monotone_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

impl HarnessTable {
    pub fn summary(&self) -> HarnessSummary {
        let ok: Vec<&HarnessValues> = self.rows.iter().filter_map(|r| r.result.as_ref().ok()).collect();
        let all_solved = ok.len() == self.rows.len();
        let gaps: Vec<f64> = ok.iter().map(|v| v.rel_gap).collect();
        let correctors: Vec<f64> = ok.iter().map(|v| v.corrector_norm).collect();
        let gap_monotone = monotone_decreasing(&gaps);
        let corrector_monotone = monotone_decreasing(&correctors);
        let final_gap_below_threshold = gaps.last().is_some_and(|g| *g < self.gap_threshold);
        HarnessSummary {
            gap_monotone,
            final_gap_below_threshold,
            corrector_monotone,
            all_solved,
            pass: all_solved && gap_monotone && corrector_monotone && final_gap_below_threshold,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# basis: {BASIS_TAG}\nh,F_h,F0,rel_gap,corrector_norm,kl_gap\n");
        for r in &self.rows {
            match &r.result {
                Ok(v) => {
                    let _ = writeln!(
                        out,
                        "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                        r.h, v.f_h, self.f0, v.rel_gap, v.corrector_norm, v.kl_gap
                    );
                }
                Err(_) => {
                    let _ = writeln!(out, "{},NaN,{:.15e},NaN,NaN,NaN", r.h, self.f0);
                }
            }
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let s = self.summary();
        let failures: Vec<_> = self
            .rows
            .iter()
            .filter_map(|r| r.result.as_ref().err().map(|e| serde_json::json!({"h": r.h, "error": e})))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "basis": BASIS_TAG,
            "F0": self.f0,
            "gap_threshold": self.gap_threshold,
            "criteria": {
                "relative_gap_monotone_decreasing": s.gap_monotone,
                "final_relative_gap_below_threshold": s.final_gap_below_threshold,
                "corrector_norm_monotone_decreasing": s.corrector_monotone,
                "all_thicknesses_solved": s.all_solved,
            },
            "pass": s.pass,
            "failures": failures,
        }))
        .expect("summary serializes")
    }
}

/// Solves the 3D clamped problem at every h and compares with the limit
/// plate on the same in-plane lattice.
pub fn theorem1_harness(cfg: &HarnessConfig) -> Result<HarnessTable> {
    if cfg.hs.is_empty() || cfg.hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidParameter("h list must be nonempty and positive".into()));
    }
    if cfg.hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("h list must be strictly decreasing".into()));
    }
    let [mx, my] = cfg.resolution;
    let q0 = match &cfg.limit_form {
        Some(f) => f.clone(),
        None => cfg.material.limit_form(cfg.nz, &HomogenizeOptions::default())?,
    };
    let problem = PlateProblem::uniform(mx, my, &q0, cfg.force, cfg.clamped.clone());
    let plate = minimize_plate(&problem, &PlateOptions::default())?;
    let f0 = plate.energy;
    let grid = cfg.material.grid(mx, my, cfg.nz, Domain::Plate)?;
    let phases = cfg.material.phases();
    let opts = ClampedOptions { solver: cfg.solver, element: cfg.element };

    let rows = cfg
        .hs
        .iter()
        .map(|&h| {
            let result = (|| -> Result<HarnessValues> {
                let s = solve_clamped(&grid, phases, h, BodyForce(cfg.force), &cfg.clamped, 1.0, 1.0, &opts)?;
                let kl = extract_kl(&s.field, h)?;
                let rel_gap = if f0 == 0.0 { (s.energy - f0).abs() } else { (s.energy - f0).abs() / f0.abs() };
                let split = |w: &[[f64; 2]], v: &[f64]| {
                    vec![w.iter().map(|x| x[0]).collect::<Vec<_>>(), w.iter().map(|x| x[1]).collect(), v.to_vec()]
                };
                let kl_gap = column_l2_distance(&split(&kl.w, &kl.v), &split(&plate.w, &plate.v), mx, my, 1.0, 1.0);
                Ok(HarnessValues {
                    f_h: s.energy,
                    rel_gap,
                    corrector_norm: kl.corrector_norm,
                    kl_gap,
                    iterations: s.report.iterations,
                })
            })()
            .map_err(|e| {
                log::warn!("h = {h}: {e}");
                e.to_string()
            });
            HarnessRow { h, result }
        })
        .collect();
    Ok(HarnessTable { f0, gap_threshold: cfg.gap_threshold, rows })
}
