//! Homogenized plate forms `Q_gamma` from six periodic corrector problems.
//!
//! For each Mandel-pair basis load `E_a = iota(M1 + x3 M2)` the corrector
//! `psi_a` minimizes `int Q(x, E_a + sym grad_gamma psi)` over in-plane
//! periodic, zero-mean fields on `T^2 x I`. The form is the bilinear energy
//!
//! ```text
//! A_ab = 1/2 int C (E_a + sym grad_gamma psi_a) : (E_b + sym grad_gamma psi_b)
//! ```
//!
//! so that `Q(M1, M2) = z^T A z`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix6, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{GammaTag, PhaseLibrary, PlateForm, BASIS_TAG};
use crate::error::{Error, Result};
use crate::fem3d::element::{self, ElementLoads};
use crate::fem3d::sparse::dot;
use crate::fem3d::{
    assemble, elements, solve, AssembleOptions, ElasticOperator, ElementKind, Mode, SolverOptions, CONSTRAINED,
};
use crate::microstructure::{volume_fractions, Domain, VoxelGrid};

pub use crate::algebra::evaluate;

/// Recorded in every form file: the test space used for correctors.
pub const NORMALIZATION: &str = "in-plane periodic, zero mean";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HomogenizeOptions {
    pub solver: SolverOptions,
    /// Accept phases with `alpha <= 0`.
    pub allow_non_coercive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedForm {
    pub form: PlateForm,
    /// The same energy with every corrector set to zero.
    pub voigt: PlateForm,
    pub resolution: [usize; 3],
    pub fractions: Vec<f64>,
    /// Final relative CG residual of each corrector solve.
    pub residuals: [f64; 6],
    pub iterations: [usize; 6],
    /// `max |A - A^T| / max |A|` before symmetrization.
    pub symmetry_defect: f64,
    pub has_soft_phase: bool,
}

impl HomogenizedForm {
    pub fn gamma(&self) -> Option<f64> {
        match self.form.gamma {
            GammaTag::Finite(g) => Some(g),
            GammaTag::Limit => None,
        }
    }

    pub fn to_json(&self) -> String {
        let file = FormFile {
            gamma: self.gamma(),
            basis: BASIS_TAG.to_string(),
            convention: CONVENTION.to_string(),
            normalization: NORMALIZATION.to_string(),
            matrix: self.form.row_major(),
            voigt: Some(self.voigt.row_major()),
            fractions: self.fractions.clone(),
            resolution: self.resolution,
            residuals: self.residuals.to_vec(),
            symmetry_defect: Some(self.symmetry_defect),
        };
        serde_json::to_string_pretty(&file).expect("form serializes")
    }
}

const CONVENTION: &str = "Q(M1,M2) = z^T A z, z = (mandel(M1), mandel(M2))";

/// On-disk layout of a homogenized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFile {
    /// `null` for a limit density.
    pub gamma: Option<f64>,
    pub basis: String,
    #[serde(default)]
    pub convention: String,
    #[serde(default)]
    pub normalization: String,
    pub matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voigt: Option<Vec<f64>>,
    #[serde(default)]
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub resolution: [usize; 3],
    #[serde(default)]
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_defect: Option<f64>,
}

/// Reads the matrix of a form file, refusing other coordinate bases.
pub fn read_form(text: &str) -> Result<PlateForm> {
    let file: FormFile = serde_json::from_str(text)?;
    if file.basis != BASIS_TAG {
        return Err(Error::Parse(format!("form basis {:?}, expected {BASIS_TAG:?}", file.basis)));
    }
    let gamma = file.gamma.map_or(GammaTag::Limit, GammaTag::Finite);
    PlateForm::from_row_major(&file.matrix, gamma)
}

/// Six corrector solves and the resulting form.
pub fn homogenize(
    grid: &VoxelGrid,
    phases: &PhaseLibrary,
    gamma: f64,
    opts: &HomogenizeOptions,
) -> Result<HomogenizedForm> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive and finite, got {gamma}")));
    }
    if grid.domain != Domain::Cell {
        return Err(Error::GridMismatch("homogenize needs a cell-domain grid".into()));
    }
    let op = assemble(
        grid,
        phases,
        gamma,
        Mode::Cell,
        AssembleOptions { allow_non_coercive: opts.allow_non_coercive, element: ElementKind::Trilinear },
    )?;
    let (loads, voigt) = fixed_strain_loads(&op);

    let solutions: Vec<_> =
        (0..6).into_par_iter().map(|a| solve(&op, &loads[a], &opts.solver).and_then(|r| r.into_result())).collect();
    let solutions = solutions.into_iter().collect::<Result<Vec<_>>>()?;

    // A_ab = V_ab - 1/2 (psi_a . f_b + f_a . psi_b) + 1/2 psi_a^T K psi_b with f = -int B^T C E.
    let k_psi: Vec<Vec<f64>> = solutions.iter().map(|s| op.matrix.mul(&s.x)).collect();
    let mut a = voigt;
    for i in 0..6 {
        for j in 0..6 {
            let (pi, pj) = (&solutions[i].x, &solutions[j].x);
            a[(i, j)] += 0.5 * (dot(pi, &k_psi[j]) - dot(pi, &loads[j]) - dot(&loads[i], pj));
        }
    }
    let scale = a.amax();
    let symmetry_defect = if scale > 0.0 { (a - a.transpose()).amax() / scale } else { 0.0 };
    let a = 0.5 * (a + a.transpose());

    let has_soft_phase = grid.phase_ids().iter().any(|&id| phases.get(id).map(|p| p.soft).unwrap_or(false));
    Ok(HomogenizedForm {
        form: PlateForm::new(a, GammaTag::Finite(gamma)),
        voigt: PlateForm::new(voigt, GammaTag::Finite(gamma)),
        resolution: grid.dims(),
        fractions: volume_fractions(grid, phases.len()).0,
        residuals: std::array::from_fn(|i| solutions[i].rel_residual),
        iterations: std::array::from_fn(|i| solutions[i].iterations),
        symmetry_defect,
        has_soft_phase,
    })
}

/// Global right-hand sides `-int B^T C E_a` and the Voigt matrix
/// `1/2 int C E_a : E_b`, both exact under 2x2x2 Gauss quadrature.
fn fixed_strain_loads(op: &ElasticOperator) -> (Vec<Vec<f64>>, Matrix6<f64>) {
    let g = op.geometry;
    let n = op.dofmap.n_free();
    let mut loads = vec![vec![0.0; n]; 6];
    let mut cache: BTreeMap<(u32, usize), ElementLoads> = BTreeMap::new();
    let mut voigt = Matrix6::zeros();
    for (i, j, k) in elements(&op.grid) {
        let id = op.grid.get(i, j, k);
        let c = &op.tensors[&id];
        let f = cache.entry((id, k)).or_insert_with(|| element::fixed_strain_loads(c, &g, op.layer_bottom(k)));
        for (d, &dof) in op.dofmap.element_dofs(i, j, k).iter().enumerate() {
            if dof != CONSTRAINED {
                for (a, load) in loads.iter_mut().enumerate() {
                    load[dof] += f[(d, a)];
                }
            }
        }
        for (xi, w) in element::gauss_points(&g) {
            let x3 = element::height(&g, op.layer_bottom(k), xi[2]);
            let e: [_; 6] = std::array::from_fn(|a| element::basis_strain(a, x3));
            for a in 0..6 {
                let ce = c * e[a];
                for b in 0..6 {
                    voigt[(a, b)] += 0.5 * w * ce.dot(&e[b]);
                }
            }
        }
    }
    (loads, voigt)
}

/// Eigenvalue checks of a form against the universal bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `min eig(A) - alpha/12`; `None` when a soft phase voids the bound.
    pub coercivity_margin: Option<f64>,
    /// `beta - max eig(A)`
    pub upper_margin: f64,
    /// `min eig(A_voigt - A)`
    pub voigt_slack: f64,
    pub pass: bool,
}

/// Absolute slack allowed on every bound.
pub const BOUNDS_TOL: f64 = 1e-9;

/// Checks `alpha/12 <= eig(A) <= beta` and `A <= A_voigt`. `alpha`, `beta`
/// are the extreme constants of the non-soft phases.
pub fn check_bounds(h: &HomogenizedForm, alpha: f64, beta: f64) -> BoundsReport {
    let (min_eigenvalue, max_eigenvalue) = h.form.min_max_eigenvalues();
    let diff = h.voigt.matrix - h.form.matrix;
    let voigt_slack = SymmetricEigen::new(0.5 * (diff + diff.transpose())).eigenvalues.min();
    let coercivity_margin = if h.has_soft_phase {
        log::warn!("soft phase present; coercivity bound alpha/12 not checked");
        None
    } else {
        Some(min_eigenvalue - alpha / 12.0)
    };
    let upper_margin = beta - max_eigenvalue;
    let pass = coercivity_margin.map_or(true, |m| m >= -BOUNDS_TOL)
        && upper_margin >= -BOUNDS_TOL
        && voigt_slack >= -BOUNDS_TOL;
    BoundsReport { min_eigenvalue, max_eigenvalue, alpha, beta, coercivity_margin, upper_margin, voigt_slack, pass }
}

/// Outcome of one gamma of a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub gamma: f64,
    pub result: std::result::Result<HomogenizedForm, String>,
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub entries: Vec<SweepEntry>,
    /// Aitken extrapolation of the three smallest successful gammas.
    pub low_estimate: Option<PlateForm>,
    /// Aitken extrapolation of the three largest successful gammas.
    pub high_estimate: Option<PlateForm>,
}

pub const LOW_LABEL: &str = "γ→0 est.";
pub const HIGH_LABEL: &str = "γ→∞ est.";

/// `n` values from `a` to `b` inclusive, equally spaced in `log`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) || n == 0 {
        return Err(Error::InvalidParameter(format!("log spacing needs a, b > 0 and n >= 1, got {a}:{b}:{n}")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// Homogenizes at every gamma (ascending). Failures are kept in the entry
/// list and the sweep continues.
pub fn gamma_sweep(
    grid: &VoxelGrid,
    phases: &PhaseLibrary,
    gammas: &[f64],
    opts: &HomogenizeOptions,
) -> Result<GammaSweep> {
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::InvalidParameter("every gamma must be positive".into()));
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("gammas must be strictly increasing".into()));
    }
    let entries: Vec<SweepEntry> = gammas
        .iter()
        .map(|&gamma| {
            let result = homogenize(grid, phases, gamma, opts).map_err(|e| {
                log::warn!("gamma = {gamma}: {e}");
                e.to_string()
            });
            SweepEntry { gamma, result }
        })
        .collect();
    let ok: Vec<&Matrix6<f64>> =
        entries.iter().filter_map(|e| e.result.as_ref().ok()).map(|h| &h.form.matrix).collect();
    let (low_estimate, high_estimate) = if ok.len() >= 3 {
        let n = ok.len();
        (
            Some(PlateForm::new(aitken(ok[2], ok[1], ok[0]), GammaTag::Limit)),
            Some(PlateForm::new(aitken(ok[n - 3], ok[n - 2], ok[n - 1]), GammaTag::Limit)),
        )
    } else {
        (None, None)
    };
    Ok(GammaSweep { entries, low_estimate, high_estimate })
}

/// Elementwise Aitken delta-squared limit of `x0, x1, x2`; entries whose
/// second difference vanishes keep `x2`.
pub fn aitken(x0: &Matrix6<f64>, x1: &Matrix6<f64>, x2: &Matrix6<f64>) -> Matrix6<f64> {
    let scale = x2.amax().max(f64::MIN_POSITIVE);
    Matrix6::from_fn(|i, j| {
        let (a, b, c) = (x0[(i, j)], x1[(i, j)], x2[(i, j)]);
        let d1 = c - b;
        let d2 = d1 - (b - a);
        if d2.abs() <= 1e-12 * scale || (b - a) * d1 <= 0.0 {
            c
        } else {
            c - d1 * d1 / d2
        }
    })
}

fn csv_header(out: &mut String) {
    let _ = writeln!(out, "# basis: {BASIS_TAG}; {CONVENTION}");
    out.push_str("gamma");
    for i in 0..6 {
        for j in i..6 {
            let _ = write!(out, ",a{i}{j}");
        }
    }
    out.push_str(",min_eig,max_eig\n");
}

fn csv_row(out: &mut String, gamma: &str, form: &PlateForm) {
    out.push_str(gamma);
    for v in form.upper_triangle() {
        let _ = write!(out, ",{v:.15e}");
    }
    let (lo, hi) = form.min_max_eigenvalues();
    let _ = writeln!(out, ",{lo:.15e},{hi:.15e}");
}

impl GammaSweep {
    /// Sampled forms in input order, then the two labelled endpoint
    /// estimates. Failed gammas are omitted here and listed by
    /// [`GammaSweep::failures`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out);
        for e in &self.entries {
            if let Ok(h) = &e.result {
                csv_row(&mut out, &format!("{}", e.gamma), &h.form);
            }
        }
        for (label, est) in [(LOW_LABEL, &self.low_estimate), (HIGH_LABEL, &self.high_estimate)] {
            if let Some(f) = est {
                csv_row(&mut out, label, f);
            }
        }
        out
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.entries.iter().filter_map(|e| e.result.as_ref().err().map(|m| (e.gamma, m.as_str()))).collect()
    }
}
