//! Trilinear hexahedron on an axis-aligned box with the scaled gradient
//! `(d1, d2, d3 / scale)` and 2x2x2 Gauss quadrature.

use std::ops::AddAssign;

use nalgebra::{Matrix6, SMatrix, Vector6};

use crate::algebra::SQRT_2;

pub type StrainMatrix = SMatrix<f64, 6, 24>;
pub type ElementMatrix = SMatrix<f64, 24, 24>;
pub type ElementLoads = SMatrix<f64, 24, 6>;

const GAUSS: f64 = 0.577_350_269_189_625_8;

/// Box dimensions and the thickness scale dividing the x3 derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexGeometry {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub scale: f64,
}

/// Local node `a = ix + 2 iy + 4 iz` sits at reference corner `(2ix-1, 2iy-1, 2iz-1)`.
#[inline]
pub fn corner(a: usize) -> [f64; 3] {
    [if a & 1 == 0 { -1.0 } else { 1.0 }, if a & 2 == 0 { -1.0 } else { 1.0 }, if a & 4 == 0 { -1.0 } else { 1.0 }]
}

/// Reference Gauss points with their physical weights.
pub fn gauss_points(g: &HexGeometry) -> [([f64; 3], f64); 8] {
    let w = g.dx * g.dy * g.dz / 8.0;
    std::array::from_fn(|q| {
        let c = corner(q);
        ([c[0] * GAUSS, c[1] * GAUSS, c[2] * GAUSS], w)
    })
}

pub fn shape_values(xi: [f64; 3]) -> [f64; 8] {
    std::array::from_fn(|a| {
        let c = corner(a);
        (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]) / 8.0
    })
}

/// Scaled physical gradients of the eight shape functions at `xi`.
pub fn shape_gradients(g: &HexGeometry, xi: [f64; 3]) -> [[f64; 3]; 8] {
    std::array::from_fn(|a| {
        let c = corner(a);
        let (fx, fy, fz) = (1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]);
        [
            c[0] * fy * fz / 8.0 * (2.0 / g.dx),
            fx * c[1] * fz / 8.0 * (2.0 / g.dy),
            fx * fy * c[2] / 8.0 * (2.0 / g.dz) / g.scale,
        ]
    })
}

/// Mandel strain of the nodal displacement vector `(u_a1, u_a2, u_a3)_a`.
pub fn strain_matrix(grads: &[[f64; 3]; 8]) -> StrainMatrix {
    let mut b = StrainMatrix::zeros();
    let r = 1.0 / SQRT_2;
    for (a, gr) in grads.iter().enumerate() {
        let [g1, g2, g3] = *gr;
        let c = 3 * a;
        b[(0, c)] = g1;
        b[(1, c + 1)] = g2;
        b[(2, c + 2)] = g3;
        b[(3, c + 1)] = r * g3;
        b[(3, c + 2)] = r * g2;
        b[(4, c)] = r * g3;
        b[(4, c + 2)] = r * g1;
        b[(5, c)] = r * g2;
        b[(5, c + 1)] = r * g1;
    }
    b
}

/// `K = sum_q w_q B^T C B`, so that the element energy is `1/2 u^T K u`.
pub fn stiffness(c: &Matrix6<f64>, g: &HexGeometry) -> ElementMatrix {
    let mut k = ElementMatrix::zeros();
    for (xi, w) in gauss_points(g) {
        let b = strain_matrix(&shape_gradients(g, xi));
        let cb = c * b;
        k.gemm_tr(w, &b, &cb, 1.0);
    }
    0.5 * (k + k.transpose())
}

/// Element formulation of the 3D solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    /// Plain trilinear displacements.
    #[default]
    Trilinear,
    /// Trilinear plus the nine internal modes `(1 - xi_d^2) e_c`, condensed
    /// per element. The modes are discontinuous between elements; on boxes
    /// their strains average to zero, so constant strains pass the patch
    /// test, and pure bending is represented without parasitic shear.
    IncompatibleModes,
}

/// Mandel strain of the nine internal modes at `xi`.
fn bubble_strain(g: &HexGeometry, xi: [f64; 3]) -> SMatrix<f64, 6, 9> {
    let scale = [2.0 / g.dx, 2.0 / g.dy, 2.0 / g.dz / g.scale];
    let r = 1.0 / SQRT_2;
    let mut b = SMatrix::<f64, 6, 9>::zeros();
    for d in 0..3 {
        // Gradient of 1 - xi_d^2 points along d only.
        let gd = -2.0 * xi[d] * scale[d];
        let mut grad = [0.0; 3];
        grad[d] = gd;
        for c in 0..3 {
            let col = 3 * d + c;
            let [g1, g2, g3] = grad;
            match c {
                0 => {
                    b[(0, col)] = g1;
                    b[(4, col)] = r * g3;
                    b[(5, col)] = r * g2;
                }
                1 => {
                    b[(1, col)] = g2;
                    b[(3, col)] = r * g3;
                    b[(5, col)] = r * g1;
                }
                _ => {
                    b[(2, col)] = g3;
                    b[(3, col)] = r * g2;
                    b[(4, col)] = r * g1;
                }
            }
        }
    }
    b
}

/// Element stiffness with the internal modes eliminated:
/// `K_uu - K_ua K_aa^-1 K_au`.
pub fn stiffness_incompatible(c: &Matrix6<f64>, g: &HexGeometry) -> ElementMatrix {
    let mut kuu = ElementMatrix::zeros();
    let mut kua = SMatrix::<f64, 24, 9>::zeros();
    let mut kaa = SMatrix::<f64, 9, 9>::zeros();
    for (xi, w) in gauss_points(g) {
        let b = strain_matrix(&shape_gradients(g, xi));
        let p = bubble_strain(g, xi);
        let cb = c * b;
        let cp = c * p;
        kuu.gemm_tr(w, &b, &cb, 1.0);
        kua.gemm_tr(w, &b, &cp, 1.0);
        kaa.gemm_tr(w, &p, &cp, 1.0);
    }
    let kaa = 0.5 * (kaa + kaa.transpose());
    let inv = match kaa.cholesky() {
        Some(ch) => ch.inverse(),
        // Degenerate tensors (soft or zero phases) fall back to the plain element.
        None => return 0.5 * (kuu + kuu.transpose()),
    };
    let k = kuu - kua * inv * kua.transpose();
    0.5 * (k + k.transpose())
}

/// Stiffness of the chosen formulation.
pub fn element_stiffness(kind: ElementKind, c: &Matrix6<f64>, g: &HexGeometry) -> ElementMatrix {
    match kind {
        ElementKind::Trilinear => stiffness(c, g),
        ElementKind::IncompatibleModes => stiffness_incompatible(c, g),
    }
}

/// Height `x3` of reference coordinate `zeta` in an element starting at `z0`.
#[inline]
pub fn height(g: &HexGeometry, z0: f64, zeta: f64) -> f64 {
    z0 + 0.5 * (1.0 + zeta) * g.dz
}

/// Mandel 3D strain `iota(M1 + x3 M2)` of the six Mandel-pair basis loads.
#[inline]
pub fn basis_strain(load: usize, x3: f64) -> Vector6<f64> {
    const SLOT: [usize; 3] = [0, 1, 5];
    let mut e = Vector6::zeros();
    if load < 3 {
        e[SLOT[load]] = 1.0;
    } else {
        e[SLOT[load - 3]] = x3;
    }
    e
}

/// Right-hand sides `-int B^T C E_a` for the six basis loads.
pub fn fixed_strain_loads(c: &Matrix6<f64>, g: &HexGeometry, z0: f64) -> ElementLoads {
    let mut f = ElementLoads::zeros();
    for (xi, w) in gauss_points(g) {
        let b = strain_matrix(&shape_gradients(g, xi));
        let x3 = height(g, z0, xi[2]);
        for load in 0..6 {
            let s = c * basis_strain(load, x3);
            let col = -w * b.transpose() * s;
            f.column_mut(load).add_assign(&col);
        }
    }
    f
}
