//! Symmetric tensors in Mandel coordinates and linear elastic energy densities.
//!
//! Every symmetric matrix is stored through its orthonormal (Mandel)
//! coordinates, so Frobenius norms are Euclidean norms and eigenvalue bounds
//! of a 6x6 Mandel matrix are bounds of the quadratic form it represents.

mod phases;

pub use phases::{Phase, PhaseLibrary, PhaseModel};

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag of the coordinate convention, embedded in every artifact.
pub const BASIS_TAG: &str = "mandel-pair-v1";

pub(crate) const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Mandel indices of the in-plane entries (11, 22, 12) inside a [`Sym3`].
pub const IN_PLANE: [usize; 3] = [0, 1, 5];
/// Mandel indices of the third-column entries (33, 23, 13) inside a [`Sym3`].
pub const OUT_OF_PLANE: [usize; 3] = [2, 3, 4];

/// Symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub m11: f64,
    pub m22: f64,
    pub m12: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { m11: 0.0, m22: 0.0, m12: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { m11: 1.0, m22: 1.0, m12: 0.0 };

    pub fn new(m11: f64, m22: f64, m12: f64) -> Self {
        Self { m11, m22, m12 }
    }

    /// `(m11, m22, sqrt(2) m12)`
    pub fn mandel(&self) -> Vector3<f64> {
        Vector3::new(self.m11, self.m22, SQRT_2 * self.m12)
    }

    pub fn from_mandel(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2] / SQRT_2)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn norm(&self) -> f64 {
        self.mandel().norm()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(t * self.m11, t * self.m22, t * self.m12)
    }

    pub fn to_matrix(&self) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::new(self.m11, self.m12, self.m12, self.m22)
    }
}

impl std::ops::Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 + o.m11, self.m22 + o.m22, self.m12 + o.m12)
    }
}

impl std::ops::Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 - o.m11, self.m22 - o.m22, self.m12 - o.m12)
    }
}

/// Symmetric 3x3 matrix, Mandel order `(11, 22, 33, 23, 13, 12)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3 {
    pub m11: f64,
    pub m22: f64,
    pub m33: f64,
    pub m23: f64,
    pub m13: f64,
    pub m12: f64,
}

impl Sym3 {
    /// Symmetric part of an arbitrary 3x3 matrix.
    pub fn sym(f: &Matrix3<f64>) -> Self {
        Self {
            m11: f[(0, 0)],
            m22: f[(1, 1)],
            m33: f[(2, 2)],
            m23: 0.5 * (f[(1, 2)] + f[(2, 1)]),
            m13: 0.5 * (f[(0, 2)] + f[(2, 0)]),
            m12: 0.5 * (f[(0, 1)] + f[(1, 0)]),
        }
    }

    pub fn mandel(&self) -> Vector6<f64> {
        Vector6::new(self.m11, self.m22, self.m33, SQRT_2 * self.m23, SQRT_2 * self.m13, SQRT_2 * self.m12)
    }

    pub fn from_mandel(v: &Vector6<f64>) -> Self {
        Self { m11: v[0], m22: v[1], m33: v[2], m23: v[3] / SQRT_2, m13: v[4] / SQRT_2, m12: v[5] / SQRT_2 }
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.m11, self.m12, self.m13, //
            self.m12, self.m22, self.m23, //
            self.m13, self.m23, self.m33,
        )
    }

    pub fn frobenius(&self) -> f64 {
        self.to_matrix().norm()
    }
}

/// Natural inclusion of a symmetric 2x2 matrix into the upper-left block.
pub fn embed2to3(m: &Sym2) -> Sym3 {
    Sym3 { m11: m.m11, m22: m.m22, m12: m.m12, ..Sym3::default() }
}

/// Membrane strain and curvature `(M1, M2)`, the fixed strain `M1 + x3 M2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlateStrainPair {
    pub membrane: Sym2,
    pub curvature: Sym2,
}

impl PlateStrainPair {
    pub fn new(membrane: Sym2, curvature: Sym2) -> Self {
        Self { membrane, curvature }
    }

    /// `z = (mandel(M1), mandel(M2))`
    pub fn mandel(&self) -> Vector6<f64> {
        let a = self.membrane.mandel();
        let b = self.curvature.mandel();
        Vector6::new(a[0], a[1], a[2], b[0], b[1], b[2])
    }

    pub fn from_mandel(z: &Vector6<f64>) -> Self {
        Self {
            membrane: Sym2::from_mandel(&Vector3::new(z[0], z[1], z[2])),
            curvature: Sym2::from_mandel(&Vector3::new(z[3], z[4], z[5])),
        }
    }

    /// Fixed 3D strain `iota(M1 + x3 M2)` at height `x3`.
    pub fn strain_at(&self, x3: f64) -> Sym3 {
        embed2to3(&(self.membrane + self.curvature.scale(x3)))
    }
}

/// Linear elastic tensor as a 6x6 Mandel matrix `C` with `Q(F) = 1/2 C z.z`,
/// `z = mandel(sym F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HookeTensor3 {
    c: Matrix6<f64>,
    alpha: f64,
    beta: f64,
}

/// Eigenvalue bounds of `1/2 C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub alpha: f64,
    pub beta: f64,
}

impl Bounds {
    pub fn is_coercive(&self) -> bool {
        self.alpha > 0.0
    }
}

impl HookeTensor3 {
    /// Accepts a raw Mandel matrix. Asymmetric input is symmetrized; a
    /// relative asymmetry above 1e-12 is logged.
    pub fn from_mandel(c: Matrix6<f64>) -> Self {
        let scale = c.amax();
        let asym = (c - c.transpose()).amax();
        if scale > 0.0 && asym > 1e-12 * scale {
            log::warn!("elasticity matrix asymmetric by {:e} (relative); symmetrizing", asym / scale);
        }
        let c = 0.5 * (c + c.transpose());
        let (alpha, beta) = half_eigen_bounds(&c);
        Self { c, alpha, beta }
    }

    /// `Q(F) = mu |sym F|^2 + lambda/2 tr(F)^2`.
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && 3.0 * lambda + 2.0 * mu > 0.0) {
            return Err(Error::NonElliptic { lambda, mu });
        }
        let mut c = Matrix6::identity() * (2.0 * mu);
        for i in 0..3 {
            for j in 0..3 {
                c[(i, j)] += lambda;
            }
        }
        Ok(Self::from_mandel(c))
    }

    /// Stand-in for voids: `1/2 C = eps * identity`.
    pub fn soft(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("soft-phase eps must be positive, got {eps}")));
        }
        Ok(Self::from_mandel(Matrix6::identity() * (2.0 * eps)))
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.c
    }

    pub fn bounds(&self) -> Bounds {
        Bounds { alpha: self.alpha, beta: self.beta }
    }

    pub fn is_coercive(&self) -> bool {
        self.bounds().is_coercive()
    }
}

fn half_eigen_bounds(c: &Matrix6<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(0.5 * c).eigenvalues;
    let alpha = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let beta = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Exact zeros stay zeros instead of tiny negative round-off.
    let clean = |x: f64| if x.abs() <= 1e-15 * c.amax() { 0.0 } else { x };
    (clean(alpha), clean(beta))
}

/// `(alpha, beta)`: extreme eigenvalues of `1/2 C`; `alpha <= 0` means non-coercive.
pub fn bounds(h: &HookeTensor3) -> Bounds {
    h.bounds()
}

/// `1/2 C mandel(E) . mandel(E)`
pub fn eval_energy(h: &HookeTensor3, e: &Sym3) -> f64 {
    let z = e.mandel();
    0.5 * z.dot(&(h.c * z))
}

pub fn isotropic_hooke(lambda: f64, mu: f64) -> Result<HookeTensor3> {
    HookeTensor3::isotropic(lambda, mu)
}

/// Plane-stress reduction: the 3x3 in-plane Mandel matrix `R` with
/// `min_b Q(iota(M) + sym(b (x) e3)) = 1/2 R m.m`.
///
/// `sym(b (x) e3)` spans exactly the (33, 23, 13) Mandel coordinates, so the
/// minimum is the Schur complement of `C` on the in-plane block.
pub fn plane_stress_matrix(h: &HookeTensor3) -> Result<Matrix3<f64>> {
    let c = h.matrix();
    let pick = |rows: [usize; 3], cols: [usize; 3]| Matrix3::from_fn(|i, j| c[(rows[i], cols[j])]);
    let c_ii = pick(IN_PLANE, IN_PLANE);
    let c_io = pick(IN_PLANE, OUT_OF_PLANE);
    let c_oo = pick(OUT_OF_PLANE, OUT_OF_PLANE);
    let chol = c_oo.cholesky().ok_or(Error::SingularReduction)?;
    let r = c_ii - c_io * chol.solve(&c_io.transpose());
    Ok(0.5 * (r + r.transpose()))
}

/// Minimum of the energy over all third-column strains added to `iota(M)`.
pub fn pointwise_relax(h: &HookeTensor3, m: &Sym2) -> Result<f64> {
    let r = plane_stress_matrix(h)?;
    let v = m.mandel();
    Ok(0.5 * v.dot(&(r * v)))
}

/// Value of `gamma` a plate form belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaTag {
    Finite(f64),
    /// Limit plate density not attached to a finite gamma.
    Limit,
}

/// Quadratic form on `(M1, M2)` as a 6x6 matrix `A`; `Q(M1, M2) = z^T A z`
/// with no extra factor 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateForm {
    pub matrix: Matrix6<f64>,
    pub gamma: GammaTag,
}

impl PlateForm {
    pub fn new(matrix: Matrix6<f64>, gamma: GammaTag) -> Self {
        Self { matrix, gamma }
    }

    /// The limit density of a homogeneous plate: `Q2(M1) + Q2(M2)/12`, with
    /// `Q2` the plane-stress reduced density.
    pub fn homogeneous(h: &HookeTensor3) -> Result<Self> {
        let r = 0.5 * plane_stress_matrix(h)?;
        let mut a = Matrix6::zeros();
        a.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        a.fixed_view_mut::<3, 3>(3, 3).copy_from(&(r / 12.0));
        Ok(Self::new(a, GammaTag::Limit))
    }

    pub fn evaluate(&self, m1: &Sym2, m2: &Sym2) -> f64 {
        let z = PlateStrainPair::new(*m1, *m2).mandel();
        z.dot(&(self.matrix * z))
    }

    pub fn eigenvalues(&self) -> Vector6<f64> {
        let s = 0.5 * (self.matrix + self.matrix.transpose());
        SymmetricEigen::new(s).eigenvalues
    }

    pub fn min_max_eigenvalues(&self) -> (f64, f64) {
        let e = self.eigenvalues();
        (e.min(), e.max())
    }

    /// `A` conjugated by the in-plane rotation by 90 degrees.
    pub fn rotated_quarter_turn(&self) -> Self {
        let t = quarter_turn_pair();
        Self::new(t * self.matrix * t.transpose(), self.gamma)
    }

    /// Upper triangle, row-major (21 entries).
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(21);
        for i in 0..6 {
            for j in i..6 {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    pub fn row_major(&self) -> Vec<f64> {
        (0..36).map(|k| self.matrix[(k / 6, k % 6)]).collect()
    }

    pub fn from_row_major(values: &[f64], gamma: GammaTag) -> Result<Self> {
        if values.len() != 36 {
            return Err(Error::Parse(format!("expected 36 matrix entries, got {}", values.len())));
        }
        Ok(Self::new(Matrix6::from_row_slice(values), gamma))
    }
}

/// `Q(M1, M2) = z^T A z` for the Mandel-pair coordinates of `(M1, M2)`.
pub fn evaluate(form: &PlateForm, m1: &Sym2, m2: &Sym2) -> f64 {
    form.evaluate(m1, m2)
}

/// Mandel-pair matrix of `M -> R^T M R` for the quarter turn `R`. The map is
/// an orthogonal involution, so the direction of the turn does not matter.
pub fn quarter_turn_pair() -> Matrix6<f64> {
    let mut t = Matrix6::zeros();
    for b in [0, 3] {
        t[(b, b + 1)] = 1.0;
        t[(b + 1, b)] = 1.0;
        t[(b + 2, b + 2)] = -1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn embed_examples() {
        assert_eq!(embed2to3(&Sym2::ZERO), Sym3::default());
        let e = embed2to3(&Sym2::IDENTITY).to_matrix();
        assert_eq!(e, Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)));
        let e = embed2to3(&Sym2::new(1.0, 3.0, 2.0)).to_matrix();
        assert_eq!(e, Matrix3::new(1.0, 2.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn energy_examples() {
        let h = HookeTensor3::isotropic(1.0, 1.0).unwrap();
        assert_eq!(eval_energy(&h, &Sym3::default()), 0.0);
        let id = Sym3 { m11: 1.0, m22: 1.0, m33: 1.0, ..Default::default() };
        assert_close(eval_energy(&h, &id), 7.5, 1e-14);
        let h0 = HookeTensor3::isotropic(0.0, 1.0).unwrap();
        let shear = Sym3 { m12: 0.5, ..Default::default() };
        assert_close(eval_energy(&h0, &shear), 0.5, 1e-14);
    }

    #[test]
    fn isotropic_construction() {
        let h = HookeTensor3::isotropic(0.0, 1.0).unwrap();
        assert!((h.matrix() - Matrix6::identity() * 2.0).amax() < 1e-15);
        let b = h.bounds();
        assert_close(b.alpha, 1.0, 1e-14);
        assert_close(b.beta, 1.0, 1e-14);

        let b = HookeTensor3::isotropic(1.0, 1.0).unwrap().bounds();
        assert_close(b.alpha, 1.0, 1e-13);
        assert_close(b.beta, 2.5, 1e-13);

        assert!(matches!(HookeTensor3::isotropic(1.0, 0.0), Err(Error::NonElliptic { .. })));
        assert!(HookeTensor3::isotropic(-1.0, 1.0).is_err());
    }

    #[test]
    fn zero_tensor_is_flagged() {
        let b = HookeTensor3::from_mandel(Matrix6::zeros()).bounds();
        assert_eq!((b.alpha, b.beta), (0.0, 0.0));
        assert!(!b.is_coercive());
    }

    #[test]
    fn asymmetric_input_is_symmetrized() {
        let mut c = Matrix6::identity() * 2.0;
        c[(0, 1)] = 0.2;
        let h = HookeTensor3::from_mandel(c);
        assert_eq!(h.matrix()[(0, 1)], 0.1);
        assert_eq!(h.matrix()[(1, 0)], 0.1);
    }

    #[test]
    fn relax_examples() {
        let h = HookeTensor3::isotropic(1.0, 1.0).unwrap();
        assert_close(pointwise_relax(&h, &Sym2::IDENTITY).unwrap(), 10.0 / 3.0, 1e-14);
        assert_eq!(pointwise_relax(&h, &Sym2::ZERO).unwrap(), 0.0);
        let h0 = HookeTensor3::isotropic(0.0, 1.0).unwrap();
        assert_close(pointwise_relax(&h0, &Sym2::IDENTITY).unwrap(), 2.0, 1e-14);
    }

    #[test]
    fn relax_matches_isotropic_closed_form() {
        for &(l, mu) in &[(1.0, 1.0), (10.0, 10.0), (0.3, 2.0), (-0.5, 1.0)] {
            let h = HookeTensor3::isotropic(l, mu).unwrap();
            let m = Sym2::new(0.3, -1.2, 0.7);
            let closed = mu * m.norm().powi(2) + l * mu / (l + 2.0 * mu) * m.trace().powi(2);
            assert_close(pointwise_relax(&h, &m).unwrap(), closed, 1e-13);
        }
    }

    #[test]
    fn relax_of_non_coercive_tensor_fails() {
        let h = HookeTensor3::from_mandel(Matrix6::zeros());
        assert!(matches!(pointwise_relax(&h, &Sym2::IDENTITY), Err(Error::SingularReduction)));
    }

    #[test]
    fn homogeneous_limit_form_is_block_diagonal() {
        let h = HookeTensor3::isotropic(1.0, 1.0).unwrap();
        let f = PlateForm::homogeneous(&h).unwrap();
        assert_close(f.evaluate(&Sym2::IDENTITY, &Sym2::ZERO), 10.0 / 3.0, 1e-14);
        assert_close(f.evaluate(&Sym2::ZERO, &Sym2::IDENTITY), 10.0 / 36.0, 1e-14);
        assert_eq!(f.evaluate(&Sym2::ZERO, &Sym2::ZERO), 0.0);
    }

    #[test]
    fn quarter_turn_is_an_involution() {
        let t = quarter_turn_pair();
        assert!((t * t - Matrix6::identity()).amax() < 1e-15);
        let m = Sym2::new(1.0, 2.0, 0.5);
        let t3: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into_owned();
        let rotated = Sym2::from_mandel(&(t3 * m.mandel()));
        assert!((rotated - Sym2::new(2.0, 1.0, -0.5)).norm() < 1e-15);
    }

    fn random_spd() -> impl Strategy<Value = HookeTensor3> {
        (prop::collection::vec(-1.0f64..1.0, 36), 0.1f64..3.0).prop_map(|(v, shift)| {
            let g = Matrix6::from_column_slice(&v);
            HookeTensor3::from_mandel(g * g.transpose() + Matrix6::identity() * shift)
        })
    }

    fn arb_matrix3() -> impl Strategy<Value = Matrix3<f64>> {
        prop::collection::vec(-2.0f64..2.0, 9).prop_map(|v| Matrix3::from_column_slice(&v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]

        #[test]
        fn energy_sees_only_symmetric_part(h in random_spd(), f in arb_matrix3()) {
            let e = Sym3::sym(&f);
            let skew_added = Sym3::sym(&(f + (f - f.transpose()) * 0.37));
            prop_assert!((eval_energy(&h, &e) - eval_energy(&h, &skew_added)).abs() <= 1e-12 * (1.0 + eval_energy(&h, &e)));
        }

        #[test]
        fn eigen_bounds_enclose_energy(h in random_spd(), f in arb_matrix3()) {
            let e = Sym3::sym(&f);
            let n2 = e.frobenius().powi(2);
            let q2 = 2.0 * eval_energy(&h, &e);
            let b = h.bounds();
            // Q = 1/2 C z.z, and alpha, beta bound 1/2 C.
            prop_assert!(b.alpha * n2 <= 0.5 * q2 * (1.0 + 1e-12) + 1e-14);
            prop_assert!(0.5 * q2 <= b.beta * n2 * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn relaxation_never_increases_energy(h in random_spd(), a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let m = Sym2::new(a, b, c);
            let relaxed = pointwise_relax(&h, &m).unwrap();
            prop_assert!(relaxed <= eval_energy(&h, &embed2to3(&m)) * (1.0 + 1e-12) + 1e-14);
            prop_assert!(relaxed >= -1e-12);
        }

        #[test]
        fn mandel_is_an_isometry(f in arb_matrix3()) {
            let e = Sym3::sym(&f);
            prop_assert!((e.frobenius() - e.mandel().norm()).abs() <= 1e-13 * (1.0 + e.frobenius()));
            prop_assert!((Sym3::from_mandel(&e.mandel()).to_matrix() - e.to_matrix()).amax() <= 1e-15);
        }
    }
}
