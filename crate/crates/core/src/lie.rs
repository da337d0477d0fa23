//! Finite-dimensional Lie algebra and group arithmetic.
//!
//! Covers exactly the kinds that show up in the builtin systems: abelian
//! groups R^k / SO(2), the rotation group SO(3), and direct products of
//! those handled blockwise. Group elements are stored concretely per kind
//! (offset vector, rotation matrix, list of blocks).
//!
//! Conventions: the so(3) basis is (E_i)_jk = -eps_{ijk}, so that
//! `a^i E_i` is the usual cross-product matrix `[a x]` and the bracket of
//! component vectors is the cross product. The dual pairing is the plain
//! component dot product, which fixes the coadjoint action as the
//! transpose of the adjoint matrix.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// An element of a Lie algebra, expressed in the basis `E_alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraVector(pub DVector<f64>);

/// An element of the dual algebra, expressed in the dual basis `E^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector(pub DVector<f64>);

impl AlgebraVector {
    pub fn zeros(k: usize) -> Self {
        AlgebraVector(DVector::zeros(k))
    }

    pub fn from_slice(c: &[f64]) -> Self {
        AlgebraVector(DVector::from_row_slice(c))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl DualVector {
    pub fn zeros(k: usize) -> Self {
        DualVector(DVector::zeros(k))
    }

    pub fn from_slice(c: &[f64]) -> Self {
        DualVector(DVector::from_row_slice(c))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Canonical pairing `<p, a>_0` in components.
    pub fn pair(&self, a: &AlgebraVector) -> f64 {
        self.0.dot(&a.0)
    }
}

/// Concrete representation of a group element, one variant per group kind.
#[derive(Debug, Clone)]
pub enum GroupElement {
    /// Offset in R^k (covers SO(2) as an angle).
    Abelian(DVector<f64>),
    /// Rotation matrix.
    So3(Matrix3<f64>),
    /// Blockwise element of a direct product.
    Product(Vec<GroupElement>),
}

impl GroupElement {
    /// Wraps a 3x3 matrix as an SO(3) element, rejecting matrices that are
    /// not orthogonal with determinant +1 to 1e-10.
    pub fn rotation(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).norm();
        let det_defect = (m.determinant() - 1.0).abs();
        if defect > 1e-10 || det_defect > 1e-10 {
            return Err(Error::NotARotation(defect.max(det_defect)));
        }
        Ok(GroupElement::So3(m))
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::Abelian(a), GroupElement::Abelian(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                Ok(GroupElement::Abelian(a + b))
            }
            (GroupElement::So3(a), GroupElement::So3(b)) => Ok(GroupElement::So3(a * b)),
            (GroupElement::Product(a), GroupElement::Product(b)) => {
                if a.len() != b.len() {
                    return Err(Error::KindMismatch);
                }
                let blocks = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| x.compose(y))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GroupElement::Product(blocks))
            }
            _ => Err(Error::KindMismatch),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Abelian(a) => GroupElement::Abelian(-a),
            GroupElement::So3(r) => GroupElement::So3(r.transpose()),
            GroupElement::Product(blocks) => {
                GroupElement::Product(blocks.iter().map(|b| b.inverse()).collect())
            }
        }
    }

    /// Max deviation from the group constraints (orthogonality for SO(3),
    /// zero for abelian blocks).
    pub fn constraint_defect(&self) -> f64 {
        match self {
            GroupElement::Abelian(_) => 0.0,
            GroupElement::So3(r) => (r.transpose() * r - Matrix3::identity()).norm(),
            GroupElement::Product(blocks) => blocks
                .iter()
                .map(|b| b.constraint_defect())
                .fold(0.0, f64::max),
        }
    }
}

/// Which concrete group a `LieStructure` describes.
#[derive(Debug, Clone)]
pub enum GroupKind {
    Abelian(usize),
    So3,
    Product(Vec<LieStructure>),
}

/// A finite-dimensional Lie algebra with its group kind and structure
/// constants `c^gamma_{alpha beta}`.
#[derive(Debug, Clone)]
pub struct LieStructure {
    kind: GroupKind,
    dim: usize,
    /// Flattened `c^gamma_{alpha beta}`, indexed `(gamma * k + alpha) * k + beta`.
    constants: Vec<f64>,
}

impl LieStructure {
    pub fn abelian(k: usize) -> Self {
        LieStructure {
            kind: GroupKind::Abelian(k),
            dim: k,
            constants: vec![0.0; k * k * k],
        }
    }

    pub fn so3() -> Self {
        let mut constants = vec![0.0; 27];
        for gamma in 0..3 {
            for alpha in 0..3 {
                for beta in 0..3 {
                    constants[(gamma * 3 + alpha) * 3 + beta] = epsilon(alpha, beta, gamma);
                }
            }
        }
        LieStructure {
            kind: GroupKind::So3,
            dim: 3,
            constants,
        }
    }

    pub fn product(parts: Vec<LieStructure>) -> Self {
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut constants = vec![0.0; dim * dim * dim];
        let mut offset = 0;
        for part in &parts {
            let k = part.dim;
            for gamma in 0..k {
                for alpha in 0..k {
                    for beta in 0..k {
                        let g = offset + gamma;
                        let a = offset + alpha;
                        let b = offset + beta;
                        constants[(g * dim + a) * dim + b] = part.constants[(gamma * k + alpha) * k + beta];
                    }
                }
            }
            offset += k;
        }
        LieStructure {
            kind: GroupKind::Product(parts),
            dim,
            constants,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn structure_constant(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.constants[(gamma * self.dim + alpha) * self.dim + beta]
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Abelian(k) => GroupElement::Abelian(DVector::zeros(*k)),
            GroupKind::So3 => GroupElement::So3(Matrix3::identity()),
            GroupKind::Product(parts) => {
                GroupElement::Product(parts.iter().map(|p| p.identity()).collect())
            }
        }
    }

    /// `[a, b]^gamma = c^gamma_{alpha beta} a^alpha b^beta`.
    pub fn bracket(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        let k = self.dim;
        let mut out = DVector::zeros(k);
        for gamma in 0..k {
            let mut s = 0.0;
            for alpha in 0..k {
                for beta in 0..k {
                    s += self.structure_constant(gamma, alpha, beta) * a.0[alpha] * b.0[beta];
                }
            }
            out[gamma] = s;
        }
        Ok(AlgebraVector(out))
    }

    /// Matrix of `Ad_g` in the basis `E_alpha`.
    pub fn adjoint_matrix(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        match (&self.kind, g) {
            (GroupKind::Abelian(k), GroupElement::Abelian(v)) => {
                if v.len() != *k {
                    return Err(Error::DimensionMismatch {
                        expected: *k,
                        got: v.len(),
                    });
                }
                Ok(DMatrix::identity(*k, *k))
            }
            (GroupKind::So3, GroupElement::So3(r)) => {
                let mut m = DMatrix::zeros(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        m[(i, j)] = r[(i, j)];
                    }
                }
                Ok(m)
            }
            (GroupKind::Product(parts), GroupElement::Product(blocks)) => {
                if parts.len() != blocks.len() {
                    return Err(Error::KindMismatch);
                }
                let mut m = DMatrix::zeros(self.dim, self.dim);
                let mut offset = 0;
                for (part, block) in parts.iter().zip(blocks) {
                    let sub = part.adjoint_matrix(block)?;
                    m.view_mut((offset, offset), (part.dim, part.dim)).copy_from(&sub);
                    offset += part.dim;
                }
                Ok(m)
            }
            _ => Err(Error::KindMismatch),
        }
    }

    /// `Ad_g a`.
    pub fn adjoint(&self, g: &GroupElement, a: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(a)?;
        Ok(AlgebraVector(self.adjoint_matrix(g)? * &a.0))
    }

    /// `Ad*_g p`, defined by `<Ad*_g p, a>_0 = <p, Ad_g a>_0`.
    pub fn coadjoint(&self, g: &GroupElement, p: &DualVector) -> Result<DualVector> {
        if p.0.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.0.len(),
            });
        }
        Ok(DualVector(self.adjoint_matrix(g)?.transpose() * &p.0))
    }

    /// Group exponential.
    pub fn exp(&self, a: &AlgebraVector) -> Result<GroupElement> {
        self.check_dim(a)?;
        match &self.kind {
            GroupKind::Abelian(_) => Ok(GroupElement::Abelian(a.0.clone())),
            GroupKind::So3 => Ok(GroupElement::So3(exp_so3(&Vector3::new(
                a.0[0], a.0[1], a.0[2],
            )))),
            GroupKind::Product(parts) => {
                let mut blocks = Vec::with_capacity(parts.len());
                let mut offset = 0;
                for part in parts {
                    let sub = AlgebraVector(a.0.rows(offset, part.dim).into_owned());
                    blocks.push(part.exp(&sub)?);
                    offset += part.dim;
                }
                Ok(GroupElement::Product(blocks))
            }
        }
    }

    /// Principal-branch group logarithm. Errors for SO(3) rotations at
    /// angle pi, where the branch is ambiguous.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector> {
        match (&self.kind, g) {
            (GroupKind::Abelian(k), GroupElement::Abelian(v)) => {
                if v.len() != *k {
                    return Err(Error::DimensionMismatch {
                        expected: *k,
                        got: v.len(),
                    });
                }
                Ok(AlgebraVector(v.clone()))
            }
            (GroupKind::So3, GroupElement::So3(r)) => {
                let w = log_so3(r)?;
                Ok(AlgebraVector(DVector::from_row_slice(&[w[0], w[1], w[2]])))
            }
            (GroupKind::Product(parts), GroupElement::Product(blocks)) => {
                if parts.len() != blocks.len() {
                    return Err(Error::KindMismatch);
                }
                let mut out = DVector::zeros(self.dim);
                let mut offset = 0;
                for (part, block) in parts.iter().zip(blocks) {
                    let sub = part.log(block)?;
                    out.rows_mut(offset, part.dim).copy_from(&sub.0);
                    offset += part.dim;
                }
                Ok(AlgebraVector(out))
            }
            _ => Err(Error::KindMismatch),
        }
    }

    /// Max antisymmetry residual `|c^g_{ab} + c^g_{ba}|` over all indices.
    pub fn antisymmetry_residual(&self) -> f64 {
        let k = self.dim;
        let mut worst = 0.0f64;
        for gamma in 0..k {
            for alpha in 0..k {
                for beta in 0..k {
                    let r = self.structure_constant(gamma, alpha, beta)
                        + self.structure_constant(gamma, beta, alpha);
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// Max Jacobi-identity residual over all index combinations.
    pub fn jacobi_residual(&self) -> f64 {
        let k = self.dim;
        let mut worst = 0.0f64;
        for alpha in 0..k {
            for beta in 0..k {
                for gamma in 0..k {
                    for nu in 0..k {
                        let mut s = 0.0;
                        for mu in 0..k {
                            s += self.structure_constant(mu, alpha, beta)
                                * self.structure_constant(nu, mu, gamma)
                                + self.structure_constant(mu, beta, gamma)
                                    * self.structure_constant(nu, mu, alpha)
                                + self.structure_constant(mu, gamma, alpha)
                                    * self.structure_constant(nu, mu, beta);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    fn check_dim(&self, a: &AlgebraVector) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.dim(),
            });
        }
        Ok(())
    }
}

/// Non-degenerate bilinear form on the algebra, used for the Ad*-to-Ad
/// correction. The form drops out of the final connection formula; it only
/// has to exist and be Ad-invariant.
#[derive(Debug, Clone)]
pub struct BilinearForm {
    mat: DMatrix<f64>,
}

impl BilinearForm {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DegenerateForm("matrix is not square".into()));
        }
        let sym_defect = (&mat - mat.transpose()).norm();
        if sym_defect > 1e-12 * (1.0 + mat.norm()) {
            return Err(Error::DegenerateForm(format!(
                "matrix is not symmetric (defect {sym_defect:.3e})"
            )));
        }
        let det = mat.clone().lu().determinant();
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateForm(format!("|det h| = {:.3e}", det.abs())));
        }
        Ok(BilinearForm { mat })
    }

    pub fn identity(k: usize) -> Self {
        BilinearForm {
            mat: DMatrix::identity(k, k),
        }
    }

    /// A positive multiple of the identity (Killing-proportional for so(3)).
    pub fn scaled_identity(k: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c != 0.0) {
            return Err(Error::DegenerateForm(format!("scale {c} is not usable")));
        }
        Ok(BilinearForm {
            mat: DMatrix::identity(k, k) * c,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `h^: a -> h(a, .)`, in components `(h^ a)_beta = h_{alpha beta} a^alpha`.
    pub fn hat(&self, a: &AlgebraVector) -> Result<DualVector> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.dim(),
            });
        }
        Ok(DualVector(self.mat.transpose() * &a.0))
    }

    /// Inverse of `hat`, by solving the linear system.
    pub fn hat_inverse(&self, p: &DualVector) -> Result<AlgebraVector> {
        if p.0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.0.len(),
            });
        }
        self.mat
            .transpose()
            .lu()
            .solve(&p.0)
            .map(AlgebraVector)
            .ok_or_else(|| Error::DegenerateForm("hat map is not invertible".into()))
    }

    /// Residual of the Ad-invariance condition `h(Ad_g a, Ad_g b) = h(a, b)`
    /// for a single group element, as `|Ad_g^T h Ad_g - h|`.
    pub fn ad_invariance_residual(&self, lie: &LieStructure, g: &GroupElement) -> Result<f64> {
        let ad = lie.adjoint_matrix(g)?;
        Ok((ad.transpose() * &self.mat * &ad - &self.mat).norm())
    }
}

/// Residual of `Ad*_g (h^ a) = h^(Ad_{g^-1} a)`, the equivariance property
/// an Ad-invariant form grants the hat map.
pub fn check_h_equivariance(
    h: &BilinearForm,
    lie: &LieStructure,
    g: &GroupElement,
    a: &AlgebraVector,
) -> Result<f64> {
    let lhs = lie.coadjoint(g, &h.hat(a)?)?;
    let rhs = h.hat(&lie.adjoint(&g.inverse(), a)?)?;
    Ok((lhs.0 - rhs.0).norm())
}

/// Applies `C^{-1}` to an algebra vector, turning the h-corrected 1-form
/// into one with the canonical reproducing property. A singular `C` means
/// some fundamental vector is horizontal, i.e. the action is not free.
pub fn canonicalize(c: &DMatrix<f64>, a_bar: &AlgebraVector) -> Result<AlgebraVector> {
    if c.nrows() != a_bar.dim() || !c.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a_bar.dim(),
            got: c.nrows(),
        });
    }
    let lu = c.clone().lu();
    if lu.determinant().abs() < 1e-12 * (1.0 + c.norm()).powi(c.nrows() as i32) {
        return Err(Error::VerticalDegeneracy);
    }
    lu.solve(&a_bar.0)
        .map(AlgebraVector)
        .ok_or(Error::VerticalDegeneracy)
}

/// Cross-product matrix `[a x]`, which is `a^i E_i` in our so(3) basis.
pub fn hat3(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0)
}

/// Rodrigues formula, series-expanded near zero angle.
pub fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat3(w);
    let (a, b) = if theta < 1e-5 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Principal-branch rotation log. Near angle pi the axis is recovered from
/// the diagonal of `(R + I) / 2`; exactly at pi the sign is undecidable and
/// an error is returned.
pub fn log_so3(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let cos_theta = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let vee = Vector3::new(
        (r[(2, 1)] - r[(1, 2)]) / 2.0,
        (r[(0, 2)] - r[(2, 0)]) / 2.0,
        (r[(1, 0)] - r[(0, 1)]) / 2.0,
    );
    if theta < 1e-7 {
        // sin(theta)/theta ~ 1 here; vee already carries the angle.
        return Ok(vee);
    }
    if std::f64::consts::PI - theta < 1e-11 {
        return Err(Error::AmbiguousLogBranch);
    }
    if std::f64::consts::PI - theta < 1e-4 {
        // Axis from the largest diagonal entry of (R + I)/2 ~ a a^T.
        let b = (r + Matrix3::identity()) / 2.0;
        let i = (0..3)
            .max_by(|&p, &q| b[(p, p)].partial_cmp(&b[(q, q)]).unwrap())
            .unwrap();
        let mut axis = Vector3::new(b[(0, i)], b[(1, i)], b[(2, i)]) / b[(i, i)].sqrt();
        axis /= axis.norm();
        if axis.dot(&vee) < 0.0 {
            axis = -axis;
        }
        return Ok(axis * theta);
    }
    Ok(vee * (theta / theta.sin()))
}

/// Nearest rotation matrix in the Frobenius sense (polar factor via SVD).
pub fn project_so3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u_fix = u;
        u_fix.column_mut(2).scale_mut(-1.0);
        r = u_fix * vt;
    }
    r
}

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
