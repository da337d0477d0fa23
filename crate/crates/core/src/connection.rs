//! The momentum-map connection form and its pointwise properties.
//!
//! At a configuration `x` the connection has components
//! `A^a_i = (gram^-1)^{ab} (g_ij X^j_b)`, where `gram` is the Gram matrix
//! of the generators in the kinetic metric. The vertical/horizontal split
//! it induces is the g-orthogonal one, and pairing with a velocity
//! vanishes exactly when all momentum components do.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{fd_step, SystemModel};
use crate::lie::{canonicalize, AlgebraVector, BilinearForm, DualVector, GroupElement};

/// The k-by-n component matrix of the connection at one configuration.
#[derive(Debug, Clone)]
pub struct ConnectionEval {
    pub x: DVector<f64>,
    /// `A^a_i`, row `a` (algebra index), column `i` (coordinate index).
    pub components: DMatrix<f64>,
}

impl ConnectionEval {
    /// `A(v)`, the algebra-valued pairing with a tangent vector.
    pub fn pair(&self, v: &DVector<f64>) -> AlgebraVector {
        AlgebraVector(&self.components * v)
    }

    /// Residual of the reproducing property `A(X_a) = a` against the
    /// generator matrix at the same point.
    pub fn reproducing_residual(&self, generators: &DMatrix<f64>) -> f64 {
        let k = self.components.nrows();
        let product = &self.components * generators;
        (product - DMatrix::identity(k, k)).abs().max()
    }
}

/// Assembles the connection components at `x` by solving the SPD Gram
/// system, one right-hand side per coordinate differential.
pub fn connection_at(m: &SystemModel, x: &DVector<f64>) -> Result<ConnectionEval> {
    let gram = m.gram(x)?;
    let gens = m.generators_at(x);
    let rhs = gens.transpose() * m.metric_at(x);
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| singular_from_gram(&gram))?;
    Ok(ConnectionEval {
        x: x.clone(),
        components: chol.solve(&rhs),
    })
}

fn singular_from_gram(gram: &DMatrix<f64>) -> Error {
    let eig = gram.clone().symmetric_eigenvalues();
    Error::SingularAction {
        min_eig: eig.iter().cloned().fold(f64::INFINITY, f64::min),
        max_eig: eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Projects a velocity onto the horizontal subspace,
/// `hor(v) = v - X(x) A(x) v`.
pub fn horizontal_projection(
    m: &SystemModel,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let conn = connection_at(m, x)?;
    let gens = m.generators_at(x);
    Ok(v - gens * conn.pair(v).0)
}

/// Pulls the connection at `R_g x` back through the (finite-difference)
/// tangent of the action and compares with `Ad_{g^-1} A(x)`. Returns the
/// max-norm residual of the equivariance identity `R_g^* A = Ad_{g^-1} A`.
pub fn verify_equivariance(m: &SystemModel, x: &DVector<f64>, g: &GroupElement) -> Result<f64> {
    let conn_here = connection_at(m, x)?;
    let moved = m.act(g, x);
    let conn_there = connection_at(m, &moved)?;

    // Tangent matrix of R_g at x, column by column.
    let n = m.dim();
    let h = fd_step(x.norm());
    let mut tangent = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        tangent.set_column(i, &((m.act(g, &xp) - m.act(g, &xm)) / (2.0 * h)));
    }

    let pulled_back = &conn_there.components * tangent;
    let ad_inv = m.lie().adjoint_matrix(&g.inverse())?;
    let expected = ad_inv * &conn_here.components;
    Ok((pulled_back - expected).abs().max())
}

/// Computes the connection twice, once through the full correction
/// pipeline `C^-1 . h^-1 . P~` and once by the direct Gram-inverse
/// formula, and returns the componentwise max difference. The bilinear
/// form must be non-degenerate and Ad-invariant; the result does not
/// depend on which admissible form is chosen.
pub fn verify_h_independence(m: &SystemModel, x: &DVector<f64>, h: &BilinearForm) -> Result<f64> {
    let k = m.group_dim();
    if h.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: h.dim(),
        });
    }
    ensure_ad_invariant(m, h)?;

    let gens = m.generators_at(x);
    // Momentum 1-form components P~_{a i} = (flat X_a)_i.
    let p_tilde = gens.transpose() * m.metric_at(x);

    let gram = m.gram(x)?;
    let h_inv = h
        .matrix()
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateForm("h is not invertible".into()))?;
    // C^b_a = gram_{a mu} h^{mu b}; as a matrix acting on components,
    // row index b, column index a.
    let c_matrix = (&gram * &h_inv).transpose();

    let mut pipeline = DMatrix::zeros(k, m.dim());
    for i in 0..m.dim() {
        let p_col = DualVector(p_tilde.column(i).into_owned());
        let corrected = h.hat_inverse(&p_col)?;
        let canonical = canonicalize(&c_matrix, &corrected)?;
        pipeline.set_column(i, &canonical.0);
    }

    let direct = connection_at(m, x)?;
    Ok((pipeline - direct.components).abs().max())
}

fn ensure_ad_invariant(m: &SystemModel, h: &BilinearForm) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x41d);
    let lie = m.lie();
    for _ in 0..8 {
        let a = AlgebraVector(DVector::from_fn(lie.dim(), |_, _| {
            use rand::Rng;
            rng.random::<f64>() * 2.0 - 1.0
        }));
        let g = lie.exp(&a)?;
        let res = h.ad_invariance_residual(lie, &g)?;
        if res > 1e-8 * (1.0 + h.matrix().norm()) {
            return Err(Error::DegenerateForm(format!(
                "form is not Ad-invariant (residual {res:.3e})"
            )));
        }
    }
    Ok(())
}
