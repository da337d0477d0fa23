//! Metric geometry of the configuration manifold.
//!
//! A [`SystemModel`] bundles black-box evaluation maps for the kinetic
//! metric, the potential, the fundamental (generator) fields, and the
//! group action. Everything downstream (momentum map, connection, lifts)
//! is computed from these maps; derivatives are taken by central finite
//! differences so systems stay pluggable.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie::{DualVector, GroupElement, LieStructure};

pub type MetricFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
pub type PotentialFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
pub type GeneratorsFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
pub type ActionFn = dyn Fn(&GroupElement, &DVector<f64>) -> DVector<f64> + Send + Sync;
pub type SampleFn = dyn Fn(&mut ChaCha8Rng) -> DVector<f64> + Send + Sync;

/// Relative SPD tolerance used to flag singular group actions.
pub const SPD_EPS: f64 = 1e-9;

/// Central-difference step for a quantity of the given scale,
/// `eps^(1/3) * max(1, scale)`.
pub fn fd_step(scale: f64) -> f64 {
    f64::EPSILON.cbrt() * scale.abs().max(1.0)
}

/// A point of the velocity phase space.
#[derive(Debug, Clone)]
pub struct TangentSample {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl TangentSample {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Self {
        TangentSample { x, v }
    }
}

/// A natural Lagrangian system with a free isometric group action,
/// described by evaluation maps.
pub struct SystemModel {
    name: String,
    n: usize,
    lie: LieStructure,
    metric: Box<MetricFn>,
    potential: Box<PotentialFn>,
    generators: Box<GeneratorsFn>,
    action: std::sync::Arc<ActionFn>,
    sample: Box<SampleFn>,
}

impl std::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("k", &self.lie.dim())
            .finish()
    }
}

impl SystemModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        lie: LieStructure,
        metric: Box<MetricFn>,
        potential: Box<PotentialFn>,
        generators: Box<GeneratorsFn>,
        action: Box<ActionFn>,
        sample: Box<SampleFn>,
    ) -> Self {
        SystemModel {
            name: name.into(),
            n,
            lie,
            metric,
            potential,
            generators,
            action: std::sync::Arc::from(action),
            sample,
        }
    }

    /// Shared handle to the action map, for consumers that outlive a
    /// borrow of the model (e.g. transported shape paths).
    pub fn action_arc(&self) -> std::sync::Arc<ActionFn> {
        self.action.clone()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn group_dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn lie(&self) -> &LieStructure {
        &self.lie
    }

    /// Kinetic metric `g_ij(x)`.
    pub fn metric_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.metric)(x)
    }

    pub fn potential_at(&self, x: &DVector<f64>) -> f64 {
        (self.potential)(x)
    }

    /// The n-by-k matrix whose alpha-th column is the fundamental field
    /// `X_alpha` evaluated at `x`.
    pub fn generators_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.generators)(x)
    }

    /// Applies the right action `R_g` to a configuration.
    pub fn act(&self, g: &GroupElement, x: &DVector<f64>) -> DVector<f64> {
        (self.action)(g, x)
    }

    /// Draws a configuration from the system's audit sampling domain.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        (self.sample)(rng)
    }

    /// Tangent map `TR_g` applied to a velocity, by central differencing
    /// the action along `v`. Exact for actions affine in `x`.
    pub fn tangent_action(&self, g: &GroupElement, s: &TangentSample) -> DVector<f64> {
        let vnorm = s.v.norm();
        if vnorm == 0.0 {
            return DVector::zeros(self.n);
        }
        let h = fd_step(s.x.norm()) / vnorm.max(1.0);
        let plus = self.act(g, &(&s.x + &s.v * h));
        let minus = self.act(g, &(&s.x - &s.v * h));
        (plus - minus) / (2.0 * h)
    }

    /// `L(x, v) = 1/2 v^T g(x) v - U(x)`.
    pub fn lagrangian(&self, s: &TangentSample) -> f64 {
        let g = self.metric_at(&s.x);
        0.5 * s.v.dot(&(&g * &s.v)) - self.potential_at(&s.x)
    }

    /// Index-lowering operator: `(flat V)_i = g_ij(x) V^j`.
    pub fn flat(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.metric_at(x) * v
    }

    /// Gram matrix of the generators, `g_ab(x) = g(X_a, X_b)`. Errors when
    /// the matrix is numerically singular, which flags a non-free point of
    /// the action.
    pub fn gram(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let gram = self.gram_unchecked(x);
        let eig = gram.clone().symmetric_eigenvalues();
        let max_eig = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig.is_nan() || min_eig <= SPD_EPS * max_eig.max(0.0) {
            return Err(Error::SingularAction { min_eig, max_eig });
        }
        Ok(gram)
    }

    /// Gram matrix without the singularity check, symmetrized exactly.
    pub fn gram_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let gens = self.generators_at(x);
        let gram = gens.transpose() * self.metric_at(x) * &gens;
        (&gram + gram.transpose()) * 0.5
    }

    /// Momentum map components `P_alpha = g(X_alpha, v)`.
    pub fn momentum(&self, s: &TangentSample) -> DualVector {
        let gens = self.generators_at(&s.x);
        DualVector(gens.transpose() * self.flat(&s.x, &s.v))
    }

    /// `V^i dL/dv^i` by central differences in the fiber. This is the
    /// vertical-lift derivative, an independent route to the momentum
    /// components when `V` is a generator.
    pub fn vertical_lift_derivative<F>(&self, s: &TangentSample, field: F) -> f64
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let w = field(&s.x);
        let wnorm = w.norm();
        if wnorm == 0.0 {
            return 0.0;
        }
        let h = fd_step(s.v.norm()) / wnorm.max(1.0);
        let plus = self.lagrangian(&TangentSample::new(s.x.clone(), &s.v + &w * h));
        let minus = self.lagrangian(&TangentSample::new(s.x.clone(), &s.v - &w * h));
        (plus - minus) / (2.0 * h)
    }

    /// Directional derivative of `L` along the complete lift of a field,
    /// `V^i dL/dx^i + (d_j V^i) v^j dL/dv^i`, by central differences.
    /// Vanishes for generators of the symmetry (invariant Lagrangian).
    pub fn complete_lift_derivative<F>(&self, s: &TangentSample, field: F) -> f64
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let w = field(&s.x);
        let base_term = if w.norm() == 0.0 {
            0.0
        } else {
            let h = fd_step(s.x.norm()) / w.norm().max(1.0);
            let plus = self.lagrangian(&TangentSample::new(&s.x + &w * h, s.v.clone()));
            let minus = self.lagrangian(&TangentSample::new(&s.x - &w * h, s.v.clone()));
            (plus - minus) / (2.0 * h)
        };
        // (d_j V^i) v^j as a directional derivative of the field along v.
        let vnorm = s.v.norm();
        let fiber_term = if vnorm == 0.0 {
            0.0
        } else {
            let h = fd_step(s.x.norm()) / vnorm.max(1.0);
            let dv = (field(&(&s.x + &s.v * h)) - field(&(&s.x - &s.v * h))) / (2.0 * h);
            if dv.norm() == 0.0 {
                0.0
            } else {
                let h2 = fd_step(vnorm) / dv.norm().max(1.0);
                let plus = self.lagrangian(&TangentSample::new(s.x.clone(), &s.v + &dv * h2));
                let minus = self.lagrangian(&TangentSample::new(s.x.clone(), &s.v - &dv * h2));
                (plus - minus) / (2.0 * h2)
            }
        };
        base_term + fiber_term
    }

    /// Max-norm of the finite-difference Lie derivative of the metric along
    /// generator `alpha`. Near zero when the generator is Killing.
    pub fn killing_check(&self, x: &DVector<f64>, alpha: usize) -> f64 {
        let gens = self.generators_at(x);
        let xi: DVector<f64> = gens.column(alpha).into_owned();
        let h = fd_step(x.norm()) / xi.norm().max(1.0);
        // X^m d_m g_ij, directionally.
        let dg = if xi.norm() == 0.0 {
            DMatrix::zeros(self.n, self.n)
        } else {
            (self.metric_at(&(x + &xi * h)) - self.metric_at(&(x - &xi * h))) / (2.0 * h)
        };
        // Jacobian J^m_i = d X^m / d x^i of the generator column.
        let hj = fd_step(x.norm());
        let mut jac = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += hj;
            xm[i] -= hj;
            let col = (self.generators_at(&xp).column(alpha) - self.generators_at(&xm).column(alpha))
                / (2.0 * hj);
            jac.set_column(i, &col);
        }
        let g = self.metric_at(x);
        let lie_deriv = dg + jac.transpose() * &g + &g * jac;
        lie_deriv.iter().cloned().map(f64::abs).fold(0.0, f64::max)
    }

    /// Min eigenvalue of the metric at `x`; diagnostic for the SPD invariant.
    pub fn metric_min_eigenvalue(&self, x: &DVector<f64>) -> f64 {
        self.metric_at(x)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Residual of the right-action law `R_g2(R_g1 x) = R_(g1 g2) x`.
    pub fn action_law_residual(
        &self,
        g1: &GroupElement,
        g2: &GroupElement,
        x: &DVector<f64>,
    ) -> Result<f64> {
        let sequential = self.act(g2, &self.act(g1, x));
        let combined = self.act(&g1.compose(g2)?, x);
        Ok((sequential - combined).norm())
    }

    /// Residual of the invariance `U(R_g x) = U(x)`.
    pub fn potential_invariance_residual(&self, g: &GroupElement, x: &DVector<f64>) -> f64 {
        (self.potential_at(&self.act(g, x)) - self.potential_at(x)).abs()
    }

    /// Residual of momentum equivariance `P(TR_g v) = Ad*_g P(v)`.
    pub fn momentum_equivariance_residual(
        &self,
        s: &TangentSample,
        g: &GroupElement,
    ) -> Result<f64> {
        let moved = TangentSample::new(self.act(g, &s.x), self.tangent_action(g, s));
        let lhs = self.momentum(&moved);
        let rhs = self.lie.coadjoint(g, &self.momentum(s))?;
        Ok((lhs.0 - rhs.0).norm())
    }
}
