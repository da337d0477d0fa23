//! Horizontal lifts, loop holonomy, momentum audits, and numerical
//! curvature.
//!
//! A prescribed shape motion is lifted by integrating the reconstruction
//! equation `g^-1 g' = -Ad_{g^-1} A(s')` (plain `w' = -A(s')` for abelian
//! blocks) with classical fixed-step RK4; rotation blocks are reprojected
//! onto SO(3) after every step. A first-order Lie-Euler integrator is kept
//! alongside as an independent cross-check.

use nalgebra::{DVector, Matrix3, Vector3};

use crate::connection::connection_at;
use crate::error::{Error, Result};
use crate::geometry::{fd_step, SystemModel, TangentSample};
use crate::lie::{
    hat3, project_so3, AlgebraVector, DualVector, GroupElement, GroupKind, LieStructure,
};

/// A time-parameterized curve of shape deformations on `[0, 1]`, given as
/// a section (representative curve) in configuration space.
pub struct ShapePath {
    n: usize,
    samples: usize,
    section: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    velocity: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    /// Per-coordinate periods for closure checks; `0` marks a
    /// non-periodic coordinate. `None` means all coordinates are linear.
    periods: Option<DVector<f64>>,
}

impl std::fmt::Debug for ShapePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShapePath")
            .field("n", &self.n)
            .field("samples", &self.samples)
            .finish()
    }
}

impl ShapePath {
    /// Builds a path from analytic section and velocity closures.
    pub fn from_closures(
        n: usize,
        samples: usize,
        section: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        velocity: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        ShapePath {
            n,
            samples: samples.max(2),
            section: Box::new(section),
            velocity: Box::new(velocity),
            periods: None,
        }
    }

    /// Declares some coordinates periodic (angles); a `0` entry keeps the
    /// coordinate linear. Endpoint gaps are then measured on the quotient,
    /// so a loop that winds an angle by a full period still counts as
    /// closed.
    pub fn with_periods(mut self, periods: DVector<f64>) -> Self {
        self.periods = Some(periods);
        self
    }

    /// Builds a path from a section closure alone; velocities come from
    /// central differences in time.
    pub fn from_section(
        n: usize,
        samples: usize,
        section: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        let section = std::sync::Arc::new(section);
        let for_velocity = section.clone();
        let h = f64::EPSILON.cbrt();
        ShapePath {
            n,
            samples: samples.max(2),
            section: Box::new(move |t| section(t)),
            velocity: Box::new(move |t| (for_velocity(t + h) - for_velocity(t - h)) / (2.0 * h)),
            periods: None,
        }
    }

    /// Builds a path from uniformly spaced samples on `[0, 1]`, using a
    /// C1 cubic Hermite interpolant with finite-difference tangents.
    pub fn from_samples(points: Vec<DVector<f64>>) -> Result<Self> {
        let count = points.len();
        if count < 2 {
            return Err(Error::InvalidParameter(
                "a sampled path needs at least 2 rows".into(),
            ));
        }
        let n = points[0].len();
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidParameter(
                "sampled path rows have inconsistent widths".into(),
            ));
        }
        let h = 1.0 / (count - 1) as f64;
        // Centered tangents inside, one-sided at the ends.
        let mut tangents = Vec::with_capacity(count);
        for i in 0..count {
            let t = if i == 0 {
                (&points[1] - &points[0]) / h
            } else if i == count - 1 {
                (&points[count - 1] - &points[count - 2]) / h
            } else {
                (&points[i + 1] - &points[i - 1]) / (2.0 * h)
            };
            tangents.push(t);
        }
        let interp = move |t: f64, derivative: bool| -> DVector<f64> {
            let t = t.clamp(0.0, 1.0);
            let seg = ((t / h) as usize).min(count - 2);
            let u = (t - seg as f64 * h) / h;
            let (p0, p1) = (&points[seg], &points[seg + 1]);
            let (m0, m1) = (&tangents[seg] * h, &tangents[seg + 1] * h);
            if derivative {
                let d00 = 6.0 * u * u - 6.0 * u;
                let d10 = 3.0 * u * u - 4.0 * u + 1.0;
                let d01 = -6.0 * u * u + 6.0 * u;
                let d11 = 3.0 * u * u - 2.0 * u;
                (p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11) / h
            } else {
                let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
                let h10 = u.powi(3) - 2.0 * u * u + u;
                let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
                let h11 = u.powi(3) - u * u;
                p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11
            }
        };
        let interp = std::sync::Arc::new(interp);
        let for_velocity = interp.clone();
        Ok(ShapePath {
            n,
            samples: count,
            section: Box::new(move |t| interp(t, false)),
            velocity: Box::new(move |t| for_velocity(t, true)),
            periods: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        (self.section)(t)
    }

    pub fn velocity_at(&self, t: f64) -> DVector<f64> {
        (self.velocity)(t)
    }

    /// Endpoint gap `|s(1) - s(0)|`, with periodic coordinates reduced to
    /// their fundamental domain first.
    pub fn endpoint_gap(&self) -> f64 {
        let mut diff = self.at(1.0) - self.at(0.0);
        if let Some(periods) = &self.periods {
            for (d, &p) in diff.iter_mut().zip(periods.iter()) {
                if p > 0.0 {
                    *d -= (*d / p).round() * p;
                }
            }
        }
        diff.norm()
    }

    /// Largest section velocity norm over a uniform probe grid.
    pub fn velocity_scale(&self, probes: usize) -> f64 {
        (0..=probes)
            .map(|i| self.velocity_at(i as f64 / probes as f64).norm())
            .fold(0.0, f64::max)
    }

    /// Time-warps the path by `t -> w(t)`; `w_dot` is the derivative of
    /// the warp. The traced curve is unchanged, only its clock is.
    pub fn warp(
        self,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
        w_dot: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let ShapePath {
            n,
            samples,
            section,
            velocity,
            periods,
        } = self;
        let w = std::sync::Arc::new(w);
        let w_for_velocity = w.clone();
        ShapePath {
            n,
            samples,
            section: Box::new(move |t| section(w(t))),
            velocity: Box::new(move |t| velocity(w_for_velocity(t)) * w_dot(t)),
            periods,
        }
    }

    /// Transports the whole section by a fixed group element. Lifting the
    /// moved section realizes a change of initial fiber point. Velocities
    /// go through the tangent of the action, by central differences in
    /// space (exact for affine actions).
    pub fn transported(self, m: &SystemModel, g: GroupElement) -> Self {
        let ShapePath {
            n,
            samples,
            section,
            velocity,
            periods,
        } = self;
        let section: std::sync::Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync> =
            std::sync::Arc::from(section);
        let section_for_velocity = section.clone();
        let act = m.action_arc();
        let act_for_velocity = act.clone();
        let g_for_velocity = g.clone();
        let h = f64::EPSILON.cbrt();
        ShapePath {
            n,
            samples,
            section: Box::new(move |t| act(&g, &section(t))),
            velocity: Box::new(move |t| {
                let x = section_for_velocity(t);
                let v = velocity(t);
                let vnorm = v.norm();
                if vnorm == 0.0 {
                    return DVector::zeros(x.len());
                }
                let step = h * x.norm().max(1.0) / vnorm.max(1.0);
                (act_for_velocity(&g_for_velocity, &(&x + &v * step))
                    - act_for_velocity(&g_for_velocity, &(&x - &v * step)))
                    / (2.0 * step)
            }),
            periods,
        }
    }

    pub fn tolerance_checked_loop(&self) -> Result<()> {
        let gap = self.endpoint_gap();
        let scale = 1.0 + self.at(0.0).norm();
        if gap > 1e-9 * scale {
            return Err(Error::PathNotClosed { gap });
        }
        Ok(())
    }
}

/// The lift of a shape path: sampled configurations, per-sample group
/// element (and its log relative to the start), and momentum components
/// recovered from finite-difference velocities.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub group_elements: Vec<GroupElement>,
    pub group_log: Vec<AlgebraVector>,
    pub momenta: Vec<DualVector>,
}

/// One component sample of the curvature two-form.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub x: DVector<f64>,
    pub plane: (usize, usize),
    pub value: AlgebraVector,
}

/// Integrator choice for the reconstruction ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical fixed-step RK4 with per-step SO(3) reprojection.
    Rk4,
    /// First-order `g <- g exp(h xi)`; exact on the group, used as an
    /// independent cross-check.
    LieEuler,
}

/// Options for horizontal lifts.
#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    /// Integration steps per unit time.
    pub steps: usize,
    pub integrator: Integrator,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            steps: 4096,
            integrator: Integrator::Rk4,
        }
    }
}

impl LiftOptions {
    pub fn with_steps(steps: usize) -> Self {
        LiftOptions {
            steps,
            ..Default::default()
        }
    }
}

/// Horizontally lifts a shape path: solves the reconstruction ODE from
/// `g0` and assembles the trajectory `gamma(t) = R_{g(t)} s(t)`.
pub fn horizontal_lift(
    m: &SystemModel,
    path: &ShapePath,
    g0: &GroupElement,
    opts: &LiftOptions,
) -> Result<Trajectory> {
    if path.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: path.dim(),
        });
    }
    let steps = opts.steps.max(2);
    let h = 1.0 / steps as f64;
    let lie = m.lie();

    // A(s'(t)) along the section; the only place the connection enters.
    let conn_value = |t: f64| -> Result<AlgebraVector> {
        let x = path.at(t);
        let conn = connection_at(m, &x).map_err(|e| match e {
            Error::SingularAction { min_eig, .. } => Error::SingularActionOnPath { t, min_eig },
            other => other,
        })?;
        Ok(conn.pair(&path.velocity_at(t)))
    };

    let mut state = flatten(g0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut elements = Vec::with_capacity(steps + 1);
    times.push(0.0);
    elements.push(g0.clone());

    match opts.integrator {
        Integrator::Rk4 => {
            for step in 0..steps {
                let t = step as f64 * h;
                let a1 = conn_value(t)?;
                let a_mid = conn_value(t + h / 2.0)?;
                let a4 = conn_value(t + h)?;
                let k1 = state_derivative(lie, &state, &a1);
                let k2 = state_derivative(lie, &axpy(&state, &k1, h / 2.0), &a_mid);
                let k3 = state_derivative(lie, &axpy(&state, &k2, h / 2.0), &a_mid);
                let k4 = state_derivative(lie, &axpy(&state, &k3, h), &a4);
                for i in 0..state.len() {
                    state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                reproject(lie, &mut state);
                times.push((step + 1) as f64 * h);
                elements.push(unflatten(lie, &state));
            }
        }
        Integrator::LieEuler => {
            let mut g = g0.clone();
            for step in 0..steps {
                let t = step as f64 * h;
                let a = conn_value(t)?;
                let xi = lie.adjoint(&g.inverse(), &a)?;
                let increment = lie.exp(&AlgebraVector(-xi.0 * h))?;
                g = g.compose(&increment)?;
                times.push((step + 1) as f64 * h);
                elements.push(g.clone());
            }
        }
    }

    let g0_inv = g0.inverse();
    let points: Vec<DVector<f64>> = times
        .iter()
        .zip(&elements)
        .map(|(&t, g)| m.act(g, &path.at(t)))
        .collect();
    let group_log = elements
        .iter()
        .map(|g| lie.log(&g.compose(&g0_inv)?))
        .collect::<Result<Vec<_>>>()?;
    let velocities = fd_velocities(&times, &points);
    let momenta = points
        .iter()
        .zip(&velocities)
        .map(|(x, v)| m.momentum(&TangentSample::new(x.clone(), v.clone())))
        .collect();

    Ok(Trajectory {
        times,
        points,
        group_elements: elements,
        group_log,
        momenta,
    })
}

/// Net group displacement `g(1) g(0)^-1` of the horizontal lift of a
/// closed shape path.
pub fn holonomy(m: &SystemModel, path: &ShapePath, opts: &LiftOptions) -> Result<GroupElement> {
    path.tolerance_checked_loop()?;
    let traj = horizontal_lift(m, path, &m.lie().identity(), opts)?;
    let first = traj.group_elements.first().unwrap();
    let last = traj.group_elements.last().unwrap();
    last.compose(&first.inverse())
}

/// Max momentum norm along a trajectory, with velocities recovered by
/// fourth-order finite differences of the sampled points. Horizontal
/// lifts keep this at integration-error level; rigid (vertical) motions
/// show their conserved nonzero momentum instead.
pub fn momentum_audit(m: &SystemModel, traj: &Trajectory) -> f64 {
    let velocities = fd_velocities(&traj.times, &traj.points);
    traj.points
        .iter()
        .zip(&velocities)
        .map(|(x, v)| m.momentum(&TangentSample::new(x.clone(), v.clone())).norm())
        .fold(0.0, f64::max)
}

/// Max connection-pairing norm `|A(gamma')|` along a trajectory, the
/// horizontality residual companion to [`momentum_audit`].
pub fn pairing_audit(m: &SystemModel, traj: &Trajectory) -> Result<f64> {
    let velocities = fd_velocities(&traj.times, &traj.points);
    let mut worst = 0.0f64;
    for (x, v) in traj.points.iter().zip(&velocities) {
        let conn = connection_at(m, x)?;
        worst = worst.max(conn.pair(v).norm());
    }
    Ok(worst)
}

/// Curvature component `F^a_{ij} = d_i A^a_j - d_j A^a_i + c^a_{bc} A^b_i A^c_j`,
/// with the derivative terms from central differences of the connection
/// components.
pub fn curvature_numeric(
    m: &SystemModel,
    x: &DVector<f64>,
    plane: (usize, usize),
) -> Result<CurvatureSample> {
    let (i, j) = plane;
    let n = m.dim();
    if i >= n || j >= n {
        return Err(Error::InvalidParameter(format!(
            "plane indices ({i}, {j}) out of range for n = {n}"
        )));
    }
    let k = m.group_dim();
    let h = fd_step(x.norm());
    let conn_at = |q: &DVector<f64>| connection_at(m, q);

    let mut xp = x.clone();
    let mut xm = x.clone();
    xp[i] += h;
    xm[i] -= h;
    let di = (conn_at(&xp)?.components - conn_at(&xm)?.components) / (2.0 * h);
    let mut yp = x.clone();
    let mut ym = x.clone();
    yp[j] += h;
    ym[j] -= h;
    let dj = (conn_at(&yp)?.components - conn_at(&ym)?.components) / (2.0 * h);

    let here = conn_at(x)?.components;
    let lie = m.lie();
    let mut value = DVector::zeros(k);
    for a in 0..k {
        let mut f = di[(a, j)] - dj[(a, i)];
        for b in 0..k {
            for c in 0..k {
                f += lie.structure_constant(a, b, c) * here[(b, i)] * here[(c, j)];
            }
        }
        value[a] = f;
    }
    Ok(CurvatureSample {
        x: x.clone(),
        plane,
        value: AlgebraVector(value),
    })
}

/// Fourth-order finite-difference velocities on a uniform time grid
/// (falls back to second order when fewer than five samples exist).
pub fn fd_velocities(times: &[f64], points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let count = points.len();
    if count < 2 {
        return points.iter().map(|p| DVector::zeros(p.len())).collect();
    }
    let h = times[1] - times[0];
    if count < 5 {
        return (0..count)
            .map(|i| {
                if i == 0 {
                    (&points[1] - &points[0]) / h
                } else if i == count - 1 {
                    (&points[count - 1] - &points[count - 2]) / h
                } else {
                    (&points[i + 1] - &points[i - 1]) / (2.0 * h)
                }
            })
            .collect();
    }
    (0..count)
        .map(|i| {
            if i >= 2 && i + 2 < count {
                (-&points[i + 2] + &points[i + 1] * 8.0 - &points[i - 1] * 8.0 + &points[i - 2])
                    / (12.0 * h)
            } else if i < 2 {
                one_sided_4th(&points[i..i + 5], h)
            } else {
                -one_sided_4th_rev(&points[i - 4..=i], h)
            }
        })
        .collect()
}

fn one_sided_4th(p: &[DVector<f64>], h: f64) -> DVector<f64> {
    (&p[0] * -25.0 + &p[1] * 48.0 - &p[2] * 36.0 + &p[3] * 16.0 - &p[4] * 3.0) / (12.0 * h)
}

fn one_sided_4th_rev(p: &[DVector<f64>], h: f64) -> DVector<f64> {
    (&p[4] * -25.0 + &p[3] * 48.0 - &p[2] * 36.0 + &p[1] * 16.0 - &p[0] * 3.0) / (12.0 * h)
}

// -- flattened group state for the matrix-kind RK4 --------------------------

fn flatten(g: &GroupElement) -> Vec<f64> {
    match g {
        GroupElement::Abelian(v) => v.iter().cloned().collect(),
        GroupElement::So3(r) => r.iter().cloned().collect(),
        GroupElement::Product(blocks) => blocks.iter().flat_map(flatten).collect(),
    }
}

fn unflatten(lie: &LieStructure, state: &[f64]) -> GroupElement {
    match lie.kind() {
        GroupKind::Abelian(k) => GroupElement::Abelian(DVector::from_row_slice(&state[..*k])),
        GroupKind::So3 => GroupElement::So3(Matrix3::from_column_slice(&state[..9])),
        GroupKind::Product(parts) => {
            let mut blocks = Vec::with_capacity(parts.len());
            let mut offset = 0;
            for part in parts {
                let len = state_len(part);
                blocks.push(unflatten(part, &state[offset..offset + len]));
                offset += len;
            }
            GroupElement::Product(blocks)
        }
    }
}

fn state_len(lie: &LieStructure) -> usize {
    match lie.kind() {
        GroupKind::Abelian(k) => *k,
        GroupKind::So3 => 9,
        GroupKind::Product(parts) => parts.iter().map(state_len).sum(),
    }
}

/// Right-hand side of the reconstruction ODE in the flat representation:
/// `w' = -a` for abelian blocks and `B' = -[a x] B` for rotation blocks
/// (the spatial form of `g^-1 g' = -Ad_{g^-1} a`).
fn state_derivative(lie: &LieStructure, state: &[f64], a: &AlgebraVector) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    fill_derivative(lie, state, &a.0, &mut out, 0, 0);
    out
}

fn fill_derivative(
    lie: &LieStructure,
    state: &[f64],
    a: &DVector<f64>,
    out: &mut [f64],
    state_offset: usize,
    algebra_offset: usize,
) {
    match lie.kind() {
        GroupKind::Abelian(k) => {
            for i in 0..*k {
                out[state_offset + i] = -a[algebra_offset + i];
            }
        }
        GroupKind::So3 => {
            let b = Matrix3::from_column_slice(&state[state_offset..state_offset + 9]);
            let spin = hat3(&Vector3::new(
                a[algebra_offset],
                a[algebra_offset + 1],
                a[algebra_offset + 2],
            ));
            let db = -spin * b;
            out[state_offset..state_offset + 9].copy_from_slice(db.as_slice());
        }
        GroupKind::Product(parts) => {
            let mut so = state_offset;
            let mut ao = algebra_offset;
            for part in parts {
                fill_derivative(part, state, a, out, so, ao);
                so += state_len(part);
                ao += part.dim();
            }
        }
    }
}

fn reproject(lie: &LieStructure, state: &mut [f64]) {
    match lie.kind() {
        GroupKind::Abelian(_) => {}
        GroupKind::So3 => {
            let b = Matrix3::from_column_slice(&state[..9]);
            let r = project_so3(&b);
            state[..9].copy_from_slice(r.as_slice());
        }
        GroupKind::Product(parts) => {
            let mut offset = 0;
            for part in parts {
                reproject(part, &mut state[offset..]);
                offset += state_len(part);
            }
        }
    }
}

fn axpy(state: &[f64], derivative: &[f64], scale: f64) -> Vec<f64> {
    state
        .iter()
        .zip(derivative)
        .map(|(s, d)| s + d * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{self, BoardSpec, CatLoopParams, DiscSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn board_lift_matches_closed_form() {
        // A = dx + (m2/(m1+m2)) dxi, so the lift of xi(t) = A sin(2 pi t)
        // carries w(t) = -(1/4) A sin(2 pi t) for masses (3, 1).
        let m = systems::build_board(&BoardSpec::free(3.0, 1.0)).unwrap();
        let path = systems::board_sine(0.3, 0.5);
        let traj =
            horizontal_lift(&m, &path, &m.lie().identity(), &LiftOptions::with_steps(256)).unwrap();
        let quarter = &traj.group_log[64];
        assert_relative_eq!(quarter.0[0], -0.125, epsilon = 1e-10);
        // The board coordinate of the lifted trajectory moves with w.
        assert_relative_eq!(traj.points[64][0], 0.3 - 0.125, epsilon = 1e-10);
        assert_relative_eq!(traj.points[64][1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn board_loop_has_trivial_holonomy() {
        let m = systems::build_board(&BoardSpec::free(3.0, 1.0)).unwrap();
        let path = systems::board_sine(0.0, 0.8);
        let hol = holonomy(&m, &path, &LiftOptions::with_steps(512)).unwrap();
        match hol {
            GroupElement::Abelian(w) => assert!(w.norm() < 1e-10),
            other => panic!("unexpected holonomy kind {other:?}"),
        }
    }

    #[test]
    fn disc_circle_holonomy_matches_coefficient_times_angle() {
        // One full turn drags the disc by -2 pi m r^2 / (I + m r^2).
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let path = systems::disc_circle_loop(1.0, 1.0).unwrap();
        let hol = holonomy(&m, &path, &LiftOptions::with_steps(512)).unwrap();
        match hol {
            GroupElement::Abelian(w) => assert_relative_eq!(w[0], -PI, epsilon = 1e-10),
            other => panic!("unexpected holonomy kind {other:?}"),
        }
    }

    #[test]
    fn open_path_is_rejected_as_a_loop() {
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let path = systems::disc_circle_loop(1.0, 0.5).unwrap();
        assert!(matches!(
            holonomy(&m, &path, &LiftOptions::default()),
            Err(Error::PathNotClosed { .. })
        ));
    }

    #[test]
    fn reparameterization_leaves_holonomy_unchanged() {
        let m = systems::build_disc(&DiscSpec::free(2.0, 1.0)).unwrap();
        let opts = LiftOptions::with_steps(1024);
        let straight = holonomy(&m, &systems::disc_circle_loop(1.3, 1.0).unwrap(), &opts).unwrap();
        // Smooth clock with w(0) = 0, w(1) = 1 and non-constant speed.
        let warped = systems::disc_circle_loop(1.3, 1.0)
            .unwrap()
            .warp(|t| t - 0.15 * (2.0 * PI * t).sin(), |t| {
                1.0 - 0.15 * 2.0 * PI * (2.0 * PI * t).cos()
            });
        let warped_hol = holonomy(&m, &warped, &opts).unwrap();
        match (straight, warped_hol) {
            (GroupElement::Abelian(a), GroupElement::Abelian(b)) => {
                assert_relative_eq!(a[0], b[0], epsilon = 1e-9)
            }
            _ => panic!("unexpected holonomy kinds"),
        }
    }

    #[test]
    fn lie_euler_agrees_on_constant_pairing() {
        // A(s') is constant along the circle, so both integrators solve
        // the ODE exactly and must agree to rounding.
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let path = systems::disc_circle_loop(2.0, 1.0).unwrap();
        let rk4 = holonomy(&m, &path, &LiftOptions::with_steps(128)).unwrap();
        let euler = holonomy(
            &m,
            &path,
            &LiftOptions {
                steps: 128,
                integrator: Integrator::LieEuler,
            },
        )
        .unwrap();
        match (rk4, euler) {
            (GroupElement::Abelian(a), GroupElement::Abelian(b)) => {
                assert_relative_eq!(a[0], b[0], epsilon = 1e-12)
            }
            _ => panic!("unexpected holonomy kinds"),
        }
    }

    #[test]
    fn lift_is_horizontal_to_audit_tolerance() {
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let path = systems::disc_circle_loop(1.5, 1.0).unwrap();
        let traj =
            horizontal_lift(&m, &path, &m.lie().identity(), &LiftOptions::with_steps(2048)).unwrap();
        let scale = path.velocity_scale(64).max(1.0);
        assert!(momentum_audit(&m, &traj) / scale < 1e-10);
        assert!(pairing_audit(&m, &traj).unwrap() / scale < 1e-10);
    }

    #[test]
    fn vertical_motion_keeps_its_conserved_momentum() {
        // A rigid disc spin alpha(t) = t is vertical: its momentum is the
        // constant I + m r^2, which the audit must report, not hide.
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let steps = 512;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let points: Vec<DVector<f64>> = times
            .iter()
            .map(|&t| DVector::from_row_slice(&[2.0, 0.0, t]))
            .collect();
        let traj = Trajectory {
            times,
            points,
            group_elements: vec![],
            group_log: vec![],
            momenta: vec![],
        };
        assert_relative_eq!(momentum_audit(&m, &traj), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn cat_loop_lift_reorients_about_the_plane_normal() {
        let params = CatLoopParams::default();
        let m = systems::cat_system(&params).unwrap();
        let path = systems::cat_loop(&params).unwrap();
        let hol = holonomy(&m, &path, &LiftOptions::default()).unwrap();
        let GroupElement::So3(r) = hol else {
            panic!("rotational holonomy expected");
        };
        let axis_angle = crate::lie::log_so3(&r).unwrap();
        // All shapes are planar (z = 0), so the net rotation is about z
        // and nonzero.
        assert!(axis_angle[0].abs() < 1e-8);
        assert!(axis_angle[1].abs() < 1e-8);
        assert!(axis_angle[2].abs() > 1e-3);
    }

    #[test]
    fn fd_velocities_converge_at_fourth_order() {
        let curve = |t: f64| (2.0 * PI * t).sin();
        let derivative = |t: f64| 2.0 * PI * (2.0 * PI * t).cos();
        let worst = |n: usize| -> f64 {
            let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let points: Vec<DVector<f64>> = times
                .iter()
                .map(|&t| DVector::from_element(1, curve(t)))
                .collect();
            fd_velocities(&times, &points)
                .iter()
                .zip(&times)
                .map(|(v, &t)| (v[0] - derivative(t)).abs())
                .fold(0.0, f64::max)
        };
        let order = (worst(32) / worst(64)).log2();
        assert!(order > 3.5, "measured order {order}");
    }

    #[test]
    fn fd_velocities_short_input_falls_back() {
        let times = [0.0, 0.5, 1.0];
        let points: Vec<DVector<f64>> = times
            .iter()
            .map(|&t| DVector::from_element(1, t * t))
            .collect();
        let v = fd_velocities(&times, &points);
        // Central difference of t^2 at 0.5 is exact.
        assert_relative_eq!(v[1][0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn curvature_is_antisymmetric_in_the_plane() {
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        let x = DVector::from_row_slice(&[1.2, 0.4, 0.0]);
        let fwd = curvature_numeric(&m, &x, (0, 1)).unwrap();
        let rev = curvature_numeric(&m, &x, (1, 0)).unwrap();
        assert_relative_eq!(fwd.value.0[0], -rev.value.0[0], epsilon = 1e-12);
    }

    #[test]
    fn disc_curvature_matches_radial_derivative_of_coefficient() {
        // F_{r phi} = d/dr [m r^2 / (I + m r^2)] = 2 m r I / (I + m r^2)^2.
        let m = systems::build_disc(&DiscSpec::free(1.0, 1.0)).unwrap();
        for r in [0.6, 1.0, 1.7] {
            let x = DVector::from_row_slice(&[r, 0.2, 0.1]);
            let sample = curvature_numeric(&m, &x, (0, 1)).unwrap();
            let expected = 2.0 * r / (1.0 + r * r).powi(2);
            assert_relative_eq!(sample.value.0[0], expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn board_curvature_vanishes() {
        let m = systems::build_board(&BoardSpec::free(3.0, 1.0)).unwrap();
        let x = DVector::from_row_slice(&[0.4, -0.9]);
        let sample = curvature_numeric(&m, &x, (0, 1)).unwrap();
        assert!(sample.value.norm() < 1e-10);
    }

    #[test]
    fn curvature_rejects_out_of_range_plane() {
        let m = systems::build_board(&BoardSpec::free(1.0, 1.0)).unwrap();
        assert!(matches!(
            curvature_numeric(&m, &DVector::zeros(2), (0, 5)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sampled_path_reproduces_smooth_sections() {
        let rows: Vec<DVector<f64>> = (0..=200)
            .map(|i| {
                let t = i as f64 / 200.0;
                DVector::from_row_slice(&[(2.0 * PI * t).sin(), (2.0 * PI * t).cos()])
            })
            .collect();
        let path = ShapePath::from_samples(rows).unwrap();
        // The interpolant is limited by its finite-difference tangents:
        // O(h^3) in position, O(h^2) in velocity.
        for probe in 0..10 {
            let t = 0.05 + 0.09 * probe as f64;
            assert!((path.at(t)[0] - (2.0 * PI * t).sin()).abs() < 1e-5);
            assert!((path.velocity_at(t)[0] - 2.0 * PI * (2.0 * PI * t).cos()).abs() < 1e-2);
        }
    }

    #[test]
    fn sampled_path_needs_two_rows() {
        assert!(ShapePath::from_samples(vec![DVector::zeros(2)]).is_err());
    }

    #[test]
    fn singular_configuration_on_path_is_reported_with_time() {
        // A section that drives the cat system through collinearity.
        let m = systems::build_nbody(&systems::NBodySpec {
            masses: vec![1.0, 1.0, 1.0],
            parts: systems::SymmetryParts::Rotations,
        })
        .unwrap();
        let path = ShapePath::from_closures(
            9,
            64,
            |t| {
                // Two particles swing to the x-axis as t -> 1/2.
                let theta = PI / 3.0 * (1.0 - (2.0 * PI * t).cos()) / 2.0 * 0.0
                    + PI / 3.0 * (1.0 - 2.0 * (t - 0.5).abs());
                DVector::from_row_slice(&[
                    theta.cos(),
                    theta.sin(),
                    0.0,
                    theta.cos(),
                    -theta.sin(),
                    0.0,
                    -2.0 * theta.cos(),
                    0.0,
                    0.0,
                ])
            },
            |_| DVector::zeros(9),
        );
        // At t = 0 and t = 1 the configuration is collinear on the x-axis.
        assert!(matches!(
            horizontal_lift(&m, &path, &m.lie().identity(), &LiftOptions::with_steps(8)),
            Err(Error::SingularActionOnPath { .. })
        ));
    }
}
