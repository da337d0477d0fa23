//! Builtin systems (board, gramophone disc, N-particle) plus a generic
//! table-driven system, and the shape-path generators that feed the
//! dynamics layer.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::ShapePath;
use crate::error::{Error, Result};
use crate::geometry::SystemModel;
use crate::lie::{GroupElement, LieStructure};

/// Which subgroup of rigid motions an N-particle system is reduced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryParts {
    Translations,
    Rotations,
    /// Translations and rotations side by side, treated blockwise.
    Both,
}

/// A point mass sliding on a floating board; translation symmetry.
pub struct BoardSpec {
    pub m1: f64,
    pub m2: f64,
    /// Interaction potential in the relative coordinate, `U(xi)`.
    pub potential: Option<std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl BoardSpec {
    pub fn free(m1: f64, m2: f64) -> Self {
        BoardSpec {
            m1,
            m2,
            potential: None,
        }
    }
}

/// A point mass on a rotating disc; SO(2) symmetry. Coordinates are
/// `(r, phi, alpha)` with `alpha` the disc orientation.
pub struct DiscSpec {
    pub inertia: f64,
    pub mass: f64,
    /// Interaction potential in the relative coordinates, `U(r, phi)`.
    pub potential: Option<std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

impl DiscSpec {
    pub fn free(inertia: f64, mass: f64) -> Self {
        DiscSpec {
            inertia,
            mass,
            potential: None,
        }
    }
}

/// N free particles in R^3 reduced by rigid motions.
#[derive(Debug, Clone)]
pub struct NBodySpec {
    pub masses: Vec<f64>,
    pub parts: SymmetryParts,
}

/// A constant-coefficient abelian system given by tables: metric and
/// generator matrices, plus an optional invariant quadratic potential
/// `U(x) = 1/2 x^T Q x` with `Q X = 0`.
#[derive(Debug, Clone)]
pub struct GenericSpec {
    pub n: usize,
    pub k: usize,
    pub metric: DMatrix<f64>,
    pub generators: DMatrix<f64>,
    pub potential_quadratic: Option<DMatrix<f64>>,
}

pub fn build_board(spec: &BoardSpec) -> Result<SystemModel> {
    if !(spec.m1 > 0.0 && spec.m2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "board masses must be positive, got ({}, {})",
            spec.m1, spec.m2
        )));
    }
    let (m1, m2) = (spec.m1, spec.m2);
    let metric = DMatrix::from_row_slice(2, 2, &[m1 + m2, m2, m2, m2]);
    let pot: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync> = match &spec.potential {
        Some(p) => p.clone(),
        None => std::sync::Arc::new(|_| 0.0),
    };
    Ok(SystemModel::new(
        "board",
        2,
        LieStructure::abelian(1),
        Box::new(move |_| metric.clone()),
        Box::new(move |x: &DVector<f64>| pot(x[1])),
        Box::new(|_| DMatrix::from_row_slice(2, 1, &[1.0, 0.0])),
        Box::new(|g, x| match g {
            GroupElement::Abelian(b) => {
                let mut y = x.clone();
                y[0] += b[0];
                y
            }
            _ => x.clone(),
        }),
        Box::new(|rng: &mut ChaCha8Rng| {
            DVector::from_fn(2, |_, _| rng.random::<f64>() * 4.0 - 2.0)
        }),
    ))
}

pub fn build_disc(spec: &DiscSpec) -> Result<SystemModel> {
    if !(spec.inertia > 0.0 && spec.mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "disc inertia and mass must be positive, got ({}, {})",
            spec.inertia, spec.mass
        )));
    }
    let (inertia, mass) = (spec.inertia, spec.mass);
    let pot: std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync> = match &spec.potential {
        Some(p) => p.clone(),
        None => std::sync::Arc::new(|_, _| 0.0),
    };
    Ok(SystemModel::new(
        "disc",
        3,
        LieStructure::abelian(1),
        Box::new(move |x: &DVector<f64>| {
            let mr2 = mass * x[0] * x[0];
            DMatrix::from_row_slice(
                3,
                3,
                &[mass, 0.0, 0.0, 0.0, mr2, mr2, 0.0, mr2, inertia + mr2],
            )
        }),
        Box::new(move |x: &DVector<f64>| pot(x[0], x[1])),
        Box::new(|_| DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0])),
        Box::new(|g, x| match g {
            GroupElement::Abelian(b) => {
                let mut y = x.clone();
                y[2] += b[0];
                y
            }
            _ => x.clone(),
        }),
        Box::new(|rng: &mut ChaCha8Rng| {
            DVector::from_row_slice(&[
                0.4 + 1.8 * rng.random::<f64>(),
                (rng.random::<f64>() * 2.0 - 1.0) * PI,
                (rng.random::<f64>() * 2.0 - 1.0) * PI,
            ])
        }),
    ))
}

/// Inertia tensor of a mass configuration about the origin,
/// `I_ij = sum_a m_a (delta_ij r_a^2 - x^i_a x^j_a)`.
pub fn inertia_tensor(masses: &[f64], x: &DVector<f64>) -> Matrix3<f64> {
    let mut inertia = Matrix3::zeros();
    for (a, &mass) in masses.iter().enumerate() {
        let r = Vector3::new(x[3 * a], x[3 * a + 1], x[3 * a + 2]);
        inertia += mass * (Matrix3::identity() * r.norm_squared() - r * r.transpose());
    }
    inertia
}

pub fn build_nbody(spec: &NBodySpec) -> Result<SystemModel> {
    let count = spec.masses.len();
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    if spec.masses.iter().any(|&m| m.is_nan() || m <= 0.0) {
        return Err(Error::InvalidParameter(
            "all particle masses must be positive".into(),
        ));
    }
    let n = 3 * count;
    let masses = spec.masses.clone();
    let parts = spec.parts;

    let lie = match parts {
        SymmetryParts::Translations => LieStructure::abelian(3),
        SymmetryParts::Rotations => LieStructure::so3(),
        SymmetryParts::Both => {
            LieStructure::product(vec![LieStructure::abelian(3), LieStructure::so3()])
        }
    };
    let name = match parts {
        SymmetryParts::Translations => "nbody-translations",
        SymmetryParts::Rotations => "nbody-rotations",
        SymmetryParts::Both => "nbody-both",
    };

    let metric_masses = masses.clone();
    let metric = Box::new(move |_: &DVector<f64>| {
        let mut g = DMatrix::zeros(n, n);
        for (a, &mass) in metric_masses.iter().enumerate() {
            for i in 0..3 {
                g[(3 * a + i, 3 * a + i)] = mass;
            }
        }
        g
    });

    let generators = Box::new(move |x: &DVector<f64>| {
        let k = match parts {
            SymmetryParts::Both => 6,
            _ => 3,
        };
        let mut gens = DMatrix::zeros(n, k);
        let mut col = 0;
        if matches!(parts, SymmetryParts::Translations | SymmetryParts::Both) {
            for i in 0..3 {
                for a in 0..count {
                    gens[(3 * a + i, col)] = 1.0;
                }
                col += 1;
            }
        }
        if matches!(parts, SymmetryParts::Rotations | SymmetryParts::Both) {
            for i in 0..3 {
                for a in 0..count {
                    let r = Vector3::new(x[3 * a], x[3 * a + 1], x[3 * a + 2]);
                    let field = -Vector3::ith(i, 1.0).cross(&r);
                    for j in 0..3 {
                        gens[(3 * a + j, col)] = field[j];
                    }
                }
                col += 1;
            }
        }
        gens
    });

    let action = Box::new(move |g: &GroupElement, x: &DVector<f64>| {
        let apply = |shift: Option<&DVector<f64>>, rot: Option<&Matrix3<f64>>| {
            let mut y = DVector::zeros(x.len());
            for a in 0..x.len() / 3 {
                let mut r = Vector3::new(x[3 * a], x[3 * a + 1], x[3 * a + 2]);
                if let Some(b) = rot {
                    r = b.transpose() * r;
                }
                if let Some(s) = shift {
                    r += Vector3::new(s[0], s[1], s[2]);
                }
                for j in 0..3 {
                    y[3 * a + j] = r[j];
                }
            }
            y
        };
        match g {
            GroupElement::Abelian(b) => apply(Some(b), None),
            GroupElement::So3(r) => apply(None, Some(r)),
            GroupElement::Product(blocks) => match (&blocks[0], &blocks[1]) {
                (GroupElement::Abelian(b), GroupElement::So3(r)) => apply(Some(b), Some(r)),
                _ => x.clone(),
            },
        }
    });

    let sample_masses = masses;
    let sample = Box::new(move |rng: &mut ChaCha8Rng| loop {
        let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        if matches!(parts, SymmetryParts::Both) {
            // Keep the center of mass at the origin so the translational
            // and rotational blocks of the Gram matrix decouple, matching
            // the separate treatment of the two subgroups.
            let total: f64 = sample_masses.iter().sum();
            let mut com = Vector3::zeros();
            for (a, &mass) in sample_masses.iter().enumerate() {
                com += mass * Vector3::new(x[3 * a], x[3 * a + 1], x[3 * a + 2]);
            }
            com /= total;
            for a in 0..count {
                for j in 0..3 {
                    x[3 * a + j] -= com[j];
                }
            }
        }
        if matches!(parts, SymmetryParts::Rotations | SymmetryParts::Both) {
            let eig = inertia_tensor(&sample_masses, &x).symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < 0.05 * max {
                continue;
            }
        }
        return x;
    });

    Ok(SystemModel::new(
        name, n, lie, metric, Box::new(|_| 0.0), generators, action, sample,
    ))
}

pub fn build_generic(spec: &GenericSpec) -> Result<SystemModel> {
    let (n, k) = (spec.n, spec.k);
    if spec.metric.shape() != (n, n) {
        return Err(Error::InvalidParameter(format!(
            "metric must be {n}x{n}, got {:?}",
            spec.metric.shape()
        )));
    }
    if spec.generators.shape() != (n, k) {
        return Err(Error::InvalidParameter(format!(
            "generators must be {n}x{k}, got {:?}",
            spec.generators.shape()
        )));
    }
    let sym_defect = (&spec.metric - spec.metric.transpose()).norm();
    if sym_defect > 1e-12 * (1.0 + spec.metric.norm()) {
        return Err(Error::InvalidParameter("metric is not symmetric".into()));
    }
    let min_eig = spec
        .metric
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig.is_nan() || min_eig <= 0.0 {
        return Err(Error::MetricNotSpd(min_eig));
    }
    if let Some(q) = &spec.potential_quadratic {
        if q.shape() != (n, n) {
            return Err(Error::InvalidParameter(format!(
                "potential matrix must be {n}x{n}, got {:?}",
                q.shape()
            )));
        }
        let inv_defect = (q * &spec.generators).norm();
        if inv_defect > 1e-10 * (1.0 + q.norm()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic potential is not invariant: |Q X| = {inv_defect:.3e}"
            )));
        }
    }

    let metric = spec.metric.clone();
    let gens = spec.generators.clone();
    let gens_for_action = gens.clone();
    let q = spec.potential_quadratic.clone();
    Ok(SystemModel::new(
        "generic",
        n,
        LieStructure::abelian(k),
        Box::new(move |_| metric.clone()),
        Box::new(move |x: &DVector<f64>| match &q {
            Some(q) => 0.5 * x.dot(&(q * x)),
            None => 0.0,
        }),
        Box::new(move |_| gens.clone()),
        Box::new(move |g, x| match g {
            GroupElement::Abelian(b) => x + &gens_for_action * b,
            _ => x.clone(),
        }),
        Box::new(move |rng: &mut ChaCha8Rng| {
            DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
        }),
    ))
}

/// The builtin systems whose full invariant set (including equivariance)
/// holds: board, disc, and the two single-subgroup N-particle models.
pub fn audit_builtins() -> Vec<SystemModel> {
    vec![
        build_board(&BoardSpec::free(3.0, 1.0)).unwrap(),
        build_disc(&DiscSpec::free(1.0, 1.0)).unwrap(),
        build_nbody(&NBodySpec {
            masses: vec![1.0, 2.0, 0.5],
            parts: SymmetryParts::Translations,
        })
        .unwrap(),
        build_nbody(&NBodySpec {
            masses: vec![1.0, 2.0, 0.5],
            parts: SymmetryParts::Rotations,
        })
        .unwrap(),
    ]
}

/// All builtins, adding the combined translations-plus-rotations model.
/// Its connection is assembled blockwise from the subgroup forms; the
/// mixed-group equivariance identity is not claimed for it.
pub fn all_builtins() -> Vec<SystemModel> {
    let mut models = audit_builtins();
    models.push(
        build_nbody(&NBodySpec {
            masses: vec![1.0, 2.0, 0.5],
            parts: SymmetryParts::Both,
        })
        .unwrap(),
    );
    models
}

// -- shape-path generators --------------------------------------------------

/// One counterclockwise pass (or `turns` of them) around the disc at
/// constant radius, `r(t) = r0, phi(t) = 2 pi turns t`.
pub fn disc_circle_loop(r0: f64, turns: f64) -> Result<ShapePath> {
    if r0.is_nan() || r0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "circle radius must be positive, got {r0}"
        )));
    }
    let omega = 2.0 * PI * turns;
    // phi and the disc angle alpha are angles; winding them by full
    // periods still closes the loop.
    Ok(ShapePath::from_closures(
        3,
        256,
        move |t| DVector::from_row_slice(&[r0, omega * t, 0.0]),
        move |_| DVector::from_row_slice(&[0.0, omega, 0.0]),
    )
    .with_periods(DVector::from_row_slice(&[0.0, 2.0 * PI, 2.0 * PI])))
}

/// A purely radial out-and-back excursion `r0 -> r1 -> r0` at fixed angle.
pub fn radial_excursion(r0: f64, r1: f64) -> Result<ShapePath> {
    if !(r0 > 0.0 && r1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radii must be positive, got ({r0}, {r1})"
        )));
    }
    let half_span = (r1 - r0) / 2.0;
    Ok(ShapePath::from_closures(
        3,
        256,
        move |t| {
            DVector::from_row_slice(&[r0 + half_span * (1.0 - (2.0 * PI * t).cos()), 0.0, 0.0])
        },
        move |t| {
            DVector::from_row_slice(&[half_span * 2.0 * PI * (2.0 * PI * t).sin(), 0.0, 0.0])
        },
    ))
}

/// A closed sinusoidal excursion of the point mass along the board,
/// `xi(t) = amplitude sin(2 pi t)` with the board coordinate held in the
/// section.
pub fn board_sine(x0: f64, amplitude: f64) -> ShapePath {
    ShapePath::from_closures(
        2,
        256,
        move |t| DVector::from_row_slice(&[x0, amplitude * (2.0 * PI * t).sin()]),
        move |t| DVector::from_row_slice(&[0.0, amplitude * 2.0 * PI * (2.0 * PI * t).cos()]),
    )
}

/// Parameters of the default three-particle reorientation gait. The hub
/// particle holds two legs; one leg breathes in length while the other
/// swings in angle, a quarter period out of phase. Two independent shape
/// coordinates are essential: with both leg lengths fixed the shape would
/// depend only on the relative angle (rotating both legs together is a
/// rigid rotation), every gait would retrace a one-dimensional shape
/// curve, and the holonomy would vanish identically.
#[derive(Debug, Clone)]
pub struct CatLoopParams {
    pub masses: [f64; 3],
    /// Rest length of the legs from the hub particle.
    pub leg: f64,
    /// Fixed direction of the breathing leg, and rest angle of the
    /// swinging one.
    pub base_angles: (f64, f64),
    /// Drives both oscillations: the swing angle directly, the breathing
    /// length at half strength (relative to the rest length).
    pub amplitude: f64,
}

impl Default for CatLoopParams {
    fn default() -> Self {
        CatLoopParams {
            masses: [1.0, 1.0, 1.0],
            leg: 1.0,
            base_angles: (0.0, 2.0 * PI / 3.0),
            amplitude: 0.35,
        }
    }
}

/// The rotations-reduced three-particle system the cat loop lives in.
pub fn cat_system(params: &CatLoopParams) -> Result<SystemModel> {
    build_nbody(&NBodySpec {
        masses: params.masses.to_vec(),
        parts: SymmetryParts::Rotations,
    })
}

/// Builds the closed center-of-mass-fixed gait
/// `rho(t) = leg (1 + A/2 sin(2 pi t))` along the fixed direction
/// `theta1_0`, `theta2(t) = theta2_0 + A cos(2 pi t)` at radius `leg`,
/// and audits it for collinear (singular-inertia) configurations.
pub fn cat_loop(params: &CatLoopParams) -> Result<ShapePath> {
    let masses = params.masses;
    if masses.iter().any(|&m| m.is_nan() || m <= 0.0) {
        return Err(Error::InvalidParameter(
            "cat loop masses must be positive".into(),
        ));
    }
    let leg = params.leg;
    if leg.is_nan() || leg <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "leg length must be positive, got {leg}"
        )));
    }
    let (base1, base2) = params.base_angles;
    let amp = params.amplitude;
    let total: f64 = masses.iter().sum();

    let positions = move |t: f64| -> (DVector<f64>, DVector<f64>) {
        let phase = 2.0 * PI * t;
        let rho = leg * (1.0 + 0.5 * amp * phase.sin());
        let drho = leg * 0.5 * amp * 2.0 * PI * phase.cos();
        let theta2 = base2 + amp * phase.cos();
        let dtheta2 = -amp * 2.0 * PI * phase.sin();

        let raw = [
            Vector3::new(rho * base1.cos(), rho * base1.sin(), 0.0),
            Vector3::new(leg * theta2.cos(), leg * theta2.sin(), 0.0),
            Vector3::zeros(),
        ];
        let raw_dot = [
            Vector3::new(base1.cos(), base1.sin(), 0.0) * drho,
            Vector3::new(-leg * theta2.sin(), leg * theta2.cos(), 0.0) * dtheta2,
            Vector3::zeros(),
        ];
        let com = (raw[0] * masses[0] + raw[1] * masses[1] + raw[2] * masses[2]) / total;
        let com_dot =
            (raw_dot[0] * masses[0] + raw_dot[1] * masses[1] + raw_dot[2] * masses[2]) / total;

        let mut x = DVector::zeros(9);
        let mut v = DVector::zeros(9);
        for a in 0..3 {
            let p = raw[a] - com;
            let pd = raw_dot[a] - com_dot;
            for j in 0..3 {
                x[3 * a + j] = p[j];
                v[3 * a + j] = pd[j];
            }
        }
        (x, v)
    };

    // Collinearity audit over a probe grid. Planar configurations always
    // have one small in-plane inertia eigenvalue (the out-of-plane one is
    // their sum), so the threshold only has to catch genuine collapse to
    // a line, where the smallest eigenvalue goes to zero.
    for step in 0..=512 {
        let t = step as f64 / 512.0;
        let (x, _) = positions(t);
        let eig = inertia_tensor(&masses, &x).symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 1e-3 * max {
            return Err(Error::SingularActionOnPath { t, min_eig: min });
        }
    }

    let for_velocity = positions;
    Ok(ShapePath::from_closures(
        9,
        256,
        move |t| positions(t).0,
        move |t| for_velocity(t).1,
    ))
}
