//! TOML run-configuration schema and its validation.
//!
//! The document has nested sections `[system]`, `[path]`, `[integrator]`,
//! `[run]`, `[curvature]`, `[describe]`; every section except `[system]`
//! is optional, with defaults `steps = 4096`, `tolerance = 1e-8`,
//! `seed = 0`. Sampled paths live in CSV side-files referenced by name.

use std::path::PathBuf;

use serde::Deserialize;

#[derive(Debug)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub path: Option<PathConfig>,
    pub integrator: IntegratorConfig,
    pub run: RunSection,
    pub curvature: Option<CurvatureConfig>,
    pub describe_point: Option<Vec<f64>>,
    /// Explicit `--tol` flag; when present it replaces every check's
    /// built-in tolerance in `verify`.
    pub tol_flag: Option<f64>,
}

#[derive(Debug)]
pub struct SystemConfig {
    pub kind: SystemKind,
}

#[derive(Debug)]
pub enum SystemKind {
    Board {
        m1: f64,
        m2: f64,
    },
    Disc {
        inertia: f64,
        mass: f64,
    },
    NBody {
        masses: Vec<f64>,
        parts: String,
    },
    Generic {
        n: usize,
        k: usize,
        metric: Vec<Vec<f64>>,
        generators: Vec<Vec<f64>>,
        potential: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Debug)]
pub struct PathConfig {
    pub kind: PathKind,
}

#[derive(Debug)]
pub enum PathKind {
    DiscCircle { r0: f64, turns: f64 },
    Radial { r0: f64, r1: f64 },
    BoardSine { x0: f64, amplitude: f64 },
    Cat {
        amplitude: f64,
        leg: f64,
        base_angles: (f64, f64),
    },
    Csv { file: String },
}

#[derive(Debug)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub tolerance: f64,
    pub method: String,
}

#[derive(Debug)]
pub struct RunSection {
    pub seed: u64,
    pub points: usize,
    pub out: Option<PathBuf>,
    pub format: String,
}

#[derive(Debug)]
pub struct CurvatureConfig {
    pub plane: [usize; 2],
    pub axis: usize,
    pub range: [f64; 2],
    pub count: usize,
    pub base: Vec<f64>,
}

// -- raw serde layer ---------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    system: RawSystem,
    path: Option<RawPath>,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    run: RawRun,
    curvature: Option<RawCurvature>,
    describe: Option<RawDescribe>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: String,
    m1: Option<f64>,
    m2: Option<f64>,
    inertia: Option<f64>,
    mass: Option<f64>,
    masses: Option<Vec<f64>>,
    parts: Option<String>,
    n: Option<usize>,
    k: Option<usize>,
    metric: Option<Vec<Vec<f64>>>,
    generators: Option<Vec<Vec<f64>>>,
    potential: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    kind: String,
    r0: Option<f64>,
    r1: Option<f64>,
    turns: Option<f64>,
    x0: Option<f64>,
    amplitude: Option<f64>,
    leg: Option<f64>,
    base_angles: Option<[f64; 2]>,
    file: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    steps: Option<usize>,
    tolerance: Option<f64>,
    method: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurvature {
    plane: [usize; 2],
    axis: usize,
    range: [f64; 2],
    count: Option<usize>,
    base: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescribe {
    point: Vec<f64>,
}

fn require<T>(field: Option<T>, section: &str, name: &str) -> Result<T, String> {
    field.ok_or_else(|| format!("[{section}] is missing required field '{name}'"))
}

pub fn parse(raw: &str) -> Result<RunConfig, String> {
    let raw: Raw = toml::from_str(raw).map_err(|e| e.to_string())?;

    let kind = match raw.system.kind.as_str() {
        "board" => SystemKind::Board {
            m1: require(raw.system.m1, "system", "m1")?,
            m2: require(raw.system.m2, "system", "m2")?,
        },
        "disc" => SystemKind::Disc {
            inertia: require(raw.system.inertia, "system", "inertia")?,
            mass: require(raw.system.mass, "system", "mass")?,
        },
        "nbody" => SystemKind::NBody {
            masses: require(raw.system.masses, "system", "masses")?,
            parts: raw.system.parts.unwrap_or_else(|| "both".into()),
        },
        "generic" => SystemKind::Generic {
            n: require(raw.system.n, "system", "n")?,
            k: require(raw.system.k, "system", "k")?,
            metric: require(raw.system.metric, "system", "metric")?,
            generators: require(raw.system.generators, "system", "generators")?,
            potential: raw.system.potential,
        },
        other => return Err(format!("[system] unknown kind '{other}'")),
    };

    let path = raw
        .path
        .map(|p| -> Result<PathConfig, String> {
            let kind = match p.kind.as_str() {
                "disc-circle" => PathKind::DiscCircle {
                    r0: require(p.r0, "path", "r0")?,
                    turns: p.turns.unwrap_or(1.0),
                },
                "radial" => PathKind::Radial {
                    r0: require(p.r0, "path", "r0")?,
                    r1: require(p.r1, "path", "r1")?,
                },
                "board-sine" => PathKind::BoardSine {
                    x0: p.x0.unwrap_or(0.0),
                    amplitude: require(p.amplitude, "path", "amplitude")?,
                },
                "cat" => {
                    let base = p.base_angles.unwrap_or([0.0, 2.0 * std::f64::consts::PI / 3.0]);
                    PathKind::Cat {
                        amplitude: p.amplitude.unwrap_or(0.35),
                        leg: p.leg.unwrap_or(1.0),
                        base_angles: (base[0], base[1]),
                    }
                }
                "csv" => PathKind::Csv {
                    file: require(p.file, "path", "file")?,
                },
                other => return Err(format!("[path] unknown kind '{other}'")),
            };
            Ok(PathConfig { kind })
        })
        .transpose()?;

    let curvature = raw.curvature.map(|c| CurvatureConfig {
        plane: c.plane,
        axis: c.axis,
        range: c.range,
        count: c.count.unwrap_or(40),
        base: c.base,
    });

    Ok(RunConfig {
        system: SystemConfig { kind },
        path,
        integrator: IntegratorConfig {
            steps: raw.integrator.steps.unwrap_or(4096),
            tolerance: raw.integrator.tolerance.unwrap_or(1e-8),
            method: raw.integrator.method.unwrap_or_else(|| "rk4".into()),
        },
        run: RunSection {
            seed: raw.run.seed.unwrap_or(0),
            points: raw.run.points.unwrap_or(200),
            out: raw.run.out,
            format: raw.run.format.unwrap_or_else(|| "record".into()),
        },
        curvature,
        describe_point: raw.describe.map(|d| d.point),
        tol_flag: None,
    })
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.integrator.steps < 2 {
            return Err("[integrator] steps must be at least 2".into());
        }
        if self.integrator.tolerance.is_nan() || self.integrator.tolerance <= 0.0 {
            return Err("[integrator] tolerance must be positive".into());
        }
        match self.integrator.method.as_str() {
            "rk4" | "lie-euler" => {}
            other => return Err(format!("[integrator] unknown method '{other}'")),
        }
        match self.run.format.as_str() {
            "csv" | "record" => {}
            other => return Err(format!("[run] unknown format '{other}'")),
        }
        if self.run.points == 0 {
            return Err("[run] points must be positive".into());
        }
        if let Some(c) = &self.curvature {
            if c.count == 0 {
                return Err("[curvature] count must be positive".into());
            }
            if c.plane[0] == c.plane[1] {
                return Err("[curvature] plane indices must differ".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_disc_config_gets_defaults() {
        let cfg = parse(
            "[system]\nkind = \"disc\"\ninertia = 1.0\nmass = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.integrator.steps, 4096);
        assert_eq!(cfg.integrator.tolerance, 1e-8);
        assert_eq!(cfg.run.seed, 0);
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_field_is_named_in_the_diagnostic() {
        let err = parse("[system]\nkind = \"board\"\nm1 = 1.0\n").unwrap_err();
        assert!(err.contains("m2"), "diagnostic was: {err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = parse("[system]\nkind = \"disc\"\ninertia = 1.0\nmass = 1.0\nbogus = 3\n")
            .unwrap_err();
        assert!(err.contains("bogus"), "diagnostic was: {err}");
    }

    #[test]
    fn bad_format_fails_validation() {
        let cfg = parse(
            "[system]\nkind = \"disc\"\ninertia = 1.0\nmass = 1.0\n[run]\nformat = \"xml\"\n",
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().contains("xml"));
    }
}
