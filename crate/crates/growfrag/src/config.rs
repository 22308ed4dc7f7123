//! Flat key-value run configuration.
//!
//! The format is one `key = value` pair per line, `#` comments, no sections.
//! Unknown keys are hard errors so typos never silently fall back to
//! defaults. [`RunConfig::manifest`] renders the fully-resolved
//! configuration (defaults included) as a valid config file; re-running from
//! the manifest reproduces the run.
//!
//! ```text
//! tau.kind    = constant        # constant | power_law | affine | tabulated
//! tau.coeffs  = 1.0             # constant: v | power_law: c, p | affine: c0, c1
//! beta.kind   = power_law
//! beta.coeffs = 1.0, 1.0
//! kernel.kind = uniform         # uniform | mitosis | homogeneous | mixture | tabulated
//! grid.r      = 20.0
//! grid.n      = 2000
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::grid::GridKind;
use crate::problem::{KernelSpec, ProblemSpec, RateSpec};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("invalid model: {0}")]
    Model(String),
}

const KNOWN_KEYS: &[&str] = &[
    "tau.kind",
    "tau.coeffs",
    "tau.table",
    "tau.support_min",
    "beta.kind",
    "beta.coeffs",
    "beta.table",
    "beta.support_min",
    "kernel.kind",
    "kernel.r",
    "kernel.alpha",
    "kernel.gamma",
    "kernel.c",
    "kernel.table",
    "kernel.mix_weight",
    "model.n",
    "model.mu",
    "model.xmin",
    "grid.r",
    "grid.n",
    "grid.kind",
    "grid.ratio",
    "solver.tol",
    "solver.max_iter",
    "solver.shift",
    "solver.require_audit",
    "trunc.eta",
    "schedule.stages",
    "schedule.r_growth",
    "schedule.eta_decay",
    "study.grids",
    "study.eta_per_dx",
    "study.sweep",
    "study.sweep_values",
    "evolve.t_final",
    "evolve.cfl",
    "evolve.u0",
    "evolve.u0_center",
    "evolve.u0_width",
    "evolve.seed",
    "evolve.threshold",
    "evolve.solve_inline",
    "output.dir",
    "output.stride",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    Gaussian,
    Random,
    Eigen,
    Flat,
}

#[derive(Debug, Clone)]
pub struct EvolveSettings {
    pub t_final: f64,
    pub cfl: f64,
    pub u0: InitialData,
    pub u0_center: f64,
    pub u0_width: f64,
    pub seed: u64,
    pub threshold: f64,
    pub solve_inline: bool,
}

/// Fully-resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub grid_r: f64,
    pub grid_n: usize,
    pub grid_kind: GridKind,
    pub eta: f64,
    pub solver: SolverConfig,
    pub require_audit: bool,
    pub schedule_stages: usize,
    pub r_growth: f64,
    pub eta_decay: f64,
    pub study_grids: Vec<usize>,
    pub study_eta_per_dx: f64,
    pub study_sweep: Option<(String, Vec<f64>)>,
    pub evolve: EvolveSettings,
    pub output_dir: PathBuf,
    pub stride: usize,
    raw: BTreeMap<String, String>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    let known: HashSet<&str> = KNOWN_KEYS.iter().copied().collect();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                text: raw_line.to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !known.contains(key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    build(map)
}

fn build(map: BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let get = |key: &str| map.get(key).map(String::as_str);
    let f64_key = |key: &str, default: f64| -> Result<f64, ConfigError> {
        match get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                message: format!("not a number: `{v}`"),
            }),
        }
    };
    let usize_key = |key: &str, default: usize| -> Result<usize, ConfigError> {
        match get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                message: format!("not an integer: `{v}`"),
            }),
        }
    };
    let bool_key = |key: &str, default: bool| -> Result<bool, ConfigError> {
        match get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                key: key.into(),
                message: format!("expected true/false, got `{v}`"),
            }),
        }
    };

    let tau = rate_from(&map, "tau")?;
    let beta = rate_from(&map, "beta")?;
    let kernel = kernel_from(&map)?;
    let mut problem = ProblemSpec::new(tau, beta, kernel);
    let n = f64_key("model.n", 2.0)?;
    problem = problem
        .with_n_fragments(n)
        .map_err(|e| ConfigError::Model(e.to_string()))?;
    let mu = f64_key("model.mu", 0.0)?;
    if mu > 0.0 {
        problem = problem
            .with_death(RateSpec::constant(mu).map_err(|e| ConfigError::Model(e.to_string()))?);
    } else if mu < 0.0 {
        return Err(ConfigError::BadValue {
            key: "model.mu".into(),
            message: "death rate must be nonnegative".into(),
        });
    }
    let xmin = f64_key("model.xmin", 0.0)?;
    problem = problem
        .with_x_min(xmin)
        .map_err(|e| ConfigError::Model(e.to_string()))?;

    let grid_kind = match get("grid.kind") {
        None | Some("uniform") => GridKind::Uniform,
        Some("geometric") => GridKind::Geometric {
            ratio: f64_key("grid.ratio", 1.05)?,
        },
        Some(v) => {
            return Err(ConfigError::BadValue {
                key: "grid.kind".into(),
                message: format!("expected uniform|geometric, got `{v}`"),
            })
        }
    };
    if get("grid.ratio").is_some() && matches!(grid_kind, GridKind::Uniform) {
        return Err(ConfigError::BadValue {
            key: "grid.ratio".into(),
            message: "only meaningful for geometric grids".into(),
        });
    }

    let shift = match get("solver.shift") {
        None | Some("auto") => None,
        Some(v) => Some(v.parse().map_err(|_| ConfigError::BadValue {
            key: "solver.shift".into(),
            message: format!("expected auto or a number, got `{v}`"),
        })?),
    };
    let solver = SolverConfig {
        shift_nu: shift,
        tol_lambda: f64_key("solver.tol", 1e-12)?,
        max_iter: usize_key("solver.max_iter", 100_000)?,
        ..SolverConfig::default()
    };

    let study_grids = match get("study.grids") {
        None => vec![500, 1000, 2000],
        Some(v) => parse_list(v, "study.grids")?
            .into_iter()
            .map(|x| x as usize)
            .collect(),
    };
    let study_sweep = match (get("study.sweep"), get("study.sweep_values")) {
        (None, None) | (Some("none"), _) => None,
        (Some(name), Some(values)) => {
            if name != "mitosis_r" {
                return Err(ConfigError::BadValue {
                    key: "study.sweep".into(),
                    message: format!("supported sweeps: none, mitosis_r; got `{name}`"),
                });
            }
            Some((name.to_string(), parse_list(values, "study.sweep_values")?))
        }
        (Some(_), None) => return Err(ConfigError::Missing("study.sweep_values".into())),
        (None, Some(_)) => return Err(ConfigError::Missing("study.sweep".into())),
    };

    let u0 = match get("evolve.u0") {
        None | Some("gaussian") => InitialData::Gaussian,
        Some("random") => InitialData::Random,
        Some("eigen") => InitialData::Eigen,
        Some("flat") => InitialData::Flat,
        Some(v) => {
            return Err(ConfigError::BadValue {
                key: "evolve.u0".into(),
                message: format!("expected gaussian|random|eigen|flat, got `{v}`"),
            })
        }
    };
    let grid_r = f64_key("grid.r", 20.0)?;
    let evolve = EvolveSettings {
        t_final: f64_key("evolve.t_final", 40.0)?,
        cfl: f64_key("evolve.cfl", 0.9)?,
        u0,
        u0_center: f64_key("evolve.u0_center", grid_r / 4.0)?,
        u0_width: f64_key("evolve.u0_width", grid_r / 20.0)?,
        seed: usize_key("evolve.seed", 1)? as u64,
        threshold: f64_key("evolve.threshold", 1e-3)?,
        solve_inline: bool_key("evolve.solve_inline", true)?,
    };

    let output_dir = std::env::var_os("GROWFRAG_OUTDIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(get("output.dir").unwrap_or("out")));

    Ok(RunConfig {
        problem,
        grid_r,
        grid_n: usize_key("grid.n", 2000)?,
        grid_kind,
        eta: f64_key("trunc.eta", 1e-3)?,
        solver,
        require_audit: bool_key("solver.require_audit", false)?,
        schedule_stages: usize_key("schedule.stages", 3)?,
        r_growth: f64_key("schedule.r_growth", 2.0)?,
        eta_decay: f64_key("schedule.eta_decay", 0.5)?,
        study_grids,
        study_eta_per_dx: f64_key("study.eta_per_dx", 1.6)?,
        study_sweep,
        evolve,
        output_dir,
        stride: usize_key("output.stride", 0)?,
        raw: map,
    })
}

fn parse_list(text: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|t| {
            t.trim().parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                message: format!("not a number: `{t}`"),
            })
        })
        .collect()
}

fn parse_pairs(text: &str, key: &str) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for part in text.split(',') {
        let Some((x, y)) = part.trim().split_once(':') else {
            return Err(ConfigError::BadValue {
                key: key.into(),
                message: format!("expected x:y pairs, got `{part}`"),
            });
        };
        let parse = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                message: format!("not a number: `{t}`"),
            })
        };
        xs.push(parse(x)?);
        ys.push(parse(y)?);
    }
    Ok((xs, ys))
}

fn rate_from(map: &BTreeMap<String, String>, prefix: &str) -> Result<RateSpec, ConfigError> {
    let kind_key = format!("{prefix}.kind");
    let kind = map
        .get(&kind_key)
        .ok_or(ConfigError::Missing(kind_key.clone()))?;
    let coeffs_key = format!("{prefix}.coeffs");
    let coeffs = match map.get(&coeffs_key) {
        Some(v) => parse_list(v, &coeffs_key)?,
        None => Vec::new(),
    };
    let expect = |n: usize| -> Result<(), ConfigError> {
        if coeffs.len() != n {
            Err(ConfigError::BadValue {
                key: coeffs_key.clone(),
                message: format!("{kind} rate needs {n} coefficient(s), got {}", coeffs.len()),
            })
        } else {
            Ok(())
        }
    };
    let model = |e: crate::problem::ProblemError| ConfigError::Model(e.to_string());
    let mut rate = match kind.as_str() {
        "constant" => {
            expect(1)?;
            RateSpec::constant(coeffs[0]).map_err(model)?
        }
        "power_law" => {
            expect(2)?;
            RateSpec::power_law(coeffs[0], coeffs[1]).map_err(model)?
        }
        "affine" => {
            expect(2)?;
            RateSpec::affine(coeffs[0], coeffs[1]).map_err(model)?
        }
        "zero" => RateSpec::zero(),
        "tabulated" => {
            let table_key = format!("{prefix}.table");
            let table = map
                .get(&table_key)
                .ok_or(ConfigError::Missing(table_key.clone()))?;
            let (xs, ys) = parse_pairs(table, &table_key)?;
            RateSpec::tabulated(xs, ys).map_err(model)?
        }
        other => {
            return Err(ConfigError::BadValue {
                key: kind_key,
                message: format!(
                    "expected constant|power_law|affine|tabulated|zero, got `{other}`"
                ),
            })
        }
    };
    if let Some(b) = map.get(&format!("{prefix}.support_min")) {
        let b: f64 = b.parse().map_err(|_| ConfigError::BadValue {
            key: format!("{prefix}.support_min"),
            message: format!("not a number: `{b}`"),
        })?;
        rate = rate.with_support_min(b).map_err(model)?;
    }
    Ok(rate)
}

fn kernel_from(map: &BTreeMap<String, String>) -> Result<KernelSpec, ConfigError> {
    let model = |e: crate::problem::ProblemError| ConfigError::Model(e.to_string());
    let num = |key: &str| -> Result<Option<f64>, ConfigError> {
        map.get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("not a number: `{v}`"),
                })
            })
            .transpose()
    };
    let kind = map
        .get("kernel.kind")
        .ok_or(ConfigError::Missing("kernel.kind".into()))?;
    match kind.as_str() {
        "uniform" => Ok(KernelSpec::uniform()),
        "mitosis" => {
            let r = num("kernel.r")?.ok_or(ConfigError::Missing("kernel.r".into()))?;
            KernelSpec::mitosis(r).map_err(model)
        }
        "homogeneous" => {
            let alpha = num("kernel.alpha")?.ok_or(ConfigError::Missing("kernel.alpha".into()))?;
            KernelSpec::homogeneous(alpha).map_err(model)
        }
        // convex combination of the renewal kernel and a mitosis kernel
        "mixture" => {
            let weight = num("kernel.mix_weight")?
                .ok_or(ConfigError::Missing("kernel.mix_weight".into()))?;
            let r = num("kernel.r")?.ok_or(ConfigError::Missing("kernel.r".into()))?;
            KernelSpec::mixture(
                weight,
                KernelSpec::renewal(),
                KernelSpec::mitosis(r).map_err(model)?,
            )
            .map_err(model)
        }
        "tabulated" => {
            let table = map
                .get("kernel.table")
                .ok_or(ConfigError::Missing("kernel.table".into()))?;
            let (zs, ws) = parse_pairs(table, "kernel.table")?;
            let gamma = num("kernel.gamma")?.ok_or(ConfigError::Missing("kernel.gamma".into()))?;
            let c = num("kernel.c")?.ok_or(ConfigError::Missing("kernel.c".into()))?;
            KernelSpec::tabulated_density(zs, ws, gamma, c).map_err(model)
        }
        other => Err(ConfigError::BadValue {
            key: "kernel.kind".into(),
            message: format!(
                "expected uniform|mitosis|homogeneous|mixture|tabulated, got `{other}`"
            ),
        }),
    }
}

impl RunConfig {
    /// Renders the fully-resolved configuration, defaults included, as a
    /// config file that reproduces this run.
    pub fn manifest(&self) -> String {
        let mut resolved = self.raw.clone();
        let mut put = |key: &str, value: String| {
            resolved.entry(key.to_string()).or_insert(value);
        };
        put("model.n", format!("{}", self.problem.n_fragments()));
        put("model.xmin", format!("{}", self.problem.x_min()));
        put("grid.r", format!("{}", self.grid_r));
        put("grid.n", format!("{}", self.grid_n));
        put(
            "grid.kind",
            match self.grid_kind {
                GridKind::Uniform => "uniform".into(),
                GridKind::Geometric { .. } => "geometric".into(),
            },
        );
        if let GridKind::Geometric { ratio } = self.grid_kind {
            put("grid.ratio", format!("{ratio}"));
        }
        put("trunc.eta", format!("{}", self.eta));
        put("solver.tol", format!("{}", self.solver.tol_lambda));
        put("solver.max_iter", format!("{}", self.solver.max_iter));
        put(
            "solver.shift",
            self.solver
                .shift_nu
                .map(|s| format!("{s}"))
                .unwrap_or_else(|| "auto".into()),
        );
        put("solver.require_audit", format!("{}", self.require_audit));
        put("schedule.stages", format!("{}", self.schedule_stages));
        put("schedule.r_growth", format!("{}", self.r_growth));
        put("schedule.eta_decay", format!("{}", self.eta_decay));
        put(
            "study.grids",
            self.study_grids
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("study.eta_per_dx", format!("{}", self.study_eta_per_dx));
        put("evolve.t_final", format!("{}", self.evolve.t_final));
        put("evolve.cfl", format!("{}", self.evolve.cfl));
        put(
            "evolve.u0",
            match self.evolve.u0 {
                InitialData::Gaussian => "gaussian".into(),
                InitialData::Random => "random".into(),
                InitialData::Eigen => "eigen".into(),
                InitialData::Flat => "flat".into(),
            },
        );
        put("evolve.u0_center", format!("{}", self.evolve.u0_center));
        put("evolve.u0_width", format!("{}", self.evolve.u0_width));
        put("evolve.seed", format!("{}", self.evolve.seed));
        put("evolve.threshold", format!("{}", self.evolve.threshold));
        put(
            "evolve.solve_inline",
            format!("{}", self.evolve.solve_inline),
        );
        put("output.dir", self.output_dir.display().to_string());
        put("output.stride", format!("{}", self.stride));

        let mut out = String::from("# resolved growfrag run configuration\n");
        for (k, v) in &resolved {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
