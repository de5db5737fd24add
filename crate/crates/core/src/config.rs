//! Run configuration: flat `section.key = value` text.
//!
//! ```text
//! # comments start with '#'
//! flow.t_end = 0.5
//! flow.steps = 50
//! grid.alpha = 0.5
//! init.kind = random_symmetric
//! init.amplitude = 0.5
//! ```
//!
//! Unset keys take per-variant defaults (see [`RunConfig::defaults`]).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, GridSpec, InitialData, Variant};
use crate::geometry::{read_snapshot, Grid, Symmetry};
use crate::minimizer::MinimizeOptions;

const KEYS: &[&str] = &[
    "flow.t_end",
    "flow.steps",
    "grid.alpha",
    "grid.n_r",
    "grid.n_theta",
    "grid.lx",
    "grid.ly",
    "grid.n_x",
    "grid.n_y",
    "pme.beta",
    "reg.lambda",
    "init.kind",
    "init.value",
    "init.amplitude",
    "init.seed",
    "init.a",
    "init.b",
    "init.c",
    "init.path",
    "solver.max_iters",
    "solver.grad_tol",
    "solver.armijo_c",
    "solver.backtrack_factor",
    "solver.initial_step",
    "solver.max_displacement",
    "geometry.symmetry",
    "output.snapshot_every",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub flow: FlowConfig,
    /// Write a field snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Every key with the value it resolved to, in schema order.
    pub resolved: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Pme,
    RicciSym,
    RicciReg,
    RicciUnnorm,
}

impl FlowKind {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "pme" => FlowKind::Pme,
            "ricci-sym" => FlowKind::RicciSym,
            "ricci-reg" => FlowKind::RicciReg,
            "ricci-unnorm" => FlowKind::RicciUnnorm,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::Pme => "pme",
            FlowKind::RicciSym => "ricci-sym",
            FlowKind::RicciReg => "ricci-reg",
            FlowKind::RicciUnnorm => "ricci-unnorm",
        }
    }
}

/// Parsed `key -> (line, value)` pairs.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
    base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse(format!("line {lineno}: expected `section.key = value`, got `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse(format!("line {lineno}: unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::Parse(format!("line {lineno}: `{key}` has no value")));
            }
            if let Some((prev, _)) = entries.insert(key.to_string(), (lineno, value.to_string())) {
                return Err(Error::Parse(format!("line {lineno}: `{key}` already set on line {prev}")));
            }
        }
        Ok(Self { entries, base_dir: None })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut raw = Self::parse(&text)?;
        raw.base_dir = path.parent().map(Path::to_path_buf);
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Parse(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), (0, value.to_string()));
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| {
                let at = if *line == 0 { String::new() } else { format!("line {line}: ") };
                Error::Parse(format!("{at}`{key}` has malformed value `{v}`"))
            }),
        }
    }

    fn get_str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.entries.get(key).map_or(default, |(_, v)| v.as_str())
    }

    fn line_of(&self, key: &str) -> String {
        match self.entries.get(key) {
            Some((l, _)) if *l > 0 => format!("line {l}: "),
            _ => String::new(),
        }
    }
}

impl RunConfig {
    /// Defaults for a flow with no configuration file.
    pub fn defaults(kind: FlowKind) -> Result<Self> {
        Self::resolve(kind, &RawConfig::default(), false)
    }

    pub fn resolve(kind: FlowKind, raw: &RawConfig, allow_heat: bool) -> Result<Self> {
        let (t_default, n_default) = match kind {
            FlowKind::Pme => (0.1, 40),
            FlowKind::RicciSym => (0.5, 50),
            FlowKind::RicciReg => (1.0, 200),
            FlowKind::RicciUnnorm => (0.4, 400),
        };
        let t_end: f64 = raw.get("flow.t_end", t_default)?;
        let steps: usize = raw.get("flow.steps", n_default)?;

        let grid = match kind {
            FlowKind::Pme => {
                for key in ["grid.alpha", "grid.n_r", "grid.n_theta"] {
                    if raw.entries.contains_key(key) {
                        return Err(Error::Parse(format!("{}`{key}` does not apply to the planar grid", raw.line_of(key))));
                    }
                }
                GridSpec::Planar {
                    lx: raw.get("grid.lx", 1.0)?,
                    ly: raw.get("grid.ly", 1.0)?,
                    n_x: raw.get("grid.n_x", 33)?,
                    n_y: raw.get("grid.n_y", 33)?,
                }
            }
            _ => {
                for key in ["grid.lx", "grid.ly", "grid.n_x", "grid.n_y"] {
                    if raw.entries.contains_key(key) {
                        return Err(Error::Parse(format!("{}`{key}` does not apply to the football grid", raw.line_of(key))));
                    }
                }
                let n_theta_default = if kind == FlowKind::RicciUnnorm { 8 } else { 16 };
                GridSpec::Football {
                    alpha: raw.get("grid.alpha", 0.5)?,
                    n_r: raw.get("grid.n_r", 32)?,
                    n_theta: raw.get("grid.n_theta", n_theta_default)?,
                }
            }
        };

        let variant = match kind {
            FlowKind::Pme => {
                let beta: f64 = raw.get("pme.beta", 2.0)?;
                if !(beta > 1.0) && !(beta == 1.0 && allow_heat) {
                    let hint = if beta == 1.0 { " (pass --allow-heat for the heat equation)" } else { "" };
                    return Err(Error::param("pme.beta", format!("{}{beta} must exceed 1{hint}", raw.line_of("pme.beta"))));
                }
                Variant::Pme { beta }
            }
            FlowKind::RicciSym => Variant::RicciSym,
            FlowKind::RicciReg => Variant::RicciReg { lambda: raw.get("reg.lambda", 0.5)? },
            FlowKind::RicciUnnorm => Variant::RicciUnnorm,
        };
        if kind != FlowKind::Pme && raw.entries.contains_key("pme.beta") {
            return Err(Error::Parse(format!("{}`pme.beta` only applies to pme", raw.line_of("pme.beta"))));
        }
        if kind != FlowKind::RicciReg && raw.entries.contains_key("reg.lambda") {
            return Err(Error::Parse(format!("{}`reg.lambda` only applies to ricci-reg", raw.line_of("reg.lambda"))));
        }

        let kind_default = match kind {
            FlowKind::Pme => "bump",
            FlowKind::RicciSym => "random_symmetric",
            FlowKind::RicciReg => "random_smooth",
            FlowKind::RicciUnnorm => "zero",
        };
        let amplitude: f64 = raw.get("init.amplitude", if kind == FlowKind::Pme { 1.0 } else { 0.5 })?;
        let seed: u64 = raw.get("init.seed", 1)?;
        let initial = match raw.get_str("init.kind", kind_default) {
            "zero" => InitialData::Zero,
            "constant" => InitialData::Constant(raw.get("init.value", 0.0)?),
            "bump" => InitialData::Bump { amplitude },
            "linear" => InitialData::Linear {
                a: raw.get("init.a", 0.0)?,
                b: raw.get("init.b", 0.0)?,
                c: raw.get("init.c", 0.0)?,
            },
            "random_symmetric" => InitialData::RandomSymmetric { amplitude, seed },
            "random_smooth" => InitialData::RandomSmooth { amplitude, seed },
            "snapshot" => {
                let rel = raw.get_str("init.path", "");
                if rel.is_empty() {
                    return Err(Error::Parse("`init.kind = snapshot` needs `init.path`".into()));
                }
                let path = match &raw.base_dir {
                    Some(dir) if Path::new(rel).is_relative() => dir.join(rel),
                    _ => PathBuf::from(rel),
                };
                let file = std::fs::File::open(&path)?;
                let snap = read_snapshot(std::io::BufReader::new(file))?;
                let expected = grid.build()?;
                if snap.grid.id() != expected.id() {
                    return Err(Error::param("init.path", format!("snapshot {} is on a different grid", path.display())));
                }
                InitialData::Values(snap.field.into_values())
            }
            other => {
                return Err(Error::Parse(format!("{}unknown initial data kind `{other}`", raw.line_of("init.kind"))))
            }
        };

        let d = MinimizeOptions::default();
        let options = MinimizeOptions {
            max_iters: raw.get("solver.max_iters", d.max_iters)?,
            grad_tol: raw.get("solver.grad_tol", d.grad_tol)?,
            armijo_c: raw.get("solver.armijo_c", d.armijo_c)?,
            backtrack_factor: raw.get("solver.backtrack_factor", d.backtrack_factor)?,
            initial_step: raw.get("solver.initial_step", d.initial_step)?,
            max_displacement: raw.get("solver.max_displacement", d.max_displacement)?,
        };
        let symmetry = match raw.get_str("geometry.symmetry", "mirror") {
            "mirror" => Symmetry::Mirror,
            "antipodal" => Symmetry::Antipodal,
            other => {
                return Err(Error::Parse(format!("{}unknown symmetry `{other}`", raw.line_of("geometry.symmetry"))))
            }
        };
        let snapshot_every: usize = raw.get("output.snapshot_every", 0)?;

        let flow = FlowConfig { variant, t_end, steps, grid, initial, options, symmetry };
        flow.validate()?;
        let built = flow.grid.build()?;
        flow.initial.realize(&built)?;

        let mut resolved = vec![
            ("variant".to_string(), kind.name().to_string()),
            ("flow.t_end".to_string(), format!("{t_end}")),
            ("flow.steps".to_string(), format!("{steps}")),
        ];
        match grid {
            GridSpec::Football { alpha, n_r, n_theta } => {
                resolved.push(("grid.alpha".into(), format!("{alpha}")));
                resolved.push(("grid.n_r".into(), format!("{n_r}")));
                resolved.push(("grid.n_theta".into(), format!("{n_theta}")));
            }
            GridSpec::Planar { lx, ly, n_x, n_y } => {
                resolved.push(("grid.lx".into(), format!("{lx}")));
                resolved.push(("grid.ly".into(), format!("{ly}")));
                resolved.push(("grid.n_x".into(), format!("{n_x}")));
                resolved.push(("grid.n_y".into(), format!("{n_y}")));
            }
        }
        match variant {
            Variant::Pme { beta } => resolved.push(("pme.beta".into(), format!("{beta}"))),
            Variant::RicciReg { lambda } => resolved.push(("reg.lambda".into(), format!("{lambda}"))),
            _ => {}
        }
        resolved.push(("init".into(), format!("{:?}", short_initial(&flow.initial))));
        resolved.push(("solver".into(), format!("{options:?}")));
        resolved.push(("geometry.symmetry".into(), format!("{symmetry:?}").to_lowercase()));
        resolved.push(("output.snapshot_every".into(), format!("{snapshot_every}")));
        Ok(Self { flow, snapshot_every, resolved })
    }
}

fn short_initial(init: &InitialData) -> InitialData {
    match init {
        InitialData::Values(v) => InitialData::Values(vec![v.len() as f64]),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(kind: FlowKind, text: &str) -> Result<RunConfig> {
        RunConfig::resolve(kind, &RawConfig::parse(text)?, false)
    }

    #[test]
    fn defaults_are_valid() {
        for kind in [FlowKind::Pme, FlowKind::RicciSym, FlowKind::RicciReg, FlowKind::RicciUnnorm] {
            let c = RunConfig::defaults(kind).unwrap();
            assert_eq!(c.flow.variant.name(), kind.name());
        }
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = resolve(
            FlowKind::RicciReg,
            "# header\nflow.steps = 20   # trailing\n\nreg.lambda=0.25\ngrid.n_r = 16\ninit.kind = constant\ninit.value = 0.1\n",
        )
        .unwrap();
        assert_eq!(c.flow.steps, 20);
        assert_eq!(c.flow.variant, Variant::RicciReg { lambda: 0.25 });
        assert_eq!(c.flow.initial, InitialData::Constant(0.1));
        assert!(matches!(c.flow.grid, GridSpec::Football { n_r: 16, .. }));
    }

    #[test]
    fn diagnostics_name_the_line() {
        let e = resolve(FlowKind::Pme, "flow.steps = 3\nflow.bogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = resolve(FlowKind::Pme, "flow.steps = three\n").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        let e = resolve(FlowKind::Pme, "flow.steps\n").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        let e = resolve(FlowKind::Pme, "flow.steps = 1\nflow.steps = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = resolve(FlowKind::RicciSym, "\n\npme.beta = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn domain_checks() {
        assert!(resolve(FlowKind::RicciUnnorm, "flow.t_end = 0.6").is_err());
        assert!(resolve(FlowKind::Pme, "pme.beta = 0.4").is_err());
        assert!(resolve(FlowKind::Pme, "pme.beta = 1").is_err());
        let heat = RunConfig::resolve(FlowKind::Pme, &RawConfig::parse("pme.beta = 1").unwrap(), true).unwrap();
        assert_eq!(heat.flow.variant, Variant::Pme { beta: 1.0 });
        assert!(resolve(FlowKind::RicciReg, "reg.lambda = 1.5").is_err());
        assert!(resolve(FlowKind::RicciSym, "grid.n_r = 15").is_err());
        assert!(resolve(FlowKind::RicciSym, "grid.lx = 1").is_err());
        assert!(resolve(FlowKind::RicciSym, "init.kind = linear").is_err());
        assert!(resolve(FlowKind::RicciSym, "geometry.symmetry = radial").is_err());
        assert!(resolve(FlowKind::RicciSym, "solver.armijo_c = 2").is_err());
    }
}
