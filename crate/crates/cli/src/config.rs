//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Keys are namespaced:
//!
//! | key | default |
//! |---|---|
//! | `grid.points_per_decade` | 24 |
//! | `grid.decades_below_plateau` | 3 |
//! | `grid.x_min` | unset (relative to the plateau) |
//! | `grid.x_max` | unset (automatic tail cut) |
//! | `grid.tail_tol` | 1e-10 |
//! | `solver.tol` | 1e-10 |
//! | `solver.max_iter` | 5000 |
//! | `solver.extrapolate` | true |
//! | `solver.plateau_level` | 0.499 |
//! | `solver.max_extensions` | 4 |
//! | `optimizer.bracket_factor` | 20 |
//! | `optimizer.rel_tol` | 1e-3 |
//! | `optimizer.max_expansions` | 2 |
//! | `optimizer.scan_points` | 20 |
//! | `optimizer.max_eps` | 0.9 |
//! | `quad.order` | 12 |
//! | `quad.axial_panels` | 1 |
//! | `quad.radial_panels` | 1 |
//! | `quad.depth` | 8 |
//! | `quad.refine_depth` | 16 |
//! | `quad.ratio` | 0.2 |
//! | `quad.rel_tol` | 1e-6 |
//! | `run.threads` | 0 (all cores) |
//! | `run.volume_scaled` | false |
//! | `run.sdw_count` | 1 |
//! | `output.path` | unset (stdout) |

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sdw_core::fermi_gas::QuadratureSettings;
use sdw_core::kernel::{LowerBound, UpperBound};
use sdw_core::optimizer::PipelineConfig;

pub const CONFIG_ENV: &str = "SDW_BOUND_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub quad: QuadratureSettings,
    pub threads: usize,
    /// Number of superposed density waves the energy gain is multiplied by
    /// in plots (2 for hexagonal up to 12 for bcc arrangements).
    pub sdw_count: u32,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            quad: QuadratureSettings::default(),
            threads: 0,
            sdw_count: 1,
            output: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("invalid value '{value}' for {key}"))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        bail!("{key} must be positive and finite, got {value}");
    }
    Ok(v)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "grid.points_per_decade" => p.grid.points_per_decade = parse(key, value)?,
            "grid.decades_below_plateau" => {
                p.grid.lower = LowerBound::BelowPlateau {
                    decades: positive(key, value)?,
                }
            }
            "grid.x_min" => p.grid.lower = LowerBound::Fixed(positive(key, value)?),
            "grid.x_max" => p.grid.upper = UpperBound::Fixed(positive(key, value)?),
            "grid.tail_tol" => p.grid.tail_tol = positive(key, value)?,
            "solver.tol" => p.solver.tol = positive(key, value)?,
            "solver.max_iter" => p.solver.max_iter = parse(key, value)?,
            "solver.extrapolate" => p.solver.extrapolate = parse(key, value)?,
            "solver.plateau_level" => p.solver.plateau_level = positive(key, value)?,
            "solver.max_extensions" => p.solver.max_extensions = parse(key, value)?,
            "optimizer.bracket_factor" => p.optimizer.bracket_factor = positive(key, value)?,
            "optimizer.rel_tol" => p.optimizer.rel_tol = positive(key, value)?,
            "optimizer.max_expansions" => p.optimizer.max_expansions = parse(key, value)?,
            "optimizer.scan_points" => p.optimizer.scan_points = parse(key, value)?,
            "optimizer.max_eps" => p.optimizer.max_eps = positive(key, value)?,
            "quad.order" => self.quad.order = parse(key, value)?,
            "quad.axial_panels" => self.quad.axial_panels = parse(key, value)?,
            "quad.radial_panels" => self.quad.radial_panels = parse(key, value)?,
            "quad.depth" => self.quad.depth = parse(key, value)?,
            "quad.refine_depth" => self.quad.refine_depth = parse(key, value)?,
            "quad.ratio" => self.quad.ratio = positive(key, value)?,
            "quad.rel_tol" => self.quad.rel_tol = positive(key, value)?,
            "run.threads" => self.threads = parse(key, value)?,
            "run.volume_scaled" => p.volume_scaled = parse(key, value)?,
            "run.sdw_count" => {
                self.sdw_count = parse(key, value)?;
                if self.sdw_count == 0 {
                    bail!("run.sdw_count must be at least 1");
                }
            }
            "output.path" => self.output = Some(PathBuf::from(value)),
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected key = value", n + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{origin}:{}", n + 1))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Defaults, then the explicit file or the one named by the environment,
    /// then `key=value` overrides in order.
    pub fn load(explicit: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = match explicit.map(Path::to_path_buf).or(env) {
            Some(path) => Self::from_file(&path)?,
            None => Self::default(),
        };
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("override '{item}' is not key=value"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "# test\ngrid.points_per_decade = 36\n\nsolver.extrapolate=false\nquad.refine_depth = 10\nrun.sdw_count = 6\n",
            "inline",
        )
        .unwrap();
        assert_eq!(cfg.pipeline.grid.points_per_decade, 36);
        assert!(!cfg.pipeline.solver.extrapolate);
        assert_eq!(cfg.quad.refine_depth, 10);
        assert_eq!(cfg.sdw_count, 6);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_text("grid.points = 3", "x").is_err());
        assert!(cfg.apply_text("solver.tol", "x").is_err());
        assert!(cfg.apply_text("solver.tol = -1", "x").is_err());
        assert!(cfg.apply_text("run.sdw_count = 0", "x").is_err());
        assert_eq!(cfg.pipeline, PipelineConfig::default());
    }

    #[test]
    fn fixed_bounds() {
        let mut cfg = RunConfig::default();
        cfg.set("grid.x_min", "1e-6").unwrap();
        cfg.set("grid.x_max", "50").unwrap();
        assert_eq!(cfg.pipeline.grid.lower, LowerBound::Fixed(1e-6));
        assert_eq!(cfg.pipeline.grid.upper, UpperBound::Fixed(50.0));
    }

    #[test]
    fn overrides_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "solver.tol = 1e-8\ngrid.points_per_decade = 30\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &["solver.tol=1e-9".into()]).unwrap();
        assert_eq!(cfg.pipeline.solver.tol, 1e-9);
        assert_eq!(cfg.pipeline.grid.points_per_decade, 30);
    }
}
