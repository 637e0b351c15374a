use std::path::Path;

use circle_finsler::geodesic::GeodesicSpec;
use circle_finsler::kappa::{KappaField, CUBIC_TERMS};
use circle_finsler::metric::{CircleMetric, MeasureDensity, QuadratureSpec};
use circle_finsler::Vec3;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kappa: KappaConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub geodesic: GeodesicConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "linear+cubic")]
    LinearCubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaConfig {
    pub family: Family,
    /// Linear: `[a1, a2, a3]`. Linear+cubic: the three linear coefficients
    /// followed by up to ten cubic ones.
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self { family: Family::Zero, coefficients: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Constant {
        value: f64,
    },
    Linear {
        base: f64,
        direction: [f64; 3],
        amplitude: f64,
        /// Use `(m(x̂) + m(-x̂)) / 2` instead of `m`.
        #[serde(default)]
        symmetrize: bool,
    },
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub n_theta: usize,
    pub fd_step: f64,
    pub sphere_grid_level: u32,
    pub mc_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            n_theta: q.n_theta,
            fd_step: q.fd_step,
            sphere_grid_level: q.sphere_grid_level,
            mc_samples: q.mc_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicConfig {
    pub step: f64,
    pub recenter_radius: f64,
    pub chart_step: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        let g = GeodesicSpec::default();
        Self { step: g.step, recenter_radius: g.recenter_radius, chart_step: g.chart_step }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies `key=value` overrides and checks the result.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: RunConfig =
            Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Usage(e.message().to_string()))?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        let coeffs = &self.kappa.coefficients;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return bad("kappa coefficients must be finite".into());
        }
        match self.kappa.family {
            Family::Zero if !coeffs.is_empty() => return bad("kappa family 'zero' takes no coefficients".into()),
            Family::Linear if coeffs.len() != 3 => return bad("kappa family 'linear' takes 3 coefficients".into()),
            Family::LinearCubic if !(3..=3 + CUBIC_TERMS).contains(&coeffs.len()) => {
                return bad(format!("kappa family 'linear+cubic' takes 3 to {} coefficients", 3 + CUBIC_TERMS))
            }
            _ => {}
        }
        if self.seed > i64::MAX as u64 {
            return bad("seed must be below 2^63".into());
        }
        self.quadrature_spec().validate()?;
        self.geodesic_spec().validate()?;
        let measure = self.measure_density()?;
        measure.check_positive(self.quadrature.sphere_grid_level)?;
        Ok(())
    }

    pub fn kappa_field(&self) -> Result<KappaField, CliError> {
        let c = &self.kappa.coefficients;
        Ok(match self.kappa.family {
            Family::Zero => KappaField::zero(),
            Family::Linear => KappaField::linear([c[0], c[1], c[2]]),
            Family::LinearCubic => KappaField::linear_cubic([c[0], c[1], c[2]], &c[3..])?,
        })
    }

    pub fn measure_density(&self) -> Result<MeasureDensity, CliError> {
        Ok(match self.measure {
            MeasureConfig::Constant { value } => MeasureDensity::constant(value)?,
            MeasureConfig::Linear { base, direction, amplitude, symmetrize } => {
                let m = MeasureDensity::linear(base, Vec3::from(direction), amplitude)?;
                if symmetrize {
                    MeasureDensity::EvenPart(Box::new(m))
                } else {
                    m
                }
            }
        })
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let q = &self.quadrature;
        QuadratureSpec {
            n_theta: q.n_theta,
            fd_step: q.fd_step,
            sphere_grid_level: q.sphere_grid_level,
            mc_samples: q.mc_samples,
            seed: self.seed,
        }
    }

    pub fn geodesic_spec(&self) -> GeodesicSpec {
        let g = &self.geodesic;
        GeodesicSpec { step: g.step, recenter_radius: g.recenter_radius, chart_step: g.chart_step }
    }

    pub fn metric(&self) -> Result<CircleMetric, CliError> {
        Ok(CircleMetric::new(self.kappa_field()?, self.measure_density()?, self.quadrature_spec())?)
    }

    /// The resolved config as TOML, every line prefixed with `# `.
    pub fn header(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let mut out = String::new();
        for line in text.lines() {
            out.push_str(if line.is_empty() { "#" } else { "# " });
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// `a.b.c=value`, where `value` is read as a TOML value and falls back to a
/// bare string.
fn apply_override(table: &mut Table, item: &str) -> Result<(), CliError> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| CliError::Usage(format!("override '{item}' is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("bad override key '{key}'")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut current = table;
    for k in parents {
        let entry = current.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        current =
            entry.as_table_mut().ok_or_else(|| CliError::Usage(format!("override '{key}': '{k}' is not a table")))?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}
