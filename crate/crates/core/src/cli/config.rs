use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::DEFAULT_INNER_FRACTION;
use crate::kernel::KernelMethod;
use crate::lattice::{BoundaryCondition, DisorderFamily, DisorderSpec};
use crate::lifshitz::{default_l_max, geometric_grid, DEFAULT_N_MIN, L_MIN};
use crate::specialfn::QuadSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoGrid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Energies {
    List(Vec<f64>),
    Geo { geo: GeoGrid },
}

impl Energies {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Energies::List(v) => v.clone(),
            Energies::Geo { geo } => {
                geometric_grid(geo.from, geo.to, geo.points).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        if v.is_empty() || v.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config(
                "energies must be a non-empty list of finite numbers".into(),
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Counting,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<KernelMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Run description shared by `ids` and `lifshitz`. After [`RunConfig::resolve`]
/// every field a command reads is filled in, so serialising it echoes the
/// effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<BoundaryCondition>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(rename = "L_list", default, skip_serializing_if = "Option::is_none")]
    pub l_list: Option<Vec<usize>>,
    pub energies: Energies,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<f64>,
    #[serde(rename = "L_min", default, skip_serializing_if = "Option::is_none")]
    pub l_min: Option<usize>,
    #[serde(rename = "L_max", default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_saturated: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ids { sandwich: bool },
    Lifshitz,
}

pub const DEFAULT_REALIZATIONS: usize = 20;
pub const DEFAULT_BETA: f64 = 1.0;

fn reject(present: bool, key: &str, command: &str) -> Result<()> {
    if present {
        return Err(Error::Config(format!("key `{key}` is not used by `{command}`")));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the schema for `command` and fills every default.
    pub fn resolve(mut self, command: Command) -> Result<Self> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        self.lambda.get_or_insert(1.0);
        self.realizations.get_or_insert(DEFAULT_REALIZATIONS);
        self.seed.get_or_insert(0);
        self.disorder.get_or_insert(DisorderFamily::Uniform01);
        if self.realizations == Some(0) {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        self.disorder_spec().map_err(cfg_err)?;
        let energies = self.energies.values()?;

        match command {
            Command::Ids { sandwich } => {
                reject(self.beta.is_some(), "beta", "ids")?;
                reject(self.n_min.is_some(), "n_min", "ids")?;
                reject(self.l_min.is_some(), "L_min", "ids")?;
                reject(self.l_max.is_some(), "L_max", "ids")?;
                reject(self.include_saturated.is_some(), "include_saturated", "ids")?;
                if sandwich {
                    reject(self.bc.is_some(), "bc", "ids --sandwich")?;
                    reject(self.estimator.is_some(), "estimator", "ids --sandwich")?;
                } else {
                    self.bc.get_or_insert(BoundaryCondition::Free);
                    let est = *self.estimator.get_or_insert(Estimator::Counting);
                    if est == Estimator::Projection {
                        if self.bc != Some(BoundaryCondition::Free) {
                            return Err(Error::Config(
                                "the projection estimator runs on the free box only".into(),
                            ));
                        }
                        let f = *self.inner_fraction.get_or_insert(DEFAULT_INNER_FRACTION);
                        if !(f > 0.0 && f <= 1.0) {
                            return Err(Error::Config(format!("inner_fraction must lie in (0, 1], got {f}")));
                        }
                    }
                }
                if self.estimator != Some(Estimator::Projection) {
                    reject(
                        self.inner_fraction.is_some(),
                        "inner_fraction",
                        "the counting estimator",
                    )?;
                }
                match (&self.l, &self.l_list) {
                    (Some(_), Some(_)) => return Err(Error::Config("give either `L` or `L_list`, not both".into())),
                    (None, None) => return Err(Error::Config("`L` or `L_list` is required".into())),
                    (_, Some(list)) if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) => {
                        return Err(Error::Config(
                            "`L_list` must be non-empty and strictly ascending".into(),
                        ))
                    }
                    _ => {}
                }
                if energies.windows(2).any(|w| w[0] >= w[1]) {
                    // geometric grids may be written high-to-low
                    if !matches!(self.energies, Energies::Geo { .. }) {
                        return Err(Error::Config("ids energies must be strictly ascending".into()));
                    }
                }
                self.output.get_or_insert_with(|| "ids.csv".into());
                let needs_kernel = self.alpha < 1.0 && (sandwich || self.bc == Some(BoundaryCondition::Free));
                self.resolve_kernel(needs_kernel, 2 * self.ls().into_iter().max().unwrap_or(0))?;
            }
            Command::Lifshitz => {
                reject(self.l.is_some(), "L", "lifshitz")?;
                reject(self.l_list.is_some(), "L_list", "lifshitz")?;
                reject(self.estimator.is_some(), "estimator", "lifshitz")?;
                reject(self.inner_fraction.is_some(), "inner_fraction", "lifshitz")?;
                self.bc.get_or_insert(BoundaryCondition::Neumann);
                let beta = *self.beta.get_or_insert(DEFAULT_BETA);
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::Config("beta must be positive".into()));
                }
                let n_min = *self.n_min.get_or_insert(DEFAULT_N_MIN);
                if !(n_min > 0.0 && n_min < 0.5) {
                    return Err(Error::Config("n_min must lie in (0, 1/2)".into()));
                }
                let l_min = *self.l_min.get_or_insert(L_MIN);
                let l_max = *self.l_max.get_or_insert(default_l_max(self.dim));
                if l_min > l_max {
                    return Err(Error::Config("L_min exceeds L_max".into()));
                }
                self.include_saturated.get_or_insert(false);
                if energies.iter().any(|&e| e <= 0.0) {
                    return Err(Error::Config("lifshitz energies must be positive".into()));
                }
                if energies.windows(2).any(|w| w[0] <= w[1]) && !matches!(self.energies, Energies::Geo { .. }) {
                    return Err(Error::Config("lifshitz energies must be strictly descending".into()));
                }
                self.output.get_or_insert_with(|| "lifshitz.json".into());
                let needs_kernel = self.alpha < 1.0 && self.bc == Some(BoundaryCondition::Free);
                let widest = self.scan_ls()?.into_iter().max().unwrap_or(0);
                self.resolve_kernel(needs_kernel, 2 * widest)?;
            }
        }
        Ok(self)
    }

    fn resolve_kernel(&mut self, needed: bool, diameter: usize) -> Result<()> {
        if !needed {
            reject(
                self.kernel.is_some(),
                "kernel",
                "this run (no free-restricted fractional operator)",
            )?;
            return Ok(());
        }
        let k = self.kernel.get_or_insert_with(KernelConfig::default);
        k.method.get_or_insert(KernelMethod::default_for(self.dim, self.alpha));
        let radius = *k.radius.get_or_insert(diameter.max(1));
        let tol = *k.tol.get_or_insert(QuadSpec::default().abs_tol);
        if radius < diameter {
            return Err(Error::Config(format!(
                "kernel radius {radius} is smaller than the box diameter {diameter}"
            )));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Config("kernel tol must be positive".into()));
        }
        Ok(())
    }

    pub fn ls(&self) -> Vec<usize> {
        match (&self.l, &self.l_list) {
            (Some(l), _) => vec![*l],
            (None, Some(list)) => list.clone(),
            _ => Vec::new(),
        }
    }

    pub fn disorder_spec(&self) -> Result<DisorderSpec> {
        DisorderSpec::new(
            self.disorder.unwrap_or(DisorderFamily::Uniform01),
            self.lambda.unwrap_or(1.0),
            self.seed.unwrap_or(0),
        )
    }

    /// Energies in the order the command consumes them.
    pub fn energy_grid(&self, command: Command) -> Result<Vec<f64>> {
        let mut v = self.energies.values()?;
        match command {
            Command::Ids { .. } => v.sort_by(f64::total_cmp),
            Command::Lifshitz => v.sort_by(|a, b| b.total_cmp(a)),
        }
        Ok(v)
    }

    /// Box half-widths the Lifshitz scan will visit.
    pub fn scan_ls(&self) -> Result<Vec<usize>> {
        let beta = self.beta.unwrap_or(DEFAULT_BETA);
        let l_min = self.l_min.unwrap_or(L_MIN);
        let l_max = self.l_max.unwrap_or_else(|| default_l_max(self.dim));
        Ok(self
            .energy_grid(Command::Lifshitz)?
            .iter()
            .map(|&e| {
                let raw = (beta * e.powf(-0.5 / self.alpha)).floor();
                if raw.is_finite() {
                    (raw.max(l_min as f64) as usize).min(l_max)
                } else {
                    l_max
                }
            })
            .collect())
    }

    pub fn quad_spec(&self) -> QuadSpec {
        let tol = self.kernel.and_then(|k| k.tol).unwrap_or(QuadSpec::default().abs_tol);
        QuadSpec::default().with_abs_tol(tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDS: &str = r#"{"dim": 1, "alpha": 0.5, "L": 10, "energies": [0.5, 1.0]}"#;

    #[test]
    fn defaults_are_filled_and_echoed() {
        let c = RunConfig::parse(IDS)
            .unwrap()
            .resolve(Command::Ids { sandwich: false })
            .unwrap();
        assert_eq!(c.bc, Some(BoundaryCondition::Free));
        assert_eq!(c.realizations, Some(DEFAULT_REALIZATIONS));
        let k = c.kernel.unwrap();
        assert_eq!(k.radius, Some(20));
        assert_eq!(k.method, Some(KernelMethod::Fourier));
        let echo = c.to_json();
        let again = RunConfig::parse(&echo)
            .unwrap()
            .resolve(Command::Ids { sandwich: false })
            .unwrap();
        assert_eq!(again, c);
        assert!(echo.contains("\"disorder\":{\"family\":\"uniform01\"}"));
    }

    #[test]
    fn unknown_and_misplaced_keys_rejected() {
        let bad = r#"{"dim": 1, "alpha": 0.5, "L": 10, "energies": [0.5], "colour": 1}"#;
        assert!(RunConfig::parse(bad).is_err());
        let beta = r#"{"dim": 1, "alpha": 0.5, "L": 10, "energies": [0.5], "beta": 1}"#;
        assert!(RunConfig::parse(beta)
            .unwrap()
            .resolve(Command::Ids { sandwich: false })
            .is_err());
        let geo_extra = r#"{"dim": 1, "alpha": 0.5, "energies": {"geo": {"from": 1, "to": 0.1, "points": 5, "x": 1}}}"#;
        assert!(RunConfig::parse(geo_extra).is_err());
    }

    #[test]
    fn geometric_energies() {
        let c = r#"{"dim": 1, "alpha": 1, "energies": {"geo": {"from": 0.1, "to": 1.0, "points": 4}}}"#;
        let c = RunConfig::parse(c).unwrap().resolve(Command::Lifshitz).unwrap();
        let e = c.energy_grid(Command::Lifshitz).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e[0] == 1.0 && e[3] == 0.1 && e[1] > e[2]);
        assert!(c.kernel.is_none());
    }

    #[test]
    fn kernel_radius_must_cover_the_box() {
        let c = r#"{"dim": 1, "alpha": 0.5, "L": 10, "energies": [1], "kernel": {"radius": 5}}"#;
        assert!(RunConfig::parse(c)
            .unwrap()
            .resolve(Command::Ids { sandwich: false })
            .is_err());
    }
}
