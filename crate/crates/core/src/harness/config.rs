use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SystemModel;
use crate::control::{ControllerConfig, Reference};
use crate::datadriven::NoiseSpec;
use crate::setalg::{IntervalVector, Zonotope};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataOnly {
    DataOnly,
}

/// Either the true plant, used for data generation and the closed loop, or
/// the marker `"data-only"` for recorded data without a known model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Known(SystemModel),
    DataOnly(DataOnly),
}

/// Noise bounds as configured. Without `av`, the bound on `A v` is derived
/// from the known system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub w: Zonotope,
    pub v: Zonotope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub av: Option<Zonotope>,
}

impl NoiseConfig {
    pub fn resolve(&self, system: Option<&SystemModel>) -> Result<NoiseSpec> {
        match (&self.av, system) {
            (Some(av), _) => NoiseSpec::new(self.w.clone(), self.v.clone(), av.clone()),
            (None, Some(s)) => NoiseSpec::with_derived_zav(self.w.clone(), self.v.clone(), &s.a),
            (None, None) => Err(Error::Config(
                "noise.av is required for data-only experiments".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// Manifest of recorded data; required for `"data-only"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub noise: NoiseConfig,
    pub data_count: usize,
    pub input_zonotope: Zonotope,
    pub controller: ControllerConfig,
    /// Initial plant state of the closed-loop phase.
    pub x0: Vec<f64>,
    pub seed: u64,
    pub steps: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// The five-state benchmark with per-dimension noise magnitudes `w` and `v`.
    ///
    /// The reference is the steady state of `u = 6`, which lies below the
    /// `y₂ ≥ 1.9` constraint, and the loop starts at the steady state of `u = 8`.
    /// The horizon is 3: with the high-noise bounds the data-driven reachable
    /// sets outgrow the `y₂` band from the fourth step on.
    pub fn benchmark(w: f64, v: f64) -> Self {
        let sys = SystemModel::benchmark();
        let n = sys.state_dim();
        let ss = |u: f64| {
            sys.steady_state(&DVector::from_element(1, u))
                .expect("I − A invertible")
        };
        let mut controller = ControllerConfig::defaults(n, 1);
        controller.horizon = 3;
        controller.input_bounds = IntervalVector::new(
            DVector::from_element(1, -12.0),
            DVector::from_element(1, 26.0),
        )
        .expect("ordered");
        let mut lo = DVector::from_element(n, f64::NEG_INFINITY);
        let mut hi = DVector::from_element(n, f64::INFINITY);
        lo[1] = 1.9;
        hi[1] = 10.0;
        controller.output_bounds = IntervalVector::new(lo, hi).expect("ordered");
        controller.reference = Reference::constant(ss(6.0), DVector::from_element(1, 6.0));
        let gen = |mag: f64| {
            if mag == 0.0 {
                Zonotope::origin(n)
            } else {
                NoiseSpec::uniform_generator(n, mag)
            }
        };
        Self {
            noise: NoiseConfig {
                w: gen(w),
                v: gen(v),
                av: None,
            },
            data: None,
            data_count: 400,
            input_zonotope: Zonotope::new(
                DVector::from_element(1, 7.0),
                DMatrix::from_element(1, 1, 19.0),
            )
            .expect("shapes agree"),
            controller,
            x0: ss(8.0).as_slice().to_vec(),
            seed: 0,
            steps: 50,
            output_dir: PathBuf::from("runs"),
            system: SystemSpec::Known(sys),
        }
    }

    pub fn system(&self) -> Option<&SystemModel> {
        match &self.system {
            SystemSpec::Known(s) => Some(s),
            SystemSpec::DataOnly(_) => None,
        }
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        self.noise.resolve(self.system())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.controller.validate()?;
        let (n, m) = (self.controller.output_dim(), self.controller.input_dim());
        match self.system() {
            Some(s) => {
                s.validate()?;
                if s.state_dim() != n || s.input_dim() != m {
                    return bad(format!(
                        "system is {}×{} but the controller expects n = {n}, m = {m}",
                        s.state_dim(),
                        s.input_dim()
                    ));
                }
            }
            None => match &self.data {
                None => return bad("data-only experiments need a data manifest".into()),
                Some(p) if !p.exists() => {
                    return bad(format!("data manifest {} does not exist", p.display()))
                }
                Some(_) => {}
            },
        }
        let noise = self.noise_spec()?;
        if noise.dim() != n {
            return bad(format!("noise has dimension {}, expected {n}", noise.dim()));
        }
        if self.input_zonotope.dim() != m {
            return bad(format!(
                "input zonotope has dimension {}, expected {m}",
                self.input_zonotope.dim()
            ));
        }
        if self.x0.len() != n {
            return bad(format!("x0 has length {}, expected {n}", self.x0.len()));
        }
        if self.data_count == 0 {
            return bad("data_count must be at least 1".into());
        }
        Ok(())
    }

    /// Reads and validates a config; a relative `data` path is taken relative
    /// to the config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let Some(d) = &cfg.data {
            if d.is_relative() {
                cfg.data = Some(path.parent().unwrap_or(Path::new(".")).join(d));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
