//! Run configuration: flat sectioned key=value files plus command-line
//! overrides.

use std::fmt;
use std::path::PathBuf;

use oscbath::ModelParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Which master-equation family a variant integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Redfield,
    Gkls,
}

/// One comparison variant: a method plus structural overrides relative to
/// the base model. `shifted` derives the master equation from the
/// physical Hamiltonian minus the reorganisation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantSpec {
    pub method: Method,
    pub counter_term: Option<bool>,
    pub lamb_shift: Option<bool>,
    pub shifted: bool,
}

impl VariantSpec {
    /// Parse a token such as `exact`, `redfield+ls`, `gkls+shifted+nols`,
    /// `redfield+noct`.
    pub fn parse(token: &str) -> Result<Self, ConfigError> {
        let mut parts = token.split('+').map(str::trim);
        let head = parts.next().unwrap_or_default();
        let method = match head {
            "exact" => Method::Exact,
            "redfield" => Method::Redfield,
            "gkls" => Method::Gkls,
            other => {
                return Err(ConfigError(format!(
                    "unknown method '{other}' in variant '{token}' (expected exact|redfield|gkls)"
                )))
            }
        };
        let mut spec = VariantSpec {
            method,
            counter_term: None,
            lamb_shift: None,
            shifted: false,
        };
        for m in parts {
            match m {
                "ls" => spec.lamb_shift = Some(true),
                "nols" => spec.lamb_shift = Some(false),
                "ct" => spec.counter_term = Some(true),
                "noct" => spec.counter_term = Some(false),
                "shifted" => spec.shifted = true,
                other => {
                    return Err(ConfigError(format!(
                        "unknown modifier '{other}' in variant '{token}'"
                    )))
                }
            }
        }
        if method == Method::Exact && (spec.counter_term.is_some() || spec.lamb_shift.is_some() || spec.shifted)
        {
            return Err(ConfigError(format!(
                "variant '{token}': the exact dynamics takes no modifiers"
            )));
        }
        Ok(spec)
    }

    /// Model parameters of the master-equation derivation for this
    /// variant.
    pub fn me_params(&self, model: &ModelParams) -> oscbath::Result<ModelParams> {
        let mut p = model.clone();
        if let Some(ct) = self.counter_term {
            p.counter_term = ct;
        }
        if self.shifted {
            p = p.shifted()?;
        }
        if let Some(ls) = self.lamb_shift {
            p.lamb_shift = ls;
        }
        p.secular = self.method == Method::Gkls;
        Ok(p)
    }

    /// Column label, e.g. `redfield_ct_ls` or `gkls_shifted_nols`.
    pub fn label(&self, model: &ModelParams) -> String {
        if self.method == Method::Exact {
            return "exact".into();
        }
        let method = match self.method {
            Method::Redfield => "redfield",
            Method::Gkls => "gkls",
            Method::Exact => unreachable!(),
        };
        let ham = if self.shifted {
            "shifted"
        } else if self.counter_term.unwrap_or(model.counter_term) {
            "ct"
        } else {
            "noct"
        };
        let ls = if self.lamb_shift.unwrap_or(model.lamb_shift) {
            "ls"
        } else {
            "nols"
        };
        format!("{method}_{ham}_{ls}")
    }
}

/// One sweep axis.
#[derive(Debug, Clone, Copy)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|i| {
                let s = i as f64 / (self.points - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(s)
                } else {
                    self.min + (self.max - self.min) * s
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.min > 0.0) || !(self.max >= self.min) {
            return Err(ConfigError(format!(
                "{name} range must be positive and ordered, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points == 0 {
            return Err(ConfigError(format!("{name} needs at least one point")));
        }
        Ok(())
    }
}

/// Full run configuration with defaults, file values and flag overrides
/// merged in that order.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelParams,
    pub variants: Vec<VariantSpec>,
    pub t_max: f64,
    pub n_points: usize,
    pub temperature_axis: AxisSpec,
    pub lambda_axis: AxisSpec,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub allow_unstable: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelParams::new(1.0, 0.1, 100.0, 1.0).unwrap(),
            variants: default_variants(),
            t_max: 200.0,
            n_points: 401,
            // declared defaults for the sweep: T in [0.1, 10] and
            // reorganisation lambda*cutoff in [0.01, 20] at cutoff 100,
            // both logarithmic, 25 points each
            temperature_axis: AxisSpec {
                min: 0.1,
                max: 10.0,
                points: 25,
                log: true,
            },
            lambda_axis: AxisSpec {
                min: 1e-4,
                max: 0.2,
                points: 25,
                log: true,
            },
            out: None,
            tol: None,
            allow_unstable: false,
        }
    }
}

/// The standard comparison set: exact dynamics, both master equations
/// with the Lamb shift kept, and both shifted Lamb-shift-free variants.
pub fn default_variants() -> Vec<VariantSpec> {
    [
        "exact",
        "redfield+ls",
        "gkls+ls",
        "redfield+shifted+nols",
        "gkls+shifted+nols",
    ]
    .iter()
    .map(|t| VariantSpec::parse(t).unwrap())
    .collect()
}

pub fn parse_variant_list(s: &str) -> Result<Vec<VariantSpec>, ConfigError> {
    let list: Result<Vec<_>, _> = s
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(VariantSpec::parse)
        .collect();
    let list = list?;
    if list.is_empty() {
        return Err(ConfigError("variant list is empty".into()));
    }
    Ok(list)
}

impl RunConfig {
    /// Parse a sectioned key=value file into `self`, reporting the line
    /// and key of anything malformed.
    pub fn apply_file(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        ConfigError(format!("{path}:{line_no}: unterminated section header"))
                    })?
                    .trim();
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("{path}:{line_no}: expected 'key = value'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            self.apply_key(&section, key, value).map_err(|e| {
                ConfigError(format!("{path}:{line_no}: key '{key}': {}", e.0))
            })?;
        }
        Ok(())
    }

    fn apply_key(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad =
            |what: &str| ConfigError(format!("cannot parse '{value}' as {what}"));
        let as_f64 = |v: &str| v.parse::<f64>().map_err(|_| bad("a number"));
        let as_usize = |v: &str| v.parse::<usize>().map_err(|_| bad("an integer"));
        let as_bool = |v: &str| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(bad("a boolean")),
        };
        let as_scale = |v: &str| match v {
            "log" => Ok(true),
            "linear" => Ok(false),
            _ => Err(bad("'log' or 'linear'")),
        };

        match (section, key) {
            ("model", "omega0") => self.model.omega0 = as_f64(value)?,
            ("model", "lambda") => self.model.lambda = as_f64(value)?,
            ("model", "cutoff") => self.model.cutoff = as_f64(value)?,
            ("model", "temperature") => self.model.temperature = as_f64(value)?,
            ("model", "counter_term") => self.model.counter_term = as_bool(value)?,
            ("model", "lamb_shift") => self.model.lamb_shift = as_bool(value)?,
            ("model", "secular") => self.model.secular = as_bool(value)?,
            ("time", "t_max") => self.t_max = as_f64(value)?,
            ("time", "n_points") => self.n_points = as_usize(value)?,
            ("sweep", "temperature_min") => self.temperature_axis.min = as_f64(value)?,
            ("sweep", "temperature_max") => self.temperature_axis.max = as_f64(value)?,
            ("sweep", "temperature_points") => self.temperature_axis.points = as_usize(value)?,
            ("sweep", "temperature_scale") => self.temperature_axis.log = as_scale(value)?,
            ("sweep", "lambda_min") => self.lambda_axis.min = as_f64(value)?,
            ("sweep", "lambda_max") => self.lambda_axis.max = as_f64(value)?,
            ("sweep", "lambda_points") => self.lambda_axis.points = as_usize(value)?,
            ("sweep", "lambda_scale") => self.lambda_axis.log = as_scale(value)?,
            ("run", "variants") => self.variants = parse_variant_list(value)?,
            ("run", "out") => self.out = Some(PathBuf::from(value)),
            ("run", "tol") => self.tol = Some(as_f64(value)?),
            ("run", "allow_unstable") => self.allow_unstable = as_bool(value)?,
            _ => {
                return Err(ConfigError(format!(
                    "unknown key in section [{section}]"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if !(self.t_max > 0.0) {
            return Err(ConfigError(format!(
                "t_max must be > 0, got {}",
                self.t_max
            )));
        }
        if self.n_points < 2 {
            return Err(ConfigError(format!(
                "n_points must be >= 2, got {}",
                self.n_points
            )));
        }
        self.temperature_axis.validate("temperature sweep")?;
        self.lambda_axis.validate("lambda sweep")?;
        Ok(())
    }

    /// Linear time grid `[0, t_max]` with `n_points` samples.
    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|i| self.t_max * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_tokens() {
        let v = VariantSpec::parse("redfield+shifted+nols").unwrap();
        assert_eq!(v.method, Method::Redfield);
        assert!(v.shifted);
        assert_eq!(v.lamb_shift, Some(false));

        assert!(VariantSpec::parse("exact+ls").is_err());
        assert!(VariantSpec::parse("lindblad").is_err());
    }

    #[test]
    fn variant_labels_and_me_params() {
        let model = ModelParams::new(1.0, 0.1, 100.0, 1.0).unwrap();
        let v = VariantSpec::parse("redfield+shifted+nols").unwrap();
        assert_eq!(v.label(&model), "redfield_shifted_nols");
        let me = v.me_params(&model).unwrap();
        assert_eq!(me.effective_omega_sq(), 1.0);
        assert!(!me.lamb_shift);
        assert!(!me.secular);

        let g = VariantSpec::parse("gkls+ls").unwrap();
        assert_eq!(g.label(&model), "gkls_ct_ls");
        assert!(g.me_params(&model).unwrap().secular);
    }

    #[test]
    fn file_parsing_and_diagnostics() {
        let mut cfg = RunConfig::default();
        cfg.apply_file(
            "[model]\nomega0 = 2.0\nlambda = 0.05 # inline comment\n\n[time]\nt_max = 50\nn_points = 11\n",
            "test.cfg",
        )
        .unwrap();
        assert_eq!(cfg.model.omega0, 2.0);
        assert_eq!(cfg.model.lambda, 0.05);
        assert_eq!(cfg.t_max, 50.0);
        assert_eq!(cfg.time_grid().len(), 11);
        assert_eq!(cfg.time_grid()[0], 0.0);

        let err = cfg
            .apply_file("[model]\nomega_zero = 1\n", "bad.cfg")
            .unwrap_err();
        assert!(err.0.contains("bad.cfg:2"), "{err}");
        assert!(err.0.contains("omega_zero"), "{err}");

        let err = cfg.apply_file("[model]\nomega0: 1\n", "bad2.cfg").unwrap_err();
        assert!(err.0.contains("bad2.cfg:2"), "{err}");
    }

    #[test]
    fn axis_values_log_and_linear() {
        let lin = AxisSpec {
            min: 1.0,
            max: 3.0,
            points: 3,
            log: false,
        };
        assert_eq!(lin.values(), vec![1.0, 2.0, 3.0]);
        let log = AxisSpec {
            min: 0.1,
            max: 10.0,
            points: 3,
            log: true,
        };
        let v = log.values();
        assert!((v[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_grids() {
        let mut cfg = RunConfig::default();
        cfg.n_points = 1;
        assert!(cfg.validate().is_err());
        cfg.n_points = 2;
        cfg.t_max = -1.0;
        assert!(cfg.validate().is_err());
    }
}
