//! JSON experiment configuration. Every struct rejects unknown keys.

use std::fmt;
use std::path::{Path, PathBuf};

use lowrank_ncvx::direct::{AltMinConfig, ErConfig, SvpConfig};
use lowrank_ncvx::gd::SolverConfig;
use lowrank_ncvx::spectral::{PrScale, Preprocessing};
use serde::{Deserialize, Serialize};

/// Reported for configs that fail to parse or validate; the CLI maps it to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Solve(SolveSpec),
    PhaseTransition(GridSpec),
    RhoCurve(RhoSpec),
    Landscape(LandscapeSpec),
    InitCompare(CompareSpec),
    Acceptance(AcceptanceSpec),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve(_) => "solve",
            Experiment::PhaseTransition(_) => "phase_transition",
            Experiment::RhoCurve(_) => "rho_curve",
            Experiment::Landscape(_) => "landscape",
            Experiment::InitCompare(_) => "init_compare",
            Experiment::Acceptance(_) => "acceptance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    /// Generate the instance from these parameters and the master seed...
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    /// ...or load one written by `gen`.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub problem: ProblemSpec,
    pub axes: Vec<Axis>,
    pub trials: usize,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub problem: ProblemSpec,
    pub inits: Vec<InitSpec>,
    pub trials: usize,
    /// Optional; without axes there is a single cell.
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSpec {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_preps")]
    pub preps: Vec<Preprocessing>,
}

fn default_preps() -> Vec<Preprocessing> {
    vec![Preprocessing::Identity]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    /// Symmetric matrix, row-major rows.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSpec {}

/// One grid axis. `param` names a problem field, or `m_over_n`, which sets
/// m = ⌈value·n⌉ after the other axes are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

pub const M_OVER_N: &str = "m_over_n";

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Sensing {
        n: usize,
        #[serde(default)]
        n2: Option<usize>,
        r: usize,
        m: usize,
        #[serde(default = "default_true")]
        symmetric: bool,
        #[serde(default)]
        noise: f64,
    },
    PhaseRetrieval {
        n: usize,
        m: usize,
        #[serde(default)]
        noise: f64,
        /// Fraction of samples replaced by outliers.
        #[serde(default)]
        outliers: f64,
    },
    QuadraticSensing {
        n: usize,
        r: usize,
        m: usize,
    },
    Completion {
        n: usize,
        #[serde(default)]
        n2: Option<usize>,
        r: usize,
        p: f64,
        #[serde(default = "default_true")]
        symmetric: bool,
    },
    BlindDeconv {
        k: usize,
        n: usize,
        m: usize,
    },
    Rpca {
        n: usize,
        #[serde(default)]
        n2: Option<usize>,
        r: usize,
        p: f64,
        alpha: f64,
        magnitude: f64,
    },
    PhaseSync {
        n: usize,
        sigma: f64,
    },
    JointAlignment {
        n: usize,
        alphabet: usize,
        flip: f64,
    },
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Sensing { .. } => "sensing",
            ProblemSpec::PhaseRetrieval { .. } => "phase_retrieval",
            ProblemSpec::QuadraticSensing { .. } => "quadratic_sensing",
            ProblemSpec::Completion { .. } => "completion",
            ProblemSpec::BlindDeconv { .. } => "blind_deconv",
            ProblemSpec::Rpca { .. } => "rpca",
            ProblemSpec::PhaseSync { .. } => "phase_sync",
            ProblemSpec::JointAlignment { .. } => "joint_alignment",
        }
    }

    /// Copy with grid-axis values substituted, going through the JSON form
    /// so any field can be swept and type errors are reported by name.
    pub fn with_axes(&self, axes: &[(&str, f64)]) -> Result<ProblemSpec, ConfigError> {
        let mut v = serde_json::to_value(self).expect("problem specs serialize");
        let obj = v.as_object_mut().expect("problem specs are objects");
        let mut ratio = None;
        for &(param, value) in axes {
            if param == M_OVER_N {
                ratio = Some(value);
                continue;
            }
            if param == "family" {
                return bad("axis cannot sweep `family`");
            }
            obj.insert(param.to_string(), json_number(value));
        }
        if let Some(c) = ratio {
            let n = obj.get("n").and_then(|n| n.as_u64());
            let Some(n) = n else {
                return bad(format!("axis `{M_OVER_N}` needs a problem with an integer `n`"));
            };
            if !obj.contains_key("m") {
                return bad(format!("axis `{M_OVER_N}` needs a problem with an `m` field"));
            }
            if !(c > 0.0) {
                return bad(format!("axis `{M_OVER_N}` values must be positive, got {c}"));
            }
            obj.insert("m".into(), ((c * n as f64).ceil() as u64).into());
        }
        serde_json::from_value(v).map_err(|e| ConfigError(format!("axis value does not fit the problem: {e}")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |name: &str, v: usize| if v == 0 { bad(format!("problem.{name} must be at least 1")) } else { Ok(()) };
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                bad(format!("problem.{name} must lie in [0, 1], got {v}"))
            }
        };
        match *self {
            ProblemSpec::Sensing { n, r, m, noise, .. } => {
                pos("n", n)?;
                pos("r", r)?;
                pos("m", m)?;
                if !(noise >= 0.0) {
                    return bad("problem.noise must be nonnegative");
                }
            }
            ProblemSpec::PhaseRetrieval { n, m, noise, outliers } => {
                pos("n", n)?;
                pos("m", m)?;
                prob("outliers", outliers)?;
                if !(noise >= 0.0) {
                    return bad("problem.noise must be nonnegative");
                }
            }
            ProblemSpec::QuadraticSensing { n, r, m } => {
                pos("n", n)?;
                pos("r", r)?;
                pos("m", m)?;
            }
            ProblemSpec::Completion { n, r, p, .. } => {
                pos("n", n)?;
                pos("r", r)?;
                prob("p", p)?;
            }
            ProblemSpec::BlindDeconv { k, n, m } => {
                pos("k", k)?;
                pos("n", n)?;
                pos("m", m)?;
            }
            ProblemSpec::Rpca { n, r, p, alpha, magnitude, .. } => {
                pos("n", n)?;
                pos("r", r)?;
                prob("p", p)?;
                prob("alpha", alpha)?;
                if !(magnitude > 0.0) {
                    return bad("problem.magnitude must be positive");
                }
            }
            ProblemSpec::PhaseSync { n, sigma } => {
                pos("n", n)?;
                if !(sigma >= 0.0) {
                    return bad("problem.sigma must be nonnegative");
                }
            }
            ProblemSpec::JointAlignment { n, alphabet, flip } => {
                pos("n", n)?;
                if alphabet < 2 {
                    return bad("problem.alphabet must be at least 2");
                }
                prob("flip", flip)?;
            }
        }
        Ok(())
    }
}

fn json_number(v: f64) -> serde_json::Value {
    if v.fract() == 0.0 && v >= 0.0 && v < 9.0e15 {
        (v as u64).into()
    } else {
        v.into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Family spectral method. `prep` and `scale` apply to phase retrieval only.
    Spectral {
        #[serde(default)]
        prep: Option<Preprocessing>,
        #[serde(default)]
        scale: Option<PrScale>,
    },
    /// Gaussian entries with total norm `scale`·‖truth‖.
    Random {
        #[serde(default = "one")]
        scale: f64,
    },
    Truth,
}

fn one() -> f64 {
    1.0
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Spectral { prep: None, scale: None }
    }
}

impl InitSpec {
    pub fn label(&self) -> String {
        match self {
            InitSpec::Spectral { prep: None, .. } => "spectral".into(),
            InitSpec::Spectral { prep: Some(p), .. } => format!("spectral:{}", p.label()),
            InitSpec::Random { scale } => format!("random({scale})"),
            InitSpec::Truth => "truth".into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            InitSpec::Spectral { prep: Some(p), .. } => p.validate().map_err(|e| ConfigError(format!("init.prep: {e}"))),
            InitSpec::Random { scale } if !(*scale >= 0.0) || !scale.is_finite() => bad("init.scale must be finite and nonnegative"),
            _ => Ok(()),
        }
    }
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    Gd {
        #[serde(default)]
        config: SolverConfig,
    },
    Altmin {
        #[serde(default)]
        config: AltMinConfig,
    },
    ErrorReduction {
        #[serde(default)]
        config: ErConfig,
    },
    /// Starts from zero; the init selection is ignored. `config.r` defaults to the instance rank.
    Svp {
        #[serde(default)]
        config: Option<SvpConfig>,
    },
    Ppm {
        #[serde(default = "one")]
        eta: f64,
        #[serde(default = "hundred")]
        max_iters: usize,
    },
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Gd { config: SolverConfig::default() }
    }
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Gd { .. } => "gd",
            SolverSpec::Altmin { .. } => "altmin",
            SolverSpec::ErrorReduction { .. } => "error_reduction",
            SolverSpec::Svp { .. } => "svp",
            SolverSpec::Ppm { .. } => "ppm",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |e: lowrank_ncvx::Error| ConfigError(format!("solver.config: {e}"));
        match self {
            SolverSpec::Gd { config } => config.validate().map_err(wrap),
            SolverSpec::Altmin { config } => config.validate().map_err(wrap),
            SolverSpec::Ppm { eta, .. } if !(*eta > 0.0) => bad("solver.eta must be positive"),
            _ => Ok(()),
        }
    }
}

fn check_trials(trials: usize) -> Result<(), ConfigError> {
    if trials == 0 {
        bad("trials must be at least 1")
    } else {
        Ok(())
    }
}

fn check_axes(problem: &ProblemSpec, axes: &[Axis], required: bool) -> Result<(), ConfigError> {
    if required && axes.is_empty() {
        return bad("axes must contain at least one axis");
    }
    for (i, a) in axes.iter().enumerate() {
        if a.values.is_empty() {
            return bad(format!("axes[{i}] (`{}`) has no values", a.param));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return bad(format!("axes[{i}] (`{}`) has a non-finite value", a.param));
        }
        if axes[..i].iter().any(|b| b.param == a.param) {
            return bad(format!("axes[{i}] repeats `{}`", a.param));
        }
    }
    // Every axis must land on a real field of the problem.
    let probe: Vec<(&str, f64)> = axes.iter().map(|a| (a.param.as_str(), a.values[0])).collect();
    for (i, a) in axes.iter().enumerate() {
        for &v in &a.values {
            let mut p = probe.clone();
            p[i].1 = v;
            problem.with_axes(&p).map_err(|e| ConfigError(format!("axes[{i}] (`{}` = {v}): {}", a.param, e.0)))?.validate()?;
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                ConfigError(inner.to_string())
            } else {
                ConfigError(format!("{path}: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Ok(ExperimentConfig::from_json(&text)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        match &self.experiment {
            Experiment::Solve(s) => {
                match (&s.problem, &s.instance) {
                    (Some(p), None) => p.validate()?,
                    (None, Some(_)) => {}
                    _ => return bad("solve needs exactly one of `problem` and `instance`"),
                }
                s.init.validate()?;
                s.solver.validate()
            }
            Experiment::PhaseTransition(g) => {
                check_trials(g.trials)?;
                g.problem.validate()?;
                check_axes(&g.problem, &g.axes, true)?;
                g.init.validate()?;
                g.solver.validate()
            }
            Experiment::InitCompare(c) => {
                check_trials(c.trials)?;
                c.problem.validate()?;
                check_axes(&c.problem, &c.axes, false)?;
                if c.inits.is_empty() {
                    return bad("inits must list at least one initializer");
                }
                for i in &c.inits {
                    i.validate()?;
                }
                c.solver.validate()
            }
            Experiment::RhoCurve(r) => {
                check_trials(r.trials)?;
                if r.n == 0 {
                    return bad("n must be at least 1");
                }
                if r.alphas.is_empty() {
                    return bad("alphas must not be empty");
                }
                if r.alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                    return bad("alphas must be positive and finite");
                }
                if r.preps.is_empty() {
                    return bad("preps must not be empty");
                }
                for (i, p) in r.preps.iter().enumerate() {
                    p.validate().map_err(|e| ConfigError(format!("preps[{i}]: {e}")))?;
                }
                Ok(())
            }
            Experiment::Landscape(l) => {
                let n = l.matrix.len();
                if n == 0 || l.matrix.iter().any(|row| row.len() != n) {
                    return bad("matrix must be square and non-empty");
                }
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = (l.matrix[i][j], l.matrix[j][i]);
                        if !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return bad(format!("matrix must be finite and symmetric (entry {i},{j})"));
                        }
                    }
                }
                Ok(())
            }
            Experiment::Acceptance(_) => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr_grid(axes: &str) -> String {
        format!(
            r#"{{"seed": 1, "experiment": {{"kind": "phase_transition",
                "problem": {{"family": "phase_retrieval", "n": 16, "m": 64}},
                "axes": {axes}, "trials": 3}}}}"#
        )
    }

    #[test]
    fn parses_grid_and_sweeps_fields() {
        let cfg = ExperimentConfig::from_json(&pr_grid(r#"[{"param": "m_over_n", "values": [4, 8]}, {"param": "n", "values": [8, 16]}]"#)).unwrap();
        let Experiment::PhaseTransition(g) = &cfg.experiment else { panic!() };
        let p = g.problem.with_axes(&[("m_over_n", 4.0), ("n", 8.0)]).unwrap();
        assert_eq!(p, ProblemSpec::PhaseRetrieval { n: 8, m: 32, noise: 0.0, outliers: 0.0 });
        assert_eq!(cfg.experiment.kind(), "phase_transition");
    }

    #[test]
    fn empty_axis_and_bad_fields_are_rejected() {
        let e = ExperimentConfig::from_json(&pr_grid("[]")).unwrap_err();
        assert!(e.0.contains("axes"), "{e}");
        let e = ExperimentConfig::from_json(&pr_grid(r#"[{"param": "m", "values": []}]"#)).unwrap_err();
        assert!(e.0.contains("no values"), "{e}");
        let e = ExperimentConfig::from_json(&pr_grid(r#"[{"param": "bogus", "values": [1]}]"#)).unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
        let e = ExperimentConfig::from_json(&pr_grid(r#"[{"param": "n", "values": [2.5]}]"#)).unwrap_err();
        assert!(e.0.contains("axes[0]"), "{e}");
    }

    #[test]
    fn unknown_keys_are_reported_with_their_path() {
        let text = r#"{"experiment": {"kind": "solve", "problem": {"family": "phase_retrieval", "n": 8, "m": 40, "nn": 3}}}"#;
        let e = ExperimentConfig::from_json(text).unwrap_err();
        assert!(e.0.contains("nn"), "{e}");
        let text = r#"{"experiment": {"kind": "solve", "problem": {"family": "phase_retrieval", "n": 8, "m": 40},
            "solver": {"method": "gd", "config": {"max_iter": 3}}}}"#;
        let e = ExperimentConfig::from_json(text).unwrap_err();
        assert!(e.0.contains("max_iter"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"experiment": {"kind": "acceptance"}, "sed": 3}"#).unwrap_err();
        assert!(e.0.contains("sed"), "{e}");
    }

    #[test]
    fn zero_trials_and_missing_source_are_rejected() {
        let text = r#"{"experiment": {"kind": "rho_curve", "n": 8, "alphas": [1], "trials": 0}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap_err().0.contains("trials"));
        let text = r#"{"experiment": {"kind": "solve"}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap_err().0.contains("problem"));
    }

    #[test]
    fn landscape_matrix_must_be_symmetric() {
        let text = r#"{"experiment": {"kind": "landscape", "matrix": [[1, 2], [0, 1]]}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
        let text = r#"{"experiment": {"kind": "landscape", "matrix": [[1, -0.5], [-0.5, 1]]}}"#;
        assert!(ExperimentConfig::from_json(text).is_ok());
    }
}
