//! Config-driven batch runs.
//!
//! A run is described by one TOML file. `mode` selects the action; the
//! remaining keys are checked against the mode's requirements. Example:
//!
//! ```toml
//! mode = "simulate"
//! seed = 7
//! output = "out"
//! p_order = 2
//! t_end = 200.0
//! sample_count = 2001
//! amplitudes = [[0.57735026918962576, 0.0], [0.57735026918962576, 0.0], [0.57735026918962576, 0.0]]
//!
//! [params]
//! b12 = 0.5
//! b23 = 0.3
//!
//! [integrator]
//! rel_tol = 1e-10
//! ```
//!
//! Outputs by mode, all written under the output directory:
//!
//! | mode       | files                                  |
//! |------------|----------------------------------------|
//! | `measure`  | `measure.json`                         |
//! | `simulate` | `trajectory.csv`                       |
//! | `sweep`    | one CSV per grid point, `index.json`   |
//! | `verify`   | `verify.json`                          |
//!
//! Relative `input` paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::document::{read_operator, MeasureRecord};
use crate::dynamics::{
    entanglement_series, init_from_amplitudes, integrate, write_csv, IntegrationOptions,
    ModeParams, Trajectory,
};
use crate::error::{Error, Result};
use crate::measure::entanglement_measure;
use crate::norm::NormOptions;
use crate::tensor::C64;
use crate::verify::{run_all, Canary, VerifyOptions, VerifyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Measure,
    Simulate,
    Sweep,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = NormOptions::default();
        Self {
            restarts: d.restarts,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

/// Parameter lists spanning the sweep grid. An omitted axis keeps the
/// value from `[params]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub b12: Option<Vec<f64>>,
    pub b23: Option<Vec<f64>>,
    pub delta21: Option<Vec<f64>>,
    pub delta32: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub cases: usize,
    pub canary: Option<Canary>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            cases: VerifyOptions::default().cases,
            canary: None,
        }
    }
}

fn default_p_order() -> usize {
    2
}

fn default_sample_count() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Operator document for `measure`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub params: Option<ModeParams>,
    /// Initial mode amplitudes as `[re, im]` pairs.
    #[serde(default)]
    pub amplitudes: Option<[[f64; 2]; 3]>,
    #[serde(default = "default_p_order")]
    pub p_order: usize,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub integrator: IntegrationOptions,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse {
            field: "<config>".into(),
            message: e.to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().to_string();
            let field = if path.is_empty() || path == "." {
                message
                    .split('`')
                    .nth(1)
                    .map(str::to_owned)
                    .unwrap_or_else(|| "<config>".to_owned())
            } else {
                path
            };
            Error::Parse { field, message }
        })
    }

    /// Reads a config file and resolves `input` against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = &cfg.input {
            if input.is_relative() {
                cfg.input = Some(base.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions {
            restarts: self.optimizer.restarts,
            tol: self.optimizer.tol,
            max_iter: self.optimizer.max_iter,
            seed: self.seed,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Checks the fields the selected mode requires.
    pub fn validate(&self) -> Result<()> {
        let o = &self.optimizer;
        if !(o.tol > 0.0) {
            return Err(Error::field("optimizer.tol", "must be positive"));
        }
        if o.max_iter == 0 {
            return Err(Error::field("optimizer.max_iter", "must be at least 1"));
        }
        match self.mode {
            Mode::Measure => {
                if self.input.is_none() {
                    return Err(Error::field("input", "required for mode = \"measure\""));
                }
            }
            Mode::Simulate | Mode::Sweep => {
                self.simulation_inputs()?;
                if self.mode == Mode::Sweep {
                    self.grid()?;
                }
            }
            Mode::Verify => {
                if self.verify.cases == 0 {
                    return Err(Error::field("verify.cases", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    fn simulation_inputs(&self) -> Result<(ModeParams, [C64; 3], f64)> {
        let mode = match self.mode {
            Mode::Sweep => "sweep",
            _ => "simulate",
        };
        let params = self
            .params
            .ok_or_else(|| Error::field("params", format!("required for mode = \"{mode}\"")))?;
        params.validate()?;
        let amps = self
            .amplitudes
            .ok_or_else(|| Error::field("amplitudes", format!("required for mode = \"{mode}\"")))?;
        let t_end = self
            .t_end
            .ok_or_else(|| Error::field("t_end", format!("required for mode = \"{mode}\"")))?;
        if !t_end.is_finite() || t_end == 0.0 {
            return Err(Error::field("t_end", "must be finite and nonzero"));
        }
        if self.sample_count < 2 {
            return Err(Error::field("sample_count", "must be at least 2"));
        }
        if self.p_order < 1 {
            return Err(Error::field("p_order", "must be at least 1"));
        }
        let c = amps.map(|[re, im]| C64::new(re, im));
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::field("amplitudes", format!("must be normalized (norm = {norm})")));
        }
        Ok((params, c, t_end))
    }

    /// Grid points in row-major order over (b12, b23, delta21, delta32).
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let base = self
            .params
            .ok_or_else(|| Error::field("params", "required for mode = \"sweep\""))?;
        let grid = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::field("sweep", "required for mode = \"sweep\""))?;
        let axis = |name: &str, values: &Option<Vec<f64>>, default: f64| -> Result<Vec<f64>> {
            match values {
                None => Ok(vec![default]),
                Some(v) if v.is_empty() => Err(Error::field(format!("sweep.{name}"), "must be nonempty")),
                Some(v) if v.iter().any(|x| !x.is_finite()) => {
                    Err(Error::field(format!("sweep.{name}"), "values must be finite"))
                }
                Some(v) => Ok(v.clone()),
            }
        };
        let b12 = axis("b12", &grid.b12, base.b12)?;
        let b23 = axis("b23", &grid.b23, base.b23)?;
        let d21 = axis("delta21", &grid.delta21, base.delta21)?;
        let d32 = axis("delta32", &grid.delta32, base.delta32)?;
        let mut points = Vec::with_capacity(b12.len() * b23.len() * d21.len() * d32.len());
        for (i, &x12) in b12.iter().enumerate() {
            for (j, &x23) in b23.iter().enumerate() {
                for (k, &y21) in d21.iter().enumerate() {
                    for (l, &y32) in d32.iter().enumerate() {
                        points.push(GridPoint {
                            index: [i, j, k, l],
                            params: ModeParams {
                                b12: x12,
                                b23: x23,
                                delta21: y21,
                                delta32: y32,
                                ..base
                            },
                        });
                    }
                }
            }
        }
        Ok(points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    /// Position along the b12, b23, delta21 and delta32 axes.
    pub index: [usize; 4],
    pub params: ModeParams,
}

impl GridPoint {
    pub fn file_name(&self) -> String {
        let [i, j, k, l] = self.index;
        format!("sweep_b12-{i:03}_b23-{j:03}_d21-{k:03}_d32-{l:03}.csv")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Completed with non-convergence warnings.
    Soft,
    Hard,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Hard => 1,
            Status::Soft => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for stderr.
    pub messages: Vec<String>,
}

/// Runs the configured mode, writing into `cfg.output_dir()`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(cfg.output_dir())?;
    match cfg.mode {
        Mode::Measure => run_measure(cfg),
        Mode::Simulate => run_simulate(cfg),
        Mode::Sweep => run_sweep(cfg),
        Mode::Verify => run_verify(cfg),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn run_measure(cfg: &RunConfig) -> Result<RunOutcome> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::field("input", "required for mode = \"measure\""))?;
    let op = read_operator(input)?;
    let report = entanglement_measure(&op, &cfg.norm_options())?;
    let record = MeasureRecord::from(&report);
    let path = cfg.output_dir().join("measure.json");
    write_json(&path, &record)?;
    let mut messages = vec![format!("epsilon_bits = {}", record.epsilon_bits)];
    let status = if report.converged() {
        Status::Success
    } else {
        messages.push("warning: optimizer did not converge; reporting the best value found".into());
        Status::Soft
    };
    Ok(RunOutcome {
        status,
        files: vec![path],
        messages,
    })
}

fn simulate_one(cfg: &RunConfig, params: &ModeParams, c: [C64; 3], t_end: f64) -> Result<Trajectory> {
    let state = init_from_amplitudes(c, params)?;
    let traj = integrate(&state, params, t_end, cfg.sample_count, &cfg.integrator)?;
    Ok(entanglement_series(traj, cfg.p_order))
}

/// Peak ε and the extreme constraint residuals of a trajectory.
pub fn summary_line(traj: &Trajectory) -> String {
    let mut min_res = f64::INFINITY;
    let mut max_res: f64 = 0.0;
    for r in &traj.residuals {
        let m = r.max_abs();
        min_res = min_res.min(m);
        max_res = max_res.max(m);
    }
    format!(
        "samples = {}, peak epsilon = {:.6}, residual min = {:.3e}, max = {:.3e}",
        traj.len(),
        traj.peak_epsilon().unwrap_or(f64::NAN),
        min_res,
        max_res
    )
}

pub fn run_simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    let (params, c, t_end) = cfg.simulation_inputs()?;
    let traj = simulate_one(cfg, &params, c, t_end)?;
    let path = cfg.output_dir().join("trajectory.csv");
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf)?;
    fs::write(&path, buf)?;
    Ok(RunOutcome {
        status: Status::Success,
        files: vec![path],
        messages: vec![summary_line(&traj)],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SweepEntry {
    pub index: [usize; 4],
    pub b12: f64,
    pub b23: f64,
    pub delta21: f64,
    pub delta32: f64,
    pub file: Option<String>,
    pub status: String,
    pub error: Option<String>,
    pub peak_epsilon: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SweepIndex {
    pub seed: u64,
    pub p_order: usize,
    pub t_end: f64,
    pub sample_count: usize,
    pub points: Vec<SweepEntry>,
}

pub fn run_sweep(cfg: &RunConfig) -> Result<RunOutcome> {
    let (_, c, t_end) = cfg.simulation_inputs()?;
    let points = cfg.grid()?;
    let dir = cfg.output_dir();
    let results: Vec<Result<(String, Trajectory)>> = points
        .par_iter()
        .map(|pt| {
            let traj = simulate_one(cfg, &pt.params, c, t_end)?;
            let name = pt.file_name();
            let mut buf = Vec::new();
            write_csv(&traj, &mut buf)?;
            fs::write(dir.join(&name), buf)?;
            Ok((name, traj))
        })
        .collect();

    let mut entries = Vec::with_capacity(points.len());
    let mut files = Vec::new();
    let mut messages = Vec::new();
    for (pt, res) in points.iter().zip(results) {
        let p = pt.params;
        let mut entry = SweepEntry {
            index: pt.index,
            b12: p.b12,
            b23: p.b23,
            delta21: p.delta21,
            delta32: p.delta32,
            file: None,
            status: "ok".into(),
            error: None,
            peak_epsilon: None,
        };
        match res {
            Ok((name, traj)) => {
                entry.peak_epsilon = traj.peak_epsilon();
                files.push(dir.join(&name));
                entry.file = Some(name);
            }
            Err(e) => {
                messages.push(format!("grid point {:?} failed: {e}", pt.index));
                entry.status = "failed".into();
                entry.error = Some(e.to_string());
            }
        }
        entries.push(entry);
    }
    let failed = entries.iter().filter(|e| e.status != "ok").count();
    let index = SweepIndex {
        seed: cfg.seed,
        p_order: cfg.p_order,
        t_end,
        sample_count: cfg.sample_count,
        points: entries,
    };
    let index_path = dir.join("index.json");
    write_json(&index_path, &index)?;
    files.push(index_path);
    messages.push(format!("{} grid point(s), {failed} failed", points.len()));
    Ok(RunOutcome {
        status: if failed == 0 { Status::Success } else { Status::Hard },
        files,
        messages,
    })
}

pub fn run_verify(cfg: &RunConfig) -> Result<RunOutcome> {
    let opts = VerifyOptions {
        cases: cfg.verify.cases,
        seed: cfg.seed,
        norm: cfg.norm_options(),
        canary: cfg.verify.canary,
    };
    let report: VerifyReport = run_all(&opts)?;
    let path = cfg.output_dir().join("verify.json");
    write_json(&path, &report)?;
    let mut messages: Vec<String> = report
        .properties
        .iter()
        .map(|p| {
            format!(
                "{} {}::{} ({} cases, worst {:.3e}, tol {:.0e})",
                if p.passed { "PASS" } else { "FAIL" },
                p.module,
                p.property,
                p.cases,
                p.worst,
                p.tolerance
            )
        })
        .collect();
    let failed = report.failed().count();
    messages.push(format!("{failed} propert{} failed", if failed == 1 { "y" } else { "ies" }));
    Ok(RunOutcome {
        status: if report.passed { Status::Success } else { Status::Hard },
        files: vec![path],
        messages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match RunConfig::parse(text).and_then(|c| c.validate().map(|_| c)) {
            Err(Error::Parse { field, .. }) | Err(Error::InvalidField { field, .. }) => field,
            other => panic!("expected a field error, got {other:?}"),
        }
    }

    #[test]
    fn parses_minimal_verify_config() {
        let cfg = RunConfig::parse("mode = \"verify\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.mode, Mode::Verify);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.verify.cases, 20);
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("seed = 1\n"), "mode");
        assert_eq!(field_of("mode = \"dance\"\n"), "mode");
        assert_eq!(field_of("mode = \"measure\"\n"), "input");
        assert_eq!(field_of("mode = \"verify\"\n[verify]\ncases = 0\n"), "verify.cases");
        assert_eq!(field_of("mode = \"verify\"\nbogus = 1\n"), "bogus");
        assert_eq!(field_of("mode = \"simulate\"\n[params]\nb12 = \"x\"\nb23 = 0.0\n"), "params.b12");
        let sim = "mode = \"simulate\"\nt_end = 1.0\namplitudes = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]\n[params]\nb12 = 1.0\nb23 = 0.0\n";
        RunConfig::parse(sim).unwrap().validate().unwrap();
        assert_eq!(field_of(&format!("sample_count = 1\n{sim}")), "sample_count");
        assert_eq!(
            field_of(&sim.replace("[[1.0, 0.0]", "[[0.5, 0.0]")),
            "amplitudes"
        );
        let sweep = sim.replace("\"simulate\"", "\"sweep\"");
        assert_eq!(field_of(&sweep), "sweep");
        assert_eq!(field_of(&format!("{sweep}[sweep]\nb12 = []\n")), "sweep.b12");
    }

    #[test]
    fn grid_is_row_major_with_stable_names() {
        let text = "mode = \"sweep\"\nt_end = 1.0\namplitudes = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]\n[params]\nb12 = 1.0\nb23 = 0.0\ndelta21 = 0.25\n[sweep]\nb12 = [0.1, 0.2]\nb23 = [0.3, 0.4]\n";
        let pts = RunConfig::parse(text).unwrap().grid().unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1].index, [0, 1, 0, 0]);
        assert_eq!(pts[1].params.b12, 0.1);
        assert_eq!(pts[1].params.b23, 0.4);
        assert_eq!(pts[1].params.delta21, 0.25);
        assert_eq!(pts[3].file_name(), "sweep_b12-001_b23-001_d21-000_d32-000.csv");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Success.exit_code(), 0);
        assert_eq!(Status::Hard.exit_code(), 1);
        assert_eq!(Status::Soft.exit_code(), 2);
    }
}
