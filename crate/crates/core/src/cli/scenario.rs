//! Scenario files: JSON objects describing one refinement experiment.
//! The schema is documented in `docs/scenario.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curves::{BasisCurve, DEFAULT_GRID};
use crate::measurement::Partition;
use crate::numerics::{self, c, random, CMatrix};
use crate::states::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl Dense {
    fn to_matrix(&self, field: &str, errors: &mut Vec<String>) -> Option<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows == 0 || self.re.iter().any(|r| r.len() != cols) {
            errors.push(format!("{field}.re: ragged or empty rows"));
            return None;
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                errors.push(format!("{field}.im: shape differs from re"));
                return None;
            }
        }
        Some(CMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            c(self.re[i][j], im)
        }))
    }
}

/// An operator: Hamiltonian or curve generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    PauliX,
    PauliY,
    PauliZ,
    Diagonal { values: Vec<f64> },
    Dense(Dense),
    Random {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Standard,
    Random { seed: u64 },
    Dense(Dense),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub eigenvalues: Vec<f64>,
    #[serde(default = "standard_basis")]
    pub basis: BasisSpec,
}

fn standard_basis() -> BasisSpec {
    BasisSpec::Standard
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFrames {
    pub times: Vec<f64>,
    pub frames: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    Static,
    Generated {
        generator: MatrixSpec,
    },
    /// Frames inline or in a JSON file (path relative to the scenario).
    Sampled {
        #[serde(default)]
        file: Option<PathBuf>,
        #[serde(default, flatten)]
        inline: Option<SampledFrames>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionPlan {
    Uniform { n: Vec<usize> },
    Random { n: Vec<usize>, seed: u64 },
}

impl PartitionPlan {
    pub fn sizes(&self) -> &[usize] {
        match self {
            PartitionPlan::Uniform { n } | PartitionPlan::Random { n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// ε, γ, λ and trace-norm estimates.
    Bounds,
    /// Fannes bound, σ-domination and the S(σ) inequality.
    Entropy,
    /// Trace distance ≤ 1e-10 when H commutes with every curve projector.
    Zeno,
}

pub fn all_checks() -> Vec<Check> {
    vec![Check::Bounds, Check::Entropy, Check::Zeno]
}

fn default_a() -> f64 {
    2.0
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    pub hamiltonian: MatrixSpec,
    pub state: StateSpec,
    pub curve: CurveSpec,
    pub tau: f64,
    pub partitions: PartitionPlan,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub root: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Operators and state materialized from a scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub h: CMatrix,
    pub rho: DensityMatrix,
    pub curve: BasisCurve,
    pub partitions: Vec<Partition>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let mut scenario = parse_scenario(&text)?;
    scenario.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    scenario.setup()?;
    Ok(scenario)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Ok(serde_json::from_str(text)?)
}

fn matrix(spec: &MatrixSpec, d: usize, field: &str, errors: &mut Vec<String>) -> Option<CMatrix> {
    let m = match spec {
        MatrixSpec::PauliX => numerics::pauli_x(),
        MatrixSpec::PauliY => numerics::pauli_y(),
        MatrixSpec::PauliZ => numerics::pauli_z(),
        MatrixSpec::Diagonal { values } => numerics::diagonal(values),
        MatrixSpec::Dense(dense) => dense.to_matrix(field, errors)?,
        MatrixSpec::Random { seed, scale } => {
            random::hermitian(d, &mut random::rng(*seed)) * c(*scale, 0.0)
        }
    };
    if m.nrows() != d || m.ncols() != d {
        errors.push(format!("{field}: expected {d}x{d}, found {}x{}", m.nrows(), m.ncols()));
        return None;
    }
    if let Err(e) = numerics::ensure_hermitian(&m) {
        errors.push(format!("{field}: {e}"));
        return None;
    }
    Some(m)
}

impl Scenario {
    /// Validates every field and builds the operators. All violations are
    /// collected before returning.
    pub fn setup(&self) -> Result<Setup, ScenarioError> {
        let mut errors = Vec::new();
        let d = self.dim;
        if d == 0 {
            return Err(ScenarioError::Invalid(vec!["dim: must be positive".into()]));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            errors.push(format!("tau: must be positive, got {}", self.tau));
        }
        if !(self.a > 1.0) {
            errors.push(format!("a: must exceed 1, got {}", self.a));
        }
        if self.grid < 2 {
            errors.push(format!("grid: needs at least 2 points, got {}", self.grid));
        }
        let sizes = self.partitions.sizes();
        if sizes.is_empty() {
            errors.push("partitions.n: empty".into());
        }
        if sizes.contains(&0) {
            errors.push("partitions.n: entries must be positive".into());
        }

        let h = matrix(&self.hamiltonian, d, "hamiltonian", &mut errors);

        let lambdas = &self.state.eigenvalues;
        if lambdas.len() != d {
            errors.push(format!("state.eigenvalues: expected {d} entries, found {}", lambdas.len()));
        }
        if lambdas.iter().any(|&l| !(l >= 0.0)) {
            errors.push("state.eigenvalues: entries must be nonnegative".into());
        }
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            errors.push(format!("state.eigenvalues: sum to {total}, expected 1"));
        }
        let base = match &self.state.basis {
            BasisSpec::Standard => Some(CMatrix::identity(d, d)),
            BasisSpec::Random { seed } => Some(random::unitary(d, &mut random::rng(*seed))),
            BasisSpec::Dense(dense) => dense.to_matrix("state.basis", &mut errors),
        };
        let base = base.filter(|b| {
            let ok = b.nrows() == d && b.ncols() == d;
            if !ok {
                errors.push(format!("state.basis: expected {d}x{d}"));
            }
            ok
        });

        let curve = match (&self.curve, &base) {
            (_, None) => None,
            (CurveSpec::Static, Some(b)) => self.curve_or(BasisCurve::fixed(b.clone(), self.tau), &mut errors),
            (CurveSpec::Generated { generator }, Some(b)) => {
                matrix(generator, d, "curve.generator", &mut errors).and_then(|a| {
                    self.curve_or(BasisCurve::generated(a, b.clone(), self.tau), &mut errors)
                })
            }
            (CurveSpec::Sampled { file, inline }, Some(_)) => {
                self.sampled(file.as_deref(), inline.as_ref(), &mut errors)
            }
        };

        let rho = base.as_ref().filter(|_| lambdas.len() == d).and_then(|b| {
            DensityMatrix::from_spectrum(lambdas, b)
                .map_err(|e| errors.push(format!("state: {e}")))
                .ok()
        });
        if let (Some(rho), Some(curve)) = (&rho, &curve) {
            if let Err(e) = crate::measurement::initial_lambdas(rho, curve) {
                errors.push(format!("curve: initial frame must diagonalize the state ({e})"));
            }
        }

        let mut partitions = Vec::new();
        if let Some(curve) = &curve {
            for (i, &n) in sizes.iter().enumerate().filter(|(_, &n)| n > 0) {
                match self.partition(curve, i, n) {
                    Ok(p) => partitions.push(p),
                    Err(e) => errors.push(format!("partitions.n[{i}] = {n}: {e}")),
                }
            }
        }

        match (errors.is_empty(), h, rho, curve) {
            (true, Some(h), Some(rho), Some(curve)) => Ok(Setup { h, rho, curve, partitions }),
            _ => Err(ScenarioError::Invalid(errors)),
        }
    }

    fn curve_or(
        &self,
        built: crate::Result<BasisCurve>,
        errors: &mut Vec<String>,
    ) -> Option<BasisCurve> {
        built.map_err(|e| errors.push(format!("curve: {e}"))).ok()
    }

    fn sampled(
        &self,
        file: Option<&Path>,
        inline: Option<&SampledFrames>,
        errors: &mut Vec<String>,
    ) -> Option<BasisCurve> {
        let loaded;
        let frames = match (file, inline) {
            (Some(f), None) => {
                let path = self.root.join(f);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| errors.push(format!("curve.file: {}: {e}", path.display())))
                    .ok()?;
                loaded = serde_json::from_str::<SampledFrames>(&text)
                    .map_err(|e| errors.push(format!("curve.file: {e}")))
                    .ok()?;
                &loaded
            }
            (None, Some(inline)) => inline,
            _ => {
                errors.push("curve: sampled needs exactly one of file or times/frames".into());
                return None;
            }
        };
        if frames.times.last().is_some_and(|&t| (t - self.tau).abs() > 1e-12 * self.tau) {
            errors.push("curve.times: must end at tau".into());
        }
        let mats: Vec<CMatrix> = frames
            .frames
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.to_matrix(&format!("curve.frames[{i}]"), errors))
            .collect();
        if mats.len() != frames.frames.len() {
            return None;
        }
        self.curve_or(BasisCurve::sampled(frames.times.clone(), mats), errors)
    }

    /// The i-th partition of the plan. Random partitions on a sampled
    /// curve are drawn from its grid.
    pub fn partition(&self, curve: &BasisCurve, i: usize, n: usize) -> crate::Result<Partition> {
        match &self.partitions {
            PartitionPlan::Uniform { .. } => {
                let p = Partition::uniform(self.tau, n)?;
                curve.check_partition(&p)?;
                Ok(p)
            }
            PartitionPlan::Random { seed, .. } => {
                let seed = seed.wrapping_add(i as u64);
                match curve.kind() {
                    crate::curves::CurveKind::Sampled { times, .. } => {
                        grid_partition(times, n, seed)
                    }
                    _ => Partition::random(self.tau, n, seed),
                }
            }
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "unnamed".into())
    }
}

/// N steps whose interior points are distinct grid times, chosen by seed.
pub fn grid_partition(grid: &[f64], n: usize, seed: u64) -> crate::Result<Partition> {
    use rand::seq::index::sample;
    let interior = grid.len().saturating_sub(2);
    if n == 0 || n - 1 > interior {
        return Err(crate::Error::InvalidArgument(format!(
            "{n} steps need {} interior grid points, have {interior}",
            n.saturating_sub(1)
        )));
    }
    let mut picks: Vec<usize> =
        sample(&mut random::rng(seed), interior, n - 1).into_iter().map(|i| i + 1).collect();
    picks.sort_unstable();
    let mut times = Vec::with_capacity(n + 1);
    times.push(grid[0]);
    times.extend(picks.iter().map(|&i| grid[i]));
    times.push(*grid.last().unwrap());
    Partition::new(times)
}
