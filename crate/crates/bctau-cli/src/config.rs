//! Experiment configuration: a TOML file validated before any compute.

use std::fs;
use std::path::{Path, PathBuf};

use bctau::gauss::{GaussProblem, SolveOptions};
use bctau::grid::Field;
use bctau::metric::{self, BeltramiChart, ComplexMetric, CubicPair, MapMode};
use bctau::replib::AnosovTolerances;
use bctau::Complex64;
use serde::{Deserialize, Serialize};

/// Default grid of config-driven stages when neither the file nor `--grid` sets one.
pub const DEFAULT_GRID: usize = 64;

/// Smallest accepted grid.
pub const MIN_GRID: usize = 8;

/// A complex number written as `[re, im]`.
pub type C2 = [f64; 2];

fn c(v: C2) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Invalid or unreadable configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Top-level configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Grid size; criteria fall back to their own resolutions when unset.
    pub grid: Option<usize>,
    /// RNG seed.
    pub seed: u64,
    /// Output directory; not part of the experiment, so never serialised.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    /// Beltrami chart.
    pub chart: ChartSpec,
    /// Background metric and its curvature.
    pub background: BackgroundSpec,
    /// Cubic differential pair.
    pub cubic: CubicSpec,
    /// Acceptance tolerances.
    pub tolerances: Tolerances,
    /// Newton and Krylov limits.
    pub solver: SolverLimits,
    /// Representation diagnostics.
    pub rep: RepSpec,
    /// Goldman pairing study.
    pub goldman: GoldmanSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: None,
            seed: 20241,
            output: None,
            chart: ChartSpec::default(),
            background: BackgroundSpec::default(),
            cubic: CubicSpec::default(),
            tolerances: Tolerances::default(),
            solver: SolverLimits::default(),
            rep: RepSpec::default(),
            goldman: GoldmanSpec::default(),
        }
    }
}

/// One Fourier term of the chart map, amplitude as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Wavenumber in `x`.
    pub kx: i32,
    /// Wavenumber in `y`.
    pub ky: i32,
    /// Amplitude.
    pub c: C2,
}

/// The chart `w = z - mu zbar + modes`, or `w_z`, `w_zbar` from CSV files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChartSpec {
    /// Constant Beltrami coefficient of the linear part.
    pub mu: C2,
    /// Periodic corrections to the chart map.
    pub modes: Vec<ModeSpec>,
    /// CSV field of `w_z`; needs `r_file`.
    pub p_file: Option<PathBuf>,
    /// CSV field of `w_zbar`; needs `p_file`.
    pub r_file: Option<PathBuf>,
}

/// Choice of `K_g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KgChoice {
    /// `K_g = 0`.
    #[default]
    Zero,
    /// `K_g = -1`.
    MinusOne,
    /// The discrete curvature of the background metric.
    Discrete,
    /// A CSV field (`kg_file`).
    File,
}

/// Background metric `2 e^{2 psi} dz dwbar` with constant `psi`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSpec {
    /// Constant background conformal factor.
    pub psi: C2,
    /// Curvature choice.
    pub kg: KgChoice,
    /// CSV field for `kg = "file"`.
    pub kg_file: Option<PathBuf>,
}

/// `alpha` and `beta` as constants or CSV fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CubicSpec {
    /// Constant `alpha`, ignored when `alpha_file` is set.
    pub alpha: C2,
    /// Constant `beta`, ignored when `beta_file` is set.
    pub beta: C2,
    /// CSV field of `alpha`.
    pub alpha_file: Option<PathBuf>,
    /// CSV field of `beta`.
    pub beta_file: Option<PathBuf>,
    /// Project onto holomorphic data before solving.
    pub holomorphic: bool,
}

impl Default for CubicSpec {
    fn default() -> Self {
        Self {
            alpha: [1.0, 0.0],
            beta: [1.0, 0.0],
            alpha_file: None,
            beta_file: None,
            holomorphic: false,
        }
    }
}

/// Tolerances of the config-driven stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Newton stopping residual.
    pub newton: f64,
    /// Smallest relative tolerance of the linear solver.
    pub linear: f64,
    /// Largest accepted Maurer-Cartan residual.
    pub flatness: f64,
    /// Largest accepted holonomy determinant and compatibility defect.
    pub holonomy: f64,
    /// Relative eigenvalue gap for loxodromy.
    pub gap: f64,
    /// Smallest accepted flag transversality.
    pub transversality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let a = AnosovTolerances::default();
        let s = SolveOptions::default();
        Self {
            newton: s.tol,
            linear: s.linear_tol,
            flatness: bctau::connection::FLATNESS_WARN,
            holonomy: 1e-9,
            gap: a.gap,
            transversality: a.transversality,
        }
    }
}

/// Iteration caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverLimits {
    /// Newton iterations.
    pub max_iter: usize,
    /// Step halvings per Newton step.
    pub max_halvings: usize,
    /// Krylov iterations per linear solve.
    pub linear_max_iter: usize,
}

impl Default for SolverLimits {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self {
            max_iter: s.max_iter,
            max_halvings: s.max_halvings,
            linear_max_iter: s.linear_max_iter,
        }
    }
}

/// Representation scan settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepSpec {
    /// Generator file, JSON list of 3x3 complex matrices.
    pub gens: Option<PathBuf>,
    /// Maximal word length.
    pub len: usize,
}

impl Default for RepSpec {
    fn default() -> Self {
        Self { gens: None, len: 5 }
    }
}

/// Goldman study settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoldmanSpec {
    /// Vertical direction.
    pub qdot: C2,
    /// Grids of the proportionality check.
    pub grids: Vec<usize>,
}

impl Default for GoldmanSpec {
    fn default() -> Self {
        let q = bctau::criteria::GOLDMAN_QDOT;
        Self {
            qdot: [q.re, q.im],
            grids: bctau::criteria::GOLDMAN_GRIDS.to_vec(),
        }
    }
}

/// Largest word length accepted by `rep anosov`; the word count grows like `3^L`.
pub const MAX_WORD_LEN: usize = 8;

impl ExperimentConfig {
    /// Reads and validates a file. Relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.chart.p_file);
        fix(&mut self.chart.r_file);
        fix(&mut self.background.kg_file);
        fix(&mut self.cubic.alpha_file);
        fix(&mut self.cubic.beta_file);
        fix(&mut self.rep.gens);
    }

    /// Grid of config-driven stages.
    pub fn grid_or_default(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    /// Checks everything that does not need the data files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(n) = self.grid {
            if n < MIN_GRID {
                return Err(cfg_err(format!("grid = {n} is below {MIN_GRID}")));
            }
        }
        let mu = c(self.chart.mu);
        let finite = [self.chart.mu, self.background.psi, self.cubic.alpha, self.cubic.beta, self.goldman.qdot]
            .iter()
            .flatten()
            .all(|x| x.is_finite());
        if !finite {
            return Err(cfg_err("non-finite number"));
        }
        if !metric::symbol_check(mu) {
            return Err(cfg_err(format!(
                "chart.mu = {mu}: the principal symbol of the Laplacian has a real root (|mu| = 1)"
            )));
        }
        if mu.norm() >= 1.0 {
            return Err(cfg_err(format!("chart.mu = {mu}: |mu| must be below 1 for a positive metric")));
        }
        if self.chart.p_file.is_some() != self.chart.r_file.is_some() {
            return Err(cfg_err("chart.p_file and chart.r_file must be given together"));
        }
        if (self.background.kg == KgChoice::File) != self.background.kg_file.is_some() {
            return Err(cfg_err("background.kg_file is required exactly when background.kg = \"file\""));
        }
        let t = &self.tolerances;
        let positive = [t.newton, t.linear, t.flatness, t.holonomy, t.gap, t.transversality]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0);
        if !positive {
            return Err(cfg_err("tolerances must be positive"));
        }
        if self.solver.max_iter == 0 || self.solver.linear_max_iter == 0 {
            return Err(cfg_err("solver iteration caps must be positive"));
        }
        if !(1..=MAX_WORD_LEN).contains(&self.rep.len) {
            return Err(cfg_err(format!("rep.len must be in 1..={MAX_WORD_LEN}")));
        }
        if self.goldman.grids.is_empty() || self.goldman.grids.iter().any(|&n| n < MIN_GRID) {
            return Err(cfg_err(format!("goldman.grids must be nonempty and at least {MIN_GRID}")));
        }
        Ok(())
    }

    /// Newton settings.
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tolerances.newton,
            max_iter: self.solver.max_iter,
            max_halvings: self.solver.max_halvings,
            linear_tol: self.tolerances.linear,
            linear_max_iter: self.solver.linear_max_iter,
        }
    }

    /// Anosov scan thresholds.
    pub fn anosov_tolerances(&self) -> AnosovTolerances {
        AnosovTolerances {
            gap: self.tolerances.gap,
            transversality: self.tolerances.transversality,
        }
    }

    /// Vertical direction of the Goldman study.
    pub fn qdot(&self) -> Complex64 {
        c(self.goldman.qdot)
    }

    /// The chart on an `n` grid.
    pub fn chart(&self, n: usize) -> Result<BeltramiChart, ConfigError> {
        let chart = match (&self.chart.p_file, &self.chart.r_file) {
            (Some(p), Some(r)) => BeltramiChart::from_derivatives(&read_field(p, n)?, &read_field(r, n)?),
            _ => {
                let modes: Vec<MapMode> = self
                    .chart
                    .modes
                    .iter()
                    .map(|m| MapMode { kx: m.kx, ky: m.ky, c: c(m.c) })
                    .collect();
                BeltramiChart::from_map(n, -c(self.chart.mu), &modes)
            }
        }
        .map_err(|e| cfg_err(format!("chart: {e}")))?;
        if !metric::symbol_check_field(&chart.mu) {
            return Err(cfg_err("chart: the principal symbol of the Laplacian has a real root (|mu| = 1)"));
        }
        Ok(chart)
    }

    /// The cubic pair on an `n` grid.
    pub fn cubic(&self, n: usize) -> Result<CubicPair, ConfigError> {
        let field = |file: &Option<PathBuf>, v: C2| match file {
            Some(p) => read_field(p, n),
            None => Ok(Field::constant(n, c(v))),
        };
        Ok(CubicPair {
            alpha: field(&self.cubic.alpha_file, self.cubic.alpha)?,
            beta: field(&self.cubic.beta_file, self.cubic.beta)?,
            holomorphic: self.cubic.holomorphic,
        })
    }

    /// The Gauss problem on an `n` grid.
    pub fn gauss_problem(&self, n: usize) -> Result<GaussProblem, ConfigError> {
        let chart = self.chart(n)?;
        let bg = ComplexMetric::new(Field::constant(n, c(self.background.psi)), chart)
            .map_err(|e| cfg_err(format!("background: {e}")))?;
        let kg = match self.background.kg {
            KgChoice::Zero => Field::zeros(n),
            KgChoice::MinusOne => Field::constant(n, (-1.0).into()),
            KgChoice::Discrete => metric::curvature(&bg),
            KgChoice::File => read_field(self.background.kg_file.as_ref().expect("validated"), n)?,
        };
        GaussProblem::new(bg, kg, self.cubic(n)?, None).map_err(|e| cfg_err(e.to_string()))
    }

    /// Constant `q` when the data lie on the Hitchin locus: flat chart, real
    /// constant background, `K_g = 0` and `alpha = beta` constant.
    pub fn hitchin_q(&self) -> Option<Complex64> {
        let flat = self.chart.mu == [0.0, 0.0] && self.chart.modes.is_empty() && self.chart.p_file.is_none();
        let files = self.cubic.alpha_file.is_some() || self.cubic.beta_file.is_some();
        let on_locus = flat
            && !files
            && self.background.psi == [0.0, 0.0]
            && self.background.kg == KgChoice::Zero
            && self.cubic.alpha == self.cubic.beta;
        on_locus.then(|| c(self.cubic.alpha))
    }
}

fn read_field(path: &Path, n: usize) -> Result<Field, ConfigError> {
    let file = fs::File::open(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    let f = Field::read_csv(file).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
    if f.n() != n {
        return Err(cfg_err(format!("{}: grid {} does not match {n}", path.display(), f.n())));
    }
    Ok(f)
}
