//! Config-driven stages. Each returns a [`StageSummary`] and optional files
//! for the output directory.

use std::fs;
use std::path::Path;

use bctau::affine;
use bctau::bicomplex;
use bctau::chtau;
use bctau::connection::{self, FlatConnectionField, Loop};
use bctau::criteria::{self, Bound, Check};
use bctau::gauss;
use bctau::grid::Field;
use bctau::replib::{self, Representation};
use bctau::{mat3, Bicomplex64, CMat3f, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ExperimentConfig};
use crate::manifest::StageSummary;

/// A file written to the output directory.
pub struct Artifact {
    /// File name inside the directory.
    pub name: String,
    /// Contents.
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn json<T: serde::Serialize>(name: &str, value: &T) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serialisable");
        bytes.push(b'\n');
        Self { name: name.into(), bytes }
    }

    fn field(name: &str, f: &Field) -> Self {
        let mut bytes = Vec::new();
        f.write_csv(&mut bytes).expect("in-memory write");
        Self { name: name.into(), bytes }
    }
}

/// Stage output.
pub struct StageRun {
    /// Summary for the manifest.
    pub summary: StageSummary,
    /// Files for `--out`.
    pub artifacts: Vec<Artifact>,
}

impl StageRun {
    fn new(summary: StageSummary) -> Self {
        Self {
            summary,
            artifacts: Vec::new(),
        }
    }

    fn failed(name: &str, criterion: Option<u8>, error: String) -> Self {
        let mut s = StageSummary::new(name, criterion, Vec::new());
        s.error = Some(error);
        Self::new(s)
    }
}

fn flag(name: impl Into<String>, ok: bool) -> Check {
    Check::new(name, if ok { 1.0 } else { 0.0 }, Bound::AtLeast, 1.0)
}

fn exact(name: impl Into<String>, value: usize, expect: usize) -> Check {
    let mut c = Check::new(name, value as f64, Bound::AtMost, expect as f64);
    c.passed = value == expect;
    c
}

/// Seeded invariant table of the model space.
pub fn chtau_check(cfg: &ExperimentConfig) -> StageRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = 50;
    let mut on_quadric = 0.0f64;
    let mut isometry = 0.0f64;
    let mut moment = 0.0f64;
    let mut incidence = true;
    let mut para_holo = 0.0f64;
    let mut sectional = 0.0f64;
    for _ in 0..samples {
        let p = chtau::random_point(&mut rng);
        on_quadric = on_quadric.max((chtau::q_form(&p.rep, &p.rep) + Bicomplex64::from_real(1.0)).norm_max());
        let x = bicomplex::phi_iso(&random_gl3(&mut rng)).expect("invertible by construction");
        let moved = x.apply(&p.rep);
        let q = chtau::q_form(&moved, &moved);
        isometry = isometry.max((q + Bicomplex64::from_real(1.0)).norm_max() / x.norm_max().max(1.0).powi(2));
        let (z, v) = (chtau::random_vector(&mut rng), chtau::random_vector(&mut rng));
        let lhs = chtau::q_form(&z.scale(Bicomplex64::tau()), &v).im_tau();
        moment = moment.max((lhs - chtau::q_form(&z, &v).re_tau()).norm());
        match chtau::from_incidence(&chtau::to_incidence(&p)) {
            Ok(back) => incidence &= chtau::same_point(&p, &back),
            Err(_) => incidence = false,
        }
        let t1 = chtau::project_tangent(&p, &chtau::random_vector(&mut rng));
        let t2 = chtau::project_tangent(&p, &chtau::random_vector(&mut rng));
        if let Ok(k) = chtau::para_holo_sectional(&p, &t1) {
            para_holo = para_holo.max((k - chtau::PARA_HOLO_CURVATURE).norm());
        }
        if let (Ok(a), Ok(b)) = (chtau::sectional_submersion(&t1, &t2), chtau::sectional_riemann(&t1, &t2)) {
            sectional = sectional.max((a - b).norm() / (1.0 + a.norm()));
        }
    }
    let checks = vec![
        Check::new("|q(p, p) + 1| on random points", on_quadric, Bound::AtMost, 1e-12),
        Check::new("isometries preserve q", isometry, Bound::AtMost, 1e-10),
        Check::new("moment map identity", moment, Bound::AtMost, 1e-12),
        flag("incidence model round trip", incidence),
        Check::new("para-holomorphic sectional curvature + 4", para_holo, Bound::AtMost, 1e-9),
        Check::new("submersion vs curvature tensor sectional", sectional, Bound::AtMost, 1e-9),
    ];
    StageRun::new(StageSummary::new("chtau invariants", None, checks))
}

fn random_gl3(rng: &mut ChaCha8Rng) -> CMat3f {
    loop {
        let rows = [0, 1, 2].map(|_| chtau::random_vector(rng).plus);
        if mat3::det(&rows).norm() > 0.1 {
            return rows;
        }
    }
}

/// The connection of a solved datum.
struct Solved {
    conn: FlatConnectionField,
}

fn solve(cfg: &ExperimentConfig, n: usize) -> Result<(StageRun, Option<Solved>), ConfigError> {
    let problem = cfg.gauss_problem(n)?;
    let name = "gauss solve";
    let report = match gauss::solve_newton(&problem, &cfg.solve_options()) {
        Ok(r) => r,
        Err(e) => return Ok((StageRun::failed(name, Some(4), e.to_string()), None)),
    };
    let residual = gauss::residual_background(&report.psi, &problem).max_abs();
    let checks = vec![
        flag(format!("N = {n} Newton converged"), report.converged),
        Check::new(format!("N = {n} final residual"), residual, Bound::AtMost, cfg.tolerances.newton),
    ];
    let psi = &problem.background.psi + &report.psi;
    let mut run = StageRun::new(StageSummary::new(name, Some(4), checks));
    run.artifacts.push(Artifact::json("solve.json", &report));
    run.artifacts.push(Artifact::field("psi.csv", &report.psi));
    let solved = connection::assemble(&psi, &problem.effective_cubic(), &problem.background.chart)
        .ok()
        .map(|conn| Solved { conn });
    Ok((run, solved))
}

/// `gauss solve`: Newton solve of the configured problem.
pub fn gauss_solve(cfg: &ExperimentConfig) -> Result<StageRun, ConfigError> {
    Ok(solve(cfg, cfg.grid_or_default())?.0)
}

fn flatness_stage(cfg: &ExperimentConfig, s: &Solved) -> StageRun {
    let n = s.conn.n();
    let mc = connection::maurer_cartan_residual(&s.conn);
    let heat = Field::from_vec(n, mc.iter().map(|m| m.norm_max().into()).collect());
    let checks = vec![
        Check::new(format!("N = {n} Maurer-Cartan residual"), heat.max_abs(), Bound::AtMost, cfg.tolerances.flatness),
        Check::new("trace defect", s.conn.trace_defect(), Bound::AtMost, 1e-12),
        Check::new("compatibility defect", s.conn.compat_defect(), Bound::AtMost, 1e-12),
    ];
    let mut run = StageRun::new(StageSummary::new("flatness", Some(5), checks));
    run.artifacts.push(Artifact::field("flatness.csv", &heat));
    run
}

fn holonomy_checks(cfg: &ExperimentConfig, name: &str, h: &connection::HolonomyReport) -> Vec<Check> {
    let tol = cfg.tolerances.holonomy;
    let det = (mat3::det(&h.frame.plus) - 1.0).norm();
    let image = bicomplex::phi_defect(&h.ambient).unwrap_or(f64::INFINITY);
    vec![
        Check::new(format!("{name}: |det e+ part - 1|"), det, Bound::AtMost, tol),
        Check::new(format!("{name}: X- = Q (X+^-1)^T Q defect"), image, Bound::AtMost, tol),
    ]
}

fn periods_stage(cfg: &ExperimentConfig, s: &Solved) -> StageRun {
    let n = s.conn.n();
    let hx = connection::holonomy_checked(&s.conn, &Loop::x_period(n, 0));
    let hy = connection::holonomy_checked(&s.conn, &Loop::y_period(n, 0));
    let mut checks = holonomy_checks(cfg, "x period", &hx);
    checks.extend(holonomy_checks(cfg, "y period", &hy));
    let comm = hx.frame.mul(&hy.frame).dist(&hy.frame.mul(&hx.frame));
    checks.push(Check::new("period commutator", comm, Bound::AtMost, 10.0 / n as f64));
    let mut summary = StageSummary::new("period holonomy", Some(6), checks);
    summary.note = hx.warning.clone();
    let mut run = StageRun::new(summary);
    run.artifacts.push(Artifact::json("periods.json", &[&hx, &hy]));
    run
}

/// Parses `x`, `y` or a JSON loop file.
pub fn parse_loop(spec: &str, n: usize) -> Result<Loop, ConfigError> {
    match spec {
        "x" => Ok(Loop::x_period(n, 0)),
        "y" => Ok(Loop::y_period(n, 0)),
        path => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{path}: {e}")))?;
            Loop::from_json(&text, n).map_err(|e| ConfigError(format!("{path}: {e}")))
        }
    }
}

/// `conn holonomy`: solve, assemble and transport around one loop.
pub fn conn_holonomy(cfg: &ExperimentConfig, spec: &str) -> Result<Vec<StageRun>, ConfigError> {
    let n = cfg.grid_or_default();
    let lp = parse_loop(spec, n)?;
    let (solve_run, solved) = solve(cfg, n)?;
    let mut runs = vec![solve_run];
    if let Some(s) = solved {
        let flat = flatness_stage(cfg, &s);
        let h = connection::holonomy_checked(&s.conn, &lp);
        let mut summary = StageSummary::new("loop holonomy", Some(6), holonomy_checks(cfg, "loop", &h));
        summary.note = h.warning.clone();
        let mut run = StageRun::new(summary);
        run.artifacts.push(Artifact::json("holonomy.json", &h));
        runs.push(flat);
        runs.push(run);
    }
    Ok(runs)
}

fn fplus_csv(pair: &affine::AffinePair) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "x", "y", "z"]).expect("in-memory write");
    for (k, v) in pair.fplus.iter().enumerate() {
        let (i, j) = (k % pair.n, k / pair.n);
        w.write_record([i.to_string(), j.to_string(), v.x.to_string(), v.y.to_string(), v.z.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// The `f+` point cloud of the Wang data for constant `q`.
pub fn fplus_artifact(n: usize, q: Complex64) -> Result<Artifact, String> {
    let psi = criteria::wang_solution(n, q)?;
    let conn = connection::assemble(&psi, &bctau::metric::CubicPair::constant(n, q, q), &bctau::metric::BeltramiChart::flat(n))
        .map_err(|e| e.to_string())?;
    let fi = affine::integrate_frame(&conn).map_err(|e| e.to_string())?;
    Ok(Artifact {
        name: "fplus.csv".into(),
        bytes: fplus_csv(&fi.pair),
    })
}

/// `affine roundtrip --config`: the Wang-data pipeline for the configured `q`.
pub fn affine_roundtrip(cfg: &ExperimentConfig) -> Result<StageRun, ConfigError> {
    let q = cfg.hitchin_q().ok_or_else(|| {
        ConfigError("affine roundtrip needs Hitchin-locus data: flat chart, zero background, K_g = 0 and alpha = beta constant".into())
    })?;
    let n = cfg.grid.unwrap_or(128);
    Ok(affine_stage(n, q))
}

fn affine_stage(n: usize, q: Complex64) -> StageRun {
    let name = "affine roundtrip";
    let mut run = match criteria::affine_checks(n, q) {
        Ok(checks) => StageRun::new(StageSummary::new(name, Some(8), checks)),
        Err(e) => return StageRun::failed(name, Some(8), e),
    };
    match fplus_artifact(n, q) {
        Ok(a) => run.artifacts.push(a),
        Err(e) => run.summary.note = Some(format!("f+ point cloud not written: {e}")),
    }
    run
}

/// `rep goldman --config`.
pub fn rep_goldman(cfg: &ExperimentConfig) -> StageRun {
    let name = "Goldman pairing";
    match criteria::goldman_checks(cfg.qdot(), &cfg.goldman.grids) {
        Ok(checks) => StageRun::new(StageSummary::new(name, Some(7), checks)),
        Err(e) => StageRun::failed(name, Some(7), e),
    }
}

/// Built-in generator sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Example {
    /// The irreducible image of a one-holed-torus Fuchsian pair.
    Fuchsian,
    /// Seeded upper-triangular generators sharing a flag.
    Reducible,
}

/// Loads generators from a JSON file.
pub fn load_generators(path: &Path) -> Result<Representation, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Representation::from_json(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// `rep anosov`: scan a representation up to word length `len`.
pub fn rep_anosov(cfg: &ExperimentConfig, rep: &Representation, len: usize) -> StageRun {
    let name = "Anosov scan";
    let report = match replib::anosov_scan(rep, len, &cfg.anosov_tolerances()) {
        Ok(r) => r,
        Err(e) => return StageRun::failed(name, Some(10), e.to_string()),
    };
    let tol = cfg.tolerances.transversality;
    let checks = vec![
        Check::new("transversality", report.min_transversality, Bound::AtLeast, tol),
        flag(format!("all words up to length {len} loxodromic"), report.first_failure.is_none()),
        exact("centraliser dimension", report.centralizer_dim, 1),
    ];
    let mut obstructions = Vec::new();
    if let (Some((a, b)), true) = (&report.worst_pair, report.min_transversality < tol) {
        obstructions.push(format!("flags of {a} and {b} are not transverse"));
    }
    if let Some(w) = &report.first_failure {
        obstructions.push(format!("word {w} is not loxodromic"));
    }
    let mut summary = StageSummary::new(name, Some(10), checks);
    summary.note = Some(if obstructions.is_empty() { report.claim() } else { obstructions.join("; ") });
    let mut run = StageRun::new(summary);
    run.artifacts.push(Artifact::json("anosov.json", &report));
    run
}

/// `pipeline`: solve, assemble, flatness, holonomy and, on the Hitchin
/// locus, the affine roundtrip.
pub fn pipeline(cfg: &ExperimentConfig) -> Result<Vec<StageRun>, ConfigError> {
    let n = cfg.grid_or_default();
    let (solve_run, solved) = solve(cfg, n)?;
    let mut runs = vec![solve_run];
    let Some(s) = solved else {
        return Ok(runs);
    };
    runs.push(flatness_stage(cfg, &s));
    runs.push(periods_stage(cfg, &s));
    if let Some(q) = cfg.hitchin_q() {
        runs.push(affine_stage(n, q));
    }
    Ok(runs)
}
