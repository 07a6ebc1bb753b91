//! Representation diagnostics: the irreducible embedding `SL(2) -> SL(3)`,
//! loxodromy and fixed flags, an Anosov necessary-condition scan, the
//! centraliser dimension and the Goldman pairing of connection variations.

use nalgebra::{Complex, DMatrix, Matrix3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chtau::{self, Flag};
use crate::connection::{self, ConnectionError};
use crate::grid::Field;
use crate::metric::{BeltramiChart, ComplexMetric, CubicPair};
use crate::{mat3, BcMat3f, Bicomplex64, CMat3f, CVec3f};

/// `|det - 1|` accepted for `SL(2)` input to [`irreducible_embed`].
pub const UNIMODULAR_TOL_2: f64 = 1e-12;
/// `|det - 1|` accepted for generators and [`loxodromy`] input.
pub const UNIMODULAR_TOL_3: f64 = 1e-8;
/// Tolerance for relation words.
pub const RELATION_TOL: f64 = 1e-8;
/// Singular values below this level count towards the centraliser.
pub const CENTRALIZER_TOL: f64 = 1e-8;

/// Errors raised by the representation layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepError {
    /// Input is not unimodular.
    #[error("determinant deviates from 1 by {0:e}")]
    NotUnimodular(f64),
    /// Eigenvalues are distinct but eigenvectors are dependent.
    #[error("matrix is not diagonalizable within tolerance (eigenvector determinant {0:e})")]
    NotDiagonalizable(f64),
    /// A relation word does not evaluate to the identity.
    #[error("relation {word} evaluates to distance {distance:e} from the identity")]
    RelationFails {
        /// The relation.
        word: String,
        /// Distance from the identity.
        distance: f64,
    },
    /// A word uses an unknown letter.
    #[error("word {0} uses a letter outside the generators")]
    BadWord(String),
    /// Generator file could not be parsed.
    #[error("generator file: {0}")]
    Parse(String),
    /// No generators.
    #[error("representation has no generators")]
    Empty,
}

/// Tolerance ladder of the Anosov scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnosovTolerances {
    /// Minimal relative eigenvalue gap for loxodromy.
    pub gap: f64,
    /// Minimal transversality.
    pub transversality: f64,
}

impl Default for AnosovTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            transversality: 1e-8,
        }
    }
}

/// The symmetric-square action on `(x^2, xy, y^2)`.
pub fn irreducible_embed(a: &[[Complex64; 2]; 2]) -> Result<CMat3f, RepError> {
    let [[p, q], [r, s]] = *a;
    let det = p * s - q * r;
    let d = (det - 1.0).norm();
    if d > UNIMODULAR_TOL_2 || !d.is_finite() {
        return Err(RepError::NotUnimodular(d));
    }
    Ok([
        [p * p, p * q, q * q],
        [2.0 * p * r, p * s + q * r, 2.0 * q * s],
        [r * r, r * s, s * s],
    ])
}

/// Generators of a representation with optional relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    /// Generator matrices; generator `k` is the letter `'a' + k`, its
    /// inverse the upper-case letter.
    pub generators: Vec<CMat3f>,
    /// Relation words, empty if unknown.
    #[serde(default)]
    pub relations: Vec<String>,
}

impl Representation {
    /// Validates unimodularity and relations.
    pub fn new(generators: Vec<CMat3f>, relations: Vec<String>) -> Result<Self, RepError> {
        if generators.is_empty() {
            return Err(RepError::Empty);
        }
        for g in &generators {
            let d = (mat3::det(g) - 1.0).norm();
            if d > UNIMODULAR_TOL_3 || !d.is_finite() {
                return Err(RepError::NotUnimodular(d));
            }
        }
        let rep = Self {
            generators,
            relations,
        };
        for w in &rep.relations {
            let m = rep.evaluate(w)?;
            let distance = mat3::dist(&m, &mat3::identity());
            if distance > RELATION_TOL {
                return Err(RepError::RelationFails {
                    word: w.clone(),
                    distance,
                });
            }
        }
        Ok(rep)
    }

    /// Parses a JSON list of `3x3` complex matrices (entries `[re, im]`), or an
    /// object with `generators` and `relations`.
    pub fn from_json(text: &str) -> Result<Self, RepError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Bare(Vec<CMat3f>),
            Full(Representation),
        }
        let f: File = serde_json::from_str(text).map_err(|e| RepError::Parse(e.to_string()))?;
        match f {
            File::Bare(g) => Self::new(g, Vec::new()),
            File::Full(r) => Self::new(r.generators, r.relations),
        }
    }

    fn letter(&self, c: char) -> Result<CMat3f, RepError> {
        let k = c.to_ascii_lowercase() as i64 - 'a' as i64;
        if !c.is_ascii_alphabetic() || k < 0 || k as usize >= self.generators.len() {
            return Err(RepError::BadWord(c.to_string()));
        }
        let g = self.generators[k as usize];
        if c.is_ascii_uppercase() {
            mat3::inverse(&g).ok_or(RepError::NotUnimodular(f64::INFINITY))
        } else {
            Ok(g)
        }
    }

    /// Product of the letters of `word` from left to right.
    pub fn evaluate(&self, word: &str) -> Result<CMat3f, RepError> {
        word.chars().try_fold(mat3::identity(), |acc, c| Ok(mat3::mul(&acc, &self.letter(c)?)))
    }

    /// `g^-1 rho g`.
    pub fn conjugate(&self, g: &CMat3f) -> Option<Self> {
        let gi = mat3::inverse(g)?;
        Some(Self {
            generators: self.generators.iter().map(|m| mat3::mul(&mat3::mul(&gi, m), g)).collect(),
            relations: self.relations.clone(),
        })
    }

    /// Reduced words of length `1..=max_len`, in shortlex order.
    pub fn reduced_words(&self, max_len: usize) -> Vec<String> {
        let letters: Vec<char> = (0..self.generators.len())
            .flat_map(|k| {
                let c = (b'a' + k as u8) as char;
                [c, c.to_ascii_uppercase()]
            })
            .collect();
        let mut out = Vec::new();
        let mut layer: Vec<String> = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for &c in &letters {
                    if w.chars().last().map_or(false, |l| inverse_letter(l) == c) {
                        continue;
                    }
                    let mut v = w.clone();
                    v.push(c);
                    next.push(v);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

fn inverse_letter(c: char) -> char {
    if c.is_ascii_lowercase() {
        c.to_ascii_uppercase()
    } else {
        c.to_ascii_lowercase()
    }
}

/// The inverse word.
pub fn inverse_word(w: &str) -> String {
    w.chars().rev().map(inverse_letter).collect()
}

/// True when the word is reduced and its first letter does not cancel its last.
pub fn is_cyclically_reduced(w: &str) -> bool {
    match (w.chars().next(), w.chars().last()) {
        (Some(a), Some(b)) => w.len() == 1 || inverse_letter(a) != b,
        _ => false,
    }
}

/// Eigen-data of a unimodular matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Loxodromy {
    /// Eigenvalues sorted by decreasing modulus.
    pub eigenvalues: [Complex64; 3],
    /// Their moduli.
    pub moduli: [f64; 3],
    /// Smallest relative gap `1 - |l_{k+1}|/|l_k|`.
    pub min_gap: f64,
    /// Whether the moduli are pairwise separated by the gap tolerance.
    pub loxodromic: bool,
    /// Attracting flag (top eigenvector, top two eigenvectors), when loxodromic.
    pub attracting: Option<Flag>,
    /// Repelling flag, the attracting flag of the inverse.
    pub repelling: Option<Flag>,
}

fn to_na(m: &CMat3f) -> Matrix3<Complex<f64>> {
    Matrix3::from_fn(|i, j| m[i][j])
}

fn cross(a: &CVec3f, b: &CVec3f) -> CVec3f {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn vnorm(v: &CVec3f) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A kernel vector of `m - lambda`: the largest cross product of two rows.
fn eigenvector(m: &CMat3f, lambda: Complex64) -> CVec3f {
    let mut a = *m;
    for k in 0..3 {
        a[k][k] -= lambda;
    }
    let cands = [cross(&a[0], &a[1]), cross(&a[0], &a[2]), cross(&a[1], &a[2])];
    let best = cands
        .iter()
        .max_by(|x, y| vnorm(x).total_cmp(&vnorm(y)))
        .expect("three candidates");
    let n = vnorm(best);
    best.map(|z| z / n)
}

/// Flag from the line `v` and the plane spanned by `v` and `w`.
fn flag(v: &CVec3f, w: &CVec3f) -> Option<Flag> {
    let phi = cross(v, w);
    let n = vnorm(&phi);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    chtau::boundary_flag(v, &phi.map(|z| z / n)).ok()
}

/// Eigenvalues, gaps and (for loxodromic input) fixed flags.
pub fn loxodromy(m: &CMat3f, tol: &AnosovTolerances) -> Result<Loxodromy, RepError> {
    // Roundoff in det grows like the cube of the entries for long words.
    let d = (mat3::det(m) - 1.0).norm();
    if d > UNIMODULAR_TOL_3 * mat3::max_abs(m).max(1.0).powi(3) || !d.is_finite() {
        return Err(RepError::NotUnimodular(d));
    }
    let ev = to_na(m)
        .schur()
        .eigenvalues()
        .ok_or(RepError::NotDiagonalizable(f64::NAN))?;
    let mut eigenvalues: [Complex64; 3] = [ev[0], ev[1], ev[2]];
    eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let moduli: [f64; 3] = eigenvalues.map(|z| z.norm());
    let min_gap = (1.0 - moduli[1] / moduli[0]).min(1.0 - moduli[2] / moduli[1]);
    let loxodromic = min_gap > tol.gap;
    let (attracting, repelling) = if loxodromic {
        let v = eigenvalues.map(|l| eigenvector(m, l));
        let dv = mat3::det(&[v[0], v[1], v[2]]).norm();
        if dv < 1e-10 {
            return Err(RepError::NotDiagonalizable(dv));
        }
        (flag(&v[0], &v[1]), flag(&v[2], &v[1]))
    } else {
        (None, None)
    };
    Ok(Loxodromy {
        eigenvalues,
        moduli,
        min_gap,
        loxodromic,
        attracting,
        repelling,
    })
}

/// `min(|det(l1, P2)|, |det(l2, P1)|)` with unit lines and orthonormal plane bases.
pub fn transversality(f1: &Flag, f2: &Flag) -> f64 {
    chtau::line_plane_transversality(&f1.line, &f2.plane)
        .min(chtau::line_plane_transversality(&f2.line, &f1.plane))
}

/// Per-word record of the scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordReport {
    /// The word.
    pub word: String,
    /// Sorted eigenvalue moduli.
    pub moduli: [f64; 3],
    /// `|l1/l2|` and `|l2/l3|`.
    pub gap_ratios: [f64; 2],
    /// Whether the word is loxodromic.
    pub loxodromic: bool,
}

/// Result of [`anosov_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnosovReport {
    /// Maximal word length.
    pub max_len: usize,
    /// Per-word data.
    pub words: Vec<WordReport>,
    /// First non-loxodromic word, if any.
    pub first_failure: Option<String>,
    /// Smallest eigenvalue-gap ratio over all words.
    pub min_gap_ratio: f64,
    /// Smallest transversality over the sampled pairs: `(g, g^-1)` for
    /// cyclically reduced `g` and all pairs of generator letters.
    pub min_transversality: f64,
    /// The pair realising `min_transversality`.
    pub worst_pair: Option<(String, String)>,
    /// Smallest transversality over all pairs of distinct words (information only).
    pub all_pairs_min_transversality: f64,
    /// Largest `||l1 l2 l3| - 1|`.
    pub product_defect: f64,
    /// Centraliser dimension.
    pub centralizer_dim: usize,
    /// Tolerances used.
    pub tolerances: AnosovTolerances,
}

impl AnosovReport {
    /// True when no obstruction to the Anosov property was found.
    pub fn passes(&self) -> bool {
        self.first_failure.is_none() && self.min_transversality > self.tolerances.transversality
    }

    /// The strongest honest statement supported by the scan.
    pub fn claim(&self) -> String {
        if self.passes() {
            format!("no obstruction found up to length {}", self.max_len)
        } else if let Some(w) = &self.first_failure {
            format!("word {w} is not loxodromic")
        } else {
            format!(
                "transversality {:.3e} at or below {:e}",
                self.min_transversality, self.tolerances.transversality
            )
        }
    }
}

/// Necessary-condition Anosov scan over reduced words up to `max_len`.
pub fn anosov_scan(rep: &Representation, max_len: usize, tol: &AnosovTolerances) -> Result<AnosovReport, RepError> {
    let words = rep.reduced_words(max_len);
    let data: Vec<(String, Loxodromy)> = words
        .par_iter()
        .map(|w| Ok((w.clone(), loxodromy(&rep.evaluate(w)?, tol)?)))
        .collect::<Result<_, RepError>>()?;
    let first_failure = data.iter().find(|(_, l)| !l.loxodromic).map(|(w, _)| w.clone());
    let reports: Vec<WordReport> = data
        .iter()
        .map(|(w, l)| WordReport {
            word: w.clone(),
            moduli: l.moduli,
            gap_ratios: [l.moduli[0] / l.moduli[1], l.moduli[1] / l.moduli[2]],
            loxodromic: l.loxodromic,
        })
        .collect();
    let min_gap_ratio = reports
        .iter()
        .flat_map(|r| r.gap_ratios)
        .fold(f64::INFINITY, f64::min);
    let product_defect = reports
        .iter()
        .map(|r| (r.moduli.iter().product::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let centralizer_dim = centralizer_check(rep);
    let base = AnosovReport {
        max_len,
        words: reports,
        first_failure: first_failure.clone(),
        min_gap_ratio,
        min_transversality: 0.0,
        worst_pair: None,
        all_pairs_min_transversality: 0.0,
        product_defect,
        centralizer_dim,
        tolerances: *tol,
    };
    if first_failure.is_some() {
        return Ok(base);
    }
    let flags: std::collections::HashMap<&str, &Flag> = data
        .iter()
        .filter_map(|(w, l)| l.attracting.as_ref().map(|f| (w.as_str(), f)))
        .collect();
    let mut pairs: Vec<(String, String)> = data
        .iter()
        .filter(|(w, _)| is_cyclically_reduced(w))
        .map(|(w, _)| (w.clone(), inverse_word(w)))
        .filter(|(a, b)| a < b)
        .collect();
    let letters: Vec<String> = data.iter().filter(|(w, _)| w.len() == 1).map(|(w, _)| w.clone()).collect();
    for (i, a) in letters.iter().enumerate() {
        for b in &letters[i + 1..] {
            if *b != inverse_word(a) {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    let mut min_t = f64::INFINITY;
    let mut worst = None;
    for (a, b) in &pairs {
        let (fa, fb) = match (flags.get(a.as_str()), flags.get(b.as_str())) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                min_t = 0.0;
                worst = Some((a.clone(), b.clone()));
                continue;
            }
        };
        let t = transversality(fa, fb);
        if t < min_t {
            min_t = t;
            worst = Some((a.clone(), b.clone()));
        }
    }
    let list: Vec<&Flag> = data.iter().filter_map(|(_, l)| l.attracting.as_ref()).collect();
    let all_min = (0..list.len())
        .into_par_iter()
        .map(|i| {
            list[i + 1..]
                .iter()
                .map(|f| transversality(list[i], f))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(AnosovReport {
        min_transversality: min_t,
        worst_pair: worst,
        all_pairs_min_transversality: all_min,
        ..base
    })
}

/// Dimension of the joint kernel of `X -> X g - g X` over the generators.
pub fn centralizer_check(rep: &Representation) -> usize {
    let k = rep.generators.len();
    let mut a = DMatrix::<Complex<f64>>::zeros(9 * k, 9);
    for (gi, g) in rep.generators.iter().enumerate() {
        // Row (r, c) of X g - g X in the unknowns X_{pq}.
        for r in 0..3 {
            for c in 0..3 {
                let row = 9 * gi + 3 * r + c;
                for q in 0..3 {
                    // (X g)_{rc} = sum_q X_{rq} g_{qc}
                    a[(row, 3 * r + q)] += g[q][c];
                    // (g X)_{rc} = sum_q g_{rq} X_{qc}
                    a[(row, 3 * q + c)] -= g[r][q];
                }
            }
        }
    }
    let sv = a.singular_values();
    let scale = sv.iter().cloned().fold(1.0, f64::max);
    9 - sv.iter().filter(|s| **s > CENTRALIZER_TOL * scale).count()
}

/// `iota` of the one-holed-torus Fuchsian pair with `tr A = tr B = tr AB = 3.5`.
pub fn fuchsian_example() -> Representation {
    let t = 3.5f64;
    let lam = 0.5 * (t + (t * t - 4.0).sqrt());
    let a = t / (lam + 1.0);
    let d = t - a;
    let b = (a * d - 1.0).sqrt();
    let c = |x: f64| Complex64::new(x, 0.0);
    let ga = [[c(lam), c(0.0)], [c(0.0), c(1.0 / lam)]];
    let gb = [[c(a), c(b)], [c(b), c(d)]];
    Representation::new(
        vec![irreducible_embed(&ga).expect("unimodular"), irreducible_embed(&gb).expect("unimodular")],
        Vec::new(),
    )
    .expect("valid generators")
}

/// Upper-triangular generators with diagonals `(2, 1, 1/2)` and `(3, 1/2, 2/3)`
/// and seeded off-diagonal entries. They share the coordinate flag and every
/// nontrivial word is loxodromic.
pub fn reducible_example(seed: u64) -> Representation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = |d: [f64; 3]| {
        let mut m = mat3::diag(d);
        for (r, c) in [(0, 1), (0, 2), (1, 2)] {
            m[r][c] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        m
    };
    let a = gen([2.0, 1.0, 0.5]);
    let b = gen([3.0, 0.5, 2.0 / 3.0]);
    Representation::new(vec![a, b], Vec::new()).expect("unimodular")
}

/// A first-order variation of `Omega`: its `dz` and `dw-bar` coefficients per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionVariation {
    /// Coefficient of `dz`.
    pub dz: Vec<BcMat3f>,
    /// Coefficient of `dw-bar`.
    pub dwbar: Vec<BcMat3f>,
}

impl ConnectionVariation {
    /// `s a + t b`.
    pub fn combine(&self, s: Bicomplex64, other: &Self, t: Bicomplex64) -> Self {
        let lin = |x: &[BcMat3f], y: &[BcMat3f]| x.iter().zip(y).map(|(a, b)| a.scale(s).add(&b.scale(t))).collect();
        Self {
            dz: lin(&self.dz, &other.dz),
            dwbar: lin(&self.dwbar, &other.dwbar),
        }
    }
}

/// `int tr(d1 ^ d2)` by the rectangle rule, using
/// `dz ^ dw-bar = B dz ^ dzbar = -2 i B dx ^ dy`.
pub fn goldman_pairing(d1: &ConnectionVariation, d2: &ConnectionVariation, h: &ComplexMetric) -> Bicomplex64 {
    let n = h.n();
    let w = 1.0 / (n * n) as f64;
    (0..n * n)
        .map(|k| {
            let t = d1.dz[k].mul(&d2.dwbar[k]).sub(&d1.dwbar[k].mul(&d2.dz[k])).trace();
            let b = h.chart.b.data()[k];
            t.scale_c(Complex64::new(0.0, -2.0) * b * w)
        })
        .fold(Bicomplex64::from_real(0.0), |a, b| a + b)
}

/// The variation of `Omega` along `(alpha, conj beta) -> (alpha, conj beta) +
/// (qdot1, conj qdot2)` with the metric fixed: the cubic entries of `Ahat/A`
/// and `Bhat/B`.
pub fn vertical_variation(qdot1: &Field, qdot2: &Field, h: &ComplexMetric) -> ConnectionVariation {
    let n = h.n();
    let s2 = h.s2();
    let (a, b) = (&h.chart.a, &h.chart.b);
    let mut dz = vec![BcMat3f::zero(); n * n];
    let mut dwbar = vec![BcMat3f::zero(); n * n];
    for k in 0..n * n {
        let ca = -qdot1.data()[k] * a.data()[k].powi(2) / s2.data()[k];
        let cb = -qdot2.data()[k].conj() * b.data()[k].powi(2) / s2.data()[k];
        dz[k].set(0, 1, Bicomplex64::tau().scale_c(ca));
        dwbar[k].set(1, 0, Bicomplex64::tau().scale_c(cb));
    }
    ConnectionVariation { dz, dwbar }
}

/// The variation of `Omega` along `(psi, mu) -> (psi + t psidot, mu + t mudot)`
/// with `C = 0` and a constant chart, by a centered difference in `t`.
pub fn horizontal_variation(
    psi: &Field,
    psidot: &Field,
    mu: Complex64,
    mudot: Complex64,
) -> Result<ConnectionVariation, ConnectionError> {
    let n = psi.n();
    let eps = 1e-6;
    let build = |t: f64| -> Result<Vec<(BcMat3f, BcMat3f)>, ConnectionError> {
        let chart = BeltramiChart::constant(n, -(mu + mudot * t))
            .map_err(|e| ConnectionError::Parse(e.to_string()))?;
        let p = psi.zip_map(psidot, |a, b| a + b * t);
        let conn = connection::assemble(&p, &CubicPair::zero(n), &chart)?;
        Ok((0..n * n)
            .map(|k| {
                let (a, b) = (chart.a.data()[k], chart.b.data()[k]);
                (conn.ahat[k].scale_c(1.0 / a), conn.bhat[k].scale_c(1.0 / b))
            })
            .collect())
    };
    let (p, m) = (build(eps)?, build(-eps)?);
    let inv = Complex64::new(0.5 / eps, 0.0);
    Ok(ConnectionVariation {
        dz: p.iter().zip(&m).map(|(x, y)| x.0.sub(&y.0).scale_c(inv)).collect(),
        dwbar: p.iter().zip(&m).map(|(x, y)| x.1.sub(&y.1).scale_c(inv)).collect(),
    })
}

/// `int |qdot|^2 e^{-6 psi} dA_h`, the reference value for the vertical pairing.
pub fn vertical_reference(qdot: &Field, h: &ComplexMetric) -> Complex64 {
    let f = Field::from_index_fn(h.n(), |i, j| qdot.at(i, j).norm_sqr() * (-6.0 * h.psi.at(i, j)).exp());
    crate::metric::area_integrate(h, &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_sl2(rng: &mut ChaCha8Rng) -> [[Complex64; 2]; 2] {
        let mut r = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (p, q, s) = (r() + 2.0, r(), r() + 1.5);
        let rr = (p * s - 1.0) / q;
        [[p, q], [rr, s]]
    }

    #[test]
    fn embedding_examples() {
        let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert_eq!(irreducible_embed(&id).unwrap(), mat3::identity());
        let l = 1.7;
        let d = [[c(l, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0 / l, 0.0)]];
        let m = irreducible_embed(&d).unwrap();
        assert!(mat3::dist(&m, &mat3::diag([l * l, 1.0, 1.0 / (l * l)])) < 1e-15);
        let bad = [[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(irreducible_embed(&bad), Err(RepError::NotUnimodular(_))));
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (a, b) = (random_sl2(&mut rng), random_sl2(&mut rng));
            let ab = [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ];
            let lhs = irreducible_embed(&ab).unwrap();
            let rhs = mat3::mul(&irreducible_embed(&a).unwrap(), &irreducible_embed(&b).unwrap());
            assert!(mat3::dist(&lhs, &rhs) / mat3::max_abs(&lhs).max(1.0) < 1e-11);
            let scale = mat3::max_abs(&lhs).max(1.0).powi(3);
            assert!((mat3::det(&lhs) - 1.0).norm() < 1e-13 * scale);
        }
    }

    #[test]
    fn diagonal_loxodromy_has_coordinate_flags() {
        let d = [[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]];
        let m = irreducible_embed(&d).unwrap();
        let l = loxodromy(&m, &AnosovTolerances::default()).unwrap();
        assert!((l.moduli[0] - 4.0).abs() < 1e-12 && (l.moduli[1] - 1.0).abs() < 1e-12);
        assert!((l.moduli[2] - 0.25).abs() < 1e-12);
        let a = l.attracting.unwrap();
        assert!((a.line[0].norm() - 1.0).abs() < 1e-12);
        assert!((a.plane[2].norm() - 1.0).abs() < 1e-12);
        let r = l.repelling.unwrap();
        assert!((r.line[2].norm() - 1.0).abs() < 1e-12);
        assert!((transversality(&a, &r) - 1.0).abs() < 1e-12);
        assert!(transversality(&a, &a) < 1e-12);
    }

    #[test]
    fn unipotent_is_not_loxodromic() {
        let mut m = mat3::identity::<f64>();
        m[0][1] = c(1.0, 0.0);
        m[1][2] = c(0.5, 0.0);
        let l = loxodromy(&m, &AnosovTolerances::default()).unwrap();
        assert!(!l.loxodromic);
        assert!(l.moduli.iter().all(|x| (x - 1.0).abs() < 1e-4));
    }

    #[test]
    fn conjugation_moves_flags_and_keeps_moduli() {
        let rep = fuchsian_example();
        let g = [
            [c(1.0, 0.1), c(0.2, 0.0), c(0.0, 0.3)],
            [c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.0)],
            [c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ];
        let g = mat3::scale(&g, mat3::det(&g).powf(-1.0 / 3.0));
        let m = rep.evaluate("abA").unwrap();
        let gi = mat3::inverse(&g).unwrap();
        let mc = mat3::mul(&mat3::mul(&g, &m), &gi);
        let tol = AnosovTolerances::default();
        let (l0, l1) = (loxodromy(&m, &tol).unwrap(), loxodromy(&mc, &tol).unwrap());
        for k in 0..3 {
            assert!((l0.moduli[k] - l1.moduli[k]).abs() < 1e-10 * l0.moduli[0]);
        }
        let moved = mat3::apply(&g, &l0.attracting.unwrap().line);
        let line = l1.attracting.unwrap().line;
        // Parallel lines: the cross product vanishes.
        assert!(vnorm(&cross(&moved, &line)) < 1e-9 * vnorm(&moved));
    }

    #[test]
    fn fuchsian_example_passes_scan() {
        let rep = fuchsian_example();
        let r = anosov_scan(&rep, 4, &AnosovTolerances::default()).unwrap();
        assert!(r.passes(), "{}", r.claim());
        assert!(r.min_transversality > 0.01);
        assert_eq!(r.centralizer_dim, 1);
        assert!(r.product_defect < 1e-8);
        assert_eq!(r.words.len(), 4 + 12 + 36 + 108);
    }

    #[test]
    fn reducible_example_fails_transversality() {
        let r = anosov_scan(&reducible_example(3), 3, &AnosovTolerances::default()).unwrap();
        assert!(r.first_failure.is_none());
        assert!(r.min_transversality < 1e-10, "{}", r.min_transversality);
        assert!(!r.passes());
    }

    #[test]
    fn scan_is_conjugation_invariant() {
        let rep = fuchsian_example();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut g = mat3::identity::<f64>();
        for r in 0..3 {
            for col in 0..3 {
                g[r][col] += c(0.3 * rng.gen_range(-1.0..1.0), 0.3 * rng.gen_range(-1.0..1.0));
            }
        }
        let g = mat3::scale(&g, mat3::det(&g).powf(-1.0 / 3.0));
        let tol = AnosovTolerances::default();
        let a = anosov_scan(&rep, 3, &tol).unwrap();
        let b = anosov_scan(&rep.conjugate(&g).unwrap(), 3, &tol).unwrap();
        assert!((a.min_gap_ratio - b.min_gap_ratio).abs() < 1e-9 * a.min_gap_ratio);
        for (x, y) in a.words.iter().zip(&b.words) {
            for k in 0..3 {
                assert!((x.moduli[k] - y.moduli[k]).abs() < 1e-9 * x.moduli[0]);
            }
        }
    }

    #[test]
    fn small_perturbation_keeps_scan_passing() {
        let rep = fuchsian_example();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gens = rep
            .generators
            .iter()
            .map(|g| {
                let mut m = *g;
                for r in 0..3 {
                    for col in 0..3 {
                        m[r][col] += c(1e-3 * rng.gen_range(-1.0..1.0), 1e-3 * rng.gen_range(-1.0..1.0));
                    }
                }
                mat3::scale(&m, mat3::det(&m).powf(-1.0 / 3.0))
            })
            .collect();
        let r = anosov_scan(&Representation::new(gens, vec![]).unwrap(), 4, &AnosovTolerances::default()).unwrap();
        assert!(r.passes(), "{}", r.claim());
    }

    #[test]
    fn centralizer_dimensions() {
        let id = Representation::new(vec![mat3::identity()], vec![]).unwrap();
        assert_eq!(centralizer_check(&id), 9);
        let d = Representation::new(vec![mat3::diag([2.0, 1.0, 0.5])], vec![]).unwrap();
        assert_eq!(centralizer_check(&d), 3);
        assert_eq!(centralizer_check(&fuchsian_example()), 1);
    }

    #[test]
    fn relations_and_parsing() {
        let rep = fuchsian_example();
        let ok = Representation::new(rep.generators.clone(), vec!["aA".into(), "abBA".into()]);
        assert!(ok.is_ok());
        let bad = Representation::new(rep.generators.clone(), vec!["ab".into()]);
        assert!(matches!(bad, Err(RepError::RelationFails { .. })));
        let text = serde_json::to_string(&rep.generators).unwrap();
        assert_eq!(Representation::from_json(&text).unwrap().generators, rep.generators);
        assert!(matches!(rep.evaluate("az"), Err(RepError::BadWord(_))));
    }

    fn test_metric(n: usize) -> ComplexMetric {
        let psi = Field::from_fn(n, |x, y| (0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).into());
        ComplexMetric::new(psi, BeltramiChart::flat(n)).unwrap()
    }

    #[test]
    fn goldman_is_antisymmetric_and_bilinear() {
        let n = 16;
        let h = test_metric(n);
        let q1 = Field::from_fn(n, |x, _| c(1.0 + 0.2 * (2.0 * PI * x).cos(), 0.1));
        let q2 = Field::from_fn(n, |_, y| c(0.3, (2.0 * PI * y).sin()));
        let v1 = vertical_variation(&q1, &q2, &h);
        let v2 = vertical_variation(&q2, &q1.scale(c(0.0, 1.0)), &h);
        let hz = horizontal_variation(&h.psi, &q1.map(|z| z.re.into()), c(0.0, 0.0), c(0.1, 0.05)).unwrap();
        let v3 = v1.combine(Bicomplex64::from_real(1.0), &hz, Bicomplex64::tau());
        assert!(goldman_pairing(&v1, &v1, &h).norm_max() < 1e-12);
        for (a, b) in [(&v1, &v2), (&v1, &hz), (&v3, &v2)] {
            let s = goldman_pairing(a, b, &h) + goldman_pairing(b, a, &h);
            assert!(s.norm_max() < 1e-12);
        }
        let x = Bicomplex64::new(c(0.3, 0.2), c(-0.1, 0.4));
        let lhs = goldman_pairing(&v1.combine(x, &hz, Bicomplex64::from_real(2.0)), &v2, &h);
        let rhs = goldman_pairing(&v1, &v2, &h) * x + goldman_pairing(&hz, &v2, &h).scale(2.0);
        assert!(lhs.dist(&rhs) < 1e-12);
    }

    #[test]
    fn vertical_pair_is_positive_and_matches_reference() {
        for n in [16, 32] {
            let h = test_metric(n);
            let q = Field::constant(n, c(1.0, 0.0));
            let d1 = vertical_variation(&q, &Field::zeros(n), &h);
            let d2 = vertical_variation(&Field::zeros(n), &q.scale(c(0.0, -1.0)), &h);
            let v = goldman_pairing(&d1, &d2, &h);
            let r = vertical_reference(&q, &h);
            assert!((v.plus() - r).norm() < 1e-12 * r.norm());
            assert!((v.minus() - r).norm() < 1e-12 * r.norm());
            assert!(r.re > 0.0);
            let hz = horizontal_variation(&h.psi, &h.psi, c(0.0, 0.0), c(0.05, 0.0)).unwrap();
            assert!(goldman_pairing(&hz, &d1, &h).norm_max() < 1e-10);
            assert!(goldman_pairing(&hz, &d2, &h).norm_max() < 1e-10);
        }
    }
}
