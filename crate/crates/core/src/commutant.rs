//! Symmetric maps of `ℝ^m ⊕ ℝ^m` commuting with the diagonal action
//! `g ↦ diag(g, g)` of `SO(m)` or `O(m)`, found as a numerical nullspace.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest count as zero.
const NULL_THRESHOLD: f64 = 1e-8;
const STRUCTURE_TOL: f64 = 1e-10;
pub const DEFAULT_GENERATORS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    SO,
    O,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::SO => "so",
            Group::O => "o",
        })
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "so" => Ok(Group::SO),
            "o" => Ok(Group::O),
            _ => Err(Error::Invalid(format!("unknown group `{s}` (expected so or o)"))),
        }
    }
}

fn random_rotation(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = rng.gen_range(-2.0..2.0);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    a.exp()
}

fn random_reflection(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let v = DMatrix::<f64>::from_fn(m, 1, |_, _| rng.gen_range(-1.0..1.0));
    let v = &v / v.norm();
    DMatrix::identity(m, m) - (&v * v.transpose()) * 2.0
}

/// A random element of the group; for `O(m)` half of them are reflections
/// composed with rotations.
pub fn random_element(m: usize, group: Group, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let r = random_rotation(m, rng);
    if group == Group::O && rng.gen_bool(0.5) {
        random_reflection(m, rng) * r
    } else {
        r
    }
}

#[derive(Debug, Clone)]
pub struct CommutantProblem {
    pub m: usize,
    pub group: Group,
    pub generators: Vec<DMatrix<f64>>,
    seed: u64,
}

impl CommutantProblem {
    /// `count` generators: exponentials of random antisymmetric matrices,
    /// with the last replaced by a reflection for `O(m)`.
    pub fn random(m: usize, group: Group, count: usize, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Invalid(format!("m = {m} must be at least 2")));
        }
        if count < 3 {
            return Err(Error::Invalid(format!("{count} generators given, need at least 3")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut generators: Vec<_> = (0..count).map(|_| random_rotation(m, &mut rng)).collect();
        if group == Group::O {
            generators[count - 1] = random_reflection(m, &mut rng);
        }
        let p = CommutantProblem {
            m,
            group,
            generators,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generators {
            if g.nrows() != self.m || g.ncols() != self.m {
                return Err(Error::Invalid("generator has the wrong shape".into()));
            }
            let defect = (g.transpose() * g - DMatrix::identity(self.m, self.m)).amax();
            if defect > ORTHOGONALITY_TOL {
                return Err(Error::Invalid(format!("generator is not orthogonal (defect {defect:e})")));
            }
            if self.group == Group::SO && (g.determinant() - 1.0).abs() > ORTHOGONALITY_TOL {
                return Err(Error::Invalid("SO generator has determinant -1".into()));
            }
        }
        Ok(())
    }
}

fn diagonal(g: &DMatrix<f64>) -> DMatrix<f64> {
    let m = g.nrows();
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    d.view_mut((0, 0), (m, m)).copy_from(g);
    d.view_mut((m, m), (m, m)).copy_from(g);
    d
}

/// Frobenius-orthonormal basis of symmetric `n × n` matrices.
fn symmetric_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = s;
                e[(j, i)] = s;
            }
            out.push(e);
        }
    }
    out
}

fn nullspace(m: usize, generators: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = 2 * m;
    let sym = symmetric_basis(n);
    let rows = n * n * generators.len();
    let mut sys = DMatrix::zeros(rows, sym.len());
    for (gi, g) in generators.iter().enumerate() {
        let d = diagonal(g);
        for (k, s) in sym.iter().enumerate() {
            let c = s * &d - &d * s;
            for (idx, v) in c.iter().enumerate() {
                sys[(gi * n * n + idx, k)] = *v;
            }
        }
    }
    let svd = sys.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let smax = svd.singular_values.max();
    let mut basis = Vec::new();
    for (k, sigma) in svd.singular_values.iter().enumerate() {
        if *sigma <= NULL_THRESHOLD * smax {
            let mut a = DMatrix::zeros(n, n);
            for (j, s) in sym.iter().enumerate() {
                a += s * v_t[(k, j)];
            }
            basis.push(a);
        }
    }
    basis
}

#[derive(Debug, Clone)]
pub struct CommutantBasis {
    pub m: usize,
    pub group: Group,
    pub dimension: usize,
    /// Frobenius-orthonormal.
    pub basis: Vec<DMatrix<f64>>,
}

/// Solves the commutation system and confirms the answer by adding one more
/// random generator.
pub fn solve_commutant(p: &CommutantProblem) -> Result<CommutantBasis> {
    p.validate()?;
    if p.m < 2 {
        return Err(Error::Invalid(format!("m = {} must be at least 2", p.m)));
    }
    if p.generators.len() < 3 {
        return Err(Error::Invalid("at least 3 generators are needed".into()));
    }
    let basis = nullspace(p.m, &p.generators);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut more = p.generators.clone();
    more.push(random_element(p.m, p.group, &mut rng));
    let check = nullspace(p.m, &more).len();
    if check != basis.len() {
        return Err(Error::RankDeficientGenerators {
            without: basis.len(),
            with: check,
        });
    }
    Ok(CommutantBasis {
        m: p.m,
        group: p.group,
        dimension: basis.len(),
        basis,
    })
}

/// `max ‖A D_g − D_g A‖` over the basis and the given group elements.
pub fn commutation_residual(b: &CommutantBasis, elements: &[DMatrix<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for g in elements {
        let d = diagonal(g);
        for a in &b.basis {
            worst = worst.max((a * &d - &d * a).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    /// Largest distance of a diagonal block from a multiple of `1_m`.
    pub diagonal_blocks: f64,
    /// Largest distance of an off-diagonal block from the predicted span
    /// (`{1, J}` for `SO(2)`, `{1}` otherwise).
    pub off_diagonal: f64,
    /// Dimension spanned by the off-diagonal blocks.
    pub off_diagonal_rank: usize,
    /// Distance of the identity from the span of the basis.
    pub identity: f64,
    pub pass: bool,
}

fn rank(vectors: &[Vec<f64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(vectors.len(), vectors[0].len(), |i, j| vectors[i][j]);
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > NULL_THRESHOLD * smax).count()
}

pub fn structure_check(b: &CommutantBasis) -> StructureReport {
    let m = b.m;
    let eye = DMatrix::<f64>::identity(m, m);
    let mut predicted = vec![&eye / (m as f64).sqrt()];
    if m == 2 && b.group == Group::SO {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        predicted.push(j / 2f64.sqrt());
    }
    let mut diag: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut blocks = Vec::new();
    for a in &b.basis {
        for start in [0, m] {
            let blk = a.view((start, start), (m, m)).into_owned();
            let scalar = blk.trace() / m as f64;
            diag = diag.max((blk - &eye * scalar).norm());
        }
        let tr = a.view((0, m), (m, m)).into_owned();
        let bl = a.view((m, 0), (m, m)).into_owned();
        diag = diag.max((&bl - tr.transpose()).norm());
        let mut proj = DMatrix::zeros(m, m);
        for p in &predicted {
            proj += p * tr.dot(p);
        }
        off = off.max((&tr - proj).norm());
        blocks.push(tr.iter().copied().collect::<Vec<_>>());
    }
    let id = DMatrix::<f64>::identity(2 * m, 2 * m);
    let mut rest = id.clone();
    for a in &b.basis {
        rest -= a * id.dot(a);
    }
    let identity = rest.norm();
    StructureReport {
        diagonal_blocks: diag,
        off_diagonal: off,
        off_diagonal_rank: rank(&blocks),
        identity,
        pass: diag < STRUCTURE_TOL && off < STRUCTURE_TOL && identity < STRUCTURE_TOL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub m: usize,
    pub group: Group,
    pub dimensions: Vec<usize>,
    pub stable: bool,
    /// Worst commutation residual against fresh elements not used in solving.
    pub fresh_residual: f64,
}

/// Solves `trials` independently drawn problems (seeds `seed`, `seed + 1`, …)
/// and tests each basis on `fresh` new group elements.
pub fn stability(m: usize, group: Group, trials: usize, fresh: usize, seed: u64) -> Result<StabilityReport> {
    let mut dimensions = Vec::with_capacity(trials);
    let mut worst: f64 = 0.0;
    for k in 0..trials as u64 {
        let p = CommutantProblem::random(m, group, DEFAULT_GENERATORS, seed.wrapping_add(k))?;
        let b = solve_commutant(&p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k).wrapping_mul(0x2545_f491_4f6c_dd1d) ^ 1);
        let elements: Vec<_> = (0..fresh).map(|_| random_element(m, group, &mut rng)).collect();
        worst = worst.max(commutation_residual(&b, &elements));
        dimensions.push(b.dimension);
    }
    let stable = dimensions.windows(2).all(|w| w[0] == w[1]);
    Ok(StabilityReport {
        m,
        group,
        dimensions,
        stable,
        fresh_residual: worst,
    })
}
