//! Exact symbolic coefficients: signed sums of products of
//! theta(c h + z_mu + lam_mu~)^{+-1}, with Weyl substitutions, sign-flip
//! functors, numeric evaluation, and slice-degree extraction.
//!
//! No symbolic simplification beyond atom-level cancellation is attempted:
//! sums of theta monomials satisfy transcendental relations, so equality of
//! coefficients is always certified numerically at random points.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::bundle_degree::{DegreeSide, FormalDegree};
use crate::error::{Error, Result};
use crate::root_system::{mat_apply, RootDatum, WeylElement};
use crate::theta::ThetaContext;

/// Evaluation refuses to invert a theta factor whose argument is closer
/// than this to the period lattice.
pub const POLE_EPS: f64 = 1e-8;

/// Default number of random points for numeric equality certification.
pub const DEFAULT_SAMPLE_POINTS: usize = 20;

/// One factor theta(c h + z_mu + lam_mu~), stored sign-normalized: the
/// first nonzero of (c, mu, mu~) is positive, oddness of theta moving the
/// sign onto the enclosing monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ThetaAtom {
    pub h_coeff: i64,
    pub char_part: Vec<i64>,
    pub cochar_part: Vec<i64>,
}

impl ThetaAtom {
    /// Normalizes the raw data, returning the atom and the sign (+1 or -1)
    /// that theta-oddness moves out front.
    pub fn normalized(h_coeff: i64, char_part: Vec<i64>, cochar_part: Vec<i64>) -> (Self, i64) {
        let first_nonzero = std::iter::once(h_coeff)
            .chain(char_part.iter().copied())
            .chain(cochar_part.iter().copied())
            .find(|&a| a != 0);
        let mut atom = ThetaAtom { h_coeff, char_part, cochar_part };
        let mut sign = 1;
        if let Some(a) = first_nonzero {
            if a < 0 {
                sign = -1;
                atom.h_coeff = -atom.h_coeff;
                for c in &mut atom.char_part {
                    *c = -*c;
                }
                for c in &mut atom.cochar_part {
                    *c = -*c;
                }
            }
        }
        (atom, sign)
    }

    /// The argument c h + z_mu + lam_mu~ at a concrete point.
    pub fn argument(&self, p: &EvaluationPoint) -> Complex64 {
        let mut x = p.hbar * (self.h_coeff as f64);
        for (c, z) in self.char_part.iter().zip(&p.z) {
            if *c != 0 {
                x += z * (*c as f64);
            }
        }
        for (c, l) in self.cochar_part.iter().zip(&p.lambda) {
            if *c != 0 {
                x += l * (*c as f64);
            }
        }
        x
    }

    pub fn describe(&self) -> String {
        format!(
            "theta({}h + z{:?} + lam{:?})",
            self.h_coeff, self.char_part, self.cochar_part
        )
    }
}

impl Serialize for ThetaAtom {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.h_coeff, &self.char_part, &self.cochar_part).serialize(s)
    }
}

/// scalar * prod of atoms^exponents. The scalar is +-1 for every monomial
/// the operators produce; merging equal terms inside a `Coefficient` may
/// grow it to other integers, so it is stored as i64.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ThetaMonomial {
    pub scalar: i64,
    pub factors: BTreeMap<ThetaAtom, i64>,
}

impl PartialOrd for ThetaMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ThetaMonomial {
    // Factors first so that a Coefficient sorts mergeable terms adjacently.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.factors
            .cmp(&other.factors)
            .then(self.scalar.cmp(&other.scalar))
    }
}

impl ThetaMonomial {
    pub fn one() -> Self {
        ThetaMonomial { scalar: 1, factors: BTreeMap::new() }
    }

    pub fn constant(scalar: i64) -> Self {
        ThetaMonomial { scalar, factors: BTreeMap::new() }
    }

    /// theta(c h + z_mu + lam_mu~)^exp as a monomial, sign-normalized.
    pub fn atom(h_coeff: i64, char_part: Vec<i64>, cochar_part: Vec<i64>, exp: i64) -> Self {
        if exp == 0 {
            return ThetaMonomial::one();
        }
        let (atom, sign) = ThetaAtom::normalized(h_coeff, char_part, cochar_part);
        let scalar = if sign < 0 && exp % 2 != 0 { -1 } else { 1 };
        let mut factors = BTreeMap::new();
        factors.insert(atom, exp);
        ThetaMonomial { scalar, factors }
    }

    pub fn is_constant_one(&self) -> bool {
        self.scalar == 1 && self.factors.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (atom, e) in &other.factors {
            let entry = factors.entry(atom.clone()).or_insert(0);
            *entry += e;
            if *entry == 0 {
                factors.remove(atom);
            }
        }
        ThetaMonomial { scalar: self.scalar * other.scalar, factors }
    }

    /// Multiplicative inverse; only +-1 scalars are invertible here.
    pub fn inverse(&self) -> Result<Self> {
        if self.scalar != 1 && self.scalar != -1 {
            return Err(Error::Input(format!(
                "monomial with scalar {} has no monomial inverse",
                self.scalar
            )));
        }
        let factors = self
            .factors
            .iter()
            .map(|(a, e)| (a.clone(), -e))
            .collect();
        Ok(ThetaMonomial { scalar: self.scalar, factors })
    }

    pub fn neg(&self) -> Self {
        ThetaMonomial { scalar: -self.scalar, factors: self.factors.clone() }
    }

    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if self.scalar != 1 || self.factors.is_empty() {
            parts.push(self.scalar.to_string());
        }
        for (atom, e) in &self.factors {
            if *e == 1 {
                parts.push(atom.describe());
            } else {
                parts.push(format!("{}^{}", atom.describe(), e));
            }
        }
        parts.join("*")
    }

    /// Rewrites every atom through `f` (given raw triples back) and
    /// re-normalizes, tracking oddness signs. The workhorse behind all
    /// substitution functors.
    pub fn map_atoms<F>(&self, f: F) -> Self
    where
        F: Fn(&ThetaAtom) -> (i64, Vec<i64>, Vec<i64>),
    {
        let mut scalar = self.scalar;
        let mut factors: BTreeMap<ThetaAtom, i64> = BTreeMap::new();
        for (atom, &e) in &self.factors {
            let (h, ch, co) = f(atom);
            let (new_atom, sign) = ThetaAtom::normalized(h, ch, co);
            if sign < 0 && e % 2 != 0 {
                scalar = -scalar;
            }
            let entry = factors.entry(new_atom.clone()).or_insert(0);
            *entry += e;
            if *entry == 0 {
                factors.remove(&new_atom);
            }
        }
        ThetaMonomial { scalar, factors }
    }

    pub fn eval(&self, cache: &mut EvalCache) -> Result<Complex64> {
        let mut acc = Complex64::new(self.scalar as f64, 0.0);
        for (atom, &e) in &self.factors {
            let (value, dist) = cache.atom_value(atom);
            if e < 0 && dist < POLE_EPS {
                return Err(Error::Pole {
                    atom: atom.describe(),
                    point: cache.point.describe(),
                });
            }
            acc *= value.powi(e as i32);
        }
        Ok(acc)
    }
}

impl Serialize for ThetaMonomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ThetaMonomial", 2)?;
        st.serialize_field("scalar", &self.scalar)?;
        let factors: Vec<(&ThetaAtom, &i64)> = self.factors.iter().collect();
        st.serialize_field("factors", &factors)?;
        st.end()
    }
}

/// Formal sum of monomials, canonically ordered with equal factor sets
/// merged. The empty sum is zero.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Coefficient {
    terms: Vec<ThetaMonomial>,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient { terms: vec![] }
    }

    pub fn one() -> Self {
        Coefficient { terms: vec![ThetaMonomial::one()] }
    }

    pub fn from_monomial(m: ThetaMonomial) -> Self {
        Coefficient::normalize(vec![m])
    }

    pub fn from_terms(terms: Vec<ThetaMonomial>) -> Self {
        Coefficient::normalize(terms)
    }

    fn normalize(terms: Vec<ThetaMonomial>) -> Self {
        let mut merged: BTreeMap<BTreeMap<ThetaAtom, i64>, i64> = BTreeMap::new();
        for t in terms {
            if t.scalar == 0 {
                continue;
            }
            *merged.entry(t.factors).or_insert(0) += t.scalar;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, s)| *s != 0)
            .map(|(factors, scalar)| ThetaMonomial { scalar, factors })
            .collect();
        Coefficient { terms }
    }

    pub fn terms(&self) -> &[ThetaMonomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Human-readable rendering of the term sum.
    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(ThetaMonomial::describe)
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// The unique monomial of a single-term coefficient.
    pub fn single_monomial(&self) -> Result<&ThetaMonomial> {
        match self.terms.len() {
            1 => Ok(&self.terms[0]),
            n => Err(Error::Shape(format!(
                "expected a single monomial, found {n} terms"
            ))),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Coefficient::normalize(terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Coefficient { terms: self.terms.iter().map(ThetaMonomial::neg).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        Coefficient::normalize(terms)
    }

    pub fn mul_monomial(&self, m: &ThetaMonomial) -> Self {
        Coefficient::normalize(self.terms.iter().map(|t| t.mul(m)).collect())
    }

    pub fn scale(&self, k: i64) -> Self {
        Coefficient::normalize(
            self.terms
                .iter()
                .map(|t| ThetaMonomial { scalar: t.scalar * k, factors: t.factors.clone() })
                .collect(),
        )
    }

    pub fn map_atoms<F>(&self, f: F) -> Self
    where
        F: Fn(&ThetaAtom) -> (i64, Vec<i64>, Vec<i64>),
    {
        Coefficient::normalize(self.terms.iter().map(|t| t.map_atoms(&f)).collect())
    }

    pub fn eval_cached(&self, cache: &mut EvalCache) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.eval(cache)?;
        }
        Ok(acc)
    }
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.terms.len()))?;
        for t in &self.terms {
            seq.serialize_element(t)?;
        }
        seq.end()
    }
}

/// Coordinates z_{alpha_i}, lam_{alpha_i~}, and hbar; every atom argument
/// is an integer combination of these.
#[derive(Clone, Debug)]
pub struct EvaluationPoint {
    pub z: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub hbar: Complex64,
}

impl EvaluationPoint {
    /// Generic point: all coordinates and hbar drawn from the band box
    /// Re in [0.05, 0.45], Im in [0.05, 0.45]*Im tau.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize, ctx: &ThetaContext) -> Self {
        let mut draw = || {
            Complex64::new(
                rng.gen_range(0.05..0.45),
                rng.gen_range(0.05..0.45) * ctx.tau.im,
            )
        };
        let z = (0..rank).map(|_| draw()).collect();
        let lambda = (0..rank).map(|_| draw()).collect();
        let hbar = draw();
        EvaluationPoint { z, lambda, hbar }
    }

    /// Same, but with hbar pinned (CLI --hbar).
    pub fn random_with_hbar<R: Rng + ?Sized>(
        rng: &mut R,
        rank: usize,
        ctx: &ThetaContext,
        hbar: Option<Complex64>,
    ) -> Self {
        let mut p = EvaluationPoint::random(rng, rank, ctx);
        if let Some(h) = hbar {
            p.hbar = h;
        }
        p
    }

    /// Point p' with coeff_eval(^w a, p) = coeff_eval(a, p'): the z
    /// coordinates pull back through the transpose of w's char action.
    pub fn pullback_spectral(&self, w: &WeylElement) -> Self {
        let n = self.z.len();
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for (j, out) in z.iter_mut().enumerate() {
            for i in 0..n {
                let c = w.on_char[i][j];
                if c != 0 {
                    *out += self.z[i] * (c as f64);
                }
            }
        }
        EvaluationPoint { z, lambda: self.lambda.clone(), hbar: self.hbar }
    }

    /// Dynamical mirror of `pullback_spectral` on the lambda coordinates.
    pub fn pullback_dynamical(&self, v: &WeylElement) -> Self {
        let n = self.lambda.len();
        let mut lambda = vec![Complex64::new(0.0, 0.0); n];
        for (j, out) in lambda.iter_mut().enumerate() {
            for i in 0..n {
                let c = v.on_cochar[i][j];
                if c != 0 {
                    *out += self.lambda[i] * (c as f64);
                }
            }
        }
        EvaluationPoint { z: self.z.clone(), lambda, hbar: self.hbar }
    }

    pub fn describe(&self) -> String {
        let fmt_vec = |v: &[Complex64]| {
            let items: Vec<String> = v.iter().map(|c| format!("{c:.4}")).collect();
            format!("[{}]", items.join(", "))
        };
        format!(
            "z={} lam={} h={:.4}",
            fmt_vec(&self.z),
            fmt_vec(&self.lambda),
            self.hbar
        )
    }
}

impl fmt::Display for EvaluationPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Per-(point, context) memo of atom values and their lattice distances.
pub struct EvalCache<'a> {
    pub ctx: &'a ThetaContext,
    pub point: &'a EvaluationPoint,
    memo: HashMap<ThetaAtom, (Complex64, f64)>,
}

impl<'a> EvalCache<'a> {
    pub fn new(ctx: &'a ThetaContext, point: &'a EvaluationPoint) -> Self {
        EvalCache { ctx, point, memo: HashMap::new() }
    }

    /// (theta(arg), distance of arg to the period lattice).
    pub fn atom_value(&mut self, atom: &ThetaAtom) -> (Complex64, f64) {
        if let Some(v) = self.memo.get(atom) {
            return *v;
        }
        let x = atom.argument(self.point);
        let red = self.ctx.reduce(x);
        let value = red.log_factor.exp() * self.ctx.theta(red.x_red).expect("reduced point in band");
        let entry = (value, red.x_red.norm());
        self.memo.insert(atom.clone(), entry);
        entry
    }
}

/// One-shot evaluation of a coefficient at a point.
pub fn coeff_eval(a: &Coefficient, p: &EvaluationPoint, ctx: &ThetaContext) -> Result<Complex64> {
    let mut cache = EvalCache::new(ctx, p);
    a.eval_cached(&mut cache)
}

pub fn coeff_multiply(a: &Coefficient, b: &Coefficient) -> Coefficient {
    a.mul(b)
}

/// Spectral twist ^w: z_mu -> z_{w(mu)} on every atom.
pub fn weyl_twist_spectral(w: &WeylElement, a: &Coefficient) -> Coefficient {
    a.map_atoms(|atom| {
        (
            atom.h_coeff,
            mat_apply(&w.on_char, &atom.char_part),
            atom.cochar_part.clone(),
        )
    })
}

/// Dynamical twist ^{v^d}: lam_{mu~} -> lam_{v(mu~)} on every atom.
pub fn weyl_twist_dynamical(v: &WeylElement, a: &Coefficient) -> Coefficient {
    a.map_atoms(|atom| {
        (
            atom.h_coeff,
            atom.char_part.clone(),
            mat_apply(&v.on_cochar, &atom.cochar_part),
        )
    })
}

/// Gamma_lam: lambda -> -lambda.
pub fn negate_lambda(a: &Coefficient) -> Coefficient {
    a.map_atoms(|atom| {
        (
            atom.h_coeff,
            atom.char_part.clone(),
            atom.cochar_part.iter().map(|c| -c).collect(),
        )
    })
}

/// Gamma_z: z -> -z.
pub fn negate_z(a: &Coefficient) -> Coefficient {
    a.map_atoms(|atom| {
        (
            atom.h_coeff,
            atom.char_part.iter().map(|c| -c).collect(),
            atom.cochar_part.clone(),
        )
    })
}

/// Gamma_h: hbar -> -hbar (used to transport generators to the dual datum).
pub fn negate_hbar(a: &Coefficient) -> Coefficient {
    a.map_atoms(|atom| {
        (
            -atom.h_coeff,
            atom.char_part.clone(),
            atom.cochar_part.clone(),
        )
    })
}

/// bfg = prod_{alpha>0} theta(h - z_alpha)/theta(z_alpha); purely spectral.
pub fn make_g(datum: &RootDatum) -> Coefficient {
    let mut m = ThetaMonomial::one();
    let zero = vec![0i64; datum.rank];
    for alpha in &datum.positive_roots {
        m = m.mul(&ThetaMonomial::atom(
            1,
            alpha.coords.iter().map(|c| -c).collect(),
            zero.clone(),
            1,
        ));
        m = m.mul(&ThetaMonomial::atom(0, alpha.coords.clone(), zero.clone(), -1));
    }
    Coefficient::from_monomial(m)
}

/// bfh = prod_{alpha>0} theta(h - lam_{alpha~})/theta(lam_{alpha~}).
pub fn make_h(datum: &RootDatum) -> Coefficient {
    let mut m = ThetaMonomial::one();
    let zero = vec![0i64; datum.rank];
    for alpha_vee in &datum.positive_coroots {
        m = m.mul(&ThetaMonomial::atom(
            1,
            zero.clone(),
            alpha_vee.coords.iter().map(|c| -c).collect(),
            1,
        ));
        m = m.mul(&ThetaMonomial::atom(0, zero.clone(), alpha_vee.coords.clone(), -1));
    }
    Coefficient::from_monomial(m)
}

/// theta_Pi(z) = prod_{alpha>0} theta(z_alpha).
pub fn theta_pi_z(datum: &RootDatum) -> Coefficient {
    let mut m = ThetaMonomial::one();
    let zero = vec![0i64; datum.rank];
    for alpha in &datum.positive_roots {
        m = m.mul(&ThetaMonomial::atom(0, alpha.coords.clone(), zero.clone(), 1));
    }
    Coefficient::from_monomial(m)
}

/// theta_Pi(lam) = prod_{alpha>0} theta(lam_{alpha~}).
pub fn theta_pi_lambda(datum: &RootDatum) -> Coefficient {
    let mut m = ThetaMonomial::one();
    let zero = vec![0i64; datum.rank];
    for alpha_vee in &datum.positive_coroots {
        m = m.mul(&ThetaMonomial::atom(0, zero.clone(), alpha_vee.coords.clone(), 1));
    }
    Coefficient::from_monomial(m)
}

/// Draws random points until every probe coefficient evaluates cleanly;
/// used wherever per-point inversion or division must avoid poles.
pub fn sample_nonsingular<R: Rng + ?Sized>(
    rng: &mut R,
    rank: usize,
    ctx: &ThetaContext,
    hbar: Option<Complex64>,
    probes: &[&Coefficient],
    max_tries: usize,
) -> Result<EvaluationPoint> {
    let mut last_err = None;
    for _ in 0..max_tries {
        let p = EvaluationPoint::random_with_hbar(rng, rank, ctx, hbar);
        let mut ok = true;
        for probe in probes {
            match coeff_eval(probe, &p, ctx) {
                Ok(_) => {}
                Err(e @ Error::Pole { .. }) => {
                    ok = false;
                    last_err = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            return Ok(p);
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Numeric("failed to sample a nonsingular point".into())
    }))
}

/// Lambda-fixed slice degree of a monomial: each factor
/// theta(c h + z_mu + lam_{mu~})^e contributes -e * mu tensor (c h + lam_{mu~}),
/// an exact integer tensor recording zeros/poles along the z-directions.
pub fn slice_degree_lambda(m: &ThetaMonomial, rank: usize) -> FormalDegree {
    let mut deg = FormalDegree::zero(DegreeSide::LambdaSlice, rank);
    for (atom, &e) in &m.factors {
        for i in 0..rank {
            let mu_i = atom.char_part[i];
            if mu_i == 0 {
                continue;
            }
            deg.entries[i].h -= e * atom.h_coeff * mu_i;
            for j in 0..rank {
                deg.entries[i].coords[j] -= e * atom.cochar_part[j] * mu_i;
            }
        }
    }
    deg
}

/// z-fixed slice degree: -e * mu~ tensor (c h + z_mu) per factor.
pub fn slice_degree_z(m: &ThetaMonomial, rank: usize) -> FormalDegree {
    let mut deg = FormalDegree::zero(DegreeSide::ZSlice, rank);
    for (atom, &e) in &m.factors {
        for j in 0..rank {
            let nu_j = atom.cochar_part[j];
            if nu_j == 0 {
                continue;
            }
            deg.entries[j].h -= e * atom.h_coeff * nu_j;
            for i in 0..rank {
                deg.entries[j].coords[i] -= e * atom.char_part[i] * nu_j;
            }
        }
    }
    deg
}

/// Coefficient-level wrappers; only single-monomial coefficients have a
/// well-defined slice degree.
pub fn coeff_slice_degree_lambda(a: &Coefficient, rank: usize) -> Result<FormalDegree> {
    Ok(slice_degree_lambda(a.single_monomial()?, rank))
}

pub fn coeff_slice_degree_z(a: &Coefficient, rank: usize) -> Result<FormalDegree> {
    Ok(slice_degree_z(a.single_monomial()?, rank))
}
