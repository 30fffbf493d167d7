//! Elliptic Demazure-Lusztig operators in the twisted group algebra.
//!
//! Eight operator families are indexed by a sign pair and a spectral/
//! dynamical flag. The simple generator of the base family is
//!   T_alpha = d^dyn_alpha 'a + d^dyn_alpha 'b d_alpha,
//! with theta-ratio coefficients
//!   'a = theta(h) theta(z_alpha + lam_{alpha~})
//!        / (theta(z_alpha) theta(h + lam_{alpha~})),
//!   'b = theta(h - z_alpha) theta(-lam_{alpha~})
//!        / (theta(z_alpha) theta(h + lam_{alpha~})),
//! and the other families permute signs of z, lam and swap the roles of
//! the two delta factors. Products along reduced words are well defined
//! (braid relations hold numerically); expanding T_v in normal form gives
//! the coefficient matrix a_{v,w} supported on w <= v, with an explicit
//! closed form as a sum over subsets of any reduced word of v.

use crate::bundle_degree::check_subset_budget;
use crate::check::{CheckReport, ResidualAccumulator};
use crate::coefficients::{
    negate_hbar, negate_lambda, negate_z, weyl_twist_dynamical, weyl_twist_spectral,
    Coefficient, EvalCache, EvaluationPoint, ThetaMonomial,
};
use crate::error::{Error, Result};
use crate::root_system::{
    bruhat_leq, langlands_dual, mat_apply, mat_identity, mat_mul, LatticeTag, LatticeVector,
};
use crate::theta::ThetaContext;
use crate::twisted_algebra::{twisted_multiply, NormalForm, Setting, TwistedElement};
use num_complex::Complex64;
use rand::Rng;
use serde::{Serialize, Serializer};

/// Required residual for the numeric triangular inverse.
pub const B_RESIDUAL_TOL: f64 = 1e-8;

/// Maximum singular-sample retries before a verification gives up.
const MAX_POLE_STRIKES: usize = 60;

/// One of the eight operator families: signs carried by the spectral and
/// dynamical variables, and whether the family is dynamical (acts on the
/// f^d basis, normal form d_w a d^dyn_v) or spectral (d^dyn_v a d_w).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OperatorVariant {
    pub z_sign: i8,
    pub lambda_sign: i8,
    pub dynamical: bool,
}

impl OperatorVariant {
    pub const fn new(z_sign: i8, lambda_sign: i8, dynamical: bool) -> Self {
        OperatorVariant { z_sign, lambda_sign, dynamical }
    }

    /// All eight families, spectral/dynamical alternating, sign-major.
    pub const ALL: [OperatorVariant; 8] = [
        OperatorVariant::new(1, 1, false),
        OperatorVariant::new(1, 1, true),
        OperatorVariant::new(1, -1, false),
        OperatorVariant::new(1, -1, true),
        OperatorVariant::new(-1, 1, false),
        OperatorVariant::new(-1, 1, true),
        OperatorVariant::new(-1, -1, false),
        OperatorVariant::new(-1, -1, true),
    ];

    /// Families whose generator coefficients are fixed directly (the
    /// (-z,-lam) pair is only reachable through substitutions and is
    /// flagged non-normative in reports).
    pub fn is_substitution_defined(&self) -> bool {
        self.z_sign < 0 && self.lambda_sign < 0
    }

    pub fn token(&self) -> String {
        format!(
            "z{}l{}{}",
            if self.z_sign >= 0 { '+' } else { '-' },
            if self.lambda_sign >= 0 { '+' } else { '-' },
            if self.dynamical { "d" } else { "" }
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (body, dynamical) = match s.strip_suffix('d') {
            Some(b) => (b, true),
            None => (s, false),
        };
        let bytes = body.as_bytes();
        if bytes.len() != 4 || bytes[0] != b'z' || bytes[2] != b'l' {
            return Err(Error::Input(format!(
                "unknown operator variant {s:?}; expected z<sign>l<sign>[d] like z+l- or z+l+d"
            )));
        }
        let sign = |b: u8| -> Result<i8> {
            match b {
                b'+' => Ok(1),
                b'-' => Ok(-1),
                _ => Err(Error::Input(format!(
                    "unknown operator variant {s:?}; signs must be + or -"
                ))),
            }
        };
        Ok(OperatorVariant::new(sign(bytes[1])?, sign(bytes[3])?, dynamical))
    }

    /// Normal form in which this family's operators are expressed.
    pub fn form(&self) -> NormalForm {
        if self.dynamical {
            NormalForm::DynRight
        } else {
            NormalForm::DynLeft
        }
    }

    /// Storage key of the a_{v,w} term inside a TwistedElement of this
    /// family: the operator index v sits in the left slot of both normal
    /// forms (delta^dyn_v a delta_w spectral, delta_v a delta^dyn_w dynamical).
    fn term_key(&self, v: usize, w: usize) -> (usize, usize) {
        (v, w)
    }
}

impl Serialize for OperatorVariant {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.token())
    }
}

fn check_lattice_pair(mu: &LatticeVector, nu: &LatticeVector) -> Result<()> {
    if mu.tag != LatticeTag::Char || nu.tag != LatticeTag::Cochar {
        return Err(Error::Shape(
            "coefficient pair wants a character and a cocharacter".into(),
        ));
    }
    Ok(())
}

/// The two generator coefficients ('a, 'b) of `variant` with the simple
/// root replaced by the character mu and the simple coroot by the
/// cocharacter nu; this is exactly the factor split used by the closed
/// form, where (mu, nu) runs over twisted root pairs.
pub fn coeff_pair(
    variant: OperatorVariant,
    mu: &LatticeVector,
    nu: &LatticeVector,
) -> Result<(ThetaMonomial, ThetaMonomial)> {
    check_lattice_pair(mu, nu)?;
    let n = mu.coords.len();
    let zeros = vec![0i64; n];
    let m = &mu.coords;
    let v = &nu.coords;
    let neg = |c: &Vec<i64>| c.iter().map(|x| -x).collect::<Vec<i64>>();
    // theta(c*h + z_{cm} + lam_{cv})^e with cm in chars, cv in cochars
    let at = |c: i64, cm: Vec<i64>, cv: Vec<i64>, e: i64| ThetaMonomial::atom(c, cm, cv, e);

    let pair = match (variant.z_sign, variant.lambda_sign, variant.dynamical) {
        // T^{z,lam}: 'a = th(h) th(z+lam) / th(z) th(h+lam)
        //            'b = th(h-z) th(-lam) / th(z) th(h+lam)
        (1, 1, false) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, m.clone(), v.clone(), 1))
                .mul(&at(0, m.clone(), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), v.clone(), -1)),
            at(1, neg(m), zeros.clone(), 1)
                .mul(&at(0, zeros.clone(), neg(v), 1))
                .mul(&at(0, m.clone(), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), v.clone(), -1)),
        ),
        // T^{z,lam,d}: 'a = th(h) th(lam+z) / th(lam) th(h-z)
        //              'b = th(h+lam) th(-z) / th(lam) th(h-z)
        (1, 1, true) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, m.clone(), v.clone(), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, neg(m), zeros.clone(), -1)),
            at(1, zeros.clone(), v.clone(), 1)
                .mul(&at(0, neg(m), zeros.clone(), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, neg(m), zeros.clone(), -1)),
        ),
        // T^{z,-lam}: 'a = th(h) th(z-lam) / th(z) th(h-lam)
        //             'b = th(h-z) th(lam) / th(z) th(h-lam)
        (1, -1, false) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, m.clone(), neg(v), 1))
                .mul(&at(0, m.clone(), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), neg(v), -1)),
            at(1, neg(m), zeros.clone(), 1)
                .mul(&at(0, zeros.clone(), v.clone(), 1))
                .mul(&at(0, m.clone(), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), neg(v), -1)),
        ),
        // T^{z,-lam,d}: 'a = th(h) th(z-lam) / th(lam) th(h-z)
        //               'b = th(h-lam) th(z) / th(lam) th(h-z)
        (1, -1, true) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, m.clone(), neg(v), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, neg(m), zeros.clone(), -1)),
            at(1, zeros.clone(), neg(v), 1)
                .mul(&at(0, m.clone(), zeros.clone(), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, neg(m), zeros.clone(), -1)),
        ),
        // T^{-z,lam}: 'a = th(h) th(z-lam) / th(-z) th(h+lam)
        //             'b = th(h+z) th(lam) / th(z) th(h+lam)
        (-1, 1, false) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, m.clone(), neg(v), 1))
                .mul(&at(0, neg(m), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), v.clone(), -1)),
            at(1, m.clone(), zeros.clone(), 1)
                .mul(&at(0, zeros.clone(), v.clone(), 1))
                .mul(&at(0, m.clone(), zeros.clone(), -1))
                .mul(&at(1, zeros.clone(), v.clone(), -1)),
        ),
        // T^{-z,lam,d}: 'a = th(h) th(lam-z) / th(lam) th(h+z)
        //               'b = th(h+lam) th(z) / th(lam) th(h+z)
        (-1, 1, true) => (
            at(1, zeros.clone(), zeros.clone(), 1)
                .mul(&at(0, neg(m), v.clone(), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, m.clone(), zeros.clone(), -1)),
            at(1, zeros.clone(), v.clone(), 1)
                .mul(&at(0, m.clone(), zeros.clone(), 1))
                .mul(&at(0, zeros.clone(), v.clone(), -1))
                .mul(&at(1, m.clone(), zeros.clone(), -1)),
        ),
        // The never-printed (-z,-lam) pair: defined by the lam -> -lam
        // substitution on (-z,lam), resp. z -> -z on (z,-lam,d); exposed
        // but flagged non-normative.
        (-1, -1, false) => {
            let base = coeff_pair(OperatorVariant::new(-1, 1, false), mu, nu)?;
            let flip = |m: &ThetaMonomial| {
                m.map_atoms(|a| {
                    (
                        a.h_coeff,
                        a.char_part.clone(),
                        a.cochar_part.iter().map(|x| -x).collect(),
                    )
                })
            };
            (flip(&base.0), flip(&base.1))
        }
        (-1, -1, true) => {
            let base = coeff_pair(OperatorVariant::new(1, -1, true), mu, nu)?;
            let flip = |m: &ThetaMonomial| {
                m.map_atoms(|a| {
                    (
                        a.h_coeff,
                        a.char_part.iter().map(|x| -x).collect(),
                        a.cochar_part.clone(),
                    )
                })
            };
            (flip(&base.0), flip(&base.1))
        }
        _ => {
            return Err(Error::Input(format!(
                "invalid variant signs ({}, {})",
                variant.z_sign, variant.lambda_sign
            )))
        }
    };
    Ok(pair)
}

/// Simple generator T_alpha of the family, as a two-term twisted element.
pub fn dl_generator(
    setting: &Setting,
    variant: OperatorVariant,
    alpha: usize,
) -> Result<TwistedElement> {
    if alpha >= setting.rank() {
        return Err(Error::Input(format!(
            "simple reflection index {alpha} out of range for rank {}",
            setting.rank()
        )));
    }
    let mu = setting.datum.simple_root(alpha);
    let nu = setting.datum.simple_coroot(alpha);
    let (a, b) = coeff_pair(variant, &mu, &nu)?;
    let s = setting.group.simple(alpha);
    let e = setting.group.e();
    let form = variant.form();
    let (ka, kb) = (variant.term_key(s, e), variant.term_key(s, s));
    TwistedElement::from_term(form, ka.0, ka.1, Coefficient::from_monomial(a))
        .add(&TwistedElement::from_term(form, kb.0, kb.1, Coefficient::from_monomial(b)))
}

/// Product of generators along a reduced word (left to right). Non-reduced
/// words are rejected: off a reduced word the product is a different
/// element of the algebra, not a relabeling.
pub fn dl_word(setting: &Setting, variant: OperatorVariant, word: &[usize]) -> Result<TwistedElement> {
    for &i in word {
        if i >= setting.rank() {
            return Err(Error::Input(format!(
                "word letter {i} out of range for rank {}",
                setting.rank()
            )));
        }
    }
    let idx = setting.group.word_to_index(word);
    if setting.group.length(idx) != word.len() {
        return Err(Error::Input(format!(
            "word {:?} is not reduced (target element has length {})",
            word,
            setting.group.length(idx)
        )));
    }
    let mut acc = TwistedElement::identity(variant.form());
    for &i in word {
        let g = dl_generator(setting, variant, i)?;
        acc = twisted_multiply(setting, &acc, &g)?;
    }
    Ok(acc)
}

/// T_v along the canonical reduced word of v.
pub fn dl_operator(setting: &Setting, variant: OperatorVariant, v: usize) -> Result<TwistedElement> {
    if v >= setting.group.order() {
        return Err(Error::Input(format!(
            "Weyl index {v} out of range for group of order {}",
            setting.group.order()
        )));
    }
    dl_word(setting, variant, &setting.group.elem(v).word)
}

/// All T_v in canonical order, each built from its parent (the canonical
/// word minus its last letter), so every operator is assembled once.
pub fn all_operators(setting: &Setting, variant: OperatorVariant) -> Result<Vec<TwistedElement>> {
    let n = setting.group.order();
    let mut ops: Vec<TwistedElement> = Vec::with_capacity(n);
    ops.push(TwistedElement::identity(variant.form()));
    for idx in 1..n {
        let word = &setting.group.elem(idx).word;
        let parent = setting.group.word_to_index(&word[..word.len() - 1]);
        debug_assert!(parent < idx);
        let last = dl_generator(setting, variant, word[word.len() - 1])?;
        ops.push(twisted_multiply(setting, &ops[parent], &last)?);
    }
    Ok(ops)
}

/// Expansion coefficients a_{v,w} of a whole family, indexed by canonical
/// Weyl order: T_v = sum_w d^dyn_v a_{v,w} d_w (spectral families) or
/// sum_w d_w a_{v,w} d^dyn_v (dynamical families).
#[derive(Clone, Debug, Serialize)]
pub struct AMatrix {
    pub variant: OperatorVariant,
    pub entries: Vec<Vec<Coefficient>>,
}

impl AMatrix {
    pub fn order(&self) -> usize {
        self.entries.len()
    }
}

pub fn a_matrix(setting: &Setting, variant: OperatorVariant) -> Result<AMatrix> {
    let n = setting.group.order();
    let ops = all_operators(setting, variant)?;
    let mut entries = vec![vec![Coefficient::zero(); n]; n];
    for (v, op) in ops.iter().enumerate() {
        for (&key, c) in &op.terms {
            let (fixed, w) = key;
            debug_assert_eq!(fixed, v, "operator index must sit in the left slot");
            debug_assert!(
                bruhat_leq(&setting.group, w, v),
                "support outside the Bruhat lower set"
            );
            entries[v][w] = c.clone();
        }
    }
    Ok(AMatrix { variant, entries })
}

/// Numeric value of the full a-matrix at one point.
pub fn eval_a_matrix(a: &AMatrix, cache: &mut EvalCache) -> Result<Vec<Vec<Complex64>>> {
    a.entries
        .iter()
        .map(|row| row.iter().map(|c| c.eval_cached(cache)).collect())
        .collect()
}

/// One subset term of the closed form: the bookkeeping element w_{I,J},
/// the monomial zeta_J, and the substituted (character, cocharacter)
/// argument pairs, position by position.
#[derive(Clone, Debug)]
pub struct ZetaData {
    pub variant: OperatorVariant,
    pub word: Vec<usize>,
    pub subset: Vec<bool>,
    pub w_ij: usize,
    pub zeta: ThetaMonomial,
    pub char_args: Vec<LatticeVector>,
    pub cochar_args: Vec<LatticeVector>,
}

/// Closed-form subset term for a reduced word I of v and a subset J.
///
/// Spectral families substitute (gamma_j, beta_j~) into the generator
/// coefficient pair, where the cocharacters beta_j~ are built from the
/// right tail of I (beta_l~ = alpha_{i_l}~, beta_j~ = s_{i_l}...s_{i_{j+1}}
/// (alpha_{i_j}~)) and the characters gamma_j = w_{I,J_{j-1}}(alpha_{i_j})
/// accumulate the chosen prefix reflections. Dynamical families mirror
/// the construction: right-tail characters beta_j, prefix cocharacters
/// gamma_j~. 'b factors are taken at positions in J, 'a elsewhere.
pub fn zeta_closed_form(
    setting: &Setting,
    variant: OperatorVariant,
    word: &[usize],
    subset: &[bool],
) -> Result<ZetaData> {
    let rank = setting.rank();
    for &i in word {
        if i >= rank {
            return Err(Error::Input(format!(
                "word letter {i} out of range for rank {rank}"
            )));
        }
    }
    if subset.len() != word.len() {
        return Err(Error::Input(format!(
            "subset mask length {} does not match word length {}",
            subset.len(),
            word.len()
        )));
    }
    let v_idx = setting.group.word_to_index(word);
    if setting.group.length(v_idx) != word.len() {
        return Err(Error::Input(format!("word {word:?} is not reduced")));
    }
    let l = word.len();
    let datum = &setting.datum;

    // Right-tail vectors: cocharacters for spectral families, characters
    // for dynamical ones.
    let (tail_tag, tail_refl): (LatticeTag, fn(&crate::root_system::RootDatum, usize) -> crate::root_system::IntMatrix) =
        if variant.dynamical {
            (LatticeTag::Char, |d, i| d.reflection_char(i))
        } else {
            (LatticeTag::Cochar, |d, i| d.reflection_cochar(i))
        };
    let mut tail = vec![LatticeVector::zero(rank, tail_tag); l];
    let mut m = mat_identity(rank);
    for j in (0..l).rev() {
        let e = LatticeVector::simple(word[j], rank, tail_tag);
        tail[j] = LatticeVector { coords: mat_apply(&m, &e.coords), tag: tail_tag };
        m = mat_mul(&m, &tail_refl(datum, word[j]));
    }

    // Prefix vectors gated by J: characters for spectral families,
    // cocharacters for dynamical ones.
    let (prefix_tag, prefix_refl): (LatticeTag, fn(&crate::root_system::RootDatum, usize) -> crate::root_system::IntMatrix) =
        if variant.dynamical {
            (LatticeTag::Cochar, |d, i| d.reflection_cochar(i))
        } else {
            (LatticeTag::Char, |d, i| d.reflection_char(i))
        };
    let mut prefix = vec![LatticeVector::zero(rank, prefix_tag); l];
    let mut n = mat_identity(rank);
    let mut chosen: Vec<usize> = Vec::new();
    for j in 0..l {
        let e = LatticeVector::simple(word[j], rank, prefix_tag);
        prefix[j] = LatticeVector { coords: mat_apply(&n, &e.coords), tag: prefix_tag };
        if subset[j] {
            n = mat_mul(&n, &prefix_refl(datum, word[j]));
            chosen.push(word[j]);
        }
    }
    let w_ij = setting.group.word_to_index(&chosen);

    let mut zeta = ThetaMonomial::one();
    let mut char_args = Vec::with_capacity(l);
    let mut cochar_args = Vec::with_capacity(l);
    for j in 0..l {
        let (mu, nu) = if variant.dynamical {
            (tail[j].clone(), prefix[j].clone())
        } else {
            (prefix[j].clone(), tail[j].clone())
        };
        let (a, b) = coeff_pair(variant, &mu, &nu)?;
        zeta = zeta.mul(if subset[j] { &b } else { &a });
        char_args.push(mu);
        cochar_args.push(nu);
    }

    Ok(ZetaData {
        variant,
        word: word.to_vec(),
        subset: subset.to_vec(),
        w_ij,
        zeta,
        char_args,
        cochar_args,
    })
}

/// a_{v,w} as the subset sum of the closed form over the canonical reduced
/// word of v. Returns the zero coefficient when w is not below v.
pub fn a_via_closed_form(
    setting: &Setting,
    variant: OperatorVariant,
    v: usize,
    w: usize,
) -> Result<Coefficient> {
    if v >= setting.group.order() || w >= setting.group.order() {
        return Err(Error::Input("Weyl index out of range".into()));
    }
    let word = setting.group.elem(v).word.clone();
    let l = word.len();
    check_subset_budget(l)?;
    let mut acc = Coefficient::zero();
    for mask in 0u32..(1u32 << l) {
        let subset: Vec<bool> = (0..l).map(|j| mask & (1 << j) != 0).collect();
        let data = zeta_closed_form(setting, variant, &word, &subset)?;
        if data.w_ij == w {
            acc = acc.add(&Coefficient::from_monomial(data.zeta));
        }
    }
    Ok(acc)
}

fn max_abs(m: &[Vec<Complex64>]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, x| acc.max(x.norm()))
}

/// Numeric inverse b of the evaluated a-matrix at one point, by forward
/// substitution in canonical order (which refines length, hence Bruhat,
/// order, so the evaluated matrix is lower triangular). The residual
/// |a b - 1|_inf must stay below B_RESIDUAL_TOL.
pub fn b_matrix_numeric(
    a: &AMatrix,
    point: &EvaluationPoint,
    ctx: &ThetaContext,
) -> Result<Vec<Vec<Complex64>>> {
    let n = a.order();
    let mut cache = EvalCache::new(ctx, point);
    let av = eval_a_matrix(a, &mut cache)?;
    let scale = 1.0 + max_abs(&av);
    for (j, row) in av.iter().enumerate() {
        if row[j].norm() < 1e-12 * scale {
            return Err(Error::Numeric(format!(
                "a-matrix diagonal entry {j} is numerically singular at this point; resample"
            )));
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut b = vec![vec![zero; n]; n];
    for col in 0..n {
        for row in col..n {
            let mut s = if row == col { Complex64::new(1.0, 0.0) } else { zero };
            for k in col..row {
                s -= av[row][k] * b[k][col];
            }
            b[row][col] = s / av[row][row];
        }
    }
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = zero;
            for k in 0..n {
                s += av[i][k] * b[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((s - Complex64::new(target, 0.0)).norm());
        }
    }
    if !(residual < B_RESIDUAL_TOL) {
        return Err(Error::Numeric(format!(
            "triangular inverse residual {residual:.3e} exceeds {B_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(b)
}

/// Runs `body` on `n_points` fresh generic points, retrying (with fresh
/// randomness) whenever an evaluation lands on a theta zero.
pub fn with_sample_points<R, F>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    mut body: F,
) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(&EvaluationPoint, &mut EvalCache) -> Result<()>,
{
    let mut done = 0;
    let mut strikes = 0;
    while done < n_points {
        let point = EvaluationPoint::random_with_hbar(rng, setting.rank(), ctx, hbar);
        let mut cache = EvalCache::new(ctx, &point);
        match body(&point, &mut cache) {
            Ok(()) => done += 1,
            Err(Error::Pole { .. }) | Err(Error::Numeric(_)) if strikes + 1 < MAX_POLE_STRIKES => {
                strikes += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Worst pointwise residual between two twisted elements at one point.
pub fn element_residual(
    x: &TwistedElement,
    y: &TwistedElement,
    cache: &mut EvalCache,
) -> Result<f64> {
    let mut acc = ResidualAccumulator::new();
    let mut keys: Vec<(usize, usize)> = x.terms.keys().chain(y.terms.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    for k in keys {
        let a = x.coeff(k.0, k.1).eval_cached(cache)?;
        let b = y.coeff(k.0, k.1).eval_cached(cache)?;
        acc.observe(a, b);
    }
    Ok(acc.residual())
}

/// T_alpha^2 = 1 for every family and every simple reflection: the sum of
/// cross terms cancels by the three-term theta relation, so the check is
/// numeric by design.
pub fn check_squares<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("generator squares");
    let mut targets = Vec::new();
    for variant in OperatorVariant::ALL {
        for alpha in 0..setting.rank() {
            let g = dl_generator(setting, variant, alpha)?;
            let sq = twisted_multiply(setting, &g, &g)?;
            let id = TwistedElement::identity(variant.form());
            targets.push((
                format!("square of generator {} ({})", alpha + 1, variant.token()),
                sq,
                id,
                0.0f64,
            ));
        }
    }
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        for (_, sq, id, acc) in targets.iter_mut() {
            *acc = acc.max(element_residual(sq, id, cache)?);
        }
        Ok(())
    })?;
    for (label, _, _, acc) in targets {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}

fn alternating_word(first: usize, second: usize, len: usize) -> Vec<usize> {
    (0..len).map(|k| if k % 2 == 0 { first } else { second }).collect()
}

/// Braid relations for every pair of simple reflections and every family:
/// the two alternating words of length m(i,j) give the same operator.
pub fn check_braid<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("braid relations");
    if setting.rank() < 2 {
        report.push_exact("rank below two: braid relations are vacuous", true);
        return Ok(report);
    }
    let mut targets = Vec::new();
    for i in 0..setting.rank() {
        for j in (i + 1)..setting.rank() {
            let m = setting.datum.coxeter_m(i, j)?;
            let x_word = alternating_word(i, j, m);
            let y_word = alternating_word(j, i, m);
            for variant in OperatorVariant::ALL {
                let x = dl_word(setting, variant, &x_word)?;
                let y = dl_word(setting, variant, &y_word)?;
                targets.push((
                    format!(
                        "braid relation ({},{}) of order {m} ({})",
                        i + 1,
                        j + 1,
                        variant.token()
                    ),
                    x,
                    y,
                    0.0f64,
                ));
            }
        }
    }
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        for (_, x, y, acc) in targets.iter_mut() {
            *acc = acc.max(element_residual(x, y, cache)?);
        }
        Ok(())
    })?;
    for (label, _, _, acc) in targets {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}

/// T_v does not depend on the chosen reduced word: compares products along
/// up to `max_words` distinct reduced words of v against the first, for
/// the base spectral and dynamical families.
pub fn check_word_independence<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    v: usize,
    max_words: usize,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("reduced-word independence");
    let words = crate::root_system::all_reduced_words(&setting.group, v);
    let take = words.len().min(max_words.max(1));
    if take < 2 {
        report.push_exact(
            format!("element {v} has a single reduced word; nothing to compare"),
            true,
        );
        return Ok(report);
    }
    let mut targets = Vec::new();
    for variant in [OperatorVariant::new(1, 1, false), OperatorVariant::new(1, 1, true)] {
        let reference = dl_word(setting, variant, &words[0])?;
        for word in words.iter().take(take).skip(1) {
            let other = dl_word(setting, variant, word)?;
            targets.push((
                format!(
                    "same operator along {:?} and {:?} ({})",
                    one_based(&words[0]),
                    one_based(word),
                    variant.token()
                ),
                reference.clone(),
                other,
                0.0f64,
            ));
        }
    }
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        for (_, x, y, acc) in targets.iter_mut() {
            *acc = acc.max(element_residual(x, y, cache)?);
        }
        Ok(())
    })?;
    for (label, _, _, acc) in targets {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}

fn one_based(word: &[usize]) -> Vec<usize> {
    word.iter().map(|&i| i + 1).collect()
}

fn mat_product_residual(
    left: &[Vec<Complex64>],
    right: &[Vec<Complex64>],
    signs: Option<&[i64]>,
) -> f64 {
    let n = left.len();
    let mut acc = ResidualAccumulator::new();
    for u in 0..n {
        for w in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for v in 0..n {
                let sign = signs.map(|e| (e[v] * e[w]) as f64).unwrap_or(1.0);
                s += left[u][v] * right[v][w] * sign;
            }
            let target = if u == w { 1.0 } else { 0.0 };
            acc.observe(s, Complex64::new(target, 0.0));
        }
    }
    acc.residual()
}

fn inverse_reindexed(group: &crate::root_system::WeylGroup, m: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = m.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for v in 0..n {
        for w in 0..n {
            out[v][w] = m[group.inv(v)][group.inv(w)];
        }
    }
    out
}

/// Inversion pairings between spectral and dynamical a-matrices:
/// unsigned for the (z,lam) pair, sign-decorated for (z,-lam) and
/// (-z,lam); also confirms that the numeric triangular inverse of
/// a(z+l+) reproduces a(z+l+d) at inverse indices.
pub fn check_invmat<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("a-matrix inversion pairings");
    let group = &setting.group;
    let signs: Vec<i64> = (0..group.order()).map(|v| group.sign_of(v)).collect();
    let pairs = [
        (OperatorVariant::new(1, 1, false), OperatorVariant::new(1, 1, true), false),
        (OperatorVariant::new(1, -1, false), OperatorVariant::new(1, -1, true), true),
        (OperatorVariant::new(-1, 1, false), OperatorVariant::new(-1, 1, true), true),
    ];
    let mut targets = Vec::new();
    for (spec, dyn_, signed) in pairs {
        targets.push((
            format!(
                "a({}) times sign-matched a({}) at inverse indices is the identity",
                spec.token(),
                dyn_.token()
            ),
            a_matrix(setting, spec)?,
            a_matrix(setting, dyn_)?,
            signed,
            0.0f64,
        ));
    }
    let mut b_acc = 0.0f64;
    let base = &targets[0];
    let base_a = base.1.clone();
    let base_d = base.2.clone();
    with_sample_points(setting, ctx, rng, hbar, n_points, |point, cache| {
        for (_, a, d, signed, acc) in targets.iter_mut() {
            let av = eval_a_matrix(a, cache)?;
            let dv = inverse_reindexed(group, &eval_a_matrix(d, cache)?);
            let res = mat_product_residual(&av, &dv, signed.then_some(signs.as_slice()));
            *acc = acc.max(res);
        }
        // numeric inverse route: b(z+l+) entrywise equals a(z+l+d) at
        // inverse indices
        let b = b_matrix_numeric(&base_a, point, ctx)?;
        let dv = inverse_reindexed(group, &eval_a_matrix(&base_d, cache)?);
        let mut acc = ResidualAccumulator::new();
        for (brow, drow) in b.iter().zip(dv.iter()) {
            for (x, y) in brow.iter().zip(drow.iter()) {
                acc.observe(*x, *y);
            }
        }
        b_acc = b_acc.max(acc.residual());
        Ok(())
    })?;
    for (label, _, _, _, acc) in targets {
        report.push_residual(label, acc, tol);
    }
    report.push_residual(
        "numeric triangular inverse of a(z+l+) equals a(z+l+d) at inverse indices",
        b_acc,
        tol,
    );
    Ok(report)
}

/// Swaps the spectral and dynamical coordinates of every theta atom and
/// relabels the normal form accordingly (each delta turns into a delta of
/// the other kind in place, so term keys are unchanged); this is the
/// coefficient-level transport along the duality that exchanges characters
/// of a datum with cocharacters of its Langlands dual.
pub fn coordinate_swap(elem: &TwistedElement) -> TwistedElement {
    let form = match elem.form {
        NormalForm::DynLeft => NormalForm::DynRight,
        NormalForm::DynRight => NormalForm::DynLeft,
    };
    let mut out = TwistedElement::zero(form);
    for (&(l, r), c) in &elem.terms {
        let mapped = c.map_atoms(|a| (a.h_coeff, a.cochar_part.clone(), a.char_part.clone()));
        out = out
            .add(&TwistedElement::from_term(form, l, r, mapped))
            .expect("same form");
    }
    out
}

/// Generator of the dual-side family carrying the original equivariant
/// parameter: the dual datum generator with h negated in every atom.
pub fn dual_generator(
    dual_setting: &Setting,
    dynamical: bool,
    alpha: usize,
) -> Result<TwistedElement> {
    let variant = OperatorVariant::new(1, 1, dynamical);
    let g = dl_generator(dual_setting, variant, alpha)?;
    Ok(g.map_coefficients(|c| negate_hbar(c)))
}

/// Duality transport of generators: the coordinate swap carries the dual
/// datum's dynamical generator to the spectral generator of the original
/// datum and vice versa; dual generators still square to the identity.
pub fn check_langlands<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("Langlands duality transport");
    let dual_datum = langlands_dual(&setting.datum);
    let dual = Setting::new(dual_datum, setting.group.order())?;
    if dual.group.order() != setting.group.order() {
        return Err(Error::Numeric(
            "dual Weyl group enumeration disagrees with the original".into(),
        ));
    }
    for v in 0..setting.group.order() {
        if dual.group.elem(v).word != setting.group.elem(v).word {
            return Err(Error::Numeric(
                "canonical Weyl orders of dual data diverged".into(),
            ));
        }
    }
    let mut targets = Vec::new();
    let mut squares = Vec::new();
    for alpha in 0..setting.rank() {
        let dual_dyn = dual_generator(&dual, true, alpha)?;
        let dual_spec = dual_generator(&dual, false, alpha)?;
        targets.push((
            format!(
                "swapped dual dynamical generator {} equals the spectral generator",
                alpha + 1
            ),
            coordinate_swap(&dual_dyn),
            dl_generator(setting, OperatorVariant::new(1, 1, false), alpha)?,
            0.0f64,
        ));
        targets.push((
            format!(
                "swapped dual spectral generator {} equals the dynamical generator",
                alpha + 1
            ),
            coordinate_swap(&dual_spec),
            dl_generator(setting, OperatorVariant::new(1, 1, true), alpha)?,
            0.0f64,
        ));
        squares.push((
            format!("square of dual dynamical generator {}", alpha + 1),
            twisted_multiply(&dual, &dual_dyn, &dual_dyn)?,
            TwistedElement::identity(NormalForm::DynRight),
            0.0f64,
        ));
        squares.push((
            format!("square of dual spectral generator {}", alpha + 1),
            twisted_multiply(&dual, &dual_spec, &dual_spec)?,
            TwistedElement::identity(NormalForm::DynLeft),
            0.0f64,
        ));
    }
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        for (_, x, y, acc) in targets.iter_mut().chain(squares.iter_mut()) {
            *acc = acc.max(element_residual(x, y, cache)?);
        }
        Ok(())
    })?;
    for (label, _, _, acc) in targets.into_iter().chain(squares) {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}

fn unit_inverse(c: &Coefficient) -> Result<Coefficient> {
    Ok(Coefficient::from_monomial(c.single_monomial()?.inverse()?))
}

/// a(z+l+) = a(z+l-) under lam -> -lam, a(z+l+d) = a(z-l+d) under
/// z -> -z, and the sign-decorated mixed substitutions; structural on the
/// a-side, numeric (via triangular inverses) on the b-side.
pub fn check_gamma_relations<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("sign-substitution relations");
    let group = &setting.group;
    let n = group.order();
    let a_pp = a_matrix(setting, OperatorVariant::new(1, 1, false))?;
    let a_pm = a_matrix(setting, OperatorVariant::new(1, -1, false))?;
    let a_mp = a_matrix(setting, OperatorVariant::new(-1, 1, false))?;
    let a_ppd = a_matrix(setting, OperatorVariant::new(1, 1, true))?;
    let a_pmd = a_matrix(setting, OperatorVariant::new(1, -1, true))?;
    let a_mpd = a_matrix(setting, OperatorVariant::new(-1, 1, true))?;

    let all_eq = |x: &AMatrix, y: Vec<Vec<Coefficient>>| -> bool {
        x.entries == y
    };
    let map_matrix = |m: &AMatrix, f: &dyn Fn(&Coefficient) -> Coefficient| -> Vec<Vec<Coefficient>> {
        m.entries
            .iter()
            .map(|row| row.iter().map(|c| f(c)).collect())
            .collect()
    };
    let signed_map = |m: &AMatrix, f: &dyn Fn(&Coefficient) -> Coefficient| -> Vec<Vec<Coefficient>> {
        (0..n)
            .map(|v| {
                (0..n)
                    .map(|w| f(&m.entries[v][w]).scale(group.sign_of(v) * group.sign_of(w)))
                    .collect()
            })
            .collect()
    };

    report.push_exact(
        "a(z+l+) equals a(z+l-) with lam negated (atom level)",
        all_eq(&a_pp, map_matrix(&a_pm, &|c| negate_lambda(c))),
    );
    report.push_exact(
        "a(z+l+d) equals a(z-l+d) with z negated (atom level)",
        all_eq(&a_ppd, map_matrix(&a_mpd, &|c| negate_z(c))),
    );
    report.push_exact(
        "a(z+l+d) equals sign-decorated a(z+l-d) with lam negated (atom level)",
        all_eq(&a_ppd, signed_map(&a_pmd, &|c| negate_lambda(c))),
    );
    report.push_exact(
        "a(z+l+) equals sign-decorated a(z-l+) with z negated (atom level)",
        all_eq(&a_pp, signed_map(&a_mp, &|c| negate_z(c))),
    );

    // b-side: evaluate triangular inverses at substituted points.
    let neg_all = |v: &[Complex64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let mut accs = vec![0.0f64; 4];
    with_sample_points(setting, ctx, rng, hbar, n_points, |point, _| {
        let p_lam = EvaluationPoint {
            z: point.z.clone(),
            lambda: neg_all(&point.lambda),
            hbar: point.hbar,
        };
        let p_z = EvaluationPoint {
            z: neg_all(&point.z),
            lambda: point.lambda.clone(),
            hbar: point.hbar,
        };
        let b_pp = b_matrix_numeric(&a_pp, point, ctx)?;
        let b_ppd = b_matrix_numeric(&a_ppd, point, ctx)?;
        let b_pm_sub = b_matrix_numeric(&a_pm, &p_lam, ctx)?;
        let b_mpd_sub = b_matrix_numeric(&a_mpd, &p_z, ctx)?;
        let b_pmd_sub = b_matrix_numeric(&a_pmd, &p_lam, ctx)?;
        let b_mp_sub = b_matrix_numeric(&a_mp, &p_z, ctx)?;
        let pairs: [(usize, &Vec<Vec<Complex64>>, &Vec<Vec<Complex64>>, bool); 4] = [
            (0, &b_pp, &b_pm_sub, false),
            (1, &b_ppd, &b_mpd_sub, false),
            (2, &b_ppd, &b_pmd_sub, true),
            (3, &b_pp, &b_mp_sub, true),
        ];
        for (slot, x, y, signed) in pairs {
            let mut acc = ResidualAccumulator::new();
            for v in 0..n {
                for w in 0..n {
                    let sign = if signed {
                        (group.sign_of(v) * group.sign_of(w)) as f64
                    } else {
                        1.0
                    };
                    acc.observe(x[v][w], y[v][w] * sign);
                }
            }
            accs[slot] = accs[slot].max(acc.residual());
        }
        Ok(())
    })?;
    let labels = [
        "b(z+l+) equals b(z+l-) with lam negated",
        "b(z+l+d) equals b(z-l+d) with z negated",
        "b(z+l+d) equals sign-decorated b(z+l-d) with lam negated",
        "b(z+l+) equals sign-decorated b(z-l+) with z negated",
    ];
    for (label, acc) in labels.into_iter().zip(accs) {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}

/// Closed-form subset sums reproduce the iterative expansion entries
/// exactly, atom by atom, for every family.
pub fn check_closed_form(setting: &Setting, variants: &[OperatorVariant]) -> Result<CheckReport> {
    let mut report = CheckReport::new("closed form vs iterative expansion");
    let n = setting.group.order();
    for &variant in variants {
        let a = a_matrix(setting, variant)?;
        let mut ok = true;
        for v in 0..n {
            for w in 0..n {
                let closed = a_via_closed_form(setting, variant, v, w)?;
                if closed != a.entries[v][w] {
                    ok = false;
                }
            }
        }
        report.push_exact(
            format!("subset sums match expansion entries ({})", variant.token()),
            ok,
        );
    }
    Ok(report)
}

/// Composite twist ^{u^dyn x} a: dynamical twist by u, spectral by x.
fn twist_both(setting: &Setting, u_dyn: usize, x_spec: usize, a: &Coefficient) -> Coefficient {
    weyl_twist_dynamical(
        setting.group.elem(u_dyn),
        &weyl_twist_spectral(setting.group.elem(x_spec), a),
    )
}

/// Mirror identities tying the dynamical and spectral expansions
/// together: the w0-translation of a-entries (both sign conventions), the
/// inverse-index symmetries, and the restriction-coefficient mirror that
/// matches products of theta ratios over positive roots and coroots.
pub fn check_mirror<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("dynamical-spectral mirror");
    let group = &setting.group;
    let datum = &setting.datum;
    let n = group.order();
    let w0 = group.w0();
    let g = setting.g_fun.clone();
    let h = setting.h_fun.clone();
    let g_inv = unit_inverse(&g)?;

    let a_pp = a_matrix(setting, OperatorVariant::new(1, 1, false))?;
    let a_pm = a_matrix(setting, OperatorVariant::new(1, -1, false))?;
    let a_mp = a_matrix(setting, OperatorVariant::new(-1, 1, false))?;
    let a_ppd = a_matrix(setting, OperatorVariant::new(1, 1, true))?;
    let a_pmd = a_matrix(setting, OperatorVariant::new(1, -1, true))?;
    let a_mpd = a_matrix(setting, OperatorVariant::new(-1, 1, true))?;

    // (label, lhs, rhs) pairs compared numerically at every sample point.
    let mut identities: Vec<(usize, Coefficient, Coefficient)> = Vec::new();
    let mut families: Vec<String> = Vec::new();
    let family = |families: &mut Vec<String>, label: &str| -> usize {
        families.push(label.to_string());
        families.len() - 1
    };

    // w0-translation, sign-decorated family.
    let f0 = family(&mut families, "w0-translation of a(z+l-d) against a(z+l-)");
    for x in 0..n {
        for u in 0..n {
            let uw0 = group.mul(u, w0);
            let xw0 = group.mul(x, w0);
            let lhs = g
                .mul(&a_pmd.entries[x][u])
                .scale(group.sign_of(x) * group.sign_of(u));
            let rhs = weyl_twist_dynamical(group.elem(uw0), &h).mul(&twist_both(
                setting,
                uw0,
                group.inv(x),
                &a_pm.entries[uw0][xw0],
            ));
            identities.push((f0, lhs, rhs));
        }
    }
    // w0-translation, plain family.
    let f1 = family(&mut families, "w0-translation of a(z+l+d) against a(z+l+)");
    for x in 0..n {
        for u in 0..n {
            let uw0 = group.mul(u, w0);
            let xw0 = group.mul(x, w0);
            let lhs = g.mul(&a_ppd.entries[x][u]);
            let rhs = weyl_twist_dynamical(group.elem(u), &h).mul(&twist_both(
                setting,
                uw0,
                group.inv(x),
                &a_pp.entries[uw0][xw0],
            ));
            identities.push((f1, lhs, rhs));
        }
    }

    // Inverse-index symmetries, four displays, both sign choices.
    let lam_pairs = [(&a_pp, &a_pm), (&a_pm, &a_pp)];
    let f2 = family(&mut families, "inverse-index symmetry of spectral entries under lam sign flip");
    for (src, dst) in lam_pairs {
        for v in 0..n {
            for w in 0..n {
                let (vi, wi) = (group.inv(v), group.inv(w));
                let lhs = weyl_twist_spectral(group.elem(w), &g).mul(&src.entries[v][w]);
                let rhs = g.mul(&twist_both(setting, vi, w, &dst.entries[vi][wi]));
                identities.push((f2, lhs, rhs));
            }
        }
    }
    let lam_pairs_d = [(&a_ppd, &a_pmd), (&a_pmd, &a_ppd)];
    let f3 = family(&mut families, "inverse-index symmetry of dynamical entries under lam sign flip");
    for (src, dst) in lam_pairs_d {
        for v in 0..n {
            for w in 0..n {
                let (vi, wi) = (group.inv(v), group.inv(w));
                let lhs = g.mul(&src.entries[v][w]);
                let rhs = weyl_twist_spectral(group.elem(vi), &g).mul(&twist_both(
                    setting,
                    w,
                    vi,
                    &dst.entries[vi][wi],
                ));
                identities.push((f3, lhs, rhs));
            }
        }
    }
    let z_pairs = [(&a_pp, &a_mp), (&a_mp, &a_pp)];
    let f4 = family(&mut families, "inverse-index symmetry of spectral entries under z sign flip");
    for (src, dst) in z_pairs {
        for v in 0..n {
            for w in 0..n {
                let (vi, wi) = (group.inv(v), group.inv(w));
                let lhs = weyl_twist_dynamical(group.elem(vi), &h).mul(&src.entries[v][w]);
                let rhs = h.mul(&twist_both(setting, vi, w, &dst.entries[vi][wi]));
                identities.push((f4, lhs, rhs));
            }
        }
    }
    let z_pairs_d = [(&a_ppd, &a_mpd), (&a_mpd, &a_ppd)];
    let f5 = family(&mut families, "inverse-index symmetry of dynamical entries under z sign flip");
    for (src, dst) in z_pairs_d {
        for v in 0..n {
            for w in 0..n {
                let (vi, wi) = (group.inv(v), group.inv(w));
                let lhs = h.mul(&src.entries[v][w]);
                let rhs = weyl_twist_dynamical(group.elem(w), &h).mul(&twist_both(
                    setting,
                    w,
                    vi,
                    &dst.entries[vi][wi],
                ));
                identities.push((f5, lhs, rhs));
            }
        }
    }

    // Restriction-coefficient mirror with the trivial section choice: the
    // two products of theta ratios over positive (co)roots intertwine the
    // spectral and dynamical restriction coefficients.
    let f6 = family(
        &mut families,
        "restriction-coefficient mirror over positive roots and coroots",
    );
    let c_dyn = |v: usize, w: usize| -> Result<Coefficient> {
        let vi = group.inv(v);
        Ok(g.mul(&unit_inverse(&weyl_twist_spectral(group.elem(vi), &g))?)
            .mul(&a_pmd.entries[v][w]))
    };
    let c_spec = |v: usize, w: usize| -> Result<Coefficient> {
        Ok(weyl_twist_spectral(group.elem(w), &g)
            .mul(&g_inv)
            .mul(&a_pm.entries[v][w]))
    };
    let rank = setting.rank();
    let p_z = |v: usize| -> Coefficient {
        let mut m = ThetaMonomial::one();
        for root in &datum.positive_roots {
            let moved = group.act_char(v, root);
            m = m
                .mul(&ThetaMonomial::atom(1, moved.coords.clone(), vec![0; rank], 1))
                .mul(&ThetaMonomial::atom(0, root.coords.clone(), vec![0; rank], -1));
        }
        Coefficient::from_monomial(m)
    };
    let p_lam = |w: usize| -> Coefficient {
        let mut m = ThetaMonomial::one();
        for coroot in &datum.positive_coroots {
            let moved = group.act_cochar(w, coroot);
            m = m
                .mul(&ThetaMonomial::atom(1, vec![0; rank], moved.coords.clone(), 1))
                .mul(&ThetaMonomial::atom(0, vec![0; rank], coroot.coords.clone(), -1));
        }
        Coefficient::from_monomial(m)
    };
    for v in 0..n {
        for w in 0..n {
            let ww0 = group.mul(w, w0);
            let vw0 = group.mul(v, w0);
            let lhs = weyl_twist_spectral(group.elem(v), &c_dyn(v, w)?).mul(&p_z(v));
            let rhs = p_lam(w).mul(&weyl_twist_dynamical(group.elem(ww0), &c_spec(ww0, vw0)?));
            identities.push((f6, lhs, rhs));
        }
    }

    let mut accs = vec![0.0f64; families.len()];
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        let mut point_accs = vec![ResidualAccumulator::new(); families.len()];
        for (slot, lhs, rhs) in &identities {
            point_accs[*slot].observe(lhs.eval_cached(cache)?, rhs.eval_cached(cache)?);
        }
        for (acc, point_acc) in accs.iter_mut().zip(point_accs) {
            *acc = acc.max(point_acc.residual());
        }
        Ok(())
    })?;
    for (label, acc) in families.into_iter().zip(accs) {
        report.push_residual(label, acc, tol);
    }
    Ok(report)
}
