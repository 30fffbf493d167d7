//! Root data, Weyl group combinatorics, Bruhat order, Langlands duality,
//! and logarithmic degrees.
//!
//! The character lattice X* is the root lattice in the simple-root basis,
//! the cocharacter lattice X_* is the coroot lattice in the simple-coroot
//! basis, and the pairing is <alpha_j, alpha_i~> = cartan[i][j] (we write
//! `~` for the coroot mark throughout). Everything here is exact integer
//! arithmetic; nothing depends on a choice of bilinear form.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest rank `build_root_datum` accepts; Weyl groups grow fast.
pub const RANK_CAP: usize = 4;

/// Default cap on the number of Weyl elements enumerated.
pub const DEFAULT_WEYL_CAP: usize = 48;

/// Safety cap on the positive-root closure; any finite type of rank <= 4
/// has at most 24 positive roots, so hitting this means non-finite input.
const CLOSURE_CAP: usize = 400;

pub type IntMatrix = Vec<Vec<i64>>;

/// Which lattice a vector lives in.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub enum LatticeTag {
    Char,
    Cochar,
}

/// Integer vector in the simple-root basis (`Char`) or the simple-coroot
/// basis (`Cochar`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct LatticeVector {
    pub coords: Vec<i64>,
    pub tag: LatticeTag,
}

impl LatticeVector {
    pub fn char(coords: Vec<i64>) -> Self {
        LatticeVector { coords, tag: LatticeTag::Char }
    }

    pub fn cochar(coords: Vec<i64>) -> Self {
        LatticeVector { coords, tag: LatticeTag::Cochar }
    }

    pub fn zero(rank: usize, tag: LatticeTag) -> Self {
        LatticeVector { coords: vec![0; rank], tag }
    }

    pub fn simple(i: usize, rank: usize, tag: LatticeTag) -> Self {
        let mut coords = vec![0; rank];
        coords[i] = 1;
        LatticeVector { coords, tag }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.tag, other.tag);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        LatticeVector { coords, tag: self.tag }
    }

    pub fn neg(&self) -> Self {
        LatticeVector {
            coords: self.coords.iter().map(|a| -a).collect(),
            tag: self.tag,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&a| a == 0)
    }

    /// A nonzero root is positive iff all coordinates are >= 0.
    pub fn is_positive(&self) -> bool {
        !self.is_zero() && self.coords.iter().all(|&a| a >= 0)
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.coords.iter().all(|&a| a <= 0)
    }
}

pub fn mat_identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn mat_transpose(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i]).collect()).collect()
}

pub fn mat_apply(a: &IntMatrix, v: &[i64]) -> Vec<i64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
        .collect()
}

/// Root datum of adjoint type: both lattices are spanned by the simple
/// roots / coroots, and all positive roots come paired with their coroots.
#[derive(Clone, Debug, Serialize)]
pub struct RootDatum {
    pub label: String,
    pub rank: usize,
    /// cartan[i][j] = <alpha_j, alpha_i~>.
    pub cartan: IntMatrix,
    pub positive_roots: Vec<LatticeVector>,
    /// positive_coroots[k] is the coroot of positive_roots[k].
    pub positive_coroots: Vec<LatticeVector>,
    /// 2*rho = sum of the positive roots (rho itself may be half-integral).
    pub two_rho: Vec<i64>,
    pub two_rho_check: Vec<i64>,
}

impl RootDatum {
    /// Builds a datum from an explicit Cartan matrix. The matrix must have
    /// 2 on the diagonal, non-positive integers elsewhere, symmetric zero
    /// pattern, and be of finite type (the root closure must terminate).
    pub fn from_cartan(label: &str, cartan: IntMatrix) -> Result<Self> {
        let n = cartan.len();
        if n == 0 {
            return Err(Error::Config("empty Cartan matrix".into()));
        }
        for (i, row) in cartan.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config("Cartan matrix is not square".into()));
            }
            if row[i] != 2 {
                return Err(Error::Config(format!(
                    "Cartan diagonal entry ({i},{i}) must be 2"
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if i != j && c > 0 {
                    return Err(Error::Config(format!(
                        "Cartan off-diagonal entry ({i},{j}) must be <= 0"
                    )));
                }
                if (c == 0) != (cartan[j][i] == 0) {
                    return Err(Error::Config(format!(
                        "Cartan zero pattern must be symmetric at ({i},{j})"
                    )));
                }
            }
        }

        let (positive_roots, positive_coroots) = positive_closure(&cartan)?;
        let mut two_rho = vec![0i64; n];
        let mut two_rho_check = vec![0i64; n];
        for (r, c) in positive_roots.iter().zip(&positive_coroots) {
            for i in 0..n {
                two_rho[i] += r.coords[i];
                two_rho_check[i] += c.coords[i];
            }
        }

        let datum = RootDatum {
            label: label.to_string(),
            rank: n,
            cartan,
            positive_roots,
            positive_coroots,
            two_rho,
            two_rho_check,
        };
        // <rho, alpha_i~> = 1 and <alpha_i, rho~> = 1 for every simple i.
        for i in 0..n {
            let ai = LatticeVector::simple(i, n, LatticeTag::Char);
            let aiv = LatticeVector::simple(i, n, LatticeTag::Cochar);
            let rho_pair = datum.pairing(&LatticeVector::char(datum.two_rho.clone()), &aiv);
            let rhov_pair =
                datum.pairing(&ai, &LatticeVector::cochar(datum.two_rho_check.clone()));
            if rho_pair != 2 || rhov_pair != 2 {
                return Err(Error::Config(format!(
                    "half-sum invariant failed at node {i}: {rho_pair}, {rhov_pair}"
                )));
            }
        }
        Ok(datum)
    }

    /// <mu, mu~> = sum_ij mu_i mu~_j cartan[j][i].
    pub fn pairing(&self, mu: &LatticeVector, mu_vee: &LatticeVector) -> i64 {
        debug_assert_eq!(mu.tag, LatticeTag::Char);
        debug_assert_eq!(mu_vee.tag, LatticeTag::Cochar);
        let mut acc = 0;
        for (i, &a) in mu.coords.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in mu_vee.coords.iter().enumerate() {
                acc += a * b * self.cartan[j][i];
            }
        }
        acc
    }

    pub fn simple_root(&self, i: usize) -> LatticeVector {
        LatticeVector::simple(i, self.rank, LatticeTag::Char)
    }

    pub fn simple_coroot(&self, i: usize) -> LatticeVector {
        LatticeVector::simple(i, self.rank, LatticeTag::Cochar)
    }

    /// Action matrix of the simple reflection s_i on X*.
    pub fn reflection_char(&self, i: usize) -> IntMatrix {
        let mut m = mat_identity(self.rank);
        for j in 0..self.rank {
            m[i][j] -= self.cartan[i][j];
        }
        m
    }

    /// Action matrix of s_i on X_*.
    pub fn reflection_cochar(&self, i: usize) -> IntMatrix {
        let mut m = mat_identity(self.rank);
        for j in 0..self.rank {
            m[i][j] -= self.cartan[j][i];
        }
        m
    }

    /// Coxeter exponent m(i,j): the order of s_i s_j.
    pub fn coxeter_m(&self, i: usize, j: usize) -> Result<usize> {
        match self.cartan[i][j] * self.cartan[j][i] {
            0 => Ok(2),
            1 => Ok(3),
            2 => Ok(4),
            3 => Ok(6),
            p => Err(Error::Input(format!(
                "no finite braid order for c_ij*c_ji = {p}"
            ))),
        }
    }

    /// Index of `root` in `positive_roots`, if it is a positive root.
    pub fn positive_root_index(&self, root: &LatticeVector) -> Option<usize> {
        self.positive_roots.iter().position(|r| r == root)
    }

    /// The coroot paired with a positive root.
    pub fn coroot_of(&self, root: &LatticeVector) -> Option<&LatticeVector> {
        self.positive_root_index(root).map(|k| &self.positive_coroots[k])
    }
}

/// Closure of the simple (root, coroot) pairs under all simple reflections,
/// keeping positive roots only. W-equivariance of alpha -> alpha~ makes the
/// paired walk produce the correct coroot for every root.
fn positive_closure(cartan: &IntMatrix) -> Result<(Vec<LatticeVector>, Vec<LatticeVector>)> {
    let n = cartan.len();
    let mut pairs: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    for i in 0..n {
        let mut r = vec![0; n];
        r[i] = 1;
        seen.insert(r.clone(), pairs.len());
        pairs.push((r.clone(), r));
    }
    let mut head = 0;
    while head < pairs.len() {
        let (r, c) = pairs[head].clone();
        head += 1;
        for k in 0..n {
            // s_k(r) = r - <r, alpha_k~> alpha_k, coefficient sum_j cartan[k][j] r_j.
            let coef_r: i64 = (0..n).map(|j| cartan[k][j] * r[j]).sum();
            let mut r2 = r.clone();
            r2[k] -= coef_r;
            if !(r2.iter().any(|&a| a != 0) && r2.iter().all(|&a| a >= 0)) {
                continue;
            }
            if seen.contains_key(&r2) {
                continue;
            }
            let coef_c: i64 = (0..n).map(|j| cartan[j][k] * c[j]).sum();
            let mut c2 = c.clone();
            c2[k] -= coef_c;
            if pairs.len() >= CLOSURE_CAP {
                return Err(Error::Config(
                    "root closure does not terminate; Cartan matrix is not of finite type"
                        .into(),
                ));
            }
            seen.insert(r2.clone(), pairs.len());
            pairs.push((r2, c2));
        }
    }
    // Height-then-lex order keeps the listing reproducible.
    pairs.sort_by_key(|(r, _)| (r.iter().sum::<i64>(), r.clone()));
    let roots = pairs
        .iter()
        .map(|(r, _)| LatticeVector::char(r.clone()))
        .collect();
    let coroots = pairs
        .into_iter()
        .map(|(_, c)| LatticeVector::cochar(c))
        .collect();
    Ok((roots, coroots))
}

fn cartan_for(series: &str, rank: usize) -> Result<IntMatrix> {
    let chain = |n: usize| -> IntMatrix {
        let mut m = mat_identity(n);
        for i in 0..n {
            m[i][i] = 2;
            if i + 1 < n {
                m[i][i + 1] = -1;
                m[i + 1][i] = -1;
            }
        }
        m
    };
    match (series, rank) {
        ("A", n) if n >= 1 => Ok(chain(n)),
        ("B", n) if n >= 2 => {
            // alpha_n short: <alpha_{n-1}, alpha_n~> = -2.
            let mut m = chain(n);
            m[n - 1][n - 2] = -2;
            Ok(m)
        }
        ("C", n) if n >= 2 => {
            // alpha_n long: <alpha_n, alpha_{n-1}~> = -2.
            let mut m = chain(n);
            m[n - 2][n - 1] = -2;
            Ok(m)
        }
        ("D", n) if n >= 3 => {
            let mut m = mat_identity(n);
            for i in 0..n {
                m[i][i] = 2;
            }
            for i in 0..n.saturating_sub(2) {
                m[i][i + 1] = -1;
                m[i + 1][i] = -1;
            }
            m[n - 3][n - 1] = -1;
            m[n - 1][n - 3] = -1;
            Ok(m)
        }
        ("G", 2) => Ok(vec![vec![2, -1], vec![-3, 2]]),
        ("F", 4) => Ok(vec![
            vec![2, -1, 0, 0],
            vec![-1, 2, -1, 0],
            vec![0, -2, 2, -1],
            vec![0, 0, -1, 2],
        ]),
        _ => Err(Error::Config(format!(
            "invalid series/rank combination {series}{rank}"
        ))),
    }
}

/// Builds the standard datum of the given series and rank.
pub fn build_root_datum(series: &str, rank: usize) -> Result<RootDatum> {
    if rank == 0 || rank > RANK_CAP {
        return Err(Error::Resource(format!(
            "rank {rank} outside supported range 1..={RANK_CAP}"
        )));
    }
    let cartan = cartan_for(series, rank)?;
    RootDatum::from_cartan(&format!("{series}{rank}"), cartan)
}

/// Parses labels like "A2", "C2", "G2", "F4", or "A1xA1".
pub fn parse_type_label(s: &str) -> Result<RootDatum> {
    if s == "A1xA1" {
        return RootDatum::from_cartan("A1xA1", vec![vec![2, 0], vec![0, 2]]);
    }
    if !s.is_char_boundary(1) || s.len() < 2 {
        return Err(Error::Config(format!("cannot parse type label {s:?}")));
    }
    let (series, digits) = s.split_at(1);
    let rank: usize = digits
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse type label {s:?}")))?;
    build_root_datum(series, rank)
}

/// The dual datum: Cartan matrix transposed, so roots and coroots trade
/// places. Applying it twice returns the original datum.
pub fn langlands_dual(datum: &RootDatum) -> RootDatum {
    let cartan = mat_transpose(&datum.cartan);
    let label = classify_label(&cartan).unwrap_or_else(|| format!("{}~", datum.label));
    RootDatum::from_cartan(&label, cartan).expect("dual of a finite type is finite")
}

fn classify_label(cartan: &IntMatrix) -> Option<String> {
    let n = cartan.len();
    if n == 2 && *cartan == vec![vec![2, 0], vec![0, 2]] {
        return Some("A1xA1".to_string());
    }
    for series in ["A", "B", "C", "D", "G", "F"] {
        if let Ok(m) = cartan_for(series, n) {
            if m == *cartan {
                return Some(format!("{series}{n}"));
            }
        }
    }
    None
}

/// One Weyl group element. Equality is by the action on X*, never by word.
#[derive(Clone, Debug)]
pub struct WeylElement {
    /// Position in the canonical (length, then lex on word) enumeration.
    pub index: usize,
    /// Lexicographically least reduced word, 0-based simple indices.
    pub word: Vec<usize>,
    pub length: usize,
    /// epsilon_w = (-1)^length.
    pub sign: i64,
    pub on_char: IntMatrix,
    pub on_cochar: IntMatrix,
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        self.on_char == other.on_char
    }
}
impl Eq for WeylElement {}

impl WeylElement {
    pub fn act_char(&self, v: &LatticeVector) -> LatticeVector {
        debug_assert_eq!(v.tag, LatticeTag::Char);
        LatticeVector::char(mat_apply(&self.on_char, &v.coords))
    }

    pub fn act_cochar(&self, v: &LatticeVector) -> LatticeVector {
        debug_assert_eq!(v.tag, LatticeTag::Cochar);
        LatticeVector::cochar(mat_apply(&self.on_cochar, &v.coords))
    }

    pub fn is_identity(&self) -> bool {
        self.length == 0
    }

    /// 1-based word, the exchange format for reports.
    pub fn word_one_based(&self) -> Vec<usize> {
        self.word.iter().map(|i| i + 1).collect()
    }
}

/// Fully enumerated Weyl group with multiplication, inverse, and Bruhat
/// tables. Elements are addressed by canonical index; index 0 is the
/// identity and the last index is w0.
#[derive(Clone, Debug)]
pub struct WeylGroup {
    pub rank: usize,
    pub elements: Vec<WeylElement>,
    simple_idx: Vec<usize>,
    mult_table: Vec<Vec<usize>>,
    inverse_table: Vec<usize>,
    bruhat_table: Vec<Vec<bool>>,
}

impl WeylGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn e(&self) -> usize {
        0
    }

    pub fn w0(&self) -> usize {
        self.elements.len() - 1
    }

    pub fn simple(&self, i: usize) -> usize {
        self.simple_idx[i]
    }

    pub fn elem(&self, idx: usize) -> &WeylElement {
        &self.elements[idx]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult_table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse_table[a]
    }

    pub fn length(&self, a: usize) -> usize {
        self.elements[a].length
    }

    pub fn sign_of(&self, a: usize) -> i64 {
        self.elements[a].sign
    }

    /// Composes a word of simple indices left to right.
    pub fn word_to_index(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &i| self.mul(acc, self.simple(i)))
    }

    pub fn act_char(&self, w: usize, v: &LatticeVector) -> LatticeVector {
        self.elements[w].act_char(v)
    }

    pub fn act_cochar(&self, w: usize, v: &LatticeVector) -> LatticeVector {
        self.elements[w].act_cochar(v)
    }
}

/// Enumerates the Weyl group of `datum` in canonical order: breadth-first
/// by length, parents in canonical order, generators appended in ascending
/// index, first visit wins. This makes each stored word the
/// lexicographically least among the shortest.
pub fn weyl_enumerate(datum: &RootDatum, cap: usize) -> Result<WeylGroup> {
    let n = datum.rank;
    let refl_char: Vec<IntMatrix> = (0..n).map(|i| datum.reflection_char(i)).collect();
    let refl_cochar: Vec<IntMatrix> = (0..n).map(|i| datum.reflection_cochar(i)).collect();

    let mut elements = vec![WeylElement {
        index: 0,
        word: vec![],
        length: 0,
        sign: 1,
        on_char: mat_identity(n),
        on_cochar: mat_identity(n),
    }];
    let mut index_of: HashMap<IntMatrix, usize> = HashMap::new();
    index_of.insert(elements[0].on_char.clone(), 0);

    let mut level_start = 0;
    while level_start < elements.len() {
        let level_end = elements.len();
        for p in level_start..level_end {
            for j in 0..n {
                let m = mat_mul(&elements[p].on_char, &refl_char[j]);
                if index_of.contains_key(&m) {
                    continue;
                }
                if elements.len() >= cap {
                    return Err(Error::Resource(format!(
                        "Weyl group of {} exceeds the cap of {cap} elements",
                        datum.label
                    )));
                }
                let idx = elements.len();
                index_of.insert(m.clone(), idx);
                let mut word = elements[p].word.clone();
                word.push(j);
                let on_cochar = mat_mul(&elements[p].on_cochar, &refl_cochar[j]);
                let length = elements[p].length + 1;
                elements.push(WeylElement {
                    index: idx,
                    word,
                    length,
                    sign: if length % 2 == 0 { 1 } else { -1 },
                    on_char: m,
                    on_cochar,
                });
            }
        }
        level_start = level_end;
    }

    let n_w = elements.len();
    if datum.positive_roots.len() != elements[n_w - 1].length {
        return Err(Error::Config(format!(
            "positive root count {} does not match l(w0) = {}",
            datum.positive_roots.len(),
            elements[n_w - 1].length
        )));
    }

    let mut mult_table = vec![vec![0usize; n_w]; n_w];
    for a in 0..n_w {
        for b in 0..n_w {
            let m = mat_mul(&elements[a].on_char, &elements[b].on_char);
            mult_table[a][b] = *index_of.get(&m).expect("product stays in the group");
        }
    }
    let mut inverse_table = vec![0usize; n_w];
    for a in 0..n_w {
        inverse_table[a] = (0..n_w)
            .find(|&b| mult_table[a][b] == 0)
            .expect("every element has an inverse");
    }
    let simple_idx: Vec<usize> = (0..n)
        .map(|j| {
            let m = &refl_char[j];
            *index_of.get(m).expect("simple reflection enumerated")
        })
        .collect();

    // Subword dynamic program along the canonical word of each v:
    // R_j = R_{j-1} union { u s : u in R_{j-1}, l(u s) > l(u) }.
    let mut bruhat_table = vec![vec![false; n_w]; n_w];
    for v in 0..n_w {
        let mut reach = vec![false; n_w];
        reach[0] = true;
        for &j in &elements[v].word {
            let s = simple_idx[j];
            let mut next = reach.clone();
            for u in 0..n_w {
                if reach[u] {
                    let us = mult_table[u][s];
                    if elements[us].length > elements[u].length {
                        next[us] = true;
                    }
                }
            }
            reach = next;
        }
        for (w, hit) in reach.iter().enumerate() {
            bruhat_table[w][v] = *hit;
        }
    }

    Ok(WeylGroup {
        rank: n,
        elements,
        simple_idx,
        mult_table,
        inverse_table,
        bruhat_table,
    })
}

/// w <= v in Bruhat order (subword property).
pub fn bruhat_leq(group: &WeylGroup, w: usize, v: usize) -> bool {
    group.bruhat_table[w][v]
}

/// Phi(w) = { alpha > 0 : w^{-1}(alpha) < 0 }; its size is l(w).
pub fn inversion_set(datum: &RootDatum, group: &WeylGroup, w: usize) -> Vec<LatticeVector> {
    let winv = group.elem(group.inv(w));
    datum
        .positive_roots
        .iter()
        .filter(|r| winv.act_char(r).is_negative())
        .cloned()
        .collect()
}

/// Coroot-side inversion set: { alpha~ > 0 : w^{-1}(alpha~) < 0 }.
pub fn inversion_coroot_set(
    datum: &RootDatum,
    group: &WeylGroup,
    w: usize,
) -> Vec<LatticeVector> {
    let winv = group.elem(group.inv(w));
    datum
        .positive_coroots
        .iter()
        .filter(|c| winv.act_cochar(c).is_negative())
        .cloned()
        .collect()
}

/// All reduced words of w (0-based indices), built by peeling descents.
pub fn all_reduced_words(group: &WeylGroup, w: usize) -> Vec<Vec<usize>> {
    if w == group.e() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..group.rank {
        let ws = group.mul(w, group.simple(i));
        if group.length(ws) < group.length(w) {
            for mut word in all_reduced_words(group, ws) {
                word.push(i);
                out.push(word);
            }
        }
    }
    out
}

/// The logarithmic degree Theta_w in X* tensor X_*: entry (i,j) is the
/// coefficient of alpha_i tensor alpha_j~. It represents mu -> mu - w(mu)
/// on X* and mu~ -> mu~ - w^{-1}(mu~) on X_*.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct LogDegree {
    pub tensor: IntMatrix,
}

impl LogDegree {
    pub fn zero(rank: usize) -> Self {
        LogDegree { tensor: vec![vec![0; rank]; rank] }
    }

    pub fn add(&self, other: &Self) -> Self {
        let t = self
            .tensor
            .iter()
            .zip(&other.tensor)
            .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a + b).collect())
            .collect();
        LogDegree { tensor: t }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let t = self
            .tensor
            .iter()
            .zip(&other.tensor)
            .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect())
            .collect();
        LogDegree { tensor: t }
    }

    /// Applies the tensor to mu in X* by pairing the X_* leg:
    /// sum_ij t[i][j] <mu, alpha_j~> alpha_i.
    pub fn apply_to_char(&self, datum: &RootDatum, mu: &LatticeVector) -> LatticeVector {
        let n = datum.rank;
        let mut out = vec![0i64; n];
        for i in 0..n {
            for j in 0..n {
                if self.tensor[i][j] == 0 {
                    continue;
                }
                let pair: i64 = (0..n).map(|a| datum.cartan[j][a] * mu.coords[a]).sum();
                out[i] += self.tensor[i][j] * pair;
            }
        }
        LatticeVector::char(out)
    }

    /// Applies the tensor to mu~ in X_* by pairing the X* leg:
    /// sum_ij t[i][j] <alpha_i, mu~> alpha_j~.
    pub fn apply_to_cochar(&self, datum: &RootDatum, mu_vee: &LatticeVector) -> LatticeVector {
        let n = datum.rank;
        let mut out = vec![0i64; n];
        for i in 0..n {
            let pair: i64 = (0..n)
                .map(|b| datum.cartan[b][i] * mu_vee.coords[b])
                .sum();
            if pair == 0 {
                continue;
            }
            for j in 0..n {
                out[j] += self.tensor[i][j] * pair;
            }
        }
        LatticeVector::cochar(out)
    }

    /// u acting on the X* leg: tensor -> A_u * tensor.
    pub fn act_char_side(&self, u: &WeylElement) -> Self {
        LogDegree { tensor: mat_mul(&u.on_char, &self.tensor) }
    }

    /// u acting on the X_* leg: tensor -> tensor * (A~_u)^T.
    pub fn act_cochar_side(&self, u: &WeylElement) -> Self {
        LogDegree { tensor: mat_mul(&self.tensor, &mat_transpose(&u.on_cochar)) }
    }
}

/// Theta_w computed from the canonical word of w as
/// sum_j mu_j tensor alpha_{i_j}~ with mu_j = s_{i_1}...s_{i_{j-1}}(alpha_{i_j}).
/// The result is word-independent.
pub fn log_degree(datum: &RootDatum, w: &WeylElement) -> LogDegree {
    log_degree_of_word(datum, &w.word)
}

pub fn log_degree_of_word(datum: &RootDatum, word: &[usize]) -> LogDegree {
    let n = datum.rank;
    let mut t = vec![vec![0i64; n]; n];
    let mut prefix = mat_identity(n);
    for &i in word {
        for a in 0..n {
            t[a][i] += prefix[a][i];
        }
        prefix = mat_mul(&prefix, &datum.reflection_char(i));
    }
    LogDegree { tensor: t }
}
