//! The elliptic twisted group algebra and its two standard modules.
//!
//! Elements are kept in one of two delta-normal forms:
//!   DynLeft:  sum over (v, w) of  d^dyn_v . a . d_w   (operator families
//!             acting on the spectral module are naturally written here),
//!   DynRight: sum over (w, v) of  d_w . a . d^dyn_v   (dynamical families).
//! Pushing a coefficient through d_w applies the spectral twist ^w, and
//! through d^dyn_v the dynamical twist ^{v^d}; the two deltas commute.
//! All products below are obtained from exactly these moves.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::coefficients::{
    make_g, make_h, weyl_twist_dynamical, weyl_twist_spectral, Coefficient, EvalCache,
};
use crate::error::{Error, Result};
use crate::root_system::{weyl_enumerate, RootDatum, WeylGroup};

/// Which side the dynamical delta sits on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NormalForm {
    /// Terms d^dyn_v a d_w, keyed (v, w).
    DynLeft,
    /// Terms d_w a d^dyn_v, keyed (w, v).
    DynRight,
}

/// Shared immutable context: root datum, enumerated Weyl group, and the
/// canonical invertible monomials bfg (spectral) and bfh (dynamical).
pub struct Setting {
    pub datum: RootDatum,
    pub group: WeylGroup,
    pub g_fun: Coefficient,
    pub h_fun: Coefficient,
}

impl Setting {
    pub fn new(datum: RootDatum, weyl_cap: usize) -> Result<Self> {
        let group = weyl_enumerate(&datum, weyl_cap)?;
        let g_fun = make_g(&datum);
        let h_fun = make_h(&datum);
        Ok(Setting { datum, group, g_fun, h_fun })
    }

    pub fn rank(&self) -> usize {
        self.datum.rank
    }

    fn twist_spec(&self, w: usize, a: &Coefficient) -> Coefficient {
        weyl_twist_spectral(self.group.elem(w), a)
    }

    fn twist_dyn(&self, v: usize, a: &Coefficient) -> Coefficient {
        weyl_twist_dynamical(self.group.elem(v), a)
    }

    /// (^{w} bfg)^{-1} as a coefficient; bfg is a unit monomial, so this
    /// is exact.
    fn g_twist_inverse(&self, w: usize) -> Coefficient {
        let twisted = self.twist_spec(w, &self.g_fun);
        let m = twisted.single_monomial().expect("bfg is one monomial");
        Coefficient::from_monomial(m.inverse().expect("bfg is a unit"))
    }

    fn h_twist_inverse(&self, v: usize) -> Coefficient {
        let twisted = self.twist_dyn(v, &self.h_fun);
        let m = twisted.single_monomial().expect("bfh is one monomial");
        Coefficient::from_monomial(m.inverse().expect("bfh is a unit"))
    }
}

/// Element of the twisted algebra in a fixed normal form. Keys are the
/// (left delta, right delta) Weyl indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TwistedElement {
    pub form: NormalForm,
    pub terms: BTreeMap<(usize, usize), Coefficient>,
}

impl TwistedElement {
    pub fn zero(form: NormalForm) -> Self {
        TwistedElement { form, terms: BTreeMap::new() }
    }

    pub fn identity(form: NormalForm) -> Self {
        TwistedElement::from_term(form, 0, 0, Coefficient::one())
    }

    pub fn from_term(form: NormalForm, left: usize, right: usize, coeff: Coefficient) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((left, right), coeff);
        }
        TwistedElement { form, terms }
    }

    pub fn coeff(&self, left: usize, right: usize) -> Coefficient {
        self.terms
            .get(&(left, right))
            .cloned()
            .unwrap_or_else(Coefficient::zero)
    }

    fn insert_add(&mut self, key: (usize, usize), coeff: Coefficient) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Coefficient::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.form != other.form {
            return Err(Error::Shape("cannot add mixed normal forms".into()));
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert_add(*k, c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        TwistedElement {
            form: self.form,
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
        }
    }

    /// Coefficient-wise functor application (Gamma substitutions, scalar
    /// sign flips); delta degrees are untouched.
    pub fn map_coefficients<F>(&self, f: F) -> Self
    where
        F: Fn(&Coefficient) -> Coefficient,
    {
        let mut out = TwistedElement::zero(self.form);
        for (k, c) in &self.terms {
            out.insert_add(*k, f(c));
        }
        out
    }

    /// Rewrites into the other normal form by pushing the coefficient
    /// through both deltas.
    pub fn convert_to(&self, setting: &Setting, form: NormalForm) -> Self {
        if self.form == form {
            return self.clone();
        }
        let group = &setting.group;
        let mut out = TwistedElement::zero(form);
        match self.form {
            // d^dyn_v p d_w = d_w (^{v^d} ^{w^{-1}} p) d^dyn_v
            NormalForm::DynLeft => {
                for (&(v, w), p) in &self.terms {
                    let c = setting.twist_dyn(v, &setting.twist_spec(group.inv(w), p));
                    out.insert_add((w, v), c);
                }
            }
            // d_w a d^dyn_v = d^dyn_v (^{w} ^{(v^{-1})^d} a) d_w
            NormalForm::DynRight => {
                for (&(w, v), a) in &self.terms {
                    let c = setting.twist_spec(w, &setting.twist_dyn(group.inv(v), a));
                    out.insert_add((v, w), c);
                }
            }
        }
        out
    }

    /// Numeric snapshot of all term coefficients at one point.
    pub fn eval_terms(
        &self,
        cache: &mut EvalCache,
    ) -> Result<BTreeMap<(usize, usize), Complex64>> {
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            out.insert(*k, c.eval_cached(cache)?);
        }
        Ok(out)
    }
}

/// Twisted product in a common normal form:
///   DynLeft : (d^dyn_{v1} p d_{w1})(d^dyn_{v2} q d_{w2})
///             = d^dyn_{v1v2} (^{(v2^{-1})^d} p)(^{w1} q) d_{w1w2},
///   DynRight: (d_{w1} p d^dyn_{v1})(d_{w2} q d^dyn_{v2})
///             = d_{w1w2} (^{w2^{-1}} p)(^{v1^d} q) d^dyn_{v1v2}.
pub fn twisted_multiply(
    setting: &Setting,
    a: &TwistedElement,
    b: &TwistedElement,
) -> Result<TwistedElement> {
    if a.form != b.form {
        return Err(Error::Shape(
            "cannot multiply elements in different normal forms".into(),
        ));
    }
    let group = &setting.group;
    let mut out = TwistedElement::zero(a.form);
    for (&(l1, r1), p) in &a.terms {
        for (&(l2, r2), q) in &b.terms {
            let key = (group.mul(l1, l2), group.mul(r1, r2));
            let coeff = match a.form {
                NormalForm::DynLeft => {
                    let (v2, w1) = (l2, r1);
                    setting
                        .twist_dyn(group.inv(v2), p)
                        .mul(&setting.twist_spec(w1, q))
                }
                NormalForm::DynRight => {
                    let (w2, v1) = (l2, r1);
                    setting
                        .twist_spec(group.inv(w2), p)
                        .mul(&setting.twist_dyn(v1, q))
                }
            };
            out.insert_add(key, coeff);
        }
    }
    Ok(out)
}

/// Left-to-right product of several factors.
pub fn twisted_product(setting: &Setting, factors: &[TwistedElement]) -> Result<TwistedElement> {
    let form = factors.first().map(|f| f.form).unwrap_or(NormalForm::DynLeft);
    let mut acc = TwistedElement::identity(form);
    for f in factors {
        acc = twisted_multiply(setting, &acc, f)?;
    }
    Ok(acc)
}

/// Anti-involution iota_lambda: on d_w a d^dyn_v it gives
/// d^dyn_{v^{-1}} (a bfg / ^{w^{-1}} bfg) d_{w^{-1}}. Input in either
/// form; output in DynLeft.
pub fn iota_lambda(setting: &Setting, a: &TwistedElement) -> TwistedElement {
    let right = a.convert_to(setting, NormalForm::DynRight);
    let group = &setting.group;
    let mut out = TwistedElement::zero(NormalForm::DynLeft);
    for (&(w, v), c) in &right.terms {
        let winv = group.inv(w);
        let factor = setting.g_fun.mul(&setting.g_twist_inverse(winv));
        out.insert_add((group.inv(v), winv), c.mul(&factor));
    }
    out
}

/// Anti-involution iota_z: factor bfh / ^{v^d} bfh instead.
pub fn iota_z(setting: &Setting, a: &TwistedElement) -> TwistedElement {
    let right = a.convert_to(setting, NormalForm::DynRight);
    let group = &setting.group;
    let mut out = TwistedElement::zero(NormalForm::DynLeft);
    for (&(w, v), c) in &right.terms {
        let factor = setting.h_fun.mul(&setting.h_twist_inverse(v));
        out.insert_add((group.inv(v), group.inv(w)), c.mul(&factor));
    }
    out
}

/// Which module a section lives in.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModuleKind {
    /// Spectral module with basis markers f_x.
    Spectral,
    /// Dynamical module with basis markers f^d_y.
    Dynamical,
}

/// Finitely supported sum of coefficient multiples of basis markers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleElement {
    pub kind: ModuleKind,
    pub entries: BTreeMap<usize, Coefficient>,
}

impl ModuleElement {
    pub fn zero(kind: ModuleKind) -> Self {
        ModuleElement { kind, entries: BTreeMap::new() }
    }

    pub fn basis(kind: ModuleKind, x: usize) -> Self {
        ModuleElement::term(kind, x, Coefficient::one())
    }

    pub fn term(kind: ModuleKind, x: usize, coeff: Coefficient) -> Self {
        let mut entries = BTreeMap::new();
        if !coeff.is_zero() {
            entries.insert(x, coeff);
        }
        ModuleElement { kind, entries }
    }

    pub fn coeff(&self, x: usize) -> Coefficient {
        self.entries.get(&x).cloned().unwrap_or_else(Coefficient::zero)
    }

    fn insert_add(&mut self, x: usize, coeff: Coefficient) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.entries.entry(x).or_insert_with(Coefficient::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.entries.remove(&x);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.kind != other.kind {
            return Err(Error::Shape("cannot add sections of different modules".into()));
        }
        let mut out = self.clone();
        for (x, c) in &other.entries {
            out.insert_add(*x, c.clone());
        }
        Ok(out)
    }

    pub fn mul_coefficient(&self, c: &Coefficient) -> Self {
        let mut out = ModuleElement::zero(self.kind);
        for (x, a) in &self.entries {
            out.insert_add(*x, a.mul(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        ModuleElement {
            kind: self.kind,
            entries: self.entries.iter().map(|(x, c)| (*x, c.neg())).collect(),
        }
    }

    pub fn eval_entries(&self, cache: &mut EvalCache) -> Result<BTreeMap<usize, Complex64>> {
        let mut out = BTreeMap::new();
        for (x, c) in &self.entries {
            out.insert(*x, c.eval_cached(cache)?);
        }
        Ok(out)
    }
}

/// Spectral action: (d^dyn_v b d_w) . (a f_x) = (^{v^d (wx)^{-1}} b)(^{v^d} a) f_{wx}.
/// The operator must be in DynLeft form (the formula is stated there).
pub fn act_spectral(
    setting: &Setting,
    a: &TwistedElement,
    m: &ModuleElement,
) -> Result<ModuleElement> {
    if a.form != NormalForm::DynLeft {
        return Err(Error::Shape(
            "spectral action requires the DynLeft normal form; convert first".into(),
        ));
    }
    if m.kind != ModuleKind::Spectral {
        return Err(Error::Shape("spectral action requires a spectral section".into()));
    }
    let group = &setting.group;
    let mut out = ModuleElement::zero(ModuleKind::Spectral);
    for (&(v, w), b) in &a.terms {
        for (&x, c) in &m.entries {
            let wx = group.mul(w, x);
            let coeff = setting
                .twist_dyn(v, &setting.twist_spec(group.inv(wx), b))
                .mul(&setting.twist_dyn(v, c));
            out.insert_add(wx, coeff);
        }
    }
    Ok(out)
}

/// Dynamical action: (d^dyn_v b d_w) .d (a f^d_y) = (^{(y^{-1})^d} b)(^w a) f^d_{vy}.
pub fn act_dynamical(
    setting: &Setting,
    a: &TwistedElement,
    m: &ModuleElement,
) -> Result<ModuleElement> {
    if a.form != NormalForm::DynLeft {
        return Err(Error::Shape(
            "dynamical action requires the DynLeft normal form; convert first".into(),
        ));
    }
    if m.kind != ModuleKind::Dynamical {
        return Err(Error::Shape("dynamical action requires a dynamical section".into()));
    }
    let group = &setting.group;
    let mut out = ModuleElement::zero(ModuleKind::Dynamical);
    for (&(v, w), b) in &a.terms {
        for (&y, c) in &m.entries {
            let vy = group.mul(v, y);
            let coeff = setting
                .twist_dyn(group.inv(y), b)
                .mul(&setting.twist_spec(w, c));
            out.insert_add(vy, coeff);
        }
    }
    Ok(out)
}

fn require_kinds(m1: &ModuleElement, m2: &ModuleElement, kind: ModuleKind) -> Result<()> {
    if m1.kind != kind || m2.kind != kind {
        return Err(Error::Shape("pairing applied to sections of the wrong module".into()));
    }
    Ok(())
}

/// <a f_{x}, b f_{x}>_lambda = a b / ^{x^{-1}} bfg, summed over common support.
pub fn pairing_lambda(
    setting: &Setting,
    m1: &ModuleElement,
    m2: &ModuleElement,
) -> Result<Coefficient> {
    require_kinds(m1, m2, ModuleKind::Spectral)?;
    let group = &setting.group;
    let mut acc = Coefficient::zero();
    for (&x, a) in &m1.entries {
        if let Some(b) = m2.entries.get(&x) {
            acc = acc.add(&a.mul(b).mul(&setting.g_twist_inverse(group.inv(x))));
        }
    }
    Ok(acc)
}

/// <a f^d, b f^d>^d_lambda = a b / bfg.
pub fn pairing_lambda_dyn(
    setting: &Setting,
    m1: &ModuleElement,
    m2: &ModuleElement,
) -> Result<Coefficient> {
    require_kinds(m1, m2, ModuleKind::Dynamical)?;
    let g_inv = setting.g_twist_inverse(setting.group.e());
    let mut acc = Coefficient::zero();
    for (&y, a) in &m1.entries {
        if let Some(b) = m2.entries.get(&y) {
            acc = acc.add(&a.mul(b).mul(&g_inv));
        }
    }
    Ok(acc)
}

/// <a f, b f>_z = a b bfh.
pub fn pairing_z(
    setting: &Setting,
    m1: &ModuleElement,
    m2: &ModuleElement,
) -> Result<Coefficient> {
    require_kinds(m1, m2, ModuleKind::Spectral)?;
    let mut acc = Coefficient::zero();
    for (&x, a) in &m1.entries {
        if let Some(b) = m2.entries.get(&x) {
            acc = acc.add(&a.mul(b).mul(&setting.h_fun));
        }
    }
    Ok(acc)
}

/// <a f^d_y, b f^d_y>^d_z = a b ^{(y^{-1})^d} bfh.
pub fn pairing_z_dyn(
    setting: &Setting,
    m1: &ModuleElement,
    m2: &ModuleElement,
) -> Result<Coefficient> {
    require_kinds(m1, m2, ModuleKind::Dynamical)?;
    let group = &setting.group;
    let mut acc = Coefficient::zero();
    for (&y, a) in &m1.entries {
        if let Some(b) = m2.entries.get(&y) {
            let factor = setting.twist_dyn(group.inv(y), &setting.h_fun);
            acc = acc.add(&a.mul(b).mul(&factor));
        }
    }
    Ok(acc)
}
