//! Elliptic classes, their opposite and dual companions, and the
//! transition maps between the two period lattices.
//!
//! For an operator family T^♯ the class of a Weyl element v is the module
//! section obtained by acting on a seeded basis element,
//!
//!   E_v  = T_{v^{-1}}      . (seed)  f_e,
//!   Ell_v = T_{v^{-1} w0}  . (seed') f_{w0},
//!
//! where the seeds depend only on the sign pattern of the family:
//!
//!   family        seed at f_e      opposite seed at f_{w0}
//!   (z, l)        c                ^{w0 d}h ^{w0 d}c / g
//!   (z, l, d)     c                ^{w0}c g / ^{w0 d}h
//!   (z, -l)       g / c            h / ^{w0 d}c
//!   (z, -l, d)    g / c            g ^{w0}g / (h ^{w0}c)
//!   (-z, l)       1 / (h c)        1 / (^{w0}g ^{w0 d}c)
//!   (-z, l, d)    1 / (h c)        ^{w0}g / (h ^{w0 d}h ^{w0}c)
//!
//! Here c is a fixed invertible reference section (`SectionChoice`), g and
//! h are the positive-coroot and positive-root theta products carried by
//! the `Setting`, `^w` is the character-side twist and `^{w d}` the
//! cocharacter-side twist. No classes are attached to the (-z, -l)
//! families. The opposite seeds are calibrated so that E and Ell pair to
//! the Kronecker delta under the module pairings without any residual
//! normalization factor, and so that Ell_u coincides with the dual class
//!
//!   (T_u)^* = sum_{x >= u} b_{x,u} (factor) f_{x^{-1}}
//!
//! built from the inverse b of the coefficient matrix a.
//!
//! Summing a family over all v yields a transition map between the
//! spectral and dynamical modules, acting on coefficient vectors by
//! out_v = sum_w a_{v,w} m_{w^{-1}} (times the sign eps_v for the
//! mixed-sign families); the spectral and dynamical maps of matching
//! signs are mutually inverse. Restriction coefficients expand E_v over
//! the basis f_{w^{-1}}; scaling the dynamical table by theta-weight rows
//! and columns turns it into the w0-shifted spectral table, which is the
//! mirror-symmetry statement verified by `mirror_restriction_check`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::check::{CheckReport, ResidualAccumulator};
use crate::coefficients::{
    weyl_twist_dynamical, weyl_twist_spectral, Coefficient, EvalCache, EvaluationPoint,
    ThetaMonomial,
};
use crate::dl_operators::{
    a_matrix, b_matrix_numeric, dl_operator, eval_a_matrix, with_sample_points, OperatorVariant,
};
use crate::error::{Error, Result};
use crate::root_system::bruhat_leq;
use crate::theta::ThetaContext;
use crate::twisted_algebra::{
    act_dynamical, act_spectral, pairing_lambda, pairing_lambda_dyn, pairing_z, pairing_z_dyn,
    ModuleElement, ModuleKind, NormalForm, Setting,
};

/// The fixed invertible reference section c entering every seed. The
/// default is the constant 1; any single theta monomial with unit scalar
/// is accepted. All duality statements cancel c, so results of the checks
/// do not depend on the choice.
#[derive(Clone, Debug)]
pub struct SectionChoice {
    pub c_fun: Coefficient,
}

impl SectionChoice {
    pub fn unit() -> Self {
        SectionChoice { c_fun: Coefficient::one() }
    }

    /// Accepts a single invertible theta monomial.
    pub fn new(c_fun: Coefficient) -> Result<Self> {
        c_fun.single_monomial()?.inverse()?;
        Ok(SectionChoice { c_fun })
    }

    pub fn inverse(&self) -> Result<Coefficient> {
        inverse_of(&self.c_fun)
    }

    /// Random nonvanishing monomial: a ratio of two thetas with distinct
    /// nonzero hbar multiples, so neither argument degenerates identically.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Self {
        let coords = |r: &mut R| -> (Vec<i64>, Vec<i64>) {
            let ch = (0..rank).map(|_| r.gen_range(-1i64..=1)).collect();
            let co = (0..rank).map(|_| r.gen_range(-1i64..=1)).collect();
            (ch, co)
        };
        let (ch1, co1) = coords(rng);
        let (ch2, co2) = coords(rng);
        let m = ThetaMonomial::atom(1, ch1, co1, 1).mul(&ThetaMonomial::atom(2, ch2, co2, -1));
        SectionChoice { c_fun: Coefficient::from_monomial(m) }
    }
}

fn inverse_of(a: &Coefficient) -> Result<Coefficient> {
    Ok(Coefficient::from_monomial(a.single_monomial()?.inverse()?))
}

fn spec_twist(setting: &Setting, w: usize, a: &Coefficient) -> Coefficient {
    weyl_twist_spectral(setting.group.elem(w), a)
}

fn dyn_twist(setting: &Setting, v: usize, a: &Coefficient) -> Coefficient {
    weyl_twist_dynamical(setting.group.elem(v), a)
}

fn class_kind(variant: OperatorVariant) -> ModuleKind {
    if variant.dynamical {
        ModuleKind::Dynamical
    } else {
        ModuleKind::Spectral
    }
}

fn ensure_class_variant(variant: OperatorVariant) -> Result<()> {
    if variant.z_sign < 0 && variant.lambda_sign < 0 {
        return Err(Error::Input(format!(
            "no classes are attached to the {} family",
            variant.token()
        )));
    }
    Ok(())
}

/// Seed placed at f_e before acting with T_{v^{-1}}.
fn seed_class(setting: &Setting, variant: OperatorVariant, c: &SectionChoice) -> Result<Coefficient> {
    ensure_class_variant(variant)?;
    Ok(match (variant.z_sign > 0, variant.lambda_sign > 0) {
        (true, true) => c.c_fun.clone(),
        (true, false) => setting.g_fun.mul(&c.inverse()?),
        (false, true) => inverse_of(&setting.h_fun)?.mul(&c.inverse()?),
        (false, false) => unreachable!(),
    })
}

/// Seed placed at f_{w0} before acting with T_{v^{-1} w0}.
fn seed_opposite(
    setting: &Setting,
    variant: OperatorVariant,
    c: &SectionChoice,
) -> Result<Coefficient> {
    ensure_class_variant(variant)?;
    let w0 = setting.group.w0();
    let g = &setting.g_fun;
    let h = &setting.h_fun;
    let g_inv = inverse_of(g)?;
    let h_inv = inverse_of(h)?;
    let c_fun = &c.c_fun;
    let c_inv = c.inverse()?;
    Ok(match (variant.z_sign > 0, variant.lambda_sign > 0, variant.dynamical) {
        (true, true, false) => dyn_twist(setting, w0, h)
            .mul(&dyn_twist(setting, w0, c_fun))
            .mul(&g_inv),
        (true, true, true) => spec_twist(setting, w0, c_fun)
            .mul(g)
            .mul(&dyn_twist(setting, w0, &h_inv)),
        (true, false, false) => h.mul(&dyn_twist(setting, w0, &c_inv)),
        (true, false, true) => g
            .mul(&spec_twist(setting, w0, g))
            .mul(&h_inv)
            .mul(&spec_twist(setting, w0, &c_inv)),
        (false, true, false) => {
            spec_twist(setting, w0, &g_inv).mul(&dyn_twist(setting, w0, &c_inv))
        }
        (false, true, true) => spec_twist(setting, w0, g)
            .mul(&h_inv)
            .mul(&dyn_twist(setting, w0, &h_inv))
            .mul(&spec_twist(setting, w0, &c_inv)),
        (false, false, _) => unreachable!(),
    })
}

/// E_v = T_{v^{-1}} . (seed) f_e, supported on {w : w <= v^{-1}}. The
/// coefficient of f_{w^{-1}} is the restriction coefficient of (v, w).
pub fn elliptic_class(
    setting: &Setting,
    variant: OperatorVariant,
    v: usize,
    c: &SectionChoice,
) -> Result<ModuleElement> {
    let seed = seed_class(setting, variant, c)?;
    let group = &setting.group;
    let op = dl_operator(setting, variant, group.inv(v))?.convert_to(setting, NormalForm::DynLeft);
    let start = ModuleElement::term(class_kind(variant), group.e(), seed);
    if variant.dynamical {
        act_dynamical(setting, &op, &start)
    } else {
        act_spectral(setting, &op, &start)
    }
}

/// Ell_v = T_{v^{-1} w0} . (seed') f_{w0}, supported on {x : x >= v^{-1}}.
pub fn opposite_class(
    setting: &Setting,
    variant: OperatorVariant,
    v: usize,
    c: &SectionChoice,
) -> Result<ModuleElement> {
    let seed = seed_opposite(setting, variant, c)?;
    let group = &setting.group;
    let idx = group.mul(group.inv(v), group.w0());
    let op = dl_operator(setting, variant, idx)?.convert_to(setting, NormalForm::DynLeft);
    let start = ModuleElement::term(class_kind(variant), group.w0(), seed);
    if variant.dynamical {
        act_dynamical(setting, &op, &start)
    } else {
        act_spectral(setting, &op, &start)
    }
}

/// Coefficient of f_{w^{-1}} in E_v, in closed form: the opposite-lambda
/// coefficient a_{v,w} dressed by a ratio of g-twists and a twist of c.
/// Defined for the two plain-sign families.
pub fn restriction_coefficient(
    setting: &Setting,
    variant: OperatorVariant,
    v: usize,
    w: usize,
    c: &SectionChoice,
) -> Result<Coefficient> {
    if variant.z_sign != 1 || variant.lambda_sign != 1 {
        return Err(Error::Input(format!(
            "restriction coefficients are defined for the plain-sign families, not {}",
            variant.token()
        )));
    }
    let group = &setting.group;
    let aux = OperatorVariant { z_sign: 1, lambda_sign: -1, dynamical: variant.dynamical };
    let a_vw = dl_operator(setting, aux, v)?.coeff(v, w);
    let g = &setting.g_fun;
    Ok(if variant.dynamical {
        let vi = group.inv(v);
        g.mul(&spec_twist(setting, vi, &inverse_of(g)?))
            .mul(&a_vw)
            .mul(&spec_twist(setting, vi, &c.c_fun))
    } else {
        spec_twist(setting, w, g)
            .mul(&inverse_of(g)?)
            .mul(&a_vw)
            .mul(&dyn_twist(setting, group.inv(v), &c.c_fun))
    })
}

/// Module section evaluated at one point: complex coefficients per basis
/// marker. Numeric twin of `ModuleElement` for b-matrix based classes and
/// the transition maps.
#[derive(Clone, Debug)]
pub struct NumericSection {
    pub kind: ModuleKind,
    pub entries: BTreeMap<usize, Complex64>,
}

pub fn eval_section(m: &ModuleElement, cache: &mut EvalCache) -> Result<NumericSection> {
    Ok(NumericSection { kind: m.kind, entries: m.eval_entries(cache)? })
}

/// Worst scaled residual between two numeric sections over the union of
/// their supports.
pub fn section_residual(a: &NumericSection, b: &NumericSection) -> Result<f64> {
    if a.kind != b.kind {
        return Err(Error::Shape("cannot compare sections of different modules".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut keys: Vec<usize> = a.entries.keys().chain(b.entries.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut acc = ResidualAccumulator::new();
    for k in keys {
        acc.observe(
            *a.entries.get(&k).unwrap_or(&zero),
            *b.entries.get(&k).unwrap_or(&zero),
        );
    }
    Ok(acc.residual())
}

/// Prefactor of f in the dual class (T_u)^*; also the image coefficient of
/// Ell_u under the assembled transition map.
fn dual_factor(
    setting: &Setting,
    variant: OperatorVariant,
    u: usize,
    c: &SectionChoice,
) -> Result<Coefficient> {
    ensure_class_variant(variant)?;
    let group = &setting.group;
    let ui = group.inv(u);
    let g = &setting.g_fun;
    let h_inv = inverse_of(&setting.h_fun)?;
    let c_fun = &c.c_fun;
    let c_inv = c.inverse()?;
    Ok(match (variant.z_sign > 0, variant.lambda_sign > 0, variant.dynamical) {
        (true, true, false) => dyn_twist(setting, ui, c_fun),
        (true, true, true) => spec_twist(setting, ui, c_fun),
        (true, false, false) => g.mul(&dyn_twist(setting, ui, &c_inv)),
        (true, false, true) => {
            spec_twist(setting, ui, g).mul(&spec_twist(setting, ui, &c_inv))
        }
        (false, true, false) => {
            dyn_twist(setting, ui, &h_inv).mul(&dyn_twist(setting, ui, &c_inv))
        }
        (false, true, true) => h_inv.mul(&spec_twist(setting, ui, &c_inv)),
        (false, false, _) => unreachable!(),
    })
}

/// (T_u)^* = sum_{x >= u} b_{x,u} (factor) f_{x^{-1}} at one point, using
/// the numeric inverse b of the coefficient matrix. Matches the opposite
/// class of u for every family that carries classes.
pub fn dual_basis_class(
    setting: &Setting,
    variant: OperatorVariant,
    u: usize,
    c: &SectionChoice,
    point: &EvaluationPoint,
    ctx: &ThetaContext,
) -> Result<NumericSection> {
    let factor = dual_factor(setting, variant, u, c)?;
    let group = &setting.group;
    let b = b_matrix_numeric(&a_matrix(setting, variant)?, point, ctx)?;
    let mut cache = EvalCache::new(ctx, point);
    let fval = factor.eval_cached(&mut cache)?;
    let mut entries = BTreeMap::new();
    for x in 0..group.order() {
        // b is supported on x >= u exactly; skipping the complement drops
        // only numerically-zero entries.
        if !bruhat_leq(group, u, x) {
            continue;
        }
        entries.insert(group.inv(x), b[x][u] * fval);
    }
    Ok(NumericSection { kind: class_kind(variant), entries })
}

/// Applies the assembled transition map to a numeric section:
/// out_v = sum_w a_{v,w} m_{w^{-1}}, times eps_v for the mixed-sign
/// families, flipping the module kind. The spectral and dynamical maps of
/// equal signs compose to the identity.
pub fn t_map_apply(
    setting: &Setting,
    variant: OperatorVariant,
    m: &NumericSection,
    cache: &mut EvalCache,
) -> Result<NumericSection> {
    if variant.z_sign < 0 && variant.lambda_sign < 0 {
        return Err(Error::Input(format!(
            "no transition map is attached to the {} family",
            variant.token()
        )));
    }
    if m.kind != class_kind(variant) {
        return Err(Error::Shape(
            "transition map applied to a section of the wrong module".into(),
        ));
    }
    let group = &setting.group;
    let av = eval_a_matrix(&a_matrix(setting, variant)?, cache)?;
    let signed = variant.z_sign < 0 || variant.lambda_sign < 0;
    let zero = Complex64::new(0.0, 0.0);
    let mut entries = BTreeMap::new();
    for v in 0..group.order() {
        let mut s = zero;
        for (w, aval) in av[v].iter().enumerate() {
            if let Some(mv) = m.entries.get(&group.inv(w)) {
                s += aval * mv;
            }
        }
        if signed {
            s *= group.sign_of(v) as f64;
        }
        if s != zero {
            entries.insert(v, s);
        }
    }
    let kind = match m.kind {
        ModuleKind::Spectral => ModuleKind::Dynamical,
        ModuleKind::Dynamical => ModuleKind::Spectral,
    };
    Ok(NumericSection { kind, entries })
}

type PairingFn = fn(&Setting, &ModuleElement, &ModuleElement) -> Result<Coefficient>;

fn delta_table_residual(
    tables: &[(String, Vec<(usize, usize, Coefficient)>)],
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut (impl Rng + ?Sized),
    hbar: Option<Complex64>,
    n_points: usize,
) -> Result<Vec<f64>> {
    let mut worst = vec![0.0f64; tables.len()];
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        let mut point_worst = vec![0.0f64; tables.len()];
        for (i, (_, table)) in tables.iter().enumerate() {
            for (v, u, p) in table {
                let val = p.eval_cached(cache)?;
                let target = Complex64::new(if v == u { 1.0 } else { 0.0 }, 0.0);
                let mut acc = ResidualAccumulator::new();
                acc.observe(val, target);
                point_worst[i] = point_worst[i].max(acc.residual());
            }
        }
        // Commit only after the whole point evaluated cleanly.
        for (w, pw) in worst.iter_mut().zip(&point_worst) {
            *w = w.max(*pw);
        }
        Ok(())
    })?;
    Ok(worst)
}

fn pairing_table(
    setting: &Setting,
    e_list: &[ModuleElement],
    l_list: &[ModuleElement],
    pairing: PairingFn,
) -> Result<Vec<(usize, usize, Coefficient)>> {
    let n = setting.group.order();
    let mut out = Vec::with_capacity(n * n);
    for v in 0..n {
        for u in 0..n {
            out.push((v, u, pairing(setting, &e_list[v], &l_list[u])?));
        }
    }
    Ok(out)
}

/// The two headline dualities: spectral classes against opposite classes
/// of the opposite lambda-sign under the lambda pairing, and dynamical
/// classes against opposite classes of the opposite z-sign under the dual
/// z pairing. Every (v, u) pair must evaluate to the Kronecker delta.
pub fn poincare_duality_check<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
    c: &SectionChoice,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("poincare duality");
    let n = setting.group.order();
    let build_e = |var: OperatorVariant| -> Result<Vec<ModuleElement>> {
        (0..n).map(|v| elliptic_class(setting, var, v, c)).collect()
    };
    let build_l = |var: OperatorVariant| -> Result<Vec<ModuleElement>> {
        (0..n).map(|u| opposite_class(setting, var, u, c)).collect()
    };
    let e_spec = build_e(OperatorVariant { z_sign: 1, lambda_sign: 1, dynamical: false })?;
    let l_spec = build_l(OperatorVariant { z_sign: 1, lambda_sign: -1, dynamical: false })?;
    let e_dyn = build_e(OperatorVariant { z_sign: 1, lambda_sign: 1, dynamical: true })?;
    let l_dyn = build_l(OperatorVariant { z_sign: -1, lambda_sign: 1, dynamical: true })?;
    let tables = vec![
        (
            "E[z+l+] vs Ell[z+l-] under the lambda pairing".to_string(),
            pairing_table(setting, &e_spec, &l_spec, pairing_lambda)?,
        ),
        (
            "E[z+l+d] vs Ell[z-l+d] under the dual z pairing".to_string(),
            pairing_table(setting, &e_dyn, &l_dyn, pairing_z_dyn)?,
        ),
    ];
    let worst = delta_table_residual(&tables, setting, ctx, rng, hbar, n_points)?;
    for ((label, _), w) in tables.iter().zip(worst) {
        report.push_residual(label.clone(), w, tol);
    }
    Ok(report)
}

/// Full duality table: all eight E/Ell pairings across the four module
/// pairings (two per pairing, one for each side carrying an E class).
pub fn prism_duality_check<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
    c: &SectionChoice,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("duality table");
    let n = setting.group.order();
    let var = |z: i8, l: i8, d: bool| OperatorVariant { z_sign: z, lambda_sign: l, dynamical: d };
    let cases: [(OperatorVariant, OperatorVariant, PairingFn, &str); 8] = [
        (var(1, 1, false), var(1, -1, false), pairing_lambda, "lambda"),
        (var(1, -1, false), var(1, 1, false), pairing_lambda, "lambda"),
        (var(1, 1, false), var(-1, 1, false), pairing_z, "z"),
        (var(-1, 1, false), var(1, 1, false), pairing_z, "z"),
        (var(1, 1, true), var(1, -1, true), pairing_lambda_dyn, "dual lambda"),
        (var(1, -1, true), var(1, 1, true), pairing_lambda_dyn, "dual lambda"),
        (var(1, 1, true), var(-1, 1, true), pairing_z_dyn, "dual z"),
        (var(-1, 1, true), var(1, 1, true), pairing_z_dyn, "dual z"),
    ];
    let mut tables = Vec::with_capacity(cases.len());
    for (ev, lv, pairing, pname) in &cases {
        let e_list: Vec<ModuleElement> =
            (0..n).map(|v| elliptic_class(setting, *ev, v, c)).collect::<Result<_>>()?;
        let l_list: Vec<ModuleElement> =
            (0..n).map(|u| opposite_class(setting, *lv, u, c)).collect::<Result<_>>()?;
        tables.push((
            format!("E[{}] vs Ell[{}] under the {} pairing", ev.token(), lv.token(), pname),
            pairing_table(setting, &e_list, &l_list, *pairing)?,
        ));
    }
    let worst = delta_table_residual(&tables, setting, ctx, rng, hbar, n_points)?;
    for ((label, _), w) in tables.iter().zip(worst) {
        report.push_residual(label.clone(), w, tol);
    }
    Ok(report)
}

/// Product over positive roots of theta(h + z at v(alpha)) / theta(z at
/// alpha): the character-side localization weight of v.
fn poincare_weight_z(setting: &Setting, v: usize) -> Coefficient {
    let rank = setting.rank();
    let group = &setting.group;
    let mut m = ThetaMonomial::one();
    for alpha in &setting.datum.positive_roots {
        let va = group.act_char(v, alpha);
        m = m.mul(&ThetaMonomial::atom(1, va.coords, vec![0; rank], 1));
        m = m.mul(&ThetaMonomial::atom(0, alpha.coords.clone(), vec![0; rank], -1));
    }
    Coefficient::from_monomial(m)
}

/// Product over positive coroots of theta(h + lambda at w(alpha~)) /
/// theta(lambda at alpha~): the cocharacter-side localization weight of w.
fn poincare_weight_lambda(setting: &Setting, w: usize) -> Coefficient {
    let rank = setting.rank();
    let group = &setting.group;
    let mut m = ThetaMonomial::one();
    for alpha_vee in &setting.datum.positive_coroots {
        let wa = group.act_cochar(w, alpha_vee);
        m = m.mul(&ThetaMonomial::atom(1, vec![0; rank], wa.coords, 1));
        m = m.mul(&ThetaMonomial::atom(0, vec![0; rank], alpha_vee.coords.clone(), -1));
    }
    Coefficient::from_monomial(m)
}

/// Mirror statement for the restriction tables: for all v, w
///
///   ^v c^d_{v,w} * prod_a th(h + z_{v(a)}) / th(z_a)
///       = prod_a th(h + l_{w(a~)}) / th(l_{a~}) * ^{(w w0) d} c_{w w0, v w0},
///
/// where c and c^d are the spectral and dynamical restriction
/// coefficients. The reference section cancels, so any choice passes.
pub fn mirror_restriction_check<R: Rng + ?Sized>(
    setting: &Setting,
    ctx: &ThetaContext,
    rng: &mut R,
    hbar: Option<Complex64>,
    n_points: usize,
    tol: f64,
    c: &SectionChoice,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("mirror restriction identity");
    let group = &setting.group;
    let n = group.order();
    let w0 = group.w0();
    let spec = OperatorVariant { z_sign: 1, lambda_sign: 1, dynamical: false };
    let dynv = OperatorVariant { z_sign: 1, lambda_sign: 1, dynamical: true };
    let mut c_spec = vec![vec![Coefficient::zero(); n]; n];
    let mut c_dyn = vec![vec![Coefficient::zero(); n]; n];
    for v in 0..n {
        for w in 0..n {
            c_spec[v][w] = restriction_coefficient(setting, spec, v, w, c)?;
            c_dyn[v][w] = restriction_coefficient(setting, dynv, v, w, c)?;
        }
    }
    let pz: Vec<Coefficient> = (0..n).map(|v| poincare_weight_z(setting, v)).collect();
    let pl: Vec<Coefficient> = (0..n).map(|w| poincare_weight_lambda(setting, w)).collect();
    let mut rows = Vec::with_capacity(n * n);
    for v in 0..n {
        for w in 0..n {
            let lhs = spec_twist(setting, v, &c_dyn[v][w]).mul(&pz[v]);
            let ww0 = group.mul(w, w0);
            let vw0 = group.mul(v, w0);
            let rhs = pl[w].mul(&dyn_twist(setting, ww0, &c_spec[ww0][vw0]));
            rows.push((lhs, rhs));
        }
    }
    let mut worst = 0.0f64;
    with_sample_points(setting, ctx, rng, hbar, n_points, |_, cache| {
        let mut point_worst = 0.0f64;
        for (lhs, rhs) in &rows {
            let a = lhs.eval_cached(cache)?;
            let b = rhs.eval_cached(cache)?;
            let mut acc = ResidualAccumulator::new();
            acc.observe(a, b);
            point_worst = point_worst.max(acc.residual());
        }
        worst = worst.max(point_worst);
        Ok(())
    })?;
    report.push_residual(
        "row-scaled dynamical restrictions equal w0-shifted spectral restrictions",
        worst,
        tol,
    );
    Ok(report)
}

#[derive(Serialize)]
pub struct RestrictionEntry {
    pub w: Vec<usize>,
    pub coefficient: String,
    pub value: (f64, f64),
}

#[derive(Serialize)]
pub struct RestrictionRow {
    pub v: Vec<usize>,
    pub entries: Vec<RestrictionEntry>,
}

#[derive(Serialize)]
pub struct RestrictionTable {
    pub family: String,
    pub normalization: String,
    pub rows: Vec<RestrictionRow>,
}

/// Restriction coefficients of every class of the family, symbolic and
/// evaluated at one point, keyed by one-based reduced words.
pub fn restriction_table(
    setting: &Setting,
    variant: OperatorVariant,
    c: &SectionChoice,
    point: &EvaluationPoint,
    ctx: &ThetaContext,
) -> Result<RestrictionTable> {
    let group = &setting.group;
    let mut cache = EvalCache::new(ctx, point);
    let mut rows = Vec::new();
    for v in 0..group.order() {
        let mut entries = Vec::new();
        for w in 0..group.order() {
            if !bruhat_leq(group, w, v) {
                continue;
            }
            let coeff = restriction_coefficient(setting, variant, v, w, c)?;
            let val = coeff.eval_cached(&mut cache)?;
            entries.push(RestrictionEntry {
                w: group.elem(w).word_one_based(),
                coefficient: coeff.describe(),
                value: (val.re, val.im),
            });
        }
        rows.push(RestrictionRow { v: group.elem(v).word_one_based(), entries });
    }
    Ok(RestrictionTable {
        family: variant.token(),
        normalization:
            "entries are relative to the chosen reference section; no intrinsic normalization"
                .into(),
        rows,
    })
}
