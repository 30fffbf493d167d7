//! Randomized properties of the class layer: Kronecker pairings under
//! arbitrary reference sections, interval support, transition-map round
//! trips, and agreement of class components with the dressed coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elldl::dl_operators::{with_sample_points, OperatorVariant};
use elldl::elliptic_classes::{
    elliptic_class, opposite_class, restriction_coefficient, section_residual, t_map_apply,
    NumericSection, SectionChoice,
};
use elldl::error::Error;
use elldl::root_system::{bruhat_leq, build_root_datum, DEFAULT_WEYL_CAP};
use elldl::theta::{rel_err, ThetaContext};
use elldl::twisted_algebra::{pairing_lambda, ModuleKind, Setting};

fn setting(series: &str, rank: usize) -> Setting {
    Setting::new(build_root_datum(series, rank).unwrap(), DEFAULT_WEYL_CAP).unwrap()
}

const SERIES: [(&str, usize); 2] = [("A", 2), ("B", 2)];

/// The six families that seed classes: both sign-mixed pairs and the plain
/// pair, spectral and dynamical each.
const CLASS_VARIANTS: [OperatorVariant; 6] = [
    OperatorVariant::new(1, 1, false),
    OperatorVariant::new(1, 1, true),
    OperatorVariant::new(1, -1, false),
    OperatorVariant::new(1, -1, true),
    OperatorVariant::new(-1, 1, false),
    OperatorVariant::new(-1, 1, true),
];

/// Classes and transition maps reject the (-z,-lam) sign pair.
#[test]
fn doubly_negative_signs_are_rejected() {
    let s = setting("A", 2);
    let c = SectionChoice::unit();
    for dynamical in [false, true] {
        let variant = OperatorVariant::new(-1, -1, dynamical);
        assert!(matches!(
            elliptic_class(&s, variant, 0, &c),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            opposite_class(&s, variant, 0, &c),
            Err(Error::Input(_))
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// <E_v, Ell_u> under the lambda pairing is the Kronecker delta for any
    /// reference section, checked entrywise at generic points.
    #[test]
    fn pairings_are_kronecker_for_random_sections(
        sel in 0usize..2,
        uraw in 0usize..64,
        vraw in 0usize..64,
        seed in any::<u64>(),
    ) {
        let (series, rank) = SERIES[sel];
        let s = setting(series, rank);
        let order = s.group.order();
        let (u, v) = (uraw % order, vraw % order);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c = SectionChoice::random(&mut r, rank);

        let e = elliptic_class(&s, OperatorVariant::new(1, 1, false), v, &c).unwrap();
        let l = opposite_class(&s, OperatorVariant::new(1, -1, false), u, &c).unwrap();
        let pair = pairing_lambda(&s, &e, &l).unwrap();
        let target = if u == v { 1.0 } else { 0.0 };

        let ctx = ThetaContext::standard();
        let mut worst = 0.0f64;
        with_sample_points(&s, &ctx, &mut r, None, 2, |_p, cache| {
            let val = pair.eval_cached(cache)?;
            let res = (val - target).norm() / val.norm().max(1.0);
            worst = worst.max(res);
            Ok(())
        }).unwrap();
        prop_assert!(worst < 1e-8, "pairing residual {:.3e} at (u, v) = ({u}, {v})", worst);
    }

    /// Class supports are Bruhat intervals: E_v sits inside the lower set
    /// of v^-1 and touches both ends, Ell_v inside the upper set.
    #[test]
    fn class_supports_are_bruhat_intervals(
        sel in 0usize..2,
        vraw in 0usize..64,
        variant_idx in 0usize..6,
        seed in any::<u64>(),
    ) {
        let (series, rank) = SERIES[sel];
        let s = setting(series, rank);
        let g = &s.group;
        let v = vraw % g.order();
        let variant = CLASS_VARIANTS[variant_idx];
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c = SectionChoice::random(&mut r, rank);
        let vinv = g.inv(v);

        let e = elliptic_class(&s, variant, v, &c).unwrap();
        for (&x, coeff) in &e.entries {
            prop_assert!(bruhat_leq(g, x, vinv));
            prop_assert!(!coeff.is_zero());
        }
        prop_assert!(e.entries.contains_key(&g.e()));
        prop_assert!(e.entries.contains_key(&vinv));

        let l = opposite_class(&s, variant, v, &c).unwrap();
        for (&x, coeff) in &l.entries {
            prop_assert!(bruhat_leq(g, vinv, x));
            prop_assert!(!coeff.is_zero());
        }
        prop_assert!(l.entries.contains_key(&g.w0()));
        prop_assert!(l.entries.contains_key(&vinv));
    }

    /// Applying the transition map and then its partner from the opposite
    /// side of the spectral/dynamical divide returns any numeric section.
    #[test]
    fn transition_maps_round_trip(
        sel in 0usize..2,
        variant_idx in 0usize..6,
        seed in any::<u64>(),
    ) {
        let (series, rank) = SERIES[sel];
        let s = setting(series, rank);
        let order = s.group.order();
        let variant = CLASS_VARIANTS[variant_idx];
        let partner = OperatorVariant::new(
            variant.z_sign,
            variant.lambda_sign,
            !variant.dynamical,
        );
        let mut r = ChaCha8Rng::seed_from_u64(seed);

        let kind = if variant.dynamical { ModuleKind::Dynamical } else { ModuleKind::Spectral };
        let mut entries = BTreeMap::new();
        for x in 0..order {
            entries.insert(
                x,
                Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
            );
        }
        let m = NumericSection { kind, entries };

        let ctx = ThetaContext::standard();
        with_sample_points(&s, &ctx, &mut r, None, 1, |_p, cache| {
            let forward = t_map_apply(&s, variant, &m, cache)?;
            let back = t_map_apply(&s, partner, &forward, cache)?;
            let res = section_residual(&back, &m)?;
            assert!(res < 1e-7, "round-trip residual {res:.3e}");
            Ok(())
        }).unwrap();
    }

    /// Components of E_v in the marker basis equal the independently
    /// dressed coefficients, family by family, for any section.
    #[test]
    fn class_components_match_dressed_coefficients(
        sel in 0usize..2,
        vraw in 0usize..64,
        dynamical in proptest::bool::ANY,
        seed in any::<u64>(),
    ) {
        let (series, rank) = SERIES[sel];
        let s = setting(series, rank);
        let g = &s.group;
        let v = vraw % g.order();
        let variant = OperatorVariant::new(1, 1, dynamical);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c = SectionChoice::random(&mut r, rank);

        let class = elliptic_class(&s, variant, v, &c).unwrap();
        let mut pairs = Vec::new();
        for w in 0..g.order() {
            let direct = restriction_coefficient(&s, variant, v, w, &c).unwrap();
            let component = class.coeff(g.inv(w));
            prop_assert_eq!(direct.is_zero(), component.is_zero());
            if !direct.is_zero() {
                pairs.push((direct, component));
            }
        }

        let ctx = ThetaContext::standard();
        let mut worst = 0.0f64;
        with_sample_points(&s, &ctx, &mut r, None, 2, |_p, cache| {
            let mut point_worst = 0.0f64;
            for (lhs, rhs) in &pairs {
                let a = lhs.eval_cached(cache)?;
                let b = rhs.eval_cached(cache)?;
                point_worst = point_worst.max(rel_err(a, b));
            }
            worst = worst.max(point_worst);
            Ok(())
        }).unwrap();
        prop_assert!(worst < 1e-8, "component residual {:.3e}", worst);
    }
}
