use delayosc::fnspec::{Extension, Piece, PiecewiseFn, Role};
use delayosc::integrator::integrate;
use delayosc::io::fmt_sig;
use delayosc::lambda::{lambda_of, psi_closed, sigma_of};
use delayosc::oscillation::sup_delay_integral;
use delayosc::testgen::{oscillating_history, random_equation, rng, GenOptions, SignClass};
use proptest::prelude::*;

fn periodic_fn() -> impl Strategy<Value = PiecewiseFn> {
    (1usize..5, 0.5f64..3.0)
        .prop_flat_map(|(n, period)| {
            (
                Just(period),
                prop::collection::vec(0.05f64..1.0, n),
                prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, any::<bool>()), n),
            )
        })
        .prop_map(|(period, widths, vals)| {
            let total: f64 = widths.iter().sum();
            let mut start = 0.0;
            let mut pieces = Vec::new();
            for (i, (w, (a, b, affine))) in widths.iter().zip(vals).enumerate() {
                let end = if i + 1 == widths.len() {
                    period
                } else {
                    start + w / total * period
                };
                pieces.push(if affine {
                    let slope = (b - a) / (end - start);
                    Piece::affine(start, end, slope, a - slope * start)
                } else {
                    Piece::constant(start, end, a)
                });
                start = end;
            }
            PiecewiseFn::new(pieces, Extension::Periodic(period), Role::Coefficient).unwrap()
        })
}

fn sign_class() -> impl Strategy<Value = SignClass> {
    prop_oneof![Just(SignClass::Nonneg), Just(SignClass::Nonpos)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn abs_integral_is_additive(f in periodic_fn(), a in 0.0f64..5.0, l1 in 0.0f64..4.0, l2 in 0.0f64..4.0) {
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = f.abs_integral(a, c).unwrap();
        let split = f.abs_integral(a, b).unwrap() + f.abs_integral(b, c).unwrap();
        prop_assert!((whole - split).abs() <= 1e-10 * whole.max(1.0));
        prop_assert!(whole >= f.integral(a, c).unwrap().abs() - 1e-12);
    }

    #[test]
    fn generated_delays_are_valid(seed in any::<u64>(), sign in sign_class()) {
        let mut o = GenOptions::new(sign, (0.5, 1.4));
        o.affine_c = true;
        let eq = random_equation(&mut rng(seed), &o).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..400 {
            let t = 0.025 * i as f64;
            let tau = eq.tau.eval(t).unwrap();
            prop_assert!(tau <= t + 1e-12);
            let m = eq.tau.tau_min(t).unwrap();
            prop_assert!(m <= tau + 1e-12);
            prop_assert!(m >= prev - 1e-12);
            prev = m;
        }
        prop_assert!(eq.tau.tau_min(eq.t1).unwrap() > 0.0);
        prop_assert!(eq.tau.tau_min(eq.rho).unwrap() > eq.t1);
    }

    #[test]
    fn sup_delay_integral_dominates_samples(seed in any::<u64>()) {
        let mut o = GenOptions::new(SignClass::Nonneg, (0.5, 1.4));
        o.affine_c = true;
        let eq = random_equation(&mut rng(seed), &o).unwrap();
        let p = eq.period().unwrap();
        let sup = sup_delay_integral(&eq, eq.rho + p).unwrap();
        for i in 0..=2000 {
            let t = eq.rho + p * i as f64 / 2000.0;
            let v = eq.c.abs_integral(eq.tau.eval(t).unwrap(), t).unwrap();
            prop_assert!(v <= sup + 1e-10, "F({t}) = {v} > {sup}");
        }
    }

    #[test]
    fn integration_is_linear(seed in any::<u64>(), k in -3.0f64..3.0) {
        let mut r = rng(seed);
        let eq = random_equation(&mut r, &GenOptions::new(SignClass::Nonneg, (0.5, 1.4))).unwrap();
        let h = 5e-3;
        let hist = oscillating_history(&mut r, &eq, eq.rho, h).unwrap();
        let x = integrate(&eq, &hist, eq.rho + 5.0, h).unwrap();
        let y = integrate(&eq, &hist.scaled(k), eq.rho + 5.0, h).unwrap();
        prop_assert_eq!(x.times.len(), y.times.len());
        for (a, b) in x.values.iter().zip(&y.values) {
            prop_assert!((k * a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lambda_decreases_and_sigma_is_minimal_at_nine_eighths(a in 1.0f64..=2.0, b in 1.0f64..=2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(lambda_of(lo).unwrap() >= lambda_of(hi).unwrap());
        prop_assert!(sigma_of(a).unwrap() >= sigma_of(1.125).unwrap() - 1e-15);
        prop_assert!((2.0..=3.0).contains(&lambda_of(a).unwrap()));
    }

    #[test]
    fn psi_is_monotone_in_unit_range(s in 1.0f64..=2.0, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let end = lambda_of(s).unwrap() - 1.0;
        let (t1, t2) = if u <= v { (u * end, v * end) } else { (v * end, u * end) };
        let (p1, p2) = (psi_closed(s, t1).unwrap(), psi_closed(s, t2).unwrap());
        prop_assert!(p1 <= p2 + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p2));
    }

    #[test]
    fn twelve_significant_digits(x in -1e6f64..1e6) {
        let y: f64 = fmt_sig(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
    }
}
