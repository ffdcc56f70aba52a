/// Lower bound `1 − ∏(1 − κ_j)` for hitting at least one of a sequence of
/// layers, each hit with probability at least `κ_j`. Computed in log space.
pub fn ladder_bound(kappas: &[f64]) -> f64 {
    let mut log_miss = 0.0;
    for &k in kappas {
        let k = k.clamp(0.0, 1.0);
        if k >= 1.0 {
            return 1.0;
        }
        log_miss += (-k).ln_1p();
    }
    -log_miss.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(ladder_bound(&[0.0; 5]), 0.0);
        assert_eq!(ladder_bound(&[0.3, 1.0, 0.2]), 1.0);
        assert_relative_eq!(ladder_bound(&[0.1; 20]), 1.0 - 0.9f64.powi(20), max_relative = 1e-14);
        assert_relative_eq!(ladder_bound(&[0.1; 20]), 0.8784, epsilon = 5e-5);
        assert_eq!(ladder_bound(&[]), 0.0);
    }

    #[test]
    fn tiny_kappas_keep_precision() {
        let b = ladder_bound(&[1e-18; 1000]);
        assert_relative_eq!(b, 1e-15, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn bound_is_monotone(ks in prop::collection::vec(0.0f64..1.0, 0..30), extra in 0.0f64..1.0) {
            let b = ladder_bound(&ks);
            prop_assert!((0.0..=1.0).contains(&b));
            let mut more = ks.clone();
            more.push(extra);
            prop_assert!(ladder_bound(&more) >= b - 1e-15);
        }
    }
}
