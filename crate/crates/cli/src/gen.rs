//! Instance generators for the two benchmark families. Both use uniform
//! integer highest-bid distributions over `0..=100` and bundle valuations,
//! so every generated instance is fully deterministic.

use seqbid::{Error, Money, OpponentBidModel, ProblemInstance, Scalar, Valuation};

const UNIFORM_HIGH: Money = Money(100);

/// `n` items (n even) with two substitutable bundles: the odd-position items
/// and the even-position items, each worth `100 * n / 2`. Within a bundle
/// the items are complements — missing one makes the rest worthless.
pub fn gen_substitutes<S: Scalar>(n: usize) -> Result<ProblemInstance<S>, Error> {
    if n == 0 || !n.is_multiple_of(2) || n > seqbid::MAX_ITEMS {
        return Err(Error::InvalidArgument(format!(
            "substitutes family needs an even item count in 2..={} (got {n})",
            seqbid::MAX_ITEMS
        )));
    }
    let value = S::from_usize(100 * n / 2).expect("bundle value fits scalar");
    let mut odd: u32 = 0;
    let mut even: u32 = 0;
    for i in (0..n).step_by(2) {
        odd |= 1 << i;
        even |= 1 << (i + 1);
    }
    let models = (0..n).map(|_| OpponentBidModel::uniform(UNIFORM_HIGH)).collect();
    Ok(ProblemInstance::new(
        models,
        Valuation::bundles(n, vec![(odd, value), (even, value)]),
    ))
}

/// Nine items with three disjoint substitutable bundles `{0,3,6}`, `{1,4,7}`,
/// `{2,5,8}`, each worth 300; holding several complete bundles is no better
/// than holding one.
pub fn gen_three_bundles<S: Scalar>() -> ProblemInstance<S> {
    let value = S::from_u32(300).expect("bundle value fits scalar");
    let bundles = (0..3u32)
        .map(|k| {
            let mask = (1 << k) | (1 << (k + 3)) | (1 << (k + 6));
            (mask, value)
        })
        .collect();
    let models = (0..9).map(|_| OpponentBidModel::uniform(UNIFORM_HIGH)).collect();
    ProblemInstance::new(models, Valuation::bundles(9, bundles))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_bundles_hold_alternating_items() {
        let instance: ProblemInstance<f64> = gen_substitutes(2).unwrap();
        assert_eq!(instance.valuation.value(0b01).unwrap(), 100.0);
        assert_eq!(instance.valuation.value(0b10).unwrap(), 100.0);
        // Substitutes: both bundles together are no better than one.
        assert_eq!(instance.valuation.value(0b11).unwrap(), 100.0);

        let instance: ProblemInstance<f64> = gen_substitutes(8).unwrap();
        assert_eq!(instance.valuation.value(0b01010101).unwrap(), 400.0);
        assert_eq!(instance.valuation.value(0b10101010).unwrap(), 400.0);
        assert_eq!(instance.valuation.value(0b11111111).unwrap(), 400.0);
        assert_eq!(instance.valuation.value(0b01010100).unwrap(), 0.0);
    }

    #[test]
    fn odd_item_counts_are_rejected() {
        assert!(gen_substitutes::<f64>(3).is_err());
        assert!(gen_substitutes::<f64>(0).is_err());
    }

    #[test]
    fn three_bundles_shape() {
        let instance: ProblemInstance<f64> = gen_three_bundles();
        assert_eq!(instance.item_count(), 9);
        let b0 = (1 << 0) | (1 << 3) | (1 << 6);
        assert_eq!(instance.valuation.value(b0).unwrap(), 300.0);
        assert_eq!(instance.valuation.value(0b111111111).unwrap(), 300.0);
        // An incomplete bundle is worthless.
        assert_eq!(instance.valuation.value((1 << 0) | (1 << 3)).unwrap(), 0.0);
        assert_eq!(instance.validate(), Vec::new());
    }

    #[test]
    fn uniform_models_cover_zero_to_one_hundred() {
        let instance: ProblemInstance<f64> = gen_three_bundles();
        let model = &instance.models[0];
        assert_eq!(model.max_meaningful_bid(), Money(100));
        assert!((model.win_probability(Money(0)) - 1.0 / 101.0).abs() < 1e-12);
        assert!((model.win_probability(Money(100)) - 1.0).abs() < 1e-9);
    }
}
