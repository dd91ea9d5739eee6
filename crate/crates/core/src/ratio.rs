/// Exact non-negative rational used for coverage, averages and proportions.
pub type Ratio = num_rational::Ratio<u64>;

/// Renders `value` with exactly two decimals, rounding half away from zero.
///
/// Works on the exact fraction, so `5.165` style ties never suffer from
/// binary floating-point drift.
pub fn format_two_decimals(value: Ratio) -> String {
    let numer = u128::from(*value.numer()) * 100;
    let denom = u128::from(*value.denom());
    let mut hundredths = numer / denom;
    if (numer % denom) * 2 >= denom {
        hundredths += 1;
    }
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

pub(crate) fn ratio_to_f64(value: Ratio) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

/// Serializes an exact ratio as a JSON number.
pub(crate) mod as_f64 {
    use super::{ratio_to_f64, Ratio};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &Ratio, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(ratio_to_f64(*value))
    }
}

/// Same as [`as_f64`] for optional ratios; `None` becomes `null`.
pub(crate) mod opt_as_f64 {
    use super::{ratio_to_f64, Ratio};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(
        value: &Option<Ratio>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_f64(ratio_to_f64(*v)),
            None => serializer.serialize_none(),
        }
    }
}
