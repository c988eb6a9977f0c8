//! Artifact serialization: JSON with floats rounded to 12 significant
//! digits, and CSV tables.

use serde::Serialize;
use serde_json::{Number, Value};

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            *v = Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and rounded floats, newline terminated.
pub fn to_json<T: Serialize>(x: &T) -> Result<Vec<u8>, serde_json::Error> {
    let mut v = serde_json::to_value(x)?;
    round_value(&mut v);
    let mut out = serde_json::to_vec_pretty(&v)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes a header and rows; floats go through [`round_sig`] by the caller.
pub fn to_csv(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Shortest round-trip text of the rounded value, with an exponent for
/// very small or large magnitudes.
pub fn num(x: f64) -> String {
    format!("{:?}", round_sig(x))
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-2.0e-20 / 3.0), -6.66666666667e-21);
    }

    #[test]
    fn json_rounds_nested_floats_only() {
        let v = serde_json::json!({"a": [1.0 / 3.0, 7], "b": {"c": 2.0f64.sqrt()}});
        let text = String::from_utf8(to_json(&v).unwrap()).unwrap();
        assert!(text.contains("0.333333333333"));
        assert!(text.contains("1.41421356237"));
        assert!(text.contains(" 7\n"));
    }

    #[test]
    fn tiny_numbers_use_exponents() {
        assert_eq!(num(1.073159524471234e-22), "1.07315952447e-22");
        assert_eq!(num(2.5), "2.5");
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in -1e12f64..1e12) {
            prop_assert_eq!(round_sig(round_sig(x)), round_sig(x));
        }

        #[test]
        fn rounding_error_is_relative(x in prop::num::f64::NORMAL) {
            let r = round_sig(x);
            prop_assert!(((r - x) / x).abs() <= 5e-12);
        }
    }
}
