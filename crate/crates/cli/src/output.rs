use serde::Serialize;
use serde_json::{Number, Value};

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_in_place(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            if let Some(r) = num.as_f64().and_then(|x| Number::from_f64(round_sig(x))) {
                *num = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_in_place),
        Value::Object(map) => map.values_mut().for_each(round_in_place),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result types serialize to JSON")
}

/// Pretty JSON with every float rounded, terminated by a newline.
pub fn render(mut v: Value) -> String {
    round_in_place(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always render");
    s.push('\n');
    s
}

pub fn one_based(pair: (usize, usize)) -> [usize; 2] {
    [pair.0 + 1, pair.1 + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(2.0 / 3.0), 0.666666666667);
        assert_eq!(round_sig(-1.234567890123456e-7), -1.23456789012e-7);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn render_leaves_integers_alone() {
        let out = render(serde_json::json!({"B": 20, "mu": 0.1 + 0.2}));
        assert!(out.contains("\"B\": 20"));
        assert!(out.contains("\"mu\": 0.3"));
    }
}
