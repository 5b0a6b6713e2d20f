use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckClass {
    /// Fails the run when its assertions fail.
    Assertion,
    /// Measures and reports; never fails the run on its numbers.
    Report,
}

/// One check's JSON report. Field order is fixed and `metrics` keys are
/// sorted, so equal results serialize to equal bytes.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub statement: String,
    pub class: CheckClass,
    pub passed: bool,
    pub failures: Vec<String>,
    pub metrics: Map<String, Value>,
    pub files: Vec<String>,
}

/// JSON number for finite values, `"inf"`, `"-inf"` or `"nan"` otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| {
        Value::String(
            if x.is_nan() {
                "nan"
            } else if x > 0.0 {
                "inf"
            } else {
                "-inf"
            }
            .into(),
        )
    })
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Serializes a value, mapping non-finite floats through [`num`].
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// What a check produced: metrics, failed assertions and data files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub metrics: Map<String, Value>,
    pub failures: Vec<String>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.to_string(), v.into());
    }

    pub fn num(&mut self, key: &str, x: f64) {
        self.metrics.insert(key.to_string(), num(x));
    }

    pub fn expect(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.failures.push(msg.into());
        }
    }

    /// Records `key = x` and requires `x <= bound`.
    pub fn at_most(&mut self, key: &str, x: f64, bound: f64) {
        self.num(key, x);
        self.expect(x <= bound, format!("{key} = {x:e} exceeds {bound:e}"));
    }

    /// Records `key = x` and requires a finite positive value.
    pub fn finite_positive(&mut self, key: &str, x: f64) {
        self.num(key, x);
        self.expect(x.is_finite() && x > 0.0, format!("{key} = {x:e} is not finite and positive"));
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory csv");
        for r in rows {
            w.write_record(r).expect("in-memory csv");
        }
        let bytes = w.into_inner().expect("in-memory csv");
        self.files.push((name.to_string(), String::from_utf8(bytes).expect("utf-8 csv")));
    }
}

/// Fixed-format float for CSV cells.
pub fn cell(x: f64) -> String {
    format!("{x:.17e}")
}
