use nalgebra::{DMatrix, DVector};
use serde_json::ser::{CompactFormatter, Formatter};
use serde_json::Value;
use std::io;

/// Compact JSON whose floats carry 17 significant digits, so repeated
/// runs can be compared byte for byte.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        CompactFormatter.write_f32(w, v)
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    serde::Serialize::serialize(v, &mut ser).expect("in-memory JSON");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Non-finite values become `null`.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn vec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn dvec(v: &DVector<f64>) -> Value {
    vec(v.as_slice())
}

pub fn mat(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|x| num(*x)).collect()))
            .collect(),
    )
}
