//! Output helpers: every real is written with 17 significant digits so that
//! reports are reproducible byte for byte.

use gfod::{CVector, C64};
use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A real serialized as `d.dddddddddddddddde±x`, or `null` when not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let text = format!("{:.16e}", self.0);
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

pub fn nums(xs: &[f64]) -> Vec<Num> {
    xs.iter().copied().map(Num).collect()
}

/// A complex number as `[re, im]`.
pub fn complex(z: C64) -> [Num; 2] {
    [Num(z.re), Num(z.im)]
}

pub fn vector(v: &CVector) -> Vec<[Num; 2]> {
    v.entries().iter().copied().map(complex).collect()
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}
