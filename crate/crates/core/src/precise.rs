//! JSON floats written with 17 significant digits.
//!
//! Used through `#[serde(serialize_with = "crate::precise::serialize")]`.
//! Parsing relies on serde_json's `float_roundtrip` feature so a value read
//! back is bitwise identical to the one written.

use serde::de::Deserializer;
use serde::ser::{Error as _, SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::numerics::Tensor;

/// Values whose floats can be written with 17 digits.
pub trait PreciseSerialize {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error>;
}

/// Borrowing wrapper that serializes every contained `f64` with 17 digits.
pub struct Precise<'a, T: ?Sized>(pub &'a T);

impl<T: PreciseSerialize + ?Sized> Serialize for Precise<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize_precise(s)
    }
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl PreciseSerialize for f64 {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.is_finite() {
            return Err(S::Error::custom(format!("cannot write non-finite {self}")));
        }
        let raw = RawValue::from_string(format_f64(*self)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

impl<T: PreciseSerialize> PreciseSerialize for [T] {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for item in self {
            seq.serialize_element(&Precise(item))?;
        }
        seq.end()
    }
}

impl<T: PreciseSerialize> PreciseSerialize for Vec<T> {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize_precise(s)
    }
}

impl<T: PreciseSerialize, const N: usize> PreciseSerialize for [T; N] {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize_precise(s)
    }
}

/// Matrices are written as a list of rows.
impl PreciseSerialize for Tensor {
    fn serialize_precise<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows()))?;
        for i in 0..self.rows() {
            seq.serialize_element(&Precise(self.row(i)))?;
        }
        seq.end()
    }
}

pub fn serialize<T: PreciseSerialize + ?Sized, S: Serializer>(
    value: &T,
    s: S,
) -> Result<S::Ok, S::Error> {
    value.serialize_precise(s)
}

/// Reads a matrix written by [`Precise<Tensor>`].
pub fn tensor_from_rows<'de, D: Deserializer<'de>>(d: D) -> Result<Tensor, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    Tensor::from_rows(&rows).map_err(serde::de::Error::custom)
}
