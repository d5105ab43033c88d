//! Serde adapters that write vectors as plain JSON arrays.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Vector;

pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
    let raw = Vec::<f64>::deserialize(d)?;
    Ok(Vector::from_vec(raw))
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vector>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vector>, D::Error> {
        let raw = Option::<Vec<f64>>::deserialize(d)?;
        Ok(raw.map(Vector::from_vec))
    }
}
