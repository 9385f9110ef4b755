//! JSON encoding of complex data: every complex number is a two-element
//! `[re, im]` array of doubles. Doubles are written in shortest round-trip
//! form, so decoding reproduces the exact bits.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hilbert::{Complex64, Mat3, Vec3};

pub type ComplexPair = [f64; 2];

pub fn to_pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

pub fn from_pair(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn vec3_to_pairs(v: &Vec3) -> [ComplexPair; 3] {
    [to_pair(v[0]), to_pair(v[1]), to_pair(v[2])]
}

pub fn pairs_to_vec3(p: [ComplexPair; 3]) -> Vec3 {
    Vec3::new(from_pair(p[0]), from_pair(p[1]), from_pair(p[2]))
}

pub fn serialize_vec3<S: Serializer>(v: &Vec3, serializer: S) -> Result<S::Ok, S::Error> {
    vec3_to_pairs(v).serialize(serializer)
}

pub fn deserialize_vec3<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec3, D::Error> {
    let pairs = <[ComplexPair; 3]>::deserialize(deserializer)?;
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(D::Error::custom("non-finite vector component"));
    }
    Ok(pairs_to_vec3(pairs))
}

/// Serde adapter for raw (not necessarily unit) 3-vectors.
pub mod vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vec3, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_vec3(v, serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec3, D::Error> {
        deserialize_vec3(deserializer)
    }
}

/// Serde adapter for optional raw 3-vectors.
pub mod opt_vec3 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Vec3>, serializer: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(vec3_to_pairs).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Vec3>, D::Error> {
        Ok(Option::<[ComplexPair; 3]>::deserialize(deserializer)?.map(pairs_to_vec3))
    }
}

/// Serde adapter for 3×3 complex matrices, written row by row.
pub mod mat3 {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Mat3, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: [[ComplexPair; 3]; 3] =
            std::array::from_fn(|r| std::array::from_fn(|col| to_pair(m[(r, col)])));
        rows.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Mat3, D::Error> {
        let rows = <[[ComplexPair; 3]; 3]>::deserialize(deserializer)?;
        Ok(Mat3::from_fn(|r, col| from_pair(rows[r][col])))
    }
}
