//! Serde helpers for complex numbers written either as a bare real, a `[re, im]`
//! pair or a `{"re": .., "im": ..}` object. Output is always the pair form.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
    Object {
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl From<Repr> for Complex64 {
    fn from(r: Repr) -> Self {
        match r {
            Repr::Real(x) => Complex64::new(x, 0.0),
            Repr::Pair([re, im]) | Repr::Object { re, im } => Complex64::new(re, im),
        }
    }
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    Ok(Repr::deserialize(d)?.into())
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Ok(Vec::<Repr>::deserialize(d)?.into_iter().map(Into::into).collect())
    }
}
