//! JSON has no infinities or NaN; these helpers write them as the strings
//! `"inf"`, `"-inf"` and `"nan"` and read them back, so reports round-trip.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
    Null(()),
}

fn to_repr(x: f64) -> Repr {
    if x.is_finite() {
        Repr::Num(x)
    } else if x.is_nan() {
        Repr::Text("nan".into())
    } else if x > 0.0 {
        Repr::Text("inf".into())
    } else {
        Repr::Text("-inf".into())
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
    match r {
        Repr::Num(x) => Ok(x),
        Repr::Null(()) => Ok(f64::NAN),
        Repr::Text(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(E::custom(format!("expected a number, got `{other}`"))),
        },
    }
}

pub mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(x: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        (to_repr(x.0), to_repr(x.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (a, b) = <(Repr, Repr)>::deserialize(d)?;
        Ok((from_repr(a)?, from_repr(b)?))
    }
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[[f64; 2]; 2], s: S) -> Result<S::Ok, S::Error> {
        [[to_repr(m[0][0]), to_repr(m[0][1])], [to_repr(m[1][0]), to_repr(m[1][1])]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[[f64; 2]; 2], D::Error> {
        let [[a, b], [c, e]] = <[[Repr; 2]; 2]>::deserialize(d)?;
        Ok([[from_repr(a)?, from_repr(b)?], [from_repr(c)?, from_repr(e)?]])
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct T {
        #[serde(with = "super::scalar")]
        a: f64,
        #[serde(with = "super::pair")]
        b: (f64, f64),
        #[serde(with = "super::matrix")]
        c: [[f64; 2]; 2],
    }

    #[test]
    fn round_trip_with_infinities() {
        let t = T {
            a: f64::NEG_INFINITY,
            b: (0.5, f64::INFINITY),
            c: [[f64::INFINITY, 0.0], [0.0, 1.5]],
        };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"a":"-inf","b":[0.5,"inf"],"c":[["inf",0.0],[0.0,1.5]]}"#);
        assert_eq!(serde_json::from_str::<T>(&json).unwrap(), t);
    }
}
