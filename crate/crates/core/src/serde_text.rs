//! Serde helpers writing exact numbers as decimal text.

pub mod rational {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::poly::Rational;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(D::Error::custom)
    }

    /// Parses `a` or `a/b`.
    pub fn parse(text: &str) -> Result<Rational, String> {
        let bad = || format!("bad rational {text:?}");
        let (n, d) = match text.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text.trim(), "1"),
        };
        let n: num_bigint::BigInt = n.parse().map_err(|_| bad())?;
        let d: num_bigint::BigInt = d.parse().map_err(|_| bad())?;
        if num_traits::Zero::is_zero(&d) {
            return Err(bad());
        }
        Ok(Rational::new(n, d))
    }
}

pub mod assignment {
    use std::collections::BTreeMap;

    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use crate::poly::Assignment;

    pub fn serialize<S: Serializer>(a: &Assignment, s: S) -> Result<S::Ok, S::Error> {
        let text: BTreeMap<String, String> = a
            .iter()
            .map(|(v, q)| (format!("x{v}"), q.to_string()))
            .collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Assignment, D::Error> {
        let text = BTreeMap::<String, String>::deserialize(d)?;
        text.into_iter()
            .map(|(k, v)| {
                let var = k
                    .strip_prefix('x')
                    .and_then(|i| i.parse::<usize>().ok())
                    .ok_or_else(|| D::Error::custom(format!("bad variable {k:?}")))?;
                let q = super::rational::parse(&v).map_err(D::Error::custom)?;
                Ok((var, q))
            })
            .collect()
    }
}

pub mod optional_assignment {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::poly::Assignment;

    pub fn serialize<S: Serializer>(a: &Option<Assignment>, s: S) -> Result<S::Ok, S::Error> {
        match a {
            Some(a) => super::assignment::serialize(a, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Assignment>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::assignment")] Assignment);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

pub mod polynomial {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::poly::{parse_polynomial, Polynomial};

    pub fn serialize<S: Serializer>(f: &Polynomial, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&f.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Polynomial, D::Error> {
        let text = String::deserialize(d)?;
        parse_polynomial(&text).map_err(D::Error::custom)
    }
}
