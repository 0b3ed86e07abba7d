//! Serde helpers for the 0x-hex and decimal-string encodings used by
//! fixture files and machine reports.

use primitive_types::{H160, H256, U256};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub fn to_hex<T: AsRef<[u8]>>(bytes: T) -> String {
    format!("0x{}", hex::encode(bytes.as_ref()))
}

/// Decodes a 0x-prefixed hex string into raw bytes, enforcing an exact
/// byte length when one is given.
pub fn from_hex(s: &str, expect_len: Option<usize>) -> Result<Vec<u8>, String> {
    let body = s
        .strip_prefix("0x")
        .ok_or_else(|| format!("`{s}` is missing the 0x prefix"))?;
    if body.len() % 2 != 0 {
        return Err(format!("`{s}` has odd hex length {}", body.len()));
    }
    let bytes = hex::decode(body).map_err(|e| format!("`{s}` is not valid hex: {e}"))?;
    if let Some(want) = expect_len {
        if bytes.len() != want {
            return Err(format!(
                "`{s}` decodes to {} bytes, expected {want}",
                bytes.len()
            ));
        }
    }
    Ok(bytes)
}

pub fn parse_h160(s: &str) -> Result<H160, String> {
    Ok(H160::from_slice(&from_hex(s, Some(20))?))
}

pub fn parse_h256(s: &str) -> Result<H256, String> {
    Ok(H256::from_slice(&from_hex(s, Some(32))?))
}

pub mod h160 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &H160, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&to_hex(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<H160, D::Error> {
        let s = String::deserialize(de)?;
        parse_h160(&s).map_err(D::Error::custom)
    }
}

pub mod topics {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[H256], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(to_hex))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<H256>, D::Error> {
        let raw = Vec::<String>::deserialize(de)?;
        if raw.len() > 4 {
            return Err(D::Error::custom(format!(
                "log carries {} topics, at most 4 allowed",
                raw.len()
            )));
        }
        raw.iter()
            .map(|s| parse_h256(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Log payload bytes: 0x-hex, length a multiple of 32 (possibly empty).
pub mod log_data {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&to_hex(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        let bytes = from_hex(&s, None).map_err(D::Error::custom)?;
        if bytes.len() % 32 != 0 {
            return Err(D::Error::custom(format!(
                "log data is {} bytes, must be a multiple of 32",
                bytes.len()
            )));
        }
        Ok(bytes)
    }
}

/// 256-bit quantities travel as decimal strings so that readers without
/// big-integer JSON support stay lossless.
pub mod dec_u256 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &U256, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<U256, D::Error> {
        let s = String::deserialize(de)?;
        U256::from_dec_str(&s)
            .map_err(|e| D::Error::custom(format!("`{s}` is not a decimal 256-bit value: {e}")))
    }
}

pub mod dec_u256_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<U256>, ser: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => ser.serialize_some(&v.to_string()),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<U256>, D::Error> {
        let s = Option::<String>::deserialize(de)?;
        s.map(|s| {
            U256::from_dec_str(&s)
                .map_err(|e| D::Error::custom(format!("`{s}` is not a decimal 256-bit value: {e}")))
        })
        .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let bytes = from_hex("0xdeadbeef", None).unwrap();
        assert_eq!(to_hex(&bytes), "0xdeadbeef");
    }

    #[test]
    fn rejects_odd_length() {
        assert!(from_hex("0xabc", None).unwrap_err().contains("odd"));
    }

    #[test]
    fn rejects_wrong_length_address() {
        let err = parse_h160("0x1234").unwrap_err();
        assert!(err.contains("expected 20"), "{err}");
    }
}
