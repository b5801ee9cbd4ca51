use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IdError;

type HmacSha256 = Hmac<Sha256>;

/// Salted stand-in for an identifier in emitted artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PseudonymToken {
    /// 64 lowercase hex characters (HMAC-SHA256).
    pub token: String,
    /// First 8 hex characters of SHA-256(salt).
    pub salt_id: String,
}

/// Keyed hash of `id` under `salt`.
pub fn pseudonymize(id: &str, salt: &[u8]) -> Result<PseudonymToken, IdError> {
    if salt.is_empty() {
        return Err(IdError::EmptySalt);
    }
    if id.len() != 13 || !id.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IdError::BadIdLength(id.to_string()));
    }
    let mut mac = HmacSha256::new_from_slice(salt).expect("HMAC accepts keys of any length");
    mac.update(id.as_bytes());
    let token = hex::encode(mac.finalize().into_bytes());
    let salt_id = hex::encode(&Sha256::digest(salt)[..4]);
    Ok(PseudonymToken { token, salt_id })
}
