//! Small stable hash used for state digests and payload fingerprints.
//!
//! Traces and CSV reports must be byte-identical across repeated runs and
//! across platforms, so digests cannot rely on `std`'s `DefaultHasher`
//! (whose algorithm is unspecified). FNV-1a over explicitly serialized
//! fields is tiny, stable, and good enough for fingerprinting — these
//! digests detect divergence between runs, they are not collision-resistant
//! in an adversarial sense.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Incremental FNV-1a hasher over explicitly fed bytes.
#[derive(Clone, Copy, Debug)]
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(FNV_OFFSET)
    }

    pub fn write_u8(&mut self, byte: u8) -> &mut Self {
        self.0 ^= u64::from(byte);
        self.0 = self.0.wrapping_mul(FNV_PRIME);
        self
    }

    pub fn write_u64(&mut self, value: u64) -> &mut Self {
        for byte in value.to_le_bytes() {
            self.write_u8(byte);
        }
        self
    }

    pub fn write_bool(&mut self, value: bool) -> &mut Self {
        self.write_u8(u8::from(value))
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Fingerprint a per-vertex payload vector (`None` marks an unset slot).
pub fn payload_digest(payload: &[Option<u64>]) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(payload.len() as u64);
    for entry in payload {
        match entry {
            Some(v) => h.write_u8(1).write_u64(*v),
            None => h.write_u8(0),
        };
    }
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vector() {
        // FNV-1a of the bytes "a", "ab" — classic published test vectors.
        let mut h = Fnv1a::new();
        h.write_u8(b'a');
        assert_eq!(h.finish(), 0xaf63_dc4c_8601_ec8c);
        h.write_u8(b'b');
        assert_eq!(h.finish(), 0x089c_4407_b545_986a);
    }

    #[test]
    fn payload_distinguishes_none_from_zero() {
        assert_ne!(payload_digest(&[None]), payload_digest(&[Some(0)]));
        assert_ne!(payload_digest(&[None, None]), payload_digest(&[None]));
    }

    #[test]
    fn payload_is_order_sensitive() {
        assert_ne!(
            payload_digest(&[Some(1), Some(2)]),
            payload_digest(&[Some(2), Some(1)])
        );
    }
}
