//! Emulated 5G transport: wire codec, link profiles, delivery queue and
//! capture files.

pub mod capture;
pub mod codec;
pub mod link;
pub mod queue;

pub use capture::{read_capture, CaptureError, CaptureWriter};
pub use codec::{
    decode, decode_frame, decode_warning, encode, encode_warning, encoded_len, CodecError, Frame, ObjectRecord,
    PerceptionMessage, WarningMessage, HEADER_LEN, MAX_RECORDS, RECORD_LEN,
};
pub use link::{InTransit, LinkProfile};
pub use queue::{Delivery, DeliveryQueue, QueueStats};

/// Wrap-aware sequence comparison: true iff `a` was issued before `b`.
pub fn seq_precedes(a: u32, b: u32) -> bool {
    a != b && b.wrapping_sub(a) < 1 << 31
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_wraps() {
        assert!(seq_precedes(1, 2));
        assert!(!seq_precedes(2, 1));
        assert!(seq_precedes(u32::MAX, 0));
        assert!(!seq_precedes(5, 5));
    }
}
