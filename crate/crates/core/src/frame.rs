//! Five-byte motor frame sent from the neural controller to the pressure
//! controller.
//!
//! ```text
//! byte 0   sync, always 0xA5
//! byte 1   sequence number (wraps at 256)
//! byte 2   command bits 0..7, little-endian low byte
//! byte 3   command bits 8..15, high byte
//! byte 4   XOR of bytes 0..=3
//! ```
//!
//! Command bits: 0 RU1, 1 RU2, 2 RU3, 3 B10, 4 B38, 5 B43/B45, 6 opener,
//! 7 closer, 8 I2 drive (B31/B32). Bits 9..15 are reserved and must be zero.
//! The timestamp is not transmitted; the receiver stamps frames on arrival.

use crate::error::FrameError;
use crate::neural::{MotorCommands, MotorFrame};

pub const FRAME_SYNC: u8 = 0xA5;
pub const FRAME_LEN: usize = 5;

pub fn encode_motor_frame(f: &MotorFrame) -> [u8; FRAME_LEN] {
    let [lo, hi] = f.commands.bits().to_le_bytes();
    let body = [FRAME_SYNC, f.seq, lo, hi];
    let checksum = body.iter().fold(0u8, |acc, b| acc ^ b);
    [body[0], body[1], body[2], body[3], checksum]
}

/// Decode a frame, stamping it with the receiver's clock.
pub fn decode_motor_frame(bytes: &[u8], timestamp_ms: f64) -> Result<MotorFrame, FrameError> {
    let bytes: &[u8; FRAME_LEN] = bytes.try_into().map_err(|_| FrameError::Length(bytes.len()))?;
    if bytes[0] != FRAME_SYNC {
        return Err(FrameError::Sync(bytes[0]));
    }
    let expected = bytes[..4].iter().fold(0u8, |acc, b| acc ^ b);
    if expected != bytes[4] {
        return Err(FrameError::Checksum { expected, found: bytes[4] });
    }
    let bits = u16::from_le_bytes([bytes[2], bytes[3]]);
    let commands = MotorCommands::from_bits(bits).ok_or(FrameError::ReservedBits(bits))?;
    Ok(MotorFrame { commands, seq: bytes[1], timestamp_ms })
}
