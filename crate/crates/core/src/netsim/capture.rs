//! `.camp` capture files: wire frames, each prefixed by its length as u32 LE.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("capture truncated at byte {0}")]
    Truncated(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct CaptureWriter<W: Write> {
    inner: W,
    frames: u64,
}

impl<W: Write> CaptureWriter<W> {
    pub fn new(inner: W) -> Self {
        CaptureWriter { inner, frames: 0 }
    }

    pub fn write_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        let len = u32::try_from(frame.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too long"))?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(frame)?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn read_capture(bytes: &[u8]) -> Result<Vec<Vec<u8>>, CaptureError> {
    let mut frames = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let Some(len_bytes) = bytes.get(pos..pos + 4) else {
            return Err(CaptureError::Truncated(pos));
        };
        let len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        let start = pos + 4;
        let Some(frame) = bytes.get(start..start + len) else {
            return Err(CaptureError::Truncated(pos));
        };
        frames.push(frame.to_vec());
        pos = start + len;
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut w = CaptureWriter::new(Vec::new());
        w.write_frame(b"abc").unwrap();
        w.write_frame(b"").unwrap();
        assert_eq!(w.frames(), 2);
        let bytes = w.finish().unwrap();
        assert_eq!(read_capture(&bytes).unwrap(), vec![b"abc".to_vec(), vec![]]);
        assert!(matches!(read_capture(&bytes[..5]), Err(CaptureError::Truncated(0))));
    }
}
