//! Little-endian helpers for the versioned binary model files.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) struct Encoder<W: Write> {
    out: W,
}

impl<W: Write> Encoder<W> {
    pub fn new(out: W) -> Self {
        Encoder { out }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.out.write_all(b)?;
        Ok(())
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u16(&mut self, v: u16) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn len(&mut self, n: usize) -> Result<()> {
        let n = u32::try_from(n).map_err(|_| Error::Format(format!("length {n} exceeds u32")))?;
        self.u32(n)
    }

    /// u32 byte length followed by UTF-8 bytes.
    pub fn str(&mut self, s: &str) -> Result<()> {
        self.len(s.len())?;
        self.bytes(s.as_bytes())
    }
}

pub(crate) struct Decoder<R: Read> {
    input: R,
}

impl<R: Read> Decoder<R> {
    pub fn new(input: R) -> Self {
        Decoder { input }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.input
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
        Ok(buf)
    }

    pub fn magic(&mut self, expected: &[u8; 4], version: u16) -> Result<()> {
        let got: [u8; 4] = self.array()?;
        if &got != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(expected)
            )));
        }
        let v = self.u16()?;
        if v != version {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        let mut buf = Vec::new();
        (&mut self.input)
            .take(n as u64)
            .read_to_end(&mut buf)
            .map_err(|e| Error::Format(e.to_string()))?;
        if buf.len() != n {
            return Err(Error::Format("truncated string".into()));
        }
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }

    /// Errors unless the input is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.input.read(&mut rest)? {
            0 => Ok(()),
            _ => Err(Error::Format("trailing bytes".into())),
        }
    }
}
