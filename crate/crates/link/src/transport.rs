//! Byte-stream transports.
//!
//! Sessions run over anything that is `Read + Write`; `std::net::TcpStream`
//! works directly. [`memory_pipe`] gives a connected in-process pair.

use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};

/// One end of an in-memory duplex pipe.
#[derive(Debug)]
pub struct PipeEnd {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    pos: usize,
}

/// Two connected pipe ends. Dropping one end makes the other read EOF.
pub fn memory_pipe() -> (PipeEnd, PipeEnd) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (
        PipeEnd { tx: Some(a_tx), rx: a_rx, pending: Vec::new(), pos: 0 },
        PipeEnd { tx: Some(b_tx), rx: b_rx, pending: Vec::new(), pos: 0 },
    )
}

impl PipeEnd {
    /// Closes the sending direction; the peer sees EOF after draining.
    pub fn shutdown(&mut self) {
        self.tx = None;
    }
}

impl Read for PipeEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        while self.pos == self.pending.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for PipeEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let tx = self.tx.as_ref().ok_or_else(|| io::Error::from(io::ErrorKind::BrokenPipe))?;
        if !buf.is_empty() {
            tx.send(buf.to_vec()).map_err(|_| io::Error::from(io::ErrorKind::BrokenPipe))?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// FNV-1a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Digest(u64);

impl Digest {
    fn new() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }
    fn feed(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
}

/// Counts and fingerprints the bytes passing through a transport.
#[derive(Debug)]
pub struct Metered<T> {
    inner: T,
    sent: u64,
    received: u64,
    sent_digest: Digest,
    received_digest: Digest,
}

impl<T> Metered<T> {
    pub fn new(inner: T) -> Self {
        Metered { inner, sent: 0, received: 0, sent_digest: Digest::new(), received_digest: Digest::new() }
    }

    pub fn bytes_sent(&self) -> u64 {
        self.sent
    }

    pub fn bytes_received(&self) -> u64 {
        self.received
    }

    /// FNV-1a over everything written.
    pub fn sent_digest(&self) -> u64 {
        self.sent_digest.0
    }

    /// FNV-1a over everything read.
    pub fn received_digest(&self) -> u64 {
        self.received_digest.0
    }

    pub fn get_mut(&mut self) -> &mut T {
        &mut self.inner
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: Read> Read for Metered<T> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.received += n as u64;
        self.received_digest.feed(&buf[..n]);
        Ok(n)
    }
}

impl<T: Write> Write for Metered<T> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.sent += n as u64;
        self.sent_digest.feed(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipe_carries_bytes_and_signals_eof() {
        let (mut a, mut b) = memory_pipe();
        a.write_all(b"hello").unwrap();
        a.write_all(b" world").unwrap();
        a.shutdown();
        let mut got = String::new();
        b.read_to_string(&mut got).unwrap();
        assert_eq!(got, "hello world");
        drop(a);
        assert!(b.write_all(b"x").is_err());
    }

    #[test]
    fn metering_counts_both_directions() {
        let (a, b) = memory_pipe();
        let mut a = Metered::new(a);
        let mut b = Metered::new(b);
        a.write_all(&[1, 2, 3]).unwrap();
        let mut buf = [0u8; 3];
        b.read_exact(&mut buf).unwrap();
        assert_eq!((a.bytes_sent(), b.bytes_received()), (3, 3));
        assert_eq!(a.sent_digest(), b.received_digest());
    }
}
