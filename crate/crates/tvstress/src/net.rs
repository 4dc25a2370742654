//! Line-oriented TCP helpers shared by every client and server.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

/// Longest request or reply line accepted.
pub const MAX_LINE: usize = 64 * 1024;

pub fn resolve(endpoint: &str) -> io::Result<SocketAddr> {
    endpoint
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, format!("cannot resolve {endpoint}")))
}

pub fn connect(endpoint: &str, timeout: Duration) -> io::Result<TcpStream> {
    let stream = TcpStream::connect_timeout(&resolve(endpoint)?, timeout)?;
    stream.set_nodelay(true)?;
    Ok(stream)
}

/// Reads one LF-terminated line without the terminator (a trailing CR is
/// dropped too). `None` on a clean EOF before any byte.
pub fn read_line<R: BufRead + ?Sized>(reader: &mut R) -> io::Result<Option<String>> {
    let mut buf = Vec::new();
    let n = Read::take(reader, MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        let kind = if buf.len() > MAX_LINE {
            io::ErrorKind::InvalidData
        } else {
            io::ErrorKind::UnexpectedEof
        };
        return Err(io::Error::new(kind, "incomplete line"));
    }
    buf.pop();
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    String::from_utf8(buf)
        .map(Some)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "line is not UTF-8"))
}

/// Like [`read_line`], but EOF is an error.
pub fn expect_line<R: BufRead + ?Sized>(reader: &mut R) -> io::Result<String> {
    read_line(reader)?.ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "connection closed"))
}

pub fn write_line<W: Write>(w: &mut W, line: &str) -> io::Result<()> {
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    w.write_all(&buf)?;
    w.flush()
}

/// A connected stream with a buffered reader over a clone of it.
#[derive(Debug)]
pub struct LineConn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl LineConn {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        let writer = stream.try_clone()?;
        Ok(LineConn {
            reader: BufReader::new(stream),
            writer,
        })
    }

    pub fn open(endpoint: &str, connect_timeout: Duration, io_timeout: Option<Duration>) -> io::Result<Self> {
        let stream = connect(endpoint, connect_timeout)?;
        stream.set_read_timeout(io_timeout)?;
        stream.set_write_timeout(io_timeout)?;
        LineConn::new(stream)
    }

    pub fn send(&mut self, line: &str) -> io::Result<()> {
        write_line(&mut self.writer, line)
    }

    pub fn recv(&mut self) -> io::Result<String> {
        expect_line(&mut self.reader)
    }

    pub fn recv_opt(&mut self) -> io::Result<Option<String>> {
        read_line(&mut self.reader)
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.writer.set_read_timeout(t)
    }

    pub fn shutdown(&self) {
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
    }
}
