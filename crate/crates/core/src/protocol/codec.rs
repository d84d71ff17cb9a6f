//! Message framing.

use std::io::{self, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Upper bound on a single message body; larger lengths are rejected
/// before allocating.
pub const MAX_MESSAGE_LEN: usize = 64 << 20;

/// A decoded message: JSON header plus raw payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Message<T> {
    pub header: T,
    pub payload: Vec<u8>,
}

/// Full wire bytes of a message, length prefix included.
pub fn encode_message<T: Serialize>(header: &T, payload: &[u8]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header)?;
    let len = json.len() + 1 + payload.len();
    if len > MAX_MESSAGE_LEN {
        return Err(Error::Protocol(format!("message of {len} bytes exceeds the limit")));
    }
    let mut out = Vec::with_capacity(4 + len);
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.extend_from_slice(&json);
    out.push(b'\n');
    out.extend_from_slice(payload);
    Ok(out)
}

/// Splits a message body (without the length prefix) into header and payload.
pub fn decode_message<T: DeserializeOwned>(body: &[u8]) -> Result<Message<T>> {
    let nl = body
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Protocol("header is not newline terminated".into()))?;
    let text = std::str::from_utf8(&body[..nl]).map_err(|e| Error::Protocol(format!("header is not UTF-8: {e}")))?;
    let header = serde_json::from_str(text).map_err(|e| Error::Protocol(format!("bad header: {e}")))?;
    Ok(Message { header, payload: body[nl + 1..].to_vec() })
}

pub fn write_message<W: Write, T: Serialize>(w: &mut W, header: &T, payload: &[u8]) -> Result<()> {
    w.write_all(&encode_message(header, payload)?)?;
    w.flush()?;
    Ok(())
}

/// Reads one message. `Ok(None)` on a clean end of stream before the length
/// prefix; a stream ending inside a message is an error.
pub fn read_message<R: Read, T: DeserializeOwned>(r: &mut R) -> Result<Option<Message<T>>> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("stream ended inside the length prefix".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_MESSAGE_LEN {
        return Err(Error::Protocol(format!("message length {len} exceeds the limit")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Protocol(format!("truncated message: expected {len} bytes")),
        _ => e.into(),
    })?;
    decode_message(&body).map(Some)
}
