//! Blocking client for the environment server.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use crate::env::{Observation, TimeStep};
use crate::error::{Error, Result};
use crate::frame::{Frame, CHANNELS};

use super::codec::{read_message, write_message, Message};
use super::{MakeRequest, Request, Response, SpecResponse, PROTOCOL_VERSION};

/// One connection, one environment. Not meant to be shared across threads.
pub struct Client<R: Read, W: Write> {
    reader: R,
    writer: W,
    spec: Option<SpecResponse>,
}

pub type TcpClient = Client<BufReader<TcpStream>, BufWriter<TcpStream>>;

impl TcpClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Client::handshake(BufReader::new(stream.try_clone()?), BufWriter::new(stream))
    }
}

impl<R: Read, W: Write> Client<R, W> {
    /// Wraps an open byte stream and exchanges `hello`.
    pub fn handshake(reader: R, writer: W) -> Result<Self> {
        let mut client = Client { reader, writer, spec: None };
        match client.request(&Request::Hello { version: PROTOCOL_VERSION })?.header {
            Response::Hello { version } if version == PROTOCOL_VERSION => Ok(client),
            other => Err(unexpected("hello", &other)),
        }
    }

    pub fn spec(&self) -> Option<&SpecResponse> {
        self.spec.as_ref()
    }

    fn request(&mut self, request: &Request) -> Result<Message<Response>> {
        write_message(&mut self.writer, request, &[])?;
        let msg = read_message(&mut self.reader)?
            .ok_or_else(|| Error::Protocol("server closed the connection".into()))?;
        if let Response::Error { message } = &msg.header {
            return Err(Error::Protocol(format!("server error: {message}")));
        }
        Ok(msg)
    }

    pub fn make(&mut self, request: MakeRequest) -> Result<SpecResponse> {
        match self.request(&Request::Make(request))?.header {
            Response::Spec(spec) => {
                self.spec = Some(spec.clone());
                Ok(spec)
            }
            other => Err(unexpected("spec", &other)),
        }
    }

    pub fn reset(&mut self) -> Result<TimeStep> {
        let msg = self.request(&Request::Reset {})?;
        timestep_from_wire(msg)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<TimeStep> {
        let msg = self.request(&Request::Step { action: action.to_vec() })?;
        timestep_from_wire(msg)
    }

    pub fn close(mut self) -> Result<()> {
        match self.request(&Request::Close {})?.header {
            Response::Closed {} => Ok(()),
            other => Err(unexpected("closed", &other)),
        }
    }
}

fn unexpected(wanted: &str, got: &Response) -> Error {
    Error::Protocol(format!("expected {wanted} response, got {got:?}"))
}

/// Rebuilds a time step from its wire form.
pub fn timestep_from_wire(msg: Message<Response>) -> Result<TimeStep> {
    let Response::TimeStep(h) = msg.header else {
        return Err(unexpected("time_step", &msg.header));
    };
    let observation = match h.state {
        Some(state) => Observation::State(state),
        None => {
            if h.channels != CHANNELS {
                return Err(Error::Protocol(format!("field 'channels': expected {CHANNELS}, got {}", h.channels)));
            }
            Observation::Pixels(Frame::from_raw(h.width, h.height, msg.payload)?)
        }
    };
    Ok(TimeStep { observation, reward: h.reward, discount: h.discount, last: h.last })
}
