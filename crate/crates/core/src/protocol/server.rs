//! Request handling over any byte stream, with TCP and stdio front ends.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crate::background::BackgroundSet;
use crate::config::DifficultyConfig;
use crate::env::{EnvConfig, Environment, Observation, ObservationMode, TimeStep, DEFAULT_RENDER_SIZE};
use crate::error::{Error, Result};
use crate::frame::CHANNELS;

use super::codec::{read_message, write_message};
use super::{MakeRequest, Request, Response, SpecResponse, TimeStepHeader, PROTOCOL_VERSION};

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    /// Video set handed to every environment; `None` uses the procedural set.
    pub backgrounds: Option<Arc<BackgroundSet>>,
}

/// Builds the environment a `make` request describes.
pub fn env_from_request(req: &MakeRequest, options: &ServerOptions) -> Result<Environment> {
    let size = (
        req.width.unwrap_or(DEFAULT_RENDER_SIZE.0),
        req.height.unwrap_or(DEFAULT_RENDER_SIZE.1),
    );
    let config = match (req.preset, req.config) {
        (Some(preset), None) => EnvConfig::from_preset(req.task, preset, req.dynamic, req.seed),
        (None, Some(c)) => {
            let difficulty = DifficultyConfig {
                beta_cam: c.beta_cam,
                beta_rgb: c.beta_rgb,
                beta_bg: c.beta_bg,
                num_videos: c.num_videos,
                dynamic: req.dynamic,
                seed: req.seed,
            };
            EnvConfig { camera_backwards: c.camera_backwards, ..EnvConfig::new(req.task, difficulty) }
        }
        _ => return Err(Error::Protocol("make needs exactly one of preset and config".into())),
    };
    let config = config
        .with_render_size(size)
        .with_observation(req.observation.unwrap_or_default());
    Environment::new(config, options.backgrounds.clone())
}

/// Splits a time step into its wire header and payload.
pub fn timestep_to_wire(ts: &TimeStep) -> (TimeStepHeader, &[u8]) {
    let (width, height, channels, state, payload): (_, _, _, _, &[u8]) = match &ts.observation {
        Observation::Pixels(f) => (f.size().0, f.size().1, CHANNELS, None, f.data()),
        Observation::State(v) => (0, 0, 0, Some(v.clone()), &[]),
    };
    let header = TimeStepHeader { reward: ts.reward, discount: ts.discount, last: ts.last, width, height, channels, state };
    (header, payload)
}

fn spec_response(env: &Environment) -> SpecResponse {
    let spec = env.spec();
    let (width, height, channels) = match env.config().observation {
        ObservationMode::Pixels => (env.config().render_size.0, env.config().render_size.1, CHANNELS),
        ObservationMode::State => (0, 0, 0),
    };
    SpecResponse {
        task: spec.name,
        action_dim: spec.action_dim,
        action_repeat: spec.action_repeat,
        episode_steps: spec.episode_steps,
        width,
        height,
        channels,
        state_dim: env.task().observation_dim(),
    }
}

enum Outcome {
    Reply(Response, Vec<u8>),
    /// Reply, then close the connection.
    Final(Response),
}

struct Session<'a> {
    options: &'a ServerOptions,
    greeted: bool,
    env: Option<Environment>,
}

impl Session<'_> {
    fn handle(&mut self, request: Request) -> Outcome {
        let fatal = |message: String| Outcome::Final(Response::Error { message });
        let recoverable = |e: Error| Outcome::Reply(Response::Error { message: e.to_string() }, Vec::new());
        match request {
            Request::Hello { version } if version == PROTOCOL_VERSION => {
                self.greeted = true;
                Outcome::Reply(Response::Hello { version: PROTOCOL_VERSION }, Vec::new())
            }
            Request::Hello { version } => {
                fatal(format!("protocol version {version} not supported; server speaks {PROTOCOL_VERSION}"))
            }
            _ if !self.greeted => fatal("expected hello as the first message".into()),
            Request::Close {} => Outcome::Final(Response::Closed {}),
            Request::Make(req) => match env_from_request(&req, self.options) {
                Ok(env) => {
                    let spec = spec_response(&env);
                    self.env = Some(env);
                    Outcome::Reply(Response::Spec(spec), Vec::new())
                }
                Err(e) => recoverable(e),
            },
            Request::Reset {} | Request::Step { .. } => {
                let Some(env) = self.env.as_mut() else {
                    return recoverable(Error::Protocol("no environment; send make first".into()));
                };
                let ts = match request {
                    Request::Step { action } => env.step(&action),
                    _ => env.reset(),
                };
                match ts {
                    Ok(ts) => {
                        let (header, payload) = timestep_to_wire(&ts);
                        Outcome::Reply(Response::TimeStep(header), payload.to_vec())
                    }
                    Err(e) => recoverable(e),
                }
            }
        }
    }
}

/// Serves one connection until `close`, end of stream, or a fatal error.
/// Malformed or truncated messages get an error response and end the
/// session; environment errors (bad action, step after the last step) get an
/// error response and the session continues.
pub fn serve_connection<R: Read, W: Write>(reader: &mut R, writer: &mut W, options: &ServerOptions) -> Result<()> {
    let mut session = Session { options, greeted: false, env: None };
    loop {
        let request = match read_message::<_, Request>(reader) {
            Ok(Some(msg)) => msg.header,
            Ok(None) => return Ok(()),
            Err(e) => {
                let _ = write_message(writer, &Response::Error { message: e.to_string() }, &[]);
                return Err(e);
            }
        };
        match session.handle(request) {
            Outcome::Reply(response, payload) => write_message(writer, &response, &payload)?,
            Outcome::Final(response) => {
                write_message(writer, &response, &[])?;
                return Ok(());
            }
        }
    }
}

/// Serves a single session on stdin/stdout.
pub fn serve_stdio(options: &ServerOptions) -> Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut reader = BufReader::new(stdin.lock());
    let mut writer = BufWriter::new(stdout.lock());
    serve_connection(&mut reader, &mut writer, options)
}

/// TCP server; one thread and one environment per connection.
pub struct Server {
    listener: TcpListener,
    options: Arc<ServerOptions>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, options: ServerOptions) -> Result<Self> {
        Ok(Server { listener: TcpListener::bind(addr)?, options: Arc::new(options) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections forever.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("accept failed: {e}");
                    continue;
                }
            };
            let options = Arc::clone(&self.options);
            thread::spawn(move || {
                if let Err(e) = handle_stream(stream, &options) {
                    eprintln!("connection closed with error: {e}");
                }
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> JoinHandle<Result<()>> {
        thread::spawn(move || self.run())
    }
}

fn handle_stream(stream: TcpStream, options: &ServerOptions) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    serve_connection(&mut reader, &mut writer, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;
    use crate::physics::TaskName;
    use crate::protocol::codec::{encode_message, Message};

    fn run(requests: &[Request]) -> Vec<Message<Response>> {
        let mut input = Vec::new();
        for r in requests {
            input.extend(encode_message(r, &[]).unwrap());
        }
        let mut out = Vec::new();
        let _ = serve_connection(&mut &input[..], &mut out, &ServerOptions::default());
        let mut cursor = &out[..];
        let mut msgs = Vec::new();
        while let Some(m) = read_message(&mut cursor).unwrap() {
            msgs.push(m);
        }
        msgs
    }

    fn make() -> Request {
        Request::Make(MakeRequest::preset(TaskName::CartpoleSwingup, Preset::Easy, true, 4).with_size(16, 12))
    }

    #[test]
    fn session_flow() {
        let msgs = run(&[Request::Hello { version: PROTOCOL_VERSION }, make(), Request::Reset {}, Request::Step { action: vec![0.3] }, Request::Close {}]);
        assert_eq!(msgs.len(), 5);
        assert!(matches!(msgs[1].header, Response::Spec(SpecResponse { action_dim: 1, width: 16, height: 12, .. })));
        for m in &msgs[2..4] {
            assert!(matches!(m.header, Response::TimeStep(_)));
            assert_eq!(m.payload.len(), 16 * 12 * 3);
        }
        assert_eq!(msgs[4].header, Response::Closed {});
    }

    #[test]
    fn version_mismatch_rejected() {
        let msgs = run(&[Request::Hello { version: 99 }, make()]);
        assert_eq!(msgs.len(), 1);
        assert!(matches!(msgs[0].header, Response::Error { .. }));
    }

    #[test]
    fn hello_required() {
        let msgs = run(&[make()]);
        assert_eq!(msgs.len(), 1);
        assert!(matches!(msgs[0].header, Response::Error { .. }));
    }

    #[test]
    fn env_errors_keep_session() {
        let msgs = run(&[
            Request::Hello { version: PROTOCOL_VERSION },
            Request::Reset {},
            make(),
            Request::Reset {},
            Request::Step { action: vec![0.0, 1.0] },
            Request::Step { action: vec![0.0] },
        ]);
        assert_eq!(msgs.len(), 6);
        assert!(matches!(msgs[1].header, Response::Error { .. }));
        assert!(matches!(msgs[4].header, Response::Error { .. }));
        assert!(matches!(msgs[5].header, Response::TimeStep(_)));
    }

    #[test]
    fn state_observations_carry_vector() {
        let mut req = MakeRequest::preset(TaskName::ReacherEasy, Preset::None, false, 0);
        req.observation = Some(ObservationMode::State);
        let msgs = run(&[Request::Hello { version: PROTOCOL_VERSION }, Request::Make(req), Request::Reset {}]);
        match &msgs[2].header {
            Response::TimeStep(h) => assert_eq!(h.state.as_ref().unwrap().len(), 8),
            other => panic!("{other:?}"),
        }
        assert!(msgs[2].payload.is_empty());
    }
}
