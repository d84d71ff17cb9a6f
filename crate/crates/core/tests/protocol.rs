use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::thread;

use rand::Rng as _;

use distraxion::env::{make_env, EnvConfig};
use distraxion::protocol::client::TcpClient;
use distraxion::protocol::codec::{encode_message, read_message};
use distraxion::protocol::{MakeRequest, Request, Response, Server, ServerOptions, PROTOCOL_VERSION};
use distraxion::rng::rng_from_seed;
use distraxion::{Preset, TaskName};

fn start() -> SocketAddr {
    let server = Server::bind("127.0.0.1:0", ServerOptions::default()).unwrap();
    let addr = server.local_addr().unwrap();
    server.spawn();
    addr
}

fn trajectory_matches_local(addr: SocketAddr, task: TaskName, seed: u64, steps: usize) -> Vec<Vec<f64>> {
    let mut remote = TcpClient::connect(addr).unwrap();
    remote.make(MakeRequest::preset(task, Preset::Easy, true, seed).with_size(32, 32)).unwrap();
    let mut local = make_env(EnvConfig::from_preset(task, Preset::Easy, true, seed).with_render_size((32, 32))).unwrap();
    assert_eq!(remote.reset().unwrap(), local.reset().unwrap());
    let mut rng = rng_from_seed(seed);
    let mut states = Vec::new();
    for _ in 0..steps {
        let a: Vec<f64> = (0..local.spec().action_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = remote.step(&a).unwrap();
        assert_eq!(r, local.step(&a).unwrap());
        states.push(local.physics_observation().unwrap());
    }
    remote.close().unwrap();
    states
}

#[test]
fn concurrent_clients_are_isolated() {
    let addr = start();
    let handles: Vec<_> = [3u64, 4]
        .into_iter()
        .map(|seed| thread::spawn(move || trajectory_matches_local(addr, TaskName::ReacherEasy, seed, 40)))
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_ne!(results[0], results[1]);
}

fn read_response(stream: &mut TcpStream) -> Option<Response> {
    read_message::<_, Response>(stream).unwrap().map(|m| m.header)
}

#[test]
fn truncated_message_gets_error_and_server_survives() {
    let addr = start();
    let mut raw = TcpStream::connect(addr).unwrap();
    raw.write_all(&encode_message(&Request::Hello { version: PROTOCOL_VERSION }, &[]).unwrap()).unwrap();
    assert!(matches!(read_response(&mut raw), Some(Response::Hello { .. })));
    let full = encode_message(&Request::Reset {}, &[]).unwrap();
    raw.write_all(&full[..full.len() - 3]).unwrap();
    raw.shutdown(Shutdown::Write).unwrap();
    assert!(matches!(read_response(&mut raw), Some(Response::Error { .. })));
    let mut rest = Vec::new();
    raw.read_to_end(&mut rest).unwrap();
    assert!(rest.is_empty());

    trajectory_matches_local(addr, TaskName::CartpoleSwingup, 1, 5);
}

#[test]
fn malformed_header_closes_connection() {
    let addr = start();
    let mut raw = TcpStream::connect(addr).unwrap();
    let body = b"{\"type\": \"hello\", \"version\": \n";
    raw.write_all(&(body.len() as u32).to_be_bytes()).unwrap();
    raw.write_all(body).unwrap();
    assert!(matches!(read_response(&mut raw), Some(Response::Error { .. })));
    assert!(read_response(&mut raw).is_none());
}

#[test]
fn version_mismatch_is_rejected() {
    let addr = start();
    let mut raw = TcpStream::connect(addr).unwrap();
    raw.write_all(&encode_message(&Request::Hello { version: PROTOCOL_VERSION + 1 }, &[]).unwrap()).unwrap();
    match read_response(&mut raw) {
        Some(Response::Error { message }) => assert!(message.contains("version")),
        other => panic!("{other:?}"),
    }
    assert!(read_response(&mut raw).is_none());
}

#[test]
fn server_errors_surface_in_client() {
    let addr = start();
    let mut client = TcpClient::connect(addr).unwrap();
    assert!(client.reset().is_err());
    client.make(MakeRequest::preset(TaskName::CartpoleSwingup, Preset::None, false, 0).with_size(8, 8)).unwrap();
    client.reset().unwrap();
    let err = client.step(&[0.0, 0.0]).unwrap_err().to_string();
    assert!(err.contains("action"), "{err}");
    client.step(&[0.0]).unwrap();
}

#[test]
fn fuzzed_messages_round_trip() {
    let mut rng = rng_from_seed(2024);
    for i in 0..1000 {
        let request = match i % 5 {
            0 => Request::Hello { version: rng.random() },
            1 => Request::Make(MakeRequest::preset(
                TaskName::ALL[rng.random_range(0..3)],
                Preset::ALL[rng.random_range(0..4)],
                rng.random(),
                rng.random(),
            )),
            2 => Request::Reset {},
            3 => Request::Step { action: (0..rng.random_range(0..4)).map(|_| f64::from_bits(rng.random::<u64>() >> 2)).collect() },
            _ => Request::Close {},
        };
        let payload: Vec<u8> = (0..rng.random_range(0..32)).map(|_| rng.random()).collect();
        let bytes = encode_message(&request, &payload).unwrap();
        let msg = read_message::<_, Request>(&mut &bytes[..]).unwrap().unwrap();
        assert_eq!(msg.header, request);
        assert_eq!(encode_message(&msg.header, &msg.payload).unwrap(), bytes);
    }
}
