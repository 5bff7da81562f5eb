//! Stub predictor server for exercising the protocol without a model.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener};
use std::thread::{self, JoinHandle};

use super::protocol::{Message, PredictRequest, WireTensor, PROTOCOL_VERSION};
use crate::error::{Error, Result};
use crate::mapping::{CHANNELS, LOCAL_SIZE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EchoMode {
    /// Constant navigation cost, zero occupancy.
    Uniform(f32),
    /// Navigation cost = local channel 0, occupancy = global channel 0.
    Mirror,
    /// Answers with a `[1, 140, 139]` navigation tensor.
    WrongShape,
    /// Never answers predictions.
    Silent,
    /// Closes the connection after this many predictions.
    CloseAfter(usize),
    /// Claims this protocol version in the handshake.
    Version(u32),
}

/// Serves one connection until the peer closes it.
pub fn serve_echo<R: BufRead, W: Write>(reader: R, mut writer: W, mode: EchoMode) -> Result<()> {
    let mut lines = reader.lines();
    let send = |w: &mut W, m: &Message| -> Result<()> {
        w.write_all(m.to_line()?.as_bytes())?;
        w.flush()?;
        Ok(())
    };
    let Some(first) = lines.next() else {
        return Ok(());
    };
    match Message::from_line(&first?) {
        Ok(Message::Hello { version }) if version == PROTOCOL_VERSION => {}
        Ok(Message::Hello { version }) => {
            let message = format!("unsupported protocol version {version}");
            send(&mut writer, &Message::Error { message })?;
            return Ok(());
        }
        _ => {
            let message = "expected hello".to_string();
            send(&mut writer, &Message::Error { message })?;
            return Ok(());
        }
    }
    let version = match mode {
        EchoMode::Version(v) => v,
        _ => PROTOCOL_VERSION,
    };
    send(&mut writer, &Message::Hello { version })?;

    let mut served = 0usize;
    for line in lines {
        let reply = match Message::from_line(&line?) {
            Ok(Message::Predict(req)) => {
                if let EchoMode::CloseAfter(n) = mode {
                    if served >= n {
                        return Ok(());
                    }
                }
                served += 1;
                if mode == EchoMode::Silent {
                    continue;
                }
                respond(&req, mode).unwrap_or_else(|e| Message::Error { message: e.to_string() })
            }
            Ok(other) => Message::Error {
                message: format!("unexpected message {other:?}").chars().take(200).collect(),
            },
            Err(e) => Message::Error { message: e.to_string() },
        };
        send(&mut writer, &reply)?;
    }
    Ok(())
}

fn respond(req: &PredictRequest, mode: EchoMode) -> Result<Message> {
    let n = LOCAL_SIZE;
    let plane = n * n;
    let expect = [CHANNELS, n, n];
    for (name, t) in [("local", &req.local), ("global", &req.global)] {
        if t.shape != expect {
            return Err(Error::Protocol(format!("{name} shape {:?}, expected {expect:?}", t.shape)));
        }
    }
    Ok(match mode {
        EchoMode::Mirror => {
            let local = req.local.decode()?;
            let global = req.global.decode()?;
            Message::Costmap {
                nav: WireTensor::encode(&[1, n, n], &local[..plane]),
                occ: WireTensor::encode(&[1, n, n], &global[..plane]),
            }
        }
        EchoMode::WrongShape => Message::Costmap {
            nav: WireTensor::encode(&[1, n, n - 1], &vec![0.5; n * (n - 1)]),
            occ: WireTensor::encode(&[1, n, n], &vec![0.0; plane]),
        },
        EchoMode::Uniform(v) => Message::Costmap {
            nav: WireTensor::encode(&[1, n, n], &vec![v; plane]),
            occ: WireTensor::encode(&[1, n, n], &vec![0.0; plane]),
        },
        _ => Message::Costmap {
            nav: WireTensor::encode(&[1, n, n], &vec![0.5; plane]),
            occ: WireTensor::encode(&[1, n, n], &vec![0.0; plane]),
        },
    })
}

/// Binds `addr` (port 0 for any) and serves every connection on its own
/// thread, forever.
pub fn spawn_tcp_echo(addr: &str, mode: EchoMode) -> Result<(SocketAddr, JoinHandle<()>)> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let handle = thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            thread::spawn(move || {
                let Ok(read) = stream.try_clone() else { return };
                if let Err(e) = serve_echo(BufReader::new(read), stream, mode) {
                    log::debug!("echo connection ended: {e}");
                }
            });
        }
    });
    Ok((local, handle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::protocol::Rays;

    fn predict_line() -> String {
        let shape = [CHANNELS, LOCAL_SIZE, LOCAL_SIZE];
        let zeros = vec![0.0f32; CHANNELS * LOCAL_SIZE * LOCAL_SIZE];
        Message::Predict(PredictRequest {
            episode: 0,
            step: 0,
            target: 1,
            orientation_bin: 0,
            local: WireTensor::encode(&shape, &zeros),
            global: WireTensor::encode(&shape, &zeros),
            rays: Rays {
                depth: vec![],
                class: vec![],
            },
        })
        .to_line()
        .unwrap()
    }

    fn replies(input: String, mode: EchoMode) -> Vec<Message> {
        let mut out = Vec::new();
        serve_echo(input.as_bytes(), &mut out, mode).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| Message::from_line(l).unwrap())
            .collect()
    }

    #[test]
    fn handshake_then_uniform_costmap() {
        let hello = Message::Hello { version: PROTOCOL_VERSION }.to_line().unwrap();
        let got = replies(hello + &predict_line(), EchoMode::Uniform(0.5));
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], Message::Hello { version: PROTOCOL_VERSION });
        let Message::Costmap { nav, occ } = &got[1] else {
            panic!("{:?}", got[1]);
        };
        assert_eq!(nav.shape, vec![1, LOCAL_SIZE, LOCAL_SIZE]);
        assert!(nav.decode().unwrap().iter().all(|&v| v == 0.5));
        assert!(occ.decode().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_openings_get_an_error() {
        let wrong = Message::Hello { version: 9 }.to_line().unwrap();
        assert!(matches!(replies(wrong, EchoMode::Mirror)[..], [Message::Error { .. }]));
        assert!(matches!(replies(predict_line(), EchoMode::Mirror)[..], [Message::Error { .. }]));
        assert!(replies(String::new(), EchoMode::Mirror).is_empty());
    }

    #[test]
    fn garbage_after_the_handshake_is_answered_with_an_error() {
        let hello = Message::Hello { version: PROTOCOL_VERSION }.to_line().unwrap();
        let got = replies(hello + "{not json\n", EchoMode::Mirror);
        assert!(matches!(got[1], Message::Error { .. }));
    }
}
