mod common;

use std::time::Duration;

use common::XorShift;
use objnav::dataset::smt::{decode, encode};
use objnav::dataset::{read_tensor, write_tensor, Tensor};
use objnav::mapping::{CHANNELS, LOCAL_SIZE};
use objnav::predictor::protocol::{Message, PredictRequest, Rays, WireTensor};
use objnav::predictor::{spawn_tcp_echo, EchoMode, Endpoint, RemotePredictor};
use objnav::Error;
use proptest::prelude::*;

// Reads an SMT byte stream field by field, independently of the decoder.
fn parse_by_hand(bytes: &[u8]) -> (Vec<usize>, Vec<u32>) {
    assert_eq!(&bytes[..4], b"SMT1");
    let rank = bytes[4] as usize;
    let mut at = 5;
    let mut shape = Vec::new();
    for _ in 0..rank {
        shape.push(u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize);
        at += 4;
    }
    let bits = bytes[at..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!((bytes.len() - at) % 4, 0);
    (shape, bits)
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    prop::collection::vec(0usize..6, 0..5).prop_flat_map(|shape| {
        let n = shape.iter().product::<usize>();
        prop::collection::vec(any::<u32>(), n)
            .prop_map(move |bits| Tensor::new(shape.clone(), bits.into_iter().map(f32::from_bits).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn smt_round_trip_is_bit_exact(t in tensor_strategy()) {
        let bytes = encode(&t).unwrap();
        let back = decode(&bytes).unwrap();
        prop_assert!(back.bit_eq(&t));
        let (shape, bits) = parse_by_hand(&bytes);
        prop_assert_eq!(shape, t.shape.clone());
        prop_assert_eq!(bits, t.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wire_tensor_round_trip_is_bit_exact(bits in prop::collection::vec(any::<u32>(), 0..300)) {
        let vals: Vec<f32> = bits.iter().map(|&b| f32::from_bits(b)).collect();
        let t = WireTensor::encode(&[vals.len()], &vals);
        prop_assert_eq!(t.dtype.as_str(), "f32le");
        let back = t.decode().unwrap();
        prop_assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), bits);
        let line = Message::Costmap { nav: t.clone(), occ: t }.to_line().unwrap();
        prop_assert!(line.ends_with('\n') && !line[..line.len() - 1].contains('\n'));
        let is_costmap = matches!(Message::from_line(&line).unwrap(), Message::Costmap { .. });
        prop_assert!(is_costmap);
    }
}

#[test]
fn smt_layout_is_little_endian() {
    let t = Tensor::new(vec![2, 1], vec![1.0, -2.0]).unwrap();
    let bytes = encode(&t).unwrap();
    let want: Vec<u8> = [b"SMT1".as_slice(), &[2], &[2, 0, 0, 0], &[1, 0, 0, 0], &[0, 0, 0x80, 0x3f], &[0, 0, 0, 0xc0]].concat();
    assert_eq!(bytes, want);
    assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode(&extra).is_err());
}

#[test]
fn smt_files_round_trip_full_map_stacks() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = XorShift::new(1);
    for (name, size) in [("local.smt", 140), ("global.smt", 420)] {
        let data = (0..CHANNELS * size * size).map(|_| rng.unit() as f32).collect();
        let t = Tensor::new(vec![CHANNELS, size, size], data).unwrap();
        let path = dir.path().join(name);
        write_tensor(&path, &t).unwrap();
        assert!(read_tensor(&path).unwrap().bit_eq(&t));
    }
}

fn request(rng: &mut XorShift, step: u64) -> PredictRequest {
    let n = CHANNELS * LOCAL_SIZE * LOCAL_SIZE;
    let local: Vec<f32> = (0..n).map(|_| rng.unit() as f32).collect();
    let global: Vec<f32> = (0..n).map(|_| rng.unit() as f32).collect();
    let shape = [CHANNELS, LOCAL_SIZE, LOCAL_SIZE];
    PredictRequest {
        episode: 3,
        step,
        target: 2,
        orientation_bin: 5,
        local: WireTensor::encode(&shape, &local),
        global: WireTensor::encode(&shape, &global),
        rays: Rays {
            depth: vec![1.5; 120],
            class: vec![0; 120],
        },
    }
}

fn client(mode: EchoMode, timeout: Duration) -> RemotePredictor {
    let (addr, _) = spawn_tcp_echo("127.0.0.1:0", mode).unwrap();
    RemotePredictor::with_timeout(Endpoint::Tcp(addr.to_string()), timeout)
}

#[test]
fn uniform_echo_answers_with_constant_maps() {
    let mut c = client(EchoMode::Uniform(0.25), Duration::from_secs(5));
    let mut rng = XorShift::new(2);
    let r = c.request(request(&mut rng, 0)).unwrap();
    assert_eq!(r.nav.shape(), (LOCAL_SIZE, LOCAL_SIZE));
    assert!(r.nav.iter().all(|&v| v == 0.25) && r.occ.iter().all(|&v| v == 0.0));
}

#[test]
fn mirrored_maps_come_back_bit_exact() {
    let mut c = client(EchoMode::Mirror, Duration::from_secs(5));
    let mut rng = XorShift::new(3);
    for step in 0..3 {
        let req = request(&mut rng, step * 4);
        let local = req.local.decode().unwrap();
        let global = req.global.decode().unwrap();
        let r = c.request(req).unwrap();
        let plane = LOCAL_SIZE * LOCAL_SIZE;
        assert!(r.nav.iter().zip(&local[..plane]).all(|(&a, &b)| (a as f32).to_bits() == b.to_bits()));
        assert!(r.occ.iter().zip(&global[..plane]).all(|(&a, &b)| (a as f32).to_bits() == b.to_bits()));
    }
}

#[test]
fn wrong_shape_is_a_protocol_error() {
    let mut c = client(EchoMode::WrongShape, Duration::from_secs(5));
    let err = c.request(request(&mut XorShift::new(4), 0)).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn silent_server_times_out() {
    let mut c = client(EchoMode::Silent, Duration::from_millis(200));
    let err = c.request(request(&mut XorShift::new(5), 0)).unwrap_err();
    assert!(matches!(err, Error::Timeout(_)), "{err}");
}

#[test]
fn closed_stream_is_reopened_once() {
    let mut c = client(EchoMode::CloseAfter(1), Duration::from_secs(5));
    let mut rng = XorShift::new(6);
    for step in 0..4 {
        c.request(request(&mut rng, step)).unwrap();
    }
}

#[test]
fn version_mismatch_aborts_the_handshake() {
    let mut c = client(EchoMode::Version(2), Duration::from_secs(5));
    assert!(matches!(c.connect(), Err(Error::Protocol(_))));
}

#[test]
fn bad_endpoints_are_rejected() {
    assert!("nowhere".parse::<Endpoint>().is_err());
    assert!("cmd:".parse::<Endpoint>().is_err());
    assert_eq!(
        "cmd:prog -x 1".parse::<Endpoint>().unwrap(),
        Endpoint::Process {
            program: "prog".into(),
            args: vec!["-x".into(), "1".into()]
        }
    );
}

#[test]
fn process_endpoint_speaks_over_stdio() {
    let ep = Endpoint::Process {
        program: env!("CARGO_BIN_EXE_objnav").into(),
        args: vec!["serve-echo".into(), "--mode".into(), "uniform".into(), "--value".into(), "0.75".into()],
    };
    let mut c = RemotePredictor::with_timeout(ep, Duration::from_secs(10));
    let mut rng = XorShift::new(7);
    for step in 0..20 {
        let r = c.request(request(&mut rng, step)).unwrap();
        assert!(r.nav.iter().all(|&v| v == 0.75));
    }
}
