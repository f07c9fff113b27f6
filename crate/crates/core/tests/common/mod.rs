#![allow(dead_code)]

use negspace::protocol::*;
use rand::Rng;
use rand::seq::IndexedRandom;

fn f32x<const N: usize>(rng: &mut impl Rng) -> [f32; N] {
    std::array::from_fn(|_| rng.random_range(-5.0f32..5.0))
}

fn text(rng: &mut impl Rng, max: usize) -> String {
    const ALPHABET: &[char] = &['a', 'z', 'Q', '0', ' ', '-', 'é', '→', '🙂'];
    let n = rng.random_range(0..=max);
    let mut s = String::new();
    while s.chars().count() < n {
        s.push(*ALPHABET.choose(rng).unwrap());
    }
    while s.len() > 255 {
        s.pop();
    }
    s
}

/// A well-formed message of a random type with random field values.
pub fn random_message(rng: &mut impl Rng) -> Message {
    match rng.random_range(1..=13u8) {
        1 => Message::Join(Join { udp_port: rng.random(), name: text(rng, 40) }),
        2 => Message::RoleAssign(RoleAssign { participant: rng.random_range(0..2), role: rng.random_range(1..=2) }),
        3 => Message::TaskStart(TaskStart { task: rng.random(), condition: rng.random_range(0..8), puzzle: rng.random() }),
        4 => Message::StateSnapshot(Snapshot {
            columns: rng.random(),
            rows: rng.random(),
            cubes: (0..rng.random_range(0..=5))
                .map(|_| CubeRecord { id: rng.random(), color: rng.random(), col: rng.random(), row: rng.random(), flags: rng.random() })
                .collect(),
        }),
        5 => Message::StateDelta(Delta {
            op: *[DeltaOp::Select, DeltaOp::Pick, DeltaOp::Drop, DeltaOp::Deselect].choose(rng).unwrap(),
            cube: rng.random(),
            col: rng.random(),
            row: rng.random(),
        }),
        6 => Message::Highlight(Highlight { cube: rng.random() }),
        7 => Message::EmbodimentFrame(EmbodimentFrame {
            frame_seq: rng.random(),
            capture_us: rng.random(),
            joints: std::array::from_fn(|_| f32x(rng)),
            points: (0..rng.random_range(0..64)).map(|_| PointSample { position: f32x(rng), rgb: rng.random() }).collect(),
        }),
        8 => Message::TaskComplete(TaskComplete { task: rng.random() }),
        9 => Message::PoseSample(PoseSample { timestamp_us: rng.random(), head: f32x(rng), hand: f32x(rng), orientation: f32x(rng) }),
        10 => Message::ButtonEvent(ButtonEvent { timestamp_us: rng.random(), button: rng.random() }),
        11 => Message::SnapshotRequest(Empty {}),
        12 => Message::ButtonAck(ButtonAck { timestamp_us: rng.random() }),
        _ => Message::Reject(Reject {
            code: *[RejectCode::SessionFull, RejectCode::IllegalTransition, RejectCode::Board, RejectCode::Forbidden, RejectCode::Malformed]
                .choose(rng)
                .unwrap(),
            text: text(rng, 60),
        }),
    }
}

pub fn random_frame(rng: &mut impl Rng) -> Frame {
    Frame::new(rng.random(), random_message(rng))
}

/// Quantile by linear interpolation at rank (n - 1)·q, written out longhand.
pub fn oracle_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() as f64 - 1.0);
    let below = pos.floor();
    let frac = pos - below;
    let i = below as usize;
    if i + 1 >= v.len() { v[i] } else { v[i] * (1.0 - frac) + v[i + 1] * frac }
}
