//! Encodes a few frames in the binary wire format and the JSON text form,
//! then feeds a snapshot and deltas to a replica with one frame lost.
//!
//! cargo run --example wire_format

use negspace::board::{BoardSpec, BoardState, Cell, CubeId};
use negspace::geometry::WorkspaceVolume;
use negspace::protocol::*;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let frames = [
        Frame::new(0, Message::Join(Join { udp_port: 7401, name: "alice".into() })),
        Frame::new(5, Message::Highlight(Highlight { cube: 3 })),
        Frame::new(9, Message::ButtonEvent(ButtonEvent { timestamp_us: 1_250_000, button: 1 })),
    ];
    for f in &frames {
        let bytes = encode(f).unwrap();
        assert_eq!(decode(&bytes).unwrap(), *f);
        println!("{:?}\n  binary {}\n  text   {}", f.message.kind(), hex(&bytes), to_text(f));
    }

    let spec = BoardSpec::standard(&WorkspaceVolume::standard());
    let cells = [Cell::new(4, 2), Cell::new(0, 0), Cell::new(7, 0), Cell::new(0, 4), Cell::new(7, 4)];
    let mut authority = BoardState::with_cells(spec, &cells).unwrap();
    let mut stream = vec![Frame::new(0, Message::StateSnapshot(snapshot_of(&authority, true)))];
    let cube = CubeId(2);
    for delta in [Delta::select(cube), Delta::pick(cube), Delta::drop(cube, Cell::new(3, 2))] {
        authority = apply_delta(&authority, &delta).unwrap();
        stream.push(Frame::new(stream.len() as u32, Message::StateDelta(delta)));
    }

    let mut replica = Replica::new(spec);
    for (i, f) in stream.iter().enumerate() {
        if i == 2 {
            println!("frame {i} lost");
            continue;
        }
        match replica.receive(f) {
            Ok(_) => println!("frame {i} applied"),
            Err(e) => println!("frame {i}: {e}"),
        }
    }
    println!("resyncing: {}", replica.is_resyncing());
    let seq = stream.len() as u32;
    replica.receive(&Frame::new(seq, Message::StateSnapshot(snapshot_of(&authority, true)))).unwrap();
    println!("after a fresh snapshot: resyncing {}, matches authority {}", replica.is_resyncing(), *replica.board() == authority.redacted());
}
