mod common;

use negspace::board::{BoardSpec, BoardState, Cell, CubeId};
use negspace::geometry::WorkspaceVolume;
use negspace::protocol::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn frames_roundtrip_byte_identically(seed in any::<u64>()) {
        let frame = common::random_frame(&mut ChaCha8Rng::seed_from_u64(seed));
        let bytes = encode(&frame).unwrap();
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(&back, &frame);
        prop_assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn text_form_roundtrips(seed in any::<u64>()) {
        let frame = common::random_frame(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(from_text(&to_text(&frame)).unwrap(), frame);
    }

    #[test]
    fn truncations_are_errors_not_panics(seed in any::<u64>(), cut in any::<prop::sample::Index>()) {
        let frame = common::random_frame(&mut ChaCha8Rng::seed_from_u64(seed));
        let bytes = encode(&frame).unwrap();
        let n = cut.index(bytes.len());
        prop_assert!(decode(&bytes[..n]).is_err());
    }

    #[test]
    fn garbage_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode(&bytes);
        let _ = decode_prefix(&bytes);
    }

    #[test]
    fn prefix_decoding_splits_a_stream(seeds in prop::collection::vec(any::<u64>(), 1..8)) {
        let frames: Vec<Frame> = seeds.iter().map(|&s| common::random_frame(&mut ChaCha8Rng::seed_from_u64(s))).collect();
        let stream: Vec<u8> = frames.iter().flat_map(|f| encode(f).unwrap()).collect();
        let mut rest = &stream[..];
        for f in &frames {
            let (got, used) = decode_prefix(rest).unwrap();
            prop_assert_eq!(&got, f);
            rest = &rest[used..];
        }
        prop_assert!(rest.is_empty());
    }

    /// Stale and duplicated datagrams never replace a newer pose.
    #[test]
    fn pose_stream_keeps_the_highest_seq(seqs in prop::collection::vec(0u32..50, 1..40)) {
        let mut s = PoseStream::new();
        for &q in &seqs {
            let sample = PoseSample { timestamp_us: q as u64, head: [0.0; 3], hand: [0.0; 3], orientation: [0.0, 0.0, 0.0, 1.0] };
            s.ingest_pose(q, sample);
        }
        let max = *seqs.iter().max().unwrap();
        prop_assert_eq!(s.latest().unwrap().timestamp_us, max as u64);
    }

    /// A replica fed a delta stream with one frame missing catches up from
    /// the next snapshot and ends equal to the authority.
    #[test]
    fn replica_resyncs_after_a_gap(drop_at in 1usize..6) {
        let volume = WorkspaceVolume::standard();
        let spec = BoardSpec::standard(&volume);
        let cells = [Cell::new(4, 2), Cell::new(0, 0), Cell::new(7, 0), Cell::new(0, 4), Cell::new(7, 4)];
        let mut authority = BoardState::with_cells(spec, &cells).unwrap();
        let mut frames = vec![Frame::new(0, Message::StateSnapshot(snapshot_of(&authority, false)))];
        let mut push = |m: Message| { let seq = frames.len() as u32; frames.push(Frame::new(seq, m)); };
        for (cube, target) in [(2u8, Cell::new(3, 2)), (3, Cell::new(5, 2)), (4, Cell::new(4, 1))] {
            let cube = CubeId(cube);
            authority.select(cube).unwrap();
            push(Message::StateDelta(Delta::select(cube)));
            authority.pick().unwrap();
            push(Message::StateDelta(Delta::pick(cube)));
            authority.drop_at(target).unwrap();
            push(Message::StateDelta(Delta::drop(cube, target)));
        }
        let mut replica = Replica::new(spec);
        let mut gap_seen = false;
        for (i, f) in frames.iter().enumerate() {
            if i == drop_at { continue; }
            if let Err(ReplicaError::SeqGap { .. }) = replica.receive(f) { gap_seen = true; }
        }
        prop_assert!(gap_seen);
        prop_assert!(replica.is_resyncing());
        let seq = frames.len() as u32;
        replica.receive(&Frame::new(seq, Message::StateSnapshot(snapshot_of(&authority, false)))).unwrap();
        prop_assert!(!replica.is_resyncing());
        prop_assert_eq!(replica.board(), &authority);
    }
}
