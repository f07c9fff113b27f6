use serde::{Deserialize, Serialize};

use super::message::PoseSample;
use crate::geometry::{GeometryError, Point, Pose};

impl PoseSample {
    pub fn from_pose(timestamp_us: u64, pose: &Pose) -> Self {
        let p = |v: &Point| [v.x as f32, v.y as f32, v.z as f32];
        Self { timestamp_us, head: p(&pose.head), hand: p(&pose.hand), orientation: pose.orientation.map(|c| c as f32) }
    }

    /// Back to a geometric pose; the quaternion is renormalized to undo f32 rounding.
    pub fn to_pose(&self) -> Result<Pose, GeometryError> {
        let q = self.orientation.map(f64::from);
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-3 {
            return Err(GeometryError::NonUnitQuaternion(norm));
        }
        let p = |v: [f32; 3]| Point::new(v[0].into(), v[1].into(), v[2].into());
        Pose::new(p(self.head), p(self.hand), q.map(|c| c / norm))
    }
}

/// Latest-wins view of a pose stream arriving over the unreliable channel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseStream {
    latest: Option<(u32, PoseSample)>,
    floor: Option<u32>,
    stale: u64,
}

impl PoseStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps the sample if its seq is newer than everything seen so far; returns whether it was kept.
    pub fn ingest_pose(&mut self, seq: u32, sample: PoseSample) -> bool {
        let newest = self.latest.map(|(s, _)| s).max(self.floor);
        if newest.is_some_and(|n| seq <= n) {
            self.stale += 1;
            return false;
        }
        self.latest = Some((seq, sample));
        true
    }

    /// Marks `seq` as consumed by another datagram on the same channel (a click);
    /// poses at or below it are stale from now on.
    pub fn advance_floor(&mut self, seq: u32) {
        self.floor = Some(self.floor.map_or(seq, |f| f.max(seq)));
    }

    pub fn latest(&self) -> Option<PoseSample> {
        self.latest.map(|(_, p)| p)
    }

    pub fn latest_seq(&self) -> Option<u32> {
        self.latest.map(|(s, _)| s)
    }

    pub fn stale_count(&self) -> u64 {
        self.stale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(ts: u64) -> PoseSample {
        PoseSample { timestamp_us: ts, head: [0.0; 3], hand: [0.0; 3], orientation: [0.0, 0.0, 0.0, 1.0] }
    }

    #[test]
    fn latest_wins() {
        let mut s = PoseStream::new();
        assert!(s.ingest_pose(5, sample(5)));
        assert!(!s.ingest_pose(4, sample(4)));
        assert_eq!((s.latest().unwrap().timestamp_us, s.stale_count()), (5, 1));
        assert!(!s.ingest_pose(5, sample(55)));
        assert_eq!(s.latest().unwrap().timestamp_us, 5);
    }

    #[test]
    fn floor_discards_older_poses() {
        let mut s = PoseStream::new();
        s.ingest_pose(1, sample(1));
        s.advance_floor(9);
        assert!(!s.ingest_pose(8, sample(8)));
        assert!(s.ingest_pose(10, sample(10)));
    }

    #[test]
    fn pose_conversion() {
        let q = [0.0, (0.3f64).sin(), 0.0, (0.3f64).cos()];
        let pose = Pose::new(Point::new(0.1, 0.2, 0.3), Point::new(-0.1, 0.0, 1.0), q).unwrap();
        let back = PoseSample::from_pose(0, &pose).to_pose().unwrap();
        assert!((back.hand - pose.hand).norm() < 1e-6);
        let mut bad = PoseSample::from_pose(0, &pose);
        bad.orientation = [0.0, 0.0, 0.0, 0.5];
        assert!(bad.to_pose().is_err());
    }
}
