//! Text encoding of the wire schema for web clients.
//!
//! Each frame becomes one JSON object `{"type": .., "seq": .., "payload": {..}}`
//! whose payload fields mirror the binary layout one for one.

use super::message::{Frame, ProtocolError, decode, encode};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("bad text frame: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub fn to_text(frame: &Frame) -> String {
    serde_json::to_string(frame).expect("frames serialize")
}

/// Parses a text frame and checks it against the binary schema's value rules.
pub fn from_text(text: &str) -> Result<Frame, TextError> {
    let frame: Frame = serde_json::from_str(text)?;
    decode(&encode(&frame)?)?;
    Ok(frame)
}

/// Converts a text frame straight to its binary encoding.
pub fn text_to_binary(text: &str) -> Result<Vec<u8>, TextError> {
    Ok(encode(&from_text(text)?)?)
}

pub fn binary_to_text(bytes: &[u8]) -> Result<String, ProtocolError> {
    Ok(to_text(&decode(bytes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::message::{Empty, Highlight, Message, RoleAssign};

    #[test]
    fn highlight_shape() {
        let f = Frame::new(4, Message::Highlight(Highlight { cube: 3 }));
        assert_eq!(to_text(&f), r#"{"seq":4,"type":"HIGHLIGHT","payload":{"cube":3}}"#);
        let back = from_text(r#"{"type":"HIGHLIGHT","seq":4,"payload":{"cube":3}}"#).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn empty_payload_and_value_rules() {
        let f = Frame::new(0, Message::SnapshotRequest(Empty {}));
        assert_eq!(from_text(&to_text(&f)).unwrap(), f);
        let bad = to_text(&Frame::new(0, Message::RoleAssign(RoleAssign { participant: 0, role: 9 })));
        assert!(matches!(from_text(&bad), Err(TextError::Protocol(ProtocolError::BadValue("role")))));
        assert!(matches!(from_text(r#"{"type":"NOPE","seq":0,"payload":{}}"#), Err(TextError::Json(_))));
    }
}
