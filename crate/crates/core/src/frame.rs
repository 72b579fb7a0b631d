//! Textual command-frame grammar shared by the controller and the robot.
//!
//! A frame is a bracketed list `[F, X, Y, Z, R, A, B]`: frame type, target
//! position in millimetres, end-effector rotation in degrees and two binary
//! gripper controls. A controller reply may contain several frames and an
//! optional trailing one-element bracket carrying the halting signal.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker that separates a planned sequence from the actionable step.
pub const EXECUTION_MARKER: &str = "Execution Step:";

/// Number of fields in a canonical frame.
pub const FRAME_ARITY: usize = 7;

/// One low-level robot instruction.
///
/// `frame_type`, `grip_a` and `grip_b` are kept as signed integers so that a
/// parsed-but-invalid reply (say, a gripper value of 2) survives parsing and
/// is rejected by the structural check instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandFrame {
    pub frame_type: i64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rotation: f64,
    /// 1 closes the gripper.
    pub grip_a: i64,
    /// Auxiliary control, carried but unused by the simulated gripper.
    pub grip_b: i64,
}

impl CommandFrame {
    pub const MOTION: i64 = 1;

    /// A motion frame with the auxiliary grip cleared.
    pub fn motion(x: f64, y: f64, z: f64, rotation: f64, close: bool) -> Self {
        Self {
            frame_type: Self::MOTION,
            x,
            y,
            z,
            rotation,
            grip_a: i64::from(close),
            grip_b: 0,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn closes_gripper(&self) -> bool {
        self.grip_a == 1
    }

    /// Field-level validity: non-negative type, finite reals, binary grips.
    pub fn is_well_formed(&self) -> bool {
        self.frame_type >= 0
            && [self.x, self.y, self.z, self.rotation]
                .iter()
                .all(|v| v.is_finite())
            && matches!(self.grip_a, 0 | 1)
            && matches!(self.grip_b, 0 | 1)
    }
}

impl fmt::Display for CommandFrame {
    /// Canonical text form. `f64`'s `Display` prints the shortest string that
    /// parses back to the same value, and integral values print without a
    /// fractional part (`80.0` prints as `80`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}, {}, {}, {}]",
            self.frame_type, self.x, self.y, self.z, self.rotation, self.grip_a, self.grip_b
        )
    }
}

/// Serializes a frame into its canonical bracketed form.
pub fn serialize_frame(frame: &CommandFrame) -> String {
    frame.to_string()
}

/// A parsed controller reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerOutput {
    pub frames: Vec<CommandFrame>,
    pub halt: bool,
    pub raw_text: String,
}

impl ControllerOutput {
    pub fn first_frame(&self) -> Option<&CommandFrame> {
        self.frames.first()
    }

    pub fn is_pure_halt(&self) -> bool {
        self.halt && self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    #[default]
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("controller output contains no frame and no halting signal")]
    EmptyOutput,
}

/// Parses controller text into frames and a halting signal.
///
/// Only the text after the last [`EXECUTION_MARKER`] is considered when the
/// marker is present. Bracket groups containing parentheses are perception
/// echoes (`[(x, y), ...]`) and are skipped. In permissive mode a six-field
/// frame gets `grip_b = 0` appended.
pub fn parse_controller_text(text: &str, mode: ParseMode) -> Result<ControllerOutput, ParseError> {
    let actionable = match text.rfind(EXECUTION_MARKER) {
        Some(at) => &text[at + EXECUTION_MARKER.len()..],
        None => text,
    };

    let groups = bracket_groups(actionable)?;
    let mut frames = Vec::new();
    let mut halt = false;
    let mut halt_seen = false;
    let last = groups.len().saturating_sub(1);

    for (i, group) in groups.iter().enumerate() {
        if group.contains('(') || group.contains(')') {
            continue;
        }
        let fields: Vec<&str> = group.split(',').map(str::trim).collect();
        match fields.len() {
            1 if i == last => {
                halt_seen = true;
                halt = match parse_integer(fields[0])? {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(ParseError::MalformedFrame(format!(
                            "halting signal must be 0 or 1, got {other}"
                        )))
                    }
                };
            }
            FRAME_ARITY => frames.push(frame_from_fields(&fields, 0)?),
            6 if mode == ParseMode::Permissive => frames.push(frame_from_fields(&fields, 0)?),
            n => {
                return Err(ParseError::MalformedFrame(format!(
                    "expected {FRAME_ARITY} fields, found {n} in [{group}]"
                )))
            }
        }
    }

    if frames.is_empty() && !halt_seen {
        return Err(ParseError::EmptyOutput);
    }
    Ok(ControllerOutput {
        frames,
        halt,
        raw_text: text.to_string(),
    })
}

fn bracket_groups(text: &str) -> Result<Vec<&str>, ParseError> {
    let mut groups = Vec::new();
    let mut open: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match c {
            '[' => {
                if open.is_some() {
                    return Err(ParseError::MalformedFrame("nested '['".into()));
                }
                open = Some(i + 1);
            }
            ']' => match open.take() {
                Some(start) => groups.push(&text[start..i]),
                None => return Err(ParseError::MalformedFrame("unbalanced ']'".into())),
            },
            _ => {}
        }
    }
    if open.is_some() {
        return Err(ParseError::MalformedFrame("unbalanced '['".into()));
    }
    Ok(groups)
}

fn frame_from_fields(fields: &[&str], default_grip_b: i64) -> Result<CommandFrame, ParseError> {
    Ok(CommandFrame {
        frame_type: parse_integer(fields[0])?,
        x: parse_real(fields[1])?,
        y: parse_real(fields[2])?,
        z: parse_real(fields[3])?,
        rotation: parse_real(fields[4])?,
        grip_a: parse_integer(fields[5])?,
        grip_b: match fields.get(6) {
            Some(f) => parse_integer(f)?,
            None => default_grip_b,
        },
    })
}

/// Accepts `[+-]digits[.digits][(e|E)[+-]digits]` and rejects anything that
/// does not produce a finite value.
fn parse_real(token: &str) -> Result<f64, ParseError> {
    if !is_decimal_literal(token) {
        return Err(ParseError::MalformedFrame(format!("non-numeric field {token:?}")));
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::MalformedFrame(format!("non-finite field {token:?}"))),
    }
}

fn parse_integer(token: &str) -> Result<i64, ParseError> {
    let v = parse_real(token)?;
    if v.fract() != 0.0 || v.abs() > 9.0e15 {
        return Err(ParseError::MalformedFrame(format!("expected an integer, got {token:?}")));
    }
    Ok(v as i64)
}

fn is_decimal_literal(token: &str) -> bool {
    let bytes = token.as_bytes();
    let mut i = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        i += 1;
        if matches!(bytes.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == bytes.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strict(text: &str) -> Result<ControllerOutput, ParseError> {
        parse_controller_text(text, ParseMode::Strict)
    }

    #[test]
    fn parses_single_frame_without_halt() {
        let out = strict("[1, 80, 60, 110, 0, 0, 0]").unwrap();
        assert_eq!(out.frames, vec![CommandFrame::motion(80.0, 60.0, 110.0, 0.0, false)]);
        assert!(!out.halt);
    }

    #[test]
    fn trailing_single_bracket_is_halt() {
        let out = strict("[1, 200, 50, 60, 1, 0, 0], [1]").unwrap();
        assert_eq!(out.frames.len(), 1);
        assert_eq!(out.frames[0].rotation, 1.0);
        assert!(out.halt);
    }

    #[test]
    fn six_fields_only_in_permissive_mode() {
        let text = "[1, 150, 160, 60, 1, 0]";
        let out = parse_controller_text(text, ParseMode::Permissive).unwrap();
        assert_eq!(
            out.frames[0],
            CommandFrame {
                frame_type: 1,
                x: 150.0,
                y: 160.0,
                z: 60.0,
                rotation: 1.0,
                grip_a: 0,
                grip_b: 0
            }
        );
        assert!(matches!(strict(text), Err(ParseError::MalformedFrame(_))));
    }

    #[test]
    fn only_frames_after_last_execution_marker() {
        let text = "Sequence of Movements: [1, 80, 60, 110, 0, 0, 0], \
                    [1, 120, 60, 110, 0, 0, 0],\nExecution Step:\n[1, 86, 60, 110, 0, 0, 0]";
        let out = strict(text).unwrap();
        assert_eq!(out.frames, vec![CommandFrame::motion(86.0, 60.0, 110.0, 0.0, false)]);
    }

    #[test]
    fn perception_echo_is_skipped() {
        let text = "Input: block at [(198, 365), (60, 778)], [1, 10, 20, 30, 0, 1, 0]";
        let out = strict(text).unwrap();
        assert_eq!(out.frames.len(), 1);
        assert!(out.frames[0].closes_gripper());
    }

    #[test]
    fn pure_halt_is_valid() {
        let out = strict("done [1]").unwrap();
        assert!(out.is_pure_halt());
    }

    #[test]
    fn error_cases() {
        assert_eq!(strict("no frames here"), Err(ParseError::EmptyOutput));
        assert_eq!(strict(""), Err(ParseError::EmptyOutput));
        for bad in [
            "[1, 2, 3",
            "1, 2]",
            "[[1, 2, 3, 4, 5, 6, 7]]",
            "[1, x, 3, 4, 5, 6, 7]",
            "[1, , 3, 4, 5, 6, 7]",
            "[1, 2, 3, 4, 5]",
            "[1, inf, 3, 4, 5, 0, 0]",
            "[1, NaN, 3, 4, 5, 0, 0]",
            "[1, 1e400, 3, 4, 5, 0, 0]",
            "[1.5, 1, 3, 4, 5, 0, 0]",
            "[1, 2, 3, 4, 5, 0.5, 0]",
            "[1, 2, 3, 4, 5, 0, 0], [2]",
            "[1], [1, 2, 3, 4, 5, 0, 0]",
        ] {
            assert!(
                matches!(strict(bad), Err(ParseError::MalformedFrame(_))),
                "{bad:?} should be malformed"
            );
        }
    }

    #[test]
    fn out_of_range_grip_survives_parsing() {
        let out = strict("[1, 2, 3, 4, 5, 2, 0]").unwrap();
        assert_eq!(out.frames[0].grip_a, 2);
        assert!(!out.frames[0].is_well_formed());
    }

    #[test]
    fn serialization_examples() {
        assert_eq!(
            serialize_frame(&CommandFrame::motion(80.0, 60.0, 110.0, 0.0, false)),
            "[1, 80, 60, 110, 0, 0, 0]"
        );
        assert_eq!(
            serialize_frame(&CommandFrame::motion(0.0, 0.0, 0.0, 0.0, false)),
            "[1, 0, 0, 0, 0, 0, 0]"
        );
        assert_eq!(
            serialize_frame(&CommandFrame::motion(0.1, -2.5, 1e-7, 12.25, true)),
            "[1, 0.1, -2.5, 0.0000001, 12.25, 1, 0]"
        );
    }

    #[test]
    fn literal_lexer() {
        for ok in ["0", "-1", "+2.5", "3.", ".5", "1e3", "1E-3", "007"] {
            assert!(is_decimal_literal(ok), "{ok}");
        }
        for bad in ["", "-", ".", "e3", "1e", "1e+", "0x10", "1_000", " 1", "inf"] {
            assert!(!is_decimal_literal(bad), "{bad}");
        }
    }
}
