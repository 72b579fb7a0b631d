use armloop::frame::{parse_controller_text, serialize_frame, CommandFrame, ParseError, ParseMode};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-5000i64..5000).prop_map(|v| v as f64),
        (-500_000i64..500_000).prop_map(|v| v as f64 / 1000.0),
        -1.0e6f64..1.0e6,
    ]
}

fn frame() -> impl Strategy<Value = CommandFrame> {
    (0i64..4, coord(), coord(), coord(), coord(), 0i64..2, 0i64..2).prop_map(|(t, x, y, z, r, a, b)| CommandFrame {
        frame_type: t,
        x,
        y,
        z,
        rotation: r,
        grip_a: a,
        grip_b: b,
    })
}

proptest! {
    #[test]
    fn canonical_text_round_trips(f in frame(), halt in any::<bool>()) {
        let mut text = serialize_frame(&f);
        if halt {
            text.push_str(" [1]");
        }
        let out = parse_controller_text(&text, ParseMode::Strict).unwrap();
        prop_assert_eq!(out.frames, vec![f]);
        prop_assert_eq!(out.halt, halt);
    }

    #[test]
    fn permissive_accepts_everything_strict_does(text in "[\\[\\]0-9,. \\-e]{0,40}") {
        if let Ok(strict) = parse_controller_text(&text, ParseMode::Strict) {
            let loose = parse_controller_text(&text, ParseMode::Permissive).unwrap();
            prop_assert_eq!(strict, loose);
        }
    }

    #[test]
    fn six_field_frames_only_parse_permissively(f in frame()) {
        let text = format!("[{}, {}, {}, {}, {}, {}]", f.frame_type, f.x, f.y, f.z, f.rotation, f.grip_a);
        prop_assert!(parse_controller_text(&text, ParseMode::Strict).is_err());
        let out = parse_controller_text(&text, ParseMode::Permissive).unwrap();
        prop_assert_eq!(out.frames[0], CommandFrame { grip_b: 0, ..f });
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        match parse_controller_text(&text, ParseMode::Permissive) {
            Ok(out) => prop_assert!(!out.frames.is_empty() || out.raw_text == text),
            Err(ParseError::MalformedFrame(_) | ParseError::EmptyOutput) => {}
        }
    }

    #[test]
    fn only_the_last_execution_step_counts(a in frame(), b in frame()) {
        let text = format!("Plan: {a}\nExecution Step: {a}\nrevised\nExecution Step: {b}");
        let out = parse_controller_text(&text, ParseMode::Strict).unwrap();
        prop_assert_eq!(out.frames, vec![b]);
    }
}
