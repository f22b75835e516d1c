use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use hilts_core::chip::Mode;
use hilts_session::protocol::{Ack, Close, WireCommand};
use hilts_session::server::serve;
use hilts_session::{
    read_log, replay_log, start_session, CloseReason, CommandKind, Message, SessionCommand, SessionConfig,
    SourceConfig, SubscriptionItem,
};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message as WsMessage;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn example_log_path() -> PathBuf {
    crate_dir().join("tests/data/example_session.jsonl")
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(crate_dir().join("schema/messages.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, line: &str) {
    let instance: Value = serde_json::from_str(line).unwrap();
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{line}\n{errors:#?}");
}

fn assert_log_valid(path: &Path) -> usize {
    let v = validator();
    let text = std::fs::read_to_string(path).unwrap();
    for line in text.lines() {
        assert_valid(&v, line);
    }
    text.lines().count()
}

/// Scripted session used for the shipped example log.
async fn record_example(path: &Path) {
    let config = SessionConfig {
        source: SourceConfig::Noise { seed: 7 },
        log_path: Some(path.to_path_buf()),
        ..SessionConfig::default()
    };
    let session = start_session(config).await.unwrap();
    let mut sub = session.subscribe();
    let script = [
        (3, CommandKind::Trigger),
        (8, CommandKind::SetFrequency(8.0)),
        (12, CommandKind::Pause),
        (14, CommandKind::Trigger),
        (16, CommandKind::Resume),
        (20, CommandKind::SetFrequency(100.0)),
        (22, CommandKind::Reset),
    ];
    let mut script = script.iter().enumerate().peekable();
    loop {
        let Some(SubscriptionItem::Frame(f)) = sub.next().await else {
            panic!("stream closed early");
        };
        while let Some((i, (_, kind))) = script.next_if(|(_, (at, _))| *at == f.seq) {
            session
                .send(SessionCommand::new(format!("c{i}"), "console", *kind))
                .await
                .unwrap();
        }
        if f.seq == 29 {
            break;
        }
    }
    session.stop().await.unwrap();
}

#[tokio::test(start_paused = true)]
async fn freshly_recorded_log_validates_against_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    record_example(&path).await;
    assert!(assert_log_valid(&path) > 30);
}

#[test]
fn shipped_example_log_validates_and_replays() {
    let path = example_log_path();
    assert!(assert_log_valid(&path) > 30);
    let records = read_log(&path).unwrap();
    assert!(matches!(records.first(), Some(Message::Start(_))));
    assert!(matches!(records.last(), Some(Message::Stop(_))));
    let replay = replay_log(&records).unwrap();
    assert_eq!(replay.replayed, replay.recorded);
}

/// Rewrites `tests/data/example_session.jsonl`; run with `--ignored` after
/// a deliberate change to the frame contents.
#[tokio::test(start_paused = true)]
#[ignore]
async fn regenerate_example_log() {
    let path = example_log_path();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    record_example(&path).await;
}

#[test]
fn schema_rejects_malformed_messages() {
    let v = validator();
    let bad = [
        r#"{"type":"frame","seq":0,"t_sim":0,"mode":"IDLE","raw":0,"out":0,"recon":0,"events":[]}"#,
        r#"{"type":"frame","seq":0,"t_sim":0,"mode":"CHAOTIC","raw":0,"out":2,"recon":0,"events":[]}"#,
        r#"{"type":"frame","seq":-1,"t_sim":0,"mode":"CHAOTIC","raw":0,"out":0,"recon":0,"events":[]}"#,
        r#"{"type":"ack","id":"a","ok":true}"#,
        r#"{"type":"ack","id":"a","ok":false}"#,
        r#"{"type":"cmd","kind":"trigger"}"#,
        r#"{"type":"close","reason":"bored"}"#,
        r#"{"type":"telemetry"}"#,
    ];
    for line in bad {
        let instance: Value = serde_json::from_str(line).unwrap();
        assert!(!v.is_valid(&instance), "accepted {line}");
    }
    let good = [
        r#"{"type":"cmd","id":"1","kind":"set_frequency","value":8.0}"#,
        r#"{"type":"ack","id":"1","ok":true,"applied_at_seq":4}"#,
        r#"{"type":"ack","id":"1","ok":false,"err":"unknown command kind \"warp\""}"#,
        r#"{"type":"close","reason":"overflow","detail":"behind"}"#,
    ];
    for line in good {
        assert_valid(&v, line);
        let _: Message = serde_json::from_str(line).unwrap();
    }
}

type Client = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn recv(ws: &mut Client) -> Message {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("no message within 5 s")
            .expect("socket ended")
            .expect("socket error");
        if let WsMessage::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn send_cmd(ws: &mut Client, id: &str, kind: &str, value: Option<f64>) {
    let wire = Message::Cmd(WireCommand {
        id: id.into(),
        kind: kind.into(),
        value,
        client: None,
    });
    ws.send(WsMessage::text(wire.to_json())).await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_round_trip() {
    let v = validator();
    let config = SessionConfig {
        telemetry_hz: 60.0,
        ..SessionConfig::default()
    };
    let session = start_session(config).await.unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, session.client(), async {
        let _ = shutdown_rx.await;
    }));

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let Message::Frame(first) = recv(&mut ws).await else {
        panic!("expected a frame first");
    };
    assert_eq!(first.mode, Mode::Chaotic);

    send_cmd(&mut ws, "warp", "warp", None).await;
    send_cmd(&mut ws, "hi", "set_frequency", Some(100.0)).await;
    send_cmd(&mut ws, "go", "trigger", None).await;
    ws.send(WsMessage::text("not json")).await.unwrap();

    let mut acks: Vec<Ack> = Vec::new();
    let mut frames = Vec::new();
    while acks.len() < 4 || frames.len() < 10 {
        let raw = recv(&mut ws).await;
        assert_valid(&v, &raw.to_json());
        match raw {
            Message::Ack(a) => acks.push(a),
            Message::Frame(f) => frames.push(f),
            other => panic!("unexpected {other:?}"),
        }
    }
    let by_id = |id: &str| acks.iter().find(|a| a.id == id).cloned().unwrap();
    assert!(!by_id("warp").ok);
    assert!(!by_id("hi").ok);
    let go = by_id("go");
    assert!(go.ok);
    let at = go.applied_at_seq.unwrap();
    let effect = frames.iter().find(|f| f.mode == Mode::Entrained).expect("trigger never showed").seq;
    assert!(effect >= at && effect <= at + 2, "ack {at}, effect {effect}");
    assert!(acks.iter().any(|a| a.id.is_empty() && !a.ok), "malformed text gets an anonymous rejection");
    for w in frames.windows(2) {
        assert_eq!(w[1].seq, w[0].seq + 1);
    }

    // Stopping the session ends the stream with a close message.
    session.stop().await.unwrap();
    let close: Close = loop {
        match recv(&mut ws).await {
            Message::Close(c) => break c,
            Message::Frame(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    };
    assert_eq!(close.reason, CloseReason::Stopped);
    let _ = shutdown_tx.send(());
    server.await.unwrap().unwrap();
}
