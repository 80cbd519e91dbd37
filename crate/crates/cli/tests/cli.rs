use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Arc;

use aspic::service::SessionRegistry;
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn run_shell(args: &[&str], input: &str) -> (String, bool) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_aspic"))
        .args(args)
        .current_dir(data_dir())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.success())
}

#[test]
fn shell_loads_files_given_at_invocation() {
    let (out, ok) = run_shell(&["ncoloring.lp"], "assert edge(1,2)\nquery mark(1,1)\n");
    assert!(ok);
    assert!(out.starts_with("loaded ncoloring.lp: "), "{out}");
    assert!(out.contains("?- query mark(1,1)\nAnswer: 1\nmark(1,1) mark(2,"), "{out}");
    assert!(out.ends_with("SAT\n?- \n"), "{out}");
}

#[test]
fn bundled_session_replays_identically() {
    let script = std::fs::read_to_string(data_dir().join("session.aspic")).unwrap();
    let (a, ok) = run_shell(&[], &script);
    let (b, _) = run_shell(&[], &script);
    assert!(ok);
    assert_eq!(a, b);
    assert!(a.contains("?- query elim(X,C) & mark(X,1)\nUNSAT\n"));
    assert!(a.ends_with("?- exit\n"));
}

#[test]
fn errors_keep_the_shell_running() {
    let (out, ok) = run_shell(&[], "frobnicate\ndefine p(X). ?\noption --time 1\nhelp\n");
    assert!(ok);
    assert_eq!(out.matches("error:").count(), 3, "{out}");
    assert!(out.contains("commands:"));
}

#[test]
fn port_requires_serve() {
    let (_, ok) = run_shell(&["--port", "9000"], "");
    assert!(!ok);
}

async fn start() -> std::net::SocketAddr {
    let registry = Arc::new(SessionRegistry::with_base_dir(data_dir()));
    let (listener, addr) = aspic_cli::bind("127.0.0.1:0".parse().unwrap()).await.unwrap();
    tokio::spawn(aspic_cli::serve(listener, registry, Some(data_dir())));
    addr
}

async fn next_json<S>(ws: &mut S) -> Value
where
    S: StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin,
{
    loop {
        if let Message::Text(t) = ws.next().await.unwrap().unwrap() {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn websocket_drives_a_session() {
    let addr = start().await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let batch = [
        r#"{"id":"c","session":"s","op":"create"}"#,
        r#"{"id":"0","session":"s","command":"load ncoloring.lp"}"#,
        r#"{"id":"1","session":"s","command":"assert edge(1,2)"}"#,
        r#"{"id":"2","session":"s","command":"query mark(1,1)"}"#,
        r#"{"id":"3","session":"s","command":"query mark(1,1) &"}"#,
        r#"{"id":"4","session":"t","command":"state"}"#,
    ]
    .join("\n");
    ws.send(Message::Text(batch.into())).await.unwrap();
    let mut replies = Vec::new();
    for _ in 0..6 {
        replies.push(next_json(&mut ws).await);
    }
    let ids: Vec<&str> = replies.iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["c", "0", "1", "2", "3", "4"]);
    assert_eq!(replies[1]["state-digest"]["inputs"], 6);
    assert_eq!(replies[2]["state-digest"]["i_true"], 1);
    assert_eq!(replies[3]["satisfiability"], "SAT");
    assert_eq!(replies[3]["verdict"], "yes");
    assert_eq!(replies[3]["models"][0][0], "mark(1,1)");
    assert_eq!(replies[4]["status"], "error");
    assert!(replies[4]["error"].as_str().unwrap().starts_with("parse error"));
    assert_eq!(replies[5]["error"], "unknown session 't'");
}

#[tokio::test(flavor = "multi_thread")]
async fn http_endpoint_answers_single_requests() {
    let addr = start().await;
    let post = |body: &'static str| async move {
        let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
        let request = format!(
            "POST /rpc HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(request.as_bytes()).await.unwrap();
        let mut raw = String::new();
        stream.read_to_string(&mut raw).await.unwrap();
        let body = raw.split("\r\n\r\n").nth(1).unwrap().to_string();
        serde_json::from_str::<Value>(&body).unwrap()
    };
    assert_eq!(post(r#"{"id":"a","session":"x","op":"create"}"#).await["status"], "ok");
    assert_eq!(post(r#"{"id":"b","session":"x","op":"create"}"#).await["status"], "error");
    let r = post(r#"{"id":"c","session":"x","command":"define {a}. ?"}"#).await;
    assert_eq!(r["state-digest"]["rules"], 1);
    assert_eq!(post(r#"{"id":"d","session":"x","op":"destroy"}"#).await["status"], "ok");
    assert_eq!(post(r#"{"id":"e","session":"x","command":"state"}"#).await["error"], "unknown session 'x'");
    assert_eq!(post("not json").await["status"], "error");
}

#[tokio::test(flavor = "multi_thread")]
async fn static_files_are_served() {
    let addr = start().await;
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(format!("GET /ncoloring.lp HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").as_bytes())
        .await
        .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.unwrap();
    assert!(raw.starts_with("HTTP/1.1 200"));
    assert!(raw.contains("#show mark/2."));
}
