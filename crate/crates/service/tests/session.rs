use std::net::SocketAddr;
use std::sync::Arc;

use futures::{SinkExt, StreamExt};
use nvol::render::render_png;
use nvol::synth::{random_asset, RandomAssetSpec};
use nvol::Asset;
use nvol_service::protocol::{ClientMessage, ServerMessage};
use nvol_service::{serve_on, AppState, SessionState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn test_asset() -> Asset {
    random_asset(&RandomAssetSpec {
        resolution: 16,
        voxels: 1500,
        sh_degree: 1,
        channels: 3,
        joints: 3,
        seed: 21,
    })
    .unwrap()
}

async fn start(asset: Asset) -> (SocketAddr, tokio::sync::oneshot::Sender<()>) {
    let app = Arc::new(AppState::new(asset, "test", Some(2)).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(serve_on(listener, app, None, async {
        let _ = rx.await;
    }));
    (addr, tx)
}

async fn connect(addr: SocketAddr) -> Ws {
    connect_async(format!("ws://{addr}/session")).await.unwrap().0
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string())).await.unwrap();
}

#[derive(Debug)]
enum Reply {
    Frame { seq: u64, png: Vec<u8> },
    Other(ServerMessage),
}

async fn next_text(ws: &mut Ws) -> ServerMessage {
    loop {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => return serde_json::from_str(&t).unwrap(),
            Message::Ping(_) | Message::Pong(_) => continue,
            m => panic!("expected text, got {m:?}"),
        }
    }
}

async fn reply(ws: &mut Ws) -> Reply {
    match next_text(ws).await {
        ServerMessage::FrameMeta { seq, .. } => match ws.next().await.unwrap().unwrap() {
            Message::Binary(png) => Reply::Frame { seq, png },
            m => panic!("expected PNG after frame_meta, got {m:?}"),
        },
        other => Reply::Other(other),
    }
}

fn small_camera() -> Value {
    json!({"type": "set_camera", "orbit": {"azimuth": 0.4, "elevation": 0.3, "radius": 3.5}, "width": 96, "height": 80})
}

fn replay(asset: &Asset, msgs: &[Value]) -> Vec<u8> {
    let mut s = SessionState::new(asset);
    for m in msgs {
        let m: ClientMessage = serde_json::from_value(m.clone()).unwrap();
        s.apply(m, asset).unwrap();
    }
    render_png(asset, &s.frame_request().unwrap()).unwrap().0
}

#[tokio::test]
async fn healthz_reports_the_asset() {
    let (addr, _stop) = start(test_asset()).await;
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(b"GET /healthz HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut text = String::new();
    s.read_to_string(&mut text).await.unwrap();
    assert!(text.starts_with("HTTP/1.1 200"));
    let body: Value = serde_json::from_str(text.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["asset_id"], "test");
    assert_eq!(body["voxels"], 1500);
    assert_eq!(body["joints"], 3);
}

#[tokio::test]
async fn canonical_frame_matches_direct_render() {
    let asset = test_asset();
    let (addr, _stop) = start(asset.clone()).await;
    let mut ws = connect(addr).await;
    let msgs = [
        small_camera(),
        json!({"type": "set_pose", "rotations": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}),
    ];
    for m in &msgs {
        send(&mut ws, m.clone()).await;
    }
    send(&mut ws, json!({"type": "request_frame", "seq": 1})).await;
    match reply(&mut ws).await {
        Reply::Frame { seq, png } => {
            assert_eq!(seq, 1);
            assert_eq!(png, replay(&asset, &msgs));
            assert_eq!(&png[1..4], b"PNG");
        }
        r => panic!("{r:?}"),
    }
}

#[tokio::test]
async fn requests_during_a_render_coalesce() {
    let (addr, _stop) = start(test_asset()).await;
    let mut ws = connect(addr).await;
    // Default 512x512 frame keeps the first render busy while the burst lands.
    for seq in 1..=3 {
        ws.feed(Message::Text(json!({"type": "request_frame", "seq": seq}).to_string()))
            .await
            .unwrap();
    }
    ws.flush().await.unwrap();
    let mut got = Vec::new();
    for _ in 0..3 {
        got.push(match reply(&mut ws).await {
            Reply::Frame { seq, .. } => format!("frame {seq}"),
            Reply::Other(ServerMessage::Superseded { seq }) => format!("superseded {seq}"),
            Reply::Other(m) => panic!("{m:?}"),
        });
    }
    assert_eq!(got, ["superseded 2", "frame 1", "frame 3"]);
}

#[tokio::test]
async fn malformed_messages_keep_the_session_alive() {
    let (addr, _stop) = start(test_asset()).await;
    let mut ws = connect(addr).await;
    ws.send(Message::Text("{\"type\": \"set_pose\"".into())).await.unwrap();
    assert!(matches!(next_text(&mut ws).await, ServerMessage::Error { category, .. } if category == "invalid-input"));
    send(&mut ws, json!({"type": "set_pose", "rotations": [[0, 0, 0]]})).await;
    assert!(matches!(next_text(&mut ws).await, ServerMessage::Error { category, .. } if category == "rig"));
    send(&mut ws, json!({"type": "set_options", "lambda_th": 2.0})).await;
    assert!(matches!(next_text(&mut ws).await, ServerMessage::Error { .. }));
    send(&mut ws, small_camera()).await;
    send(&mut ws, json!({"type": "request_frame", "seq": 5})).await;
    assert!(matches!(reply(&mut ws).await, Reply::Frame { seq: 5, .. }));
    send(&mut ws, json!({"type": "request_frame", "seq": 5})).await;
    assert!(matches!(next_text(&mut ws).await, ServerMessage::Error { seq: Some(5), .. }));
    send(&mut ws, json!({"type": "get_skeleton"})).await;
    match next_text(&mut ws).await {
        ServerMessage::Skeleton { joints, voxels, .. } => {
            assert_eq!(joints.len(), 3);
            assert_eq!(voxels, 1500);
        }
        m => panic!("{m:?}"),
    }
}

fn random_pose(rng: &mut ChaCha8Rng) -> Value {
    let mut a = || rng.gen_range(-3.5..3.5);
    json!({
        "type": "set_pose",
        "rotations": [[a(), a(), a()], [a(), a(), a()], [a(), a(), a()]],
        "root_rotation": [a(), a(), a()],
        "root_translation": [a() * 0.05, a() * 0.05, 0.0],
    })
}

#[tokio::test]
async fn final_state_after_many_pose_messages_is_served() {
    let asset = test_asset();
    let (addr, _stop) = start(asset.clone()).await;
    let mut ws = connect(addr).await;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut msgs = vec![small_camera(), json!({"type": "set_options", "scale": 1.2, "background": [0.1, 0.2, 0.3]})];
    msgs.extend((0..100).map(|_| random_pose(&mut rng)));
    for m in &msgs {
        send(&mut ws, m.clone()).await;
    }
    send(&mut ws, json!({"type": "request_frame", "seq": 1})).await;
    match reply(&mut ws).await {
        Reply::Frame { png, .. } => assert_eq!(png, replay(&asset, &msgs)),
        r => panic!("{r:?}"),
    }
}

#[tokio::test]
async fn sessions_are_isolated_and_every_request_is_answered_once() {
    let asset = test_asset();
    let (addr, _stop) = start(asset.clone()).await;
    let mut a = connect(addr).await;
    let mut b = connect(addr).await;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pa = vec![small_camera(), random_pose(&mut rng)];
    let pb = vec![
        json!({"type": "set_camera", "orbit": {"azimuth": 2.0, "elevation": -0.2, "radius": 4.0}, "width": 64, "height": 64}),
        random_pose(&mut rng),
    ];
    for (m, n) in pa.iter().zip(&pb) {
        send(&mut a, m.clone()).await;
        send(&mut b, n.clone()).await;
    }
    for seq in 1..=12u64 {
        send(&mut a, json!({"type": "request_frame", "seq": seq})).await;
        send(&mut b, json!({"type": "request_frame", "seq": seq * 10})).await;
    }
    let (ea, eb) = (replay(&asset, &pa), replay(&asset, &pb));
    for (ws, expected, seqs) in [(&mut a, ea, (1..=12).collect::<Vec<u64>>()), (&mut b, eb, (1..=12).map(|s| s * 10).collect())] {
        let mut answered = Vec::new();
        while answered.len() < seqs.len() {
            match reply(ws).await {
                Reply::Frame { seq, png } => {
                    assert_eq!(png, expected);
                    answered.push(seq);
                }
                Reply::Other(ServerMessage::Superseded { seq }) => answered.push(seq),
                Reply::Other(m) => panic!("{m:?}"),
            }
        }
        answered.sort_unstable();
        assert_eq!(answered, seqs);
        // Nothing further arrives.
        send(ws, json!({"type": "get_skeleton"})).await;
        assert!(matches!(next_text(ws).await, ServerMessage::Skeleton { .. }));
    }
}
