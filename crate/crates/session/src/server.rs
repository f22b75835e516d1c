//! WebSocket front end: `GET /ws` streams `frame` messages and accepts
//! `cmd` messages, answering each with an `ack`. When the stream ends the
//! server sends a `close` message with the reason, then a WebSocket close.

use std::future::Future;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::stream::FuturesUnordered;
use futures::StreamExt;
use tokio::net::TcpListener;

use crate::protocol::{Ack, Close, CloseReason, Message};
use crate::service::{SessionClient, SubscriptionItem};

#[derive(Clone)]
struct AppState {
    client: SessionClient,
    next_id: Arc<AtomicU64>,
}

pub fn router(client: SessionClient) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(AppState {
        client,
        next_id: Arc::new(AtomicU64::new(1)),
    })
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    client: SessionClient,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(client)).with_graceful_shutdown(shutdown).await
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    let id = format!("ws-{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    ws.on_upgrade(move |socket| connection(socket, state.client, id))
}

async fn connection(mut socket: WebSocket, client: SessionClient, client_id: String) {
    tracing::info!(client = %client_id, "connected");
    let mut frames = client.subscribe();
    let mut pending = FuturesUnordered::new();

    let close = loop {
        tokio::select! {
            item = frames.next() => match item {
                Some(SubscriptionItem::Frame(f)) => {
                    if send(&mut socket, &Message::Frame((*f).clone())).await.is_err() {
                        return;
                    }
                }
                Some(SubscriptionItem::Closed(c)) => break c,
                None => break Close { reason: CloseReason::Stopped, detail: None },
            },
            Some(ack) = pending.next() => {
                if send(&mut socket, &Message::Ack(ack)).await.is_err() {
                    return;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(WsMessage::Text(text))) => {
                    match serde_json::from_str::<Message>(text.as_str()) {
                        Ok(Message::Cmd(wire)) => match wire.parse(&client_id) {
                            Ok(cmd) => {
                                let client = client.clone();
                                let id = cmd.id.clone();
                                pending.push(async move {
                                    client.send(cmd).await.unwrap_or_else(|e| Ack::rejected(&id, e.to_string()))
                                });
                            }
                            Err(ack) => {
                                if send(&mut socket, &Message::Ack(ack)).await.is_err() {
                                    return;
                                }
                            }
                        },
                        Ok(_) => {
                            let ack = Ack::rejected("", "only cmd messages are accepted");
                            if send(&mut socket, &Message::Ack(ack)).await.is_err() {
                                return;
                            }
                        }
                        Err(e) => {
                            let ack = Ack::rejected("", format!("malformed message: {e}"));
                            if send(&mut socket, &Message::Ack(ack)).await.is_err() {
                                return;
                            }
                        }
                    }
                }
                Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => {
                    tracing::info!(client = %client_id, "disconnected");
                    return;
                }
                Some(Ok(_)) => {}
            },
        }
    };

    tracing::info!(client = %client_id, reason = ?close.reason, "closing");
    let _ = send(&mut socket, &Message::Close(close)).await;
    let _ = socket.send(WsMessage::Close(None)).await;
}

async fn send(socket: &mut WebSocket, msg: &Message) -> Result<(), axum::Error> {
    socket.send(WsMessage::Text(msg.to_json().into())).await
}
