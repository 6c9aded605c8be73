//! Websocket event stream: one JSON envelope per text message.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;
use tokio::time::{interval_at, Instant};

use crate::worker::{Envelope, Notice};
use crate::AppState;

#[derive(Debug, Deserialize)]
pub struct StreamQuery {
    pub cursor: Option<u64>,
}

pub async fn events(upgrade: WebSocketUpgrade, State(app): State<AppState>, Query(q): Query<StreamQuery>) -> Response {
    upgrade.on_upgrade(move |socket| pump(socket, app, q.cursor))
}

async fn send(socket: &mut WebSocket, e: &Envelope) -> bool {
    let text = serde_json::to_string(e).expect("envelope encodes");
    socket.send(Message::Text(text)).await.is_ok()
}

async fn pump(mut socket: WebSocket, app: AppState, cursor: Option<u64>) {
    let period = app.config.heartbeat;
    let mut cursor = cursor;
    loop {
        let sub = app.worker.call(move |c| c.subscribe(cursor)).await;
        let mut expected = sub.next;
        if sub.resync && !send(&mut socket, &Envelope { seq: expected, notice: Notice::Resync }).await {
            return;
        }
        for e in &sub.backlog {
            if !send(&mut socket, e).await {
                return;
            }
            expected = e.seq + 1;
        }
        let mut live = sub.live;
        let mut beat = interval_at(Instant::now() + period, period);
        loop {
            tokio::select! {
                r = live.recv() => match r {
                    Ok(e) => {
                        if e.seq < expected {
                            continue;
                        }
                        if !send(&mut socket, &e).await {
                            return;
                        }
                        expected = e.seq + 1;
                        beat.reset();
                    }
                    Err(RecvError::Lagged(_)) => break,
                    Err(RecvError::Closed) => return,
                },
                _ = beat.tick() => {
                    if !send(&mut socket, &Envelope { seq: expected, notice: Notice::Heartbeat }).await {
                        return;
                    }
                }
                m = socket.recv() => match m {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return,
                    Some(Ok(_)) => {}
                },
            }
        }
        cursor = Some(expected);
    }
}
