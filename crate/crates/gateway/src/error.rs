//! Structured API errors.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evoarch::runtime::Fault;
use evoarch::workspace::WsError;
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub phase: &'static str,
    pub message: String,
    pub position: Option<(u32, u32)>,
}

impl ApiError {
    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, phase: "runtime", message: message.into(), position: None }
    }

    pub fn bad_request(phase: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, phase, message: message.into(), position: None }
    }
}

fn fault_status(f: &Fault) -> StatusCode {
    match f {
        Fault::UnknownValue(_) => StatusCode::NOT_FOUND,
        Fault::NotQuiescent(_) | Fault::QuiescenceTimeout(..) => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<WsError> for ApiError {
    fn from(e: WsError) -> Self {
        let status = match &e {
            WsError::Runtime(f) => fault_status(f),
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError { status, phase: e.phase(), message: e.to_string(), position: e.position() }
    }
}

impl From<Fault> for ApiError {
    fn from(f: Fault) -> Self {
        WsError::Runtime(f).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let position = self.position.map(|(line, col)| json!({ "line": line, "col": col }));
        let body = json!({ "phase": self.phase, "message": self.message, "position": position });
        (self.status, Json(body)).into_response()
    }
}
