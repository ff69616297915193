use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use yardtwin_core::engine::EngineError;
use yardtwin_core::AnalyticsError;

/// Error body: `{code, message, seq?, detail?}`.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            seq: None,
            detail: None,
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::BadWindow(_) | EngineError::WindowMismatch => StatusCode::BAD_REQUEST,
            EngineError::NoDataAtTime { .. } => StatusCode::NOT_FOUND,
            EngineError::InvalidStrategy(_) | EngineError::ReplayHalted { .. } | EngineError::NoFeasibleSlot { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
        };
        let detail = match &e {
            EngineError::ReplayHalted { cause, .. } => Some(cause.code().to_owned()),
            _ => None,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
            seq: e.seq(),
            detail,
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}
