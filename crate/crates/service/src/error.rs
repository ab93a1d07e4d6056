use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use thiserror::Error;

use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{message}")]
    Validation { message: String, details: Option<Value> },
    #[error("dynamic expansion would create {size} entries, above the cap of {cap}")]
    TooLarge { size: u128, cap: u64 },
    #[error("{message}")]
    Conflict { message: String, components: Vec<String> },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn validation(message: impl Into<String>) -> Self {
        ServiceError::Validation { message: message.into(), details: None }
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        ServiceError::Conflict { message: message.into(), components: Vec::new() }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Validation { .. } => StatusCode::BAD_REQUEST,
            ServiceError::TooLarge { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Conflict { .. } => StatusCode::CONFLICT,
            ServiceError::Store(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.to_string()});
        match &self {
            ServiceError::Validation { details: Some(d), .. } => body["details"] = d.clone(),
            ServiceError::TooLarge { cap, .. } => body["cap"] = json!(cap),
            ServiceError::Conflict { components, .. } if !components.is_empty() => {
                body["components"] = json!(components)
            }
            _ => {}
        }
        (self.status(), Json(body)).into_response()
    }
}
