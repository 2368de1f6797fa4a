use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fairlens_core::audit::FieldError;
use serde_json::json;

use crate::auth::AuthFailure;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid request")]
    Validation(Vec<FieldError>),
    #[error("missing or unknown bearer token")]
    Unauthenticated,
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("unprocessable: {0}")]
    Unprocessable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl RegistryError {
    pub fn field(field: &str, reason: impl Into<String>) -> Self {
        Self::Validation(vec![FieldError {
            field: field.to_string(),
            reason: reason.into(),
        }])
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::Validation(_) => StatusCode::BAD_REQUEST,
            Self::Unauthenticated => StatusCode::UNAUTHORIZED,
            Self::Forbidden(_) => StatusCode::FORBIDDEN,
            Self::Conflict(_) => StatusCode::CONFLICT,
            Self::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<AuthFailure> for RegistryError {
    fn from(value: AuthFailure) -> Self {
        match value {
            AuthFailure::Unauthenticated => Self::Unauthenticated,
            AuthFailure::Forbidden => Self::Forbidden("role may not perform this action".into()),
        }
    }
}

impl IntoResponse for RegistryError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let body = match &self {
            Self::Validation(fields) => json!({ "error": "validation failed", "fields": fields }),
            other => json!({ "error": other.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}
