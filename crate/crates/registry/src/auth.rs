use axum::http::HeaderMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Role {
    Vendor(String),
    Auditor(String),
    Public,
}

#[derive(Debug, PartialEq, Eq)]
pub enum AuthFailure {
    /// No usable credential (missing, malformed or unknown token).
    Unauthenticated,
    /// Authenticated, but the role may not perform the action.
    Forbidden,
}

pub(crate) fn bearer_token(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(axum::http::header::AUTHORIZATION)?.to_str().ok()?;
    value.strip_prefix("Bearer ").map(str::trim).filter(|t| !t.is_empty())
}

/// Resolves the caller. Requests without a token are public; a token that
/// is present but unknown is rejected rather than downgraded.
pub(crate) fn resolve(tokens: &[(String, Role)], headers: &HeaderMap) -> Result<Role, AuthFailure> {
    if headers.get(axum::http::header::AUTHORIZATION).is_none() {
        return Ok(Role::Public);
    }
    let token = bearer_token(headers).ok_or(AuthFailure::Unauthenticated)?;
    tokens
        .iter()
        .find(|(t, _)| t == token)
        .map(|(_, role)| role.clone())
        .ok_or(AuthFailure::Unauthenticated)
}

pub(crate) fn require_vendor(role: &Role) -> Result<&str, AuthFailure> {
    match role {
        Role::Vendor(id) => Ok(id),
        Role::Public => Err(AuthFailure::Unauthenticated),
        Role::Auditor(_) => Err(AuthFailure::Forbidden),
    }
}

pub(crate) fn require_auditor(role: &Role) -> Result<&str, AuthFailure> {
    match role {
        Role::Auditor(id) => Ok(id),
        Role::Public => Err(AuthFailure::Unauthenticated),
        Role::Vendor(_) => Err(AuthFailure::Forbidden),
    }
}
