//! Theorem-level protocol runs (stub while the lower modules come up).
