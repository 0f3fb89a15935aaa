//! Heisenberg time evolution and Lieb-Robinson verification (stub while the
//! lower modules come up).
