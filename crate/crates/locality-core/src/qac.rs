//! Quasi-adiabatic continuation (stub while the lower modules come up).
