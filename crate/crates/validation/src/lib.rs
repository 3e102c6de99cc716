//! Holds the `acceptance` test target only. Run it with
//! `cargo test -p diffraxis-validation --test acceptance`.
