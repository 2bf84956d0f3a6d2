//! Beam search with a wide enough beam finds the exhaustive optimum.

mod common;

#[test]
fn beam_search_equals_brute_force_on_tiny_instances() {
    common::checks::mpc_oracle(20, 2024).unwrap();
}
