//! Small reference models used by the demos, the CLI, and the test suites.

use alloc::string::String;
use alloc::vec::Vec;

use crate::mdp::{Action, Mdp};
use crate::scalar::ratio;

/// Builds a deterministic model from `(state, [(action, reward, target)])`.
pub fn deterministic(states: &[(&str, &[(&str, i64, &str)])], start: &str) -> Mdp {
    let names: Vec<String> = states.iter().map(|(s, _)| String::from(*s)).collect();
    let n = names.len();
    let index = |name: &str| names.iter().position(|s| s == name).expect("unknown state");
    let actions = states
        .iter()
        .map(|(_, list)| {
            list.iter()
                .map(|(a, r, t)| Action::deterministic(*a, ratio(*r, 1), n, index(t)))
                .collect()
        })
        .collect();
    let start = index(start);
    Mdp::new(names, actions, start).expect("reference model is well formed")
}

/// Choice at `s0` between 100 collected at step 3 (action `A`) and 110
/// collected at step 4 (action `B`). All other rewards are zero.
pub fn figure1() -> Mdp {
    deterministic(
        &[
            ("s0", &[("A", 0, "a1"), ("B", 0, "b1")]),
            ("a1", &[("go", 0, "a2")]),
            ("a2", &[("go", 0, "a3")]),
            ("a3", &[("collect", 100, "end")]),
            ("b1", &[("go", 0, "b2")]),
            ("b2", &[("go", 0, "b3")]),
            ("b3", &[("go", 0, "b4")]),
            ("b4", &[("collect", 110, "end")]),
            ("end", &[("stay", 0, "end")]),
        ],
        "s0",
    )
}

/// Three-state deterministic model; actions are named after their target
/// state. R(s0→s2) = 4 and R(s2→s2) = 3; the remaining rewards make the
/// s0→s1→s0 loop attractive to a farsighted agent only.
pub fn figure2() -> Mdp {
    deterministic(
        &[
            ("s0", &[("s0", 4, "s0"), ("s1", 0, "s1"), ("s2", 4, "s2")]),
            ("s1", &[("s0", 10, "s0"), ("s1", 0, "s1")]),
            ("s2", &[("s2", 3, "s2")]),
        ],
        "s0",
    )
}

/// `now` pays 1 immediately; `later` pays 2 one step later. The two
/// policies tie exactly at γ = 1/2.
pub fn crossing() -> Mdp {
    deterministic(
        &[
            ("c", &[("now", 1, "z"), ("later", 0, "d")]),
            ("d", &[("pay", 2, "z")]),
            ("z", &[("stay", 0, "z")]),
        ],
        "c",
    )
}

/// Like [`crossing`] but the delayed option pays 3 two steps later, so the
/// tie is at the positive root of 1 − 3γ².
pub fn crossing_squared() -> Mdp {
    deterministic(
        &[
            ("c", &[("now", 1, "z"), ("later", 0, "d1")]),
            ("d1", &[("wait", 0, "d2")]),
            ("d2", &[("pay", 3, "z")]),
            ("z", &[("stay", 0, "z")]),
        ],
        "c",
    )
}

/// Both crossings side by side: degenerate points 1/2 and 1/√3.
pub fn two_crossings() -> Mdp {
    deterministic(
        &[
            ("c1", &[("now", 1, "z"), ("later", 0, "d")]),
            ("d", &[("pay", 2, "z")]),
            ("c2", &[("now", 1, "z"), ("later", 0, "e1")]),
            ("e1", &[("wait", 0, "e2")]),
            ("e2", &[("pay", 3, "z")]),
            ("z", &[("stay", 0, "z")]),
        ],
        "c1",
    )
}
