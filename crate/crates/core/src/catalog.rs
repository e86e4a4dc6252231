//! Small named shifts used by tests, examples and the CLI.

use crate::error::Result;
use crate::geometry::{FiniteRegion, GroupContext, GroupPoint};
use crate::pattern::{Alphabet, Pattern, ShiftSpec, Symbol};

fn z1() -> GroupContext {
    GroupContext::standard(1).expect("dimension 1")
}

fn word(cells: &[i32], values: &[u8]) -> Pattern {
    Pattern::from_map(1, cells.iter().zip(values).map(|(&x, &v)| (GroupPoint::axis(1, 0, x), Symbol(v))))
        .expect("distinct cells")
}

pub fn full_shift(dimension: usize, symbols: usize) -> Result<ShiftSpec> {
    Ok(ShiftSpec::full(GroupContext::standard(dimension)?, Alphabet::range(symbols)?))
}

/// Binary words on ℤ without two adjacent ones.
pub fn golden_mean() -> ShiftSpec {
    ShiftSpec::sft(z1(), Alphabet::range(2).expect("2 symbols"), vec![word(&[0, 1], &[1, 1])]).expect("valid SFT")
}

/// Golden mean on ℤ² (no two horizontally or vertically adjacent ones).
pub fn hard_squares() -> ShiftSpec {
    let ctx = GroupContext::standard(2).expect("dimension 2");
    let pair = |dx: i32, dy: i32| {
        Pattern::from_map(
            2,
            [(GroupPoint::zero(2), Symbol(1)), (GroupPoint::new(&[dx, dy]).expect("2d"), Symbol(1))],
        )
        .expect("distinct cells")
    };
    ShiftSpec::sft(ctx, Alphabet::range(2).expect("2 symbols"), vec![pair(1, 0), pair(0, 1)]).expect("valid SFT")
}

/// Forbids `01` and `10`, leaving the two constant configurations.
pub fn two_constant() -> ShiftSpec {
    ShiftSpec::sft(
        z1(),
        Alphabet::range(2).expect("2 symbols"),
        vec![word(&[0, 1], &[0, 1]), word(&[0, 1], &[1, 0])],
    )
    .expect("valid SFT")
}

/// Binary words on ℤ avoiding a run of `n` ones.
pub fn no_run_of_ones(n: usize) -> ShiftSpec {
    let cells: Vec<i32> = (0..n as i32).collect();
    ShiftSpec::sft(z1(), Alphabet::range(2).expect("2 symbols"), vec![word(&cells, &vec![1; n])]).expect("valid SFT")
}

/// Binary shift on ℤ forced to the zero symbol everywhere.
pub fn singleton() -> ShiftSpec {
    ShiftSpec::sft(z1(), Alphabet::range(2).expect("2 symbols"), vec![word(&[0], &[1])]).expect("valid SFT")
}

/// Intervals `[0, n)` for each n.
pub fn intervals(lengths: impl IntoIterator<Item = usize>) -> Vec<FiniteRegion> {
    lengths.into_iter().map(|n| FiniteRegion::interval(0, n as i32)).collect()
}
