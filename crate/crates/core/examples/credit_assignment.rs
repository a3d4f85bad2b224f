//! Splits a coalition game's grand value across three contributors and
//! verifies the split against the fairness axioms.

use shapley_council::shapley::{
    axiom_check, shapley_closed3, shapley_exact, truncate_normalize, CharacteristicGame,
};

fn main() {
    // Value order: v(1), v(2), v(12), v(3), v(13), v(23), v(123).
    // Contributor 1 is strong alone, 2 and 3 mostly add value together.
    let game = CharacteristicGame::three_player([0.8, 0.1, 1.1, 0.2, 1.0, 0.9, 1.8]);

    let closed = shapley_closed3(&game).unwrap();
    let exact = shapley_exact(&game).unwrap();
    println!("closed-form phi: {:?}", closed.raw);
    println!("enumerated phi:  {:?}", exact.raw);

    let weights = truncate_normalize(&closed.raw);
    println!("credit weights (negative clipped, renormalized): {weights:?}");
    let grand: f64 = closed.raw.iter().sum();
    println!("efficiency: sum(phi) = {grand:.6} vs v(grand) = {:.6}", game.grand_value());

    let report = axiom_check(&game, &closed).unwrap();
    println!("{report}");
}
