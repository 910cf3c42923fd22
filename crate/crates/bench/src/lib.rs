//! Fixtures shared by the criterion benches.

use satnls_core::model::FieldSpec;
use satnls_core::{ComplexField, Grid, Model, ModelSpec};

/// Free damped model (`mu = 1`) on `grid` with a centred unit-width
/// Gaussian of amplitude 0.5.
pub fn free_bump(grid: Grid) -> (Model, ComplexField) {
    let model = ModelSpec::free(1.0).build(&grid).expect("valid model");
    let center = vec![0.0; grid.dim()];
    let u0 = FieldSpec::gaussian(0.5, center, 1.0)
        .sample(&grid)
        .expect("valid field");
    (model, u0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_builds() {
        let (model, u0) = free_bump(Grid::new(2, 4.0, 16).unwrap());
        assert_eq!(model.grid, *u0.grid());
        assert!(!u0.is_zero());
    }
}
