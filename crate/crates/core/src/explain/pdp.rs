use rayon::prelude::*;

use super::{background_id, check_background, Grid, Profile, ProfileKind};
use crate::data::Dataset;
use crate::error::Result;
use crate::learners::Predictor;

/// Partial dependence: at each grid point, the mean prediction over the
/// background with the variable forced to that point.
pub fn pdp(model: &dyn Predictor, background: &Dataset, grid: &Grid) -> Result<Profile> {
    check_background(model, background)?;
    let j = background.column_index(&grid.variable)?;
    let n = background.n_rows() as f64;
    let values = grid
        .points
        .par_iter()
        .map(|&z| {
            let mut x = background.features().to_owned();
            x.column_mut(j).fill(z);
            model.predict(x.view()).iter().sum::<f64>() / n
        })
        .collect();
    Ok(Profile {
        kind: ProfileKind::Pdp,
        variable: grid.variable.clone(),
        grid: grid.clone(),
        values,
        model_id: model.model_id(),
        background_id: background_id(background),
        warnings: Vec::new(),
    })
}
