//! Base regressors and the assessment protocols paired with them:
//! K-fold cross-validated predictions for the Lasso, out-of-bag predictions
//! for the random forest.

mod assess;
mod cv;
mod folds;
mod forest;
mod lasso;
mod model;
mod spec;
mod tree;

pub use assess::{assess, Assessment, Assessor, ResponseId};
pub use cv::{cv_predictions, repeated_cv_mse};
pub use folds::fold_assignment;
pub use forest::{fit_forest, oob_predictions, Forest, OobPredictions};
pub use lasso::{fit_lasso_cv, lambda_grid, solve_lasso_path, LassoFit, LassoModel};
pub use model::{fit_final, predict, FittedModel, ModelParams};
pub use spec::{BaseRegressorSpec, ForestParams, LambdaRule, LassoParams, Quality, RegressorKind};
pub use tree::RegressionTree;
