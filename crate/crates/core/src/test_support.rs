pub use crate::lqr::{random_admissible_controller, random_stable_system};
use crate::{LqrSystem, Matrix, NoiseModel};

pub fn scalar_system(a: f64, b: f64, q: f64, r: f64, w: f64) -> LqrSystem {
    let m = |v: f64| Matrix::from_element(1, 1, v);
    LqrSystem::new(m(a), m(b), m(q), m(r), NoiseModel::bounded_iid(m(w)).unwrap()).unwrap()
}
