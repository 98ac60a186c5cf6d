//! Shared fixtures for the benchmark targets.

use bandfloor::{
    build_single_site, Bump, DisorderConfiguration, Model, ModelFamily, PeriodicBackground,
};

/// Default 1-d indefinite-site model over W = cos(2πx).
pub fn desk_model(points_per_unit: usize, lambda: f64) -> Model {
    let site = build_single_site(
        vec![
            Bump {
                center: vec![-0.35],
                radius: 0.1,
                amplitude: 1.0,
            },
            Bump {
                center: vec![0.1],
                radius: 0.08,
                amplitude: -0.5,
            },
        ],
        1,
    )
    .unwrap();
    let family = ModelFamily::new(
        1,
        points_per_unit,
        PeriodicBackground::cosine(1, 1.0),
        site,
        (0.0, 1.0),
    )
    .unwrap();
    family
        .model(
            lambda,
            DisorderConfiguration::constant(1, 0.0, (0.0, 1.0)).unwrap(),
        )
        .unwrap()
}
