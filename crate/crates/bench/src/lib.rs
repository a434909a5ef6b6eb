//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use mfront::raytrace::trace_bundle;
use mfront::source::GaussCosine;
use mfront::{BathyKind, Bathymetry, RayBundle, Scene, SceneOptions, SourceModel, TraceOptions};

pub fn bank() -> Arc<Bathymetry> {
    Arc::new(Bathymetry::new(BathyKind::RadialBank { h0: 1.0, amp: 0.5, width: 0.5, center: [0.0, 0.8] }, 1.0).unwrap())
}

pub fn unit_source() -> Arc<SourceModel> {
    Arc::new(SourceModel::gauss(GaussCosine::radial(1.0)).unwrap())
}

pub fn bank_bundle(n_psi: usize, t: f64) -> Arc<RayBundle> {
    Arc::new(trace_bundle(bank(), &TraceOptions::new(n_psi, t, t / 4096.0)).unwrap())
}

pub fn bank_scene(mu: f64, t: f64) -> Scene {
    Scene::prepare(bank_bundle(512, t), unit_source(), mu, t, SceneOptions::default()).unwrap()
}
