//! Rough timings for the heavy kernels at the resolutions the test suite
//! actually uses. Run with `cargo run --release -p kml-core --example timing`.

use kml_core::collision::{collide, gain, loss_rate, CollisionConfig};
use kml_core::field::{maxwellian, PhaseField};
use kml_core::grid::{SpatialGrid, TimeGrid, VelocityGrid};
use kml_core::kinematics::KernelSpec;
use kml_core::quadrature::SphereQuadrature;
use kml_core::transport::{damped_propagate, Trajectory};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    {
        // collision equilibrium criterion resolution
        let sg = SpatialGrid::homogeneous(4.0).unwrap();
        let vg = VelocityGrid::new(6.0, 24).unwrap();
        let cfg = CollisionConfig::new(
            KernelSpec::with_unit_angular(-1.0).unwrap(),
            SphereQuadrature::new(8, 16),
        );
        let m = PhaseField::sample(sg, vg, maxwellian(1.0)).unwrap();
        let start = Instant::now();
        let q = collide(&m, &cfg).unwrap();
        println!(
            "collide nv=24 nx=1 omega=128: {:?} (linf {:.3e})",
            start.elapsed(),
            q.linf()
        );
    }
    {
        // KS criterion resolution, one gain evaluation
        let sg = SpatialGrid::new(4.0, 6).unwrap();
        let vg = VelocityGrid::new(6.0, 12).unwrap();
        for (nc, np) in [(2usize, 4usize), (4, 8)] {
            let cfg = CollisionConfig::new(
                KernelSpec::with_unit_angular(-1.0).unwrap(),
                SphereQuadrature::new(nc, np),
            );
            let m = PhaseField::sample(sg, vg, maxwellian(0.01)).unwrap();
            let start = Instant::now();
            let q = gain(&m, &m, &cfg).unwrap();
            println!(
                "gain nv=12 nx=216 omega={}: {:?} (linf {:.3e})",
                nc * np,
                start.elapsed(),
                q.linf()
            );
            let start = Instant::now();
            let _l = loss_rate(&m, &cfg).unwrap();
            println!("loss nv=12 nx=216: {:?}", start.elapsed());
        }
    }
    {
        // damped propagation at the KS resolution
        let sg = SpatialGrid::new(4.0, 6).unwrap();
        let vg = VelocityGrid::new(6.0, 12).unwrap();
        let tg = TimeGrid::new(2.0, 33).unwrap();
        let f0 = PhaseField::sample(sg, vg, maxwellian(0.01)).unwrap();
        let damp = Trajectory::constant(
            &PhaseField::sample(sg, vg, |_, _| 0.1).unwrap(),
            tg,
        );
        let src = Trajectory::constant(&f0, tg);
        let start = Instant::now();
        let _ = damped_propagate(&f0, Some(&src), &damp, &tg).unwrap();
        println!("damped_propagate nt=33 nx=216 nv=1728: {:?}", start.elapsed());
    }
    println!("total {:?}", t0.elapsed());
}
