use capbridge_core::distance::ObstacleField;
use capbridge_core::forces::obstacle_forces;
use capbridge_core::mesh::{gen, EnergyParams, RegionFilter};
use capbridge_core::system::{RemeshTarget, Solver, SolverConfig};
use capbridge_core::vec3::vec3;

fn main() {
    let theta = 40.0f64.to_radians();
    let beta = theta.cos();
    let mesh = gen::cylinder(1.0, -0.1, 0.1, 0.0685).unwrap();
    println!("initial mesh: {} faces", mesh.face_count());
    let obstacles = vec![
        ObstacleField::sphere(vec3(0.0, 0.0, 1.0), 1.0).unwrap(),
        ObstacleField::plane(0.0, vec3(0.0, 0.0, 1.0)).unwrap(),
    ];
    let params = EnergyParams::new(vec![beta, beta], 0.0, vec3(0.0, 0.0, -1.0), 0.165).unwrap();
    let config = SolverConfig {
        remesh: RemeshTarget::Cells(13728),
        max_iters: 40,
        ..Default::default()
    };
    let mut solver = Solver::new(mesh, params, &obstacles, config).unwrap();
    match solver.run() {
        Ok(summary) => println!("converged={} iters={} residual={:.3e}", summary.converged, summary.iterations, summary.final_residual),
        Err(e) => println!("SOLVER ERROR: {e}"),
    }
    for row in &solver.history {
        println!("{:3} {:?} energy {:+.6} res {:.3e} vol_err {:.3e} dist_err {:.3e}",
            row.iter, row.phase, row.energy, row.residual, row.volume_err, row.dist_err);
    }
    println!("final mesh: {} faces", solver.mesh.face_count());
    println!("lambda_vol = {:.6}  => delta p = {:.6}", solver.multipliers.volume, -solver.multipliers.volume);
    println!("area total  = {:.6}", solver.mesh.surface_area(RegionFilter::All));
    if let Ok(v) = solver.mesh.enclosed_volume() { println!("volume = {:.6}", v); }
    for ob in [0u32, 1] {
        if let Ok(f) = obstacle_forces(&solver.mesh, solver.multipliers.volume, ob, 1.0) {
            let t = f.total();
            println!("obstacle {ob}: F_t = ({:+.6}, {:+.6}, {:+.6}) |F_t| = {:.6}", t.x, t.y, t.z, t.norm());
        }
        if let Ok(cos) = solver.mesh.contact_angle_cosines(ob) {
            let mean: f64 = cos.iter().map(|c| (c - 40.0f64.to_radians().cos()).abs()).sum::<f64>() / cos.len() as f64;
            println!("obstacle {ob}: mean |<mu,mu> - beta| = {:.2e}", mean);
        }
    }
}
