use capbridge_core::mesh::{gen, RegionFilter};
use capbridge_core::remesh::{remesh, RemeshParams};

fn main() {
    let mesh = gen::icosphere(1.0, 3).unwrap();
    let vol0 = mesh.enclosed_volume().unwrap();
    let params = RemeshParams { target_edge_length: 2.5 * mesh.mean_edge_length(), ..Default::default() };
    let out = remesh(&mesh, &params, &[]).unwrap();
    println!("coarsen: {} -> {} faces, d_vol {:.3e}, closed {}", mesh.face_count(), out.face_count(),
        (out.enclosed_volume().unwrap()-vol0)/vol0, out.is_closed());
    println!("mean edge {:.3} target {:.3}", out.mean_edge_length(), params.target_edge_length);
}
