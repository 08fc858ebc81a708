//! The fixed-step integrator on its own: forward and backward passes on a
//! scalar problem with a known solution.

use tb_control::integrator::{rk4_backward, rk4_forward, TimeGrid};

fn main() -> tb_control::Result<()> {
    let mut previous = None;
    for n in [10, 20, 40, 80] {
        let grid = TimeGrid::new(0.0, 1.0, n)?;
        let traj = rk4_forward(|_, y: &[f64; 1]| [y[0]], [1.0], &grid)?;
        let err = (traj.last()[0] - 1f64.exp()).abs();
        match previous {
            Some(e) => println!("n = {n:>3}  error {err:.3e}  ratio {:.2}", e / err),
            None => println!("n = {n:>3}  error {err:.3e}"),
        }
        previous = Some(err);
    }

    // dλ/dt = -λ backward from λ(1) = 1 gives λ(0) = e.
    let grid = TimeGrid::new(0.0, 1.0, 100)?;
    let back = rk4_backward(|_, y: &[f64; 1]| [-y[0]], [1.0], &grid, &[])?;
    println!("backward pass: λ(0) = {:.12} (e = {:.12})", back.node(0)[0], 1f64.exp());
    Ok(())
}
