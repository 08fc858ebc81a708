//! Basic reproduction number two ways, plus the steady states.

use tb_control::model::{
    disease_free_equilibrium, endemic_equilibrium, feasible_bound, next_generation_transfer,
    r0_closed_form, r0_next_generation, ModelParams, ParamId,
};

fn main() -> tb_control::Result<()> {
    let p = ModelParams::reference();
    println!("R0 closed form      {:.6}", r0_closed_form(&p)?);
    println!("R0 next generation  {:.6}", r0_next_generation(&p)?);
    println!("transfer matrix V:\n{}", next_generation_transfer(&p));

    // Halving the infection rate halves R0; it is linear in λ2 and b.
    let half = p.with(ParamId::InfectionRate, p.infection_rate / 2.0);
    println!("R0 with λ2 halved   {:.6}", r0_closed_form(&half)?);

    let dfe = disease_free_equilibrium(&p)?;
    println!(
        "disease-free point  U = {:.2}, residual {:.3e}, equilibrium: {}",
        dfe.state.u, dfe.residual_norm, dfe.is_valid_equilibrium
    );
    let ee = endemic_equilibrium(&p)?;
    println!("endemic point       {:?}", ee.state);
    println!("  residual {:.3e}, equilibrium: {}", ee.residual_norm, ee.is_valid_equilibrium);
    println!("feasible region     N <= {:.1}", feasible_bound(&p)?);
    Ok(())
}
