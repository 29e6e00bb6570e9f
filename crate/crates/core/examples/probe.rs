use cahnlab_core::*;
use cahnlab_core::initial::InitialData;

fn main() {
    // probe 1: convolution scale at n=32, eps=0.2
    let g = TorusGrid::unit(1, 32).unwrap();
    let m = Mollifier::standard(1.0, 1).unwrap();
    let k = ScaledKernel::build(&m, 0.2, &g).unwrap();
    println!("k_star_one = {:.3e}", k.k_star_one());

    // probe 2: energy identity defect vs dt
    let g = TorusGrid::unit(1, 256).unwrap();
    let u0 = initial::generate(&g, &InitialData::default()).unwrap();
    let p = Potential::shifted_quartic(1.0).unwrap();
    for dt in [4e-6, 2e-6, 1e-6, 5e-7] {
        let cfg = SolverConfig { dt, t_end: 2e-3, stabilization: 1.0, dealias: false, record_every: 1000000, energy_guard: true };
        let r = run(&u0, Scheme::Local, &p, &cfg).unwrap();
        let drop = r.energy.first().unwrap().total - r.energy.last().unwrap().total;
        let defect = (r.dissipation_integral + r.energy.last().unwrap().total - r.energy.first().unwrap().total).abs();
        println!("dt={dt:.1e}  drop={drop:.6e}  dissip={:.6e}  defect={defect:.6e}  rel={:.4}", r.dissipation_integral, defect/drop);
    }
}
