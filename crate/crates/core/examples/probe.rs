use safectl::cartpole::*;
use safectl::design::*;
use safectl::geometry::*;
use safectl::harness::*;
use nalgebra::DVector;

fn main() {
    let mut config = LabConfig::default();
    config.training.trainer.steps = 0;
    let nset = normalize_safety_set(&SafetySet::cartpole()).unwrap();
    let plant = PlantModel::cartpole_reference();
    let bound = ControlSupportBound { row: DVector::from_element(1, 1.0), limit: 16.0 };
    let out = solve_design_bounded(&plant, &nset, &config.design.to_design_config(), &[bound]).unwrap();

    // (a) frictionless, F-only; (b) friction 4.4 with exact cancellation kv=4.4;
    // (c) friction 4.4 with kv = 2 plus omega damping
    for (label, c, kv, kw) in [
        ("frictionless F-only", 0.0, 0.0, 0.0),
        ("c=4.4 kv=4.4 cancel", 4.4, 4.4, 0.0),
        ("c=4.4 kv=2", 4.4, 2.0, 0.0),
        ("c=4.4 kv=3 kw=1", 4.4, 3.0, 1.0),
    ] {
        let mut cfg = config.clone();
        cfg.cartpole.cart_friction = c;
        cfg.cartpole.pivot_friction = if c == 0.0 { 0.0 } else { 0.002 };
        let lab = Lab::new(cfg, out.solution.clone()).unwrap();
        let params = &lab.config.cartpole;
        let mut exits = 0;
        let mut cells = 0;
        let mut max_v_seen: f64 = 0.0;
        let mut worst_cell = (0.0, 0.0);
        for xi in 0..41 {
            for ti in 0..41 {
                let x = -1.0 + 2.0 * xi as f64 / 40.0;
                let theta = -1.0 + 2.0 * ti as f64 / 40.0;
                let s0 = CartPoleState { x, v: 0.0, theta, omega: 0.0 };
                if !envelope_membership(&s0.to_vector(), &lab.envelope).unwrap().1 { continue; }
                cells += 1;
                let mut s = s0;
                let mut exited = false;
                let mut vmax: f64 = 0.0;
                for _ in 0..1500 {
                    let sv = s.to_vector();
                    let a_phy = (&lab.design.f * &sv)[(0, 0)];
                    let a_drl = (kv * s.v + kw * s.omega).clamp(-10.0, 10.0);
                    let a = (a_phy + a_drl).clamp(-16.0, 16.0);
                    s = step(&s, a, 0.0, params).unwrap();
                    vmax = vmax.max(s.v.abs());
                    if !envelope_membership(&s.to_vector(), &lab.envelope).unwrap().1 { exited = true; break; }
                }
                if exited { exits += 1; worst_cell = (x, theta); }
                max_v_seen = max_v_seen.max(vmax);
            }
        }
        println!("{label}: {exits}/{cells} cells exit the envelope; max |v| seen {max_v_seen:.2}; example exiting cell {worst_cell:?}");
    }
}
