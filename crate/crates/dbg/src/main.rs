use janossy::conditioning::condition;
use janossy::distributions::{edge_rho1, EdgeFamily, NumericParams};
use janossy::kernel::{make_kernel, Family};
use janossy::sampler::*;
use janossy::specfun::gauss_legendre;
use janossy::twode::{build_system, integrate_system};
use num_complex::Complex64;

fn gue_chi2(n: usize, count: usize, seed: u64) -> Chi2Result {
    let p = NumericParams::default();
    let batch = sample_gue_edge(n, count, seed).unwrap();
    let bins = BinSpec::uniform(-4.25, 2.0, 12, -5.75, 0.25, 12).unwrap();
    let mut expected = vec![vec![0.0f64; 12]; 12];
    for i in 0..12 {
        let rule_t = gauss_legendre(3, bins.t_edges[i], bins.t_edges[i + 1]).unwrap();
        for (&t, &wt) in rule_t.nodes.iter().zip(rule_t.weights.iter()) {
            let rho = edge_rho1(EdgeFamily::Airy, t).unwrap();
            let base = make_kernel(Family::Airy).unwrap();
            let ck = condition(&base, Complex64::new(t, p.epsilon)).unwrap();
            let sys = build_system(&ck).unwrap();
            let sol = integrate_system(&sys, p.lambda, bins.s_edges[0] - 0.05).unwrap();
            for j in 0..12 {
                let s_hi = bins.s_edges[j + 1].min(t);
                let s_lo = bins.s_edges[j];
                if s_hi <= s_lo { continue; }
                let rule_s = gauss_legendre(3, s_lo, s_hi).unwrap();
                let inner: f64 = rule_s.nodes.iter().zip(rule_s.weights.iter())
                    .map(|(&s, &ws)| { let pt = sol.eval(s).unwrap(); ws * rho * pt.r * pt.logdet.exp() })
                    .sum();
                expected[i][j] += wt * inner;
            }
        }
    }
    let hist = histogram2d(&batch, &bins).unwrap();
    chi2_compare(&hist, &expected, count).unwrap()
}

fn main() {
    for (n, count) in [(128usize, 100_000usize), (512, 100_000), (1024, 50_000)] {
        let r = gue_chi2(n, count, 77);
        println!("N={n} count={count}: chi2 {:.1} dof {} p {:.4}", r.statistic, r.dof, r.p_value);
    }
}
