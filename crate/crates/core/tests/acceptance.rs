//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process fails if any check fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use charge_diagram::bathrate::{self, RateOptions};
use charge_diagram::diagram::{self, DiagramOptions, PhasePoint, SupportOracle};
use charge_diagram::error::Error;
use charge_diagram::finite::{
    self, sampling, AetOptions, AmcParams, Ensemble, TrimOptions, TypicalSet, TypicalityParams,
};
use charge_diagram::gibbs::{self, SolverOptions};
use charge_diagram::linalg::{self, CMatrix};
use charge_diagram::operators::{self, ChargeSet, DensityState, Observable, Projector};
use charge_diagram::thermo::{self, Scenario};
use nalgebra::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = fn() -> Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian Hermitian matrix scaled to unit operator norm.
fn random_charge(d: usize, r: &mut ChaCha8Rng) -> Observable<f64> {
    let g = CMatrix::<f64>::from_fn(d, d, |_, _| Complex::new(r.sample(StandardNormal), r.sample(StandardNormal)));
    let h = (&g + g.adjoint()) * Complex::new(0.5, 0.0);
    let norm = linalg::op_norm(&h);
    Observable::new(h * Complex::new(1.0 / norm, 0.0)).unwrap()
}

fn random_charges(d: usize, c: usize, r: &mut ChaCha8Rng) -> ChargeSet<f64> {
    ChargeSet::new((0..c).map(|_| random_charge(d, r)).collect()).unwrap()
}

fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

fn sz() -> Observable<f64> {
    Observable::pauli_z()
}

fn ensure(ok: bool, msg: String) -> Result<String, String> {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gibbs_round_trip() -> Result<String, String> {
    let mut r = rng(1);
    let opts = SolverOptions::default();
    let (mut worst_beta, mut worst_res) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let d = 2 + i % 5;
        let c = 1 + (i / 5) % 4;
        let c = c.min(d * d - 1);
        let charges = random_charges(d, c, &mut r);
        let beta: Vec<f64> = (0..c).map(|_| uniform(&mut r, -3.0, 3.0)).collect();
        let fwd = gibbs::ggs_from_beta(&charges, &beta).map_err(|e| format!("instance {i}: {e}"))?;
        let back = gibbs::solve_beta(&charges, &fwd.charge_values, &opts).map_err(|e| format!("instance {i}: {e}"))?;
        let err = beta.iter().zip(&back.beta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let res = charges
            .values(&back.tau)
            .iter()
            .zip(&fwd.charge_values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_beta = worst_beta.max(err);
        worst_res = worst_res.max(res);
    }
    ensure(
        worst_beta <= 1e-6 && worst_res <= 1e-10,
        format!("200 instances, max |beta error| {worst_beta:.2e}, max residual {worst_res:.2e}"),
    )
}

fn max_entropy_dominance() -> Result<String, String> {
    let mut r = rng(2);
    let solver = SolverOptions::default();
    let dopts = DiagramOptions::default();
    let mut worst = f64::NEG_INFINITY;
    let mut total = 0;
    for (d, c) in [(2, 1), (2, 3), (3, 2), (4, 3), (5, 4)] {
        let charges = random_charges(d, c, &mut r);
        for k in 0..1000 {
            // alternate full-rank and rank-deficient states
            let rho = if k % 2 == 0 {
                sampling::hilbert_schmidt::<f64>(d, &mut r)
            } else {
                let g = CMatrix::<f64>::from_fn(d, 1, |_, _| Complex::new(r.sample(StandardNormal), r.sample(StandardNormal)));
                DensityState::from_positive(&g * g.adjoint()).unwrap()
            };
            let a = charges.values(&rho);
            let smax = match diagram::max_entropy_at(&charges, &a, &solver) {
                Ok(s) => s,
                Err(_) => diagram::entropy_ceiling(&charges, &a, &dopts).map_err(|e| format!("d={d} c={c}: {e}"))?,
            };
            worst = worst.max(operators::entropy(&rho) - smax);
            total += 1;
        }
    }
    ensure(worst <= 1e-9, format!("{total} states, max S(rho) - S(tau(a(rho))) = {worst:.2e}"))
}

fn bloch_oracle() -> Result<String, String> {
    let charges = ChargeSet::<f64>::pauli_triple();
    let opts = DiagramOptions::default();
    let oracle = SupportOracle::new(&charges, &opts);
    let k = 22;
    let grid: Vec<f64> = (0..k).map(|i| -1.3 + 2.6 * i as f64 / (k - 1) as f64).collect();
    let (mut worst, mut wrong, mut n) = (0.0f64, 0, 0);
    for &x in &grid {
        for &y in &grid {
            for &z in &grid {
                let a = [x, y, z];
                let norm = (x * x + y * y + z * z).sqrt();
                let rep = diagram::achievable_with(&oracle, &a, &opts).map_err(|e| e.to_string())?;
                worst = worst.max((rep.margin - (1.0 - norm)).abs());
                if (1.0 - norm).abs() > 1e-6 && rep.inside != (norm <= 1.0) {
                    wrong += 1;
                }
                n += 1;
            }
        }
    }
    ensure(
        wrong == 0 && worst <= 1e-6,
        format!("{n} grid points, {wrong} misclassified, max |margin - (1 - |a|)| = {worst:.2e}"),
    )
}

fn diagram_scaling() -> Result<String, String> {
    let mut r = rng(4);
    let opts = DiagramOptions::default();
    let sets = [
        ChargeSet::new(vec![sz(), Observable::pauli_x()]).unwrap(),
        random_charges(3, 2, &mut r),
    ];
    let (mut disagree, mut worst, mut n) = (0, 0.0f64, 0);
    for (k, one) in sets.iter().enumerate() {
        let two = one.total(2, 4096).unwrap();
        let o1 = SupportOracle::new(one, &opts);
        let o2 = SupportOracle::new(&two, &opts);
        let bound = one.charges().iter().map(|a| linalg::op_norm(a.matrix())).fold(0.0, f64::max) * 1.1;
        let smax = (one.dim() as f64).ln() * 1.1;
        for _ in 0..250 {
            let a: Vec<f64> = (0..one.len()).map(|_| uniform(&mut r, -bound, bound)).collect();
            let s = uniform(&mut r, -0.1, smax);
            let p1 = PhasePoint::new(a.clone(), s);
            let p2 = PhasePoint::new(a.iter().map(|x| 2.0 * x).collect(), 2.0 * s);
            let m1 = diagram::phase_member_with(&o1, &p1, &opts).map_err(|e| format!("set {k}: {e}"))?;
            let m2 = diagram::phase_member_with(&o2, &p2, &opts).map_err(|e| format!("set {k}: {e}"))?;
            worst = worst.max((m2.margin - 2.0 * m1.margin).abs());
            if m1.margin.abs() > 1e-6 && m1.inside != m2.inside {
                disagree += 1;
            }
            n += 1;
        }
    }
    ensure(
        disagree == 0 && worst <= 1e-6,
        format!("{n} points, {disagree} disagreements, max |margin_2 - 2 margin_1| = {worst:.2e}"),
    )
}

fn hessian() -> Result<String, String> {
    let mut r = rng(5);
    let opts = SolverOptions::default();
    let (mut asym, mut top) = (0.0f64, f64::NEG_INFINITY);
    for i in 0..100 {
        let d = 2 + i % 3;
        let c = 1 + i % 3;
        let charges = random_charges(d, c, &mut r);
        let rho = sampling::hilbert_schmidt::<f64>(d, &mut r);
        let a = charges.values(&rho);
        let j = gibbs::entropy_jacobian(&charges, &a, &opts).map_err(|e| format!("point {i}: {e}"))?;
        asym = asym.max((&j - j.transpose()).abs().max());
        let h = gibbs::entropy_hessian(&charges, &a, &opts).map_err(|e| e.to_string())?;
        let eig = h.symmetric_eigen().eigenvalues;
        top = top.max(eig.max());
    }
    let q = gibbs::entropy_hessian(&ChargeSet::single(sz()), &[0.0], &opts).map_err(|e| e.to_string())?[(0, 0)];
    ensure(
        asym <= 1e-6 && top < 0.0 && (q + 1.0).abs() <= 1e-4,
        format!("100 points, max asymmetry {asym:.2e}, largest eigenvalue {top:.3e}; qubit sigma_z at 0: {q:.6}"),
    )
}

fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Qubit system and bath with `sigma_z`, `beta = 1`, `Delta E_S + W = 0.1` and the
/// system entropy raised from 0 by `0.1 + delta`, so the second-law gap is `delta`.
fn rate_scenario(delta: f64) -> Scenario<f64> {
    let target = 0.1 + delta;
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let charges = ChargeSet::single(sz());
    let rho = DensityState::diagonal(&[1.0, 0.0]).unwrap();
    let sigma = DensityState::diagonal(&[q, 1.0 - q]).unwrap();
    let delta_a = (2.0 * q - 1.0) - 1.0;
    Scenario::new(charges.clone(), charges, vec![1.0], rho, sigma, vec![0.1 - delta_a]).unwrap()
}

fn bath_rate() -> Result<String, String> {
    let opts = RateOptions::default();
    let bath = ChargeSet::single(sz());
    let mut gaps = Vec::new();
    for delta in [1e-3, 1e-4] {
        let sc = rate_scenario(delta);
        let got = thermo::second_law_gap(&sc).unwrap();
        if (got - delta).abs() > 1e-12 {
            return Err(format!("scenario gap {got:e} instead of {delta:e}"));
        }
        let exact = bathrate::optimal_rate_exact(&sc, &bath, &opts).map_err(|e| e.to_string())?;
        let quad = bathrate::optimal_rate_quadratic(&sc, &bath, &opts).map_err(|e| e.to_string())?;
        gaps.push(((exact.r_star - quad) / exact.r_star).abs());
    }
    let q = bathrate::optimal_rate_quadratic(&rate_scenario(0.01), &bath, &opts).map_err(|e| e.to_string())?;
    ensure(
        gaps[0] <= 0.05 && gaps[1] <= 0.02 && (q - 1.1906).abs() <= 1e-3,
        format!(
            "relative gap {:.3}% at delta=1e-3, {:.3}% at 1e-4; quadratic at 0.01 = {q:.5}",
            100.0 * gaps[0],
            100.0 * gaps[1]
        ),
    )
}

fn random_state(d: usize, r: &mut ChaCha8Rng) -> DensityState<f64> {
    sampling::hilbert_schmidt::<f64>(d, r)
}

fn second_law_consistency() -> Result<String, String> {
    let mut r = rng(7);
    let opts = RateOptions::default();
    let (mut feasible, mut infeasible, mut i) = (0, 0, 0);
    let mut min_gap = f64::INFINITY;
    while feasible < 200 || infeasible < 50 {
        i += 1;
        if i > 5000 {
            return Err(format!("only {feasible} feasible / {infeasible} infeasible scenarios drawn"));
        }
        let c = 1 + i % 2;
        let ds = 2 + i % 3;
        let db = 2 + (i / 2) % 2;
        let sys = random_charges(ds, c, &mut r);
        let bath = random_charges(db, c, &mut r);
        let beta: Vec<f64> = (0..c).map(|_| uniform(&mut r, -2.0, 2.0)).collect();
        let work: Vec<f64> = (0..c).map(|_| uniform(&mut r, -0.5, 0.3)).collect();
        let sc = Scenario::new(sys, bath.clone(), beta, random_state(ds, &mut r), random_state(ds, &mut r), work).unwrap();
        let delta = thermo::second_law_gap(&sc).unwrap();
        let ray = sc.ray().unwrap();
        if ray.is_degenerate() {
            continue;
        }
        let oracle = SupportOracle::new(&bath, &opts.diagram);
        match bathrate::optimal_rate_on_ray(&ray, &oracle, &opts) {
            Err(Error::NegativeGap { .. }) if delta < 0.0 => infeasible += 1,
            Err(e) if delta < 0.0 => return Err(format!("scenario {i}: delta {delta:e} reported as {e}")),
            Ok(_) if delta < 0.0 => return Err(format!("scenario {i}: delta {delta:e} accepted")),
            Err(e) => return Err(format!("scenario {i}: {e}")),
            Ok(rep) => {
                if feasible >= 200 {
                    continue;
                }
                feasible += 1;
                min_gap = min_gap.min(delta);
                for f in [1.0, 1.001, 1.5, 2.0, 10.0, 1e3, 1e6] {
                    let p = ray.point(rep.r_star * f).unwrap();
                    let m = diagram::phase_member_with(&oracle, &p, &opts.diagram).unwrap();
                    if !m.inside {
                        return Err(format!("scenario {i}: R = {f} R* is outside (margin {:e})", m.margin));
                    }
                }
            }
        }
    }
    ensure(
        min_gap >= -1e-9,
        format!("{feasible} feasible scenarios all inside for R >= R*, {infeasible} with delta < 0 rejected"),
    )
}

fn typicality() -> Result<String, String> {
    let states = [
        DensityState::diagonal(&[0.9, 0.1]).unwrap(),
        DensityState::diagonal(&[0.7, 0.3]).unwrap(),
        DensityState::bloch([0.3, -0.2, 0.5]).unwrap(),
        DensityState::maximally_mixed(2),
    ];
    let mut cases = 0;
    for (k, st) in states.iter().enumerate() {
        for n in 4..=12 {
            for alpha in [0.5, 1.0, 2.0] {
                let set = TypicalSet::new(&vec![st.clone(); n], &TypicalityParams::new(alpha, n)).map_err(|e| e.to_string())?;
                let s = set.stats(alpha);
                if !s.all_ok() {
                    return Err(format!("state {k}, n={n}, alpha={alpha}: {s:?}"));
                }
                cases += 1;
            }
        }
    }
    ensure(true, format!("{cases} (state, n, alpha) cases, all three bounds hold"))
}

/// Multiplicities of the distinct nonzero eigenvalues.
fn multiplicities(values: &[f64]) -> Vec<usize> {
    let mut v: Vec<f64> = values.iter().copied().filter(|&x| x > 1e-14).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out: Vec<usize> = Vec::new();
    let mut prev = f64::NAN;
    for x in v {
        if (x - prev).abs() <= 1e-12 * x.max(1e-300) * 1e2 {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
        prev = x;
    }
    out
}

fn trimming() -> Result<String, String> {
    let states = [
        DensityState::diagonal(&[0.8, 0.2]).unwrap(),
        DensityState::bloch([0.4, 0.1, 0.3]).unwrap(),
        DensityState::diagonal(&[0.6, 0.3, 0.1]).unwrap(),
    ];
    let (mut cases, mut worst_rec, mut worst_ratio) = (0, 0.0f64, 0.0f64);
    for (k, st) in states.iter().enumerate() {
        for n in 3..=7 {
            if st.dim() == 3 && n > 6 {
                continue;
            }
            for alpha in [0.5, 1.0] {
                let factors = vec![st.clone(); n];
                let params = TypicalityParams::new(alpha, n);
                let dim = st.dim().pow(n as u32);
                for support in [Projector::identity(dim), finite::typical_projector(&factors, &params).unwrap().0] {
                    let tag = format!("state {k}, n={n}, alpha={alpha}");
                    let res = finite::trim_state(&factors, &params, &support, &TrimOptions::default())
                        .map_err(|e| format!("{tag}: {e}"))?;
                    let flat = res.is_flat()
                        && res.bin_table.iter().all(|b| b.kept % res.tau_rank == 0)
                        && multiplicities(&res.trimmed.eigenvalues()).iter().all(|m| m % res.tau_rank == 0);
                    if !flat {
                        return Err(format!("{tag}: spectrum not {}-fold flat", res.tau_rank));
                    }
                    if res.discarded_weight() > res.discarded_bound {
                        return Err(format!("{tag}: discarded {} > bound {}", res.discarded_weight(), res.discarded_bound));
                    }
                    worst_rec = worst_rec.max(res.reconstruction_error);
                    worst_ratio = worst_ratio.max(res.discarded_weight() / res.discarded_bound);
                    cases += 1;
                }
            }
        }
    }
    ensure(
        worst_rec <= 1e-10,
        format!("{cases} cases flat, max discarded/bound {worst_ratio:.3}, max reconstruction error {worst_rec:.2e}"),
    )
}

fn aet_trend() -> Result<String, String> {
    let charges = ChargeSet::single(sz());
    let rho = DensityState::diagonal(&[0.7, 0.3]).unwrap();
    let (mut dists, mut comms) = (Vec::new(), Vec::new());
    for n in [2usize, 4, 6, 8] {
        let sigma = DensityState::bloch([0.3 / n as f64, 0.0, 0.4]).unwrap();
        let gamma = (operators::entropy(&rho) - operators::entropy(&sigma)).abs() * 1.0000001;
        let params = TypicalityParams::new((n as f64).cbrt(), n);
        let opts = AetOptions {
            gamma,
            eta: 1.0 / (n as f64).sqrt(),
            ..AetOptions::default()
        };
        let (_, rep) = finite::aet_transform(&vec![rho.clone(); n], &vec![sigma; n], &charges, &params, &opts)
            .map_err(|e| format!("n={n}: {e}"))?;
        dists.push(rep.trace_distance);
        comms.push(rep.commutator_norms[0]);
    }
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let mut same = 0.0f64;
    for n in [2usize, 4, 6] {
        let f = vec![rho.clone(); n];
        let (_, rep) = finite::aet_transform(&f, &f, &charges, &TypicalityParams::new(1.0, n), &AetOptions::default())
            .map_err(|e| format!("identical, n={n}: {e}"))?;
        same = same.max(rep.trace_distance);
        same = rep.commutator_norms.iter().fold(same, |m, &x| m.max(x));
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    ensure(
        mono(&dists) && mono(&comms) && same <= 1e-9,
        format!(
            "n=2,4,6,8 trace distance [{}], commutator [{}]; identical inputs {same:.1e}",
            fmt(&dists),
            fmt(&comms)
        ),
    )
}

fn amc_empirical() -> Result<String, String> {
    let cases = [
        (ChargeSet::single(sz()), vec![0.0]),
        (ChargeSet::new(vec![sz(), Observable::pauli_x()]).unwrap(), vec![0.0, 0.0]),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (charges, values) in &cases {
        let (mut deltas, mut epss) = (Vec::new(), Vec::new());
        for n in 3..=6 {
            let mut p = AmcParams::new(values.clone(), 0.4, 0.1, 0.1, 0.45, n);
            p.samples = 300;
            p.seed = 0;
            let proj = finite::amc_construct(charges, &p).map_err(|e| format!("c={}, n={n}: {e}", charges.len()))?;
            let rep = finite::amc_validate(&proj, charges, &p, 300).map_err(|e| e.to_string())?;
            deltas.push(rep.empirical_delta);
            epss.push(rep.empirical_epsilon);
        }
        let dec = epss.windows(2).all(|w| w[1] < w[0]);
        let small = deltas.iter().all(|&d| d <= 0.2);
        ok &= dec && small;
        lines.push(format!(
            "c={}: delta [{}] eps [{}]",
            charges.len(),
            deltas.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" "),
            epss.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
        ));
    }
    // commuting charge, diagonal states: the window itself
    let charges = ChargeSet::single(sz());
    let mut p = AmcParams::new(vec![0.0], 0.4, 0.1, 0.1, 0.45, 6);
    p.ensemble = Ensemble::Diagonal;
    let proj = finite::amc_construct(&charges, &p).map_err(|e| e.to_string())?;
    let exact = finite::amc_validate(&proj, &charges, &p, 100).map_err(|e| e.to_string())?;
    let theory = finite::amc_theoretical_params(100, 2, 3, 0.1);
    ok &= exact.empirical_delta == 0.0 && theory.delta_prime > 1.0;
    lines.push(format!(
        "commuting delta {}, theoretical delta' at n=100 {:.3e}",
        exact.empirical_delta, theory.delta_prime
    ));
    ensure(ok, lines.join("; "))
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_charge-diagram"))
}

fn run_cli(args: &[&str], threads: &str) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(bin())
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("CHARGE_DIAGRAM_DIM_CAP")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn cli_determinism() -> Result<String, String> {
    let dir = std::env::temp_dir().join(format!("charge-diagram-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let scenario = dir.join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{
  "dims": [2, 2],
  "system_charges": [[[1, 0], [0, -1]], [[0, 1], [1, 0]]],
  "bath_charges": [[[1, 0], [0, -1]], [[0, [0, -1]], [[0, 1], 0]]],
  "beta": [1.0, 0.5],
  "rho_S": [[0.9, 0.1], [0.1, 0.1]],
  "sigma_S": [[0.5, 0], [0, 0.5]],
  "work": [-0.4, 0.1],
  "options": {"seed": 11}
}"#,
    )
    .map_err(|e| e.to_string())?;
    let s = scenario.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["thermo", "second-law", "--scenario", s],
        vec!["thermo", "fixed-bath", "--scenario", s],
        vec!["bathrate", "optimal", "--scenario", s, "--delta-sweep", "1:2"],
        vec!["diagram", "member", "--scenario", s, "--point", "0.2,0.1,0.4"],
        vec!["finite", "amc", "--scenario", s, "--n", "4", "--values", "0,0", "--eta", "0.4", "--eta-prime", "0.1", "--s", "0.1", "--t", "0.45", "--samples", "100", "--trials", "50", "--seed", "3"],
    ];
    let mut checked = 0;
    for args in &commands {
        let (c1, o1) = run_cli(args, "1")?;
        let (c2, o2) = run_cli(args, "1")?;
        let (c3, o3) = run_cli(args, "4")?;
        if o1.is_empty() {
            return Err(format!("{} printed nothing (exit {c1})", args[..2].join(" ")));
        }
        if !(o1 == o2 && o1 == o3 && c1 == c2 && c1 == c3) {
            return Err(format!("{} output differs between runs", args[..2].join(" ")));
        }
        serde_json::from_slice::<serde_json::Value>(&o1).map_err(|e| format!("{}: {e}", args[..2].join(" ")))?;
        checked += 1;
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(true, format!("{checked} commands byte-identical across runs and 1 vs 4 threads"))
}

fn main() {
    let checks: [(&str, Check); 12] = [
        ("gibbs round trip", gibbs_round_trip),
        ("maximum-entropy dominance", max_entropy_dominance),
        ("Bloch ball oracle", bloch_oracle),
        ("diagram scaling", diagram_scaling),
        ("entropy Hessian", hessian),
        ("bath rate", bath_rate),
        ("second-law consistency", second_law_consistency),
        ("typicality bounds", typicality),
        ("trimming", trimming),
        ("AET trend", aet_trend),
        ("a.m.c. empirical", amc_empirical),
        ("CLI determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("[{:>2}] PASS {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[{:>2}] FAIL {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
