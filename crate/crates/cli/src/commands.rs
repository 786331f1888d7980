//! The experiments behind each subcommand.

use std::fs::File;
use std::io::{BufWriter, Write};

use hbridge::bridges::{
    extract_lambda, extract_psi, s_independence_spread, sample_bridges, BridgeSpec, Route, TimeGrid,
};
use hbridge::finite_chain::{
    bridge_grid, bridges_equal, chain_bridge_distribution, parse_chain_source, perron::perron_pair,
    recover_from_single_bridge, ChainModel,
};
use hbridge::measure_kernel::{
    chapman_kolmogorov_residual, duality_residual, eigen_residual, flipped_bessel_kernel, flipped_bessel_zero_limit,
    normalization_residual, FlipVariant, KernelId, Side, TestFunction, TransitionKernel,
};
use hbridge::montecarlo::{
    energy_distance_test, euler_maruyama, histogram_tv, ks_two_sample, mc_mean_with_se, poisson_flip_simulate,
    RngPolicy,
};
use hbridge::par::try_collect_draws;
use hbridge::{Exec, Quadrature};
use serde_json::json;

use crate::config::Settings;
use crate::error::CliError;
use crate::report::{Assertion, Compare, Report};

type Outcome = Result<(), CliError>;

/// Every kernel in the catalog, as exercised by `verify-kernels` without `--kernel`.
pub fn catalog() -> Vec<KernelId> {
    vec![
        KernelId::Gaussian,
        KernelId::Drift(1.0),
        KernelId::Tanh(1.0, 0.0),
        KernelId::Tanh(0.5, 1.0),
        KernelId::Bessel3,
        KernelId::FlipBessel(FlipVariant::X),
        KernelId::FlipBessel(FlipVariant::Y),
    ]
}

fn seed(s: &Settings) -> Result<u64, CliError> {
    s.or("seed", 1u64)
}

fn csv_out(s: &Settings) -> Result<Option<BufWriter<File>>, CliError> {
    Ok(match s.raw("csv") {
        Some(path) => Some(BufWriter::new(File::create(path)?)),
        None => None,
    })
}

fn start_points(k: &TransitionKernel) -> Vec<f64> {
    if k.support().lo == 0.0 {
        vec![0.0, 0.5, 2.0]
    } else {
        vec![-1.0, 0.0, 0.5, 2.0]
    }
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn verify_kernels(s: &Settings, r: &mut Report) -> Outcome {
    let ids = match s.raw("kernel") {
        None | Some("all") => catalog(),
        Some(_) => vec![s.kernel("kernel", None)?],
    };
    let tol = s.positive("tol", 1e-6)?;
    let q = Quadrature::default();
    let mut rows = Vec::new();
    for id in &ids {
        let k = id.kernel()?;
        let pair = id.eigenpair()?;
        let xs = start_points(&k);
        let (mut ck, mut norm, mut eig, mut dual): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for (a, b) in [(0.25, 0.75), (1.0, 3.0)] {
            for &x in &xs {
                for &y in &xs {
                    ck = ck.max(chapman_kolmogorov_residual(&k, a, b, x, y, &q)?);
                }
            }
        }
        for t in [0.25, 1.0, 4.0] {
            for &x in &xs {
                norm = norm.max(normalization_residual(&k, t, x, &q)?);
                eig = eig.max(eigen_residual(&k, &pair, t, x, &q)?);
            }
        }
        let f = TestFunction::indicator(xs[0], 0.5)?;
        let g = TestFunction::indicator(0.25, 2.0)?;
        for t in [0.25, 1.0] {
            dual = dual.max(duality_residual(&k, t, &f, &g, &q)?);
        }
        let name = id.to_string();
        rows.push(json!({
            "kernel": name,
            "eigenpair": pair.label(),
            "lambda": pair.lambda,
            "chapman_kolmogorov": ck,
            "normalization": norm,
            "eigen": eig,
            "duality": dual,
        }));
        r.check(Assertion::new("measure_kernel.chapman_kolmogorov", ck, Compare::Below, tol).with_detail(&name));
        r.check(Assertion::new("measure_kernel.normalization", norm, Compare::Below, tol).with_detail(&name));
        r.check(Assertion::new("measure_kernel.eigen", eig, Compare::Below, tol).with_detail(&name));
        r.check(Assertion::new("measure_kernel.duality", dual, Compare::Below, tol).with_detail(&name));
    }
    r.result("kernels", rows);
    if let Some(mut w) = csv_out(s)? {
        let t = s.positive("t", 1.0)?;
        writeln!(w, "kernel,t,x,y,density,lebesgue_density")?;
        for id in &ids {
            let k = id.kernel()?;
            let x: f64 = s.or("x", 0.0)?;
            let lo = if k.support().lo == 0.0 { 1e-3 } else { x - 6.0 * t.sqrt() };
            for y in lin(lo, x.max(0.0) + 6.0 * t.sqrt(), 241) {
                writeln!(w, "{id},{t},{x},{y},{},{}", k.density(t, x, y)?, k.lebesgue_density(t, x, y)?)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

fn load_chain(source: &str) -> Result<ChainModel, CliError> {
    Ok(parse_chain_source(source, |p| std::fs::read_to_string(p))?)
}

pub fn verify_chain(s: &Settings, r: &mut Report) -> Outcome {
    let p = load_chain(s.raw("chain").unwrap_or("random:8:1"))?;
    let n = p.n();
    let tol = s.positive("tol", 1e-10)?;
    let pair = p.perron()?;
    let q = match s.raw("chain_b") {
        Some(src) => load_chain(src)?,
        None => p.h_transform(&pair.psi, pair.lambda)?,
    };
    if q.n() != n {
        return Err(CliError::Config(format!("chains have {n} and {} states", q.n())));
    }
    let states: Vec<usize> = if n <= 4 { (0..n).collect() } else { (0..4).map(|j| j * (n - 1) / 3).collect() };
    let grid = bridge_grid(&states, &[0.3, 0.8, 1.5, 3.0], &states, &[0.2, 0.5, 0.8]);
    let cmp = bridges_equal(&p, &q, &grid, tol, Exec::default())?;
    r.result("states", n);
    r.result("lambda", pair.lambda);
    r.result("psi", &pair.psi);
    r.result("bridge_comparison", cmp);
    r.check(Assertion::new("finite_chain.bridges_equal", cmp.max_deviation, Compare::AtMost, tol));

    if s.raw("chain_b").is_none() {
        let (left, _) = perron_pair(&p.generator().transpose())?;
        let expected: Vec<f64> = (0..n).map(|x| pair.psi[x] * left[x]).collect();
        let gap = normalized(&expected)
            .iter()
            .zip(normalized(q.weights().as_slice()))
            .map(|(e, a)| (a / e - 1.0).abs())
            .fold(0.0, f64::max);
        r.check(Assertion::new("finite_chain.h_transform_measure", gap, Compare::AtMost, tol.max(1e-9)));
    }

    let x0: usize = s.or("x", 0)?;
    let y0: usize = s.or("y", n - 1)?;
    let t0 = s.positive("t", 1.0)?;
    if x0 >= n || y0 >= n {
        return Err(CliError::Config(format!("states x = {x0}, y = {y0} must be below {n}")));
    }
    let rec = recover_from_single_bridge(&p, &q, x0, t0, y0)?;
    r.check(
        Assertion::new("finite_chain.single_bridge_recovery", f64::from(u8::from(rec.verified)), Compare::Above, 0.5)
            .with_detail(&rec.diagnostic),
    );
    r.result("recovery", &rec);

    if let Some(mut w) = csv_out(s)? {
        writeln!(w, "s,state,bridge_a,bridge_b")?;
        for i in 1..=9 {
            let sv = t0 * i as f64 / 10.0;
            let a = chain_bridge_distribution(&p, x0, t0, y0, sv)?;
            let b = chain_bridge_distribution(&q, x0, t0, y0, sv)?;
            for z in 0..n {
                writeln!(w, "{sv},{z},{},{}", a[z], b[z])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn route_setting(s: &Settings) -> Result<Route, CliError> {
    match s.raw("route").unwrap_or("auto") {
        "auto" => Ok(Route::Auto),
        "generic" => Ok(Route::Generic),
        other => Err(CliError::Config(format!("route must be auto or generic, got {other:?}"))),
    }
}

fn bridge_spec(s: &Settings, key: &str, default: Option<&str>) -> Result<(KernelId, BridgeSpec), CliError> {
    let id = s.kernel(key, default)?;
    let x: f64 = s.or("x", 0.0)?;
    let t = s.positive("t", 1.0)?;
    let y: f64 = s.or("y", 0.5)?;
    Ok((id, BridgeSpec::new(id.kernel()?, x, t, y)?))
}

/// Mean of the bridge marginal at interior time `sv`, by quadrature.
fn marginal_mean(spec: &BridgeSpec, sv: f64, q: &Quadrature) -> Result<f64, CliError> {
    let (x, t, y) = (spec.x(), spec.t(), spec.y());
    let k = spec.kernel();
    let sup = k.support();
    let centre = x + (y - x) * sv / t;
    let scale = (sv * (t - sv) / t).sqrt();
    let f = |z: f64| z * spec.marginal_density_lebesgue(sv, z).unwrap_or(0.0);
    Ok(q.integrate_line(f, sup.lo, sup.hi, centre, scale, k.breakpoints())?)
}

pub fn sample_bridge(s: &Settings, r: &mut Report) -> Outcome {
    let (_, spec) = bridge_spec(s, "kernel", Some("gaussian"))?;
    let n = s.count("n", 100_000)?;
    let grid = s.grid(spec.t(), 8)?;
    let route = route_setting(s)?;
    let seed = seed(s)?;
    let pool = sample_bridges(&spec, &grid, n, route, &RngPolicy::new(seed), Exec::default())?;
    let q = Quadrature::default();
    let last = grid.len() - 1;
    let mut marginals = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut pin_gap: f64 = 0.0;
    for (j, &sv) in grid.times().iter().enumerate() {
        let col = pool.column(j);
        if j == 0 || j == last {
            let target = if j == 0 { spec.x() } else { spec.y() };
            pin_gap = col.iter().map(|v| (v - target).abs()).fold(pin_gap, f64::max);
            marginals.push(json!({ "time": sv, "mean": target, "se": 0.0 }));
            continue;
        }
        let (mean, se) = mc_mean_with_se(&col)?;
        let exact = marginal_mean(&spec, sv, &q)?;
        let z = if se > 0.0 { (mean - exact).abs() / se } else { f64::INFINITY };
        worst_z = worst_z.max(z);
        marginals.push(json!({ "time": sv, "mean": mean, "se": se, "exact_mean": exact }));
    }
    r.result("paths", n);
    r.result("marginals", marginals);
    r.check(Assertion::new("bridges.pinned_endpoints", pin_gap, Compare::AtMost, 0.0));
    r.check(Assertion::new("bridges.marginal_mean", worst_z, Compare::Below, 4.0).with_detail("worst standard score"));
    if let Some(mut w) = csv_out(s)? {
        pool.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// h-transformed kernels are sampled through their own densities so that a
/// comparison never reuses the other kernel's sampler.
fn comparison_route(k: &TransitionKernel) -> Route {
    if k.h_parts().is_some() {
        Route::Generic
    } else {
        Route::Auto
    }
}

fn fraction_positive(v: &[f64]) -> f64 {
    v.iter().filter(|&&z| z > 0.0).count() as f64 / v.len() as f64
}

fn ecdf(sorted: &[f64], z: f64) -> f64 {
    sorted.partition_point(|&v| v <= z) as f64 / sorted.len() as f64
}

pub fn compare_bridges(s: &Settings, r: &mut Report) -> Outcome {
    let (ida, a) = bridge_spec(s, "a", None)?;
    let (idb, b) = bridge_spec(s, "b", None)?;
    let t = a.t();
    let n = s.count("n", 100_000)?;
    let energy_n = s.count("energy_n", 1000)?.min(n);
    let sign_n = n.min(10_000);
    let perms = s.count("permutations", 500)?;
    let alpha = s.positive("alpha", 0.01)?;
    let tol = s.positive("tol", 1e-10)?;
    let grid = s.grid(t, 8)?;
    let policy = RngPolicy::new(seed(s)?);
    let (ra, rb) = (comparison_route(a.kernel()), comparison_route(b.kernel()));
    let exec = Exec::default();

    // Sign of the path immediately after time 0.
    let sign_grid = TimeGrid::with_first_step(1e-9 * t, 1, t)?;
    let sa = sample_bridges(&a, &sign_grid, sign_n, ra, &policy.derive(1), exec)?;
    let sb = sample_bridges(&b, &sign_grid, sign_n, rb, &policy.derive(2), exec)?;
    let (fa, fb) = (fraction_positive(&sa.column(1)), fraction_positive(&sb.column(1)));
    let se = (fa * (1.0 - fa) / sign_n as f64 + fb * (1.0 - fb) / sign_n as f64).sqrt();
    r.result("first_step_positive", json!({ "a": fa, "b": fb, "paths": sign_n, "first_step": 1e-9 * t }));
    r.check(
        Assertion::new("bridges.first_step_sign", (fa - fb).abs(), Compare::AtMost, 4.0 * se)
            .with_detail(format!("fraction of bridges positive right after 0: {ida} {fa}, {idb} {fb}")),
    );

    // Exact marginal densities.
    let mut gap: f64 = 0.0;
    let sup = a.kernel().support();
    for i in 1..=9 {
        let sv = t * i as f64 / 10.0;
        let centre = a.x() + (a.y() - a.x()) * sv / t;
        for z in lin(centre - 2.0, centre + 2.0, 9).into_iter().filter(|&z| sup.contains(z)) {
            let da = a.marginal_density_lebesgue(sv, z)?;
            let db = b.marginal_density_lebesgue(sv, z)?;
            gap = gap.max((da - db).abs() / da.abs().max(1.0));
        }
    }
    r.result("max_marginal_density_gap", gap);
    r.check(Assertion::new("bridges.marginal_density_equal", gap, Compare::AtMost, tol));

    // Mid-time marginals.
    let mid = TimeGrid::uniform(2, t)?;
    let ma = sample_bridges(&a, &mid, n, ra, &policy.derive(3), exec)?.column(1);
    let mb = sample_bridges(&b, &mid, n, rb, &policy.derive(4), exec)?.column(1);
    let ks = ks_two_sample(&ma, &mb)?.with_seed(policy.derive(3).master_seed);
    r.result("ks", &ks);
    r.check(Assertion::new("bridges.ks_equal_marginal", ks.p_value, Compare::Above, alpha));

    // Whole paths.
    let pa = sample_bridges(&a, &grid, energy_n, ra, &policy.derive(5), exec)?;
    let pb = sample_bridges(&b, &grid, energy_n, rb, &policy.derive(6), exec)?;
    let mut rng = policy.derive(7).stream(0);
    let energy = energy_distance_test(&pa.rows(), &pb.rows(), perms, &mut rng)?.with_seed(policy.derive(7).master_seed);
    r.result("energy", &energy);
    r.check(Assertion::new("bridges.energy_equal_paths", energy.p_value, Compare::Above, alpha));

    if let Some(mut w) = csv_out(s)? {
        write_ecdf_pairs(&mut w, ma, mb)?;
        w.flush()?;
    }
    Ok(())
}

fn write_ecdf_pairs(w: &mut impl Write, mut a: Vec<f64>, mut b: Vec<f64>) -> std::io::Result<()> {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let lo = a[0].min(b[0]);
    let hi = a[a.len() - 1].max(b[b.len() - 1]);
    writeln!(w, "z,ecdf_a,ecdf_b")?;
    for z in lin(lo, hi, 201) {
        writeln!(w, "{z},{},{}", ecdf(&a, z), ecdf(&b, z))?;
    }
    Ok(())
}

pub fn extract_psi_cmd(s: &Settings, r: &mut Report) -> Outcome {
    let (ka, kb) = (s.kernel("a", None)?.kernel()?, s.kernel("b", None)?.kernel()?);
    let t = s.positive("t", 1.0)?;
    let endpoint: f64 = s.or("y", 0.0)?;
    let anchor: f64 = s.or("x", 0.0)?;
    let (lo, hi): (f64, f64) = (s.or("z_min", -3.0)?, s.or("z_max", 3.0)?);
    let points = s.count("points", 25)?.max(2);
    let tol = s.positive("tol", 1e-10)?;
    if !(lo < hi) {
        return Err(CliError::Config(format!("need z_min < z_max, got {lo} and {hi}")));
    }
    let zs = lin(lo, hi, points);
    let psi = extract_psi(&ka, &kb, endpoint, t, anchor, &zs)?;
    let ss: Vec<f64> = (1..=8).map(|i| t * i as f64 / 9.0).collect();
    let spread = s_independence_spread(&ka, &kb, endpoint, t, &ss, &zs)?;
    let lambdas = ss.iter().map(|&sv| extract_lambda(&ka, &kb, endpoint, t, sv)).collect::<Result<Vec<_>, _>>()?;
    let lambda = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    let lambda_spread = lambdas.iter().map(|l| (l - lambda).abs()).fold(0.0, f64::max);
    r.result("z", &zs);
    r.result("psi", &psi);
    r.result("lambda", lambda);
    r.result("lambda_by_s", &lambdas);
    r.result("s_independence_spread", spread);
    r.check(Assertion::new("bridges.s_independence", spread, Compare::AtMost, tol));
    r.check(Assertion::new("bridges.lambda_linearity", lambda_spread, Compare::AtMost, tol * lambda.abs().max(1.0)));
    if let Some(mut w) = csv_out(s)? {
        writeln!(w, "z,psi")?;
        for (z, p) in zs.iter().zip(&psi) {
            writeln!(w, "{z},{p}")?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn bessel_demo(s: &Settings, r: &mut Report) -> Outcome {
    let t = s.positive("t", 1.0)?;
    let n = s.count("n", 100_000)?;
    let tol = s.positive("tol", 1e-10)?;
    let policy = RngPolicy::new(seed(s)?);
    let (kx, ky) = (flipped_bessel_kernel(FlipVariant::X), flipped_bessel_kernel(FlipVariant::Y));
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let (mut limit_gap, mut mirror_gap): (f64, f64) = (0.0, 0.0);
    for y in lin(0.25, 3.0, 12) {
        limit_gap = limit_gap.max(rel(kx.density(t, 0.0, y)?, flipped_bessel_zero_limit(t, Side::Plus, y)));
        limit_gap = limit_gap.max(rel(ky.density(t, 0.0, y)?, flipped_bessel_zero_limit(t, Side::Minus, y)));
        mirror_gap = mirror_gap.max(rel(kx.density(t, 0.0, y)?, ky.density(t, 0.0, -y)?));
    }
    r.check(Assertion::new("measure_kernel.flipped_bessel_zero_limit", limit_gap, Compare::AtMost, tol));
    r.check(Assertion::new("measure_kernel.flipped_bessel_mirror", mirror_gap, Compare::AtMost, tol));

    let e = (-2.0 * t).exp();
    let mut parity = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (i, v) in [FlipVariant::X, FlipVariant::Y].into_iter().enumerate() {
        let pos = try_collect_draws(Exec::default(), &policy.derive(i as u64), n, |rng| {
            poisson_flip_simulate(0.0, t, v, rng).map(|z| if z > 0.0 { 1.0 } else { 0.0 })
        })?;
        let (frac, se) = mc_mean_with_se(&pos)?;
        let target = if v == FlipVariant::X { (1.0 + e) / 2.0 } else { (1.0 - e) / 2.0 };
        let z = (frac - target).abs() / se;
        worst_z = worst_z.max(z);
        parity.push(json!({ "variant": format!("{v:?}"), "fraction_positive": frac, "se": se, "expected": target }));
    }
    r.result("fraction_positive", parity);
    r.check(Assertion::new("montecarlo.flip_parity", worst_z, Compare::Below, 3.0).with_detail("worst standard score"));
    if let Some(mut w) = csv_out(s)? {
        writeln!(w, "t,y,x_from_0,y_from_0,limit_0plus,limit_0minus")?;
        for y in lin(-3.0, 3.0, 120) {
            let (a, b) = (kx.density(t, 0.0, y)?, ky.density(t, 0.0, y)?);
            let (lp, lm) = (flipped_bessel_zero_limit(t, Side::Plus, y), flipped_bessel_zero_limit(t, Side::Minus, y));
            writeln!(w, "{t},{y},{a},{b},{lp},{lm}")?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn sde_crosscheck(s: &Settings, r: &mut Report) -> Outcome {
    let id = s.kernel("kernel", Some("tanh:1:0"))?;
    let mu = id.drift().ok_or_else(|| CliError::Config(format!("kernel {id} is not a drift diffusion")))?;
    let k = id.kernel()?;
    let x0: f64 = s.or("x", 0.0)?;
    let t = s.positive("t", 1.0)?;
    let dt = s.positive("dt", 1e-3)?;
    let n = s.count("n", 1_000_000)?;
    let bins = s.count("bins", 60)?;
    let tol = s.positive("tol", 0.02)?;
    let drift = |v: f64| mu.eval(v);
    let ends =
        try_collect_draws(Exec::default(), &RngPolicy::new(seed(s)?), n, |rng| euler_maruyama(&drift, x0, t, dt, rng))?;
    let lo = ends.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ends.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 * (hi - lo).max(1.0);
    let window = (lo - pad, hi + pad);
    let density = |y: f64| k.lebesgue_density(t, x0, y).unwrap_or(0.0);
    let tv = histogram_tv(&ends, density, bins, window, &Quadrature::default())?;
    r.result("endpoints", n);
    r.result("window", [window.0, window.1]);
    r.result("total_variation", tv);
    r.check(Assertion::new("montecarlo.euler_tv", tv, Compare::Below, tol).with_detail(format!("{id}, dt = {dt}")));
    if let Some(mut w) = csv_out(s)? {
        write_histogram(&mut w, &ends, &density, bins, window)?;
        w.flush()?;
    }
    Ok(())
}

fn write_histogram(
    w: &mut impl Write,
    samples: &[f64],
    density: &impl Fn(f64) -> f64,
    bins: usize,
    (lo, hi): (f64, f64),
) -> std::io::Result<()> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    writeln!(w, "bin_centre,empirical_density,exact_density")?;
    for (i, c) in counts.iter().enumerate() {
        let centre = lo + (i as f64 + 0.5) * width;
        let emp = *c as f64 / (samples.len() as f64 * width);
        writeln!(w, "{centre},{emp},{}", density(centre))?;
    }
    Ok(())
}
