//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;

mod common;
use common::{brute_stable, quadrature};

use salem_core::ap_verifier::{cross_cell_scan, node_certificates};
use salem_core::cantor_tree::{build_tree, derive_seed, save_tree, schedule_a, schedule_b, MeasureTree, Schedule};
use salem_core::discrete_ap::{
    behrend_sphere, double_embed, is_ap_free, property_ii_oracle, uniformity_sweep, BaseSet, Method, ResidueSet,
};
use salem_core::fourier::{decay_profile, increment_scan, modulation_check, mu_hat, mu_hat_batch_tree};
use salem_core::regularity::{dyadic_radii, frostman_scan, resolution_floor, theorem_b_mass_check, DEFAULT_GRID};

const T: f64 = 0.4;

type Verdict = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Verdict);

fn fixture_schedule(depth: usize) -> Schedule {
    let x = ResidueSet::new(25, [2, 4, 8, 10]).unwrap();
    schedule_a(25, &x, T, depth).unwrap()
}

fn fixture(seed: u64, depth: usize) -> MeasureTree {
    build_tree(&fixture_schedule(depth), seed, depth).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_oracle_equivalence() -> Verdict {
    let mut sets = 0u64;
    for m in 1..=8u64 {
        for mask in 0u64..1 << m {
            let set = ResidueSet::new(m, (0..m).filter(|i| mask >> i & 1 == 1)).unwrap();
            let (oracle, brute) = (property_ii_oracle(&set).holds, brute_stable(&set));
            ensure(oracle == brute, || format!("m = {m}, set {:?}: oracle {oracle}, brute {brute}", set.elements()))?;
            sets += 1;
        }
    }
    Ok(format!("{sets} subsets agree"))
}

fn c2_doubling_pipeline() -> Verdict {
    let mut report = Vec::new();
    let mut size_mismatch = Vec::new();
    for m in [25u64, 50, 100] {
        let x_prime = behrend_sphere(m / 5).elements;
        let x = double_embed(&x_prime, m).map_err(|e| e.to_string())?;
        ensure(property_ii_oracle(&x).holds, || format!("m = {m}: property (ii) fails"))?;
        ensure(is_ap_free(x.elements()), || format!("m = {m}: X has a 3-AP"))?;
        let density = (x.len() as f64).ln() / (m as f64).ln();
        report.push(format!("m={m} |X'|={} |X|={} log|X|/log m={density:.3}", x_prime.len(), x.len()));
        if x.len() != 2 * x_prime.len() {
            size_mismatch.push(format!("m={m}: |X|={} but 2|X'|={}", x.len(), 2 * x_prime.len()));
        }
    }
    let report = report.join("; ");
    if size_mismatch.is_empty() {
        Ok(report)
    } else {
        Err(format!(
            "oracle and AP-freeness hold, but |X| = 2|X'| does not ({}); X = {{2x : x ∈ X'}} is injective on \
             X' ⊂ [1, m/5] so |X| = |X'|. [{report}]",
            size_mismatch.join(", ")
        ))
    }
}

fn c3_certification() -> Verdict {
    let mut nodes = 0;
    for i in 0..10 {
        let tree = fixture(derive_seed(3, i), 4);
        let certs = node_certificates(&tree);
        ensure(certs.all_pass, || format!("seed {i}: {} node failures", certs.failures.len()))?;
        nodes += certs.nodes_checked;
        for n in 0..=4 {
            let found = cross_cell_scan(&tree, n, false).map_err(|e| e.to_string())?;
            ensure(found.is_empty(), || format!("seed {i}, level {n}: {} feasible triples", found.len()))?;
        }
    }
    Ok(format!("10 seeds, levels 0..=4 empty, {nodes} node certificates"))
}

fn c4_negative_control() -> Verdict {
    let set = ResidueSet::new(10, [0, 1, 2]).unwrap();
    let lone = || BaseSet { set: set.clone(), method: Method::Given };
    let tree = build_tree(&Schedule::custom(vec![lone(), lone()]).unwrap(), 1, 2).unwrap();
    let certs = node_certificates(&tree);
    ensure(!certs.all_pass, || "node certificates pass on {0,1,2} mod 10".into())?;
    let found = cross_cell_scan(&tree, 1, false).map_err(|e| e.to_string())?;
    ensure(!found.is_empty(), || "depth-1 scan is empty".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("bad.json");
    save_tree(&tree, &path, false).map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_salem"))
        .args(["verify-ap", "--tree", path.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.code() == Some(1), || format!("verify-ap exited with {status}"))?;
    Ok(format!("{} node failures, {} depth-1 triples, verify-ap exit 1", certs.failures.len(), found.len()))
}

fn c5_fourier_exactness() -> Verdict {
    let lone = |m, xs: &[u64]| BaseSet { set: ResidueSet::new(m, xs.iter().copied()).unwrap(), method: Method::Given };
    let custom = Schedule::custom(vec![lone(10, &[0, 3, 7]), lone(6, &[1, 4]), lone(7, &[0, 2, 5])]).unwrap();
    let fixtures = [
        ("A", fixture(5, 4)),
        ("B", build_tree(&schedule_b(8).unwrap(), 5, 8).unwrap()),
        ("custom", build_tree(&custom, 5, 3).unwrap()),
    ];
    let (mut worst_zero, mut worst_herm, mut worst_mod, mut worst_quad) = (0f64, 0f64, 0f64, 0f64);
    for (name, tree) in &fixtures {
        let schedule = tree.schedule();
        for n in 0..=tree.depth() {
            let e = mu_hat(tree, n, 0).map_err(|e| e.to_string())?;
            worst_zero = worst_zero.max((e - Complex64::new(1.0, 0.0)).norm());
            let ks: Vec<i64> = (-2000..=2000).collect();
            let batch = mu_hat_batch_tree(tree, n, &ks).map_err(|e| e.to_string())?;
            for k in 1..=2000 {
                let (pos, neg) = (batch.get(k).unwrap(), batch.get(-k).unwrap());
                worst_herm = worst_herm.max((neg - pos.conj()).norm());
            }
            if schedule.cell_count(n) <= &BigUint::from(64u32) {
                for k in -32..=32 {
                    let exact = mu_hat(tree, n, k).map_err(|e| e.to_string())?;
                    worst_quad = worst_quad.max((exact - quadrature(tree, n, k)).norm());
                }
            }
        }
        let n = tree.depth();
        let q = schedule.resolution(n).to_i64().unwrap();
        for i in 0..100 {
            let r = derive_seed(55, i);
            let k = (r % (2 * q as u64 + 1)) as i64 - q;
            let ell = [-3i64, -2, -1, 1, 2, 3][(r >> 40) as usize % 6];
            let residual = modulation_check(tree, n, k, ell).map_err(|e| e.to_string())?;
            ensure(residual <= 1e-9, || format!("{name}: modulation residual {residual:e} at k={k}, ell={ell}"))?;
            worst_mod = worst_mod.max(residual);
        }
    }
    ensure(worst_zero <= 1e-12, || format!("|mu(0) - 1| = {worst_zero:e}"))?;
    ensure(worst_herm <= 1e-12, || format!("Hermitian defect {worst_herm:e}"))?;
    ensure(worst_quad <= 1e-8, || format!("quadrature disagreement {worst_quad:e}"))?;
    Ok(format!(
        "|mu(0)-1| {worst_zero:.1e}, Hermitian {worst_herm:.1e}, modulation {worst_mod:.1e}, quadrature {worst_quad:.1e}"
    ))
}

fn c6_decay_trend() -> Verdict {
    let schedule = fixture_schedule(5);
    let ks: Vec<i64> = (1..=100_000).collect();
    let mut sigmas = Vec::new();
    for i in 0..5 {
        let tree = build_tree(&schedule, derive_seed(6, i), 5).unwrap();
        let profile = decay_profile(&mu_hat_batch_tree(&tree, 5, &ks).map_err(|e| e.to_string())?, 1)
            .map_err(|e| e.to_string())?;
        let fit = profile.fit.ok_or_else(|| format!("seed {i}: no fit"))?;
        let top = profile.bands.last().unwrap();
        let mid = 1.5 * (1u64 << top.band) as f64;
        let envelope = 5.0 * fit.c_hat * mid.powf(-fit.sigma_hat / 2.0);
        ensure(top.sup <= envelope, || format!("seed {i}: top band sup {} > {envelope}", top.sup))?;
        sigmas.push(fit.sigma_hat);
    }
    sigmas.sort_by(f64::total_cmp);
    let median = sigmas[sigmas.len() / 2];
    let (lo, hi) = (T / 2.0 - 0.25, T / 2.0 + 0.35);
    ensure((lo..=hi).contains(&median), || format!("median sigma {median:.4} outside [{lo}, {hi}]"))?;
    Ok(format!("median sigma {median:.4} in [{lo:.2}, {hi:.2}], seeds {sigmas:.3?}"))
}

fn c7_increments() -> Verdict {
    let schedule = fixture_schedule(3);
    let (mut with_exceedance, mut proxy) = (0u64, 0.0);
    for i in 0..100 {
        let tree = build_tree(&schedule, derive_seed(7, i), 3).unwrap();
        let report = increment_scan(&tree, 2, T, i64::MAX).map_err(|e| e.to_string())?;
        proxy = report.bound.epsilon_proxy;
        if proxy < 0.01 {
            ensure(report.exceedance_count == 0, || format!("seed {i}: {} exceedances", report.exceedance_count))?;
        }
        with_exceedance += (report.exceedance_count > 0) as u64;
    }
    let freq = with_exceedance as f64 / 100.0;
    let limit = proxy.max(0.05) + 0.05;
    ensure(freq <= limit, || format!("exceedance frequency {freq} > {limit}"))?;
    Ok(format!("proxy {proxy:.3}, exceedance frequency {freq:.2} <= {limit:.2}"))
}

fn c8_ahlfors() -> Verdict {
    let (mut c_upper, mut c_lower) = (0f64, f64::INFINITY);
    for i in 0..10 {
        let tree = fixture(derive_seed(8, i), 4);
        let radii = dyadic_radii(&resolution_floor(&tree, 4));
        let report = frostman_scan(&tree, 4, T, &radii, DEFAULT_GRID).map_err(|e| e.to_string())?;
        let reference = report.reference.ok_or("no reference constants")?;
        ensure(reference.exact && reference.upper_constant == 51, || format!("seed {i}: {reference:?}"))?;
        ensure(reference.upper_holds, || format!("seed {i}: C_upper {} > 51", report.c_upper))?;
        ensure(reference.lower_holds, || {
            format!("seed {i}: C_lower {} < {}", report.c_lower, reference.lower_constant)
        })?;
        c_upper = c_upper.max(report.c_upper);
        c_lower = c_lower.min(report.c_lower);
    }
    Ok(format!("10 seeds, C_upper <= {c_upper:.3}, C_lower >= {c_lower:.4}, exact"))
}

fn c9_theorem_b() -> Verdict {
    let schedule = schedule_b(12).unwrap();
    let levels: Vec<usize> = (4..=12).collect();
    let mut worst = 0f64;
    for i in 0..3 {
        let tree = build_tree(&schedule, derive_seed(9, i), 12).unwrap();
        let report = theorem_b_mass_check(&tree, &levels, 0.2).map_err(|e| e.to_string())?;
        for level in &report.levels {
            ensure(level.holds, || format!("seed {i}, level {}: {} > {}", level.level, level.max_mass, level.bound))?;
        }
        ensure(report.all_hold, || format!("seed {i}: mass check failed"))?;
        let ratio = report.levels.iter().map(|l| {
            let max: f64 = salem_core::regularity::parse_rational(&l.max_mass).unwrap().to_f64().unwrap();
            let bound: f64 = salem_core::regularity::parse_rational(&l.bound).unwrap().to_f64().unwrap();
            max / bound
        });
        worst = ratio.fold(worst, f64::max);
    }
    Ok(format!("3 seeds, levels 4..=12, max mass / (2/P_n) <= {worst:.3}"))
}

fn c10_uniformity() -> Verdict {
    let sweep = uniformity_sweep(2, 14, 20, 2000, 10).map_err(|e| e.to_string())?;
    let detail = format!("{} sets, condition held on {}", sweep.sets_checked, sweep.condition_held);
    if sweep.counterexamples.is_empty() {
        return Ok(detail);
    }
    let cases: Vec<String> =
        sweep.counterexamples.iter().map(|c| format!("{:?} mod {}", c.set.elements(), c.set.modulus())).collect();
    let rest = uniformity_sweep(3, 14, 20, 2000, 10).map_err(|e| e.to_string())?;
    Err(format!(
        "{detail}; counterexamples {}; Z/nZ has no three distinct residues for n = 2; n >= 3 alone: {} sets, {} \
         counterexamples",
        cases.join(", "),
        rest.sets_checked,
        rest.counterexamples.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence, m <= 8", Duration::from_secs(30), c1_oracle_equivalence),
        ("doubling pipeline, m in {25, 50, 100}", Duration::from_secs(5), c2_doubling_pipeline),
        ("finite-depth AP certification", Duration::from_secs(10), c3_certification),
        ("negative control {0,1,2} mod 10", Duration::from_secs(30), c4_negative_control),
        ("Fourier exactness", Duration::from_secs(60), c5_fourier_exactness),
        ("decay trend, depth 5", Duration::from_secs(120), c6_decay_trend),
        ("increment diagnostics, n = 2 -> 3", Duration::from_secs(120), c7_increments),
        ("Ahlfors constants, depth 4", Duration::from_secs(30), c8_ahlfors),
        ("variant B mass bound, depth 12", Duration::from_secs(60), c9_theorem_b),
        ("uniformity demo", Duration::from_secs(120), c10_uniformity),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let verdict = match verdict {
            Ok(_) if elapsed > budget => Err(format!("took {elapsed:.1?}, budget {budget:?}")),
            v => v,
        };
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag} {name} [{:.2} s / {} s]: {detail}",
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
