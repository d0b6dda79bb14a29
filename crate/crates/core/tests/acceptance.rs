//! Acceptance criteria. Prints one `criterion N: PASS|FAIL` line per
//! criterion and exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use brequant::analysis::{
    grid_oracle_centroid_simplex, grid_oracle_scalar, loglog_slope, spread_about, sweep, DesignOptions,
};
use brequant::divergence::bre_divergence;
use brequant::scalar::{self, design_mean_bre, design_minimax, endpoint_divergences, ScalarDesignOptions};
use brequant::simplex_quant::{
    bisector, design_minimax_simplex, minimax_centroid, quantize_simplex, vertex_bound, SimplexDesignOptions,
    SimplexQuantizer,
};
use brequant::{minimax_weight, BinaryGaussianModel, DetectionModel, ExponentialTernaryModel, SimplexPoint};

type Outcome = (bool, String);

fn report(pass: bool, detail: String) -> Outcome {
    (pass, detail)
}

fn q_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn gaussian(mu: f64, sigma2: f64, c10: f64, c01: f64) -> BinaryGaussianModel {
    BinaryGaussianModel::new(mu, sigma2, c10, c01).unwrap()
}

fn parameter_sets() -> [BinaryGaussianModel; 3] {
    [gaussian(1.0, 1.0, 1.0, 1.0), gaussian(1.0, 2.0, 1.0, 1.0), gaussian(1.0, 1.0, 10.0, 1.0)]
}

fn ternary() -> ExponentialTernaryModel {
    ExponentialTernaryModel::new(5.0, 4.0, 3.0).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, m: usize, margin: f64) -> SimplexPoint {
    loop {
        let e: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().ln()).collect();
        let s: f64 = e.iter().sum();
        let p = SimplexPoint::new(&e.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap();
        if p.min_coord() > margin {
            return p;
        }
    }
}

fn criterion_01_symmetric_single_cell() -> Outcome {
    let t = Instant::now();
    let (q, r) = design_minimax(&gaussian(1.0, 1.0, 1.0, 1.0), 1, &ScalarDesignOptions::default()).unwrap();
    let elapsed = t.elapsed();
    let a = q.weights()[0];
    let d = r.max_divergence.value();
    let oracle = q_tail(0.5);
    let pass = (a - 0.5).abs() <= 1e-6 && (d - oracle).abs() <= 1e-4 && elapsed < Duration::from_secs(1);
    report(pass, format!("a={a:.9} D={d:.9} Q(0.5)={oracle:.9} time={elapsed:.2?}"))
}

fn criterion_02_symmetric_two_cells_against_grid_oracle() -> Outcome {
    let t = Instant::now();
    let m = gaussian(1.0, 1.0, 1.0, 1.0);
    let (q, r) = design_minimax(&m, 2, &ScalarDesignOptions::default()).unwrap();
    let (oq, od) = grid_oracle_scalar(&m, 2, 1e-3).unwrap();
    let elapsed = t.elapsed();
    let (a, b, d) = (q.weights(), q.boundaries()[0], r.max_divergence.value());
    let near = |x: f64, y: f64, tol: f64| (x - y).abs() <= tol;
    let pass = near(a[0], 0.272, 1e-3)
        && near(a[1], 0.728, 1e-3)
        && near(a[0], oq.weights()[0], 1e-3)
        && near(a[1], oq.weights()[1], 1e-3)
        && near(d, 0.0688, 1e-3)
        && near(d, od.value(), 1e-3)
        && near(b, 0.5, 1e-6)
        && elapsed < Duration::from_secs(10);
    report(
        pass,
        format!(
            "a=({:.6}, {:.6}) b={b:.9} D={d:.6} oracle a=({:.6}, {:.6}) b={} D={:.6} time={elapsed:.2?}",
            a[0],
            a[1],
            oq.weights()[0],
            oq.weights()[1],
            oq.boundaries()[0],
            od.value()
        ),
    )
}

fn criterion_03_endpoint_equalization() -> Outcome {
    let t = Instant::now();
    let mut worst_spread = 0.0_f64;
    let mut all_converged = true;
    for m in parameter_sets() {
        for k in 2..=16 {
            let (q, r) = design_minimax(&m, k, &ScalarDesignOptions::default()).unwrap();
            all_converged &= r.converged;
            let e = endpoint_divergences(&m, &q);
            let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
            worst_spread = worst_spread.max(hi - lo);
        }
    }
    let elapsed = t.elapsed();
    let pass = all_converged && worst_spread <= 1e-6 && elapsed < Duration::from_secs(60);
    report(pass, format!("max endpoint spread={worst_spread:.3e} converged={all_converged} time={elapsed:.2?}"))
}

fn criterion_04_staircase() -> Outcome {
    let (q, r) = design_minimax(&gaussian(1.0, 1.0, 1.0, 1.0), 11, &ScalarDesignOptions::default()).unwrap();
    let steps: Vec<f64> = (0..=1000).map(|i| scalar::quantize(&q, i as f64 / 1000.0).unwrap().1).collect();
    let monotone = steps.windows(2).all(|w| w[0] <= w[1]);
    let levels = {
        let mut v = steps.clone();
        v.dedup();
        v.len()
    };
    let pass = r.converged && q.is_interleaved() && monotone && levels == 11;
    report(pass, format!("interleaved={} nondecreasing={monotone} levels={levels}", q.is_interleaved()))
}

fn criterion_05_binary_rate_distortion_slope() -> Outcome {
    let t = Instant::now();
    let ks: Vec<usize> = (4..=64).collect();
    let mut slopes = Vec::new();
    let mut ok = true;
    for m in parameter_sets() {
        let s = sweep(&m, &ks, &DesignOptions::default()).unwrap();
        ok &= s.entries.iter().all(|e| e.converged);
        let fit = loglog_slope(&s, 4).unwrap();
        ok &= (-2.2..=-1.8).contains(&fit.slope);
        slopes.push(fit.slope);
    }
    let elapsed = t.elapsed();
    let pass = ok && elapsed < Duration::from_secs(300);
    report(pass, format!("slopes={slopes:.4?} time={elapsed:.2?}"))
}

fn criterion_06_ternary_tiling() -> Outcome {
    let t = Instant::now();
    let m = ternary();
    let opts = SimplexDesignOptions { multistart: 8, ..Default::default() };
    let (q, r) = design_minimax_simplex(&m, 7, &opts).unwrap();
    let elapsed = t.elapsed();
    let area: f64 = q.cells.iter().map(|c| c.area()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut misses = 0;
    for _ in 0..10_000 {
        let p = random_simplex(&mut rng, 3, 0.0);
        let (k, _) = quantize_simplex(&m, &q, &p).unwrap();
        if !q.cells[k].contains(&p, 1e-9) {
            misses += 1;
        }
    }
    let bound = vertex_bound(7, 3);
    let max_vertices = q.cells.iter().map(|c| c.v_count()).max().unwrap();
    let dominance = vertex_max_dominance(&m, &q, &mut rng);
    let pass = r.converged
        && (area - 0.5).abs() <= 1e-6
        && misses == 0
        && max_vertices <= bound
        && dominance <= 1e-9
        && elapsed < Duration::from_secs(300);
    report(
        pass,
        format!(
            "D={:.6} area={area:.12} membership misses={misses} max vertices={max_vertices} (bound {bound}) dominance excess={dominance:.3e} time={elapsed:.2?}",
            r.max_divergence.value()
        ),
    )
}

/// Largest excess of an interior sample's divergence over its cell's vertex
/// maximum.
fn vertex_max_dominance(m: &ExponentialTernaryModel, q: &SimplexQuantizer, rng: &mut ChaCha8Rng) -> f64 {
    let mut excess = f64::NEG_INFINITY;
    for (cell, seed) in q.cells.iter().zip(&q.seeds) {
        let n = cell.vertices.len();
        let vmax =
            cell.vertices.iter().map(|v| bre_divergence(m, v, seed).unwrap().value()).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..1000 {
            let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
            let p = SimplexPoint::combine(&cell.vertices, &w);
            excess = excess.max(bre_divergence(m, &p, seed).unwrap().value() - vmax);
        }
    }
    excess
}

fn criterion_07_ternary_rate_distortion_slope() -> Outcome {
    let t = Instant::now();
    let ks: Vec<usize> = (4..=20).collect();
    let opts =
        DesignOptions { simplex: SimplexDesignOptions { multistart: 8, ..Default::default() }, ..Default::default() };
    let s = sweep(&ternary(), &ks, &opts).unwrap();
    let elapsed = t.elapsed();
    let converged = s.entries.iter().all(|e| e.converged);
    let fit = loglog_slope(&s, 4).unwrap();
    let d: Vec<String> = s.converged_points().iter().map(|(k, d)| format!("{k}:{d:.6}")).collect();
    let pass = converged && (-1.25..=-0.75).contains(&fit.slope) && elapsed < Duration::from_secs(1200);
    report(
        pass,
        format!(
            "slope={:.4} r2={:.4} converged={converged} nonincreasing={} D=[{}] time={elapsed:.2?}",
            fit.slope,
            fit.r2,
            s.is_nonincreasing(1e-9),
            d.join(" ")
        ),
    )
}

fn criterion_08_divergence_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let models: [(&str, Box<dyn DetectionModel>); 2] =
        [("gaussian", Box::new(gaussian(1.0, 1.0, 1.0, 1.0))), ("exponential", Box::new(ternary()))];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, m) in &models {
        let dim = m.hypotheses();
        let (mut negative, mut self_nonzero, mut zero_distinct) = (0, 0, 0);
        for _ in 0..500 {
            let p = random_simplex(&mut rng, dim, 0.0);
            let a = random_simplex(&mut rng, dim, 1e-9);
            let d = bre_divergence(m.as_ref(), &p, &a).unwrap().value();
            if d < 0.0 {
                negative += 1;
            }
            if bre_divergence(m.as_ref(), &a, &a).unwrap().value().abs() > 1e-12 {
                self_nonzero += 1;
            }
            if p.chart_distance(&a) > 1e-12 && d <= 1e-12 {
                zero_distinct += 1;
            }
        }
        pass &= negative == 0 && self_nonzero == 0 && zero_distinct == 0;
        details.push(format!("{name}: d<0 {negative}, d(a||a)!=0 {self_nonzero}, d=0 with p!=a {zero_distinct}"));
    }
    let g = gaussian(1.0, 1.0, 1.0, 1.0);
    let h = 1e-3;
    let mut nonconvex = 0;
    for _ in 0..500 {
        let a = rng.gen_range(0.01..0.99);
        let p = rng.gen_range(h..1.0 - h);
        let d = |x: f64| {
            bre_divergence(&g, &SimplexPoint::binary(x).unwrap(), &SimplexPoint::binary(a).unwrap()).unwrap().value()
        };
        if d(p + h) - 2.0 * d(p) + d(p - h) <= 0.0 {
            nonconvex += 1;
        }
    }
    pass &= nonconvex == 0;
    details.push(format!("binary second differences <= 0: {nonconvex}"));
    report(pass, details.join("; "))
}

fn criterion_09_gradients_match_finite_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-5;
    let g = gaussian(1.0, 1.0, 1.0, 1.0);
    let mut worst_binary = 0.0_f64;
    for _ in 0..100 {
        let a = rng.gen_range(0.01..0.99);
        let j = |x: f64| g.risk(&SimplexPoint::binary(x).unwrap());
        let fd = (j(a + h) - j(a - h)) / (2.0 * h);
        let exact = brequant::models::derivative_binary(&g, a).unwrap();
        worst_binary = worst_binary.max((fd - exact).abs());
    }
    let m = ternary();
    let mut worst_ternary = 0.0_f64;
    let mut n = 0;
    while n < 100 {
        let a = random_simplex(&mut rng, 3, 0.01);
        if m.kink_distance(&a) < 1e-2 {
            continue;
        }
        n += 1;
        let c = a.chart2();
        let grad = m.gradient(&a).unwrap();
        for i in 0..2 {
            let mut hi = c;
            let mut lo = c;
            hi[i] += h;
            lo[i] -= h;
            let j = |x: [f64; 2]| m.risk(&SimplexPoint::from_chart(&x).unwrap());
            let fd = (j(hi) - j(lo)) / (2.0 * h);
            worst_ternary = worst_ternary.max((fd - grad[i]).abs());
        }
    }
    let pass = worst_binary <= 1e-5 && worst_ternary <= 1e-5;
    report(pass, format!("max |fd - exact|: binary {worst_binary:.3e}, ternary {worst_ternary:.3e}"))
}

fn criterion_10_binary_reduction_of_bisectors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = gaussian(1.0, 1.0, 10.0, 1.0);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let (mut x, mut y) = (rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
        if x > y {
            std::mem::swap(&mut x, &mut y);
        }
        let b = scalar::boundary(&m, x, y).unwrap();
        let h = bisector(&m, &SimplexPoint::binary(x).unwrap(), &SimplexPoint::binary(y).unwrap()).unwrap();
        worst = worst.max((h.binary_point() - b).abs());
    }
    report(worst <= 1e-8, format!("max |bisector - scalar boundary|={worst:.3e}"))
}

fn criterion_11_ternary_centroid_against_grid_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = ternary();
    let mut worst = 0.0_f64;
    let mut cells = 0;
    while cells < 10 {
        let k = rng.gen_range(2..=8);
        let seeds: Vec<SimplexPoint> = (0..k).map(|_| random_simplex(&mut rng, 3, 1e-3)).collect();
        let q = SimplexQuantizer::from_seeds(&m, seeds).unwrap();
        let cell = &q.cells[rng.gen_range(0..k)];
        if cell.v_count() < 3 {
            continue;
        }
        cells += 1;
        let c = minimax_centroid(&m, cell).unwrap();
        let (_, od) = grid_oracle_centroid_simplex(&m, cell, 2e-3).unwrap();
        worst = worst.max((c.radius.value() - od.value()).abs());
    }
    report(worst <= 1e-3, format!("max |centroid radius - grid oracle|={worst:.3e} over {cells} cells"))
}

fn criterion_12_minimax_weights_cluster_toward_peak() -> Outcome {
    let m = gaussian(1.0, 1.0, 1.0, 1.0);
    let (peak, _) = minimax_weight(&m).unwrap();
    let peak = peak.coords()[0];
    let (mm, _) = design_minimax(&m, 4, &ScalarDesignOptions::default()).unwrap();
    let (mean, _, _) = design_mean_bre(&m, 4, &ScalarDesignOptions::default()).unwrap();
    let s_mm = spread_about(mm.weights(), peak);
    let s_mean = spread_about(mean.weights(), peak);
    report(
        s_mm < s_mean,
        format!(
            "rms spread about {peak:.6}: minimax {s_mm:.6} ({:.4?}), mean {s_mean:.6} ({:.4?})",
            mm.weights(),
            mean.weights()
        ),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 12] = [
        criterion_01_symmetric_single_cell,
        criterion_02_symmetric_two_cells_against_grid_oracle,
        criterion_03_endpoint_equalization,
        criterion_04_staircase,
        criterion_05_binary_rate_distortion_slope,
        criterion_06_ternary_tiling,
        criterion_07_ternary_rate_distortion_slope,
        criterion_08_divergence_axioms,
        criterion_09_gradients_match_finite_differences,
        criterion_10_binary_reduction_of_bisectors,
        criterion_11_ternary_centroid_against_grid_oracle,
        criterion_12_minimax_weights_cluster_toward_peak,
    ];
    let mut failed = 0;
    for (i, f) in criteria.iter().enumerate() {
        let (pass, detail) = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        println!("criterion {}: {} {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
