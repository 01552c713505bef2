//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's linear algebra or GP code.

#![allow(dead_code)]

use gp_consensus::rng::NoiseRng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        assert!(d != 0.0, "singular system");
        for row in col + 1..n {
            let factor = m[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    x
}

pub fn sq_exp(sigma_f: f64, l: f64, a: f64, b: f64) -> f64 {
    let d = a - b;
    sigma_f * sigma_f * (-(d * d) / (2.0 * l * l)).exp()
}

/// Posterior mean and standard deviation computed from scratch with a dense
/// solve of `(K + σn² I)`.
pub fn dense_posterior(xs: &[f64], ys: &[f64], sigma_f: f64, l: f64, sigma_n: f64, q: f64) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, sigma_f);
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = sq_exp(sigma_f, l, xs[i], xs[j]);
        }
        k[i * n + i] += sigma_n * sigma_n;
    }
    let kq: Vec<f64> = xs.iter().map(|&x| sq_exp(sigma_f, l, x, q)).collect();
    let alpha = dense_solve(&k, n, ys);
    let w = dense_solve(&k, n, &kq);
    let mean = kq.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let var = sigma_f * sigma_f - kq.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    (mean, var.max(0.0).sqrt())
}

/// Textbook Cholesky of a dense symmetric matrix. Non-positive pivots are
/// treated as zero, which keeps draws well defined for numerically
/// semidefinite covariance matrices.
pub fn cholesky_psd(a: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        let piv = if d > 0.0 { d.sqrt() } else { 0.0 };
        l[j * n + j] = piv;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = if piv > 0.0 { s / piv } else { 0.0 };
        }
    }
    l
}

/// Random connected graph on `n` vertices: a random spanning tree plus
/// extra edges drawn with probability `p`. Edges are 0-based and unique.
pub fn random_connected_graph(rng: &mut NoiseRng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.index(i + 1);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    let mut present = vec![false; n * n];
    for k in 1..n {
        let parent = order[rng.index(k)];
        let child = order[k];
        edges.push((parent, child));
        present[parent * n + child] = true;
        present[child * n + parent] = true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if !present[i * n + j] && rng.next_unit() < p {
                edges.push((i, j));
                present[i * n + j] = true;
                present[j * n + i] = true;
            }
        }
    }
    edges
}

/// Closed-form solution of `ẋ = ε·1 − c L x` for two agents joined by one
/// edge, written out independently of the library's version.
pub fn two_agent_closed_form(x0: [f64; 2], eps: f64, c: f64, t: f64) -> [f64; 2] {
    let mean = 0.5 * (x0[0] + x0[1]) + eps * t;
    let half_gap = 0.5 * (x0[0] - x0[1]) * (-2.0 * c * t).exp();
    [mean + half_gap, mean - half_gap]
}

/// Worst posterior deviation from [`dense_posterior`] over `instances`
/// random benchmark datasets of 1 to 200 points, five queries each.
pub fn gp_oracle_deviation(seed: u64, instances: usize) -> (f64, f64) {
    use gp_consensus::gp::{GpModel, KernelParams, DEFAULT_MAX_POINTS};
    use gp_consensus::plant::benchmark_f;

    let (sigma_f, l, sigma_n) = (1.0, 0.05, 0.01);
    let kernel = KernelParams::new(sigma_f, l).unwrap();
    let mut rng = NoiseRng::new(seed);
    let (mut worst_mu, mut worst_sigma) = (0.0f64, 0.0f64);
    for instance in 0..instances {
        let size = 1 + (instance * 199) / (instances - 1).max(1);
        let xs: Vec<f64> = (0..size).map(|_| rng.uniform(-1.5, 1.5)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| benchmark_f(x) + rng.normal(0.0, sigma_n)).collect();
        let model =
            GpModel::from_data(kernel, sigma_n, DEFAULT_MAX_POINTS, xs.iter().copied().zip(ys.iter().copied()))
                .unwrap();
        for _ in 0..5 {
            let q = rng.uniform(-1.6, 1.6);
            let post = model.posterior(q).unwrap();
            let (mu, sigma) = dense_posterior(&xs, &ys, sigma_f, l, sigma_n, q);
            worst_mu = worst_mu.max((post.mean - mu).abs());
            worst_sigma = worst_sigma.max((post.std - sigma).abs());
        }
    }
    (worst_mu, worst_sigma)
}

/// Drives `tuples` random (model, state, tracking error) combinations through
/// the proposed trigger and the model update, checking the three trigger
/// guarantees with slack `1e-12`. Returns how many tuples landed in each
/// class, or a description of the first violation.
pub fn property_one_fuzz(seed: u64, tuples: usize) -> Result<[usize; 3], String> {
    use gp_consensus::gp::{BoundContext, GpModel, KernelParams};
    use gp_consensus::plant::benchmark_f;
    use gp_consensus::trigger::{classify_agent, AgentClass, TriggerInputs, TriggerMode};

    const SLACK: f64 = 1e-12;
    let sigma_n = 0.01;
    let kernel = KernelParams::new(1.0, 0.05).unwrap();
    let ctx = BoundContext::new(0.01, 1e-3, -1.5, 1.5, sigma_n, 10.06).unwrap();
    let eta_low = ctx.eta_bar_lower;
    let mut rng = NoiseRng::new(seed);
    let mut counts = [0usize; 3];

    for k in 0..tuples {
        let n_agents = 1 + rng.index(8);
        let c = rng.uniform(0.2, 5.0);
        let size = rng.index(12);
        let data: Vec<(f64, f64)> = (0..size)
            .map(|_| {
                let x = rng.uniform(-1.5, 1.5);
                (x, benchmark_f(x) + rng.normal(0.0, sigma_n))
            })
            .collect();
        let mut model = GpModel::from_data(kernel, sigma_n, 64, data).unwrap();
        let x = rng.uniform(-1.5, 1.5);
        // Tracking errors spread over several decades around the class boundary.
        let boundary = ((n_agents as f64 - 1.0).sqrt() + 1.0) * eta_low / c;
        let sign = if rng.next_unit() < 0.5 { -1.0 } else { 1.0 };
        let x_tilde = sign * boundary * 10f64.powf(rng.uniform(-2.0, 1.5));
        let x_bar = x - x_tilde;

        let eta = ctx.eta_unchecked(&model, x).unwrap();
        let inputs = TriggerInputs { eta, x, x_bar, c, n_agents, eta_bar_lower: eta_low, epsilon: 0.0 };
        let decision = inputs.decide(TriggerMode::Proposed);
        if decision.fired != (decision.rho_value > 0.0) {
            return Err(format!("tuple {k}: fired flag disagrees with rho {}", decision.rho_value));
        }
        let eta_hat = if decision.fired {
            model.add_point(x, benchmark_f(x) + rng.normal(0.0, sigma_n)).unwrap();
            ctx.eta_unchecked(&model, x).unwrap()
        } else {
            eta
        };

        let small = c * x_tilde.abs() <= ((n_agents as f64 - 1.0).sqrt() + 1.0) * eta_low;
        match classify_agent(eta, x, x_bar, c, n_agents, eta_low) {
            AgentClass::S1 => {
                if !small || eta_hat > eta_low + SLACK {
                    return Err(format!("tuple {k}: statement 1 violated, eta_hat {eta_hat}"));
                }
                counts[0] += 1;
            }
            AgentClass::S2 => {
                if small || !decision.fired || eta_hat > eta_low + SLACK {
                    return Err(format!("tuple {k}: statement 2 violated, eta_hat {eta_hat}"));
                }
                counts[1] += 1;
            }
            AgentClass::S3 => {
                let lhs = (c * x_tilde).powi(2);
                let rhs = eta * eta + (n_agents as f64 - 1.0) * eta_low * eta_low;
                if small || decision.fired || lhs - rhs < -SLACK {
                    return Err(format!("tuple {k}: statement 3 violated, {lhs} < {rhs}"));
                }
                counts[2] += 1;
            }
        }
    }
    Ok(counts)
}
