// Independent brute-force and dynamic-programming solvers used to validate
// the library's numeric optimizers on small fixtures (n <= 3, T <= 6, except
// the planar sweeps which are cheap at any T). These deliberately share no
// code with the library's solvers.
#![allow(dead_code)]

use driftbench_core::Vector;

/// Dense angle sweep for `min sum_t c_t . u` over a planar l2 ball. A linear
/// objective attains its minimum on the boundary circle (or ties everywhere
/// when the summed cost is zero), so sweeping angles plus the center covers
/// every case.
pub fn grid_fixed_ball2_opt(costs: &[Vector], center: &Vector, radius: f64, angles: usize) -> f64 {
    assert_eq!(center.dim(), 2, "angle sweep is planar");
    let mut total = [0.0f64; 2];
    for c in costs {
        total[0] += c.as_slice()[0];
        total[1] += c.as_slice()[1];
    }
    let k = center.as_slice();
    let mut best = total[0] * k[0] + total[1] * k[1];
    for j in 0..angles {
        let theta = 2.0 * std::f64::consts::PI * (j as f64) / (angles as f64);
        let u = [k[0] + radius * theta.cos(), k[1] + radius * theta.sin()];
        let v = total[0] * u[0] + total[1] * u[1];
        if v < best {
            best = v;
        }
    }
    best
}

/// All nonnegative integer compositions of `g` into `n` parts; dividing by
/// `g` enumerates the simplex lattice with denominator `g`.
pub fn simplex_lattice(n: usize, g: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, g, &mut Vec::new(), &mut out);
    out
}

/// Axis-aligned lattice points inside an l2 ball: `g + 1` points per axis
/// across the diameter. Even `g` keeps the exact center on the grid.
pub fn ball_lattice(center: &[f64], radius: f64, g: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    let step = 2.0 * radius / g as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let point: Vec<f64> = idx
            .iter()
            .zip(center)
            .map(|(i, k)| k - radius + step * *i as f64)
            .collect();
        let dist2: f64 = point
            .iter()
            .zip(center)
            .map(|(x, k)| (x - k) * (x - k))
            .sum();
        if dist2 <= radius * radius + 1e-12 {
            out.push(point);
        }
        let mut axis = 0;
        loop {
            if axis == n {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] <= g {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

fn dot(c: &Vector, u: &[f64]) -> f64 {
    c.as_slice().iter().zip(u).map(|(a, b)| a * b).sum()
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact DP for drifting simplex paths on the lattice with denominator `g`:
/// minimizes `sum_t c_t . u_t` subject to halved-l1 drift at most `l_budget`.
/// Drift between lattice points is an exact multiple of `1/g`, so the budget
/// dimension is integral and the DP is exact on the lattice.
pub fn grid_drifting_simplex_opt(costs: &[Vector], n: usize, g: usize, l_budget: f64) -> f64 {
    let states = simplex_lattice(n, g);
    let s_count = states.len();
    let b_max = (l_budget * g as f64 + 1e-9).floor() as usize;
    let drift_units = |a: &[usize], b: &[usize]| -> usize {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.max(y) - x.min(y))
            .sum::<usize>()
            / 2
    };
    let service = |t: usize, s: usize| -> f64 {
        costs[t]
            .as_slice()
            .iter()
            .zip(&states[s])
            .map(|(c, k)| c * *k as f64 / g as f64)
            .sum()
    };

    // f[s][b]: cheapest service through the current round ending at state s
    // having spent at most b drift units.
    let mut f: Vec<Vec<f64>> = (0..s_count)
        .map(|s| vec![service(0, s); b_max + 1])
        .collect();
    for t in 1..costs.len() {
        let mut next: Vec<Vec<f64>> = vec![vec![f64::INFINITY; b_max + 1]; s_count];
        for (s, row) in next.iter_mut().enumerate() {
            for (sp, prev_row) in f.iter().enumerate() {
                let u = drift_units(&states[sp], &states[s]);
                if u > b_max {
                    continue;
                }
                for b in u..=b_max {
                    let cand = prev_row[b - u];
                    if cand < row[b] {
                        row[b] = cand;
                    }
                }
            }
            let sv = service(t, s);
            for b in row.iter_mut() {
                *b += sv;
            }
        }
        f = next;
    }
    f.iter()
        .map(|row| row[b_max])
        .fold(f64::INFINITY, f64::min)
}

/// DP for drifting paths on a ball lattice with the l2 drift budget split
/// into `budget_units` equal units; each move is charged a rounded-UP number
/// of units, so every DP path genuinely satisfies the continuous budget.
pub fn grid_drifting_ball_opt(
    costs: &[Vector],
    center: &[f64],
    radius: f64,
    g: usize,
    l_budget: f64,
    budget_units: usize,
) -> f64 {
    let states = ball_lattice(center, radius, g);
    let s_count = states.len();
    let unit = if budget_units == 0 {
        f64::INFINITY
    } else {
        l_budget / budget_units as f64
    };
    let move_units = |a: &[f64], b: &[f64]| -> usize {
        let d = l2(a, b);
        if d <= 1e-12 {
            0
        } else {
            (d / unit - 1e-12).ceil() as usize
        }
    };

    let mut f: Vec<Vec<f64>> = (0..s_count)
        .map(|s| vec![dot(&costs[0], &states[s]); budget_units + 1])
        .collect();
    for cost in &costs[1..] {
        let mut next: Vec<Vec<f64>> = vec![vec![f64::INFINITY; budget_units + 1]; s_count];
        for (s, row) in next.iter_mut().enumerate() {
            for (sp, prev_row) in f.iter().enumerate() {
                let u = move_units(&states[sp], &states[s]);
                if u > budget_units {
                    continue;
                }
                for b in u..=budget_units {
                    let cand = prev_row[b - u];
                    if cand < row[b] {
                        row[b] = cand;
                    }
                }
            }
            let sv = dot(cost, &states[s]);
            for b in row.iter_mut() {
                *b += sv;
            }
        }
        f = next;
    }
    f.iter()
        .map(|row| row[budget_units])
        .fold(f64::INFINITY, f64::min)
}

/// DP for 1-lookahead ball paths on an axis lattice: free start, movement
/// charged at `alpha` per unit l2 length, and a closing return to the center.
pub fn grid_onela_ball_opt(
    costs: &[Vector],
    center: &[f64],
    radius: f64,
    g: usize,
    alpha: f64,
) -> f64 {
    let states = ball_lattice(center, radius, g);
    let s_count = states.len();
    let mut f: Vec<f64> = (0..s_count).map(|s| dot(&costs[0], &states[s])).collect();
    for cost in &costs[1..] {
        let mut next = vec![f64::INFINITY; s_count];
        for (s, slot) in next.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for (sp, fv) in f.iter().enumerate() {
                let cand = fv + alpha * l2(&states[sp], &states[s]);
                if cand < best {
                    best = cand;
                }
            }
            *slot = best + dot(cost, &states[s]);
        }
        f = next;
    }
    f.iter()
        .enumerate()
        .map(|(s, fv)| fv + alpha * l2(&states[s], center))
        .fold(f64::INFINITY, f64::min)
}

/// DP for 1-lookahead simplex paths (the unfair-MTS objective): free start,
/// `alpha`-weighted halved-l1 movement, free end.
pub fn grid_onela_simplex_opt(costs: &[Vector], n: usize, g: usize, alpha: f64) -> f64 {
    let states = simplex_lattice(n, g);
    let s_count = states.len();
    let point = |s: usize| -> Vec<f64> {
        states[s].iter().map(|k| *k as f64 / g as f64).collect()
    };
    let halved_l1 = |a: &[usize], b: &[usize]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x.max(y) - x.min(y)) as f64)
            .sum::<f64>()
            / (2.0 * g as f64)
    };
    let mut f: Vec<f64> = (0..s_count).map(|s| dot(&costs[0], &point(s))).collect();
    for cost in &costs[1..] {
        let mut next = vec![f64::INFINITY; s_count];
        for (s, slot) in next.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for (sp, fv) in f.iter().enumerate() {
                let cand = fv + alpha * halved_l1(&states[sp], &states[s]);
                if cand < best {
                    best = cand;
                }
            }
            *slot = best + dot(cost, &point(s));
        }
        f = next;
    }
    f.iter().copied().fold(f64::INFINITY, f64::min)
}
