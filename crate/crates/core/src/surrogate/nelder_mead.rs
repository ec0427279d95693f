/// Derivative-free minimization on the box `[0,1]^p`. Trial points are
/// clamped into the box; non-finite objective values count as `+inf`.
pub(crate) fn minimize_in_unit_box<F>(f: &mut F, start: &[f64], max_evals: usize) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let p = start.len();
    let clamp = |x: &mut Vec<f64>| x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    let x0 = start.to_vec();
    let f0 = eval(&x0, &mut evals);
    simplex.push((x0.clone(), f0));
    for i in 0..p {
        let mut x = x0.clone();
        x[i] += if x[i] + 0.15 <= 1.0 { 0.15 } else { -0.15 };
        clamp(&mut x);
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[p].1;
        if worst.is_finite() && (worst - best).abs() <= 1e-9 * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; p];
        for (x, _) in &simplex[..p] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / p as f64;
            }
        }
        let towards = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[p].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut x);
            x
        };

        let xr = towards(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = towards(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[p] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[p].1 {
                let xc = towards(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = towards(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[p].1.min(fr) {
                simplex[p] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (v, b) in x.iter_mut().zip(&x_best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    *fx = eval(x, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
