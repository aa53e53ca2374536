use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::forward::{crisp_forward, Feedback, ForwardTrace};
use super::GruDecoderParams;
use crate::channels::ReceivedWord;
use crate::construction::build_polar_spec;
use crate::{Error, Result};

/// `acc += d^T x`
#[inline]
fn add_outer(acc: &mut ndarray::ArrayViewMut2<f64>, d: &ArrayView2<f64>, x: &ArrayView2<f64>) {
    general_mat_mul(1.0, &d.t(), x, 1.0, acc);
}

/// Squared-error loss over the active information bits and its exact
/// gradient.
///
/// `targets` are the source vectors `m` (length `n`) of the batch; `active`
/// holds 1-based indices, all inside the information set. The loss is
/// `(1/B) sum_b sum_{i in active} (p_i - m_i)^2`. The previous-bit inputs are
/// treated as constants, so student-forced traces get no gradient through
/// their own decisions.
pub fn crisp_loss_and_grads(
    trace: &ForwardTrace,
    params: &GruDecoderParams,
    targets: &[Vec<u8>],
    active: &[usize],
) -> Result<(f64, GruDecoderParams)> {
    let spec = &trace.spec;
    let batch = trace.batch();
    let n = spec.n;
    if targets.len() != batch || targets.iter().any(|m| m.len() != n) {
        return Err(Error::Shape("one length-n target per batch item".into()));
    }
    // column of each information index, or None if inactive
    let mut active_col: Vec<Option<usize>> = vec![None; n];
    for &idx in active {
        let col = spec
            .info_set
            .iter()
            .position(|&i| i == idx)
            .ok_or_else(|| Error::IndexSet(format!("active index {idx} is not an information index")))?;
        active_col[idx - 1] = Some(col);
    }

    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grads = params.zeros_like();
    let num_layers = params.num_layers();
    let hidden = params.hidden_dim();
    let mut dh_next: Vec<Array2<f64>> = (0..num_layers).map(|_| Array2::zeros((batch, hidden))).collect();
    let mut sum_dpre0 = [
        Array2::<f64>::zeros((batch, hidden)),
        Array2::zeros((batch, hidden)),
        Array2::zeros((batch, hidden)),
    ];
    let mask = spec.info_mask();
    let info_col_of: Vec<usize> = {
        let mut cols = vec![usize::MAX; n];
        for (c, &i) in spec.info_set.iter().enumerate() {
            cols[i - 1] = c;
        }
        cols
    };

    for t in (0..n).rev() {
        let top = num_layers - 1;
        let mut dh = std::mem::replace(&mut dh_next[top], Array2::zeros((0, 0)));

        if let Some(col) = active_col[t] {
            debug_assert!(mask[t]);
            let p = trace.probs.column(col);
            let q = &trace.head_q[info_col_of[t]];
            let mut d_out = Array1::zeros(batch);
            for ((d, &p), m) in d_out.iter_mut().zip(p).zip(targets) {
                let err = p - f64::from(m[t]);
                loss += err * err * scale;
                *d = 2.0 * err * scale * p * (1.0 - p);
            }
            grads.head.w2 += &q.t().dot(&d_out);
            grads.head.b2[0] += d_out.sum();
            let mut dpre1 = &d_out.view().insert_axis(Axis(1)) * &params.head.w2.view().insert_axis(Axis(0));
            Zip::from(&mut dpre1).and(q).for_each(|d, &q| *d *= 1.0 - q * q);
            let h_top = trace.hs[top][t + 1].view();
            add_outer(&mut grads.head.w1.view_mut(), &dpre1.view(), &h_top);
            grads.head.b1 += &dpre1.sum_axis(Axis(0));
            general_mat_mul(1.0, &dpre1, &params.head.w1, 1.0, &mut dh);
        }

        for l in (0..num_layers).rev() {
            if l != top {
                dh = std::mem::replace(&mut dh_next[l], Array2::zeros((0, 0))) + &dh;
            }
            let layer = &params.layers[l];
            let g = &mut grads.layers[l];
            let in_dim = layer.input_dim();
            let h_prev = trace.hs[l][t].view();
            let z = &trace.zs[l][t];
            let r = &trace.rs[l][t];
            let c = &trace.cs[l][t];

            let mut dpre_c = Array2::zeros((batch, hidden));
            let mut dpre_z = Array2::zeros((batch, hidden));
            Zip::from(&mut dpre_c)
                .and(&mut dpre_z)
                .and(&dh)
                .and(z)
                .and(c)
                .and(&h_prev)
                .for_each(|dpc, dpz, &dh, &z, &c, &hp| {
                    *dpc = dh * z * (1.0 - c * c);
                    *dpz = dh * (c - hp) * z * (1.0 - z);
                });
            let mut dhp = Zip::from(&dh).and(z).map_collect(|&dh, &z| dh * (1.0 - z));

            let rh = r * &h_prev;
            add_outer(&mut g.w_h.slice_mut(s![.., in_dim..]), &dpre_c.view(), &rh.view());
            g.b_h += &dpre_c.sum_axis(Axis(0));
            let d_rh = dpre_c.dot(&layer.w_h.slice(s![.., in_dim..]));
            let mut dpre_r = Array2::zeros((batch, hidden));
            Zip::from(&mut dpre_r)
                .and(&mut dhp)
                .and(&d_rh)
                .and(r)
                .and(&h_prev)
                .for_each(|dpr, dhp, &drh, &r, &hp| {
                    *dpr = drh * hp * r * (1.0 - r);
                    *dhp += drh * r;
                });

            add_outer(&mut g.w_z.slice_mut(s![.., in_dim..]), &dpre_z.view(), &h_prev);
            add_outer(&mut g.w_r.slice_mut(s![.., in_dim..]), &dpre_r.view(), &h_prev);
            g.b_z += &dpre_z.sum_axis(Axis(0));
            g.b_r += &dpre_r.sum_axis(Axis(0));
            general_mat_mul(1.0, &dpre_z, &layer.w_z.slice(s![.., in_dim..]), 1.0, &mut dhp);
            general_mat_mul(1.0, &dpre_r, &layer.w_r.slice(s![.., in_dim..]), 1.0, &mut dhp);

            if l == 0 {
                let bits = trace.prev_bits.column(t);
                for (w, d) in [(&mut g.w_z, &dpre_z), (&mut g.w_r, &dpre_r), (&mut g.w_h, &dpre_c)] {
                    let mut col = w.column_mut(0);
                    col += &d.t().dot(&bits);
                }
                sum_dpre0[0] += &dpre_z;
                sum_dpre0[1] += &dpre_r;
                sum_dpre0[2] += &dpre_c;
            } else {
                let a = trace.hs[l - 1][t + 1].view();
                add_outer(&mut g.w_z.slice_mut(s![.., ..in_dim]), &dpre_z.view(), &a);
                add_outer(&mut g.w_r.slice_mut(s![.., ..in_dim]), &dpre_r.view(), &a);
                add_outer(&mut g.w_h.slice_mut(s![.., ..in_dim]), &dpre_c.view(), &a);
                let mut da = dpre_z.dot(&layer.w_z.slice(s![.., ..in_dim]));
                general_mat_mul(1.0, &dpre_r, &layer.w_r.slice(s![.., ..in_dim]), 1.0, &mut da);
                general_mat_mul(1.0, &dpre_c, &layer.w_h.slice(s![.., ..in_dim]), 1.0, &mut da);
                dh = da;
            }
            dh_next[l] = dhp;
        }
    }

    let y = trace.y.view();
    let g0 = &mut grads.layers[0];
    for (w, d) in [(&mut g0.w_z, &sum_dpre0[0]), (&mut g0.w_r, &sum_dpre0[1]), (&mut g0.w_h, &sum_dpre0[2])] {
        add_outer(&mut w.slice_mut(s![.., 1..=n]), &d.view(), &y);
    }
    Ok((loss, grads))
}

/// Worst relative error between analytic gradients and a five-point central
/// difference (step `1e-4`) over every parameter of a random instance.
///
/// The instance has a polar `(n, n/2)` code, `layers` GRU layers of width
/// `hidden`, jittered weights and a batch of three random words. The relative
/// error of one entry is `|a - d| / max(|a|, |d|, 1e-8)`.
pub fn gradient_check(seed: u64, n: usize, hidden: usize, layers: usize) -> Result<f64> {
    let spec = build_polar_spec(n, n / 2, 0.5, None)?;
    let mut rng = crate::rng::derive(seed, &[77]);
    let mut params = GruDecoderParams::init(n, hidden, layers, hidden, seed);
    params.jitter(0.2, &mut rng);
    let batch = 3;
    let ys: Vec<ReceivedWord> = (0..batch)
        .map(|_| ReceivedWord {
            samples: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            fading_gains: None,
        })
        .collect();
    let ms: Vec<Vec<u8>> = (0..batch)
        .map(|_| {
            let mut m = vec![0u8; n];
            for &i in &spec.info_set {
                m[i - 1] = rng.random_range(0..2);
            }
            m
        })
        .collect();
    let active = spec.info_set.clone();
    let loss_at = |p: &GruDecoderParams| -> Result<f64> {
        let tr = crisp_forward(&ys, &spec, p, Feedback::Teacher(&ms))?;
        Ok(crisp_loss_and_grads(&tr, p, &ms, &active)?.0)
    };
    let trace = crisp_forward(&ys, &spec, &params, Feedback::Teacher(&ms))?;
    let (_, grads) = crisp_loss_and_grads(&trace, &params, &ms, &active)?;
    let analytic: Vec<f64> = grads.tensors().iter().flat_map(|(_, _, v)| v.to_vec()).collect();

    let step = 1e-4;
    let mut worst: f64 = 0.0;
    for (idx, a) in analytic.iter().enumerate() {
        let eval = |delta: f64| {
            let mut p = params.clone();
            let mut seen = 0;
            for t in p.tensors_mut() {
                if idx < seen + t.len() {
                    t[idx - seen] += delta;
                    break;
                }
                seen += t.len();
            }
            loss_at(&p)
        };
        let fd = (8.0 * (eval(step)? - eval(-step)?) - (eval(2.0 * step)? - eval(-2.0 * step)?)) / (12.0 * step);
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_outputs_give_zero_loss() {
        let spec = build_polar_spec(4, 2, 0.5, Some(&[2, 4])).unwrap();
        let params = GruDecoderParams::zeros(4, 3, 1, 3);
        let y = vec![ReceivedWord { samples: vec![1.0; 4], fading_gains: None }];
        let mut trace = crisp_forward(&y, &spec, &params, Feedback::Student).unwrap();
        trace.probs.fill(0.0);
        let (loss, grads) = crisp_loss_and_grads(&trace, &params, &[vec![0; 4]], &[2, 4]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.head.w2.iter().all(|&g| g == 0.0));
        assert_eq!(grads.head.b2[0], 0.0);
    }

    #[test]
    fn rejects_non_information_index() {
        let spec = build_polar_spec(4, 2, 0.5, Some(&[2, 4])).unwrap();
        let params = GruDecoderParams::zeros(4, 3, 1, 3);
        let y = vec![ReceivedWord { samples: vec![1.0; 4], fading_gains: None }];
        let trace = crisp_forward(&y, &spec, &params, Feedback::Student).unwrap();
        assert!(matches!(
            crisp_loss_and_grads(&trace, &params, &[vec![0; 4]], &[3]),
            Err(Error::IndexSet(_))
        ));
    }

    #[test]
    fn smaller_active_set_never_has_larger_loss() {
        let spec = build_polar_spec(8, 4, 0.5, None).unwrap();
        let params = GruDecoderParams::init(8, 6, 2, 6, 1);
        let mut rng = crate::rng::derive(1, &[]);
        let ys: Vec<ReceivedWord> = (0..16)
            .map(|_| ReceivedWord {
                samples: (0..8).map(|_| rng.random_range(-2.0..2.0)).collect(),
                fading_gains: None,
            })
            .collect();
        let ms: Vec<Vec<u8>> = (0..16)
            .map(|_| {
                let mut m = vec![0u8; 8];
                for &i in &spec.info_set {
                    m[i - 1] = rng.random_range(0..2);
                }
                m
            })
            .collect();
        let trace = crisp_forward(&ys, &spec, &params, Feedback::Teacher(&ms)).unwrap();
        let sets: [&[usize]; 4] = [&[4], &[4, 6], &[4, 6, 7], &[4, 6, 7, 8]];
        let losses: Vec<f64> = sets
            .iter()
            .map(|a| crisp_loss_and_grads(&trace, &params, &ms, a).unwrap().0)
            .collect();
        assert!(losses.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let err = gradient_check(1, 4, 8, 2).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }
}
