use super::sc::{check_llrs, conv_tail, ScState};
use super::{hard, BlockDecoder, DecodeResult, LseMode, MetricMode};
use crate::channels::{ChannelModel, ReceivedWord};
use crate::construction::{CodeFamily, CodeSpec};
use crate::encoding::{crc_check, extract, message_from_source};
use crate::{Error, Result};

/// Metric increment for deciding tree bit `bit` at a leaf with LLR `llr`.
#[inline]
pub fn path_penalty(llr: f64, bit: u8, mode: MetricMode) -> f64 {
    match mode {
        MetricMode::Exact => {
            // softplus(-(1 - 2u) L)
            let t = if bit == 0 { -llr } else { llr };
            t.max(0.0) + (-t.abs()).exp().ln_1p()
        }
        MetricMode::Approx => {
            if bit == hard(llr) {
                0.0
            } else {
                llr.abs()
            }
        }
    }
}

#[derive(Clone)]
struct Path {
    state: ScState,
    /// Source bits decided so far; the last `len(kernel) - 1` of them form
    /// the convolution register.
    m: Vec<u8>,
    metric: f64,
}

/// Outcome of list decoding with the metric history of the winner.
#[derive(Debug, Clone)]
pub(crate) struct ListOutcome {
    pub result: DecodeResult,
    #[cfg_attr(not(test), allow(dead_code))]
    pub metric_history: Vec<f64>,
}

pub(crate) fn list_decode(
    llrs: &[f64],
    spec: &CodeSpec,
    list_size: usize,
    metric: MetricMode,
    lse: LseMode,
    track_history: bool,
) -> Result<ListOutcome> {
    if list_size < 1 {
        return Err(Error::ListSize);
    }
    check_llrs(llrs, spec)?;
    let n = spec.n;
    let mask = spec.info_mask();
    let kernel = spec.kernel();
    let mut paths = vec![Path {
        state: ScState::new(llrs),
        m: vec![0; n],
        metric: 0.0,
    }];
    let mut histories: Vec<Vec<f64>> = vec![Vec::new()];
    let mut leaf_llrs = Vec::with_capacity(list_size);
    let mut candidates: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * list_size);

    for i in 0..n {
        leaf_llrs.clear();
        for p in paths.iter_mut() {
            leaf_llrs.push(p.state.leaf_llr(i, lse));
        }
        if !mask[i] {
            for ((p, h), &l) in paths.iter_mut().zip(histories.iter_mut()).zip(&leaf_llrs) {
                let v = conv_tail(kernel, &p.m, i);
                p.metric += path_penalty(l, v, metric);
                p.state.commit(i, v);
                if track_history {
                    h.push(p.metric);
                }
            }
            continue;
        }

        candidates.clear();
        for (idx, (p, &l)) in paths.iter().zip(&leaf_llrs).enumerate() {
            let tail = conv_tail(kernel, &p.m, i);
            for v in [0u8, 1] {
                candidates.push((p.metric + path_penalty(l, v, metric), idx, v ^ tail));
            }
        }
        // stable: ties keep path order and prefer tree bit 0, as SC does
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        candidates.truncate(list_size);

        let mut uses = vec![0usize; paths.len()];
        for &(_, idx, _) in &candidates {
            uses[idx] += 1;
        }
        let mut old: Vec<Option<Path>> = paths.drain(..).map(Some).collect();
        let old_hist = std::mem::take(&mut histories);
        for &(new_metric, idx, bit) in &candidates {
            uses[idx] -= 1;
            let mut p = if uses[idx] == 0 {
                old[idx].take().expect("path consumed once")
            } else {
                old[idx].clone().expect("path still present")
            };
            let mut h = if track_history { old_hist[idx].clone() } else { Vec::new() };
            let tail = conv_tail(kernel, &p.m, i);
            p.m[i] = bit;
            p.metric = new_metric;
            p.state.commit(i, bit ^ tail);
            if track_history {
                h.push(new_metric);
            }
            paths.push(p);
            histories.push(h);
        }
    }

    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| paths[a].metric.total_cmp(&paths[b].metric).then(a.cmp(&b)));
    let chosen = match (spec.family, spec.crc_poly.as_ref()) {
        (CodeFamily::CrcPolar, Some(poly)) => order
            .iter()
            .copied()
            .find(|&p| crc_check(&extract(&paths[p].m, spec), poly))
            .unwrap_or(order[0]),
        _ => order[0],
    };
    let best = &paths[chosen];
    Ok(ListOutcome {
        result: DecodeResult {
            u_hat: message_from_source(&best.m, spec),
            m_hat: best.m.clone(),
            bit_llrs: Vec::new(),
            path_metric: Some(best.metric),
        },
        metric_history: histories.swap_remove(chosen),
    })
}

/// Successive-cancellation list decoding. CRC-aided specs return the best
/// path that passes the CRC, or the best path overall if none does.
pub fn scl_decode(
    llrs: &[f64],
    spec: &CodeSpec,
    list_size: usize,
    metric: MetricMode,
    lse: LseMode,
) -> Result<DecodeResult> {
    Ok(list_decode(llrs, spec, list_size, metric, lse, false)?.result)
}

/// List decoding of a PAC code; each path carries its convolution register.
pub fn pac_sc_decode(llrs: &[f64], spec: &CodeSpec, list_size: usize) -> Result<DecodeResult> {
    if spec.family != CodeFamily::Pac {
        return Err(Error::Family(format!("expected a PAC spec, got {:?}", spec.family)));
    }
    scl_decode(llrs, spec, list_size, MetricMode::Exact, LseMode::Exact)
}

#[derive(Debug, Clone)]
pub struct SclDecoder {
    pub spec: CodeSpec,
    pub list_size: usize,
    pub metric: MetricMode,
    pub lse: LseMode,
}

impl SclDecoder {
    pub fn new(spec: CodeSpec, list_size: usize, metric: MetricMode, lse: LseMode) -> Result<Self> {
        if list_size < 1 {
            return Err(Error::ListSize);
        }
        Ok(Self {
            spec,
            list_size,
            metric,
            lse,
        })
    }
}

impl BlockDecoder for SclDecoder {
    fn name(&self) -> String {
        format!("scl{}-{:?}-{:?}", self.list_size, self.metric, self.lse).to_lowercase()
    }

    fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn decode(&self, y: &ReceivedWord, channel: &ChannelModel) -> Result<Vec<u8>> {
        let llrs = channel.llr(y)?;
        Ok(scl_decode(&llrs, &self.spec, self.list_size, self.metric, self.lse)?.u_hat)
    }
}
